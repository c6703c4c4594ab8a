"""Command line entry points for corpus synthesis, training, and export."""

from __future__ import annotations

import argparse
import csv
import sys
from pathlib import Path

import numpy as np
import torch

from .conformance import write_conformance_file
from .data import (
    corpus_fingerprint,
    load_idx_images,
    load_idx_labels,
    make_corpus,
    write_idx_images,
    write_idx_labels,
    write_label_csv,
    write_raw_tensor,
)
from .export import save_sawt, write_manifest
from .models import ACCURACY_FLOORS, ARCHITECTURES, accuracy, build_model, predict_batch, train_model

DEFAULT_EPOCHS = {"logreg": 40, "cnn": 30}

TRAIN_IMAGES = "train-images-idx3-ubyte"
TRAIN_LABELS = "train-labels-idx1-ubyte"
TEST_IMAGES = "t10k-images-idx3-ubyte"
TEST_LABELS = "t10k-labels-idx1-ubyte"


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sawt-trainer",
        description="synthesize a digit corpus, train classifiers, export SAWT files",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    synth = sub.add_parser("synth-data", help="render a font-based digit corpus to IDX files")
    synth.add_argument("--out", required=True, help="output directory")
    synth.add_argument("--train-count", type=int, default=4000)
    synth.add_argument("--test-count", type=int, default=1000)
    synth.add_argument("--seed", type=int, default=0)

    train = sub.add_parser("train", help="train a classifier and export it as SAWT")
    train.add_argument("--data", required=True, help="directory holding the IDX corpus")
    train.add_argument("--arch", choices=ARCHITECTURES, required=True)
    train.add_argument("--out", required=True, help="output directory for model artifacts")
    train.add_argument("--epochs", type=int, default=None)
    train.add_argument("--batch-size", type=int, default=128)
    train.add_argument("--lr", type=float, default=1e-3)
    train.add_argument("--seed", type=int, default=0)

    export = sub.add_parser(
        "export-fixture",
        help="dump evaluation images, labels, predictions, and conv reference cases",
    )
    export.add_argument("--data", required=True, help="directory holding the IDX corpus")
    export.add_argument("--model", required=True, help="trained .pt state dict")
    export.add_argument("--arch", choices=ARCHITECTURES, required=True)
    export.add_argument("--out", required=True, help="output directory")
    export.add_argument("--count", type=int, default=100)

    return parser


def _load_corpus(data_dir: str) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    root = Path(data_dir)
    return (
        load_idx_images(root / TRAIN_IMAGES),
        load_idx_labels(root / TRAIN_LABELS),
        load_idx_images(root / TEST_IMAGES),
        load_idx_labels(root / TEST_LABELS),
    )


def _cmd_synth(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    train_x, train_y = make_corpus(args.train_count, args.seed)
    test_x, test_y = make_corpus(args.test_count, args.seed + 1)
    write_idx_images(out / TRAIN_IMAGES, train_x)
    write_idx_labels(out / TRAIN_LABELS, train_y)
    write_idx_images(out / TEST_IMAGES, test_x)
    write_idx_labels(out / TEST_LABELS, test_y)
    print(f"wrote {args.train_count} train and {args.test_count} test images under {out}")
    print(f"train sha256 {corpus_fingerprint(train_x, train_y)}")
    print(f"test sha256 {corpus_fingerprint(test_x, test_y)}")
    return 0


def _cmd_train(args) -> int:
    train_x, train_y, test_x, test_y = _load_corpus(args.data)
    epochs = DEFAULT_EPOCHS[args.arch] if args.epochs is None else args.epochs
    model = train_model(
        args.arch,
        train_x,
        train_y,
        epochs=epochs,
        batch_size=args.batch_size,
        lr=args.lr,
        seed=args.seed,
    )
    acc = accuracy(model, test_x, test_y)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    sawt_sha = save_sawt(model, out / f"{args.arch}.sawt")
    torch.save(model.state_dict(), out / f"{args.arch}.pt")
    write_manifest(
        out / f"{args.arch}.manifest.json",
        arch=args.arch,
        seed=args.seed,
        epochs=epochs,
        train_count=int(train_x.shape[0]),
        test_count=int(test_x.shape[0]),
        test_accuracy=acc,
        corpus_sha256=corpus_fingerprint(train_x, train_y),
        sawt_sha256=sawt_sha,
    )
    print(f"{args.arch}: test accuracy {acc:.4f} on {test_x.shape[0]} images")
    floor = ACCURACY_FLOORS[args.arch]
    if acc < floor:
        print(
            f"error: accuracy {acc:.4f} is below the {floor:.2f} floor for {args.arch}",
            file=sys.stderr,
        )
        return 3
    return 0


def _cmd_export(args) -> int:
    _, _, test_x, test_y = _load_corpus(args.data)
    if args.count < 1 or args.count > test_x.shape[0]:
        raise ValueError(
            f"count must lie in [1, {test_x.shape[0]}], got {args.count}"
        )
    model = build_model(args.arch)
    model.load_state_dict(torch.load(args.model, weights_only=True))
    model.eval()

    images = (test_x[: args.count].astype(np.float32) / 255.0).astype(np.float32)
    labels = test_y[: args.count]
    preds = predict_batch(model, images)

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_raw_tensor(out / "digits_eval.bin", images)
    write_label_csv(out / "digits_eval_labels.csv", labels)
    pred_path = out / f"predictions_{args.arch}.csv"
    with open(pred_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        for i in range(args.count):
            writer.writerow([i, int(preds[i]), int(labels[i])])
    write_conformance_file(out / "conv_conformance.json")
    agree = float(np.mean(preds == labels.astype(np.int64)))
    print(f"wrote {args.count} eval images, labels, and predictions under {out}")
    print(f"model label accuracy on the dump: {agree:.4f}")
    return 0


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        code = exc.code if exc.code is not None else 0
        return 0 if code == 0 else 1
    handlers = {
        "synth-data": _cmd_synth,
        "train": _cmd_train,
        "export-fixture": _cmd_export,
    }
    try:
        return handlers[args.command](args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
