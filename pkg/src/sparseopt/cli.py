"""Command line front end.

Subcommands:
    attack         run one attack and print its record as JSON
    bench          run a spec-file sweep and persist records + summaries
    report         draw SVG charts from a summary.csv
    inspect-model  describe a serialized network, optionally run predictions

Exit codes: 0 on success, 2 when a requested attack ran but did not produce
a verified adversarial example (or the clean point was already
misclassified), 1 for usage, file or format errors.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path

from .evaluation import (ExperimentSpec, SpecError, build_oracle_and_samples,
                         derive_seed, parse_spec_file, record_to_dict,
                         run_experiment)
from .inference import FormatError, load_dataset, load_weighted_net, predict
from .pipeline import PROFILES, AttackConfig, ConfigError, attack, default_config
from .report import write_report
from .signopt import SignOptConfig


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sparseopt",
        description="query-limited sparse adversarial attacks against hard-label models",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    pa = sub.add_parser("attack", help="attack one input and print the record as JSON")
    pa.add_argument("--oracle", choices=("sphere", "hyperplane", "sawt"), default="sphere")
    pa.add_argument("--dim", type=int, default=8, help="dimension of the synthetic oracles")
    pa.add_argument("--radius", type=float, default=1.0, help="sphere oracle radius")
    pa.add_argument("--support", type=int, default=None,
                    help="number of active weights in the hyperplane oracle")
    pa.add_argument("--model", help="serialized network (sawt oracle)")
    pa.add_argument("--data", help="dataset file for the sawt oracle")
    pa.add_argument("--labels", help="label file when the dataset does not carry labels")
    pa.add_argument("--index", type=int, default=0, help="which sample to attack")
    pa.add_argument("--profile", choices=tuple(PROFILES) + ("custom",), default=None,
                    help="budget defaults per dataset scale")
    pa.add_argument("-Q", "--budget", type=int, default=None, dest="total_budget",
                    help="total query budget")
    pa.add_argument("-N", "--baseline-budget", type=int, default=None, dest="baseline_budget",
                    help="queries granted to the dense baseline attack")
    pa.add_argument("-p", "--zeros-per-trial", type=int, default=None, dest="p",
                    help="dimensions zeroed per unimportance trial")
    pa.add_argument("--norm", choices=("l2", "linf"), default=None)
    pa.add_argument("--target", type=int, default=None,
                    help="attack succeeds only when the model outputs this class")
    pa.add_argument("--target-exemplar-index", type=int, default=None,
                    help="dataset index whose image seeds the targeted direction search")
    pa.add_argument("--clip", action=argparse.BooleanOptionalAction, default=None,
                    help="search over queries projected into [0, 1] (default: sawt only)")
    pa.add_argument("--seed", type=int, default=0,
                    help="master seed; the per-sample seed is derived from it and --index")
    pa.add_argument("--dump-beta", metavar="CSV",
                    help="write the per-dimension unimportance scores to this file")

    pb = sub.add_parser("bench", help="run the sweep described by a spec file")
    pb.add_argument("--spec", required=True, help="key=value spec file")
    pb.add_argument("--jobs", type=int, default=1, help="worker processes per cell")
    pb.add_argument("--out", default=None, help="override the spec's output directory")

    pr = sub.add_parser("report", help="render SVG charts from a results directory")
    pr.add_argument("results", help="directory containing summary.csv, or the csv itself")
    pr.add_argument("--out", default=None, help="write charts here instead")

    pi = sub.add_parser("inspect-model", help="describe a serialized network")
    pi.add_argument("model", help="network file")
    pi.add_argument("--predict", metavar="DATA", default=None,
                    help="dataset to classify; prints index,prediction[,label] lines")
    pi.add_argument("--labels", default=None, help="label file for --predict")
    pi.add_argument("--limit", type=int, default=None,
                    help="classify only the first LIMIT samples")
    return parser


def _cmd_attack(args) -> int:
    spec = ExperimentSpec(
        oracle=args.oracle, indices=[args.index], dim=args.dim, radius=args.radius,
        support=args.support, model=args.model, data=args.data, labels=args.labels,
        seed=args.seed,
    )
    if args.target_exemplar_index is not None and args.oracle != "sawt":
        raise ConfigError("--target-exemplar-index needs --oracle sawt")
    overrides = {k: getattr(args, k) for k in ("total_budget", "baseline_budget", "p", "norm")
                 if getattr(args, k) is not None}
    if args.target is not None:
        overrides["target"] = args.target
    overrides["clip"] = args.clip if args.clip is not None else (args.oracle == "sawt")
    overrides["seed"] = derive_seed(args.seed, args.index)
    if args.profile is not None:
        cfg = default_config(args.profile, **overrides)
    else:
        cfg = AttackConfig(**overrides)
    oracle, samples = build_oracle_and_samples(spec)
    if args.target_exemplar_index is not None:
        images, _ = load_dataset(args.data, args.labels)
        exemplar = images[args.target_exemplar_index]
        cfg = dataclasses.replace(cfg, target_exemplar=exemplar)
    (image_id, x0, y0), = samples
    record = attack(oracle, x0, y0, cfg, image_id=image_id, beta_out=args.dump_beta)
    print(json.dumps(record_to_dict(record)))
    if record.kind == "attack" and record.success:
        return 0
    return 2


def _cmd_bench(args) -> int:
    spec = parse_spec_file(args.spec)
    if args.out is not None:
        spec.out = args.out
    rows = run_experiment(spec, jobs=args.jobs, log=lambda m: print(m, file=sys.stderr))
    print(f"wrote {len(rows)} cell summaries under {spec.out}")
    return 0


def _cmd_report(args) -> int:
    target = Path(args.results)
    summary = target if target.suffix == ".csv" else target / "summary.csv"
    if not summary.exists():
        print(f"no summary at {summary}", file=sys.stderr)
        return 1
    written = write_report(summary, args.out)
    for path in written:
        print(path)
    return 0


def _describe(layer) -> str:
    name = type(layer).__name__
    if name == "Dense":
        out, inp = layer.weight.shape
        return f"dense in={inp} out={out}"
    if name == "Conv2d":
        o, i, kh, kw = layer.kernel.shape
        return f"conv2d in={i} out={o} kernel={kh}x{kw} stride={layer.stride} pad={layer.pad}"
    if name == "MaxPool2":
        return "maxpool 2x2 stride 2"
    return name.lower()


def _cmd_inspect(args) -> int:
    net = load_weighted_net(args.model)
    if args.predict is None:
        print(f"layers: {len(net.layers)}")
        for i, layer in enumerate(net.layers):
            print(f"{i}: {_describe(layer)}")
        print(f"classes: {net.num_classes}")
        return 0
    images, labels = load_dataset(args.predict, args.labels)
    count = images.shape[0] if args.limit is None else min(args.limit, images.shape[0])
    for i in range(count):
        pred = predict(net, images[i])
        if labels is not None:
            print(f"{i},{pred},{int(labels[i])}")
        else:
            print(f"{i},{pred}")
    return 0


_COMMANDS = {
    "attack": _cmd_attack,
    "bench": _cmd_bench,
    "report": _cmd_report,
    "inspect-model": _cmd_inspect,
}


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        # argparse exits with 2 on usage errors; keep 2 for failed attacks
        return 0 if e.code in (0, None) else 1
    try:
        return _COMMANDS[args.command](args)
    except (ConfigError, SpecError, FormatError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
