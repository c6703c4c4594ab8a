import json
import struct
from pathlib import Path

import numpy as np
import pytest
import torch
import torch.nn.functional as F
from torch import nn

from sawt_trainer.conformance import make_conformance_cases, naive_conv2d
from sawt_trainer.export import sawt_bytes, save_sawt, write_manifest
from sawt_trainer.models import build_model

FIXTURES = Path(__file__).resolve().parents[2] / "fixtures"


class _Cursor:
    """Minimal little-endian reader used to parse SAWT bytes by hand."""

    def __init__(self, data: bytes):
        self.data = data
        self.off = 0

    def unpack(self, fmt: str):
        size = struct.calcsize(fmt)
        values = struct.unpack_from(fmt, self.data, self.off)
        self.off += size
        return values

    def floats(self, count: int) -> np.ndarray:
        arr = np.frombuffer(self.data, dtype="<f4", count=count, offset=self.off)
        self.off += 4 * count
        return arr.copy()


def test_logreg_byte_layout():
    torch.manual_seed(0)
    model = build_model("logreg")
    blob = sawt_bytes(model)
    cur = _Cursor(blob)
    assert cur.unpack("<4s")[0] == b"SAWT"
    version, count = cur.unpack("<HH")
    assert version == 1
    assert count == 2
    assert cur.unpack("<B")[0] == 4  # flatten
    tag, n_in, n_out = cur.unpack("<BII")
    assert (tag, n_in, n_out) == (0, 784, 10)
    weights = cur.floats(784 * 10).reshape(10, 784)
    biases = cur.floats(10)
    assert np.array_equal(weights, model[1].weight.detach().numpy().astype("<f4"))
    assert np.array_equal(biases, model[1].bias.detach().numpy().astype("<f4"))
    assert cur.off == len(blob)


def test_cnn_byte_layout():
    torch.manual_seed(1)
    model = build_model("cnn")
    blob = sawt_bytes(model)
    cur = _Cursor(blob)
    assert cur.unpack("<4s")[0] == b"SAWT"
    version, count = cur.unpack("<HH")
    assert (version, count) == (1, 10)

    tag, out_ch, in_ch, kh, kw, stride, pad = cur.unpack("<BIIIIII")
    assert (tag, out_ch, in_ch, kh, kw, stride, pad) == (1, 8, 1, 3, 3, 1, 1)
    kernels = cur.floats(8 * 1 * 3 * 3).reshape(8, 1, 3, 3)
    cur.floats(8)
    assert np.array_equal(kernels, model[0].weight.detach().numpy().astype("<f4"))

    assert cur.unpack("<B")[0] == 2  # relu
    assert cur.unpack("<B")[0] == 3  # maxpool

    tag, out_ch, in_ch, kh, kw, stride, pad = cur.unpack("<BIIIIII")
    assert (tag, out_ch, in_ch, kh, kw, stride, pad) == (1, 16, 8, 3, 3, 1, 1)
    cur.floats(16 * 8 * 3 * 3)
    cur.floats(16)

    assert cur.unpack("<B")[0] == 2
    assert cur.unpack("<B")[0] == 3
    assert cur.unpack("<B")[0] == 4  # flatten

    tag, n_in, n_out = cur.unpack("<BII")
    assert (tag, n_in, n_out) == (0, 784, 32)
    cur.floats(784 * 32)
    cur.floats(32)

    assert cur.unpack("<B")[0] == 2

    tag, n_in, n_out = cur.unpack("<BII")
    assert (tag, n_in, n_out) == (0, 32, 10)
    cur.floats(32 * 10)
    biases = cur.floats(10)
    assert np.array_equal(biases, model[9].bias.detach().numpy().astype("<f4"))
    assert cur.off == len(blob)


@pytest.mark.parametrize(
    "model, needle",
    [
        (nn.Sequential(nn.Flatten(), nn.Linear(4, 4), nn.Sigmoid()), "not representable"),
        (nn.Sequential(nn.MaxPool2d(3), nn.Flatten(), nn.Linear(4, 4)), "2x2"),
        (nn.Sequential(nn.Flatten(), nn.Linear(4, 4), nn.ReLU()), "final layer"),
        (nn.Sequential(nn.Conv2d(1, 2, 3, dilation=2), nn.Flatten(), nn.Linear(4, 4)), "dilated"),
    ],
)
def test_unsupported_models_are_rejected(model, needle):
    with pytest.raises(ValueError, match=needle):
        sawt_bytes(model)


def test_save_sawt_reports_file_hash(tmp_path):
    torch.manual_seed(2)
    model = build_model("logreg")
    path = tmp_path / "m.sawt"
    digest = save_sawt(model, path)
    import hashlib

    assert digest == hashlib.sha256(path.read_bytes()).hexdigest()


def test_manifest_contents(tmp_path):
    path = tmp_path / "m.manifest.json"
    write_manifest(
        path,
        arch="logreg",
        seed=3,
        epochs=8,
        train_count=100,
        test_count=20,
        test_accuracy=0.95,
        corpus_sha256="aa",
        sawt_sha256="bb",
    )
    manifest = json.loads(path.read_text())
    assert manifest["arch"] == "logreg"
    assert manifest["test_accuracy"] == 0.95
    assert manifest["sawt_sha256"] == "bb"


def test_naive_conv_matches_torch():
    rng = np.random.default_rng(77)
    for stride, pad in [(1, 0), (1, 1), (2, 1), (2, 0)]:
        x = rng.normal(size=(2, 6, 7))
        k = rng.normal(size=(3, 2, 3, 3))
        b = rng.normal(size=3)
        ours = naive_conv2d(x, k, b, stride, pad)
        theirs = F.conv2d(
            torch.from_numpy(x).unsqueeze(0),
            torch.from_numpy(k),
            torch.from_numpy(b),
            stride=stride,
            padding=pad,
        ).squeeze(0).numpy()
        assert np.max(np.abs(ours - theirs)) < 1e-10


def test_conformance_cases_agree_with_torch():
    for case in make_conformance_cases():
        x = np.array(case["input"])
        k = np.array(case["kernels"])
        b = np.array(case["biases"])
        expected = np.array(case["expected"])
        out = F.conv2d(
            torch.from_numpy(x).unsqueeze(0),
            torch.from_numpy(k),
            torch.from_numpy(b),
            stride=case["stride"],
            padding=case["padding"],
        ).squeeze(0).numpy()
        assert np.max(np.abs(out - expected)) < 1e-5


@pytest.mark.skipif(
    not (FIXTURES / "conv_conformance.json").is_file(),
    reason="committed conformance file not generated yet",
)
def test_committed_conformance_file_matches_generator():
    committed = json.loads((FIXTURES / "conv_conformance.json").read_text())
    fresh = make_conformance_cases()
    assert len(committed) == len(fresh)
    for got, want in zip(committed, fresh):
        assert got["stride"] == want["stride"]
        assert got["padding"] == want["padding"]
        assert np.array_equal(np.array(got["expected"]), np.array(want["expected"]))
