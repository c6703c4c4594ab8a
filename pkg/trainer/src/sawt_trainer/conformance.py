"""Reference convolution cases shared across implementations.

The expected outputs are computed here with plain nested loops, written
independently of any vectorized or framework convolution.  A committed
JSON file of these cases lets every SAWT consumer check that its conv2d
(cross-correlation, zero padding) produces the same numbers.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np


def naive_conv2d(
    x: np.ndarray,
    kernels: np.ndarray,
    biases: np.ndarray,
    stride: int,
    padding: int,
) -> np.ndarray:
    """Cross-correlate (C, H, W) input with (O, C, KH, KW) kernels."""
    c_in, h, w = x.shape
    c_out, c_k, kh, kw = kernels.shape
    if c_k != c_in:
        raise ValueError("kernel channel count does not match input")
    padded = np.zeros((c_in, h + 2 * padding, w + 2 * padding), dtype=np.float64)
    padded[:, padding : padding + h, padding : padding + w] = x
    out_h = (h + 2 * padding - kh) // stride + 1
    out_w = (w + 2 * padding - kw) // stride + 1
    out = np.zeros((c_out, out_h, out_w), dtype=np.float64)
    for o in range(c_out):
        for i in range(out_h):
            for j in range(out_w):
                acc = float(biases[o])
                for c in range(c_in):
                    for a in range(kh):
                        for b in range(kw):
                            acc += (
                                padded[c, i * stride + a, j * stride + b]
                                * kernels[o, c, a, b]
                            )
                out[o, i, j] = acc
    return out


def make_conformance_cases(seed: int = 2024) -> list[dict]:
    """Build a small battery of conv cases with loop-computed outputs."""
    rng = np.random.default_rng(seed)
    shapes = [
        # (in_ch, h, w, out_ch, kh, kw, stride, padding)
        (2, 6, 6, 3, 3, 3, 1, 1),
        (1, 5, 7, 2, 3, 3, 2, 1),
        (3, 4, 4, 2, 2, 2, 2, 0),
    ]
    cases = []
    for c_in, h, w, c_out, kh, kw, stride, padding in shapes:
        x = rng.normal(size=(c_in, h, w)).astype(np.float32)
        kernels = rng.normal(size=(c_out, c_in, kh, kw)).astype(np.float32)
        biases = rng.normal(size=c_out).astype(np.float32)
        expected = naive_conv2d(
            x.astype(np.float64),
            kernels.astype(np.float64),
            biases.astype(np.float64),
            stride,
            padding,
        )
        cases.append(
            {
                "input": x.tolist(),
                "kernels": kernels.tolist(),
                "biases": biases.tolist(),
                "stride": stride,
                "padding": padding,
                "expected": expected.tolist(),
            }
        )
    return cases


def write_conformance_file(path: Path, seed: int = 2024) -> None:
    Path(path).write_text(json.dumps(make_conformance_cases(seed), indent=2) + "\n")


def load_conformance_file(path: Path) -> list[dict]:
    return json.loads(Path(path).read_text())
