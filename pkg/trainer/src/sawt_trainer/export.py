"""Serialize a torch nn.Sequential to the SAWT weight format.

SAWT is a little-endian flat file:

    bytes 0..3   magic "SAWT"
    bytes 4..5   uint16 format version (currently 1)
    bytes 6..7   uint16 layer count
    then per layer a uint8 tag followed by its payload:

    tag 0  dense    uint32 n_in, uint32 n_out,
                    float32 weights [n_out, n_in] row-major,
                    float32 biases [n_out]
    tag 1  conv2d   uint32 out_channels, in_channels, kernel_h, kernel_w,
                    stride, padding,
                    float32 kernels [out, in, kh, kw] row-major,
                    float32 biases [out]
    tag 2  relu     no payload
    tag 3  maxpool  no payload (fixed 2x2 window, stride 2)
    tag 4  flatten  no payload

Convolution weights are stored for cross-correlation with zero padding,
which matches torch.nn.Conv2d, so tensors are written exactly as torch
holds them.  The last layer must be dense; readers treat its output as
class logits.
"""

from __future__ import annotations

import hashlib
import json
import struct
from pathlib import Path

import numpy as np
from torch import nn

MAGIC = b"SAWT"
VERSION = 1

TAG_DENSE = 0
TAG_CONV2D = 1
TAG_RELU = 2
TAG_MAXPOOL2 = 3
TAG_FLATTEN = 4


def _f32_bytes(arr) -> bytes:
    return np.ascontiguousarray(arr.detach().numpy(), dtype="<f4").tobytes()


def _pair(value) -> tuple[int, int]:
    if isinstance(value, tuple):
        return int(value[0]), int(value[1])
    return int(value), int(value)


def _dense_bytes(layer: nn.Linear) -> bytes:
    if layer.bias is None:
        raise ValueError("dense layers must carry a bias vector")
    return (
        struct.pack("<BII", TAG_DENSE, layer.in_features, layer.out_features)
        + _f32_bytes(layer.weight)
        + _f32_bytes(layer.bias)
    )


def _conv_bytes(layer: nn.Conv2d) -> bytes:
    if layer.groups != 1:
        raise ValueError("grouped convolutions are not representable")
    if _pair(layer.dilation) != (1, 1):
        raise ValueError("dilated convolutions are not representable")
    if layer.bias is None:
        raise ValueError("conv layers must carry a bias vector")
    sh, sw = _pair(layer.stride)
    if sh != sw:
        raise ValueError("stride must be uniform")
    if isinstance(layer.padding, str):
        raise ValueError("string padding modes are not representable")
    ph, pw = _pair(layer.padding)
    if ph != pw:
        raise ValueError("padding must be uniform")
    kh, kw = _pair(layer.kernel_size)
    return (
        struct.pack(
            "<BIIIIII",
            TAG_CONV2D,
            layer.out_channels,
            layer.in_channels,
            kh,
            kw,
            sh,
            ph,
        )
        + _f32_bytes(layer.weight)
        + _f32_bytes(layer.bias)
    )


def sawt_bytes(model: nn.Sequential) -> bytes:
    """Encode a sequential model; raises ValueError on unsupported layers."""
    chunks: list[bytes] = []
    for module in model:
        if isinstance(module, nn.Linear):
            chunks.append(_dense_bytes(module))
        elif isinstance(module, nn.Conv2d):
            chunks.append(_conv_bytes(module))
        elif isinstance(module, nn.ReLU):
            chunks.append(struct.pack("<B", TAG_RELU))
        elif isinstance(module, nn.MaxPool2d):
            if _pair(module.kernel_size) != (2, 2):
                raise ValueError("only 2x2 max pooling is representable")
            stride = module.kernel_size if module.stride is None else module.stride
            if _pair(stride) != (2, 2):
                raise ValueError("max pooling stride must be 2")
            chunks.append(struct.pack("<B", TAG_MAXPOOL2))
        elif isinstance(module, nn.Flatten):
            chunks.append(struct.pack("<B", TAG_FLATTEN))
        else:
            raise ValueError(f"layer type {type(module).__name__} is not representable")
    if not chunks:
        raise ValueError("model has no layers")
    if not isinstance(list(model)[-1], nn.Linear):
        raise ValueError("the final layer must be dense")
    header = MAGIC + struct.pack("<HH", VERSION, len(chunks))
    return header + b"".join(chunks)


def save_sawt(model: nn.Sequential, path: Path) -> str:
    """Write the model to disk and return the SHA-256 of the file bytes."""
    blob = sawt_bytes(model)
    Path(path).write_bytes(blob)
    return hashlib.sha256(blob).hexdigest()


def write_manifest(
    path: Path,
    *,
    arch: str,
    seed: int,
    epochs: int,
    train_count: int,
    test_count: int,
    test_accuracy: float,
    corpus_sha256: str,
    sawt_sha256: str,
) -> None:
    """Record how a committed model artifact was produced."""
    manifest = {
        "arch": arch,
        "seed": seed,
        "epochs": epochs,
        "train_count": train_count,
        "test_count": test_count,
        "test_accuracy": test_accuracy,
        "corpus_sha256": corpus_sha256,
        "sawt_sha256": sawt_sha256,
    }
    Path(path).write_text(json.dumps(manifest, indent=2) + "\n")
