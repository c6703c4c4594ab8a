"""Frozen-weight nets, their binary weight format, and dataset readers.

Weight file layout (all integers little-endian):

    magic   4 bytes  b"SAWT"
    version u16      1
    layers  u16      layer count
    then per layer:
      tag   u8       0 dense, 1 conv2d, 2 relu, 3 maxpool 2x2, 4 flatten
      shape u32[]    dense: in, out
                     conv2d: out_ch, in_ch, kh, kw, stride, pad
                     relu / maxpool / flatten: none
      params f32[]   dense: out*in weights row-major, then out biases
                     conv2d: kernels (out, in, kh, kw) row-major, then biases

Convolution is cross-correlation (no kernel flip) with zero padding.
Max pooling is 2x2 with stride 2, odd trailing rows or columns dropped.
Flatten is row-major over (channels, height, width). Class prediction is
the argmax of the final dense output, ties broken toward the lowest index.

Datasets are either IDX files (big-endian headers, bytes scaled by 1/255)
or raw tensor fixtures: three u32 little-endian (count, height, width)
followed by count*height*width float32 little-endian values in [0, 1].
"""

from __future__ import annotations

import gzip
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .oracles import Oracle

MAGIC = b"SAWT"
VERSION = 1

TAG_DENSE = 0
TAG_CONV2D = 1
TAG_RELU = 2
TAG_MAXPOOL2 = 3
TAG_FLATTEN = 4

IDX_IMAGES_MAGIC = 0x00000803
IDX_LABELS_MAGIC = 0x00000801


class FormatError(ValueError):
    """Malformed binary input; offset points at the offending byte."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (byte offset {offset})")
        self.offset = offset


@dataclass
class Dense:
    weight: np.ndarray  # (out, in) float32
    bias: np.ndarray  # (out,) float32


@dataclass
class Conv2d:
    kernel: np.ndarray  # (out, in, kh, kw) float32
    bias: np.ndarray  # (out,) float32
    stride: int
    pad: int


@dataclass
class Relu:
    pass


@dataclass
class MaxPool2:
    pass


@dataclass
class Flatten:
    pass


@dataclass
class WeightedNet:
    layers: list
    num_classes: int


class _Cursor:
    def __init__(self, data: bytes):
        self.data = data
        self.off = 0

    def take(self, n: int, what: str) -> bytes:
        if self.off + n > len(self.data):
            raise FormatError(f"truncated {what}", self.off)
        chunk = self.data[self.off : self.off + n]
        self.off += n
        return chunk

    def u8(self, what: str) -> int:
        return self.take(1, what)[0]

    def u16(self, what: str) -> int:
        return struct.unpack("<H", self.take(2, what))[0]

    def u32(self, what: str) -> int:
        return struct.unpack("<I", self.take(4, what))[0]

    def f32_array(self, count: int, what: str) -> np.ndarray:
        raw = self.take(4 * count, what)
        return np.frombuffer(raw, dtype="<f4").astype(np.float32)


def load_weighted_net(source) -> WeightedNet:
    """Parse a SAWT weight file (path or bytes) into a WeightedNet.

    Any structural problem raises FormatError carrying the byte offset:
    bad magic, unsupported version, unknown layer tag, truncation, or
    trailing bytes after the declared layers.
    """
    if isinstance(source, (str, Path)):
        data = Path(source).read_bytes()
    else:
        data = bytes(source)
    cur = _Cursor(data)
    if cur.take(4, "magic") != MAGIC:
        raise FormatError("bad magic, expected SAWT", 0)
    version = cur.u16("version")
    if version != VERSION:
        raise FormatError(f"unsupported version {version}", 4)
    n_layers = cur.u16("layer count")
    layers: list = []
    for i in range(n_layers):
        tag_off = cur.off
        tag = cur.u8(f"layer {i} tag")
        if tag == TAG_DENSE:
            n_in = cur.u32(f"layer {i} input width")
            n_out = cur.u32(f"layer {i} output width")
            if n_in == 0 or n_out == 0:
                raise FormatError(f"layer {i} has a zero dimension", tag_off + 1)
            w = cur.f32_array(n_out * n_in, f"layer {i} weights").reshape(n_out, n_in)
            b = cur.f32_array(n_out, f"layer {i} biases")
            layers.append(Dense(weight=w, bias=b))
        elif tag == TAG_CONV2D:
            out_ch = cur.u32(f"layer {i} out channels")
            in_ch = cur.u32(f"layer {i} in channels")
            kh = cur.u32(f"layer {i} kernel height")
            kw = cur.u32(f"layer {i} kernel width")
            stride = cur.u32(f"layer {i} stride")
            pad = cur.u32(f"layer {i} padding")
            if 0 in (out_ch, in_ch, kh, kw):
                raise FormatError(f"layer {i} has a zero dimension", tag_off + 1)
            if stride == 0:
                raise FormatError(f"layer {i} has zero stride", tag_off + 17)
            k = cur.f32_array(out_ch * in_ch * kh * kw, f"layer {i} kernels")
            k = k.reshape(out_ch, in_ch, kh, kw)
            b = cur.f32_array(out_ch, f"layer {i} biases")
            layers.append(Conv2d(kernel=k, bias=b, stride=stride, pad=pad))
        elif tag == TAG_RELU:
            layers.append(Relu())
        elif tag == TAG_MAXPOOL2:
            layers.append(MaxPool2())
        elif tag == TAG_FLATTEN:
            layers.append(Flatten())
        else:
            raise FormatError(f"unknown layer tag {tag}", tag_off)
    if cur.off != len(data):
        raise FormatError(f"{len(data) - cur.off} trailing bytes", cur.off)
    if not layers or not isinstance(layers[-1], Dense):
        raise FormatError("net must end with a dense layer", cur.off)
    return WeightedNet(layers=layers, num_classes=int(layers[-1].weight.shape[0]))


def _conv2d(x: np.ndarray, layer: Conv2d) -> np.ndarray:
    c_in, h, w = x.shape
    if layer.kernel.shape[1] != c_in:
        raise ValueError(
            f"conv expects {layer.kernel.shape[1]} input channels, got {c_in}"
        )
    if layer.pad:
        x = np.pad(x, ((0, 0), (layer.pad, layer.pad), (layer.pad, layer.pad)))
    kh, kw = layer.kernel.shape[2:]
    if x.shape[1] < kh or x.shape[2] < kw:
        raise ValueError("conv input smaller than kernel")
    win = np.lib.stride_tricks.sliding_window_view(x, (kh, kw), axis=(1, 2))
    win = win[:, :: layer.stride, :: layer.stride]
    out = np.tensordot(layer.kernel, win, axes=([1, 2, 3], [0, 3, 4]))
    return (out + layer.bias[:, None, None]).astype(np.float32)


def _maxpool2(x: np.ndarray) -> np.ndarray:
    c, h, w = x.shape
    h2, w2 = h // 2, w // 2
    if h2 == 0 or w2 == 0:
        raise ValueError("maxpool input smaller than 2x2")
    trimmed = x[:, : h2 * 2, : w2 * 2]
    return trimmed.reshape(c, h2, 2, w2, 2).max(axis=(2, 4))


def forward(net: WeightedNet, x: np.ndarray) -> np.ndarray:
    """Float32 logits for one input of shape (channels, height, width)."""
    out = np.asarray(x, dtype=np.float32)
    for layer in net.layers:
        if isinstance(layer, Conv2d):
            out = _conv2d(out, layer)
        elif isinstance(layer, Relu):
            out = np.maximum(out, np.float32(0.0))
        elif isinstance(layer, MaxPool2):
            out = _maxpool2(out)
        elif isinstance(layer, Flatten):
            out = out.ravel()
        elif isinstance(layer, Dense):
            if out.ndim != 1:
                raise ValueError("dense layer reached with a non-flat input")
            if out.shape[0] != layer.weight.shape[1]:
                raise ValueError(
                    f"dense expects {layer.weight.shape[1]} inputs, got {out.shape[0]}"
                )
            out = layer.weight @ out + layer.bias
        else:
            raise ValueError(f"unknown layer {layer!r}")
    return out


def predict(net: WeightedNet, x: np.ndarray) -> int:
    """Top-1 class; np.argmax already breaks ties toward the lowest index."""
    return int(np.argmax(forward(net, x)))


def validate(net: WeightedNet, input_shape: tuple[int, ...]) -> tuple[int, ...]:
    """Dry-run the layer shapes; raises ValueError if they do not compose."""
    shape = tuple(int(s) for s in input_shape)
    for i, layer in enumerate(net.layers):
        if isinstance(layer, Conv2d):
            if len(shape) != 3:
                raise ValueError(f"layer {i}: conv needs a (c, h, w) input, got {shape}")
            c, h, w = shape
            if layer.kernel.shape[1] != c:
                raise ValueError(
                    f"layer {i}: conv expects {layer.kernel.shape[1]} channels, got {c}"
                )
            kh, kw = layer.kernel.shape[2:]
            h2 = (h + 2 * layer.pad - kh) // layer.stride + 1
            w2 = (w + 2 * layer.pad - kw) // layer.stride + 1
            if h2 <= 0 or w2 <= 0:
                raise ValueError(f"layer {i}: conv output would be empty")
            shape = (int(layer.kernel.shape[0]), h2, w2)
        elif isinstance(layer, MaxPool2):
            if len(shape) != 3 or shape[1] < 2 or shape[2] < 2:
                raise ValueError(f"layer {i}: maxpool needs a (c, h>=2, w>=2) input")
            shape = (shape[0], shape[1] // 2, shape[2] // 2)
        elif isinstance(layer, Flatten):
            shape = (int(np.prod(shape)),)
        elif isinstance(layer, Dense):
            if len(shape) != 1:
                raise ValueError(f"layer {i}: dense needs a flat input, got {shape}")
            if shape[0] != layer.weight.shape[1]:
                raise ValueError(
                    f"layer {i}: dense expects {layer.weight.shape[1]} inputs, got {shape[0]}"
                )
            shape = (int(layer.weight.shape[0]),)
        # relu keeps the shape
    if shape != (net.num_classes,):
        raise ValueError(f"final output {shape} does not match {net.num_classes} classes")
    return shape


class WeightedNetOracle(Oracle):
    """Hard-label view of a WeightedNet."""

    def __init__(self, net: WeightedNet, shape: tuple[int, ...]):
        validate(net, shape)
        self.net = net
        self.shape = tuple(shape)
        self.num_classes = net.num_classes

    def decide(self, x: np.ndarray) -> int:
        return predict(self.net, x)


def _read_binary(path) -> bytes:
    with open(path, "rb") as f:
        head = f.read(2)
    if head == b"\x1f\x8b":
        with gzip.open(path, "rb") as f:
            return f.read()
    return Path(path).read_bytes()


def read_idx_images(path) -> np.ndarray:
    """IDX image file to float64 (count, 1, rows, cols) scaled into [0, 1]."""
    data = _read_binary(path)
    if len(data) < 16:
        raise FormatError("truncated IDX image header", len(data))
    magic, n, rows, cols = struct.unpack_from(">IIII", data, 0)
    if magic != IDX_IMAGES_MAGIC:
        raise FormatError(f"bad IDX image magic 0x{magic:08x}", 0)
    need = 16 + n * rows * cols
    if len(data) != need:
        raise FormatError(f"IDX image payload expected {need} bytes, file has {len(data)}", min(len(data), need))
    px = np.frombuffer(data, dtype=np.uint8, offset=16).reshape(n, 1, rows, cols)
    return px.astype(np.float64) / 255.0


def read_idx_labels(path) -> np.ndarray:
    """IDX label file to an int64 vector."""
    data = _read_binary(path)
    if len(data) < 8:
        raise FormatError("truncated IDX label header", len(data))
    magic, n = struct.unpack_from(">II", data, 0)
    if magic != IDX_LABELS_MAGIC:
        raise FormatError(f"bad IDX label magic 0x{magic:08x}", 0)
    if len(data) != 8 + n:
        raise FormatError(f"IDX label payload expected {8 + n} bytes, file has {len(data)}", min(len(data), 8 + n))
    return np.frombuffer(data, dtype=np.uint8, offset=8).astype(np.int64)


def read_raw_tensor(path) -> np.ndarray:
    """Raw tensor fixture to float64 (count, 1, height, width)."""
    data = Path(path).read_bytes()
    if len(data) < 12:
        raise FormatError("truncated raw tensor header", len(data))
    n, h, w = struct.unpack_from("<III", data, 0)
    need = 12 + 4 * n * h * w
    if len(data) != need:
        raise FormatError(f"raw tensor payload expected {need} bytes, file has {len(data)}", min(len(data), need))
    vals = np.frombuffer(data, dtype="<f4", offset=12)
    return vals.astype(np.float64).reshape(n, 1, h, w)


def read_label_csv(path) -> np.ndarray:
    """One integer label per line; a trailing newline is fine."""
    labels = []
    for i, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.strip()
        if not line:
            continue
        try:
            labels.append(int(line.split(",")[-1]))
        except ValueError as e:
            raise ValueError(f"{path}:{i}: not an integer label: {line!r}") from e
    return np.asarray(labels, dtype=np.int64)


_IMAGE_PATTERNS = ("t10k-images*", "test-images*", "train-images*", "*images-idx3*")
_LABEL_PATTERNS = ("t10k-labels*", "test-labels*", "train-labels*", "*labels-idx1*")


def _find_one(directory: Path, patterns) -> Path:
    for pat in patterns:
        hits = sorted(directory.glob(pat))
        if hits:
            return hits[0]
    raise FileNotFoundError(f"no file matching {patterns} in {directory}")


def load_dataset(data, labels=None) -> tuple[np.ndarray, np.ndarray | None]:
    """Images plus labels from an IDX directory or a raw tensor file.

    Directories are searched for an IDX pair, preferring the test split.
    Raw tensor files take their labels from a CSV given separately; with no
    labels path the second element is None (enough for prediction dumps).
    """
    p = Path(data)
    if p.is_dir():
        images = read_idx_images(_find_one(p, _IMAGE_PATTERNS))
        lab = read_idx_labels(_find_one(p, _LABEL_PATTERNS))
        return images, lab
    raw = p.read_bytes()[:4]
    if raw[:4] == struct.pack(">I", IDX_IMAGES_MAGIC) or raw[:2] == b"\x1f\x8b":
        images = read_idx_images(p)
    else:
        images = read_raw_tensor(p)
    if labels is None:
        return images, None
    lp = Path(labels)
    if lp.suffix == ".csv":
        return images, read_label_csv(lp)
    return images, read_idx_labels(lp)
