"""Synthetic digit corpus rendered from system fonts.

No external dataset download is assumed.  Instead, 28x28 grayscale digit
images are rasterized from the DejaVu font family that ships with
matplotlib.  Each sample varies the font face, glyph size, placement, and
rotation.  The ranges are calibrated so a linear classifier clears 90%
test accuracy while a small CNN is still clearly better, mirroring the
difficulty profile of the usual handwritten digit benchmarks.

All randomness flows through one numpy Generator, so a (count, seed) pair
always produces the same corpus byte for byte.
"""

from __future__ import annotations

import gzip
import hashlib
import struct
from pathlib import Path

import matplotlib
import numpy as np
from PIL import Image, ImageDraw, ImageFont

IMAGE_SIDE = 28
_CANVAS_SIDE = 56  # render at 2x and downscale for smooth strokes

FONT_FILES = (
    "DejaVuSans.ttf",
    "DejaVuSans-Bold.ttf",
    "DejaVuSerif.ttf",
    "DejaVuSerif-Bold.ttf",
    "DejaVuSansMono.ttf",
    "DejaVuSansMono-Bold.ttf",
)


def font_path(name: str) -> Path:
    """Resolve a bundled DejaVu font file to an absolute path."""
    path = Path(matplotlib.get_data_path()) / "fonts" / "ttf" / name
    if not path.is_file():
        raise FileNotFoundError(f"font file not found: {path}")
    return path


_FONT_CACHE: dict[tuple[str, int], ImageFont.FreeTypeFont] = {}


def _font(name: str, size_px: int) -> ImageFont.FreeTypeFont:
    key = (name, size_px)
    if key not in _FONT_CACHE:
        _FONT_CACHE[key] = ImageFont.truetype(str(font_path(name)), size_px)
    return _FONT_CACHE[key]


def render_digit(
    digit: int,
    font_file: str,
    size_px: int,
    dx: int,
    dy: int,
    angle_deg: float,
) -> np.ndarray:
    """Rasterize one digit to a (28, 28) uint8 array.

    The glyph is drawn centered on a 56x56 canvas, shifted by (dx, dy)
    canvas pixels, rotated, then downscaled to 28x28.  A canvas shift of 2
    therefore moves the final glyph by one output pixel.
    """
    if not 0 <= digit <= 9:
        raise ValueError(f"digit must lie in [0, 9], got {digit}")
    canvas = Image.new("L", (_CANVAS_SIDE, _CANVAS_SIDE), 0)
    draw = ImageDraw.Draw(canvas)
    font = _font(font_file, size_px)
    text = str(digit)
    left, top, right, bottom = draw.textbbox((0, 0), text, font=font)
    x = (_CANVAS_SIDE - (right - left)) / 2 - left + dx
    y = (_CANVAS_SIDE - (bottom - top)) / 2 - top + dy
    draw.text((x, y), text, fill=255, font=font)
    rotated = canvas.rotate(angle_deg, resample=Image.BILINEAR, fillcolor=0)
    small = rotated.resize((IMAGE_SIDE, IMAGE_SIDE), Image.LANCZOS)
    return np.asarray(small, dtype=np.uint8).copy()


def make_corpus(count: int, seed: int) -> tuple[np.ndarray, np.ndarray]:
    """Render a balanced digit corpus.

    Returns (images, labels) with images of shape (count, 28, 28) uint8 and
    labels of shape (count,) uint8.  Labels cycle 0..9 before a final
    seeded shuffle, so every class appears floor(count / 10) or one more
    times.
    """
    if count < 1:
        raise ValueError(f"count must be positive, got {count}")
    rng = np.random.default_rng(seed)
    images = np.zeros((count, IMAGE_SIDE, IMAGE_SIDE), dtype=np.uint8)
    labels = np.zeros(count, dtype=np.uint8)
    for i in range(count):
        digit = i % 10
        font_file = FONT_FILES[int(rng.integers(0, len(FONT_FILES)))]
        size_px = int(rng.integers(32, 41))
        dx = int(rng.integers(-3, 4))
        dy = int(rng.integers(-3, 4))
        angle = float(rng.uniform(-8.0, 8.0))
        images[i] = render_digit(digit, font_file, size_px, dx, dy, angle)
        labels[i] = digit
    order = rng.permutation(count)
    return images[order], labels[order]


def corpus_fingerprint(images: np.ndarray, labels: np.ndarray) -> str:
    """SHA-256 over the raw image and label bytes."""
    digest = hashlib.sha256()
    digest.update(np.ascontiguousarray(images).tobytes())
    digest.update(np.ascontiguousarray(labels).tobytes())
    return digest.hexdigest()


def write_idx_images(path: Path, images: np.ndarray, *, compress: bool = False) -> None:
    """Write uint8 images in IDX3 layout (big-endian header, magic 0x803)."""
    if images.ndim != 3 or images.dtype != np.uint8:
        raise ValueError("images must be a uint8 array of shape (n, rows, cols)")
    n, rows, cols = images.shape
    payload = struct.pack(">IIII", 0x803, n, rows, cols) + images.tobytes()
    data = gzip.compress(payload) if compress else payload
    Path(path).write_bytes(data)


def write_idx_labels(path: Path, labels: np.ndarray, *, compress: bool = False) -> None:
    """Write uint8 labels in IDX1 layout (big-endian header, magic 0x801)."""
    if labels.ndim != 1 or labels.dtype != np.uint8:
        raise ValueError("labels must be a uint8 array of shape (n,)")
    payload = struct.pack(">II", 0x801, labels.shape[0]) + labels.tobytes()
    data = gzip.compress(payload) if compress else payload
    Path(path).write_bytes(data)


def write_raw_tensor(path: Path, images: np.ndarray) -> None:
    """Write float32 images as a little-endian raw tensor.

    Layout: three uint32 (count, rows, cols) followed by count*rows*cols
    float32 values in row-major order.  Pixel values are expected in
    [0, 1].
    """
    arr = np.ascontiguousarray(images, dtype=np.float32)
    if arr.ndim != 3:
        raise ValueError("images must have shape (n, rows, cols)")
    n, rows, cols = arr.shape
    header = struct.pack("<III", n, rows, cols)
    Path(path).write_bytes(header + arr.astype("<f4").tobytes())


def write_label_csv(path: Path, labels: np.ndarray) -> None:
    """Write one integer label per line."""
    lines = "\n".join(str(int(v)) for v in labels)
    Path(path).write_text(lines + "\n")


def load_idx_images(path: Path) -> np.ndarray:
    """Read an IDX3 image file back into a uint8 array (gzip transparent)."""
    data = Path(path).read_bytes()
    if data[:2] == b"\x1f\x8b":
        data = gzip.decompress(data)
    magic, n, rows, cols = struct.unpack(">IIII", data[:16])
    if magic != 0x803:
        raise ValueError(f"bad image magic 0x{magic:x}")
    body = np.frombuffer(data, dtype=np.uint8, offset=16)
    if body.size != n * rows * cols:
        raise ValueError("image payload size mismatch")
    return body.reshape(n, rows, cols).copy()


def load_idx_labels(path: Path) -> np.ndarray:
    """Read an IDX1 label file back into a uint8 array (gzip transparent)."""
    data = Path(path).read_bytes()
    if data[:2] == b"\x1f\x8b":
        data = gzip.decompress(data)
    magic, n = struct.unpack(">II", data[:8])
    if magic != 0x801:
        raise ValueError(f"bad label magic 0x{magic:x}")
    body = np.frombuffer(data, dtype=np.uint8, offset=8)
    if body.size != n:
        raise ValueError("label payload size mismatch")
    return body.copy()
