"""Array helpers shared by every attack phase.

Images are float64 arrays of shape (channels, height, width) with values in
[0, 1]. Perturbation directions share the shape but are unbounded. Masks are
arrays of the same shape whose entries are exactly 0.0 or 1.0.
"""

from __future__ import annotations

import numpy as np

Rng = np.random.Generator


def make_rng(seed: int) -> Rng:
    """Build the single generator an attack run draws from."""
    return np.random.default_rng(seed)


def norm(t: np.ndarray, which: str = "l2") -> float:
    """L0 (exact nonzero count), L2 or Linf norm of an array."""
    if which == "l0":
        return float(np.count_nonzero(t))
    if which == "l2":
        return float(np.linalg.norm(np.asarray(t, dtype=np.float64).ravel()))
    if which == "linf":
        return float(np.max(np.abs(t)))
    raise ValueError(f"unknown norm {which!r}")


def unit(t: np.ndarray, which: str = "l2") -> np.ndarray:
    """A copy of t scaled to unit length under the given norm."""
    n = norm(t, which)
    if n == 0.0:
        raise ValueError("cannot normalize a zero direction")
    return np.asarray(t, dtype=np.float64) / n


def flip(mask: np.ndarray) -> np.ndarray:
    """Exchange the zeros and ones of a binary mask."""
    return 1.0 - mask


def sample_gaussian_direction(rng: Rng, shape: tuple[int, ...]) -> np.ndarray:
    """Standard normal draw of the given shape."""
    return rng.standard_normal(shape)


def sample_zero_mask(rng: Rng, shape: tuple[int, ...], p: int) -> np.ndarray:
    """Binary mask with exactly p zeros placed uniformly at random."""
    size = int(np.prod(shape))
    if not 1 <= p <= size:
        raise ValueError(f"p must lie in [1, {size}], got {p}")
    mask = np.ones(size, dtype=np.float64)
    mask[rng.choice(size, size=p, replace=False)] = 0.0
    return mask.reshape(shape)
