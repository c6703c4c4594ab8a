"""Hard-label oracles and query accounting.

The attack never sees logits or gradients, only the top-1 class index, and
every decision it requests passes through a QueryLedger that enforces the
query cap and keeps per-phase tallies.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class BudgetExhausted(Exception):
    """A decision was requested after the query budget ran out."""


@dataclass
class QueryLedger:
    """Counts every oracle decision an attack run makes."""

    cap: int
    used: int = 0
    phases: dict[str, int] = field(default_factory=dict)

    @property
    def remaining(self) -> int:
        return self.cap - self.used

    def charge(self, phase: str) -> None:
        if self.used >= self.cap:
            raise BudgetExhausted(f"query cap {self.cap} reached")
        self.used += 1
        self.phases[phase] = self.phases.get(phase, 0) + 1


class Oracle:
    """Deterministic top-1 decision over image-shaped arrays."""

    num_classes: int = 2
    shape: tuple[int, ...] = ()

    def decide(self, x: np.ndarray) -> int:
        raise NotImplementedError


def decide_counted(oracle: Oracle, ledger: QueryLedger, phase: str, x: np.ndarray) -> int:
    """The only sanctioned way for attack code to ask for a decision."""
    ledger.charge(phase)
    return oracle.decide(x)


class ClippedOracle(Oracle):
    """Decides on the projection of every query into the [0, 1] box.

    Wrapping the oracle, rather than clamping after the search, makes the
    attack optimize the boxed example directly: any point a phase certifies
    as adversarial stays adversarial after clipping because the oracle never
    saw the unclipped version. Projection onto the box moves no coordinate
    further from a clean in-range image than the raw step did, so the norm
    and sparsity guarantees carry over to the projected perturbation.
    """

    def __init__(self, inner: Oracle):
        self.inner = inner
        self.num_classes = inner.num_classes
        self.shape = inner.shape

    def decide(self, x: np.ndarray) -> int:
        return self.inner.decide(np.clip(x, 0.0, 1.0))


def adversarial_fn(oracle, ledger, y0, *, target=None, phase="baseline", limit=None):
    """Predicate closure deciding whether a point counts as adversarial.

    Untargeted (target is None): any class other than y0 counts. Targeted:
    only the target class counts. `limit` is an absolute ledger position a
    phase must not query beyond; reaching it raises BudgetExhausted exactly
    like the global cap does.
    """

    def is_adv(x: np.ndarray) -> bool:
        if limit is not None and ledger.used >= limit:
            raise BudgetExhausted(f"phase limit {limit} reached")
        c = decide_counted(oracle, ledger, phase, x)
        return c == target if target is not None else c != y0

    return is_adv


class HyperplaneOracle(Oracle):
    """Two classes split by w.x + b = 0, class 1 on the positive side.

    The analytic helpers below are for tests and calibration only; attack
    code never touches them.
    """

    def __init__(self, w: np.ndarray, b: float):
        self.w = np.asarray(w, dtype=np.float64)
        self.b = float(b)
        self.shape = self.w.shape
        self.num_classes = 2

    def decide(self, x: np.ndarray) -> int:
        return int(float(np.vdot(self.w, x)) + self.b > 0.0)

    def distance_along(self, x: np.ndarray, u: np.ndarray) -> float:
        """Distance from x (negative side) to the boundary along unit u."""
        num = -self.b - float(np.vdot(self.w, x))
        den = float(np.vdot(self.w, u))
        if den == 0.0:
            return float("inf")
        lam = num / den
        return lam if lam > 0.0 else float("inf")

    def min_distance(self, x: np.ndarray) -> float:
        """Smallest L2 distance from x to the boundary."""
        return abs(float(np.vdot(self.w, x)) + self.b) / float(np.linalg.norm(self.w))


class SphereOracle(Oracle):
    """Class 1 strictly inside an L2 ball, class 0 on and outside it."""

    def __init__(self, center: np.ndarray, radius: float):
        self.center = np.asarray(center, dtype=np.float64)
        self.radius = float(radius)
        self.shape = self.center.shape
        self.num_classes = 2

    def decide(self, x: np.ndarray) -> int:
        return int(float(np.linalg.norm(np.asarray(x, dtype=np.float64) - self.center)) < self.radius)

    def escape_distance(self, x: np.ndarray) -> float:
        """Smallest L2 step that leaves the ball, for points inside it."""
        return self.radius - float(np.linalg.norm(np.asarray(x, dtype=np.float64) - self.center))

    def distance_along(self, x: np.ndarray, u: np.ndarray) -> float:
        """Exit distance from an inside point x along unit direction u."""
        d = np.asarray(x, dtype=np.float64) - self.center
        ud = float(np.vdot(u, d))
        disc = ud * ud + self.radius**2 - float(np.vdot(d, d))
        return -ud + float(np.sqrt(disc))


class MaskLogicOracle(Oracle):
    """Adversarial (class 1) only while every required dimension is alive.

    A dimension is alive when the probe is nonzero there beyond a small
    tolerance. Exercises mask and threshold logic with an exactly known
    answer.
    """

    def __init__(self, shape: tuple[int, ...], required, zero_tol: float = 1e-9):
        self.shape = tuple(shape)
        self.required = tuple(int(i) for i in required)
        if not self.required:
            raise ValueError("required dimensions must be nonempty")
        self.zero_tol = float(zero_tol)
        self.num_classes = 2

    def decide(self, x: np.ndarray) -> int:
        alive = np.abs(np.asarray(x).ravel()[list(self.required)]) > self.zero_tol
        return int(bool(np.all(alive)))
