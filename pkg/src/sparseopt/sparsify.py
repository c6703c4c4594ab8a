"""Threshold search over unimportance scores and the final sparse step."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .oracles import BudgetExhausted, adversarial_fn


def bin_mask(beta: np.ndarray, xi: float) -> np.ndarray:
    """Keep mask: 1.0 where the score is at or below the threshold."""
    return (beta <= xi).astype(np.float64)


@dataclass
class ThresholdResult:
    t: float
    keep_mask: np.ndarray
    queries_spent: int
    monotone_violation: bool


def threshold_search(oracle, ledger, x0, y0, theta0, lambda0, beta, *, tol=1e-6,
                     target=None, phase="threshold_search", limit=None) -> ThresholdResult:
    """Smallest keep threshold whose masked step stays adversarial.

    The bracket starts at [min(beta) - tol, max(beta)]: the low end keeps
    nothing, so its probe is x0 itself (not adversarial for a correctly
    classified clean point), and the high end keeps everything, which the
    caller certified adversarial when it fit lambda0. Neither endpoint is
    queried. Each bisection step costs one query, so the search spends at
    most ceil(log2(range / tol)) + 2 queries. The returned threshold is the
    adversarial high end of the final bracket; a budget interruption still
    returns the current certified high end.

    monotone_violation reports whether any visited threshold pair inverted
    the expected order (an adversarial probe above a non-adversarial one is
    expected, the reverse is not).
    """
    is_adv = adversarial_fn(oracle, ledger, y0, target=target, phase=phase, limit=limit)
    beta = np.asarray(beta, dtype=np.float64)
    lo = float(beta.min()) - tol
    hi = float(beta.max())
    start = ledger.used
    seen: list[tuple[float, bool]] = []
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        try:
            adv = is_adv(x0 + lambda0 * (theta0 * bin_mask(beta, mid)))
        except BudgetExhausted:
            break
        seen.append((mid, adv))
        if adv:
            hi = mid
        else:
            lo = mid
    lowest_adv = min((xi for xi, adv in seen if adv), default=math.inf)
    violation = any(not adv and xi > lowest_adv for xi, adv in seen)
    return ThresholdResult(
        t=hi,
        keep_mask=bin_mask(beta, hi),
        queries_spent=ledger.used - start,
        monotone_violation=violation,
    )


def finalize_delta(theta0: np.ndarray, lambda0: float, keep_mask: np.ndarray) -> np.ndarray:
    """The sparse perturbation; rejects a keep mask that drops everything."""
    if not np.any(keep_mask):
        raise ValueError("keep mask dropped every dimension")
    return lambda0 * (theta0 * keep_mask)
