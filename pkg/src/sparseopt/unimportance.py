"""Dimension-unimportance scoring for a fitted boundary direction.

Each trial zeroes a small random subset of the direction's coordinates,
replays the step at the certified radius, and turns the single decision
into signed evidence about the zeroed coordinates: still adversarial marks
them droppable, flipped back to the original class marks them load-bearing.
Evidence is weighted by the L2 mass that was removed, min-max normalized
within each outcome group, and accumulated into one score per dimension.
Higher scores mean safer to drop.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .oracles import BudgetExhausted, adversarial_fn
from .tensors import Rng, flip, norm, sample_zero_mask


@dataclass
class TrialEvidence:
    """One trial's outcome.

    mask holds +1 (kept adversarial) or -1 (broke the attack) exactly at
    the zeroed dimensions and 0 elsewhere; weight is the signed L2 norm of
    the coordinates that were zeroed out.
    """

    mask: np.ndarray
    weight: float


def run_trial(oracle, ledger, x0, y0, theta0, lambda0, p, rng, *, target=None,
              phase="unimportance", limit=None) -> TrialEvidence:
    """Zero p random coordinates of theta0 and replay the step once."""
    is_adv = adversarial_fn(oracle, ledger, y0, target=target, phase=phase, limit=limit)
    omega = sample_zero_mask(rng, theta0.shape, p)
    removed = flip(omega)
    weight = norm(removed * theta0, "l2")
    if is_adv(x0 + lambda0 * (theta0 * omega)):
        return TrialEvidence(mask=removed, weight=weight)
    return TrialEvidence(mask=-removed, weight=-weight)


def _minmax(v: np.ndarray) -> np.ndarray:
    if v.size == 0:
        return v
    lo, hi = float(v.min()), float(v.max())
    if hi == lo:
        return np.ones_like(v)
    return (v - lo) / (hi - lo)


def _is_positive(trial: TrialEvidence) -> bool:
    # classification by the mask sign, not the weight, so a zero-mass
    # trial still lands in the group its decision put it in
    return float(trial.mask.sum()) > 0.0


def normalize_weights(trials: list[TrialEvidence]) -> tuple[np.ndarray, np.ndarray]:
    """Min-max map of each outcome group's weight magnitudes onto [0, 1].

    The negative group is normalized on its magnitudes. An empty group
    stays empty; a single-element or all-equal group becomes all ones.
    Order within each group follows the trial order.
    """
    pos = np.array([t.weight for t in trials if _is_positive(t)], dtype=np.float64)
    neg = np.array([-t.weight for t in trials if not _is_positive(t)], dtype=np.float64)
    return _minmax(pos), _minmax(neg)


def accumulate_beta(shape, trials, pos_norm, neg_norm) -> np.ndarray:
    """Weighted sum of the signed masks; zero trials give a zero score."""
    beta = np.zeros(shape, dtype=np.float64)
    pi = ni = 0
    for t in trials:
        if _is_positive(t):
            beta += pos_norm[pi] * t.mask
            pi += 1
        else:
            beta += neg_norm[ni] * t.mask
            ni += 1
    return beta


def build_unimportance(oracle, ledger, x0, y0, fit, p, trial_budget, rng, *,
                       target=None, phase="unimportance",
                       limit=None) -> tuple[np.ndarray, list[TrialEvidence]]:
    """Score every dimension with at most trial_budget single-query trials.

    Consumes exactly min(trial_budget, remaining budget) queries; a budget
    interruption keeps the trials already finished. Returns the score array
    and the raw evidence.
    """
    trials: list[TrialEvidence] = []
    for _ in range(max(0, int(trial_budget))):
        try:
            trials.append(
                run_trial(
                    oracle, ledger, x0, y0, fit.theta0, fit.lambda0, p, rng,
                    target=target, phase=phase, limit=limit,
                )
            )
        except BudgetExhausted:
            break
    pos_norm, neg_norm = normalize_weights(trials)
    return accumulate_beta(fit.theta0.shape, trials, pos_norm, neg_norm), trials
