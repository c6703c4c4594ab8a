"""Boundary-distance descent for hard-label attacks.

Everything here works through decisions alone. The distance g(theta) from
the clean point to the decision boundary along a direction is bracketed by
bisection, its gradient is sensed with single-query sign probes, and the
direction is improved by a halving line search on g. All randomness comes
from the caller's generator, so a run is a pure function of its seed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .oracles import BudgetExhausted, adversarial_fn
from .tensors import Rng, norm, sample_gaussian_direction, unit


@dataclass
class SignOptConfig:
    probe_count: int = 200
    epsilon_smooth: float = 0.001
    eta0: float = 0.2
    num_init_directions: int = 100
    lambda_tolerance: float = 1e-5
    norm: str = "l2"
    target: int | None = None
    target_exemplar: np.ndarray | None = None


@dataclass
class BoundaryFit:
    """A certified adversarial point x0 + lambda0 * theta0.

    theta0 has unit length under the active norm and lambda0 is the
    adversarial endpoint of the last bracket, so recomputing the probe
    reproduces the exact array that the oracle already called adversarial.
    """

    theta0: np.ndarray
    lambda0: float
    queries_spent: int
    g_history: list[float] = field(default_factory=list)


class InitFailure(Exception):
    """No adversarial direction was found during initialization."""


def _bisect(is_adv, x0, d, lo, hi, tol):
    # hi is certified adversarial by the caller; lo is not adversarial.
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if is_adv(x0 + mid * d):
            hi = mid
        else:
            lo = mid
    return hi


def _g_outward(is_adv, x0, theta, tol, norm_name):
    d = unit(theta, norm_name)
    lo = 0.0
    hi = norm(x0, "linf") * 0.1 + 0.1
    cap = 10.0 * norm(x0, "l2") + 10.0
    while not is_adv(x0 + hi * d):
        lo = hi
        hi *= 2.0
        if hi > cap:
            return math.inf
    return _bisect(is_adv, x0, d, lo, hi, tol)


def _g_under(is_adv, x0, d_unit, ceiling, tol):
    """g along d_unit when it beats ceiling, else inf after one query.

    Decision regions are treated as monotone along rays here: once the step
    at the current best radius is not adversarial the direction cannot win,
    which is the assumption the whole descent family rests on.
    """
    if not is_adv(x0 + ceiling * d_unit):
        return math.inf
    return _bisect(is_adv, x0, d_unit, 0.0, ceiling, tol)


def g_eval(oracle, ledger, x0, y0, theta, *, tol=1e-5, norm_name="l2", target=None,
           phase="baseline", limit=None) -> float:
    """Distance from x0 to the decision boundary along theta.

    theta is normalized internally. The scan doubles outward from a small
    radius until it crosses the boundary, then bisects down to tol. The
    returned value is the adversarial endpoint of the final bracket, so
    x0 + g * unit(theta) is a point the oracle called adversarial. Returns
    inf when nothing up to radius 10*l2(x0) + 10 crosses.
    """
    is_adv = adversarial_fn(oracle, ledger, y0, target=target, phase=phase, limit=limit)
    return _g_outward(is_adv, np.asarray(x0, dtype=np.float64), theta, tol, norm_name)


def _draw_direction(cfg: SignOptConfig, rng: Rng, x0: np.ndarray) -> np.ndarray:
    g = sample_gaussian_direction(rng, x0.shape)
    if cfg.target_exemplar is None:
        return g
    base = np.asarray(cfg.target_exemplar, dtype=np.float64) - x0
    return base + 0.1 * norm(base, "l2") * unit(g, "l2")


def initial_direction_search(oracle, ledger, x0, y0, cfg, rng, *, phase="baseline",
                             limit=None) -> tuple[np.ndarray, float]:
    """Best adversarial direction among num_init_directions random draws.

    Each draw is screened with one query at its own raw length; draws whose
    screen point is not adversarial are skipped, and draws that cannot beat
    the current best radius are rejected with one query. Survivors are
    bisected down to lambda_tolerance. Draws that never cross are exactly
    the skipped ones. Raises InitFailure when every draw is skipped, or
    when the budget dies before anything adversarial is seen.
    """
    is_adv = adversarial_fn(oracle, ledger, y0, target=cfg.target, phase=phase, limit=limit)
    best_d: np.ndarray | None = None
    best_g = math.inf
    ran_dry = False
    for _ in range(cfg.num_init_directions):
        theta = _draw_direction(cfg, rng, x0)
        scale = norm(theta, cfg.norm)
        if scale == 0.0:
            continue
        d = theta / scale
        try:
            if not is_adv(x0 + scale * d):
                continue
            if best_g < scale:
                if not is_adv(x0 + best_g * d):
                    continue
                g = _bisect(is_adv, x0, d, 0.0, best_g, cfg.lambda_tolerance)
            else:
                g = _bisect(is_adv, x0, d, 0.0, scale, cfg.lambda_tolerance)
        except BudgetExhausted:
            ran_dry = True
            break
        if g < best_g:
            best_d, best_g = d, g
    if best_d is None:
        raise InitFailure(
            "budget exhausted before any adversarial direction" if ran_dry
            else "no adversarial direction among the initial draws"
        )
    return best_d, best_g


def sign_grad_estimate(oracle, ledger, x0, y0, theta, g_theta, cfg, rng, *, epsilon=None,
                       phase="baseline", limit=None) -> np.ndarray:
    """Single-query sign probes around theta, summed into a gradient sense.

    Each probe tilts the direction by epsilon times a fresh Gaussian,
    rescales the step to land at radius g_theta, and asks one decision.
    Still adversarial means the tilt reaches the boundary sooner, so it
    votes downhill (-mu); flipped back to the original class votes uphill
    (+mu). probe_count probes cost exactly probe_count queries.
    """
    eps = cfg.epsilon_smooth if epsilon is None else epsilon
    is_adv = adversarial_fn(oracle, ledger, y0, target=cfg.target, phase=phase, limit=limit)
    ghat = np.zeros_like(x0, dtype=np.float64)
    for _ in range(cfg.probe_count):
        mu = sample_gaussian_direction(rng, x0.shape)
        probe = x0 + g_theta * unit(theta + eps * mu, cfg.norm)
        vote = -1.0 if is_adv(probe) else 1.0
        ghat += vote * mu
    return ghat


def signopt_descend(oracle, ledger, x0, y0, cfg, rng, phase_budget, *,
                    phase="baseline") -> BoundaryFit:
    """Full first phase: seed a direction, then sign-probe descent on g.

    Spends at most phase_budget decisions through the shared ledger and
    returns the best certified fit seen so far even when the budget runs
    out mid-step. Each iteration estimates the sign gradient, then line
    searches the step size from eta0 with up to 15 halvings; a fruitless
    line search halves the smoothing radius and counts one failure, and
    two consecutive failures end the descent. Accepted g values decrease
    strictly.
    """
    x0 = np.asarray(x0, dtype=np.float64)
    start = ledger.used
    limit = min(ledger.cap, start + max(0, int(phase_budget)))
    is_adv = adversarial_fn(oracle, ledger, y0, target=cfg.target, phase=phase, limit=limit)
    theta, g = initial_direction_search(oracle, ledger, x0, y0, cfg, rng, phase=phase, limit=limit)
    history = [g]
    eps = cfg.epsilon_smooth
    failures = 0
    try:
        while failures < 2:
            ghat = sign_grad_estimate(
                oracle, ledger, x0, y0, theta, g, cfg, rng,
                epsilon=eps, phase=phase, limit=limit,
            )
            eta = cfg.eta0
            improved = False
            for _ in range(16):
                cand = theta - eta * ghat
                if norm(cand, cfg.norm) == 0.0:
                    eta *= 0.5
                    continue
                d = unit(cand, cfg.norm)
                g_new = _g_under(is_adv, x0, d, g, cfg.lambda_tolerance)
                if g_new < g:
                    theta, g = d, g_new
                    history.append(g)
                    improved = True
                    break
                eta *= 0.5
            if improved:
                failures = 0
            else:
                eps *= 0.5
                failures += 1
    except BudgetExhausted:
        pass
    return BoundaryFit(
        theta0=theta,
        lambda0=g,
        queries_spent=ledger.used - start,
        g_history=history,
    )
