"""End-to-end attack: fit a boundary direction, score dimension
unimportance, sparsify, then verify, with every query accounted for.

Budget layout for a total budget Q and baseline budget N:

    1 query   eligibility check that the clean point carries its label
    phase 1   sign descent, at most min(N, Q - 2) queries; if it finds no
              adversarial direction at all, whatever remains (minus the
              verification hold-back) is handed back to it for fresh draws
    phase 2   one query per trial, budget = remaining - threshold reserve
    phase 3   threshold bisection inside the reserve
    1 query   final verification of x0 + delta

With clip on, every query above is projected into [0, 1] before the
oracle decides, so all phases search the boxed example directly.

The threshold reserve is ceil(log2(2 * avail / tol)) + 2, a conservative
bound on the bisection cost that is computable before any trial runs
(normalized weights live in [0, 1], so score ranges cannot exceed twice the
trial count). The ledger cap makes the total never exceed Q.

A run is deterministic given (oracle, x0, y0, config): one generator is
seeded from config.seed and consumed sequentially by the phases, so records
are reproducible apart from wall time.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field, replace

import numpy as np

from .oracles import ClippedOracle, QueryLedger, adversarial_fn, decide_counted
from .signopt import BoundaryFit, InitFailure, SignOptConfig, signopt_descend
from .sparsify import finalize_delta, threshold_search
from .tensors import make_rng, norm
from .unimportance import build_unimportance

PROFILES: dict[str, dict] = {
    "mnist": {"shape": (1, 28, 28), "p": 10, "epsilon": {"l2": 1.5, "linf": 0.3}},
    "cifar10": {"shape": (3, 32, 32), "p": 10, "epsilon": {"l2": 0.5, "linf": 0.03}},
    "imagenet": {"shape": (3, 224, 224), "p": 500, "epsilon": {"l2": 3.0, "linf": 0.03}},
}

_VERIFY_RESERVE = 1


class ConfigError(ValueError):
    """An attack configuration that cannot be run."""


@dataclass
class AttackConfig:
    total_budget: int = 4000
    baseline_budget: int = 3000
    p: int = 10
    norm: str = "l2"
    target: int | None = None
    target_exemplar: np.ndarray | None = None
    clip: bool = True
    seed: int = 0
    threshold_tol: float = 1e-6
    signopt: SignOptConfig = field(default_factory=SignOptConfig)


def default_config(profile: str, **overrides) -> AttackConfig:
    """Attack defaults per dataset profile.

    Known profiles fill total_budget=4000, baseline_budget=3000 (three
    quarters of the total) and the profile's trial width p; overriding
    total_budget alone rescales the baseline to keep the 3/4 split. The
    "custom" profile fills nothing silently, so total_budget,
    baseline_budget and p must all be supplied.
    """
    if profile == "custom":
        missing = [k for k in ("total_budget", "baseline_budget", "p") if k not in overrides]
        if missing:
            raise ConfigError(f"custom profile needs explicit {', '.join(missing)}")
        base: dict = {}
    elif profile in PROFILES:
        base = {"total_budget": 4000, "baseline_budget": 3000, "p": PROFILES[profile]["p"]}
        if "total_budget" in overrides and "baseline_budget" not in overrides:
            base["baseline_budget"] = 3 * int(overrides["total_budget"]) // 4
    else:
        raise ConfigError(f"unknown profile {profile!r}")
    base.update(overrides)
    return AttackConfig(**base)


@dataclass
class AttackRecord:
    kind: str
    image_id: object
    y0: int
    target: int | None
    norm: str
    clip: bool
    seed: int
    success: bool
    failure_reason: str | None
    lambda0: float | None
    l2_initial: float | None
    shape: list[int]
    delta: list[float] | None
    l0: float | None
    l2: float | None
    linf: float | None
    pp: float | None
    threshold: float | None
    monotone_violation: bool | None
    trials: int
    queries: dict[str, int]
    queries_total: int
    wall_time_s: float


@dataclass
class SkipRecord:
    kind: str
    image_id: object
    y0: int
    predicted: int
    reason: str
    seed: int
    queries_total: int
    wall_time_s: float


def _threshold_reserve(avail: int, tol: float) -> int:
    if avail <= 0:
        return 0
    return int(math.ceil(math.log2(2.0 * max(avail, 1) / tol))) + 2


def _validate(oracle, x0: np.ndarray, cfg: AttackConfig) -> None:
    if cfg.total_budget < 3:
        raise ConfigError("total budget must be at least 3 queries")
    if cfg.baseline_budget < 0:
        raise ConfigError("baseline budget cannot be negative")
    if cfg.baseline_budget > cfg.total_budget:
        raise ConfigError(
            f"baseline budget {cfg.baseline_budget} exceeds total budget {cfg.total_budget}"
        )
    if not 1 <= cfg.p <= x0.size:
        raise ConfigError(f"p must lie in [1, {x0.size}], got {cfg.p}")
    if cfg.norm not in ("l2", "linf"):
        raise ConfigError(f"norm must be l2 or linf, got {cfg.norm!r}")
    if cfg.threshold_tol <= 0.0:
        raise ConfigError("threshold tolerance must be positive")
    if cfg.target is not None and cfg.target >= oracle.num_classes:
        raise ConfigError(f"target {cfg.target} outside the oracle's {oracle.num_classes} classes")


def _failure_record(image_id, y0, cfg, ledger, reason, t0) -> AttackRecord:
    return AttackRecord(
        kind="attack", image_id=image_id, y0=int(y0), target=cfg.target, norm=cfg.norm,
        clip=cfg.clip, seed=cfg.seed, success=False, failure_reason=reason,
        lambda0=None, l2_initial=None, shape=[], delta=None, l0=None, l2=None,
        linf=None, pp=None, threshold=None, monotone_violation=None, trials=0,
        queries=dict(ledger.phases), queries_total=ledger.used,
        wall_time_s=time.perf_counter() - t0,
    )


def attack(oracle, x0, y0, cfg: AttackConfig, *, image_id=None,
           beta_out=None) -> AttackRecord | SkipRecord:
    """Run the full pipeline on one image.

    Returns a SkipRecord when the oracle does not assign y0 to the clean
    point (that eligibility query is counted under phase "setup"). With
    clip on, every query of every phase is projected into [0, 1] before
    the oracle sees it, so the search optimizes the boxed example and the
    recorded delta and norms describe the projected perturbation.
    beta_out, when given, receives the unimportance scores as
    "index,beta" CSV.
    """
    t0 = time.perf_counter()
    x0 = np.asarray(x0, dtype=np.float64)
    y0 = int(y0)
    _validate(oracle, x0, cfg)
    if cfg.target is not None and cfg.target == y0:
        raise ConfigError("target class equals the clean label")
    rng = make_rng(cfg.seed)
    ledger = QueryLedger(cap=cfg.total_budget)
    if cfg.clip:
        oracle = ClippedOracle(oracle)
    predicted = decide_counted(oracle, ledger, "setup", x0)
    if predicted != y0:
        return SkipRecord(
            kind="skip", image_id=image_id, y0=y0, predicted=predicted,
            reason="clean point not classified as its label", seed=cfg.seed,
            queries_total=ledger.used, wall_time_s=time.perf_counter() - t0,
        )

    scfg = replace(cfg.signopt, norm=cfg.norm, target=cfg.target,
                   target_exemplar=cfg.target_exemplar)
    fit: BoundaryFit | None = None
    budget1 = min(cfg.baseline_budget, ledger.remaining - _VERIFY_RESERVE)
    while fit is None:
        if budget1 < 1:
            return _failure_record(
                image_id, y0, cfg, ledger,
                "no adversarial direction found within the budget", t0,
            )
        try:
            fit = signopt_descend(oracle, ledger, x0, y0, scfg, rng, budget1)
        except InitFailure:
            # hand whatever is left (minus the verification query) back
            budget1 = ledger.remaining - _VERIFY_RESERVE

    avail = ledger.remaining - _VERIFY_RESERVE
    trial_budget = max(0, avail - _threshold_reserve(avail, cfg.threshold_tol))
    beta, trials = build_unimportance(
        oracle, ledger, x0, y0, fit, cfg.p, trial_budget, rng,
        target=cfg.target, limit=ledger.cap - _VERIFY_RESERVE,
    )
    if beta_out is not None:
        _write_beta(beta_out, beta)
    thr = threshold_search(
        oracle, ledger, x0, y0, fit.theta0, fit.lambda0, beta,
        tol=cfg.threshold_tol, target=cfg.target, limit=ledger.cap - _VERIFY_RESERVE,
    )
    delta = finalize_delta(fit.theta0, fit.lambda0, thr.keep_mask)

    x_adv = x0 + delta
    if cfg.clip:
        x_adv = np.clip(x_adv, 0.0, 1.0)
        delta = x_adv - x0
    verified = adversarial_fn(oracle, ledger, y0, target=cfg.target, phase="verify")(x_adv)

    m = x0.size
    l0 = norm(delta, "l0")
    return AttackRecord(
        kind="attack", image_id=image_id, y0=y0, target=cfg.target, norm=cfg.norm,
        clip=cfg.clip, seed=cfg.seed, success=bool(verified),
        failure_reason=None if verified else "final verification was not adversarial",
        lambda0=float(fit.lambda0),
        l2_initial=norm(fit.lambda0 * fit.theta0, "l2"),
        shape=[int(s) for s in x0.shape],
        delta=[float(v) for v in delta.ravel()],
        l0=l0, l2=norm(delta, "l2"), linf=norm(delta, "linf"),
        pp=100.0 * (m - l0) / m,
        threshold=float(thr.t), monotone_violation=thr.monotone_violation,
        trials=len(trials),
        queries=dict(ledger.phases), queries_total=ledger.used,
        wall_time_s=time.perf_counter() - t0,
    )


def _write_beta(dest, beta: np.ndarray) -> None:
    lines = ["index,beta"]
    lines += [f"{i},{float(v)!r}" for i, v in enumerate(beta.ravel())]
    text = "\n".join(lines) + "\n"
    with open(dest, "w", encoding="utf-8") as f:
        f.write(text)
