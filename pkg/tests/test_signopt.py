import math

import numpy as np
import pytest

from sparseopt.oracles import HyperplaneOracle, QueryLedger, SphereOracle
from sparseopt.signopt import (InitFailure, SignOptConfig, g_eval,
                               initial_direction_search, sign_grad_estimate,
                               signopt_descend)
from sparseopt.tensors import unit

from conftest import SpyOracle


def test_g_eval_hits_hyperplane_distance():
    w = np.zeros(6)
    w[0] = 1.0
    oracle = HyperplaneOracle(w=w, b=-0.5)
    led = QueryLedger(cap=200)
    g = g_eval(oracle, led, np.zeros(6), 0, w, tol=1e-5)
    assert abs(g - 0.5) <= 1e-5
    # any theta is normalized internally, so scaling must not matter
    g2 = g_eval(oracle, led, np.zeros(6), 0, 37.0 * w, tol=1e-5)
    assert abs(g2 - 0.5) <= 1e-5


def test_g_eval_infinite_when_direction_never_crosses():
    w = np.zeros(4)
    w[0] = 1.0
    oracle = HyperplaneOracle(w=w, b=-0.5)
    led = QueryLedger(cap=200)
    sideways = np.array([0.0, 1.0, 0.0, 0.0])
    assert g_eval(oracle, led, np.zeros(4), 0, sideways) == math.inf
    away = np.array([-1.0, 0.0, 0.0, 0.0])
    assert g_eval(oracle, led, np.zeros(4), 0, away) == math.inf


def test_g_eval_sphere_radius_from_center(rng):
    oracle = SphereOracle(center=np.zeros(7), radius=2.5)
    led = QueryLedger(cap=200)
    theta = rng.standard_normal(7)
    g = g_eval(oracle, led, np.zeros(7), 1, theta, tol=1e-6)
    assert abs(g - 2.5) <= 1e-6


def test_g_eval_returns_certified_adversarial_endpoint(rng):
    w = rng.standard_normal(5)
    oracle = HyperplaneOracle(w=w, b=-0.8)
    x0 = rng.standard_normal(5) * 0.1
    if oracle.decide(x0) != 0:
        x0 = np.zeros(5)
    theta = w + 0.3 * rng.standard_normal(5)
    led = QueryLedger(cap=500)
    tol = 1e-5
    g = g_eval(oracle, led, x0, 0, theta, tol=tol)
    u = unit(theta)
    # the returned radius is the adversarial end of a tol-wide bracket
    assert oracle.decide(x0 + g * u) == 1
    assert oracle.decide(x0 + (g - 1.5 * tol) * u) == 0


def test_g_eval_query_accounting():
    oracle = SpyOracle(SphereOracle(center=np.zeros(3), radius=1.0))
    led = QueryLedger(cap=500)
    g_eval(oracle, led, np.zeros(3), 1, np.array([1.0, 0.0, 0.0]))
    assert led.used == oracle.calls
    assert 5 < led.used < 60


def test_sign_probe_votes_follow_decisions(rng):
    oracle = SphereOracle(center=np.zeros(6), radius=1.0)
    led = QueryLedger(cap=50)
    cfg = SignOptConfig(probe_count=1)
    theta = unit(np.ones(6))
    # replay the generator to know which mu the estimator drew
    seed = 424242
    mu = np.random.default_rng(seed).standard_normal(6)
    # probe lands outside the ball: still adversarial, vote is -mu exactly
    ghat = sign_grad_estimate(oracle, led, np.zeros(6), 1, theta, 1.1, cfg,
                              np.random.default_rng(seed))
    assert np.array_equal(ghat, -mu)
    # probe lands inside: the tilt lost adversariality, vote is +mu
    ghat = sign_grad_estimate(oracle, led, np.zeros(6), 1, theta, 0.5, cfg,
                              np.random.default_rng(seed))
    assert np.array_equal(ghat, mu)
    assert led.used == 2


def test_sign_probe_costs_probe_count_queries():
    oracle = SpyOracle(SphereOracle(center=np.zeros(4), radius=1.0))
    led = QueryLedger(cap=100)
    cfg = SignOptConfig(probe_count=17)
    sign_grad_estimate(oracle, led, np.zeros(4), 1, unit(np.ones(4)), 1.1, cfg,
                       np.random.default_rng(0))
    assert led.used == 17 == oracle.calls


def test_sign_gradient_aligns_with_analytic_descent_direction():
    # for a hyperplane, g(theta) = c / (w . theta); its gradient sensed
    # through rescaled probes is tangential, proportional to
    # -(w - theta (w . theta)). demand a clearly positive mean cosine.
    dim = 10
    cos = []
    for seed in range(50):
        rng = np.random.default_rng(1000 + seed)
        w = unit(rng.standard_normal(dim))
        oracle = HyperplaneOracle(w=w, b=-0.5)
        theta = unit(0.8 * w + 0.6 * unit(rng.standard_normal(dim)))
        if float(np.vdot(w, theta)) <= 0.2:
            continue
        g_theta = 0.5 / float(np.vdot(w, theta))
        cfg = SignOptConfig(probe_count=20, epsilon_smooth=0.001)
        led = QueryLedger(cap=100)
        ghat = sign_grad_estimate(oracle, led, np.zeros(dim), 0, theta, g_theta,
                                  cfg, rng)
        descent = -(w - theta * float(np.vdot(w, theta)))
        denom = np.linalg.norm(ghat) * np.linalg.norm(descent)
        if denom > 0:
            cos.append(float(np.vdot(ghat, descent)) / denom)
    assert len(cos) >= 40
    assert float(np.mean(cos)) > 0.3


def test_initial_search_finds_sphere_radius():
    oracle = SphereOracle(center=np.zeros(8), radius=1.0)
    led = QueryLedger(cap=2000)
    cfg = SignOptConfig(num_init_directions=10, lambda_tolerance=1e-5)
    d, g = initial_direction_search(oracle, led, np.zeros(8), 1, cfg,
                                    np.random.default_rng(2))
    assert abs(np.linalg.norm(d) - 1.0) < 1e-9
    # from the center every direction exits at the radius
    assert 1.0 <= g < 1.01
    assert oracle.decide(g * d) == 0


def test_initial_search_is_deterministic():
    oracle = SphereOracle(center=np.zeros(5), radius=1.0)
    cfg = SignOptConfig(num_init_directions=6)
    runs = []
    for _ in range(2):
        led = QueryLedger(cap=2000)
        runs.append(initial_direction_search(oracle, led, np.zeros(5), 1, cfg,
                                             np.random.default_rng(77)) + (led.used,))
    assert np.array_equal(runs[0][0], runs[1][0])
    assert runs[0][1] == runs[1][1]
    assert runs[0][2] == runs[1][2]


def test_initial_search_raises_when_nothing_crosses():
    w = np.zeros(4)
    w[0] = 1.0
    oracle = HyperplaneOracle(w=w, b=-1e9)
    led = QueryLedger(cap=2000)
    cfg = SignOptConfig(num_init_directions=12)
    with pytest.raises(InitFailure, match="no adversarial direction"):
        initial_direction_search(oracle, led, np.zeros(4), 0, cfg,
                                 np.random.default_rng(0))
    # one screening query per draw, nothing else
    assert led.used == 12


def test_initial_search_raises_on_spent_budget():
    oracle = SphereOracle(center=np.zeros(4), radius=1.0)
    led = QueryLedger(cap=2000)
    cfg = SignOptConfig(num_init_directions=5)
    with pytest.raises(InitFailure, match="budget exhausted"):
        initial_direction_search(oracle, led, np.zeros(4), 1, cfg,
                                 np.random.default_rng(0), limit=0)
    assert led.used == 0


def test_targeted_exemplar_guides_the_search():
    exemplar = np.full(6, 3.0)
    oracle = SphereOracle(center=exemplar, radius=1.0)
    x0 = np.zeros(6)
    assert oracle.decide(x0) == 0
    cfg = SignOptConfig(num_init_directions=8, target=1, target_exemplar=exemplar)
    led = QueryLedger(cap=4000)
    d, g = initial_direction_search(oracle, led, x0, 0, cfg,
                                    np.random.default_rng(4))
    dist = float(np.linalg.norm(exemplar))
    assert dist - 1.5 < g < dist
    assert oracle.decide(x0 + g * d) == 1


def test_descend_respects_phase_budget():
    for budget in (3, 25, 80, 300):
        oracle = SpyOracle(SphereOracle(center=np.zeros(5), radius=1.0))
        led = QueryLedger(cap=10_000)
        cfg = SignOptConfig(probe_count=10, num_init_directions=4)
        try:
            fit = signopt_descend(oracle, led, np.zeros(5), 1, cfg,
                                  np.random.default_rng(8), budget)
        except InitFailure:
            assert led.used <= budget
            continue
        assert led.used <= budget
        assert led.used == oracle.calls == fit.queries_spent
        assert oracle.inner.decide(fit.lambda0 * fit.theta0) == 0


def test_descend_improves_on_offset_sphere():
    center = np.zeros(6)
    oracle = SphereOracle(center=center, radius=1.0)
    x0 = np.full(6, 0.2)
    assert oracle.decide(x0) == 1
    led = QueryLedger(cap=10_000)
    cfg = SignOptConfig(probe_count=15, num_init_directions=8)
    fit = signopt_descend(oracle, led, x0, 1, cfg, np.random.default_rng(5), 2500)
    best = oracle.escape_distance(x0)
    assert fit.g_history[0] > fit.lambda0
    assert fit.lambda0 < 1.3 * best
    # history decreases strictly
    assert all(b < a for a, b in zip(fit.g_history, fit.g_history[1:]))
    assert oracle.decide(x0 + fit.lambda0 * fit.theta0) == 0


def test_descend_stops_on_two_fruitless_searches():
    # eta0 = 0 freezes the direction, so no line search can improve g;
    # the two-failure rule must end the run long before the cap
    oracle = SphereOracle(center=np.zeros(5), radius=1.0)
    led = QueryLedger(cap=5000)
    cfg = SignOptConfig(probe_count=5, num_init_directions=3, eta0=0.0)
    fit = signopt_descend(oracle, led, np.zeros(5), 1, cfg,
                          np.random.default_rng(3), 5000)
    assert led.used < 1000
    assert all(b < a for a, b in zip(fit.g_history, fit.g_history[1:]))
    assert oracle.decide(fit.lambda0 * fit.theta0) == 0


def test_descend_with_init_only_budget_returns_seed_direction():
    oracle = SphereOracle(center=np.zeros(4), radius=1.0)
    cfg = SignOptConfig(probe_count=10, num_init_directions=3)
    led = QueryLedger(cap=10_000)
    d, g = initial_direction_search(oracle, led, np.zeros(4), 1, cfg,
                                    np.random.default_rng(11))
    init_cost = led.used
    led2 = QueryLedger(cap=10_000)
    fit = signopt_descend(oracle, led2, np.zeros(4), 1, cfg,
                          np.random.default_rng(11), init_cost)
    assert fit.queries_spent == init_cost
    assert np.array_equal(fit.theta0, d)
    assert fit.lambda0 == g
    assert fit.g_history == [g]


def test_descend_linf_mode_normalizes_under_linf():
    oracle = SphereOracle(center=np.zeros(5), radius=1.0)
    led = QueryLedger(cap=10_000)
    cfg = SignOptConfig(probe_count=10, num_init_directions=5, norm="linf")
    fit = signopt_descend(oracle, led, np.zeros(5), 1, cfg,
                          np.random.default_rng(6), 800)
    assert abs(np.max(np.abs(fit.theta0)) - 1.0) < 1e-9
    assert oracle.decide(fit.lambda0 * fit.theta0) == 0
