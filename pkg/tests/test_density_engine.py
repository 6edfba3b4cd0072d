"""Density process moments, pushforward law of ln Z, and path simulation."""

import math

import numpy as np
import pytest
from scipy import integrate, stats

from levymart import (
    ConfigError,
    DivergenceSpec,
    DivergentMomentError,
    MomentCurve,
    h_closed_form,
    laplace_exponent,
    log_density_triplet,
    sample_terminals,
    simulate_paths,
    solve_beta,
    subgrid_indices,
    trivial_pair,
    xi_closed_form,
    xi_monte_carlo,
)
from levymart import divergence as dv

from conftest import atom_model, bs_model, kou_model, merton_model, power_tail_model


def se(x: np.ndarray) -> float:
    return float(np.std(x, ddof=1) / math.sqrt(x.size))


def test_moment_curve_invariants():
    cases = [
        (merton_model(), DivergenceSpec.log()),
        (merton_model(), DivergenceSpec.exponential()),
        (merton_model(), DivergenceSpec.power(0.5)),
        (kou_model(), DivergenceSpec.log()),
        (atom_model(), DivergenceSpec.log()),
    ]
    for model, spec in cases:
        pair = solve_beta(model, spec)
        curve = MomentCurve(model, pair)
        # Z is a P-martingale with Z_0 = 1; 1/Z is a Q-martingale
        assert abs(curve.kappa_p(0.0)) <= 1e-12
        assert abs(curve.kappa_p(1.0)) <= 1e-12
        assert abs(curve.kappa_q(0.0)) <= 1e-12
        assert abs(curve.kappa_q(-1.0)) <= 1e-12


def test_moment_curve_against_direct_quadrature():
    model = merton_model()
    spec = DivergenceSpec.log()
    pair = solve_beta(model, spec)
    curve = MomentCurve(model, pair)
    beta = pair.beta[0]
    v = beta * 0.04 * beta
    lam, mu, sd = 1.0, -0.1, 0.15

    for theta in (-1.0, -0.3, 0.5, 2.0):
        def fn(y):
            Y = 1.0 / (1.0 - beta * np.expm1(y))
            return (Y**theta - 1.0 - theta * (Y - 1.0)) * lam * stats.norm.pdf(y, mu, sd)

        jump, _ = integrate.quad(fn, mu - 12 * sd, mu + 12 * sd, limit=200)
        expect = 0.5 * v * (theta * theta - theta) + jump
        assert curve.kappa_p(theta) == pytest.approx(expect, abs=1e-9)


def test_mean_rate_q_matches_derivative():
    model = merton_model()
    pair = solve_beta(model, DivergenceSpec.log())
    curve = MomentCurve(model, pair)
    eps = 1e-5
    fd = (curve.kappa_q(eps) - curve.kappa_q(-eps)) / (2 * eps)
    assert curve.mean_rate_q() == pytest.approx(fd, abs=1e-7)


def test_divergent_moment_rate_raises():
    model = power_tail_model()
    pair = solve_beta(model, DivergenceSpec.log())
    curve = MomentCurve(model, pair)
    # Y ~ e^{-y} on the right tail, so Z^{-2} needs int e^y nu(dy) = inf
    assert curve.kappa_q(-2.0) == math.inf
    assert not curve.is_finite(-2.0, "Q")
    with pytest.raises(DivergentMomentError):
        curve.moment_rate(-2.0, "Q")
    assert math.isfinite(curve.moment_rate(0.5, "Q"))


def test_log_density_triplet_reproduces_moment_curve():
    # the pushforward triplet of ln Z must integrate to the same moments
    for model in (merton_model(), atom_model()):
        pair = solve_beta(model, DivergenceSpec.log())
        curve = MomentCurve(model, pair)
        for under in ("P", "Q"):
            trip = log_density_triplet(model, pair, under=under)
            for theta in (-1.0, 0.0, 0.5, 1.0):
                direct = laplace_exponent(trip, [theta])
                assert direct == pytest.approx(curve.kappa(theta, under), abs=5e-8)


def test_terminal_sample_matches_moment_curve():
    model = merton_model()
    pair = solve_beta(model, DivergenceSpec.log())
    curve = MomentCurve(model, pair)
    n = 40_000

    ts = sample_terminals(model, pair, n, seed=11, under="P")
    assert abs(np.mean(ts.ZT) - 1.0) < 3 * se(ts.ZT)
    w = ts.ZT**0.5
    assert abs(np.mean(w) - math.exp(curve.kappa_p(0.5))) < 3 * se(w)

    tq = sample_terminals(model, pair, n, seed=12, under="Q")
    w = 1.0 / tq.ZT
    assert abs(np.mean(w) - 1.0) < 3 * se(w)
    w = tq.ZT**-0.5
    assert abs(np.mean(w) - math.exp(curve.kappa_q(-0.5))) < 3 * se(w)


def test_terminal_sample_no_jump_law():
    model = bs_model(b=0.05, c=0.04)
    ts = sample_terminals(model, None, 50_000, seed=4)
    assert ts.jump_sizes.size == 0
    assert np.all(ts.ZT == 1.0)
    assert abs(np.mean(ts.XT) - 0.05) < 4 * se(ts.XT)
    sd = np.std(ts.XT, ddof=1)
    assert abs(sd - 0.2) < 4 * sd / math.sqrt(2 * ts.n)


def test_sample_terminals_deterministic():
    model = merton_model()
    pair = solve_beta(model, DivergenceSpec.log())
    a = sample_terminals(model, pair, 500, seed=9, under="Q")
    b = sample_terminals(model, pair, 500, seed=9, under="Q")
    assert np.array_equal(a.XT, b.XT) and np.array_equal(a.ZT, b.ZT)
    c = sample_terminals(model, pair, 500, seed=10, under="Q")
    assert not np.array_equal(a.XT, c.XT)


def test_simulated_paths_internal_consistency():
    model = merton_model()
    pair = solve_beta(model, DivergenceSpec.log())
    paths = simulate_paths(model, pair, n_paths=6, n_steps=16, seed=2, under="Q")
    for p in paths:
        assert p.t[0] == 0.0 and p.t[-1] == pytest.approx(model.horizon, abs=0)
        assert np.all(np.diff(p.t) >= 0.0)
        assert np.allclose(p.S, model.spot[0] * np.exp(p.X), rtol=1e-12)
        assert np.all(p.Z > 0.0)
        # cadlag minus left limit equals the jump at jump nodes
        jumps = p.X[p.jump_nodes] - p.X_pre[p.jump_nodes]
        assert np.allclose(jumps, p.jump_sizes.ravel(), atol=1e-12)
        reg = p.regular_values(p.t)
        assert np.allclose(reg, np.linspace(0.0, model.horizon, 17), atol=1e-12)
        off = ~p.jump_nodes
        assert np.array_equal(p.X[off], p.X_pre[off])


def test_simulated_paths_stable_per_path():
    model = merton_model()
    pair = solve_beta(model, DivergenceSpec.log())
    few = simulate_paths(model, pair, n_paths=2, n_steps=8, seed=5)
    many = simulate_paths(model, pair, n_paths=7, n_steps=8, seed=5)
    assert np.array_equal(few[1].X, many[1].X)
    assert np.array_equal(few[1].t, many[1].t)


def test_trivial_pair_keeps_unit_density():
    model = merton_model()
    pair = trivial_pair(DivergenceSpec.log())
    ts = sample_terminals(model, pair, 200, seed=1, under="Q")
    assert np.allclose(ts.ZT, 1.0, atol=1e-15)
    paths = simulate_paths(model, pair, n_paths=2, n_steps=8, seed=1, under="Q")
    assert np.allclose(paths[0].Z, 1.0, atol=1e-15)


def test_xi_closed_form_matches_monte_carlo():
    model = merton_model()
    spec = DivergenceSpec.log()
    pair = solve_beta(model, spec)
    curve = MomentCurve(model, pair)
    t, x = 0.4, 0.9
    closed = xi_closed_form(spec, curve, t, x, model.horizon)
    est, est_se = xi_monte_carlo(model, pair, spec, model.horizon, t, x, n=40_000, seed=3)
    assert abs(est - closed) < 3.5 * est_se


def test_h_closed_form_matches_monte_carlo():
    model = merton_model()
    spec = DivergenceSpec.log()
    pair = solve_beta(model, spec)
    curve = MomentCurve(model, pair)
    t, x, T = 0.25, 1.3, model.horizon
    y = np.array([[-0.15]])
    closed = h_closed_form(spec, pair, curve, t, x, y, T)
    ts = sample_terminals(model, pair, 40_000, seed=8, under="Q", horizon=T - t)
    Yv = pair.Y(y)[0]
    w = dv.fprime(spec, x * ts.ZT * Yv) - dv.fprime(spec, x * ts.ZT)
    assert abs(np.mean(w) - closed[0]) < 3.5 * se(w)


def test_subgrid_indices_keeps_jumps_and_endpoints():
    model = merton_model()
    pair = solve_beta(model, DivergenceSpec.log())
    paths = simulate_paths(model, pair, n_paths=20, n_steps=16, seed=6)
    path = max(paths, key=lambda p: p.jump_sizes.size)
    assert path.jump_sizes.size > 0
    idx = subgrid_indices(path, 4)
    assert idx[0] == 0 and idx[-1] == path.n_nodes - 1
    sub_t = path.t[idx]
    for tj in path.t[path.jump_nodes]:
        assert np.any(sub_t == tj)
    kept = path.regular_index[idx][path.is_regular[idx]]
    assert np.all(kept % 4 == 0)
    with pytest.raises(ConfigError):
        subgrid_indices(path, 3)


def test_under_flag_validated():
    model = bs_model()
    with pytest.raises(ValueError):
        sample_terminals(model, None, 10, under="R")
