"""Solving the drift condition and validating the resulting measure change."""

import math

import numpy as np
import pytest

from levymart import (
    DivergenceSpec,
    GirsanovPair,
    SolverError,
    YDomainError,
    candidate_Y,
    hellinger_half,
    laplace_exponent,
    martingale_residual,
    q_model,
    q_triplet,
    solve_beta,
    validate_conditions,
)
from levymart import divergence as dv
from levymart.measure_solver import positivity_margin, tilt_jump_measure

from conftest import atom_model, bs_model, kou_model, merton_model, power_tail_model


def test_no_jump_closed_form():
    # nu = 0 turns the drift condition into b + c/2 + c*beta = 0
    model = bs_model(b=0.05, c=0.04)
    pair = solve_beta(model, DivergenceSpec.log())
    assert abs(pair.beta[0] + 1.75) < 1e-10
    assert pair.residual_norm < 1e-12
    # the same root for every family member: the condition does not see f
    for spec in (DivergenceSpec.exponential(), DivergenceSpec.power(0.5)):
        assert abs(solve_beta(model, spec).beta[0] + 1.75) < 1e-10


def test_atom_root_against_bisection():
    b, y, w = 0.01, -0.2, 1.0
    model = atom_model(b=b, y=y, w=w)
    spec = DivergenceSpec.log()

    u = math.expm1(y)
    g = lambda beta: b + w * (u / (1.0 - beta * u) - y)

    lo, hi = -3.0, 0.0
    assert g(lo) < 0.0 < g(hi)
    for _ in range(100):
        mid = 0.5 * (lo + hi)
        if g(mid) > 0.0:
            hi = mid
        else:
            lo = mid
    pair = solve_beta(model, spec)
    assert abs(pair.beta[0] - 0.5 * (lo + hi)) < 1e-8
    # the root pins the jump reweighting at (b - h*w) balance
    y_star = (b + w * (-y)) / (w * (-u))
    assert pair.Y(np.array([[y]]))[0] == pytest.approx(y_star, rel=1e-10)


def test_candidate_y_inverts_fprime():
    y = np.linspace(-0.6, 0.6, 13).reshape(-1, 1)
    for spec in (DivergenceSpec.log(), DivergenceSpec.exponential(),
                 DivergenceSpec.power(0.5)):
        beta = np.array([-0.4])
        Y = candidate_Y(spec, beta, y)
        assert np.all(Y > 0)
        lhs = dv.fprime(spec, Y)
        rhs = spec.fprime_one + beta[0] * np.expm1(y[:, 0])
        assert np.allclose(lhs, rhs, atol=1e-12)


def test_q_triplet_and_q_model():
    model = bs_model(b=0.05, c=0.04)
    pair = solve_beta(model, DivergenceSpec.log())
    qt = q_triplet(model, pair)
    assert qt.b[0] == pytest.approx(0.05 + 0.04 * (-1.75), abs=1e-12)
    assert qt.c[0, 0] == pytest.approx(0.04, abs=0)
    qm = q_model(model, pair)
    assert qm.horizon == model.horizon
    assert np.allclose(qm.spot, model.spot)
    # exp(X) is a Q-martingale: psi_L^Q(1) = 0
    assert abs(laplace_exponent(qt, [1.0])) < 1e-10


def test_q_drift_vanishes_with_jumps():
    for model in (merton_model(), kou_model(), atom_model()):
        pair = solve_beta(model, DivergenceSpec.log())
        qt = q_triplet(model, pair)
        assert abs(laplace_exponent(qt, [1.0])) < 5e-9


def test_hellinger_half_no_jumps():
    model = bs_model(b=0.05, c=0.04)
    pair = solve_beta(model, DivergenceSpec.log())
    assert hellinger_half(model, pair) == pytest.approx(0.5 * 1.75**2 * 0.04, abs=1e-12)


def test_solves_all_presets_on_gaussian_jumps():
    model = merton_model()
    for spec in (DivergenceSpec.log(), DivergenceSpec.exponential(),
                 DivergenceSpec.power(0.5)):
        pair = solve_beta(model, spec)
        assert pair.residual_norm < 1e-12
        assert pair.conditions.ok
        assert all(pair.conditions.kappa_finite.values())
        res = martingale_residual(model, spec, pair.beta)
        assert res.norm < 1e-12


def test_wrong_beta_leaves_visible_residual():
    model = merton_model()
    spec = DivergenceSpec.log()
    pair = solve_beta(model, spec)
    res = martingale_residual(model, spec, pair.beta + 0.3)
    assert res.norm > 1e-3
    report = validate_conditions(model, spec, GirsanovPair(pair.beta + 0.3, spec))
    assert report.martingale_residual > 1e-3
    assert any("cdsec3" in msg for msg in report.messages)


def test_no_root_inside_domain_is_reported():
    # too much drift for the jump activity pushes the root out of the domain
    model = merton_model(b=0.05)
    with pytest.raises(SolverError, match="cdsec1"):
        solve_beta(model, DivergenceSpec.log())


def test_tail_integrability_failure_is_reported():
    model = power_tail_model()
    with pytest.raises(SolverError, match="cdsec2"):
        solve_beta(model, DivergenceSpec.power(0.5))


def test_heavy_tail_log_family_still_solves():
    # the log reweighting decays like 1/e^y and tames the same tail
    model = power_tail_model()
    pair = solve_beta(model, DivergenceSpec.log())
    assert pair.residual_norm < 1e-12
    assert pair.conditions.ok


def test_positivity_margin_detects_domain_edge():
    spec = DivergenceSpec.log()
    kou = kou_model().triplet.jumps
    # base -> 1 + beta as y -> -inf: beta <= -1 leaves the domain
    assert positivity_margin(spec, np.array([-0.5]), kou) > 0.0
    assert positivity_margin(spec, np.array([-1.2]), kou) <= 0.0

    atom = atom_model(y=-0.2).triplet.jumps
    crit = 1.0 / math.expm1(-0.2)
    assert positivity_margin(spec, np.array([0.9 * crit]), atom) > 0.0
    assert positivity_margin(spec, np.array([1.1 * crit]), atom) < 0.0


def test_martingale_residual_raises_outside_domain():
    model = kou_model()
    with pytest.raises(YDomainError):
        martingale_residual(model, DivergenceSpec.log(), np.array([-1.5]))


def test_tilt_jump_measure_atoms():
    model = atom_model()
    pair = solve_beta(model, DivergenceSpec.log())
    tilted = tilt_jump_measure(model.triplet.jumps, pair)
    w = model.triplet.jumps.weights[0]
    ystar = pair.Y(model.triplet.jumps.ys)[0]
    assert tilted.weights[0] == pytest.approx(w * ystar, rel=1e-12)
    assert np.allclose(tilted.ys, model.triplet.jumps.ys)


def test_tilted_density_mass_matches_direct_integral():
    model = merton_model()
    pair = solve_beta(model, DivergenceSpec.log())
    tilted = tilt_jump_measure(model.triplet.jumps, pair)
    direct = model.triplet.jumps.integrate(lambda y: pair.Y(y))
    assert tilted.total_mass() == pytest.approx(direct, rel=1e-8)


def test_dimension_mismatch_rejected():
    model = bs_model()
    with pytest.raises(Exception):
        martingale_residual(model, DivergenceSpec.log(), np.array([0.1, 0.2]))
