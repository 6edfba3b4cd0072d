"""Jump measures, characteristic exponents, and model diagnostics."""

import math

import numpy as np
import pytest
from scipy import integrate, stats

from levymart import (
    AtomicJumps,
    ConfigError,
    DensityJumps,
    DivergentMomentError,
    LevyTriplet,
    MarketModel,
    NoJumps,
    laplace_exponent,
    levy_exponent,
    linear_drift,
    truncate_small_jumps,
    validate_model,
)
from levymart.levy_core import psd_factor

from conftest import (
    atom_model,
    bs_model,
    gaussian_jumps,
    kou_jumps,
    merton_model,
    power_tail_jumps,
    power_tail_model,
)


def test_atomic_jumps_validation():
    with pytest.raises(ConfigError):
        AtomicJumps([[0.1], [0.2]], [1.0])
    with pytest.raises(ConfigError):
        AtomicJumps([[0.1]], [-1.0])
    with pytest.raises(ConfigError):
        AtomicJumps([[0.1]], [0.0])
    with pytest.raises(ConfigError):
        AtomicJumps([[0.0]], [1.0])
    with pytest.raises(ConfigError):
        AtomicJumps([[math.inf]], [1.0])


def test_atomic_jumps_integrate():
    m = AtomicJumps([[-0.2], [0.3]], [1.0, 2.0])
    assert m.total_mass() == pytest.approx(3.0, abs=0)
    val = m.integrate(lambda y: np.expm1(y[:, 0]))
    expect = 1.0 * math.expm1(-0.2) + 2.0 * math.expm1(0.3)
    assert val == pytest.approx(expect, abs=1e-14)


def test_density_jumps_validation():
    flat = lambda y: np.ones_like(np.asarray(y, dtype=float))
    with pytest.raises(ConfigError):
        DensityJumps(flat, [])
    with pytest.raises(ConfigError):
        DensityJumps(flat, [(2.0, 2.0)])
    with pytest.raises(ConfigError):
        DensityJumps(flat, [(0.0, 2.0), (1.0, 3.0)])
    with pytest.raises(ConfigError):
        DensityJumps(flat, [(1.0, math.inf)])  # unbounded needs effective_range


def test_density_integrate_normal_moments():
    # moments of the gaussian jump density against normal closed forms
    lam, mu, sd = 2.0, -0.1, 0.15
    m = gaussian_jumps(intensity=lam, mean=mu, std=sd)
    assert m.total_mass() == pytest.approx(lam, rel=1e-9)
    assert m.integrate(lambda y: y) == pytest.approx(lam * mu, abs=1e-9)
    assert m.integrate(lambda y: y**2) == pytest.approx(lam * (mu**2 + sd**2), rel=1e-9)


def test_density_exact_sampler_moments():
    rng = np.random.default_rng(3)
    n = 200_000
    ys = gaussian_jumps().sample(rng, n)
    assert abs(ys.mean() + 0.1) < 4 * 0.15 / math.sqrt(n)

    ys = kou_jumps().sample(rng, n)
    mean = 0.4 / 10.0 - 0.6 / 5.0
    var = 0.4 * 2.0 / 100.0 + 0.6 * 2.0 / 25.0 - mean**2
    assert abs(ys.mean() - mean) < 4 * math.sqrt(var / n)


def test_density_table_sampler_moments():
    # no explicit sampler: falls back to the inverse-CDF table
    box = DensityJumps(lambda y: np.ones_like(np.asarray(y, dtype=float)),
                       [(0.5, 1.5)])
    rng = np.random.default_rng(7)
    ys = box.sample(rng, 100_000)
    assert ys.min() >= 0.5 and ys.max() <= 1.5
    assert abs(ys.mean() - 1.0) < 4 * (1.0 / math.sqrt(12.0)) / math.sqrt(100_000)
    assert abs(ys.var() - 1.0 / 12.0) < 5e-4


def test_levy_exponent_no_jumps_closed_form():
    b, c = 0.05, 0.04
    trip = bs_model(b, c).triplet
    for u in (0.0, 0.7, -1.3, 2.0 + 0.5j):
        expect = 1j * u * b - 0.5 * c * u * u
        got = levy_exponent(trip, [u])
        assert got == pytest.approx(expect, abs=1e-14)
    assert laplace_exponent(trip, [1.0]) == pytest.approx(b + 0.5 * c, abs=1e-14)


def test_levy_exponent_atoms_closed_form():
    b, c = 0.03, 0.02
    ys, ws = [-0.2, 1.5], [1.0, 0.5]
    trip = LevyTriplet([b], [[c]], AtomicJumps([[y] for y in ys], ws))
    for u in (0.9, -2.0, 1.1 - 0.3j):
        jump = sum(w * (np.exp(1j * u * y) - 1.0 - 1j * u * (y if abs(y) <= 1 else 0.0))
                   for y, w in zip(ys, ws))
        expect = 1j * u * b - 0.5 * c * u * u + jump
        assert levy_exponent(trip, [u]) == pytest.approx(expect, abs=1e-12)


def test_levy_exponent_density_vs_quadrature():
    # independent quadrature oracle for the gaussian jump integral
    trip = merton_model().triplet
    lam, mu, sd = 1.0, -0.1, 0.15
    u = 1.4

    def integrand(y, part):
        val = np.exp(1j * u * y) - 1.0 - 1j * u * np.where(np.abs(y) <= 1.0, y, 0.0)
        return part(val) * lam * stats.norm.pdf(y, mu, sd)

    lo, hi = mu - 12 * sd, mu + 12 * sd
    re, _ = integrate.quad(integrand, lo, hi, args=(np.real,), limit=200)
    im, _ = integrate.quad(integrand, lo, hi, args=(np.imag,), limit=200)
    expect = 1j * u * 0.01 - 0.5 * 0.04 * u * u + re + 1j * im
    assert levy_exponent(trip, [u]) == pytest.approx(expect, abs=1e-8)


def test_laplace_exponent_consistency():
    trip = merton_model().triplet
    for w in (-1.0, 0.5, 1.0, 2.0):
        val = levy_exponent(trip, [-1j * w])
        assert abs(val.imag) < 1e-12
        assert laplace_exponent(trip, [w]) == pytest.approx(val.real, abs=1e-14)
    assert laplace_exponent(trip, [0.0]) == pytest.approx(0.0, abs=1e-14)


def test_divergent_exponential_moment_detected():
    trip = power_tail_model().triplet
    with pytest.raises(DivergentMomentError):
        laplace_exponent(trip, [1.0])
    # negative w decays on the right tail and stays integrable
    val = laplace_exponent(trip, [-0.5])
    assert math.isfinite(val)


def test_linear_drift_values():
    trip = atom_model(b=0.01, y=-0.2, w=1.0).triplet
    assert linear_drift(trip)[0] == pytest.approx(0.01 + 0.2, abs=1e-14)
    # atoms beyond the truncation radius do not contribute to h
    trip = LevyTriplet([0.01], [[0.0]], AtomicJumps([[1.5]], [1.0]))
    assert linear_drift(trip)[0] == pytest.approx(0.01, abs=1e-14)

    trip = merton_model().triplet
    mu, sd = -0.1, 0.15
    a, bnd = (-1.0 - mu) / sd, (1.0 - mu) / sd
    inside = mu * (stats.norm.cdf(bnd) - stats.norm.cdf(a)) - sd * (
        stats.norm.pdf(bnd) - stats.norm.pdf(a))
    assert linear_drift(trip)[0] == pytest.approx(0.01 - inside, abs=1e-9)


def test_psd_factor_reconstructs():
    c = np.array([[0.04, 0.01], [0.01, 0.09]])
    L = psd_factor(c)
    assert np.allclose(L @ L.T, c, atol=1e-14)
    assert np.allclose(psd_factor(np.zeros((1, 1))), 0.0)


def test_validate_model_accepts_bundled_shapes():
    for model in (bs_model(), merton_model(), atom_model(), power_tail_model()):
        diag = validate_model(model)
        assert diag.ok, diag.issues


def test_validate_model_flags_bad_inputs():
    bad = MarketModel(LevyTriplet([0.05], [[-0.04]], NoJumps(1)), [1.0], 1.0)
    diag = validate_model(bad)
    assert any("gauss_c not PSD" in s for s in diag.issues)

    bad = MarketModel(LevyTriplet([0.0, 0.0], [[0.04, 0.2], [0.0, 0.04]], NoJumps(2)),
                      [1.0, 1.0], 1.0)
    assert any("symmetric" in s for s in validate_model(bad).issues)

    assert not validate_model(bs_model(spot=-1.0)).ok
    assert not validate_model(bs_model(horizon=0.0)).ok
    bad = MarketModel(bs_model().triplet, [1.0], 1.0, rate=0.02)
    assert any("rate_r" in s for s in validate_model(bad).issues)


def test_validate_model_flags_divergent_small_jumps():
    # nu(dy) = y^-3 dy on (0, 1): int y^2 nu diverges logarithmically
    spike = DensityJumps(lambda y: np.asarray(y, dtype=float) ** -3.0,
                         [(1e-12, 1.0)], effective_range=(1e-12, 1.0))
    model = MarketModel(LevyTriplet([0.0], [[0.04]], spike), [1.0], 1.0)
    diag = validate_model(model)
    assert any("small-jump" in s for s in diag.issues)


def test_validate_model_flags_negative_density():
    dip = DensityJumps(lambda y: np.asarray(y, dtype=float) - 0.5, [(0.1, 1.0)])
    model = MarketModel(LevyTriplet([0.0], [[0.04]], dip), [1.0], 1.0)
    assert any("negative" in s for s in validate_model(model).issues)


def test_truncate_small_jumps_atoms():
    trip = LevyTriplet([0.01], [[0.04]],
                       AtomicJumps([[0.0005], [-0.2]], [2.0, 1.0]))
    out = truncate_small_jumps(trip, eps=1e-3)
    assert isinstance(out.jumps, AtomicJumps)
    assert out.jumps.ys.ravel().tolist() == [-0.2]
    # dropped variance 2 * 0.0005^2 folds into c
    assert out.c[0, 0] == pytest.approx(0.04 + 2 * 0.0005**2, abs=1e-18)
    assert out.b[0] == pytest.approx(0.01, abs=0)

    out = truncate_small_jumps(trip, eps=1.0)
    assert out.jumps.is_empty
    assert out.c[0, 0] == pytest.approx(0.04 + 2 * 0.0005**2 + 0.04, abs=1e-15)


def test_truncate_small_jumps_density():
    trip = merton_model().triplet
    eps = 0.05
    out = truncate_small_jumps(trip, eps=eps)
    mass_tail = stats.norm.cdf(-eps, -0.1, 0.15) + stats.norm.sf(eps, -0.1, 0.15)
    assert out.jumps.total_mass() == pytest.approx(mass_tail, rel=1e-6)
    var_small, _ = integrate.quad(lambda y: y * y * stats.norm.pdf(y, -0.1, 0.15),
                                  -eps, eps)
    assert out.c[0, 0] == pytest.approx(0.04 + var_small, rel=1e-6)
    with pytest.raises(ConfigError):
        truncate_small_jumps(trip, eps=0.0)


def test_triplet_shape_validation():
    with pytest.raises(ConfigError):
        LevyTriplet([0.0, 0.0], [[0.04]], NoJumps(2))
    with pytest.raises(ConfigError):
        LevyTriplet([0.0], [[0.04]], AtomicJumps([[0.1, 0.2]], [1.0]))
    with pytest.raises(ConfigError):
        MarketModel(LevyTriplet([0.0], [[0.04]], NoJumps(1)), [1.0, 2.0], 1.0)
