"""Density process of the measure change and exact path simulation.

For a Girsanov pair (beta, Y) the density process Z is the Doleans-Dade
exponential of N_t = beta . X^c_t + int (Y(x) - 1) d(mu - nu), which gives
the pathwise product formula

    Z_t = exp( beta . X^c_t - t*( (1/2) beta' c beta + int (Y-1) dnu ) )
          * prod_{s <= t} Y(dX_s),

so ln Z is itself a univariate Levy process.  With v = beta' c beta its
exponential moment curves are

    kappa_P(theta) = (v/2) (theta^2 - theta) + int ( Y^theta - 1 - theta (Y-1) ) dnu
    kappa_Q(theta) = (v/2) (theta^2 + theta) + int ( Y^{theta+1} - Y - theta (Y-1) ) dnu

with E_P[Z_s^theta] = exp(s kappa_P(theta)), E_Q[Z_s^theta] = exp(s kappa_Q(theta)),
hence kappa_P(0) = kappa_P(1) = kappa_Q(0) = kappa_Q(-1) = 0.

The conditional kernels used by the portfolio formulas close under the
common divergence family (f'' = a x^gamma, kappa = kappa_Q(gamma+1)):

    xi_t(x)   = E_Q[ f''(x Z_{T-t}) Z_{T-t} ]            = a x^gamma e^{(T-t) kappa}
    H_t(x, y) = E_Q[ f'(x Z_{T-t} Y(y)) - f'(x Z_{T-t}) ]
              = a x^{gamma+1} (Y(y)^{gamma+1} - 1) e^{(T-t) kappa} / (gamma+1)
                (gamma != -1;  a * ln Y(y) when gamma = -1).

Simulation is exact for finite-activity models: Brownian increments and
linear drift on a regular grid, compound-Poisson jumps at their exact times
inserted as extra grid nodes, pre-jump values stored alongside so that
predictable integrands can be evaluated at left limits.  Path i is driven by
SeedSequence(seed, spawn_key=(i,)) and is therefore reproducible
independently of the number of paths requested.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special

from . import divergence as dv
from .errors import ConfigError, DivergentMomentError, SolverError
from .levy_core import (
    AtomicJumps,
    DensityJumps,
    LevyTriplet,
    MarketModel,
    NoJumps,
    linear_drift,
    psd_factor,
)
from .measure_solver import GirsanovPair, q_triplet, tilt_jump_measure

__all__ = [
    "MomentCurve",
    "SimulatedPath",
    "TerminalSample",
    "log_density_triplet",
    "simulate_paths",
    "sample_terminals",
    "subgrid_indices",
    "xi_closed_form",
    "h_closed_form",
    "xi_monte_carlo",
    "trivial_pair",
]


def trivial_pair(spec: dv.DivergenceSpec, dim: int = 1) -> GirsanovPair:
    """The identity measure change: beta = 0, Y == 1, Z == 1."""
    return GirsanovPair(beta=np.zeros(dim), spec=spec, residual_norm=math.nan)


class MomentCurve:
    """Exponential moment curves theta -> kappa(theta) of ln Z under P and Q.

    kappa returns +inf when the corresponding moment integral diverges
    (detected by the doubling-window tail test); moment_rate is the strict
    variant that raises DivergentMomentError instead.
    """

    def __init__(self, model: MarketModel, pair: GirsanovPair, tol: float = 1e-10):
        self.model = model
        self.pair = pair
        self.tol = tol
        t = model.triplet
        self.v = float(pair.beta @ t.c @ pair.beta)
        self._measure = t.jumps
        self._cache: dict = {}

    def _jump_term(self, theta: float, under: str) -> float:
        m = self._measure
        if m.is_empty:
            return 0.0
        Y = lambda y: self.pair.Y(y)
        if under == "P":
            fn = lambda y: Y(y) ** theta - 1.0 - theta * (Y(y) - 1.0)
        else:
            fn = lambda y: Y(y) ** (theta + 1.0) - Y(y) - theta * (Y(y) - 1.0)
        if not m.tail_converges(fn):
            return math.inf
        return m.integrate(fn, self.tol)

    def kappa(self, theta: float, under: str = "Q") -> float:
        if under not in ("P", "Q"):
            raise ValueError("under must be 'P' or 'Q'")
        key = (round(float(theta), 14), under)
        if key not in self._cache:
            theta = float(theta)
            quad = 0.5 * self.v * (theta * theta + (theta if under == "Q" else -theta))
            jump = self._jump_term(theta, under)
            self._cache[key] = quad + jump
        return self._cache[key]

    def kappa_q(self, theta: float) -> float:
        return self.kappa(theta, "Q")

    def kappa_p(self, theta: float) -> float:
        return self.kappa(theta, "P")

    def is_finite(self, theta: float, under: str = "Q") -> bool:
        return math.isfinite(self.kappa(theta, under))

    def moment_rate(self, theta: float, under: str = "Q") -> float:
        val = self.kappa(theta, under)
        if not math.isfinite(val):
            raise DivergentMomentError(
                f"E[Z^theta] diverges under {under} at theta = {theta}"
            )
        return val

    def mean_rate_q(self) -> float:
        """m = d/dtheta kappa_Q at 0: the Q-mean of ln Z_t is m * t."""
        m = self._measure
        jump = 0.0
        if not m.is_empty:
            Y = lambda y: self.pair.Y(y)
            # xlogy keeps Y ln Y = 0 where Y underflows to zero
            fn = lambda y: special.xlogy(Y(y), Y(y)) - Y(y) + 1.0
            if not m.tail_converges(fn):
                raise DivergentMomentError("E_Q[ln Z] diverges: int |Y ln Y - Y + 1| dnu infinite")
            jump = m.integrate(fn, self.tol)
        return 0.5 * self.v + jump


def _lny_pushforward(measure, pair: GirsanovPair, under: str):
    """Pushforward of nu (or Y nu) under y -> ln Y(y), for d = 1 densities and atoms."""
    spec = pair.spec
    if measure.is_empty:
        return NoJumps(1)
    if isinstance(measure, AtomicJumps):
        z = np.log(pair.Y(measure.ys))
        w = measure.weights if under == "P" else measure.weights * pair.Y(measure.ys)
        keep = z != 0.0
        if not np.any(keep):
            return NoJumps(1)
        return AtomicJumps(z[keep].reshape(-1, 1), w[keep])
    if not isinstance(measure, DensityJumps):
        raise SolverError(f"cannot push forward measure of type {type(measure).__name__}")
    beta = float(pair.beta[0])
    if beta == 0.0:
        return NoJumps(1)
    g = spec.gamma
    a = spec.a

    def z_of_y(y: np.ndarray) -> np.ndarray:
        return np.log(pair.Y(np.asarray(y, dtype=float).reshape(-1, 1)))

    def y_of_z(z: np.ndarray) -> np.ndarray:
        z = np.asarray(z, dtype=float)
        if g == -1.0:
            return np.log1p(a * z / beta)
        return np.log1p((a / ((g + 1.0) * beta)) * np.expm1((g + 1.0) * z))

    def dz_dy(y: np.ndarray) -> np.ndarray:
        y = np.asarray(y, dtype=float)
        Y = pair.Y(y.reshape(-1, 1))
        return beta * np.exp(y) / (a * Y ** (g + 1.0))

    base_pdf = measure.pdf

    def pdf_z(z):
        z = np.asarray(z, dtype=float).ravel()
        y = y_of_z(z)
        dens = np.asarray(base_pdf(y)) / np.abs(dz_dy(y))
        if under == "Q":
            dens = dens * pair.Y(y.reshape(-1, 1))
        return dens

    def map_end(y_end: float) -> float:
        y_end = min(max(y_end, -700.0), 700.0)
        return float(z_of_y(np.array([y_end]))[0])

    pieces = [tuple(sorted((map_end(lo), map_end(hi)))) for lo, hi in measure.pieces]
    pieces.sort()
    rng_lo, rng_hi = sorted(map_end(e) for e in measure.effective_range)
    return DensityJumps(
        pdf_z, pieces, effective_range=(rng_lo, rng_hi), label=f"lnY#{measure.label}"
    )


def log_density_triplet(model: MarketModel, pair: GirsanovPair, under: str = "P") -> LevyTriplet:
    """Characteristic triplet of ln Z as a univariate Levy process.

    Under P: drift -v/2 - int (Y - 1 - h(ln Y)) dnu, Gaussian coefficient v,
    jumps = pushforward of nu under ln Y.  Under Q the Gaussian shift and the
    tilt move the drift to v/2 - int (Y-1) dnu + int h(ln Y) Y dnu and the
    jumps to the pushforward of Y nu.  Mass where Y = 1 carries zero jumps
    and is dropped.
    """
    if under not in ("P", "Q"):
        raise ValueError("under must be 'P' or 'Q'")
    t = model.triplet
    v = float(pair.beta @ t.c @ pair.beta)
    m = t.jumps
    drift = -0.5 * v if under == "P" else 0.5 * v
    if not m.is_empty:
        def h_of_lny(y):
            z = np.log(pair.Y(y))
            return np.where(np.abs(z) <= 1.0, z, 0.0)

        if under == "P":
            drift -= m.integrate(lambda y: pair.Y(y) - 1.0 - h_of_lny(y))
        else:
            drift -= m.integrate(lambda y: pair.Y(y) - 1.0)
            drift += m.integrate(lambda y: h_of_lny(y) * pair.Y(y))
    nu_z = _lny_pushforward(m, pair, under)
    return LevyTriplet(np.array([drift]), np.array([[v]]), nu_z)


# --------------------------------------------------------------------------
# closed-form conditional kernels
# --------------------------------------------------------------------------


def xi_closed_form(spec: dv.DivergenceSpec, curve: MomentCurve, t, x, T: float):
    """xi_t(x) = E_Q[f''(x Z_{T-t}) Z_{T-t}] = a x^gamma exp((T-t) kappa_Q(gamma+1)).

    t and x may be arrays (broadcast together).  Raises DivergentMomentError
    when the moment rate at gamma+1 is infinite.
    """
    kappa_plus = curve.moment_rate(spec.gamma + 1.0, "Q")
    x = np.asarray(x, dtype=float)
    t = np.asarray(t, dtype=float)
    val = spec.a * x ** spec.gamma * np.exp((T - t) * kappa_plus)
    return val if val.shape else float(val)


def h_closed_form(spec: dv.DivergenceSpec, pair: GirsanovPair, curve: MomentCurve,
                  t: float, x: float, y, T: float) -> np.ndarray:
    """H_t(x, y) = E_Q[f'(x Z_{T-t} Y(y)) - f'(x Z_{T-t})] for jump sizes y.

    y has shape (m, d); returns shape (m,).  Equals
    a x^{gamma+1} (Y(y)^{gamma+1} - 1) e^{(T-t) kappa}/(gamma+1) for
    gamma != -1 and a ln Y(y) in the exponential branch.
    """
    Y = pair.Y(y)
    g = spec.gamma
    if g == -1.0:
        return spec.a * np.log(Y)
    kappa_plus = curve.moment_rate(g + 1.0, "Q")
    return (
        spec.a
        * x ** (g + 1.0)
        * (Y ** (g + 1.0) - 1.0)
        * math.exp((T - t) * kappa_plus)
        / (g + 1.0)
    )


def xi_monte_carlo(model: MarketModel, pair: GirsanovPair, spec: dv.DivergenceSpec,
                   T: float, t: float, x: float, n: int = 50_000, seed: int = 0):
    """Monte Carlo oracle for xi_t(x) = E_Q[f''(x Z_{T-t}) Z_{T-t}]; returns (mean, se)."""
    ts = sample_terminals(model, pair, n, seed, under="Q", horizon=T - t)
    vals = np.asarray(dv.fsecond(spec, x * ts.ZT)) * ts.ZT
    return float(vals.mean()), float(vals.std(ddof=1) / math.sqrt(n))


# --------------------------------------------------------------------------
# simulation
# --------------------------------------------------------------------------


@dataclass
class SimulatedPath:
    """One jump-augmented path of (X, S, Z) with pre-jump values at jump nodes.

    Arrays are indexed by grid node; at a jump node the main arrays hold the
    post-jump (cadlag) values and the *_pre arrays the left limits, which
    is what predictable strategies must be fed.
    """

    t: np.ndarray
    X: np.ndarray
    Xc: np.ndarray
    S: np.ndarray
    Z: np.ndarray
    X_pre: np.ndarray
    S_pre: np.ndarray
    Z_pre: np.ndarray
    jump_nodes: np.ndarray
    jump_sizes: np.ndarray
    is_regular: np.ndarray
    regular_index: np.ndarray
    under: str
    path_index: int
    seed: int = 0

    @property
    def n_nodes(self) -> int:
        return self.t.size

    def regular_values(self, arr: np.ndarray) -> np.ndarray:
        """Values of a per-node array at the regular grid times, in time order."""
        sel = np.where(self.is_regular)[0]
        order = np.argsort(self.regular_index[sel])
        return np.asarray(arr)[sel[order]]


@dataclass
class TerminalSample:
    """Vectorized horizon-h draws of (X^c_h, X_h, Z_h) plus the flattened jumps."""

    horizon: float
    XcT: np.ndarray
    XT: np.ndarray
    ZT: np.ndarray
    jump_sizes: np.ndarray
    jump_path: np.ndarray
    under: str
    seed: int

    @property
    def n(self) -> int:
        return self.ZT.size


def _sim_setup(model: MarketModel, pair: GirsanovPair | None, under: str):
    """Per-measure simulation ingredients (drift, factor, jump law, ln Z drift)."""
    t = model.triplet
    if under not in ("P", "Q"):
        raise ValueError("under must be 'P' or 'Q'")
    if pair is None:
        pair = trivial_pair(dv.DivergenceSpec.log(), t.dim)
    L = psd_factor(t.c)
    b_lin = linear_drift(t)
    v = float(pair.beta @ t.c @ pair.beta)
    trivial = not np.any(pair.beta != 0.0)
    if t.jumps.is_empty:
        i1 = 0.0
    elif trivial:
        i1 = 0.0
    else:
        i1 = t.jumps.integrate(lambda y: pair.Y(y) - 1.0)
    if under == "Q":
        b_lin = b_lin + t.c @ pair.beta
        measure = tilt_jump_measure(t.jumps, pair)
        lnz_drift = 0.5 * v - i1
    else:
        measure = t.jumps
        lnz_drift = -0.5 * v - i1
    lam = measure.total_mass() if not measure.is_empty else 0.0
    return pair, L, b_lin, measure, lam, lnz_drift


def _lny(pair: GirsanovPair, sizes: np.ndarray) -> np.ndarray:
    if sizes.shape[0] == 0:
        return np.zeros(0)
    return np.log(pair.Y(sizes))


def sample_terminals(
    model: MarketModel,
    pair: GirsanovPair | None,
    n: int,
    seed: int = 0,
    under: str = "P",
    horizon: float | None = None,
) -> TerminalSample:
    """Draw n terminal values of (X^c, X, Z) at the given horizon.

    Draws are deterministic for a fixed (n, seed) pair: normals first, then
    jump counts, then jump sizes, all from one seeded generator.
    """
    pair, L, b_lin, measure, lam, lnz_drift = _sim_setup(model, pair, under)
    h = model.horizon if horizon is None else float(horizon)
    d = model.dim
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    Xc = rng.standard_normal((n, d)) * math.sqrt(h) @ L.T
    if lam > 0.0:
        counts = rng.poisson(lam * h, size=n)
        K = int(counts.sum())
        sizes = measure.sample(rng, K) if K else np.zeros((0, d))
        jump_path = np.repeat(np.arange(n), counts)
        jump_sum = np.zeros((n, d))
        np.add.at(jump_sum, jump_path, sizes)
        lny_sum = np.zeros(n)
        np.add.at(lny_sum, jump_path, _lny(pair, sizes))
    else:
        sizes = np.zeros((0, d))
        jump_path = np.zeros(0, dtype=int)
        jump_sum = np.zeros((n, d))
        lny_sum = np.zeros(n)
    XT = b_lin * h + Xc + jump_sum
    lnZ = Xc @ pair.beta + lnz_drift * h + lny_sum
    return TerminalSample(
        horizon=h,
        XcT=Xc,
        XT=XT,
        ZT=np.exp(lnZ),
        jump_sizes=sizes,
        jump_path=jump_path,
        under=under,
        seed=seed,
    )


def simulate_paths(
    model: MarketModel,
    pair: GirsanovPair | None,
    n_paths: int,
    n_steps: int,
    seed: int = 0,
    under: str = "P",
    horizon: float | None = None,
) -> list[SimulatedPath]:
    """Simulate jump-augmented paths of (X, S, Z) on [0, horizon].

    The grid is the regular n_steps grid with every compound-Poisson jump
    time inserted as an extra node; Brownian increments bridge consecutive
    nodes exactly, and Z follows the pathwise product formula.  Path i is
    driven by SeedSequence(seed, spawn_key=(i,)).
    """
    pair, L, b_lin, measure, lam, lnz_drift = _sim_setup(model, pair, under)
    T = model.horizon if horizon is None else float(horizon)
    d = model.dim
    reg = np.linspace(0.0, T, n_steps + 1)
    out: list[SimulatedPath] = []
    for ipath in range(n_paths):
        rng = np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(ipath,)))
        if lam > 0.0:
            n_jumps = int(rng.poisson(lam * T))
            jt = np.sort(rng.random(n_jumps) * T)
            sizes = measure.sample(rng, n_jumps) if n_jumps else np.zeros((0, d))
        else:
            jt = np.zeros(0)
            sizes = np.zeros((0, d))
        times = np.concatenate([reg, jt])
        regidx = np.concatenate([np.arange(n_steps + 1), np.full(jt.size, -1, dtype=int)])
        order = np.argsort(times, kind="stable")
        times = times[order]
        regidx = regidx[order]
        m = times.size
        jump_nodes = np.where(regidx < 0)[0]
        dt = np.diff(times)
        winc = rng.standard_normal((m - 1, d)) * np.sqrt(dt)[:, None] @ L.T
        Xc = np.vstack([np.zeros((1, d)), np.cumsum(winc, axis=0)])
        jump_cum = np.zeros((m, d))
        lny_cum = np.zeros(m)
        if jump_nodes.size:
            incr = np.zeros((m, d))
            incr[jump_nodes] = sizes
            jump_cum = np.cumsum(incr, axis=0)
            lincr = np.zeros(m)
            lincr[jump_nodes] = _lny(pair, sizes)
            lny_cum = np.cumsum(lincr)
        X = Xc + b_lin * times[:, None] + jump_cum
        X_pre = X.copy()
        if jump_nodes.size:
            X_pre[jump_nodes] -= sizes
        lnZ = Xc @ pair.beta + lnz_drift * times + lny_cum
        lnZ_pre = lnZ.copy()
        if jump_nodes.size:
            lnZ_pre[jump_nodes] -= _lny(pair, sizes)
        S = model.spot * np.exp(X)
        S_pre = model.spot * np.exp(X_pre)
        out.append(
            SimulatedPath(
                t=times,
                X=X,
                Xc=Xc,
                S=S,
                Z=np.exp(lnZ),
                X_pre=X_pre,
                S_pre=S_pre,
                Z_pre=np.exp(lnZ_pre),
                jump_nodes=jump_nodes,
                jump_sizes=sizes,
                is_regular=regidx >= 0,
                regular_index=regidx,
                under=under,
                path_index=ipath,
                seed=seed,
            )
        )
    return out


def subgrid_indices(path: SimulatedPath, stride: int) -> np.ndarray:
    """Node indices of the coarsened grid: every stride-th regular node plus all jumps.

    Requires stride to divide the regular step count so that the horizon node
    survives coarsening.
    """
    n_reg = int(path.regular_index.max())
    if n_reg % stride != 0:
        raise ConfigError(f"stride {stride} does not divide the regular grid ({n_reg} steps)")
    keep = (path.is_regular & (path.regular_index % stride == 0)) | (path.regular_index < 0)
    return np.where(keep)[0]
