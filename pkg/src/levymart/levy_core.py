"""Levy triplets, jump measures and market models.

A d-dimensional Levy process X is described by its characteristic triplet
(b, c, nu) relative to the fixed truncation function h(y) = y * 1{|y| <= 1}
(Euclidean norm).  The characteristic exponent is

    psi(u) = i<u,b> - (1/2) u' c u + int (e^{i<u,y>} - 1 - i<u,h(y)>) nu(dy)

with E[exp(i<u, X_t>)] = exp(t * psi(u)), and the Laplace exponent is
psi_L(w) = psi(-i w) wherever the corresponding exponential moment is finite.

Jump measures come in three kinds: empty, finite atom lists (any dimension)
and one-dimensional densities on a union of intervals.  Densities carry an
effective finite range used for tabulated sampling and probing; integrals
against them run adaptive Gauss-Kronrod quadrature piecewise, splitting at
the truncation kinks y = -1, 0, 1, and infinite tails are screened with a
doubling-window Cauchy test before any improper integral is attempted.
"""

from __future__ import annotations

import abc
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate as _sint

from .errors import ConfigError, DivergentMomentError, QuadratureError

__all__ = [
    "SupportInfo",
    "JumpMeasure",
    "NoJumps",
    "AtomicJumps",
    "DensityJumps",
    "LevyTriplet",
    "MarketModel",
    "ModelDiagnostics",
    "truncation_h",
    "levy_exponent",
    "laplace_exponent",
    "validate_model",
    "truncate_small_jumps",
    "linear_drift",
    "psd_factor",
]

_QUAD_LIMIT = 200


def truncation_h(y: np.ndarray) -> np.ndarray:
    """h(y) = y * 1{|y| <= 1} applied row-wise to an (m, d) array."""
    y = np.atleast_2d(np.asarray(y, dtype=float))
    keep = np.linalg.norm(y, axis=1) <= 1.0
    return y * keep[:, None]


@dataclass(frozen=True)
class SupportInfo:
    """Box hull of the jump support plus topology flags."""

    lower: np.ndarray
    upper: np.ndarray
    interior_nonempty: bool
    closure_contains_zero: bool


class JumpMeasure(abc.ABC):
    """A Levy measure on R^d minus the origin."""

    dim: int

    @property
    def is_empty(self) -> bool:
        return False

    @abc.abstractmethod
    def total_mass(self) -> float:
        """nu(R^d \\ {0}); finite for every measure representable here."""

    @abc.abstractmethod
    def integrate(self, fn, tol: float = 1e-10) -> float:
        """int fn(y) nu(dy) for fn mapping an (m, d) array to an (m,) array."""

    @abc.abstractmethod
    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        """Draw n jump sizes from nu / nu(R^d), shape (n, d)."""

    @abc.abstractmethod
    def probe_points(self, n: int = 1000) -> np.ndarray:
        """Representative support points, shape (k, d), for pointwise condition checks."""

    @abc.abstractmethod
    def support_info(self) -> SupportInfo:
        ...

    def tail_converges(self, weight_fn, tol: float = 1e-10) -> bool:
        """Whether int_{|y|>=1} weight_fn(y) nu(dy) converges absolutely.

        Trivially true for atoms and compactly supported densities.
        """
        return True


class NoJumps(JumpMeasure):
    """The empty jump measure."""

    def __init__(self, dim: int = 1):
        self.dim = int(dim)

    @property
    def is_empty(self) -> bool:
        return True

    def total_mass(self) -> float:
        return 0.0

    def integrate(self, fn, tol: float = 1e-10) -> float:
        return 0.0

    def sample(self, rng, n: int) -> np.ndarray:
        return np.zeros((0, self.dim))

    def probe_points(self, n: int = 1000) -> np.ndarray:
        return np.zeros((0, self.dim))

    def support_info(self) -> SupportInfo:
        z = np.zeros(self.dim)
        return SupportInfo(z, z, False, False)

    def __repr__(self):
        return f"NoJumps(dim={self.dim})"


class AtomicJumps(JumpMeasure):
    """Finitely many atoms: nu = sum_j weights[j] * delta_{ys[j]}."""

    def __init__(self, ys, weights):
        ys = np.atleast_2d(np.asarray(ys, dtype=float))
        weights = np.asarray(weights, dtype=float).ravel()
        if ys.shape[0] != weights.shape[0]:
            raise ConfigError("atom locations and weights must have equal length")
        if not np.all(np.isfinite(ys)) or not np.all(np.isfinite(weights)):
            raise ConfigError("atom locations and weights must be finite")
        if np.any(weights <= 0.0):
            raise ConfigError("atom weights must be strictly positive")
        if np.any(np.all(ys == 0.0, axis=1)):
            raise ConfigError("atoms must avoid the origin")
        self.ys = ys
        self.weights = weights
        self.dim = ys.shape[1]

    def total_mass(self) -> float:
        return float(self.weights.sum())

    def integrate(self, fn, tol: float = 1e-10) -> float:
        vals = np.asarray(fn(self.ys), dtype=float).ravel()
        return float(self.weights @ vals)

    def sample(self, rng, n: int) -> np.ndarray:
        idx = rng.choice(self.ys.shape[0], size=n, p=self.weights / self.total_mass())
        return self.ys[idx]

    def probe_points(self, n: int = 1000) -> np.ndarray:
        return self.ys.copy()

    def support_info(self) -> SupportInfo:
        return SupportInfo(self.ys.min(axis=0), self.ys.max(axis=0), False, False)

    def __repr__(self):
        return f"AtomicJumps(k={len(self.weights)}, dim={self.dim}, mass={self.total_mass():g})"


def _cauchy_windows(piece_quad, start: float, direction: float, max_windows: int = 18):
    """Doubling-window Cauchy test for an improper tail integral.

    piece_quad(a, b) returns int_a^b |integrand|.  Windows are
    [start*2^k, start*2^{k+1}] (direction +1) or the mirrored negative
    windows (direction -1).  Returns True when the window masses decay
    geometrically or vanish, False when they fail to decrease.
    """
    vals = []
    for k in range(max_windows):
        a = start * 2.0**k
        b = start * 2.0 ** (k + 1)
        lo, hi = (a, b) if direction > 0 else (-b, -a)
        v = abs(piece_quad(lo, hi))
        if not math.isfinite(v):
            return False
        vals.append(v)
        if v < 1e-15:
            return True
        if len(vals) >= 4:
            last = vals[-4:]
            if all(last[i + 1] >= last[i] * 0.999 for i in range(3)) and last[-1] > 1e-14:
                return False
            if all(last[i + 1] <= last[i] * 0.97 for i in range(3)):
                return True
    return vals[-1] < 0.5 * vals[0]


class DensityJumps(JumpMeasure):
    """One-dimensional absolutely continuous jump measure.

    Parameters
    ----------
    pdf : callable
        Vectorized density of nu with respect to Lebesgue measure; needs no
        normalization (its integral is the jump intensity).
    pieces : sequence of (lo, hi)
        Disjoint increasing intervals carrying the measure; outermost
        endpoints may be infinite.
    effective_range : (float, float)
        Finite interval outside which the measure's mass is negligible
        (< ~1e-15 of the total); used for tabulated sampling and probing.
        Required when the support is unbounded.
    sampler : callable or None
        Optional exact sampler ``sampler(rng, n) -> (n,)`` for nu/total_mass.
        When absent, an inverse-CDF table on the effective range is used.
    label : str
        Human-readable tag for reports.
    """

    _TABLE_SIZE = 4097

    def __init__(self, pdf, pieces, effective_range=None, sampler=None, label="density"):
        pieces = [(float(lo), float(hi)) for lo, hi in pieces]
        if not pieces:
            raise ConfigError("density jump measure needs at least one support interval")
        for lo, hi in pieces:
            if not lo < hi:
                raise ConfigError(f"empty support interval ({lo}, {hi})")
        for (_, h0), (l1, _) in zip(pieces, pieces[1:]):
            if h0 > l1:
                raise ConfigError("support intervals must be disjoint and increasing")
        self.pdf = pdf
        self.pieces = pieces
        self.dim = 1
        self.sampler = sampler
        self.label = label
        if effective_range is None:
            lo, hi = pieces[0][0], pieces[-1][1]
            if not (math.isfinite(lo) and math.isfinite(hi)):
                raise ConfigError("unbounded density support requires an effective_range")
            effective_range = (lo, hi)
        self.effective_range = (float(effective_range[0]), float(effective_range[1]))
        self._cache: dict = {}

    # -- quadrature -------------------------------------------------------

    def _subpieces(self, clip_to_range: bool = False):
        """Support pieces split at the truncation kinks -1, 0, 1."""
        out = []
        rlo, rhi = self.effective_range
        for lo, hi in self.pieces:
            if clip_to_range:
                lo, hi = max(lo, rlo), min(hi, rhi)
                if lo >= hi:
                    continue
            cuts = [p for p in (-1.0, 0.0, 1.0) if lo < p < hi]
            edges = [lo] + cuts + [hi]
            out.extend(zip(edges[:-1], edges[1:]))
        return out

    def _quad(self, g, lo: float, hi: float, tol: float):
        with warnings.catch_warnings():
            warnings.simplefilter("error", _sint.IntegrationWarning)
            try:
                val, err = _sint.quad(g, lo, hi, epsabs=tol, epsrel=1e-10, limit=_QUAD_LIMIT)
            except _sint.IntegrationWarning as exc:
                raise QuadratureError(
                    f"quadrature on ({lo}, {hi}) did not reach tolerance {tol}: {exc}"
                ) from None
        return val, err

    def integrate(self, fn, tol: float = 1e-10) -> float:
        # evaluate the density first: off the numerical support the product
        # is zero regardless of fn, which may overflow at extreme arguments
        def g(y: float) -> float:
            dens = float(self.pdf(np.array([y]))[0])
            if dens == 0.0:
                return 0.0
            return float(np.asarray(fn(np.array([[y]]))).ravel()[0]) * dens

        total, errsum = 0.0, 0.0
        for lo, hi in self._subpieces():
            val, err = self._quad(g, lo, hi, tol)
            total += val
            errsum += err
        if errsum > max(1e3 * tol, 1e-8 * abs(total)):
            raise QuadratureError(
                f"accumulated quadrature error {errsum:.2e} exceeds tolerance budget"
            )
        return total

    def total_mass(self) -> float:
        if "mass" not in self._cache:
            self._cache["mass"] = self.integrate(lambda y: np.ones(y.shape[0]))
        return self._cache["mass"]

    def tail_converges(self, weight_fn, tol: float = 1e-10) -> bool:
        def piece_quad(lo: float, hi: float) -> float:
            def g(y: float) -> float:
                dens = float(self.pdf(np.array([y]))[0])
                if dens == 0.0:
                    return 0.0
                return abs(
                    float(np.asarray(weight_fn(np.array([[y]]))).ravel()[0])
                ) * dens

            try:
                val, _ = _sint.quad(g, lo, hi, epsabs=1e-12, epsrel=1e-9, limit=_QUAD_LIMIT)
            except Exception:
                return math.inf
            return val

        lo, hi = self.pieces[0][0], self.pieces[-1][1]
        ok = True
        if not math.isfinite(hi):
            ok = ok and _cauchy_windows(piece_quad, 1.0, +1.0)
        if not math.isfinite(lo):
            ok = ok and _cauchy_windows(piece_quad, 1.0, -1.0)
        return ok

    def small_jumps_square_integrable(self) -> bool:
        """Doubling-shell test of int_{|y|<1} y^2 nu(dy) near the origin."""

        def shell(lo: float, hi: float) -> float:
            g = lambda y: y * y * float(self.pdf(np.array([y]))[0])
            try:
                val, _ = _sint.quad(g, lo, hi, epsabs=1e-14, epsrel=1e-9, limit=_QUAD_LIMIT)
            except Exception:
                return math.inf
            return val

        for side in (+1.0, -1.0):
            vals = []
            for k in range(1, 40):
                a, b = 2.0 ** (-k - 1), 2.0**-k
                lo, hi = (a, b) if side > 0 else (-b, -a)
                if hi <= self.pieces[0][0] or lo >= self.pieces[-1][1]:
                    break
                v = shell(lo, hi)
                if not math.isfinite(v):
                    return False
                vals.append(v)
                if v < 1e-16:
                    break
                if len(vals) >= 4:
                    last = vals[-4:]
                    if all(last[i + 1] >= last[i] * 0.999 for i in range(3)) and last[-1] > 1e-15:
                        return False
                    if all(last[i + 1] <= last[i] * 0.6 for i in range(3)):
                        break
        return True

    # -- sampling and probing ---------------------------------------------

    def _table(self):
        if "table" not in self._cache:
            grids, cdf_parts = [], []
            acc = 0.0
            for lo, hi in self._subpieces(clip_to_range=True):
                g = np.linspace(lo, hi, self._TABLE_SIZE)
                p = np.maximum(np.asarray(self.pdf(g), dtype=float), 0.0)
                seg = np.concatenate([[0.0], np.cumsum(0.5 * (p[1:] + p[:-1]) * np.diff(g))])
                grids.append(g)
                cdf_parts.append(acc + seg)
                acc += seg[-1]
            grid = np.concatenate(grids)
            cdf = np.concatenate(cdf_parts)
            if acc <= 0.0:
                raise ConfigError("density is zero on its declared support")
            self._cache["table"] = (grid, cdf / acc)
        return self._cache["table"]

    def sample(self, rng, n: int) -> np.ndarray:
        if self.sampler is not None:
            return np.asarray(self.sampler(rng, n), dtype=float).reshape(n, 1)
        grid, cdf = self._table()
        u = rng.random(n)
        return np.interp(u, cdf, grid).reshape(n, 1)

    def probe_points(self, n: int = 1000) -> np.ndarray:
        grid, cdf = self._table()
        qs = np.interp((np.arange(n) + 0.5) / n, cdf, grid)
        pts = np.concatenate([[self.effective_range[0]], qs, [self.effective_range[1]]])
        return pts.reshape(-1, 1)

    def support_info(self) -> SupportInfo:
        lo, hi = self.pieces[0][0], self.pieces[-1][1]
        contains_zero = any(p[0] <= 0.0 <= p[1] for p in self.pieces)
        return SupportInfo(np.array([lo]), np.array([hi]), True, contains_zero)

    def __repr__(self):
        return f"DensityJumps({self.label}, pieces={self.pieces})"


@dataclass(frozen=True)
class LevyTriplet:
    """Characteristic triplet (b, c, nu) relative to h(y) = y * 1{|y| <= 1}."""

    b: np.ndarray
    c: np.ndarray
    jumps: JumpMeasure = None  # type: ignore[assignment]

    def __post_init__(self):
        b = np.asarray(self.b, dtype=float).ravel()
        c = np.atleast_2d(np.asarray(self.c, dtype=float))
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "c", c)
        if self.jumps is None:
            object.__setattr__(self, "jumps", NoJumps(b.size))
        if c.shape != (b.size, b.size):
            raise ConfigError(f"gauss_c must be {b.size}x{b.size}, got {c.shape}")
        if self.jumps.dim != b.size and not self.jumps.is_empty:
            raise ConfigError("jump measure dimension does not match drift dimension")

    @property
    def dim(self) -> int:
        return self.b.size


@dataclass(frozen=True)
class MarketModel:
    """Exponential Levy market S_t^i = spot_i * exp(X_t^i) on [0, horizon].

    Prices are understood as already discounted; rate is kept as metadata
    and must be zero for the solvers in this package.
    """

    triplet: LevyTriplet
    spot: np.ndarray
    horizon: float
    rate: float = 0.0

    def __post_init__(self):
        spot = np.asarray(self.spot, dtype=float).ravel()
        object.__setattr__(self, "spot", spot)
        if spot.size != self.triplet.dim:
            raise ConfigError("spot vector dimension does not match the triplet")

    @property
    def dim(self) -> int:
        return self.triplet.dim


@dataclass
class ModelDiagnostics:
    """Outcome of validate_model: empty issue list means a usable model."""

    issues: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.issues


def _jump_integral_complex(measure: JumpMeasure, fn, tol: float):
    """integrate for a complex-valued integrand fn with the same conventions."""
    re = measure.integrate(lambda y: np.real(fn(y)), tol)
    im = measure.integrate(lambda y: np.imag(fn(y)), tol)
    return re + 1j * im


def levy_exponent(triplet: LevyTriplet, u, tol: float = 1e-10) -> complex:
    """Characteristic exponent psi(u) for a (possibly complex) frequency vector u.

    Raises
    ------
    DivergentMomentError
        If Im(u) requests an exponential moment the jump tails do not have.
    """
    u = np.asarray(u, dtype=complex).ravel()
    if u.size != triplet.dim:
        raise ConfigError(f"frequency vector must have length {triplet.dim}")
    ui = np.imag(u)
    measure = triplet.jumps
    if np.any(ui != 0.0) and not measure.is_empty:
        # |e^{i<u,y>}| = e^{-<Im u, y>}, so the tail weight carries -Im(u)
        weight = lambda y: np.exp(np.clip(-(y @ ui), -700.0, 700.0))
        if not measure.tail_converges(weight):
            raise DivergentMomentError(
                f"jump tails have no exponential moment for Im(u) = {ui}"
            )

    def integrand(y: np.ndarray) -> np.ndarray:
        phase = y @ u
        return np.exp(1j * phase) - 1.0 - 1j * (truncation_h(y) @ u)

    jump_part = _jump_integral_complex(measure, integrand, tol) if not measure.is_empty else 0.0
    return complex(1j * (u @ triplet.b) - 0.5 * (u @ triplet.c @ u) + jump_part)


def laplace_exponent(triplet: LevyTriplet, w, tol: float = 1e-10) -> float:
    """Laplace exponent psi_L(w) = psi(-i w) for a real vector w.

    E[exp(<w, X_t>)] = exp(t * psi_L(w)) where the moment is finite.
    """
    w = np.asarray(w, dtype=float).ravel()
    val = levy_exponent(triplet, -1j * w, tol)
    return float(np.real(val))


def linear_drift(triplet: LevyTriplet, tol: float = 1e-10) -> np.ndarray:
    """Drift of the path between jumps: b - int h(y) nu(dy) (finite activity)."""
    d = triplet.dim
    out = np.array(triplet.b, dtype=float)
    if not triplet.jumps.is_empty:
        for i in range(d):
            out[i] -= triplet.jumps.integrate(lambda y, i=i: truncation_h(y)[:, i], tol)
    return out


def psd_factor(c: np.ndarray) -> np.ndarray:
    """Factor L with L @ L.T = c for a symmetric PSD matrix (eigenvalue clip)."""
    c = np.atleast_2d(np.asarray(c, dtype=float))
    vals, vecs = np.linalg.eigh(0.5 * (c + c.T))
    return vecs @ np.diag(np.sqrt(np.clip(vals, 0.0, None)))


def validate_model(model: MarketModel, tol: float = 1e-10) -> ModelDiagnostics:
    """Structural and integrability diagnostics for a market model.

    Checks: positive spot and horizon, zero rate, symmetric PSD Gaussian
    matrix, atoms off the origin with positive weights, nonnegative density,
    square integrability of small jumps and finiteness of the jump mass
    beyond the truncation radius.
    """
    diag = ModelDiagnostics()
    t = model.triplet
    if np.any(model.spot <= 0.0) or not np.all(np.isfinite(model.spot)):
        diag.issues.append("spot prices must be strictly positive")
    if not (math.isfinite(model.horizon) and model.horizon > 0.0):
        diag.issues.append("horizon_T must be strictly positive")
    if model.rate != 0.0:
        diag.issues.append("rate_r must be 0 (prices are assumed discounted)")
    if not np.all(np.isfinite(t.b)):
        diag.issues.append("drift_b must be finite")
    c = t.c
    if not np.all(np.isfinite(c)):
        diag.issues.append("gauss_c must be finite")
    elif not np.allclose(c, c.T, atol=1e-12, rtol=0.0):
        diag.issues.append("gauss_c not symmetric")
    else:
        lam_min = float(np.linalg.eigvalsh(c).min()) if c.size else 0.0
        if lam_min < -1e-10:
            diag.issues.append(f"gauss_c not PSD (minimum eigenvalue {lam_min:.3e})")
    m = t.jumps
    if isinstance(m, DensityJumps):
        pts = m.probe_points(512)[:, 0]
        vals = np.asarray(m.pdf(pts), dtype=float)
        if np.any(vals < -1e-12):
            diag.issues.append("jump density takes negative values")
        if not m.small_jumps_square_integrable():
            diag.issues.append("small-jump integral int_{|y|<1} y^2 nu(dy) diverges")
        if not m.tail_converges(lambda y: np.ones(y.shape[0])):
            diag.issues.append("jump mass beyond the truncation radius diverges")
    return diag


def truncate_small_jumps(
    triplet: LevyTriplet, eps: float = 1e-3, gauss_correction: bool = True
) -> LevyTriplet:
    """Remove jumps with |y| < eps, optionally folding their variance into c.

    Dropping the compensated small-jump martingale leaves b unchanged under
    the fixed truncation h; when gauss_correction is set, the lost variance
    int_{|y|<eps} y y' nu(dy) is added to the Gaussian matrix.
    """
    if eps <= 0.0:
        raise ConfigError("truncation level eps must be positive")
    m = triplet.jumps
    if m.is_empty:
        return triplet
    c_new = np.array(triplet.c, dtype=float)
    if isinstance(m, AtomicJumps):
        keep = np.linalg.norm(m.ys, axis=1) >= eps
        if gauss_correction and not np.all(keep):
            dropped = m.ys[~keep]
            wts = m.weights[~keep]
            c_new = c_new + (dropped * wts[:, None]).T @ dropped
        if not np.any(keep):
            return LevyTriplet(triplet.b, c_new, NoJumps(triplet.dim))
        return LevyTriplet(triplet.b, c_new, AtomicJumps(m.ys[keep], m.weights[keep]))
    if isinstance(m, DensityJumps):
        pieces = []
        removed = []
        for lo, hi in m.pieces:
            cut_lo, cut_hi = max(lo, -eps), min(hi, eps)
            if cut_lo < cut_hi:
                removed.append((cut_lo, cut_hi))
            if lo < -eps:
                pieces.append((lo, min(hi, -eps)))
            if hi > eps:
                pieces.append((max(lo, eps), hi))
        if gauss_correction and removed:
            sigma2 = 0.0
            for lo, hi in removed:
                val, _ = _sint.quad(
                    lambda y: y * y * float(m.pdf(np.array([y]))[0]),
                    lo,
                    hi,
                    epsabs=1e-14,
                    limit=_QUAD_LIMIT,
                )
                sigma2 += val
            c_new = c_new + np.array([[sigma2]])
        if not pieces:
            return LevyTriplet(triplet.b, c_new, NoJumps(triplet.dim))
        new_m = DensityJumps(
            m.pdf,
            pieces,
            effective_range=m.effective_range,
            sampler=None,
            label=f"{m.label}|trunc{eps:g}",
        )
        return LevyTriplet(triplet.b, c_new, new_m)
    raise ConfigError(f"cannot truncate jump measure of type {type(m).__name__}")
