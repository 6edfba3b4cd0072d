"""Scalar calculus for the divergence family that selects pricing measures.

The family is parametrized by the second derivative

    f''(x) = a * x**gamma   on (0, inf),  a > 0,

together with the anchor values f'(1) and f(1).  Three presets cover the
classical utility correspondences:

    log          a=1,      gamma=-2:          f(x) = -ln(x) - 1
    exponential  a=1,      gamma=-1:          f(x) = 1 - x + x*ln(x)
    power(p)     a=1/(1-p), gamma=(2-p)/(p-1): f(x) = (1-p)/p * x**(p/(p-1))

with utilities u(x) = ln(x), 1 - exp(-x) and x**p / p respectively.  The
utility attached to a spec is the concave conjugate u(x) = inf_y (f(y) + x*y);
the two bridge identities used throughout the package are

    u'(x) = (f')^{-1}(-x)          and        u(-f'(z)) = f(z) - z*f'(z).

gamma = -1 and gamma = -2 are genuine logarithmic branches of the antiderivatives
and are dispatched on exact float equality; the preset constructors produce
exact branch values.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, YDomainError

__all__ = [
    "DivergenceSpec",
    "f_eval",
    "fprime",
    "fsecond",
    "fprime_range",
    "fprime_inverse",
    "inverse_base",
    "utility",
    "marginal_utility",
    "inverse_marginal",
    "wealth_floor",
    "wealth_ceiling",
    "alpha_coefficient",
    "conjugate_value",
]


@dataclass(frozen=True)
class DivergenceSpec:
    """Common divergence family member: f''(x) = a * x**gamma.

    Attributes
    ----------
    name : str
        One of ``"log"``, ``"exponential"``, ``"power"``, ``"custom"``.
    a, gamma : float
        Coefficients of the second derivative, a > 0.
    fprime_one, f_one : float
        Anchor values f'(1) and f(1).
    p : float or None
        Power-utility exponent, set for the power preset only.
    """

    name: str
    a: float
    gamma: float
    fprime_one: float
    f_one: float
    p: float | None = None

    def __post_init__(self):
        if not (math.isfinite(self.a) and self.a > 0.0):
            raise ConfigError(f"divergence coefficient a must be positive, got {self.a}")
        if not math.isfinite(self.gamma):
            raise ConfigError(f"divergence exponent gamma must be finite, got {self.gamma}")
        if not (math.isfinite(self.fprime_one) and math.isfinite(self.f_one)):
            raise ConfigError("divergence anchors f'(1), f(1) must be finite")

    @staticmethod
    def log() -> "DivergenceSpec":
        return DivergenceSpec("log", 1.0, -2.0, -1.0, -1.0)

    @staticmethod
    def exponential() -> "DivergenceSpec":
        return DivergenceSpec("exponential", 1.0, -1.0, 0.0, 0.0)

    @staticmethod
    def power(p: float) -> "DivergenceSpec":
        if not math.isfinite(p) or p >= 1.0 or p == 0.0:
            raise ConfigError(f"power exponent must satisfy p < 1, p != 0, got {p}")
        a = 1.0 / (1.0 - p)
        gamma = (2.0 - p) / (p - 1.0)
        return DivergenceSpec("power", a, gamma, -1.0, (1.0 - p) / p, p=p)

    @staticmethod
    def custom(a: float, gamma: float, fprime_one: float, f_one: float) -> "DivergenceSpec":
        return DivergenceSpec("custom", a, gamma, fprime_one, f_one)


def _pos(z, what: str):
    z = np.asarray(z, dtype=float)
    if np.any(z <= 0.0) or not np.all(np.isfinite(z)):
        raise ValueError(f"{what} requires strictly positive finite arguments")
    return z


def _ret(x, arr):
    arr = np.asarray(arr, dtype=float)
    return float(arr) if np.isscalar(x) or np.ndim(x) == 0 else arr


def f_eval(spec: DivergenceSpec, z):
    """Evaluate f on (0, inf).  Accepts scalars or arrays."""
    zz = _pos(z, "f")
    a, g, d1, f1 = spec.a, spec.gamma, spec.fprime_one, spec.f_one
    if g == -1.0:
        val = f1 + d1 * (zz - 1.0) + a * (zz * np.log(zz) - zz + 1.0)
    elif g == -2.0:
        val = f1 + (d1 + a) * (zz - 1.0) - a * np.log(zz)
    else:
        val = f1 + d1 * (zz - 1.0) + (a / (g + 1.0)) * (
            (zz ** (g + 2.0) - 1.0) / (g + 2.0) - (zz - 1.0)
        )
    return _ret(z, val)


def fprime(spec: DivergenceSpec, z):
    """Evaluate f' on (0, inf)."""
    zz = _pos(z, "f'")
    a, g, d1 = spec.a, spec.gamma, spec.fprime_one
    if g == -1.0:
        val = d1 + a * np.log(zz)
    else:
        val = d1 + a * (zz ** (g + 1.0) - 1.0) / (g + 1.0)
    return _ret(z, val)


def fsecond(spec: DivergenceSpec, z):
    """Evaluate f''(z) = a * z**gamma on (0, inf)."""
    zz = _pos(z, "f''")
    return _ret(z, spec.a * zz ** spec.gamma)


def fprime_range(spec: DivergenceSpec) -> tuple[float, float]:
    """Open interval of values attained by f' on (0, inf)."""
    a, g, d1 = spec.a, spec.gamma, spec.fprime_one
    if g == -1.0:
        return (-math.inf, math.inf)
    edge = d1 - a / (g + 1.0)
    if g < -1.0:
        return (-math.inf, edge)
    return (edge, math.inf)


def inverse_base(spec: DivergenceSpec, v):
    """Base of the inverse power: 1 + ((gamma+1)/a) * (v - f'(1)).

    (f')^{-1}(v) = base ** (1/(gamma+1)) for gamma != -1; the inverse exists
    exactly where the base is positive.  Returned raw (no domain check) so
    solvers can measure the positivity margin.
    """
    v = np.asarray(v, dtype=float)
    g = spec.gamma
    if g == -1.0:
        return np.ones_like(v) if v.shape else np.float64(1.0)
    return 1.0 + ((g + 1.0) / spec.a) * (v - spec.fprime_one)


def fprime_inverse(spec: DivergenceSpec, v):
    """Evaluate (f')^{-1}(v).

    Raises
    ------
    YDomainError
        If any component of ``v`` lies outside the range of f'.
    """
    vv = np.asarray(v, dtype=float)
    g = spec.gamma
    if g == -1.0:
        val = np.exp((vv - spec.fprime_one) / spec.a)
        return _ret(v, val)
    base = inverse_base(spec, vv)
    if np.any(base <= 0.0):
        bad = vv[np.asarray(base) <= 0.0] if vv.shape else vv
        raise YDomainError(
            f"value outside the range of f' (range {fprime_range(spec)})", points=bad
        )
    val = np.asarray(base) ** (1.0 / (g + 1.0))
    return _ret(v, val)


def wealth_floor(spec: DivergenceSpec) -> float:
    """Lower endpoint of the wealth domain of u (0 for log/power, -inf for exponential)."""
    g = spec.gamma
    if g < -1.0:
        return spec.a / (g + 1.0) - spec.fprime_one
    return -math.inf


def wealth_ceiling(spec: DivergenceSpec) -> float:
    """Upper endpoint of the wealth domain of u (+inf unless gamma > -1, the satiated case)."""
    g = spec.gamma
    if g > -1.0:
        return spec.a / (g + 1.0) - spec.fprime_one
    return math.inf


def _check_wealth(spec: DivergenceSpec, x):
    lo, hi = wealth_floor(spec), wealth_ceiling(spec)
    xx = np.asarray(x, dtype=float)
    if np.any(xx <= lo) or np.any(xx >= hi):
        raise ValueError(f"wealth argument outside the domain ({lo}, {hi}) of u")
    return xx


def utility(spec: DivergenceSpec, x):
    """Evaluate the utility u attached to the spec.

    Presets use their closed forms; custom members go through the conjugate:
    u(x) = f(z) + x*z with z = (f')^{-1}(-x).
    """
    xx = _check_wealth(spec, x)
    if spec.name == "log":
        val = np.log(xx)
    elif spec.name == "exponential":
        val = 1.0 - np.exp(-xx)
    elif spec.name == "power":
        val = xx ** spec.p / spec.p
    else:
        z = fprime_inverse(spec, -xx)
        val = f_eval(spec, z) + xx * np.asarray(z)
    return _ret(x, val)


def marginal_utility(spec: DivergenceSpec, x):
    """u'(x) = (f')^{-1}(-x), strictly positive and decreasing on the wealth domain."""
    xx = _check_wealth(spec, x)
    return _ret(x, fprime_inverse(spec, -xx))


def inverse_marginal(spec: DivergenceSpec, y):
    """I(y) = (u')^{-1}(y) = -f'(y) for y > 0."""
    yy = _pos(y, "inverse marginal utility")
    return _ret(y, -np.asarray(fprime(spec, yy)))


def conjugate_value(spec: DivergenceSpec, z):
    """f(z) - z*f'(z), the value of u at the wealth level -f'(z)."""
    zz = _pos(z, "conjugate value")
    val = np.asarray(f_eval(spec, zz)) - zz * np.asarray(fprime(spec, zz))
    return _ret(z, val)


def alpha_coefficient(spec: DivergenceSpec, x) -> float:
    """alpha_{gamma+1}(x) = ((gamma+1)/a) * (x + f'(1)) - 1.

    Appears in the unified portfolio display; for the presets
    alpha_0(x) = -1 (exponential) and alpha_{-1}(x) = -x (log).
    """
    xx = np.asarray(x, dtype=float)
    val = ((spec.gamma + 1.0) / spec.a) * (xx + spec.fprime_one) - 1.0
    return _ret(x, val)
