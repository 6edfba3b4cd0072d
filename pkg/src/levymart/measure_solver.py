"""Divergence-minimal martingale measures that preserve the Levy property.

An equivalent measure change that keeps X Levy is described by a Girsanov
pair (beta, Y): beta in R^d shifts the continuous part, Y > 0 reweights the
jump measure.  For the common divergence family the minimal measure's jump
reweighting is tied to beta through

    Y(y) = (f')^{-1}( f'(1) + sum_i beta_i (e^{y_i} - 1) ),          (*)

and beta solves the martingale drift condition, componentwise

    G_i(beta) = b_i + c_ii/2 + (c beta)_i
                + int ( (e^{y_i} - 1) Y(y) - h_i(y) ) nu(dy) = 0,

which says exactly that the Laplace exponent of ln S_i vanishes at 1 under
the new measure.  The Jacobian of G is

    dG_i/dbeta_j = c_ij + int (e^{y_i}-1)(e^{y_j}-1) / f''(Y(y)) nu(dy),

a positive semidefinite Gram perturbation of c, so a damped Newton iteration
converges from the Gaussian-only initial guess whenever a root exists inside
the positivity domain of (*).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import divergence as dv
from .errors import SolverError, YDomainError
from .levy_core import (
    AtomicJumps,
    DensityJumps,
    JumpMeasure,
    LevyTriplet,
    MarketModel,
    NoJumps,
    truncation_h,
)

__all__ = [
    "GirsanovPair",
    "MartingaleResidual",
    "ConditionReport",
    "candidate_Y",
    "positivity_margin",
    "martingale_residual",
    "solve_beta",
    "validate_conditions",
    "q_triplet",
    "q_model",
    "tilt_jump_measure",
    "hellinger_half",
]

_MAX_HALVINGS = 60
_YSAT = 300.0


def _uexp(y) -> np.ndarray:
    """e^y - 1 with the exponent saturated at +-300.

    Every integrand built on the pair is a rational or power expression in
    e^y whose value (or divergence verdict) is already settled at e^300, so
    the saturation only prevents inf*0 artifacts at extreme quadrature nodes.
    """
    return np.expm1(np.clip(y, -_YSAT, _YSAT))


def _tilt_arg(spec: dv.DivergenceSpec, beta: np.ndarray, y: np.ndarray) -> np.ndarray:
    # f'(1) + sum_i beta_i (e^{y_i} - 1), grouped as (f'(1) - sum beta) + e^y @ beta
    # so the O(1) cancellation happens between exact constants and the tiny
    # e^y remainder on far-left tails survives (expm1 there rounds to -1)
    ey = np.exp(np.minimum(y, _YSAT))
    return (spec.fprime_one - float(beta.sum())) + ey @ beta


def candidate_Y(spec: dv.DivergenceSpec, beta: np.ndarray, y) -> np.ndarray:
    """Evaluate the candidate jump reweighting (*) at points y, shape (m, d).

    Raises YDomainError where the argument leaves the range of f'.
    """
    beta = np.asarray(beta, dtype=float).ravel()
    y = np.atleast_2d(np.asarray(y, dtype=float))
    return np.asarray(dv.fprime_inverse(spec, _tilt_arg(spec, beta, y)))


def _y_base(spec: dv.DivergenceSpec, beta: np.ndarray, y) -> np.ndarray:
    """Power base whose positivity is the domain condition of (*); +inf margin for gamma = -1."""
    beta = np.asarray(beta, dtype=float).ravel()
    y = np.atleast_2d(np.asarray(y, dtype=float))
    if spec.gamma == -1.0:
        return np.full(y.shape[0], math.inf)
    return np.asarray(dv.inverse_base(spec, _tilt_arg(spec, beta, y)), dtype=float)


def positivity_margin(
    spec: dv.DivergenceSpec, beta: np.ndarray, measure: JumpMeasure, n_probe: int = 1000
) -> float:
    """inf over the jump support of the (*) domain base; > 0 means Y is defined and positive.

    The base is 1 + sum_i c_i (e^{y_i} - 1) with c = (gamma+1)/a * beta, so it
    is monotone in each coordinate and its infimum over an unbounded support
    direction is the explicit limit value; bounded directions are covered by
    the probe grid, which includes the support endpoints.
    """
    if measure.is_empty:
        return math.inf
    pts = measure.probe_points(n_probe)
    margin = float(np.min(_y_base(spec, beta, pts)))
    if spec.gamma == -1.0:
        return margin
    info = measure.support_info()
    coef = (spec.gamma + 1.0) / spec.a * np.asarray(beta, dtype=float).ravel()
    corner = 1.0
    unbounded = False
    for i, ci in enumerate(coef):
        if ci == 0.0:
            continue
        y_star = float(info.lower[i]) if ci > 0.0 else float(info.upper[i])
        if math.isinf(y_star):
            unbounded = True
            # e^{-inf} - 1 = -1; toward +inf the base diverges to -inf
            corner += -ci if y_star < 0 else -math.inf
        else:
            corner += ci * math.expm1(y_star)
    if unbounded:
        margin = min(margin, corner)
    return margin


@dataclass
class MartingaleResidual:
    """Value and Jacobian of the drift condition G at a given beta."""

    value: np.ndarray
    jacobian: np.ndarray

    @property
    def norm(self) -> float:
        return float(np.max(np.abs(self.value)))


@dataclass
class ConditionReport:
    """Pointwise positivity, tail integrability and drift residual of a pair.

    kappa_finite records whether the exponential moments of ln Z needed by
    the dual value and the conditional kernels converge (the rates at
    gamma+1 and gamma+2 under the changed measure); it is informational and
    does not affect ok.
    """

    positivity_ok: bool
    positivity_min: float
    integrability_ok: bool
    integrability_value: float
    martingale_residual: float
    kappa_finite: dict = field(default_factory=dict)
    messages: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.positivity_ok and self.integrability_ok


@dataclass
class GirsanovPair:
    """Girsanov pair of a Levy-preserving measure change.

    beta is the continuous shift; the jump reweighting is the closure (*)
    over (beta, spec), exposed as the Y method.
    """

    beta: np.ndarray
    spec: dv.DivergenceSpec
    residual_norm: float = math.nan
    conditions: ConditionReport | None = None

    def __post_init__(self):
        object.__setattr__(self, "beta", np.asarray(self.beta, dtype=float).ravel())

    def Y(self, y) -> np.ndarray:
        return candidate_Y(self.spec, self.beta, y)


def martingale_residual(
    model: MarketModel, spec: dv.DivergenceSpec, beta, tol: float = 1e-10
) -> MartingaleResidual:
    """Evaluate G(beta) and its Jacobian.

    Propagates YDomainError when beta violates the (*) domain on the support.
    """
    t = model.triplet
    beta = np.asarray(beta, dtype=float).ravel()
    d = t.dim
    value = t.b + 0.5 * np.diag(t.c) + t.c @ beta
    jac = np.array(t.c, dtype=float)
    m = t.jumps
    if not m.is_empty:
        if positivity_margin(spec, beta, m) <= 0.0:
            raise YDomainError("Y-positivity violated on the jump support", points=beta)
        for i in range(d):
            def wi(y, i=i):
                return np.abs(_uexp(y)[:, i]) * candidate_Y(spec, beta, y)

            if not m.tail_converges(wi):
                raise SolverError(
                    "tail integrability failed (cdsec2): "
                    f"int (e^{{y_{i}}}-1) Y dnu diverges at beta = {beta.tolist()}"
                )
        for i in range(d):
            def vi(y, i=i):
                Y = candidate_Y(spec, beta, y)
                return _uexp(y)[:, i] * Y - truncation_h(y)[:, i]

            value[i] += m.integrate(vi, tol)
            for j in range(i, d):
                # 1/f''(Y) written as Y^{-gamma}/a so an underflowed Y gives 0
                def jij(y, i=i, j=j):
                    Y = candidate_Y(spec, beta, y)
                    u = _uexp(y)
                    return u[:, i] * u[:, j] * Y ** (-spec.gamma) / spec.a

                gij = m.integrate(jij, tol)
                jac[i, j] += gij
                if j != i:
                    jac[j, i] += gij
    return MartingaleResidual(value=value, jacobian=jac)


def _initial_beta(model: MarketModel, spec: dv.DivergenceSpec) -> np.ndarray:
    """Gaussian-only guess -c^+ (b + diag(c)/2), shrunk into the (*) domain.

    beta = 0 always lies in the domain (Y == 1), so geometric shrinking
    terminates.
    """
    t = model.triplet
    beta = -np.linalg.pinv(t.c) @ (t.b + 0.5 * np.diag(t.c))
    for _ in range(400):
        if positivity_margin(spec, beta, t.jumps) > 0.0:
            return beta
        beta = 0.9 * beta
    return np.zeros(t.dim)


def solve_beta(
    model: MarketModel,
    spec: dv.DivergenceSpec,
    tol: float = 1e-12,
    max_iter: int = 100,
    check_conditions: bool = True,
) -> GirsanovPair:
    """Solve the drift condition G(beta) = 0 by damped Newton iteration.

    Steps are halved (at most 60 times) until the trial point both respects
    the (*) positivity domain and does not increase the residual norm.  A
    persistent domain rejection means the drift condition has no root inside
    the positivity region, which is reported as a Y-positivity failure.

    Raises
    ------
    SolverError
        No admissible root (Y-positivity), stagnation, or cdsec2 failure.
    """
    t = model.triplet
    beta = _initial_beta(model, spec)
    try:
        res = martingale_residual(model, spec, beta, tol=min(1e-10, tol))
    except YDomainError as exc:
        raise SolverError(
            "martingale condition has no root inside the Y-positivity domain "
            f"(cdsec1): starting point {beta.tolist()} is blocked: {exc}"
        ) from exc
    for _ in range(max_iter):
        if res.norm <= tol:
            break
        try:
            step = np.linalg.solve(res.jacobian, -res.value)
        except np.linalg.LinAlgError:
            step, *_ = np.linalg.lstsq(res.jacobian, -res.value, rcond=None)
        scale = 1.0
        accepted = None
        domain_blocked = False
        for _h in range(_MAX_HALVINGS + 1):
            trial = beta + scale * step
            if positivity_margin(spec, trial, t.jumps) <= 0.0:
                domain_blocked = True
                scale *= 0.5
                continue
            try:
                trial_res = martingale_residual(model, spec, trial, tol=min(1e-10, tol))
            except YDomainError:
                # probe grid can miss a violation between nodes; treat as blocked
                domain_blocked = True
                scale *= 0.5
                continue
            if trial_res.norm < res.norm or trial_res.norm <= tol:
                accepted = (trial, trial_res)
                break
            scale *= 0.5
        if accepted is None:
            if domain_blocked:
                raise SolverError(
                    "martingale condition has no root inside the Y-positivity "
                    "domain (cdsec1): Newton steps were rejected by the domain "
                    f"after {_MAX_HALVINGS} halvings at residual {res.norm:.3e}"
                )
            raise SolverError(
                f"Newton iteration stagnated at residual {res.norm:.3e} "
                f"(no solution found within tolerance {tol})"
            )
        new_beta, new_res = accepted
        if np.max(np.abs(new_beta - beta)) < 1e-16 * (1.0 + np.max(np.abs(beta))) and new_res.norm > tol:
            raise SolverError(
                "martingale condition has no root inside the Y-positivity domain "
                f"(cdsec1): iteration pinned at the domain boundary, residual {new_res.norm:.3e}"
            )
        beta, res = new_beta, new_res
    if res.norm > tol:
        raise SolverError(
            f"no solution found: residual {res.norm:.3e} after {max_iter} iterations"
        )
    pair = GirsanovPair(beta=beta, spec=spec, residual_norm=res.norm)
    if check_conditions:
        report = validate_conditions(model, spec, pair)
        pair.conditions = report
        if not report.positivity_ok:
            raise SolverError(
                f"Y-positivity violated on the jump support (cdsec1): min base {report.positivity_min:.3e}"
            )
        if not report.integrability_ok:
            raise SolverError(
                "tail integrability failed (cdsec2): int_{|y|>=1} (e^{y_i}-1) Y dnu diverges"
            )
    return pair


def validate_conditions(
    model: MarketModel,
    spec: dv.DivergenceSpec,
    pair: GirsanovPair,
    n_probe: int = 1000,
    tol: float = 1e-10,
) -> ConditionReport:
    """Check the measure-change conditions for a given pair.

    Positivity of Y on the support (probed on atoms or a quantile grid),
    absolute convergence of int_{|y|>=1} |e^{y_i}-1| Y dnu, and the
    martingale drift residual at the pair's beta.
    """
    t = model.triplet
    m = t.jumps
    messages: list = []
    pos_min = positivity_margin(spec, pair.beta, m, n_probe)
    pos_ok = pos_min > 0.0
    if not pos_ok:
        messages.append(f"cdsec1: Y-positivity fails on the support (min base {pos_min:.3e})")

    integ_ok = True
    integ_val = 0.0
    if not m.is_empty and pos_ok:
        d = t.dim
        for i in range(d):
            def wi(y, i=i):
                return np.abs(_uexp(y)[:, i]) * candidate_Y(spec, pair.beta, y)

            if not m.tail_converges(wi):
                integ_ok = False
                integ_val = math.inf
                messages.append(
                    f"cdsec2: int_{{|y|>=1}} (e^{{y_{i}}}-1) Y dnu diverges"
                )
                break

            def big(y, i=i):
                vals = np.abs(_uexp(y)[:, i]) * candidate_Y(spec, pair.beta, y)
                far = np.linalg.norm(np.atleast_2d(y), axis=1) >= 1.0
                return vals * far

            integ_val += m.integrate(big, tol)

    kappa_finite: dict = {}
    if pos_ok:
        g1 = spec.gamma + 1.0
        for label, theta in (("gamma_plus_1", g1), ("gamma_plus_2", g1 + 1.0)):
            if m.is_empty:
                kappa_finite[label] = True
                continue
            def moment_weight(y, theta=theta):
                Y = candidate_Y(spec, pair.beta, y)
                return np.abs(Y ** (theta + 1.0) - Y - theta * (Y - 1.0))

            kappa_finite[label] = bool(m.tail_converges(moment_weight))
            if not kappa_finite[label]:
                messages.append(
                    f"integcd: moment rate at exponent {theta:g} infinite; "
                    "dual value and conditional kernels diverge"
                )

    res_norm = math.nan
    if pos_ok and integ_ok:
        res_norm = martingale_residual(model, spec, pair.beta, tol=tol).norm
        if not res_norm <= 1e-6:
            messages.append(f"cdsec3: martingale drift residual {res_norm:.3e}")
    return ConditionReport(
        positivity_ok=pos_ok,
        positivity_min=pos_min,
        integrability_ok=integ_ok,
        integrability_value=integ_val,
        martingale_residual=res_norm,
        kappa_finite=kappa_finite,
        messages=messages,
    )


def tilt_jump_measure(measure: JumpMeasure, pair: GirsanovPair) -> JumpMeasure:
    """Jump measure Y(y) nu(dy) of the changed measure."""
    if measure.is_empty:
        return measure
    if isinstance(measure, AtomicJumps):
        w = measure.weights * pair.Y(measure.ys)
        return AtomicJumps(measure.ys, w)
    if isinstance(measure, DensityJumps):
        base_pdf = measure.pdf

        def tilted(y):
            arr = np.asarray(y, dtype=float).ravel()
            return np.asarray(base_pdf(arr)) * pair.Y(arr.reshape(-1, 1))

        return DensityJumps(
            tilted,
            measure.pieces,
            effective_range=measure.effective_range,
            sampler=None,
            label=f"{measure.label}|tilted",
        )
    raise SolverError(f"cannot tilt jump measure of type {type(measure).__name__}")


def q_triplet(model: MarketModel, pair: GirsanovPair, tol: float = 1e-10) -> LevyTriplet:
    """Triplet of X under the changed measure:

    b_Q = b + c beta + int h(y) (Y(y) - 1) nu(dy),  c_Q = c,  nu_Q = Y nu.
    """
    t = model.triplet
    b_q = t.b + t.c @ pair.beta
    if not t.jumps.is_empty:
        for i in range(t.dim):
            def hi(y, i=i):
                return truncation_h(y)[:, i] * (candidate_Y(pair.spec, pair.beta, y) - 1.0)

            b_q[i] += t.jumps.integrate(hi, tol)
    return LevyTriplet(b_q, t.c, tilt_jump_measure(t.jumps, pair))


def q_model(model: MarketModel, pair: GirsanovPair, tol: float = 1e-10) -> MarketModel:
    """Market model with the same spot and horizon under the changed measure."""
    return MarketModel(q_triplet(model, pair, tol), model.spot, model.horizon, model.rate)


def hellinger_half(model: MarketModel, pair: GirsanovPair, tol: float = 1e-10) -> float:
    """Hellinger quantity of order 1/2 at the horizon:

    h_T = (T/2) beta' c beta + (T/8) int (sqrt(Y(y)) - 1)^2 nu(dy).

    Finite exactly when the measures are not mutually singular at T.
    """
    t = model.triplet
    T = model.horizon
    cont = 0.5 * T * float(pair.beta @ t.c @ pair.beta)
    jump = 0.0
    if not t.jumps.is_empty:
        def g(y):
            return (np.sqrt(candidate_Y(pair.spec, pair.beta, y)) - 1.0) ** 2

        if not t.jumps.tail_converges(g):
            return math.inf
        jump = (T / 8.0) * t.jumps.integrate(g, tol)
    return cont + jump
