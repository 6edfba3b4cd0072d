"""Optimal portfolio construction from the minimal-divergence measure change.

With u the utility conjugate to the divergence f, the optimal terminal
wealth for initial capital x is V_T = -f'(lambda Z_T) where lambda > 0 is
fixed by the budget E_Q[-f'(lambda Z_T)] = x.  Under the common family
(f'' = a z^gamma) the budget equation is explicit: writing kappa for the
Q-moment rate kappa_Q(gamma+1) and alpha(x) = ((gamma+1)/a)(x + f'(1)) - 1,

    lambda^{gamma+1} e^{T kappa} = -alpha(x)          (gamma != -1)
    ln lambda = -(x + f'(1))/a - T m,  m = kappa_Q'(0) (gamma = -1)

and the optimal wealth at time t is a deterministic function of Z_t:

    V_t = -f'(1) - a (lambda^{gamma+1} Z_t^{gamma+1} e^{(T-t) kappa} - 1)/(gamma+1)
    V_t = -f'(1) - a (ln(lambda Z_t) + (T-t) m)        (gamma = -1).

The replicating position in money units (phi_i S_i-) admits two candidate
scalings that differ only by the constant a of the family:

    kernel:   -a lambda^{gamma+1} vec_i z^{gamma+1} e^{(T-t) kappa}
    anchored: alpha(x) beta_i z^{gamma+1} e^{-t kappa}

The kernel form is what the conditional kernels xi/H dictate through the
value-process decomposition (vec = beta when c != 0; when c = 0 it uses the
jump-closure constants beta/a, which absorb the factor and make the two
forms coincide).  The anchored form normalizes through the initial capital.
They agree exactly when a = 1; the verification harness arbitrates between
them by terminal replication error and reports both.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import optimize

from . import divergence as dv
from .density_engine import MomentCurve, SimulatedPath, subgrid_indices
from .errors import SolverError, WealthDomainError
from .levy_core import JumpMeasure, MarketModel, linear_drift
from .measure_solver import GirsanovPair, candidate_Y

__all__ = [
    "StrategyProblem",
    "StrategyState",
    "GammaConstants",
    "WealthSeries",
    "build_problem",
    "solve_lambda",
    "solve_lambda_bisection",
    "wealth_closed_form",
    "strategy_amounts",
    "strategy_at",
    "wealth_process",
    "terminal_identity_residuals",
    "compute_gamma_constants",
    "expected_utility",
    "duality_gap",
    "stopped_node_mask",
    "truncated_terminal_wealth",
]

FORMS = ("kernel", "anchored")


def _wealth_at(spec: dv.DivergenceSpec, lam: float, T: float, kappa_plus: float,
               mean_rate: float, t, z):
    g1 = spec.gamma + 1.0
    z = np.asarray(z, dtype=float)
    t = np.asarray(t, dtype=float)
    if spec.gamma == -1.0:
        val = -spec.fprime_one - spec.a * (np.log(lam * z) + (T - t) * mean_rate)
    else:
        w = lam ** g1 * z ** g1 * np.exp((T - t) * kappa_plus)
        val = -spec.fprime_one - spec.a * (w - 1.0) / g1
    return val if val.shape else float(val)


def solve_lambda(spec: dv.DivergenceSpec, x: float, T: float, kappa_plus: float,
                 mean_rate: float = 0.0) -> float:
    """Budget multiplier lambda with E_Q[-f'(lambda Z_T)] = x, in closed form."""
    lo = dv.wealth_floor(spec)
    hi = dv.wealth_ceiling(spec)
    if x <= lo:
        raise WealthDomainError(
            f"initial capital x = {x} is at or below the wealth floor {lo}"
        )
    if x >= hi:
        raise WealthDomainError(
            f"initial capital x = {x} is at or above the satiation level {hi}"
        )
    if spec.gamma == -1.0:
        return math.exp(-(x + spec.fprime_one) / spec.a - T * mean_rate)
    g1 = spec.gamma + 1.0
    target = -dv.alpha_coefficient(spec, x)
    # target > 0 is exactly the floor/ceiling condition checked above
    return target ** (1.0 / g1) * math.exp(-T * kappa_plus / g1)


def solve_lambda_bisection(spec: dv.DivergenceSpec, x: float, T: float,
                           kappa_plus: float, mean_rate: float = 0.0,
                           tol: float = 1e-12) -> float:
    """Root-finding cross-check of solve_lambda on the closed-form budget map."""
    def gap(loglam: float) -> float:
        return _wealth_at(spec, math.exp(loglam), T, kappa_plus, mean_rate, 0.0, 1.0) - x

    lo, hi = -1.0, 1.0
    for _ in range(200):
        if gap(lo) * gap(hi) <= 0.0:
            break
        lo *= 2.0
        hi *= 2.0
    else:
        raise SolverError("budget equation could not be bracketed")
    return math.exp(optimize.brentq(gap, lo, hi, xtol=tol, rtol=8.9e-16))


@dataclass
class GammaConstants:
    """Jump-closure strategy constants for the pure-jump branch.

    analytic is beta/a (the chain rule through the jump reweighting);
    finite_difference re-evaluates exp(-y0_i) Y(y0)^gamma dY/dy_i by central
    differences at y0 and at a second arbitrary point, and discrepancy is
    the largest deviation from the analytic value across both.
    """

    analytic: np.ndarray
    finite_difference: np.ndarray
    discrepancy: float
    y0: np.ndarray


def compute_gamma_constants(pair: GirsanovPair, measure: JumpMeasure,
                            y0: np.ndarray | None = None,
                            step: float = 1e-6) -> GammaConstants:
    """Evaluate the pure-jump strategy constants and their support invariance.

    The defining map y -> exp(-y_i) Y(y)^gamma dY/dy_i is constant where Y
    is defined, so the choice of y0 is immaterial; this is confirmed at a
    second probe point.  y0 defaults to the first support probe and must lie
    in the support box of the jump measure.
    """
    spec = pair.spec
    d = pair.beta.size
    probes = measure.probe_points()
    if y0 is None:
        if probes.shape[0] == 0:
            raise SolverError("jump measure has no support to anchor the constants")
        y0 = probes[0]
    y0 = np.asarray(y0, dtype=float).ravel()
    info = measure.support_info()
    if np.any(y0 < info.lower - 1e-12) or np.any(y0 > info.upper + 1e-12):
        raise SolverError(f"y0 = {y0.tolist()} lies outside the jump support")

    def expression(y: np.ndarray) -> np.ndarray:
        vals = np.empty(d)
        y_mid = candidate_Y(spec, pair.beta, y.reshape(1, -1))[0]
        for i in range(d):
            e = np.zeros(d)
            e[i] = step
            yp = candidate_Y(spec, pair.beta, (y + e).reshape(1, -1))[0]
            ym = candidate_Y(spec, pair.beta, (y - e).reshape(1, -1))[0]
            vals[i] = math.exp(-y[i]) * y_mid ** spec.gamma * (yp - ym) / (2.0 * step)
        return vals

    second = None
    for cand in (y0 + 0.25, y0 - 0.25, 0.5 * y0):
        if np.allclose(cand, y0):
            continue
        try:
            candidate_Y(spec, pair.beta, cand.reshape(1, -1))
        except Exception:
            continue
        second = cand
        break

    fd = expression(y0)
    analytic = pair.beta / spec.a
    dev = float(np.max(np.abs(fd - analytic))) if d else 0.0
    if second is not None:
        dev = max(dev, float(np.max(np.abs(expression(second) - analytic))))
    return GammaConstants(analytic=analytic, finite_difference=fd,
                          discrepancy=dev, y0=y0)


@dataclass
class StrategyProblem:
    """Everything needed to evaluate the optimal strategy and its wealth."""

    model: MarketModel
    spec: dv.DivergenceSpec
    pair: GirsanovPair
    curve: MomentCurve
    x: float
    lam: float
    kappa_plus: float
    mean_rate: float
    vec: np.ndarray
    gamma_constants: GammaConstants | None

    @property
    def T(self) -> float:
        return self.model.horizon

    @property
    def branch(self) -> str:
        return "pure_jump" if self.gamma_constants is not None else "diffusive"


@dataclass
class StrategyState:
    """Left-limit market state feeding the (predictable) strategy."""

    t: float
    z_minus: float
    s_minus: np.ndarray


def build_problem(model: MarketModel, spec: dv.DivergenceSpec, pair: GirsanovPair,
                  x: float, curve: MomentCurve | None = None) -> StrategyProblem:
    """Assemble the strategy problem: moment rates, multiplier, strategy vector.

    When the Gaussian part vanishes the kernel-form vector switches to the
    jump-closure constants beta/a (pure_jump branch); otherwise it is beta
    itself (diffusive branch).
    """
    if curve is None:
        curve = MomentCurve(model, pair)
    kappa_plus = curve.moment_rate(spec.gamma + 1.0, "Q")
    mean_rate = curve.mean_rate_q() if spec.gamma == -1.0 else 0.0
    lam = solve_lambda(spec, x, model.horizon, kappa_plus, mean_rate)
    constants = None
    vec = pair.beta.astype(float)
    if not np.any(model.triplet.c):
        constants = compute_gamma_constants(pair, model.triplet.jumps)
        if constants.discrepancy > 1e-6:
            raise SolverError(
                "jump-closure constants are not invariant on the support "
                f"(deviation {constants.discrepancy:.3e})"
            )
        vec = constants.analytic
    return StrategyProblem(
        model=model,
        spec=spec,
        pair=pair,
        curve=curve,
        x=float(x),
        lam=lam,
        kappa_plus=kappa_plus,
        mean_rate=mean_rate,
        vec=vec,
        gamma_constants=constants,
    )


def _coef(problem: StrategyProblem, t, z, form: str):
    """Scalar coefficient multiplying the strategy vector, per form."""
    spec = problem.spec
    g1 = spec.gamma + 1.0
    t = np.asarray(t, dtype=float)
    z = np.asarray(z, dtype=float)
    if form == "kernel":
        out = (
            -spec.a
            * problem.lam ** g1
            * z ** g1
            * np.exp((problem.T - t) * problem.kappa_plus)
        )
    elif form == "anchored":
        out = (
            dv.alpha_coefficient(spec, problem.x)
            * z ** g1
            * np.exp(-t * problem.kappa_plus)
        )
    else:
        raise ValueError(f"unknown strategy form {form!r}; expected one of {FORMS}")
    return out


def strategy_amounts(problem: StrategyProblem, t, z, form: str = "kernel") -> np.ndarray:
    """Money invested per asset (phi_i S_i-) at state (t, Z_t- = z).

    Scalar t, z give a (d,) vector; array t, z of shape (m,) give (m, d).
    """
    vec = problem.vec if form == "kernel" else problem.pair.beta
    coef = np.asarray(_coef(problem, t, z, form))
    if coef.shape:
        return coef[:, None] * vec
    return float(coef) * vec


def strategy_at(problem: StrategyProblem, state: StrategyState,
                form: str = "kernel", branch: str | None = None) -> np.ndarray:
    """Optimal position in shares at a left-limit state.

    branch, when given, must match the problem (a c = 0 model has no
    diffusive branch and vice versa).
    """
    if branch is not None and branch != problem.branch:
        raise SolverError(
            f"strategy branch mismatch: problem is {problem.branch}, requested {branch}"
        )
    s = np.asarray(state.s_minus, dtype=float).ravel()
    if np.any(s <= 0.0):
        raise SolverError("asset prices must be positive")
    return strategy_amounts(problem, state.t, state.z_minus, form) / s


def wealth_closed_form(problem: StrategyProblem, t, z):
    """Optimal wealth V_t as a function of the density-process state z."""
    return _wealth_at(problem.spec, problem.lam, problem.T, problem.kappa_plus,
                      problem.mean_rate, t, z)


def stopped_node_mask(problem: StrategyProblem, path: SimulatedPath,
                      nodes: np.ndarray, level: float) -> np.ndarray:
    """Active-interval mask for the strategy stopped when lambda Z exits [1/level, level].

    Entry k applies to the interval starting at kept node k; once the state
    has exited the band at any node up to k the strategy is switched off.
    """
    lamz = problem.lam * path.Z[nodes]
    viol = (lamz < 1.0 / level) | (lamz > level)
    return np.cumsum(viol) == 0


@dataclass
class WealthSeries:
    """Self-financing wealth along one path: Euler integral vs closed form."""

    nodes: np.ndarray
    times: np.ndarray
    euler: np.ndarray
    closed: np.ndarray

    @property
    def residual(self) -> np.ndarray:
        return self.euler - self.closed


def wealth_process(problem: StrategyProblem, path: SimulatedPath,
                   form: str = "kernel", nodes: np.ndarray | None = None,
                   active: np.ndarray | None = None) -> WealthSeries:
    """Wealth of the strategy along one simulated path, two ways.

    The Euler series accumulates phi . dS: exact Brownian increments plus
    the return drift b~ + diag(c)/2 between kept nodes, and exact jump
    returns expm1(jump) with the strategy evaluated at the pre-jump state.
    The closed series is the conditional-expectation formula at each node.
    nodes selects a coarsened grid (it must keep every jump node); active
    optionally switches the strategy off from some node on (stopped
    variants).  The closed form is exact in continuous time, so the residual
    series measures pure discretization error.
    """
    if nodes is None:
        nodes = np.arange(path.n_nodes)
    t = path.t[nodes]
    Xc = path.Xc[nodes]
    Z = path.Z[nodes]
    m = nodes.size
    vec = problem.vec if form == "kernel" else problem.pair.beta
    trip = problem.model.triplet
    ret_drift = linear_drift(trip) + 0.5 * np.diag(trip.c)
    if path.under == "Q":
        # Xc is driftless under the simulating measure, so the drift of the
        # asset return picks up the Girsanov tilt c beta on Q paths
        ret_drift = ret_drift + trip.c @ problem.pair.beta

    coef = np.asarray(_coef(problem, t, Z, form))
    if active is not None:
        coef = coef * active
    dxc = np.diff(Xc, axis=0) + ret_drift * np.diff(t)[:, None]
    inc = (coef[:-1, None] * vec * dxc).sum(axis=1)

    if path.jump_nodes.size:
        pos = np.searchsorted(nodes, path.jump_nodes)
        if pos.max(initial=-1) >= m or not np.array_equal(nodes[pos], path.jump_nodes):
            raise SolverError("coarsened grid dropped a jump node")
        keep = pos > 0
        jpos = pos[keep]
        sizes = path.jump_sizes[keep]
        jnodes = path.jump_nodes[keep]
        coef_pre = np.asarray(_coef(problem, path.t[jnodes], path.Z_pre[jnodes], form))
        if active is not None:
            coef_pre = coef_pre * active[jpos - 1]
        jump_inc = (coef_pre[:, None] * vec * np.expm1(sizes)).sum(axis=1)
        add = np.zeros(m - 1)
        np.add.at(add, jpos - 1, jump_inc)
        inc = inc + add

    euler = np.empty(m)
    euler[0] = problem.x
    euler[1:] = problem.x + np.cumsum(inc)
    closed = np.asarray(wealth_closed_form(problem, t, Z))
    return WealthSeries(nodes=nodes, times=t, euler=euler, closed=closed)


def terminal_identity_residuals(problem: StrategyProblem, paths: list[SimulatedPath],
                                form: str = "kernel", stride: int = 1) -> np.ndarray:
    """Per-path terminal replication error x + (phi.S)_T - (-f'(lambda Z_T)).

    stride coarsens the regular grid (jump nodes always kept), which is how
    the refinement studies reuse a single fine simulation.
    """
    out = np.empty(len(paths))
    for k, path in enumerate(paths):
        nodes = subgrid_indices(path, stride) if stride > 1 else None
        ws = wealth_process(problem, path, form=form, nodes=nodes)
        out[k] = ws.euler[-1] - ws.closed[-1]
    return out


def truncated_terminal_wealth(problem: StrategyProblem, paths: list[SimulatedPath],
                              level: float, form: str = "kernel"):
    """Terminal wealth of the strategy stopped when lambda Z exits [1/level, level].

    Returns (terminal wealth per path, fraction of paths stopped before T).
    """
    if level <= 1.0:
        raise SolverError("truncation level must exceed 1")
    wealth = np.empty(len(paths))
    stopped = 0
    for k, path in enumerate(paths):
        nodes = np.arange(path.n_nodes)
        active = stopped_node_mask(problem, path, nodes, level)
        if not active[:-1].all():
            stopped += 1
        ws = wealth_process(problem, path, form=form, nodes=nodes, active=active)
        wealth[k] = ws.euler[-1]
    return wealth, stopped / max(len(paths), 1)


def expected_utility(problem: StrategyProblem, zT: np.ndarray) -> np.ndarray:
    """Pathwise utility of the optimal terminal wealth given terminal Z draws."""
    vT = -dv.fprime(problem.spec, problem.lam * np.asarray(zT, dtype=float))
    return dv.utility(problem.spec, vT)


def duality_gap(problem: StrategyProblem, zT: np.ndarray) -> np.ndarray:
    """Pathwise u(V_T) - [f(lambda Z_T) - lambda Z_T f'(lambda Z_T)]; zero in theory."""
    lamz = problem.lam * np.asarray(zT, dtype=float)
    direct = expected_utility(problem, zT)
    conj = dv.f_eval(problem.spec, lamz) - lamz * dv.fprime(problem.spec, lamz)
    return direct - conj
