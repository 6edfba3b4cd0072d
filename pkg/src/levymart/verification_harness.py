"""Monte Carlo and analytic verification of the measure change and strategies.

Every check here compares an implementation output against an independent
target: an exact expectation, a closed-form law, or a statistical test on
simulated increments.  Monte Carlo comparisons are reported as z-scores
against the standard error and pass at 3 standard errors unless stated
otherwise.  All randomness is seeded, so a rerun of the suite with the same
inputs reproduces every number bit for bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import special, stats

from . import divergence as dv
from .density_engine import (
    MomentCurve,
    SimulatedPath,
    sample_terminals,
    simulate_paths,
    subgrid_indices,
)
from .errors import VerificationError
from .levy_core import MarketModel, linear_drift
from .measure_solver import GirsanovPair, hellinger_half, martingale_residual, q_triplet
from .strategy_engine import (
    FORMS,
    StrategyProblem,
    terminal_identity_residuals,
    wealth_closed_form,
)

__all__ = [
    "SUITES",
    "McEstimate",
    "mc_mean",
    "budget_check",
    "moment_check",
    "martingale_check",
    "terminal_replication_study",
    "decay_rates",
    "select_strategy_scaling",
    "representation_residual",
    "levy_preservation_test",
    "constant_mix_terminal_wealth",
    "utility_dominance_scan",
    "run_suite",
]

SUITES = ("martingale", "representation", "preservation", "dominance", "all")


@dataclass
class McEstimate:
    """A Monte Carlo mean with its standard error."""

    value: float
    se: float
    n: int

    def z(self, target: float) -> float:
        if self.se == 0.0:
            return 0.0 if self.value == target else math.inf
        return (self.value - target) / self.se

    def within(self, target: float, k: float = 3.0) -> bool:
        return abs(self.z(target)) <= k


def mc_mean(samples: np.ndarray) -> McEstimate:
    samples = np.asarray(samples, dtype=float)
    n = samples.size
    se = float(samples.std(ddof=1) / math.sqrt(n)) if n > 1 else math.inf
    return McEstimate(value=float(samples.mean()), se=se, n=n)


def budget_check(problem: StrategyProblem, n: int = 100_000, seed: int = 0) -> McEstimate:
    """MC estimate of E_Q[-f'(lambda Z_T)], which must equal the initial capital."""
    ts = sample_terminals(problem.model, problem.pair, n, seed, under="Q")
    vals = -dv.fprime(problem.spec, problem.lam * ts.ZT)
    return mc_mean(vals)


def moment_check(model: MarketModel, pair: GirsanovPair, curve: MomentCurve,
                 thetas, n: int = 50_000, seed: int = 0, under: str = "Q"):
    """Compare E[Z_T^theta] with exp(T kappa(theta)) for each theta.

    Returns a list of (theta, kappa, estimate, z) rows; divergent thetas are
    skipped with kappa = inf and z = nan.
    """
    ts = sample_terminals(model, pair, n, seed, under=under)
    rows = []
    for theta in thetas:
        kap = curve.kappa(theta, under)
        if not math.isfinite(kap):
            rows.append((float(theta), kap, None, math.nan))
            continue
        est = mc_mean(ts.ZT ** float(theta))
        target = math.exp(model.horizon * kap)
        rows.append((float(theta), kap, est, est.z(target)))
    return rows


@dataclass
class MartingaleReport:
    assets: list
    analytic_residual: float
    terminal: list
    increments: list
    passed: bool


def martingale_check(model: MarketModel, pair: GirsanovPair,
                     asset_index: int | None = None, n_paths: int = 2000,
                     n_steps: int = 16, seed: int = 0,
                     tol: float = 1e-10) -> MartingaleReport:
    """Under Q each asset must be a martingale: analytic drift residual plus
    MC tests of E_Q[S_T] = S_0 and of every regular-grid increment mean.

    asset_index restricts the MC tests to one component; the analytic
    residual always covers the full system.
    """
    res = martingale_residual(model, pair.spec, pair.beta, tol)
    paths = simulate_paths(model, pair, n_paths, n_steps, seed, under="Q")
    assets = list(range(model.dim)) if asset_index is None else [int(asset_index)]
    S = np.stack([p.regular_values(p.S) for p in paths])  # (n_paths, n_steps+1, d)
    terminal = [mc_mean(S[:, -1, i]) for i in assets]
    increments = []
    ok = res.norm <= max(tol, 1e-8)
    for k, i in enumerate(assets):
        inc = np.diff(S[:, :, i], axis=1)
        for j in range(inc.shape[1]):
            est = mc_mean(inc[:, j])
            increments.append(est)
            ok = ok and est.within(0.0)
        ok = ok and terminal[k].within(float(model.spot[i]))
    return MartingaleReport(assets=assets, analytic_residual=res.norm,
                            terminal=terminal, increments=increments, passed=bool(ok))


def terminal_replication_study(problem: StrategyProblem, paths: list[SimulatedPath],
                               strides, form: str = "kernel") -> dict[int, float]:
    """RMS terminal replication error per coarsening stride (largest = coarsest)."""
    out = {}
    for stride in strides:
        res = terminal_identity_residuals(problem, paths, form=form, stride=int(stride))
        out[int(stride)] = float(np.sqrt(np.mean(res ** 2)))
    return out


def decay_rates(rms_by_stride: dict[int, float]) -> list[float]:
    """log2 RMS ratios between successive grid halvings (coarse to fine)."""
    strides = sorted(rms_by_stride, reverse=True)
    rates = []
    for s_coarse, s_fine in zip(strides[:-1], strides[1:]):
        if s_coarse != 2 * s_fine:
            raise VerificationError("strides must halve between refinement levels")
        num = rms_by_stride[s_coarse]
        den = rms_by_stride[s_fine]
        rates.append(math.log2(num / den) if den > 0 else math.inf)
    return rates


def select_strategy_scaling(problem: StrategyProblem, paths: list[SimulatedPath],
                            stride: int = 1):
    """Arbitrate between the two strategy scalings by terminal replication RMS.

    Returns (best_form, {form: rms}).  The two candidates differ by the
    constant a of the divergence family, so for a = 1 they tie to rounding.
    """
    rms = {}
    for form in FORMS:
        res = terminal_identity_residuals(problem, paths, form=form, stride=stride)
        rms[form] = float(np.sqrt(np.mean(res ** 2)))
    best = min(rms, key=rms.get)
    return best, rms


def representation_residual(problem: StrategyProblem, paths: list[SimulatedPath],
                            fractions=(0.25, 0.5, 0.75), stride: int = 1) -> dict[float, float]:
    """RMS gap between the kernel decomposition of the value process and its
    closed form, at interior fractions of the horizon.

    The value process decomposes as capital, minus the xi kernel integrated
    against the Q-Brownian part, minus the H jump terms, plus their Q-rate
    compensator; paths must be simulated under Q.  The fraction 0 entry is
    exact by construction and is included as a sanity anchor.
    """
    spec = problem.spec
    g1 = spec.gamma + 1.0
    T = problem.T
    jumps = problem.model.triplet.jumps
    Y = problem.pair.Y
    if jumps.is_empty:
        c_h = 0.0
    elif spec.gamma == -1.0:
        c_h = spec.a * jumps.integrate(lambda y: special.xlogy(Y(y), Y(y)))
    else:
        c_h = spec.a / g1 * jumps.integrate(lambda y: (Y(y) ** g1 - 1.0) * Y(y))

    probes = [0.0] + [float(f) for f in fractions]
    sq = {f: 0.0 for f in probes}
    npaths = len(paths)
    for path in paths:
        if path.under != "Q":
            raise VerificationError("representation residuals need Q-simulated paths")
        nodes = subgrid_indices(path, stride) if stride > 1 else np.arange(path.n_nodes)
        t = path.t[nodes]
        Z = path.Z[nodes]
        lamz = problem.lam * Z
        ek = np.exp((T - t) * problem.kappa_plus)
        # continuous part: -a (lam Z)^{gamma+1} e^{(T-t)kappa} beta . dXc
        w = spec.a * lamz ** g1 * ek
        dxc = np.diff(path.Xc[nodes], axis=0) @ problem.pair.beta
        inc = -w[:-1] * dxc
        # compensator of the H jump terms
        if spec.gamma == -1.0:
            ih = np.full(t.size, c_h)
        else:
            ih = lamz ** g1 * ek * c_h
        inc = inc + ih[:-1] * np.diff(t)
        # the H jump terms themselves, at pre-jump states
        if path.jump_nodes.size:
            pos = np.searchsorted(nodes, path.jump_nodes)
            zpre = problem.lam * path.Z_pre[path.jump_nodes]
            Yj = Y(path.jump_sizes)
            if spec.gamma == -1.0:
                hterm = spec.a * np.log(Yj)
            else:
                hterm = (
                    spec.a / g1
                    * zpre ** g1
                    * (Yj ** g1 - 1.0)
                    * np.exp((T - path.t[path.jump_nodes]) * problem.kappa_plus)
                )
            add = np.zeros(t.size - 1)
            np.add.at(add, pos - 1, -hterm)
            inc = inc + add
        V = np.empty(t.size)
        V[0] = problem.x
        V[1:] = problem.x + np.cumsum(inc)
        target = wealth_closed_form(problem, t, Z)
        for f in probes:
            k = int(np.argmin(np.abs(t - f * T)))
            sq[f] += (V[k] - target[k]) ** 2
    return {f: math.sqrt(v / npaths) for f, v in sq.items()}


@dataclass
class PreservationReport:
    """Stationary-independent-increments diagnostics on Q-simulated paths."""

    ks_stat: list
    ks_pvalue: list
    lag_corr: list
    mean_z: list
    n_increments: int
    passed: bool
    notes: list = field(default_factory=list)


def levy_preservation_test(model: MarketModel, pair: GirsanovPair, n_paths: int = 10_000,
                           n_steps: int = 64, seed: int = 0,
                           corrupt_drift_ramp: float = 0.0) -> PreservationReport:
    """Test that X keeps stationary independent increments under Q.

    Per component: two-sample KS between first-half and second-half
    increments (stationarity), lag-1 autocorrelation (independence), and a
    z-test of the mean increment against the analytic Q-mean rate.
    corrupt_drift_ramp injects a linearly growing artificial drift so the
    test's power can itself be verified.
    """
    paths = simulate_paths(model, pair, n_paths, n_steps, seed, under="Q")
    d = model.dim
    X = np.stack([p.regular_values(p.X) for p in paths])
    inc = np.diff(X, axis=1)  # (n_paths, n_steps, d)
    h = model.horizon / n_steps
    if corrupt_drift_ramp != 0.0:
        ramp = corrupt_drift_ramp * (np.arange(n_steps) + 0.5) / n_steps * h
        inc = inc + ramp[None, :, None]

    qt = q_triplet(model, pair)
    mean_rate = linear_drift(qt).copy()
    if not qt.jumps.is_empty:
        for i in range(d):
            fn = lambda y, i=i: y[:, i]
            if qt.jumps.tail_converges(lambda y, i=i: np.abs(y[:, i])):
                mean_rate[i] += qt.jumps.integrate(fn)
            else:
                mean_rate[i] = math.nan

    # cumulative-sum dust splits mathematically equal increments into nearby
    # floats (visible when c = 0 makes the law discrete); snap to a grid far
    # below any statistical resolution before comparing halves
    g = 1e-12 * max(1.0, float(np.max(np.abs(X))))
    snapped = np.round(inc / g) * g

    half = n_steps // 2
    ks_stat, ks_p, lag, mz = [], [], [], []
    ok = True
    notes = []
    for i in range(d):
        early = snapped[:, :half, i].ravel()
        late = snapped[:, half:, i].ravel()
        ks = stats.ks_2samp(early, late)
        ks_stat.append(float(ks.statistic))
        ks_p.append(float(ks.pvalue))
        ok = ok and ks.pvalue > 1e-3

        a = inc[:, :-1, i].ravel()
        b = inc[:, 1:, i].ravel()
        r = float(np.corrcoef(a, b)[0, 1])
        lag.append(r)
        bound = 4.0 / math.sqrt(a.size)
        ok = ok and abs(r) <= bound

        if math.isfinite(mean_rate[i]):
            est = mc_mean(inc[:, :, i].ravel())
            z = est.z(mean_rate[i] * h)
            mz.append(float(z))
            ok = ok and abs(z) <= 4.0
        else:
            mz.append(math.nan)
            notes.append(f"component {i}: Q-mean rate not integrable, mean test skipped")
    return PreservationReport(ks_stat=ks_stat, ks_pvalue=ks_p, lag_corr=lag,
                              mean_z=mz, n_increments=int(inc[:, :, 0].size),
                              passed=bool(ok), notes=notes)


def constant_mix_terminal_wealth(model: MarketModel, ts, x: float, pis: np.ndarray):
    """Exact terminal wealth of constant-proportion strategies on terminal draws.

    For fixed fractions pi the self-financing wealth solves a linear SDE and
    V_T = x exp(pi.(Xc_T + (b~ + diag c / 2) h) - pi' c pi h / 2)
          * prod_jumps (1 + pi . (e^jump - 1)).
    Returns (wealth (m, n), positive (m, n)) where positive marks paths whose
    every jump factor stays above zero (others get wealth 0, a ruin state).
    """
    pis = np.atleast_2d(np.asarray(pis, dtype=float))
    trip = model.triplet
    h = ts.horizon
    drift = linear_drift(trip) + 0.5 * np.diag(trip.c)
    n = ts.n
    m = pis.shape[0]
    expo = ts.XcT @ pis.T + h * (pis @ drift)[None, :] \
        - 0.5 * h * np.einsum("mi,ij,mj->m", pis, trip.c, pis)[None, :]
    wealth = x * np.exp(expo).T  # (m, n)
    positive = np.ones((m, n), dtype=bool)
    if ts.jump_sizes.shape[0]:
        factors = 1.0 + np.expm1(ts.jump_sizes) @ pis.T  # (K, m)
        pos = factors > 0.0
        logf = np.where(pos, np.log(np.where(pos, factors, 1.0)), 0.0)
        for j in range(m):
            lsum = np.zeros(n)
            np.add.at(lsum, ts.jump_path, logf[:, j])
            wealth[j] *= np.exp(lsum)
            bad = np.zeros(n, dtype=bool)
            np.logical_or.at(bad, ts.jump_path, ~pos[:, j])
            positive[j] = ~bad
            wealth[j, bad] = 0.0
    return wealth, positive


@dataclass
class DominanceReport:
    pis: np.ndarray
    mean_utility: np.ndarray
    se_utility: np.ndarray
    diff_mean: np.ndarray
    diff_se: np.ndarray
    admissible: np.ndarray
    optimal_utility: McEstimate
    best_pi: np.ndarray
    passed: bool


def _dominance_on_sample(problem: StrategyProblem, ts, pis: np.ndarray,
                         k: float = 3.0) -> DominanceReport:
    """Dominance comparison on a fixed terminal sample (common random numbers)."""
    if ts.under != "P":
        raise VerificationError("dominance scan expects a P-measure terminal sample")
    spec = problem.spec
    u_star = dv.utility(spec, -dv.fprime(spec, problem.lam * ts.ZT))
    star = mc_mean(u_star)
    wealth, positive = constant_mix_terminal_wealth(problem.model, ts, problem.x, pis)
    pis = np.atleast_2d(np.asarray(pis, dtype=float))
    m = pis.shape[0]
    floor = dv.wealth_floor(spec)
    ceil = dv.wealth_ceiling(spec)
    mean_u = np.full(m, -math.inf)
    se_u = np.full(m, math.nan)
    dmean = np.full(m, math.inf)
    dse = np.full(m, math.nan)
    admissible = np.zeros(m, dtype=bool)
    ok = True
    for j in range(m):
        w = wealth[j]
        if not (positive[j].all() and w.min() > floor and w.max() < ceil):
            continue
        admissible[j] = True
        u = dv.utility(spec, w)
        est = mc_mean(u)
        mean_u[j] = est.value
        se_u[j] = est.se
        dd = mc_mean(u_star - u)
        dmean[j] = dd.value
        dse[j] = dd.se
        ok = ok and dd.value >= -k * dd.se
    finite = np.where(admissible)[0]
    best = pis[finite[np.argmax(mean_u[finite])]] if finite.size else pis[0] * math.nan
    return DominanceReport(pis=pis, mean_utility=mean_u, se_utility=se_u,
                           diff_mean=dmean, diff_se=dse, admissible=admissible,
                           optimal_utility=star, best_pi=best, passed=bool(ok))


def utility_dominance_scan(problem: StrategyProblem, proportion_grid: np.ndarray,
                           n_paths: int = 10_000, seed: int = 0,
                           k: float = 3.0) -> DominanceReport:
    """Check the optimal strategy weakly dominates every constant mix on a grid.

    Uses common random numbers: the optimal terminal wealth -f'(lambda Z_T)
    and every constant-mix wealth are evaluated on the same P-measure
    terminal sample, and the comparison is on paired differences.  Mixes
    with a ruined or out-of-domain path are marked inadmissible and skipped
    (ruin is already dominated).  Passes when mean(u* - u_pi) >= -k se for
    every admissible grid point.
    """
    ts = sample_terminals(problem.model, problem.pair, n_paths, seed, under="P")
    return _dominance_on_sample(problem, ts, proportion_grid, k=k)


def run_suite(model: MarketModel, spec: dv.DivergenceSpec, problem: StrategyProblem,
              suite: str = "all", n_paths: int = 400, n_steps: int = 64,
              n_terminal: int = 20_000, seed: int = 0) -> dict:
    """Run a verification battery and return a deterministic plain dict.

    suite selects a section group: "martingale" (analytic residual, asset
    martingale MC, moment-curve invariants and MC, budget), "representation"
    (both strategy scalings, terminal replication refinement, value-process
    decomposition residuals), "preservation" (increment laws under Q, at
    least 10^4 paths), "dominance" (constant-mix scan), or "all".
    """
    if suite not in SUITES:
        raise VerificationError(f"unknown suite {suite!r}; expected one of {SUITES}")
    pair = problem.pair
    curve = problem.curve
    g1 = spec.gamma + 1.0
    report: dict = {
        "suite": suite,
        "model_dim": model.dim,
        "divergence": spec.name,
        "beta": [float(b) for b in pair.beta],
        "capital": problem.x,
        "lambda": problem.lam,
        "kappa_plus": problem.kappa_plus,
        "hellinger_half_rate": hellinger_half(model, pair) / model.horizon,
    }
    gates = []

    if suite in ("martingale", "all"):
        mart = martingale_check(model, pair, n_paths=max(n_paths, 500), n_steps=8,
                                seed=seed)
        report["martingale"] = {
            "analytic_residual": mart.analytic_residual,
            "terminal_z": [
                e.z(float(model.spot[i])) for i, e in zip(mart.assets, mart.terminal)
            ],
            "max_increment_z": max(abs(e.z(0.0)) for e in mart.increments),
            "passed": mart.passed,
        }
        gates.append(mart.passed)

        report["moment_invariants"] = {
            "kappa_q_0": curve.kappa_q(0.0),
            "kappa_q_m1": curve.kappa_q(-1.0),
            "kappa_p_0": curve.kappa_p(0.0),
            "kappa_p_1": curve.kappa_p(1.0),
        }
        gates.append(
            max(abs(v) for v in report["moment_invariants"].values()) <= 1e-12
        )
        rows = moment_check(model, pair, curve, [g1, 1.0], n=n_terminal, seed=seed + 1)
        report["moment_mc"] = [
            {"theta": th, "kappa": kap, "z": z if est is not None else None}
            for th, kap, est, z in rows
        ]

        bud = budget_check(problem, n=n_terminal, seed=seed + 2)
        report["budget"] = {"mc": bud.value, "target": problem.x, "z": bud.z(problem.x)}
        gates.append(abs(report["budget"]["z"]) <= 3.0)

    if suite in ("representation", "all"):
        paths_p = simulate_paths(model, pair, n_paths, n_steps, seed + 3, under="P")
        form, rms = select_strategy_scaling(problem, paths_p)
        study = terminal_replication_study(problem, paths_p, strides=[4, 2, 1], form=form)
        report["replication"] = {
            "selected_form": form,
            "rms_by_form": rms,
            "rms_by_stride": {str(k): v for k, v in sorted(study.items(), reverse=True)},
            "decay_rates": decay_rates(study),
        }

        paths_q = simulate_paths(model, pair, n_paths, n_steps, seed + 4, under="Q")
        rep = representation_residual(problem, paths_q)
        report["representation"] = {f"{k:g}": v for k, v in sorted(rep.items())}

    if suite in ("preservation", "all"):
        pres = levy_preservation_test(model, pair, n_paths=max(n_paths, 10_000),
                                      n_steps=n_steps, seed=seed + 5)
        report["preservation"] = {
            "ks_pvalue": pres.ks_pvalue,
            "lag_corr": pres.lag_corr,
            "mean_z": pres.mean_z,
            "passed": pres.passed,
        }
        gates.append(pres.passed)

    if suite in ("dominance", "all"):
        pis = np.linspace(0.0, 3.5, 41)[:, None] * np.ones(model.dim)
        dom = utility_dominance_scan(problem, pis, n_paths=max(n_terminal, 10_000),
                                     seed=seed + 6)
        report["dominance"] = {
            "n_grid": int(dom.pis.shape[0]),
            "n_admissible": int(dom.admissible.sum()),
            "optimal_utility": dom.optimal_utility.value,
            "best_pi": [float(v) for v in np.atleast_1d(dom.best_pi)],
            "min_diff_z": float(
                np.min((dom.diff_mean / dom.diff_se)[dom.admissible])
            ) if dom.admissible.any() else math.nan,
            "scan": [
                {
                    "pi": [float(v) for v in dom.pis[j]],
                    "admissible": bool(dom.admissible[j]),
                    "mean_utility": float(dom.mean_utility[j]),
                    "se_utility": float(dom.se_utility[j]),
                    "diff_mean": float(dom.diff_mean[j]),
                    "diff_se": float(dom.diff_se[j]),
                }
                for j in range(dom.pis.shape[0])
            ],
            "passed": dom.passed,
        }
        gates.append(dom.passed)

    report["passed"] = bool(all(gates)) if gates else True
    return report
