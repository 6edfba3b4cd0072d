"""Command-line entry point: config parsing, run orchestration, artifacts.

Subcommands
-----------
model validate      structural and integrability diagnostics for a config
measure solve       solve the martingale condition, report the pair and Q
simulate            write simulated paths of (X, S, Z) to CSV
strategy evaluate   optimal strategy, terminal wealth sample, residual stats
verify run          verification suites with PASS/FAIL gates
report              pretty-print a previously written summary file

Every run writes into one output directory (``--out``, else the
LEVYMART_OUT environment variable, else ./levymart-out): a ``summary.json``
with the results, CSV tables where the command produces per-path or
per-grid-point data, and a ``manifest.json`` recording inputs and versions.
For a fixed config and seed every output is byte-identical across reruns;
the only timestamp lives in the manifest.

Exit codes: 0 success, 2 configuration error, 3 solver failure,
4 verification assertion failure.
"""

from __future__ import annotations

import argparse
import csv
import datetime
import importlib.resources
import json
import math
import os
import platform
import sys
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

import numpy as np
import scipy

from . import __version__
from . import divergence as dv
from .density_engine import MomentCurve, sample_terminals, simulate_paths
from .errors import ConfigError, LevymartError, SolverError, VerificationError
from .levy_core import (
    AtomicJumps,
    DensityJumps,
    JumpMeasure,
    LevyTriplet,
    MarketModel,
    NoJumps,
    validate_model,
)
from .measure_solver import hellinger_half, q_triplet, solve_beta
from .strategy_engine import (
    build_problem,
    duality_gap,
    expected_utility,
    terminal_identity_residuals,
)
from .verification_harness import SUITES, mc_mean, run_suite, select_strategy_scaling

__all__ = ["main", "build_parser", "load_config", "build_model", "parse_divergence"]

BUILTIN_CONFIGS = (
    "black_scholes",
    "merton_jump",
    "kou_double_exp",
    "single_atom_pure_jump",
)
_ALIASES = {"single_atom": "single_atom_pure_jump"}


# -- configuration ---------------------------------------------------------


def load_config(source: str) -> dict:
    """Read a TOML model config from a file path or a bundled name."""
    path = Path(source)
    if path.is_file():
        raw = path.read_bytes()
    else:
        name = _ALIASES.get(source, source)
        if name in BUILTIN_CONFIGS:
            raw = (
                importlib.resources.files("levymart")
                .joinpath(f"configs/{name}.toml")
                .read_bytes()
            )
        else:
            raise ConfigError(
                f"model {source!r} is neither a readable file nor a bundled "
                f"config (bundled: {', '.join(BUILTIN_CONFIGS)})"
            )
    try:
        return tomllib.loads(raw.decode("utf-8"))
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"invalid TOML in {source}: {exc}") from None


def _build_jumps(section: dict, dim: int) -> JumpMeasure:
    kind = section.get("kind", "none")
    if kind == "none":
        return NoJumps(dim)
    if kind == "atoms":
        return AtomicJumps(section["locations"], section["weights"])
    if dim != 1:
        raise ConfigError(f"jump kind {kind!r} supports one-dimensional models only")
    if kind == "gaussian":
        lam = float(section["intensity"])
        mu = float(section["mean"])
        sd = float(section["std"])
        if lam <= 0.0 or sd <= 0.0:
            raise ConfigError("gaussian jumps need positive intensity and std")
        coef = lam / (sd * math.sqrt(2.0 * math.pi))

        def pdf(y, coef=coef, mu=mu, sd=sd):
            y = np.asarray(y, dtype=float)
            return coef * np.exp(-0.5 * ((y - mu) / sd) ** 2)

        def sampler(rng, n, mu=mu, sd=sd):
            return rng.normal(mu, sd, n)

        return DensityJumps(
            pdf,
            [(-math.inf, math.inf)],
            effective_range=(mu - 12.0 * sd, mu + 12.0 * sd),
            sampler=sampler,
            label="gaussian",
        )
    if kind == "double_exp":
        lam = float(section["intensity"])
        p_up = float(section["p_up"])
        ep = float(section["eta_plus"])
        em = float(section["eta_minus"])
        if lam <= 0.0 or not 0.0 <= p_up <= 1.0 or ep <= 1.0 or em <= 0.0:
            raise ConfigError(
                "double_exp jumps need intensity > 0, 0 <= p_up <= 1, "
                "eta_plus > 1 (integrable e^y tail), eta_minus > 0"
            )

        def pdf(y, lam=lam, p_up=p_up, ep=ep, em=em):
            y = np.asarray(y, dtype=float)
            out = np.zeros_like(y)
            up = y > 0.0
            out[up] = lam * p_up * ep * np.exp(-ep * y[up])
            dn = y < 0.0
            out[dn] = lam * (1.0 - p_up) * em * np.exp(em * y[dn])
            return out

        def sampler(rng, n, p_up=p_up, ep=ep, em=em):
            up = rng.random(n) < p_up
            mags = rng.exponential(1.0, n)
            return np.where(up, mags / ep, -mags / em)

        return DensityJumps(
            pdf,
            [(-math.inf, 0.0), (0.0, math.inf)],
            effective_range=(-40.0 / em, 40.0 / ep),
            sampler=sampler,
            label="double_exp",
        )
    if kind == "power_tail":
        coef = float(section["coefficient"])
        alpha = float(section["exponent"])
        lower = float(section["lower"])
        upper = float(section.get("effective_upper", 1e6))
        if coef <= 0.0 or lower <= 0.0 or upper <= lower:
            raise ConfigError("power_tail jumps need positive coefficient and 0 < lower < effective_upper")
        if alpha <= 1.0:
            raise ConfigError("power_tail exponent must exceed 1 (finite jump mass)")

        def pdf(y, coef=coef, alpha=alpha, lower=lower):
            y = np.asarray(y, dtype=float)
            out = np.zeros_like(y)
            ok = y >= lower
            out[ok] = coef * y[ok] ** (-alpha)
            return out

        def sampler(rng, n, alpha=alpha, lower=lower):
            u = rng.random(n)
            return lower * (1.0 - u) ** (-1.0 / (alpha - 1.0))

        return DensityJumps(
            pdf,
            [(lower, math.inf)],
            effective_range=(lower, upper),
            sampler=sampler,
            label="power_tail",
        )
    raise ConfigError(
        f"unknown jump kind {kind!r}; expected none, atoms, gaussian, double_exp or power_tail"
    )


def build_model(cfg: dict) -> MarketModel:
    """Assemble a MarketModel from a parsed config dictionary."""
    msec = cfg.get("model")
    if not isinstance(msec, dict):
        raise ConfigError("config needs a [model] section")
    try:
        b = msec["drift_b"]
        c = msec["gauss_c"]
        spot = msec["spot"]
        horizon = float(msec["horizon_T"])
    except KeyError as exc:
        raise ConfigError(f"[model] section is missing key {exc}") from None
    rate = float(msec.get("rate_r", 0.0))
    b_arr = np.asarray(b, dtype=float).ravel()
    dim = int(msec.get("dim", b_arr.size))
    if dim != b_arr.size:
        raise ConfigError(f"dim = {dim} does not match drift_b of length {b_arr.size}")
    try:
        jumps = _build_jumps(cfg.get("jumps", {}), dim)
    except KeyError as exc:
        raise ConfigError(f"[jumps] section is missing key {exc}") from None
    triplet = LevyTriplet(b_arr, c, jumps)
    return MarketModel(triplet, spot, horizon, rate)


def parse_divergence(text: str) -> dv.DivergenceSpec:
    """Divergence preset from CLI text: log, exponential, power:<p>, custom:a,g,fp1,f1."""
    t = text.strip()
    try:
        if t == "log":
            return dv.DivergenceSpec.log()
        if t == "exponential":
            return dv.DivergenceSpec.exponential()
        if t.startswith("power:"):
            return dv.DivergenceSpec.power(float(t.split(":", 1)[1]))
        if t.startswith("custom:"):
            parts = [float(v) for v in t.split(":", 1)[1].split(",")]
            if len(parts) != 4:
                raise ConfigError(
                    "custom divergence needs four values: custom:a,gamma,fprime_one,f_one"
                )
            return dv.DivergenceSpec.custom(*parts)
    except ValueError as exc:
        raise ConfigError(f"could not parse divergence {text!r}: {exc}") from None
    raise ConfigError(
        f"unknown divergence {text!r}; use log, exponential, power:<p> or "
        "custom:a,gamma,fprime_one,f_one"
    )


def _load_checked_model(args) -> MarketModel:
    model = build_model(load_config(args.model))
    diag = validate_model(model)
    if not diag.ok:
        raise ConfigError("invalid model config: " + "; ".join(diag.issues))
    return model


# -- artifacts -------------------------------------------------------------


def _resolve_out(args) -> Path:
    out = args.out or os.environ.get("LEVYMART_OUT") or "levymart-out"
    path = Path(out)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    return obj


def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n")


def _write_manifest(out: Path, command: str, args) -> None:
    options = {
        k: _jsonable(v)
        for k, v in sorted(vars(args).items())
        if k not in ("func",) and not callable(v)
    }
    manifest = {
        "command": command,
        "options": options,
        "timestamp": datetime.datetime.now(datetime.timezone.utc).isoformat(
            timespec="seconds"
        ),
        "versions": {
            "levymart": __version__,
            "numpy": np.__version__,
            "python": platform.python_version(),
            "scipy": scipy.__version__,
        },
    }
    _write_json(out / "manifest.json", manifest)


def _cell(v):
    if isinstance(v, (bool, np.bool_)):
        return int(bool(v))
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    return v


def _write_csv(path: Path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_cell(v) for v in row])


def _render(obj, indent: str = "") -> list[str]:
    lines = []
    if isinstance(obj, dict):
        for k, v in obj.items():
            if isinstance(v, dict) and v:
                lines.append(f"{indent}{k}:")
                lines.extend(_render(v, indent + "  "))
            elif isinstance(v, list) and v and isinstance(v[0], dict):
                lines.append(f"{indent}{k}: [{len(v)} rows]")
            else:
                lines.append(f"{indent}{k}: {_scalar_text(v)}")
    else:
        lines.append(f"{indent}{_scalar_text(obj)}")
    return lines


def _scalar_text(v) -> str:
    if isinstance(v, float):
        return format(v, ".10g")
    if isinstance(v, list):
        return "[" + ", ".join(_scalar_text(x) for x in v) + "]"
    return str(v)


def _describe_model(model: MarketModel) -> dict:
    t = model.triplet
    return {
        "dim": model.dim,
        "drift_b": [float(v) for v in t.b],
        "gauss_c": [[float(v) for v in row] for row in t.c],
        "spot": [float(v) for v in model.spot],
        "rate_r": model.rate,
        "horizon_T": model.horizon,
        "jumps": repr(t.jumps),
    }


# -- subcommands -----------------------------------------------------------


def cmd_model_validate(args) -> None:
    model = build_model(load_config(args.model))
    diag = validate_model(model)
    out = _resolve_out(args)
    _write_json(out / "summary.json", {
        "command": "model validate",
        "model": _describe_model(model),
        "ok": diag.ok,
        "issues": diag.issues,
    })
    _write_manifest(out, "model validate", args)
    if diag.ok:
        print(f"model ok: dim={model.dim}, horizon_T={model.horizon:g}, "
              f"jumps={model.triplet.jumps!r}")
        return
    for issue in diag.issues:
        print(f"invalid: {issue}")
    raise ConfigError("; ".join(diag.issues))


def cmd_measure_solve(args) -> None:
    model = _load_checked_model(args)
    spec = parse_divergence(args.divergence)
    pair = solve_beta(model, spec, tol=args.tol)
    curve = MomentCurve(model, pair)
    qt = q_triplet(model, pair)
    g1 = spec.gamma + 1.0
    cond = pair.conditions
    summary = {
        "command": "measure solve",
        "model": _describe_model(model),
        "divergence": {
            "name": spec.name, "a": spec.a, "gamma": spec.gamma,
            "fprime_one": spec.fprime_one, "f_one": spec.f_one,
        },
        "beta": [float(v) for v in pair.beta],
        "residual_norm": pair.residual_norm,
        "conditions": {
            "ok": cond.ok,
            "positivity_min": cond.positivity_min,
            "integrability_value": cond.integrability_value,
            "martingale_residual": cond.martingale_residual,
            "kappa_finite": cond.kappa_finite,
            "messages": cond.messages,
        },
        "q_triplet": {
            "drift_b": [float(v) for v in qt.b],
            "gauss_c": [[float(v) for v in row] for row in qt.c],
            "jumps": repr(qt.jumps),
            "jump_mass": 0.0 if qt.jumps.is_empty else qt.jumps.total_mass(),
        },
        "hellinger_half": hellinger_half(model, pair),
        "kappa": {
            "q_at_gamma_plus_1": curve.kappa_q(g1),
            "q_at_gamma_plus_2": curve.kappa_q(g1 + 1.0),
            "q_at_0": curve.kappa_q(0.0),
            "q_at_minus_1": curve.kappa_q(-1.0),
        },
    }
    out = _resolve_out(args)
    _write_json(out / "summary.json", summary)
    _write_manifest(out, "measure solve", args)
    print("\n".join(_render(summary)))


def cmd_simulate(args) -> None:
    model = _load_checked_model(args)
    spec = parse_divergence(args.divergence)
    pair = solve_beta(model, spec, tol=args.tol)
    paths = simulate_paths(model, pair, args.paths, args.grid, args.seed,
                           under=args.under)
    d = model.dim
    header = (["path_id", "t"] + [f"X{i+1}" for i in range(d)]
              + [f"S{i+1}" for i in range(d)] + ["Z"])

    def rows():
        for ip, p in enumerate(paths):
            for k in range(p.n_nodes):
                yield ([ip, p.t[k]] + [p.X[k, i] for i in range(d)]
                       + [p.S[k, i] for i in range(d)] + [p.Z[k]])

    out = _resolve_out(args)
    _write_csv(out / "paths.csv", header, rows())
    zT = np.array([p.Z[-1] for p in paths])
    sT = np.stack([p.S[-1] for p in paths])
    summary = {
        "command": "simulate",
        "under": args.under,
        "n_paths": args.paths,
        "n_steps": args.grid,
        "seed": args.seed,
        "beta": [float(v) for v in pair.beta],
        "terminal": {
            "mean_S": [float(v) for v in sT.mean(axis=0)],
            "mean_Z": float(zT.mean()),
            "min_Z": float(zT.min()),
            "max_Z": float(zT.max()),
        },
    }
    _write_json(out / "summary.json", summary)
    _write_manifest(out, "simulate", args)
    print(f"wrote {sum(p.n_nodes for p in paths)} rows for {args.paths} paths "
          f"under {args.under} to {out / 'paths.csv'}")


def cmd_strategy_evaluate(args) -> None:
    model = _load_checked_model(args)
    spec = parse_divergence(args.divergence)
    pair = solve_beta(model, spec, tol=args.tol)
    problem = build_problem(model, spec, pair, args.capital)

    sim = simulate_paths(model, pair, min(args.paths, 2000), args.grid,
                         args.seed, under="P")
    form, rms_by_form = select_strategy_scaling(problem, sim)
    residuals = terminal_identity_residuals(problem, sim, form=form)

    ts = sample_terminals(model, pair, args.paths, args.seed + 1, under="P")
    utils = expected_utility(problem, ts.ZT)
    est = mc_mean(utils)
    gaps = duality_gap(problem, ts.ZT)
    wealth = -dv.fprime(spec, problem.lam * ts.ZT)

    out = _resolve_out(args)
    _write_csv(
        out / "wealth.csv",
        ["path_id", "z_terminal", "wealth", "utility"],
        ([i, ts.ZT[i], wealth[i], utils[i]] for i in range(ts.n)),
    )
    constants = problem.gamma_constants
    summary = {
        "command": "strategy evaluate",
        "divergence": spec.name,
        "capital": problem.x,
        "lambda": problem.lam,
        "beta": [float(v) for v in pair.beta],
        "gamma_vec": [float(v) for v in pair.beta / spec.a],
        "branch": problem.branch,
        "gamma_constants": None if constants is None else {
            "analytic": [float(v) for v in constants.analytic],
            "finite_difference": [float(v) for v in constants.finite_difference],
            "discrepancy": constants.discrepancy,
        },
        "kappa_plus": problem.kappa_plus,
        "selected_form": form,
        "rms_by_form": rms_by_form,
        "expected_utility": {"value": est.value, "se": est.se, "n": est.n},
        "duality_gap_max": float(np.max(np.abs(gaps))),
        "terminal_residual": {
            "rms": float(np.sqrt(np.mean(residuals ** 2))),
            "max_abs": float(np.max(np.abs(residuals))),
            "n_paths": int(residuals.size),
            "grid": args.grid,
        },
    }
    _write_json(out / "summary.json", summary)
    _write_manifest(out, "strategy evaluate", args)
    print("\n".join(_render(summary)))


def _verify_csvs(out: Path, report: dict) -> None:
    if "martingale" in report:
        rows = [("analytic_residual", report["martingale"]["analytic_residual"])]
        rows += [(f"terminal_z_{i+1}", z)
                 for i, z in enumerate(report["martingale"]["terminal_z"])]
        rows.append(("max_increment_z", report["martingale"]["max_increment_z"]))
        rows.append(("passed", report["martingale"]["passed"]))
        _write_csv(out / "martingale.csv", ["metric", "value"], rows)
    if "replication" in report:
        rep = report["replication"]
        rows = [("selected_form", "", rep["selected_form"])]
        rows += [("rms_by_form", k, v) for k, v in sorted(rep["rms_by_form"].items())]
        rows += [("rms_by_stride", k, v) for k, v in rep["rms_by_stride"].items()]
        rows += [("decay_rate", str(i), v) for i, v in enumerate(rep["decay_rates"])]
        _write_csv(out / "replication.csv", ["record", "key", "value"], rows)
    if "representation" in report:
        _write_csv(out / "representation.csv", ["fraction", "rms"],
                   sorted(report["representation"].items(), key=lambda kv: float(kv[0])))
    if "preservation" in report:
        pres = report["preservation"]
        rows = [
            (i + 1, pres["ks_pvalue"][i], pres["lag_corr"][i], pres["mean_z"][i])
            for i in range(len(pres["ks_pvalue"]))
        ]
        _write_csv(out / "preservation.csv",
                   ["component", "ks_pvalue", "lag_corr", "mean_z"], rows)
    if "dominance" in report:
        scan = report["dominance"]["scan"]
        d = len(scan[0]["pi"]) if scan else 0
        header = ([f"pi_{i+1}" for i in range(d)]
                  + ["admissible", "mean_utility", "se_utility", "diff_mean", "diff_se"])
        rows = [
            row["pi"] + [row["admissible"], row["mean_utility"], row["se_utility"],
                         row["diff_mean"], row["diff_se"]]
            for row in scan
        ]
        _write_csv(out / "dominance.csv", header, rows)


def cmd_verify_run(args) -> None:
    model = _load_checked_model(args)
    spec = parse_divergence(args.divergence)
    pair = solve_beta(model, spec, tol=args.tol)
    problem = build_problem(model, spec, pair, args.capital)
    report = run_suite(model, spec, problem, suite=args.suite,
                       n_paths=args.paths, n_steps=args.grid, seed=args.seed)
    out = _resolve_out(args)
    _write_json(out / "summary.json", report)
    _write_manifest(out, "verify run", args)
    _verify_csvs(out, report)

    if "martingale" in report:
        print(f"martingale: {'PASS' if report['martingale']['passed'] else 'FAIL'} "
              f"(analytic residual {report['martingale']['analytic_residual']:.3e})")
        inv = max(abs(v) for v in report["moment_invariants"].values())
        print(f"moment invariants: {'PASS' if inv <= 1e-12 else 'FAIL'} (max {inv:.3e})")
        print(f"budget: {'PASS' if abs(report['budget']['z']) <= 3.0 else 'FAIL'} "
              f"(z = {report['budget']['z']:.2f})")
    if "replication" in report:
        rep = report["replication"]
        rates = ", ".join(f"{r:.2f}" for r in rep["decay_rates"])
        print(f"replication: selected {rep['selected_form']} "
              f"(decay rates [{rates}] log2 per halving)")
        finest = report["representation"]
        vals = ", ".join(f"{k}: {v:.3e}" for k, v in sorted(finest.items(),
                                                            key=lambda kv: float(kv[0])))
        print(f"representation resid.rms {{{vals}}}")
    if "preservation" in report:
        print(f"preservation: {'PASS' if report['preservation']['passed'] else 'FAIL'}")
    if "dominance" in report:
        dom = report["dominance"]
        print(f"dominance: {'PASS' if dom['passed'] else 'FAIL'} "
              f"({dom['n_admissible']}/{dom['n_grid']} admissible, "
              f"min diff z = {dom['min_diff_z']:.2f})")
    print(f"overall: {'PASS' if report['passed'] else 'FAIL'}")
    if not report["passed"]:
        raise VerificationError(f"suite {args.suite!r} failed; see {out / 'summary.json'}")


def cmd_report(args) -> None:
    src = args.path or args.out or os.environ.get("LEVYMART_OUT") or "levymart-out"
    path = Path(src)
    if path.is_dir():
        path = path / "summary.json"
    if not path.is_file():
        raise ConfigError(f"no summary file at {path}")
    data = json.loads(path.read_text())
    print("\n".join(_render(data)))


# -- parser ----------------------------------------------------------------


def _add_common(sp, *, divergence=True, capital=False, paths=None, grid=None,
                under=False, suite=False) -> None:
    sp.add_argument("--model", required=True,
                    help="bundled config name or path to a TOML model file")
    if divergence:
        sp.add_argument("--divergence", default="log",
                        help="log | exponential | power:<p> | custom:a,gamma,fp1,f1")
    if capital:
        sp.add_argument("--capital", type=float, default=1.0,
                        help="initial capital x")
    if paths is not None:
        sp.add_argument("--paths", type=int, default=paths,
                        help="number of Monte Carlo paths")
    if grid is not None:
        sp.add_argument("--grid", type=int, default=grid,
                        help="number of regular time steps")
    sp.add_argument("--seed", type=int, default=0, help="random seed")
    sp.add_argument("--tol", type=float, default=1e-12,
                    help="martingale solver tolerance")
    sp.add_argument("--out", default=None,
                    help="output directory (default $LEVYMART_OUT or ./levymart-out)")
    if under:
        sp.add_argument("--under", choices=("P", "Q"), default="P",
                        help="simulate under the market or the changed measure")
    if suite:
        sp.add_argument("--suite", choices=SUITES, default="all",
                        help="verification suite to run")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="levymart",
        description="Divergence-minimal martingale measures and optimal "
                    "portfolios for exponential Levy markets",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="group", required=True)

    model = sub.add_parser("model", help="model config operations")
    msub = model.add_subparsers(dest="action", required=True)
    mval = msub.add_parser("validate", help="validate a model config")
    mval.add_argument("--model", required=True)
    mval.add_argument("--out", default=None)
    mval.set_defaults(func=cmd_model_validate)

    measure = sub.add_parser("measure", help="martingale measure operations")
    mesub = measure.add_subparsers(dest="action", required=True)
    msolve = mesub.add_parser("solve", help="solve for the minimal measure change")
    _add_common(msolve)
    msolve.set_defaults(func=cmd_measure_solve)

    simp = sub.add_parser("simulate", help="simulate paths of (X, S, Z)")
    _add_common(simp, paths=100, grid=64, under=True)
    simp.set_defaults(func=cmd_simulate)

    strat = sub.add_parser("strategy", help="optimal strategy operations")
    stsub = strat.add_subparsers(dest="action", required=True)
    seval = stsub.add_parser("evaluate", help="evaluate the optimal strategy")
    _add_common(seval, capital=True, paths=1000, grid=64)
    seval.set_defaults(func=cmd_strategy_evaluate)

    verify = sub.add_parser("verify", help="verification suites")
    vsub = verify.add_subparsers(dest="action", required=True)
    vrun = vsub.add_parser("run", help="run a verification suite")
    _add_common(vrun, capital=True, paths=400, grid=64, suite=True)
    vrun.set_defaults(func=cmd_verify_run)

    rep = sub.add_parser("report", help="pretty-print a summary file")
    rep.add_argument("path", nargs="?", default=None,
                     help="summary.json file or directory containing one")
    rep.add_argument("--out", default=None)
    rep.set_defaults(func=cmd_report)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except VerificationError as exc:
        print(f"verification failure: {exc}", file=sys.stderr)
        return 4
    except SolverError as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return 3
    except LevymartError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
