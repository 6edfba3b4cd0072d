# In the no-jump market the optimal strategy is a constant-proportion
# portfolio: log and power utilities hold the classical Merton fraction
# of wealth in the risky asset, the exponential family holds a constant
# money amount.  The dominance scan then ranks the optimum against every
# constant mix on a grid, using common random numbers.

import numpy as np

from levymart import (
    DivergenceSpec,
    build_problem,
    solve_beta,
    strategy_amounts,
    utility_dominance_scan,
    wealth_closed_form,
)
from levymart.cli_reporting import build_model, load_config

model = build_model(load_config("black_scholes"))
b, c = 0.05, 0.04

print("wealth fraction held in the asset (sampled on a (t, z) grid):")
for label, spec, p in [("log", DivergenceSpec.log(), 0.0),
                       ("power(0.5)", DivergenceSpec.power(0.5), 0.5),
                       ("power(-1)", DivergenceSpec.power(-1.0), -1.0)]:
    pair = solve_beta(model, spec)
    problem = build_problem(model, spec, pair, 1.0)
    fracs = []
    for t in (0.0, 0.4, 0.9):
        for z in (0.6, 1.0, 1.7):
            amount = strategy_amounts(problem, t, z)[0]
            fracs.append(amount / wealth_closed_form(problem, t, z))
    merton = (b + c / 2.0) / ((1.0 - p) * c)
    spread = np.ptp(fracs)
    print(f"  {label:<12} fraction = {fracs[0]:.10f} (Merton {merton:g}, "
          f"spread over grid {spread:.1e})")

spec = DivergenceSpec.exponential()
pair = solve_beta(model, spec)
problem = build_problem(model, spec, pair, 1.0)
amounts = {(t, z): strategy_amounts(problem, t, z)[0]
           for t in (0.0, 0.5) for z in (0.7, 1.3)}
print(f"  {'exponential':<12} money amount = {amounts[(0.0, 0.7)]:.10f} "
      f"everywhere (here -a beta = {-spec.a * pair.beta[0]:g})")

# scan: expected log utility of constant mixes vs the optimum
spec = DivergenceSpec.log()
pair = solve_beta(model, spec)
problem = build_problem(model, spec, pair, 1.0)
grid = np.linspace(0.0, 3.5, 15)[:, None]
report = utility_dominance_scan(problem, grid, n_paths=20_000, seed=3)
print()
print(f"{'pi':>6}{'E[ln V_T]':>12}{'optimum-mix gap':>18}")
for j, pi in enumerate(report.pis[:, 0]):
    print(f"{pi:>6.2f}{report.mean_utility[j]:>12.5f}"
          f"{report.diff_mean[j]:>15.5f} +/- {report.diff_se[j]:.5f}")
print(f"best grid point pi = {report.best_pi[0]:g}, "
      f"scan passed: {report.passed}")
