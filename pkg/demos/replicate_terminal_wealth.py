# Build the optimal strategy for the jump-diffusion market and watch its
# self-financing Euler wealth converge to the closed-form target
# -f'(lambda Z_T) as the rebalancing grid is refined.

import numpy as np

from levymart import (
    DivergenceSpec,
    build_problem,
    decay_rates,
    duality_gap,
    mc_mean,
    sample_terminals,
    simulate_paths,
    solve_beta,
    terminal_replication_study,
    wealth_process,
)
from levymart import divergence as dv
from levymart.cli_reporting import build_model, load_config

model = build_model(load_config("merton_jump"))
spec = DivergenceSpec.log()
pair = solve_beta(model, spec)
problem = build_problem(model, spec, pair, 1.0)
print(f"beta = {pair.beta[0]:.8f}, lambda = {problem.lam:g}, "
      f"branch = {problem.branch}")

# the budget constraint: hedging -f'(lambda Z_T) costs exactly x
ts = sample_terminals(model, pair, 50_000, seed=2, under="Q")
est = mc_mean(-dv.fprime(spec, problem.lam * ts.ZT))
print(f"E_Q[-f'(lambda Z_T)] = {est.value:.5f} +/- {est.se:.5f} (x = 1)")
print(f"max duality gap on the sample: {np.max(np.abs(duality_gap(problem, ts.ZT))):.2e}")

paths = simulate_paths(model, pair, 300, 64, seed=11, under="P")
study = terminal_replication_study(problem, paths, strides=[4, 2, 1])
print()
print("terminal replication error, 300 paths:")
for stride in (4, 2, 1):
    print(f"  {64 // stride:>3} rebalance steps  rms = {study[stride]:.5f}")
ratios = [2.0 ** r for r in decay_rates(study)]
print(f"  shrink factors per halving: {ratios[0]:.2f}, {ratios[1]:.2f}")

# one path in detail: Euler integral vs closed-form value process
series = wealth_process(problem, paths[0])
rows = np.linspace(0, series.times.size - 1, 9).astype(int)
print()
print(f"path 0 ({paths[0].jump_sizes.size} jumps):")
print(f"{'t':>8}{'euler':>12}{'closed':>12}{'residual':>12}")
for k in rows:
    print(f"{series.times[k]:>8.3f}{series.euler[k]:>12.6f}"
          f"{series.closed[k]:>12.6f}{series.residual[k]:>12.2e}")
