# The cumulant curves kappa_P and kappa_Q price every power moment of
# the density process Z: E[Z_T^theta] = e^{T kappa(theta)}.  Both curves
# vanish at the points forced by E[Z]=1 under P and E[1/Z]=1 under Q,
# and Monte Carlo agrees with the analytic values under either measure.
# A distribution-level check then confirms the measure change keeps X
# a Levy process: increments stay iid with the predicted mean.

import numpy as np

from levymart import (
    DivergenceSpec,
    MomentCurve,
    levy_preservation_test,
    mc_mean,
    sample_terminals,
    solve_beta,
)
from levymart.cli_reporting import build_model, load_config

model = build_model(load_config("merton_jump"))
spec = DivergenceSpec.log()
pair = solve_beta(model, spec)
curve = MomentCurve(model, pair)
T = model.horizon

print("invariants (exact zeros of the curves):")
for label, value in [("kappa_P(0)", curve.kappa_p(0.0)),
                     ("kappa_P(1)", curve.kappa_p(1.0)),
                     ("kappa_Q(0)", curve.kappa_q(0.0)),
                     ("kappa_Q(-1)", curve.kappa_q(-1.0))]:
    print(f"  {label:<12} = {value:+.2e}")

n = 100_000
under_p = sample_terminals(model, pair, n, seed=5, under="P")
under_q = sample_terminals(model, pair, n, seed=6, under="Q")
print()
print(f"{'theta':>6}{'kappa_P':>10}{'MC z':>7}{'kappa_Q':>11}{'MC z':>7}")
for theta in (-1.0, 0.5, 2.0):
    kp, kq = curve.kappa_p(theta), curve.kappa_q(theta)
    zp = mc_mean(under_p.ZT ** theta).z(float(np.exp(T * kp)))
    zq = mc_mean(under_q.ZT ** theta).z(float(np.exp(T * kq)))
    print(f"{theta:>6.1f}{kp:>10.5f}{zp:>7.2f}{kq:>11.5f}{zq:>7.2f}")

report = levy_preservation_test(model, pair, n_paths=5000, n_steps=32, seed=7)
print()
print("Levy-property preservation under Q (iid increment checks):")
print(f"  KS p-value (split halves)  {report.ks_pvalue[0]:.3f}")
print(f"  lag-1 autocorrelation      {report.lag_corr[0]:+.4f}")
print(f"  mean increment z-score     {report.mean_z[0]:+.2f}")
print(f"  passed: {report.passed}")
