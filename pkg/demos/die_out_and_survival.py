"""Logarithmic die-out below threshold, long survival above it.

Below lambda_c the infection started from every vertex dies out in a time
growing like log n; above it the process sits in a metastable state far
longer than any horizon we can afford.  Both regimes are run through the
experiment drivers, which refuse a spec whose lambda is on the wrong side.
"""
from wcp.errors import GuardTripped
from wcp.experiments import ExperimentSpec, run_experiment

law = "discrete:W=1,2;p=0.5,0.5"

sub = run_experiment(ExperimentSpec(
    name="die-out", kind="extinction_scaling", law=law, lam_factor=0.5,
    n_grid=[1000, 10000, 100000], reps=100, seed=1), write=False)
print("n        mean T_ext   sd")
for r in sub.rows:
    print(f"{r['n']:<8d} {r['mean_extinction_time']:9.3f}  {r['sd']:.3f}")
print(f"slope vs log n = {sub.summary['slope_vs_log_n']:.3f}, "
      f"R^2 = {sub.summary['r_squared']:.5f}")

sup = run_experiment(ExperimentSpec(
    name="survival", kind="survival_persistence", law=law, lam_factor=2.0,
    n_grid=[10, 50, 500], reps=100, t_max=1000.0, seed=1), write=False)
print("\nn     alive at t=1000")
for r in sup.rows:
    print(f"{r['n']:<5d} {r['alive']}/{r['reps']}")

try:
    run_experiment(ExperimentSpec(name="bad", kind="extinction_scaling", law=law,
                                  lam_factor=2.0, n_grid=[100]), write=False)
except GuardTripped as e:
    print(f"\nmislabelled spec refused: {e}")
