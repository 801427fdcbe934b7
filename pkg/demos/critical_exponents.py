"""How sigma vanishes at the threshold for Pareto weights.

With P(w > x) = x^-(alpha-1) the exponent of sigma(lambda_c + delta) depends on
the tail: 1/(3-alpha) for alpha < 3 (lambda_c = 0), an essential singularity
at alpha = 3, 1/(alpha-3) between 3 and 4, a log correction at 4 and a
linear law beyond.
"""
import numpy as np

from wcp import ParetoLaw
from wcp.experiments import exponent_fit
from wcp.meanfield import asymptotic_report, mellin_check

print(f"int_0^inf z^-0.5/(1+z) dz = {mellin_check(2.5):.12f}  (pi = {np.pi:.12f})\n")

for alpha, deltas in [(2.5, np.logspace(-4, -2, 9)), (3.5, np.logspace(-3, -1.5, 9)),
                      (5.0, np.logspace(-4, -2, 7))]:
    fit = exponent_fit(alpha, delta_grid=deltas)
    line = f"alpha={alpha}: fitted {fit.exponent:.4f}, theory {fit.theory:.4f}"
    if fit.constant is not None:
        line += f"; sigma/delta {fit.constant:.4f} vs {fit.theory_constant:.4f}"
    print(line)

fit = exponent_fit(3.0, delta_grid=np.logspace(-2, -1, 6))
print(f"alpha=3: slope of log(-log sigma) on log delta {fit.exponent:.4f} (theory -1)")

for corrected in (False, True):
    r = asymptotic_report(ParetoLaw(4.0), [1e-2, 1e-3, 1e-4], log_corrected=corrected)
    label = "implicit log form" if corrected else "explicit log form"
    print(f"alpha=4, {label}: ratios " + ", ".join(f"{x:.4f}" for x in r.ratios))
