"""Mean-field fixed point versus simulation on a two-type population.

Half the vertices have weight 1 and half weight 2.  The threshold is
1/E[w^2] = 0.4; at lambda = 1 the fixed point is sigma = sqrt(0.75) and a
weight-x vertex is infected a fraction sigma x / (1 + sigma x) of the time.
The typed kernel tracks only the two infected counts, so n = 2000 runs take
well under a second.
"""
import numpy as np

from wcp import DiscreteLaw, lambda_c, profile, rho, sigma
from wcp.kernel_full import frequencies_from
from wcp.kernel_typed import TypedConfig, typed_replicas

law = DiscreteLaw((1, 2), (0.5, 0.5))
lam = 1.0
print(f"lambda_c = {lambda_c(law):.4f}")
s = sigma(law, lam)
print(f"sigma(1) = {s:.10f}   (sqrt(0.75) = {np.sqrt(0.75):.10f})")
print(f"rho(1)   = {rho(law, lam):.6f}")

times = [25.0, 50.0, 100.0]
cfg = TypedConfig.from_law(law, lam, 2000, seed=1, exact_counts=True,
                           t_max=times[-1], snapshot_times=times)
sums = typed_replicas(cfg, 200)
rep = frequencies_from(sums, times, cfg.n, cfg.N)
p = profile(law, lam)(law.W)
print("\n   t   type  simulated  mean-field")
for k, t in enumerate(times):
    for i in range(law.m):
        print(f"{t:5.0f}  {i + 1:4d}  {rep.per_type_cond[k, i]:9.4f}  {p[i]:10.5f}")
