"""Measure smile + error report values for test freezing."""
import time

import numpy as np

from roughvol.kernels import FractionalKernel, optimal_step, uniform_partition, weights_from_partition
from roughvol.params import ModelParams
from roughvol.pricing import riccati_error_report, smile

p = ModelParams(lam=0.3, rho=-0.7, nu=0.3, hurst=0.1, v0=0.02, theta=0.02, horizon=1.0)

ks = np.linspace(-0.4, 0.4, 9)
t0 = time.time()
sm_frac = smile(p, FractionalKernel(0.1), ks, 1.0, 200)
t1 = time.time()
print(f"fractional smile ({t1-t0:.2f}s):")
for k, pr, iv in sm_frac.points:
    print(f"  k={k:+.3f} price={pr:.12g} iv={iv:.10f}")

part20 = uniform_partition(20, optimal_step(20, 1.0, 0.1))
kern20 = weights_from_partition(0.1, part20)
t0 = time.time()
sm_20 = smile(p, kern20, ks, 1.0, 200)
t1 = time.time()
print(f"mf20 smile ({t1-t0:.2f}s):")
gaps = [abs(a[2] - b[2]) * 1e4 for a, b in zip(sm_frac.points, sm_20.points)]
for (k, pr, iv), g in zip(sm_20.points, gaps):
    print(f"  k={k:+.3f} iv={iv:.10f} gap_bp={g:.2f}")
print(f"max |iv gap| mf20 vs fractional: {max(gaps):.3f} bp")

# error report: small grids for test freezing
t0 = time.time()
rows = riccati_error_report(p, [10, 50, 200], np.array([1.0, 5.0, 10.0]), 1.0, steps=200)
t1 = time.time()
print(f"error report ({t1-t0:.2f}s):")
for r in rows:
    print("  " + " ".join(f"{k}={v:.6g}" if isinstance(v, float) else f"{k}={v}" for k, v in r.items()))

# rel err monotone in n at b=10?
at10 = {r["n"]: r["rel_err"] for r in rows if r["b"] == 10.0}
print("rel_err at b=10 by n:", at10)

# b -> 0 edge: psi(0+0j) == 0 so rel err undefined
rows0 = riccati_error_report(p, [10], np.array([0.0, 10.0]), 1.0, steps=64)
for r in rows0:
    print("  edge:", r)
