"""
Choosing the input squeezing
============================

A squeezed coherent probe trades photons in the coherent part for reduced
amplitude noise. Too little squeezing leaves shot noise, too much wastes the
photon budget on the noisy squeezed-vacuum part. The optimum moves with the
amplifier gain R placed before the detector.
"""
import math

import numpy as np

from subshot import SchemeConfig, optimize_input_squeezing
from subshot.optimize import SweepSpec, fit_line, run_sweep
from subshot.schemes import optimal_squeeze_asymptotic, squeezed_coherent_uncertainty

N, A = 1e7, 1e-5
base = SchemeConfig("squeezed", N, A, eta_d=0.5)

# The uncertainty as a function of r has one clear minimum.
print("r      delta_A")
for r in (0.0, 1.0, 2.0, 2.5, 3.0, 3.5, 4.0):
    print(f"{r:<6} {squeezed_coherent_uncertainty(base.with_(r=r)).delta_A:.4e}")

r_opt, rep = optimize_input_squeezing(base)
print(f"\noptimum r={r_opt:.4f} (ln(4N)/6 = {math.log(4 * N) / 6:.4f}), Q={rep.Q:.1f}")

# Sweep the gain, re-optimizing r at every point.
spec = SweepSpec(base.with_(eta_d=0.99), "R", tuple(np.linspace(0, 3, 13)), optimize_r=True)
res = run_sweep(spec)
print("\nR      r_opt    asymptote  Q")
for row in res.rows:
    print(f"{row.value:<6.2f} {row.r_opt:.4f}   {optimal_squeeze_asymptotic(N, row.value):.4f}     {row.Q:.1f}")

mask = res.column("value") >= 1
slope, intercept = fit_line(res.column("value")[mask], res.column("r_opt")[mask])
print(f"\nslope over R in [1, 3]: {slope:.3f} (4/3 expected)")
