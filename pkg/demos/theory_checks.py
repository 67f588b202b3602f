"""Monte-Carlo checks of the Poissonization lemma and the two noise bounds.

Run:  python3 demos/theory_checks.py
"""
import numpy as np

from denseleaf.densities import LinearProductDensity
from denseleaf.kernels import build_order_kernel
from denseleaf.theorycheck import check_bias_bound, run_default_checks

for rep in run_default_checks(seed=0):
    verdict = "pass" if rep.passed else "FAIL"
    print(f"{verdict}  {rep.name:40s} lhs {rep.lhs:.4g}  rhs {rep.rhs:.4g}  slack {rep.slack:.2g}")

# The bias bound needs the density to be smooth across the whole kernel window.
# At the edge of the cube the linear density jumps to zero, and the bound breaks.
truth, k = LinearProductDensity(2), build_order_kernel(1)
h = 0.25
inside = check_bias_bound(truth, k, h, np.array([[0.5, 0.5]]))
edge = check_bias_bound(truth, k, h, np.array([[0.0, 0.0]]))
print(f"interior probe: |bias| {inside.lhs:.2e} <= {inside.rhs:.3f}")
print(f"corner probe:   |bias| {edge.lhs:.3f} vs bound {edge.rhs:.3f}")
