"""Higher-order kernels, the power-of-two bandwidth and a KDE on a synthetic density.

Run:  python3 demos/kernels_and_kde.py
"""
import numpy as np

from denseleaf.densities import make_model
from denseleaf.kde import kde_eval, kde_integral, theory_bandwidth
from denseleaf.kernels import build_order_kernel, verify_moments

# Kernels of order s: unit mass, vanishing moments 1..s, supported on [-1, 1].
for s in (0, 1, 3, 5):
    k = build_order_kernel(s)
    rep = verify_moments(k)
    print(f"order {s}: coeffs {np.round(k.coeffs, 4)}  sup|K| {k.sup_norm:.4f}  "
          f"moments ok: {rep.passed}")

# The bandwidth is a power of two between (log n/n)^(1/d) and twice that.
for n, d in ((200, 1), (1000, 2), (25_000, 4)):
    h = theory_bandwidth(n, d)
    print(f"n={n:6d} d={d}: h = 1/{int(1 / h)}  (lower limit {(np.log(n) / n) ** (1 / d):.4f})")

# A KDE on 500 draws from the two-dimensional NBm density.
truth = make_model({"family": "NBm", "d": 2, "seed": 1})
X = truth.sample(500, 0).points
box, k3 = build_order_kernel(0), build_order_kernel(3)
h = theory_bandwidth(500, 2)
grid = np.random.default_rng(1).random((20_000, 2))
for name, k in (("box", box), ("order 3", k3)):
    est = kde_eval(X, k, h, grid)
    mse = np.mean((est - truth.pdf(grid)) ** 2)
    print(f"{name:8s} kernel: mass over [-h, 1+h]^2 = {kde_integral(X, k, h):.12f}, "
          f"min value {est.min():+.3f}, squared error {mse:.3f}")
print("the order-3 estimate dips below zero; on this rough density its bias advantage does not pay off")
