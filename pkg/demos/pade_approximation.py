"""How good is the rational square-root approximation, and how many of its
coefficients are large?

Writes ``pade_table.csv``, ``pade_error.csv`` and an SVG of the error curves
into the output directory (default ``demo_out/pade``).
"""
import sys
from pathlib import Path

import numpy as np

from cphabc.harness import write_csv
from cphabc.pade import PadeSet, pade_error_table, pade_sqrt, threshold_counts
from cphabc.plot import emit_line_plot

out = Path(sys.argv[1] if len(sys.argv) > 1 else "demo_out/pade")
out.mkdir(parents=True, exist_ok=True)

# Coefficient magnitudes grow like tan^2, so half of them always exceed 1
# while only a small tail exceeds 100.
orders = [2**k for k in range(2, 11)]
rows = [(N, *threshold_counts(N, (1, 10, 100))) for N in orders]
write_csv(out / "pade_table.csv", ["N", "count_gt_1", "count_gt_10", "count_gt_100"], rows)
for N, a, b, c in rows:
    print(f"N={N:5d}  >1: {a:4d}  >10: {b:4d}  >100: {c:3d}")

# The error at fixed X drops quickly with the order; at X = 0 the
# approximation is exact for every order.
X = np.linspace(0.0, 100.0, 201)
err_orders = [2, 8, 32, 128]
err = np.abs(pade_error_table(err_orders, X))
write_csv(out / "pade_error.csv", ["X", *(f"N{N}" for N in err_orders)],
          [(float(x), *map(float, err[:, i])) for i, x in enumerate(X)])
print("f_N(0) for N = 1..1024:", {float(pade_sqrt(PadeSet.build(N), 0.0)) for N in [2**k for k in range(11)]})
print("sup error on [0, 100]:", ", ".join(f"N={N}: {e:.2e}" for N, e in zip(err_orders, err.max(axis=1))))

# Skip X = 0 on the log plot; the error there is exactly zero.
trimmed = out / "pade_error_positive.csv"
write_csv(trimmed, ["X", *(f"N{N}" for N in err_orders[:2])],
          [(float(x), *map(float, np.maximum(err[:2, i], 1e-300))) for i, x in enumerate(X) if i > 0])
print("wrote", emit_line_plot(trimmed, log_y=True, title="|f_N(X) - sqrt(1+X)|"))
