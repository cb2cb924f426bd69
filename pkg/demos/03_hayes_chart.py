"""Stability chart of y'(t) = alpha y(t) + beta y(t - 1) and a gain path.

Writes region.csv (boundary curves) and gain_path.csv (the straight
path traced by the binding factor as the gain varies) to ./demo_out.
Plot them with any tool; the path enters the region across the line
alpha + beta = 0 at b* = -lambda/2 and leaves across the curve C.
"""
import math
import os

import numpy as np

from eqpyragas.hayes import emit_region_chart, gain_interval_single, gain_path, in_stability_region
from eqpyragas.io import ensure_dir, write_csv

out = ensure_dir("demo_out")
chart = emit_region_chart(n_points=300)
write_csv(os.path.join(out, "region.csv"), ["curve_id", "omega", "alpha", "beta"], chart)
print(f"{len(chart)} chart points; C starts at (alpha, beta) = (1, -1)")

for a, b in [(-1.0, 0.5), (0.5, -1.0), (0.5, 0.0), (-1.0, -3.0)]:
    print(f"({a:+.1f}, {b:+.1f}) -> {in_stability_region(a, b).region.value}")

mu = -math.exp(math.pi / 2)
gi = gain_interval_single(mu, math.pi)
gains = np.linspace(-0.8, 0.0, 81)
rows = gain_path(mu, math.pi, gains)
write_csv(os.path.join(out, "gain_path.csv"), ["b", "alpha", "beta", "region", "crossing"],
          ([r["b"], r["alpha"], r["beta"], r["region"], int(r["crossing"])] for r in rows))
print(f"mu = {mu:.6f}: stabilizing gains ({gi.lo:.6f}, {gi.hi:.6f})")
print("regions along the path:", "".join(r["region"][0].upper() for r in rows))
