"""
Discretized tent norms over the Gauss measure
=============================================

"""

import numpy as np

from gausstent import (
    Box,
    DGrid,
    NormConfig,
    TentFunction,
    apply_J,
    density_set,
    t1q_norm,
)

from _shared import interval_mask

# the upper half-space grid: spatial cells crossed with a geometric scale
# ladder, truncated to the admissible pairs t < m(y)
grid = DGrid(Box([-6.0], [6.0]), 2.0**-6, t_min=2.0**-6)
print(f"grid: {grid.N} cells x {grid.S} scales, {int(grid.active.sum())} admissible pairs")

# a sparse nonnegative field on the half-space
rng = np.random.default_rng(4)
vals = np.where(rng.uniform(size=(grid.S, grid.N)) < 0.03,
                rng.uniform(0.5, 2.0, size=(grid.S, grid.N)), 0.0)
f = TentFunction(grid, vals)

# the averaging operator squares, averages over admissible balls, and
# integrates through the aperture-1 cone over each base point
cfg = NormConfig(q=2.0)
Jf = apply_J(f, cfg, alpha=1.0)
print(f"J f: max {float(Jf.max()):.4f} over {int((Jf > 0).sum())} base cells")

# the tent norm is the spatial L^q mass of (J f)^(1/2)
print(f"tent norm (q = 2): {t1q_norm(f, cfg):.6f}")
for q in (1.5, 3.0):
    print(f"tent norm (q = {q}): {t1q_norm(f, NormConfig(q=q)):.6f}")

# density points of a rough set: where every admissible ball sees mostly F
F = interval_mask(grid.window, grid.h, rng)
for beta in (0.55, 0.65, 0.75):
    Fstar = density_set(F, beta)
    print(f"density set at beta = {beta}: {int(Fstar.cells.sum())} "
          f"of {int(F.cells.sum())} cells survive")
