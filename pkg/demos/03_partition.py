"""
Whitney partition of unity on an open set
=========================================

"""

import pathlib

import numpy as np

from gausstent import Box, whitney_partition
from gausstent.svg import render_partition

from _shared import blob_mask

# partition a random planar open set into dyadic cubes whose size tracks the
# distance to the complement
rng = np.random.default_rng(3)
window = Box([-2.0, -2.0], [2.0, 2.0])
O = blob_mask(window, 2.0**-5, rng, blobs=3)
part = whitney_partition(O, 2.0**6 * np.sqrt(2.0))
print(f"{len(part.cubes)} cubes, distance/diameter within [1, {part.rho:.3f}]")

# the cubes tile the set exactly, once each
paint = np.zeros(O.dims, dtype=np.int16)
for m in range(len(part.cubes)):
    paint[part.cube_cell_slice(m)] += 1
assert paint.max() == 1 and np.array_equal(paint > 0, O.cells)
print("cube tiling is exact")

# the subordinate bumps sum to one everywhere inside
pts = O.active_centers()
pick = pts[rng.integers(0, len(pts), size=5000)]
pick = pick + rng.uniform(-0.5, 0.5, size=pick.shape) * O.h
err = float(np.max(np.abs(part.partition_of_unity(pick) - 1.0)))
print(f"max |sum phi - 1| over 5000 interior points: {err:.2e}")
assert err <= 1e-9

out = pathlib.Path(__file__).parent / "partition.svg"
out.write_text(render_partition(part), encoding="ascii")
print(f"wrote {out.name}")
