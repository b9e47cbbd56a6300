"""
Covering an open set by admissible Whitney pieces
=================================================

"""

import pathlib

import numpy as np

from gausstent import (
    Box,
    cover_count_bound,
    cover_open_set,
    whitney_check,
)
from gausstent.svg import render_cover

from _shared import blob_mask

# a random open set in the plane, rasterized on a fine cell grid
rng = np.random.default_rng(2)
window = Box([-2.0, -2.0], [2.0, 2.0])
O = blob_mask(window, 2.0**-5, rng, blobs=3)
print(f"open set: {int(O.cells.sum())} of {O.cells.size} cells")

# the cover uses thickened cubes near the origin and thickened label classes
# far out; the piece count is bounded independently of the open set
p = 2
pieces = cover_open_set(O, p)
kinds = {}
for piece in pieces:
    kinds[piece.kind] = kinds.get(piece.kind, 0) + 1
print(f"pieces: {len(pieces)} {kinds}  (bound {cover_count_bound(2, p)})")

# each intersected piece is Whitney-regular at the advertised dilation factor
lam = 2.0 ** (2 * p + 2) * np.sqrt(2.0)
worst = 0.0
for piece in pieces:
    cert = whitney_check(piece.mask, lam)
    worst = max(worst, cert.max_ratio)
    assert cert.ok, piece
print(f"whitney scan at lambda = {lam:.2f}: worst distance ratio {worst:.3f}")

# the union of pieces reproduces the open set cell for cell
union = np.zeros(O.dims, dtype=bool)
for piece in pieces:
    union |= piece.mask.cells
assert np.array_equal(union, O.cells)
print("union of pieces == open set: ok")

out = pathlib.Path(__file__).parent / "cover.svg"
out.write_text(render_cover(pieces, O), encoding="ascii")
print(f"wrote {out.name}")
