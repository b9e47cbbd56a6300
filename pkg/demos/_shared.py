"""Small helpers shared by the demo scripts."""

import numpy as np

from gausstent import Box, RegionMask


def blob_mask(window: Box, h: float, rng, blobs: int = 4,
              r_frac=(0.05, 0.15)) -> RegionMask:
    """Union of a few random discs, rasterized on the cell grid."""
    mask = RegionMask.empty(window, h)
    centers = mask.centers_stacked()
    cells = np.zeros(mask.cells.size, dtype=bool)
    span = window.upper - window.lower
    for _ in range(blobs):
        c = rng.uniform(window.lower + 0.15 * span, window.upper - 0.15 * span)
        r = rng.uniform(*r_frac) * float(span.min())
        cells |= np.linalg.norm(centers - c[None, :], axis=1) < r
    return mask.with_cells(cells.reshape(mask.dims))


def interval_mask(window: Box, h: float, rng, blocks: int = 5) -> RegionMask:
    """Union of random intervals on a one-dimensional window."""
    mask = RegionMask.empty(window, h)
    centers = mask.centers_stacked()[:, 0]
    cells = np.zeros(centers.shape, dtype=bool)
    lo = float(window.lower[0])
    hi = float(window.upper[0])
    for _ in range(blocks):
        a = rng.uniform(lo, hi)
        b = a + rng.uniform(0.05, 0.2) * (hi - lo)
        cells |= (centers > a) & (centers < b)
    return mask.with_cells(cells)
