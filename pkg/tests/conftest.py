"""Shared fixtures: small deterministic grids and masks."""

import numpy as np
import pytest

from gausstent import Box, DGrid, RegionMask


@pytest.fixture(scope="session")
def grid1() -> DGrid:
    """Reference 1-d domain: window 8, h = 2^-8."""
    return DGrid(Box([-8.0], [8.0]), 2.0**-8)


@pytest.fixture(scope="session")
def grid1_small() -> DGrid:
    """Coarse 1-d domain for cheap exact comparisons."""
    return DGrid(Box([-4.0], [4.0]), 2.0**-5, t_min=2.0**-5)


@pytest.fixture(scope="session")
def grid2_small() -> DGrid:
    """Coarse 2-d domain."""
    return DGrid(Box([-2.0, -2.0], [2.0, 2.0]), 2.0**-4, t_min=2.0**-4)


def interval_union_mask(window: Box, h: float, intervals) -> RegionMask:
    """1-d mask from (lo, hi) pairs, cells by center membership."""
    mask = RegionMask.empty(window, h)
    x = mask.axis_centers(0)
    cells = np.zeros(mask.dims, dtype=bool)
    for lo, hi in intervals:
        cells |= (x >= lo) & (x < hi)
    return mask.with_cells(cells)


def random_interval_mask(window: Box, h: float, rng: np.random.Generator, blocks: int = 5) -> RegionMask:
    """Union of random intervals; blocky sets keep density sets nonempty."""
    R = float(window.upper[0])
    lows = rng.uniform(-0.9 * R, 0.7 * R, size=blocks)
    widths = rng.uniform(0.1, 0.5 * R, size=blocks)
    return interval_union_mask(window, h, zip(lows, lows + widths))
