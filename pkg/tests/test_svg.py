"""Deterministic SVG rendering of planar masks, covers and partitions."""

import numpy as np
import pytest

from gausstent import Box, RegionMask, cover_open_set, thicken, whitney_partition
from gausstent.svg import render_cover, render_grid, render_partition

WINDOW = Box([-2.0, -2.0], [2.0, 2.0])
H = 2.0**-4


@pytest.fixture(scope="module")
def open_set():
    mask = RegionMask.empty(WINDOW, H)
    centers = mask.centers_stacked()
    cells = np.linalg.norm(centers - np.array([0.5, -0.25]), axis=1) < 0.8
    return mask.with_cells(cells.reshape(mask.dims))


def test_grid_doc():
    doc = render_grid(WINDOW, 1)
    assert doc.startswith("<svg")
    assert doc.rstrip().endswith("</svg>")
    assert doc == render_grid(WINDOW, 1)


def test_cover_doc(open_set):
    pieces = cover_open_set(open_set, 2)
    doc = render_cover(pieces, open_set)
    assert "<svg" in doc and "rect" in doc
    assert doc == render_cover(pieces, open_set)


def test_partition_doc(open_set):
    part = whitney_partition(thicken(open_set, 2.0), 2.0**6)
    doc = render_partition(part)
    assert "<svg" in doc
    assert doc == render_partition(part)


def test_planar_only():
    with pytest.raises(ValueError):
        render_grid(Box([-2.0], [2.0]), 1)
