"""Layered grid: enumeration against brute integer oracles."""

import itertools

import numpy as np
import pytest

from gausstent import (
    Box,
    CubeLabel,
    GaussianCube,
    count_in_layer,
    cube_of,
    cubes_in_layer,
    label_class,
    label_of,
    layer_cube_indices,
    layer_of,
    max_layer_touching,
)
from gausstent.grid import (
    enclosing_cube,
    family_is_empty,
    layers_of,
    min_layer_for_labels,
)


def brute_layer_count(k: int, l: int, n: int) -> int:
    """Count cubes of side 2^-(k+l) inside L_l by integer enumeration."""
    if family_is_empty(k, l):
        return 0
    outer = 2 ** (k + 2 * l) if l >= 1 else 2**k
    count = 0
    for idx in itertools.product(range(-outer, outer), repeat=n):
        if l >= 1:
            inner = 2 ** (k + 2 * l - 1)
            if all(-inner <= i < inner for i in idx):
                continue
        count += 1
    return count


class TestLayers:
    def test_frozen_points(self):
        # half-open convention: [-2^l, 2^l) per layer shell
        assert layer_of([0.0]) == 0
        assert layer_of([0.999]) == 0
        assert layer_of([-1.0]) == 0
        assert layer_of([1.0]) == 1
        assert layer_of([-2.0]) == 1
        assert layer_of([2.0]) == 2
        assert layer_of([1.999]) == 1
        assert layer_of([-2.0001]) == 2
        assert layer_of([7.9, 0.1]) == 3
        assert layer_of([4.0, 4.0]) == 3

    def test_batch_matches_scalar(self):
        rng = np.random.default_rng(2)
        pts = rng.uniform(-20, 20, size=(500, 2))
        batch = layers_of(pts)
        assert all(batch[i] == layer_of(pts[i]) for i in range(len(pts)))

    def test_power_of_two_boundaries(self):
        for l in range(1, 8):
            s = 2.0**l
            assert layer_of([s]) == l + 1
            assert layer_of([-s]) == l
            assert layer_of([np.nextafter(s, 0.0)]) == l

    def test_every_point_in_its_shell(self):
        rng = np.random.default_rng(7)
        pts = rng.uniform(-64, 64, size=(2000, 1))
        ls = layers_of(pts)
        side = 2.0**ls
        assert np.all((pts[:, 0] >= -side) & (pts[:, 0] < side))
        prev = np.where(ls > 0, 2.0 ** (ls - 1), 0.0)
        outside_prev = (pts[:, 0] < -prev) | (pts[:, 0] >= prev) | (ls == 0)
        assert np.all(outside_prev)


class TestFamilies:
    def test_emptiness(self):
        assert not family_is_empty(0, 0)
        assert family_is_empty(-1, 0)
        assert family_is_empty(-2, 1)
        assert not family_is_empty(-1, 1)
        assert family_is_empty(-4, 2)
        assert not family_is_empty(-3, 2)

    @pytest.mark.parametrize("n", [1, 2])
    def test_counts_vs_brute(self, n):
        for k in (0, 1):
            for l in range(0, 4):
                assert count_in_layer(k, l, n) == brute_layer_count(k, l, n)

    def test_closed_form_layers(self):
        # l = 0: 2^((k+1)n); l >= 1: 2^((k+2l)n) (2^n - 1)
        assert count_in_layer(0, 0, 2) == 4
        assert [count_in_layer(0, l, 2) for l in (1, 2, 3)] == [48, 768, 12288]
        assert [count_in_layer(0, l, 1) for l in (0, 1, 2, 3)] == [2, 4, 16, 64]

    def test_enumeration_matches_count(self):
        for n in (1, 2):
            for l in range(0, 4):
                cubes = list(cubes_in_layer(0, l, n))
                assert len(cubes) == count_in_layer(0, l, n)

    def test_cubes_inside_layer(self):
        for cube in cubes_in_layer(0, 2, 2):
            assert cube.side == 0.25
            corners = np.array(list(itertools.product(*zip(cube.lower, cube.upper))))
            assert np.all(np.abs(corners) <= 4.0)
            # interior point sits in layer 2
            assert layer_of(cube.center) == 2

    def test_lexicographic_order(self):
        idx = layer_cube_indices(0, 1, 2)
        assert np.array_equal(idx, idx[np.lexsort(idx.T[::-1])])

    def test_windowed_enumeration_subset(self):
        window = Box([0.0, 0.0], [2.0, 2.0])
        inside = layer_cube_indices(0, 2, 2, window)
        every = layer_cube_indices(0, 2, 2)
        tup = {tuple(r) for r in every}
        assert all(tuple(r) in tup for r in inside)
        assert all(np.all(r >= 0) for r in inside)


class TestCubeOf:
    def test_containment(self):
        rng = np.random.default_rng(13)
        for x in rng.uniform(-8, 8, size=(200, 2)):
            cube = cube_of(x, 0)
            assert cube.contains(x)
            assert cube.l == layer_of(x)
            assert cube.k == 0

    def test_empty_family_raises(self):
        with pytest.raises(ValueError):
            cube_of([0.5], -1)

    def test_children_tile(self):
        cube = GaussianCube(0, 2, (7,))
        kids = cube.children()
        assert len(kids) == 2
        assert kids[0].lower[0] == cube.lower[0]
        assert kids[-1].upper[0] == cube.upper[0]


class TestLabels:
    def test_min_layer(self):
        assert min_layer_for_labels(5) == 3
        assert min_layer_for_labels(6) == 4
        assert min_layer_for_labels(8) == 5

    def test_label_range_and_period(self):
        kappa = 5
        period = 2**kappa
        cube = cube_of([10.3], 0)
        lab = label_of(cube, kappa)
        assert all(1 <= c <= period for c in lab.components)
        shifted = GaussianCube(cube.k, cube.l, (cube.index[0] + period,))
        assert label_of(shifted, kappa) == lab

    def test_label_errors(self):
        with pytest.raises(ValueError):
            label_of(GaussianCube(1, 5, (40,)), 5)  # k != 0
        with pytest.raises(ValueError):
            label_of(cube_of([1.5], 0), 5)  # layer too low
        with pytest.raises(ValueError):
            CubeLabel((0,), 5)  # component below 1

    def test_enclosing_cube(self):
        cube = cube_of([-9.7], 0)
        coarse = enclosing_cube(cube, 5)
        assert coarse.k == -5
        assert coarse.contains(cube.center)

    def test_label_class_members(self):
        window = Box([-16.0], [16.0])
        lc = label_class(1, CubeLabel((3,), 5), window)
        members = lc.member_cubes()
        assert members, "expected members inside the window"
        for q in members:
            assert q.l >= lc.min_layer
            assert label_of(q, 5).components == (3,)
            assert lc.contains(q.center)
        assert not lc.contains([0.5])

    def test_label_class_validation(self):
        with pytest.raises(ValueError):
            label_class(1, CubeLabel((3,), 6), Box([-8.0], [8.0]))  # kappa != p+4


class TestWindowReach:
    def test_max_layer(self):
        assert max_layer_touching(Box([-8.0], [8.0])) == 4
        assert max_layer_touching(Box([-1.0], [1.0])) == 1
        assert max_layer_touching(Box([-0.5], [0.5])) == 0
        assert max_layer_touching(Box([-8.0, -8.0], [8.0, 8.0])) == 4
