"""Layered dyadic grid adapted to the Gauss measure.

Space is split into half-open layers

    L_0 = [-1, 1)^n,    L_l = [-2^l, 2^l)^n \\ [-2^(l-1), 2^(l-1))^n,

and each layer is tiled by dyadic cubes whose side shrinks as the layer
index grows: the family Delta^gamma_{k,l} consists of the standard dyadic
cubes of generation l+k (side 2^(-k-l)) that are contained in L_l.  Cubes
of the k=0 generation carry periodic labels used to build well-separated
label classes.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterator

import numpy as np

from .geometry import Box

__all__ = [
    "GaussianCube",
    "CubeLabel",
    "LabelClass",
    "layer_of",
    "layers_of",
    "family_is_empty",
    "count_in_layer",
    "cubes_in_layer",
    "layer_cube_indices",
    "cube_of",
    "label_of",
    "enclosing_cube",
    "min_layer_for_labels",
    "label_class",
    "max_layer_touching",
]


def layers_of(points: np.ndarray) -> np.ndarray:
    """Layer index per point, shape (N, n) -> (N,).

    The layer of x is the smallest l >= 0 with x in [-2^l, 2^l)^n; the
    half-open convention makes this asymmetric (e.g. -2 lies in layer 1,
    +2 in layer 2).
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim == 1:
        pts = pts[:, None]
    with np.errstate(divide="ignore"):
        lg = np.log2(np.abs(pts), where=np.abs(pts) > 0, out=np.full(pts.shape, -1.0))
    cand = np.where(
        pts >= 0,
        np.where(pts < 1, 0, np.floor(lg) + 1),
        np.where(pts >= -1, 0, np.ceil(lg)),
    ).astype(np.int64)
    l = np.max(cand, axis=1)
    # exact fix-up against float log2 wobble
    for _ in range(3):
        side = np.power(2.0, l.astype(float))[:, None]
        ok = np.all((pts >= -side) & (pts < side), axis=1)
        l = l + (~ok).astype(np.int64)
        smaller = np.power(2.0, np.maximum(l - 1, 0).astype(float))[:, None]
        fits = (l > 0) & np.all((pts >= -smaller) & (pts < smaller), axis=1)
        l = l - fits.astype(np.int64)
        if np.all(ok) and not np.any(fits):
            break
    return l


def layer_of(x) -> int:
    """Layer index of a single point."""
    return int(layers_of(np.atleast_1d(np.asarray(x, dtype=float))[None, :])[0])


def family_is_empty(k: int, l: int) -> bool:
    """True iff Delta^gamma_{k,l} contains no cubes.

    The family is nonempty exactly for (k, l) = (0, 0) and for k > -2l.
    """
    if l == 0:
        return k < 0
    return k <= -2 * l


@dataclass(frozen=True)
class GaussianCube:
    """Dyadic cube of side 2^(-k-l) contained in layer L_l.

    ``index`` is the integer lattice position: the cube is
    ``[index_i * side, (index_i + 1) * side)`` per axis.
    """

    k: int
    l: int
    index: tuple

    @property
    def n(self) -> int:
        return len(self.index)

    @property
    def side(self) -> float:
        return 2.0 ** (-self.k - self.l)

    @property
    def lower(self) -> np.ndarray:
        return np.asarray(self.index, dtype=float) * self.side

    @property
    def upper(self) -> np.ndarray:
        return (np.asarray(self.index, dtype=float) + 1.0) * self.side

    @property
    def center(self) -> np.ndarray:
        return (np.asarray(self.index, dtype=float) + 0.5) * self.side

    @property
    def diameter(self) -> float:
        return self.side * float(np.sqrt(self.n))

    def box(self) -> Box:
        return Box(self.lower, self.upper)

    def contains(self, x) -> bool:
        return self.box().contains(x)

    def children(self) -> list:
        """The 2^n cubes of the next generation tiling this cube."""
        base = tuple(2 * i for i in self.index)
        out = []
        for off in itertools.product((0, 1), repeat=self.n):
            out.append(GaussianCube(self.k + 1, self.l, tuple(b + o for b, o in zip(base, off))))
        return out


def count_in_layer(k: int, l: int, n: int) -> int:
    """Number of cubes in Delta^gamma_{k,l} (closed form)."""
    if family_is_empty(k, l):
        return 0
    if l == 0:
        return 2 ** ((k + 1) * n)
    return 2 ** ((k + 2 * l) * n) * (2**n - 1)


def _axis_ranges(k: int, l: int, window: Box | None, n: int):
    """Per-axis inclusive-exclusive index ranges for the outer box, clipped."""
    side = 2.0 ** (-k - l)
    outer = 2 ** (k + 2 * l) if l >= 1 else 2**k  # outer box is [-2^l, 2^l)
    lo_all, hi_all = -outer, outer
    if window is None:
        return [(lo_all, hi_all)] * n, side
    ranges = []
    for i in range(n):
        lo = max(lo_all, int(np.floor(window.lower[i] / side)))
        hi = min(hi_all, int(np.ceil(window.upper[i] / side)))
        ranges.append((lo, max(hi, lo)))
    return ranges, side


def layer_cube_indices(k: int, l: int, n: int, window: Box | None = None) -> np.ndarray:
    """Integer index array (M, n) of the cubes of Delta^gamma_{k,l}.

    Restricted to cubes intersecting ``window`` when given.  Lexicographic
    order along the axes.
    """
    if family_is_empty(k, l):
        return np.empty((0, n), dtype=np.int64)
    ranges, _ = _axis_ranges(k, l, window, n)
    axes = [np.arange(lo, hi, dtype=np.int64) for lo, hi in ranges]
    if any(len(a) == 0 for a in axes):
        return np.empty((0, n), dtype=np.int64)
    mesh = np.meshgrid(*axes, indexing="ij")
    idx = np.stack([g.ravel() for g in mesh], axis=1)
    if l >= 1:
        inner = 2 ** (k + 2 * l - 1)
        inside_inner = np.all((idx >= -inner) & (idx < inner), axis=1)
        idx = idx[~inside_inner]
    return idx


def cubes_in_layer(k: int, l: int, n: int, window: Box | None = None) -> Iterator[GaussianCube]:
    """Iterate the cubes of Delta^gamma_{k,l}, lexicographically."""
    for row in layer_cube_indices(k, l, n, window):
        yield GaussianCube(k, l, tuple(int(v) for v in row))


def cube_of(x, k: int) -> GaussianCube:
    """The cube of Delta^gamma_{k, layer(x)} containing x."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    l = layer_of(x)
    if family_is_empty(k, l):
        raise ValueError(f"family Delta_({k},{l}) is empty; no cube of this size fits the layer")
    side = 2.0 ** (-k - l)
    index = tuple(int(v) for v in np.floor(x / side).astype(np.int64))
    return GaussianCube(k, l, index)


@dataclass(frozen=True)
class CubeLabel:
    """Periodic label of a generation-0 cube, components in {1..2^kappa}^n."""

    components: tuple
    kappa: int

    def __post_init__(self):
        if not all(1 <= c <= 2**self.kappa for c in self.components):
            raise ValueError("label components must lie in 1..2^kappa")


def min_layer_for_labels(kappa: int) -> int:
    """Smallest layer whose generation-0 cubes carry kappa-labels."""
    return (kappa + 2) // 2  # ceil((kappa+1)/2)


def label_of(cube: GaussianCube, kappa: int) -> CubeLabel:
    """kappa-label of a generation-0 cube.

    Each coarse cube of Delta^gamma_{-kappa, l} splits into 2^(kappa*n)
    generation-0 cubes; the label is the 1-based position inside that
    coarse cube, i.e. (index mod 2^kappa) + 1 per axis.
    """
    if cube.k != 0:
        raise ValueError("labels are defined for generation-0 cubes (k = 0)")
    if cube.l < min_layer_for_labels(kappa):
        raise ValueError(f"layer {cube.l} too low for kappa={kappa} labels")
    period = 2**kappa
    comps = tuple(int(i % period) + 1 for i in cube.index)
    return CubeLabel(comps, kappa)


def enclosing_cube(cube: GaussianCube, kappa: int) -> GaussianCube:
    """The Delta^gamma_{-kappa, l} cube containing a generation-0 cube."""
    if cube.k != 0:
        raise ValueError("expected a generation-0 cube")
    if family_is_empty(-kappa, cube.l):
        raise ValueError("coarse family is empty at this layer")
    period = 2**kappa
    coarse = tuple(int(i) // period for i in cube.index)
    return GaussianCube(-kappa, cube.l, coarse)


def max_layer_touching(window: Box) -> int:
    """Largest layer index whose annulus meets the window."""
    sup = float(np.max(np.abs(np.stack([window.lower, window.upper]))))
    l = 0
    while 2.0 ** (l - 1) < sup:
        l += 1
        if l > 1100:  # pragma: no cover - guards absurd windows
            raise ValueError("window too large")
    return l


@dataclass(frozen=True)
class LabelClass:
    """Union of same-label generation-0 cubes in layers >= p+2.

    The label period is kappa = p + 4; the class is enumerable inside the
    truncation window.
    """

    p: int
    label: CubeLabel
    truncation: Box

    def __post_init__(self):
        if self.label.kappa != self.p + 4:
            raise ValueError("label class requires kappa = p + 4")
        if self.p < 1:
            raise ValueError("label classes need p >= 1")

    @property
    def min_layer(self) -> int:
        return max(self.p + 2, min_layer_for_labels(self.label.kappa))

    def member_cubes(self) -> list:
        """Member cubes intersecting the truncation window, by (layer, index)."""
        out = []
        period = 2 ** self.label.kappa
        offsets = tuple(c - 1 for c in self.label.components)
        for l in range(self.min_layer, max_layer_touching(self.truncation) + 1):
            idx = layer_cube_indices(0, l, self.truncation.n, self.truncation)
            if len(idx) == 0:
                continue
            match = np.all(idx % period == np.asarray(offsets, dtype=np.int64), axis=1)
            for row in idx[match]:
                out.append(GaussianCube(0, l, tuple(int(v) for v in row)))
        return out

    def contains(self, x) -> bool:
        x = np.atleast_1d(np.asarray(x, dtype=float))
        if not self.truncation.contains(x):
            return False
        l = layer_of(x)
        if l < self.min_layer:
            return False
        cube = cube_of(x, 0)
        return label_of(cube, self.label.kappa) == self.label


def label_class(p: int, label: CubeLabel, truncation: Box) -> LabelClass:
    """Build the label class A_p^(label) truncated to a window."""
    return LabelClass(p, label, truncation)
