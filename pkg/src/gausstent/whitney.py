"""Admissible Whitney sets: thickening, checks, coverings, partitions.

A set A is lambda-admissible Whitney when every x in A satisfies
``d(x, complement of A) <= lambda * m(x)``: the set hugs the admissible
scale everywhere.  Thickening A by the admissible ball family at scale
alpha gives ``A + C_alpha = {z : d(z, A) < alpha * m(z)}``.  Thickened
cubes of the layered grid and thickened label classes stay admissible
Whitney with explicit constants, and same-label cubes in deep layers have
positively separated thickenings; those facts drive the finite covering
of an arbitrary open set and the Whitney partition used by the atomic
decomposition.

Sets are carried on finite bitmaps (RegionMask): half-open windows, cells
of side h, all distances measured between cell centers by exact Euclidean
distance transform.  Distance inequalities are therefore tested with an
additive grid slack of 2*h*sqrt(n).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np
from scipy.ndimage import distance_transform_edt

from .geometry import Box, m_from_norms
from .grid import (
    CubeLabel,
    GaussianCube,
    LabelClass,
    label_of,
    layer_cube_indices,
    layers_of,
    max_layer_touching,
    min_layer_for_labels,
)

__all__ = [
    "RegionMask",
    "WhitneyCertificate",
    "WhitneyPartition",
    "CoverPiece",
    "PartitionError",
    "grid_slack",
    "thickened_contains",
    "thicken",
    "thickened_boxes_mask",
    "thickened_cube_mask",
    "thickened_label_class_mask",
    "whitney_check",
    "separation_check",
    "cover_open_set",
    "cover_count_bound",
    "whitney_partition",
]


class PartitionError(RuntimeError):
    """Whitney selection could not terminate on the mask."""


def _edt(bitmap: np.ndarray, h: float) -> np.ndarray:
    """Distance from each False cell to the nearest True cell (centers)."""
    if not bitmap.any():
        return np.full(bitmap.shape, np.inf)
    return distance_transform_edt(~bitmap, sampling=h)


@dataclass(eq=False)
class RegionMask:
    """Boolean cell bitmap over a half-open window, cells of side h.

    Window bounds must sit on the h-lattice so that mask cells align with
    the global dyadic grid.
    """

    window: Box
    h: float
    cells: np.ndarray

    def __post_init__(self):
        dims = (self.window.upper - self.window.lower) / self.h
        rounded = np.rint(dims)
        if np.any(np.abs(dims - rounded) > 1e-9):
            raise ValueError("window side must be an integer multiple of h")
        offs = self.window.lower / self.h
        if np.any(np.abs(offs - np.rint(offs)) > 1e-9):
            raise ValueError("window bounds must lie on the h-lattice")
        shape = tuple(int(v) for v in rounded)
        self.cells = np.asarray(self.cells, dtype=bool)
        if self.cells.shape != shape:
            raise ValueError(f"bitmap shape {self.cells.shape} != window shape {shape}")
        self._cache: dict = {}

    # -- construction -------------------------------------------------

    @classmethod
    def empty(cls, window: Box, h: float) -> "RegionMask":
        shape = tuple(int(round(s / h)) for s in window.upper - window.lower)
        return cls(window, h, np.zeros(shape, dtype=bool))

    @classmethod
    def full(cls, window: Box, h: float) -> "RegionMask":
        mask = cls.empty(window, h)
        mask.cells[...] = True
        return mask

    @classmethod
    def from_predicate(cls, window: Box, h: float, fn) -> "RegionMask":
        mask = cls.empty(window, h)
        pts = mask.centers_stacked()
        vals = np.asarray(fn(pts), dtype=bool).reshape(mask.cells.shape)
        return cls(window, h, vals)

    # -- geometry helpers ---------------------------------------------

    @property
    def n(self) -> int:
        return self.window.n

    @property
    def dims(self) -> tuple:
        return self.cells.shape

    def axis_centers(self, i: int) -> np.ndarray:
        return self.window.lower[i] + (np.arange(self.dims[i]) + 0.5) * self.h

    def centers_stacked(self) -> np.ndarray:
        """All cell centers, shape (prod(dims), n), C order."""
        axes = [self.axis_centers(i) for i in range(self.n)]
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack([g.ravel() for g in mesh], axis=1)

    def norm_grid(self) -> np.ndarray:
        if "norm" not in self._cache:
            axes = [self.axis_centers(i) for i in range(self.n)]
            sq = axes[0] ** 2
            for a in axes[1:]:
                sq = sq[..., None] + a**2
            self._cache["norm"] = np.sqrt(sq)
        return self._cache["norm"]

    def m_grid(self) -> np.ndarray:
        if "m" not in self._cache:
            self._cache["m"] = m_from_norms(self.norm_grid())
        return self._cache["m"]

    def cell_of(self, x) -> tuple | None:
        x = np.atleast_1d(np.asarray(x, dtype=float))
        idx = np.floor((x - self.window.lower) / self.h).astype(int)
        if np.any(idx < 0) or np.any(idx >= np.asarray(self.dims)):
            return None
        return tuple(int(v) for v in idx)

    def contains_point(self, x) -> bool:
        idx = self.cell_of(x)
        return idx is not None and bool(self.cells[idx])

    def active_centers(self) -> np.ndarray:
        idx = np.argwhere(self.cells)
        return self.window.lower + (idx + 0.5) * self.h

    def count(self) -> int:
        return int(np.count_nonzero(self.cells))

    # -- distance fields ----------------------------------------------

    def dist_to_set(self) -> np.ndarray:
        """d(cell center, A) on the lattice; zero on active cells."""
        if "dset" not in self._cache:
            self._cache["dset"] = _edt(self.cells, self.h)
        return self._cache["dset"]

    def dist_to_complement(self) -> np.ndarray:
        """d(cell center, ~A) with the window exterior in the complement."""
        if "dcomp" not in self._cache:
            padded = np.pad(self.cells, 1, constant_values=False)
            self._cache["dcomp"] = _edt(~padded, self.h)[(slice(1, -1),) * self.n]
        return self._cache["dcomp"]

    def _kdtree(self):
        if "tree" not in self._cache:
            from scipy.spatial import cKDTree

            pts = self.active_centers()
            self._cache["tree"] = cKDTree(pts) if len(pts) else None
        return self._cache["tree"]

    def dist_to_set_point(self, x) -> float:
        """d(x, A) in the cell-center metric, for arbitrary x."""
        tree = self._kdtree()
        if tree is None:
            return float("inf")
        return float(tree.query(np.atleast_1d(np.asarray(x, dtype=float)))[0])

    # -- set algebra (same carrier) -----------------------------------

    def _check_same(self, other: "RegionMask"):
        if (
            self.h != other.h
            or not np.array_equal(self.window.lower, other.window.lower)
            or self.dims != other.dims
        ):
            raise ValueError("masks live on different carriers")

    def union(self, other: "RegionMask") -> "RegionMask":
        self._check_same(other)
        return RegionMask(self.window, self.h, self.cells | other.cells)

    def intersection(self, other: "RegionMask") -> "RegionMask":
        self._check_same(other)
        return RegionMask(self.window, self.h, self.cells & other.cells)

    def difference(self, other: "RegionMask") -> "RegionMask":
        self._check_same(other)
        return RegionMask(self.window, self.h, self.cells & ~other.cells)

    def complement(self) -> "RegionMask":
        """Complement within the window only."""
        return RegionMask(self.window, self.h, ~self.cells)

    def with_cells(self, cells: np.ndarray) -> "RegionMask":
        return RegionMask(self.window, self.h, cells)


def grid_slack(mask_or_h, n: int | None = None) -> float:
    """Additive slack 2*h*sqrt(n) for distance inequalities on the lattice."""
    if isinstance(mask_or_h, RegionMask):
        return 2.0 * mask_or_h.h * float(np.sqrt(mask_or_h.n))
    return 2.0 * float(mask_or_h) * float(np.sqrt(n))


# ---------------------------------------------------------------------------
# thickening


def thickened_contains(A: RegionMask, alpha: float, z) -> bool:
    """True iff d(z, A) < alpha * m(z), distances to active cell centers."""
    z = np.atleast_1d(np.asarray(z, dtype=float))
    m = 1.0 / max(1.0, float(np.linalg.norm(z)))
    return A.dist_to_set_point(z) < alpha * m


def thicken(A: RegionMask, alpha: float) -> RegionMask:
    """Mask of A + C_alpha on the same carrier (cell-center sampling)."""
    return A.with_cells(A.dist_to_set() < alpha * A.m_grid())


def _box_reach(lower: np.ndarray, upper: np.ndarray, alpha: float) -> float:
    """Upper bound for sup d(z, box) over z with d(z, box) < alpha*m(z)."""
    d = np.maximum(lower, 0.0) + np.maximum(-upper, 0.0)
    origin_dist = float(np.linalg.norm(d))
    reach = alpha
    for _ in range(4):
        m_bound = 1.0 / max(1.0, origin_dist - reach)
        reach = min(reach, alpha * m_bound)
    return reach


def thickened_boxes_mask(
    boxes: Iterable[Box],
    alpha: float,
    window: Box,
    h: float,
) -> RegionMask:
    """Exact-membership mask of union(box) + C_alpha.

    Membership d(z, union) < alpha*m(z) is evaluated analytically at every
    cell center, one local patch per box; only the z-lattice discretizes.
    """
    out = RegionMask.empty(window, h)
    bits = out.cells
    dims = np.asarray(out.dims)
    for box in boxes:
        reach = _box_reach(box.lower, box.upper, alpha) + 2 * h
        lo_idx = np.floor((box.lower - reach - window.lower) / h).astype(int)
        hi_idx = np.ceil((box.upper + reach - window.lower) / h).astype(int)
        lo_idx = np.maximum(lo_idx, 0)
        hi_idx = np.minimum(hi_idx, dims)
        if np.any(hi_idx <= lo_idx):
            continue
        axes = [
            window.lower[i] + (np.arange(lo_idx[i], hi_idx[i]) + 0.5) * h
            for i in range(out.n)
        ]
        dist_sq = np.zeros(tuple(hi_idx - lo_idx))
        norm_sq = np.zeros_like(dist_sq)
        for i, ax in enumerate(axes):
            d_ax = np.maximum(box.lower[i] - ax, 0.0) + np.maximum(ax - box.upper[i], 0.0)
            shape = [1] * out.n
            shape[i] = len(ax)
            dist_sq = dist_sq + (d_ax**2).reshape(shape)
            norm_sq = norm_sq + (ax**2).reshape(shape)
        m = m_from_norms(np.sqrt(norm_sq))
        member = np.sqrt(dist_sq) < alpha * m
        sl = tuple(slice(lo_idx[i], hi_idx[i]) for i in range(out.n))
        bits[sl] |= member
    return out


def thickened_cube_mask(cube: GaussianCube, alpha: float, window: Box, h: float) -> RegionMask:
    return thickened_boxes_mask([cube.box()], alpha, window, h)


def thickened_label_class_mask(lc: LabelClass, alpha: float, window: Box, h: float) -> RegionMask:
    boxes = [q.box() for q in lc.member_cubes()]
    return thickened_boxes_mask(boxes, alpha, window, h)


# ---------------------------------------------------------------------------
# admissible Whitney check


@dataclass(frozen=True)
class WhitneyCertificate:
    """Result of a lambda-admissible Whitney scan over a mask."""

    lam: float
    samples_checked: int
    max_ratio: float
    violations: int
    slack: float

    @property
    def ok(self) -> bool:
        return self.violations == 0


def whitney_check(A: RegionMask, lam: float) -> WhitneyCertificate:
    """Scan every active cell for d(x, ~A) <= lam * m(x) + slack."""
    slack = grid_slack(A)
    active = A.cells
    count = int(np.count_nonzero(active))
    if count == 0:
        return WhitneyCertificate(lam, 0, 0.0, 0, slack)
    d = A.dist_to_complement()[active]
    m = A.m_grid()[active]
    violations = int(np.count_nonzero(d > lam * m + slack))
    return WhitneyCertificate(lam, count, float(np.max(d / m)), violations, slack)


# ---------------------------------------------------------------------------
# separation of thickened same-label cubes


def separation_check(
    p: int,
    label: CubeLabel,
    cube1: GaussianCube,
    cube2: GaussianCube,
    h: float,
) -> float:
    """Min distance between the 2^p-thickened masks of two same-label cubes.

    Mask membership is the analytic thickening predicate, so sampled
    points lie inside the true thickened sets; the return value can
    overestimate the true separation by at most one cell diagonal.
    """
    kappa = label.kappa
    if kappa < p + 4:
        raise ValueError("separation needs kappa >= p + 4")
    min_l = max(p + 2, min_layer_for_labels(kappa))
    for cube in (cube1, cube2):
        if cube.l < min_l:
            raise ValueError(f"cube layer {cube.l} below the separation range {min_l}")
        if label_of(cube, kappa) != label:
            raise ValueError("cubes do not share the given label")
    if cube1 == cube2:
        raise ValueError("cubes must be distinct")
    alpha = 2.0**p
    masks = []
    for cube in (cube1, cube2):
        reach = _box_reach(cube.lower, cube.upper, alpha) + 4 * h
        win = Box(
            np.floor((cube.lower - reach) / h) * h,
            np.ceil((cube.upper + reach) / h) * h,
        )
        masks.append(thickened_boxes_mask([cube.box()], alpha, win, h))
    from scipy.spatial import cKDTree

    a = masks[0].active_centers()
    b = masks[1].active_centers()
    if len(a) == 0 or len(b) == 0:
        raise RuntimeError("thickened cube produced an empty mask; h too coarse")
    dist, _ = cKDTree(b).query(a)
    return float(np.min(dist))


# ---------------------------------------------------------------------------
# covering an open set


@dataclass(frozen=True)
class CoverPiece:
    """One piece of the finite admissible-Whitney cover of an open set."""

    kind: str  # "cube" | "label"
    cube: GaussianCube | None
    label: CubeLabel | None
    mask: RegionMask


def cover_count_bound(n: int, p: int) -> int:
    """Upper bound for the number of covering sets."""
    kappa = p + 4
    return 2**n * sum(2 ** (l * kappa * n) for l in range(0, p + 2)) + 2 ** (kappa * n)


def _hits_for_boxes(
    pts: np.ndarray,
    reach: np.ndarray,
    lowers: np.ndarray,
    uppers: np.ndarray,
) -> np.ndarray:
    """Boolean (M_pts, M_boxes): d(pt, box) < reach(pt); doubly chunked."""
    out = np.zeros((len(pts), len(lowers)), dtype=bool)
    for ps in range(0, len(pts), 2048):
        p_sl = slice(ps, min(ps + 2048, len(pts)))
        for bs in range(0, len(lowers), 2048):
            b_sl = slice(bs, min(bs + 2048, len(lowers)))
            d = np.maximum(lowers[b_sl][None, :, :] - pts[p_sl][:, None, :], 0.0)
            d = d + np.maximum(pts[p_sl][:, None, :] - uppers[b_sl][None, :, :], 0.0)
            dist = np.sqrt(np.sum(d**2, axis=2))
            out[p_sl, b_sl] = dist < reach[p_sl][:, None]
    return out


def _label_hits_in_layer(pts: np.ndarray, reach: np.ndarray, l: int, kappa: int) -> dict:
    """Map label components -> bool rows over pts whose admissible reach
    meets a cube of that label in layer l.  Candidate cubes are enumerated
    around each point, so cost scales with len(pts), not with the layer.
    """
    n = pts.shape[1]
    side = 2.0**-l
    outer = 2 ** (2 * l)
    inner = 2 ** (2 * l - 1)
    period = 2**kappa
    K = int(np.ceil(reach.max() / side)) + 1
    offsets = np.array(list(itertools.product(range(-K, K + 1), repeat=n)), dtype=np.int64)
    hits: dict = {}
    for ps in range(0, len(pts), 8192):
        sl = slice(ps, min(ps + 8192, len(pts)))
        base = np.floor(pts[sl] / side).astype(np.int64)
        cand = base[:, None, :] + offsets[None, :, :]
        lo = cand * side
        d = np.maximum(lo - pts[sl][:, None, :], 0.0) + np.maximum(
            pts[sl][:, None, :] - lo - side, 0.0
        )
        dist = np.sqrt(np.sum(d**2, axis=2))
        in_outer = np.all((cand >= -outer) & (cand < outer), axis=2)
        in_inner = np.all((cand >= -inner) & (cand < inner), axis=2)
        hit = (dist < reach[sl][:, None]) & in_outer & ~in_inner
        rows, cols = np.nonzero(hit)
        if len(rows) == 0:
            continue
        comps = cand[rows, cols] % period + 1
        codes = comps[:, 0]
        for i in range(1, n):
            codes = codes * (period + 1) + comps[:, i]
        for code in np.unique(codes):
            where = codes == code
            key = tuple(int(v) for v in comps[where][0])
            acc = hits.setdefault(key, np.zeros(len(pts), dtype=bool))
            acc[rows[where] + ps] = True
    return hits


def cover_open_set(O: RegionMask, p: int) -> list:
    """Cover an open mask by pieces of the finite admissible-Whitney family.

    Pieces are O intersected with the 2^p-thickened generation-0 cubes of
    layers 0..p+1 and with the 2^p-thickened label classes (kappa = p+4).
    Empty pieces are dropped; the union of the pieces equals O cell-exactly.
    """
    n = O.n
    alpha = 2.0**p
    kappa = p + 4
    pts = O.active_centers()
    pieces: list[CoverPiece] = []
    if len(pts) == 0:
        return pieces
    pt_norms = np.linalg.norm(pts, axis=1)
    reach = alpha * m_from_norms(pt_norms)
    flat_active = np.argwhere(O.cells)

    def piece_mask(sel: np.ndarray) -> RegionMask:
        bits = np.zeros(O.dims, dtype=bool)
        bits[tuple(flat_active[sel].T)] = True
        return O.with_cells(bits)

    # cube pieces, layers 0..p+1
    for l in range(0, p + 2):
        idx = layer_cube_indices(0, l, n, None)
        if len(idx) == 0:
            continue
        side = 2.0**-l
        lowers = idx * side
        uppers = lowers + side
        bb_lo, bb_hi = pts.min(axis=0) - alpha, pts.max(axis=0) + alpha
        near = np.all((uppers > bb_lo) & (lowers < bb_hi), axis=1)
        idx, lowers, uppers = idx[near], lowers[near], uppers[near]
        if len(idx) == 0:
            continue
        hit = _hits_for_boxes(pts, reach, lowers, uppers)
        for j in np.nonzero(hit.any(axis=0))[0]:
            cube = GaussianCube(0, l, tuple(int(v) for v in idx[j]))
            pieces.append(CoverPiece("cube", cube, None, piece_mask(hit[:, j])))

    # label-class pieces, layers >= p+2
    lab_hits: dict = {}
    reach_window = Box(O.window.lower - alpha, O.window.upper + alpha)
    for l in range(p + 2, max_layer_touching(reach_window) + 1):
        near_layer = (pt_norms >= 2.0 ** (l - 1) - reach) & (
            pt_norms <= 2.0**l * np.sqrt(n) + reach
        )
        sub = np.nonzero(near_layer)[0]
        if len(sub) == 0:
            continue
        layer_hits = _label_hits_in_layer(pts[sub], reach[sub], l, kappa)
        for comps, rows in layer_hits.items():
            sel = np.zeros(len(pts), dtype=bool)
            sel[sub[rows]] = True
            if comps in lab_hits:
                lab_hits[comps] |= sel
            else:
                lab_hits[comps] = sel
    for comps in sorted(lab_hits):
        pieces.append(
            CoverPiece("label", None, CubeLabel(comps, kappa), piece_mask(lab_hits[comps]))
        )
    return pieces


# ---------------------------------------------------------------------------
# Whitney partition with bump functions


def _cubic_bump(u: np.ndarray) -> np.ndarray:
    """C^1 cubic bump on [-1, 1]: 1 at 0, 0 at |u| >= 1."""
    a = np.clip(np.abs(u), 0.0, 1.0)
    return 2.0 * a**3 - 3.0 * a**2 + 1.0


@dataclass(eq=False)
class WhitneyPartition:
    """Whitney cubes covering an open mask, with a Lipschitz partition of unity.

    ``rho`` is the certified partition constant: it dominates every
    d(Q, ~O)/diam ratio, the bump support dilation, and (with a 5 percent
    margin) the reciprocal of the sampled min of phi on each cube, so all
    partition properties hold with this single value.
    """

    O: RegionMask
    cubes: list
    d_values: np.ndarray
    rho_distance: float
    bump_dilation: float
    rho: float = 0.0
    _centers: np.ndarray = field(default=None, repr=False)
    _half_widths: np.ndarray = field(default=None, repr=False)
    _neighbors: list = field(default=None, repr=False)

    def __post_init__(self):
        self._centers = np.stack([c.center for c in self.cubes])
        sides = np.array([c.side for c in self.cubes])
        self._half_widths = 0.5 * self.bump_dilation * sides
        if self.rho == 0.0:
            self.rho = max(self.rho_distance, self.bump_dilation)

    @property
    def sides(self) -> np.ndarray:
        return np.array([c.side for c in self.cubes])

    @property
    def diameters(self) -> np.ndarray:
        return self.sides * np.sqrt(self.O.n)

    def neighbors(self, m: int) -> np.ndarray:
        """Cubes whose bump support overlaps the support of bump m."""
        if self._neighbors is None:
            from scipy.spatial import cKDTree

            tree = cKDTree(self._centers)
            max_a = float(self._half_widths.max())
            nbrs = []
            for i in range(len(self.cubes)):
                r = np.sqrt(self.O.n) * (self._half_widths[i] + max_a)
                cand = np.asarray(tree.query_ball_point(self._centers[i], r), dtype=int)
                gap = np.max(
                    np.abs(self._centers[cand] - self._centers[i])
                    - (self._half_widths[cand] + self._half_widths[i])[:, None],
                    axis=1,
                )
                nbrs.append(np.sort(cand[gap < 0]))
            self._neighbors = nbrs
        return self._neighbors[m]

    def psi_single(self, m: int, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        u = (X - self._centers[m]) / self._half_widths[m]
        return np.prod(_cubic_bump(u), axis=1)

    def psi_sum(self, X: np.ndarray, members: np.ndarray | None = None) -> np.ndarray:
        """Sum of bumps at the given points, optionally over a subset."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        idx = np.arange(len(self.cubes)) if members is None else np.asarray(members)
        total = np.zeros(len(X))
        for start in range(0, len(idx), 256):
            sl = idx[start : start + 256]
            u = (X[:, None, :] - self._centers[sl][None, :, :]) / self._half_widths[sl][
                None, :, None
            ]
            total += np.prod(_cubic_bump(u), axis=2).sum(axis=1)
        return total

    def phi(self, m: int, X: np.ndarray) -> np.ndarray:
        """phi_m at arbitrary points; local neighbor sums keep this fast."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        num = self.psi_single(m, X)
        out = np.zeros_like(num)
        pos = num > 0
        if pos.any():
            denom = self.psi_sum(X[pos], members=self.neighbors(m))
            out[pos] = num[pos] / denom
        return out

    def partition_of_unity(self, X: np.ndarray) -> np.ndarray:
        """Termwise sum of all phi_m at the given points."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        total = np.zeros(len(X))
        for m in range(len(self.cubes)):
            total += self.phi(m, X)
        return total

    def cube_id_map(self) -> np.ndarray:
        """Cell -> cube id (-1 outside O)."""
        if not hasattr(self, "_id_map"):
            id_map = np.full(self.O.dims, -1, dtype=np.int32)
            for mi in range(len(self.cubes)):
                id_map[self.cube_cell_slice(mi)] = mi
            self._id_map = id_map
        return self._id_map

    def cube_id_at(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        idx = np.floor((X - self.O.window.lower) / self.O.h).astype(int)
        dims = np.asarray(self.O.dims)
        ok = np.all((idx >= 0) & (idx < dims), axis=1)
        out = np.full(len(X), -1, dtype=np.int32)
        id_map = self.cube_id_map()
        out[ok] = id_map[tuple(idx[ok].T)]
        return out

    def cube_cell_slice(self, m: int) -> tuple:
        c = self.cubes[m]
        b = int(round(c.side / self.O.h))
        off = np.rint(self.O.window.lower / self.O.h).astype(int)
        start = np.asarray(c.index) * b - off
        return tuple(slice(int(s), int(s) + b) for s in start)


def whitney_partition(O: RegionMask, lam: float) -> WhitneyPartition:
    """Partition an admissible-Whitney open mask into Whitney cubes.

    Maximal cubes of the layered dyadic grid with diam(Q) <= d(Q, ~O) are
    selected top-down; at the resolution floor a single active cell is
    accepted under the grid slack.  Raises PartitionError when the
    precondition fails or the selection stalls.
    """
    if O.count() == 0:
        raise PartitionError("cannot partition an empty mask")
    cert = whitney_check(O, lam)
    if not cert.ok:
        raise PartitionError(
            f"mask is not {lam}-admissible Whitney ({cert.violations} violations)"
        )
    n = O.n
    h = O.h
    j = int(round(-np.log2(h)))
    if abs(2.0**-j - h) > 1e-12 * h:
        raise ValueError("h must be a power of two")
    slack = grid_slack(O)
    D = np.where(O.cells, O.dist_to_complement(), -np.inf)
    off = np.rint(O.window.lower / h).astype(int)
    dims = np.asarray(O.dims)
    sqrt_n = float(np.sqrt(n))

    active_pts = O.active_centers()
    bb = Box(active_pts.min(axis=0) - h, active_pts.max(axis=0) + h)
    near_origin = np.clip(np.zeros(n), bb.lower, np.nextafter(bb.upper, -np.inf))
    lmin = int(layers_of(near_origin[None, :])[0])
    lmax = max_layer_touching(bb)

    chosen: list[GaussianCube] = []
    chosen_d: list[float] = []
    stack: list[GaussianCube] = []
    for l in range(lmin, lmax + 1):
        for row in layer_cube_indices(0, l, n, bb):
            stack.append(GaussianCube(0, l, tuple(int(v) for v in row)))
    while stack:
        cube = stack.pop()
        width = cube.side / h
        if width < 1 - 1e-9:
            raise PartitionError("window reaches layers finer than the mask resolution")
        b = int(round(width))
        start = np.asarray(cube.index, dtype=np.int64) * b - off
        end = start + b
        c_lo = np.maximum(start, 0)
        c_hi = np.minimum(end, dims)
        if np.any(c_hi <= c_lo):
            continue
        sl = tuple(slice(int(a), int(z)) for a, z in zip(c_lo, c_hi))
        blk = O.cells[sl]
        if not blk.any():
            continue
        clipped = bool(np.any(start < 0) or np.any(end > dims))
        all_active = (not clipped) and bool(blk.all())
        diam = cube.side * sqrt_n
        if all_active:
            dmin = float(D[sl].min())
            if diam <= dmin or (b == 1 and diam <= dmin + slack):
                chosen.append(cube)
                chosen_d.append(dmin)
                continue
        if b == 1:
            raise PartitionError("selection stalled at the resolution floor")
        stack.extend(cube.children())

    # (i) the selected cubes tile the active cells exactly
    paint = np.zeros(O.dims, dtype=np.int16)
    for cube in chosen:
        b = int(round(cube.side / h))
        start = np.asarray(cube.index) * b - off
        sl = tuple(slice(int(s), int(s) + b) for s in start)
        paint[sl] += 1
    if int(paint.max()) > 1 or not np.array_equal(paint > 0, O.cells):
        raise PartitionError("selected cubes do not tile the mask")

    key = sorted(range(len(chosen)), key=lambda i: (chosen[i].l, chosen[i].index))
    d_values = np.asarray(chosen_d)[key]
    chosen = [chosen[i] for i in key]

    diams = np.array([c.side for c in chosen]) * sqrt_n
    rho_dist = float(np.max(d_values / diams))
    part = WhitneyPartition(
        O=O,
        cubes=chosen,
        d_values=d_values,
        rho_distance=rho_dist,
        bump_dilation=max(rho_dist, 1.5),
    )
    # certify 1/rho <= phi on each cube: sample cell centers, corners, center
    min_phi = np.inf
    for mi, cube in enumerate(chosen):
        sl = part.cube_cell_slice(mi)
        axes = [O.axis_centers(i)[sl[i]] for i in range(n)]
        mesh = np.meshgrid(*axes, indexing="ij")
        pts = np.stack([g.ravel() for g in mesh], axis=1)
        corners = np.array(list(itertools.product(*zip(cube.lower, cube.upper))))
        pts = np.concatenate([pts, corners, cube.center[None, :]])
        vals = part.phi(mi, pts)
        min_phi = min(min_phi, float(np.min(vals)))
    if min_phi <= 0:
        raise PartitionError("degenerate bump normalization")
    part.rho = max(part.rho_distance, part.bump_dilation, 1.05 / min_phi)
    return part
