"""Discretized Gaussian tent spaces over D = {(y, t): t < m(y)}.

The domain carries a spatial lattice of cells (side h, exact gamma box
weights) and a geometric t-ladder with uniform log weights, so that
dgamma(y) dt/t becomes an exact cell/level sum.  On top of that live the
conical operator J and its aperture variants, the T^{1,q} norm, tents
T_alpha(A) and regions R_alpha(A), atoms, density sets, and the maximal
function over admissible balls of scale 3/2.

Ball indicators compare exact cell-center distances, so strict
inequalities mean the same thing here and in brute-force oracles.  Ball
measures are exact in one dimension and use a dense radial interpolation
table in two.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import ndtr

from .geometry import (
    AdmissibleBall,
    Box,
    ball_measures_1d,
    gaussian_measure_ball,
    interval_gamma_1d,
    is_admissible,
    m_from_norms,
)
from .whitney import RegionMask

__all__ = [
    "NormConfig",
    "DGrid",
    "TentFunction",
    "AtomRecord",
    "tent_contains",
    "region_contains",
    "tent_pair_mask",
    "region_pair_mask",
    "apply_J",
    "t1q_norm",
    "lq_norm_D",
    "make_atom",
    "verify_atom_norm",
    "holder_chain_report",
    "density_set",
    "maximal_function",
    "session_eta_bar",
    "ball_density_ratios",
    "verify_density_averaging",
]


@dataclass(frozen=True)
class NormConfig:
    """Exponent q in (1, inf) and the ball-measure tolerance."""

    q: float = 2.0
    ball_tol: float = 1e-9

    def __post_init__(self):
        if not 1.0 < self.q < np.inf:
            raise ValueError("q must lie in (1, inf)")

    @property
    def q_prime(self) -> float:
        return self.q / (self.q - 1.0)


# ---------------------------------------------------------------------------
# the discretized domain


@lru_cache(maxsize=8)
def _radial_table_2d(h: float, rho_max: float, radius_key: tuple) -> tuple:
    """gamma(B(x, r)) for |x| on a dense grid, per radius; 2-d only.

    gamma(B(x,r)) = int_0^r s exp(-(s-rho)^2/2) i0e(s rho) ds with
    rho = |x|; fixed 512-node Gauss-Legendre per radius, linear
    interpolation in rho on a grid of step h/8.
    """
    from scipy.special import i0e

    radii = np.asarray(radius_key)
    rhos = np.arange(0.0, rho_max + h, h / 8)
    nodes, gl_w = np.polynomial.legendre.leggauss(512)
    table = np.empty((len(radii), len(rhos)))
    for i, r in enumerate(radii):
        s = 0.5 * r * (nodes + 1.0)
        w = 0.5 * r * gl_w
        sr = s[:, None] * rhos[None, :]
        vals = s[:, None] * np.exp(-0.5 * (s[:, None] - rhos[None, :]) ** 2) * i0e(sr)
        table[i] = w @ vals
    return rhos, table


class DGrid:
    """Spatial lattice times geometric t-ladder; the discretized domain D.

    Active pairs are exactly {(j, s): t_s < m(y_j)}.  Shapes: spatial
    quantities are flat (N,), pair quantities are (S, N).
    """

    def __init__(self, window: Box, h: float, t_min: float = 2.0**-8, ratio: float = 2.0**0.25):
        if window.n not in (1, 2):
            raise ValueError("DGrid supports n in {1, 2}")
        if t_min <= 0 or ratio <= 1:
            raise ValueError("need t_min > 0 and ratio > 1")
        self.window = window
        self.h = float(h)
        self.t_min = float(t_min)
        self.ratio = float(ratio)
        self.n = window.n
        carrier = RegionMask.empty(window, h)
        self.dims = carrier.dims
        self.N = int(np.prod(self.dims))
        axes = [carrier.axis_centers(i) for i in range(self.n)]
        self.axis_centers = axes
        mesh = np.meshgrid(*axes, indexing="ij")
        self.centers = np.stack([g.ravel() for g in mesh], axis=1)
        self.norms = np.linalg.norm(self.centers, axis=1)
        self.m = m_from_norms(self.norms)
        # exact product box measures per cell
        axis_w = []
        for i in range(self.n):
            edges = window.lower[i] + np.arange(self.dims[i] + 1) * h
            axis_w.append(interval_gamma_1d(edges[:-1], edges[1:]))
        g = axis_w[0]
        for w in axis_w[1:]:
            g = np.multiply.outer(g, w)
        self.cell_gamma = g.ravel()
        # t-ladder below 1 (t >= 1 is never active since m <= 1)
        count = int(np.floor(np.log(1.0 / t_min) / np.log(ratio)))
        self.t_levels = t_min * ratio ** np.arange(count + 1)
        self.t_levels = self.t_levels[self.t_levels < 1.0]
        self.S = len(self.t_levels)
        self.log_weight = float(np.log(ratio))
        self.active = self.t_levels[:, None] < self.m[None, :]
        self._ball_cache: dict = {}

    # -- masks ---------------------------------------------------------

    def spatial_mask(self, flat_bool: np.ndarray) -> RegionMask:
        return RegionMask(self.window, self.h, np.asarray(flat_bool, bool).reshape(self.dims))

    def flat(self, mask: RegionMask) -> np.ndarray:
        if mask.dims != self.dims or mask.h != self.h:
            raise ValueError("mask carrier does not match the grid")
        return mask.cells.ravel()

    def cell_index(self, x) -> int | None:
        idx = RegionMask.empty(self.window, self.h).cell_of(x)
        if idx is None:
            return None
        return int(np.ravel_multi_index(idx, self.dims))

    # -- ball measures -------------------------------------------------

    def ball_gamma(self, radius: float) -> np.ndarray:
        """gamma(B(y_j, radius)) for every cell center, cached per radius."""
        key = float(radius)
        if key not in self._ball_cache:
            if self.n == 1:
                self._ball_cache[key] = ball_measures_1d(self.centers[:, 0], key)
            else:
                self._ball_cache[key] = self._ball_gamma_2d(key)
        return self._ball_cache[key]

    def _ball_gamma_2d(self, radius: float) -> np.ndarray:
        rho_max = float(np.max(self.norms)) + self.h
        rhos, table = _radial_table_2d(self.h, rho_max, (radius,))
        return np.interp(self.norms, rhos, table[0])

    def warm_ball_cache(self, radii) -> None:
        """Precompute many radii at once (one shared table build for n=2)."""
        radii = sorted({float(r) for r in radii} - set(self._ball_cache))
        if not radii:
            return
        if self.n == 1:
            for r in radii:
                self.ball_gamma(r)
            return
        rho_max = float(np.max(self.norms)) + self.h
        rhos, table = _radial_table_2d(self.h, rho_max, tuple(radii))
        for i, r in enumerate(radii):
            self._ball_cache[r] = np.interp(self.norms, rhos, table[i])

    def pair_ball_gamma(self, radius_scale: float = 1.0) -> np.ndarray:
        """(S, N) measures gamma(B(y_j, radius_scale * t_s))."""
        self.warm_ball_cache(radius_scale * self.t_levels)
        return np.stack([self.ball_gamma(radius_scale * t) for t in self.t_levels])


# ---------------------------------------------------------------------------
# tent functions


@dataclass
class TentFunction:
    """Real values over the active pairs of a DGrid; zero elsewhere."""

    grid: DGrid
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != (self.grid.S, self.grid.N):
            raise ValueError(f"values must have shape (S, N) = {(self.grid.S, self.grid.N)}")
        if not np.all(np.isfinite(v)):
            raise ValueError("values must be finite")
        self.values = np.where(self.grid.active, v, 0.0)

    @classmethod
    def zero(cls, grid: DGrid) -> "TentFunction":
        return cls(grid, np.zeros((grid.S, grid.N)))

    @classmethod
    def from_callable(cls, grid: DGrid, fn) -> "TentFunction":
        """fn(y, t) -> values; y is (N, n), t scalar, vectorized per level."""
        vals = np.stack([np.asarray(fn(grid.centers, t), float) for t in grid.t_levels])
        return cls(grid, vals)

    def __add__(self, other: "TentFunction") -> "TentFunction":
        self._same(other)
        return TentFunction(self.grid, self.values + other.values)

    def __sub__(self, other: "TentFunction") -> "TentFunction":
        self._same(other)
        return TentFunction(self.grid, self.values - other.values)

    def __mul__(self, c: float) -> "TentFunction":
        return TentFunction(self.grid, self.values * float(c))

    __rmul__ = __mul__

    def _same(self, other: "TentFunction"):
        if other.grid is not self.grid:
            raise ValueError("operands live on different grids")

    def restrict(self, pair_mask: np.ndarray) -> "TentFunction":
        """Zero the function outside a boolean (S, N) pair set."""
        return TentFunction(self.grid, np.where(pair_mask, self.values, 0.0))

    def max_abs(self) -> float:
        return float(np.max(np.abs(self.values))) if self.values.size else 0.0


# ---------------------------------------------------------------------------
# tents and regions


def tent_pair_mask(grid: DGrid, A: RegionMask, alpha: float) -> np.ndarray:
    """(S, N) membership of T_alpha(A) = {d(y, ~A) >= alpha t} among active pairs."""
    grid.flat(A)  # validate carrier
    dist = A.dist_to_complement().ravel()
    return (dist[None, :] >= alpha * grid.t_levels[:, None]) & grid.active


def region_pair_mask(grid: DGrid, A: RegionMask, alpha: float) -> np.ndarray:
    """(S, N) membership of R_alpha(A) = {d(y, A) < alpha t} among active pairs."""
    grid.flat(A)
    dist = A.dist_to_set().ravel()
    return (dist[None, :] < alpha * grid.t_levels[:, None]) & grid.active


def tent_contains(A: RegionMask, alpha: float, y, t: float) -> bool:
    """d(y, ~A) >= alpha t at y's cell (exterior counts as complement)."""
    if alpha <= 0 or t <= 0:
        raise ValueError("alpha and t must be positive")
    idx = A.cell_of(y)
    if idx is None:
        return False
    return bool(A.dist_to_complement()[idx] >= alpha * t)


def region_contains(A: RegionMask, alpha: float, y, t: float) -> bool:
    """d(y, A) < alpha t at y's cell."""
    if alpha <= 0 or t <= 0:
        raise ValueError("alpha and t must be positive")
    idx = A.cell_of(y)
    if idx is None:
        return A.dist_to_set_point(np.asarray(y, float)) < alpha * t
    return bool(A.dist_to_set()[idx] < alpha * t)


# ---------------------------------------------------------------------------
# the J operator


def _ball_scatter_1d(grid: DGrid, weights: np.ndarray, radius_scale: float) -> np.ndarray:
    """sum_{(j,s)} w_js 1{|x - y_j| < scale*t_s} as a field over x-cells.

    An integer interval counter tracks the exact support, so cells that
    no interval reaches are exactly zero, free of cumsum residue.
    """
    x = grid.centers[:, 0]
    out = np.zeros(grid.N + 1)
    count = np.zeros(grid.N + 1, dtype=np.int64)
    for s, t in enumerate(grid.t_levels):
        row = weights[s]
        jj = np.nonzero(row)[0]
        if len(jj) == 0:
            continue
        r = radius_scale * t
        lo = np.searchsorted(x, x[jj] - r, side="right")
        hi = np.searchsorted(x, x[jj] + r, side="left")
        np.add.at(out, lo, row[jj])
        np.add.at(out, hi, -row[jj])
        np.add.at(count, lo, 1)
        np.add.at(count, hi, -1)
    field = np.cumsum(out[:-1])
    covered = np.cumsum(count[:-1]) > 0
    return np.where(covered, field, 0.0)


def _disc_kernel(h: float, r: float) -> np.ndarray:
    K = int(np.ceil(r / h))
    ax = (np.arange(-K, K + 1) * h) ** 2
    return (ax[:, None] + ax[None, :]) < r * r


def _ball_scatter_2d(grid: DGrid, weights: np.ndarray, radius_scale: float) -> np.ndarray:
    from scipy.ndimage import binary_dilation
    from scipy.signal import fftconvolve

    out = np.zeros(grid.dims)
    for s, t in enumerate(grid.t_levels):
        row = weights[s]
        if not row.any():
            continue
        field = row.reshape(grid.dims)
        kern = _disc_kernel(grid.h, radius_scale * t)
        conv = fftconvolve(field, kern.astype(float), mode="same")
        support = binary_dilation(field != 0, structure=kern)
        out += np.where(support, conv, 0.0)
    return out.ravel()


def ball_indicator_sums(grid: DGrid, weights: np.ndarray, radius_scale: float = 1.0) -> np.ndarray:
    """Field x -> sum over pairs of weights within the scaled ball; exact
    strict center-distance semantics (fft values are masked by the exact
    support in 2-d, so zeros outside the support are exact)."""
    if grid.n == 1:
        return _ball_scatter_1d(grid, weights, radius_scale)
    return _ball_scatter_2d(grid, weights, radius_scale)


def j_power_field(
    f: TentFunction,
    cfg: NormConfig,
    indicator_scale: float = 1.0,
    normalizer_scale: float = 1.0,
) -> np.ndarray:
    """x -> ||J f(x)||_q^q with separately scalable indicator radius and
    measure normalizer radius (both default to the plain J)."""
    grid = f.grid
    ball = np.maximum(grid.pair_ball_gamma(normalizer_scale), 1e-300)
    weights = (
        np.abs(f.values) ** cfg.q
        / ball
        * grid.cell_gamma[None, :]
        * grid.log_weight
    )
    weights = np.where(grid.active, weights, 0.0)
    return ball_indicator_sums(grid, weights, indicator_scale)


def apply_J(f: TentFunction, cfg: NormConfig, alpha: float = 1.0) -> np.ndarray:
    """g(x) = (sum over active pairs of the J_alpha integrand)^(1/q).

    The indicator radius is alpha*t; the measure normalizer stays
    gamma(B(y, t)) for every aperture.
    """
    return j_power_field(f, cfg, indicator_scale=alpha) ** (1.0 / cfg.q)


def t1q_norm(f: TentFunction, cfg: NormConfig, alpha: float = 1.0) -> float:
    """T^{1,q} norm: the gamma-integral in x of the conical q-norm."""
    g = apply_J(f, cfg, alpha)
    return float(np.sum(g * f.grid.cell_gamma))


def lq_norm_D(f: TentFunction, q: float) -> float:
    """L^q(D, dgamma dt/t) norm on the lattice."""
    grid = f.grid
    total = np.sum(np.abs(f.values) ** q * grid.cell_gamma[None, :]) * grid.log_weight
    return float(total ** (1.0 / q))


# ---------------------------------------------------------------------------
# atoms


@dataclass(frozen=True)
class AtomRecord:
    """A candidate atom at scale alpha with its certification data."""

    ball: AdmissibleBall
    scale: float
    f: TentFunction
    support_ok: bool
    lq_norm: float
    bound: float

    def valid(self, tol: float = 1e-9) -> bool:
        return self.support_ok and self.lq_norm <= self.bound * (1.0 + tol)


def ball_tent_pairs(grid: DGrid, ball: AdmissibleBall) -> np.ndarray:
    """(S, N) membership of T_1(B) cap D, analytically exact at centers:
    d(y, ~B) = r - |y - c| for y in B, so the condition is r - |y-c| >= t."""
    gap = ball.radius - np.linalg.norm(grid.centers - ball.center[None, :], axis=1)
    return (gap[None, :] >= grid.t_levels[:, None]) & grid.active


def make_atom(ball: AdmissibleBall, alpha: float, profile: TentFunction, cfg: NormConfig) -> AtomRecord:
    """Truncate a profile to T_1(B) cap D and normalize to the atom bound.

    The L^q(D) norm is set exactly equal to gamma(B)^{-1/q'}.
    """
    if not is_admissible(ball, alpha):
        raise ValueError("ball is not admissible at the stated scale")
    grid = profile.grid
    support = ball_tent_pairs(grid, ball)
    vals = np.where(support, profile.values, 0.0)
    truncated = TentFunction(grid, vals)
    norm = lq_norm_D(truncated, cfg.q)
    if norm == 0.0:
        raise ValueError("profile vanishes on T_1(B) cap D")
    bound = gaussian_measure_ball(ball, tol=cfg.ball_tol).value ** (-1.0 / cfg.q_prime)
    atom_f = truncated * (bound / norm)
    return AtomRecord(
        ball=ball,
        scale=alpha,
        f=atom_f,
        support_ok=True,
        lq_norm=lq_norm_D(atom_f, cfg.q),
        bound=bound,
    )


def verify_atom_norm(a: AtomRecord, cfg: NormConfig) -> float:
    """T^{1,q} norm of the atom; expected <= 1 up to lattice tolerance."""
    return t1q_norm(a.f, cfg)


def holder_chain_report(a: AtomRecord, cfg: NormConfig) -> dict:
    """Evaluate the atom-norm proof chain on the lattice.

    Steps: g = Jf vanishes outside B; int_B g dgamma <= (int_B g^q)^{1/q}
    gamma(B)^{1/q'} (Hoelder); the Fubini step replaces the inner lattice
    ball mass by the true ball measure, with the max ratio reported.
    """
    grid = a.f.grid
    q = cfg.q
    gq = j_power_field(a.f, cfg)
    g = gq ** (1.0 / q)
    in_ball = np.linalg.norm(grid.centers - a.ball.center[None, :], axis=1) < a.ball.radius
    outside_leak = float(np.max(np.abs(g[~in_ball]))) if (~in_ball).any() else 0.0
    gamma_ball = gaussian_measure_ball(a.ball, tol=cfg.ball_tol).value
    lhs = float(np.sum(g * grid.cell_gamma))
    mid = float(np.sum(gq * grid.cell_gamma)) ** (1.0 / q) * gamma_ball ** (1.0 / cfg.q_prime)
    # lattice-vs-true mass of each B(y,t) carrying atom values (Fubini step)
    ratios = []
    support = np.abs(a.f.values) > 0
    ball_true = grid.pair_ball_gamma(1.0)
    cum = np.concatenate([[0.0], np.cumsum(grid.cell_gamma)])
    for s in range(grid.S):
        jj = np.nonzero(support[s])[0]
        if len(jj) == 0:
            continue
        r = grid.t_levels[s]
        if grid.n == 1:
            x = grid.centers[:, 0]
            lo = np.searchsorted(x, x[jj] - r, side="right")
            hi = np.searchsorted(x, x[jj] + r, side="left")
            mass = cum[hi] - cum[lo]
        else:
            from scipy.signal import fftconvolve

            kern = _disc_kernel(grid.h, r).astype(float)
            field = fftconvolve(grid.cell_gamma.reshape(grid.dims), kern, mode="same").ravel()
            mass = field[jj]
        ratios.append(mass / ball_true[s][jj])
    all_ratios = np.concatenate(ratios) if ratios else np.array([1.0])
    return {
        "t1q": lhs,
        "holder_rhs": mid,
        "holder_ok": lhs <= mid + 1e-9,
        "support_leak": outside_leak,
        "lattice_ball_ratio_max": float(np.max(all_ratios)),
        "lattice_ball_ratio_min": float(np.min(all_ratios)),
    }


# ---------------------------------------------------------------------------
# density sets and the maximal function


def _radius_ladder(h: float, n: int, count: int = 32) -> np.ndarray:
    """Global geometric radii from h/4 to 3/2; per point use r <= 1.5 m(x)."""
    lo = h / 4.0
    hi = 1.5
    return lo * (hi / lo) ** (np.arange(count) / (count - 1))


def _two_sided_prefix(w: np.ndarray) -> tuple:
    """Left and right prefix sums of w, each of length len(w) + 1.

    cum_l[k] holds sum(w[:k]) and cum_r[k] holds sum(w[k:]).  Range sums
    in the far tail must difference the prefix anchored on that tail:
    the other anchor sits near the total mass and one ulp of it already
    swamps the tail values.
    """
    cum_l = np.concatenate([[0.0], np.cumsum(w)])
    cum_r = np.concatenate([np.cumsum(w[::-1])[::-1], [0.0]])
    return cum_l, cum_r


class _SpatialCarrier:
    """Window-level cache of centers, weights and gamma prefix sums."""

    _instances: dict = {}

    def __init__(self, window: Box, h: float):
        carrier = RegionMask.empty(window, h)
        self.window = window
        self.h = h
        self.n = window.n
        self.dims = carrier.dims
        axes = [carrier.axis_centers(i) for i in range(self.n)]
        self.axis_centers = axes
        mesh = np.meshgrid(*axes, indexing="ij")
        self.centers = np.stack([g.ravel() for g in mesh], axis=1)
        self.norms = np.linalg.norm(self.centers, axis=1)
        self.m = m_from_norms(self.norms)
        axis_w = []
        for i in range(self.n):
            edges = window.lower[i] + np.arange(self.dims[i] + 1) * h
            axis_w.append(interval_gamma_1d(edges[:-1], edges[1:]))
        g = axis_w[0]
        for w in axis_w[1:]:
            g = np.multiply.outer(g, w)
        self.cell_gamma = g.ravel()
        self._ball_cache: dict = {}
        self._clipped_cache: dict = {}

    @classmethod
    def of(cls, window: Box, h: float) -> "_SpatialCarrier":
        key = (tuple(window.lower), tuple(window.upper), h)
        if key not in cls._instances:
            cls._instances[key] = cls(window, h)
        return cls._instances[key]

    def ball_gamma(self, radius: float) -> np.ndarray:
        key = float(radius)
        if key not in self._ball_cache:
            if self.n == 1:
                self._ball_cache[key] = ball_measures_1d(self.centers[:, 0], key)
            else:
                rho_max = float(np.max(self.norms)) + self.h
                rhos, table = _radial_table_2d(self.h, rho_max, (key,))
                self._ball_cache[key] = np.interp(self.norms, rhos, table[0])
        return self._ball_cache[key]

    def clipped_ball_gamma(self, radius: float) -> np.ndarray:
        """gamma(B(x, radius) cap window) per cell center.

        The density and averaging machinery compares masses inside the
        truncated world, so its denominators must clip at the window too;
        the true ball measure overshoots near the edge, where the sharp
        gamma decay puts a large share of a ball outside.  1-d is exact;
        2-d matches the whole-cell sums used by the numerators.
        """
        key = float(radius)
        cache = self._clipped_cache
        if key not in cache:
            if self.n == 1:
                x = self.centers[:, 0]
                lo = np.maximum(x - radius, self.window.lower[0])
                hi = np.minimum(x + radius, self.window.upper[0])
                cache[key] = interval_gamma_1d(lo, hi)
            else:
                cache[key] = self.ball_mass_of(self.cell_gamma, radius)
        return cache[key]

    def ball_mass_of(self, field: np.ndarray, radius: float) -> np.ndarray:
        """x -> sum of field over cells with center in B(x, radius).

        In 1-d the two boundary cells are clipped exactly with ndtr, so a
        gamma-weighted field integrates exactly; 2-d sums whole cells.
        """
        if self.n == 1:
            x = self.centers[:, 0]
            lo = np.searchsorted(x, x - radius, side="right")
            hi = np.searchsorted(x, x + radius, side="left")
            cum_l, cum_r = _two_sided_prefix(field)
            return np.where(x >= 0.0, cum_r[lo] - cum_r[hi], cum_l[hi] - cum_l[lo])
        from scipy.ndimage import binary_dilation
        from scipy.signal import fftconvolve

        kern = _disc_kernel(self.h, radius)
        conv = fftconvolve(field.reshape(self.dims), kern.astype(float), mode="same")
        support = binary_dilation(field.reshape(self.dims) != 0, structure=kern)
        return np.where(support, conv, 0.0).ravel()

    def exact_interval_weighted(self, flat_values: np.ndarray, radius: float) -> np.ndarray:
        """1-d only: per center x, the exact integral of the cell-constant
        function ``flat_values`` over B(x, r) against gamma; the two
        boundary cells are clipped with ndtr."""
        x = self.centers[:, 0]
        lower_edges = self.window.lower[0] + np.arange(self.dims[0]) * self.h
        upper_edges = lower_edges + self.h
        weighted = flat_values * self.cell_gamma
        cum_l, cum_r = _two_sided_prefix(weighted)
        a = x - radius
        b = x + radius
        ia = np.clip(np.searchsorted(upper_edges, a, side="left"), 0, self.dims[0] - 1)
        ib = np.clip(np.searchsorted(lower_edges, b, side="right") - 1, 0, self.dims[0] - 1)
        top = np.maximum(ib, ia)
        inner = np.where(
            x >= 0.0, cum_r[ia + 1] - cum_r[top], cum_l[top] - cum_l[ia + 1]
        )
        inner = np.maximum(inner, 0.0)
        part_a = flat_values[ia] * interval_gamma_1d(
            np.maximum(lower_edges[ia], a), np.minimum(upper_edges[ia], b)
        )
        part_b = np.where(
            ib > ia,
            flat_values[ib]
            * interval_gamma_1d(np.maximum(lower_edges[ib], a), np.minimum(upper_edges[ib], b)),
            0.0,
        )
        return inner + part_a + part_b


def density_set(F: RegionMask, beta: float, radii_per_point: int = 32) -> RegionMask:
    """Points of admissible beta-density of F, on the lattice.

    Tests gamma(F cap B(x,r)) >= beta gamma(B(x,r) cap window) for r on
    the global geometric ladder restricted to (0, (3/2) m(x)].  Both
    sides clip at the window.  The smallest radius h/4 stays inside x's
    own cell, which forces the result into F's closed cell set.
    """
    if not 0.0 < beta < 1.0:
        raise ValueError("beta must lie in (0, 1)")
    sc = _SpatialCarrier.of(F.window, F.h)
    flat = F.cells.ravel()
    if not flat.any():
        return F.with_cells(np.zeros(F.dims, bool))
    ladder = _radius_ladder(F.h, F.n, radii_per_point)
    ok = flat.copy()  # radius h/4: ball inside own cell, ratio is 1 or 0
    for r in ladder[1:]:
        applies = r <= 1.5 * sc.m
        if not applies.any():
            continue
        denom = sc.clipped_ball_gamma(r)
        if F.n == 1:
            num = sc.exact_interval_weighted(flat.astype(float), r)
        else:
            num = sc.ball_mass_of(np.where(flat, sc.cell_gamma, 0.0), r)
        ok &= np.where(applies, num >= beta * denom, True)
    return F.with_cells(ok.reshape(F.dims))


def maximal_function(values: np.ndarray, carrier, x=None):
    """Admissible maximal function over balls of scale 3/2.

    sup over ladder radii r <= 1.5 m of the gamma-average of ``values``
    on B(center, r) cap window (mass and measure both clip there).
    ``carrier`` is a RegionMask or DGrid fixing the lattice; returns the
    field, or one value when x is given.
    """
    window, h = carrier.window, carrier.h
    sc = _SpatialCarrier.of(window, h)
    vals = np.asarray(values, float).ravel()
    if vals.shape != sc.cell_gamma.shape:
        raise ValueError("values must cover every lattice cell")
    if np.any(vals < 0):
        raise ValueError("maximal_function expects nonnegative values")
    field = np.zeros(sc.centers.shape[0])
    ladder = _radius_ladder(h, sc.n)
    for r in ladder:
        applies = r <= 1.5 * sc.m
        if not applies.any():
            continue
        if sc.n == 1:
            num = sc.exact_interval_weighted(vals, r)
        else:
            num = sc.ball_mass_of(vals * sc.cell_gamma, r)
        avg = num / sc.clipped_ball_gamma(r)
        field = np.where(applies, np.maximum(field, avg), field)
    if x is None:
        return field
    mask = RegionMask.empty(window, h)
    idx = mask.cell_of(x)
    if idx is None:
        raise ValueError("point outside the lattice window")
    return float(field[int(np.ravel_multi_index(idx, sc.dims))])


def session_eta_bar(grid: DGrid, eta: float, sample_cap: int = 200_000) -> dict:
    """Pick eta_bar for the session from measured ball-measure ratios.

    Over active pairs, r_min = min gamma(B(y, eta t)) / gamma(B(y, t)).
    The averaging argument's intermediate inequality
    (eta_bar - 1) gamma(B) + gamma(B(y, eta t)) >= c gamma(B) then holds
    with c = r_min / 2 for eta_bar = 1 - r_min / 2.
    """
    if not 0.5 < eta < 1.0:
        raise ValueError("eta must lie in (1/2, 1)")
    big = grid.pair_ball_gamma(1.0)
    small = grid.pair_ball_gamma(eta)
    ratios = np.where(grid.active, small / big, np.inf)
    flat = ratios.ravel()
    if flat.size > sample_cap:
        stride = int(np.ceil(flat.size / sample_cap))
        flat = flat[::stride]
    r_min = float(np.min(flat))
    c = r_min / 2.0
    return {"eta": eta, "eta_bar": 1.0 - c, "c": c, "ratio_min": r_min}


def ball_density_ratios(F: RegionMask, grid: DGrid, pairs: np.ndarray) -> np.ndarray:
    """gamma(F cap B(y_j, t_s)) / gamma(B(y_j, t_s) cap window) per (s, j).

    Exact interval measures in 1-d; whole-cell sums in 2-d.
    """
    sc = _SpatialCarrier.of(F.window, F.h)
    flat = F.cells.ravel().astype(float)
    pairs = np.asarray(pairs, dtype=int)
    out = np.empty(len(pairs))
    for s in np.unique(pairs[:, 0]):
        rows = np.nonzero(pairs[:, 0] == s)[0]
        r = grid.t_levels[s]
        if grid.n == 1:
            num = sc.exact_interval_weighted(flat, r)
        else:
            num = sc.ball_mass_of(flat * sc.cell_gamma, r)
        jj = pairs[rows, 1]
        out[rows] = num[jj] / sc.clipped_ball_gamma(r)[jj]
    return out


def verify_density_averaging(
    F: RegionMask,
    H: TentFunction,
    eta: float,
    eta_bar: float,
    cfg: NormConfig,
) -> dict:
    """Evaluate both sides of the averaging estimate over the density set.

    lhs integrates H over R_{1-eta}(F^{[eta_bar]}) cap D; rhs integrates
    the ball averages of H over F.  Returns both with their ratio and the
    min ball-density ratio c' over the pairs entering the lhs.
    """
    grid = H.grid
    if np.any(H.values < 0):
        raise ValueError("H must be nonnegative")
    dens = density_set(F, eta_bar)
    pairs = region_pair_mask(grid, dens, 1.0 - eta)
    lhs = float(np.sum(np.where(pairs, H.values, 0.0) * grid.cell_gamma[None, :]) * grid.log_weight)
    ball = np.maximum(grid.pair_ball_gamma(1.0), 1e-300)
    weights = np.where(grid.active, H.values / ball * grid.cell_gamma[None, :] * grid.log_weight, 0.0)
    avg_field = ball_indicator_sums(grid, weights, 1.0)
    rhs = float(np.sum(avg_field * np.where(grid.flat(F), grid.cell_gamma, 0.0)))
    ratio = lhs / rhs if rhs > 0 else 0.0
    if rhs == 0.0 and lhs > 0.0:
        raise RuntimeError("rhs vanished while lhs did not; discretization fault")
    # c' at pairs inside the lhs region that carry H mass
    s_idx, j_idx = np.nonzero(pairs & (H.values > 0))
    c_prime = None
    if len(s_idx):
        take = slice(None) if len(s_idx) <= 512 else slice(0, None, int(np.ceil(len(s_idx) / 512)))
        sel = np.stack([s_idx[take], j_idx[take]], axis=1)
        c_prime = float(np.min(ball_density_ratios(F, grid, sel)))
    return {
        "lhs": lhs,
        "rhs": rhs,
        "ratio": ratio,
        "c_prime": c_prime,
        "eta": eta,
        "eta_bar": eta_bar,
    }
