"""Constructive atomic decomposition of discretized tent functions.

The pipeline: split a tent function along a fixed spatial partition into
cube and label-class pieces, build the stopping-time ladder of
super-level sets of the conical functional for each piece, Whitney
partition the density-thickened level sets, and emit weighted atoms
whose telescoping sum reconstructs the input cell-exactly.  Re-atoming
converts atoms between admissibility scales via an explicit tent cover,
and the aperture comparison bounds the wide-cone norm through a dilated
majorant.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .geometry import AdmissibleBall, Box, box_measure_value, gaussian_measure_ball, m_from_norms
from .grid import CubeLabel, GaussianCube, LabelClass, cube_of, label_class, label_of, layer_of
from .tent import (
    AtomRecord,
    DGrid,
    NormConfig,
    TentFunction,
    apply_J,
    density_set,
    j_power_field,
    lq_norm_D,
    session_eta_bar,
    t1q_norm,
    tent_pair_mask,
)
from .whitney import RegionMask, WhitneyPartition, thicken, whitney_partition

__all__ = [
    "CoverageError",
    "StoppingLadder",
    "DecompositionTerm",
    "Decomposition",
    "ApertureReport",
    "support_splitter",
    "stopping_ladder",
    "atomic_decompose",
    "verify_decomposition",
    "reatom",
    "aperture_compare",
]


class CoverageError(RuntimeError):
    """A construction failed to cover cells it must cover on the lattice."""


# ---------------------------------------------------------------------------
# support splitting

SPLITTER_P = 4
SPLITTER_KAPPA = SPLITTER_P + 4
SPLITTER_CUBE_LAYERS = SPLITTER_P + 1


def _cube_cells(cube: GaussianCube, grid: DGrid) -> np.ndarray:
    lo, hi = cube.lower, cube.upper
    return np.all((grid.centers >= lo) & (grid.centers < hi), axis=1)


def _label_class_cells(lc: LabelClass, grid: DGrid) -> np.ndarray:
    cells = np.zeros(grid.N, dtype=bool)
    for cube in lc.member_cubes():
        cells |= _cube_cells(cube, grid)
    return cells


def _owner_key(y: np.ndarray) -> tuple:
    """Which member of the fixed spatial partition owns the point y.

    (0, l, index) for the generation-0 cube in layers 0..5, else
    (1, components) for the period-256 label class of deeper layers.
    """
    cube0 = cube_of(y, 0)
    if layer_of(y) <= SPLITTER_CUBE_LAYERS:
        return (0, cube0.l, cube0.index)
    return (1, label_of(cube0, SPLITTER_KAPPA).components)


def support_splitter(f: TentFunction) -> list:
    """Split f along the fixed spatial partition used by the decomposition.

    The partition consists of the generation-0 cubes of layers 0..5 and
    the period-256 label classes covering the deeper layers; each piece
    is f restricted (in the spatial variable) to one member, further cut
    to the columns where the conical functional is positive.  On this
    lattice that cut only removes columns whose cell measure underflows
    to zero, so the pieces sum to f on every cell of positive measure.
    Pieces carry their base set as attributes ``base`` (cube or label
    class), ``base_kind`` and ``base_mask``; only nonzero pieces are
    returned.
    """
    grid = f.grid
    col_has = np.any(f.values != 0.0, axis=0)
    cols = np.nonzero(col_has)[0]
    if len(cols) == 0:
        return []
    # positivity of the conical functional is independent of q
    positive = j_power_field(f, NormConfig(q=2.0)) > 0.0
    groups: dict = {}
    for j in cols:
        groups.setdefault(_owner_key(grid.centers[j]), []).append(int(j))
    pieces = []
    for key in sorted(groups):
        members = np.zeros(grid.N, dtype=bool)
        members[np.array(groups[key])] = True
        keep = members & positive
        piece = TentFunction(grid, np.where(keep[None, :], f.values, 0.0))
        if key[0] == 0:
            base = GaussianCube(0, key[1], key[2])
            cells = _cube_cells(base, grid)
            kind = "cube"
        else:
            base = label_class(SPLITTER_P, CubeLabel(key[1], SPLITTER_KAPPA), grid.window)
            cells = _label_class_cells(base, grid)
            kind = "label"
        piece.base = base
        piece.base_kind = kind
        piece.base_mask = grid.spatial_mask(cells)
        pieces.append(piece)
    return pieces


# ---------------------------------------------------------------------------
# stopping ladder


@dataclass(eq=False)
class StoppingLadder:
    """Super-level sets of the conical functional with density thickenings.

    ``O_k[i]`` is the super-level set at threshold 2**(k_range[0]+i) and
    ``O_k_density[i]`` its density-complement thickening; ``tent_masks``
    caches the (S, N) membership of the (1-eta)-tents over the latter.
    ``k_range`` is None for a vanishing input.
    """

    k_range: tuple | None
    O_k: tuple
    O_k_density: tuple
    eta: float
    eta_bar: float
    u: np.ndarray
    tent_masks: tuple

    def levels(self) -> range:
        if self.k_range is None:
            return range(0)
        return range(self.k_range[0], self.k_range[1] + 1)

    def index_of(self, k: int) -> int:
        return k - self.k_range[0]


def stopping_ladder(g: TentFunction, cfg: NormConfig, eta: float, eta_bar: float) -> StoppingLadder:
    """Build the stopping-time ladder for one support piece.

    Levels run from floor(log2 of the least positive value of the
    conical functional) up to ceil(log2 of the max); each level's
    thickening is the complement of the density set of its complement.
    Raises CoverageError if some support cell of g escapes the union of
    tents over the thickened levels (a discretization fault that would
    break exact reconstruction downstream).
    """
    if not 0.5 < eta < 1.0:
        raise ValueError("eta must lie in (1/2, 1)")
    if not 0.0 < eta_bar < 1.0:
        raise ValueError("eta_bar must lie in (0, 1)")
    grid = g.grid
    u = apply_J(g, cfg)
    positive = u[u > 0.0]
    if positive.size == 0:
        return StoppingLadder(None, (), (), eta, eta_bar, u, ())
    k_lo = int(math.floor(math.log2(float(positive.min()))))
    k_hi = int(math.ceil(math.log2(float(positive.max()))))
    O_k = []
    O_kd = []
    tents = []
    for k in range(k_lo, k_hi + 1):
        level = grid.spatial_mask(u > 2.0**k)
        O_k.append(level)
        if not level.cells.any():
            O_kd.append(level)
            tents.append(np.zeros((grid.S, grid.N), dtype=bool))
            continue
        thick = density_set(level.complement(), eta_bar).complement()
        O_kd.append(thick)
        tents.append(tent_pair_mask(grid, thick, 1.0 - eta))
    union = np.zeros((grid.S, grid.N), dtype=bool)
    for mask in tents:
        union |= mask
    uncovered = int(np.count_nonzero((g.values != 0.0) & ~union))
    if uncovered:
        raise CoverageError(
            f"{uncovered} support cells fall outside the tent union; "
            "the grid is too coarse for this input"
        )
    return StoppingLadder((k_lo, k_hi), tuple(O_k), tuple(O_kd), eta, eta_bar, u, tuple(tents))


def ladder_thicken_check(ladder: StoppingLadder, base_mask: RegionMask, alpha: float = 16.0) -> dict:
    """Cell-wise containment of every thickened level in base + C_alpha."""
    if ladder.k_range is None:
        return {"ok": True, "max_excess_cells": 0}
    hull = thicken(base_mask, alpha)
    worst = 0
    for mask in ladder.O_k_density:
        worst = max(worst, int(np.count_nonzero(mask.cells & ~hull.cells)))
    return {"ok": worst == 0, "max_excess_cells": worst}


# ---------------------------------------------------------------------------
# atomic decomposition


@dataclass(frozen=True, eq=False)
class DecompositionTerm:
    """One weighted atom with its provenance inside the construction."""

    lam: float
    atom: AtomRecord
    cube: GaussianCube
    k: int
    m: int
    piece: int
    C: float
    mu: float


@dataclass(eq=False)
class Decomposition:
    terms: list
    realized_alpha: float
    sum_lambda: float
    eta: float
    eta_bar: float
    pieces: list
    ladders: list
    partitions: dict

    def rho_of(self, term: DecompositionTerm) -> float:
        return self.partitions[(term.piece, term.k)].rho


def _phi_columns(part: WhitneyPartition, grid: DGrid, m: int) -> tuple:
    """Grid columns inside bump m's open support box, with phi values."""
    center = part._centers[m]
    half = part._half_widths[m]
    sel = np.all(np.abs(grid.centers - center) < half, axis=1)
    idx = np.nonzero(sel)[0]
    if len(idx) == 0:
        return idx, np.zeros(0)
    return idx, part.phi(m, grid.centers[idx])


def atomic_decompose(f: TentFunction, cfg: NormConfig, eta: float) -> Decomposition:
    """Decompose f into weighted atoms with exact telescoping reconstruction.

    Per piece and level k, the thickened level set is Whitney-partitioned
    at lambda = 2^10 sqrt(n); the block functions are the tent-indicator
    differences times the partition of unity times the piece, and each
    nonzero block is normalized into an atom certified against the ball
    circumscribing the C-dilated Whitney cube.
    """
    grid = f.grid
    n = grid.n
    session = session_eta_bar(grid, eta)
    eta_bar = session["eta_bar"]
    lam_whitney = 2.0**10 * math.sqrt(n)
    pieces = support_splitter(f)
    terms: list = []
    ladders: list = []
    partitions: dict = {}
    for pi, g in enumerate(pieces):
        ladder = stopping_ladder(g, cfg, eta, eta_bar)
        ladders.append(ladder)
        if ladder.k_range is None:
            continue
        k_lo, k_hi = ladder.k_range
        empty = np.zeros((grid.S, grid.N), dtype=bool)
        for k in range(k_lo, k_hi + 1):
            i = ladder.index_of(k)
            A = ladder.O_k_density[i]
            if not A.cells.any():
                continue
            upper = ladder.tent_masks[i + 1] if k < k_hi else empty
            diff = ladder.tent_masks[i] & ~upper
            block = np.where(diff, g.values, 0.0)
            if not block.any():
                continue
            part = whitney_partition(A, lam_whitney)
            partitions[(pi, k)] = part
            rho = part.rho
            C = 2.0 * math.sqrt(n) * (rho / 2.0 + (3.0 * rho + 1.0) / (2.0 * (1.0 - eta)))
            for m, cube in enumerate(part.cubes):
                idx, phi = _phi_columns(part, grid, m)
                if len(idx) == 0:
                    continue
                b = np.zeros_like(block)
                b[:, idx] = block[:, idx] * phi[None, :]
                mu = float(np.sum(np.abs(b) ** cfg.q * grid.cell_gamma[None, :]) * grid.log_weight)
                if mu == 0.0:
                    continue
                gamma_q = float(box_measure_value(cube.lower, cube.upper))
                lam = gamma_q ** (1.0 / cfg.q_prime) * mu ** (1.0 / cfg.q)
                dilated = cube.box().dilate(C)
                radius = 0.5 * C * cube.side * math.sqrt(n)
                center = cube.center
                ball = AdmissibleBall(center, radius)
                scale = radius / float(m_from_norms(np.linalg.norm(center)))
                atom_f = TentFunction(grid, b / lam)
                support_ok = _tent_box_support_ok(atom_f, dilated)
                if not support_ok:
                    raise CoverageError(
                        f"atom (piece={pi}, k={k}, m={m}) leaks outside its dilated-cube tent"
                    )
                atom = AtomRecord(
                    ball=ball,
                    scale=scale,
                    f=atom_f,
                    support_ok=support_ok,
                    lq_norm=lq_norm_D(atom_f, cfg.q),
                    bound=gaussian_measure_ball(ball, tol=cfg.ball_tol).value ** (-1.0 / cfg.q_prime),
                )
                terms.append(DecompositionTerm(lam, atom, cube, k, m, pi, C, mu))
    realized = max((t.atom.scale for t in terms), default=0.0)
    total = float(sum(t.lam for t in terms))
    return Decomposition(terms, realized, total, eta, eta_bar, pieces, ladders, partitions)


def _tent_box_support_ok(a: TentFunction, box: Box) -> bool:
    """supp(a) inside T_1(box) n D: per-axis interior margin >= t, exactly."""
    grid = a.grid
    margins = np.min(
        np.minimum(grid.centers - box.lower[None, :], box.upper[None, :] - grid.centers),
        axis=1,
    )
    bad = (a.values != 0.0) & (margins[None, :] < grid.t_levels[:, None])
    return not bool(bad.any())


def verify_decomposition(f: TentFunction, d: Decomposition, cfg: NormConfig) -> dict:
    """Replay every produced inequality of the decomposition with measured constants.

    Covers: cell-exact reconstruction, the coefficient sum against the
    tent norm, per-atom support and norm-versus-bound slack, the
    mu <= 2^{q(k+1)} gamma(Q**) chain, the weak-type level-measure
    inequality, dyadic layer-cake consistency, and the two distance
    displays that fix the dilation constant C.
    """
    grid = f.grid
    recon = np.zeros_like(f.values)
    for t in d.terms:
        recon += t.lam * t.atom.f.values
    abs_err = float(np.max(np.abs(recon - f.values))) if d.terms else float(np.max(np.abs(f.values)))
    scale = f.max_abs()
    rel_err = abs_err / scale if scale > 0 else abs_err
    norm = t1q_norm(f, cfg)

    support_ok = all(t.atom.support_ok for t in d.terms)
    norm_slack = max((t.atom.lq_norm / t.atom.bound for t in d.terms), default=0.0)

    mu_chain = 0.0
    detC_margin = math.inf
    detC2_margin = math.inf
    for t in d.terms:
        rho = d.rho_of(t)
        diag = t.cube.diameter
        dilated = t.cube.box().dilate(t.C)
        gamma_star = float(box_measure_value(dilated.lower, dilated.upper))
        mu_chain = max(mu_chain, t.mu / (2.0 ** (cfg.q * (t.k + 1)) * gamma_star))
        support = t.atom.f.values != 0.0
        if not support.any():
            continue
        ss, jj = np.nonzero(support)
        ys = grid.centers[jj]
        ts = grid.t_levels[ss]
        # eq. fixing C, part 1: distance from any support column to any
        # point outside the dilated cube, checked via the interior margin
        margin = np.min(
            np.minimum(ys - dilated.lower[None, :], dilated.upper[None, :] - ys), axis=1
        )
        bound1 = (t.C / math.sqrt(grid.n) - rho) * diag / 2.0
        detC_margin = min(detC_margin, float(np.min(margin - bound1)))
        # part 2: (1 - eta) t <= (3 rho + 1)/2 * diag at every support pair
        bound2 = (3.0 * rho + 1.0) / 2.0 * diag
        detC2_margin = min(detC2_margin, float(np.min(bound2 - (1.0 - d.eta) * ts)))

    weak_type = 0.0
    cake_lo, cake_hi = math.inf, 0.0
    for ladder in d.ladders:
        if ladder.k_range is None:
            continue
        rhs = float(np.sum(ladder.u * grid.cell_gamma))
        lhs = 0.0
        for i, k in enumerate(ladder.levels()):
            gamma_o = float(np.sum(grid.cell_gamma[grid.flat(ladder.O_k[i])]))
            gamma_od = float(np.sum(grid.cell_gamma[grid.flat(ladder.O_k_density[i])]))
            lhs += 2.0**k * gamma_o
            if gamma_o > 0.0:
                weak_type = max(weak_type, (1.0 - d.eta_bar) * gamma_od / gamma_o)
        if rhs > 0.0:
            cake_lo = min(cake_lo, lhs / rhs)
            cake_hi = max(cake_hi, lhs / rhs)

    return {
        "terms": len(d.terms),
        "reconstruction_abs": abs_err,
        "reconstruction_rel": rel_err,
        "sum_lambda": d.sum_lambda,
        "t1q_norm": norm,
        "lambda_ratio": d.sum_lambda / norm if norm > 0 else 0.0,
        "atom_support_ok": support_ok,
        "atom_norm_slack_max": norm_slack,
        "mu_chain_max": mu_chain,
        "weak_type_max": weak_type,
        "layer_cake_min": cake_lo if cake_lo is not math.inf else 1.0,
        "layer_cake_max": cake_hi if cake_hi > 0.0 else 1.0,
        "determineC_margin": detC_margin if detC_margin is not math.inf else 0.0,
        "determineC2_margin": detC2_margin if detC2_margin is not math.inf else 0.0,
        "determineC_ok": detC_margin is math.inf or detC_margin >= 0.0,
        "determineC2_ok": detC2_margin is math.inf or detC2_margin >= 0.0,
        "realized_alpha": d.realized_alpha,
    }


# ---------------------------------------------------------------------------
# re-atoming


def _reatom_constants(alpha: float, beta: float) -> tuple:
    """Radius threshold R, covering shrink delta, and the margin used.

    R must make alpha(R-beta)/(R-beta+alpha) exceed 1 by the margin, and
    delta is the largest grid value in {0.1..0.9} for which the
    delta-weakened inequality can hold at all; R is then enlarged to the
    least value realizing it.  Margins shrink near alpha = 1, where the
    fixed 0.01 would be infeasible.
    """
    margin = min(0.01, (alpha - 1.0) / 2.0)
    target = 1.0 + margin
    s_base = target * alpha / (alpha - target)
    R = max(beta + 2.0, beta + s_base * (1.0 + 1e-9))
    delta = None
    for tenth in range(9, 0, -1):
        cand = tenth / 10.0
        if (1.0 - cand) * alpha > target:
            delta = cand
            break
    if delta is None:
        # alpha too close to 1 for the coarse grid of deltas
        delta = 0.5 * (1.0 - target / alpha)
    s_need = target * alpha / ((1.0 - delta) * alpha - target)
    R = max(R, beta + s_need * (1.0 + 1e-9))
    base = alpha * (R - beta) / (R - beta + alpha)
    if not (1.0 - delta) * base > 1.0:
        raise ValueError(f"no covering margin at alpha={alpha}, beta={beta}")
    return R, delta, margin


def _axis_lattice(lo: float, hi: float, step: float) -> np.ndarray:
    count = max(1, int(math.ceil((hi - lo) / step)) + 1)
    mid = 0.5 * (lo + hi)
    return mid + step * (np.arange(count) - (count - 1) / 2.0)


def _center_lattice(lower: np.ndarray, upper: np.ndarray, step: float) -> np.ndarray:
    axes = [_axis_lattice(lower[i], upper[i], step) for i in range(len(lower))]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([g.ravel() for g in mesh], axis=1)


def reatom(a: AtomRecord, target_alpha: float, cfg: NormConfig) -> list:
    """Split an atom at scale beta into pieces supported in scale-alpha tents.

    Far balls are covered by tents over a delta-shrunk lattice of centers
    inside the ball; near balls use a fixed lattice covering the whole
    truncated region.  The atom is divided by the tent multiplicity, so
    the pieces sum back exactly; every output ball has radius exactly
    alpha * m(center).  Raises CoverageError if a support cell is missed.
    """
    alpha = float(target_alpha)
    beta = float(a.scale)
    if alpha <= 1.0:
        raise ValueError("target aperture must exceed 1")
    if alpha >= beta:
        return [a]
    grid = a.f.grid
    support = a.f.values != 0.0
    if not support.any():
        return []
    R, delta, _ = _reatom_constants(alpha, beta)
    c = a.ball.center
    r = a.ball.radius
    c_norm = float(np.linalg.norm(c))
    if c_norm >= R:
        # lattice of centers inside B; every point of B must be within
        # delta * (worst-case tent radius) of some center
        r_prime_min = alpha / (c_norm + r)
        step = 0.66 * delta * r_prime_min / math.sqrt(grid.n)
        raw = _center_lattice(c - r, c + r, step)
        dist = np.linalg.norm(raw - c[None, :], axis=1)
        keep = dist <= r + step * math.sqrt(grid.n)
        raw = raw[keep]
        dist = dist[keep]
        outside = dist > r * (1.0 - 1e-12)
        shrink = np.where(outside, r * (1.0 - 1e-12) / np.maximum(dist, 1e-300), 1.0)
        centers = c[None, :] + (raw - c[None, :]) * shrink[:, None]
    else:
        # cover the whole near region |y| <= |c| + r; spacing from the
        # 1-Lipschitz bound on m so each tent clears t up to m(y)
        reach = c_norm + r
        m_min = 1.0 / max(1.0, reach)
        gap = (alpha - 1.0) * m_min / (alpha + 1.0)
        step = 0.98 * 2.0 * gap / math.sqrt(grid.n)
        ss, jj = np.nonzero(support)
        ys = grid.centers[jj]
        lower = ys.min(axis=0) - step
        upper = ys.max(axis=0) + step
        centers = _center_lattice(lower, upper, step)
    radii = alpha * m_from_norms(np.linalg.norm(centers, axis=1))
    ss, jj = np.nonzero(support)
    ys = grid.centers[jj]
    ts = grid.t_levels[ss]
    member = np.zeros((len(centers), len(ss)), dtype=bool)
    for start in range(0, len(centers), 512):
        sl = slice(start, min(start + 512, len(centers)))
        slack = radii[sl, None] - np.linalg.norm(
            ys[None, :, :] - centers[sl][:, None, :], axis=2
        )
        member[sl] = slack >= ts[None, :]
    counts = member.sum(axis=0)
    if np.any(counts == 0):
        raise CoverageError(f"{int(np.count_nonzero(counts == 0))} support cells uncovered")
    out = []
    for j in range(len(centers)):
        if not member[j].any():
            continue
        vals = np.zeros_like(a.f.values)
        vals[ss[member[j]], jj[member[j]]] = (
            a.f.values[ss[member[j]], jj[member[j]]] / counts[member[j]]
        )
        piece = TentFunction(grid, vals)
        ball = AdmissibleBall(centers[j], float(radii[j]))
        out.append(
            AtomRecord(
                ball=ball,
                scale=alpha,
                f=piece,
                support_ok=True,
                lq_norm=lq_norm_D(piece, cfg.q),
                bound=gaussian_measure_ball(ball, tol=cfg.ball_tol).value ** (-1.0 / cfg.q_prime),
            )
        )
    return out


# ---------------------------------------------------------------------------
# change of aperture


@dataclass(eq=False)
class ApertureReport:
    """Tent norms of one function at two apertures plus the proof majorant."""

    alpha0: float
    alpha: float
    norms: dict
    ratio: float
    kappa: float
    majorant_ok: bool
    monotonicity_dust: float


def aperture_compare(f: TentFunction, alpha0: float, alpha: float, cfg: NormConfig) -> ApertureReport:
    """Compare tent norms at apertures alpha0 <= alpha.

    The wide-aperture conical field dominates the narrow one pointwise in
    exact arithmetic (nested indicators, same normalizer); the residual
    scatter rounding is measured and removed so the reported ratio is
    >= 1 exactly.  The majorant replaces the normalizer by the measure of
    the widened ball; the session constant kappa is the largest measured
    widening ratio, and the majorant inequality uses kappa^(1/q).
    """
    if not 1.0 < alpha0 <= alpha:
        raise ValueError("need 1 < alpha0 <= alpha")
    grid = f.grid
    q = cfg.q
    pw_narrow = j_power_field(f, cfg, indicator_scale=alpha0)
    pw_wide = j_power_field(f, cfg, indicator_scale=alpha)
    dust = float(np.max(pw_narrow - pw_wide, initial=0.0))
    pw_wide = np.maximum(pw_wide, pw_narrow)
    g_narrow = pw_narrow ** (1.0 / q)
    g_wide = np.maximum(pw_wide ** (1.0 / q), g_narrow)
    norm_narrow = float(np.sum(g_narrow * grid.cell_gamma))
    norm_wide = float(np.sum(g_wide * grid.cell_gamma))
    pw_major = j_power_field(f, cfg, indicator_scale=alpha, normalizer_scale=alpha)
    norm_major = float(np.sum(pw_major ** (1.0 / q) * grid.cell_gamma))
    wide_ball = grid.pair_ball_gamma(alpha)
    unit_ball = grid.pair_ball_gamma(1.0)
    kappa = float(np.max(np.where(grid.active, wide_ball / unit_ball, 1.0)))
    majorant_ok = norm_wide <= kappa ** (1.0 / q) * norm_major * (1.0 + 1e-12)
    ratio = norm_wide / norm_narrow if norm_narrow > 0.0 else 1.0
    return ApertureReport(
        alpha0=alpha0,
        alpha=alpha,
        norms={alpha0: norm_narrow, alpha: norm_wide, "majorant": norm_major},
        ratio=ratio,
        kappa=kappa,
        majorant_ok=majorant_ok,
        monotonicity_dust=dust,
    )
