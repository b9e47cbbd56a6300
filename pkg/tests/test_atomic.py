"""Splitter, stopping ladder, atomic decomposition, re-atoming, aperture."""

import math

import numpy as np
import pytest

from gausstent import (
    AdmissibleBall,
    AtomRecord,
    Box,
    DGrid,
    NormConfig,
    TentFunction,
    aperture_compare,
    apply_J,
    atomic_decompose,
    ball_tent_pairs,
    is_admissible,
    ladder_thicken_check,
    m_from_norms,
    make_atom,
    reatom,
    session_eta_bar,
    stopping_ladder,
    support_splitter,
    verify_decomposition,
)
from gausstent.atomic import _owner_key
from gausstent.cli import SESSION_CONSTANTS

CFG = NormConfig(q=2.0)


def sparse_nonneg(grid, seed, pairs=60, spread=2.0):
    """Random sparse nonnegative tent function concentrated near the origin."""
    rng = np.random.default_rng(seed)
    vals = np.zeros((grid.S, grid.N))
    core = np.nonzero(np.abs(grid.centers[:, 0]) < spread)[0]
    for _ in range(pairs):
        s = int(rng.integers(0, grid.S))
        j = int(rng.choice(core))
        if grid.active[s, j]:
            vals[s, j] = rng.uniform(0.2, 2.0)
    return TentFunction(grid, vals)


class TestSplitter:
    def test_owner_key_branches(self):
        low = _owner_key(np.array([20.0]))
        assert low[0] == 0 and low[1] == 5
        high = _owner_key(np.array([33.0]))
        assert high[0] == 1
        assert isinstance(high[1], tuple)

    def test_pieces_sum_exactly(self, grid1):
        f = sparse_nonneg(grid1, 1, spread=6.0)
        pieces = support_splitter(f)
        assert pieces
        total = np.zeros_like(f.values)
        for p in pieces:
            total += p.values
        assert np.array_equal(total, f.values)

    def test_disjoint_supports_with_base(self, grid1):
        f = sparse_nonneg(grid1, 2, spread=6.0)
        pieces = support_splitter(f)
        seen = np.zeros(grid1.N, dtype=bool)
        for p in pieces:
            cols = np.any(p.values != 0.0, axis=0)
            assert not np.any(cols & seen)
            seen |= cols
            assert p.base_kind == "cube"  # window 8 never reaches layer 6
            assert not np.any(cols & ~p.base_mask.cells)

    def test_label_branch(self):
        grid = DGrid(Box([-36.0], [36.0]), 2.0**-6, t_min=2.0**-6)
        vals = np.zeros((grid.S, grid.N))
        for target in (2.0, 33.0):
            j = int(np.argmin(np.abs(grid.centers[:, 0] - target)))
            assert grid.active[0, j]
            vals[0, j] = 1.0
        f = TentFunction(grid, vals)
        pieces = support_splitter(f)
        kinds = sorted(p.base_kind for p in pieces)
        assert kinds == ["cube", "label"]
        total = sum(p.values for p in pieces)
        assert np.array_equal(total, f.values)

    def test_zero_measure_columns_dropped(self):
        # beyond |y| ~ 38.6 the gaussian cell weight underflows to zero,
        # the conical field vanishes and the splitter cuts the column
        grid = DGrid(Box([-40.0], [40.0]), 2.0**-6, t_min=2.0**-6)
        j_dead = int(np.argmin(np.abs(grid.centers[:, 0] - 39.5)))
        j_live = int(np.argmin(np.abs(grid.centers[:, 0] - 1.0)))
        assert grid.cell_gamma[j_dead] == 0.0
        vals = np.zeros((grid.S, grid.N))
        vals[0, j_dead] = 1.0
        vals[0, j_live] = 1.0
        pieces = support_splitter(TentFunction(grid, vals))
        total = sum(p.values for p in pieces)
        assert total[0, j_live] == 1.0
        assert total[0, j_dead] == 0.0

    def test_empty_input(self, grid1):
        assert support_splitter(TentFunction.zero(grid1)) == []


class TestLadder:
    def test_invariants(self, grid1_small):
        f = sparse_nonneg(grid1_small, 3)
        ses = session_eta_bar(grid1_small, 0.75)
        ladder = stopping_ladder(f, CFG, 0.75, ses["eta_bar"])
        assert ladder.k_range is not None
        k_lo, k_hi = ladder.k_range
        u = ladder.u
        pos = u[u > 0.0]
        assert 2.0**k_lo <= pos.min() and pos.max() <= 2.0**k_hi
        assert np.array_equal(u, apply_J(f, CFG))
        counts = [int(np.count_nonzero(m.cells)) for m in ladder.O_k]
        assert all(a >= b for a, b in zip(counts, counts[1:]))
        for level, thick in zip(ladder.O_k, ladder.O_k_density):
            assert not np.any(level.cells & ~thick.cells)

    def test_zero_input(self, grid1_small):
        ladder = stopping_ladder(TentFunction.zero(grid1_small), CFG, 0.75, 0.65)
        assert ladder.k_range is None
        assert len(list(ladder.levels())) == 0

    def test_eta_validation(self, grid1_small):
        f = sparse_nonneg(grid1_small, 4)
        with pytest.raises(ValueError):
            stopping_ladder(f, CFG, 0.3, 0.65)
        with pytest.raises(ValueError):
            stopping_ladder(f, CFG, 0.75, 1.5)


@pytest.fixture(scope="module")
def bundle(grid1_small):
    f = sparse_nonneg(grid1_small, 7)
    d = atomic_decompose(f, CFG, 0.75)
    rep = verify_decomposition(f, d, CFG)
    return f, d, rep


class TestDecomposition:
    def test_reconstruction(self, bundle):
        _, _, rep = bundle
        assert rep["reconstruction_rel"] <= 1e-9

    def test_atoms_certified(self, bundle):
        _, d, rep = bundle
        assert rep["atom_support_ok"]
        # terms are atoms up to the cube-to-ball measure gap, which is
        # carried in lambda bookkeeping rather than the atom itself
        assert rep["atom_norm_slack_max"] <= SESSION_CONSTANTS["decompose_atom_slack"]
        for t in d.terms:
            assert t.atom.support_ok
            assert t.lam > 0.0

    def test_measured_constants(self, bundle):
        _, _, rep = bundle
        assert rep["mu_chain_max"] <= SESSION_CONSTANTS["mu_chain"]
        assert rep["weak_type_max"] <= SESSION_CONSTANTS["weak_type"]
        assert 0.5 <= rep["layer_cake_min"] <= rep["layer_cake_max"] <= 2.0
        assert rep["determineC_ok"] and rep["determineC2_ok"]
        assert rep["lambda_ratio"] <= SESSION_CONSTANTS["lambda_envelope"]

    def test_ladder_thicken(self, bundle):
        _, d, _ = bundle
        checked = 0
        for piece, ladder in zip(d.pieces, d.ladders):
            out = ladder_thicken_check(ladder, piece.base_mask)
            assert out["ok"], out
            checked += 1
        assert checked == len(d.pieces)

    def test_homogeneity(self, grid1_small, bundle):
        f, d, _ = bundle
        d2 = atomic_decompose(2.0 * f, CFG, 0.75)
        assert len(d2.terms) == len(d.terms)
        assert d2.sum_lambda == pytest.approx(2.0 * d.sum_lambda, rel=1e-13)
        assert d2.realized_alpha == d.realized_alpha

    def test_zero_input(self, grid1_small):
        d = atomic_decompose(TentFunction.zero(grid1_small), CFG, 0.75)
        assert d.terms == [] and d.sum_lambda == 0.0
        rep = verify_decomposition(TentFunction.zero(grid1_small), d, CFG)
        assert rep["reconstruction_rel"] == 0.0


def _scaled_atom(grid, center, scale, seed=0):
    rng = np.random.default_rng(seed)
    m = float(m_from_norms(abs(center)))
    ball = AdmissibleBall([center], scale * m)
    profile = TentFunction(grid, rng.uniform(0.1, 1.0, (grid.S, grid.N)))
    return make_atom(ball, scale, profile, CFG)


class TestReatom:
    def check_pieces(self, atom, pieces, alpha):
        grid = atom.f.grid
        total = np.zeros_like(atom.f.values)
        for p in pieces:
            c = float(np.linalg.norm(p.ball.center))
            assert p.ball.radius == pytest.approx(alpha * float(m_from_norms(c)), rel=1e-14)
            assert is_admissible(p.ball, alpha)
            assert p.scale == alpha
            mask = ball_tent_pairs(grid, p.ball)
            assert not np.any((p.f.values != 0.0) & ~mask)
            total += p.f.values
        assert np.max(np.abs(total - atom.f.values)) <= 1e-13 * atom.f.max_abs()

    def test_near_branch(self, grid1):
        atom = _scaled_atom(grid1, 0.5, 2.0, seed=1)
        pieces = reatom(atom, 1.5, CFG)
        assert len(pieces) > 1
        self.check_pieces(atom, pieces, 1.5)

    def test_far_branch(self):
        grid = DGrid(Box([-16.0], [16.0]), 2.0**-6, t_min=2.0**-6)
        atom = _scaled_atom(grid, 14.0, 2.5, seed=2)
        pieces = reatom(atom, 2.0, CFG)
        assert len(pieces) > 1
        self.check_pieces(atom, pieces, 2.0)
        r = atom.ball.radius
        for p in pieces:
            assert abs(float(p.ball.center[0]) - 14.0) <= r

    def test_identity_when_target_wider(self, grid1_small):
        atom = _scaled_atom(grid1_small, 0.0, 1.5, seed=3)
        assert reatom(atom, 2.0, CFG) == [atom]
        assert reatom(atom, 1.5, CFG) == [atom]

    def test_empty_support(self, grid1_small):
        a = AtomRecord(
            ball=AdmissibleBall([0.0], 1.0),
            scale=2.0,
            f=TentFunction.zero(grid1_small),
            support_ok=True,
            lq_norm=0.0,
            bound=1.0,
        )
        assert reatom(a, 1.5, CFG) == []

    def test_target_validation(self, grid1_small):
        atom = _scaled_atom(grid1_small, 0.0, 2.0, seed=4)
        with pytest.raises(ValueError):
            reatom(atom, 1.0, CFG)


class TestAperture:
    def test_ratio_at_least_one(self, grid1_small):
        f = sparse_nonneg(grid1_small, 11)
        rep = aperture_compare(f, 1.5, 3.0, CFG)
        assert rep.ratio >= 1.0
        assert rep.majorant_ok
        assert rep.monotonicity_dust >= 0.0
        assert rep.kappa > 1.0
        assert set(rep.norms) == {1.5, 3.0, "majorant"}

    def test_equal_apertures_give_exact_one(self, grid1_small):
        f = sparse_nonneg(grid1_small, 12)
        rep = aperture_compare(f, 1.5, 1.5, CFG)
        assert rep.ratio == 1.0
        assert rep.monotonicity_dust == 0.0

    def test_zero_input(self, grid1_small):
        rep = aperture_compare(TentFunction.zero(grid1_small), 1.5, 2.0, CFG)
        assert rep.ratio == 1.0

    def test_validation(self, grid1_small):
        f = sparse_nonneg(grid1_small, 13)
        with pytest.raises(ValueError):
            aperture_compare(f, 1.0, 2.0, CFG)
        with pytest.raises(ValueError):
            aperture_compare(f, 2.0, 1.5, CFG)
