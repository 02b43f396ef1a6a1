"""Enumeration, communication heights, neighborhoods, typical sets."""

import numpy as np
import pytest

from spinscape.canon import canonical_path
from spinscape.energy import energy
from spinscape.landscape import (
    NON_REPRODUCIBLE_CLAIMS,
    barrier_report,
    comm_height,
    enumerate_space,
    gamma_formula,
    neighborhood,
    typical_sets,
    valley_depths,
)
from spinscape.lattice import Lattice2D, LatticeSpec, monochrome


class TestEnumeration:
    def test_refusal_over_limit(self):
        spec = LatticeSpec(3, 3, 3, 2, "periodic")  # 2^27 states
        with pytest.raises(ValueError, match="limit"):
            enumerate_space(spec, limit=2**26)

    def test_energies_match_direct(self, space_223_open):
        space = space_223_open
        rng = np.random.default_rng(0)
        for s in rng.integers(0, space.n_states, 50):
            assert space.energies[s] == energy(space.config(int(s)))

    def test_code_is_index(self, space_223_open):
        space = space_223_open
        for s in (0, 17, 4095):
            assert space.index_of(space.config(s)) == s

    def test_move_table_consistency(self, space_223_open):
        space = space_223_open
        mt = space.move_table()
        md = space.move_deltas()
        s = 123
        c = space.config(s)
        for j in range(mt.shape[1]):
            t = int(mt[s, j])
            assert md[s, j] == space.energies[t] - space.energies[s]
            # target differs from source in exactly one site
            diff = space.config(t).spins != c.spins
            assert diff.sum() == 1


class TestCommHeight:
    def test_2d_oracle_values(self, space_2d_33, space_2d_34):
        for space, expected in ((space_2d_33, 8), (space_2d_34, 8)):
            g = space.ground_states()
            assert comm_height(space, g[1], g[2]) == expected

    def test_self_height_is_energy(self, space_223_open):
        space = space_223_open
        s = 777
        assert comm_height(space, s, s) == space.energies[s]

    def test_avoid_raises_on_endpoint(self, space_223_open):
        space = space_223_open
        g = space.ground_states()
        with pytest.raises(ValueError):
            comm_height(space, g[1], g[2], avoid=[g[1]])

    def test_avoid_increases_height(self, space_2d_33):
        space = space_2d_33
        g = space.ground_states()
        base = comm_height(space, g[1], g[2])
        # blocking the whole level set at the barrier forces a higher pass
        level = np.flatnonzero(space.energies == base)
        blocked = comm_height(space, g[1], g[2], avoid=level)
        assert blocked is None or blocked > base

    def test_canonical_path_bounds_comm_height(self, space_223_open):
        space = space_223_open
        spec = space.spec
        p = canonical_path(spec, 1, 2)
        g = space.ground_states()
        assert comm_height(space, g[1], g[2]) <= p.max_energy


class TestNeighborhood:
    def test_monotone_in_ceiling(self, space_223_open):
        space = space_223_open
        g = space.ground_states()
        small = neighborhood(space, [g[1]], 3)
        large = neighborhood(space, [g[1]], 6)
        assert small.mask.sum() <= large.mask.sum()
        assert (large.mask | small.mask).sum() == large.mask.sum()

    def test_root_above_ceiling_empty(self, space_223_open):
        space = space_223_open
        high = int(np.argmax(space.energies))
        assert len(neighborhood(space, [high], 1)) == 0

    def test_no_escape_above_ceiling(self, space_223_open):
        space = space_223_open
        g = space.ground_states()
        cs = neighborhood(space, [g[1]], 5)
        assert (space.energies[cs.states] <= 5).all()
        # the other ground is not reachable below the barrier (6)
        assert g[2] not in cs


class TestValleyDepths:
    def test_grounds_have_zero_depth(self, space_223_open):
        space = space_223_open
        vd = valley_depths(space)
        for s in space.ground_states().values():
            assert vd[s] == 0

    def test_depth_definition_spot_check(self, space_223_open):
        space = space_223_open
        vd = valley_depths(space)
        grounds = list(space.ground_states().values())
        rng = np.random.default_rng(2)
        for s in rng.integers(0, space.n_states, 20):
            s = int(s)
            phi = comm_height(space, s, grounds)
            assert vd[s] == phi - space.energies[s]

    def test_max_depth_below_barrier(self, space_223_open):
        # no trap deeper than the ground-to-ground barrier
        space = space_223_open
        vd = valley_depths(space)
        g = space.ground_states()
        gamma = comm_height(space, g[1], g[2])
        assert vd.max() <= gamma


class TestBarrierReport:
    def test_formula_values(self):
        assert gamma_formula(LatticeSpec(3, 4, 5, 2, "periodic")) == 32
        assert gamma_formula(LatticeSpec(2, 2, 3, 2, "open")) == 7
        assert gamma_formula(Lattice2D(3, 4, 2, "periodic")) == 8
        assert gamma_formula(Lattice2D(2, 3, 2, "open")) == 3

    def test_report_flags(self):
        spec = LatticeSpec(3, 4, 5, 2, "periodic")
        rep = barrier_report(spec, brute=30)
        assert rep["theorem_hypothesis_met"] is False
        assert rep["match"] is False
        assert rep["note"] == "outside theorem hypothesis"
        assert rep["non_reproducible"] == NON_REPRODUCIBLE_CLAIMS

    def test_report_match(self):
        spec = Lattice2D(3, 4, 2, "periodic")
        rep = barrier_report(spec, brute=8)
        assert rep["match"] is True


class TestTypicalSets:
    def test_build_224(self, space_224_open):
        ts = typical_sets(space_224_open, A=(1,), B=(2,))
        assert ts.gamma == 6
        assert ts.m_K == 1
        assert ts.checks["S_A_in_edge_A"]
        assert ts.checks["union_eq_hat_S"]
        assert ts.checks["edge_A_cap_bulk_eq_Rhat_mK"]
        # degenerate open instance: overlap warning recorded, gateways empty
        assert any("open boundary" in w for w in ts.warnings)
        assert not ts.G_mask.any()

    def test_slab_family_counts(self, space_224_open):
        ts = typical_sets(space_224_open, A=(1,), B=(2,))
        # open boundary: slabs anchored at either end
        assert len(ts.R[0]) == 1 and len(ts.R[4]) == 1
        assert len(ts.R[1]) == 2 and len(ts.R[3]) == 2
        for i, codes in ts.R.items():
            for s in codes:
                assert space_224_open.energies[s] == (
                    0 if i in (0, 4) else 2 * 2  # K*L cut area
                )

    def test_class_reps_partition(self, space_224_open):
        ts = typical_sets(space_224_open, A=(1,), B=(2,))
        covered = set(ts.class_rep_A)
        assert covered == set(int(x) for x in np.flatnonzero(ts.I_A))
        for rep in ts.Ibar_A:
            assert ts.class_rep_A[int(rep)] == int(rep)

    def test_O_I_split(self, space_224_open):
        ts = typical_sets(space_224_open, A=(1,), B=(2,))
        E = space_224_open.energies
        assert (E[np.flatnonzero(ts.O_A)] == ts.gamma).all()
        assert (E[np.flatnonzero(ts.I_A)] < ts.gamma).all()
        assert not (ts.O_A & ts.I_A).any()
