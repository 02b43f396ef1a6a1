"""Dynamics: rates, kernel normalization, detailed balance, simulation."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from spinscape import dynamics as dy
from spinscape.energy import energy, flip_delta
from spinscape.lattice import LatticeSpec, SpinConfig, is_ground, monochrome


def random_config(spec, seed):
    rng = np.random.default_rng(seed)
    return SpinConfig(spec, rng.integers(1, spec.q + 1, spec.n_sites).astype(np.int16))


SPEC = LatticeSpec(2, 2, 3, 2, "open")


class TestRates:
    def test_downhill_rate_one(self):
        assert dy.rate_from_delta(-3, 2.0) == 1.0
        assert dy.rate_from_delta(0, 2.0) == 1.0

    def test_uphill_rate(self):
        assert dy.rate_from_delta(2, 1.5) == pytest.approx(math.exp(-3.0))

    def test_rate_zero_unless_single_flip(self):
        c = monochrome(SPEC, 1)
        two = c.flip_index(0, 2).flip_index(1, 2)
        assert dy.rate(c, two, 1.0) == 0.0
        assert dy.rate(c, c, 1.0) == 0.0

    @settings(max_examples=30, deadline=None)
    @given(seed=st.integers(0, 10**6), beta=st.floats(0.1, 5.0))
    def test_detailed_balance(self, seed, beta):
        c = random_config(SPEC, seed)
        rng = np.random.default_rng(seed + 1)
        i = int(rng.integers(SPEC.n_sites))
        a = int(rng.integers(1, SPEC.q + 1))
        if a == int(c.spins[i]):
            return
        z = c.flip_index(i, a)
        lhs = dy.gibbs(c, beta) * dy.rate(c, z, beta)
        rhs = dy.gibbs(z, beta) * dy.rate(z, c, beta)
        assert lhs == pytest.approx(rhs, rel=1e-12)
        assert lhs == pytest.approx(
            min(dy.gibbs(c, beta), dy.gibbs(z, beta)), rel=1e-12
        )


class TestKernel:
    def test_normalization_and_values(self):
        c = random_config(SPEC, 3)
        beta = 1.7
        kern = dy.discrete_kernel(c, beta)
        total = sum(kern.values())
        assert total == pytest.approx(1.0, abs=1e-12)
        n, q = SPEC.n_sites, SPEC.q
        for key, p in kern.items():
            if key is None:
                continue
            i, a = key
            d = flip_delta(c, i, a)
            assert p == pytest.approx(
                math.exp(-beta * max(d, 0)) / (q * n), rel=1e-12
            )

    def test_partition_function_small_beta(self, space_223_open):
        z = dy.partition_function(space_223_open, 0.0)
        assert z == space_223_open.n_states

    def test_partition_function_large_beta(self, space_223_open):
        # q ground states dominate: Z -> q
        z = dy.partition_function(space_223_open, 50.0)
        assert z == pytest.approx(2.0, rel=1e-10)

    def test_partition_function_log_domain(self, space_223_open):
        z = dy.partition_function(space_223_open, 1000.0)
        assert z == pytest.approx(2.0, rel=1e-10)


class TestSimulation:
    def test_determinism(self):
        c = monochrome(SPEC, 1)
        target = lambda s: is_ground(s) == 2  # noqa: E731
        a = dy.simulate_hit(c, target, beta=1.0, seed=7)
        b = dy.simulate_hit(c, target, beta=1.0, seed=7)
        assert a.events == b.events and a.hitting_time == b.hitting_time
        other = dy.simulate_hit(c, target, beta=1.0, seed=8)
        assert other.events != a.events

    def test_budget_censoring(self):
        c = monochrome(SPEC, 1)
        target = lambda s: is_ground(s) == 2  # noqa: E731
        sample = dy.simulate_hit(c, target, beta=5.0, seed=1, step_budget=10)
        assert not sample.hit and sample.steps == 10

    def test_event_energies_consistent(self):
        c = monochrome(SPEC, 1)
        target = lambda s: is_ground(s) == 2  # noqa: E731
        sample = dy.simulate_hit(c, target, beta=1.0, seed=3)
        cur = c
        t_prev = 0.0
        for (t, x, a) in sample.events:
            assert t > t_prev
            t_prev = t
            cur = cur.flip_index(x, a)
        assert is_ground(cur) == 2

    def test_trace_transform(self):
        c = monochrome(SPEC, 1)
        target = lambda s: is_ground(s) == 2  # noqa: E731
        sample = dy.simulate_hit(c, target, beta=2.0, seed=5)
        trace = dy.trace_transform(sample, c, gamma=6, beta=2.0)
        assert trace.sojourns[0][0] == 1
        assert 0.0 <= trace.off_ground_fraction <= 1.0
        assert trace.total_trace_time > 0


class TestEnsemble:
    def test_matches_exact_mean(self, space_223_open):
        from spinscape import potential as pt

        space = space_223_open
        g = space.ground_states()
        mask = np.zeros(space.n_states, bool)
        mask[g[2]] = True
        beta = 2.0
        times = dy.sample_hitting_times(space, g[1], mask, beta, 400, seed=9)
        exact = pt.mean_hitting_exact(space, g[1], [g[2]], beta)
        se = times.std(ddof=1) / math.sqrt(len(times))
        assert abs(times.mean() - exact) <= 4 * se

    def test_deterministic_per_seed(self, space_223_open):
        space = space_223_open
        g = space.ground_states()
        mask = np.zeros(space.n_states, bool)
        mask[g[2]] = True
        t1 = dy.sample_hitting_times(space, g[1], mask, 2.0, 50, seed=11)
        t2 = dy.sample_hitting_times(space, g[1], mask, 2.0, 50, seed=11)
        assert np.array_equal(t1, t2)

    def test_immediate_hit(self, space_223_open):
        space = space_223_open
        g = space.ground_states()
        mask = np.zeros(space.n_states, bool)
        mask[g[1]] = True
        t = dy.sample_hitting_times(space, g[1], mask, 2.0, 10, seed=0)
        assert np.all(t == 0.0)
