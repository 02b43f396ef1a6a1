"""Configuration families, gateways, paths, recognizers."""

import numpy as np
import pytest

from spinscape.canon import (
    CanonicalDescriptor,
    FloorShape,
    PathSeq,
    TorusArc,
    arcs_of_length,
    build_canonical,
    build_regular,
    canonical_path,
    classify_gateway,
    escape_path,
    gateway_2d_types,
    is_canonical,
    mk_mK,
    n_window_bounds,
    protuberance_2d_codes,
    regular_2d_codes,
    xi_plain,
    xi_side,
    zeta_2d_codes,
)
from spinscape.energy import energy, energy2d
from spinscape.lattice import Lattice2D, LatticeSpec, SpinConfig, monochrome


class TestThresholds:
    @pytest.mark.parametrize(
        "K,expected",
        [(1, 1), (2, 1), (3, 2), (5, 2), (7, 3), (8, 4), (27, 9), (2829, 200)],
    )
    def test_mk(self, K, expected):
        assert mk_mK(K) == expected

    def test_mk_is_exact_integer_cube_root(self):
        for K in range(1, 2000):
            t = mk_mK(K)
            assert t**3 <= K * K < (t + 1) ** 3

    def test_window_bounds(self):
        lo, hi = n_window_bounds(2829)
        assert lo == 53 and hi == 200 and lo <= hi


class TestArcs:
    def test_members_wrap(self):
        arc = TorusArc(5, 4, 3)
        assert arc.members() == [4, 5, 1]

    def test_precedes(self):
        assert TorusArc(5, 2, 2).precedes(TorusArc(5, 1, 3))
        assert not TorusArc(5, 2, 2).precedes(TorusArc(5, 3, 3))

    def test_extensions_periodic(self):
        exts = TorusArc(5, 2, 2).extensions("periodic")
        assert {(a.start, a.length) for a in exts} == {(1, 3), (2, 3)}

    def test_extensions_open(self):
        exts = TorusArc(4, 1, 2).extensions("open")
        assert {(a.start, a.length) for a in exts} == {(1, 3)}

    def test_arcs_of_length_open_anchored(self):
        arcs = arcs_of_length(6, 2, "open")
        assert {(a.start, a.length) for a in arcs} == {(1, 2), (5, 2)}


class TestFloorFamilies:
    spec2d = Lattice2D(3, 4, 2, "periodic")

    def test_band_energy(self):
        for v in range(1, self.spec2d.L):
            assert energy2d(xi_plain(self.spec2d, 1, 2, 1, v)) == 2 * self.spec2d.K

    def test_protuberance_energy(self):
        for v in range(1, self.spec2d.L - 1):
            eta = xi_side(self.spec2d, 1, 2, 1, v, 2, 1, "plus")
            assert energy2d(eta) == 2 * self.spec2d.K + 2

    def test_band_counts(self):
        assert len(regular_2d_codes(self.spec2d, 1, 2, 2)) == self.spec2d.L

    def test_theta_closure_square(self):
        sq = Lattice2D(3, 3, 2, "periodic")
        codes = regular_2d_codes(sq, 1, 2, 1)
        # 3 horizontal + 3 vertical bands
        assert len(codes) == 6

    def test_zeta_nonempty_and_at_saddle(self):
        zc = zeta_2d_codes(self.spec2d, 1, 2)
        assert len(zc) > 0
        for c in list(zc)[:50]:
            assert energy2d(SpinConfig.from_code(self.spec2d, c)) == 8

    def test_gateway_types_partition(self):
        types = gateway_2d_types(self.spec2d, 1, 2)
        assert set(types.values()) <= {1, 2, 3}
        # wide bands are type 1
        for v in range(2, self.spec2d.L - 1):
            for c in regular_2d_codes(self.spec2d, 1, 2, v):
                assert types[c] == 1


class TestBuilders:
    spec = LatticeSpec(3, 4, 5, 2, "periodic")

    def test_regular_energy(self):
        P = TorusArc(5, 1, 2)
        sigma = build_regular(self.spec, 1, 2, P)
        # two cut planes of area K*L
        assert energy(sigma) == 2 * self.spec.K * self.spec.L

    def test_canonical_roundtrip(self):
        P = TorusArc(5, 1, 2)
        Q = TorusArc(5, 1, 3)
        shape = FloorShape(kind="plus", a=1, b=2, l=1, v=2, k=1, h=1)
        sigma = build_canonical(self.spec, 1, 2, P, Q, shape)
        desc = is_canonical(sigma)
        assert desc is not None
        assert (desc.a, desc.b) == (1, 2)
        assert desc.P.length == 2 and desc.m0 == 3

    def test_canonical_rejects_bad_floor(self):
        P = TorusArc(5, 1, 2)
        Q = TorusArc(5, 1, 3)
        # two isolated minority sites: not a band or band-with-protuberance
        spins = np.ones(12, dtype=np.int16)
        spins[0] = 2
        spins[7] = 2
        bad = SpinConfig(self.spec.floor_spec(), spins)
        with pytest.raises(ValueError):
            build_canonical(self.spec, 1, 2, P, Q, bad)

    def test_is_canonical_rejects_random(self):
        rng = np.random.default_rng(1)
        sigma = SpinConfig(
            self.spec, rng.integers(1, 3, self.spec.n_sites).astype(np.int16)
        )
        assert is_canonical(sigma) is None

    def test_orientation_images(self):
        cube = LatticeSpec(3, 3, 3, 2, "periodic")
        P = TorusArc(3, 1, 1)
        s_id = build_regular(cube, 1, 2, P, orientation="012")
        s_rot = build_regular(cube, 1, 2, P, orientation="210")
        assert s_id != s_rot
        assert is_canonical(s_rot) is not None


class TestGatewayClassifier:
    def test_round_trip_type1(self):
        spec = LatticeSpec(3, 4, 8, 2, "periodic")
        P = TorusArc(8, 1, 2)
        Q = TorusArc(8, 1, 3)
        shape = FloorShape(kind="plain", a=1, b=2, l=1, v=2)
        sigma = build_canonical(spec, 1, 2, P, Q, shape)
        gc = classify_gateway(sigma)
        assert gc is not None and gc.type == 1
        assert energy(sigma) == 2 * 12 + 2 * 3 + 2 - 2

    def test_round_trip_type2_where_window_permits(self):
        # bulk saddle protuberances need v in [2, L-3]: smallest L is 5
        spec = LatticeSpec(3, 5, 8, 2, "periodic")
        P = TorusArc(8, 1, 2)
        Q = TorusArc(8, 1, 3)
        shape = FloorShape(kind="plus", a=1, b=2, l=1, v=2, k=1, h=1)
        sigma = build_canonical(spec, 1, 2, P, Q, shape)
        gc = classify_gateway(sigma)
        assert gc is not None and gc.type == 2
        assert energy(sigma) == 2 * 15 + 2 * 3 + 2

    def test_slab_count_window(self):
        spec = LatticeSpec(3, 4, 8, 2, "periodic")
        m_K = mk_mK(3)
        # slab count outside [m_K - 1, M - m_K] is rejected
        P = TorusArc(8, 1, 7)
        Q = TorusArc(8, 1, 8)
        shape = FloorShape(kind="plain", a=1, b=2, l=1, v=2)
        sigma = build_canonical(spec, 1, 2, P, Q, shape)
        assert P.length > spec.M - m_K
        assert classify_gateway(sigma) is None

    def test_ground_not_gateway(self):
        spec = LatticeSpec(3, 4, 8, 2, "periodic")
        assert classify_gateway(monochrome(spec, 1)) is None


class TestPaths:
    def test_canonical_path_shape(self):
        spec = LatticeSpec(3, 3, 4, 2, "periodic")
        p = canonical_path(spec, 1, 2)
        p.validate()
        assert len(p) == spec.n_sites
        assert p.energies[0] == 0 and p.energies[-1] == 0
        assert p.end == monochrome(spec, 2)

    def test_custom_orders_must_be_connected(self):
        spec = LatticeSpec(3, 3, 4, 2, "periodic")
        with pytest.raises(ValueError):
            canonical_path(spec, 1, 2, floors_order=[1, 3, 2, 4])

    def test_json_roundtrip_bit_exact(self):
        spec = LatticeSpec(3, 3, 3, 2, "periodic")
        p = canonical_path(spec, 1, 2)
        text = p.to_json()
        q = PathSeq.from_json(text)
        assert q.to_json() == text

    def test_from_json_rejects_corrupt_ledger(self):
        import json

        spec = LatticeSpec(3, 3, 3, 2, "periodic")
        p = canonical_path(spec, 1, 2)
        obj = json.loads(p.to_json())
        obj["steps"][5][3] += 1  # corrupt an energy entry
        with pytest.raises(AssertionError):
            PathSeq.from_json(json.dumps(obj))

    def test_escape_path_requires_thin_slab(self):
        spec = LatticeSpec(9, 9, 9, 2, "periodic")
        with pytest.raises(ValueError):
            escape_path(spec, 1, 2, 3)  # isqrt(9)-1 = 2

    def test_escape_path_below_barrier(self):
        spec = LatticeSpec(9, 9, 9, 2, "periodic")
        p = escape_path(spec, 1, 2, 2)
        gamma = 2 * 81 + 2 * 9 + 2
        assert p.max_energy < gamma
        assert p.end == monochrome(spec, 1)
