"""Explicit configuration families and optimal paths.

Covers the 2D floor-shape catalogue (slab bands and their protuberance
variants), the 3D slab ("regular") and one-active-floor ("canonical")
families, the gateway classifier with its three floor types, canonical
growth paths realizing the energy barrier, the explicit sub-barrier escape
path from thin slabs, and the transition-path recognizer.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import lru_cache
from itertools import permutations

import numpy as np

from .energy import energy, flip_delta
from .lattice import Lattice2D, LatticeSpec, OPEN, PERIODIC, SpinConfig, monochrome

__all__ = [
    "mk_mK",
    "n_window_bounds",
    "TorusArc",
    "arcs_of_length",
    "FloorShape",
    "xi_plain",
    "xi_side",
    "regular_2d_codes",
    "protuberance_2d_codes",
    "bulk_2d_codes",
    "bulk_gamma_2d_codes",
    "zeta_2d_codes",
    "gateway_2d_types",
    "build_regular",
    "build_canonical",
    "CanonicalDescriptor",
    "is_canonical",
    "GatewayClass",
    "classify_gateway",
    "generate_gateways",
    "PathSeq",
    "canonical_path",
    "escape_path",
    "is_transition_path",
]


# ---------------------------------------------------------------------------
# Integer thresholds
# ---------------------------------------------------------------------------

def mk_mK(K: int) -> int:
    """Exact ``floor(K**(2/3))``: the largest ``t`` with ``t**3 <= K**2``.

    Pure integer arithmetic -- no floating point.
    """
    if K < 1:
        raise ValueError("K must be positive")
    target = K * K
    t = int(round(target ** (1.0 / 3.0)))
    while t ** 3 > target:
        t -= 1
    while (t + 1) ** 3 <= target:
        t += 1
    return t


def n_window_bounds(K: int) -> tuple[int, int]:
    """Bracket for the slab-width threshold of forced barrier crossings.

    The explicit escape-path construction gives the lower bound
    ``isqrt(K)`` and the height-window machinery the upper bound
    ``mk_mK(K)``; the exact value in between is an open question.
    """
    return math.isqrt(K), mk_mK(K)


# ---------------------------------------------------------------------------
# Arcs
# ---------------------------------------------------------------------------

@dataclass(frozen=True, order=True)
class TorusArc:
    """A connected subset of the cycle (or interval) of size ``n``.

    ``start`` is 1-based; ``length`` in ``[0, n]``.  Length 0 is the empty
    set and length ``n`` the full set (``start`` normalized to 1 in both
    cases).
    """

    n: int
    start: int
    length: int

    def __post_init__(self) -> None:
        if not (0 <= self.length <= self.n):
            raise ValueError("arc length out of range")
        if self.length in (0, self.n):
            object.__setattr__(self, "start", 1)
        elif not 1 <= self.start <= self.n:
            raise ValueError("arc start out of range")

    def members(self) -> list[int]:
        return [(self.start - 1 + j) % self.n + 1 for j in range(self.length)]

    def member_set(self) -> frozenset[int]:
        return frozenset(self.members())

    def precedes(self, other: "TorusArc") -> bool:
        """True when ``other`` extends this arc by exactly one element."""
        return (
            other.length == self.length + 1
            and self.member_set() < other.member_set()
        )

    def extensions(self, boundary: str = PERIODIC) -> list["TorusArc"]:
        """The arcs obtained by adding one adjacent element."""
        if self.length >= self.n:
            return []
        if self.length == 0:
            if boundary == PERIODIC:
                return [TorusArc(self.n, s, 1) for s in range(1, self.n + 1)]
            return [TorusArc(self.n, 1, 1), TorusArc(self.n, self.n, 1)]
        out = []
        left = TorusArc(self.n, (self.start - 2) % self.n + 1, self.length + 1)
        right = TorusArc(self.n, self.start, self.length + 1)
        if boundary == PERIODIC:
            out = [left, right]
        else:
            for cand in (left, right):
                mem = cand.members()
                if mem == sorted(mem):  # stays an interval (no wrap)
                    out.append(cand)
        # dedupe (length n-1 -> n collapses)
        uniq = {(c.start, c.length): c for c in out}
        return list(uniq.values())


def arcs_of_length(n: int, length: int, boundary: str = PERIODIC) -> list[TorusArc]:
    """All arcs of the given length; open boundary keeps only the two
    boundary-anchored intervals."""
    if length in (0, n):
        return [TorusArc(n, 1, length)]
    if boundary == PERIODIC:
        return [TorusArc(n, s, length) for s in range(1, n + 1)]
    return [TorusArc(n, 1, length), TorusArc(n, n - length + 1, length)]


# ---------------------------------------------------------------------------
# 2D floor shapes
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FloorShape:
    """Parameters of a 2D floor configuration.

    ``kind`` is ``"plain"`` (a width-``v`` band of spin ``b`` on rows
    ``l..l+v-1``), ``"plus"`` (the band plus a partial row of width ``h``
    starting at column ``k`` on row ``l+v``) or ``"minus"`` (partial row on
    row ``l-1``).
    """

    kind: str
    a: int
    b: int
    l: int = 1
    v: int = 0
    k: int = 1
    h: int = 0


def xi_plain(spec2d: Lattice2D, a: int, b: int, l: int, v: int) -> SpinConfig:
    """The band configuration: spin ``b`` on rows ``l..l+v-1`` (mod L)."""
    K, L = spec2d.K, spec2d.L
    if not 0 <= v <= L:
        raise ValueError("band width v out of range [0, L]")
    arr = np.full((L, K), a, dtype=np.int16)
    for j in range(v):
        arr[(l - 1 + j) % L] = b
    return SpinConfig(spec2d, arr.ravel())


def xi_side(
    spec2d: Lattice2D, a: int, b: int, l: int, v: int, k: int, h: int, side: str
) -> SpinConfig:
    """Band plus a width-``h`` partial row on the adjacent row.

    ``side`` is ``"plus"`` (the partial row sits on row ``l+v``) or
    ``"minus"`` (row ``l-1``).
    """
    K, L = spec2d.K, spec2d.L
    if not 0 <= v <= L - 1:
        raise ValueError("band width v out of range [0, L-1]")
    if not 0 <= h <= K:
        raise ValueError("protuberance width h out of range [0, K]")
    arr = xi_plain(spec2d, a, b, l, v).spins.reshape(L, K).copy()
    row = (l - 1 + v) % L if side == "plus" else (l - 2) % L
    for j in range(h):
        arr[row, (k - 1 + j) % K] = b
    return SpinConfig(spec2d, arr.ravel())


def build_floor(spec2d: Lattice2D, shape: FloorShape) -> SpinConfig:
    if shape.kind == "plain":
        return xi_plain(spec2d, shape.a, shape.b, shape.l, shape.v)
    if shape.kind in ("plus", "minus"):
        return xi_side(
            spec2d, shape.a, shape.b, shape.l, shape.v, shape.k, shape.h, shape.kind
        )
    raise ValueError(f"unknown floor kind {shape.kind!r}")


def _theta(eta: SpinConfig) -> SpinConfig:
    """Transpose of a square 2D configuration."""
    spec = eta.spec
    arr = eta.spins.reshape(spec.L, spec.K)
    return SpinConfig(spec, np.ascontiguousarray(arr.T).ravel())


def _with_theta(spec2d: Lattice2D, configs) -> set[int]:
    """Codes of the configs, closed under transposition when K = L."""
    out = set()
    for c in configs:
        out.add(c.code)
        if spec2d.K == spec2d.L:
            out.add(_theta(c).code)
    return out


@lru_cache(maxsize=None)
def regular_2d_codes(spec2d: Lattice2D, a: int, b: int, v: int) -> frozenset[int]:
    """Codes of all width-``v`` b-band configurations (plus transposes when
    K = L)."""
    configs = [xi_plain(spec2d, a, b, l, v) for l in range(1, spec2d.L + 1)]
    return frozenset(_with_theta(spec2d, configs))


@lru_cache(maxsize=None)
def protuberance_2d_codes(spec2d: Lattice2D, a: int, b: int, v: int) -> frozenset[int]:
    """Codes of band+partial-row configurations with ``1 <= h <= K-1``."""
    configs = []
    for l in range(1, spec2d.L + 1):
        for k in range(1, spec2d.K + 1):
            for h in range(1, spec2d.K):
                configs.append(xi_side(spec2d, a, b, l, v, k, h, "plus"))
                configs.append(xi_side(spec2d, a, b, l, v, k, h, "minus"))
    return frozenset(_with_theta(spec2d, configs))


@lru_cache(maxsize=None)
def canonical_2d_codes(spec2d: Lattice2D, a: int, b: int) -> frozenset[int]:
    """Codes of all 2D canonical configurations between the two grounds."""
    out: set[int] = set()
    for v in range(0, spec2d.L + 1):
        out |= regular_2d_codes(spec2d, a, b, v)
    for v in range(0, spec2d.L):
        out |= protuberance_2d_codes(spec2d, a, b, v)
    return frozenset(out)


@lru_cache(maxsize=None)
def bulk_2d_codes(spec2d: Lattice2D, a: int, b: int) -> frozenset[int]:
    """The 2D bulk typical codes: wide bands plus mid-window protuberances."""
    out: set[int] = set()
    for v in range(2, spec2d.L - 1):
        out |= regular_2d_codes(spec2d, a, b, v)
    out |= bulk_gamma_2d_codes(spec2d, a, b)
    return frozenset(out)


@lru_cache(maxsize=None)
def bulk_gamma_2d_codes(spec2d: Lattice2D, a: int, b: int) -> frozenset[int]:
    """The saddle-level part of the 2D bulk set (protuberances with
    ``2 <= v <= L-3``)."""
    out: set[int] = set()
    for v in range(2, spec2d.L - 2):
        out |= protuberance_2d_codes(spec2d, a, b, v)
    return frozenset(out)


@lru_cache(maxsize=None)
def zeta_2d_codes(spec2d: Lattice2D, a: int, b: int, max_states: int = 500_000) -> frozenset[int]:
    """The 2D saddle extensions reachable from width-2 bands.

    All configurations reachable from a width-2 b-band by a path whose
    every later step sits exactly at the 2D saddle energy ``2K + 2`` while
    avoiding the saddle-level bulk set.  Found by breadth-first search on
    that level set (no full enumeration needed); cached per arguments.
    """
    if spec2d.boundary != PERIODIC:
        raise ValueError("2D saddle extensions are defined on periodic tori")
    gamma2d = 2 * spec2d.K + 2
    avoid = bulk_gamma_2d_codes(spec2d, a, b)
    starts = [
        SpinConfig.from_code(spec2d, c) for c in regular_2d_codes(spec2d, a, b, 2)
    ]
    visited: set[int] = set()
    frontier: list[tuple[SpinConfig, int]] = [(s, energy(s)) for s in starts]
    q = spec2d.q
    n = spec2d.n_sites
    while frontier:
        nxt: list[tuple[SpinConfig, int]] = []
        for eta, H in frontier:
            for i in range(n):
                old = int(eta.spins[i])
                for s in range(1, q + 1):
                    if s == old:
                        continue
                    H2 = H + flip_delta(eta, i, s)
                    if H2 != gamma2d:
                        continue
                    zeta = eta.flip_index(i, s)
                    c = zeta.code
                    if c in visited or c in avoid:
                        continue
                    visited.add(c)
                    if len(visited) > max_states:
                        raise RuntimeError(
                            "2D saddle-extension search exceeded the state budget"
                        )
                    nxt.append((zeta, H2))
        frontier = nxt
    return frozenset(visited)


@lru_cache(maxsize=None)
def gateway_2d_types(spec2d: Lattice2D, a: int, b: int) -> dict:
    """Map 2D gateway floor code -> type (1, 2 or 3).

    Type 1: wide bands (below-saddle bulk); type 2: saddle-level bulk
    protuberances; type 3: saddle extensions in either spin order.
    """
    out: dict[int, int] = {}
    for c in zeta_2d_codes(spec2d, a, b) | zeta_2d_codes(spec2d, b, a):
        out[c] = 3
    for c in bulk_gamma_2d_codes(spec2d, a, b):
        out[c] = 2
    for v in range(2, spec2d.L - 1):
        for c in regular_2d_codes(spec2d, a, b, v):
            out[c] = 1
    return out


# ---------------------------------------------------------------------------
# 3D builders
# ---------------------------------------------------------------------------

def _orientation_images(sigma: SpinConfig):
    """(label, image) pairs over the allowed-axis-swap closure of sigma.

    Labels are permutation strings over the axes (identity first); only
    swaps between equal extents are generated.
    """
    spec = sigma.spec
    K, L, M = spec.dims
    if K == L == M:
        arr = sigma.array3d
        seen = {}
        for perm in sorted(permutations((0, 1, 2))):
            img = SpinConfig(spec, np.ascontiguousarray(arr.transpose(perm)).ravel())
            label = "".join(map(str, perm))
            if img not in seen.values():
                seen[label] = img
        return list(seen.items())
    out = [("012", sigma)]
    if K == L:
        out.append(("021", sigma.permute("12")))
    elif L == M:
        out.append(("102", sigma.permute("23")))
    return out


def build_regular(
    spec: LatticeSpec, a: int, b: int, P: TorusArc, orientation: str | None = None
) -> SpinConfig:
    """The slab configuration: floors in ``P`` all spin ``b``, rest ``a``."""
    if P.n != spec.M:
        raise ValueError("arc size does not match M")
    arr = np.full((spec.M, spec.L, spec.K), a, dtype=np.int16)
    for m in P.members():
        arr[m - 1] = b
    sigma = SpinConfig(spec, arr.ravel())
    return _apply_orientation(sigma, orientation)


def _apply_orientation(sigma: SpinConfig, orientation: str | None) -> SpinConfig:
    if orientation in (None, "012"):
        return sigma
    try:
        perm = tuple(int(c) for c in orientation)
    except (TypeError, ValueError):
        raise ValueError(f"bad orientation label {orientation!r}") from None
    if sorted(perm) != [0, 1, 2]:
        raise ValueError(f"bad orientation label {orientation!r}")
    spec = sigma.spec
    extents = (spec.M, spec.L, spec.K)  # array3d axis extents
    if tuple(extents[p] for p in perm) != extents:
        raise ValueError(f"orientation {orientation!r} not allowed on this lattice")
    arr = sigma.array3d
    return SpinConfig(spec, np.ascontiguousarray(arr.transpose(perm)).ravel())


def build_canonical(
    spec: LatticeSpec,
    a: int,
    b: int,
    P: TorusArc,
    Q: TorusArc,
    floor,
    orientation: str | None = None,
) -> SpinConfig:
    """One-active-floor configuration: floors in ``P`` are constant ``b``,
    floors outside ``Q`` constant ``a``, and the single floor of ``Q - P``
    carries the given 2D canonical shape (a :class:`FloorShape` or a 2D
    :class:`SpinConfig`)."""
    if not P.precedes(Q):
        raise ValueError("require P < Q with |Q| = |P| + 1")
    spec2d = spec.floor_spec()
    if isinstance(floor, FloorShape):
        eta = build_floor(spec2d, floor)
    elif isinstance(floor, SpinConfig):
        if floor.spec != spec2d:
            raise ValueError("floor configuration lives on the wrong 2D lattice")
        eta = floor
    else:
        raise TypeError("floor must be a FloorShape or 2D SpinConfig")
    if spec.boundary == PERIODIC and eta.code not in canonical_2d_codes(spec2d, a, b):
        raise ValueError("active floor is not a 2D canonical configuration")
    (m0,) = Q.member_set() - P.member_set()
    arr = np.full((spec.M, spec.L, spec.K), a, dtype=np.int16)
    for m in P.members():
        arr[m - 1] = b
    arr[m0 - 1] = eta.spins.reshape(spec.L, spec.K)
    sigma = SpinConfig(spec, arr.ravel())
    return _apply_orientation(sigma, orientation)


# ---------------------------------------------------------------------------
# Recognizers
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CanonicalDescriptor:
    a: int
    b: int
    P: TorusArc
    m0: int
    floor_code: int
    orientation: str


def _axis_aligned_canonical(sigma: SpinConfig):
    """Descriptors (a, b, P, m0, floor_code) of the axis-aligned pattern."""
    spec = sigma.spec
    spec2d = spec.floor_spec()
    floors = sigma.floors()
    mono: list[int | None] = []
    for f in floors:
        v = int(f.spins[0])
        mono.append(v if np.all(f.spins == v) else None)
    actives = [m for m, v in enumerate(mono, start=1) if v is None]
    out = []
    M = spec.M
    boundary = spec.boundary
    if len(actives) > 1:
        return out
    if len(actives) == 1:
        m0 = actives[0]
        eta = floors[m0 - 1]
        spins_present = sorted({v for v in mono if v is not None})
        # candidate (a, b) pairs consistent with the monochrome floors
        pairs = set()
        for a in range(1, spec.q + 1):
            for b in range(1, spec.q + 1):
                if a == b:
                    continue
                if all(v in (a, b) for v in mono if v is not None):
                    pairs.add((a, b))
        for a, b in sorted(pairs):
            if boundary == PERIODIC and eta.code not in canonical_2d_codes(spec2d, a, b):
                continue
            bset = {m for m, v in enumerate(mono, start=1) if v == b}
            aset = {m for m, v in enumerate(mono, start=1) if v == a}
            if bset | aset | {m0} != set(range(1, M + 1)):
                continue
            P = _arc_from_set(M, bset, boundary)
            if P is None:
                continue
            Q = _arc_from_set(M, bset | {m0}, boundary)
            if Q is None or not P.precedes(Q):
                continue
            out.append((a, b, P, m0, int(eta.code)))
        return out
    # no active floor: monochrome or pure slab; emit the slab descriptors
    vals = sorted({v for v in mono if v is not None})
    if len(vals) == 1:
        aa = vals[0]
        for bb in range(1, spec.q + 1):
            if bb != aa:
                out.append(
                    (aa, bb, TorusArc(M, 1, 0), 1, int(monochrome(spec2d, aa).code))
                )
        return out
    if len(vals) == 2:
        x, y = vals
        for a, b in ((x, y), (y, x)):
            bset = {m for m, v in enumerate(mono, start=1) if v == b}
            P = _arc_from_set(M, bset, boundary)
            if P is None:
                continue
            for Q in P.extensions(boundary):
                (m0,) = Q.member_set() - P.member_set()
                out.append((a, b, P, m0, int(monochrome(spec2d, a).code)))
    return out


def _arc_from_set(n: int, s: set, boundary: str) -> TorusArc | None:
    if not s:
        return TorusArc(n, 1, 0)
    if len(s) == n:
        return TorusArc(n, 1, n)
    for start in range(1, n + 1):
        arc = TorusArc(n, start, len(s))
        if arc.member_set() == frozenset(s):
            if boundary == OPEN:
                mem = arc.members()
                if mem != sorted(mem):
                    continue
            return arc
    return None


def is_canonical(sigma: SpinConfig) -> CanonicalDescriptor | None:
    """Invert the one-active-floor construction, up to allowed axis swaps.

    Returns the lexicographically smallest descriptor (by orientation
    label, then spins, then arc) or None.
    """
    candidates = []
    for label, img in _orientation_images(sigma):
        for (a, b, P, m0, floor_code) in _axis_aligned_canonical(img):
            candidates.append(
                CanonicalDescriptor(a, b, P, m0, floor_code, label)
            )
    if not candidates:
        return None
    return min(
        candidates,
        key=lambda d: (d.orientation, d.a, d.b, d.P.length, d.P.start, d.m0),
    )


@dataclass(frozen=True)
class GatewayClass:
    a: int
    b: int
    P: TorusArc
    m0: int
    type: int
    orientation: str


def classify_gateway(sigma: SpinConfig) -> GatewayClass | None:
    """Classify a gateway configuration, or return None.

    A gateway has slab floors except for one active floor belonging to the
    2D gateway family, with the slab count inside the height window
    ``[m_K - 1, M - m_K]``.  The type (1, 2, 3) is inherited from the
    active floor's 2D class; the energy is ``Gamma - 2`` exactly for
    type 1 and ``Gamma`` otherwise.
    """
    spec = sigma.spec
    if not isinstance(spec, LatticeSpec) or spec.boundary != PERIODIC:
        return None
    m_K = mk_mK(spec.K)
    spec2d = spec.floor_spec()
    candidates = []
    for label, img in _orientation_images(sigma):
        floors = img.floors()
        mono = []
        for f in floors:
            v = int(f.spins[0])
            mono.append(v if np.all(f.spins == v) else None)
        actives = [m for m, v in enumerate(mono, start=1) if v is None]
        if len(actives) != 1:
            continue
        m0 = actives[0]
        eta_code = int(floors[m0 - 1].code)
        for a in range(1, spec.q + 1):
            for b in range(1, spec.q + 1):
                if a == b:
                    continue
                if not all(v in (a, b) for v in mono if v is not None):
                    continue
                types = gateway_2d_types(spec2d, a, b)
                if eta_code not in types:
                    continue
                bset = {m for m, v in enumerate(mono, start=1) if v == b}
                P = _arc_from_set(spec.M, bset, spec.boundary)
                if P is None:
                    continue
                Q = _arc_from_set(spec.M, bset | {m0}, spec.boundary)
                if Q is None or not P.precedes(Q):
                    continue
                if not (m_K - 1 <= P.length <= spec.M - m_K):
                    continue
                candidates.append(
                    GatewayClass(a, b, P, m0, types[eta_code], label)
                )
    if not candidates:
        return None
    return min(
        candidates,
        key=lambda g: (g.orientation, g.a, g.b, g.P.length, g.P.start, g.m0),
    )


def generate_gateways(spec: LatticeSpec, a: int, b: int) -> dict:
    """All gateway state codes for the ordered spin pair, keyed by slice.

    ``result[i]`` lists (sorted, deduplicated) base-q codes of gateways
    whose slab count is ``i``, including all allowed axis-swap images.
    """
    if spec.boundary != PERIODIC:
        raise ValueError("gateway families are defined on periodic lattices")
    m_K = mk_mK(spec.K)
    spec2d = spec.floor_spec()
    types = gateway_2d_types(spec2d, a, b)
    floor_cfgs = [SpinConfig.from_code(spec2d, c) for c in sorted(types)]
    out: dict[int, set[int]] = {}
    for i in range(m_K - 1, spec.M - m_K + 1):
        codes: set[int] = set()
        for P in arcs_of_length(spec.M, i, spec.boundary):
            for Q in P.extensions(spec.boundary):
                (m0,) = Q.member_set() - P.member_set()
                base = np.full((spec.M, spec.L, spec.K), a, dtype=np.int16)
                for m in P.members():
                    base[m - 1] = b
                for eta in floor_cfgs:
                    arr = base.copy()
                    arr[m0 - 1] = eta.spins.reshape(spec.L, spec.K)
                    sigma = SpinConfig(spec, arr.ravel())
                    for img in sigma.upsilon_orbit():
                        codes.add(img.code)
        out[i] = sorted(codes)
    return out


# ---------------------------------------------------------------------------
# Paths
# ---------------------------------------------------------------------------

@dataclass
class PathSeq:
    """A single-flip path with its per-step integer energy ledger.

    ``flips`` lists ``(site_index, new_spin)``; ``energies[t]`` is the
    energy after ``t`` flips (``energies[0]`` is the start energy);
    ``deltas[t]`` the change of step ``t+1``.  ``stages`` optionally maps a
    stage name to a ``(start, end)`` slice of the flip sequence.
    """

    start: SpinConfig
    flips: list
    deltas: list
    energies: list
    stages: dict = field(default_factory=dict)

    @property
    def max_energy(self) -> int:
        return max(self.energies)

    def __len__(self) -> int:
        return len(self.flips)

    def configs(self):
        """Yield the path configurations in order (length ``len + 1``)."""
        cur = self.start
        yield cur
        for (i, s) in self.flips:
            cur = cur.flip_index(i, s)
            yield cur

    @property
    def end(self) -> SpinConfig:
        cur = self.start
        for (i, s) in self.flips:
            cur = cur.flip_index(i, s)
        return cur

    def validate(self) -> None:
        """Recompute the ledger from scratch; raises on any mismatch."""
        cur = self.start
        H = energy(cur)
        if H != self.energies[0]:
            raise AssertionError("start energy mismatch")
        for t, (i, s) in enumerate(self.flips):
            d = flip_delta(cur, i, s)
            cur = cur.flip_index(i, s)
            H += d
            if d != self.deltas[t] or H != self.energies[t + 1]:
                raise AssertionError(f"ledger mismatch at step {t}")

    def to_json(self) -> str:
        return json.dumps(
            {
                "start": json.loads(self.start.to_json(compact=True)),
                "steps": [
                    [int(i), int(s), int(d), int(e)]
                    for (i, s), d, e in zip(self.flips, self.deltas, self.energies[1:])
                ],
                "stages": {k: list(v) for k, v in self.stages.items()},
            },
            sort_keys=True,
        )

    @classmethod
    def from_json(cls, text: str) -> "PathSeq":
        obj = json.loads(text)
        start = SpinConfig.from_json(json.dumps(obj["start"]))
        flips = [(i, s) for i, s, _, _ in obj["steps"]]
        deltas = [d for _, _, d, _ in obj["steps"]]
        energies = [energy(start)] + [e for _, _, _, e in obj["steps"]]
        stages = {k: tuple(v) for k, v in obj.get("stages", {}).items()}
        path = cls(start, flips, deltas, energies, stages)
        path.validate()
        return path


def _path_from_flips(start: SpinConfig, flips, stages=None) -> PathSeq:
    deltas = []
    energies = [energy(start)]
    cur = start
    for (i, s) in flips:
        d = flip_delta(cur, i, s)
        cur = cur.flip_index(i, s)
        deltas.append(int(d))
        energies.append(energies[-1] + int(d))
    return PathSeq(start, list(flips), deltas, energies, stages or {})


def _check_growth_order(order, n: int, boundary: str, what: str) -> None:
    if sorted(order) != list(range(1, n + 1)):
        raise ValueError(f"{what} order must be a permutation of 1..{n}")
    for t in range(1, n + 1):
        prefix = set(order[:t])
        if _arc_from_set(n, prefix, boundary) is None:
            raise ValueError(f"{what} order prefix {sorted(prefix)} is not connected")


def canonical_path(
    spec: LatticeSpec,
    a: int,
    b: int,
    floors_order=None,
    rows_order=None,
    cols_order=None,
) -> PathSeq:
    """A canonical growth path from the constant-``a`` to the constant-``b``
    configuration.

    Floors are converted one at a time (default bottom-up), each via a 2D
    growth: rows in order (default increasing), each row filled column by
    column (default increasing).  Every growth order must have connected
    prefixes; on open boundaries the defaults anchor growth at a corner,
    which is what realizes the open-box barrier value.  The path has
    ``K*L*M`` single-flip steps.
    """
    if a == b:
        raise ValueError("need two distinct spins")
    K, L, M = spec.dims
    floors_order = list(floors_order or range(1, M + 1))
    rows_order = list(rows_order or range(1, L + 1))
    cols_order = list(cols_order or range(1, K + 1))
    _check_growth_order(floors_order, M, spec.boundary, "floor")
    _check_growth_order(rows_order, L, spec.boundary, "row")
    _check_growth_order(cols_order, K, spec.boundary, "column")
    start = monochrome(spec, a)
    flips = []
    for m in floors_order:
        for l in rows_order:
            for k in cols_order:
                idx = (k - 1) + K * (l - 1) + K * L * (m - 1)
                flips.append((idx, b))
    return _path_from_flips(start, flips)


def escape_path(spec: LatticeSpec, a: int, b: int, n: int) -> PathSeq:
    """The explicit sub-barrier path dissolving a width-``n`` b-slab.

    Starts from the slab configuration with floors ``1..n`` of spin ``b``
    and erases it in three stages (pinned flip orders):

    * stage 1 -- the block ``k=1..K`` (slowest), ``l=1..n``, ``m=1..n``;
    * stage 2 -- rows ``l=n+1..L-1``, each as ``k=1..K`` over ``m=1..n``;
    * stage 3 -- the final row ``l=L`` in the same inner order.

    For ``1 <= n <= isqrt(K) - 1`` the peak energy is
    ``2KL + 2n^2 + 2n - 2``, strictly below the barrier.
    """
    if spec.boundary != PERIODIC:
        raise ValueError("the escape path is defined on periodic lattices")
    K, L, M = spec.dims
    if not 1 <= n <= math.isqrt(K) - 1:
        raise ValueError(f"require 1 <= n <= isqrt(K)-1 = {math.isqrt(K) - 1}")
    arr = np.full((M, L, K), a, dtype=np.int16)
    arr[:n] = b
    start = SpinConfig(spec, arr.ravel())

    def idx(k, l, m):
        return (k - 1) + K * (l - 1) + K * L * (m - 1)

    flips = []
    stages = {}
    s0 = len(flips)
    for k in range(1, K + 1):
        for l in range(1, n + 1):
            for m in range(1, n + 1):
                flips.append((idx(k, l, m), a))
    stages["stage1"] = (s0, len(flips))
    s0 = len(flips)
    for l in range(n + 1, L):
        for k in range(1, K + 1):
            for m in range(1, n + 1):
                flips.append((idx(k, l, m), a))
    stages["stage2"] = (s0, len(flips))
    s0 = len(flips)
    for k in range(1, K + 1):
        for m in range(1, n + 1):
            flips.append((idx(k, L, m), a))
    stages["stage3"] = (s0, len(flips))
    return _path_from_flips(start, flips, stages)


# ---------------------------------------------------------------------------
# Transition-path recognizer
# ---------------------------------------------------------------------------

def is_transition_path(path: PathSeq, typical) -> bool:
    """True when the path starts in the gateway-avoiding closure of the
    A-grounds, ends in that of the B-grounds, and every interior
    configuration lies in the saddle corridor.

    ``typical`` is a ``landscape.TypicalSets`` result (the membership
    oracles are only available on enumerable instances).
    """
    space = typical.space
    from .landscape import neighborhood  # local import to avoid a cycle

    grounds = space.ground_states()
    S_A = [grounds[x] for x in typical.A]
    S_B = [grounds[x] for x in typical.B]
    start_zone = neighborhood(space, S_A, typical.gamma, avoid=typical.G_mask).mask
    end_zone = neighborhood(space, S_B, typical.gamma, avoid=typical.G_mask).mask
    states = [space.index_of(c) for c in path.configs()]
    if len(states) < 2:
        return False
    if not (start_zone[states[0]] and end_zone[states[-1]]):
        return False
    return all(typical.H_AB[s] for s in states[1:-1])
