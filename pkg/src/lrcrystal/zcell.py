"""Unit cells on the integer lattice Z^2.

A unit cell is fixed by a rank-2 sublattice of Z^2. Each sublattice is stored
through its Hermite normal form basis ``((a, 0), (b, c))`` with ``a, c > 0``
and ``0 <= b < a``; the representatives are the integer points of one cell.
Everything in this module is exact integer arithmetic.
"""
from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass, field
from math import gcd
from typing import Iterable, Iterator, Sequence

ZVector = tuple[int, int]
ZVectorPair = tuple[ZVector, ZVector]

# 4-neighbourhood plus the (1,1) diagonal, so triangular adjacency is representable
NEIGHBOURS: tuple[ZVector, ...] = ((1, 0), (0, 1), (-1, 0), (0, -1), (1, 1), (-1, -1))


class ZeroDeterminant(ValueError):
    """Raised when two z-vectors do not span a two-dimensional lattice."""


def det(pair: ZVectorPair) -> int:
    (p1, q1), (p2, q2) = pair
    return p1 * q2 - q1 * p2


def _xgcd(a: int, b: int) -> tuple[int, int, int]:
    """Return ``(g, x, y)`` with ``a*x + b*y == g == gcd(a, b) >= 0``."""
    x0, y0, x1, y1 = 1, 0, 0, 1
    while b:
        q, a, b = a // b, b, a % b
        x0, x1 = x1, x0 - q * x1
        y0, y1 = y1, y0 - q * y1
    if a < 0:
        a, x0, y0 = -a, -x0, -y0
    return a, x0, y0


def canonicalize_pair(pair: ZVectorPair) -> ZVectorPair:
    """Hermite normal form basis of the sublattice spanned by ``pair``.

    Two pairs generate the same sublattice exactly when their canonical forms
    coincide. The result is ``((a, 0), (b, c))`` with ``a*c == |det(pair)|``.
    """
    d = det(pair)
    if d == 0:
        raise ZeroDeterminant(f"z-vectors {pair} are linearly dependent")
    (p1, q1), (p2, q2) = pair
    # unimodular row operations clearing the second coordinate of the first row
    g, x, y = _xgcd(q1, q2)
    # rows: r_b = x*r1 + y*r2 has second coordinate g; r_a has second coordinate 0
    b_row = (x * p1 + y * p2, g)
    a_row = ((q2 // g) * p1 - (q1 // g) * p2, 0)
    a = abs(a_row[0])
    c = g
    b = b_row[0] % a
    # the lattice contains (a, 0) and (b_row0, c); reduce b_row0 modulo a
    return ((a, 0), (b, c))


def index(pair: ZVectorPair) -> int:
    return abs(det(pair))


def contains(pair: ZVectorPair, z: ZVector) -> bool:
    """True if ``z`` lies in the sublattice generated by ``pair``."""
    (a, _), (b, c) = canonicalize_pair(pair)
    s, r = divmod(z[1], c)
    if r:
        return False
    return (z[0] - s * b) % a == 0


def reduce(hnf: ZVectorPair, z: ZVector) -> ZVector:
    """Canonical coset representative of ``z`` modulo the HNF sublattice.

    The result lies in ``[0, a) x [0, c)``.
    """
    (a, _), (b, c) = hnf
    s = z[1] // c
    y = z[1] - s * c
    x = (z[0] - s * b) % a
    return (x, y)


@dataclass(frozen=True)
class ZCell:
    """A canonical sublattice of Z^2 together with its representatives."""

    pair: ZVectorPair
    reps: tuple[ZVector, ...] = field(default=(), compare=False)

    @property
    def index(self) -> int:
        return index(self.pair)

    @property
    def key(self) -> str:
        (a, _), (b, c) = self.pair
        return f"{a}_{b}_{c}"

    def to_record(self) -> dict:
        return {
            "pair": [list(self.pair[0]), list(self.pair[1])],
            "index": self.index,
            "reps": [list(r) for r in self.reps],
        }

    @classmethod
    def from_record(cls, rec: dict) -> "ZCell":
        z1, z2 = rec["pair"]
        return cls((tuple(z1), tuple(z2)), tuple(tuple(r) for r in rec["reps"]))


def hex_extent(m: int) -> list[ZVector]:
    """The hexagonal extent set: ``|i| <= m``, ``max(-m-i, -m) <= j <= min(m-i, m)``."""
    out = []
    for i in range(-m, m + 1):
        for j in range(max(-m - i, -m), min(m - i, m) + 1):
            out.append((i, j))
    return out


def hex_extent_endpoints(m: int) -> list[ZVector]:
    """Alternative literal reading of the extent set with ``i`` in ``{-m, m}`` only."""
    out = []
    for i in sorted({-m, m}):
        for j in range(max(-m - i, -m), min(m - i, m) + 1):
            out.append((i, j))
    return out


def box_extent(m: int) -> list[ZVector]:
    """Square extent set ``|i| <= m``, ``|j| <= m``."""
    return [(i, j) for i in range(-m, m + 1) for j in range(-m, m + 1)]


def extent_set(name: str, m: int) -> list[ZVector]:
    """Look up an extent set by family letter (``B`` hexagonal, ``A`` square)."""
    kinds = {"B": hex_extent, "A": box_extent, "B-endpoints": hex_extent_endpoints}
    try:
        return kinds[name](m)
    except KeyError:
        raise ValueError(f"unknown extent family {name!r}") from None


def enumerate_pairs(extent: Iterable[ZVector]) -> list[ZCell]:
    """One canonical cell per sublattice having a basis inside ``extent``.

    Sorted by index, then by the HNF pair.
    """
    vecs = sorted(set((int(p), int(q)) for p, q in extent))
    seen: set[ZVectorPair] = set()
    for i, z1 in enumerate(vecs):
        for z2 in vecs[i + 1:]:
            if det((z1, z2)) == 0:
                continue
            seen.add(canonicalize_pair((z1, z2)))
    return [ZCell(p) for p in sorted(seen, key=lambda p: (index(p), p))]


def representatives(pair: ZVectorPair) -> ZCell:
    """Edge-connected coset representatives grown breadth-first from the origin."""
    hnf = canonicalize_pair(pair)
    n = index(hnf)
    taken = {reduce(hnf, (0, 0))}
    reps = [(0, 0)]
    queue = deque([(0, 0)])
    while len(reps) < n:
        z = queue.popleft()
        for dz in sorted(NEIGHBOURS):
            w = (z[0] + dz[0], z[1] + dz[1])
            key = reduce(hnf, w)
            if key in taken:
                continue
            taken.add(key)
            reps.append(w)
            queue.append(w)
    return ZCell(hnf, tuple(reps))


def enumerate_cells(extent: Iterable[ZVector]) -> list[ZCell]:
    return [representatives(c.pair) for c in enumerate_pairs(extent)]


def divisor_sum(n: int) -> int:
    return sum(d for d in range(1, n + 1) if n % d == 0)


def hnf_pairs_of_index(n: int) -> Iterator[ZVectorPair]:
    """All HNF bases of index ``n``; there are ``divisor_sum(n)`` of them."""
    for a in range(1, n + 1):
        if n % a:
            continue
        c = n // a
        for b in range(a):
            yield ((a, 0), (b, c))


def dump_cells(cells: Sequence[ZCell], fh, header: dict | None = None) -> None:
    """Write cells as JSON lines; an optional header record goes first."""
    if header is not None:
        fh.write(json.dumps({"header": header}, sort_keys=True) + "\n")
    for c in cells:
        fh.write(json.dumps(c.to_record(), sort_keys=True) + "\n")


def load_cells(fh) -> list[ZCell]:
    out = []
    for line in fh:
        line = line.strip()
        if not line:
            continue
        rec = json.loads(line)
        if "header" in rec:
            continue
        out.append(ZCell.from_record(rec))
    return out


def cell_from_key(key: str) -> ZCell:
    a, b, c = (int(x) for x in key.split("_"))
    return representatives(((a, 0), (b, c)))


def sublattice_gcd(pair: ZVectorPair) -> int:
    """Content of the pair (gcd of all entries); 1 for primitive sublattices."""
    (p1, q1), (p2, q2) = pair
    return gcd(gcd(p1, q1), gcd(p2, q2))
