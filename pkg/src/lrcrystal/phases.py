"""Phase identification: primitive periods and symmetry-canonical patterns.

Two occupations found on different cells describe the same phase when one is
mapped onto the other by a lattice translation or a point-group operation.
The canonical label is the lexicographic minimum over all such images of the
pattern written on its primitive cell.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .geometry import EmbeddedCell, LatticeSpec
from .zcell import canonicalize_pair, reduce, representatives


@dataclass(frozen=True)
class SymmetryOp:
    """Integer form of ``r -> R r + tau``: ``(z, k) -> (z @ M + shift[k], target[k])``."""

    M: tuple[tuple[int, int], tuple[int, int]]
    target: tuple[int, ...]
    shift: tuple[tuple[int, int], ...]

    def apply(self, z, k):
        (a, b), (c, d) = self.M
        s = self.shift[k]
        return (z[0] * a + z[1] * c + s[0], z[0] * b + z[1] * d + s[1]), self.target[k]

    def apply_pair(self, pair):
        (a, b), (c, d) = self.M
        return tuple((z[0] * a + z[1] * c, z[0] * b + z[1] * d) for z in pair)


def _orthogonal_candidates():
    mats = []
    for n in (4, 6):
        for r in range(n):
            t = 2 * math.pi * r / n
            c, s = math.cos(t), math.sin(t)
            mats.append(np.array([[c, -s], [s, c]]))
            mats.append(np.array([[c, s], [s, -c]]))
    return mats


def _to_int(v, tol=1e-7):
    r = np.rint(v)
    if np.abs(v - r).max() > tol:
        return None
    return tuple(int(x) for x in r)


@lru_cache(maxsize=None)
def _symmetry_ops_cached(spec: LatticeSpec) -> tuple[SymmetryOp, ...]:
    T = np.array([spec.t1, spec.t2], dtype=float)  # rows
    Tinv = np.linalg.inv(T)
    basis = np.asarray(spec.basis, dtype=float)
    m = spec.m
    ops = {}
    for R in _orthogonal_candidates():
        Mf = (R @ T.T).T @ Tinv  # rows: R t_i in lattice coordinates
        M = _to_int(Mf.ravel())
        if M is None:
            continue
        M = ((M[0], M[1]), (M[2], M[3]))
        if abs(M[0][0] * M[1][1] - M[0][1] * M[1][0]) != 1:
            continue
        for k0 in range(m):
            tau = basis[k0] - R @ basis[0]
            target, shift = [], []
            for k in range(m):
                img = R @ basis[k] + tau
                found = None
                for kk in range(m):
                    c = _to_int((img - basis[kk]) @ Tinv)
                    if c is not None:
                        found = (kk, c)
                        break
                if found is None:
                    break
                target.append(found[0])
                shift.append(found[1])
            else:
                if sorted(target) == list(range(m)):
                    op = SymmetryOp(M, tuple(target), tuple(shift))
                    ops[(op.M, op.target)] = op
    return tuple(ops.values())


def symmetry_ops(spec: LatticeSpec) -> tuple[SymmetryOp, ...]:
    """Point-group operations of the lattice, each combined with a suitable translation.

    Operations that differ only by a lattice translation are kept once.
    """
    return _symmetry_ops_cached(spec)


def hnf_of_generators(vectors) -> tuple:
    """HNF pair of the integer lattice spanned by ``vectors`` (rank 2 assumed)."""
    vecs = [tuple(int(x) for x in v) for v in vectors if any(v)]
    # reduce on the second coordinate with Euclid, then the first
    rows = [list(v) for v in vecs]
    c_row = None
    while True:
        nz = [r for r in rows if r[1] != 0]
        if len(nz) <= 1:
            break
        nz.sort(key=lambda r: abs(r[1]))
        piv = nz[0]
        for r in nz[1:]:
            q = r[1] // piv[1]
            r[0] -= q * piv[0]
            r[1] -= q * piv[1]
        rows = [r for r in rows if any(r)]
    nz = [r for r in rows if r[1] != 0]
    c_row = nz[0] if nz else None
    a = 0
    for r in rows:
        if r[1] == 0:
            a = math.gcd(a, r[0])
    if c_row is None or a == 0:
        raise ValueError("generators do not span a rank-2 lattice")
    return canonicalize_pair(((a, 0), tuple(c_row)))


def _site_lookup(cell_pair, reps, m):
    return {(reduce(cell_pair, z), k): l * m + k for l, z in enumerate(reps) for k in range(m)}


def primitive(cell: EmbeddedCell, occ) -> tuple[tuple, tuple[int, ...]]:
    """Smallest period of the pattern: ``(hnf pair, occupation on that cell's sites)``."""
    occ = np.asarray(occ, dtype=np.int64)
    perms = cell.translation_perms()
    gens = list(cell.zcell.pair)
    for shift, perm in zip(cell.zcell.reps, perms):
        if any(shift) and np.array_equal(occ[perm], occ):
            gens.append(shift)
    pair = hnf_of_generators(gens)
    prim = representatives(pair)
    m = cell.lattice.m
    big = _site_lookup(cell.zcell.pair, cell.zcell.reps, m)
    out = tuple(int(occ[big[(reduce(cell.zcell.pair, z), k)]]) for z in prim.reps for k in range(m))
    return pair, out


def _translation_min(pair, occ: tuple, m: int) -> tuple:
    reps = representatives(pair).reps
    lookup = _site_lookup(pair, reps, m)
    best = None
    for s in reps:
        cand = tuple(occ[lookup[(reduce(pair, (z[0] + s[0], z[1] + s[1])), k)]]
                     for z in reps for k in range(m))
        if best is None or cand < best:
            best = cand
    return best


def canonical_form(cell: EmbeddedCell, occ) -> tuple:
    """Symmetry-invariant key of the periodic pattern."""
    pair, prim = primitive(cell, occ)
    m = cell.lattice.m
    reps = representatives(pair).reps
    best = None
    for op in symmetry_ops(cell.lattice):
        new_pair = canonicalize_pair(op.apply_pair(pair))
        new_reps = representatives(new_pair).reps
        lookup = _site_lookup(new_pair, new_reps, m)
        img = [0] * len(prim)
        for l, z in enumerate(reps):
            for k in range(m):
                z2, k2 = op.apply(z, k)
                img[lookup[(reduce(new_pair, z2), k2)]] = prim[l * m + k]
        cand = (new_pair, _translation_min(new_pair, tuple(img), m))
        if best is None or cand < best:
            best = cand
    return best


@dataclass(frozen=True)
class PhaseLabel:
    filling: Fraction
    primitive_sites: int
    occupations: tuple[int, ...]  # sorted distinct nonzero occupations
    form: tuple

    @property
    def name(self) -> str:
        occ = ",".join(str(o) for o in self.occupations) or "0"
        return f"f={self.filling} p={self.primitive_sites} n={{{occ}}}"

    def short_id(self) -> str:
        import hashlib

        return hashlib.sha1(repr(self.form).encode()).hexdigest()[:10]

    def to_dict(self) -> dict:
        pair, occ = self.form
        return {"filling": str(self.filling), "primitive_sites": self.primitive_sites,
                "occupations": list(self.occupations), "pair": [list(v) for v in pair],
                "pattern": list(occ), "id": self.short_id(), "name": self.name}


def label(cell: EmbeddedCell, occ) -> PhaseLabel:
    form = canonical_form(cell, occ)
    occ = np.asarray(occ)
    f = Fraction(int(occ.sum()), len(occ))
    nz = tuple(sorted({int(x) for x in occ if x > 0}))
    return PhaseLabel(f, len(form[1]), nz, form)


def occupied_superlattice_index(cell: EmbeddedCell, occ) -> int | None:
    """Index of the Bravais lattice formed by occupied sites, if they form one.

    Only defined for single-site bases. Returns ``None`` when the occupied
    sites are not a lattice (for example two inequivalent occupied sites).
    """
    if cell.lattice.m != 1:
        raise ValueError("defined for one-site bases only")
    pair, prim = primitive(cell, occ)
    reps = representatives(pair).reps
    occupied = [z for z, n in zip(reps, prim) if n > 0]
    if len(occupied) != 1:
        return None
    return len(prim)
