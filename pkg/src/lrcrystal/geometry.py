"""Physical lattices and the embedding of integer cells into real space."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .zcell import ZCell, ZVector, reduce

SQRT3 = math.sqrt(3.0)


class UnknownLattice(KeyError):
    pass


class InvalidLattice(ValueError):
    pass


@dataclass(frozen=True)
class LatticeSpec:
    name: str
    t1: tuple[float, float]
    t2: tuple[float, float]
    basis: tuple[tuple[float, float], ...]

    def __post_init__(self):
        if abs(self.t1[0] * self.t2[1] - self.t1[1] * self.t2[0]) < 1e-12:
            raise InvalidLattice(f"{self.name}: translation vectors are parallel")
        pts = np.asarray(self.basis, dtype=float)
        for a in range(len(pts)):
            for b in range(a):
                # compare modulo the elementary translations
                d = pts[a] - pts[b]
                for p in (-1, 0, 1):
                    for q in (-1, 0, 1):
                        v = d + p * np.asarray(self.t1) + q * np.asarray(self.t2)
                        if np.hypot(*v) < 1e-9:
                            raise InvalidLattice(f"{self.name}: basis sites {b} and {a} coincide")

    @property
    def m(self) -> int:
        return len(self.basis)

    def position(self, z: ZVector, k: int = 0) -> np.ndarray:
        """Real-space position of basis site ``k`` in elementary cell ``z``."""
        return (z[0] * np.asarray(self.t1) + z[1] * np.asarray(self.t2)
                + np.asarray(self.basis[k]))

    def to_dict(self) -> dict:
        return {"name": self.name, "t1": list(self.t1), "t2": list(self.t2),
                "basis": [list(b) for b in self.basis]}


def _triangular() -> LatticeSpec:
    return LatticeSpec("triangular", (1.0, 0.0), (0.5, SQRT3 / 2), ((0.0, 0.0),))


def _kagome_site() -> LatticeSpec:
    return LatticeSpec(
        "kagome_site", (2.0, 0.0), (1.0, SQRT3),
        ((0.0, 0.0), (0.5, SQRT3 / 2), (-0.5, SQRT3 / 2)),
    )


def _kagome_link() -> LatticeSpec:
    h = SQRT3 / 2
    # sites sit on the bond midpoints of a kagome lattice with bond length 2
    return LatticeSpec(
        "kagome_link", (4.0, 0.0), (2.0, 2 * SQRT3),
        ((0.5, h), (-0.5, h), (0.0, SQRT3), (-0.5, -h), (0.5, -h), (0.0, -SQRT3)),
    )


BUILTIN = {
    "triangular": _triangular,
    "kagome_site": _kagome_site,
    "kagome_link": _kagome_link,
}


def builtin_lattice(name: str) -> LatticeSpec:
    try:
        return BUILTIN[name]()
    except KeyError:
        raise UnknownLattice(name) from None


def load_lattice(path: str | Path) -> LatticeSpec:
    """Read a lattice definition file with keys ``t1``, ``t2``, ``basis``, ``name``."""
    data = json.loads(Path(path).read_text())
    try:
        return LatticeSpec(
            str(data["name"]),
            tuple(float(x) for x in data["t1"]),
            tuple(float(x) for x in data["t2"]),
            tuple(tuple(float(x) for x in b) for b in data["basis"]),
        )
    except KeyError as exc:
        raise InvalidLattice(f"{path}: missing key {exc}") from None


def get_lattice(name_or_path: str) -> LatticeSpec:
    if name_or_path in BUILTIN:
        return builtin_lattice(name_or_path)
    if Path(name_or_path).exists():
        return load_lattice(name_or_path)
    raise UnknownLattice(name_or_path)


@dataclass(frozen=True, eq=False)
class EmbeddedCell:
    """A z-cell placed on a lattice.

    Sites are ordered rep-major, basis-minor: site ``l*m + k`` is basis site
    ``k`` of representative ``l``.
    """

    zcell: ZCell
    lattice: LatticeSpec
    T1: np.ndarray
    T2: np.ndarray
    sites: np.ndarray

    @property
    def p(self) -> int:
        return len(self.sites)

    @property
    def key(self) -> str:
        return self.zcell.key

    def site_label(self, i: int) -> tuple[ZVector, int]:
        m = self.lattice.m
        return self.zcell.reps[i // m], i % m

    def translation_perms(self) -> list[np.ndarray]:
        """Site permutations induced by translating the pattern by each representative.

        ``perm[i]`` is the index of the site that site ``i`` is mapped to.
        """
        hnf = self.zcell.pair
        m = self.lattice.m
        lookup = {(reduce(hnf, z), k): l * m + k
                  for l, z in enumerate(self.zcell.reps) for k in range(m)}
        perms = []
        for shift in self.zcell.reps:
            perm = np.empty(self.p, dtype=np.int64)
            for l, z in enumerate(self.zcell.reps):
                w = reduce(hnf, (z[0] + shift[0], z[1] + shift[1]))
                for k in range(m):
                    perm[l * m + k] = lookup[(w, k)]
            perms.append(perm)
        return perms


def embed(spec: LatticeSpec, cell: ZCell) -> EmbeddedCell:
    t1 = np.asarray(spec.t1, dtype=float)
    t2 = np.asarray(spec.t2, dtype=float)
    (z11, z12), (z21, z22) = cell.pair
    T1 = z11 * t1 + z12 * t2
    T2 = z21 * t1 + z22 * t2
    sites = np.array([spec.position(z, k) for z in cell.reps for k in range(spec.m)],
                     dtype=float)
    return EmbeddedCell(cell, spec, T1, T2, sites.reshape(-1, 2))


def supercell(cell: ZCell, n1: int = 2, n2: int = 1) -> ZCell:
    """Cell of the sublattice spanned by ``n1*Z1`` and ``n2*Z2``."""
    from .zcell import representatives

    (z1, z2) = cell.pair
    return representatives(((n1 * z1[0], n1 * z1[1]), (n2 * z2[0], n2 * z2[1])))


def tile_occupation(small: EmbeddedCell, big: EmbeddedCell, occ) -> np.ndarray:
    """Copy a pattern from ``small`` onto a super-cell ``big`` of the same lattice."""
    from .zcell import contains

    hnf = small.zcell.pair
    if not all(contains(hnf, z) for z in big.zcell.pair):
        raise ValueError(f"cell {big.key} is not a super-cell of {small.key}")
    m = small.lattice.m
    lookup = {(reduce(hnf, z), k): l * m + k
              for l, z in enumerate(small.zcell.reps) for k in range(m)}
    occ = np.asarray(occ)
    out = np.empty(big.p, dtype=occ.dtype)
    for l, z in enumerate(big.zcell.reps):
        w = reduce(hnf, z)
        for k in range(m):
            out[l * m + k] = occ[lookup[(w, k)]]
    return out
