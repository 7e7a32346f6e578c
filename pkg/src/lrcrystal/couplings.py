"""Resummed couplings of a unit cell and their extrapolation to infinite cutoff.

For sites ``i, j`` of a cell with translations ``T1, T2`` the cutoff-``K`` sum is

    V_K(i, j) = sum_{k,l=-K..K} |r_i - r_j + k T1 - l T2|^-alpha

(the zero-distance term dropped for ``i == j``). Its tail decays like
``K^(2-alpha)``; a straight-line fit of ``V_K`` against that abscissa gives the
infinite-cutoff value as intercept.
"""
from __future__ import annotations

import hashlib
import json
import logging
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from . import kernels
from .geometry import EmbeddedCell, LatticeSpec, embed
from .zcell import ZCell, reduce

log = logging.getLogger(__name__)

DEFAULT_K = (128, 256, 512, 1024)
# the 1/K tail of alpha < 4 needs longer cutoffs to reach the residual tolerance
DEFAULT_K_SLOW_DECAY = (256, 512, 1024, 2048)
ALPHA_MIN = 2.5


class DegenerateGeometry(ValueError):
    pass


class SingularFit(ValueError):
    pass


class InvalidParameters(ValueError):
    pass


class Unconverged(UserWarning):
    pass


def check_alpha(alpha: float) -> None:
    if not alpha > 2:
        raise InvalidParameters(
            f"alpha={alpha}: weak long-range interactions require alpha > 2 "
            "(the lattice dimension); the energy per site is not extensive otherwise")
    if alpha <= ALPHA_MIN:
        raise InvalidParameters(
            f"alpha={alpha}: direct resummation is unreliable for alpha <= {ALPHA_MIN}; "
            "weak long-range tails this slow need a dedicated resummation scheme")


@dataclass(frozen=True)
class ResumParams:
    alpha: float
    K_schedule: tuple[int, ...] = ()
    fit_points: int = 3
    tol: float = 1e-10
    # abscissa is (K + shift)^(2 - alpha); 0.5 absorbs the box-edge term
    shift: float = 0.5

    def __post_init__(self):
        check_alpha(self.alpha)
        if not self.K_schedule:
            sched = DEFAULT_K if self.alpha >= 4 else DEFAULT_K_SLOW_DECAY
            object.__setattr__(self, "K_schedule", sched)
        ks = tuple(int(k) for k in self.K_schedule)
        object.__setattr__(self, "K_schedule", ks)
        if any(k <= 0 for k in ks) or any(b <= a for a, b in zip(ks, ks[1:])):
            raise InvalidParameters(f"K_schedule must be positive and strictly increasing: {ks}")
        if not 2 <= self.fit_points <= len(ks):
            raise InvalidParameters(
                f"need 2 <= fit_points <= len(K_schedule), got {self.fit_points}")

    def key(self) -> str:
        ks = "-".join(str(k) for k in self.K_schedule)
        return f"a{self.alpha:g}_K{ks}_f{self.fit_points}_s{self.shift:g}"


def _box_sums(d, T1, T2, alpha, Ks, skip_origin):
    shells, min_r2 = kernels.shell_sums(
        float(d[0]), float(d[1]), float(T1[0]), float(T1[1]), float(T2[0]), float(T2[1]),
        float(alpha), int(max(Ks)), bool(skip_origin))
    if math.sqrt(min_r2) < 1e-9:
        raise DegenerateGeometry(f"a displacement of length {math.sqrt(min_r2):.3g} entered the sum")
    # smallest (outermost) shells first
    return [math.fsum(shells[:K + 1][::-1].tolist()) for K in Ks]


def resum(cell: EmbeddedCell, i: int, j: int, alpha: float, K: int) -> float:
    """Cutoff-``K`` resummed coupling between sites ``i`` and ``j`` of ``cell``."""
    if K < 0:
        raise ValueError("K must be nonnegative")
    d = cell.sites[i] - cell.sites[j]
    return _box_sums(d, cell.T1, cell.T2, alpha, [K], i == j)[0]


def extrapolate(values: Sequence[tuple[int, float]], alpha: float,
                fit_points: int | None = None, shift: float = 0.5) -> tuple[float, float]:
    """Intercept and max residual of the line ``value ~ (K + shift)^(2 - alpha)``.

    Uses the ``fit_points`` largest cutoffs (all points by default).
    """
    pts = sorted((int(k), float(v)) for k, v in values)
    if len(pts) < 2:
        raise SingularFit("need at least two points")
    if fit_points is not None:
        pts = pts[-fit_points:]
    x = np.array([(k + shift) ** (2.0 - alpha) for k, _ in pts])
    y = np.array([v for _, v in pts])
    if np.ptp(x) == 0.0:
        raise SingularFit("all abscissae coincide")
    A = np.column_stack([np.ones_like(x), x])
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    return float(coef[0]), float(np.abs(A @ coef - y).max())


def reduced_basis(T1: np.ndarray, T2: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Lagrange-Gauss reduction of a real two-dimensional basis."""
    a, b = np.array(T1, float), np.array(T2, float)
    if a @ a > b @ b:
        a, b = b, a
    while True:
        mu = round(float(a @ b) / float(a @ a))
        b = b - mu * a
        if b @ b >= a @ a - 1e-12:
            return a, b
        a, b = b, a


def nearest_image(d: np.ndarray, T1: np.ndarray, T2: np.ndarray) -> np.ndarray:
    M = np.column_stack([T1, T2])
    c = np.round(np.linalg.solve(M, d))
    best = None
    for u in (-1, 0, 1):
        for v in (-1, 0, 1):
            w = d - (c[0] + u) * T1 - (c[1] + v) * T2
            if best is None or w @ w < best @ best - 1e-12:
                best = w
    return best


@dataclass(eq=False)
class CouplingMatrix:
    cell: EmbeddedCell
    params: ResumParams
    V_inf: np.ndarray
    fit_residual: np.ndarray
    converged: bool = True
    meta: dict = field(default_factory=dict)

    @property
    def alpha(self) -> float:
        return self.params.alpha

    @property
    def p(self) -> int:
        return self.V_inf.shape[0]

    @property
    def max_residual(self) -> float:
        return float(self.fit_residual.max())

    def row_sums(self) -> np.ndarray:
        return self.V_inf.sum(axis=1)


def displacement_classes(cell: EmbeddedCell) -> dict:
    """Group site pairs by their displacement modulo the cell translations.

    Returns ``{class_key: [(i, j), ...]}``; ``(i, j)`` and ``(j, i)`` share a class.
    """
    hnf = cell.zcell.pair
    labels = [cell.site_label(i) for i in range(cell.p)]
    classes: dict = {}
    for i, (zi, ki) in enumerate(labels):
        for j, (zj, kj) in enumerate(labels):
            fwd = (reduce(hnf, (zi[0] - zj[0], zi[1] - zj[1])), ki, kj)
            bwd = (reduce(hnf, (zj[0] - zi[0], zj[1] - zi[1])), kj, ki)
            classes.setdefault(min(fwd, bwd), []).append((i, j))
    return classes


def coupling_matrix(cell: EmbeddedCell, params: ResumParams) -> CouplingMatrix:
    """Extrapolated resummed couplings for every site pair of ``cell``.

    Each displacement class is summed once (in the Gauss-reduced basis of the
    cell translations, from the nearest image), so the matrix is exactly
    symmetric and translation invariant.
    """
    p = cell.p
    V = np.zeros((p, p))
    R = np.zeros((p, p))
    T1, T2 = reduced_basis(cell.T1, cell.T2)
    Ks = params.K_schedule
    for members in displacement_classes(cell).values():
        i, j = min(members)
        d = nearest_image(cell.sites[i] - cell.sites[j], T1, T2)
        sums = _box_sums(d, T1, T2, params.alpha, Ks, i == j)
        v, r = extrapolate(list(zip(Ks, sums)), params.alpha, params.fit_points, params.shift)
        for a, b in members:
            V[a, b] = v
            R[a, b] = r
    scale = float(np.abs(V).max()) if p else 1.0
    converged = bool(R.max() <= params.tol * max(scale, 1e-300)) if p else True
    cm = CouplingMatrix(cell, params, V, R, converged)
    if not converged:
        warnings.warn(f"cell {cell.key} on {cell.lattice.name}: max fit residual "
                      f"{R.max():.3g} exceeds {params.tol:g} relative", Unconverged, stacklevel=2)
    return cm


def self_coupling_sum(lattice: LatticeSpec, params: ResumParams, k: int = 0) -> float:
    """Interaction sum over the whole lattice seen from basis site ``k``.

    This is the row sum of the primitive-cell coupling matrix; for a lattice
    with one site per cell it is the single-site self-coupling.
    """
    from .zcell import representatives

    cm = coupling_matrix(embed(lattice, representatives(((1, 0), (0, 1)))), params)
    return float(math.fsum(cm.V_inf[k].tolist()))


# -- disk cache ---------------------------------------------------------------

class CouplingCache:
    """JSON-lines store of coupling matrices, one file per lattice and resummation setup."""

    def __init__(self, directory: str | Path):
        self.dir = Path(directory)
        self.dir.mkdir(parents=True, exist_ok=True)
        self._mem: dict = {}
        self.hits = 0
        self.misses = 0

    def path(self, lattice: LatticeSpec, params: ResumParams) -> Path:
        tag = hashlib.sha1(json.dumps(lattice.to_dict(), sort_keys=True).encode()).hexdigest()[:8]
        return self.dir / f"couplings_{lattice.name}_{tag}_{params.key()}.jsonl"

    def _load(self, lattice: LatticeSpec, params: ResumParams) -> dict:
        path = self.path(lattice, params)
        if path in self._mem:
            return self._mem[path]
        table = {}
        if path.exists():
            with path.open() as fh:
                for line in fh:
                    if line.strip():
                        rec = json.loads(line)
                        table[tuple(map(tuple, rec["pair"]))] = rec
        self._mem[path] = table
        return table

    def get(self, cell: EmbeddedCell, params: ResumParams) -> CouplingMatrix | None:
        rec = self._load(cell.lattice, params).get(cell.zcell.pair)
        if rec is None:
            return None
        self.hits += 1
        return CouplingMatrix(cell, params, np.array(rec["V_inf"], float),
                              np.array(rec["fit_residual"], float), bool(rec["converged"]))

    def put(self, cm: CouplingMatrix) -> None:
        table = self._load(cm.cell.lattice, cm.params)
        rec = {
            "lattice": cm.cell.lattice.name,
            **cm.cell.zcell.to_record(),
            "alpha": cm.params.alpha,
            "K_schedule": list(cm.params.K_schedule),
            "fit_points": cm.params.fit_points,
            "converged": cm.converged,
            "max_residual": cm.max_residual,
            "V_inf": cm.V_inf.tolist(),
            "fit_residual": cm.fit_residual.tolist(),
        }
        table[cm.cell.zcell.pair] = rec
        with self.path(cm.cell.lattice, cm.params).open("a") as fh:
            fh.write(json.dumps(rec, sort_keys=True) + "\n")

    def matrix(self, cell: EmbeddedCell, params: ResumParams) -> CouplingMatrix:
        cm = self.get(cell, params)
        if cm is None:
            self.misses += 1
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", Unconverged)
                cm = coupling_matrix(cell, params)
            self.put(cm)
        return cm

    def records(self, lattice: LatticeSpec, params: ResumParams) -> list[dict]:
        return list(self._load(lattice, params).values())


def matrices_for(lattice: LatticeSpec, cells: Iterable[ZCell], params: ResumParams,
                 cache: CouplingCache | None = None, jobs: int = 1) -> list[CouplingMatrix]:
    """Coupling matrices for many cells, optionally through a cache and a process pool.

    Results do not depend on ``jobs``: every entry has a fixed summation order.
    """
    cells = list(cells)
    embedded = [embed(lattice, c) for c in cells]
    out: list[CouplingMatrix | None] = [None] * len(cells)
    todo = []
    for n, ec in enumerate(embedded):
        cm = cache.get(ec, params) if cache is not None else None
        if cm is None:
            todo.append(n)
        out[n] = cm
    if todo:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", Unconverged)
            if jobs > 1 and len(todo) > 1:
                from concurrent.futures import ProcessPoolExecutor

                with ProcessPoolExecutor(jobs) as pool:
                    mats = list(pool.map(_matrix_worker, [(lattice, cells[n], params) for n in todo]))
                for n, (V, R, conv) in zip(todo, mats):
                    out[n] = CouplingMatrix(embedded[n], params, V, R, conv)
            else:
                for n in todo:
                    out[n] = coupling_matrix(embedded[n], params)
        if cache is not None:
            for n in todo:
                cache.misses += 1
                cache.put(out[n])
    return out  # type: ignore[return-value]


def _matrix_worker(args):
    lattice, cell, params = args
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", Unconverged)
        cm = coupling_matrix(embed(lattice, cell), params)
    return cm.V_inf, cm.fit_residual, cm.converged
