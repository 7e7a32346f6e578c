"""Model presets, phase-diagram sweeps and closed-form checks.

Both sweep axes enter the energy linearly: along ``V/U`` the runs use
``U = 1`` and ``V = x``, along ``delta/V`` they use ``V = 1`` and ``mu = x``.
The ground-state energy is therefore the lower envelope of straight lines,
one per configuration, which is what the boundary search exploits.
"""
from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from typing import Callable

import numpy as np
from scipy.optimize import brentq

from . import couplings, energy, optimizer, phases
from .couplings import CouplingCache, CouplingMatrix, ResumParams
from .energy import HARDCORE, ModelParams
from .geometry import LatticeSpec, embed, get_lattice
from .zcell import enumerate_cells, extent_set, representatives

log = logging.getLogger(__name__)

AXES = ("V/U", "delta/V")


class GaplessConfiguration(ValueError):
    pass


@dataclass(frozen=True)
class SweepSpec:
    lattice: str
    alpha: float
    axis: str
    grid: tuple[float, float, float]
    extent: tuple[str, int] = ("B", 3)
    filling: Fraction | None = None  # None: grand canonical
    U: float | str = HARDCORE  # on-site term along delta/V
    refine: bool = True
    mode: str = "envelope"  # or "grid": optimise at every grid point

    def __post_init__(self):
        if self.axis not in AXES:
            raise ValueError(f"axis must be one of {AXES}, got {self.axis!r}")
        start, stop, step = self.grid
        if not step > 0 or stop < start:
            raise ValueError(f"bad grid {self.grid}")
        if self.axis == "V/U" and self.filling is None:
            raise ValueError("V/U sweeps run at fixed filling")
        if self.axis == "V/U" and not start > 0:
            raise ValueError("V/U grid must start above zero")
        if self.mode not in ("envelope", "grid"):
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.filling is not None:
            object.__setattr__(self, "filling", Fraction(self.filling))

    @property
    def ensemble(self) -> str:
        return "grand_canonical" if self.filling is None else "canonical"

    def xs(self) -> np.ndarray:
        start, stop, step = self.grid
        n = int(math.floor((stop - start) / step + 1e-9)) + 1
        return np.round(start + step * np.arange(n), 12)

    def params_at(self, x: float) -> ModelParams:
        if self.axis == "V/U":
            return ModelParams(mu=0.0, U=1.0, V=float(x), alpha=self.alpha)
        return ModelParams(mu=float(x), U=self.U, V=1.0, alpha=self.alpha)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["filling"] = None if self.filling is None else str(self.filling)
        d["extent"] = list(self.extent)
        d["grid"] = list(self.grid)
        return d


@dataclass
class PhasePoint:
    x: float
    cell: str
    occ: tuple[int, ...]
    f: Fraction
    eps: float
    degeneracy_count: int
    label: phases.PhaseLabel

    def to_dict(self) -> dict:
        return {"x": self.x, "cell": self.cell, "occ": list(self.occ), "f": str(self.f),
                "eps": self.eps, "degeneracy_count": self.degeneracy_count,
                "phase": self.label.short_id(), "phase_name": self.label.name}


@dataclass
class Boundary:
    x_lo: float
    x_hi: float
    left: phases.PhaseLabel
    right: phases.PhaseLabel

    @property
    def x(self) -> float:
        return 0.5 * (self.x_lo + self.x_hi)


@dataclass
class PhaseDiagram:
    spec: SweepSpec
    points: list[PhasePoint]
    boundaries: list[Boundary] = field(default_factory=list)
    unconverged: int = 0

    def fillings(self) -> list[Fraction]:
        return [p.f for p in self.points]

    def phase_sequence(self) -> list[phases.PhaseLabel]:
        seq = []
        for p in self.points:
            if not seq or seq[-1].form != p.label.form:
                seq.append(p.label)
        return seq

    def filling_sequence(self) -> list[Fraction]:
        seq = []
        for p in self.points:
            if not seq or seq[-1] != p.f:
                seq.append(p.f)
        return seq


@dataclass
class Candidate:
    """A fixed configuration on a fixed cell, i.e. one straight energy line."""

    cm: CouplingMatrix
    occ: np.ndarray
    degeneracy: int = 1
    _label: phases.PhaseLabel | None = None

    def energy(self, spec: SweepSpec, x: float) -> float:
        return energy.energy_per_site(self.occ, self.cm, spec.params_at(x)).eps_total

    @property
    def label(self) -> phases.PhaseLabel:
        if self._label is None:
            self._label = phases.label(self.cm.cell, self.occ)
        return self._label


class Sweeper:
    """Evaluates ground states along one axis and locates the level crossings."""

    def __init__(self, spec: SweepSpec, mats: list[CouplingMatrix],
                 budget: optimizer.SearchBudget = optimizer.SearchBudget(), jobs: int = 1,
                 progress: Callable[[str], None] | None = None,
                 memo: dict | None = None, on_search: Callable[[dict], None] | None = None):
        self.spec = spec
        self.mats = [cm for cm in mats if optimizer.admissible(cm, spec.filling)]
        if not self.mats:
            raise ValueError("no admissible cells for this sweep")
        self.budget = budget
        self.jobs = jobs
        self.known: dict[str, list] = {}
        self.evaluations = 0
        self.unconverged = 0
        self.progress = progress or (lambda msg: None)
        self.min_width = spec.grid[2] / 100
        # finished searches keyed by repr(x); lets an interrupted sweep resume
        self.memo = memo if memo is not None else {}
        self.on_search = on_search
        self._by_key = {cm.cell.key: cm for cm in self.mats}

    def optimise(self, x: float) -> Candidate:
        rec = self.memo.get(repr(float(x)))
        if rec is not None and rec["cell"] in self._by_key:
            self._remember(rec["cell"], np.asarray(rec["occ"], dtype=np.int64))
            return Candidate(self._by_key[rec["cell"]], np.asarray(rec["occ"], dtype=np.int64),
                             int(rec["degeneracy"]))
        params = self.spec.params_at(x)
        starts = {k: [o for o in v] for k, v in self.known.items()}
        cm, res, _ = optimizer.best_over_cells(self.mats, params, self.budget, self.spec.filling,
                                               starts, self.jobs)
        self.evaluations += 1
        if not res.converged:
            self.unconverged += 1
        self._remember(cm.cell.key, res.best)
        rec = {"x": float(x), "cell": cm.cell.key, "occ": [int(v) for v in res.best],
               "degeneracy": int(res.degeneracy), "exact": bool(res.exact),
               "converged": bool(res.converged)}
        self.memo[repr(float(x))] = rec
        if self.on_search is not None:
            self.on_search(rec)
        return Candidate(cm, res.best, res.degeneracy)

    def _remember(self, key, occ):
        occs = self.known.setdefault(key, [])
        if not any(np.array_equal(o, occ) for o in occs):
            occs.append(np.array(occ, dtype=np.int64))

    def _tol(self, e: float) -> float:
        return 1e-11 * max(1.0, abs(e))

    def crossing(self, a: Candidate, b: Candidate, lo: float, hi: float) -> float | None:
        f = lambda x: a.energy(self.spec, x) - b.energy(self.spec, x)
        flo, fhi = f(lo), f(hi)
        if flo == 0:
            return lo
        if fhi == 0:
            return hi
        if flo * fhi > 0:
            return None
        return brentq(f, lo, hi, xtol=1e-13, rtol=4 * np.finfo(float).eps)

    def envelope(self, lo: float, a: Candidate, hi: float, b: Candidate,
                 depth: int = 0) -> list[tuple[float, Candidate]]:
        """Breakpoints of the ground-state envelope in ``[lo, hi]``.

        Returns ``[(x_k, candidate to the right of x_k), ...]`` in order.
        """
        same = a.label.form == b.label.form and abs(
            a.energy(self.spec, lo) - b.energy(self.spec, lo)) <= self._tol(a.energy(self.spec, lo))
        if same:
            return []
        x = self.crossing(a, b, lo, hi)
        if x is None:
            # lines do not cross inside: at least one endpoint optimum is inexact
            x = 0.5 * (lo + hi)
        if hi - lo <= self.min_width or depth > 60:
            return [(x, b)]
        c = self.optimise(x)
        ec = c.energy(self.spec, x)
        ea = a.energy(self.spec, x)
        if ec >= ea - self._tol(ea):
            return [(x, b)]
        self.progress(f"intermediate {c.label.name} at {x:.6f}")
        return self.envelope(lo, a, x, c, depth + 1) + self.envelope(x, c, hi, b, depth + 1)

    def run(self) -> PhaseDiagram:
        xs = self.spec.xs()
        if self.spec.mode == "grid":
            anchors = [(x, self.optimise(x)) for x in xs]
        else:
            anchors = [(xs[0], self.optimise(xs[0])), (xs[-1], self.optimise(xs[-1]))]
        segments: list[tuple[float, Candidate]] = [(xs[0], anchors[0][1])]
        for (lo, a), (hi, b) in zip(anchors, anchors[1:]):
            if self.spec.refine or self.spec.mode == "envelope":
                pieces = self.envelope(lo, a, hi, b)
            else:
                pieces = [] if a.label.form == b.label.form else [(0.5 * (lo + hi), b)]
            segments.extend(pieces)
        segments = self._merge(segments)
        points = []
        for x in xs:
            if self.spec.mode == "grid":
                cand = next(c for gx, c in anchors if gx == x)
            else:
                cand = min((c for _, c in segments), key=lambda c: (c.energy(self.spec, x), c.cm.p))
            points.append(self._point(x, cand))
        bounds = []
        for (x0, c0), (x1, c1) in zip(segments, segments[1:]):
            if c0.label.form != c1.label.form:
                bounds.append(Boundary(x1, x1, c0.label, c1.label))
        self.progress(f"{self.evaluations} ground-state searches")
        return PhaseDiagram(self.spec, points, bounds, self.unconverged)

    @staticmethod
    def _merge(segments):
        out = []
        for x, c in sorted(segments, key=lambda s: s[0]):
            if out and out[-1][1].label.form == c.label.form:
                continue
            out.append((x, c))
        return out

    def _point(self, x, cand: Candidate) -> PhasePoint:
        eps = cand.energy(self.spec, x)
        f = Fraction(int(cand.occ.sum()), len(cand.occ))
        return PhasePoint(float(x), cand.cm.cell.key, tuple(int(v) for v in cand.occ), f,
                          eps, cand.degeneracy, cand.label)


def default_resum(alpha: float) -> ResumParams:
    return ResumParams(alpha)


def sweep_matrices(spec: SweepSpec, resum: ResumParams | None = None,
                   cache: CouplingCache | None = None, jobs: int = 1) -> list[CouplingMatrix]:
    lattice = get_lattice(spec.lattice)
    cells = enumerate_cells(extent_set(*spec.extent))
    if spec.filling is not None:
        cells = [c for c in cells if (spec.filling * c.index * lattice.m).denominator == 1]
    return couplings.matrices_for(lattice, cells, resum or default_resum(spec.alpha), cache, jobs)


def sweep(spec: SweepSpec, budget: optimizer.SearchBudget = optimizer.SearchBudget(),
          resum: ResumParams | None = None, cache: CouplingCache | None = None, jobs: int = 1,
          mats: list[CouplingMatrix] | None = None, progress=None, memo: dict | None = None,
          on_search=None) -> PhaseDiagram:
    if mats is None:
        mats = sweep_matrices(spec, resum, cache, jobs)
    return Sweeper(spec, mats, budget, jobs, progress, memo, on_search).run()


# -- presets ---------------------------------------------------------------

def ebhm_atomic(f, grid=(0.05, 4.5, 0.05), m: int = 4, alpha: float = 3.0, **kw) -> SweepSpec:
    """Soft-core bosons at fixed filling on the triangular lattice, swept in V/U."""
    return SweepSpec("triangular", alpha, "V/U", tuple(grid), ("B", m), Fraction(f), **kw)


def fss_classical(lattice: str, grid=(-0.05, 4.35, 0.01), m: int | None = None,
                  alpha: float = 6.0, **kw) -> SweepSpec:
    """Hard-core grand-canonical sweep in delta/V on the site or link kagome lattice."""
    if lattice == "kagome_site":
        extent = ("B", 6 if m is None else m)
    elif lattice == "kagome_link":
        extent = ("A", 4 if m is None else m)
    else:
        raise ValueError(f"no classical FSS preset for {lattice!r}")
    return SweepSpec(lattice, alpha, "delta/V", tuple(grid), extent, None, HARDCORE, **kw)


def mu_bar(lattice: str | LatticeSpec, alpha: float, resum: ResumParams | None = None) -> float:
    spec = get_lattice(lattice) if isinstance(lattice, str) else lattice
    return couplings.self_coupling_sum(spec, resum or default_resum(alpha))


def aflrim_map(J: float, alpha: float, resum: ResumParams | None = None) -> ModelParams:
    """Hard-core boson parameters equivalent to the antiferromagnetic Ising model."""
    if not J > 0:
        raise ValueError("J must be positive")
    couplings.check_alpha(alpha)
    vbar = 4.0 * J
    return ModelParams(mu=vbar * mu_bar("triangular", alpha, resum) / 2, U=HARDCORE, V=vbar,
                       alpha=alpha)


@dataclass
class AflrimReport:
    alpha: float
    params: ModelParams
    cell: str
    result: optimizer.SearchResult
    is_plain_stripe: bool
    stripe_degeneracy: int
    stripe_energy_spread: float
    clock_energy: float
    gap: float


STRIPE_CELL = ((2, 0), (0, 2))
CLOCK_CELL = ((3, 0), (1, 1))


def aflrim_ground_state(alpha: float, m: int = 4, J: float = 0.25,
                        budget: optimizer.SearchBudget = optimizer.SearchBudget(),
                        resum: ResumParams | None = None, cache: CouplingCache | None = None,
                        jobs: int = 1, mats=None) -> AflrimReport:
    resum = resum or default_resum(alpha)
    params = aflrim_map(J, alpha, resum)
    lat = get_lattice("triangular")
    if mats is None:
        mats = couplings.matrices_for(lat, enumerate_cells(extent_set("B", m)), resum, cache, jobs)
    cm, res, _ = optimizer.best_over_cells(mats, params, budget, None, None, jobs)
    lab = phases.label(cm.cell, res.best)
    stripe = lab.primitive_sites == 2 and lab.filling == Fraction(1, 2)

    def matrix(pair):
        ec = embed(lat, representatives(pair))
        return cache.matrix(ec, resum) if cache is not None else couplings.coupling_matrix(ec, resum)

    sq = matrix(STRIPE_CELL)
    # every minimiser on the 2x2 cell, by brute force over its 16 states
    energies = {}
    for bits in range(1 << sq.p):
        occ = np.array([(bits >> i) & 1 for i in range(sq.p)])
        energies[tuple(occ)] = energy.energy_per_site(occ, sq, params).eps_total
    emin = min(energies.values())
    tol = 1e-10 * max(1.0, abs(emin))
    minima = [o for o, e in energies.items() if e - emin <= tol]
    spread = max(energies[o] for o in minima) - min(energies[o] for o in minima)
    # restrict the clock cell to its sqrt3 x sqrt3 patterns (one or two of three sites filled)
    ccm = matrix(CLOCK_CELL)
    clock_e = min(energy.energy_per_site(o, ccm, params).eps_total
                  for o in ([1, 0, 0], [0, 1, 0], [0, 0, 1], [0, 1, 1], [1, 0, 1], [1, 1, 0]))
    return AflrimReport(alpha, params, cm.cell.key, res, stripe, len(minima), spread, clock_e,
                        clock_e - res.energy)


# -- hexagonal super-cells at integer filling --------------------------------

def loeschian_pair(N: int) -> tuple[int, int]:
    """``(a, b)`` with ``a*a + a*b + b*b == N``; raises if ``N`` is not of that form."""
    for a in range(int(math.isqrt(N)) + 1):
        for b in range(a + 1):
            if a * a + a * b + b * b == N:
                return a, b
    raise ValueError(f"{N} is not a hexagonal cell size")


def hexagonal_cell(N: int):
    a, b = loeschian_pair(N)
    return representatives(((a, b), (-b, a + b)))


def hexagon_self_coupling(N: int, alpha: float, resum: ResumParams | None = None,
                          method: str = "resum") -> float:
    """Self-coupling of one site in the N-site hexagonal super-cell."""
    if method == "scaling":
        return mu_bar("triangular", alpha, resum) / N ** (alpha / 2)
    ec = embed(get_lattice("triangular"), hexagonal_cell(N))
    return float(couplings.coupling_matrix(ec, resum or default_resum(alpha)).V_inf[0, 0])


def hexagon_energy(d: float, V: float, U: float, alpha: float,
                   resum: ResumParams | None = None, method: str = "resum") -> float:
    """Energy per site with ``d*d`` bosons stacked on one site of a hexagonal cell of spacing ``d``."""
    N = int(round(d * d))
    if abs(N - d * d) > 1e-9 or N < 1:
        raise ValueError(f"d*d must be a hexagonal cell size, got d={d}")
    n = N
    return 0.5 * V * hexagon_self_coupling(N, alpha, resum, method) * n + 0.5 * U * (n - 1)


def hexagon_crossing(N1: int, N2: int, alpha: float, resum: ResumParams | None = None,
                     method: str = "resum") -> float:
    """V/U where the N1 and N2 stacked-hexagon energies are equal (U = 1)."""
    s1 = 0.5 * hexagon_self_coupling(N1, alpha, resum, method) * N1
    s2 = 0.5 * hexagon_self_coupling(N2, alpha, resum, method) * N2
    return 0.5 * (N2 - N1) / (s1 - s2)


def triangular_shells(count: int) -> list[tuple[float, int]]:
    """First ``count`` distance shells of the unit triangular lattice as ``(r, multiplicity)``."""
    out: dict[int, int] = {}
    R = 2
    while True:
        out.clear()
        for i in range(-R, R + 1):
            for j in range(-R, R + 1):
                q = i * i + i * j + j * j
                if q:
                    out[q] = out.get(q, 0) + 1
        norms = sorted(out)
        # shells with q < R*R are complete
        complete = [q for q in norms if q < R * R * 3 // 4]
        if len(complete) >= count:
            return [(math.sqrt(q), out[q]) for q in complete[:count]]
        R *= 2


def leading_shells(d: float, alpha: float, shells: int) -> float:
    """Truncated-shell estimate of the hexagon self-coupling. Poor for slowly decaying interactions."""
    if shells < 1:
        raise ValueError("shells must be >= 1")
    return sum(mult / (d * r) ** alpha for r, mult in triangular_shells(shells))


# -- quantum corrections -------------------------------------------------------

def flip_costs(occ, cm: CouplingMatrix, params: ModelParams) -> np.ndarray:
    occ = np.asarray(occ, dtype=np.int64)
    out = np.empty(len(occ))
    for i, n in enumerate(occ):
        out[i] = (energy.delta_insert(occ, i, cm, params) if n == 0
                  else energy.delta_remove(occ, i, cm, params))
    return out


def second_order_coefficient(occ, cm: CouplingMatrix, params: ModelParams) -> float:
    """Per-site coefficient of Omega**2 from single-site flips."""
    if not params.hardcore:
        raise energy.SoftcoreUnsupported("flip perturbation needs hardcore occupations")
    dE = flip_costs(occ, cm, params)
    if (dE <= 0).any():
        raise GaplessConfiguration(f"flip cost {dE.min():.3g} at site {int(dE.argmin())}")
    return -0.25 * float(np.sum(1.0 / dE)) / len(dE)


def second_order_correction(occ, cm: CouplingMatrix, params: ModelParams, Omega: float) -> float:
    if Omega == 0:
        return 0.0
    return Omega * Omega * second_order_coefficient(occ, cm, params)


# -- odd/even rule ---------------------------------------------------------------

@dataclass(frozen=True)
class PredictedPhase:
    N: int
    occupations: tuple[int, ...]
    sites: int

    @property
    def name(self) -> str:
        if len(self.occupations) == 2:
            return f"{self.occupations[0]},{self.occupations[1]}-Phase"
        return f"{self.occupations[0]}-Hexagonal Phase"


def odd_even_rule(N: int) -> PredictedPhase:
    """Half-filling phase predicted from the size of the next hexagonal cell."""
    if N < 1:
        raise ValueError("N must be positive")
    if N % 2:
        return PredictedPhase(N, (N // 2, N // 2 + 1), 2 * N)
    return PredictedPhase(N, (N // 2,), N)


def matches_prediction(lab: phases.PhaseLabel, pred: PredictedPhase) -> bool:
    return lab.primitive_sites == pred.sites and lab.occupations == pred.occupations


# -- dimer picture on the link kagome lattice ------------------------------------

def dimer_vertex_counts(cell, occ) -> np.ndarray:
    """Occupied links touching each vertex of the underlying kagome lattice.

    Vertices are recovered geometrically: a vertex sits at unit distance from
    exactly four link sites. A perfect dimer covering has every count equal
    to one; a zero marks a monomer.
    """
    occ = np.asarray(occ)
    R1, R2 = couplings.reduced_basis(cell.T1, cell.T2)
    images = np.array([a * R1 + b * R2 for a in range(-2, 3) for b in range(-2, 3)])
    patch = (cell.sites[None, :, :] + images[:, None, :]).reshape(-1, 2)
    patch_occ = np.tile(occ, len(images))
    Minv = np.linalg.inv(np.column_stack([cell.T1, cell.T2]))
    found = {}
    for s in cell.sites:
        d = np.hypot(*(patch - s).T)
        for j in np.flatnonzero(np.abs(d - 2.0) < 1e-9):
            v = 0.5 * (s + patch[j])
            near = np.flatnonzero(np.abs(np.hypot(*(patch - v).T) - 1.0) < 1e-9)
            if len(near) != 4:
                continue
            frac = np.round(Minv @ (v - cell.sites[0]), 6) % 1.0
            key = tuple(np.round(np.where(frac > 1 - 1e-6, 0.0, frac), 6))
            found.setdefault(key, int(patch_occ[near].sum()))
    return np.array([found[k] for k in sorted(found)])


def is_perfect_dimer_covering(cell, occ) -> bool:
    counts = dimer_vertex_counts(cell, occ)
    return len(counts) > 0 and bool((counts == 1).all())
