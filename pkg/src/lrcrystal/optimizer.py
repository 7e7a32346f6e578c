"""Minimum-energy occupations on a unit cell.

Small state spaces are enumerated completely. Otherwise a basin-hopping
search runs: discrete steepest descent (moves, plus inserts/removes in the
grand-canonical case) alternated with random scrambles of the incumbent.
Restart chains are repeated until the best energy has been reached
``restarts_without_improvement`` times without being undercut.
"""
from __future__ import annotations

import logging
import math
import zlib
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import kernels
from .couplings import CouplingMatrix
from .energy import EnergyBreakdown, ModelParams, energy_per_site, state_count

log = logging.getLogger(__name__)

DEGENERACY_TOL = 1e-10


class StateSpaceTooLarge(ValueError):
    pass


@dataclass(frozen=True)
class SearchBudget:
    exhaustive_limit: int = 2_000_000
    restarts_without_improvement: int = 10
    scramble_moves: int | None = None  # default: one move per site
    hops: int = 10
    max_restarts: int = 200
    rng_seed: int = 0

    def __post_init__(self):
        if self.restarts_without_improvement < 1:
            raise ValueError("restarts_without_improvement must be >= 1")
        if self.exhaustive_limit < 0:
            raise ValueError("exhaustive_limit must be >= 0")


@dataclass
class SearchResult:
    best: np.ndarray
    eps: EnergyBreakdown
    exact: bool
    descents_run: int = 0
    minima_histogram: dict = field(default_factory=dict)
    degeneracy: int = 1
    converged: bool = True
    saturated: bool = False

    @property
    def energy(self) -> float:
        return self.eps.eps_total

    @property
    def filling(self) -> Fraction:
        return Fraction(int(self.best.sum()), len(self.best))


def particle_target(p: int, filling: Fraction | None) -> int | None:
    if filling is None:
        return None
    N = Fraction(filling) * p
    if N.denominator != 1:
        raise ValueError(f"filling {filling} not realisable on {p} sites")
    return int(N)


def _default_cap(p: int, params: ModelParams, target: int | None) -> int:
    if params.hardcore:
        return 1
    if params.n_max is not None:
        return int(params.n_max)
    if target is not None:
        return max(target, 1)
    return 4


def _scaled(cm: CouplingMatrix, params: ModelParams) -> np.ndarray:
    return np.ascontiguousarray(cm.V_inf * params.V, dtype=np.float64)


def exhaustive(cm: CouplingMatrix, params: ModelParams, filling: Fraction | None = None,
               limit: int = 2_000_000, cap: int | None = None) -> SearchResult:
    """Exact minimum over all occupations; ties go to the lexicographically smallest."""
    p = cm.p
    target = particle_target(p, filling)
    cap = _default_cap(p, params, target) if cap is None else cap
    count = state_count(p, cap, target)
    if count > limit:
        raise StateSpaceTooLarge(f"{count} states on {p} sites exceed the limit {limit}")
    W = _scaled(cm, params)
    best, e, degen, visited = kernels.exhaustive_min(
        W, float(params.mu), params.u, params.hardcore, int(cap),
        -1 if target is None else int(target), DEGENERACY_TOL)
    best = np.asarray(best, dtype=np.int64)
    eps = energy_per_site(best, cm, params)
    return SearchResult(best, eps, True, 0, {round(eps.eps_total, 12): int(degen)}, int(degen),
                        saturated=(not params.hardcore and target is None and bool((best >= cap).any())))


def steepest_descent(start, cm: CouplingMatrix, params: ModelParams, canonical: bool,
                     cap: int | None = None, W: np.ndarray | None = None) -> np.ndarray:
    """Local minimum reached by always applying the most negative proposal."""
    n = np.array(start, dtype=np.int64)
    if cap is None:
        cap = _default_cap(cm.p, params, int(n.sum()) if canonical else None)
    if W is None:
        W = _scaled(cm, params)
    scale = max(1.0, float(np.abs(W).max()), abs(params.mu), params.u)
    kernels.descend(W, n, float(params.mu), params.u, params.hardcore, int(cap),
                    bool(canonical), 1e-12 * scale)
    return n


def _random_state(rng, p, cap, target):
    if target is None:
        return rng.integers(0, cap + 1, size=p).astype(np.int64)
    n = np.zeros(p, dtype=np.int64)
    for _ in range(target):
        free = np.flatnonzero(n < cap)
        n[rng.choice(free)] += 1
    return n


def _scramble(rng, n, moves, cap, canonical):
    n = n.copy()
    p = len(n)
    for _ in range(moves):
        if not canonical and rng.random() < 0.25:
            i = int(rng.integers(p))
            if rng.random() < 0.5:
                if n[i] < cap:
                    n[i] += 1
            elif n[i] > 0:
                n[i] -= 1
            continue
        occ = np.flatnonzero(n > 0)
        free = np.flatnonzero(n < cap)
        if occ.size == 0 or free.size == 0:
            continue
        i = int(rng.choice(occ))
        j = int(rng.choice(free))
        if i != j:
            n[i] -= 1
            n[j] += 1
    return n


def cell_seed(seed: int, key: str) -> np.random.SeedSequence:
    return np.random.SeedSequence([int(seed) & 0xFFFFFFFFFFFFFFFF, zlib.crc32(key.encode())])


def basin_hopping(cm: CouplingMatrix, params: ModelParams, budget: SearchBudget = SearchBudget(),
                  filling: Fraction | None = None, starts: list | None = None,
                  cap: int | None = None) -> SearchResult:
    """Stochastic global search; reproducible for a fixed ``budget.rng_seed``.

    ``starts`` are extra initial occupations (for example the optimum at a
    neighbouring parameter point) tried before random ones.
    """
    p = cm.p
    target = particle_target(p, filling)
    canonical = target is not None
    cap = _default_cap(p, params, target) if cap is None else cap
    rng = np.random.default_rng(cell_seed(budget.rng_seed, cm.cell.key))
    W = _scaled(cm, params)
    moves = budget.scramble_moves or p
    e_scale = max(1.0, float(np.abs(W).max()), abs(params.mu), params.u)
    tol = DEGENERACY_TOL * e_scale * p

    def energy(n):
        nf = n.astype(float)
        return -params.mu * nf.sum() + 0.5 * float(nf @ W @ nf) + 0.5 * params.u * float((nf * (nf - 1)).sum())

    best_n, best_e = None, math.inf
    confirmations = 0
    descents = 0
    hist: dict = {}
    starts = [np.asarray(s, dtype=np.int64) for s in (starts or [])
              if len(s) == p and (target is None or int(np.sum(s)) == target)
              and int(np.max(s, initial=0)) <= cap]
    restarts = 0
    while confirmations < budget.restarts_without_improvement and restarts < budget.max_restarts:
        start = starts[restarts] if restarts < len(starts) else _random_state(rng, p, cap, target)
        restarts += 1
        chain_n = steepest_descent(start, cm, params, canonical, cap, W)
        chain_e = energy(chain_n)
        descents += 1
        for _ in range(budget.hops):
            trial = steepest_descent(_scramble(rng, chain_n, moves, cap, canonical),
                                     cm, params, canonical, cap, W)
            descents += 1
            e = energy(trial)
            key = round(e / p, 10)
            hist[key] = hist.get(key, 0) + 1
            if e < chain_e - tol:
                chain_n, chain_e = trial, e
        if chain_e < best_e - tol:
            best_n, best_e = chain_n, chain_e
            confirmations = 1
        elif chain_e <= best_e + tol:
            confirmations += 1
            if tuple(chain_n) < tuple(best_n):
                best_n = chain_n
    eps = energy_per_site(best_n, cm, params)
    converged = confirmations >= budget.restarts_without_improvement
    if not converged:
        log.warning("basin hopping on cell %s stopped after %d restarts with %d confirmations",
                    cm.cell.key, restarts, confirmations)
    saturated = not params.hardcore and not canonical and bool((best_n >= cap).any())
    return SearchResult(best_n, eps, False, descents, hist, 1, converged, saturated)


def search(cm: CouplingMatrix, params: ModelParams, budget: SearchBudget = SearchBudget(),
           filling: Fraction | None = None, starts: list | None = None) -> SearchResult:
    """Exhaustive search when the state space fits the budget, basin hopping otherwise.

    For grand-canonical soft-core runs the occupation cap is raised until the
    optimum no longer touches it.
    """
    p = cm.p
    target = particle_target(p, filling)
    cap = _default_cap(p, params, target)
    while True:
        if state_count(p, cap, target) <= budget.exhaustive_limit:
            res = exhaustive(cm, params, filling, budget.exhaustive_limit, cap)
        else:
            res = basin_hopping(cm, params, budget, filling, starts, cap)
        if not res.saturated or params.n_max is not None:
            return res
        cap *= 2


def cell_order_key(cm: CouplingMatrix):
    return (cm.cell.zcell.index, cm.cell.zcell.pair)


def admissible(cm: CouplingMatrix, filling: Fraction | None) -> bool:
    if filling is None:
        return True
    return (Fraction(filling) * cm.p).denominator == 1


def best_over_cells(mats: list[CouplingMatrix], params: ModelParams,
                    budget: SearchBudget = SearchBudget(), filling: Fraction | None = None,
                    starts: dict | None = None, jobs: int = 1):
    """Search every admissible cell; return ``(matrix, result, all_results)``.

    Cells whose site count cannot host the filling are skipped. Ties go to the
    smaller cell, then to the lexicographically smaller pair.
    """
    cands = [cm for cm in mats if admissible(cm, filling)]
    if not cands:
        raise ValueError("no admissible cell for this filling")
    starts = starts or {}
    if jobs > 1 and len(cands) > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(jobs) as pool:
            results = list(pool.map(_search_worker, [
                (cm, params, budget, filling, starts.get(cm.cell.key)) for cm in cands]))
    else:
        results = [search(cm, params, budget, filling, starts.get(cm.cell.key)) for cm in cands]
    best = None
    for cm, res in zip(cands, results):
        tol = DEGENERACY_TOL * max(1.0, abs(res.energy))
        if best is None or res.energy < best[1].energy - tol:
            best = (cm, res)
        elif abs(res.energy - best[1].energy) <= tol and cell_order_key(cm) < cell_order_key(best[0]):
            best = (cm, res)
    return best[0], best[1], dict(zip((cm.cell.key for cm in cands), results))


def _search_worker(args):
    cm, params, budget, filling, st = args
    return search(cm, params, budget, filling, st)
