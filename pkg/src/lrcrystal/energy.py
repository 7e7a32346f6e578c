"""Occupations on a unit cell and the energy of the resummed cell Hamiltonian.

Per cell the energy is

    E = -mu sum n_i + V/2 sum_{i!=j} W_ij n_i n_j + V/2 sum_i W_ii n_i^2
        + U/2 sum_i n_i (n_i - 1)

with ``W`` the extrapolated couplings (in units of ``V``). Dividing by the
number of sites gives the energy per site of the periodic pattern.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .couplings import CouplingMatrix

HARDCORE = "hardcore"


class DimensionMismatch(ValueError):
    pass


class HardcoreViolation(ValueError):
    pass


class IllegalOperation(ValueError):
    pass


class SoftcoreUnsupported(ValueError):
    pass


@dataclass(frozen=True)
class ModelParams:
    mu: float = 0.0
    U: float | str = HARDCORE
    V: float = 1.0
    alpha: float = 6.0
    n_max: int | None = None

    def __post_init__(self):
        if self.U != HARDCORE and not float(self.U) >= 0:
            raise ValueError(f"U must be >= 0 or 'hardcore', got {self.U!r}")
        if not self.V > 0:
            raise ValueError(f"V must be positive, got {self.V}")

    @property
    def hardcore(self) -> bool:
        return self.U == HARDCORE

    @property
    def u(self) -> float:
        return 0.0 if self.hardcore else float(self.U)

    def cap(self, default: int) -> int:
        if self.hardcore:
            return 1
        return int(self.n_max) if self.n_max is not None else int(default)

    def replace(self, **kw) -> "ModelParams":
        from dataclasses import replace

        return replace(self, **kw)


@dataclass(frozen=True)
class EnergyBreakdown:
    eps_total: float
    eps_mu: float
    eps_pair: float
    eps_self: float
    eps_onsite: float


def filling(occ) -> Fraction:
    occ = np.asarray(occ)
    return Fraction(int(occ.sum()), len(occ))


def _check(occ, cm: CouplingMatrix | np.ndarray, params: ModelParams) -> np.ndarray:
    n = np.asarray(occ, dtype=np.int64)
    p = cm.p if isinstance(cm, CouplingMatrix) else np.asarray(cm).shape[0]
    if n.shape != (p,):
        raise DimensionMismatch(f"occupation of length {n.size} on a {p}-site cell")
    if (n < 0).any():
        raise ValueError("occupations must be nonnegative")
    if params.hardcore and (n > 1).any():
        raise HardcoreViolation("hardcore occupation above one")
    return n


def _couplings(cm) -> np.ndarray:
    return cm.V_inf if isinstance(cm, CouplingMatrix) else np.asarray(cm, dtype=float)


def energy_per_site(occ, cm: CouplingMatrix | np.ndarray, params: ModelParams) -> EnergyBreakdown:
    n = _check(occ, cm, params)
    W = _couplings(cm)
    p = len(n)
    nf = n.astype(float)
    diag = np.diag(W)
    e_mu = -params.mu * float(n.sum())
    e_self = 0.5 * params.V * float(diag @ (nf * nf))
    e_pair = 0.5 * params.V * float(nf @ W @ nf) - e_self
    e_on = 0.5 * params.u * float((nf * (nf - 1)).sum())
    parts = [e_mu / p, e_pair / p, e_self / p, e_on / p]
    return EnergyBreakdown(sum(parts), *parts)


def cell_energy(occ, cm, params: ModelParams) -> float:
    n = np.asarray(occ, dtype=float)
    W = _couplings(cm)
    return (-params.mu * n.sum() + 0.5 * params.V * float(n @ W @ n)
            + 0.5 * params.u * float((n * (n - 1)).sum()))


def field(occ, cm) -> np.ndarray:
    return _couplings(cm) @ np.asarray(occ, dtype=float)


def delta_insert(occ, i: int, cm, params: ModelParams) -> float:
    n = _check(occ, cm, params)
    if params.hardcore and n[i] >= 1:
        raise IllegalOperation(f"site {i} already occupied (hardcore)")
    W = _couplings(cm)
    phi = float(W[i] @ n)
    return -params.mu + params.V * (phi + 0.5 * W[i, i]) + params.u * n[i]


def delta_remove(occ, i: int, cm, params: ModelParams) -> float:
    n = _check(occ, cm, params)
    if n[i] < 1:
        raise IllegalOperation(f"site {i} is empty")
    W = _couplings(cm)
    phi = float(W[i] @ n)
    return params.mu + params.V * (-phi + 0.5 * W[i, i]) - params.u * (n[i] - 1)


def delta_move(occ, i: int, j: int, cm, params: ModelParams) -> float:
    n = _check(occ, cm, params)
    if n[i] < 1:
        raise IllegalOperation(f"site {i} is empty")
    if i == j:
        return 0.0
    if params.hardcore and n[j] >= 1:
        raise IllegalOperation(f"site {j} already occupied (hardcore)")
    W = _couplings(cm)
    phi_i = float(W[i] @ n)
    phi_j = float(W[j] @ n)
    return (params.V * (phi_j - phi_i - W[i, j] + 0.5 * (W[i, i] + W[j, j]))
            + params.u * (n[j] - n[i] + 1))


def particle_hole(occ) -> np.ndarray:
    n = np.asarray(occ, dtype=np.int64)
    if (n > 1).any():
        raise SoftcoreUnsupported("particle-hole exchange needs hardcore occupations")
    return 1 - n


def particle_hole_mu(mu: float, row_sum: float, V: float = 1.0) -> float:
    """Chemical potential mirrored through the particle-hole point ``V*row_sum/2``."""
    return V * row_sum - mu


def dump_occupation(occ, cell_key: str, extra: dict | None = None) -> str:
    rec = {"cell": cell_key, "occ": [int(x) for x in occ]}
    if extra:
        rec.update(extra)
    return json.dumps(rec, sort_keys=True)


def load_occupation(line: str) -> tuple[str, np.ndarray]:
    rec = json.loads(line)
    return rec["cell"], np.asarray(rec["occ"], dtype=np.int64)


def pattern_rows(cell, occ) -> list[tuple[float, float, int]]:
    """Site positions with occupations, for plotting."""
    return [(float(x), float(y), int(n)) for (x, y), n in zip(cell.sites, occ)]


def state_count(p: int, cap: int, target: int | None) -> int:
    """Number of occupation vectors with entries in ``0..cap`` (summing to ``target``)."""
    if target is None:
        return (cap + 1) ** p
    if cap >= target:
        return math.comb(target + p - 1, p - 1)
    # inclusion-exclusion over sites exceeding the cap
    total = 0
    for k in range(p + 1):
        rest = target - k * (cap + 1)
        if rest < 0:
            break
        total += (-1) ** k * math.comb(p, k) * math.comb(rest + p - 1, p - 1)
    return total
