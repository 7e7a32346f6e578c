"""Pure-Python/numpy versions of the compiled kernels.

Same signatures and results as ``_kernels``. The shell sums and the descent
follow the same term order; the exhaustive search takes a different route
(vectorised batches instead of depth-first search) and so doubles as an
independent check of the compiled version.
"""
from __future__ import annotations

import itertools
import math

import numpy as np


def _shell_offsets(s: int) -> tuple[np.ndarray, np.ndarray]:
    if s == 0:
        return np.zeros(1, dtype=np.int64), np.zeros(1, dtype=np.int64)
    idx = np.arange(8 * s)
    k = np.empty(8 * s, dtype=np.int64)
    l = np.empty(8 * s, dtype=np.int64)
    a = idx < 2 * s
    k[a], l[a] = -s + idx[a], -s
    b = (idx >= 2 * s) & (idx < 4 * s)
    k[b], l[b] = s, -s + (idx[b] - 2 * s)
    c = (idx >= 4 * s) & (idx < 6 * s)
    k[c], l[c] = s - (idx[c] - 4 * s), s
    d = idx >= 6 * s
    k[d], l[d] = -s, s - (idx[d] - 6 * s)
    return k, l


def shell_sums(dx, dy, t1x, t1y, t2x, t2y, alpha, K, skip_origin):
    out = np.zeros(K + 1)
    min_r2 = math.inf
    zero_r2 = None
    for s in range(K, -1, -1):
        k, l = _shell_offsets(s)
        x = dx + k * t1x - l * t2x
        y = dy + k * t1y - l * t2y
        r2 = x * x + y * y
        tiny = r2 < 1e-18
        if tiny.any():
            origin = tiny & (k == 0) & (l == 0)
            if not (skip_origin and origin.all()):
                zero_r2 = float(r2[tiny & ~(origin & skip_origin)].min())
            r2 = r2[~tiny]
        if r2.size:
            min_r2 = min(min_r2, float(r2.min()))
            out[s] = math.fsum((r2 ** (-0.5 * alpha)).tolist())
    if zero_r2 is not None:
        min_r2 = zero_r2
    return out, min_r2


def descend(V, n, mu, U, hardcore, cap, canonical, tol):
    V = np.asarray(V)
    p = V.shape[0]
    u = 0.0 if hardcore else U
    top = 1 if hardcore else cap
    diag = np.diag(V).copy()
    phi = V @ n.astype(float)
    steps = 0
    total = 0.0
    while True:
        occ = n >= 1
        free = n < top
        # move (i -> j) matrix, rows i, columns j
        dm = (phi[None, :] - phi[:, None] - V + 0.5 * (diag[:, None] + diag[None, :])
              + u * (n[None, :] - n[:, None] + 1))
        mask = occ[:, None] & free[None, :]
        np.fill_diagonal(mask, False)
        dm = np.where(mask, dm, np.inf)
        flat = int(np.argmin(dm))
        best = dm.flat[flat]
        kind, bi, bj = 0, flat // p, flat % p
        if not canonical:
            di = np.where(free, -mu + phi + 0.5 * diag + u * n, np.inf)
            dr = np.where(occ, mu - phi + 0.5 * diag - u * (n - 1), np.inf)
            i_ins = int(np.argmin(di))
            if di[i_ins] < best:
                best, kind, bi = di[i_ins], 1, i_ins
            i_rem = int(np.argmin(dr))
            if dr[i_rem] < best:
                best, kind, bi = dr[i_rem], 2, i_rem
        if not best < -tol:
            break
        if kind == 0:
            n[bi] -= 1
            n[bj] += 1
            phi += V[bj] - V[bi]
        elif kind == 1:
            n[bi] += 1
            phi += V[bi]
        else:
            n[bi] -= 1
            phi -= V[bi]
        total += float(best)
        steps += 1
    return steps, total


def _states(p, cap, target):
    if target < 0:
        return itertools.product(range(cap + 1), repeat=p)
    return (s for s in itertools.product(range(min(cap, target) + 1), repeat=p)
            if sum(s) == target)


def exhaustive_min(V, mu, U, hardcore, cap, target, tol, batch=1 << 14):
    V = np.asarray(V)
    p = V.shape[0]
    cap = 1 if hardcore else cap
    u = 0.0 if hardcore else U
    best_e = math.inf
    best_n = None
    count = 0
    visited = 0
    it = _states(p, cap, target)
    while True:
        chunk = list(itertools.islice(it, batch))
        if not chunk:
            break
        N = np.asarray(chunk, dtype=float)
        e = (-mu * N.sum(1) + 0.5 * np.einsum("si,ij,sj->s", N, V, N)
             + 0.5 * u * (N * (N - 1)).sum(1))
        visited += len(chunk)
        for s in range(len(chunk)):
            scale = tol * max(1.0, abs(best_e)) if math.isfinite(best_e) else 0.0
            if e[s] < best_e - scale:
                best_e = float(e[s])
                best_n = np.asarray(chunk[s], dtype=np.int64)
                count = 1
            elif e[s] <= best_e + scale:
                count += 1
    return best_n, best_e, count, visited
