# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot loops: lattice shell sums, discrete steepest descent, exhaustive search."""
import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, pow, fabs, floor

cnp.import_array()


cdef inline double _inv_pow(double r2, double half_alpha, int int_half, int odd) nogil:
    # r^-alpha from r^2; integer and half-integer exponents avoid pow()
    cdef double x, res
    cdef int e
    if int_half >= 0:
        res = 1.0
        x = 1.0 / r2
        e = int_half
        while e:
            if e & 1:
                res *= x
            x *= x
            e >>= 1
        if odd:
            res /= sqrt(r2)
        return res
    return pow(r2, -half_alpha)


def shell_sums(double dx, double dy, double t1x, double t1y, double t2x, double t2y,
               double alpha, int K, bint skip_origin):
    """Compensated sums of |d + k T1 - l T2|^-alpha over each square shell max(|k|,|l|) = s.

    Returns ``(sums, min_r2)`` where ``sums[s]`` is the shell-``s`` total and
    ``min_r2`` the smallest squared distance that entered (or skipped) a sum.
    """
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.zeros(K + 1, dtype=np.float64)
    cdef double half_alpha = 0.5 * alpha
    cdef int int_half = -1
    cdef int odd = 0
    cdef double two_a = 2.0 * alpha
    if two_a == floor(two_a) and alpha > 0 and alpha < 200:
        int_half = <int>floor(half_alpha)
        odd = (<int>two_a) % 4 != 0
        if (<int>two_a) % 2 != 0:
            int_half = -1  # quarter-integer exponents fall back to pow
    cdef int s, k, l, n, idx
    cdef double sm, c, t, term, x, y, r2
    cdef double min_r2 = 1e300
    cdef double zero_r2 = -1.0
    with nogil:
        for s in range(K, -1, -1):
            sm = 0.0
            c = 0.0
            if s == 0:
                n = 1
            else:
                n = 8 * s
            for idx in range(n):
                if s == 0:
                    k = 0
                    l = 0
                elif idx < 2 * s:
                    k = -s + idx
                    l = -s
                elif idx < 4 * s:
                    k = s
                    l = -s + (idx - 2 * s)
                elif idx < 6 * s:
                    k = s - (idx - 4 * s)
                    l = s
                else:
                    k = -s
                    l = s - (idx - 6 * s)
                x = dx + k * t1x - l * t2x
                y = dy + k * t1y - l * t2y
                r2 = x * x + y * y
                if r2 < 1e-18:
                    if skip_origin and k == 0 and l == 0:
                        continue
                    zero_r2 = r2
                    continue
                if r2 < min_r2:
                    min_r2 = r2
                term = _inv_pow(r2, half_alpha, int_half, odd)
                # Neumaier compensation
                t = sm + term
                if fabs(sm) >= fabs(term):
                    c += (sm - t) + term
                else:
                    c += (term - t) + sm
                sm = t
            out[s] = sm + c
    if zero_r2 >= 0.0:
        min_r2 = zero_r2
    return out, min_r2


def descend(double[:, ::1] V, long[::1] n, double mu, double U, bint hardcore,
            long cap, bint canonical, double tol):
    """Greedy discrete steepest descent, in place on ``n``.

    Proposals are scanned as moves (i, j) in lexicographic order, then
    inserts and removes by site; the most negative change wins and ties go to
    the first proposal scanned. Returns ``(steps, total_change)``.
    """
    cdef Py_ssize_t p = V.shape[0]
    cdef Py_ssize_t i, j, bi, bj
    cdef int kind, bkind
    cdef double best, d, total = 0.0
    cdef long steps = 0
    cdef double u = 0.0 if hardcore else U
    cdef long top = 1 if hardcore else cap
    cdef cnp.ndarray[cnp.float64_t, ndim=1] phi_arr = np.zeros(p, dtype=np.float64)
    cdef double[::1] phi = phi_arr
    with nogil:
        for i in range(p):
            d = 0.0
            for j in range(p):
                d += V[i, j] * n[j]
            phi[i] = d
        while True:
            best = -tol
            bkind = -1
            bi = -1
            bj = -1
            for i in range(p):
                if n[i] < 1:
                    continue
                for j in range(p):
                    if j == i or n[j] >= top:
                        continue
                    d = (phi[j] - phi[i] - V[i, j] + 0.5 * (V[i, i] + V[j, j])
                         + u * (n[j] - n[i] + 1))
                    if d < best:
                        best = d
                        bkind = 0
                        bi = i
                        bj = j
            if not canonical:
                for i in range(p):
                    if n[i] >= top:
                        continue
                    d = -mu + phi[i] + 0.5 * V[i, i] + u * n[i]
                    if d < best:
                        best = d
                        bkind = 1
                        bi = i
                for i in range(p):
                    if n[i] < 1:
                        continue
                    d = mu - phi[i] + 0.5 * V[i, i] - u * (n[i] - 1)
                    if d < best:
                        best = d
                        bkind = 2
                        bi = i
            if bkind < 0:
                break
            if bkind == 0:
                n[bi] -= 1
                n[bj] += 1
                for j in range(p):
                    phi[j] += V[bj, j] - V[bi, j]
            elif bkind == 1:
                n[bi] += 1
                for j in range(p):
                    phi[j] += V[bi, j]
            else:
                n[bi] -= 1
                for j in range(p):
                    phi[j] -= V[bi, j]
            total += best
            steps += 1
    return steps, total


cdef struct _Search:
    Py_ssize_t p
    long cap
    long target
    bint canonical
    double mu
    double u
    double tol
    double best
    long count
    long visited


cdef void _dfs(_Search* st, double[:, ::1] V, long[::1] n, long[::1] best_n,
               double[:, ::1] field, Py_ssize_t i, long placed, double e) nogil:
    cdef long c, hi, lo
    cdef Py_ssize_t j
    cdef double ec, scale
    cdef Py_ssize_t p = st.p
    if i == p:
        st.visited += 1
        scale = st.tol * (fabs(st.best) if fabs(st.best) > 1.0 else 1.0)
        if e < st.best - scale:
            st.best = e
            st.count = 1
            for j in range(p):
                best_n[j] = n[j]
        elif e <= st.best + scale:
            st.count += 1
        return
    hi = st.cap
    lo = 0
    if st.canonical:
        if st.target - placed < hi:
            hi = st.target - placed
        # remaining sites must be able to absorb the rest
        if st.target - placed - st.cap * (p - i - 1) > lo:
            lo = st.target - placed - st.cap * (p - i - 1)
    for c in range(lo, hi + 1):
        n[i] = c
        ec = c * (-st.mu + field[i, i]) + 0.5 * V[i, i] * c * c + 0.5 * st.u * c * (c - 1)
        if i + 1 < p:
            for j in range(i + 1, p):
                field[i + 1, j] = field[i, j] + c * V[i, j]
        _dfs(st, V, n, best_n, field, i + 1, placed + c, e + ec)
    n[i] = 0


def exhaustive_min(double[:, ::1] V, double mu, double U, bint hardcore, long cap,
                   long target, double tol):
    """Depth-first enumeration in lexicographic order.

    ``target < 0`` means grand canonical. Returns
    ``(best_occupation, best_energy, degenerate_count, states_visited)``.
    """
    cdef Py_ssize_t p = V.shape[0]
    cdef _Search st
    st.p = p
    st.cap = 1 if hardcore else cap
    st.target = target
    st.canonical = target >= 0
    st.mu = 0.0 if target >= 0 else mu
    st.u = 0.0 if hardcore else U
    st.tol = tol
    st.best = 1e308
    st.count = 0
    st.visited = 0
    n_arr = np.zeros(p, dtype=np.int64)
    best_arr = np.zeros(p, dtype=np.int64)
    field_arr = np.zeros((p + 1, p), dtype=np.float64)
    cdef long[::1] n = n_arr
    cdef long[::1] best_n = best_arr
    cdef double[:, ::1] field = field_arr
    with nogil:
        _dfs(&st, V, n, best_n, field, 0, 0, 0.0)
    if st.canonical:
        # the chemical potential only shifts every canonical state equally
        return best_arr, st.best - mu * target, st.count, st.visited
    return best_arr, st.best, st.count, st.visited
