"""Symmetric tridiagonal eigenpairs by Sturm-sequence bisection and inverse iteration.

The matrix is given by its diagonal ``d`` (length n) and off-diagonal ``e``
(length n-1).  Eigenvalues are selected by index, so the lowest k can be
computed without touching the rest of the spectrum.
"""
from __future__ import annotations

import numpy as np
from numba import njit

from .errors import ConvergenceFailure

_TINY = np.finfo(float).tiny
_EPS = np.finfo(float).eps


@njit(cache=True, nogil=True)
def _pivmin(e):
    m = 1.0
    for v in e:
        if v * v > m:
            m = v * v
    return _TINY * m


@njit(cache=True, nogil=True)
def _count_below(d, e, mu, pivmin):
    # number of negative pivots of the LDL^T factorization of T - mu I
    q = d[0] - mu
    if abs(q) < pivmin:
        q = -pivmin
    count = 1 if q < 0 else 0
    for i in range(1, d.shape[0]):
        q = d[i] - mu - e[i - 1] * e[i - 1] / q
        if abs(q) < pivmin:
            q = -pivmin
        if q < 0:
            count += 1
    return count


def sturm_count(d, e, mu: float) -> int:
    """Number of eigenvalues of the tridiagonal matrix strictly below ``mu``."""
    d = np.ascontiguousarray(d, dtype=float)
    e = np.ascontiguousarray(e, dtype=float)
    return int(_count_below(d, e, float(mu), _pivmin(e)))


@njit(cache=True, nogil=True)
def _gershgorin(d, e):
    n = d.shape[0]
    lo = np.inf
    hi = -np.inf
    for i in range(n):
        r = 0.0
        if i > 0:
            r += abs(e[i - 1])
        if i < n - 1:
            r += abs(e[i])
        lo = min(lo, d[i] - r)
        hi = max(hi, d[i] + r)
    return lo, hi


@njit(cache=True, nogil=True)
def _bisect(d, e, k, rtol):
    n = d.shape[0]
    pivmin = _pivmin(e)
    glo, ghi = _gershgorin(d, e)
    span = max(abs(glo), abs(ghi), 1.0)
    glo -= 2.0 * _EPS * span * n
    ghi += 2.0 * _EPS * span * n
    out = np.empty(k)
    floor = glo
    for j in range(k):
        lo = floor
        hi = ghi
        while True:
            mid = 0.5 * (lo + hi)
            if hi - lo <= rtol * max(1.0, abs(mid)) or mid <= lo or mid >= hi:
                break
            if _count_below(d, e, mid, pivmin) > j:
                hi = mid
            else:
                lo = mid
        out[j] = 0.5 * (lo + hi)
        floor = lo
    return out


def bisect_eigenvalues(d, e, k: int, rtol: float = 1e-10) -> np.ndarray:
    """Lowest ``k`` eigenvalues, each to absolute accuracy rtol*max(1,|E|)."""
    d = np.ascontiguousarray(d, dtype=float)
    e = np.ascontiguousarray(e, dtype=float)
    k = min(int(k), d.shape[0])
    return _bisect(d, e, k, float(rtol))


@njit(cache=True, nogil=True)
def _factor(d, e, lam, pert):
    # LU with partial pivoting of T - lam I; U has two superdiagonals
    n = d.shape[0]
    u0 = d - lam
    u1 = np.zeros(max(n - 1, 1))
    u2 = np.zeros(max(n - 2, 1))
    lm = np.zeros(max(n - 1, 1))
    swap = np.zeros(max(n - 1, 1), dtype=np.bool_)
    for i in range(n - 1):
        u1[i] = e[i]
    for i in range(n - 1):
        sub = e[i]
        if abs(u0[i]) >= abs(sub):
            if u0[i] == 0.0:
                u0[i] = pert
            lm[i] = sub / u0[i]
            u0[i + 1] -= lm[i] * u1[i]
        else:
            swap[i] = True
            l = u0[i] / sub
            lm[i] = l
            old_u1 = u1[i]
            old_next = u0[i + 1]
            u0[i] = sub
            u1[i] = old_next
            u0[i + 1] = old_u1 - l * old_next
            if i < n - 2:
                old_u1n = u1[i + 1]
                u2[i] = old_u1n
                u1[i + 1] = -l * old_u1n
    if u0[n - 1] == 0.0:
        u0[n - 1] = pert
    for i in range(n):
        if abs(u0[i]) < pert:
            u0[i] = pert if u0[i] >= 0 else -pert
    return u0, u1, u2, lm, swap


@njit(cache=True, nogil=True)
def _lu_solve(u0, u1, u2, lm, swap, b):
    n = u0.shape[0]
    y = b.copy()
    for i in range(n - 1):
        if swap[i]:
            t = y[i]
            y[i] = y[i + 1]
            y[i + 1] = t
        y[i + 1] -= lm[i] * y[i]
    x = np.empty(n)
    x[n - 1] = y[n - 1] / u0[n - 1]
    if n > 1:
        x[n - 2] = (y[n - 2] - u1[n - 2] * x[n - 1]) / u0[n - 2]
    for i in range(n - 3, -1, -1):
        x[i] = (y[i] - u1[i] * x[i + 1] - u2[i] * x[i + 2]) / u0[i]
    return x


@njit(cache=True, nogil=True)
def _orthonormalize(x, prev, m):
    for j in range(m):
        c = 0.0
        for i in range(x.shape[0]):
            c += prev[i, j] * x[i]
        for i in range(x.shape[0]):
            x[i] -= c * prev[i, j]
    nrm = np.sqrt(np.sum(x * x))
    if nrm > 0:
        x /= nrm
    return nrm


@njit(cache=True, nogil=True)
def _residual(d, e, lam, x):
    n = d.shape[0]
    r = 0.0
    for i in range(n):
        v = (d[i] - lam) * x[i]
        if i > 0:
            v += e[i - 1] * x[i - 1]
        if i < n - 1:
            v += e[i] * x[i + 1]
        r += v * v
    return np.sqrt(r)


@njit(cache=True, nogil=True)
def _inverse_iteration(d, e, lams, start, maxiter, refine, tol_abs):
    n = d.shape[0]
    k = lams.shape[0]
    vecs = np.zeros((n, k))
    iters = np.zeros(k, dtype=np.int64)
    glo, ghi = _gershgorin(d, e)
    norm = max(abs(glo), abs(ghi), 1.0)
    pert = _EPS * norm
    for j in range(k):
        lam = lams[j]
        u0, u1, u2, lm, swap = _factor(d, e, lam, pert)
        x = start[:, j].copy()
        _orthonormalize(x, vecs, j)
        tol = tol_abs * max(1.0, abs(lam)) + 8.0 * _EPS * norm
        done = -1
        for it in range(maxiter):
            x = _lu_solve(u0, u1, u2, lm, swap, x)
            _orthonormalize(x, vecs, j)
            if _residual(d, e, lam, x) <= tol:
                done = it + 1
                break
        if done < 0:
            iters[j] = -1
            return vecs, iters
        for _ in range(refine):
            x = _lu_solve(u0, u1, u2, lm, swap, x)
            _orthonormalize(x, vecs, j)
        vecs[:, j] = x
        iters[j] = done
    return vecs, iters


def _fix_signs(vecs: np.ndarray, rel: float = 1e-8) -> np.ndarray:
    for j in range(vecs.shape[1]):
        v = vecs[:, j]
        big = np.flatnonzero(np.abs(v) > rel * np.max(np.abs(v)))
        if big.size and v[big[0]] < 0:
            vecs[:, j] = -v
    return vecs


def eigh_tridiagonal_lowest(d, e, k: int, rtol: float = 1e-10, maxiter: int = 50,
                            refine: int = 2, seed: int = 20170101):
    """Lowest ``k`` eigenpairs of a symmetric tridiagonal matrix.

    Returns ``(values, vectors)`` with unit-norm columns.  The sign of each
    vector is fixed so that its first non-negligible component is positive.
    Raises ConvergenceFailure if inverse iteration stalls.
    """
    d = np.ascontiguousarray(d, dtype=float)
    e = np.ascontiguousarray(e, dtype=float)
    k = min(int(k), d.shape[0])
    vals = _bisect(d, e, k, float(rtol))
    start = np.random.default_rng(seed).uniform(-1.0, 1.0, size=(d.shape[0], k))
    vecs, iters = _inverse_iteration(d, e, vals, start, maxiter, refine, float(rtol))
    bad = np.flatnonzero(iters < 0)
    if bad.size:
        j = int(bad[0])
        raise ConvergenceFailure(
            f"inverse iteration for eigenvalue #{j} ({vals[j]!r}) did not converge "
            f"in {maxiter} iterations"
        )
    return vals, _fix_signs(vecs)
