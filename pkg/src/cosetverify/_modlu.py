"""Machine-speed LU elimination mod a word-size prime.

Blocked hybrid over float64: panels of 48 columns are factored by a
compiled kernel (deferred reduction keeps every intermediate below
48*p^2 + p, exact in float64 for p < 2^20), and the trailing Schur update
runs as a single BLAS matrix product per panel, whose inner dimension 48
obeys the same bound.  Unblocked elimination is memory-bound (one full
pass over the trailing matrix per column); the blocked form does the same
arithmetic with 1/48 the traffic.  Reductions avoid C fmod sign semantics
by computing v - floor(v/p)*p with a one-step correction.
"""

from __future__ import annotations

import numpy as np
from numba import njit

_NB = 48

# callers must keep _NB * p^2 below this for deferred sums to stay exact
DEFER_LIMIT = 1 << 53


@njit(cache=True, inline="always")
def _fmod(v, p):
    r = v - np.floor(v / p) * p
    if r < 0.0:
        r += p
    elif r >= p:
        r -= p
    return r


@njit(cache=True, inline="always")
def _inv_mod(x, p):
    a0 = x % p
    a1 = p
    u0 = 1
    u1 = 0
    while a1:
        q = a0 // a1
        a0, a1 = a1, a0 - q * a1
        u0, u1 = u1, u0 - q * u1
    return u0 % p


@njit(cache=True)
def _panel(a, perm, k0, k1, p):
    """Factor columns k0:k1 of `a` in place; returns False when singular."""
    n = a.shape[0]
    fp = float(p)
    for j in range(k0, k1):
        piv = -1
        for i in range(j, n):
            a[i, j] = _fmod(a[i, j], fp)
            if piv < 0 and a[i, j] != 0.0:
                piv = i
        if piv < 0:
            return False
        if piv != j:
            for col in range(n):
                t = a[j, col]
                a[j, col] = a[piv, col]
                a[piv, col] = t
            t2 = perm[j]
            perm[j] = perm[piv]
            perm[piv] = t2
        # the pivot row inside the panel must be canonical before reuse
        for col in range(j + 1, k1):
            a[j, col] = _fmod(a[j, col], fp)
        inv = float(_inv_mod(int(a[j, j]), p))
        for i in range(j + 1, n):
            a[i, j] = _fmod(a[i, j] * inv, fp)
        for i in range(j + 1, n):
            m = a[i, j]
            if m != 0.0:
                for col in range(j + 1, k1):
                    a[i, col] -= m * a[j, col]
    return True


@njit(cache=True)
def _sub_mod(tail, prod, p):
    # fused tail = (tail - prod) mod p; numpy's fmod ufunc is several times
    # slower than a division-based reduction on mixed-sign data
    fp = float(p)
    for i in range(tail.shape[0]):
        for j in range(tail.shape[1]):
            tail[i, j] = _fmod(tail[i, j] - prod[i, j], fp)


@njit(cache=True)
def _u12_sweep(a, k0, k1, p):
    """U12 = L11^{-1} A12 for the panel rows, deferred then reduced."""
    n = a.shape[0]
    fp = float(p)
    for j in range(k0, k1):
        for col in range(k1, n):
            s = a[j, col]
            for t in range(k0, j):
                s -= a[j, t] * a[t, col]
            a[j, col] = _fmod(s, fp)


def lu_f64(a, p):
    """Factor `a` (float64 integer entries) in place as P A = L U mod p.

    Returns the row permutation, or None when `a` is singular mod p.
    L is unit lower triangular below the diagonal, U on and above.
    """
    n = a.shape[0]
    if _NB * p * p >= DEFER_LIMIT:
        raise ValueError("prime too large for exact float64 accumulation")
    perm = np.arange(n)
    for k0 in range(0, n, _NB):
        k1 = min(k0 + _NB, n)
        if not _panel(a, perm, k0, k1, p):
            return None
        if k1 < n:
            _u12_sweep(a, k0, k1, p)
            _sub_mod(a[k1:, k1:], a[k1:, k0:k1] @ a[k0:k1, k1:], p)
    return perm


@njit(cache=True)
def lu_solve_f64(a, perm, b, p):
    """Substitution for a factorization from lu_f64; b is (n, m) float64.

    Deferred sums run over full rows, so this requires n * p^2 < 2^53:
    with 20-bit primes that allows n up to 8000 and is asserted by callers.
    """
    n = a.shape[0]
    m = b.shape[1]
    fp = float(p)
    x = np.empty((n, m), np.float64)
    for i in range(n):
        for j in range(m):
            x[i, j] = _fmod(b[perm[i], j], fp)
    for i in range(1, n):
        for j in range(m):
            s = x[i, j]
            for t in range(i):
                s -= a[i, t] * x[t, j]
            x[i, j] = _fmod(s, fp)
    for i in range(n - 1, -1, -1):
        inv = float(_inv_mod(int(a[i, i]), p))
        for j in range(m):
            s = x[i, j]
            for t in range(i + 1, n):
                s -= a[i, t] * x[t, j]
            x[i, j] = _fmod(_fmod(s, fp) * inv, fp)
    return x


def solve_int64(a, b, p):
    """Solve a x = b mod p; int64 in, int64 out; None when singular mod p."""
    n = a.shape[0]
    if n * p * p >= DEFER_LIMIT:
        raise ValueError("deferred-reduction bound violated: n * p^2 too large")
    af = np.mod(a, p).astype(np.float64)
    perm = lu_f64(af, p)
    if perm is None:
        return None
    flat = b.ndim == 1
    bm = b[:, None] if flat else b
    x = lu_solve_f64(af, perm, np.ascontiguousarray(bm.astype(np.float64)), p)
    xi = x.astype(np.int64)
    return xi[:, 0] if flat else xi
