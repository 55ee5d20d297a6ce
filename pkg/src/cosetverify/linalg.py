"""Exact linear algebra: dense rational elimination for small systems and a
modular (multi-prime) solver for large ones.

The modular path reduces the integer system mod several word-size primes,
eliminates each image in float64 (all intermediate values stay below 2^53,
see _PRIME_BITS), recombines by CRT, reconstructs rational entries, and then
certifies the candidate solution exactly over Q with a random-projection
residual check.  The certification step is what makes the fast path safe:
a wrong reconstruction cannot survive r.(A x) == r.b with r drawn from a
2^62-sized box unless the residual happens to be orthogonal to r.
"""

from __future__ import annotations

import random
from fractions import Fraction
from math import gcd, isqrt

import numpy as np

Rat = Fraction


class SingularMatrixError(ArithmeticError):
    pass


# ---------------------------------------------------------------------------
# primes and rational reconstruction
# ---------------------------------------------------------------------------

_PRIME_BITS = 20          # 64 * p^2 < 2^53 keeps blocked float64 updates exact
_PANEL = 48


def _is_prime(n: int) -> bool:
    if n < 2:
        return False
    for p in (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37):
        if n % p == 0:
            return n == p
    d = n - 1
    r = 0
    while d % 2 == 0:
        d //= 2
        r += 1
    for a in (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37):
        x = pow(a, d, n)
        if x in (1, n - 1):
            continue
        for _ in range(r - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


def prime_stream(bits: int = _PRIME_BITS, skip: int = 0):
    """Deterministic descending stream of primes just below 2**bits."""
    n = (1 << bits) - 1
    seen = 0
    while n > 3:
        if _is_prime(n):
            if seen >= skip:
                yield n
            seen += 1
        n -= 2


def crt_combine(res1: int, m1: int, res2: int, m2: int):
    """Combine x = res1 mod m1, x = res2 mod m2 (coprime moduli)."""
    inv = pow(m1, -1, m2)
    t = ((res2 - res1) * inv) % m2
    return res1 + m1 * t, m1 * m2


def rational_reconstruct(r: int, m: int):
    """Find p/q with r*q = p mod m, |p| <= sqrt(m/2), 0 < q <= sqrt(m/2).

    Returns a Fraction, or None when no such pair exists (more primes needed).
    """
    r %= m
    if r == 0:
        return Fraction(0)
    bound = isqrt(m // 2)
    s0, s1 = m, r
    t0, t1 = 0, 1
    while s1 > bound:
        q = s0 // s1
        s0, s1 = s1, s0 - q * s1
        t0, t1 = t1, t0 - q * t1
    if t1 == 0 or abs(t1) > bound:
        return None
    if gcd(s1, abs(t1)) != 1:
        return None
    return Fraction(s1, t1)


# ---------------------------------------------------------------------------
# dense rational elimination (small systems)
# ---------------------------------------------------------------------------

def solve_fraction_dense(A, B):
    """Solve A X = B exactly over Q by Gaussian elimination with pivoting.

    A is an n x n list of lists of Fractions; B is n x m (or a flat vector).
    Returns X in the same shape.  Raises SingularMatrixError on rank loss.
    """
    n = len(A)
    flat = n > 0 and not isinstance(B[0], (list, tuple))
    m = 1 if flat else len(B[0])
    a = [[Fraction(x) for x in row] for row in A]
    b = [[Fraction(B[i])] if flat else [Fraction(x) for x in B[i]]
         for i in range(n)]
    for k in range(n):
        piv = next((i for i in range(k, n) if a[i][k] != 0), None)
        if piv is None:
            raise SingularMatrixError(f"rank deficiency at column {k}")
        if piv != k:
            a[k], a[piv] = a[piv], a[k]
            b[k], b[piv] = b[piv], b[k]
        inv = 1 / a[k][k]
        for j in range(k, n):
            a[k][j] *= inv
        for j in range(m):
            b[k][j] *= inv
        for i in range(k + 1, n):
            f = a[i][k]
            if f == 0:
                continue
            for j in range(k, n):
                a[i][j] -= f * a[k][j]
            for j in range(m):
                b[i][j] -= f * b[k][j]
    x = [[Fraction(0)] * m for _ in range(n)]
    for k in range(n - 1, -1, -1):
        for j in range(m):
            s = b[k][j]
            for i in range(k + 1, n):
                s -= a[k][i] * x[i][j]
            x[k][j] = s
    return [row[0] for row in x] if flat else x


def solve_tall(A, b):
    """Solve the overdetermined system A x = b exactly over Q.

    A is m x n with m >= n and full column rank, b a length-m vector, and
    the system must be consistent.  Raises SingularMatrixError on column
    rank loss and ValueError when the equations contradict each other.
    """
    rows = [[Fraction(x) for x in row] + [Fraction(bv)]
            for row, bv in zip(A, b)]
    m = len(rows)
    n = len(rows[0]) - 1 if m else 0
    r = 0
    for col in range(n):
        piv = next((i for i in range(r, m) if rows[i][col] != 0), None)
        if piv is None:
            raise SingularMatrixError(f"no pivot for column {col}")
        rows[r], rows[piv] = rows[piv], rows[r]
        inv = 1 / rows[r][col]
        pr = rows[r]
        for j in range(col, n + 1):
            pr[j] *= inv
        for i in range(m):
            if i != r and rows[i][col] != 0:
                f = rows[i][col]
                for j in range(col, n + 1):
                    rows[i][j] -= f * pr[j]
        r += 1
    for i in range(r, m):
        if rows[i][n] != 0:
            raise ValueError("inconsistent overdetermined system")
    return [rows[i][n] for i in range(n)]


# ---------------------------------------------------------------------------
# modular elimination (float64, blocked)
# ---------------------------------------------------------------------------

def _chunk_bound(p: int) -> int:
    # longest inner product of values < p that float64 accumulates exactly,
    # with headroom for one addend already < p
    return max(1, ((1 << 53) - p) // (p * p))


def lu_mod_p(a: np.ndarray, p: int):
    """In-place LU with partial pivoting of `a` mod p (float64 storage).

    Returns the permutation as a row-index array, or None when the matrix is
    singular mod p.  L has unit diagonal and is stored below it; U on and
    above.  Matrix products are chunked so every accumulated value stays
    below 2^53, keeping float64 arithmetic exact.  The panel is factored on
    a contiguous copy: column operations on a slice of the full array walk
    the whole row stride and dominate the runtime otherwise.
    """
    n = a.shape[0]
    perm = np.arange(n)
    kmax = _chunk_bound(p)
    for k0 in range(0, n, _PANEL):
        k1 = min(k0 + _PANEL, n)
        nb = k1 - k0
        # unconditional copy: a contiguous view would alias the row swaps below
        panel = a[k0:, k0:k1].copy()
        for j in range(nb):
            nz = np.nonzero(panel[j:, j])[0]
            if nz.size == 0:
                return None
            piv = j + nz[0]
            if piv != j:
                panel[[j, piv]] = panel[[piv, j]]
                gi, gp = k0 + j, k0 + piv
                # panel columns of `a` are stale here; rewritten below
                a[[gi, gp]] = a[[gp, gi]]
                perm[[gi, gp]] = perm[[gp, gi]]
            inv = float(pow(int(panel[j, j]), p - 2, p))
            if j + 1 < panel.shape[0]:
                panel[j + 1:, j] = (panel[j + 1:, j] * inv) % p
                if j + 1 < nb:
                    panel[j + 1:, j + 1:nb] = (
                        panel[j + 1:, j + 1:nb]
                        - np.outer(panel[j + 1:, j], panel[j, j + 1:nb])) % p
        a[k0:, k0:k1] = panel
        if k1 < n:
            # U12 = L11^{-1} A12 (unit lower triangular, row sweep)
            blk = a[k0:k1, k1:]
            for j in range(1, nb):
                blk[j] = (blk[j] - a[k0 + j, k0:k0 + j].dot(blk[:j])) % p
            # trailing Schur complement
            tail = a[k1:, k1:]
            for c0 in range(0, nb, kmax):
                c1 = min(c0 + kmax, nb)
                tail -= a[k1:, k0 + c0:k0 + c1].dot(blk[c0:c1])
                tail %= p
    return perm


def lu_solve_mod_p(a: np.ndarray, perm: np.ndarray, b, p: int):
    """Substitution phase for a factorization produced by lu_mod_p.

    `a` holds L and U in place, `b` is a 1-D or 2-D right-hand side (any
    integer or float dtype, reduced mod p here).  Returns int64 solutions
    in [0, p).  Splitting this out lets one factorization serve many
    right-hand sides.
    """
    n = a.shape[0]
    b = np.asarray(b)
    flat = b.ndim == 1
    bf = np.mod(b, p).astype(np.float64)
    if flat:
        bf = bf[:, None]
    bf = bf[perm]
    kmax = _chunk_bound(p)
    panels = list(range(0, n, _PANEL))
    for k0 in panels:
        k1 = min(k0 + _PANEL, n)
        for c0 in range(0, k0, kmax):
            c1 = min(c0 + kmax, k0)
            bf[k0:k1] = (bf[k0:k1] - a[k0:k1, c0:c1].dot(bf[c0:c1])) % p
        for k in range(k0 + 1, k1):
            bf[k] = (bf[k] - a[k, k0:k].dot(bf[k0:k])) % p
    for k0 in reversed(panels):
        k1 = min(k0 + _PANEL, n)
        for c0 in range(k1, n, kmax):
            c1 = min(c0 + kmax, n)
            bf[k0:k1] = (bf[k0:k1] - a[k0:k1, c0:c1].dot(bf[c0:c1])) % p
        for k in range(k1 - 1, k0 - 1, -1):
            acc = bf[k]
            if k + 1 < k1:
                acc = (acc - a[k, k + 1:k1].dot(bf[k + 1:k1])) % p
            inv = float(pow(int(a[k, k]), p - 2, p))
            bf[k] = (acc * inv) % p
    x = bf.astype(np.int64)
    return x[:, 0] if flat else x


def solve_mod_p(a_int: np.ndarray, b_int: np.ndarray, p: int):
    """Solve a x = b mod p.  a_int, b_int are integer arrays (any dtype that
    fits; they are reduced mod p here).  Returns x as an int64 array in
    [0, p), or None when a is singular mod p."""
    af = np.mod(np.asarray(a_int), p).astype(np.float64)
    perm = lu_mod_p(af, p)
    if perm is None:
        return None
    return lu_solve_mod_p(af, perm, np.asarray(b_int), p)


# ---------------------------------------------------------------------------
# multi-prime exact solve with certification
# ---------------------------------------------------------------------------

def _clear_denominators(A, B):
    """Scale each row of [A | B] to integers; returns integer nested lists."""
    n = len(A)
    a_int, b_int = [], []
    for i in range(n):
        rowa = [Fraction(x) for x in A[i]]
        rowb = [Fraction(x) for x in (B[i] if isinstance(B[i], (list, tuple))
                                      else [B[i]])]
        den = 1
        for x in rowa + rowb:
            den = den * x.denominator // gcd(den, x.denominator)
        a_int.append([int(x * den) for x in rowa])
        b_int.append([int(x * den) for x in rowb])
    return a_int, b_int


def _project_check(a_int, b_int, X, rng) -> bool:
    """Exact check of r.(A X) == r.B over Q for a random integer vector r."""
    n = len(a_int)
    m = len(b_int[0])
    r = [rng.getrandbits(62) for _ in range(n)]
    # rA = r^T A  (exact big-int), rB = r^T B
    rA = [sum(r[i] * a_int[i][j] for i in range(n)) for j in range(n)]
    rB = [sum(r[i] * b_int[i][j] for i in range(n)) for j in range(m)]
    for j in range(m):
        s = sum(rA[i] * X[i][j] for i in range(n))
        if s != rB[j]:
            return False
    return True


def solve_exact(A, B, max_primes: int = 120, seed: int = 0):
    """Solve A X = B exactly over Q.

    Small systems go through plain rational elimination.  Larger ones use the
    modular path; the reconstructed solution is certified with two independent
    random-projection residual checks before being returned.
    """
    n = len(A)
    if n == 0:
        return []
    flat = not isinstance(B[0], (list, tuple))
    if n <= 24:
        return solve_fraction_dense(A, B)

    a_int, b_int = _clear_denominators(A, B)
    m = len(b_int[0])
    a_np = None
    residues = None     # per-entry CRT residues
    modulus = 1
    stream = prime_stream()
    rng = random.Random(seed ^ 0x5EE0)
    X = None
    tried = 0
    pending_since_attempt = 0
    max_int = max((max(abs(v) for v in row) for row in a_int), default=1)
    use_direct = max_int < (1 << 50)
    while tried < max_primes:
        p = next(stream)
        tried += 1
        if use_direct:
            if a_np is None:
                a_np = np.array(a_int, dtype=np.int64)
                b_np = np.array(b_int, dtype=np.int64)
            xp = solve_mod_p(a_np, b_np, p)
        else:
            amod = np.array([[v % p for v in row] for row in a_int],
                            dtype=np.int64)
            bmod = np.array([[v % p for v in row] for row in b_int],
                            dtype=np.int64)
            xp = solve_mod_p(amod, bmod, p)
        if xp is None:
            continue        # singular mod p; skip this prime
        if residues is None:
            residues = [[int(xp[i, j]) for j in range(m)] for i in range(n)]
            modulus = p
        else:
            inv = pow(modulus, -1, p)
            new_mod = modulus * p
            for i in range(n):
                ri = residues[i]
                for j in range(m):
                    t = ((int(xp[i, j]) - ri[j]) * inv) % p
                    ri[j] = ri[j] + modulus * t
            modulus = new_mod
        pending_since_attempt += 1
        if pending_since_attempt >= 2 or modulus > (1 << 80):
            pending_since_attempt = 0
            X = _try_reconstruct(residues, modulus)
            if X is not None:
                if (_project_check(a_int, b_int, X, rng)
                        and _project_check(a_int, b_int, X, rng)):
                    return ([row[0] for row in X] if flat else X)
                X = None
    raise SingularMatrixError(
        f"modular solve did not converge within {max_primes} primes")


def _try_reconstruct(residues, modulus):
    out = []
    for row in residues:
        orow = []
        for r in row:
            f = rational_reconstruct(r, modulus)
            if f is None:
                return None
            orow.append(f)
        out.append(orow)
    return out
