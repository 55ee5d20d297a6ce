"""Graded Verma modules for affine sl2 and for the Virasoro algebra.

States are sparse dictionaries mapping PBW monomials to coefficients.  The
coefficient ring is pluggable: plain Fractions for numeric work, or any
object supporting +, *, - and integer multiples (polynomial coefficients are
used elsewhere to amortize structure over many parameter points).

Affine conventions.  Generators e_n, h_n, f_n with
    [e_m, f_l] = h_{m+l} + m delta_{m+l} K
    [h_m, e_l] = 2 e_{m+l},  [h_m, f_l] = -2 f_{m+l}
    [h_m, h_l] = 2 m delta_{m+l} K
on the highest-weight vector: h_0 v = lam v, K v = k v, and the creation
operators are e_n, h_n with n <= -1 and f_n with n <= 0 (an f_0 tower).

Monomials are tuples of (cls, mode) pairs with cls 0=e, 1=h, 2=f, kept in
PBW order: classes ascending, modes weakly decreasing inside a class.
"""

from __future__ import annotations

from fractions import Fraction
from functools import lru_cache

E, H, F = 0, 1, 2
_CLS_NAME = "ehf"


def mono_str(mono) -> str:
    """Serialize a PBW monomial like "e[-1]h[-2]f[0]^2"."""
    if not mono:
        return "v"
    out = []
    i = 0
    while i < len(mono):
        g, n = mono[i]
        j = i
        while j < len(mono) and mono[j] == (g, n):
            j += 1
        p = j - i
        out.append(f"{_CLS_NAME[g]}[{n}]" + (f"^{p}" if p > 1 else ""))
        i = j
    return "".join(out)


def mono_level(mono) -> int:
    return -sum(n for _, n in mono)


def mono_weight_shift(mono) -> int:
    return sum(2 if g == E else (-2 if g == F else 0) for g, _ in mono)


def _is_creation(g, n) -> bool:
    return n <= -1 if g in (E, H) else n <= 0


def _add_term(vec, mono, c):
    cur = vec.get(mono)
    if cur is None:
        if c:
            vec[mono] = c
    else:
        s = cur + c
        if s:
            vec[mono] = s
        else:
            del vec[mono]


class AffineVerma:
    """A highest-weight module over affine sl2 at (lam, k), kappa = k + 2."""

    def __init__(self, lam, k, memoize=True):
        self.lam = lam
        self.k = k
        self.kappa = k + 2
        self._memo = {} if memoize else None

    # -- single-generator action --------------------------------------------

    def apply(self, g, n, vec):
        """Act by the generator (g, n) on a vector {mono: coeff}."""
        out = {}
        for mono, c in vec.items():
            for m2, c2 in self._apply_mono(g, n, mono).items():
                _add_term(out, m2, c * c2)
        return out

    def apply_word(self, word, vec):
        """Act by a sequence of generators, rightmost first."""
        for g, n in reversed(word):
            vec = self.apply(g, n, vec)
        return vec

    def _commutator(self, g1, n1, g2, n2):
        """[X1, X2] as a list of ((cls, mode), coeff) plus scalar terms
        encoded as (None, coeff)."""
        out = []
        if g1 == E and g2 == H:
            out.append(((E, n1 + n2), -2))
        elif g1 == H and g2 == E:
            out.append(((E, n1 + n2), 2))
        elif g1 == H and g2 == F:
            out.append(((F, n1 + n2), -2))
        elif g1 == F and g2 == H:
            out.append(((F, n1 + n2), 2))
        elif g1 == E and g2 == F:
            out.append(((H, n1 + n2), 1))
            if n1 + n2 == 0:
                out.append((None, n1 * self.k))
        elif g1 == F and g2 == E:
            out.append(((H, n1 + n2), -1))
            if n1 + n2 == 0:
                out.append((None, -n2 * self.k))
        elif g1 == H and g2 == H:
            if n1 + n2 == 0:
                out.append((None, 2 * n1 * self.k))
        return out

    def _apply_mono(self, g, n, mono):
        key = (g, n, mono)
        if self._memo is not None:
            hit = self._memo.get(key)
            if hit is not None:
                return hit
        out = self._apply_mono_raw(g, n, mono)
        if self._memo is not None:
            self._memo[key] = out
        return out

    def _apply_mono_raw(self, g, n, mono):
        if not mono:
            # highest-weight rules
            if g == E:
                return {((E, n),): 1} if n <= -1 else {}
            if g == H:
                if n <= -1:
                    return {((H, n),): 1}
                if n == 0:
                    return {(): self.lam}
                return {}
            if n <= 0:
                return {((F, n),): 1}
            return {}
        g1, n1 = mono[0]
        if _is_creation(g, n) and (g, -n) <= (g1, -n1):
            return {((g, n),) + mono: 1}
        rest = mono[1:]
        out = {}
        # X (Y rest) = Y (X rest) + [X, Y] rest
        inner = self._apply_mono(g, n, rest)
        for m2, c2 in inner.items():
            for m3, c3 in self._apply_mono(g1, n1, m2).items():
                _add_term(out, m3, c2 * c3)
        for gen, c in self._commutator(g, n, g1, n1):
            if gen is None:
                _add_term(out, rest, c)
            else:
                for m2, c2 in self._apply_mono(gen[0], gen[1], rest).items():
                    _add_term(out, m2, c * c2)
        return out

    # -- basis and Gram ------------------------------------------------------

    @staticmethod
    @lru_cache(maxsize=None)
    def basis(level: int, weight_shift: int):
        """PBW monomials at the given (level, h-weight shift) bigrade."""
        if weight_shift % 2:
            return ()
        out = []
        for e_part, h_part, f_part in _efh_partitions(level, weight_shift // 2):
            # modes weakly decreasing inside each class
            mono = tuple((E, -m) for m in sorted(e_part)) \
                 + tuple((H, -m) for m in sorted(h_part)) \
                 + tuple((F, -m) for m in sorted(f_part))
            out.append(mono)
        return tuple(out)

    def vacuum_coeff(self, vec):
        return vec.get((), 0)

    def pair_mono(self, mono_bra, vec):
        """Shapovalov pairing <X_I v, w>: apply the adjoint of X_I letter by
        letter (leftmost letter first) and read off the vacuum coefficient."""
        adj = {E: F, H: H, F: E}
        for g, n in mono_bra:
            vec = self.apply(adj[g], -n, vec)
            if not vec:
                return 0
        return self.vacuum_coeff(vec)

    def gram(self, level: int, weight_shift: int):
        """Gram matrix of the Shapovalov form on one bigraded slice."""
        basis = self.basis(level, weight_shift)
        rows = []
        for bi in basis:
            row = []
            for bj in basis:
                row.append(self.pair_mono(bi, {bj: 1}))
            rows.append(row)
        return rows

    def gram_column(self, level: int, weight_shift: int, vec):
        """Pairings of every basis monomial against the vector `vec`."""
        basis = self.basis(level, weight_shift)
        return [self.pair_mono(b, dict(vec)) for b in basis]

    # -- Sugawara -------------------------------------------------------------

    def sugawara_L0_top(self):
        return self.lam * (self.lam + 2) / (4 * self.kappa)

    def sugawara_apply(self, n: int, vec):
        """Act by the Sugawara Virasoro mode L_n (rational coefficients).

        Normally ordered bilinear in the currents:
        (1/2kappa) sum_m [ e_m f_{n-m} + f_m e_{n-m} + h_m h_{n-m} / 2 ]
        with creation modes (m <= -1) on the left, the rest right-ordered.
        """
        if not vec:
            return {}
        if self.kappa == 0:
            raise ZeroDivisionError("Sugawara undefined at kappa = 0")
        lmax = max(mono_level(m) for m in vec) + abs(n) + 2
        out = {}
        pref = Fraction(1, 2) / self.kappa
        half = Fraction(1, 2)
        for m in range(-lmax, lmax + 1):
            if m <= -1:
                pairs = [((E, m), (F, n - m), 1), ((F, m), (E, n - m), 1),
                         ((H, m), (H, n - m), half)]
            else:
                pairs = [((F, n - m), (E, m), 1), ((E, n - m), (F, m), 1),
                         ((H, n - m), (H, m), half)]
            for left, right, w in pairs:
                # cheap level check: right factor must not overshoot
                inner = self.apply(right[0], right[1], vec)
                if not inner:
                    continue
                inner = self.apply(left[0], left[1], inner)
                for mono, c in inner.items():
                    _add_term(out, mono, c * w * pref)
        return out

    # -- degeneracy criteria ---------------------------------------------------

    def kac_kazhdan_scan(self, max_level: int):
        """All (m, n) with m, n >= 1 and m*n <= max_level where one of the
        two degeneracy lines vanishes."""
        hits = []
        lam, k = self.lam, self.k
        for m in range(1, max_level + 1):
            for n in range(1, max_level // m + 1):
                a = m * lam + (m - 1) * (k - lam) + (2 * m - 1) - n
                b = (m - 1) * lam + m * (k - lam) + (2 * m - 1) - n
                if a == 0 or b == 0:
                    hits.append((m, n))
        return hits

    def singular_vector_check(self, vec) -> bool:
        """True iff every raising generator annihilates the vector."""
        if not vec:
            return False
        lmax = max(mono_level(m) for m in vec) + 1
        gens = [(E, 0)]
        for n in range(1, lmax + 1):
            gens += [(E, n), (H, n), (F, n)]
        return all(not self.apply(g, n, dict(vec)) for g, n in gens)

    def character_closed(self, max_level: int, max_down: int):
        """Bigraded dimensions from the closed product form, as a dict
        (level, weight_shift) -> count, for level <= max_level and
        weight shifts in [-2*max_down, 2*max_level]."""
        # three mode towers: h_{-m} (m>=1), e_{-m} (m>=1, shift +2),
        # f_{-m} (m>=0, shift -2); each contributes 1/(1 - q^m z^shift)
        table = {(0, 0): 1}
        for shift, start in ((0, 1), (2, 1), (-2, 0)):
            for mode in range(start, max_level + 1):
                new = dict(table)
                for (lv, sh), c in sorted(table.items()):
                    r = 1
                    while True:
                        nlv = lv + r * mode
                        nsh = sh + r * shift
                        if nlv > max_level or nsh < -2 * max_down:
                            break
                        new[(nlv, nsh)] = new.get((nlv, nsh), 0) + c
                        r += 1
                table = new
        return {bg: c for bg, c in table.items()
                if bg[0] <= max_level and -2 * max_down <= bg[1] <= 2 * max_level}

    def character_brute(self, max_level: int, max_down: int):
        counts = {}
        for lv in range(0, max_level + 1):
            for sh in range(-2 * max_down, 2 * lv + 1, 2):
                b = self.basis(lv, sh)
                if b:
                    counts[(lv, sh)] = len(b)
        return counts


def _efh_partitions(level: int, half_shift: int):
    """Triples (e_partition, h_partition, f_partition) of mode magnitudes:
    e parts >= 1, h parts >= 1, f parts >= 0, total level fixed, and
    (#e - #f) = half_shift.  f parts of size 0 are the f_0 tower; only
    finitely many fit at a fixed weight."""
    out = []
    for p in range(0, level + 1):          # number of e factors
        r = p - half_shift                  # number of f factors
        if r < 0:
            continue
        for e_lv in range(p, level + 1):
            for e_part in _partitions_exact(e_lv, p, 1):
                rem = level - e_lv
                for f_lv in range(0, rem + 1):
                    for f_part in _partitions_exact(f_lv, r, 0):
                        h_lv = rem - f_lv
                        for h_part in _partitions_all(h_lv):
                            out.append((e_part, h_part, f_part))
    return out


@lru_cache(maxsize=None)
def _partitions_exact(total: int, parts: int, min_part: int):
    """Partitions of `total` into exactly `parts` parts, each >= min_part,
    weakly decreasing tuples."""
    if parts == 0:
        return ((),) if total == 0 else ()
    out = []
    hi = total - min_part * (parts - 1)
    for first in range(max(min_part, (total + parts - 1) // parts), hi + 1):
        for rest in _partitions_exact(total - first, parts - 1, min_part):
            if not rest or first >= rest[0]:
                out.append((first,) + rest)
    return tuple(out)


@lru_cache(maxsize=None)
def _partitions_all(total: int):
    out = [()]
    for parts in range(1, total + 1):
        out.extend(_partitions_exact(total, parts, 1))
    return tuple(p for p in out if sum(p) == total) if total else ((),)


# ---------------------------------------------------------------------------
# Virasoro
# ---------------------------------------------------------------------------

class VirVerma:
    """Virasoro Verma module with highest weight delta and central charge c.

    Monomials are weakly decreasing tuples of positive integers (m1, m2, ...)
    standing for L_{-m1} L_{-m2} ... v.
    """

    def __init__(self, delta, c, memoize=True):
        self.delta = delta
        self.c = c
        self._memo = {} if memoize else None

    def apply(self, n: int, vec):
        out = {}
        for mono, c in vec.items():
            for m2, c2 in self._apply_mono(n, mono).items():
                _add_term(out, m2, c * c2)
        return out

    def _apply_mono(self, n, mono):
        key = (n, mono)
        if self._memo is not None:
            hit = self._memo.get(key)
            if hit is not None:
                return hit
        out = self._apply_mono_raw(n, mono)
        if self._memo is not None:
            self._memo[key] = out
        return out

    def _apply_mono_raw(self, n, mono):
        if not mono:
            if n <= -1:
                return {(-n,): 1}
            if n == 0:
                return {(): self.delta}
            return {}
        m1 = mono[0]
        if n <= -1 and -n >= m1:
            return {(-n,) + mono: 1}
        rest = mono[1:]
        out = {}
        inner = self._apply_mono(n, rest)
        for m2, c2 in inner.items():
            for m3, c3 in self._apply_mono(-m1, m2).items():
                _add_term(out, m3, c2 * c3)
        # [L_n, L_{-m1}] = (n + m1) L_{n - m1} + c/12 (n^3 - n) delta_{n, m1}
        coef = n + m1
        if coef:
            for m2, c2 in self._apply_mono(n - m1, rest).items():
                _add_term(out, m2, coef * c2)
        if n == m1:
            central = (self.c * (n ** 3 - n)) / 12
            if central:
                for m2, c2 in {rest: 1}.items():
                    _add_term(out, m2, central * c2)
        return out

    @staticmethod
    @lru_cache(maxsize=None)
    def basis(level: int):
        return _partitions_all(level) if level else ((),)

    def vacuum_coeff(self, vec):
        return vec.get((), 0)

    def pair_mono(self, mono_bra, vec):
        for m in mono_bra:
            vec = self.apply(m, vec)
            if not vec:
                return 0
        return self.vacuum_coeff(vec)

    def gram(self, level: int):
        basis = self.basis(level)
        return [[self.pair_mono(bi, {bj: 1}) for bj in basis] for bi in basis]

    def singular_vector_check(self, vec) -> bool:
        if not vec:
            return False
        lmax = max((sum(m) for m in vec), default=0) + 1
        return all(not self.apply(n, dict(vec)) for n in range(1, lmax + 1))


def vir_delta(P, b_sq):
    """delta = (b + 1/b)^2 / 4 - P^2 given rational (bP, b^2).

    Callers on the rational parameter chart pass P as bP / b^2-consistent
    data; see coset.py for the locus maps.  Here P is taken literally, so
    this helper is only used where P itself is rational.
    """
    q = b_sq + 2 + 1 / b_sq     # (b + 1/b)^2
    return q / 4 - P * P


def vir_central_charge(b_sq):
    q = b_sq + 2 + 1 / b_sq
    return 1 + 6 * q


def vir_degenerate_delta(r: int, s: int, b_sq):
    """delta_{r,s} with P_{r,s} = (r/b + s b)/2, expressed through b^2 only."""
    # 4 P^2 = r^2 / b^2 + 2 r s + s^2 b^2
    p_sq4 = Fraction(r * r) / b_sq + 2 * r * s + s * s * b_sq
    q = b_sq + 2 + 1 / b_sq
    return (q - p_sq4) / 4
