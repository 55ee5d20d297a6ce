"""Exact rational scalars, truncated series, Laurent polynomials, and the
combinatorial products (triangle, segment, Pochhammer, finite plethystic
ratios) that every closed formula in this package is built from.

All arithmetic is exact: scalars are `fractions.Fraction`, series are sparse
mappings from integer offset tuples to rationals, and rational base exponents
(z^(p/q) prefactors) are carried separately from the integer lattice so that
two series are only ever compared where comparison is meaningful.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping

Rat = Fraction

ZERO = Fraction(0)
ONE = Fraction(1)


def rat(p, q=None) -> Fraction:
    """Build a Fraction from ints, strings like "3/7", or another Fraction."""
    if q is not None:
        return Fraction(p, q)
    if isinstance(p, Fraction):
        return p
    if isinstance(p, str):
        return parse_rat(p)
    if isinstance(p, int):
        return Fraction(p)
    raise TypeError(f"cannot make an exact rational from {type(p).__name__}")


def parse_rat(s: str) -> Fraction:
    """Parse "p/q" (q > 0 after reduction) or a bare integer string.

    Raises ValueError on anything else, including zero denominators; float
    syntax is rejected on purpose, nothing in this package rounds.
    """
    s = s.strip()
    if "/" in s:
        num, _, den = s.partition("/")
        n = int(num)
        d = int(den)
        if d == 0:
            raise ValueError(f"zero denominator in rational {s!r}")
        return Fraction(n, d)
    return Fraction(int(s))


def format_rat(r: Fraction) -> str:
    """Serialize as "p/q", lowest terms, q > 0, always slashed."""
    r = Fraction(r)
    return f"{r.numerator}/{r.denominator}"


def is_half_integer(x: Fraction) -> bool:
    return Fraction(x).denominator in (1, 2)


def as_int(x) -> int:
    f = Fraction(x)
    if f.denominator != 1:
        raise ValueError(f"expected an integer, got {f}")
    return f.numerator


def binom_rat(e: Fraction, j: int) -> Fraction:
    """Generalized binomial coefficient C(e, j) for rational e, integer j >= 0."""
    if j < 0:
        return ZERO
    out = ONE
    e = Fraction(e)
    for i in range(j):
        out = out * (e - i) / (i + 1)
    return out


# ---------------------------------------------------------------------------
# triangle and segment products
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TriangleParams:
    n: int
    alpha: Fraction
    eps1: Fraction
    eps2: Fraction


def triangle_product(p_or_n, alpha=None, eps1=None, eps2=None) -> Fraction:
    """Product over an integral triangle.

    n > 0:  prod_{i,j>=0, i+j<n} (alpha - i*eps1 - j*eps2)
    n < 0:  prod_{i,j>0, i+j<=-n} (alpha + i*eps1 + j*eps2)
    n = 0:  1

    Accepts either a TriangleParams or four plain arguments.  Symmetric in
    (eps1, eps2) by construction.
    """
    if isinstance(p_or_n, TriangleParams):
        n, alpha, eps1, eps2 = p_or_n.n, p_or_n.alpha, p_or_n.eps1, p_or_n.eps2
    else:
        n = as_int(p_or_n)
    alpha = Fraction(alpha)
    eps1 = Fraction(eps1)
    eps2 = Fraction(eps2)
    out = ONE
    if n > 0:
        for i in range(n):
            for j in range(n - i):
                out *= alpha - i * eps1 - j * eps2
    elif n < 0:
        for i in range(1, -n):
            for j in range(1, -n - i + 1):
                out *= alpha + i * eps1 + j * eps2
    return out


class DegenerateParameterError(ZeroDivisionError):
    """A product factor that must be inverted vanished at these parameters."""


def segment_product(n, alpha, eps1, eps2) -> Fraction:
    """t_n / t_{n-1}; the finite product over one boundary segment."""
    n = as_int(n)
    den = triangle_product(n - 1, alpha, eps1, eps2)
    if den == 0:
        raise DegenerateParameterError(
            f"segment_product: triangle factor t_{n-1}({alpha}) vanishes")
    return triangle_product(n, alpha, eps1, eps2) / den


def pochhammer_ratio(a, shift: int) -> Fraction:
    """prod_{j=0}^{shift-1}(a+j) for shift >= 0, reciprocal for shift < 0.

    Reduces a Gamma-function quotient with integer shift to a finite product.
    """
    a = Fraction(a)
    shift = as_int(shift)
    if shift >= 0:
        out = ONE
        for j in range(shift):
            out *= a + j
        return out
    out = ONE
    for j in range(1, -shift + 1):
        f = a - j
        if f == 0:
            raise DegenerateParameterError(
                f"pochhammer_ratio: zero factor at a={a}, shift={shift}")
        out *= f
    return 1 / out


def neg_parity_sign(e) -> Fraction:
    """(-1)**e for an exponent that must be an integer (checked)."""
    return ONE if as_int(e) % 2 == 0 else -ONE


# ---------------------------------------------------------------------------
# truncated multivariate power series
# ---------------------------------------------------------------------------

class TruncSeries:
    """Truncated power series in named variables with rational base exponents.

    Represents  prod_v v^{base[v]} * sum_{offsets} c[offsets] * prod_v v^{off_v}
    where every stored offset satisfies 0 <= off_v <= window[v].  Coefficients
    outside the window are unknown, never assumed zero; a window entry of None
    means the series is exact (polynomial) in that variable.
    """

    __slots__ = ("vars", "base", "coeffs", "window")

    def __init__(self, variables, base, coeffs, window):
        self.vars = tuple(variables)
        self.base = tuple(Fraction(b) for b in base)
        self.window = tuple(window)
        cleaned = {}
        for off, c in coeffs.items():
            c = Fraction(c)
            if c == 0:
                continue
            off = tuple(int(o) for o in off)
            for o, w in zip(off, self.window):
                if o < 0 or (w is not None and o > w):
                    raise ValueError(f"offset {off} outside window {self.window}")
            cleaned[off] = c
        self.coeffs = cleaned

    # -- constructors -------------------------------------------------------

    @classmethod
    def constant(cls, variables, value, window):
        zero = tuple(0 for _ in variables)
        return cls(variables, [ZERO] * len(tuple(variables)),
                   {zero: Fraction(value)}, window)

    @classmethod
    def variable(cls, variables, name, window):
        variables = tuple(variables)
        off = tuple(1 if v == name else 0 for v in variables)
        return cls(variables, [ZERO] * len(variables), {off: ONE}, window)

    # -- helpers ------------------------------------------------------------

    def _check_compat(self, other):
        if self.vars != other.vars:
            raise ValueError(f"variable mismatch {self.vars} vs {other.vars}")

    def _window_min(self, other):
        out = []
        for a, b in zip(self.window, other.window):
            if a is None:
                out.append(b)
            elif b is None:
                out.append(a)
            else:
                out.append(min(a, b))
        return tuple(out)

    def rebase(self, new_base):
        """Move integer parts of the base into offsets so base == new_base."""
        new_base = tuple(Fraction(b) for b in new_base)
        shifts = []
        for old, new in zip(self.base, new_base):
            d = old - new
            if d.denominator != 1:
                raise ValueError(f"bases differ by non-integer {d}")
            shifts.append(d.numerator)
        if all(s == 0 for s in shifts):
            return self
        coeffs = {}
        window = []
        for w, s in zip(self.window, shifts):
            window.append(None if w is None else w + s)
        for off, c in self.coeffs.items():
            noff = tuple(o + s for o, s in zip(off, shifts))
            if any(o < 0 for o in noff):
                raise ValueError("rebase would create negative offsets")
            coeffs[noff] = c
        return TruncSeries(self.vars, new_base, coeffs, window)

    # -- arithmetic ---------------------------------------------------------

    def __add__(self, other):
        if isinstance(other, (int, Fraction)):
            other = TruncSeries.constant(self.vars, other, self.window)
        self._check_compat(other)
        if self.base != other.base:
            # align on the elementwise-min base; both must differ by integers
            target = tuple(min(a, b) for a, b in zip(self.base, other.base))
            return self.rebase(target) + other.rebase(target)
        window = self._window_min(other)
        coeffs = dict(self.coeffs)
        for off, c in other.coeffs.items():
            coeffs[off] = coeffs.get(off, ZERO) + c
        ok = {o: c for o, c in coeffs.items()
              if all(w is None or x <= w for x, w in zip(o, window))}
        return TruncSeries(self.vars, self.base, ok, window)

    def __radd__(self, other):
        return self.__add__(other)

    def __neg__(self):
        return TruncSeries(self.vars, self.base,
                           {o: -c for o, c in self.coeffs.items()}, self.window)

    def __sub__(self, other):
        if isinstance(other, (int, Fraction)):
            other = TruncSeries.constant(self.vars, other, self.window)
        return self + (-other)

    def scale(self, c):
        c = Fraction(c)
        if c == 0:
            return TruncSeries(self.vars, self.base, {}, self.window)
        return TruncSeries(self.vars, self.base,
                           {o: c * v for o, v in self.coeffs.items()}, self.window)

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            return self.scale(other)
        self._check_compat(other)
        window = self._window_min(other)
        base = tuple(a + b for a, b in zip(self.base, other.base))
        coeffs = {}
        for o1, c1 in self.coeffs.items():
            for o2, c2 in other.coeffs.items():
                off = tuple(a + b for a, b in zip(o1, o2))
                if any(w is not None and x > w for x, w in zip(off, window)):
                    continue
                coeffs[off] = coeffs.get(off, ZERO) + c1 * c2
        return TruncSeries(self.vars, base, coeffs, window)

    def __rmul__(self, other):
        return self.__mul__(other)

    def shift_base(self, deltas):
        base = tuple(b + Fraction(d) for b, d in zip(self.base, deltas))
        return TruncSeries(self.vars, base, self.coeffs, self.window)

    def truncate(self, window):
        window = tuple(window)
        for new, old in zip(window, self.window):
            if old is not None and (new is None or new > old):
                raise ValueError("truncate cannot widen a window")
        coeffs = {o: c for o, c in self.coeffs.items()
                  if all(w is None or x <= w for x, w in zip(o, window))}
        return TruncSeries(self.vars, self.base, coeffs, window)

    def _lattice(self):
        """The same coefficients with all base exponents set to zero."""
        if all(b == 0 for b in self.base):
            return self
        return TruncSeries(self.vars, [ZERO] * len(self.vars),
                           self.coeffs, self.window)

    def inverse(self):
        """1/self; requires an invertible lattice constant term."""
        zero = tuple(0 for _ in self.vars)
        c0 = self.coeffs.get(zero, ZERO)
        if c0 == 0:
            raise ValueError("inverse requires a nonzero constant term")
        if any(w is None for w in self.window):
            raise ValueError("inverse needs a finite window in every variable")
        t = (self._lattice() - c0).scale(-1 / c0)
        # 1/(c0 (1 - t)) = (1/c0) sum t^j; t is nilpotent within the window
        acc = TruncSeries.constant(self.vars, 1, self.window)
        out = acc
        bound = sum(self.window)
        for _ in range(bound):
            acc = acc * t
            if not acc.coeffs:
                break
            out = out + acc
        return TruncSeries(self.vars, [-b for b in self.base],
                           out.scale(1 / c0).coeffs, out.window)

    def pow_binomial(self, e):
        """self**e for rational e; the lattice constant term must be 1.

        The base exponents are multiplied by e, so z^{b}(1+...) maps to
        z^{be}(1+...)^e with the lattice part expanded binomially.
        """
        zero = tuple(0 for _ in self.vars)
        if self.coeffs.get(zero, ZERO) != 1:
            raise ValueError("pow_binomial requires constant term 1")
        if any(w is None for w in self.window):
            raise ValueError("pow_binomial needs a finite window")
        e = Fraction(e)
        t = self._lattice() - 1
        acc = TruncSeries.constant(self.vars, 1, self.window)
        out = acc
        bound = sum(self.window)
        for j in range(1, bound + 1):
            acc = acc * t
            if not acc.coeffs:
                break
            out = out + acc.scale(binom_rat(e, j))
        return TruncSeries(self.vars, [b * e for b in self.base],
                           out.coeffs, out.window)

    def euler_d(self, var):
        """Apply v * d/dv (multiplies each term by its full exponent)."""
        i = self.vars.index(var)
        coeffs = {}
        for off, c in self.coeffs.items():
            e = self.base[i] + off[i]
            if e != 0:
                coeffs[off] = c * e
        return TruncSeries(self.vars, self.base, coeffs, self.window)

    def deriv(self, var):
        """d/dv: euler derivative followed by division by v (base shifts by -1)."""
        out = self.euler_d(var)
        i = self.vars.index(var)
        deltas = [0] * len(self.vars)
        deltas[i] = -1
        return out.shift_base(deltas)

    def mul_var_power(self, var, e):
        i = self.vars.index(var)
        deltas = [0] * len(self.vars)
        deltas[i] = Fraction(e)
        return self.shift_base(deltas)

    # -- inspection ---------------------------------------------------------

    def coeff(self, offsets) -> Fraction:
        off = tuple(int(o) for o in offsets)
        for o, w in zip(off, self.window):
            if w is not None and o > w:
                raise KeyError(f"offset {off} outside window {self.window}")
        return self.coeffs.get(off, ZERO)

    def is_zero(self) -> bool:
        return not self.coeffs

    def first_nonzero(self):
        """Smallest (by total degree, then lex) offset with nonzero coefficient."""
        if not self.coeffs:
            return None
        return min(self.coeffs, key=lambda o: (sum(o), o))

    def __eq__(self, other):
        if not isinstance(other, TruncSeries):
            return NotImplemented
        if self.vars != other.vars:
            return False
        try:
            target = tuple(min(a, b) for a, b in zip(self.base, other.base))
            a = self.rebase(target)
            b = other.rebase(target)
        except ValueError:
            return False
        w = a._window_min(b)
        return a.truncate(w).coeffs == b.truncate(w).coeffs

    def __hash__(self):
        raise TypeError("TruncSeries is not hashable")

    def __repr__(self):
        items = sorted(self.coeffs.items())[:6]
        body = ", ".join(f"{o}:{c}" for o, c in items)
        more = "" if len(self.coeffs) <= 6 else f", +{len(self.coeffs)-6} terms"
        return (f"TruncSeries({self.vars}, base={self.base}, "
                f"window={self.window}, {{{body}{more}}})")

    def to_json(self):
        return {
            "vars": list(self.vars),
            "base": {v: format_rat(b) for v, b in zip(self.vars, self.base)},
            "window": list(self.window),
            "coeffs": [[list(o), format_rat(c)]
                       for o, c in sorted(self.coeffs.items())],
        }


def geometric_series(variables, var, window, ratio_offsets=None):
    """1/(1 - m) for the monomial m given by ratio_offsets (default: var^1)."""
    variables = tuple(variables)
    if ratio_offsets is None:
        ratio_offsets = tuple(1 if v == var else 0 for v in variables)
    one = TruncSeries.constant(variables, 1, window)
    m = TruncSeries(variables, [ZERO] * len(variables),
                    {tuple(ratio_offsets): ONE}, window)
    return (one - m).inverse()


def binomial_one_minus(variables, var, e, window):
    """(1 - v)^e as a TruncSeries over the given variables."""
    variables = tuple(variables)
    off = tuple(1 if v == var else 0 for v in variables)
    base = TruncSeries(variables, [ZERO] * len(variables),
                       {tuple(0 for _ in variables): ONE, off: -ONE}, window)
    return base.pow_binomial(e)


# ---------------------------------------------------------------------------
# Laurent polynomials
# ---------------------------------------------------------------------------

class LaurentPoly:
    """Finitely supported Laurent polynomial with exact coefficients.

    Unlike TruncSeries this is never truncated: all arithmetic is exact, and
    exponents may be negative.  Used for constant-term evaluations.
    """

    __slots__ = ("vars", "terms")

    def __init__(self, variables, terms=None):
        self.vars = tuple(variables)
        t = {}
        for exps, c in (terms or {}).items():
            c = Fraction(c)
            if c == 0:
                continue
            t[tuple(int(e) for e in exps)] = c
        self.terms = t

    @classmethod
    def constant(cls, variables, value):
        variables = tuple(variables)
        return cls(variables, {tuple(0 for _ in variables): Fraction(value)})

    @classmethod
    def monomial(cls, variables, exps, coeff=ONE):
        return cls(variables, {tuple(exps): Fraction(coeff)})

    def _check(self, other):
        if self.vars != other.vars:
            raise ValueError("variable mismatch")

    def __add__(self, other):
        if isinstance(other, (int, Fraction)):
            other = LaurentPoly.constant(self.vars, other)
        self._check(other)
        t = dict(self.terms)
        for e, c in other.terms.items():
            t[e] = t.get(e, ZERO) + c
        return LaurentPoly(self.vars, t)

    __radd__ = __add__

    def __neg__(self):
        return LaurentPoly(self.vars, {e: -c for e, c in self.terms.items()})

    def __sub__(self, other):
        if isinstance(other, (int, Fraction)):
            other = LaurentPoly.constant(self.vars, other)
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __truediv__(self, other):
        c = Fraction(other)
        return LaurentPoly(self.vars, {e: v / c for e, v in self.terms.items()})

    def __bool__(self):
        return bool(self.terms)

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            c = Fraction(other)
            return LaurentPoly(self.vars,
                               {e: c * v for e, v in self.terms.items()})
        self._check(other)
        t = {}
        for e1, c1 in self.terms.items():
            for e2, c2 in other.terms.items():
                e = tuple(a + b for a, b in zip(e1, e2))
                t[e] = t.get(e, ZERO) + c1 * c2
        return LaurentPoly(self.vars, t)

    __rmul__ = __mul__

    def __pow__(self, n: int):
        if n < 0:
            raise ValueError("negative powers of a general Laurent polynomial")
        out = LaurentPoly.constant(self.vars, 1)
        b = self
        while n:
            if n & 1:
                out = out * b
            b = b * b
            n >>= 1
        return out

    def __eq__(self, other):
        return (isinstance(other, LaurentPoly) and self.vars == other.vars
                and self.terms == other.terms)

    def __hash__(self):
        raise TypeError("LaurentPoly is not hashable")

    def coeff(self, exps) -> Fraction:
        return self.terms.get(tuple(int(e) for e in exps), ZERO)

    def __repr__(self):
        items = sorted(self.terms.items())[:6]
        body = ", ".join(f"{e}:{c}" for e, c in items)
        more = "" if len(self.terms) <= 6 else f", +{len(self.terms)-6} terms"
        return f"LaurentPoly({self.vars}, {{{body}{more}}})"


def constant_term(p: LaurentPoly) -> Fraction:
    """Coefficient of the all-zero exponent tuple."""
    return p.terms.get(tuple(0 for _ in p.vars), ZERO)


# ---------------------------------------------------------------------------
# finite plethystic ratio (triangle-product form)
# ---------------------------------------------------------------------------

def plethystic_ratio_rhs(a1, a2, a3, eps1, eps2, l, m, n) -> Fraction:
    """Triangle-product ratio attached to the labels (l, m, n), up to sign.

    All seven parameters are exact rationals; l, m, n are half-integers with
    l+m+n integral.  The sign convention is calibrated empirically against
    the closed three-point formula (see coset.plethystic_sign_calibration);
    this function returns the unsigned product ratio exactly as structured,
    with t-indices -m-n-l, m-n-l, -m+n-l, -m-n+l over 2a-type arguments.
    """
    a1, a2, a3 = Fraction(a1), Fraction(a2), Fraction(a3)
    eps1, eps2 = Fraction(eps1), Fraction(eps2)
    l, m, n = Fraction(l), Fraction(m), Fraction(n)
    if (l + m + n).denominator != 1:
        raise ValueError("labels must satisfy the integrality constraint")

    def t(idx, alpha):
        return triangle_product(as_int(idx), alpha, eps1, eps2)

    num = (t(-m - n - l, a1 + a2 + a3 + eps1)
           * t(m - n - l, a1 + a2 - a3)
           * t(-m + n - l, a1 - a2 + a3)
           * t(-m - n + l, -a1 + a2 + a3))
    den = (t(-2 * l, 2 * a1)
           * t(-2 * n, 2 * a2 + eps1)
           * t(-2 * m, 2 * a3 + eps1))
    if den == 0:
        raise DegenerateParameterError("plethystic ratio denominator vanishes")
    return num / den
