import json
import random
from fractions import Fraction as Q

import pytest
from hypothesis import given, settings, strategies as st

from cosetverify.arith import (
    DegenerateParameterError,
    LaurentPoly,
    TriangleParams,
    TruncSeries,
    binom_rat,
    binomial_one_minus,
    constant_term,
    format_rat,
    geometric_series,
    is_half_integer,
    neg_parity_sign,
    parse_rat,
    pochhammer_ratio,
    plethystic_ratio_rhs,
    segment_product,
    triangle_product,
)

rationals = st.fractions(min_value=-8, max_value=8, max_denominator=9)


def test_parse_format_roundtrip():
    for s, want in [("3/4", Q(3, 4)), ("-7/2", Q(-7, 2)), ("5", Q(5)),
                    (" 0/3 ", Q(0)), ("6/4", Q(3, 2))]:
        assert parse_rat(s) == want
    assert format_rat(Q(-3, 6)) == "-1/2"
    assert format_rat(Q(5)) == "5/1"
    assert parse_rat(format_rat(Q(22, 7))) == Q(22, 7)


@pytest.mark.parametrize("bad", ["1/0", "0.5", "1e3", "a/b", "1/2/3", ""])
def test_parse_rejects(bad):
    with pytest.raises(ValueError):
        parse_rat(bad)


def test_half_integer_predicate():
    assert is_half_integer(Q(3, 2))
    assert is_half_integer(Q(-4))
    assert not is_half_integer(Q(1, 3))


def test_binom_rat():
    assert binom_rat(Q(1, 2), 2) == Q(-1, 8)
    assert binom_rat(Q(5), 2) == 10
    assert binom_rat(Q(3), 0) == 1
    assert binom_rat(Q(3), -1) == 0


# --- triangle / segment products -------------------------------------------

A, E1, E2 = Q(7, 3), Q(1, 5), Q(-2, 7)


def test_triangle_small_cases():
    # n=1 exposes one factor, n=2 the three lattice points with i+j<2
    assert triangle_product(0, A, E1, E2) == 1
    assert triangle_product(1, A, E1, E2) == A
    assert triangle_product(2, A, E1, E2) == A * (A - E1) * (A - E2)
    # n=-1 is an empty product, n=-2 exposes only (i,j)=(1,1)
    assert triangle_product(-1, A, E1, E2) == 1
    assert triangle_product(-2, A, E1, E2) == A + E1 + E2


def test_triangle_params_object():
    p = TriangleParams(2, A, E1, E2)
    assert triangle_product(p) == triangle_product(2, A, E1, E2)


def test_triangle_eps_symmetry():
    for n in range(-5, 6):
        assert triangle_product(n, A, E1, E2) == triangle_product(n, A, E2, E1)


def test_triangle_reflection_sweep():
    """t_n(a) = t_{-n-1}(-a-e1-e2) * (-1)^{n(n+1)/2} for all integer n."""
    rng = random.Random(20240817)
    for _ in range(4):
        a = Q(rng.randint(-30, 30), rng.randint(1, 7))
        e1 = Q(rng.randint(1, 9), rng.randint(1, 5))
        e2 = Q(rng.randint(-9, -1), rng.randint(1, 5))
        for n in range(-6, 7):
            lhs = triangle_product(n, a, e1, e2)
            rhs = (triangle_product(-n - 1, -a - e1 - e2, e1, e2)
                   * (-1) ** (n * (n + 1) // 2))
            assert lhs == rhs, (n, a, e1, e2)


def test_triangle_degenerate_eps_stack():
    # with eps2 = 0 the triangle collapses to stacked linear factors
    for n in range(1, 6):
        want = Q(1)
        for i in range(n):
            want *= (A - i) ** (n - i)
        assert triangle_product(n, A, 1, 0) == want


def test_segment_basics():
    assert segment_product(1, A, E1, E2) == A
    # s_n * t_{n-1} = t_n by construction
    for n in range(-4, 5):
        assert (segment_product(n, A, E1, E2)
                * triangle_product(n - 1, A, E1, E2)
                == triangle_product(n, A, E1, E2))


def test_segment_reflection_sweep():
    # s_n(a) s_{-n}(-a-e1-e2) = (-1)^n
    rng = random.Random(11)
    for _ in range(4):
        a = Q(rng.randint(-20, 20), rng.randint(1, 6))
        e1 = Q(rng.randint(1, 8), rng.randint(1, 4))
        e2 = Q(rng.randint(-8, -1), rng.randint(1, 4))
        for n in range(-6, 7):
            try:
                prod = (segment_product(n, a, e1, e2)
                        * segment_product(-n, -a - e1 - e2, e1, e2))
            except DegenerateParameterError:
                continue
            assert prod == (-1) ** n, (n, a, e1, e2)


def test_segment_degenerate_raises():
    # t_0 = 1 never vanishes but t_1(0) = 0 does
    with pytest.raises(DegenerateParameterError):
        segment_product(2, 0, E1, E2)


def test_pochhammer_ratio_values():
    assert pochhammer_ratio(Q(1, 2), 2) == Q(3, 4)
    assert pochhammer_ratio(Q(5, 3), 0) == 1
    a = Q(7, 4)
    assert pochhammer_ratio(a, -1) == 1 / (a - 1)
    assert pochhammer_ratio(a, -2) == 1 / ((a - 1) * (a - 2))
    with pytest.raises(DegenerateParameterError):
        pochhammer_ratio(Q(2), -3)


@settings(max_examples=60, deadline=None)
@given(rationals, st.integers(-5, 5), st.integers(-5, 5))
def test_pochhammer_cocycle(a, m, n):
    """(a)_{m+n} = (a)_m (a+m)_n whenever every factor is invertible."""
    try:
        lhs = pochhammer_ratio(a, m + n)
        rhs = pochhammer_ratio(a, m) * pochhammer_ratio(a + m, n)
    except DegenerateParameterError:
        return
    assert lhs == rhs


def test_neg_parity_sign():
    assert neg_parity_sign(4) == 1
    assert neg_parity_sign(Q(7)) == -1
    with pytest.raises(ValueError):
        neg_parity_sign(Q(1, 2))


# --- truncated series -------------------------------------------------------

def _random_series(rng, variables, window, base=None):
    n = len(variables)
    if base is None:
        base = [0] * n
    coeffs = {}
    for _ in range(6):
        off = tuple(rng.randint(0, w) for w in window)
        coeffs[off] = Q(rng.randint(-5, 5), rng.randint(1, 3))
    return TruncSeries(variables, base, coeffs, window)


def test_series_ring_laws():
    rng = random.Random(3)
    vs = ("z", "x")
    w = (4, 4)
    for _ in range(6):
        f = _random_series(rng, vs, w)
        g = _random_series(rng, vs, w)
        h = _random_series(rng, vs, w)
        assert (f + g) * h == f * h + g * h
        assert f * g == g * f
        assert (f * g) * h == f * (g * h)
        assert f - f == TruncSeries(vs, [0, 0], {}, w)


def test_series_scalar_mix():
    z = TruncSeries.variable(("z",), "z", (5,))
    s = 2 * z + 1 - z.scale(Q(1, 2))
    assert s.coeff((0,)) == 1
    assert s.coeff((1,)) == Q(3, 2)


def test_series_inverse():
    vs = ("q",)
    f = TruncSeries(vs, [0], {(0,): Q(2), (1,): Q(-1), (3,): Q(1, 3)}, (6,))
    prod = f * f.inverse()
    one = TruncSeries.constant(vs, 1, (6,))
    assert prod == one


def test_series_inverse_requires_unit():
    z = TruncSeries.variable(("z",), "z", (4,))
    with pytest.raises(ValueError):
        z.inverse()


def test_geometric_series_coeffs():
    g = geometric_series(("q",), "q", (8,))
    assert all(g.coeff((j,)) == 1 for j in range(9))
    # arbitrary ratio monomial: 1/(1 - q*z^2)
    g2 = geometric_series(("q", "z"), "q", (4, 8), ratio_offsets=(1, 2))
    assert g2.coeff((3, 6)) == 1
    assert g2.coeff((3, 5)) == 0


def test_binomial_one_minus_matches_binom():
    e = Q(-5, 2)
    f = binomial_one_minus(("z",), "z", e, (7,))
    for j in range(8):
        assert f.coeff((j,)) == binom_rat(e, j) * (-1) ** j


def test_pow_binomial_composes():
    vs = ("z",)
    base = TruncSeries(vs, [0], {(0,): Q(1), (1,): Q(2), (2,): Q(-1)}, (6,))
    a, b = Q(1, 2), Q(-3, 2)
    lhs = base.pow_binomial(a).pow_binomial(b)
    rhs = base.pow_binomial(a * b)
    assert lhs == rhs


def test_pow_binomial_integer_agrees_with_mul():
    vs = ("z",)
    base = TruncSeries(vs, [0], {(0,): Q(1), (1,): Q(1, 3), (2,): Q(2)}, (5,))
    assert base.pow_binomial(3) == base * base * base


def test_fractional_base_exponents():
    z = TruncSeries.variable(("z",), "z", (4,))
    f = (1 + z).pow_binomial(Q(1, 2)).mul_var_power("z", Q(5, 2))
    assert f.base == (Q(5, 2),)
    d = f.deriv("z")
    # d/dz z^{5/2}(1+z)^{1/2} has leading term (5/2) z^{3/2}
    assert d.base == (Q(3, 2),)
    assert d.coeff((0,)) == Q(5, 2)


def test_euler_vs_deriv():
    vs = ("z",)
    f = TruncSeries(vs, [Q(1, 3)], {(0,): Q(2), (2,): Q(5)}, (4,))
    lhs = f.euler_d("z")
    rhs = f.deriv("z").mul_var_power("z", 1)
    assert lhs == rhs


def test_rebase_and_eq():
    vs = ("z",)
    f = TruncSeries(vs, [2], {(0,): Q(1), (1,): Q(4)}, (3,))
    g = TruncSeries(vs, [1], {(1,): Q(1), (2,): Q(4)}, (4,))
    assert f == g
    assert f.rebase([0]).base == (Q(0),)
    with pytest.raises(ValueError):
        f.rebase([Q(1, 2)])


def test_truncate_guard():
    f = TruncSeries(("z",), [0], {(1,): Q(1)}, (3,))
    assert f.truncate((2,)).window == (2,)
    with pytest.raises(ValueError):
        f.truncate((5,))
    with pytest.raises(ValueError):
        f.truncate((None,))


def test_coeff_outside_window_raises():
    f = TruncSeries(("z",), [0], {(1,): Q(1)}, (3,))
    assert f.coeff((2,)) == 0
    with pytest.raises(KeyError):
        f.coeff((4,))


def test_first_nonzero_total_degree_order():
    f = TruncSeries(("z", "x"), [0, 0],
                    {(2, 0): Q(1), (0, 1): Q(3), (1, 1): Q(2)}, (4, 4))
    assert f.first_nonzero() == (0, 1)
    assert TruncSeries(("z",), [0], {}, (3,)).is_zero()


def test_series_json_is_deterministic():
    f = TruncSeries(("z", "x"), [Q(1, 2), 0],
                    {(1, 0): Q(-2, 3), (0, 2): Q(5)}, (3, None))
    blob = json.dumps(f.to_json(), sort_keys=True)
    assert json.loads(blob) == {
        "vars": ["z", "x"],
        "base": {"z": "1/2", "x": "0/1"},
        "window": [3, None],
        "coeffs": [[[0, 2], "5/1"], [[1, 0], "-2/3"]],
    }


# --- Laurent polynomials ----------------------------------------------------

def test_laurent_ring_and_constant_term():
    x = LaurentPoly.monomial(("x",), (1,))
    xinv = LaurentPoly.monomial(("x",), (-1,))
    p = (1 - x) * (1 - xinv)
    assert constant_term(p) == 2
    assert p.coeff((1,)) == -1
    assert p.coeff((-1,)) == -1
    assert (x * xinv) == LaurentPoly.constant(("x",), 1)


def test_laurent_pow():
    x = LaurentPoly.monomial(("x",), (1,))
    p = (1 + x) ** 4
    assert [p.coeff((j,)) for j in range(5)] == [1, 4, 6, 4, 1]
    with pytest.raises(ValueError):
        (1 + x) ** -1


def test_laurent_multivariate_ct():
    vs = ("x", "y")
    x = LaurentPoly.monomial(vs, (1, 0))
    y = LaurentPoly.monomial(vs, (0, 1))
    xi = LaurentPoly.monomial(vs, (-1, 0))
    yi = LaurentPoly.monomial(vs, (0, -1))
    # CT of the n=2 Dyson product (1-x/y)(1-y/x) expanded by hand
    p = (1 - x * yi) * (1 - y * xi)
    assert constant_term(p) == 2


# --- plethystic ratio -------------------------------------------------------

def test_plethystic_trivial_labels():
    assert plethystic_ratio_rhs(Q(1, 3), Q(2, 5), Q(3, 7),
                                Q(1), Q(-1, 2), 0, 0, 0) == 1


def test_plethystic_integrality_guard():
    with pytest.raises(ValueError):
        plethystic_ratio_rhs(1, 1, 1, 1, Q(-1, 2), Q(1, 2), 0, 0)


def test_plethystic_single_step():
    # l = -1/2, m = n = ... pick labels summing to an integer and compare
    # against the expanded triangle products
    a1, a2, a3 = Q(2, 3), Q(3, 5), Q(4, 7)
    e1, e2 = Q(1), Q(-1, 3)
    got = plethystic_ratio_rhs(a1, a2, a3, e1, e2, Q(-1, 2), Q(1, 2), 0)
    num = (triangle_product(0, a1 + a2 + a3 + e1, e1, e2)
           * triangle_product(1, a1 + a2 - a3, e1, e2)
           * triangle_product(0, a1 - a2 + a3, e1, e2)
           * triangle_product(-1, -a1 + a2 + a3, e1, e2))
    den = (triangle_product(1, 2 * a1, e1, e2)
           * triangle_product(0, 2 * a2 + e1, e1, e2)
           * triangle_product(-1, 2 * a3 + e1, e1, e2))
    assert got == num / den
