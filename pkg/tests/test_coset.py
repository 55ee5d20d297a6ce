"""Three-point closed form pinned by independent routes, its recursion and
symmetries swept exactly, and the blowup identities compared window-exactly.

Anchors for the closed form: brute free-field matrix elements of the
charge-1/2 intertwiners reproduce it including sign and normalization; the
identity-middle column collapses to the extremal norms (closed and brute
routes); a recursion replay rebuilds a deep coefficient from the base
placement; and the blowup checks tie the same data to the Gram-solved block
machinery on both geometries.
"""

import random
from fractions import Fraction as Q

import pytest

from cosetverify.arith import DegenerateParameterError
from cosetverify.coset import (
    ThreePointLabel,
    _blowup_sphere,
    _blowup_torus,
    blowup_sphere_check,
    blowup_torus_check,
    blowup_weight_factorization_check,
    floor_parity_sign,
    normalized_three_point,
    outgoing_norm,
    plethystic_three_point,
    recurrence_check,
    recurrence_step,
    symmetry_check,
    three_point_ratio,
)
from cosetverify.freefield import (
    coset_norm,
    intertwiner_matrix_elements,
    tilde_norm_closed,
)
from cosetverify.report import FAIL, PASS

HALF = Q(1, 2)


def _rand_q(rng, dens=(101, 103, 107)):
    """Generic rationals over large prime denominators; the degenerate loci
    (triangle factor zeros, Verma null vectors) all live on small-height
    lattices these cannot hit."""
    while True:
        v = Q(rng.randint(-240, 240), rng.choice(dens))
        if v.denominator != 1:
            return v


def _params(rng):
    # weights and coupling over disjoint primes: no relation
    # weight + 1 in kappa*Z + Z can hold, so no denominator factor or
    # Shapovalov norm vanishes anywhere in the sweeps, reflected weights
    # kappa - 2 - weight included
    mu, nu, lam = (_rand_q(rng) for _ in range(3))
    return mu, nu, lam, _rand_q(rng, dens=(109,))


def _triples(maxhalf, parity):
    """Label triples with all |2*label| <= maxhalf and l+m+n integer
    (parity 0) or half-odd (parity 1)."""
    vals = [Q(p, 2) for p in range(-maxhalf, maxhalf + 1)]
    for m in vals:
        for n in vals:
            for l in vals:
                if (l + m + n).denominator == (1 if parity == 0 else 2):
                    yield m, n, l


# ---------------------------------------------------------------------------
# closed form: normalization, vanishing, independent oracles
# ---------------------------------------------------------------------------

def test_base_placements_are_one():
    rng = random.Random(2)
    placements = [(0, 0, 0), (HALF, 0, HALF), (0, HALF, HALF), (HALF, HALF, 0)]
    for _ in range(3):
        mu, nu, lam, kappa = _params(rng)
        for m, n, l in placements:
            t = ThreePointLabel(m, n, l, mu, nu, lam, kappa)
            assert three_point_ratio(t) == 1


def test_fusion_violation_gives_exact_zero():
    t = ThreePointLabel(HALF, 0, 0, Q(3, 101), Q(5, 103), Q(7, 107), Q(7, 3))
    assert not t.fuses()
    assert three_point_ratio(t) == 0


def test_label_validation():
    with pytest.raises(ValueError):
        ThreePointLabel(Q(1, 3), 0, 0, 1, 1, 1, 2)
    with pytest.raises(DegenerateParameterError):
        ThreePointLabel(0, 0, 0, 1, 1, 1, 0)


def test_degenerate_denominator_raises():
    # l = -1/2 puts (lam+1)/(-kappa) itself in the denominator; lam = -1
    # zeroes it while everything else stays generic
    t = ThreePointLabel(0, HALF, -HALF, Q(3, 101), Q(5, 103), -1, Q(7, 3))
    with pytest.raises(DegenerateParameterError):
        three_point_ratio(t)


@pytest.mark.parametrize("lam,k", [(Q(1, 3), Q(5, 2)), (Q(-7, 11), Q(3, 5))])
def test_intertwiner_oracle_pins_closed_form(lam, k):
    """Brute tensor-module matrix elements of both intertwiner components
    equal the closed form with no leftover constant."""
    kappa = k + 2
    for m2 in range(-2, 3):
        m = Q(m2, 2)
        plus, minus = intertwiner_matrix_elements(m2, lam, k)
        up = ThreePointLabel(m + HALF, HALF, m, lam, 0, lam, kappa)
        down = ThreePointLabel(m - HALF, HALF, m, lam, 0, lam, kappa)
        assert three_point_ratio(up) == plus
        assert three_point_ratio(down) == minus


def test_identity_middle_collapses_to_norms():
    rng = random.Random(3)
    for _ in range(3):
        _, _, lam, kappa = _params(rng)
        for l2 in range(-4, 5):
            t = ThreePointLabel(Q(l2, 2), 0, Q(l2, 2), lam, 0, lam, kappa)
            assert three_point_ratio(t) == tilde_norm_closed(l2, lam, kappa - 2)


def test_identity_middle_matches_brute_norms():
    # negative labels carry the normalized vector, so the pairing sees the
    # reciprocal of the raw Shapovalov norm there
    lam, k = Q(2, 7), Q(1, 2)
    for l2 in range(0, -4, -1):
        t = ThreePointLabel(Q(l2, 2), 0, Q(l2, 2), lam, 0, lam, k + 2)
        raw = coset_norm(l2, lam, k)
        expect = raw if l2 >= 0 else 1 / raw
        assert three_point_ratio(t) == expect


# ---------------------------------------------------------------------------
# recursion in the outgoing label
# ---------------------------------------------------------------------------

def test_recurrence_single_case():
    # midpoint 0 with a spin-1/2 bra: endpoints -1/2 and +1/2
    t = ThreePointLabel(HALF, 0, 0, Q(3, 7), Q(-2, 5), Q(1, 3), Q(7, 3))
    rep = recurrence_check(t)
    assert rep.passed


def test_recurrence_sweep():
    rng = random.Random(11)
    for _ in range(10):
        mu, nu, lam, kappa = _params(rng)
        for m, n, l in _triples(4, parity=1):
            rep = recurrence_check(
                ThreePointLabel(m, n, l, mu, nu, lam, kappa))
            assert rep.status == PASS, rep.residual


def test_recurrence_replay_rebuilds_deep_coefficient():
    rng = random.Random(13)
    mu, nu, lam, kappa = _params(rng)
    acc = Q(1)
    for mid in (-HALF, -Q(3, 2)):
        acc *= recurrence_step(
            ThreePointLabel(0, 0, mid, mu, nu, lam, kappa))
    target = ThreePointLabel(0, 0, -2, mu, nu, lam, kappa)
    assert acc == three_point_ratio(target)


def test_recurrence_rejects_integral_midpoint():
    t = ThreePointLabel(HALF, 0, HALF, Q(3, 101), Q(5, 103), Q(7, 107), Q(7, 3))
    with pytest.raises(ValueError):
        recurrence_step(t)


# ---------------------------------------------------------------------------
# symmetries
# ---------------------------------------------------------------------------

def test_symmetry_sweep():
    rng = random.Random(11)
    for _ in range(10):
        mu, nu, lam, kappa = _params(rng)
        for m, n, l in _triples(4, parity=0):
            rep = symmetry_check(
                ThreePointLabel(m, n, l, mu, nu, lam, kappa))
            assert rep.status == PASS, rep.residual


# ---------------------------------------------------------------------------
# spin-1/2 specializations: sector sign made explicit
# ---------------------------------------------------------------------------

def _half_lattice(lo, hi):
    p = lo
    while p <= hi:
        yield Q(p, 2)
        p += 1


def test_spin_half_identity_weight_columns_are_signed_norms():
    """Middle insertion with identity weight: the coefficient equals the
    outgoing-shifted norm times the alternating sector sign exactly."""
    rng = random.Random(17)
    for _ in range(2):
        _, _, lam, kappa = _params(rng)
        for l in _half_lattice(-3, 3):
            up = ThreePointLabel(l + HALF, HALF, l, lam, 0, lam, kappa)
            down = ThreePointLabel(l - HALF, HALF, l, lam, 0, lam, kappa)
            s = floor_parity_sign(l)
            assert three_point_ratio(up) == \
                s * tilde_norm_closed(int(2 * l), lam, kappa - 2)
            assert three_point_ratio(down) == \
                s * tilde_norm_closed(int(2 * l) - 1, lam, kappa - 2)


def test_spin_half_shifted_weight_columns_constant_after_sector_sign():
    """The two spin-1/2 insertion columns with weight-shifted legs are
    l-independent once the sector sign is quotiented out, and genuinely
    alternate without it."""
    rng = random.Random(19)
    for _ in range(2):
        _, _, lam, kappa = _params(rng)
        ratios_i, ratios_j, raw_i = [], [], []
        for l in _half_lattice(-3, 3):
            ti = ThreePointLabel(l - HALF, -HALF, l, lam + 1, 1, lam, kappa)
            vi = three_point_ratio(ti) / tilde_norm_closed(
                int(2 * l), lam, kappa - 2)
            raw_i.append(vi)
            ratios_i.append(floor_parity_sign(l) * vi)
            tj = ThreePointLabel(l + HALF, -HALF, l, lam - 1, 1, lam, kappa)
            vj = three_point_ratio(tj) / tilde_norm_closed(
                int(2 * l) + 1, lam - 1, kappa - 2)
            ratios_j.append(floor_parity_sign(l) * vj)
        assert len(set(ratios_i)) == 1
        assert len(set(ratios_j)) == 1
        # the uncorrected column alternates: it is not a constant sequence
        assert len(set(raw_i)) == 2
        assert raw_i[0] == -raw_i[1]


# ---------------------------------------------------------------------------
# plethystic route
# ---------------------------------------------------------------------------

def test_plethystic_route_agrees_with_closed_form():
    rng = random.Random(23)
    for _ in range(3):
        mu, nu, lam, kappa = _params(rng)
        for m, n, l in _triples(4, parity=0):
            t = ThreePointLabel(m, n, l, mu, nu, lam, kappa)
            assert plethystic_three_point(t) == normalized_three_point(t)


def test_outgoing_norm_of_vacuum_is_one():
    t = ThreePointLabel(0, 0, 0, Q(3, 101), Q(5, 103), Q(7, 107), Q(7, 3))
    assert outgoing_norm(t) == 1


# ---------------------------------------------------------------------------
# blowup identities
# ---------------------------------------------------------------------------

SPHERE_SEED = 31


def _sphere_params():
    rng = random.Random(SPHERE_SEED)
    kappa = Q(7, 3)
    lam = _rand_q(rng)
    mus = tuple(_rand_q(rng) for _ in range(4))
    return mus, lam, kappa


def test_blowup_sphere_trivial_window():
    mus, lam, kappa = _sphere_params()
    rep = blowup_sphere_check(mus, lam, kappa, 0, 0)
    assert rep.passed


def test_blowup_sphere_window_2x2():
    mus, lam, kappa = _sphere_params()
    rep = blowup_sphere_check(mus, lam, kappa, 2, 2)
    assert rep.status == PASS, rep.residual


def test_blowup_sphere_perturbed_weight_fails():
    mus, lam, kappa = _sphere_params()
    rep = _blowup_sphere(mus, lam, kappa, 2, 2, 1)
    assert rep.status == FAIL
    # the perturbed shift enters at depth l*l = 1, one column to the side
    assert "z-offset 1" in rep.residual


def test_blowup_torus_window():
    rng = random.Random(47)
    kappa = Q(7, 3)
    lam, nu = _rand_q(rng), _rand_q(rng)
    rep = blowup_torus_check(nu, lam, kappa, 2, 1)
    assert rep.status == PASS, rep.residual


def test_blowup_torus_identity_weight_specialization():
    # all shift weights collapse to 1 here: pure character bookkeeping
    rng = random.Random(47)
    kappa = Q(7, 3)
    lam = _rand_q(rng)
    rep = blowup_torus_check(0, lam, kappa, 2, 1)
    assert rep.status == PASS, rep.residual


def test_blowup_torus_dropped_shifts_fail_at_depth_one():
    rng = random.Random(47)
    kappa = Q(7, 3)
    lam, nu = _rand_q(rng), _rand_q(rng)
    rep = _blowup_torus(nu, lam, kappa, 2, 1, frozenset({1, -1}))
    assert rep.status == FAIL
    assert "q-offset 1" in rep.residual


def test_blowup_weight_factorization():
    mus, lam, kappa = _sphere_params()
    rep = blowup_weight_factorization_check(mus, lam, kappa, 2)
    assert rep.status == PASS, rep.residual
