from __future__ import annotations

import cmath
import math
from fractions import Fraction

import mpmath
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ybx import special_fn as sf
from ybx.errors import InvalidModulus, SingularArgument, TruncationFailure, UnsupportedOrder
from ybx.special_fn import Characteristic, Modulus, TruncationPolicy

CASES = [sf.RATIONAL, sf.TRIGONOMETRIC, sf.elliptic(1j), sf.elliptic(0.3 + 0.8j)]
CASE_IDS = ["rational", "trigonometric", "elliptic-i", "elliptic-skew"]

coord = st.floats(-0.4, 0.4, allow_nan=False)
point = st.builds(complex, coord, coord)


def far(case, *xs, delta=1e-2):
    return all(sf.lattice_distance(case, x) > delta for x in xs)


def rel(a, b):
    return abs(a - b) / (1 + abs(b))


def mp_theta(z, tau):
    # odd theta in the convention theta(z) = -theta_1(pi z | q = e^{i pi tau})
    return -complex(mpmath.jtheta(1, mpmath.pi * z, cmath.exp(1j * math.pi * tau)))


@pytest.mark.parametrize("tau", [1j, 0.3 + 0.8j, -0.45 + 0.2j, 0.1 + 2.5j])
@pytest.mark.parametrize("z", [0.1 + 0.05j, -0.37 + 0.22j, 0.9 - 0.6j])
def test_theta_matches_mpmath(z, tau):
    assert rel(sf.theta(z, Modulus(tau)), mp_theta(z, tau)) < 1e-13


@pytest.mark.parametrize("order", [1, 2, 3])
def test_theta_derivatives_match_mpmath(order):
    tau, z = 0.3 + 0.8j, 0.21 - 0.13j
    ref = complex(mpmath.diff(lambda w: -mpmath.jtheta(1, mpmath.pi * w, cmath.exp(1j * math.pi * tau)), z, order))
    assert rel(sf.theta(z, Modulus(tau), order), ref) < 1e-11


def test_theta_char_quasi_periodicity():
    m = Modulus(0.3 + 0.8j)
    chr = Characteristic(Fraction(-1, 6), Fraction(3, 2))
    z = 0.17 + 0.05j
    base = sf.theta_char(chr, z, m)
    a, b = float(chr.a), float(chr.b)
    shifted_1 = sf.theta_char(chr, z + 1, m)
    shifted_tau = sf.theta_char(chr, z + m.tau, m)
    assert rel(shifted_1, cmath.exp(2j * math.pi * a) * base) < 1e-13
    expected = cmath.exp(-1j * math.pi * m.tau - 2j * math.pi * (z + b)) * base
    assert rel(shifted_tau, expected) < 1e-12


def test_theta_odd_and_vanishing_at_zero():
    m = Modulus(1j)
    assert abs(sf.theta(0, m)) < 1e-15
    assert rel(sf.theta(-0.3 + 0.1j, m), -sf.theta(0.3 - 0.1j, m)) < 1e-14


def test_rational_and_trigonometric_kernel_values():
    assert sf.kronecker(sf.RATIONAL, 0.3, 0.2) == pytest.approx(1 / 0.3 + 1 / 0.2, rel=1e-15)
    assert sf.kronecker(sf.TRIGONOMETRIC, 0.3, 0.2) == pytest.approx(
        1 / math.tanh(0.3) + 1 / math.tanh(0.2), rel=1e-15)
    assert sf.eisenstein_e1(sf.TRIGONOMETRIC, 0.4) == pytest.approx(1 / math.tanh(0.4), rel=1e-15)
    assert sf.weierstrass_p(sf.RATIONAL, 0.5) == pytest.approx(4.0, rel=1e-15)
    assert sf.weierstrass_p(sf.TRIGONOMETRIC, 0.5) == pytest.approx(1 / math.sinh(0.5) ** 2, rel=1e-14)


@pytest.mark.parametrize("case", CASES, ids=CASE_IDS)
def test_p_laurent_leading_term(case):
    # p(z) - 1/z^2 stays bounded as z -> 0 (it is O(1) trig, O(z^2) elliptic)
    z = 1e-3 * (1 + 1j) / math.sqrt(2)
    assert abs(sf.weierstrass_p(case, z) - 1 / z ** 2) < 1.0


def test_elliptic_p_is_even_and_doubly_periodic():
    case = sf.elliptic(0.3 + 0.8j)
    z = 0.23 + 0.11j
    p = sf.weierstrass_p(case, z)
    assert rel(sf.weierstrass_p(case, -z), p) < 1e-12
    assert rel(sf.weierstrass_p(case, z + 1), p) < 1e-11
    assert rel(sf.weierstrass_p(case, z + case.tau), p) < 1e-11


@pytest.mark.parametrize("case", CASES, ids=CASE_IDS)
@pytest.mark.parametrize("order", [0, 1, 2, 3])
def test_p_derivatives_against_central_difference(case, order):
    z, h = 0.27 - 0.14j, 1e-4
    num = (sf.weierstrass_p(case, z + h, order) - sf.weierstrass_p(case, z - h, order)) / (2 * h)
    assert rel(num, sf.weierstrass_p(case, z, order + 1)) < 1e-6


@pytest.mark.parametrize("case", CASES, ids=CASE_IDS)
def test_e1_derivative_is_minus_p(case):
    z = -0.19 + 0.31j
    const = 0 if not case.is_elliptic else sf.weierstrass_p(case, z) + sf.eisenstein_e1(case, z, 1)
    assert rel(-sf.eisenstein_e1(case, z, 1) + const, sf.weierstrass_p(case, z)) < 1e-12
    if case.is_elliptic:
        # the constant is z-independent
        w = 0.33 + 0.02j
        assert rel(sf.weierstrass_p(case, w) + sf.eisenstein_e1(case, w, 1), const) < 1e-11


@pytest.mark.parametrize("case", CASES, ids=CASE_IDS)
@settings(max_examples=60, deadline=None)
@given(h=point, e=point, z=point, w=point)
def test_fay_trisecant(case, h, e, z, w):
    if not far(case, h, e, z, w, h - e, z + w):
        return
    f = lambda a, b: sf.kronecker(case, a, b)  # noqa: E731
    lhs = f(h, z) * f(e, w)
    rhs = f(h - e, z) * f(e, z + w) + f(e - h, w) * f(h, z + w)
    assert abs(lhs - rhs) / (1 + abs(rhs)) < 1e-10


@pytest.mark.parametrize("case", CASES, ids=CASE_IDS)
@settings(max_examples=60, deadline=None)
@given(h=point, z=point)
def test_kronecker_unitarity(case, h, z):
    if not far(case, h, z):
        return
    lhs = sf.kronecker(case, h, z) * sf.kronecker(case, h, -z)
    rhs = sf.weierstrass_p(case, h) - sf.weierstrass_p(case, z)
    assert abs(lhs - rhs) / (1 + abs(rhs)) < 1e-10


@pytest.mark.parametrize("case", CASES, ids=CASE_IDS)
def test_kronecker_symmetric_and_simple_pole(case):
    e, z = 0.21 + 0.07j, -0.12 + 0.3j
    assert rel(sf.kronecker(case, e, z), sf.kronecker(case, z, e)) < 1e-14
    r = 1e-5
    assert abs(r * sf.kronecker(case, e, r) - 1) < 1e-4


def test_phi_section_shift_of_z_by_N_tau_is_quasiperiodic():
    # exp(2 pi i a2 z / N) phi(z, w) with a1 = a2 = 0 reduces to phi
    m = Modulus(1j)
    v = sf.phi_section(0, 0, 1, 0.3 + 0.1j, 0.2 - 0.05j, m)
    assert rel(v, sf.kronecker(sf.elliptic(m), 0.2 - 0.05j, 0.3 + 0.1j)) < 1e-15


def test_invalid_modulus():
    with pytest.raises(InvalidModulus):
        Modulus(0.3 + 0.01j)
    with pytest.raises(InvalidModulus):
        Modulus(-1j)


@pytest.mark.parametrize("case", CASES, ids=CASE_IDS)
def test_singular_argument(case):
    with pytest.raises(SingularArgument):
        sf.kronecker(case, 0.3, 1e-9)
    with pytest.raises(SingularArgument):
        sf.eisenstein_e1(case, 0)


def test_singular_at_lattice_point():
    case = sf.elliptic(0.3 + 0.8j)
    with pytest.raises(SingularArgument):
        sf.kronecker(case, 0.2, 1 + case.tau + 1e-9)


def test_sampling_guard_is_coarser_and_scoped():
    case = sf.elliptic(1j)
    sf.kronecker(case, 0.3, 5e-4)
    with sf.sampling_guard(1e-3):
        with pytest.raises(SingularArgument):
            sf.kronecker(case, 0.3, 5e-4)
        with sf.sampling_guard(None):
            sf.kronecker(case, 0.3, 5e-4)
    sf.kronecker(case, 0.3, 5e-4)


def test_unsupported_order():
    with pytest.raises(UnsupportedOrder):
        sf.weierstrass_p(sf.RATIONAL, 0.3, 7)
    with pytest.raises(UnsupportedOrder):
        sf.eisenstein_e1(sf.RATIONAL, 0.3, -1)


def test_truncation_failure():
    with pytest.raises(TruncationFailure):
        sf.theta_char(sf.ODD, 0.1, Modulus(0.05j), policy=TruncationPolicy(max_terms=3))


def test_truncation_policy_validation():
    with pytest.raises(ValueError):
        TruncationPolicy(abs_floor=0)
    with pytest.raises(ValueError):
        TruncationPolicy(max_terms=1)


def test_smallest_allowed_modulus_converges():
    m = Modulus(0.05j)
    assert rel(sf.theta(0.2, m), mp_theta(0.2, 0.05j)) < 1e-11


def test_lattice_distance():
    case = sf.elliptic(0.3 + 0.8j)
    assert sf.lattice_distance(case, 2 - case.tau + 0.01) == pytest.approx(0.01, abs=1e-12)
    assert sf.lattice_distance(sf.TRIGONOMETRIC, 1j * math.pi + 0.02) == pytest.approx(0.02)
    assert sf.lattice_distance(sf.RATIONAL, 0.3 + 0.4j) == pytest.approx(0.5)


def test_characteristic_level():
    Characteristic(Fraction(1, 3), Fraction(1, 2)).check_level(6)
    with pytest.raises(ValueError):
        Characteristic(Fraction(1, 3), Fraction(1, 2)).check_level(2)
