import random
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from lbpde.exact import (CRat, SingularMatrixError, format_rational, identity,
                         i_power, mat_det, mat_inv, mat_mul, parse_rational)

rationals = st.fractions(min_value=-50, max_value=50, max_denominator=20)
crats = st.builds(CRat, rationals, rationals)


@given(rationals)
def test_rational_format_parse_round_trip(x):
    assert parse_rational(format_rational(x)) == x


def test_parse_rational_forms():
    assert parse_rational("3/4") == Fraction(3, 4)
    assert parse_rational("-5/2") == Fraction(-5, 2)
    assert parse_rational("7") == Fraction(7)
    assert parse_rational(7) == Fraction(7)
    with pytest.raises(ValueError):
        parse_rational("x/y")


@given(crats, crats, crats)
def test_crat_ring_laws(a, b, c):
    assert a + b == b + a
    assert a * b == b * a
    assert (a + b) + c == a + (b + c)
    assert a * (b + c) == a * b + a * c


@given(crats)
def test_crat_division_inverts(a):
    if a:
        assert (a / a) == CRat(1)
        assert a * (CRat(1) / a) == CRat(1)


def test_crat_conjugate_and_i_powers():
    i = CRat(0, 1)
    assert i * i == CRat(-1)
    assert i_power(0) == CRat(1)
    assert i_power(1) == i
    assert i_power(2) == CRat(-1)
    assert i_power(3) == -i
    assert i_power(7) == i_power(3)
    z = CRat(Fraction(1, 2), Fraction(-2, 3))
    assert z.conjugate().im == Fraction(2, 3)
    assert z * z.conjugate() == CRat(z.re * z.re + z.im * z.im)


def test_crat_mixed_arithmetic_with_fraction():
    z = CRat(1, 2)
    assert Fraction(1, 2) * z == CRat(Fraction(1, 2), 1)
    assert 1 + z == CRat(2, 2)
    assert z / Fraction(2) == CRat(Fraction(1, 2), 1)


def _random_matrix(rng, n):
    return [[Fraction(rng.randint(-9, 9), rng.randint(1, 4)) for _ in range(n)]
            for _ in range(n)]


def test_mat_inv_exact_round_trip():
    rng = random.Random(7)
    for n in (1, 2, 3, 5, 9):
        while True:
            m = _random_matrix(rng, n)
            if mat_det(m) != 0:
                break
        assert mat_mul(m, mat_inv(m)) == identity(n)
        assert mat_mul(mat_inv(m), m) == identity(n)


def test_singular_matrix_detected():
    m = [[Fraction(1), Fraction(2)], [Fraction(2), Fraction(4)]]
    assert mat_det(m) == 0
    with pytest.raises(SingularMatrixError):
        mat_inv(m)


def test_det_multiplicative():
    rng = random.Random(11)
    a = _random_matrix(rng, 4)
    b = _random_matrix(rng, 4)
    assert mat_det(mat_mul(a, b)) == mat_det(a) * mat_det(b)
