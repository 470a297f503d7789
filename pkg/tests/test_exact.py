from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from kstab.exact import InconsistentSamples, Poly, Q, coefficient, fit_polynomial, poly_arith, q_str

small = st.integers(-20, 20)
coeffs = st.lists(st.fractions(min_value=-10, max_value=10, max_denominator=12), max_size=5)


def test_rationals_reduce_and_serialize():
    assert Q(6, 4) == Fraction(3, 2)
    assert Q("-4/6") == Fraction(-2, 3)
    assert q_str(Fraction(3, 1)) == "3"
    assert q_str(Fraction(-5, 6)) == "-5/6"
    with pytest.raises(TypeError):
        Q(0.5)


def test_arith_examples():
    x = Poly([0, 1])
    assert poly_arith(x + Poly([1]), x - Poly([1]), "mul") == Poly([-1, 0, 1])
    p = Poly([1, 2, 3])
    assert poly_arith(p, Poly(), "add") == p
    assert poly_arith(Poly([0, 0, Fraction(1, 2)]), 3, "scale") == Poly([0, 0, Fraction(3, 2)])
    with pytest.raises(ValueError):
        poly_arith(p, p, "pow")


def test_trailing_zeros_and_degree():
    assert Poly([1, 0, 0]).degree == 0
    assert Poly([0, 0]).degree == -1
    assert Poly([0, 0]).is_zero()
    assert (Poly([1, 1]) - Poly([1, 1])).degree == -1


def test_coefficient_examples():
    p = Poly([-1, 1, 2])
    assert coefficient(p, 2) == 2
    assert coefficient(p, 5) == 0
    assert coefficient(Poly([0, 0, 0, Fraction(1, 6)]), 3) == Fraction(1, 6)
    with pytest.raises(ValueError):
        coefficient(p, -1)


def test_str_rendering():
    assert str(Poly([-1, 1, 2])) == "2*r^2 + r - 1"
    assert str(Poly()) == "0"
    assert str(Poly([0, Fraction(-1, 2)])) == "-1/2*r"


def test_fit_examples():
    assert fit_polynomial([(0, -1), (1, 2), (2, 9), (3, 20)], 2) == Poly([-1, 1, 2])
    assert fit_polynomial([(0, 0), (1, 1)], 1) == Poly([0, 1])
    with pytest.raises(InconsistentSamples):
        fit_polynomial([(0, 0), (1, 1), (2, 3)], 1)


def test_fit_rejects_bad_samples():
    with pytest.raises(ValueError):
        fit_polynomial([(0, 1)], 1)
    with pytest.raises(ValueError):
        fit_polynomial([(1, 1), (1, 2)], 1)


@given(coeffs, coeffs, small)
def test_product_evaluates_pointwise(a, b, r):
    p, q = Poly(a), Poly(b)
    assert (p * q)(r) == p(r) * q(r)
    assert (p + q)(r) == p(r) + q(r)


@given(coeffs, st.integers(-5, 5), st.integers(0, 3))
def test_fit_inverts_evaluation(a, start, extra):
    p = Poly(a)
    deg = max(p.degree, 0)
    samples = [(r, p(r)) for r in range(start, start + deg + 1 + extra)]
    assert fit_polynomial(samples, deg) == p


@given(coeffs, coeffs)
def test_divmod_reconstructs(a, b):
    p, d = Poly(a), Poly(b)
    if d.is_zero():
        return
    q, r = p.divmod(d)
    assert q * d + r == p
    assert r.degree < d.degree
