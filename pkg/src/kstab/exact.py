"""Exact rational scalars and univariate polynomials over the rationals.

Rationals are :class:`fractions.Fraction` (always stored reduced, positive
denominator). :class:`Poly` is a small immutable dense polynomial type with the
handful of operations the slope and Futaki computations need, plus exact
Newton interpolation used as a brute-force oracle.
"""
from __future__ import annotations

from fractions import Fraction
from typing import Iterable, Sequence, Union

Rational = Fraction
RationalLike = Union[int, Fraction, str]


class InconsistentSamples(ValueError):
    """Samples do not lie on a polynomial of the declared degree."""


def Q(value: RationalLike, den: int = 1) -> Fraction:
    """Coerce ints, fractions and ``"p/q"`` strings to a reduced Fraction."""
    if isinstance(value, float):
        raise TypeError("floats are not accepted as exact rationals")
    return Fraction(value) / den


def q_str(value: Fraction) -> str:
    """Serialize as ``"num/den"``, omitting the denominator when it is 1."""
    value = Fraction(value)
    if value.denominator == 1:
        return str(value.numerator)
    return f"{value.numerator}/{value.denominator}"


class Poly:
    """Dense univariate polynomial with Fraction coefficients.

    ``coeffs[i]`` is the coefficient of ``r**i``; trailing zeros are stripped so
    the zero polynomial has an empty coefficient tuple.
    """

    __slots__ = ("coeffs",)

    def __init__(self, coeffs: Iterable[RationalLike] = ()):
        cs = [Q(c) for c in coeffs]
        while cs and cs[-1] == 0:
            cs.pop()
        self.coeffs: tuple[Fraction, ...] = tuple(cs)

    @classmethod
    def monomial(cls, power: int, coeff: RationalLike = 1) -> "Poly":
        return cls([0] * power + [coeff])

    @property
    def degree(self) -> int:
        """Degree, with -1 for the zero polynomial."""
        return len(self.coeffs) - 1

    def is_zero(self) -> bool:
        return not self.coeffs

    def coefficient(self, power: int) -> Fraction:
        if power < 0:
            raise ValueError(f"negative power {power}")
        if power >= len(self.coeffs):
            return Fraction(0)
        return self.coeffs[power]

    @property
    def leading(self) -> Fraction:
        return self.coeffs[-1] if self.coeffs else Fraction(0)

    def __call__(self, x: RationalLike) -> Fraction:
        x = Q(x)
        acc = Fraction(0)
        for c in reversed(self.coeffs):
            acc = acc * x + c
        return acc

    def __add__(self, other: "Poly") -> "Poly":
        if not isinstance(other, Poly):
            other = Poly([other])
        n = max(len(self.coeffs), len(other.coeffs))
        return Poly(self.coefficient(i) + other.coefficient(i) for i in range(n))

    __radd__ = __add__

    def __neg__(self) -> "Poly":
        return Poly(-c for c in self.coeffs)

    def __sub__(self, other: "Poly") -> "Poly":
        if not isinstance(other, Poly):
            other = Poly([other])
        return self + (-other)

    def __mul__(self, other: Union["Poly", RationalLike]) -> "Poly":
        if not isinstance(other, Poly):
            return self.scale(other)
        if self.is_zero() or other.is_zero():
            return Poly()
        out = [Fraction(0)] * (len(self.coeffs) + len(other.coeffs) - 1)
        for i, a in enumerate(self.coeffs):
            for j, b in enumerate(other.coeffs):
                out[i + j] += a * b
        return Poly(out)

    __rmul__ = __mul__

    def scale(self, c: RationalLike) -> "Poly":
        c = Q(c)
        return Poly(c * a for a in self.coeffs)

    def divmod(self, divisor: "Poly") -> tuple["Poly", "Poly"]:
        """Exact long division; returns ``(quotient, remainder)``."""
        if divisor.is_zero():
            raise ZeroDivisionError("polynomial division by zero")
        rem = list(self.coeffs)
        dq = divisor.degree
        lead = divisor.leading
        quot = [Fraction(0)] * max(len(rem) - dq, 0)
        for shift in range(len(rem) - dq - 1, -1, -1):
            c = rem[shift + dq] / lead
            quot[shift] = c
            if c:
                for i, d in enumerate(divisor.coeffs):
                    rem[shift + i] -= c * d
        return Poly(quot), Poly(rem[:dq] if dq > 0 else [])

    def __eq__(self, other: object) -> bool:
        if isinstance(other, Poly):
            return self.coeffs == other.coeffs
        if isinstance(other, (int, Fraction)):
            return self.coeffs == Poly([other]).coeffs
        return NotImplemented

    def __hash__(self) -> int:
        return hash(self.coeffs)

    def __repr__(self) -> str:
        return f"Poly({self})"

    def __str__(self) -> str:
        if not self.coeffs:
            return "0"
        terms = []
        for i in range(len(self.coeffs) - 1, -1, -1):
            c = self.coeffs[i]
            if c == 0:
                continue
            mono = "" if i == 0 else ("r" if i == 1 else f"r^{i}")
            if mono and abs(c) == 1:
                body = mono
            else:
                body = q_str(abs(c)) + (f"*{mono}" if mono else "")
            sign = "-" if c < 0 else "+"
            terms.append((sign, body))
        first_sign, first_body = terms[0]
        out = ("-" if first_sign == "-" else "") + first_body
        for sign, body in terms[1:]:
            out += f" {sign} {body}"
        return out

    def to_json(self) -> list[str]:
        return [q_str(c) for c in self.coeffs]


def poly_arith(p: Poly, q: Union[Poly, RationalLike], op: str) -> Poly:
    """Dispatch ``add``, ``mul`` or ``scale`` (``q`` is then a scalar)."""
    if op == "add":
        return p + q
    if op == "mul":
        return p * q
    if op == "scale":
        return p.scale(q)
    raise ValueError(f"unknown op {op!r}")


def coefficient(p: Poly, power: int) -> Fraction:
    return p.coefficient(power)


def fit_polynomial(samples: Sequence[tuple[int, RationalLike]], degree: int) -> Poly:
    """Interpolate exactly through ``samples`` with a polynomial of degree <= ``degree``.

    The first ``degree + 1`` samples determine the polynomial by Newton divided
    differences; every remaining sample must then be reproduced exactly, otherwise
    :class:`InconsistentSamples` is raised.
    """
    pts = [(Q(x), Q(v)) for x, v in samples]
    if len(pts) < degree + 1:
        raise ValueError(f"need at least {degree + 1} samples, got {len(pts)}")
    xs = [x for x, _ in pts]
    if len(set(xs)) != len(xs):
        raise ValueError("sample arguments must be distinct")

    base = pts[: degree + 1]
    nx = [x for x, _ in base]
    dd = [v for _, v in base]
    # in-place divided-difference table; dd[i] ends as f[x0..xi]
    for level in range(1, len(dd)):
        for i in range(len(dd) - 1, level - 1, -1):
            dd[i] = (dd[i] - dd[i - 1]) / (nx[i] - nx[i - level])

    poly = Poly([dd[-1]])
    for i in range(len(dd) - 2, -1, -1):
        poly = poly * Poly([-nx[i], 1]) + Poly([dd[i]])

    for x, v in pts[degree + 1:]:
        if poly(x) != v:
            raise InconsistentSamples(
                f"sample ({x}, {v}) is off the degree-{degree} fit {poly}: got {poly(x)}"
            )
    return poly
