"""Donaldson-Futaki invariant of the deformation to the normal cone of P(L1) in P(E).

For ``E`` an extension of ``L2`` by ``L1`` over a genus-``g`` curve with degrees
``d1, d2`` (both ample), the Hilbert and weight polynomials are

    p(r) = sum_{i=0}^{r} h0(L1^i L2^(r-i))
    w(r) = sum_{i=0}^{r} i * h0(L1^i L2^(r-i))

and ``F1 = a1*b0 - a0*b1`` with ``p = a0 r^2 + a1 r + ...`` and
``w = b0 r^3 + b1 r^2 + ...``. Closed forms come from power sums; the
``direct_*`` functions sum Riemann-Roch term by term and serve as the oracle.
"""
from __future__ import annotations

import enum
import warnings
from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Optional, Union

from .bundles import CurveData, Exact, h0_line
from .exact import Poly, fit_polynomial, q_str


class NotAmple(ValueError):
    pass


class FutakiVerdict(enum.Enum):
    K_UNSTABLE_WITNESS = "KUnstableWitness"
    NOT_K_POLYSTABLE = "NotKPolystable"
    NO_OBSTRUCTION = "NoObstructionFromThisConfig"


def _check(g: int, d1: int, d2: int) -> None:
    if g < 0:
        raise ValueError("genus must be >= 0")
    if d1 <= 0 or d2 <= 0:
        raise NotAmple(f"degrees ({d1}, {d2}) are not both positive")


def r_min(g: int, d1: int, d2: int) -> int:
    """Smallest r with r*min(d1, d2) > 2g - 2, so every summand is in the RR range."""
    _check(g, d1, d2)
    return max(0, (2 * g - 2) // min(d1, d2) + 1)


def _s1() -> Poly:
    # sum_{i=0}^r i
    return Poly([0, Fraction(1, 2), Fraction(1, 2)])


def _s2() -> Poly:
    # sum_{i=0}^r i^2
    return Poly([0, Fraction(1, 6), Fraction(1, 2), Fraction(1, 3)])


def hilbert_poly(g: int, d1: int, d2: int) -> tuple[Poly, int]:
    """``p(r) = (d1 + d2) r(r+1)/2 + (1 - g)(r + 1)``, valid for ``r >= r_min``."""
    _check(g, d1, d2)
    r = Poly([0, 1])
    p = _s1().scale(d1 + d2) + (r + Poly([1])).scale(1 - g)
    return p, r_min(g, d1, d2)


def weight_poly(g: int, d1: int, d2: int) -> tuple[Poly, int]:
    """``w(r) = (d1 - d2) S2(r) + (d2 r + 1 - g) S1(r)`` with ``Sk`` the power sums."""
    _check(g, d1, d2)
    w = _s2().scale(d1 - d2) + Poly([1 - g, d2]) * _s1()
    return w, r_min(g, d1, d2)


def direct_hilbert(g: int, d1: int, d2: int, r: int) -> int:
    """Term-by-term sum of h0 over the graded pieces; requires the exact RR range."""
    curve = CurveData(g)
    total = 0
    for i in range(r + 1):
        h = h0_line(curve, i * d1 + (r - i) * d2)
        if not isinstance(h, Exact):
            raise ValueError(f"r = {r} is below the exact Riemann-Roch range")
        total += h.count
    return total


def direct_weight(g: int, d1: int, d2: int, r: int) -> int:
    curve = CurveData(g)
    total = 0
    for i in range(r + 1):
        h = h0_line(curve, i * d1 + (r - i) * d2)
        if not isinstance(h, Exact):
            raise ValueError(f"r = {r} is below the exact Riemann-Roch range")
        total += i * h.count
    return total


def oracle_polys(g: int, d1: int, d2: int, extra: int = 6) -> tuple[Poly, Poly]:
    """Fit p and w from direct summation at ``r_min .. r_min + extra`` (overdetermined)."""
    r0 = r_min(g, d1, d2)
    rs = range(r0, r0 + extra + 1)
    p = fit_polynomial([(r, direct_hilbert(g, d1, d2, r)) for r in rs], 2)
    w = fit_polynomial([(r, direct_weight(g, d1, d2, r)) for r in rs], 3)
    return p, w


@dataclass(frozen=True)
class Constant:
    value: Fraction


class NotProportional:
    def __repr__(self):
        return "NotProportional"

    def __eq__(self, other):
        return isinstance(other, NotProportional)

    def __hash__(self):
        return hash("NotProportional")


def ratio_of(p: Poly, w: Poly) -> Union[Constant, NotProportional]:
    """Exact ``c`` with ``w == c * r * p``, if one exists."""
    quot, rem = w.divmod(p * Poly([0, 1]))
    if rem.is_zero() and quot.degree <= 0:
        return Constant(quot.coefficient(0))
    return NotProportional()


def proportionality_ratio(g: int, d1: int, d2: int) -> Union[Constant, NotProportional]:
    p, _ = hilbert_poly(g, d1, d2)
    w, _ = weight_poly(g, d1, d2)
    return ratio_of(p, w)


@dataclass(frozen=True)
class FutakiReport:
    genus: int
    d1: int
    d2: int
    p: Poly
    w: Poly
    a0: Fraction
    a1: Fraction
    b0: Fraction
    b1: Fraction
    F1: Fraction
    r_min: int
    proportional: bool
    ratio: Optional[Fraction]
    verdict: FutakiVerdict
    low_genus: bool = False

    def to_json(self) -> dict[str, Any]:
        return {
            "genus": self.genus,
            "d1": self.d1,
            "d2": self.d2,
            "p": self.p.to_json(),
            "w": self.w.to_json(),
            "p_str": str(self.p),
            "w_str": str(self.w),
            "a0": q_str(self.a0),
            "a1": q_str(self.a1),
            "b0": q_str(self.b0),
            "b1": q_str(self.b1),
            "F1": q_str(self.F1),
            "r_min": self.r_min,
            "proportional": self.proportional,
            "ratio": None if self.ratio is None else q_str(self.ratio),
            "verdict": self.verdict.value,
            "low_genus_warning": self.low_genus,
        }


def futaki_from_polys(p: Poly, w: Poly) -> Fraction:
    a0, a1 = p.coefficient(2), p.coefficient(1)
    b0, b1 = w.coefficient(3), w.coefficient(2)
    return a1 * b0 - a0 * b1


def df_invariant(g: int, d1: int, d2: int) -> FutakiReport:
    """Futaki report for the normal-cone degeneration of the ``d1`` sub line bundle.

    The test configuration is treated as nontrivial, so ``F1 = 0`` reads as
    "not K-polystable". Genus below 2 is computed but flagged.
    """
    p, rm = hilbert_poly(g, d1, d2)
    w, _ = weight_poly(g, d1, d2)
    a0, a1 = p.coefficient(2), p.coefficient(1)
    b0, b1 = w.coefficient(3), w.coefficient(2)
    F1 = a1 * b0 - a0 * b1
    ratio = ratio_of(p, w)
    if F1 < 0:
        verdict = FutakiVerdict.K_UNSTABLE_WITNESS
    elif F1 == 0:
        verdict = FutakiVerdict.NOT_K_POLYSTABLE
    else:
        verdict = FutakiVerdict.NO_OBSTRUCTION
    low = g < 2
    if low:
        warnings.warn(f"genus {g} < 2: outside the setting with no holomorphic vector fields", stacklevel=2)
    return FutakiReport(
        genus=g, d1=d1, d2=d2, p=p, w=w, a0=a0, a1=a1, b0=b0, b1=b1, F1=F1, r_min=rm,
        proportional=isinstance(ratio, Constant),
        ratio=ratio.value if isinstance(ratio, Constant) else None,
        verdict=verdict, low_genus=low,
    )
