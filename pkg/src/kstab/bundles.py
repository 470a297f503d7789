"""Formal bundles over a smooth curve: slopes, Riemann-Roch counts, HN data.

Subobject geometry over an abstract curve is not determined by degrees, so a
bundle carries a finite, user-declared list of slope-relevant subsheaves (the
"oracle"). Every stability verdict in this package is relative to that list.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Any, Mapping, Optional, Sequence, Union

from .exact import Q


class OracleInsufficient(ValueError):
    """The declared subobject oracle lacks data a computation needs."""


@dataclass(frozen=True)
class CurveData:
    genus: int

    def __post_init__(self):
        if self.genus < 0:
            raise ValueError(f"genus must be >= 0, got {self.genus}")


@dataclass(frozen=True)
class LineBundleData:
    degree: int
    label: str = "L"


@dataclass(frozen=True)
class SubobjectSpec:
    """A declared subsheaf: rank, degree and flag incidences at marked points.

    ``incidence[point_id]`` is the dimension of the intersection of the
    subobject's fibre with the flag at that point. ``contains`` lists the labels
    of other oracle members sitting inside this one.
    """

    rank: int
    degree: int
    label: str = ""
    incidence: Mapping[str, int] = field(default_factory=dict, compare=False)
    contains: tuple[str, ...] = ()

    def __post_init__(self):
        if self.rank < 1:
            raise ValueError("subobject rank must be positive")
        for pid, v in self.incidence.items():
            if v < 0 or v > self.rank:
                raise ValueError(f"incidence {v} at {pid} outside [0, {self.rank}]")

    @property
    def slope(self) -> Fraction:
        return slope(self.rank, self.degree)

    def with_incidence(self, extra: Mapping[str, int]) -> "SubobjectSpec":
        merged = dict(self.incidence)
        merged.update(extra)
        return replace(self, incidence=merged)

    def to_json(self) -> dict[str, Any]:
        out: dict[str, Any] = {"label": self.label, "rank": self.rank, "degree": self.degree}
        if self.incidence:
            out["incidence"] = dict(sorted(self.incidence.items()))
        if self.contains:
            out["contains"] = list(self.contains)
        return out

    @classmethod
    def from_json(cls, obj: Mapping[str, Any], default_label: str = "") -> "SubobjectSpec":
        return cls(
            rank=int(obj["rank"]),
            degree=int(obj["degree"]),
            label=str(obj.get("label", default_label)),
            incidence={str(k): int(v) for k, v in obj.get("incidence", {}).items()},
            contains=tuple(obj.get("contains", ())),
        )


# Distinguished return value of hn_top for semistable bundles.
SELF = SubobjectSpec(rank=1, degree=0, label="<self>")


@dataclass(frozen=True)
class ExtensionBundle:
    """Rank-2 bundle ``0 -> sub -> E -> quotient -> 0`` (direct sum if ``split``)."""

    curve: CurveData
    sub: LineBundleData
    quotient: LineBundleData
    split: bool = False
    twist: int = 0

    rank = 2

    @property
    def degree(self) -> int:
        return self.sub.degree + self.quotient.degree

    @property
    def slope(self) -> Fraction:
        return slope(2, self.degree)

    def canonical_subobjects(self) -> list[SubobjectSpec]:
        """The sub line bundle, plus the quotient summand when the sequence splits."""
        subs = [SubobjectSpec(1, self.sub.degree, label=self.sub.label or "F1")]
        if self.split:
            subs.append(SubobjectSpec(1, self.quotient.degree, label=self.quotient.label or "F2"))
        return subs

    def to_json(self) -> dict[str, Any]:
        return {
            "genus": self.curve.genus,
            "rank": 2,
            "extension": {
                "sub": {"degree": self.sub.degree, "label": self.sub.label},
                "quotient": {"degree": self.quotient.degree, "label": self.quotient.label},
                "split": self.split,
            },
        }


@dataclass(frozen=True)
class FormalBundle:
    curve: CurveData
    rank: int
    degree: int
    subobjects: tuple[SubobjectSpec, ...] = ()

    def __post_init__(self):
        if self.rank < 1:
            raise ValueError("rank must be positive")
        for s in self.subobjects:
            if s.rank >= self.rank:
                raise ValueError(f"oracle member {s.label!r} has rank {s.rank} >= {self.rank}")

    @property
    def slope(self) -> Fraction:
        return slope(self.rank, self.degree)

    def to_json(self) -> dict[str, Any]:
        return {
            "genus": self.curve.genus,
            "rank": self.rank,
            "degree": self.degree,
            "oracle": [s.to_json() for s in self.subobjects],
        }


Bundle = Union[ExtensionBundle, FormalBundle]


def slope(rank: int, degree: int) -> Fraction:
    if rank < 1:
        raise ValueError("rank must be >= 1")
    return Fraction(degree, rank)


@dataclass(frozen=True)
class Exact:
    count: int


@dataclass(frozen=True)
class Bounds:
    lo: int
    hi: int


def h0_line(curve: CurveData, degree: int, trivial: bool = False) -> Union[Exact, Bounds]:
    """Dimension of sections of a degree-``degree`` line bundle, or honest bounds.

    Exact when ``degree < 0`` or ``degree > 2g - 2``; for degree 0 the answer is 1
    only for the trivial bundle (pass ``trivial=True``). In the special range the
    Riemann-Roch lower bound and Clifford's upper bound are returned instead.
    """
    g = curve.genus
    if degree < 0:
        return Exact(0)
    if degree > 2 * g - 2:
        return Exact(degree + 1 - g)
    if degree == 0:
        return Exact(1) if trivial else Bounds(0, 1)
    return Bounds(max(0, degree + 1 - g), degree // 2 + 1)


class Stability(enum.Enum):
    STABLE = "Stable"
    STRICTLY_SEMISTABLE = "StrictlySemistable"
    UNSTABLE = "Unstable"


@dataclass(frozen=True)
class Verdict:
    status: Stability
    witness: Optional[SubobjectSpec] = None

    @property
    def name(self) -> str:
        return self.status.value

    def to_json(self) -> dict[str, Any]:
        return {
            "status": self.status.value,
            "witness": None if self.witness is None else self.witness.to_json(),
        }


def _ranked(subs: Sequence[SubobjectSpec], key) -> Optional[SubobjectSpec]:
    """Max by ``key`` then rank, earliest declaration wins remaining ties."""
    best = None
    best_key = None
    for s in subs:
        k = (key(s), s.rank)
        if best is None or k > best_key:
            best, best_key = s, k
    return best


def compare_slopes(subs: Sequence[SubobjectSpec], target: Fraction, key) -> Verdict:
    top = _ranked(subs, key)
    if top is None or key(top) < target:
        return Verdict(Stability.STABLE)
    if key(top) == target:
        return Verdict(Stability.STRICTLY_SEMISTABLE, top)
    return Verdict(Stability.UNSTABLE, top)


def subobjects_of(bundle: Bundle) -> list[SubobjectSpec]:
    if isinstance(bundle, ExtensionBundle):
        return bundle.canonical_subobjects()
    return list(bundle.subobjects)


def is_slope_semistable(bundle: Bundle) -> Verdict:
    return compare_slopes(subobjects_of(bundle), bundle.slope, lambda s: s.slope)


def hn_top(bundle: FormalBundle) -> SubobjectSpec:
    """Maximal destabilizing member of the oracle, or :data:`SELF`.

    Ties in slope go to the larger rank, then to declaration order. An oracle
    member whose slope equals the bundle's is still returned (it is the first
    step of a Jordan-Hoelder-type filtration); :data:`SELF` means every member has
    slope strictly below ``mu(E)`` or the oracle is empty.
    """
    top = _ranked(bundle.subobjects, lambda s: s.slope)
    if top is None or top.slope < bundle.slope:
        return SELF
    return top


def twist_to_ample(e: ExtensionBundle) -> ExtensionBundle:
    """Tensor by a degree-``t`` line bundle with minimal ``t`` making both degrees
    exceed ``max(0, 2g - 2)``; the applied ``t`` accumulates in ``e.twist``."""
    floor_deg = max(1, 2 * e.curve.genus - 1)
    t = max(0, floor_deg - min(e.sub.degree, e.quotient.degree))
    return replace(
        e,
        sub=replace(e.sub, degree=e.sub.degree + t),
        quotient=replace(e.quotient, degree=e.quotient.degree + t),
        twist=e.twist + t,
    )


def bundle_from_json(obj: Mapping[str, Any]) -> Bundle:
    """Parse ``{genus, rank, degree | extension{sub, quotient, split}, oracle[]}``."""
    curve = CurveData(int(obj["genus"]))
    if "extension" in obj:
        ext = obj["extension"]
        sub, quo = ext["sub"], ext["quotient"]
        if not isinstance(sub, Mapping):
            sub = {"degree": sub}
        if not isinstance(quo, Mapping):
            quo = {"degree": quo}
        return ExtensionBundle(
            curve,
            LineBundleData(int(sub["degree"]), str(sub.get("label", "F1"))),
            LineBundleData(int(quo["degree"]), str(quo.get("label", "F2"))),
            split=bool(ext.get("split", False)),
        )
    subs = tuple(
        SubobjectSpec.from_json(s, default_label=f"S{i}") for i, s in enumerate(obj.get("oracle", []))
    )
    return FormalBundle(curve, int(obj["rank"]), int(obj["degree"]), subs)


def oracle_index(subs: Sequence[SubobjectSpec]) -> dict[str, SubobjectSpec]:
    index = {}
    for s in subs:
        if s.label in index:
            raise OracleInsufficient(f"duplicate oracle label {s.label!r}")
        index[s.label] = s
    for s in subs:
        for lab in s.contains:
            if lab not in index:
                raise OracleInsufficient(f"{s.label!r} contains undeclared member {lab!r}")
            if index[lab].rank >= s.rank:
                raise OracleInsufficient(f"{lab!r} cannot sit inside {s.label!r}: rank too large")
    return index


__all__ = [
    "Bounds", "Bundle", "CurveData", "Exact", "ExtensionBundle", "FormalBundle",
    "LineBundleData", "OracleInsufficient", "Q", "SELF", "Stability", "SubobjectSpec",
    "Verdict", "bundle_from_json", "compare_slopes", "h0_line", "hn_top",
    "is_slope_semistable", "oracle_index", "slope", "subobjects_of", "twist_to_ample",
]
