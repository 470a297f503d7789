"""Parabolic structures on bundles over a curve and the stabilization algorithm.

Flags are combinatorial: a marked point carries a weight and the dimension of
its one-step flag, and each oracle subobject records how many dimensions of its
fibre meet that flag. All arithmetic is exact.

Fresh points created here are always given *generic* lines: they meet a proper
subobject only where the caller explicitly pins an incidence, or where the line
was chosen inside a subbundle during the higher-rank recursion.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Any, Iterable, Mapping, Optional, Sequence

from .bundles import (
    SELF,
    Bundle,
    ExtensionBundle,
    FormalBundle,
    Stability,
    SubobjectSpec,
    Verdict,
    bundle_from_json,
    compare_slopes,
    hn_top,
    is_slope_semistable,
    oracle_index,
    subobjects_of,
)
from .exact import Q, q_str


class IncompleteOracle(ValueError):
    """A subobject has no incidence entry for some marked point."""


class NotUnstable(ValueError):
    pass


class NotSemistable(ValueError):
    pass


class GenericityViolated(ValueError):
    """Pinned incidences break the condition that keeps equal-slope subs below E."""


@dataclass(frozen=True)
class MarkedPoint:
    id: str
    weight: Fraction
    flag_dim: int = 1

    def __post_init__(self):
        object.__setattr__(self, "weight", Q(self.weight))
        if not (0 < self.weight <= 1):
            raise ValueError(f"weight {self.weight} at {self.id} outside (0, 1]")
        if self.flag_dim < 1:
            raise ValueError("flag_dim must be >= 1")

    def to_json(self) -> dict[str, Any]:
        return {"id": self.id, "weight": q_str(self.weight), "flag_dim": self.flag_dim}


@dataclass(frozen=True)
class ParabolicBundle:
    underlying: Bundle
    points: tuple[MarkedPoint, ...] = ()
    oracle: tuple[SubobjectSpec, ...] = ()
    schedule: tuple[Mapping[str, Any], ...] = field(default=(), compare=False)

    def __post_init__(self):
        ids = [p.id for p in self.points]
        if len(set(ids)) != len(ids):
            raise ValueError("marked point ids must be distinct")
        for p in self.points:
            if p.flag_dim >= self.rank:
                raise ValueError(f"flag_dim {p.flag_dim} at {p.id} must be < rank {self.rank}")
        known = set(ids)
        by_id = {p.id: p for p in self.points}
        for s in self.oracle:
            for pid, v in s.incidence.items():
                if pid not in known:
                    raise ValueError(f"{s.label!r} has incidence at unknown point {pid!r}")
                if v > by_id[pid].flag_dim:
                    raise ValueError(f"{s.label!r} incidence {v} exceeds flag_dim at {pid!r}")

    @property
    def rank(self) -> int:
        return self.underlying.rank

    @property
    def degree(self) -> int:
        return self.underlying.degree

    def member(self, label: str) -> SubobjectSpec:
        for s in self.oracle:
            if s.label == label:
                return s
        raise KeyError(label)

    def fresh_ids(self, n: int, prefix: str = "p") -> list[str]:
        taken = {p.id for p in self.points}
        out, i = [], 1
        while len(out) < n:
            cand = f"{prefix}{i}"
            if cand not in taken:
                out.append(cand)
            i += 1
        return out

    def with_points(self, new_points: Sequence[MarkedPoint], incidence: Mapping[str, Mapping[str, int]],
                    log: Optional[Mapping[str, Any]] = None) -> "ParabolicBundle":
        """Append points; ``incidence[label][point_id]`` defaults to 0 (generic line)."""
        oracle = []
        for s in self.oracle:
            extra = {p.id: int(incidence.get(s.label, {}).get(p.id, 0)) for p in new_points}
            oracle.append(s.with_incidence(extra))
        sched = self.schedule + ((dict(log),) if log else ())
        return replace(self, points=self.points + tuple(new_points), oracle=tuple(oracle), schedule=sched)

    def to_json(self) -> dict[str, Any]:
        labels = [s.label for s in self.oracle]
        pids = [p.id for p in self.points]
        return {
            "underlying": self.underlying.to_json(),
            "points": [p.to_json() for p in self.points],
            "oracle": [{"label": s.label, "rank": s.rank, "degree": s.degree,
                        **({"contains": list(s.contains)} if s.contains else {})} for s in self.oracle],
            "incidence": {
                "labels": labels,
                "points": pids,
                "matrix": [[int(s.incidence.get(pid, 0)) for pid in pids] for s in self.oracle],
            },
            "par_deg": q_str(par_deg(self)),
            "par_slope": q_str(par_slope(self)),
        }

    @classmethod
    def from_json(cls, obj: Mapping[str, Any]) -> "ParabolicBundle":
        underlying = bundle_from_json(obj["underlying"])
        points = tuple(MarkedPoint(str(p["id"]), Q(p["weight"]), int(p.get("flag_dim", 1)))
                       for p in obj.get("points", []))
        if "oracle" in obj:
            subs = [SubobjectSpec.from_json(s) for s in obj["oracle"]]
        else:
            subs = subobjects_of(underlying)
        inc = obj.get("incidence")
        if inc:
            rows = dict(zip(inc["labels"], inc["matrix"]))
            subs = [s.with_incidence({pid: int(v) for pid, v in zip(inc["points"], rows.get(s.label, []))})
                    for s in subs]
        return cls(underlying, points, tuple(subs))


def from_bundle(bundle: Bundle, extras: Iterable[SubobjectSpec] = ()) -> ParabolicBundle:
    """Trivial parabolic structure (no marked points) with the bundle's oracle."""
    oracle = tuple(subobjects_of(bundle)) + tuple(extras)
    oracle_index(oracle)
    return ParabolicBundle(bundle, (), oracle)


def par_deg(pb: ParabolicBundle) -> Fraction:
    return Fraction(pb.degree) + sum((p.weight * p.flag_dim for p in pb.points), Fraction(0))


def par_slope(pb: ParabolicBundle) -> Fraction:
    return par_deg(pb) / pb.rank


def sub_par_deg(pb: ParabolicBundle, f: SubobjectSpec) -> Fraction:
    total = Fraction(f.degree)
    for p in pb.points:
        if p.id not in f.incidence:
            raise IncompleteOracle(f"{f.label!r} has no incidence at {p.id!r}")
        total += p.weight * f.incidence[p.id]
    return total


def sub_par_slope(pb: ParabolicBundle, f: SubobjectSpec) -> Fraction:
    return sub_par_deg(pb, f) / f.rank


def check_parabolic_stability(pb: ParabolicBundle) -> Verdict:
    return compare_slopes(pb.oracle, par_slope(pb), lambda s: sub_par_slope(pb, s))


def _raise_points(pb: ParabolicBundle, amount: Fraction, prefix: str, log: dict) -> ParabolicBundle:
    """Add ``floor(amount) + 1`` generic line flags of equal weight summing to ``amount``."""
    n = math.floor(amount) + 1
    w = amount / n
    pts = [MarkedPoint(pid, w, 1) for pid in pb.fresh_ids(n, prefix)]
    log = {**log, "N": n, "weight": q_str(w), "points": [p.id for p in pts]}
    return pb.with_points(pts, {}, log)


def make_semistable(e: ExtensionBundle, extras: Iterable[SubobjectSpec] = (),
                    pins: Optional[Mapping[str, Iterable[int]]] = None) -> ParabolicBundle:
    """Semistabilize an unstable rank-2 extension with ``N`` equal weights ``2A/N``.

    ``A = deg(F1) - mu(E)`` where ``F1`` is the destabilizing line subbundle and ``N``
    is the least integer with ``2A/N < 1``. Flags avoid ``F1`` at every new point;
    another declared rank-1 subobject meets the flag only at the point indices
    listed for it in ``pins``.
    """
    verdict = is_slope_semistable(e)
    if verdict.status is not Stability.UNSTABLE:
        raise NotUnstable(f"bundle is {verdict.name}, not unstable")
    f1 = verdict.witness
    extras = tuple(extras)
    # a rank-1 subsheaf not inside F1 maps nontrivially to the quotient line bundle
    quotient_deg = e.degree - f1.degree
    for s in extras:
        if s.rank == 1 and s.degree > quotient_deg:
            raise ValueError(f"extra {s.label!r} has degree {s.degree} > deg(E/F1) = {quotient_deg}")

    pb = from_bundle(e, extras)
    A = Fraction(f1.degree) - e.slope
    n = math.floor(2 * A) + 1
    w = 2 * A / n
    ids = pb.fresh_ids(n)
    pts = [MarkedPoint(pid, w, 1) for pid in ids]
    incidence: dict[str, dict[str, int]] = {}
    for label, idx in (pins or {}).items():
        if label == f1.label:
            raise GenericityViolated("the flag must avoid the destabilizing subbundle")
        incidence[label] = {ids[i]: 1 for i in idx}
    log = {"step": "semistabilize", "A": q_str(A), "N": n, "weight": q_str(w),
           "destabilizing": f1.label, "points": ids}
    return pb.with_points(pts, incidence, log)


def make_stable(pb: ParabolicBundle, pins: Optional[Mapping[str, Iterable[int]]] = None) -> ParabolicBundle:
    """Add three generic points of weight ``eps = min(1/2, gap/3)``.

    ``gap`` is the distance from ``par mu(E)`` to the nearest strictly smaller
    subobject parabolic slope (1 if there is none). ``pins`` maps labels to the
    new-point indices (0, 1, 2) where that subobject meets the flag. A subobject
    of rank ``s`` with parabolic slope equal to ``par mu(E)`` may be pinned at
    ``c`` points only if ``c * rank(E) < 3 * s``; in rank 2 this is "at most one".
    """
    verdict = check_parabolic_stability(pb)
    if verdict.status is Stability.UNSTABLE:
        raise NotSemistable(f"witness {verdict.witness.label!r} is destabilizing")
    if verdict.status is Stability.STABLE:
        return pb

    pmu = par_slope(pb)
    pins = {k: sorted(set(v)) for k, v in (pins or {}).items()}
    for label, idx in pins.items():
        if any(i not in (0, 1, 2) for i in idx):
            raise ValueError(f"pins for {label!r} must index the three new points")
        s = pb.member(label)
        if sub_par_slope(pb, s) == pmu and len(idx) * pb.rank >= 3 * s.rank:
            raise GenericityViolated(
                f"equal-slope subobject {label!r} meets the new flags at {len(idx)} points"
            )

    below = [pmu - sub_par_slope(pb, s) for s in pb.oracle if sub_par_slope(pb, s) < pmu]
    gap = min(below) if below else Fraction(1)
    eps = min(Fraction(1, 2), gap / 3)
    ids = pb.fresh_ids(3, prefix="q")
    pts = [MarkedPoint(pid, eps, 1) for pid in ids]
    incidence = {label: {ids[i]: 1 for i in idx} for label, idx in pins.items()}
    log = {"step": "stabilize", "gap": q_str(gap), "eps": q_str(eps), "points": ids}
    out = pb.with_points(pts, incidence, log)
    final = check_parabolic_stability(out)
    if final.status is not Stability.STABLE:
        raise GenericityViolated(f"{final.witness.label!r} still reaches par mu(E) after stabilization")
    return out


def _containment_closure(subs: Sequence[SubobjectSpec]) -> dict[str, set[str]]:
    """label -> labels of all members transitively contained in it."""
    direct = {s.label: set(s.contains) for s in subs}
    closed: dict[str, set[str]] = {}

    def visit(label, stack=()):
        if label in closed:
            return closed[label]
        if label in stack:
            raise ValueError(f"containment cycle through {label!r}")
        acc = set()
        for inner in direct.get(label, ()):
            acc.add(inner)
            acc |= visit(inner, stack + (label,))
        closed[label] = acc
        return acc

    for s in subs:
        visit(s.label)
    return closed


def _stabilize_formal(b: FormalBundle, prefix: str = "") -> ParabolicBundle:
    pb = ParabolicBundle(b, (), tuple(replace(s, incidence={}) for s in b.subobjects))
    if b.rank == 1:
        return pb
    index = oracle_index(b.subobjects)
    inside = _containment_closure(b.subobjects)

    top = hn_top(b)
    if top is not SELF:
        # stabilize the maximal destabilizing subbundle on its own sub-oracle
        sub_members = tuple(index[lab] for lab in sorted(inside[top.label], key=list(index).index))
        sub_bundle = FormalBundle(b.curve, top.rank, top.degree,
                                  tuple(replace(s, incidence={}) for s in sub_members))
        inner = _stabilize_formal(sub_bundle, prefix=f"{prefix}{top.label}.")
        # lift: flags chosen inside top's fibre
        lift_inc: dict[str, dict[str, int]] = {}
        for s in pb.oracle:
            if s.label == top.label or top.label in inside[s.label]:
                lift_inc[s.label] = {p.id: p.flag_dim for p in inner.points}
            elif s.label in inside[top.label]:
                lift_inc[s.label] = dict(inner.member(s.label).incidence)
        if inner.points:
            pb = pb.with_points(inner.points, lift_inc, {
                "step": "lift", "from": top.label, "points": [p.id for p in inner.points],
                "inner_schedule": list(inner.schedule),
            })
        A = sub_par_slope(pb, pb.member(top.label)) - par_slope(pb)
        if A > 0:
            before = {s.label: sub_par_deg(pb, s) for s in pb.oracle}
            E_before = par_deg(pb)
            pb = _raise_points(pb, b.rank * A, f"{prefix}r", {
                "step": "raise", "subbundle": top.label, "A": q_str(A), "rA": q_str(b.rank * A)})
            _check_raise_relations(pb, top.label, before, E_before, b.rank * A)

    # at most one extra pass: the parabolic maximal destabilizer is raised to par mu(E)
    verdict = check_parabolic_stability(pb)
    if verdict.status is Stability.UNSTABLE:
        w = verdict.witness
        A = sub_par_slope(pb, w) - par_slope(pb)
        pb = _raise_points(pb, b.rank * A, f"{prefix}s", {
            "step": "raise", "subbundle": w.label, "A": q_str(A), "rA": q_str(b.rank * A)})
    return make_stable(pb) if check_parabolic_stability(pb).status is not Stability.STABLE else pb


def _check_raise_relations(pb, label, before, E_before, amount):
    """The three degree relations of the raising step, asserted exactly."""
    assert par_deg(pb) == E_before + amount
    assert sub_par_deg(pb, pb.member(label)) == before[label]
    for s in pb.oracle:
        assert sub_par_deg(pb, s) <= before[s.label] + amount


def stabilize(b: Bundle, extras: Iterable[SubobjectSpec] = ()) -> ParabolicBundle:
    """Produce a parabolic structure that is stable with respect to the oracle.

    Rank-2 extensions go through :func:`make_semistable` then :func:`make_stable`.
    Formal bundles recurse on the maximal destabilizing oracle member (whose own
    oracle is the set of members it declares in ``contains``), raise the degree of
    E with generic flags until its parabolic slope matches, then add three
    stabilizing points. Each step is recorded in ``schedule``.
    """
    if isinstance(b, ExtensionBundle):
        v = is_slope_semistable(b)
        if v.status is Stability.UNSTABLE:
            return make_stable(make_semistable(b, extras))
        return make_stable(from_bundle(b, extras))
    if extras:
        b = replace(b, subobjects=tuple(b.subobjects) + tuple(extras))
    return _stabilize_formal(b)


def ruled_class_positivity(par_mu: Fraction, m: Fraction) -> bool:
    """Whether ``par_mu * pi^*omega + m * pi^*omega`` plus the fibre FS form is positive.

    The fibre part is always positive; the horizontal coefficient is ``par_mu + m``.
    """
    return Q(par_mu) + Q(m) > 0
