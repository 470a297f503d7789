"""Model conical metrics on CP^1 with a common cone angle 2 pi beta at marked points.

With ``s_i = |sigma_i|^2_FS`` the chordal quantity
``|z - p|^2 / ((1 + |z|^2)(1 + |p|^2))`` (``1 / (1 + |z|^2)`` for the point at
infinity), the model metric is

    omega_c = omega_FS + (i / c) sum_i ddbar s_i^beta.

Because ``(1 + |z|^2)^2 |d log s|^2 = (1 - s) / s``, the ratio to omega_FS is the
chart-free function

    1 + (2 pi beta / c) sum_i s_i^(beta - 1) (beta - (1 + beta) s_i),

which is how everything here is evaluated. omega_FS has total volume 1, so its
coefficient in ``omega = i g dz ^ dzbar`` is ``1 / (2 pi (1 + |z|^2)^2)``.
"""
from __future__ import annotations

import cmath
from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import numpy as np

from .sphere import SphereGrid, fejer_grid

EXCLUSION_RADIUS = 1e-8
BISECTION_RTOL = 1e-4

PointLike = Union[complex, float, int, str, None]


class EvaluationAtConePoint(ValueError):
    pass


class NotPositiveAtAnyC(RuntimeError):
    pass


def parse_point(p: PointLike) -> complex:
    """Chart coordinate of a marked point; ``None``, ``"inf"`` or an infinite value mean infinity."""
    if p is None or (isinstance(p, str) and p.strip().lower() in ("inf", "infinity", "oo")):
        return complex("inf")
    if isinstance(p, (list, tuple)):
        p = complex(p[0], p[1])
    z = complex(p)
    if cmath.isnan(z):
        raise ValueError("marked point is NaN")
    return complex("inf") if cmath.isinf(z) else z


def _is_inf(p: complex) -> bool:
    return cmath.isinf(p)


def chordal(z: np.ndarray, p: complex) -> np.ndarray:
    """FS norm squared of the section of O(1) vanishing at ``p``; equals 1 at the antipode."""
    z = np.asarray(z, dtype=complex)
    P = 1 + np.abs(z) ** 2
    if _is_inf(p):
        return 1 / P
    return np.abs(z - p) ** 2 / (P * (1 + abs(p) ** 2))


def g_fs(z: np.ndarray) -> np.ndarray:
    return 1 / (2 * np.pi * (1 + np.abs(np.asarray(z)) ** 2) ** 2)


def _distinct(points: Sequence[complex]) -> None:
    for i, p in enumerate(points):
        for q in points[:i]:
            if _is_inf(p) and _is_inf(q):
                raise ValueError("marked points must be distinct")
            if not _is_inf(p) and not _is_inf(q) and abs(p - q) == 0:
                raise ValueError("marked points must be distinct")


def perturbation_ratio(z: np.ndarray, points: Sequence[complex], beta: float) -> np.ndarray:
    """``c * (g_c / g_FS - 1)``, i.e. ``2 pi beta sum s^(beta-1) (beta - (1+beta) s)``."""
    total = np.zeros(np.shape(z))
    for p in points:
        s = chordal(z, p)
        if np.any(s == 0):
            raise EvaluationAtConePoint(f"evaluation at the marked point {p}")
        total = total + s ** (beta - 1) * (beta - (1 + beta) * s)
    return 2 * np.pi * beta * total


@dataclass(frozen=True)
class ConeGrid:
    """Sphere nodes in the affine chart with small disks around the marked points removed."""

    z: np.ndarray
    sphere: SphereGrid
    mask: np.ndarray = field(repr=False)

    @property
    def size(self) -> int:
        return int(self.z.size)


def cone_grid(points: Sequence[PointLike], n_theta: int = 128, n_phi: int = 256,
              exclusion: float = EXCLUSION_RADIUS) -> ConeGrid:
    pts = [parse_point(p) for p in points]
    sph = fejer_grid(n_theta, n_phi)
    z = sph.affine().ravel()
    # a chart disk of radius r around p has chordal size r^2 / (1 + r^2) in the recentred chart
    cut = exclusion**2 / (1 + exclusion**2)
    keep = np.ones(z.shape, dtype=bool)
    for p in pts:
        keep &= chordal(z, p) > cut
    return ConeGrid(z[keep], sph, keep)


@dataclass(frozen=True)
class ConeSetup:
    points: tuple
    beta: float
    c: float
    grid: Optional[ConeGrid] = None

    def __post_init__(self):
        pts = tuple(parse_point(p) for p in self.points)
        object.__setattr__(self, "points", pts)
        if not pts:
            raise ValueError("at least one marked point is needed")
        _distinct(list(pts))
        if not 0 < self.beta <= 1:
            raise ValueError("beta must lie in (0, 1]")
        if not self.c > 0:
            raise ValueError("c must be positive")

    def ratio_to_fs(self, z) -> np.ndarray:
        return 1 + perturbation_ratio(z, self.points, self.beta) / self.c


def model_metric_density(s: ConeSetup, z) -> np.ndarray:
    """Coefficient ``g`` of the model metric ``i g dz ^ dzbar`` in the affine chart."""
    z = np.asarray(z, dtype=complex)
    if np.any(~np.isfinite(z)):
        raise EvaluationAtConePoint("the affine chart does not contain infinity")
    return g_fs(z) * s.ratio_to_fs(z)


def positivity_margin(s: ConeSetup, grid: Optional[ConeGrid] = None) -> float:
    """``min g_c / g_FS`` over the grid nodes."""
    grid = grid or s.grid or cone_grid(s.points)
    return float(s.ratio_to_fs(grid.z).min())


def minimal_c(points: Sequence[PointLike], beta: float, grid: Optional[ConeGrid] = None,
              rtol: float = BISECTION_RTOL, c_max: float = 1e12) -> float:
    """Smallest ``c`` (to relative ``rtol``) keeping the model metric positive at every node."""
    pts = [parse_point(p) for p in points]
    ConeSetup(tuple(pts), beta, 1.0)  # validation
    grid = grid or cone_grid(pts)
    pert = perturbation_ratio(grid.z, pts, beta)

    def positive(c: float) -> bool:
        return bool(np.all(1 + pert / c > 0))

    hi = 1.0
    while not positive(hi):
        hi *= 2
        if hi > c_max:
            raise NotPositiveAtAnyC(f"no c below {c_max:g} makes the metric positive on the grid")
    lo = hi / 2
    while positive(lo):
        hi, lo = lo, lo / 2
        if lo < 1e-300:
            return 0.0
    while hi - lo > rtol * hi:
        mid = 0.5 * (lo + hi)
        if positive(mid):
            hi = mid
        else:
            lo = mid
    return hi


def exact_minimal_c(points: Sequence[PointLike], beta: float, grid: Optional[ConeGrid] = None) -> float:
    """``max(-pert)`` over the nodes: the threshold the bisection approximates."""
    pts = [parse_point(p) for p in points]
    grid = grid or cone_grid(pts)
    return float(max(0.0, (-perturbation_ratio(grid.z, pts, beta)).max()))


def _recentre_inverse(zeta: np.ndarray, p: complex) -> np.ndarray:
    """Chart coordinate of the point with unitary local coordinate ``zeta`` around ``p``."""
    if _is_inf(p):
        return 1 / zeta
    return (zeta + p) / (1 - np.conj(p) * zeta)


@dataclass
class QuasiIsometry:
    delta_lo: float
    delta_hi: float
    delta: float
    radii: list[float]
    ratio_min: list[float]
    ratio_max: list[float]

    def per_radius_delta(self) -> list[float]:
        return [max(1 / lo, hi) for lo, hi in zip(self.ratio_min, self.ratio_max)]

    def to_json(self) -> dict:
        return {
            "delta_lo": self.delta_lo,
            "delta_hi": self.delta_hi,
            "delta": self.delta,
            "radii": self.radii,
            "ratio_min": self.ratio_min,
            "ratio_max": self.ratio_max,
        }


def quasi_isometry_constants(s: ConeSetup, point_index: int, radii: Sequence[float],
                             n_angles: int = 64) -> QuasiIsometry:
    """Compare the model metric with ``(i/2) beta^2 |zeta|^(2 beta - 2) dzeta ^ dzetabar``.

    ``zeta`` is the unitary chart centred at the chosen point (``zeta = 1/z`` at
    infinity), in which omega_FS has the standard coefficient.
    """
    radii = [float(r) for r in radii]
    if any(r <= 0 or r >= 1 for r in radii):
        raise ValueError("radii must lie in (0, 1)")
    if any(b >= a for a, b in zip(radii, radii[1:])):
        raise ValueError("radii must be strictly decreasing")
    p = s.points[point_index]
    angles = 2 * np.pi * np.arange(n_angles) / n_angles
    beta = s.beta
    lo, hi = [], []
    for r in radii:
        zeta = r * np.exp(1j * angles)
        z = _recentre_inverse(zeta, p)
        g_local = g_fs(zeta) * s.ratio_to_fs(z)
        g_cone = 0.5 * beta**2 * r ** (2 * beta - 2)
        ratio = g_local / g_cone
        lo.append(float(ratio.min()))
        hi.append(float(ratio.max()))
    d_lo, d_hi = min(lo), max(hi)
    if d_lo <= 0:
        raise EvaluationAtConePoint("model metric is not positive on the annuli; increase c")
    return QuasiIsometry(d_lo, d_hi, max(1 / d_lo, d_hi), radii, lo, hi)
