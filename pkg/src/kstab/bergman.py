"""Bergman functions, scalar curvature and Donaldson's T-iteration on CP^1.

Conventions: omega_FS lies in c1(O(1)) with total volume 1, so the Fubini-Study
Bergman function of O(k) is identically k + 1 and scal(omega_FS) = 2. A weight
phi gives the metric ``h = e^{-phi} / (1 + |z|^2)`` on O(1) with curvature
``omega_phi = (1 + Lap phi) omega_FS`` (round-sphere Laplacian).

Sections of O(k) are the monomials ``z^a``; on the sphere their FS-normalized
values are ``sin(theta/2)^a cos(theta/2)^(k-a) e^{i a phi}``, which are bounded
everywhere, so the single affine chart never has to be switched.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from math import factorial
from typing import Callable, Optional, Sequence, Union

import numpy as np

from .sphere import SphereGrid, fejer_grid, laplacian

Potential = Callable[[np.ndarray, np.ndarray, np.ndarray], np.ndarray]


class NonPositiveMetric(ValueError):
    pass


class QuadratureUnderResolved(RuntimeError):
    pass


class NotConverged(RuntimeError):
    def __init__(self, msg: str, sup_dev: float, iterations: int):
        super().__init__(msg)
        self.sup_dev = sup_dev
        self.iterations = iterations


# --- built-in potential families -------------------------------------------------

def zero_potential(X, Y, Z):
    return np.zeros_like(X)


def gaussian_bump(amplitude: float = 0.1, center=(0.36, 0.48, 0.8), width: float = 0.5) -> Potential:
    """``a * exp(-(1 - <P, P0>) / width)``: a smooth bump around the unit vector ``P0``."""
    c = np.asarray(center, dtype=float)
    c = c / np.linalg.norm(c)

    def phi(X, Y, Z):
        return amplitude * np.exp(-(1 - (c[0] * X + c[1] * Y + c[2] * Z)) / width)

    return phi


def zonal_harmonic(amplitude: float = 0.1) -> Potential:
    """``a (3 Z^2 - 1) / 2``, rotationally symmetric about the polar axis."""
    return lambda X, Y, Z: amplitude * 0.5 * (3 * Z**2 - 1)


def linear_height(amplitude: float = 0.2) -> Potential:
    """``a Re(z / (1 + |z|^2)) = a X / 2``; infinitesimally a Moebius motion."""
    return lambda X, Y, Z: amplitude * 0.5 * X


FAMILIES: dict[str, Callable[[float], Potential]] = {
    "zero": lambda a=0.0: zero_potential,
    "bump": lambda a=0.1: gaussian_bump(a),
    "zonal": zonal_harmonic,
    "linear": linear_height,
}


def named_potential(name: str, amplitude: float) -> Potential:
    try:
        return FAMILIES[name](amplitude)
    except KeyError:
        raise ValueError(f"unknown potential family {name!r}; choose from {sorted(FAMILIES)}") from None


# --- metric weights --------------------------------------------------------------

@dataclass
class MetricWeight:
    """Nodal values of a weight ``phi`` on a sphere grid, for the line bundle O(k)."""

    grid: SphereGrid
    phi: np.ndarray
    k: int
    potential: Optional[Potential] = None
    lap_method: str = "spectral"
    density: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be positive")
        self.phi = np.asarray(self.phi, dtype=float)
        if self.phi.shape != self.grid.shape:
            raise ValueError("phi must be sampled on the grid")
        if not np.all(np.isfinite(self.phi)):
            raise ValueError("phi must be bounded")
        self.density = 1.0 + laplacian(self.phi, self.grid, self.lap_method)

    @classmethod
    def from_potential(cls, potential: Potential, k: int, n_theta: int = 64, n_phi: int = 128,
                       lap_method: str = "spectral") -> "MetricWeight":
        grid = fejer_grid(n_theta, n_phi)
        return cls(grid, potential(*grid.cartesian()), k, potential, lap_method)

    def refined(self) -> "MetricWeight":
        if self.potential is None:
            raise ValueError("refinement needs the potential as a function")
        grid = self.grid.refined()
        return MetricWeight(grid, self.potential(*grid.cartesian()), self.k, self.potential, self.lap_method)

    def with_k(self, k: int) -> "MetricWeight":
        return MetricWeight(self.grid, self.phi, k, self.potential, self.lap_method)

    def check_positive(self) -> None:
        if np.any(self.density <= 0):
            raise NonPositiveMetric(f"omega_phi degenerates: min density {self.density.min():.3g}")


def section_values(theta: np.ndarray, phi: np.ndarray, k: int) -> np.ndarray:
    """FS-normalized monomials, shape ``theta.shape + (k+1,)``."""
    a = np.arange(k + 1)
    c = np.cos(theta / 2)[..., None]
    s = np.sin(theta / 2)[..., None]
    return c ** (k - a) * s**a * np.exp(1j * a * phi[..., None])


def fs_gram(k: int) -> np.ndarray:
    """Exact FS Gram matrix: ``diag(a! (k-a)! / (k+1)!)``."""
    return np.diag([factorial(a) * factorial(k - a) / factorial(k + 1) for a in range(k + 1)])


def _gram(values: np.ndarray, vol: np.ndarray) -> np.ndarray:
    """``G_ab = sum_nodes vol * v_a conj(v_b)`` for values of shape (..., k+1)."""
    v = values.reshape(-1, values.shape[-1])
    G = (v * vol.reshape(-1, 1)).T @ v.conj()
    return 0.5 * (G + G.conj().T)


def _rho(values: np.ndarray, G: np.ndarray) -> np.ndarray:
    # the monomial Gram matrix spans ~binom(k, k/2) in scale; rho does not depend
    # on the basis, so rescale to unit diagonal before solving
    d = 1 / np.sqrt(np.diag(G).real)
    v = values.reshape(-1, values.shape[-1]) * d
    L = np.linalg.cholesky(d[:, None] * G * d[None, :])
    y = np.linalg.solve(L, v.T)  # rho = v^H G^{-1} v = |L^{-1} v|^2
    rho = np.sum(np.abs(y) ** 2, axis=0)
    return rho.reshape(values.shape[:-1])


def _weighted_sections(w: MetricWeight) -> np.ndarray:
    T, P = w.grid.mesh
    return section_values(T, P, w.k) * np.exp(-0.5 * w.k * w.phi)[..., None]


def gram_matrix(w: MetricWeight, check_resolution: bool = False, tol: float = 1e-9) -> np.ndarray:
    """L2 Gram matrix of the monomial basis for ``(h_phi^k, omega_phi)``."""
    w.check_positive()
    G = _gram(_weighted_sections(w), w.grid.weights * w.density)
    np.linalg.cholesky(G)
    if check_resolution:
        fine = w.refined()
        G2 = _gram(_weighted_sections(fine), fine.grid.weights * fine.density)
        err = np.abs(G2 - G).max()
        if err > tol:
            raise QuadratureUnderResolved(f"Gram entries move by {err:.3g} under node doubling")
    return G


def scalar_curvature(w: MetricWeight, method: Optional[str] = None) -> np.ndarray:
    """``scal = (2 - Lap log f) / f`` for ``omega_phi = f omega_FS``; FS gives 2."""
    w.check_positive()
    method = method or w.lap_method
    f = w.density if method == w.lap_method else 1.0 + laplacian(w.phi, w.grid, method)
    return (2.0 - laplacian(np.log(f), w.grid, method)) / f


@dataclass
class BergmanReport:
    rho: np.ndarray
    sup_dev: float
    integral: float
    expansion_residual: float
    scal: np.ndarray


def bergman_density(w: MetricWeight) -> BergmanReport:
    G = gram_matrix(w)
    rho = _rho(_weighted_sections(w), G)
    vol_form = w.grid.weights * w.density
    integral = float(np.sum(rho * vol_form))
    vol = float(np.sum(vol_form))
    scal = scalar_curvature(w)
    return BergmanReport(
        rho=rho,
        sup_dev=float(np.abs(rho - (w.k + 1) / vol).max()),
        integral=integral,
        expansion_residual=float(np.abs(rho - w.k - scal / 2).max()),
        scal=scal,
    )


def evaluate_rho(w: MetricWeight, theta: np.ndarray, phi_angle: np.ndarray) -> np.ndarray:
    """Bergman function of ``w`` at arbitrary sphere points (needs the potential)."""
    if w.potential is None:
        raise ValueError("off-grid evaluation needs the potential as a function")
    G = gram_matrix(w)
    X = np.sin(theta) * np.cos(phi_angle)
    Y = np.sin(theta) * np.sin(phi_angle)
    Z = np.cos(theta)
    vals = section_values(theta, phi_angle, w.k) * np.exp(-0.5 * w.k * w.potential(X, Y, Z))[..., None]
    return _rho(vals, G)


@dataclass
class ExpansionFit:
    ks: list[int]
    residuals: list[float]
    slope: float
    intercept: float


def expansion_check(potential: Potential, k_list: Sequence[int], n_theta: int = 96,
                    n_phi: int = 192) -> ExpansionFit:
    """Residuals ``sup |rho_k - k - scal/2|`` and their log-log slope in ``k``."""
    ks = list(k_list)
    if len(ks) < 3 or any(b <= a for a, b in zip(ks, ks[1:])):
        raise ValueError("k_list needs at least three increasing values")
    base = MetricWeight.from_potential(potential, ks[0], n_theta, n_phi)
    res = [bergman_density(base.with_k(k)).expansion_residual for k in ks]
    with np.errstate(divide="ignore"):
        logs = np.log(np.maximum(res, np.finfo(float).tiny))
    slope, intercept = np.polyfit(np.log(ks), logs, 1)
    return ExpansionFit(ks, [float(r) for r in res], float(slope), float(intercept))


# --- Donaldson iteration ---------------------------------------------------------

def _homogeneous(theta, phi):
    w0 = np.cos(theta / 2)
    w1 = np.sin(theta / 2) * np.exp(1j * phi)
    return w0, w1


def _fs_induced(theta, phi, k, H):
    """Sections weighted by the FS metric of ``H`` and the density of its curvature.

    With ``q = s^T H^{-T} conj(s)`` the metric is ``|s|^2 / q``; writing ``q = |v|^2``
    (``v`` from a rescaled Cholesky solve, see below) the curvature density relative to omega_FS is
    ``(|v|^2 |v'|^2 - |<v, v'>|^2) / (k |v|^4)`` with ``v'`` the derivative along the
    unit horizontal tangent ``(-conj(w1), conj(w0))``.
    """
    w0, w1 = _homogeneous(theta, phi)
    a = np.arange(k + 1)
    s = section_values(theta, phi, k)
    t0, t1 = -np.conj(w1)[..., None], np.conj(w0)[..., None]
    W0, W1 = w0[..., None], w1[..., None]
    with np.errstate(divide="ignore", invalid="ignore"):
        d0 = np.where(a < k, (k - a) * W0 ** np.maximum(k - a - 1, 0) * W1**a, 0.0)
        d1 = np.where(a > 0, a * W0 ** (k - a) * W1 ** np.maximum(a - 1, 0), 0.0)
    ds = d0 * t0 + d1 * t1
    # q = s^T H^{-T} conj(s) = |L^{-1} D conj(s)|^2 with D H^T D = L L^H; the
    # diagonal D keeps the factorization well conditioned for large k
    d = 1 / np.sqrt(np.diag(H).real)
    L = np.linalg.cholesky(d[:, None] * H.T * d[None, :])
    flat = s.shape[:-1]
    v = np.linalg.solve(L, (np.conj(s) * d).reshape(-1, k + 1).T).T.reshape(flat + (k + 1,))
    vp = np.linalg.solve(L, (np.conj(ds) * d).reshape(-1, k + 1).T).T.reshape(flat + (k + 1,))
    nv = np.sum(np.abs(v) ** 2, axis=-1)
    nvp = np.sum(np.abs(vp) ** 2, axis=-1)
    cross = np.abs(np.sum(np.conj(v) * vp, axis=-1)) ** 2
    density = (nv * nvp - cross) / (k * nv**2)
    weighted = s / np.sqrt(nv)[..., None]
    return weighted, density


@dataclass
class AlmostBalanced:
    gram: np.ndarray
    sup_dev: float
    iterations: int
    history: list[float]


def t_iteration(k: int, phi0: Union[MetricWeight, Potential], max_iters: int = 200, tol: float = 1e-3,
                n_theta: int = 64, n_phi: int = 128) -> AlmostBalanced:
    """Iterate ``H <- ((k+1)/Vol) Gram(h_H, omega_H)`` until the Bergman function is
    within ``tol`` of ``(k+1)/Vol`` in sup norm (Vol = 1).

    Iteration 0 tests the starting weight itself. Raises :class:`NotConverged`
    with the last deviation after ``max_iters`` updates.
    """
    w = phi0 if isinstance(phi0, MetricWeight) else MetricWeight.from_potential(phi0, k, n_theta, n_phi)
    if w.k != k:
        w = w.with_k(k)
    target = float(k + 1)
    G = gram_matrix(w)
    rho = _rho(_weighted_sections(w), G)
    dev = float(np.abs(rho - target).max())
    history = [dev]
    if dev <= tol:
        return AlmostBalanced(G, dev, 0, history)
    T, P = w.grid.mesh
    H = target * G
    for it in range(1, max_iters + 1):
        vals, dens = _fs_induced(T, P, k, H)
        if np.any(dens <= 0):
            raise NonPositiveMetric("induced Fubini-Study metric degenerates")
        G = _gram(vals, w.grid.weights * dens)
        np.linalg.cholesky(G)
        rho = _rho(vals, G)
        dev = float(np.abs(rho - target).max())
        history.append(dev)
        if dev <= tol:
            return AlmostBalanced(G, dev, it, history)
        H = target * G
    raise NotConverged(f"sup deviation {dev:.3g} after {max_iters} iterations", dev, max_iters)


@dataclass
class CsckDeviation:
    deviation: float
    s_hat: float


def almost_cscK_deviation(w: MetricWeight) -> CsckDeviation:
    """C0 distance of scal(omega_phi) from its average (2 on CP^1)."""
    scal = scalar_curvature(w)
    vol_form = w.grid.weights * w.density
    s_hat = float(np.sum(scal * vol_form) / np.sum(vol_form))
    return CsckDeviation(float(np.abs(scal - s_hat).max()), s_hat)


# --- gauge scaling ---------------------------------------------------------------

@dataclass
class GaugeReport:
    xi: float
    certified_bound: float
    curvature_bound: Optional[float] = None


def gauge_scaling(alpha_norm: float, dbar_star_alpha_norm: float, eps: float,
                  curvature_deviations: Sequence[float] = ()) -> GaugeReport:
    """Choose ``xi`` with ``2 xi^-2 (|alpha|^2 + |dbar* alpha|^2) < eps``.

    ``xi`` is the threshold value inflated by a factor ``1 + 1e-6``. If the
    deviation norms of the two line-bundle curvatures are given, the triangle
    bound on ``|F_E - mu(E) Id omega|`` is reported as well.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    if alpha_norm < 0 or dbar_star_alpha_norm < 0:
        raise ValueError("norms must be non-negative")
    # hypot keeps tiny norms from underflowing when squared
    n = float(np.hypot(alpha_norm, dbar_star_alpha_norm))
    if n == 0:
        xi, bound = 1.0, 0.0
    else:
        xi = n * np.sqrt(2 / eps) * (1 + 1e-6)
        bound = 2 * (n / xi) ** 2
    curv = float(sum(curvature_deviations)) + bound if curvature_deviations else None
    return GaugeReport(float(xi), float(bound), curv)
