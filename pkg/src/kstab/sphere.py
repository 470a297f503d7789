"""Product grids on the round sphere (= CP^1) and Laplacians on them.

Nodes are Chebyshev midpoints in the polar angle (uniform in theta, never on a
pole) with Fejer's first-rule weights, times a uniform periodic azimuth grid.
The weights are normalized to total mass 1, i.e. they integrate against the
Fubini-Study area form of O(1). The rule integrates polynomials in cos(theta) of
degree < n_theta and trigonometric polynomials in the azimuth of degree
< n_phi exactly.

The spectral Laplacian goes through a spherical harmonic transform: FFT in
the azimuth, then projection onto normalized associated Legendre functions of
degree at most ``L = (n_theta - 1) // 2`` (exact under the Fejer rule), where
the operator is diagonal. Working in coefficient space avoids the 1/sin^2
blow-up of round-off near the poles that grid-space formulas suffer. The
finite-difference Laplacian uses second-order centered stencils on the
double-Fourier extension u(2 pi - theta, phi + pi), so its stencil crosses the
pole through that reflection.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import sph_legendre_p_all


@dataclass(frozen=True)
class SphereGrid:
    theta: np.ndarray
    phi: np.ndarray
    weights: np.ndarray  # (n_theta, n_phi), sums to 1

    @property
    def shape(self) -> tuple[int, int]:
        return (len(self.theta), len(self.phi))

    @property
    def mesh(self) -> tuple[np.ndarray, np.ndarray]:
        return np.meshgrid(self.theta, self.phi, indexing="ij")

    def cartesian(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        T, P = self.mesh
        return np.sin(T) * np.cos(P), np.sin(T) * np.sin(P), np.cos(T)

    def affine(self) -> np.ndarray:
        """Chart coordinate ``z = tan(theta/2) e^{i phi}`` (infinite only at the south pole)."""
        T, P = self.mesh
        return np.tan(T / 2) * np.exp(1j * P)

    def integrate(self, values: np.ndarray) -> float:
        return float(np.sum(self.weights * values))

    def refined(self) -> "SphereGrid":
        n_t, n_p = self.shape
        return fejer_grid(2 * n_t, 2 * n_p)


def fejer_weights(n: int) -> np.ndarray:
    """Fejer first-rule weights on ``x_i = cos((2i+1) pi / 2n)`` for integrals over [-1, 1]."""
    theta = (2 * np.arange(n) + 1) * np.pi / (2 * n)
    j = np.arange(1, n // 2 + 1)
    s = np.cos(2 * np.outer(theta, j)) / (4 * j**2 - 1)
    return 2.0 / n * (1 - 2 * s.sum(axis=1))


def fejer_grid(n_theta: int, n_phi: int) -> SphereGrid:
    if n_phi % 2:
        raise ValueError("n_phi must be even (the pole reflection shifts by half a turn)")
    theta = (2 * np.arange(n_theta) + 1) * np.pi / (2 * n_theta)
    phi = 2 * np.pi * np.arange(n_phi) / n_phi
    w = np.outer(fejer_weights(n_theta), np.full(n_phi, 2 * np.pi / n_phi)) / (4 * np.pi)
    return SphereGrid(theta, phi, w)


def _extend(u: np.ndarray) -> np.ndarray:
    """Doubly periodic extension over theta in (0, 2 pi)."""
    n_p = u.shape[1]
    reflected = np.roll(u[::-1, :], -n_p // 2, axis=1)
    return np.concatenate([u, reflected], axis=0)


@lru_cache(maxsize=16)
def _sht_laplacians(n_t: int, n_p: int) -> np.ndarray:
    """Per-order matrices ``(L+1, n_t, n_t)`` mapping row values of the e^{i m phi}
    coefficient to those of its Laplacian; orders above ``L`` are discarded."""
    theta = (2 * np.arange(n_t) + 1) * np.pi / (2 * n_t)
    L = min((n_t - 1) // 2, n_p // 2 - 1)
    P = sph_legendre_p_all(L, L, theta)[0]  # Y_l^m(theta, 0), shape (L+1, 2L+1, n_t)
    w = 2 * np.pi * fejer_weights(n_t)
    ops = np.zeros((L + 1, n_t, n_t))
    for m in range(L + 1):
        Pm = P[m:, m, :]
        l = np.arange(m, L + 1)
        ops[m] = Pm.T @ ((-l * (l + 1))[:, None] * (Pm * w))
    return ops


def _spectral_laplacian(u: np.ndarray) -> np.ndarray:
    n_t, n_p = u.shape
    ops = _sht_laplacians(n_t, n_p)
    L = ops.shape[0] - 1
    c = np.fft.fft(u, axis=1)
    out = np.zeros_like(c)
    m = np.arange(L + 1)
    out[:, m] = np.einsum("mij,jm->im", ops, c[:, m])
    neg = -m[1:] % n_p
    out[:, neg] = np.einsum("mij,jm->im", ops[1:], c[:, neg])
    return np.fft.ifft(out, axis=1).real


def _fd_derivs(u: np.ndarray, theta: np.ndarray, phi: np.ndarray):
    n_t, n_p = u.shape
    h = theta[1] - theta[0] if n_t > 1 else np.pi
    dp = phi[1] - phi[0]
    ext = _extend(u)
    up = np.roll(ext, -1, axis=0)[:n_t]
    dn = np.roll(ext, 1, axis=0)[:n_t]
    ut = (up - dn) / (2 * h)
    utt = (up - 2 * u + dn) / h**2
    upp = (np.roll(u, -1, axis=1) - 2 * u + np.roll(u, 1, axis=1)) / dp**2
    return ut, utt, upp


def laplacian(u: np.ndarray, grid: SphereGrid, method: str = "spectral") -> np.ndarray:
    """Round-sphere Laplace-Beltrami operator of nodal values ``u``."""
    u = np.asarray(u, dtype=float)
    if method == "spectral":
        return _spectral_laplacian(u)
    if method != "fd":
        raise ValueError(f"unknown method {method!r}")
    ut, utt, upp = _fd_derivs(u, grid.theta, grid.phi)
    s = np.sin(grid.theta)[:, None]
    c = np.cos(grid.theta)[:, None]
    return utt + (c / s) * ut + upp / s**2


def rotate_points(X, Y, Z, R: np.ndarray):
    """Apply a 3x3 rotation to Cartesian coordinate arrays."""
    P = np.stack([X, Y, Z], axis=-1) @ R.T
    return P[..., 0], P[..., 1], P[..., 2]
