"""Center of mass, Chow weight and one-parameter flows for cycles in CP^N.

Volumes use the Fubini-Study form normalized so a projective line has area 1.
A :class:`ProjectiveCycle` is either a weighted point set or a sampled complex
curve; for the latter the masses are the FS area element times parameter
quadrature weights, and they are recomputed after every flow.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace
from typing import Callable, Optional, Sequence

import numpy as np

HERMITIAN_TOL = 1e-12


class DegeneratePoint(ValueError):
    """A sample vector is zero and has no image in projective space."""


class CycleKind(enum.Enum):
    POINT = "PointCycle"
    CURVE = "SampledCurve"


def hermitian(a, tol: float = HERMITIAN_TOL) -> np.ndarray:
    a = np.asarray(a, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    if not np.allclose(a, a.conj().T, atol=tol, rtol=0):
        raise ValueError("matrix is not Hermitian")
    return 0.5 * (a + a.conj().T)


@dataclass(frozen=True)
class ProjectiveCycle:
    """Samples ``vectors[j] in C^{N+1}`` with positive ``masses[j]``.

    For curves, ``param_shape`` is the (n_u, n_v) grid the samples are laid out
    on (row-major), ``u``/``v`` the parameter nodes, ``param_weights`` the
    quadrature weights in parameter space and ``tangents`` the two parameter
    derivatives at each sample.
    """

    vectors: np.ndarray
    masses: np.ndarray
    kind: CycleKind = CycleKind.POINT
    param_shape: Optional[tuple[int, int]] = None
    u: Optional[np.ndarray] = None
    v: Optional[np.ndarray] = None
    param_weights: Optional[np.ndarray] = None
    tangents: Optional[tuple[np.ndarray, np.ndarray]] = field(default=None, repr=False)

    def __post_init__(self):
        vecs = np.atleast_2d(np.asarray(self.vectors, dtype=complex))
        masses = np.asarray(self.masses, dtype=float).reshape(-1)
        if vecs.shape[0] != masses.shape[0]:
            raise ValueError("one mass per sample vector")
        if np.any(np.linalg.norm(vecs, axis=1) == 0):
            raise DegeneratePoint("zero vector in samples")
        if self.kind is CycleKind.POINT and np.any(masses <= 0):
            raise ValueError("point masses must be positive")
        object.__setattr__(self, "vectors", vecs)
        object.__setattr__(self, "masses", masses)

    @property
    def N(self) -> int:
        return self.vectors.shape[1] - 1

    @property
    def volume(self) -> float:
        return float(self.masses.sum())


def point_cycle(vectors, masses=None) -> ProjectiveCycle:
    vecs = np.atleast_2d(np.asarray(vectors, dtype=complex))
    if masses is None:
        masses = np.ones(vecs.shape[0])
    return ProjectiveCycle(vecs, np.asarray(masses, dtype=float))


def _fd_tangents(z: np.ndarray, u: np.ndarray, v: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Second-order finite-difference parameter derivatives of ``z[i, j, :]``."""
    zu = np.gradient(z, u, axis=0, edge_order=2)
    dv = np.diff(v)
    if np.allclose(dv, 2 * np.pi / len(v)) and np.isclose(v[-1] - v[0] + dv[0], 2 * np.pi):
        # periodic azimuth: centered differences wrap around
        zv = (np.roll(z, -1, axis=1) - np.roll(z, 1, axis=1)) / (2 * dv[0])
    else:
        zv = np.gradient(z, v, axis=1, edge_order=2)
    return zu, zv


def _fs_area_density(z: np.ndarray, zu: np.ndarray, zv: np.ndarray) -> np.ndarray:
    """FS area element (per du dv) spanned by tangents ``zu``, ``zv`` at ``z``.

    With ``h(a, b) = (<a,b>|z|^2 - <a,z><z,b>) / |z|^4`` the induced metric is
    ``g_ij = Re h(z_i, z_j) / pi`` and the density is ``sqrt(det g)``. Rows are
    samples; the formula is invariant under a common rescaling of z, zu, zv.
    """
    nz = np.einsum("jk,jk->j", z.conj(), z).real

    def h(a, b):
        ab = np.einsum("jk,jk->j", a.conj(), b)
        az = np.einsum("jk,jk->j", a.conj(), z)
        zb = np.einsum("jk,jk->j", z.conj(), b)
        return (ab * nz - az * zb) / nz**2

    guu = h(zu, zu).real / np.pi
    gvv = h(zv, zv).real / np.pi
    guv = h(zu, zv).real / np.pi
    return np.sqrt(np.clip(guu * gvv - guv**2, 0.0, None))


def sampled_curve(f: Callable[[np.ndarray, np.ndarray], np.ndarray], u, u_weights, v, v_weights) -> ProjectiveCycle:
    """Sample ``f(U, V) -> (n_u, n_v, N+1)`` on a product grid and weight by FS area.

    Tangents are estimated once by finite differences on the parametrization;
    flows act on them linearly, so no re-differencing of a moved image is needed.
    """
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    U, V = np.meshgrid(u, v, indexing="ij")
    z = np.asarray(f(U, V), dtype=complex)
    zu, zv = _fd_tangents(z, u, v)
    n = z.shape[-1]
    z, zu, zv = (a.reshape(-1, n) for a in (z, zu, zv))
    pw = np.outer(u_weights, v_weights).reshape(-1)
    dens = _fs_area_density(z, zu, zv)
    return ProjectiveCycle(
        z, dens * pw, CycleKind.CURVE,
        param_shape=(len(u), len(v)), u=u, v=v, param_weights=pw, tangents=(zu, zv),
    )


def rational_normal_curve(N: int, n_u: int = 48, n_v: int = 64) -> ProjectiveCycle:
    """The degree-N Veronese image of CP^1 with binomial weights (a balanced curve).

    Parametrized by polar angle ``u`` (Gauss-Legendre in cos u) and azimuth ``v``;
    its FS volume equals its degree ``N``.
    """
    from math import comb

    x, wx = np.polynomial.legendre.leggauss(n_u)
    u = np.arccos(-x)
    # d(cos u) = sin u du, so the du weight is wx / sin u
    u_w = wx / np.sin(u)
    v = 2 * np.pi * np.arange(n_v) / n_v
    v_w = np.full(n_v, 2 * np.pi / n_v)
    c = np.sqrt([comb(N, a) for a in range(N + 1)])

    def f(U, V):
        a = np.arange(N + 1)
        return c * np.cos(U / 2)[..., None] ** (N - a) * (np.sin(U / 2)[..., None] * np.exp(1j * V)[..., None]) ** a

    return sampled_curve(f, u, u_w, v, v_w)


def center_of_mass(x: ProjectiveCycle) -> np.ndarray:
    """``sum_j m_j z_j z_j^* / |z_j|^2 - (Vol / (N+1)) Id``."""
    z = x.vectors
    zn = z / np.linalg.norm(z, axis=1, keepdims=True)
    mu = np.einsum("j,ja,jb->ab", x.masses, zn, zn.conj())
    mu -= x.volume / (x.N + 1) * np.eye(x.N + 1)
    return 0.5 * (mu + mu.conj().T)


def chow_weight(a, x: ProjectiveCycle) -> float:
    a = hermitian(a)
    if a.shape[0] != x.N + 1:
        raise ValueError(f"matrix size {a.shape[0]} does not match ambient C^{x.N + 1}")
    return float(np.trace(center_of_mass(x) @ a).real)


def expm_hermitian(a: np.ndarray, t: float) -> np.ndarray:
    lam, U = np.linalg.eigh(a)
    return (U * np.exp(t * lam)) @ U.conj().T


def flow(a, t: float, x: ProjectiveCycle) -> ProjectiveCycle:
    """Push the cycle by ``exp(tA)``; curve masses are recomputed on the moved samples."""
    a = hermitian(a)
    g = expm_hermitian(a, t)
    moved = x.vectors @ g.T
    # keep vectors O(1) so long flows do not overflow
    scale = np.linalg.norm(moved, axis=1, keepdims=True)
    moved = moved / scale
    if x.kind is CycleKind.POINT:
        return replace(x, vectors=moved)
    zu, zv = (t_ @ g.T / scale for t_ in x.tangents)
    dens = _fs_area_density(moved, zu, zv)
    return replace(x, vectors=moved, masses=dens * x.param_weights, tangents=(zu, zv))


def schatten2(t) -> float:
    lam = np.linalg.eigvalsh(hermitian(t, tol=1e-9))
    return float(np.sqrt(np.sum(lam**2)))


VOLUME_DRIFT_TOL = 1e-3
DRIFT_SAFETY = 10.0


@dataclass
class MonotonicityReport:
    """FCh along the flow; only pairs of resolved flow times are judged.

    A flowed curve keeps its volume (its degree), so a relative volume drift
    above ``volume_tol`` means the fixed parameter grid no longer resolves the
    image at that time. Point cycles are always resolved. For curves a drop
    only counts once it exceeds ``tolerance`` plus ``DRIFT_SAFETY`` times the
    drift times the operator norm of the traceless part of A. The net drift
    underestimates the total mass error, hence the safety factor.
    """

    t: np.ndarray
    values: np.ndarray
    min_slope: float
    violations: list[tuple[int, int]] = field(default_factory=list)
    tolerance: float = 0.0
    resolved: Optional[np.ndarray] = None
    volume_tol: float = VOLUME_DRIFT_TOL

    @property
    def unresolved_t(self) -> list[float]:
        if self.resolved is None:
            return []
        return [float(t) for t, ok in zip(self.t, self.resolved) if not ok]


def monotonicity_check(a, x: ProjectiveCycle, t_grid: Sequence[float], tol: Optional[float] = None,
                       volume_tol: float = VOLUME_DRIFT_TOL) -> MonotonicityReport:
    t = np.asarray(t_grid, dtype=float)
    if np.any(np.diff(t) <= 0):
        raise ValueError("t_grid must be strictly increasing")
    if tol is None:
        tol = 1e-9 if x.kind is CycleKind.POINT else 1e-6
    flows = [flow(a, ti, x) for ti in t]
    vals = np.array([chow_weight(a, y) for y in flows])
    drift = np.array([abs(y.volume - x.volume) for y in flows])
    resolved = drift <= volume_tol * x.volume
    pairs = resolved[:-1] & resolved[1:]
    a0 = hermitian(a)
    a0 = a0 - np.trace(a0).real / a0.shape[0] * np.eye(a0.shape[0])
    slack = tol + DRIFT_SAFETY * np.abs(np.linalg.eigvalsh(a0)).max() * (drift[:-1] + drift[1:])
    dv = np.diff(vals)
    slopes = (dv / np.diff(t))[pairs]
    bad = [(i, i + 1) for i in np.nonzero((dv < -slack) & pairs)[0]]
    return MonotonicityReport(t, vals, float(slopes.min()) if len(slopes) else 0.0, bad, tol,
                              resolved, volume_tol)


@dataclass
class InequalityReport:
    lhs: float
    rhs: float
    holds: bool
    t_neg: float
    rhs_forward: float = 0.0
    holds_forward: bool = True

    @property
    def slack(self) -> float:
        return self.lhs - self.rhs

    @property
    def slack_forward(self) -> float:
        return self.lhs - self.rhs_forward


def limit_inequality_check(a, x: ProjectiveCycle, t_neg: float = -20.0) -> InequalityReport:
    """``||mu(X)||_2 ||A||_2 >= -FCh(A, Xbar)`` with ``Xbar`` proxied by ``exp(t_neg A) X``.

    Since FCh increases along the flow, the backward limit carries the smallest
    Chow weight and this bound can fail (three balanced points on a great circle
    give lhs 0 and rhs 3). The forward limit ``exp(-t_neg A) X`` always satisfies
    it by Cauchy-Schwarz and monotonicity; it is reported alongside.
    """
    lhs = schatten2(center_of_mass(x)) * schatten2(a)
    rhs = -chow_weight(a, flow(a, t_neg, x))
    rhs_fwd = -chow_weight(a, flow(a, -t_neg, x))
    return InequalityReport(lhs, rhs, bool(lhs >= rhs - 1e-6), t_neg, rhs_fwd, bool(lhs >= rhs_fwd - 1e-6))


@dataclass
class DescentResult:
    status: str  # "balanced", "diverged" or "max_steps"
    transform: np.ndarray
    direction: Optional[np.ndarray]
    residual: float
    steps: int

    @property
    def balanced(self) -> bool:
        return self.status == "balanced"


def kempf_ness_descent(x: ProjectiveCycle, steps: int = 2000, rate: Optional[float] = None,
                       tol: float = 1e-8, cap: float = 1e6) -> DescentResult:
    """Gradient descent ``g <- exp(-rate * mu(g X)) g`` on SL(N+1).

    Stops as balanced once ``||mu||_2 < tol``; reports divergence with the current
    moment-map direction once the operator norm of ``g`` exceeds ``cap``. The
    default rate is ``1 / Vol(X)``, which keeps steps stable for any total mass.
    """
    if x.kind is not CycleKind.POINT:
        raise ValueError("descent is defined for point cycles")
    if rate is None:
        rate = 1.0 / x.volume
    g = np.eye(x.N + 1, dtype=complex)
    mu = center_of_mass(x)
    res = schatten2(mu)
    for n in range(steps + 1):
        if res < tol:
            return DescentResult("balanced", g, None, res, n)
        if np.linalg.norm(g, 2) > cap:
            return DescentResult("diverged", g, mu, res, n)
        if n == steps:
            break
        g = expm_hermitian(mu, -rate) @ g
        mu = center_of_mass(replace(x, vectors=x.vectors @ g.T))
        res = schatten2(mu)
    return DescentResult("max_steps", g, mu, res, steps)


def random_hermitian(n: int, rng: np.random.Generator, scale: float = 1.0) -> np.ndarray:
    m = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    return scale * 0.5 * (m + m.conj().T)


def random_unitary(n: int, rng: np.random.Generator) -> np.ndarray:
    m = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    q, r = np.linalg.qr(m)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def random_point_cycle(N: int, n_points: int, rng: np.random.Generator) -> ProjectiveCycle:
    vecs = rng.normal(size=(n_points, N + 1)) + 1j * rng.normal(size=(n_points, N + 1))
    return point_cycle(vecs, rng.uniform(0.5, 2.0, size=n_points))


def cycle_from_json(obj) -> ProjectiveCycle:
    """``{N, samples: [{vector: [[re, im], ...], mass}]}``."""
    N = int(obj["N"])
    vecs, masses = [], []
    for s in obj["samples"]:
        vec = [complex(re, im) for re, im in s["vector"]]
        if len(vec) != N + 1:
            raise ValueError(f"sample vector of length {len(vec)} in C^{N + 1}")
        vecs.append(vec)
        masses.append(float(s.get("mass", 1.0)))
    return point_cycle(np.array(vecs, dtype=complex).reshape(len(vecs), N + 1), masses)


def matrix_from_json(rows) -> np.ndarray:
    """Row-major complex matrix as nested ``[re, im]`` pairs (plain reals allowed)."""
    out = []
    for row in rows:
        out.append([complex(e[0], e[1]) if isinstance(e, (list, tuple)) else complex(e) for e in row])
    return hermitian(np.array(out))
