from math import factorial

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from kstab.bergman import (MetricWeight, NonPositiveMetric, NotConverged, QuadratureUnderResolved,
                           almost_cscK_deviation, bergman_density, evaluate_rho, expansion_check,
                           fs_gram, gauge_scaling, gaussian_bump, gram_matrix, linear_height,
                           named_potential, scalar_curvature, t_iteration, zero_potential,
                           zonal_harmonic)
from kstab.sphere import fejer_grid


def rotation(axis, angle):
    axis = np.asarray(axis, float) / np.linalg.norm(axis)
    K = np.array([[0, -axis[2], axis[1]], [axis[2], 0, -axis[0]], [-axis[1], axis[0], 0]])
    return np.eye(3) + np.sin(angle) * K + (1 - np.cos(angle)) * K @ K


def rotated(pot, R):
    # (phi o R)(P) = phi(R P)
    def f(X, Y, Z):
        P = np.stack([X, Y, Z], -1) @ R.T
        return pot(P[..., 0], P[..., 1], P[..., 2])
    return f


def test_fs_gram_k4():
    w = MetricWeight.from_potential(zero_potential, 4, 32, 64)
    G = gram_matrix(w)
    expected = np.diag([factorial(a) * factorial(4 - a) / factorial(5) for a in range(5)])
    assert np.allclose(G, expected, atol=1e-14)
    assert np.allclose(fs_gram(4), expected)


def test_constant_potential_scales_gram():
    k, c = 5, 0.3
    w = MetricWeight.from_potential(lambda X, Y, Z: np.full_like(X, c), k, 32, 64)
    assert np.allclose(gram_matrix(w), np.exp(-k * c) * fs_gram(k), atol=1e-14)


def test_rotationally_symmetric_gram_is_diagonal():
    w = MetricWeight.from_potential(zonal_harmonic(0.1), 6, 48, 96)
    G = gram_matrix(w)
    assert np.abs(G - np.diag(np.diag(G))).max() < 1e-10


def test_gram_resolution_check():
    w = MetricWeight.from_potential(gaussian_bump(0.1), 8, 48, 96)
    gram_matrix(w, check_resolution=True)
    coarse = MetricWeight.from_potential(gaussian_bump(0.05, width=0.2), 8, 8, 16)
    with pytest.raises(QuadratureUnderResolved):
        gram_matrix(coarse, check_resolution=True)


def test_nonpositive_metric_rejected():
    # Lap of the zonal harmonic is -6 times itself, so 1 + Lap phi < 0 at the poles
    w = MetricWeight.from_potential(zonal_harmonic(0.5), 4, 32, 64)
    assert w.density.min() < 0
    for fn in (gram_matrix, bergman_density, scalar_curvature, almost_cscK_deviation):
        with pytest.raises(NonPositiveMetric):
            fn(w)


def test_weight_validation():
    g = fejer_grid(8, 16)
    with pytest.raises(ValueError):
        MetricWeight(g, np.zeros((4, 4)), 3)
    with pytest.raises(ValueError):
        MetricWeight(g, np.zeros(g.shape), 0)
    bad = np.zeros(g.shape)
    bad[0, 0] = np.inf
    with pytest.raises(ValueError):
        MetricWeight(g, bad, 3)
    with pytest.raises(ValueError):
        named_potential("nope", 1.0)


@pytest.mark.parametrize("k", [4, 6, 8, 16, 32])
def test_fs_bergman_is_constant(k):
    rep = bergman_density(MetricWeight.from_potential(zero_potential, k, 48, 96))
    assert np.abs(rep.rho - (k + 1)).max() < 1e-8
    assert rep.integral == pytest.approx(k + 1, abs=1e-7)
    assert rep.expansion_residual < 1e-8


def test_linear_bump_is_nonconstant():
    rep = bergman_density(MetricWeight.from_potential(linear_height(0.2), 8, 48, 96))
    assert rep.sup_dev > 1e-4
    assert rep.integral == pytest.approx(9, abs=1e-7)


@settings(max_examples=15)
@given(st.sampled_from(["bump", "zonal", "linear"]), st.floats(0.01, 0.15), st.integers(1, 24))
def test_closure_and_positivity(family, amp, k):
    w = MetricWeight.from_potential(named_potential(family, amp), k, 64, 128)
    rep = bergman_density(w)
    assert rep.integral == pytest.approx(k + 1, abs=1e-7)
    assert rep.rho.min() > 0
    np.linalg.cholesky(gram_matrix(w))


def test_scal_fs_and_gauss_bonnet():
    assert np.abs(scalar_curvature(MetricWeight.from_potential(zero_potential, 3, 32, 64)) - 2).max() < 1e-6
    for pot in (gaussian_bump(0.1), zonal_harmonic(0.05), linear_height(0.2)):
        w = MetricWeight.from_potential(pot, 3, 64, 128)
        total = w.grid.integrate(scalar_curvature(w) * w.density)
        assert total == pytest.approx(2, abs=1e-5)


def test_scal_fd_method_converges_to_spectral():
    errs = []
    for n in (64, 128):
        w = MetricWeight.from_potential(gaussian_bump(0.05), 3, n, 2 * n)
        e = np.abs(scalar_curvature(w, method="fd") - scalar_curvature(w))
        errs.append(e[np.abs(np.cos(w.grid.theta)) < 0.9].max())
    assert errs[1] < 5e-3
    assert np.log2(errs[0] / errs[1]) == pytest.approx(2, abs=0.2)


def test_scal_permutes_under_z_rotation():
    n_t, n_p, m = 48, 96, 7
    pot = gaussian_bump(0.1)
    R = rotation([0, 0, 1], 2 * np.pi * m / n_p)
    s0 = scalar_curvature(MetricWeight.from_potential(pot, 3, n_t, n_p))
    s1 = scalar_curvature(MetricWeight.from_potential(rotated(pot, R), 3, n_t, n_p))
    # (phi o R) at azimuth j equals phi at azimuth j + m
    assert np.abs(s1 - np.roll(s0, -m, axis=1)).max() < 1e-6


def test_rho_rotation_equivariant():
    pot = gaussian_bump(0.1)
    R = rotation([1, 2, 0.5], 0.9)
    w0 = MetricWeight.from_potential(pot, 8, 64, 128)
    w1 = MetricWeight.from_potential(rotated(pot, R), 8, 64, 128)
    rng = np.random.default_rng(0)
    th = np.arccos(rng.uniform(-1, 1, 50))
    ph = rng.uniform(0, 2 * np.pi, 50)
    P = np.stack([np.sin(th) * np.cos(ph), np.sin(th) * np.sin(ph), np.cos(th)], -1) @ R.T
    th_r = np.arccos(np.clip(P[:, 2], -1, 1))
    ph_r = np.arctan2(P[:, 1], P[:, 0])
    assert np.abs(evaluate_rho(w1, th, ph) - evaluate_rho(w0, th_r, ph_r)).max() < 1e-8


def test_expansion_zero_potential():
    fit = expansion_check(zero_potential, [4, 8, 16], 32, 64)
    assert max(fit.residuals) < 1e-8


def test_expansion_slope_window_and_amplitude_order():
    fit1 = expansion_check(zonal_harmonic(1e-4), [4, 8, 16, 32])
    fit2 = expansion_check(zonal_harmonic(2e-4), [4, 8, 16, 32])
    assert -1.3 <= fit1.slope <= -0.7
    assert -1.3 <= fit2.slope <= -0.7
    assert all(b > a for a, b in zip(fit1.residuals, fit2.residuals))
    # linear response: doubling the potential doubles the residual up to O(amplitude)
    assert np.allclose(np.array(fit2.residuals) / fit1.residuals, 2, rtol=1e-2)


def test_expansion_local_slopes_approach_minus_one():
    fit = expansion_check(zonal_harmonic(1e-4), [4, 8, 16, 32, 64], 160, 320)
    local = np.diff(np.log(fit.residuals)) / np.log(2)
    assert all(b < a for a, b in zip(local, local[1:]))
    assert local[-1] == pytest.approx(-1, abs=0.1)


def test_expansion_needs_three_increasing_k():
    with pytest.raises(ValueError):
        expansion_check(zero_potential, [4, 8])
    with pytest.raises(ValueError):
        expansion_check(zero_potential, [4, 8, 8])


def test_t_iteration_fs_is_immediate():
    res = t_iteration(5, zero_potential, n_theta=32, n_phi=64)
    assert res.iterations == 0 and res.sup_dev < 1e-8


def test_t_iteration_bump_k8():
    res = t_iteration(8, gaussian_bump(), max_iters=200, tol=1e-3)
    assert res.sup_dev <= 1e-3 and res.iterations <= 200
    np.linalg.cholesky(res.gram)
    # deviation shrinks geometrically once started
    assert res.history[-1] < res.history[1]


def test_t_iteration_tol_zero_raises():
    with pytest.raises(NotConverged) as exc:
        t_iteration(4, gaussian_bump(), max_iters=20, tol=0.0, n_theta=32, n_phi=64)
    assert exc.value.iterations == 20 and exc.value.sup_dev > 0


def test_almost_csck_examples():
    d0 = almost_cscK_deviation(MetricWeight.from_potential(zero_potential, 1, 32, 64))
    assert d0.deviation < 1e-6 and d0.s_hat == pytest.approx(2, abs=1e-6)
    devs = []
    for j in range(6):
        d = almost_cscK_deviation(MetricWeight.from_potential(gaussian_bump(0.01 / 2**j), 1, 64, 128))
        assert d.s_hat == pytest.approx(2, abs=1e-6)
        devs.append(d.deviation)
    ratios = np.array(devs[:-1]) / devs[1:]
    # linear rate: halving the amplitude halves the deviation
    assert np.allclose(ratios, 2, rtol=0.05)
    assert all(b < a for a, b in zip(ratios, ratios[1:]))


def test_gauge_examples():
    r = gauge_scaling(1, 1, 0.1)
    assert r.xi == pytest.approx(np.sqrt(40) * (1 + 1e-6), rel=1e-12)
    assert r.certified_bound < 0.1
    z = gauge_scaling(0, 0, 0.3)
    assert z.xi == 1 and z.certified_bound == 0
    assert gauge_scaling(1, 2, 0.05).xi == pytest.approx(np.sqrt(2) * gauge_scaling(1, 2, 0.1).xi, rel=1e-12)
    c = gauge_scaling(1, 1, 0.1, [0.01, 0.02])
    assert c.curvature_bound == pytest.approx(0.03 + c.certified_bound)
    for bad in ((1, 1, 0), (1, 1, -1), (-1, 0, 1)):
        with pytest.raises(ValueError):
            gauge_scaling(*bad)


@given(st.floats(0, 1e3), st.floats(0, 1e3), st.floats(1e-8, 1e3))
def test_gauge_bound_is_strict(a, b, eps):
    r = gauge_scaling(a, b, eps)
    assert r.certified_bound < eps
    h = gauge_scaling(a, b, eps / 2)
    if a or b:
        assert h.xi == pytest.approx(np.sqrt(2) * r.xi, rel=1e-9)
