import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from kstab.moment import (CycleKind, DegeneratePoint, center_of_mass, chow_weight, flow,
                          kempf_ness_descent, limit_inequality_check, monotonicity_check,
                          point_cycle, random_hermitian, random_point_cycle, random_unitary,
                          rational_normal_curve, schatten2, cycle_from_json, hermitian)

A_DIAG = np.diag([1.0, -1.0])
seeds = st.integers(0, 2**32 - 1)


def test_center_of_mass_examples():
    assert np.allclose(center_of_mass(point_cycle([[1, 0], [0, 1]])), 0)
    assert np.allclose(center_of_mass(point_cycle([[1, 0]])), np.diag([0.5, -0.5]))
    assert np.allclose(center_of_mass(point_cycle([[1, 0], [0, 1]], [1, 3])), np.diag([-1, 1]))


def test_zero_vector_rejected():
    with pytest.raises(DegeneratePoint):
        point_cycle([[0, 0], [1, 0]])
    with pytest.raises(DegeneratePoint):
        cycle_from_json({"N": 1, "samples": [{"vector": [[0, 0], [0, 0]], "mass": 1}]})


def test_nonpositive_mass_rejected():
    with pytest.raises(ValueError):
        point_cycle([[1, 0]], [0.0])


def test_hermitian_builder():
    with pytest.raises(ValueError):
        hermitian([[0, 1], [0, 0]])
    with pytest.raises(ValueError):
        hermitian([1, 2])


def test_chow_weight_examples():
    assert chow_weight(A_DIAG, point_cycle([[1, 0]])) == pytest.approx(1)
    assert chow_weight(A_DIAG, point_cycle([[1, 0], [0, 1]])) == pytest.approx(0)
    rng = np.random.default_rng(3)
    x = random_point_cycle(3, 7, rng)
    assert abs(chow_weight(np.eye(4), x)) < 1e-12
    with pytest.raises(ValueError):
        chow_weight(np.eye(3), x)


def test_schatten2_examples():
    assert schatten2(np.diag([0.5, -0.5])) == pytest.approx(1 / np.sqrt(2))
    assert schatten2(np.zeros((3, 3))) == 0
    assert schatten2(np.diag([3.0, 4.0])) == pytest.approx(5)


def test_flow_examples():
    x = point_cycle([[1, 1]])
    assert np.allclose(flow(A_DIAG, 0.0, x).vectors, x.vectors / np.sqrt(2))
    assert np.allclose(center_of_mass(flow(np.zeros((2, 2)), 3.0, x)), center_of_mass(x))
    for t in np.linspace(-3, 3, 13):
        assert chow_weight(A_DIAG, flow(A_DIAG, t, x)) == pytest.approx(np.tanh(2 * t), abs=1e-10)


def test_monotonicity_examples():
    x = point_cycle([[1, 1]])
    rep = monotonicity_check(A_DIAG, x, np.linspace(-3, 3, 121))
    assert rep.violations == [] and rep.min_slope > 0
    rep = monotonicity_check(np.zeros((2, 2)), x, np.linspace(-3, 3, 11))
    assert rep.violations == [] and np.allclose(rep.values, rep.values[0])
    with pytest.raises(ValueError):
        monotonicity_check(A_DIAG, x, [0.0, 0.0, 1.0])


def test_monotonicity_random_p3_ten_points():
    rng = np.random.default_rng(11)
    for _ in range(5):
        x = random_point_cycle(3, 10, rng)
        a = random_hermitian(4, rng)
        assert monotonicity_check(a, x, np.linspace(-4, 4, 200)).violations == []


def test_inequality_examples():
    rep = limit_inequality_check(A_DIAG, point_cycle([[1, 1]]), -20.0)
    assert rep.lhs == pytest.approx(1)
    assert rep.rhs == pytest.approx(1, abs=1e-12)
    assert rep.holds
    bal = limit_inequality_check(A_DIAG, point_cycle([[1, 0], [0, 1]]))
    assert bal.lhs == pytest.approx(0, abs=1e-12) and bal.rhs <= 1e-12 and bal.holds


def test_inequality_backward_counterexample():
    # three balanced points on a great circle of P^1: mu = 0, yet the backward
    # limit collapses all mass onto [0:1]
    z = [[1, np.exp(2j * np.pi * k / 3)] for k in range(3)]
    x = point_cycle(z)
    assert schatten2(center_of_mass(x)) < 1e-12
    rep = limit_inequality_check(A_DIAG, x, -20.0)
    assert rep.lhs == pytest.approx(0, abs=1e-12)
    assert rep.rhs == pytest.approx(3, abs=1e-9)
    assert not rep.holds
    assert rep.holds_forward


@settings(max_examples=40)
@given(seeds, st.integers(1, 5), st.integers(1, 8))
def test_inequality_forward_limit_always_holds(seed, N, n):
    rng = np.random.default_rng(seed)
    x = random_point_cycle(N, n, rng)
    a = random_hermitian(N + 1, rng)
    assert limit_inequality_check(a, x).holds_forward


@settings(max_examples=40)
@given(seeds, st.integers(1, 5), st.integers(1, 8))
def test_trace_zero_and_linearity(seed, N, n):
    rng = np.random.default_rng(seed)
    x = random_point_cycle(N, n, rng)
    assert abs(np.trace(center_of_mass(x))) < 1e-12
    a, b = random_hermitian(N + 1, rng), random_hermitian(N + 1, rng)
    s = rng.normal()
    lhs = chow_weight(a + s * b, x)
    assert lhs == pytest.approx(chow_weight(a, x) + s * chow_weight(b, x), abs=1e-10)
    assert chow_weight(a + 2.5 * np.eye(N + 1), x) == pytest.approx(chow_weight(a, x), abs=1e-10)


@settings(max_examples=40)
@given(seeds, st.integers(1, 5), st.integers(1, 8))
def test_unitary_equivariance(seed, N, n):
    rng = np.random.default_rng(seed)
    x = random_point_cycle(N, n, rng)
    U = random_unitary(N + 1, rng)
    ux = point_cycle(x.vectors @ U.T, x.masses)
    assert np.allclose(center_of_mass(ux), U @ center_of_mass(x) @ U.conj().T, atol=1e-10)


@settings(max_examples=40)
@given(seeds, st.integers(1, 4), st.floats(-2, 2), st.floats(-2, 2))
def test_flow_group_law(seed, N, s, t):
    rng = np.random.default_rng(seed)
    x = random_point_cycle(N, 5, rng)
    a = random_hermitian(N + 1, rng)
    two = center_of_mass(flow(a, s, flow(a, t, x)))
    one = center_of_mass(flow(a, s + t, x))
    assert np.allclose(two, one, atol=1e-10)


@settings(max_examples=30)
@given(seeds, st.integers(1, 5), st.integers(1, 9))
def test_monotone_along_flow(seed, N, n):
    rng = np.random.default_rng(seed)
    x = random_point_cycle(N, n, rng)
    a = random_hermitian(N + 1, rng)
    assert monotonicity_check(a, x, np.linspace(-5, 5, 200)).violations == []


def test_descent_balanced_pair_is_immediate():
    res = kempf_ness_descent(point_cycle([[1, 0], [0, 1]]))
    assert res.balanced and res.steps == 0
    assert np.allclose(res.transform, np.eye(2))


def test_descent_balances_generic_cycle():
    # four generic points with equal mass in P^1 admit a balanced position
    rng = np.random.default_rng(5)
    x = random_point_cycle(1, 4, rng)
    x = point_cycle(x.vectors)
    res = kempf_ness_descent(x, steps=5000)
    assert res.balanced
    gx = point_cycle(x.vectors @ res.transform.T, x.masses)
    assert schatten2(center_of_mass(gx)) < 1e-8


def test_descent_unequal_antipodal_masses_diverge():
    # two points with masses 1 and 3 have no balanced representative
    res = kempf_ness_descent(point_cycle([[1, 0], [0, 1]], [1, 3]), steps=5000)
    assert res.status == "diverged"


def test_descent_single_support_diverges():
    res = kempf_ness_descent(point_cycle([[1, 0], [1, 0], [2, 0]]))
    assert res.status == "diverged"
    d = res.direction / schatten2(res.direction)
    assert np.allclose(d, np.diag([0.5, -0.5]) * np.sqrt(2), atol=1e-8)


def test_descent_rejects_curves():
    with pytest.raises(ValueError):
        kempf_ness_descent(rational_normal_curve(2, 8, 16))


def test_rational_normal_curve_volume_second_order():
    errs = [abs(rational_normal_curve(2, n, 2 * n).volume - 2) for n in (24, 48, 96)]
    rates = [np.log2(a / b) for a, b in zip(errs, errs[1:])]
    assert all(r == pytest.approx(2, abs=0.15) for r in rates)
    assert errs[-1] < 2e-3


def test_rational_normal_curve_is_nearly_balanced():
    x = rational_normal_curve(3, 96, 192)
    assert x.kind is CycleKind.CURVE
    assert schatten2(center_of_mass(x)) < 5e-3


def test_curve_flow_keeps_volume_while_resolved():
    x = rational_normal_curve(2, 96, 192)
    a = np.diag([0.5, 0.0, -0.5])
    for t in (-1.0, 0.5, 1.0):
        assert flow(a, t, x).volume == pytest.approx(x.volume, rel=1e-3)


def test_curve_monotonicity_on_resolved_times():
    rng = np.random.default_rng(2)
    for _ in range(10):
        a = random_hermitian(3, rng)
        x = rational_normal_curve(2, 48, 96)
        rep = monotonicity_check(a, x, np.linspace(-2, 2, 41))
        assert rep.violations == []
        assert rep.resolved.sum() >= 2


def test_curve_chow_weight_constant_under_own_symmetry():
    # diag(1/2, 0, -1/2) generates automorphisms of the conic
    x = rational_normal_curve(2, 96, 192)
    rep = monotonicity_check(np.diag([0.5, 0.0, -0.5]), x, np.linspace(-1, 1, 11))
    assert np.ptp(rep.values) < 1e-4


def test_curve_monotone_under_diagonal_flow():
    x = rational_normal_curve(2, 96, 192)
    a = np.diag([0.3, -0.5, 0.1])
    rep = monotonicity_check(a, x, np.linspace(-1, 1, 21))
    assert rep.unresolved_t == [] and rep.violations == [] and rep.min_slope > 0
