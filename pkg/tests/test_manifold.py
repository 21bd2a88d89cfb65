import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from barlift.errors import DegenerateState, NonSkewInput, TangencyViolation
from barlift.manifold import (E1, E2, E3, angvel_error, attitude_error, config_error_psi, decompose,
                              hat, nearest_rotation, renormalize, rotation_errors, vee)
from conftest import random_tangent, random_unit

finite = st.floats(-1e3, 1e3, allow_nan=False, allow_infinity=False)
vec3 = arrays(np.float64, 3, elements=finite)


def rot_z(a):
    c, s = np.cos(a), np.sin(a)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def test_hat_examples():
    assert np.array_equal(hat(E3), [[0, -1, 0], [1, 0, 0], [0, 0, 0]])
    assert np.array_equal(hat(np.zeros(3)), np.zeros((3, 3)))
    assert np.allclose(hat(np.array([1.0, 2, 3])) @ np.array([4.0, 5, 6]), [-3, 6, -3])


def test_vee_examples():
    assert np.array_equal(vee(hat(E3)), E3)
    assert np.array_equal(vee(np.zeros((3, 3))), np.zeros(3))
    v = np.array([-2.0, 0.5, 7.0])
    assert np.array_equal(vee(hat(v)), v)


def test_vee_rejects_non_skew():
    M = hat(np.array([1.0, 2.0, 3.0]))
    M[0, 0] = 1e-6
    with pytest.raises(NonSkewInput):
        vee(M)


@given(vec3, vec3)
def test_hat_properties(v, w):
    H = hat(v)
    assert np.array_equal(H, -H.T)
    assert np.allclose(H @ w, np.cross(v, w), atol=1e-9)
    assert np.allclose(hat(v) @ w, -hat(w) @ v, atol=1e-9)
    assert np.array_equal(vee(hat(v)), v)


def test_decompose_examples():
    par, perp = decompose(E3, E3)
    assert np.allclose(par, E3) and np.allclose(perp, 0)
    par, perp = decompose(E1, E3)
    assert np.allclose(par, 0) and np.allclose(perp, E1)
    par, perp = decompose(np.array([1.0, 1.0, 0.0]), E1)
    assert np.allclose(par, E1) and np.allclose(perp, E2)


def test_decompose_reconstruction_bulk(rng):
    for _ in range(10_000):
        v = rng.normal(size=3) * 10
        q = random_unit(rng)
        par, perp = decompose(v, q)
        assert np.max(np.abs(par + perp - v)) < 1e-12
        assert abs(perp @ q) < 1e-12
        assert np.max(np.abs(np.cross(par, q))) < 1e-12


def test_attitude_error_examples():
    q = random_unit(np.random.default_rng(1))
    assert np.allclose(attitude_error(q, q), 0)
    assert np.allclose(attitude_error(E1, E2), E3)
    assert np.allclose(attitude_error(-q, q), 0)


def test_attitude_error_properties(rng):
    for _ in range(1000):
        qd, q = random_unit(rng), random_unit(rng)
        e = attitude_error(qd, q)
        assert abs(e @ q) < 1e-12
        assert abs(e @ e - (1 - (qd @ q) ** 2)) < 1e-12


def test_angvel_error_examples():
    q = E3
    assert np.allclose(angvel_error(q, E1, E1, q), 0)
    assert np.allclose(angvel_error(E3, np.zeros(3), E1, E3), -E1)
    assert np.allclose(angvel_error(E3, E2, np.zeros(3)), E2)


def test_angvel_error_tangency_checks():
    with pytest.raises(TangencyViolation):
        angvel_error(E3, E3 * 1e-6, np.zeros(3))
    with pytest.raises(TangencyViolation):
        angvel_error(E3, np.zeros(3), E1, q_des=E1)


def test_angvel_error_is_tangent(rng):
    for _ in range(1000):
        q, qd = random_unit(rng), random_unit(rng)
        w, wd = random_tangent(rng, q), random_tangent(rng, qd)
        assert abs(angvel_error(q, w, wd, qd) @ q) < 1e-9


def test_psi_examples_and_bounds(rng):
    q = random_unit(rng)
    assert config_error_psi(q, q) == pytest.approx(0, abs=1e-15)
    assert config_error_psi(-q, q) == pytest.approx(2)
    assert config_error_psi(E1, E2) == pytest.approx(1)
    # 0.5 |e|^2 <= Psi <= |e|^2 / (2 - psi) whenever Psi <= psi < 1
    psi_cap = 0.7
    for _ in range(2000):
        qd, q = random_unit(rng), random_unit(rng)
        Psi = config_error_psi(qd, q)
        if Psi > psi_cap:
            continue
        e2 = attitude_error(qd, q) @ attitude_error(qd, q)
        assert 0.5 * e2 <= Psi + 1e-14
        assert Psi <= e2 / (2 - psi_cap) + 1e-14


def test_rotation_errors_examples():
    I = np.eye(3)
    eR, eW = rotation_errors(I, np.zeros(3), I, np.zeros(3))
    assert np.allclose(eR, 0) and np.allclose(eW, 0)
    eR, _ = rotation_errors(I, np.zeros(3), rot_z(np.pi / 2), np.zeros(3))
    assert np.allclose(eR, [0, 0, 1])
    _, eW = rotation_errors(I, np.zeros(3), I, E1)
    assert np.allclose(eW, E1)


def test_renormalize_examples():
    q = np.array([0.0, 0.0, 1.0001])
    w = np.array([1.0, 0.0, 1e-5])
    R = rot_z(0.3)
    (qn,), (wn,), (Rn,) = renormalize([q], [w], [R])
    assert np.allclose(qn, q / np.linalg.norm(q))
    assert abs(wn @ qn) < 1e-15
    assert np.allclose(Rn, R, atol=1e-12)


def test_renormalize_rejects_collapsed():
    with pytest.raises(DegenerateState):
        renormalize([np.array([0.3, 0.0, 0.0])])


def test_nearest_rotation_repairs_drift(rng):
    R = rot_z(1.1) + 1e-4 * rng.normal(size=(3, 3))
    Q = nearest_rotation(R)
    assert np.allclose(Q.T @ Q, np.eye(3), atol=1e-12)
    assert np.linalg.det(Q) == pytest.approx(1.0)
