import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.linalg import expm

from qcds import qcore
from qcds.exceptions import TruncationWarning

N = 40
coord = st.floats(-1.5, 1.5)


def test_annihilation_elements():
    np.testing.assert_array_equal(qcore.annihilation(2), [[0, 1], [0, 0]])
    assert qcore.annihilation(3)[1, 2] == pytest.approx(np.sqrt(2))
    with pytest.raises(ValueError):
        qcore.annihilation(0)


def test_zero_displacement_is_identity():
    np.testing.assert_allclose(qcore.displacement(0, N), np.eye(N), atol=1e-13)


def test_displacement_matches_expm():
    a = qcore.annihilation(N)
    alpha = 0.7 - 0.4j
    ref = expm(alpha * a.conj().T - np.conj(alpha) * a)
    np.testing.assert_allclose(qcore.displacement(alpha, N), ref, atol=1e-10)


def test_displacement_composition():
    a, b = 0.3, 0.4j
    lhs = qcore.displacement(a, N) @ qcore.displacement(b, N)
    rhs = np.exp(0.5 * (a * np.conj(b) - np.conj(a) * b)) * qcore.displacement(a + b, N)
    # truncation only touches the top levels
    np.testing.assert_allclose(lhs[:20, :20], rhs[:20, :20], atol=1e-10)


@given(coord, coord)
def test_displacement_unitary_and_inverse(x, y):
    d = qcore.displacement(complex(x, y), N)
    np.testing.assert_allclose(d @ d.conj().T, np.eye(N), atol=1e-10)
    np.testing.assert_allclose(qcore.displacement(complex(-x, -y), N), d.conj().T, atol=1e-10)


def test_coherent_state_mean_photons():
    psi = qcore.coherent_state(1.3 + 0.2j, N)
    assert qcore.mean_photon_number(psi) == pytest.approx(abs(1.3 + 0.2j) ** 2, rel=1e-8)


def test_batch_displacements_match_single(rng):
    fb = qcore.fock_basis(N)
    al = rng.normal(size=5) + 1j * rng.normal(size=5)
    stack = fb.displacements(al, check=False)
    v = rng.normal(size=N) + 0j
    applied = fb.displace(al, v, check=False)
    for k, x in enumerate(al):
        d = fb.displacement(x, check=False)
        np.testing.assert_allclose(stack[k], d, atol=1e-12)
        np.testing.assert_allclose(applied[k], d @ v, atol=1e-11)


def test_truncation_warning():
    with pytest.warns(TruncationWarning):
        qcore.displacement(4.0, 20)


def test_rotation_cases():
    np.testing.assert_allclose(qcore.build_rotation(0, 0.3, 3), np.eye(6), atol=1e-15)
    r = qcore.qubit_rotation(np.pi, 0)
    np.testing.assert_allclose(r, 1j * qcore.SX, atol=1e-15)
    e = qcore.build_rotation(np.pi, 0, N) @ qcore.ground_state(N)
    assert qcore.excited_probability(e) == pytest.approx(1.0)


@given(st.floats(0, 2 * np.pi), st.floats(0, 2 * np.pi))
def test_rotation_unitary(theta, phi):
    r = qcore.qubit_rotation(theta, phi)
    np.testing.assert_allclose(r @ r.conj().T, np.eye(2), atol=1e-14)


@given(coord, coord)
def test_ecd_hermitian_involution(x, y):
    u = qcore.build_ecd(complex(x, y), N)
    np.testing.assert_allclose(u, u.conj().T, atol=1e-12)
    np.testing.assert_allclose(u @ u, np.eye(2 * N), atol=1e-10)


def test_ecd_twice_returns_ground():
    g = qcore.ground_state(N)
    u = qcore.build_ecd(0.8j, N)
    out = u @ (u @ g)
    assert qcore.state_fidelity(out, g) == pytest.approx(1.0, abs=1e-12)


def test_ecd_on_superposition():
    beta = 0.24 * np.exp(0.6j)
    psi = (qcore.ground_state(N) + qcore.coherent_state(0, N, "e")) / np.sqrt(2)
    out = qcore.build_ecd(beta, N) @ psi
    # up to the ordering convention, both branches move by -/+ beta/2
    ref = (qcore.coherent_state(beta / 2, N, "g") + qcore.coherent_state(-beta / 2, N, "e"))
    assert qcore.state_fidelity(out, ref / np.sqrt(2)) == pytest.approx(1.0, abs=1e-12)


def test_excited_probability_and_fidelity():
    g, e = qcore.ground_state(N), qcore.coherent_state(0, N, "e")
    assert qcore.excited_probability(g) == 0
    assert qcore.excited_probability(e) == pytest.approx(1.0, abs=1e-14)
    assert qcore.excited_probability((g + e) / np.sqrt(2)) == pytest.approx(0.5)
    assert qcore.state_fidelity(g, g) == pytest.approx(1.0)
    assert qcore.state_fidelity(g, e) == pytest.approx(0.0, abs=1e-14)
