from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, strategies as st

from qcds import protocol as pr
from qcds import qcore

N = 40


def manual_probe(params, beta_mag, n):
    u = np.eye(2 * n, dtype=complex)
    for th, ph, eph in zip(params.thetas, params.phis, params.ecd_phases):
        u = qcore.build_ecd(beta_mag * np.exp(1j * eph), n) @ qcore.build_rotation(th, ph, n) @ u
    return u


def manual_response(alpha, params, beta_mag, n):
    u = manual_probe(params, beta_mag, n)
    d = np.kron(np.eye(2), qcore.fock_basis(n).displacement(alpha, check=False))
    psi = qcore.build_rotation(params.final_theta, params.final_phi, n) @ u.conj().T @ d @ u[:, 0]
    return qcore.excited_probability(psi)


def test_probe_unitary_matches_gate_product():
    p = pr.CircuitParams.random(3, 0)
    cfg = pr.ProtocolConfig(3, 0.24, "ideal_gate", N)
    np.testing.assert_allclose(pr.build_probe_unitary(p, cfg), manual_probe(p, 0.24, N), atol=1e-12)


@pytest.mark.parametrize("evaluator", ["frame", "direct"])
def test_response_matches_dense_oracle(evaluator):
    p = pr.CircuitParams.random(3, 1)
    cfg = pr.ProtocolConfig(3, 0.24, "ideal_gate", N, evaluator=evaluator)
    al = np.array([0.0, 0.4 - 0.3j, 1.2j, -1.5 + 0.5j])
    got = pr.evaluate(al, p, cfg)
    ref = [manual_response(a, p, 0.24, N) for a in al]
    np.testing.assert_allclose(got, ref, atol=1e-10)


def test_frame_handles_large_alpha():
    # the frame evaluator never forms D(alpha), so far-out points stay exact
    p = pr.CircuitParams.random(2, 2)
    cfg = pr.ProtocolConfig(2, 0.24, "ideal_gate", 30)
    ref = [manual_response(a, p, 0.24, 200) for a in (6.0 + 2j, -7.5j)]
    np.testing.assert_allclose(pr.evaluate(np.array([6.0 + 2j, -7.5j]), p, cfg), ref, atol=1e-9)


@given(st.integers(1, 4), st.integers(0, 10_000))
def test_null_displacement_returns_ground(depth, seed):
    p = pr.CircuitParams.random(depth, seed)
    p = replace(p, final_theta=0.0)
    # the played-back inverse pulse is not an exact adjoint: dispersion keeps running
    for fid, tol in (("ideal_gate", 1e-12), ("pulse_level", 1e-6)):
        cfg = pr.ProtocolConfig(depth, 0.24, fid, 30)
        assert pr.run_protocol(0.0, p, cfg) == pytest.approx(0.0, abs=tol)


def test_probabilities_bounded():
    p = pr.CircuitParams.random(4, 3)
    cfg = pr.ProtocolConfig(4, 0.24, "ideal_gate", N)
    al = np.random.default_rng(0).normal(size=200) * 3 + 1j * np.random.default_rng(1).normal(size=200) * 3
    v = pr.evaluate(al, p, cfg)
    assert v.shape == (200,) and np.all((v >= -1e-12) & (v <= 1 + 1e-12))


def test_pulse_level_probe_is_unitary_and_near_ideal():
    p = pr.CircuitParams.random(2, 4)
    ideal = pr.ProtocolConfig(2, 0.24, "ideal_gate", N)
    pulse = pr.ProtocolConfig(2, 0.24, "pulse_level", N)
    u = pr.build_probe_unitary(p, pulse)
    np.testing.assert_allclose(u @ u.conj().T, np.eye(2 * N), atol=1e-10)
    al = np.array([0.3, 1 + 1j, -2j])
    assert np.max(np.abs(pr.evaluate(al, p, pulse) - pr.evaluate(al, p, ideal))) < 0.02


def _fd_check(p, cfg, al, w, magnitudes=False, h=1e-6):
    _, g = pr.evaluate(al, p, cfg, weights=w, magnitudes=magnitudes)
    v = p.to_vector(magnitudes) if (not magnitudes or p.ecd_magnitudes is not None) else None
    fd = np.zeros_like(v)
    for k in range(v.size):
        vp, vm = v.copy(), v.copy()
        vp[k] += h
        vm[k] -= h
        fp = np.dot(w, pr.evaluate(al, pr.CircuitParams.from_vector(vp, p.depth, magnitudes), cfg))
        fm = np.dot(w, pr.evaluate(al, pr.CircuitParams.from_vector(vm, p.depth, magnitudes), cfg))
        fd[k] = (fp - fm) / (2 * h)
    return g, fd


@pytest.mark.parametrize("fid,evaluator", [("ideal_gate", "frame"), ("ideal_gate", "direct"),
                                           ("pulse_level", "direct")])
def test_gradient_finite_difference(fid, evaluator):
    rng = np.random.default_rng(7)
    p = pr.CircuitParams.random(2, rng)
    cfg = pr.ProtocolConfig(2, 0.24, fid, 30, evaluator=evaluator)
    al = rng.normal(size=6) + 1j * rng.normal(size=6)
    w = rng.normal(size=6)
    g, fd = _fd_check(p, cfg, al, w)
    assert np.linalg.norm(g - fd) <= 1e-5 * np.linalg.norm(fd)


def test_gradient_with_magnitudes():
    rng = np.random.default_rng(8)
    p = pr.CircuitParams.random(2, rng)
    p.ecd_magnitudes = np.array([0.5, 1.1])
    cfg = pr.ProtocolConfig(2, 0.24, "ideal_gate", 40)
    al = rng.normal(size=5) + 1j * rng.normal(size=5)
    w = rng.normal(size=5)
    g, fd = _fd_check(p, cfg, al, w, magnitudes=True)
    assert np.linalg.norm(g - fd) <= 1e-5 * np.linalg.norm(fd)


def test_gradient_at_symmetric_point():
    p = pr.CircuitParams(np.zeros(1), np.zeros(1), np.zeros(1), 0.5, 0.0)
    cfg = pr.ProtocolConfig(1, 0.24, "ideal_gate", 30)
    al = np.array([0.5, -0.5j, 1.0])
    w = np.array([1.0, -1.0, 0.5])
    g, fd = _fd_check(p, cfg, al, w)
    np.testing.assert_allclose(g, fd, atol=1e-8)


def test_prepare_state_gradient():
    rng = np.random.default_rng(9)
    cfg = pr.ProtocolConfig(3, 0.24, "ideal_gate", 30)
    p = pr.CircuitParams.random(3, rng)
    target = rng.normal(size=60) + 1j * rng.normal(size=60)
    target /= np.linalg.norm(target)
    psi, fid, g = pr.prepare_state(p, cfg, target)
    np.testing.assert_allclose(psi, pr.build_probe_unitary(p, cfg)[:, 0], atol=1e-12)
    assert fid == pytest.approx(qcore.state_fidelity(target, psi))
    v = p.to_vector()
    h = 1e-6
    for k in range(v.size):
        vp, vm = v.copy(), v.copy()
        vp[k] += h
        vm[k] -= h
        fd = (pr.prepare_state(pr.CircuitParams.from_vector(vp, 3), cfg, target)[1]
              - pr.prepare_state(pr.CircuitParams.from_vector(vm, 3), cfg, target)[1]) / (2 * h)
        assert g[k] == pytest.approx(fd, abs=1e-8)


def test_final_states_consistent():
    p = pr.CircuitParams.random(2, 5)
    cfg = pr.ProtocolConfig(2, 0.24, "ideal_gate", N)
    al = np.array([0.2, 1j])
    st_ = pr.final_states(al, p, cfg)
    np.testing.assert_allclose(qcore.excited_probability(st_), pr.evaluate(al, p, cfg), atol=1e-12)


def test_depth_mismatch_rejected():
    with pytest.raises(ValueError):
        pr.evaluate(0.1, pr.CircuitParams.random(2, 0), pr.ProtocolConfig(3))
    with pytest.raises(ValueError):
        pr.ProtocolConfig(0)
    with pytest.raises(ValueError):
        pr.ProtocolConfig(1, fidelity="exact")


def test_params_round_trips():
    p = pr.CircuitParams.random(4, 11)
    q = pr.CircuitParams.from_vector(p.to_vector(), 4)
    assert q.hash() == p.hash()
    assert pr.CircuitParams.from_dict(p.to_dict()).hash() == p.hash()
    assert p.n_params == 14
    assert np.all((p.thetas >= 0) & (p.thetas <= np.pi))


def test_readout_error():
    assert pr.apply_readout_error(1.0) == pytest.approx(0.95)
    assert pr.apply_readout_error(0.0) == pytest.approx(0.04)
    x = np.linspace(0, 1, 7)
    np.testing.assert_allclose(pr.apply_readout_error(x, pr.ReadoutModel.perfect()), x)
    with pytest.raises(ValueError):
        pr.ReadoutModel(1.2, 0.9)


def test_sample_predictions():
    p = pr.CircuitParams.zeros(1)
    cfg = pr.ProtocolConfig(1)
    assert not pr.sample_predictions(np.zeros(3), p, cfg, 50, 0, p_obs=np.zeros(3)).any()
    assert pr.sample_predictions(np.zeros(3), p, cfg, 50, 0, p_obs=np.ones(3)).all()
    bits = pr.sample_predictions(np.zeros(1), p, cfg, 10 ** 6, 1, p_obs=np.array([0.5]))
    assert abs(bits.mean() - 0.5) < 3 * 0.5 / 1e3
    a = pr.sample_predictions(np.zeros(4), p, cfg, 8, 3, p_obs=np.full(4, 0.3))
    b = pr.sample_predictions(np.zeros(4), p, cfg, 8, 3, p_obs=np.full(4, 0.3))
    np.testing.assert_array_equal(a, b)
    with pytest.raises(ValueError):
        pr.sample_predictions(np.zeros(1), p, cfg, 0, 0)


def test_shot_accuracy():
    bits = np.array([[1, 1, 0, 1], [0, 0, 0, 1]])
    assert pr.shot_accuracy(bits, [1, 0]) == pytest.approx(6 / 8)


def test_landscape():
    p = pr.CircuitParams.zeros(1)
    cfg = pr.ProtocolConfig(1)
    land = pr.landscape_sweep(p, cfg, r_max=3.0, n_radial=4, n_azimuthal=5, shots="exact")
    assert land.p_e.shape == (4, 5)
    np.testing.assert_allclose(land.p_e[0], 0.0, atol=1e-14)
    rows = list(land.rows())
    assert len(rows) == 20 and rows[0][:2] == (0.0, 0.0)
    q = pr.CircuitParams.random(2, 1)
    c2 = pr.ProtocolConfig(2)
    a = pr.landscape_sweep(q, c2, 5.0, 6, 7, shots=64, seed=3)
    b = pr.landscape_sweep(q, c2, 5.0, 6, 7, shots=64, seed=3)
    np.testing.assert_array_equal(a.p_e, b.p_e)
    assert np.all(a.p_e * 64 == np.round(a.p_e * 64))
