import warnings

import numpy as np
import pytest

from qcds import protocol as pr
from qcds import qcore, tasks, training
from qcds.exceptions import ConvergenceWarning
from qcds.optim import Adam, AdamTree
from qcds.tasks import TaskSpec
from qcds.training import TrainConfig


def small_set(seed=0, size=16, W=1.0):
    return tasks.generate(TaskSpec("spiral", W=W, r_max=3.0), size, seed)


def test_classification_accuracy_cases():
    assert training.classification_accuracy(0.0, 1.0) == 1.0
    assert training.classification_accuracy(0.3, 0.3) == 0.5


def test_loss_is_difference_of_class_means():
    data = small_set()
    p = pr.CircuitParams.random(2, 3)
    cfg = pr.ProtocolConfig(2)
    pe = np.array([pr.run_protocol(a, p, cfg) for a in data.alphas])
    ref = pe[data.labels == 0].mean() - pe[data.labels == 1].mean()
    assert training.loss(p, cfg, data) == pytest.approx(ref, abs=1e-12)
    assert training.accuracy(p, cfg, data) == pytest.approx(
        training.classification_accuracy(pe[data.labels == 0].mean(), pe[data.labels == 1].mean()))


def test_loss_extremes():
    # identical responses for both classes: loss 0
    p = pr.CircuitParams(np.zeros(1), np.zeros(1), np.zeros(1), np.pi / 3, 0.0)
    data = tasks.generate(TaskSpec("two_point", delta=0j + 1e-300), 8, 0)
    assert training.loss(p, pr.ProtocolConfig(1), data) == pytest.approx(0.0, abs=1e-12)
    assert training.class_weights([0, 0, 1, 1, 1]).tolist() == [0.5, 0.5, -1 / 3, -1 / 3, -1 / 3]
    with pytest.raises(ValueError):
        training.class_weights([0, 0])


def test_gradient_matches_finite_differences():
    data = small_set(1)
    cfg = pr.ProtocolConfig(5)
    p = pr.CircuitParams.random(5, 2)
    g = training.gradients(p, cfg, data)
    v, h = p.to_vector(), 1e-6
    fd = np.zeros_like(v)
    for k in range(v.size):
        vp, vm = v.copy(), v.copy()
        vp[k] += h
        vm[k] -= h
        fd[k] = (training.loss(pr.CircuitParams.from_vector(vp, 5), cfg, data)
                 - training.loss(pr.CircuitParams.from_vector(vm, 5), cfg, data)) / (2 * h)
    assert g.size == 17
    assert np.linalg.norm(g - fd) <= 1e-5 * np.linalg.norm(fd)


def test_adam_minimises_quadratic():
    opt = Adam(0.05)
    x = np.array([3.0, -2.0])
    for _ in range(2000):
        x = opt.step(x, 2 * x)
    np.testing.assert_allclose(x, 0, atol=1e-3)
    tree = AdamTree(0.05)
    d = {"a": np.array([1.0]), "b": np.array([-1.0, 2.0])}
    for _ in range(2000):
        d = tree.step(d, {k: 2 * v for k, v in d.items()})
    assert max(np.abs(v).max() for v in d.values()) < 1e-3


def test_two_point_task_learns_quickly():
    spec = TaskSpec("two_point", delta=6.5)
    rep = training.train(TrainConfig(epochs=200, restarts=3, size=64), pr.ProtocolConfig(1), spec)
    assert rep.best_accuracy >= 0.99
    assert len(rep.accuracy_history) == 201 and len(rep.loss_history) == 201
    np.testing.assert_allclose(rep.accuracy_history, 0.5 - 0.5 * np.array(rep.loss_history))


def test_amplitudes_stay_clamped():
    data = small_set(2, 32, W=2.0)
    cfg = TrainConfig(lr=0.3, epochs=30, restarts=2)
    rep = training.train_on(data, cfg, pr.ProtocolConfig(2))
    th = np.r_[rep.best_params.thetas, rep.best_params.final_theta]
    assert np.all((th >= 0) & (th <= np.pi + 1e-12))


def test_restart_seeding_reproducible():
    data = small_set(3, 32)
    cfg = TrainConfig(epochs=20, restarts=3, seed=4, eval_every=5)
    a = training.train_on(data, cfg, pr.ProtocolConfig(2), data)
    b = training.train_on(data, cfg, pr.ProtocolConfig(2), data)
    assert a.to_json() == b.to_json()
    assert a.best_accuracy == max(a.restart_accuracies)
    assert [e for e, _ in a.test_history] == [0, 5, 10, 15, 20]


def test_mask_freezes_entries():
    data = small_set(4, 16)
    p0 = pr.CircuitParams.random(2, 0)
    mask = np.ones(8)
    mask[[0, 3]] = 0
    rep = training.train_on(data, TrainConfig(epochs=10, restarts=1), pr.ProtocolConfig(2),
                            init=lambda rng: p0, mask=mask)
    assert rep.best_params.thetas[0] == pytest.approx(p0.thetas[0])
    assert rep.best_params.phis[1] == pytest.approx(p0.phis[1])


def test_report_serialisation_and_convergence():
    rep = training.TrainReport([0.0] * 201, [0.8] * 201, pr.CircuitParams.zeros(1), 0.8)
    assert rep.converged()
    rep.accuracy_history[-1] = 0.9
    assert not rep.converged()
    assert '"schema": "qcds.train_report/1"' in rep.to_json()


def test_config_validation():
    with pytest.raises(ValueError):
        TrainConfig(lr=0)
    with pytest.raises(ValueError):
        TrainConfig(epochs=0)


def test_state_prep_trivial_target():
    cfg = pr.ProtocolConfig(1)
    p = training.train_state_prep(qcore.ground_state(50), 1, cfg, restarts=2, epochs=50)
    assert training.state_infidelity(p, pr.ProtocolConfig(1), qcore.ground_state(50)) <= 1e-6
    assert p.final_theta == 0 and p.ecd_magnitudes is not None


def test_state_prep_warns_when_unreachable():
    target = np.zeros(60, complex)
    target[1] = 1.0           # |1, g> is out of reach for one layer
    with pytest.warns(ConvergenceWarning):
        training.train_state_prep(target, 1, pr.ProtocolConfig(1, n_fock=30), restarts=1,
                                  epochs=20, tol=1e-9)
    with pytest.raises(ValueError):
        training.train_state_prep(2 * target, 1, pr.ProtocolConfig(1, n_fock=30))


@pytest.mark.slow
def test_compass_state_prep():
    from qcds.baselines.compass import compass_target
    cfg = pr.ProtocolConfig(10)
    target = compass_target(1.0, 50)
    with warnings.catch_warnings():
        warnings.simplefilter("error", ConvergenceWarning)
        p = training.train_state_prep(target, 10, cfg, restarts=4)
    assert training.state_infidelity(p, pr.ProtocolConfig(10), target) <= 0.05
