"""Loss, accuracy, adjoint gradients and Adam training of circuit parameters.

Rotation angles are optimised through their amplitude A = theta / pi, which
is clamped to [0, 1] after every step; phases are left unconstrained.
"""
from dataclasses import dataclass, field
import json
import warnings

import numpy as np
from scipy.optimize import minimize

from . import protocol, tasks
from .exceptions import ConvergenceWarning
from .optim import Adam


@dataclass(frozen=True)
class TrainConfig:
    lr: float = 5e-3
    epochs: int = 1000
    restarts: int = 10
    amplitude_clamp: tuple = (0.0, 1.0)
    seed: int = 0
    size: int = 512
    eval_every: int = 10

    def __post_init__(self):
        if not self.lr > 0:
            raise ValueError("lr must be positive")
        if self.epochs < 1 or self.restarts < 1:
            raise ValueError("epochs and restarts must be >= 1")

    def to_dict(self):
        return {"lr": self.lr, "epochs": self.epochs, "restarts": self.restarts,
                "amplitude_clamp": list(self.amplitude_clamp), "seed": self.seed,
                "size": self.size, "eval_every": self.eval_every}


@dataclass
class TrainReport:
    loss_history: list
    accuracy_history: list
    best_params: protocol.CircuitParams
    best_accuracy: float
    test_accuracy: float = None
    test_history: list = field(default_factory=list)     # (epoch, accuracy) pairs
    restart_accuracies: list = field(default_factory=list)
    best_restart: int = 0

    def to_dict(self):
        return {
            "schema": "qcds.train_report/1",
            "loss_history": [float(x) for x in self.loss_history],
            "accuracy_history": [float(x) for x in self.accuracy_history],
            "test_history": [[int(e), float(a)] for e, a in self.test_history],
            "best_params": self.best_params.to_dict(),
            "best_accuracy": float(self.best_accuracy),
            "test_accuracy": None if self.test_accuracy is None else float(self.test_accuracy),
            "restart_accuracies": [float(x) for x in self.restart_accuracies],
            "best_restart": int(self.best_restart),
        }

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True, indent=1)

    def converged(self, window=100, tol=0.005):
        h = self.accuracy_history
        if len(h) <= window:
            return False
        return abs(h[-1] - h[-1 - window]) < tol


# ------------------------------------------------------------ objectives

def class_weights(labels):
    """+1/|A| for class A, -1/|B| for class B, so sum w p = loss."""
    labels = np.asarray(labels)
    na, nb = np.sum(labels == 0), np.sum(labels == 1)
    if na == 0 or nb == 0:
        raise ValueError("both classes must be present")
    return np.where(labels == 0, 1.0 / na, -1.0 / nb)


def loss(params, cfg, data):
    """Mean p_e over class A minus mean p_e over class B."""
    p = np.atleast_1d(protocol.evaluate(data.alphas, params, cfg))
    return float(np.dot(class_weights(data.labels), p))


def classification_accuracy(p_a_mean, p_b_mean):
    """Probability of a correct single-shot call, 1/2 + (p_B - p_A)/2."""
    return 0.5 + 0.5 * (p_b_mean - p_a_mean)


def accuracy(params, cfg, data):
    return 0.5 - 0.5 * loss(params, cfg, data)


def gradients(params, cfg, data, magnitudes=False):
    """Gradient of the loss over ``params.to_vector(magnitudes)``."""
    _, g = protocol.evaluate(data.alphas, params, cfg, class_weights(data.labels), magnitudes)
    return g


def loss_and_grad(params, cfg, data, magnitudes=False):
    w = class_weights(data.labels)
    p, g = protocol.evaluate(data.alphas, params, cfg, w, magnitudes)
    return float(np.dot(w, np.atleast_1d(p))), g


# ------------------------------------------------------------- training

def _amp_slots(depth):
    # entries of the parameter vector that hold rotation amplitudes
    return np.r_[np.arange(depth), 3 * depth]


def _to_u(params, magnitudes):
    u = params.to_vector(magnitudes).copy()
    u[_amp_slots(params.depth)] /= np.pi
    return u


def _from_u(u, depth, magnitudes):
    v = np.array(u, dtype=float)
    v[_amp_slots(depth)] *= np.pi
    return protocol.CircuitParams.from_vector(v, depth, magnitudes)


def _descend(params0, train_set, cfg_proto, cfg_train, test_set=None, mask=None,
             magnitudes=False):
    depth = cfg_proto.depth
    lo, hi = cfg_train.amplitude_clamp
    amps = _amp_slots(depth)
    u = _to_u(params0, magnitudes)
    u[amps] = np.clip(u[amps], lo, hi)
    mask = np.ones_like(u) if mask is None else np.asarray(mask, dtype=float)
    w = class_weights(train_set.labels)
    opt = Adam(cfg_train.lr)
    losses, accs, tests = [], [], []
    for epoch in range(cfg_train.epochs):
        params = _from_u(u, depth, magnitudes)
        p, g = protocol.evaluate(train_set.alphas, params, cfg_proto, w, magnitudes)
        ls = float(np.dot(w, p))
        losses.append(ls)
        accs.append(0.5 - 0.5 * ls)
        if test_set is not None and epoch % cfg_train.eval_every == 0:
            tests.append((epoch, accuracy(params, cfg_proto, test_set)))
        g = g.copy()
        g[amps] *= np.pi
        u = opt.step(u, g * mask)
        u[amps] = np.clip(u[amps], lo, hi)
    params = _from_u(u, depth, magnitudes)
    final = accuracy(params, cfg_proto, train_set)
    losses.append(1.0 - 2.0 * final)
    accs.append(final)
    if test_set is not None:
        tests.append((cfg_train.epochs, accuracy(params, cfg_proto, test_set)))
    return params, losses, accs, tests


def train_on(train_set, cfg_train, cfg_proto, test_set=None, init=None, mask=None,
             magnitudes=False):
    """Best-of-restarts Adam training on a given dataset.

    ``init(rng)`` returns starting CircuitParams (default: uniform random);
    ``mask`` zeroes the update of selected parameter-vector entries.
    """
    best = None
    restart_acc = []
    for k in range(cfg_train.restarts):
        rng = np.random.default_rng([cfg_train.seed, k])
        p0 = init(rng) if init is not None else protocol.CircuitParams.random(cfg_proto.depth, rng)
        run = _descend(p0, train_set, cfg_proto, cfg_train, test_set, mask, magnitudes)
        restart_acc.append(run[2][-1])
        if best is None or run[2][-1] > best[1][2][-1]:
            best = (k, run)
    k, (params, losses, accs, tests) = best
    test_acc = tests[-1][1] if tests else None
    return TrainReport(losses, accs, params, accs[-1], test_acc, tests, restart_acc, k)


def train(cfg_train, cfg_proto, spec):
    """Generate train/test sets for ``spec`` and train with restarts."""
    tr, te = tasks.train_test(spec, cfg_train.size, cfg_train.seed)
    return train_on(tr, cfg_train, cfg_proto, te)


# ------------------------------------------------------ state preparation

def state_infidelity(params, cfg, target):
    _, f, _ = protocol.prepare_state(params, cfg, target, magnitudes=params.ecd_magnitudes is not None)
    return 1.0 - f


def train_state_prep(target, depth, cfg_proto, restarts=8, epochs=300, lr=2e-2, seed=0,
                     tol=0.05):
    """Maximise |<target|U|0,g>|^2 with trainable ECD magnitudes.

    Each restart runs Adam from a random start and is then polished with
    L-BFGS on the same analytic gradient.  Returns CircuitParams with
    ``ecd_magnitudes`` set and zero final rotation.
    """
    cfg = protocol.ProtocolConfig(depth, cfg_proto.beta_magnitude, cfg_proto.fidelity,
                                  cfg_proto.n_fock, cfg_proto.physical)
    target = np.asarray(target, dtype=complex).ravel()
    nrm = np.linalg.norm(target)
    if abs(nrm - 1) > 1e-6:
        raise ValueError("target state must be normalised")
    n_vec = 4 * depth + 2

    def fg(v):
        p = protocol.CircuitParams.from_vector(v, depth, True)
        _, f, g = protocol.prepare_state(p, cfg, target, magnitudes=True)
        return 1.0 - f, -g

    best_v, best_inf = None, np.inf
    for k in range(restarts):
        rng = np.random.default_rng([seed, k])
        v = np.zeros(n_vec)
        v[:depth] = np.pi * rng.uniform(0, 1, depth)
        v[depth:3 * depth] = rng.uniform(0, 2 * np.pi, 2 * depth)
        v[3 * depth + 2:] = rng.uniform(0, 1, depth)
        opt = Adam(lr)
        for _ in range(epochs):
            inf, g = fg(v)
            v = opt.step(v, g)
        res = minimize(fg, v, jac=True, method="L-BFGS-B",
                       options={"maxiter": 5000, "ftol": 1e-15, "gtol": 1e-12})
        v, inf = res.x, float(res.fun)
        if inf < best_inf:
            best_v, best_inf = v, inf
        if best_inf < 1e-10:
            break
    best_v = best_v.copy()
    best_v[3 * depth:3 * depth + 2] = 0.0
    params = protocol.CircuitParams.from_vector(best_v, depth, True)
    if best_inf > tol:
        warnings.warn(f"state preparation infidelity {best_inf:.3g} exceeds {tol}",
                      ConvergenceWarning, stacklevel=2)
    return params
