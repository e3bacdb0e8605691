"""The sensing protocol R(theta', phi') U^dag D(alpha) U |0, g>.

U is a product of N layers, each a qubit rotation followed by an echoed
conditional displacement of fixed magnitude.  Two evaluators are provided:

``frame``
    Uses D(-alpha) ECD(beta) D(alpha) = ECD(beta) with the branch phases
    exp(+/- i Im(alpha^* beta)).  The large displacement then drops out of
    the excitation probability, so the result does not depend on whether
    D(alpha)|psi> fits in the Fock cutoff.  Ideal gates only.
``direct``
    Literal truncated-space linear algebra with a dense D(alpha) per point.
    Used for pulse-level fidelity and as an oracle for ``frame``.

Both run through one gate-sequence engine that also returns the gradient of
a weighted sum of probabilities by a reverse (adjoint) sweep.
"""
from dataclasses import dataclass, field
import hashlib
import json

import numpy as np

from . import pulse
from .qcore import SX, SY, SZ, fock_basis, ground_state, qubit_rotation

FIDELITIES = ("ideal_gate", "pulse_level")


@dataclass
class CircuitParams:
    thetas: np.ndarray
    phis: np.ndarray
    ecd_phases: np.ndarray
    final_theta: float = 0.0
    final_phi: float = 0.0
    ecd_magnitudes: np.ndarray = None

    def __post_init__(self):
        self.thetas = np.asarray(self.thetas, dtype=float).ravel()
        self.phis = np.asarray(self.phis, dtype=float).ravel()
        self.ecd_phases = np.asarray(self.ecd_phases, dtype=float).ravel()
        self.final_theta = float(self.final_theta)
        self.final_phi = float(self.final_phi)
        if self.ecd_magnitudes is not None:
            self.ecd_magnitudes = np.asarray(self.ecd_magnitudes, dtype=float).ravel()
        n = len(self.thetas)
        if len(self.phis) != n or len(self.ecd_phases) != n:
            raise ValueError("thetas, phis and ecd_phases must have equal length")
        if self.ecd_magnitudes is not None and len(self.ecd_magnitudes) != n:
            raise ValueError("ecd_magnitudes length mismatch")

    @property
    def depth(self):
        return len(self.thetas)

    @property
    def n_params(self):
        return 3 * self.depth + 2

    @classmethod
    def random(cls, depth, rng=None):
        """Amplitudes U[0, 1] (theta = A pi) and phases U[0, 2 pi)."""
        rng = np.random.default_rng(rng)
        amps = rng.uniform(0, 1, depth + 1)
        ph = rng.uniform(0, 2 * np.pi, 2 * depth + 1)
        return cls(np.pi * amps[:depth], ph[:depth], ph[depth:2 * depth],
                   np.pi * amps[depth], ph[2 * depth])

    @classmethod
    def zeros(cls, depth):
        z = np.zeros(depth)
        return cls(z, z, z, 0.0, 0.0)

    def to_vector(self, magnitudes=False):
        parts = [self.thetas, self.phis, self.ecd_phases, [self.final_theta, self.final_phi]]
        if magnitudes:
            parts.append(self.ecd_magnitudes)
        return np.concatenate(parts)

    @classmethod
    def from_vector(cls, v, depth, magnitudes=False):
        v = np.asarray(v, dtype=float)
        n = depth
        mags = v[3 * n + 2:4 * n + 2] if magnitudes else None
        return cls(v[:n], v[n:2 * n], v[2 * n:3 * n], v[3 * n], v[3 * n + 1], mags)

    def to_dict(self):
        d = {
            "thetas": self.thetas.tolist(),
            "phis": self.phis.tolist(),
            "ecd_phases": self.ecd_phases.tolist(),
            "final_theta": self.final_theta,
            "final_phi": self.final_phi,
        }
        if self.ecd_magnitudes is not None:
            d["ecd_magnitudes"] = self.ecd_magnitudes.tolist()
        return d

    @classmethod
    def from_dict(cls, d):
        return cls(d["thetas"], d["phis"], d["ecd_phases"], d["final_theta"], d["final_phi"],
                   d.get("ecd_magnitudes"))

    def hash(self):
        blob = json.dumps(self.to_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]

    def betas(self, magnitude):
        mags = self.ecd_magnitudes if self.ecd_magnitudes is not None else np.full(self.depth, magnitude)
        return mags * np.exp(1j * self.ecd_phases)


@dataclass(frozen=True)
class ProtocolConfig:
    depth: int = 1
    beta_magnitude: float = 0.24
    fidelity: str = "ideal_gate"
    n_fock: int = 50
    physical: pulse.PhysicalParams = field(default_factory=pulse.PhysicalParams)
    sensing: str = "ideal"          # "ideal" D(alpha) or "pulse" semiclassical
    evaluator: str = "frame"        # "frame" or "direct" (ideal gates only)

    def __post_init__(self):
        if self.depth < 1:
            raise ValueError("depth must be >= 1")
        if self.fidelity not in FIDELITIES:
            raise ValueError(f"fidelity must be one of {FIDELITIES}")
        if self.sensing not in ("ideal", "pulse"):
            raise ValueError("sensing must be 'ideal' or 'pulse'")
        if self.evaluator not in ("frame", "direct"):
            raise ValueError("evaluator must be 'frame' or 'direct'")


@dataclass(frozen=True)
class ReadoutModel:
    p_read_e_given_e: float = 0.95
    p_read_g_given_g: float = 0.96

    def __post_init__(self):
        for p in (self.p_read_e_given_e, self.p_read_g_given_g):
            if not 0 <= p <= 1:
                raise ValueError("readout fidelities must lie in [0, 1]")

    @classmethod
    def perfect(cls):
        return cls(1.0, 1.0)


def apply_readout_error(p_e, model=None):
    """p_obs = p_e P(e|e) + (1 - p_e)(1 - P(g|g))."""
    model = model or ReadoutModel()
    p_e = np.asarray(p_e, dtype=float)
    return p_e * model.p_read_e_given_e + (1 - p_e) * (1 - model.p_read_g_given_g)


# ------------------------------------------------------------------ gates

def _rotation_derivs(theta, phi):
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    ax = np.cos(phi) * SX + np.sin(phi) * SY
    d_theta = -0.5 * s * np.eye(2) + 0.5j * c * ax
    d_phi = 1j * s * (-np.sin(phi) * SX + np.cos(phi) * SY)
    return d_theta, d_phi


class _Qubit:
    """Qubit operator, either one 2x2 matrix or per-Fock-level blocks (n, 2, 2)."""

    def __init__(self, m, derivs=()):
        self.m = m
        self.derivs = list(derivs)

    @staticmethod
    def _mul(m, x):
        if m.ndim == 2:
            return np.einsum("ij,...jn->...in", m, x)
        return np.einsum("nij,...jn->...in", m, x)

    def apply(self, x):
        return self._mul(self.m, x)

    def apply_adj(self, x):
        return self._mul(np.conj(np.swapaxes(self.m, -1, -2)), x)

    def dapply(self, d, x):
        return self._mul(d, x)

    def adjoint(self):
        mh = np.conj(np.swapaxes(self.m, -1, -2))
        return _Qubit(mh, [(i, np.conj(np.swapaxes(d, -1, -2))) for i, d in self.derivs])


class _Anti:
    """A|g><e| + B|e><g| with optional per-point factors c (on A) and c^* (on B)."""

    def __init__(self, a, b, c=None, derivs=()):
        self.a, self.b, self.c = a, b, c
        self.derivs = list(derivs)   # (index, dA, dB, dc)

    def _out(self, a, b, c, cb, x):
        g = x[..., 1, :] @ a.T
        e = x[..., 0, :] @ b.T
        if c is not None:
            g = g * c[:, None]
            e = e * cb[:, None]
        return np.stack([g, e], axis=-2)

    def apply(self, x):
        c = self.c
        return self._out(self.a, self.b, c, None if c is None else np.conj(c), x)

    def apply_adj(self, x):
        # adjoint is B^dag|g><e| + A^dag|e><g| with the conjugate factors
        g = x[..., 1, :] @ np.conj(self.b)
        e = x[..., 0, :] @ np.conj(self.a)
        if self.c is not None:
            g = g * self.c[:, None]
            e = e * np.conj(self.c)[:, None]
        return np.stack([g, e], axis=-2)

    def dapply(self, d, x):
        da, db, dc = d
        out = self._out(da, db, self.c, None if self.c is None else np.conj(self.c), x)
        if dc is not None:
            out = out + self._out(self.a, self.b, dc, np.conj(dc), x)
        return out


def _displacement_derivs(fb, beta):
    """D(beta/2) and its derivatives with respect to arg(beta) and |beta|."""
    a = fb.displacement(beta / 2, check=False)
    num = fb.number
    d_phase = 1j * (num[:, None] * a - a * num[None, :])
    ph = np.exp(1j * np.angle(beta))
    gen = ph * fb.a.conj().T - np.conj(ph) * fb.a
    d_mag = 0.5 * gen @ a
    return a, d_phase, d_mag


def _ecd_gate(fb, beta, i_phase, i_mag, alphas=None):
    """Ideal ECD(beta); with ``alphas`` it is the displaced-frame version."""
    a, dpa, dma = _displacement_derivs(fb, beta)
    b = a.conj().T
    c = dc_phase = dc_mag = None
    if alphas is not None:
        ac = np.conj(alphas)
        c = np.exp(1j * np.imag(ac * beta))
        dc_phase = 1j * np.real(ac * beta) * c
        dc_mag = 1j * np.imag(ac * np.exp(1j * np.angle(beta))) * c
    derivs = [(i_phase, dpa, dpa.conj().T, dc_phase)]
    if i_mag is not None:
        derivs.append((i_mag, dma, dma.conj().T, dc_mag))
    return _Anti(a, b, c, derivs)


def _pulse_ecd_gate(fb, phase, i_phase, params, pi_phase=0.0):
    a, b = pulse.ecd_pulse_blocks(phase, params, fb.n, pi_phase=pi_phase)
    num = fb.number
    comm = lambda m: 1j * (num[:, None] * m - m * num[None, :])
    return _Anti(a, b, None, [(i_phase, comm(a), comm(b), None)])


def _pulse_rotation_gate(theta, phi, params, n, i_theta, i_phi, reverse=False):
    m = pulse.trotterized_rotation_blocks(theta, phi, params, n, reverse=reverse)
    dth = pulse.trotterized_rotation_derivative(theta, phi, params, n, reverse=reverse)
    dph = -0.5j * (SZ @ m - m @ SZ)
    derivs = []
    if i_theta is not None:
        derivs.append((i_theta, dth))
    if i_phi is not None:
        derivs.append((i_phi, dph))
    return _Qubit(m, derivs)


def _ideal_rotation_gate(theta, phi, i_theta, i_phi):
    dth, dph = _rotation_derivs(theta, phi)
    return _Qubit(qubit_rotation(theta, phi), [(i_theta, dth), (i_phi, dph)])


def _layer_gates(params, cfg, fb, magnitudes):
    """Gates of U in time order, with parameter indices for the gradient."""
    n = params.depth
    betas = params.betas(cfg.beta_magnitude)
    gates = []
    for i in range(n):
        i_mag = 3 * n + 2 + i if magnitudes else None
        if cfg.fidelity == "ideal_gate":
            gates.append(_ideal_rotation_gate(params.thetas[i], params.phis[i], i, n + i))
            gates.append(_ecd_gate(fb, betas[i], 2 * n + i, i_mag))
        else:
            gates.append(_pulse_rotation_gate(params.thetas[i], params.phis[i], cfg.physical,
                                              fb.n, i, n + i))
            gates.append(_pulse_ecd_gate(fb, params.ecd_phases[i], 2 * n + i, cfg.physical))
    return gates


def _inverse_gates(params, cfg, fb, magnitudes, alphas):
    """Gates realising U^dag after sensing, in time order."""
    n = params.depth
    betas = params.betas(cfg.beta_magnitude)
    gates = []
    for i in reversed(range(n)):
        i_mag = 3 * n + 2 + i if magnitudes else None
        if cfg.fidelity == "ideal_gate":
            gates.append(_ecd_gate(fb, betas[i], 2 * n + i, i_mag, alphas))
            gates.append(_ideal_rotation_gate(params.thetas[i], params.phis[i], i, n + i).adjoint())
        else:
            # the echoed ECD is an involution, so its own pulse undoes it;
            # rotations are replayed backwards with the phase shifted by pi
            gates.append(_pulse_ecd_gate(fb, params.ecd_phases[i], 2 * n + i, cfg.physical,
                                         pi_phase=np.pi))
            gates.append(_pulse_rotation_gate(params.thetas[i], params.phis[i] + np.pi,
                                              cfg.physical, fb.n, i, n + i, reverse=True))
    return gates


def _final_gate(params, cfg, n_fock):
    n = params.depth
    if cfg.fidelity == "ideal_gate":
        return _ideal_rotation_gate(params.final_theta, params.final_phi, 3 * n, 3 * n + 1)
    return _pulse_rotation_gate(params.final_theta, params.final_phi, cfg.physical, n_fock,
                                3 * n, 3 * n + 1)


class _Sensing:
    """Block-diagonal sensing step, per point: blocks c_j D(d_j) exp(-i s_j tau n)."""

    def __init__(self, alphas, cfg, fb, frame):
        self.fb = fb
        alphas = np.asarray(alphas, dtype=complex)
        if cfg.sensing == "ideal" and cfg.fidelity == "ideal_gate":
            disp_g = disp_e = (np.zeros_like(alphas) if frame else alphas)
            self.c = (np.ones_like(alphas), np.ones_like(alphas))
            self.tau = 0.0
        else:
            phys = cfg.physical
            ag, ae, pg, pe = pulse.sensing_frames(alphas, phys)
            self.tau = 0.5 * phys.chi * phys.sensing_duration
            if frame:
                # peel D(alpha) off on the left: D(-alpha) D(a) = e^{...} D(a - alpha)
                gg = np.exp(-1j * pg + 0.5 * (-alphas * np.conj(ag) + np.conj(alphas) * ag))
                ge = np.exp(-1j * pe + 0.5 * (-alphas * np.conj(ae) + np.conj(alphas) * ae))
                disp_g, disp_e = ag - alphas, ae - alphas
            else:
                gg, ge = np.exp(-1j * pg), np.exp(-1j * pe)
                disp_g, disp_e = ag, ae
            self.c = (gg, ge)
        self.disp = (disp_g, disp_e)
        if not frame:
            fb.check_truncation(alphas)

    def apply(self, x):
        """x is one state (2, n); returns the batch (B, 2, n)."""
        fb = self.fb
        ph = np.exp(-1j * self.tau * fb.number)
        g = fb.displace(self.disp[0], x[0] * ph, check=False) * self.c[0][:, None]
        e = fb.displace(self.disp[1], x[1] * np.conj(ph), check=False) * self.c[1][:, None]
        return np.stack([g, e], axis=1)

    def apply_adj_sum(self, lam):
        """Sum over the batch of S_b^dag lam_b."""
        fb = self.fb
        ph = np.exp(-1j * self.tau * fb.number)
        g = fb.displace(-self.disp[0], lam[:, 0] * np.conj(self.c[0])[:, None], check=False)
        e = fb.displace(-self.disp[1], lam[:, 1] * np.conj(self.c[1])[:, None], check=False)
        return np.stack([g.sum(0) * np.conj(ph), e.sum(0) * ph])


def _contrib(gate, lam, x, grad):
    for item in gate.derivs:
        idx, d = item[0], (item[1] if len(item) == 2 else item[1:])
        dx = gate.dapply(d, x)
        grad[idx] += 2 * np.real(np.vdot(lam, dx))


def evaluate(alphas, params, cfg, weights=None, magnitudes=False):
    """Excitation probabilities, and optionally the gradient of sum_b w_b p_b.

    Returns ``p`` (shape like alphas) if ``weights`` is None, else
    ``(p, grad)`` with grad over ``params.to_vector(magnitudes)``.
    """
    if params.depth != cfg.depth:
        raise ValueError(f"params have depth {params.depth}, config expects {cfg.depth}")
    alphas_in = np.asarray(alphas, dtype=complex)
    alphas = np.atleast_1d(alphas_in).ravel()
    fb = fock_basis(cfg.n_fock)
    frame = cfg.fidelity == "ideal_gate" and cfg.evaluator == "frame"
    if magnitudes and params.ecd_magnitudes is None:
        params = CircuitParams(params.thetas, params.phis, params.ecd_phases, params.final_theta,
                               params.final_phi, np.full(params.depth, cfg.beta_magnitude))

    pre = _layer_gates(params, cfg, fb, magnitudes)
    post = _inverse_gates(params, cfg, fb, magnitudes, alphas if frame else None)
    post.append(_final_gate(params, cfg, fb.n))
    sens = _Sensing(alphas, cfg, fb, frame)

    x = ground_state(fb.n).reshape(2, fb.n)
    pre_states = []
    for g in pre:
        pre_states.append(x)
        x = g.apply(x)
    y = sens.apply(x)
    post_states = []
    for g in post:
        post_states.append(y)
        y = g.apply(y)
    p = np.sum(np.abs(y[:, 1]) ** 2, axis=-1)
    p_out = p.reshape(alphas_in.shape) if alphas_in.ndim else float(p[0])
    if weights is None:
        return p_out

    w = np.broadcast_to(np.asarray(weights, dtype=float), p.shape)
    grad = np.zeros(params.to_vector(magnitudes).size)
    lam = np.zeros_like(y)
    lam[:, 1] = w[:, None] * y[:, 1]
    for g, xs in zip(reversed(post), reversed(post_states)):
        _contrib(g, lam, xs, grad)
        lam = g.apply_adj(lam)
    lam = sens.apply_adj_sum(lam)
    for g, xs in zip(reversed(pre), reversed(pre_states)):
        _contrib(g, lam, xs, grad)
        lam = g.apply_adj(lam)
    return p_out, grad


# ------------------------------------------------------------ public API

def build_probe_unitary(params, cfg):
    """Dense U (time order: rotation then ECD in every layer)."""
    fb = fock_basis(cfg.n_fock)
    dim = 2 * fb.n
    u = np.eye(dim, dtype=complex).reshape(dim, 2, fb.n)
    for g in _layer_gates(params, cfg, fb, False):
        u = g.apply(u)
    return u.reshape(dim, dim).T


def prepare_state(params, cfg, target=None, magnitudes=False):
    """U|0, g> as a flat vector; with ``target`` also (fidelity, gradient).

    The gradient of |<target|U|0,g>|^2 is over ``params.to_vector(magnitudes)``;
    the final-rotation entries are always zero.
    """
    fb = fock_basis(cfg.n_fock)
    if magnitudes and params.ecd_magnitudes is None:
        params = CircuitParams(params.thetas, params.phis, params.ecd_phases, params.final_theta,
                               params.final_phi, np.full(params.depth, cfg.beta_magnitude))
    gates = _layer_gates(params, cfg, fb, magnitudes)
    x = ground_state(fb.n).reshape(2, fb.n)
    states = []
    for g in gates:
        states.append(x)
        x = g.apply(x)
    psi = x.ravel()
    if target is None:
        return psi
    t = np.asarray(target, dtype=complex).reshape(2, fb.n)
    ov = np.vdot(t, x)
    grad = np.zeros(params.to_vector(magnitudes).size)
    lam = t * ov
    for g, xs in zip(reversed(gates), reversed(states)):
        _contrib(g, lam, xs, grad)
        lam = g.apply_adj(lam)
    return psi, float(abs(ov) ** 2), grad


def run_protocol(alpha, params, cfg):
    """Excitation probability of R' U^dag D(alpha) U |0, g> (scalar or array)."""
    return evaluate(alpha, params, cfg)


def final_states(alphas, params, cfg):
    """Final lab-frame states for a batch, using the direct evaluator."""
    fb = fock_basis(cfg.n_fock)
    alphas = np.atleast_1d(np.asarray(alphas, dtype=complex))
    dcfg = ProtocolConfig(cfg.depth, cfg.beta_magnitude, cfg.fidelity, cfg.n_fock,
                          cfg.physical, cfg.sensing, "direct")
    x = ground_state(fb.n).reshape(2, fb.n)
    for g in _layer_gates(params, dcfg, fb, False):
        x = g.apply(x)
    y = _Sensing(alphas, dcfg, fb, False).apply(x)
    for g in _inverse_gates(params, dcfg, fb, False, None) + [_final_gate(params, dcfg, fb.n)]:
        y = g.apply(y)
    return y.reshape(len(alphas), 2 * fb.n)


def sample_predictions(alpha, params, cfg, shots, seed, readout=None, p_obs=None):
    """Bernoulli(p_obs) bits per point; 1 predicts class B, 0 class A.

    Returns an integer array of shape (len(alpha), shots).
    """
    if shots < 1:
        raise ValueError("shots must be >= 1")
    if p_obs is None:
        p = np.atleast_1d(run_protocol(alpha, params, cfg))
        p_obs = apply_readout_error(p, readout) if readout is not None else p
    p_obs = np.clip(np.atleast_1d(np.asarray(p_obs, dtype=float)), 0, 1)
    rng = np.random.default_rng(seed)
    return (rng.random((p_obs.size, shots)) < p_obs[:, None]).astype(np.int8)


def shot_accuracy(bits, labels):
    """Fraction of single-shot predictions matching labels (0 = A, 1 = B)."""
    labels = np.asarray(labels).reshape(-1, 1)
    return float(np.mean(bits == labels))


@dataclass
class Landscape:
    r: np.ndarray
    phi: np.ndarray
    p_e: np.ndarray          # (n_radial, n_azimuthal), row-major
    shots: object
    seed: int

    @property
    def alphas(self):
        return self.r[:, None] * np.exp(1j * self.phi[None, :])

    def rows(self):
        al = self.alphas
        for i in range(len(self.r)):
            for j in range(len(self.phi)):
                a = al[i, j]
                yield (self.r[i], self.phi[j], a.real, a.imag, self.p_e[i, j])


def landscape_sweep(params, cfg, r_max=8.7, n_radial=30, n_azimuthal=100, shots=2 ** 7,
                    seed=0, readout=None):
    """Polar grid of excitation probabilities.

    ``shots="exact"`` (or None) returns analytic p_e.  Otherwise every cell
    draws a binomial estimate with its own generator seeded by
    (seed, cell_index), so the grid is independent of evaluation order.
    """
    r = np.linspace(0.0, r_max, n_radial)
    phi = np.linspace(0.0, 2 * np.pi, n_azimuthal, endpoint=False)
    al = (r[:, None] * np.exp(1j * phi[None, :])).ravel()
    p = np.asarray(run_protocol(al, params, cfg))
    if readout is not None:
        p = apply_readout_error(p, readout)
    if shots not in (None, "exact"):
        est = np.empty_like(p)
        for k in range(p.size):
            rng = np.random.default_rng([int(seed), k])
            est[k] = rng.binomial(int(shots), min(max(p[k], 0.0), 1.0)) / int(shots)
        p = est
    return Landscape(r, phi, p.reshape(n_radial, n_azimuthal), shots, seed)
