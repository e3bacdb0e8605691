"""Cat-state sensing: the displacement becomes a Ramsey phase.

A cat of total separation beta_tot is built from stacked ECD layers of
fixed magnitude (the last one takes the remainder).  Only the component of
alpha orthogonal to beta_tot enters, through the geometric phase
2 Im(alpha^* beta_tot), so the response is a fringe of angular frequency
2 |beta_tot| along that direction.
"""
import numpy as np
from scipy.optimize import least_squares

from .. import protocol, training


def ecd_magnitudes(beta_abs, unit=0.24):
    """Split |beta_tot| into fixed-size steps plus one smaller remainder."""
    if beta_abs <= 0:
        return np.array([0.0])
    n_full = int(np.floor(beta_abs / unit + 1e-9))
    rest = beta_abs - n_full * unit
    mags = [unit] * n_full
    if rest > 1e-9:
        mags.append(rest)
    return np.array(mags)


def cat_circuit(beta_total, unit=0.24, final_theta=np.pi / 2, final_phi=0.0):
    """Circuit parameters (with explicit magnitudes) for a cat of size beta_total.

    The first layer puts the qubit on the equator; later layers have no
    rotation, so the ECD flips the qubit each time and the ECD phase has to
    alternate by pi for the branches to keep separating.
    """
    beta_total = complex(beta_total)
    mags = ecd_magnitudes(abs(beta_total), unit)
    n = len(mags)
    thetas = np.zeros(n)
    thetas[0] = np.pi / 2
    phis = np.full(n, np.pi / 2)
    phases = np.angle(beta_total) + np.pi * (np.arange(n) % 2)
    return protocol.CircuitParams(thetas, phis, phases, final_theta, final_phi, mags)


def cat_response(beta_total, alpha, ideal=True, final_theta=np.pi / 2, final_phi=0.0,
                 unit=0.24, n_fock=50):
    """Excitation probability of the stacked-cat protocol.

    ``ideal=False`` runs the pulse-level model, which only supports sizes
    that are whole multiples of the calibrated ECD magnitude.
    """
    params = cat_circuit(beta_total, unit, final_theta, final_phi)
    if ideal:
        cfg = protocol.ProtocolConfig(params.depth, unit, "ideal_gate", n_fock)
    else:
        if not np.allclose(params.ecd_magnitudes, unit):
            raise ValueError("pulse-level cat needs |beta_tot| to be a multiple of the unit ECD")
        cfg = protocol.ProtocolConfig(params.depth, unit, "pulse_level", n_fock)
        params = protocol.CircuitParams(params.thetas, params.phis, params.ecd_phases,
                                        params.final_theta, params.final_phi)
    return protocol.run_protocol(alpha, params, cfg)


def fit_sinusoid(x, y):
    """Least-squares fit y ~ A0 + A1 sin(f x + phase); returns (A0, A1, f, phase).

    ``x`` should be roughly uniform; the frequency is seeded from the FFT peak.
    """
    x, y = np.asarray(x, float), np.asarray(y, float)
    dx = np.mean(np.diff(x))
    spec = np.abs(np.fft.rfft(y - y.mean()))
    freqs = 2 * np.pi * np.fft.rfftfreq(len(x), dx)
    k = int(np.argmax(spec[1:]) + 1)
    f0 = freqs[k]
    # linear least squares for the amplitudes at the seeded frequency
    basis = np.stack([np.ones_like(x), np.sin(f0 * x), np.cos(f0 * x)], axis=1)
    c, *_ = np.linalg.lstsq(basis, y, rcond=None)
    a1 = np.hypot(c[1], c[2])
    ph = np.arctan2(c[2], c[1])

    def res(p):
        return p[0] + p[1] * np.sin(p[2] * x + p[3]) - y

    sol = least_squares(res, [c[0], a1, f0, ph], method="lm", xtol=1e-14, ftol=1e-14)
    a0, a1, f, ph = sol.x
    if a1 < 0:
        a1, ph = -a1, ph + np.pi
    if f < 0:
        f, ph = -f, np.pi - ph
    return a0, a1, f, np.mod(ph, 2 * np.pi)


def cat_fisher_information(a1, f):
    """F = 4 A1^2 f^2 for a fringe A0 + A1 sin(f x + phase)."""
    return 4.0 * a1 ** 2 * f ** 2


def fringe_fisher(beta_total, ideal=True, n_points=201, span=None):
    """Fit the response along the sensitive axis and return (F, fit)."""
    beta_total = complex(beta_total)
    direction = 1j * np.exp(1j * np.angle(beta_total))
    span = span or 2 * np.pi / max(2 * abs(beta_total), 1e-3)
    x = np.linspace(-span, span, n_points)
    p = cat_response(beta_total, x * direction, ideal)
    fit = fit_sinusoid(x, p)
    return cat_fisher_information(fit[1], fit[2]), fit


def train_cat(train_set, cfg_train, test_set=None, n_fock=50):
    """Train a single-ECD cat protocol whose magnitude and phase are free.

    The first rotation is fixed at R(pi/2, pi/2); the ECD phase and magnitude
    and the final rotation are optimised.
    """
    cfg = protocol.ProtocolConfig(1, 0.24, "ideal_gate", n_fock)

    def init(rng):
        return protocol.CircuitParams([np.pi / 2], [np.pi / 2], [rng.uniform(0, 2 * np.pi)],
                                      np.pi * rng.uniform(0, 1), rng.uniform(0, 2 * np.pi),
                                      [rng.uniform(0, 1)])

    # vector: theta, phi, ecd_phase, final_theta, final_phi, magnitude
    mask = np.array([0, 0, 1, 1, 1, 1], dtype=float)
    return training.train_on(train_set, cfg_train, cfg, test_set, init, mask, magnitudes=True)
