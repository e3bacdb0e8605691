"""Entangled-Ramsey characterisation of the cross-Kerr chi and drive scale s.

A coherent state alpha = s z is split by a qubit pi/2 pulse into branches
rotating at +/- chi/2; after a delay t a second pi/2 pulse reads out their
overlap.  For chi t << 1 the signal is a Gaussian-damped cosine whose decay
rate C = s chi z / sqrt(2) is linear in z and whose frequency
f = f0 + s^2 chi z^2 / (2 pi) is quadratic in z.
"""
from dataclasses import dataclass, field
import csv
import io
import json

import numpy as np
from scipy.optimize import least_squares
from scipy.signal import hilbert

from .qcore import fock_basis, qubit_rotation

CHI = 2 * np.pi * 13.8e3
SCALE = 24.2
T2 = 30e-6
# fits are done in microseconds / MHz for conditioning
_T, _F = 1e-6, 1e6


class FitDiverged(RuntimeError):
    pass


def exact_response(alpha, chi, t):
    """P_e = 1/2 + 1/2 exp(-a^2 (1 - cos chi t)) cos(a^2 sin chi t)."""
    a2 = np.abs(alpha) ** 2
    x = chi * np.asarray(t, dtype=float)
    return 0.5 + 0.5 * np.exp(-a2 * (1 - np.cos(x))) * np.cos(a2 * np.sin(x))


def taylor_response(alpha, chi, t):
    """Small chi t form 1/2 + 1/2 exp(-(a chi t)^2 / 2) cos(a^2 chi t)."""
    a = np.abs(alpha)
    x = chi * np.asarray(t, dtype=float)
    return 0.5 + 0.5 * np.exp(-0.5 * (a * x) ** 2) * np.cos(a * a * x)


def fock_response(alpha, chi, t, n_fock=60):
    """Direct simulation: pi/2, free dispersive evolution, pi/2, measure e."""
    fb = fock_basis(n_fock)
    osc = fb.displacement(alpha, check=False)[:, 0]
    r = qubit_rotation(np.pi / 2, 0.0)
    psi = np.stack([r[0, 0] * osc, r[1, 0] * osc])
    out = []
    for tk in np.atleast_1d(t):
        ph = np.exp(-0.5j * chi * tk * fb.number)
        x = np.stack([psi[0] * ph, psi[1] * np.conj(ph)])
        e = r[1, 0] * x[0] + r[1, 1] * x[1]
        out.append(np.vdot(e, e).real)
    return np.array(out)


def fit_model(t, A, A0, C, f, T2):
    """A + A0 exp(-(C t)^2) cos(2 pi f t) exp(-t / T2)."""
    t = np.asarray(t, dtype=float)
    return A + A0 * np.exp(-(C * t) ** 2) * np.cos(2 * np.pi * f * t) * np.exp(-t / T2)


def forward_slopes(chi, s):
    """(m1, m2) with C = m1 z and f - f0 = m2 z^2."""
    return s * chi / np.sqrt(2), s * s * chi / (2 * np.pi)


def extract(m1, m2):
    """Inverse of ``forward_slopes``: chi = m1^2/(m2 pi), s = sqrt(2) pi m2 / m1."""
    return m1 * m1 / (m2 * np.pi), np.sqrt(2) * np.pi * m2 / m1


@dataclass
class RamseySweep:
    amplitudes_z: np.ndarray
    times: np.ndarray
    p_e: np.ndarray            # (n_amplitudes, n_times)
    truth: dict = field(default_factory=dict)

    def __post_init__(self):
        self.amplitudes_z = np.asarray(self.amplitudes_z, dtype=float)
        self.times = np.asarray(self.times, dtype=float)
        self.p_e = np.asarray(self.p_e, dtype=float)
        if self.p_e.shape != (len(self.amplitudes_z), len(self.times)):
            raise ValueError("p_e must have shape (n_amplitudes, n_times)")

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\r\n")
        w.writerow(["z", "t", "p_e"])
        for i, z in enumerate(self.amplitudes_z):
            for j, t in enumerate(self.times):
                w.writerow([repr(float(z)), repr(float(t)), repr(float(self.p_e[i, j]))])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text):
        rows = list(csv.reader(io.StringIO(text)))
        if not rows or rows[0] != ["z", "t", "p_e"]:
            raise ValueError("sweep CSV must start with header z,t,p_e")
        data = np.array([[float(v) for v in r] for r in rows[1:]])
        if data.ndim != 2 or data.shape[1] != 3:
            raise ValueError("malformed sweep CSV")
        zs = np.unique(data[:, 0])
        ts = np.unique(data[:, 1])
        if len(zs) * len(ts) != len(data):
            raise ValueError("sweep CSV is not a full (z, t) grid")
        p = np.empty((len(zs), len(ts)))
        iz = np.searchsorted(zs, data[:, 0])
        it = np.searchsorted(ts, data[:, 1])
        p[iz, it] = data[:, 2]
        return cls(zs, ts, p)


def synthetic_sweep(chi=CHI, s=SCALE, amplitudes_z=None, times=None, t2=T2, f0=0.0,
                    noise=0.0, seed=0):
    """Exact-response data with T2 contrast decay, optional detuning and noise."""
    zs = np.linspace(0.25, 0.45, 5) if amplitudes_z is None else np.asarray(amplitudes_z, float)
    ts = np.linspace(0, 3e-6, 301) if times is None else np.asarray(times, float)
    rows = []
    for z in zs:
        a2 = (s * z) ** 2
        x = chi * ts
        env = np.exp(-a2 * (1 - np.cos(x))) * np.exp(-ts / t2)
        rows.append(0.5 + 0.5 * env * np.cos(a2 * np.sin(x) + 2 * np.pi * f0 * ts))
    p = np.array(rows)
    if noise > 0:
        p = p + noise * np.random.default_rng(seed).standard_normal(p.shape)
    truth = {"chi": chi, "s": s, "t2": t2, "f0": f0, "noise": noise, "seed": seed}
    return RamseySweep(zs, ts, p, truth)


@dataclass
class TraceFit:
    A: float
    A0: float
    C: float
    f: float
    T2: float
    rms: float


@dataclass
class FitResult:
    fits: list
    m1: float
    m2: float
    f0: float
    chi: float
    s: float

    def to_dict(self):
        return {
            "schema": "qcds.calibration/1",
            "fits": [vars(f) for f in self.fits],
            "m1": self.m1, "m2": self.m2, "f0": self.f0,
            "chi": self.chi, "s": self.s,
        }

    def to_json(self):
        def clean(v):
            return None if isinstance(v, float) and not np.isfinite(v) else v
        d = self.to_dict()
        d["fits"] = [{k: clean(v) for k, v in f.items()} for f in d["fits"]]
        return json.dumps(d, sort_keys=True, indent=1)


def _initial_guess(t, y):
    """Frequency from the FFT peak, envelope from a fit to log|analytic signal|."""
    a = float(np.mean(y[len(y) // 2:])) if len(y) > 40 else 0.5
    yc = y - a
    pad = 8 * len(y)
    spec = np.abs(np.fft.rfft(yc * np.hanning(len(y)), pad))
    freqs = np.fft.rfftfreq(pad, t[1] - t[0])
    f = freqs[int(np.argmax(spec))]
    env = np.abs(hilbert(yc))
    a0 = max(env[0], 1e-3)
    keep = (env > 0.1 * a0) & (np.arange(len(t)) > 2) & (np.arange(len(t)) < len(t) - 3)
    c, gam = 1.0 / max(t[-1], 1e-12), 0.0
    if np.count_nonzero(keep) > 5:
        basis = np.stack([np.ones(keep.sum()), -t[keep] ** 2, -t[keep]], axis=1)
        coef, *_ = np.linalg.lstsq(basis, np.log(env[keep]), rcond=None)
        if coef[1] > 0:
            c = np.sqrt(coef[1])
        gam = max(coef[2], 0.0)
    return np.array([a, a0, c, f, gam])


def fit_trace(t, y, max_rms=0.05):
    """Levenberg-Marquardt fit of one Ramsey trace with an analytic Jacobian."""
    ts = np.asarray(t, float) / _T
    y = np.asarray(y, float)
    if len(ts) < 20:
        raise ValueError("need at least 20 time points")
    p0 = _initial_guess(ts, y)

    def model(p):
        A, A0, C, f, g = p
        gauss = np.exp(-(C * ts) ** 2)
        cos = np.cos(2 * np.pi * f * ts)
        sin = np.sin(2 * np.pi * f * ts)
        dec = np.exp(-g * ts)
        return A, A0, C, f, gauss, cos, sin, dec

    def res(p):
        A, A0, C, f, gauss, cos, sin, dec = model(p)
        return A + A0 * gauss * cos * dec - y

    def jac(p):
        A, A0, C, f, gauss, cos, sin, dec = model(p)
        base = gauss * cos * dec
        return np.stack([
            np.ones_like(ts),
            base,
            A0 * base * (-2 * C * ts ** 2),
            -A0 * gauss * sin * dec * 2 * np.pi * ts,
            -A0 * base * ts,
        ], axis=1)

    sol = least_squares(res, p0, jac=jac, method="lm", xtol=1e-15, ftol=1e-15, gtol=1e-15,
                        max_nfev=20000)
    rms = float(np.sqrt(np.mean(sol.fun ** 2)))
    if not sol.success or not np.all(np.isfinite(sol.x)) or rms > max_rms:
        raise FitDiverged(f"Ramsey fit failed (rms residual {rms:.3g})")
    A, A0, C, f, g = sol.x
    t2 = _T / g if g > 0 else np.inf
    return TraceFit(float(A), float(A0), float(abs(C) / _T), float(abs(f) * _F), float(t2), rms)


def fit_and_extract(sweep, max_rms=0.05):
    """Per-trace fits, then C = m1 z and f = f0 + m2 z^2, then (chi, s)."""
    if len(sweep.amplitudes_z) < 3:
        raise ValueError("need at least 3 amplitudes")
    fits = [fit_trace(sweep.times, row, max_rms) for row in sweep.p_e]
    z = sweep.amplitudes_z
    c = np.array([f.C for f in fits])
    fr = np.array([f.f for f in fits])
    m1 = float(np.dot(z, c) / np.dot(z, z))
    basis = np.stack([np.ones_like(z), z * z], axis=1)
    (f0, m2), *_ = np.linalg.lstsq(basis, fr, rcond=None)
    chi, s = extract(m1, m2)
    return FitResult(fits, m1, float(m2), float(f0), float(chi), float(s))
