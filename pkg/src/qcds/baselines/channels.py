"""Measurement channels of conventional sensing strategies.

Each channel turns displacements into classical features for an MLP.
Channels with trainable measurement settings (squeezing axis, GKP phase
offsets) also map the MLP's input gradient back onto those settings.
"""
from dataclasses import dataclass

import numpy as np

SQRT_2PI = np.sqrt(2 * np.pi)


@dataclass(frozen=True)
class HeterodyneConfig:
    n_sys: float = 1.0

    def __post_init__(self):
        if self.n_sys < 1:
            raise ValueError("phase-preserving detection adds at least one noise photon")

    @property
    def variance(self):
        return self.n_sys / 2


@dataclass(frozen=True)
class SqueezedConfig:
    r: float = 0.46          # np.inf for the noiseless limit
    axis_phi: float = 0.0
    n_bins: int = 32

    def __post_init__(self):
        if self.r < 0:
            raise ValueError("squeezing parameter must be non-negative")

    @property
    def variance(self):
        return 0.0 if np.isinf(self.r) else 0.5 * np.exp(-2 * self.r)


@dataclass(frozen=True)
class GkpIonConfig:
    eta: float = 0.72
    rounds: int = 2
    l_s: float = SQRT_2PI

    def __post_init__(self):
        if not 0 <= self.eta <= 1:
            raise ValueError("eta must lie in [0, 1]")
        if self.rounds < 1:
            raise ValueError("rounds must be >= 1")


@dataclass(frozen=True)
class TmsConfig:
    r: float = 0.46

    def __post_init__(self):
        if self.r < 0:
            raise ValueError("squeezing parameter must be non-negative")

    @property
    def variance(self):
        return 0.5 * np.exp(-2 * self.r)

    @property
    def mean_photons(self):
        return 2 * np.sinh(self.r) ** 2

    @property
    def squeezing_db(self):
        return 10 * np.log10(np.exp(2 * self.r))


# ------------------------------------------------------- raw samplers

def heterodyne_sample(alpha, cfg=HeterodyneConfig(), seed=None):
    """Noisy (alpha_x, alpha_p) with variance n_sys/2 per component."""
    rng = np.random.default_rng(seed)
    alpha = np.asarray(alpha, dtype=complex)
    sd = np.sqrt(cfg.variance)
    return (alpha.real + sd * rng.standard_normal(alpha.shape),
            alpha.imag + sd * rng.standard_normal(alpha.shape))


def squeezed_value(alpha, cfg, rng):
    alpha = np.asarray(alpha, dtype=complex)
    v = np.real(alpha * np.exp(-1j * cfg.axis_phi))
    if cfg.variance > 0:
        v = v + np.sqrt(cfg.variance) * rng.standard_normal(v.shape)
    return v


def one_hot_bins(v, n_bins, scale):
    """One-hot index of v in n_bins uniform bins over [-scale, scale] (clipped)."""
    v = np.atleast_1d(v)
    k = np.floor((v + scale) / (2 * scale) * n_bins).astype(int)
    k = np.clip(k, 0, n_bins - 1)
    out = np.zeros((v.size, n_bins))
    out[np.arange(v.size), k] = 1.0
    return out


def squeezed_sample(alpha, cfg=SqueezedConfig(), seed=None, scale=8.7):
    """(one_hot, raw) for the quadrature along ``cfg.axis_phi``."""
    rng = np.random.default_rng(seed)
    v = squeezed_value(alpha, cfg, rng)
    return one_hot_bins(v, cfg.n_bins, scale), v


def gkp_probability(a, theta, eta=0.72, l_s=SQRT_2PI):
    return 0.5 + 0.5 * eta * np.cos(a * l_s + theta)


def gkp_ion_sample(alpha, cfg=GkpIonConfig(), seed=None, thetas=None):
    """Bits of shape (B, 2 * rounds): per round one x bit then one p bit."""
    rng = np.random.default_rng(seed)
    alpha = np.atleast_1d(np.asarray(alpha, dtype=complex))
    th = np.zeros((cfg.rounds, 2)) if thetas is None else np.asarray(thetas).reshape(cfg.rounds, 2)
    quad = np.stack([alpha.real, alpha.imag], axis=1)          # (B, 2)
    p = gkp_probability(quad[:, None, :], th[None], cfg.eta, cfg.l_s).reshape(len(alpha), -1)
    return (rng.random(p.shape) < p).astype(float)


def tms_sample(alpha, cfg=TmsConfig(), seed=None):
    """Joint-quadrature estimates with variance e^{-2r}/2 per component."""
    rng = np.random.default_rng(seed)
    alpha = np.asarray(alpha, dtype=complex)
    sd = np.sqrt(cfg.variance)
    return (alpha.real + sd * rng.standard_normal(alpha.shape),
            alpha.imag + sd * rng.standard_normal(alpha.shape))


def score_fisher(samples, mean, variance):
    """Mean squared score of a Gaussian location model."""
    s = (np.asarray(samples) - mean) / variance
    return float(np.mean(s * s))


# ------------------------------------------------- channels for the MLP

class Channel:
    """Base class: ``features(alphas, rng)`` plus optional trainable settings."""
    name = "channel"
    n_features = 2
    trainable = False

    def __init__(self, scale):
        self.scale = float(scale)

    def features(self, alphas, rng):
        raise NotImplementedError

    def settings(self):
        return np.zeros(0)

    def set_settings(self, v):
        pass

    def settings_grad(self, alphas, dx):
        return np.zeros(0)

    def starts(self):
        """Initial settings to try (one training run each)."""
        return [self.settings()]


class Noiseless(Channel):
    name = "noiseless"

    def features(self, alphas, rng):
        return np.stack([alphas.real, alphas.imag], axis=1) / self.scale


class Constant(Channel):
    name = "constant"

    def features(self, alphas, rng):
        return np.zeros((len(alphas), 2))


class Heterodyne(Channel):
    name = "heterodyne"

    def __init__(self, scale, cfg=HeterodyneConfig()):
        super().__init__(scale)
        self.cfg = cfg

    def features(self, alphas, rng):
        x, p = heterodyne_sample(alphas, self.cfg, rng)
        return np.stack([x, p], axis=1) / self.scale


class TwoModeSqueezed(Channel):
    name = "tms"

    def __init__(self, scale, cfg=TmsConfig()):
        super().__init__(scale)
        self.cfg = cfg

    def features(self, alphas, rng):
        x, p = tms_sample(alphas, self.cfg, rng)
        return np.stack([x, p], axis=1) / self.scale


class Squeezed(Channel):
    name = "squeezed"
    trainable = True

    def __init__(self, scale, cfg=SqueezedConfig(), n_starts=4):
        super().__init__(scale)
        self.cfg = cfg
        self.phi = cfg.axis_phi
        self.n_features = cfg.n_bins + 1
        self.n_starts = n_starts

    def features(self, alphas, rng):
        c = SqueezedConfig(self.cfg.r, self.phi, self.cfg.n_bins)
        v = squeezed_value(alphas, c, rng)
        oh = one_hot_bins(v, c.n_bins, self.scale)
        return np.concatenate([oh, v[:, None] / self.scale], axis=1)

    def settings(self):
        return np.array([self.phi])

    def set_settings(self, v):
        self.phi = float(v[0])

    def settings_grad(self, alphas, dx):
        # only the raw value carries a gradient; d v / d phi = Im(alpha e^{-i phi})
        dv = np.imag(alphas * np.exp(-1j * self.phi)) / self.scale
        return np.array([np.sum(dx[:, -1] * dv)])

    def starts(self):
        return [np.array([self.cfg.axis_phi + np.pi * k / self.n_starts])
                for k in range(self.n_starts)]


class GkpIon(Channel):
    name = "gkp_ion"
    trainable = True

    def __init__(self, scale, cfg=GkpIonConfig()):
        super().__init__(scale)
        self.cfg = cfg
        self.n_features = 2 * cfg.rounds
        # successive rounds start a quarter period apart
        self.thetas = np.repeat((np.pi / 2 * np.arange(cfg.rounds))[:, None], 2, axis=1)

    def _quad(self, alphas):
        return np.stack([alphas.real, alphas.imag], axis=1)

    def features(self, alphas, rng):
        bits = gkp_ion_sample(alphas, self.cfg, rng, self.thetas)
        return 2 * bits - 1

    def probabilities(self, alphas):
        q = self._quad(np.atleast_1d(alphas))
        return gkp_probability(q[:, None, :], self.thetas[None], self.cfg.eta, self.cfg.l_s)

    def settings(self):
        return self.thetas.ravel().copy()

    def set_settings(self, v):
        self.thetas = np.asarray(v, dtype=float).reshape(self.cfg.rounds, 2).copy()

    def settings_grad(self, alphas, dx):
        # straight-through: d bit / d theta taken as d P / d theta (features are 2b - 1)
        q = self._quad(alphas)
        dp = -0.5 * self.cfg.eta * np.sin(q[:, None, :] * self.cfg.l_s + self.thetas[None])
        return np.sum(2 * dx.reshape(dp.shape) * dp, axis=0).ravel()


def make_channel(name, scale):
    """Baseline channels by name, including the ideal and HAYSTAC-like settings."""
    table = {
        "noiseless": lambda: Noiseless(scale),
        "constant": lambda: Constant(scale),
        "heterodyne_ideal": lambda: Heterodyne(scale, HeterodyneConfig(1.0)),
        "heterodyne_haystac": lambda: Heterodyne(scale, HeterodyneConfig(2.3)),
        "squeezed_ideal": lambda: Squeezed(scale, SqueezedConfig(np.inf)),
        "squeezed_haystac": lambda: Squeezed(scale, SqueezedConfig(0.46)),
        "gkp_ion": lambda: GkpIon(scale),
        "tms": lambda: TwoModeSqueezed(scale, TmsConfig(0.46)),
    }
    if name not in table:
        raise KeyError(f"unknown baseline {name!r}")
    return table[name]()
