"""Seeded binary-classification datasets of complex displacements.

Every generator returns equal numbers of class-A (label 0) and class-B
(label 1) points with |alpha| bounded by the task scale.  Shape tasks are
rejection samplers of uniform points in the disc |alpha| < scale, with the
class decided by a fixed region (constants below, in units of the scale).
"""
from dataclasses import dataclass, asdict, field
import csv
import io
import json

import numpy as np

KINDS = ("spiral", "circles", "plus", "threshold", "triangle", "psi_shape", "smiley",
         "two_point", "zero_vs_pm")
SHAPE_SCALE = 7.2


class InvalidSpec(ValueError):
    pass


@dataclass(frozen=True)
class TaskSpec:
    kind: str = "spiral"
    W: float = 1.0
    r_max: float = 8.7
    scale: float = None
    delta: complex = 1.0
    r_min_frac: float = 0.08
    jitter_frac: float = 0.02

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InvalidSpec(f"unknown task kind {self.kind!r}")
        if self.kind == "spiral" and not self.W > 0:
            raise InvalidSpec("spiral winding W must be positive")
        if self.bound <= 0:
            raise InvalidSpec("scale must be positive")

    @property
    def bound(self):
        """Largest |alpha| the task can produce."""
        if self.scale is not None:
            return float(self.scale)
        if self.kind == "spiral":
            return float(self.r_max)
        if self.kind == "two_point":
            return abs(complex(self.delta)) / 2
        if self.kind == "zero_vs_pm":
            return abs(complex(self.delta))
        return SHAPE_SCALE

    def to_dict(self):
        d = asdict(self)
        d["delta"] = [complex(self.delta).real, complex(self.delta).imag]
        return d

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        if "delta" in d and isinstance(d["delta"], (list, tuple)):
            d["delta"] = complex(*d["delta"])
        return cls(**d)


@dataclass
class LabeledDataset:
    alphas: np.ndarray
    labels: np.ndarray
    seed: int = 0
    role: str = "train"
    spec: TaskSpec = field(default_factory=TaskSpec)

    def __len__(self):
        return len(self.labels)

    @property
    def class_a(self):
        return self.alphas[self.labels == 0]

    @property
    def class_b(self):
        return self.alphas[self.labels == 1]

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\r\n")
        w.writerow(["alpha_x", "alpha_p", "label"])
        for a, lab in zip(self.alphas, self.labels):
            w.writerow([repr(float(a.real)), repr(float(a.imag)), "AB"[int(lab)]])
        return buf.getvalue()

    def to_json(self):
        return json.dumps({
            "schema": "qcds.dataset/1",
            "spec": self.spec.to_dict(),
            "seed": self.seed,
            "role": self.role,
            "alpha_x": self.alphas.real.tolist(),
            "alpha_p": self.alphas.imag.tolist(),
            "labels": self.labels.tolist(),
        }, sort_keys=True)

    @classmethod
    def from_json(cls, text):
        d = json.loads(text)
        al = np.asarray(d["alpha_x"]) + 1j * np.asarray(d["alpha_p"])
        return cls(al, np.asarray(d["labels"], dtype=int), d["seed"], d["role"],
                   TaskSpec.from_dict(d["spec"]))


# ---------------------------------------------------------------- spirals

def spiral_point(arm, t, W, r_max, r_min_frac=0.08, jitter=0.0):
    """Point on a two-arm Archimedean spiral; arm B is arm A rotated by pi.

    ``jitter`` is an additive radial offset (already drawn by the caller).
    """
    t = np.asarray(t, dtype=float)
    if np.any((t < 0) | (t > 1)):
        raise ValueError("t must lie in [0, 1]")
    r_min = r_min_frac * r_max
    # a few ulps of headroom so that |r e^{i ang}| never rounds above r_max
    r = np.clip(r_min + (r_max - r_min) * t + jitter, 0.0, r_max * (1 - 4e-16))
    ang = 2 * np.pi * W * t + (np.pi if arm in ("B", 1) else 0.0)
    return r * np.exp(1j * ang)


def _spiral(spec, n_half, rng):
    out = []
    for arm in (0, 1):
        t = rng.uniform(0, 1, n_half)
        jit = rng.normal(0, spec.jitter_frac * spec.r_max, n_half)
        out.append(spiral_point(arm, t, spec.W, spec.r_max, spec.r_min_frac, jit))
    return out


# ----------------------------------------------------------- shape tasks
# Region membership for class A, coordinates (x, y) in units of the scale.

def _in_circles(x, y):
    r = np.hypot(x, y)
    return (r < 0.25) | ((r >= 0.5) & (r < 0.75))


def _in_plus(x, y):
    w, ln = 0.2, 0.8
    return ((np.abs(x) < w) & (np.abs(y) < ln)) | ((np.abs(y) < w) & (np.abs(x) < ln))


def _in_threshold(x, y):
    return np.hypot(x, y) < 1 / np.sqrt(2)


def _in_triangle(x, y):
    # equilateral, circumradius 0.8, one vertex up
    R = 0.8
    inside = np.ones_like(x, dtype=bool)
    for k in range(3):
        ang = np.pi / 2 + 2 * np.pi * k / 3 + np.pi / 3
        nx, ny = np.cos(ang + np.pi), np.sin(ang + np.pi)
        # half-plane through the edge midpoint at distance R/2 from the centre
        inside &= (x * -nx + y * -ny) <= R / 2
    return inside


def _in_psi(x, y):
    stem = (np.abs(x) < 0.1) & (np.abs(y + 0.05) < 0.75)
    left = (np.abs(x + 0.45) < 0.1) & (y > 0.0) & (y < 0.7)
    right = (np.abs(x - 0.45) < 0.1) & (y > 0.0) & (y < 0.7)
    cup = (np.abs(x) < 0.55) & (np.abs(y) < 0.1)
    return stem | left | right | cup


def _in_smiley(x, y):
    eyes = (np.hypot(x + 0.35, y - 0.3) < 0.15) | (np.hypot(x - 0.35, y - 0.3) < 0.15)
    r = np.hypot(x, y)
    ang = np.arctan2(y, x)
    mouth = (r > 0.45) & (r < 0.65) & (ang < -np.pi / 6) & (ang > -5 * np.pi / 6)
    return eyes | mouth


REGIONS = {
    "circles": _in_circles,
    "plus": _in_plus,
    "threshold": _in_threshold,
    "triangle": _in_triangle,
    "psi_shape": _in_psi,
    "smiley": _in_smiley,
}


def _shape(spec, n_half, rng):
    region = REGIONS[spec.kind]
    s = spec.bound
    got = {0: [], 1: []}
    count = {0: 0, 1: 0}
    for _ in range(10000):
        if count[0] >= n_half and count[1] >= n_half:
            break
        m = 4 * n_half
        r = np.sqrt(rng.uniform(0, 1, m))
        ang = rng.uniform(0, 2 * np.pi, m)
        x, y = r * np.cos(ang), r * np.sin(ang)
        lab = np.where(region(x, y), 0, 1)
        pts = s * (x + 1j * y)
        for c in (0, 1):
            take = pts[lab == c][: max(0, n_half - count[c])]
            got[c].append(take)
            count[c] += len(take)
    else:
        raise InvalidSpec(f"rejection sampler for {spec.kind} did not converge")
    return [np.concatenate(got[0]), np.concatenate(got[1])]


def generate(spec, size, seed, role="train"):
    """Balanced dataset of ``size`` points, deterministic in (spec, size, seed)."""
    if size <= 0 or size % 2:
        raise InvalidSpec("dataset size must be a positive even number")
    n_half = size // 2
    rng = np.random.default_rng(seed)
    if spec.kind == "spiral":
        a, b = _spiral(spec, n_half, rng)
    elif spec.kind == "two_point":
        d = complex(spec.delta)
        a, b = np.full(n_half, -d / 2), np.full(n_half, d / 2)
    elif spec.kind == "zero_vs_pm":
        d = complex(spec.delta)
        sign = np.where(np.arange(n_half) % 2 == 0, 1.0, -1.0)
        a, b = np.zeros(n_half, dtype=complex), sign * d
    else:
        a, b = _shape(spec, n_half, rng)
    alphas = np.concatenate([a, b]).astype(complex)
    labels = np.concatenate([np.zeros(n_half, int), np.ones(n_half, int)])
    return LabeledDataset(alphas, labels, seed, role, spec)


def train_test(spec, size=512, seed=0):
    """Train and test sets drawn with two different seeds."""
    return (generate(spec, size, seed, "train"),
            generate(spec, size, seed + 1_000_003, "test"))
