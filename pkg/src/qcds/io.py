"""Run configuration and deterministic result files."""
from dataclasses import dataclass, field, fields
import csv
import io
import json
import os
from pathlib import Path

import numpy as np

from . import protocol, pulse, tasks, training
from .exceptions import ConfigError
from .protocol import ProtocolConfig
from .tasks import TaskSpec
from .training import TrainConfig

SCHEMA_VERSION = 1
ENV_OUTPUT_DIR = "QCDS_OUTPUT_DIR"
ENV_JOBS = "QCDS_JOBS"


def _check_keys(section, d, allowed):
    if not isinstance(d, dict):
        raise ConfigError(f"[{section}] must be a mapping")
    extra = sorted(set(d) - set(allowed))
    if extra:
        raise ConfigError(f"unknown key(s) in [{section}]: {', '.join(extra)}")


def _names(cls):
    return [f.name for f in fields(cls)]


@dataclass
class RunConfig:
    task: TaskSpec = field(default_factory=TaskSpec)
    protocol: ProtocolConfig = field(default_factory=ProtocolConfig)
    train: TrainConfig = field(default_factory=TrainConfig)
    depths: list = None
    baselines: list = field(default_factory=list)
    benchmark: dict = field(default_factory=dict)
    landscape: dict = field(default_factory=dict)
    calibration: dict = field(default_factory=dict)
    mlp: dict = field(default_factory=dict)
    output_dir: str = "qcds_out"
    master_seed: int = 0
    jobs: int = 1


BENCHMARK_KEYS = ("W", "protocols", "depths", "size", "r_max")
LANDSCAPE_KEYS = ("checkpoint", "r_max", "n_radial", "n_azimuthal", "shots", "readout")
CALIBRATION_KEYS = ("chi", "s", "amplitudes_z", "t_max", "n_times", "t2", "f0", "noise",
                    "sweep_csv", "max_rms")
MLP_KEYS = ("epochs", "batch", "lr", "settings_lr", "average_last")


def parse_config(d):
    """Validate a decoded config mapping and build a RunConfig."""
    top = ("schema_version", "task", "protocol", "train", "depths", "baselines", "benchmark",
           "landscape", "calibration", "mlp", "output_dir", "master_seed", "jobs")
    _check_keys("config", d, top)
    version = d.get("schema_version")
    if version != SCHEMA_VERSION:
        raise ConfigError(f"unsupported schema_version {version!r} (expected {SCHEMA_VERSION})")
    try:
        task_d = dict(d.get("task", {}))
        _check_keys("task", task_d, _names(tasks.TaskSpec))
        task = tasks.TaskSpec.from_dict(task_d)

        proto_d = dict(d.get("protocol", {}))
        _check_keys("protocol", proto_d, _names(protocol.ProtocolConfig))
        phys_d = proto_d.pop("physical", {})
        _check_keys("protocol.physical", phys_d, _names(pulse.PhysicalParams))
        proto = protocol.ProtocolConfig(physical=pulse.PhysicalParams(**phys_d), **proto_d)

        train_d = dict(d.get("train", {}))
        _check_keys("train", train_d, _names(training.TrainConfig))
        if "amplitude_clamp" in train_d:
            train_d["amplitude_clamp"] = tuple(train_d["amplitude_clamp"])
        train = training.TrainConfig(**train_d)
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc)) from exc

    for name, keys in (("benchmark", BENCHMARK_KEYS), ("landscape", LANDSCAPE_KEYS),
                       ("calibration", CALIBRATION_KEYS), ("mlp", MLP_KEYS)):
        _check_keys(name, d.get(name, {}), keys)
    baselines = d.get("baselines", [])
    if not isinstance(baselines, list) or not all(isinstance(b, str) for b in baselines):
        raise ConfigError("baselines must be a list of names")
    depths = d.get("depths")
    if depths is not None and (not isinstance(depths, list) or not all(
            isinstance(x, int) and x >= 1 for x in depths)):
        raise ConfigError("depths must be a list of positive integers")
    seed = d.get("master_seed", 0)
    jobs = d.get("jobs", 1)
    if not isinstance(seed, int) or not isinstance(jobs, int) or jobs < 1:
        raise ConfigError("master_seed must be an integer and jobs a positive integer")
    return RunConfig(task, proto, train, depths, baselines, dict(d.get("benchmark", {})),
                     dict(d.get("landscape", {})), dict(d.get("calibration", {})),
                     dict(d.get("mlp", {})), str(d.get("output_dir", "qcds_out")), seed, jobs)


def load_config(path=None, env=None):
    """Read a JSON config file (or defaults) and apply environment overrides."""
    env = os.environ if env is None else env
    if path is None:
        d = {"schema_version": SCHEMA_VERSION}
    else:
        try:
            d = json.loads(Path(path).read_text(encoding="utf-8"))
        except FileNotFoundError as exc:
            raise ConfigError(f"config file not found: {path}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from exc
    cfg = parse_config(d)
    if env.get(ENV_OUTPUT_DIR):
        cfg.output_dir = env[ENV_OUTPUT_DIR]
    if env.get(ENV_JOBS):
        try:
            cfg.jobs = max(1, int(env[ENV_JOBS]))
        except ValueError as exc:
            raise ConfigError(f"{ENV_JOBS} must be an integer") from exc
    return cfg


# ------------------------------------------------------------- writers

def _plain(x):
    if isinstance(x, dict):
        return {k: _plain(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_plain(v) for v in x]
    if isinstance(x, np.ndarray):
        return _plain(x.tolist())
    if isinstance(x, np.generic):
        return x.item()
    if isinstance(x, float) and not np.isfinite(x):
        return None
    if isinstance(x, complex):
        return [x.real, x.imag]
    return x


def dump_json(obj):
    return json.dumps(_plain(obj), sort_keys=True, indent=1) + "\n"


def write_json(path, obj):
    Path(path).write_text(dump_json(obj), encoding="utf-8")


def csv_text(header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\r\n")
    w.writerow(header)
    for r in rows:
        w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in r])
    return buf.getvalue()


def write_csv(path, header, rows):
    Path(path).write_text(csv_text(header, rows), encoding="utf-8", newline="")


def check_schema(d, expected):
    """Reject files whose schema tag has a different name or major version."""
    tag = d.get("schema", "")
    name, _, ver = tag.partition("/")
    exp_name, _, exp_ver = expected.partition("/")
    if name != exp_name or ver.split(".")[0] != exp_ver.split(".")[0]:
        raise ConfigError(f"schema mismatch: file has {tag!r}, expected {expected!r}")
    return d


def read_checkpoint(path):
    try:
        d = json.loads(Path(path).read_text(encoding="utf-8"))
    except FileNotFoundError as exc:
        raise ConfigError(f"checkpoint not found: {path}") from exc
    check_schema(d, "qcds.checkpoint/1")
    return protocol.CircuitParams.from_dict(d["params"]), d


def checkpoint_dict(params, cfg_proto, extra=None):
    d = {"schema": "qcds.checkpoint/1", "params": params.to_dict(), "depth": params.depth,
         "fidelity": cfg_proto.fidelity, "beta_magnitude": cfg_proto.beta_magnitude,
         "params_hash": params.hash()}
    d.update(extra or {})
    return d
