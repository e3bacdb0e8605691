"""Command-line front end: train, benchmark, landscape, calibrate, gen-dataset."""
import argparse
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
import json
import sys
from pathlib import Path

import numpy as np

from . import calibration, protocol, tasks, training
from . import io as qio
from .baselines import cat, compass
from .baselines.benchmark import MlpTrainConfig, mlp_train_eval
from .baselines.channels import make_channel
from .exceptions import ConfigError

FIDELITY_FLAG = {"ideal": "ideal_gate", "pulse": "pulse_level"}


def _outdir(cfg):
    p = Path(cfg.output_dir)
    p.mkdir(parents=True, exist_ok=True)
    return p


def _proto(cfg, depth):
    return replace(cfg.protocol, depth=depth)


def _train_cfg(cfg):
    return replace(cfg.train, seed=cfg.master_seed)


# ----------------------------------------------------------------- train

def cmd_train(cfg):
    out = _outdir(cfg)
    depths = cfg.depths or [cfg.protocol.depth]
    tcfg = _train_cfg(cfg)
    written = []
    for depth in depths:
        pcfg = _proto(cfg, depth)
        rep = training.train(tcfg, pcfg, cfg.task)
        stem = f"N{depth}"
        d = rep.to_dict()
        d.update({"task": cfg.task.to_dict(), "train": tcfg.to_dict(), "depth": depth,
                  "fidelity": pcfg.fidelity, "converged": rep.converged()})
        qio.write_json(out / f"train_report_{stem}.json", d)
        qio.write_json(out / f"checkpoint_{stem}.json",
                       qio.checkpoint_dict(rep.best_params, pcfg, {"seed": cfg.master_seed}))
        test = dict(rep.test_history)
        rows = [(k, rep.loss_history[k], rep.accuracy_history[k], test.get(k, ""))
                for k in range(len(rep.accuracy_history))]
        qio.write_csv(out / f"accuracy_{stem}.csv",
                      ["epoch", "loss", "train_accuracy", "test_accuracy"], rows)
        written.append(stem)
        print(f"depth {depth}: train accuracy {rep.best_accuracy:.4f}, "
              f"test accuracy {rep.test_accuracy:.4f}")
    return written


# ------------------------------------------------------------- benchmark

def _binomial_stderr(acc, n):
    return float(np.sqrt(max(acc * (1 - acc), 0.0) / n))


def _bench_cell(args):
    cfg, name, W = args
    b = cfg.benchmark
    size = int(b.get("size", cfg.train.size))
    spec = tasks.TaskSpec("spiral", W=float(W), r_max=float(b.get("r_max", 8.7)))
    tr, te = tasks.train_test(spec, size, cfg.master_seed)
    try:
        if name == "qcds":
            best = None
            for depth in b.get("depths", [cfg.protocol.depth]):
                rep = training.train_on(tr, _train_cfg(cfg), _proto(cfg, depth), te)
                if best is None or rep.best_accuracy > best.best_accuracy:
                    best = rep
            acc = best.test_accuracy
        elif name == "cat":
            acc = cat.train_cat(tr, _train_cfg(cfg), te, cfg.protocol.n_fock).test_accuracy
        elif name == "compass_exact":
            ccfg, _, sign = compass.fit_exact_compass(tr)
            acc = float(compass.exact_compass_accuracy(ccfg, sign, te))
        elif name == "compass_variational":
            vc = compass.VariationalCompass(seed=cfg.master_seed)
            vc.fit(tr)
            acc = float(vc.accuracy(te))
        else:
            mcfg = MlpTrainConfig(size=size, seed=cfg.master_seed, **cfg.mlp)
            res = mlp_train_eval(make_channel(name, spec.bound), spec, cfg=mcfg, data=(tr, te))
            acc = res.accuracy
        return name, W, float(acc), _binomial_stderr(acc, len(te)), None
    except Exception as exc:        # isolate per-protocol failures
        return name, W, float("nan"), float("nan"), f"{type(exc).__name__}: {exc}"


def cmd_benchmark(cfg):
    b = cfg.benchmark
    names = list(b.get("protocols", [])) + [n for n in cfg.baselines
                                            if n not in b.get("protocols", [])]
    if not names:
        raise ConfigError("benchmark needs at least one protocol")
    grid = list(b.get("W", [0.5 * k for k in range(1, 11)]))
    cells = [(cfg, n, W) for n in names for W in grid]
    if cfg.jobs > 1:
        with ProcessPoolExecutor(cfg.jobs) as pool:
            results = list(pool.map(_bench_cell, cells))
    else:
        results = [_bench_cell(c) for c in cells]
    out = _outdir(cfg)
    qio.write_csv(out / "benchmark.csv", ["protocol", "W", "accuracy", "stderr"],
                  [(n, float(W), a, s) for n, W, a, s, _ in results])
    errors = [{"protocol": n, "W": W, "error": e} for n, W, _, _, e in results if e]
    qio.write_json(out / "benchmark_errors.json", {"schema": "qcds.errors/1", "errors": errors})
    for n, W, a, s, e in results:
        print(f"{n:>20s} W={W:<4g} accuracy={a:.4f} +/- {s:.4f}" + (f"  [{e}]" if e else ""))
    return results


# ------------------------------------------------------------- landscape

def cmd_landscape(cfg):
    lc = cfg.landscape
    if "checkpoint" not in lc:
        raise ConfigError("landscape.checkpoint is required")
    params, meta = qio.read_checkpoint(lc["checkpoint"])
    pcfg = _proto(cfg, params.depth)
    shots = lc.get("shots", 2 ** 7)
    readout = protocol.ReadoutModel(*lc["readout"]) if lc.get("readout") else None
    land = protocol.landscape_sweep(params, pcfg, lc.get("r_max", 8.7), lc.get("n_radial", 30),
                                    lc.get("n_azimuthal", 100), shots, cfg.master_seed, readout)
    out = _outdir(cfg)
    qio.write_csv(out / "landscape.csv", ["r", "phi", "alpha_x", "alpha_p", "p_e"], land.rows())
    qio.write_json(out / "landscape.json", {
        "schema": "qcds.landscape/1", "depth": params.depth, "fidelity": pcfg.fidelity,
        "seed": cfg.master_seed, "params_hash": params.hash(), "shots": shots,
        "n_radial": len(land.r), "n_azimuthal": len(land.phi), "r_max": float(land.r[-1])})
    return land


# ------------------------------------------------------------- calibrate

def cmd_calibrate(cfg):
    c = cfg.calibration
    out = _outdir(cfg)
    if "sweep_csv" in c:
        try:
            sweep = calibration.RamseySweep.from_csv(Path(c["sweep_csv"]).read_text())
        except (OSError, ValueError) as exc:
            raise ConfigError(f"cannot read sweep: {exc}") from exc
    else:
        times = None
        if "t_max" in c or "n_times" in c:
            times = np.linspace(0, c.get("t_max", 3e-6), c.get("n_times", 301))
        sweep = calibration.synthetic_sweep(
            c.get("chi", calibration.CHI), c.get("s", calibration.SCALE), c.get("amplitudes_z"),
            times, c.get("t2", calibration.T2), c.get("f0", 0.0), c.get("noise", 0.0),
            cfg.master_seed)
    (out / "sweep.csv").write_text(sweep.to_csv(), encoding="utf-8", newline="")
    res = calibration.fit_and_extract(sweep, c.get("max_rms", 0.05))
    d = json.loads(res.to_json())
    if sweep.truth:
        d["truth"] = sweep.truth
        d["chi_rel_error"] = res.chi / sweep.truth["chi"] - 1
        d["s_rel_error"] = res.s / sweep.truth["s"] - 1
    qio.write_json(out / "fit.json", d)
    print(f"chi/2pi = {res.chi / 2 / np.pi:.6g} Hz, s = {res.s:.6g}")
    return res


# ----------------------------------------------------------- gen-dataset

def cmd_gen_dataset(cfg):
    out = _outdir(cfg)
    tr, te = tasks.train_test(cfg.task, cfg.train.size, cfg.master_seed)
    for ds in (tr, te):
        (out / f"dataset_{ds.role}.csv").write_text(ds.to_csv(), encoding="utf-8", newline="")
        (out / f"dataset_{ds.role}.json").write_text(ds.to_json() + "\n", encoding="utf-8")
    return tr, te


COMMANDS = {
    "train": cmd_train,
    "benchmark": cmd_benchmark,
    "landscape": cmd_landscape,
    "calibrate": cmd_calibrate,
    "gen-dataset": cmd_gen_dataset,
}


def build_parser():
    ap = argparse.ArgumentParser(prog="qcds", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", type=Path, default=None, help="JSON run configuration")
        p.add_argument("--seed", type=int, default=None, help="override master_seed")
        p.add_argument("--jobs", type=int, default=None, help="worker processes")
        p.add_argument("--fidelity", choices=sorted(FIDELITY_FLAG), default=None)
        p.add_argument("--output-dir", default=None)
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        cfg = qio.load_config(args.config)
        if args.seed is not None:
            cfg.master_seed = args.seed
        if args.jobs is not None:
            cfg.jobs = max(1, args.jobs)
        if args.fidelity is not None:
            cfg.protocol = replace(cfg.protocol, fidelity=FIDELITY_FLAG[args.fidelity])
        if args.output_dir is not None:
            cfg.output_dir = args.output_dir
        COMMANDS[args.command](cfg)
    except (ConfigError, calibration.FitDiverged) as exc:
        print(f"qcds {args.command}: error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
