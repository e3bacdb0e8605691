import json

import pytest

from qcds import cli
from qcds import io as qio
from qcds.exceptions import ConfigError

SMALL_TRAIN = {"epochs": 5, "restarts": 1, "size": 16, "eval_every": 2}


def write_cfg(tmp_path, name="cfg.json", **extra):
    d = {"schema_version": 1}
    d.update(extra)
    p = tmp_path / name
    p.write_text(json.dumps(d))
    return p


def run(cfg_path, command, out, *flags):
    return cli.main([command, "--config", str(cfg_path), "--output-dir", str(out), *flags])


def snapshot(folder):
    return {p.name: p.read_bytes() for p in sorted(folder.iterdir())}


def test_gen_dataset_deterministic(tmp_path):
    cfg = write_cfg(tmp_path, task={"kind": "spiral", "W": 2.0}, train={"size": 32})
    assert run(cfg, "gen-dataset", tmp_path / "a") == 0
    assert run(cfg, "gen-dataset", tmp_path / "b") == 0
    a, b = snapshot(tmp_path / "a"), snapshot(tmp_path / "b")
    assert a == b and set(a) == {"dataset_train.csv", "dataset_test.csv",
                                 "dataset_train.json", "dataset_test.json"}
    assert run(cfg, "gen-dataset", tmp_path / "c", "--seed", "9") == 0
    assert snapshot(tmp_path / "c") != a


def test_train_one_report_per_depth(tmp_path):
    cfg = write_cfg(tmp_path, train=SMALL_TRAIN, depths=[1, 2],
                    task={"kind": "spiral", "W": 1.0, "r_max": 3.0})
    assert run(cfg, "train", tmp_path / "a") == 0
    files = snapshot(tmp_path / "a")
    for d in (1, 2):
        assert {f"train_report_N{d}.json", f"checkpoint_N{d}.json", f"accuracy_N{d}.csv"} <= set(files)
    rep = json.loads(files["train_report_N2.json"])
    assert rep["depth"] == 2 and len(rep["accuracy_history"]) == 6
    assert run(cfg, "train", tmp_path / "b") == 0
    assert snapshot(tmp_path / "b") == files


def test_train_pulse_fidelity_flag(tmp_path):
    cfg = write_cfg(tmp_path, train={"epochs": 2, "restarts": 1, "size": 8},
                    protocol={"depth": 1, "n_fock": 30}, task={"kind": "spiral", "r_max": 2.0})
    assert run(cfg, "train", tmp_path / "o", "--fidelity", "pulse") == 0
    rep = json.loads((tmp_path / "o" / "train_report_N1.json").read_text())
    assert rep["fidelity"] == "pulse_level"


def test_landscape_from_checkpoint(tmp_path):
    cfg = write_cfg(tmp_path, train=SMALL_TRAIN, task={"kind": "spiral", "r_max": 3.0})
    assert run(cfg, "train", tmp_path / "t") == 0
    lcfg = write_cfg(tmp_path, "l.json", landscape={
        "checkpoint": str(tmp_path / "t" / "checkpoint_N1.json"), "n_radial": 4, "n_azimuthal": 6,
        "shots": 16})
    assert run(lcfg, "landscape", tmp_path / "a") == 0
    assert run(lcfg, "landscape", tmp_path / "b") == 0
    assert snapshot(tmp_path / "a") == snapshot(tmp_path / "b")
    rows = (tmp_path / "a" / "landscape.csv").read_bytes().decode().strip().split("\r\n")
    assert rows[0] == "r,phi,alpha_x,alpha_p,p_e" and len(rows) == 25


def test_landscape_needs_checkpoint(tmp_path, capsys):
    cfg = write_cfg(tmp_path)
    assert run(cfg, "landscape", tmp_path / "o") == 2
    assert "checkpoint" in capsys.readouterr().err


def test_benchmark_table(tmp_path):
    cfg = write_cfg(tmp_path, train=SMALL_TRAIN, mlp={"epochs": 3},
                    benchmark={"W": [0.5, 1.0], "protocols": ["qcds", "cat", "heterodyne_ideal"],
                               "size": 16, "depths": [1]})
    assert run(cfg, "benchmark", tmp_path / "a") == 0
    text = (tmp_path / "a" / "benchmark.csv").read_bytes().decode()
    lines = text.strip().split("\r\n")
    assert lines[0] == "protocol,W,accuracy,stderr" and len(lines) == 7
    errs = json.loads((tmp_path / "a" / "benchmark_errors.json").read_text())
    assert errs["errors"] == []
    assert run(cfg, "benchmark", tmp_path / "b") == 0
    assert snapshot(tmp_path / "a") == snapshot(tmp_path / "b")


def test_benchmark_isolates_failures(tmp_path):
    cfg = write_cfg(tmp_path, mlp={"epochs": 2},
                    benchmark={"W": [1.0], "protocols": ["bogus", "constant"], "size": 16})
    assert run(cfg, "benchmark", tmp_path / "a") == 0
    errs = json.loads((tmp_path / "a" / "benchmark_errors.json").read_text())["errors"]
    assert [e["protocol"] for e in errs] == ["bogus"]
    assert "constant" in (tmp_path / "a" / "benchmark.csv").read_bytes().decode()


def test_calibrate_defaults_and_determinism(tmp_path):
    cfg = write_cfg(tmp_path, calibration={"noise": 0.01})
    assert run(cfg, "calibrate", tmp_path / "a") == 0
    fit = json.loads((tmp_path / "a" / "fit.json").read_text())
    assert abs(fit["chi_rel_error"]) < 0.05 and abs(fit["s_rel_error"]) < 0.05
    assert run(cfg, "calibrate", tmp_path / "b") == 0
    assert snapshot(tmp_path / "a") == snapshot(tmp_path / "b")
    # the written sweep can be fed back in
    cfg2 = write_cfg(tmp_path, "c2.json", calibration={"sweep_csv": str(tmp_path / "a" / "sweep.csv")})
    assert run(cfg2, "calibrate", tmp_path / "c") == 0
    again = json.loads((tmp_path / "c" / "fit.json").read_text())
    assert again["chi"] == pytest.approx(fit["chi"], rel=1e-9)


def test_calibrate_malformed_sweep(tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("nonsense\n1,2\n")
    cfg = write_cfg(tmp_path, calibration={"sweep_csv": str(bad)})
    assert run(cfg, "calibrate", tmp_path / "o") != 0


def test_config_errors(tmp_path):
    assert run(write_cfg(tmp_path, colour="red"), "train", tmp_path / "o") == 2
    assert run(write_cfg(tmp_path, train={"epoch": 3}), "train", tmp_path / "o") == 2
    p = tmp_path / "v.json"
    p.write_text(json.dumps({"schema_version": 2}))
    assert run(p, "train", tmp_path / "o") == 2
    p.write_text("{not json")
    assert run(p, "train", tmp_path / "o") == 2
    assert cli.main(["train", "--config", str(tmp_path / "missing.json")]) == 2


def test_env_overrides(tmp_path):
    cfg = qio.load_config(write_cfg(tmp_path), env={"QCDS_OUTPUT_DIR": "x", "QCDS_JOBS": "3"})
    assert cfg.output_dir == "x" and cfg.jobs == 3
    with pytest.raises(ConfigError):
        qio.load_config(write_cfg(tmp_path), env={"QCDS_JOBS": "many"})


def test_checkpoint_schema_checked(tmp_path):
    p = tmp_path / "ck.json"
    p.write_text(json.dumps({"schema": "qcds.checkpoint/2", "params": {}}))
    with pytest.raises(ConfigError):
        qio.read_checkpoint(p)


def test_csv_and_json_formats():
    assert qio.csv_text(["a", "b"], [(0.1, "x")]) == "a,b\r\n0.1,x\r\n"
    assert qio.dump_json({"b": 1, "a": float("nan")}) == '{\n "a": null,\n "b": 1\n}\n'
