import json
import os

import pytest

from rwpot import cli
from rwpot import solver as solver_mod
from rwpot.errors import AssumptionError, ParameterError
from rwpot.harness import (EXPERIMENTS, ExperimentConfig, oracle_check, run)

TP_JSON = {"kind": "TwoPoint",
           "params": {"v_lo": 0.2, "v_hi": 1.0, "p_hi": 0.5}}


def _config(experiment, seed=1, geometry=None, sampling=None, **kw):
    sampling = dict(sampling or {})
    sampling.setdefault("seed", seed)
    return ExperimentConfig.from_json({
        "experiment": experiment,
        "spec": TP_JSON,
        "geometry": geometry or {},
        "sampling": sampling,
        **kw,
    })


def test_config_validation_names_offending_field():
    with pytest.raises(ParameterError, match="experiment"):
        ExperimentConfig.from_json({"experiment": "fly", "spec": TP_JSON,
                                    "sampling": {"seed": 1}})
    with pytest.raises(ParameterError, match="sampling.seed"):
        ExperimentConfig.from_json({"experiment": "solve", "spec": TP_JSON})
    with pytest.raises(ParameterError, match="sampling.seed"):
        ExperimentConfig.from_json({"experiment": "solve", "spec": TP_JSON,
                                    "sampling": {"seed": 1.5}})
    with pytest.raises(ParameterError, match="spec"):
        ExperimentConfig.from_json({"experiment": "solve"})


def test_config_round_trip(tmp_path):
    cfg = _config("tails", seed=9, geometry={"x": [3, 0]},
                  sampling={"samples": 10, "seed": 9})
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(cfg.to_json()))
    loaded = ExperimentConfig.from_file(path)
    assert loaded.to_json() == cfg.to_json()


def test_solve_run_writes_expected_value(tmp_path):
    import math

    from rwpot.lattice import BoxRegion
    from rwpot.potential import DistributionSpec, sample_field

    # two-site region: forced single step, e(0) = e^{-omega(0)}/(2d) exactly
    cfg = _config("solve", geometry={"x": [1, 0],
                                     "sites": [[0, 0], [1, 0]]})
    manifest = run(cfg, out_dir=tmp_path)
    assert manifest.all_passed()
    lines = (tmp_path / "solve.csv").read_text().splitlines()
    assert lines[0] == "z1,z2,e_value"
    field = sample_field(DistributionSpec.from_json(TP_JSON),
                         BoxRegion((0, 0), (2, 1)), cfg.seed)
    expected = math.exp(-field.value_at((0, 0))) / 4.0
    values = {tuple(row.split(",")[:2]): float(row.split(",")[2])
              for row in lines[1:]}
    assert values[("0", "0")] == pytest.approx(expected, abs=1e-15)
    assert values[("1", "0")] == 1.0
    names = {f["name"] for f in manifest.files}
    assert names == {"solve.csv", "solve.json"}


def test_manifest_schema_and_reproducibility(tmp_path):
    cfg = _config("tails", geometry={"x": [3, 0]},
                  sampling={"samples": 40, "seed": 5})
    m1 = run(cfg, out_dir=tmp_path / "a")
    bytes1 = (tmp_path / "a" / "tails.csv").read_bytes()
    m2 = run(cfg, out_dir=tmp_path / "b", threads=8)
    bytes2 = (tmp_path / "b" / "tails.csv").read_bytes()
    assert bytes1 == bytes2  # same config, any thread count: identical bytes
    obj = json.loads((tmp_path / "a" / "manifest.json").read_text())
    assert set(obj) == {"config_hash", "code_version", "experiment", "seed",
                        "runtime_seconds", "assertions", "files",
                        "format_version", "warnings"}
    assert m1.config_hash == m2.config_hash
    assert obj["seed"] == 5 and obj["experiment"] == "tails"
    for f in obj["files"]:
        assert len(f["sha256"]) == 64


def test_run_refuses_by_assumption_name(tmp_path):
    cfg = ExperimentConfig.from_json({
        "experiment": "tails",
        "spec": {"kind": "LogNormal", "params": {"mu": 0.0, "sigma": 1.0}},
        "geometry": {"x": [3, 0]},
        "sampling": {"samples": 5, "seed": 1},
    })
    with pytest.raises(AssumptionError) as err:
        run(cfg, out_dir=tmp_path)
    assert err.value.name == "A1"
    cfg.override_assumptions = True
    assert run(cfg, out_dir=tmp_path).experiment == "tails"


def test_oracle_check_passes_and_detects_corruption(tmp_path):
    battery = [{"seed": 11, "x": [2, 1], "radius": 3, "L": 24,
                "episodes": 4000}]
    cfg = _config("oracle-check", sampling={"seed": 1, "battery": battery})
    report, assertions, _, warn = oracle_check(cfg)
    assert assertions == {"all_sandwich_ok": True, "all_mc_ok": True}
    assert not warn
    solver_mod._MATRIX_CORRUPTION = -1e-4
    try:
        _, bad, _, _ = oracle_check(cfg)
    finally:
        solver_mod._MATRIX_CORRUPTION = None
    assert not bad["all_sandwich_ok"]


def test_oracle_check_empty_battery_warns_vacuous(tmp_path):
    cfg = _config("oracle-check", sampling={"seed": 1, "battery": []})
    with pytest.warns(UserWarning, match="vacuous"):
        manifest = run(cfg, out_dir=tmp_path)
    assert manifest.all_passed()
    assert any("vacuous" in w for w in manifest.warnings)


def test_cli_exit_codes(tmp_path, capsys):
    out = str(tmp_path / "run")
    code = cli.main(["--out", out, "--seed", "2", "solve"])
    assert code == 0
    captured = capsys.readouterr()
    assert "pass" in captured.out
    assert os.path.exists(os.path.join(out, "manifest.json"))

    cfg_path = tmp_path / "ln.json"
    cfg_path.write_text(json.dumps({
        "experiment": "tails",
        "spec": {"kind": "LogNormal", "params": {"mu": 0.0, "sigma": 1.0}},
        "geometry": {"x": [3, 0]},
        "sampling": {"samples": 5, "seed": 1},
    }))
    code = cli.main(["--config", str(cfg_path), "--out", str(tmp_path / "r2"),
                     "tails"])
    assert code == 3
    assert "refused: (A1)" in capsys.readouterr().err
    code = cli.main(["--config", str(cfg_path), "--out", str(tmp_path / "r3"),
                     "--override-assumptions", "tails"])
    assert code == 0


def test_cli_default_configs_cover_every_experiment():
    for name in EXPERIMENTS:
        cfg = cli.default_config(name)
        assert cfg.experiment == name
        assert cfg.seed == 1
