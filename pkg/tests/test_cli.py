import csv
import json
import subprocess
import sys

import numpy as np
import pytest

from darwinism.cli import build_parser, main, resolve_config
from darwinism.linalg import X01, Z2
from darwinism.modelio import ModelParseError, load_model, model_from_dict, model_to_dict, parse_op
from darwinism.presets import preset


@pytest.mark.parametrize("name,code", [("A", 0), ("D", 2), ("K", 3), ("demon", 2)])
def test_classify_exit_codes(name, code, capsys):
    n = ["--n-env", "10"] if name in ("K", "demon") else []
    assert main(["classify", "--preset", name, *n]) == code
    assert "verdict:" in capsys.readouterr().out


def test_classify_prints_pointer_and_witness(capsys):
    main(["classify", "--preset", "A"])
    out = capsys.readouterr().out
    assert "pointer basis" in out and "supports_QD" in out
    main(["classify", "--preset", "D", "--n-env", "2"])
    assert "mixing witness" in capsys.readouterr().out


def test_classify_json_report(tmp_path):
    out = tmp_path / "r.json"
    assert main(["classify", "--preset", "K", "--n-env", "10", "--out", str(out)]) == 3
    report = json.loads(out.read_text())
    assert report["verdict"]["schedule_prefix_cutoff"] == 5.0


def test_usage_and_cap_errors(tmp_path, capsys):
    with pytest.raises(SystemExit) as exc:
        main(["classify", "--bogus"])
    assert exc.value.code == 64
    assert main(["classify"]) == 64
    assert main(["classify", "--preset", "A", "--n-env", "20"]) == 65
    assert main(["simulate", "--preset", "A", "--n-env", "2", "--trials", "0", "--out", str(tmp_path / "x.csv")]) == 65
    assert main(["classify", "--preset", "A", "--param", "novalue"]) == 64
    assert main(["simulate", "--preset", "A", "--fragment-sampler", "most", "--out", str(tmp_path / "y.csv")]) == 64
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert main(["classify", "--model-file", str(bad)]) == 64
    assert main(["classify", "--preset", "A", "--config", str(bad)]) == 64
    capsys.readouterr()


def test_config_precedence(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"trials": 7, "seed": 3, "epsilon": 0.2, "preset": "B"}))
    args = build_parser().parse_args(["simulate", "--config", str(cfg), "--seed", "9", "--param", "sigma_J=2"])
    config = resolve_config(args)
    assert config["trials"] == 7  # from file
    assert config["seed"] == 9  # flag beats file
    assert config["epsilon"] == 0.2 and config["preset"] == "B"
    assert config["t_points"] == 100  # default
    assert config["params"] == {"sigma_J": 2}


def test_unknown_config_key(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"trails": 7}))
    assert main(["simulate", "--preset", "A", "--config", str(cfg)]) == 64


def test_simulate_csv_is_reproducible(tmp_path):
    argv = ["simulate", "--preset", "E", "--n-env", "3", "--trials", "2", "--t-max", "2", "--t-points", "3"]
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert main(argv + ["--out", str(a), "--workers", "1"]) == 0
    assert main(argv + ["--out", str(b), "--workers", "2"]) == 0
    assert a.read_bytes() == b.read_bytes()
    meta = json.loads((tmp_path / "a.csv.meta.json").read_text())
    assert meta["config"]["trials"] == 2


def test_sweep_writes_summary(tmp_path):
    out = tmp_path / "sw"
    argv = ["sweep", "--preset", "qubit", "--n-env", "3", "--axis", "distribution_kind", "--t-max", "3",
            "--t-points", "7", "--trials", "2", "--out", str(out), "--workers", "1"]
    assert main(argv) == 0
    with open(out / "summary.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert [r["value"] for r in rows] == ["normal", "rademacher"]
    assert "max_gamma2_after_t2" in rows[0]
    assert (out / "normal.csv").exists() and (out / "rademacher.csv.meta.json").exists()


def test_sweep_replaced_unit_requires_collision_preset(tmp_path):
    assert main(["sweep", "--preset", "A", "--axis", "replaced_unit_index", "--out", str(tmp_path)]) == 64


def test_model_file_round_trip(tmp_path):
    model = preset("H", 3)
    path = tmp_path / "m.json"
    path.write_text(json.dumps(model_to_dict(model)))
    back = load_model(path)
    assert back.layout.dims == model.layout.dims
    for a, b in zip(back.term_operators(), model.term_operators()):
        assert abs(a - b).max() < 1e-12 if (a - b).nnz else True
    assert main(["classify", "--model-file", str(path)]) == 0


def test_model_file_operators():
    assert np.array_equal(parse_op("pauli_z", 2), np.diag([1, -1]))
    assert np.array_equal(parse_op([[0, [0, -1]], [[0, 1], 0]], 2), np.array([[0, -1j], [1j, 0]]))
    summed = parse_op({"sum": [{"coef": 1, "op": "Z2"}, {"coef": 1, "op": "X01"}]}, 3)
    assert np.allclose(summed, Z2 + X01)
    with pytest.raises(ModelParseError):
        parse_op("pauli_w", 2)
    with pytest.raises(ModelParseError):
        parse_op("pauli_z", 3)
    with pytest.raises(ModelParseError):
        model_from_dict({"layout": [2, 2], "interactions": [{"system_op": "pauli_z", "env_site": 5,
                                                              "env_op": "pauli_z"}]})


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "darwinism", "classify", "--preset", "K", "--n-env", "10"],
                          capture_output=True, text=True)
    assert proc.returncode == 3
    assert "cutoff" in proc.stdout or "prefix" in proc.stdout
