import json
import math
from pathlib import Path

import pytest

from medgeom.cli import main, read_sim_config
from medgeom.dataset import synthetic_survey_path

GOLDEN = Path(__file__).parent / "golden"
DATA = str(synthetic_survey_path())


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def assert_same_shape(got, want):
    if isinstance(want, dict):
        assert set(got) == set(want)
        for k in want:
            assert_same_shape(got[k], want[k])
    elif isinstance(want, float):
        assert got == pytest.approx(want, rel=1e-12, abs=1e-15)
    else:
        assert got == want


@pytest.mark.parametrize("golden, argv", [
    ("witness_n50_a05_dplementary.json",
     ["geometry", "witness", "--n", "50", "--alpha", "0.05", "--subtype", "d-plementary", "--json"]),
    ("critical_n50_a05.json", ["geometry", "critical", "--n", "50", "--alpha", "0.05", "--json"]),
])
def test_geometry_json_matches_golden(capsys, golden, argv):
    code, out, _ = run(capsys, *argv)
    assert code == 0
    assert_same_shape(json.loads(out), json.loads((GOLDEN / golden).read_text()))


def test_witness_claims_all_hold(capsys):
    for argv in (["--kind", "indirect-only", "--subtype", "d-petitive"],
                 ["--kind", "competitive", "--sign-abc", "-1"],
                 ["--kind", "sobel-io"]):
        code, out, _ = run(capsys, "geometry", "witness", "--n", "120", "--alpha", "0.1", "--json", *argv)
        assert code == 0
        assert all(json.loads(out)["claims"].values())


def test_unknown_flag_is_usage_error(capsys):
    code, _, err = run(capsys, "fit", "--bogus")
    assert code == 1 and "usage" in err.lower()
    assert run(capsys)[0] == 1
    assert run(capsys, "fit", "--data", DATA, "--y", "PA", "--m", "PD", "--x", "SM", "--alpha", "1.5")[0] == 1


def test_missing_file_and_bad_column_are_data_errors(capsys, tmp_path):
    assert run(capsys, "fit", "--data", str(tmp_path / "none.csv"), "--y", "Y", "--m", "M", "--x", "X")[0] == 2
    assert run(capsys, "fit", "--data", DATA, "--y", "nope", "--m", "PD", "--x", "SM")[0] == 2
    assert run(capsys, "geometry", "critical", "--n", "3", "--alpha", "0.05")[0] == 2


def test_fit_then_classify_from_json(capsys, tmp_path):
    out_path = tmp_path / "fit.json"
    code, out, _ = run(capsys, "fit", "--data", DATA, "--y", "PA", "--m", "PD", "--x", "SM",
                       "--control", "Age", "--range", "PA=0:500", "--range", "PD=0:4", "--range", "SM=0:3",
                       "--range", "Age=0:100", "--json", "--out", str(out_path))
    assert code == 0
    payload = json.loads(out)
    assert json.loads(out_path.read_text()) == payload
    assert payload["fit"]["n_used"] > 3000
    fit_file = tmp_path / "only_fit.json"
    fit_file.write_text(json.dumps(payload["fit"]))
    code, out, _ = run(capsys, "classify", "--fit-json", str(fit_file), "--json")
    assert code == 0
    assert json.loads(out)["verdict"] == payload["verdict"]


def test_classify_reported_survey_statistics(capsys, tmp_path):
    fit_file = tmp_path / "model1.json"
    fit_file.write_text(json.dumps({"a_hat": 0.1631, "b_hat": 0.1012, "d_hat": -0.0167, "c_hat": 0.000014,
                                    "p_a": 0.0005, "p_b": 0.0005, "p_d": 0.6411, "p_c": 0.9997}))
    code, out, _ = run(capsys, "classify", "--fit-json", str(fit_file))
    assert code == 0
    assert "directionally competitive indirect-only" in out
    code, out, _ = run(capsys, "classify", "--fit-json", str(fit_file), "--json")
    v = json.loads(out)
    assert v["verdict"]["erroneous_rejection"] is True
    assert v["contributions"]["cp_ab"] == pytest.approx(1179.0, rel=0.01)


def test_classify_rejects_unknown_fields(capsys, tmp_path):
    fit_file = tmp_path / "bad.json"
    fit_file.write_text(json.dumps({"a_hat": 1, "zeta": 2}))
    assert run(capsys, "classify", "--fit-json", str(fit_file))[0] == 2


def test_reduce_and_describe(capsys):
    code, out, _ = run(capsys, "reduce", "--data", DATA, "--y", "PA", "--m", "PD", "--x", "SM", "--json")
    assert code == 0
    d = json.loads(out)
    assert d["coords"]["x2"] > 0 and d["point"]["r"] >= 0
    code, out, _ = run(capsys, "describe", "--data", DATA, "--var", "SM:treatment:0:3", "--var", "PA:outcome:0:500",
                       "--format", "json")
    assert code == 0
    rows = json.loads(out)["rows"]
    assert [r["variable"] for r in rows] == ["SM", "PA"]
    code, out, _ = run(capsys, "describe", "--data", DATA, "--var", "SM:treatment:0:3")
    assert code == 0 and "SM" in out


def test_scan_and_boundary(capsys):
    code, out, _ = run(capsys, "geometry", "scan", "--n", "20", "--alpha", "0.1", "--density", "100", "--json")
    assert code == 0 and json.loads(out)["violations"] == 0
    code, out, _ = run(capsys, "geometry", "boundary", "--n", "20", "--alpha", "0.1", "--r", "0.5",
                       "--p-max", "2", "--count", "11")
    assert code == 0 and len(out.strip().splitlines()) == 12


def test_simulate_with_config_file(capsys, tmp_path):
    cfg = tmp_path / "sim.txt"
    cfg.write_text("# small study\nreplicates = 20\nseed = 4\nalpha_count = 30\nframeworks = LSE-F, LSE-Sobel\n")
    assert read_sim_config(cfg)["frameworks"] == "LSE-F, LSE-Sobel"
    out_dir = tmp_path / "res"
    code, out, err = run(capsys, "simulate", "--config", str(cfg), "--set", "seed=5", "--out", str(out_dir),
                         "--format", "both", "--json")
    assert code == 0
    summary = json.loads(out)
    assert summary["replicates"] == 20
    assert "replicates 20/20" in err
    report = json.loads((out_dir / "report.json").read_text())
    assert report["config"]["seed"] == 5 and report["config"]["frameworks"] == ["LSE-F", "LSE-Sobel"]
    assert (out_dir / "curves.csv").exists() and (out_dir / "curves_meta.json").exists()
    # flags win over the config file
    code, out, _ = run(capsys, "simulate", "--config", str(cfg), "--replicates", "3", "--out", str(out_dir),
                       "--quiet", "--json")
    assert code == 0 and json.loads(out)["replicates"] == 3


def test_simulate_is_deterministic(capsys, tmp_path):
    cfg = tmp_path / "sim.json"
    cfg.write_text(json.dumps({"replicates": 8, "seed": 11, "alpha_count": 10, "frameworks": ["LSE-F"]}))
    outs = []
    for k in range(2):
        d = tmp_path / f"r{k}"
        assert run(capsys, "simulate", "--config", str(cfg), "--out", str(d), "--quiet")[0] == 0
        outs.append((d / "report.json").read_text())
    assert outs[0] == outs[1]


def test_simulate_bad_setting(capsys, tmp_path):
    assert run(capsys, "simulate", "--set", "replicate=3", "--out", str(tmp_path))[0] == 2
    assert run(capsys, "simulate", "--set", "noequals", "--out", str(tmp_path))[0] == 1


def test_json_output_has_no_nan(capsys):
    code, out, _ = run(capsys, "fit", "--data", DATA, "--y", "PA", "--m", "PD", "--x", "SM", "--framework",
                       "LAD-Z", "--json")
    assert code == 0
    fit = json.loads(out)["fit"]
    assert fit["framework"] == "LAD-Z"
    assert all(v is None or not (isinstance(v, float) and math.isnan(v)) for v in fit.values())
