import json
from pathlib import Path

import numpy as np
import pytest

from hybridcloud import formats
from hybridcloud.cli import EXIT_CONFIG, EXIT_NUMERIC, EXIT_OK, main
from hybridcloud.statespace import LinearModel, simulate

MODELS = Path(__file__).resolve().parents[1] / "demos" / "models"


def write_model(path, A, B, C=None):
    formats.write_model(path, LinearModel(A, B), C)
    return str(path)


def analysis(capsys):
    out = capsys.readouterr().out
    return dict(line.split(": ", 1) for line in out.splitlines() if ": " in line)


def test_analyze_shipped_stable_model(capsys, tmp_path):
    assert main(["analyze", str(MODELS / "stable_pair.json"), "--out", str(tmp_path)]) == EXIT_OK
    res = analysis(capsys)
    assert res["stability"] == "Stable"
    assert res["controllable"] == "true" and res["observable"] == "true"
    assert res["step_response"] == "OscillatoryConvergent"
    assert float(res["spectral_radius"]) == pytest.approx(np.sqrt(0.5))
    assert (tmp_path / "analysis.csv").read_text().startswith("quantity,value\n")


def test_analyze_identity_is_marginal(capsys):
    assert main(["analyze", str(MODELS / "integrator_pair.json")]) == EXIT_OK
    res = analysis(capsys)
    assert res["stability"] == "Marginal"
    assert res["controllable"] == "false" and res["observable"] == "false"


def test_analyze_malformed_names_key(capsys, tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text('{"n": 2, "m": 1, "A": [[1, 0], [0, 1]], "B": [[1]]}')
    assert main(["analyze", str(bad)]) == EXIT_CONFIG
    assert "'B'" in capsys.readouterr().err


def test_step_scalar_monotone(capsys, tmp_path):
    model = write_model(tmp_path / "m.json", [[0.5]], [[1.0]])
    assert main(["step", model, "--out", str(tmp_path / "o")]) == EXIT_OK
    assert capsys.readouterr().out.strip() == "MonotoneConvergent"
    traj = formats.read_trajectory(tmp_path / "o" / "step.csv")
    assert traj.states[-1, 0] == pytest.approx(2.0)


def test_step_short_horizon_is_numeric_error(tmp_path):
    model = write_model(tmp_path / "m.json", [[0.5]], [[1.0]])
    assert main(["step", model, "--horizon", "3"]) == EXIT_NUMERIC


def test_simulate_horizon_zero(tmp_path):
    model = write_model(tmp_path / "m.json", [[0.5, 0.0], [0.0, 0.5]], [[1.0], [0.0]])
    controls = tmp_path / "u.csv"
    controls.write_text("u1\n")
    out = tmp_path / "o"
    assert main(["simulate", model, str(controls), "--out", str(out), "--x0", "1,2"]) == EXIT_OK
    assert (out / "trajectory.csv").read_text() == "t,x1,x2,u1\n0,1.0,2.0,\n"


def test_simulate_bad_x0(tmp_path):
    model = write_model(tmp_path / "m.json", [[0.5]], [[1.0]])
    controls = tmp_path / "u.csv"
    controls.write_text("u1\n1.0\n")
    assert main(["simulate", model, str(controls), "--out", str(tmp_path / "o"), "--x0", "1,2"]) == EXIT_CONFIG
    assert not (tmp_path / "o").exists()


def test_fit_pipeline_round_trip(tmp_path):
    rng = np.random.default_rng(0)
    A = np.array([[0.6, 0.2], [-0.1, 0.7]])
    B = np.array([[1.0], [0.5]])
    model = write_model(tmp_path / "true.json", A, B)
    controls = tmp_path / "u.csv"
    controls.write_text(formats.controls_csv(rng.normal(size=(50, 1))))
    assert main(["simulate", model, str(controls), "--out", str(tmp_path / "sim"), "--x0", "1,-1"]) == EXIT_OK
    assert main(["fit", str(tmp_path / "sim" / "trajectory.csv"), "--out", str(tmp_path / "fit")]) == EXIT_OK
    fitted, _ = formats.read_model(tmp_path / "fit" / "model.json")
    np.testing.assert_allclose(fitted.A, A, atol=1e-9)
    np.testing.assert_allclose(fitted.B, B, atol=1e-9)
    report = (tmp_path / "fit" / "fit_report.csv").read_text().splitlines()
    assert report[0] == "n,m,transitions,residual_rms,condition_indicator"
    assert report[1].startswith("2,1,50,")


def test_fit_unexcited_is_numeric_error(tmp_path, capsys):
    trace = tmp_path / "zero.csv"
    traj = simulate(LinearModel([[0.5]], [[1.0]]), [0.0], np.zeros((10, 1)))
    trace.write_text(formats.trajectory_csv(traj))
    assert main(["fit", str(trace), "--out", str(tmp_path / "o")]) == EXIT_NUMERIC
    assert "excitation" in capsys.readouterr().err
    assert not (tmp_path / "o").exists()


def test_bench_writes_reports(tmp_path):
    out = tmp_path / "b"
    assert main(["bench", "--profile", "test1", "--out", str(out)]) == EXIT_OK
    for name in ("local.csv", "hybrid.csv", "ratio.csv", "analysis.csv"):
        assert (out / name).exists()
    local = formats.parse_bench_csv((out / "local.csv").read_text())
    assert [r.articles_extracted for r in local] == [100, 200, 300, 400]
    ratio = (out / "ratio.csv").read_text().splitlines()
    assert len(ratio) == 5


def test_bench_config_with_controlled(tmp_path):
    cfg = tmp_path / "run.json"
    cfg.write_text(json.dumps({
        "profile": "test2", "batches": [100, 200],
        "controlled": {"low_watermark": 0.3, "high_watermark": 0.6, "increment": 1,
                       "u_min": 0, "u_max": 1},
        "out": "res"}))
    assert main(["bench", "--config", str(cfg)]) == EXIT_OK
    assert (tmp_path / "res" / "controlled.csv").exists()


def test_bench_topology_file_relative_to_config(tmp_path):
    (tmp_path / "topo.json").write_text(json.dumps({"local_cpu_per_article_ms": 100.0}))
    cfg = tmp_path / "run.json"
    cfg.write_text(json.dumps({"topology": "topo.json", "batches": [10, 20], "out": "res"}))
    assert main(["bench", "--config", str(cfg)]) == EXIT_OK
    rows = formats.parse_bench_csv((tmp_path / "res" / "local.csv").read_text())
    assert [r.total_time_s for r in rows] == [1.0, 2.0]


@pytest.mark.parametrize("doc", [
    {"batches": []},
    {"batches": [0, 100]},
    {"batches": [100], "topology": "missing.json"},
    {"batches": [100], "profile": "test9"},
    {"batches": [100], "speed": "fast"},
])
def test_bench_config_errors_leave_no_files(tmp_path, doc, capsys):
    cfg = tmp_path / "run.json"
    cfg.write_text(json.dumps(doc))
    out = tmp_path / "out"
    assert main(["bench", "--config", str(cfg), "--out", str(out)]) == EXIT_CONFIG
    assert not out.exists() or not any(out.iterdir())
    assert capsys.readouterr().err.startswith("error:")


def test_bench_byte_identical(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["bench", "--profile", "test2", "--seed", "7", "--out", str(a)]) == EXIT_OK
    assert main(["bench", "--profile", "test2", "--seed", "7", "--out", str(b)]) == EXIT_OK
    for name in sorted(p.name for p in a.iterdir()):
        assert (a / name).read_bytes() == (b / name).read_bytes()
