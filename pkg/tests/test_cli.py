import json
import math

import numpy as np
import pytest

from reggeflow.cli import main
from reggeflow.complex import build_16cell
from reggeflow.metric import metric_to_json, uniform_metric

R_TRIVIAL = 2 * math.pi - 4 * math.acos(1.0 / 3.0)


def run(argv, capsys):
    code = main(argv)
    out, err = capsys.readouterr()
    return code, out, err


def test_curvature_uniform(capsys):
    code, out, _ = run(["curvature", "--builtin", "16cell", "--uniform", "1"], capsys)
    assert code == 0
    doc = json.loads(out)
    np.testing.assert_allclose(list(doc["R"].values()), R_TRIVIAL, atol=1e-12)
    assert len(doc["R"]) == 24


def test_curvature_fixture_metric(capsys):
    code, out, _ = run(["curvature", "--fixed-point", "1"], capsys)
    assert code == 0 and json.loads(out)["residual"] <= 1e-3


def test_curvature_metric_file(tmp_path, capsys):
    from reggeflow.fixtures import fixture_text

    path = tmp_path / "fp1.json"
    path.write_text(fixture_text("fixedpoint1.json"))
    code, out, _ = run(["curvature", "--builtin", "16cell", "--metric", str(path)], capsys)
    assert code == 0 and json.loads(out)["residual"] <= 1e-3


def test_missing_metric_key(tmp_path, capsys):
    tri = build_16cell()
    doc = json.loads(metric_to_json(tri, uniform_metric(tri)))
    del doc["edges"]["A2-C1"]
    path = tmp_path / "m.json"
    path.write_text(json.dumps(doc))
    code, _, err = run(["curvature", "--metric", str(path)], capsys)
    assert code == 2
    assert "A2-C1" in err


def test_inadmissible_metric_names_tet(tmp_path, capsys):
    tri = build_16cell()
    g = uniform_metric(tri)
    g[tri.edge_index("A1", "B1")] = 100.0
    path = tmp_path / "m.json"
    path.write_text(metric_to_json(tri, g))
    code, _, err = run(["curvature", "--metric", str(path)], capsys)
    assert code == 2
    assert "A1B1C1D1" in err


def test_bad_triangulation_is_usage_error(tmp_path, capsys):
    path = tmp_path / "t.json"
    path.write_text('{"vertices": ["A"]}')
    code, _, err = run(["curvature", "--triangulation", str(path)], capsys)
    assert code == 1 and "tetrahedra" in err


def test_unknown_option_is_usage_error(capsys):
    with pytest.raises(SystemExit) as info:
        main(["curvature", "--bogus"])
    assert info.value.code == 1


def test_boundary_complex_flow_exit_3(tmp_path, capsys):
    path = tmp_path / "tet.json"
    path.write_text('{"vertices":["A","B","C","D"],"tetrahedra":[["A","B","C","D"]]}')
    code, _, err = run(["flow", "--triangulation", str(path)], capsys)
    assert code == 3 and "closed" in err


def test_flow_trivial_converges(tmp_path, capsys):
    out = tmp_path / "traj.csv"
    code, _, _ = run(["flow", "--uniform", "1", "--out", str(out)], capsys)
    assert code == 0
    final = json.loads((tmp_path / "traj.final.json").read_text())
    assert final["status"] == "Converged"
    assert final["residual"] <= 1e-8
    manifest = json.loads((tmp_path / "traj.csv.manifest.json").read_text())
    assert manifest["command"] == "flow" and manifest["prng"] == "splitmix64"
    assert manifest["config"]["rtol"] == 1e-8


def test_flow_alpha_one_trivial(capsys):
    code, out, _ = run(["flow", "--alpha", "1", "--normalized"], capsys)
    assert code == 0 and json.loads(out)["status"] == "Converged"


def test_flow_perturbed_trivial_degenerates(capsys):
    # the trivial metric is a saddle, so nearby starts leave it
    code, out, _ = run(["flow", "--perturb", "0.05", "--seed", "3", "--t-max", "5"], capsys)
    assert code == 0
    assert json.loads(out)["status"] in ("Singular", "StepUnderflow")


def test_stability_reports(capsys):
    code, out, _ = run(["stability", "--fixed-point", "1"], capsys)
    assert code == 0
    doc = json.loads(out)
    assert {"lambda_inf", "lambda_star", "stable"} <= set(doc)
    code, out, _ = run(["stability", "--uniform", "1"], capsys)
    assert code == 0 and "lambda_inf" in json.loads(out)


def test_stability_gate_exit_4(capsys):
    code, _, err = run(["stability", "--fixed-point", "1", "--alpha", "2", "--gate", "1e-9"], capsys)
    assert code == 4 and "measured residual" in err


def test_minimize_trivial(capsys):
    code, out, _ = run(["minimize-q", "--seeds", "0"], capsys)
    assert code == 0
    doc = json.loads(out)
    assert doc["Q_min"] == pytest.approx(24 * R_TRIVIAL / 24 ** (1 / 3))
    assert doc["statuses"] == {"converged": 1}


def test_minimize_seeds(capsys):
    code, out, _ = run(["minimize-q", "--seeds", "3", "--max-iters", "30", "--sigma", "0.2"], capsys)
    assert code == 0
    doc = json.loads(out)
    assert len(doc["runs"]) == 3
    assert doc["Q_min"] <= doc["Q_median"]
    assert all(r["Q_min"] <= r["Q_start"] for r in doc["runs"])


def test_emit_builtin_roundtrip(tmp_path, capsys):
    out = tmp_path / "16.json"
    assert main(["emit-builtin", "--out", str(out)]) == 0
    code, text, _ = run(["curvature", "--triangulation", str(out)], capsys)
    assert code == 0 and len(json.loads(text)["R"]) == 24


def test_runs_reproducible_from_manifest(tmp_path, monkeypatch, capsys):
    argv = ["flow", "--perturb", "0.05", "--seed", "9", "--t-max", "0.05", "--out", "traj.csv"]
    outputs = []
    for name in ("a", "b"):
        d = tmp_path / name
        d.mkdir()
        monkeypatch.chdir(d)
        if name == "b":
            argv = json.loads((tmp_path / "a" / "traj.csv.manifest.json").read_text())["argv"]
        assert main(argv) == 0
        outputs.append(((d / "traj.csv").read_bytes(), (d / "traj.final.json").read_bytes()))
    assert outputs[0] == outputs[1]


def test_written_metric_roundtrips_curvature(tmp_path, capsys):
    # final metric JSON -> curvature gives the same bytes as the original metric
    tri = build_16cell()
    g = uniform_metric(tri, 2.0) * np.exp(np.linspace(-0.1, 0.1, 24))
    p1 = tmp_path / "m1.json"
    p1.write_text(metric_to_json(tri, g))
    _, first, _ = run(["curvature", "--metric", str(p1)], capsys)
    p2 = tmp_path / "m2.json"
    p2.write_text(json.dumps({"edges": json.loads(p1.read_text())["edges"]}))
    _, second, _ = run(["curvature", "--metric", str(p2)], capsys)
    assert first == second
