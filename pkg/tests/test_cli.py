import json

import numpy as np
import pytest

from liespin.cli import dumps, main
from liespin.scene import bundled_scene_path


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def run_json(capsys, *argv):
    code, out, err = run(capsys, *argv, "--json")
    return code, json.loads(out), err


@pytest.fixture
def const_spinor_scene(tmp_path):
    data = json.loads(bundled_scene_path("minkowski.json").read_text())
    data["spinor"] = {"re": ["1", "2", "0", "-1"], "im": ["0", "1", "3", "0"]}
    path = tmp_path / "const.json"
    path.write_text(json.dumps(data))
    return path


def test_killing_boost_passes(capsys):
    code, doc, _ = run_json(capsys, "check-killing", "minkowski.json", "--field", "boost01")
    assert code == 0
    assert doc["ok"] is True
    assert doc["checks"][0]["residual"] == 0.0
    assert list(doc)[:5] == ["tool", "version", "command", "seed", "scene"]
    assert len(doc["scene"]["sha256"]) == 64


def test_killing_dilation_fails_with_twice_metric_norm(capsys):
    code, doc, _ = run_json(capsys, "check-killing", "minkowski.json", "--field", "dilation")
    assert code == 1
    check = doc["checks"][0]
    assert check["residual"] == 2.0 * check["metric_norm"]
    assert check["ok"] is False and doc["ok"] is False


def test_conformal_and_gkilling(capsys):
    assert run(capsys, "check-conformal", "minkowski.json", "--field", "sct0")[0] == 0
    assert run(capsys, "check-gkilling", "minkowski.json", "--field", "dilation", "--group", "cso")[0] == 0
    assert run(capsys, "check-gkilling", "minkowski.json", "--field", "dilation", "--group", "so")[0] == 1
    assert run(capsys, "check-gkilling", "sphere.json", "--field", "dtheta", "--group", "gl")[0] == 0


def test_tol_flag_overrides(capsys):
    code, doc, _ = run_json(capsys, "check-killing", "minkowski.json", "--field", "dilation", "--tol", "3")
    assert code == 0 and doc["checks"][0]["tol"] == 3.0


def test_penrose_dilation_on_constant_spinor(capsys, const_spinor_scene):
    code, doc, _ = run_json(capsys, "lie-spinor", str(const_spinor_scene), "--field", "dilation",
                            "--lift", "penrose")
    assert code == 0
    out = np.array(doc["spinor"])
    psi = np.array([[1, 0], [2, 1], [0, 3], [-1, 0]], dtype=float)
    assert np.max(np.abs(out + psi)) <= 1e-12


def test_kosmann_spinor_report(capsys):
    code, doc, _ = run_json(capsys, "lie-spinor", "sphere.json", "--field", "rotx", "--lift", "kosmann")
    assert code == 0
    assert doc["checks"][0]["name"] == "kosmann_forms_agree"
    assert doc["checks"][0]["residual"] <= 1e-9
    assert np.array(doc["spinor"]).shape == (20, 2, 2)


def test_general_lift_defaults_to_kosmann(capsys):
    _, kos, _ = run_json(capsys, "lie-spinor", "sphere.json", "--field", "rotx", "--lift", "kosmann")
    _, gen, _ = run_json(capsys, "lie-spinor", "sphere.json", "--field", "rotx", "--lift", "general")
    assert np.max(np.abs(np.array(kos["spinor"]) - np.array(gen["spinor"]))) <= 1e-12


def test_general_lift_coefficients_file(capsys, tmp_path):
    good = tmp_path / "good.json"
    good.write_text(json.dumps({"xi": ["0", "0"], "Xi": [["0", "0.5"], ["-0.5", "0"]]}))
    code, doc, _ = run_json(capsys, "lie-spinor", "sphere.json", "--field", "rotz", "--lift", "general",
                            "--coeffs", str(good))
    assert code == 0
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"Xi": [["0", "1"], ["1", "0"]]}))
    code, _, err = run(capsys, "lie-spinor", "sphere.json", "--field", "rotz", "--lift", "general",
                       "--coeffs", str(bad))
    assert code == 2 and "antisymmetric" in err


def test_lie_tensor_metric_with_oracle(capsys):
    code, doc, _ = run_json(capsys, "lie-tensor", "polar.json", "--field", "radial", "--oracle")
    assert code == 0
    assert doc["checks"][0]["name"] == "oracle_agreement"
    assert doc["checks"][0]["residual"] <= 1e-6


def test_lie_tensor_scalar_density(capsys):
    spec = json.dumps({"upper": 0, "lower": 0, "weight": 1, "components": "x0 + x1^2"})
    code, doc, _ = run_json(capsys, "lie-tensor", "minkowski.json", "--field", "dilation", "--target", spec)
    assert code == 0
    assert doc["target"] == {"name": "tensor", "upper": 0, "lower": 0, "weight": 1}


def test_lie_tensor_rank_three_needs_oracle(capsys, tmp_path):
    comps = [[["0"] * 2 for _ in range(2)] for _ in range(2)]
    comps[0][1][1] = "x0"
    spec = tmp_path / "t.json"
    spec.write_text(json.dumps({"upper": 1, "lower": 2, "components": comps}))
    code, _, _ = run(capsys, "lie-tensor", "polar.json", "--field", "rotation", "--target", str(spec))
    assert code == 2
    code, doc, _ = run_json(capsys, "lie-tensor", "polar.json", "--field", "rotation", "--target", str(spec),
                            "--oracle")
    assert code == 0 and "oracle" in doc and "symbolic" not in doc


def test_decompose_matrix(capsys, tmp_path):
    path = tmp_path / "m.json"
    path.write_text("[[1, 2], [3, 4]]")
    code, doc, _ = run_json(capsys, "decompose-matrix", "--matrix", str(path), "--signature", "2,0")
    assert code == 0
    assert doc["decomposition"]["antisym"] == [[0.0, -0.5], [0.5, 0.0]]
    assert doc["decomposition"]["trace_scalar"] == 2.5
    path.write_text("[[1, 2, 3], [3, 4, 5]]")
    assert run(capsys, "decompose-matrix", "--matrix", str(path), "--signature", "2,0")[0] == 2


def test_verify_clifford_and_projectors(capsys):
    code, doc, _ = run_json(capsys, "verify-clifford", "--signature", "1,3")
    assert code == 0 and doc["spinor_dimension"] == 4
    assert run(capsys, "verify-clifford", "--signature", "1,2")[0] == 2
    code, doc, _ = run_json(capsys, "verify-projectors", "--signature", "2,2", "--samples", "10")
    assert code == 0
    assert [c["name"] for c in doc["checks"]] == ["projector_products", "projector_sum", "ad_invariance"]


@pytest.mark.parametrize("argv", [
    ["check-killing", "nosuch.json", "--field", "x"],
    ["check-killing", "minkowski.json", "--field", "nosuch"],
    ["check-killing", "minkowski.json"],
    ["verify-clifford", "--signature", "two"],
    ["frobnicate"],
])
def test_malformed_input_exits_two(capsys, argv):
    code, out, err = run(capsys, *argv)
    assert code == 2
    assert out == ""
    assert err


def test_malformed_scene_file(capsys, tmp_path):
    data = json.loads(bundled_scene_path("sphere.json").read_text())
    data["metric"]["11"] = "sin(x0"
    path = tmp_path / "broken.json"
    path.write_text(json.dumps(data))
    assert run(capsys, "check-killing", str(path), "--field", "rotz")[0] == 2
    data["schema"] = 2
    path.write_text(json.dumps(data))
    assert run(capsys, "check-killing", str(path), "--field", "rotz")[0] == 2


def test_reports_are_deterministic(capsys):
    argv = ["check-killing", "sphere.json", "--field", "dtheta", "--json"]
    first = run(capsys, *argv)[1]
    second = run(capsys, *argv)[1]
    assert first == second
    assert "elapsed" not in first


def test_dumps_number_format():
    text = dumps({"a": 0.1, "b": 0.0, "n": 3, "c": [1.0, True]})
    assert text == '{\n  "a": 0.10000000000000001,\n  "b": 0.0,\n  "n": 3,\n  "c": [1.0, true]\n}'


def test_text_output_without_json(capsys):
    code, out, _ = run(capsys, "check-killing", "sphere.json", "--field", "rotz")
    assert code == 0
    assert "killing" in out
