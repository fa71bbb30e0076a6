import io
import json

import numpy as np
import pytest

from finsleravg.cli import RunReport, main
from finsleravg.config import ConfigError, RunConfig


def run_cli(tmp_path, config, *args):
    path = tmp_path / "config.json"
    path.write_text(json.dumps(config))
    out, err = io.StringIO(), io.StringIO()
    code = main([args[0], str(path), *args[1:]], stdout=out, stderr=err)
    return code, out.getvalue(), err.getvalue()


MINK = {"n": 2, "lagrangian": {"preset": "minkowski"}, "points": [[0, 0]]}
WARPED = {"n": 2, "lagrangian": {"preset": "warped"}, "points": [[0, 0], [0.4, -0.3], [-0.2, 1.0]]}
FL = {"n": 2, "lagrangian": {"preset": "finslerian-lorentz", "params": {"eps": 0.05}}, "points": [[0, 0]],
      "quadrature": {"sphere_nodes": 12, "hyperboloid": {"nodes_t": 48, "nodes_sphere": 8},
                     "slab": {"nodes_per_axis": 10}}}


def test_verify_pass(tmp_path):
    code, out, _ = run_cli(tmp_path, MINK, "verify")
    assert code == 0
    assert out.startswith("verify: PASS")


def test_verify_names_violated_condition(tmp_path):
    cfg = dict(MINK, timelike_field=["0", "1"])
    code, out, _ = run_cli(tmp_path, cfg, "verify", "--output", "json")
    assert code == 1
    rep = json.loads(out)
    assert not rep["passed"]
    assert any("timelike condition" in v for v in rep["records"][0]["violations"])


def test_malformed_expression_exit_2(tmp_path):
    cfg = {"n": 2, "lagrangian": {"expression": "0.5*(-(y0^2) + y1^^2)"}, "points": [[0, 0]]}
    code, _, err = run_cli(tmp_path, cfg, "verify")
    assert code == 2
    assert "position 18" in err and "^" in err


@pytest.mark.parametrize(
    "cfg, fragment",
    [
        ({"n": 1, "lagrangian": {"preset": "minkowski"}, "points": [[0]]}, "at least 2"),
        ({"n": 2, "lagrangian": {"preset": "minkowski", "expression": "y0"}, "points": [[0, 0]]}, "exactly one"),
        ({"n": 2, "lagrangian": {"preset": "minkowski"}, "points": []}, "non-empty"),
        ({"n": 2, "lagrangian": {"preset": "nope"}, "points": [[0, 0]]}, "unknown preset"),
        ({"n": 2, "lagrangian": {"preset": "minkowski"}, "points": [[0, 0]], "colour": 1}, "unknown config keys"),
    ],
)
def test_config_errors_exit_2(tmp_path, cfg, fragment):
    code, _, err = run_cli(tmp_path, cfg, "verify")
    assert code == 2
    assert fragment in err


def test_missing_file_and_bad_flag_exit_2(tmp_path):
    assert main(["verify", str(tmp_path / "missing.json")], io.StringIO(), io.StringIO()) == 2
    assert main(["verify"], io.StringIO(), io.StringIO()) == 2
    code, _, _ = run_cli(tmp_path, MINK, "verify", "--output", "yaml")
    assert code == 2


def test_tensors_minkowski(tmp_path):
    code, out, _ = run_cli(tmp_path, MINK, "tensors", "--direction", "1,0", "--output", "json")
    assert code == 0
    rec = json.loads(out)["records"][0]
    assert rec["g"] == [[-1.0, 0.0], [0.0, 1.0]]
    assert np.all(np.array(rec["cartan"]) == 0) and np.all(np.array(rec["gamma"]) == 0)
    assert rec["causal_character"] == "timelike"


def test_tensors_warped(tmp_path):
    code, out, _ = run_cli(tmp_path, WARPED, "tensors", "--direction", "1,0", "--point", "0", "--output", "json")
    gamma = np.array(json.loads(out)["records"][0]["gamma"])
    assert code == 0
    assert gamma[1, 0, 1] == pytest.approx(1.0) and gamma[0, 1, 1] == pytest.approx(1.0)


def test_tensors_zero_direction_exit_2(tmp_path):
    code, _, err = run_cli(tmp_path, MINK, "tensors", "--direction", "0,0")
    assert code == 2 and "non-zero" in err


def test_tensors_degenerate_exit_1(tmp_path):
    cfg = {"n": 2, "lagrangian": {"expression": "0.5*y0^2"}, "points": [[0, 0]]}
    code, _, err = run_cli(tmp_path, cfg, "tensors", "--direction", "1,1")
    assert code == 1 and "degenerate" in err


def test_point_out_of_range_exit_2(tmp_path):
    code, _, _ = run_cli(tmp_path, MINK, "tensors", "--point", "4")
    assert code == 2


def test_average_metric_warped_returns_pointwise_metric(tmp_path):
    code, out, _ = run_cli(tmp_path, WARPED, "average-metric", "--output", "json")
    assert code == 0
    for rec in json.loads(out)["records"]:
        x0 = rec["x"][0]
        np.testing.assert_allclose(rec["ell"], np.diag([-1.0, np.exp(2 * x0)]), atol=1e-12)
        assert rec["signature"]["ell_negative"] == 1


def test_average_metric_inadmissible_exit_1(tmp_path):
    code, _, err = run_cli(tmp_path, dict(MINK, timelike_field=["0", "1"]), "average-metric")
    assert code == 1 and "admissibility" in err


def test_average_connection_minkowski_zero_table(tmp_path):
    code, out, _ = run_cli(tmp_path, MINK, "average-connection", "--domain", "sphere")
    assert code == 0
    assert "average-connection: PASS" in out
    code, out, _ = run_cli(tmp_path, MINK, "average-connection", "--domain", "sphere", "--output", "json")
    assert np.all(np.array(json.loads(out)["records"][0]["gamma"]) == 0)


def test_compare_reports_nonzero_difference(tmp_path):
    code, out, _ = run_cli(tmp_path, FL, "compare", "--output", "json")
    assert code == 0
    diffs = json.loads(out)["records"][0]["max_abs_difference"]
    assert set(diffs) == {"sphere", "hyperboloid", "slab"}
    assert min(diffs.values()) > 1e-3


def test_tol_flag_overrides_structure_tolerance(tmp_path):
    code, out, _ = run_cli(tmp_path, MINK, "verify", "--tol", "1e-3", "--output", "json")
    assert json.loads(out)["config"]["tolerances"]["structure"] == 1e-3


def test_json_round_trip_and_effective_config(tmp_path):
    code, out, _ = run_cli(tmp_path, MINK, "average-connection", "--output", "json")
    rep = RunReport.from_json(out)
    assert rep.to_json() == out
    cfg = RunConfig.from_dict(rep.config)
    assert cfg.to_dict() == rep.config
    assert rep.config["quadrature"]["hyperboloid"]["truncation"] == 8.0


def test_table_rounds_to_ten_significant_digits(tmp_path):
    code, out, _ = run_cli(tmp_path, WARPED, "average-metric", "--point", "1")
    assert repr(float(np.exp(0.8))) not in out
    assert f"{np.exp(0.8):.10g}" in out


def test_config_from_dict_defaults():
    cfg = RunConfig.from_dict({"n": 3, "lagrangian": {"preset": "randers-positive"}, "points": [[0, 0, 0]]})
    assert cfg.mode == "positive"
    assert cfg.timelike_field == ["1", "0", "0"]
    with pytest.raises(ConfigError):
        RunConfig.from_json("{not json")


def test_reference_field_override(tmp_path):
    base = dict(WARPED, points=[[0.0, 0.0]])
    _, plain, _ = run_cli(tmp_path, base, "average-metric", "--output", "json")
    code, moved, _ = run_cli(tmp_path, dict(base, reference_field=["1", "0.3"]), "average-metric", "--output", "json")
    assert code == 0
    a = np.array(json.loads(plain)["records"][0]["ell"])
    b = np.array(json.loads(moved)["records"][0]["ell"])
    assert np.abs(a - b).max() > 1e-3
    assert json.loads(moved)["config"]["reference_field"] == ["1", "0.3"]
    code, _, _ = run_cli(tmp_path, dict(base, reference_field=["1"]), "average-metric")
    assert code == 2
