import json
import subprocess
import sys

import pytest

from thevenin.cli import format_scalar, main
from thevenin.phasor import format_measurements, read_measurements
from thevenin.scenario import ScenarioError, bundled_names, bundled_path, load_scenario, scenario_from_dict
from conftest import ISOLATED, single_sets


@pytest.fixture
def sim(tmp_path):
    def run(name):
        out = tmp_path / f"{name}.csv"
        assert main(["simulate", name, str(out)]) == 0
        return out
    return run


def test_bundled_scenarios_validate():
    assert {"table2", "table2_noisy", "table4_6", "table7", "step_change", "constant"} <= set(bundled_names())
    for name in bundled_names():
        sc = load_scenario(bundled_path(name))
        assert sc.simulate()


def test_simulate_table2(sim):
    sets = read_measurements(sim("table2"))
    loads = {round(m.branch_currents[0][1].magnitude, 9) for m in sets}
    assert len(loads) >= 2


def test_simulate_step_change(sim):
    sets = read_measurements(sim("step_change"))
    assert sets[0].time == 0.0 and sets[-1].time == pytest.approx(9.6)
    assert len(sets) == 97


def test_simulate_writes_manifest(sim):
    out = sim("table2")
    man = json.loads((out.parent / (out.name + ".manifest.json")).read_text())
    assert man["command"] == "simulate"
    assert man["output_paths"] == [str(out)]
    assert len(man["config_digest"]) == 64


def test_simulate_invalid_json_leaves_nothing(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    out = tmp_path / "out.csv"
    assert main(["simulate", str(bad), str(out)]) == 2
    assert not out.exists() and list(tmp_path.iterdir()) == [bad]
    assert "invalid JSON" in capsys.readouterr().err


def test_simulate_schema_violation(tmp_path):
    data = json.loads(bundled_path("table2").read_text())
    del data["schedule"]
    p = tmp_path / "s.json"
    p.write_text(json.dumps(data))
    assert main(["simulate", str(p), str(tmp_path / "o.csv")]) == 2


def test_simulate_singular_circuit(tmp_path):
    data = json.loads(bundled_path("table2").read_text())
    data["schedule"] = [{"time_s": 0.0, "r_load": -1.0, "x_load": -0.377}]
    p = tmp_path / "s.json"
    p.write_text(json.dumps(data))
    assert main(["simulate", str(p), str(tmp_path / "o.csv")]) == 3
    assert not (tmp_path / "o.csv").exists()


@pytest.mark.parametrize("patch", [
    {"sources": []},
    {"sample_period_s": 0},
    {"horizon_s": 0.5},
    {"schedule": [{"time_s": 1.0, "r_load": 1.0}, {"time_s": 0.5, "r_load": 2.0}]},
    {"schedule": [{"time_s": 0.0}]},
    {"noise": {"mag_rel_sigma": -1}},
    {"sources": [{"id": "a", "v_th": 1, "r_th": 1, "x_th": 1, "step": {"time_s": 99, "r": 1, "x": 1}}]},
    {"sources": [{"id": "a", "v_th": 1, "r_th": 1, "x_th": 1}, {"id": "a", "v_th": 1, "r_th": 1, "x_th": 1}]},
    {"extra": 1},
])
def test_scenario_validation(patch):
    data = json.loads(bundled_path("table2").read_text())
    data.update(patch)
    with pytest.raises(ScenarioError):
        scenario_from_dict(data)


def test_scenario_degrees_and_open_circuit():
    data = json.loads(bundled_path("table2").read_text())
    data["sources"][0]["theta"] = 90.0
    data["schedule"][0] = {"time_s": 0.0, "open_circuit": True}
    sc = scenario_from_dict(data, degrees=True)
    assert sc.sources[0].params.theta == pytest.approx(1.5707963267948966)
    first = sc.simulate()[0]
    assert first.branch_currents[0][1].magnitude == 0.0


def test_estimate_table2_nonlinear(sim, tmp_path):
    out = tmp_path / "est.json"
    assert main(["estimate", str(sim("table2")), str(out), "--nonlinear",
                 "--truth", str(bundled_path("table2"))]) == 0
    rep = json.loads(out.read_text())
    assert rep["converged"] and rep["source_id"] == "source"
    for key in ("v_th", "r_th", "x_th"):
        assert abs(rep["error_pct"][key]) <= 1e-4
    assert abs(rep["error_pct"]["theta_rad"]) < 1e-9
    for key in ("v_th", "theta_rad", "r_th", "x_th", "residual_norm", "iterations", "converged", "condition_estimate"):
        assert key in rep


def test_estimate_flat_truth_and_degrees(sim, tmp_path):
    truth = tmp_path / "truth.json"
    truth.write_text(json.dumps({"v_th": 70.7107, "theta": 0.0, "r_th": 1.0, "x_th": 0.377}))
    out = tmp_path / "est.json"
    assert main(["--degrees", "estimate", str(sim("table7")), str(out), "--linear", "--truth", str(truth)]) == 0
    rep = json.loads(out.read_text())
    assert rep["method"] == "linear" and "x_hat" in rep and "condition_number" in rep and "theta_deg" in rep
    assert abs(rep["error_pct"]["v_th"]) < 1.0


def test_estimate_two_sources(sim, tmp_path):
    out = tmp_path / "multi.json"
    assert main(["estimate", str(sim("table4_6")), str(out), "--truth", str(bundled_path("table4_6"))]) == 0
    rep = json.loads(out.read_text())
    assert list(rep["per_source"]) == ["generator", "grid"]
    assert rep["n_sources"] == 2
    for sid in ("generator", "grid"):
        assert rep["per_source"][sid]["status"] == "ok"
        assert abs(rep["per_source"][sid]["error_pct"]["r_th"]) < 1e-4


def test_estimate_linear_near_duplicates_exit_4(tmp_path, capsys):
    from thevenin.phasor import ComplexImpedance
    sets = single_sets(ISOLATED, [ComplexImpedance(10.0, 2.0), ComplexImpedance(10.0001, 2.0)])
    csv_path = tmp_path / "dup.csv"
    csv_path.write_text(format_measurements(sets))
    out = tmp_path / "o.json"
    assert main(["estimate", str(csv_path), str(out), "--linear"]) == 4
    err = capsys.readouterr().err
    assert "cond" in err and "three" in err
    assert not out.exists()


def test_estimate_bad_csv(tmp_path):
    p = tmp_path / "bad.csv"
    p.write_text("nope\n")
    assert main(["estimate", str(p), str(tmp_path / "o.json")]) == 2
    assert main(["estimate", str(tmp_path / "missing.csv"), str(tmp_path / "o.json")]) == 2


def test_detect_step_change(sim, tmp_path):
    trace, events = tmp_path / "trace.csv", tmp_path / "events.json"
    assert main(["detect", str(sim("step_change")), "--trace", str(trace), "--events", str(events)]) == 0
    ev = json.loads(events.read_text())["events"]
    assert sorted(e["parameter"] for e in ev) == ["r_th", "x_th"]
    lines = trace.read_text().splitlines()
    assert lines[0] == "time_s,v_th,theta_rad,r_th,x_th,residual_norm,converged"
    assert len(lines) == 1 + 97 - 4 + 1


def test_detect_constant_and_short(sim, tmp_path):
    trace, events = tmp_path / "trace.csv", tmp_path / "events.json"
    assert main(["detect", str(sim("constant")), "--trace", str(trace), "--events", str(events)]) == 0
    assert json.loads(events.read_text())["events"] == []
    t2, e2 = tmp_path / "t2.csv", tmp_path / "e2.json"
    assert main(["detect", str(sim("table2")), "--window", "50", "--trace", str(t2), "--events", str(e2)]) == 4
    assert not t2.exists() and not e2.exists()


@pytest.mark.parametrize("argv, expected", [
    (["apps", "power", "--vth", "20", "--rth", "10", "--rl", "10"], "10.0000"),
    (["apps", "stability", "--eth", "1", "--zth", "2", "--theta", "0.2", "--y", "0.5", "--phi", "0.1"], "0.000000"),
    (["apps", "soc", "--voc", "12.6", "--a", "1.2", "--b", "11.4"], "1.00000"),
    (["apps", "soc", "--voc", "12.0", "--a", "1.2", "--b", "11.4", "--percent"], "50.0000"),
])
def test_apps(argv, expected, capsys):
    assert main(argv) == 0
    assert capsys.readouterr().out.strip() == expected


def test_apps_preconditions(capsys):
    assert main(["apps", "power", "--vth", "1", "--rth", "0", "--rl", "0"]) == 2
    assert main(["apps", "soc", "--voc", "1", "--a", "0", "--b", "0"]) == 2
    assert main(["apps", "stability", "--eth", "1", "--zth", "1", "--theta", "3.141592653589793",
                 "--y", "1", "--phi", "0"]) == 2


def test_format_scalar():
    assert format_scalar(10.0) == "10.0000"
    assert format_scalar(0.0) == "0.000000"
    assert format_scalar(123456.7) == "123457."
    assert format_scalar(-0.00123) == "-0.00123000"


def test_pipeline_byte_identical(tmp_path):
    for run in ("a", "b"):
        d = tmp_path / run
        d.mkdir()
        assert main(["simulate", "table2_noisy", str(d / "m.csv")]) == 0
        assert main(["estimate", str(d / "m.csv"), str(d / "e.json")]) == 0
    for name in ("m.csv", "e.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_console_entry_point(tmp_path):
    out = subprocess.run([sys.executable, "-m", "thevenin.cli", "apps", "power", "--vth", "20", "--rth", "10",
                          "--rl", "10"], capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "10.0000"
