import json
import os

import pytest

from uavloc.cli import main
from uavloc.serialize import load_scenario


def run(*argv):
    return main(list(argv))


def test_gen_presets_and_determinism(tmp_path):
    a = tmp_path / "a.json"
    b = tmp_path / "b.json"
    assert run("gen", "--network", "grid3x3", "--horizon", "1200", "--seed", "3",
               "-o", str(a)) == 0
    assert run("gen", "--network", "grid3x3", "--horizon", "1200", "--seed", "3",
               "-o", str(b)) == 0
    assert a.read_bytes() == b.read_bytes()
    sc = load_scenario(str(a))
    assert len(sc.network.signalized_ids) == 9


def test_gen_shinan_preset(tmp_path):
    out = tmp_path / "s.json"
    assert run("gen", "--network", "shinan18", "--horizon", "900", "--seed", "1",
               "-o", str(out)) == 0
    sc = load_scenario(str(out))
    kinds = {}
    for i in sc.network.intersections.values():
        kinds[i.kind] = kinds.get(i.kind, 0) + 1
    assert len(sc.network.signalized_ids) == 18
    assert kinds["crossroad"] == 14
    assert kinds["t_junction"] == 4
    assert sc.loop_links  # arterial is instrumented


@pytest.fixture()
def scenario_file(tmp_path):
    out = tmp_path / "sc.json"
    assert run("gen", "--network", "grid3x3", "--horizon", "1200", "--seed", "3",
               "-o", str(out)) == 0
    return str(out)


def test_eval_full_coverage_zero(scenario_file, tmp_path):
    report = tmp_path / "rep.json"
    ids = ",".join(f"i{k:02d}" for k in range(1, 10))
    assert run("eval", "--scenario", scenario_file, "--deploy", ids,
               "-o", str(report)) == 0
    doc = json.loads(report.read_text())
    assert doc["report"]["z"] == 0.0
    assert doc["manifest"]["command"] == "eval"


def test_eval_empty_deployment_is_max(scenario_file, tmp_path):
    r_empty = tmp_path / "empty.json"
    assert run("eval", "--scenario", scenario_file, "--deploy", "", "--nuav", "9",
               "-o", str(r_empty)) == 0
    z_empty = json.loads(r_empty.read_text())["report"]["z"]
    r_one = tmp_path / "one.json"
    assert run("eval", "--scenario", scenario_file, "--deploy", "i05", "--nuav", "9",
               "-o", str(r_one)) == 0
    assert z_empty >= json.loads(r_one.read_text())["report"]["z"]


def test_eval_fleet_violation_exit_2(scenario_file, tmp_path):
    code = run("eval", "--scenario", scenario_file, "--deploy", "i01,i02",
               "--nuav", "1", "-o", str(tmp_path / "x.json"))
    assert code == 2


def test_eval_unknown_intersection_exit_2(scenario_file, tmp_path):
    code = run("eval", "--scenario", scenario_file, "--deploy", "zz",
               "-o", str(tmp_path / "x.json"))
    assert code == 2


def test_bad_scenario_file_exit_2(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{}")
    assert run("eval", "--scenario", str(bad), "--deploy", "",
               "-o", str(tmp_path / "x.json")) == 2
    missing = tmp_path / "missing.json"
    assert run("eval", "--scenario", str(missing), "--deploy", "",
               "-o", str(tmp_path / "x.json")) == 2


def test_optimize_brute_exact(scenario_file, tmp_path):
    out = tmp_path / "opt"
    assert run("optimize", "--scenario", scenario_file, "--solver", "brute",
               "--nuav", "2", "-o", str(out)) == 0
    rows = (out / "results.csv").read_text().splitlines()
    assert rows[0].startswith("# manifest=manifest.json")
    header = rows[1].split(",")
    row = rows[2].split(",")
    assert row[header.index("exact")] == "True"
    assert os.path.exists(out / "manifest.json")


def test_optimize_brute_over_budget_exit_3(scenario_file, tmp_path):
    code = run("optimize", "--scenario", scenario_file, "--solver", "brute",
               "--nuav", "5", "--budget", "10", "-o", str(tmp_path / "o"))
    assert code == 3


def test_optimize_sweep_rows_and_figures(scenario_file, tmp_path):
    out = tmp_path / "sweep"
    assert run("optimize", "--scenario", scenario_file, "--solver", "iqga",
               "--sweep", "0:3", "--seeds", "0,1", "--generations", "15",
               "--figures", "-o", str(out)) == 0
    rows = (out / "results.csv").read_text().splitlines()
    assert len(rows) == 2 + 4 * 2  # comment + header + 4 sizes x 2 seeds
    assert (out / "curve.csv").exists()
    assert (out / "curve.png").exists()
    summary = json.loads((out / "summary.json").read_text())
    assert "knee" in summary
    full_fleet = tmp_path / "full"
    assert run("optimize", "--scenario", scenario_file, "--solver", "brute",
               "--nuav", "9", "-o", str(full_fleet)) == 0
    data = (full_fleet / "results.csv").read_text().splitlines()[2].split(",")
    assert float(data[2]) == 0.0  # optimal Z at the full fleet


def test_compare_outputs(scenario_file, tmp_path):
    out = tmp_path / "cmp"
    assert run("compare", "--scenario", scenario_file, "--solvers",
               "iqga,qga,greedy-fcm", "--nuav", "2", "--seeds", "0,1",
               "--generations", "15", "--figures", "-o", str(out)) == 0
    comparison = (out / "comparison.csv").read_text().splitlines()
    assert len(comparison) == 2 + 3  # comment + header + one row per solver
    detail = (out / "detail.csv").read_text().splitlines()
    header = detail[1].split(",")
    assert "flow_coverage" in header and "path_coverage" in header
    assert (out / "comparison.png").exists()
    assert (out / "traces.png").exists()


def test_compare_unknown_solver_exit_2(scenario_file, tmp_path):
    assert run("compare", "--scenario", scenario_file, "--solvers", "iqga,nope",
               "--nuav", "2", "-o", str(tmp_path / "c")) == 2
