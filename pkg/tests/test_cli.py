import copy
import json
import xml.etree.ElementTree as ET

import numpy as np
import pytest

from pwa_nav.artifacts import load_graph_json
from pwa_nav.cli import main
from pwa_nav.scenario import ScenarioError, parse_scenario

INTEGRATOR_SCENARIO = {
    "dynamics": {
        "type": "affine",
        "A": [[0.0, 0.0], [0.0, 0.0]],
        "B": [[1.0, 0.0], [0.0, 1.0]],
        "c": [0.0, 0.0],
    },
    "state_bounds": [[0.0, 2.0], [0.0, 2.0]],
    "grid": [2, 2],
    "control_box": [[-5.0, 5.0], [-5.0, 5.0]],
    "lipschitz": {"L_df": 1e-6, "L_g": 1e-6},
    "gamma": 10.0,
    "sysid": {"N": 20, "T": 0.001, "input_scale": 0.1,
              "velocity_mode": "oracle", "seed": 7},
    "initial_state": [0.5, 0.5],
    "target": [1.5, 1.5],
    "weight_mode": "constant",
}


def write_scenario(tmp_path, data, name="scenario.json"):
    path = tmp_path / name
    path.write_text(json.dumps(data))
    return str(path)


class TestScenarioParsing:
    def test_valid_scenario(self):
        sc = parse_scenario(copy.deepcopy(INTEGRATOR_SCENARIO))
        assert sc.partition.n_cells == 4
        assert sc.target_cell == 3
        assert sc.analytic

    def test_target_as_cell_id(self):
        data = copy.deepcopy(INTEGRATOR_SCENARIO)
        data["target"] = 2
        assert parse_scenario(data).target_cell == 2

    def test_unknown_top_level_key_rejected(self):
        data = copy.deepcopy(INTEGRATOR_SCENARIO)
        data["extra"] = 1
        with pytest.raises(ScenarioError, match="unknown keys"):
            parse_scenario(data)

    def test_missing_key_rejected(self):
        data = copy.deepcopy(INTEGRATOR_SCENARIO)
        del data["gamma"]
        with pytest.raises(ScenarioError, match="missing keys"):
            parse_scenario(data)

    def test_out_of_domain_initial_state_names_field(self):
        data = copy.deepcopy(INTEGRATOR_SCENARIO)
        data["initial_state"] = [11.0, 0.0]
        with pytest.raises(ScenarioError, match="initial_state"):
            parse_scenario(data)

    def test_bad_velocity_mode(self):
        data = copy.deepcopy(INTEGRATOR_SCENARIO)
        data["sysid"]["velocity_mode"] = "psychic"
        with pytest.raises(ScenarioError, match="velocity_mode"):
            parse_scenario(data)

    def test_bad_weight_mode(self):
        data = copy.deepcopy(INTEGRATOR_SCENARIO)
        data["weight_mode"] = "quadratic"
        with pytest.raises(ScenarioError, match="weight_mode"):
            parse_scenario(data)

    def test_terrain_block_takes_no_parameters(self):
        data = copy.deepcopy(INTEGRATOR_SCENARIO)
        data["dynamics"] = {"type": "terrain", "bumpiness": 3}
        with pytest.raises(ScenarioError, match="terrain"):
            parse_scenario(data)

    def test_invalid_json_reports_line(self, tmp_path, capsys):
        path = tmp_path / "broken.json"
        path.write_text('{\n "dynamics": \n}')
        rc = main(["plan", "--scenario", str(path), "--out", str(tmp_path)])
        assert rc == 1
        assert "line" in capsys.readouterr().err


@pytest.fixture(scope="module")
def plan_out(tmp_path_factory):
    tmp = tmp_path_factory.mktemp("plan")
    scenario = write_scenario(tmp, INTEGRATOR_SCENARIO)
    out = tmp / "out"
    rc = main(["plan", "--scenario", scenario, "--out", str(out)])
    return rc, out


class TestCmdPlan:
    def test_exit_zero_and_artifacts_present(self, plan_out):
        rc, out = plan_out
        assert rc == 0
        for name in ("trajectory.csv", "graph_final.json", "mission.json",
                     "trajectory.svg", "graph.svg"):
            assert (out / name).exists()

    def test_trajectory_csv_shape(self, plan_out):
        _, out = plan_out
        lines = (out / "trajectory.csv").read_text().strip().split("\n")
        assert lines[0] == "t,x1,x2,u1,u2,cell_id"
        times = [float(line.split(",")[0]) for line in lines[1:]]
        assert all(b > a for a, b in zip(times, times[1:]))

    def test_graph_json_round_trip(self, plan_out):
        _, out = plan_out
        path = str(out / "graph_final.json")
        data = json.load(open(path))
        assert {n["id"] for n in data["nodes"]} == {0, 1, 2, 3}
        graph = load_graph_json(path)
        for e in data["edges"]:
            rec = graph.edges[(e["src"], e["dst"])]
            assert rec.status.value == e["status"]
            assert rec.weight == e["weight"]
            assert rec.definitive == e["definitive"]

    def test_mission_json_status(self, plan_out):
        _, out = plan_out
        mission = json.load(open(out / "mission.json"))
        assert mission["status"] == "reached_target"
        assert mission["target_cell"] == 3

    def test_svgs_are_valid_xml(self, plan_out):
        _, out = plan_out
        for name in ("trajectory.svg", "graph.svg"):
            root = ET.parse(out / name).getroot()
            assert root.tag.endswith("svg")
            rects = [el for el in root.iter() if el.tag.endswith("rect")]
            assert len(rects) == 4  # one per cell
        traj = ET.parse(out / "trajectory.svg").getroot()
        paths = [el for el in traj.iter() if el.tag.endswith("path")]
        assert len(paths) == 1

    def test_target_equals_initial(self, tmp_path):
        data = copy.deepcopy(INTEGRATOR_SCENARIO)
        data["target"] = data["initial_state"]
        scenario = write_scenario(tmp_path, data)
        rc = main(["plan", "--scenario", scenario, "--out", str(tmp_path / "o")])
        assert rc == 0
        lines = (tmp_path / "o" / "trajectory.csv").read_text().strip().split("\n")
        assert len(lines) == 2  # header + initial sample

    def test_malformed_scenario_exits_one(self, tmp_path, capsys):
        data = copy.deepcopy(INTEGRATOR_SCENARIO)
        data["initial_state"] = [11.0, 0.0]
        scenario = write_scenario(tmp_path, data)
        rc = main(["plan", "--scenario", scenario, "--out", str(tmp_path / "o")])
        assert rc == 1
        assert "initial_state" in capsys.readouterr().err

    def test_stuck_exits_two(self, tmp_path):
        data = copy.deepcopy(INTEGRATOR_SCENARIO)
        data["dynamics"]["B"] = [[0.0, 0.0], [0.0, 0.0]]
        scenario = write_scenario(tmp_path, data)
        rc = main(["plan", "--scenario", scenario, "--out", str(tmp_path / "o")])
        assert rc == 2

    def test_iteration_cap_exits_three(self, tmp_path):
        scenario = write_scenario(tmp_path, INTEGRATOR_SCENARIO)
        rc = main(["plan", "--scenario", scenario, "--out", str(tmp_path / "o"),
                   "--max-iters", "1"])
        assert rc == 3


class TestCmdTruthGraph:
    def test_single_integrator_all_exists(self, tmp_path):
        scenario = write_scenario(tmp_path, INTEGRATOR_SCENARIO)
        rc = main(["truth-graph", "--scenario", scenario, "--out", str(tmp_path)])
        assert rc == 0
        data = json.load(open(tmp_path / "graph_truth.json"))
        assert len(data["nodes"]) == 4
        assert all(e["status"] == "exists" and e["definitive"] for e in data["edges"])
        assert (tmp_path / "truth.svg").exists()

    def test_no_actuation_all_absent(self, tmp_path):
        data = copy.deepcopy(INTEGRATOR_SCENARIO)
        data["dynamics"]["B"] = [[0.0, 0.0], [0.0, 0.0]]
        scenario = write_scenario(tmp_path, data)
        rc = main(["truth-graph", "--scenario", scenario, "--out", str(tmp_path)])
        assert rc == 0
        truth = json.load(open(tmp_path / "graph_truth.json"))
        assert all(e["status"] == "absent" for e in truth["edges"])


class TestCmdSysidCheck:
    def test_affine_recovery_exact(self, tmp_path):
        scenario = write_scenario(tmp_path, INTEGRATOR_SCENARIO)
        rc = main(["sysid-check", "--scenario", scenario, "--out", str(tmp_path),
                   "--cell", "0"])
        assert rc == 0
        report = json.load(open(tmp_path / "sysid_report.json"))
        assert report["max_entry_error"] <= 1e-8

    def test_samples_below_identifiability_exits_four(self, tmp_path, capsys):
        scenario = write_scenario(tmp_path, INTEGRATOR_SCENARIO)
        rc = main(["sysid-check", "--scenario", scenario, "--out", str(tmp_path),
                   "--cell", "0", "--samples", "3"])
        assert rc == 4

    def test_invalid_cell_exits_one(self, tmp_path):
        scenario = write_scenario(tmp_path, INTEGRATOR_SCENARIO)
        rc = main(["sysid-check", "--scenario", scenario, "--out", str(tmp_path),
                   "--cell", "99"])
        assert rc == 1
