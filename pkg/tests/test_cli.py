import importlib.util
import json
import sys
from pathlib import Path

import pandas as pd
import pytest
from click.testing import CliRunner

from conftest import QUADRATIC_GRID_CONFIG
from habitprox.cli import commands
from habitprox.cli import (
    EXIT_CONFIG,
    EXIT_FAILURE,
    EXIT_OK,
    PLOT_COLUMNS,
    DataManager,
    OutputKind,
    cli,
    dump_config,
    emit_plot_data,
    parse_config_text,
    plot_frame,
    run_config,
    to_jsonable,
)
from habitprox.core import ConfigError, OutputError, ProximalSchedule, StepSequence, as_point
from habitprox.solvers import SolverResult, StopReason, inexact_prox_run

BOX_CONFIG = """\
seed = 5
output_dir = "{out}"

[objective]
preset = "quadratic"

[space]
kind = "continuous-box"
lower = [-10.0]
upper = [10.0]

[schedule]
max_steps = 30
mu = { kind = "constant", value = 0.5 }
epsilon = { kind = "geometric", start = 0.1, ratio = 0.5 }

[solver]
trap_samples = 64

[[runs]]
name = "sampled"
mode = "inexact-prox"
x0 = [8.0]
proposal = "random-worthwhile-sample"

[[runs]]
name = "sweep"
mode = "lambda-sweep"
x0 = [8.0]
lambdas = [0.5, 1.0, 2.0]

[[runs]]
name = "habit"
mode = "habit"
x0 = [-6.0]
overrides = { experience = { kind = "geometric", v0 = 1.0, rho = 1.5 } }
"""

BROKEN_COST_CONFIG = """\
seed = 1
output_dir = "{out}"

[objective]
preset = "quadratic"

[quasi_distance]
preset = "clamped-euclidean"
params = { offset = 0.1 }

[space]
kind = "finite-grid"
lower = [-1.0, -1.0]
upper = [1.0, 1.0]
resolution = 5

[probes]
instances = 20
pairs = 0
kl_samples = 0

[[runs]]
name = "axioms"
mode = "probes"
"""


def invoke(*args):
    return CliRunner().invoke(cli, [str(a) for a in args])


def read_json(path):
    return json.loads(path.read_text(encoding="utf-8"))


class TestRunCommand:
    def test_quadratic_grid(self, write_config, tmp_path):
        result = invoke("run", write_config())
        assert result.exit_code == EXIT_OK, result.output
        out = tmp_path / "out"
        summary = read_json(out / "summary.json")
        assert summary["seed"] == 7
        assert summary["exit_code"] == 0
        runs = {run["name"]: run for run in summary["runs"]}
        assert runs["global"]["minimizer"] == [0.0]
        assert runs["global"]["value"] == 0.0
        assert runs["exact"]["final_point"] == [0.0]
        assert runs["exact"]["stop_reason"] == "trap-reached"
        assert runs["exact"]["trap_hit_step"] == 2
        assert runs["checks"]["status"] == "ok"

    def test_probes_report(self, write_config, tmp_path):
        invoke("run", write_config())
        probes = read_json(tmp_path / "out" / "probes.json")["checks"]
        assert probes["property_checks"]["lemma1"]["summary"] == "lemma1: 50/50 pass"
        assert probes["quasi_distance_axioms"]["passed"]
        assert probes["nonexpansiveness"]["passed"]
        assert probes["kl_inequality"]["passed"]
        assert probes["failed"] == []

    def test_trajectory_outputs(self, write_config, tmp_path):
        invoke("run", write_config())
        out = tmp_path / "out"
        lines = (out / "exact.trajectory.jsonl").read_text(encoding="utf-8").splitlines()
        records = [json.loads(line) for line in lines]
        assert [r["accepted"] for r in records] == [[1.0], [0.0], [0.0]]
        assert records[-1]["inner_solver"] == "trap-check"
        plot = (out / "exact.plot.csv").read_text(encoding="utf-8")
        assert plot == (
            "k,f,step_cost,cumulative_cost,lambda_k,worthwhile\n"
            "0,1,1,1,1,1\n"
            "1,0,1,2,1,1\n"
            "2,0,0,2,1,1\n"
        )

    def test_seed_and_output_overrides(self, write_config, tmp_path):
        elsewhere = tmp_path / "elsewhere"
        result = invoke("run", write_config(), "--seed", 3, "--out", elsewhere)
        assert result.exit_code == EXIT_OK, result.output
        assert read_json(elsewhere / "summary.json")["seed"] == 3
        assert not (tmp_path / "out").exists()

    def test_reruns_are_byte_identical(self, write_config, tmp_path):
        config = write_config(BOX_CONFIG)
        first, second = tmp_path / "first", tmp_path / "second"
        assert invoke("run", config, "--out", first).exit_code == EXIT_OK
        assert invoke("run", config, "--out", second, "--jobs", 2).exit_code == EXIT_OK
        names = sorted(p.name for p in first.iterdir())
        assert names == sorted(p.name for p in second.iterdir())
        assert "sweep.sweep.csv" in names
        assert "habit.plot.csv" in names
        for name in names:
            assert (first / name).read_bytes() == (second / name).read_bytes(), name

    def test_invalid_resistance_kind(self, write_config):
        text = QUADRATIC_GRID_CONFIG.replace("[space]", '[resistance]\nkind = "cubic"\n\n[space]')
        result = invoke("run", write_config(text))
        assert result.exit_code == EXIT_CONFIG
        assert "resistance.kind" in result.output

    def test_broken_cost_fails_its_probes(self, write_config, tmp_path):
        result = invoke("run", write_config(BROKEN_COST_CONFIG))
        assert result.exit_code == EXIT_FAILURE
        probes = read_json(tmp_path / "out" / "probes.json")["axioms"]
        assert "quasi_distance_axioms" in probes["failed"]
        triangle = probes["quasi_distance_axioms"]["axioms"]["triangle"]
        assert not triangle["passed"]
        assert len(triangle["witness"]) == 3
        summary = read_json(tmp_path / "out" / "summary.json")
        assert summary["exit_code"] == EXIT_FAILURE
        assert summary["runs"][0]["status"] == "failed"

    def test_unwritable_output(self, write_config, tmp_path):
        blocker = tmp_path / "blocker"
        blocker.write_text("not a directory", encoding="utf-8")
        result = invoke("run", write_config(), "--out", blocker / "out")
        assert result.exit_code == EXIT_FAILURE

    def test_missing_config(self, tmp_path):
        assert invoke("run", tmp_path / "nope.toml").exit_code == EXIT_CONFIG


class TestProbesCommand:
    def test_only_probes_runs_execute(self, write_config, tmp_path):
        result = invoke("probes", write_config())
        assert result.exit_code == EXIT_OK, result.output
        summary = read_json(tmp_path / "out" / "summary.json")
        assert [run["name"] for run in summary["runs"]] == ["checks"]

    def test_config_without_probes_runs(self, write_config, tmp_path):
        text = QUADRATIC_GRID_CONFIG.split('[[runs]]\nname = "exact"')[0]
        outcome = run_config(write_config(text), only_probes=True)
        assert outcome.exit_code == EXIT_OK
        assert [run.name for run in outcome.runs] == ["probes"]


class TestValidateCommand:
    def test_valid(self, write_config):
        result = invoke("validate", write_config())
        assert result.exit_code == EXIT_OK
        assert "3 run(s)" in result.output

    def test_invalid(self, write_config):
        result = invoke("validate", write_config(QUADRATIC_GRID_CONFIG.replace("exact-prox", "sideways")))
        assert result.exit_code == EXIT_CONFIG
        assert "runs[1].mode" in result.output


class TestConfig:
    def test_round_trip(self):
        config = parse_config_text(QUADRATIC_GRID_CONFIG)
        assert parse_config_text(dump_config(config)) == config

    def test_schema_error_names_field_and_line(self):
        with pytest.raises(ConfigError) as info:
            parse_config_text(QUADRATIC_GRID_CONFIG.replace("exact-prox", "sideways"))
        assert info.value.field == "runs[1].mode"
        assert info.value.line == 24

    def test_x0_off_the_grid(self):
        with pytest.raises(ConfigError) as info:
            parse_config_text(QUADRATIC_GRID_CONFIG.replace("x0 = [2.0]", "x0 = [2.5]"))
        assert info.value.field == "runs[1].x0"
        assert info.value.line == 25

    def test_x0_is_required(self):
        with pytest.raises(ConfigError) as info:
            parse_config_text(QUADRATIC_GRID_CONFIG.replace("x0 = [2.0]\n", ""))
        assert info.value.field == "runs[1].x0"

    def test_override_errors_name_the_run(self):
        text = QUADRATIC_GRID_CONFIG.replace('x0 = [2.0]', 'x0 = [2.0]\noverrides = { resistance = { kind = "cubic" } }')
        with pytest.raises(ConfigError) as info:
            parse_config_text(text)
        assert info.value.field == "runs[1].overrides.resistance.kind"

    def test_global_needs_a_grid(self):
        text = QUADRATIC_GRID_CONFIG.replace('kind = "finite-grid"', 'kind = "continuous-box"').replace(
            "resolution = 5\n", "")
        with pytest.raises(ConfigError) as info:
            parse_config_text(text)
        assert info.value.field == "runs[0].mode"

    def test_duplicate_run_names(self):
        with pytest.raises(ConfigError) as info:
            parse_config_text(QUADRATIC_GRID_CONFIG.replace('name = "exact"', 'name = "global"'))
        assert info.value.field == "runs"

    def test_invalid_toml(self):
        with pytest.raises(ConfigError) as info:
            parse_config_text("seed = \n")
        assert info.value.line is not None
        assert "invalid TOML" in str(info.value)


class TestOutputs:
    def test_jsonable_values(self):
        import numpy as np

        assert to_jsonable({"a": float("inf"), "b": np.float64(1.5), "c": (np.int64(2), np.bool_(True)),
                            "d": StopReason.MAX_STEPS}) == {"a": None, "b": 1.5, "c": [2, True], "d": "max-steps"}

    def test_paths_and_written_files(self, tmp_path):
        manager = DataManager(tmp_path / "run")
        manager.prepare()
        manager.save_records("r", [{"k": 0}, {"k": 1}])
        manager.save_json(OutputKind.SUMMARY, {"x": [1, 2]})
        assert manager.path_for(OutputKind.TRAJECTORY, "r").read_text(encoding="utf-8") == '{"k": 0}\n{"k": 1}\n'
        assert manager.written_files() == ["r.trajectory.jsonl", "summary.json"]

    def test_unwritable_file(self, tmp_path):
        manager = DataManager(tmp_path / "missing")
        with pytest.raises(OutputError):
            manager.save_json(OutputKind.SUMMARY, {})

    def test_plot_needs_steps(self):
        empty = SolverResult((), as_point(0.0), StopReason.MAX_STEPS)
        with pytest.raises(ValueError):
            plot_frame(empty)
        assert PLOT_COLUMNS[0] == "k"


class TestEmitPlotData:
    @staticmethod
    def exact_run(f, q, gamma, x0, space):
        schedule = ProximalSchedule.exact(StepSequence.constant(1.0), max_steps=1000)
        return inexact_prox_run(f, q, gamma, schedule, as_point(x0), space)

    def test_trap_at_the_start_is_one_row(self, quadratic, euclidean, weak_resistance, small_grid, tmp_path):
        result = self.exact_run(quadratic, euclidean, weak_resistance, 0.0, small_grid)
        path = emit_plot_data(result, None, tmp_path / "trap.plot.csv")
        assert path.read_text(encoding="utf-8") == (
            "k,f,step_cost,cumulative_cost,lambda_k,worthwhile\n"
            "0,0,0,0,1,1\n"
        )

    def test_step_costs_halve(self, quadratic, euclidean, weak_resistance, box, tmp_path):
        result = self.exact_run(quadratic, euclidean, weak_resistance, 8.0, box)
        frame = pd.read_csv(emit_plot_data(result, None, tmp_path / "decay.plot.csv"))
        assert list(frame.columns) == PLOT_COLUMNS
        costs = frame["step_cost"].tolist()[:10]
        for before, after in zip(costs, costs[1:]):
            assert after / before == pytest.approx(0.5, rel=1e-10)

    def test_unwritable_path(self, quadratic, euclidean, weak_resistance, small_grid, tmp_path):
        result = self.exact_run(quadratic, euclidean, weak_resistance, 2.0, small_grid)
        with pytest.raises(OutputError):
            emit_plot_data(result, None, tmp_path / "missing" / "x.plot.csv")


class TestEntryPoint:
    def test_app_delegates_to_the_cli_main(self):
        path = Path(__file__).parent.parent / "app.py"
        spec = importlib.util.spec_from_file_location("habitprox_app", path)
        module = importlib.util.module_from_spec(spec)
        spec.loader.exec_module(module)
        assert module.main is commands.main

    def test_main_exits_through_click(self, monkeypatch):
        monkeypatch.setattr(sys, "argv", ["habitprox", "--help"])
        with pytest.raises(SystemExit) as info:
            commands.main()
        assert info.value.code == 0
