import dataclasses

import pandas as pd
import pytest

from habitprox.core import ExperienceModel, ProximalSchedule, SolverSettings, StepSequence, as_point
from habitprox.dynamics import (
    SWEEP_COLUMNS,
    HabitDiagnostics,
    TrajectoryAnalyzer,
    lambda_sensitivity_sweep,
    run_habit_experiment,
)
from habitprox.solvers import StopReason, inexact_prox_run


def exact_schedule(max_steps=1000):
    return ProximalSchedule.exact(StepSequence.constant(1.0), max_steps=max_steps)


class TestHabitFormation:
    @pytest.fixture
    def habit_run(self, quadratic, euclidean, weak_resistance, box):
        experience = ExperienceModel.constant(1.0, StepSequence.constant(1.0))
        return run_habit_experiment(quadratic, euclidean, weak_resistance, experience, exact_schedule(),
                                    as_point(8.0), box)

    def test_step_costs_decay_geometrically(self, habit_run):
        result, diagnostics = habit_run
        assert diagnostics.step_costs[:4] == (4.0, 2.0, 1.0, 0.5)
        assert diagnostics.metrics["geometric_ratio"] == 0.5
        assert result.stop_reason is StopReason.STOPPING_RULE

    def test_cumulative_cost_stays_bounded(self, habit_run):
        _, diagnostics = habit_run
        assert diagnostics.cumulative_cost[-1] == pytest.approx(8.0, abs=1e-9)
        assert diagnostics.cumulative_cost[-1] < 16.0001
        assert list(diagnostics.cumulative_cost) == sorted(diagnostics.cumulative_cost)

    def test_sampled_trap_after_the_last_move(self, habit_run):
        result, diagnostics = habit_run
        assert diagnostics.trap_probabilistic
        assert diagnostics.trap_hit_step == len(result.steps)

    def test_steps_to_tolerance(self, habit_run):
        _, diagnostics = habit_run
        # f(x^k) = 64 / 4**k against the known minimum 0
        assert diagnostics.steps_to_tolerance == {1e-2: 7, 1e-4: 10, 1e-6: 13}
        assert diagnostics.to_dict()["steps_to_tolerance"] == {"0.01": 7, "0.0001": 10, "1e-06": 13}

    def test_experience_weight_is_a_plain_ratio(self, quadratic, euclidean, weak_resistance, box, full_length):
        schedule = exact_schedule(max_steps=100)
        experience = ExperienceModel.constant(2.0, StepSequence.constant(1.0))
        settings = dataclasses.replace(full_length, debug_checks=True)
        weighted, _ = run_habit_experiment(quadratic, euclidean, weak_resistance, experience, schedule,
                                           as_point(9.0), box, settings=settings)
        plain = inexact_prox_run(quadratic, euclidean, weak_resistance,
                                 dataclasses.replace(schedule, lam=StepSequence.constant(0.5)),
                                 as_point(9.0), box, settings=full_length)
        assert len(weighted.steps) == 100
        assert [p.tolist() for p in weighted.iterates] == [p.tolist() for p in plain.iterates]
        assert weighted.iterates[1][0] == pytest.approx(3.0)

    def test_growing_experience_lowers_the_ratio(self, quadratic, euclidean, weak_resistance, box):
        experience = ExperienceModel.geometric(1.0, 2.0, StepSequence.constant(1.0))
        result, diagnostics = run_habit_experiment(quadratic, euclidean, weak_resistance, experience,
                                                   exact_schedule(max_steps=5), as_point(8.0), box)
        assert result.lambdas == [1.0, 0.5, 0.25, 0.125, 0.0625]
        assert diagnostics.lambda_series == tuple(result.lambdas)

    def test_grid_trap_is_certified(self, quadratic, euclidean, weak_resistance, small_grid):
        experience = ExperienceModel.constant(1.0, StepSequence.constant(1.0))
        result, diagnostics = run_habit_experiment(quadratic, euclidean, weak_resistance, experience,
                                                   exact_schedule(), as_point(2.0), small_grid)
        assert result.stop_reason is StopReason.TRAP_REACHED
        assert diagnostics.trap_hit_step == 2
        assert not diagnostics.trap_probabilistic


class TestDiagnostics:
    def make(self, **overrides):
        values = dict(
            step_costs=(1.0, 0.0),
            cumulative_cost=(1.0, 1.0),
            f_series=(2.0, 1.0, 1.0),
            trap_hit_step=1,
            trap_probabilistic=False,
            steps_to_tolerance={1e-2: None},
            lambda_series=(1.0, 1.0),
            metrics={},
        )
        values.update(overrides)
        return HabitDiagnostics(**values)

    def test_valid(self):
        assert self.make().to_dict()["trap_hit_step"] == 1

    def test_cumulative_cost_never_drops(self):
        with pytest.raises(ValueError):
            self.make(cumulative_cost=(1.0, 0.5))

    def test_no_cost_after_the_trap(self):
        with pytest.raises(ValueError):
            self.make(trap_hit_step=0)


class TestTrajectoryAnalyzer:
    def test_run_without_moves(self, quadratic, euclidean, weak_resistance, small_grid):
        result = inexact_prox_run(quadratic, euclidean, weak_resistance, exact_schedule(), as_point(0.0),
                                  small_grid)
        analyzer = TrajectoryAnalyzer(result)
        assert analyzer.geometric_ratio() is None
        assert analyzer.last_move_index() == 0
        assert analyzer.summary_metrics()["moves"] == 0.0
        assert analyzer.steps_to_tolerance(None) == {1e-2: None, 1e-4: None, 1e-6: None}

    def test_cumulative_cost_column(self, quadratic, euclidean, weak_resistance, small_grid):
        result = inexact_prox_run(quadratic, euclidean, weak_resistance, exact_schedule(), as_point(2.0),
                                  small_grid)
        analyzer = TrajectoryAnalyzer(result)
        assert analyzer.get_cumulative_cost().tolist() == [1.0, 2.0, 2.0]
        assert analyzer.last_move_index() == 2


class TestLambdaSweep:
    LAMBDAS = [0.1, 1.0, 10.0]

    def test_rows_per_lambda(self, quadratic, euclidean, weak_resistance, small_grid):
        frame = lambda_sensitivity_sweep(quadratic, euclidean, weak_resistance, as_point(2.0), small_grid,
                                         self.LAMBDAS)
        assert list(frame.columns) == SWEEP_COLUMNS
        assert frame["lambda"].tolist() == self.LAMBDAS
        assert frame["final_f"].tolist() == [0.0, 0.0, 4.0]
        # at λ = 10 nothing is worth leaving 2 for
        assert frame["x0_is_trap"].tolist() == [False, False, True]
        assert frame["trapped"].tolist() == [True, True, True]
        assert frame["stop_reason"].tolist() == ["trap-reached"] * 3
        assert frame["cumulative_cost"].tolist() == [2.0, 2.0, 0.0]

    def test_threads_do_not_change_rows(self, quadratic, euclidean, weak_resistance, small_grid):
        serial = lambda_sensitivity_sweep(quadratic, euclidean, weak_resistance, as_point(2.0), small_grid,
                                          self.LAMBDAS)
        threaded = lambda_sensitivity_sweep(quadratic, euclidean, weak_resistance, as_point(2.0), small_grid,
                                            self.LAMBDAS, jobs=2)
        pd.testing.assert_frame_equal(serial, threaded)

    def test_box_sweep_shares_the_start(self, quadratic, euclidean, weak_resistance, box):
        frame = lambda_sensitivity_sweep(quadratic, euclidean, weak_resistance, as_point(8.0), box, [1.0, 3.0],
                                         settings=SolverSettings(trap_samples=64))
        assert frame["stop_reason"].iloc[0] == "stopping-rule"
        assert (frame["final_f"] < 1e-6).all()
        assert not frame["x0_is_trap"].any()

    def test_lambdas_must_be_positive(self, quadratic, euclidean, weak_resistance, small_grid):
        with pytest.raises(ValueError):
            lambda_sensitivity_sweep(quadratic, euclidean, weak_resistance, as_point(2.0), small_grid, [1.0, 0.0])
