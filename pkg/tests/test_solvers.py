import dataclasses
import math

import numpy as np
import pytest

from habitprox.core import (
    ConfigError,
    ObjectiveSpec,
    ProbeRefusedError,
    ProximalSchedule,
    QuasiDistance,
    ResistanceProfile,
    SearchSpace,
    SolverSettings,
    StepSequence,
    UnsupportedSpaceError,
    as_point,
)
from habitprox.solvers import (
    ProposalManager,
    ProposalPolicy,
    StopReason,
    accepts,
    evaluate_stopping_rule,
    exact_prox_step,
    exact_prox_step_constrained,
    inexact_prox_run,
    kl_inequality_probe,
    local_prox_step,
    marginal_resistance,
    min_over_worthwhile,
    multistart_minimize,
    projected_gradient_descent,
    prox_argmin_indices,
    prox_map_nonexpansiveness_probe,
    run_property_checks,
    solve_global,
    solve_local_prox,
    solve_prox,
    stopping_rule,
)
from habitprox.solvers.proposals import StepContext
from habitprox.solvers.prox import CLOSED_FORM, DESCENT, GRID


class TestExactProx:
    @pytest.mark.parametrize("lam", [0.1, 1.0, 10.0])
    @pytest.mark.parametrize("x", [-8.0, 2.0, 8.0])
    def test_closed_form_on_a_box(self, quadratic, euclidean, weak_resistance, box, lam, x):
        outcome = solve_prox(quadratic, euclidean, weak_resistance, lam, as_point(x), box)
        assert outcome.method == CLOSED_FORM
        assert outcome.point[0] == pytest.approx(lam * x / (1.0 + lam), rel=1e-12)

    @pytest.mark.parametrize("lam", [0.1, 1.0, 10.0])
    @pytest.mark.parametrize("x", [-8.0, 2.0, 8.0])
    def test_descent_agrees_with_closed_form(self, quadratic, euclidean, weak_resistance, box, lam, x):
        no_prox = dataclasses.replace(quadratic, prox=None)
        outcome = solve_prox(no_prox, euclidean, weak_resistance, lam, as_point(x), box)
        assert outcome.method == DESCENT
        assert outcome.converged
        assert outcome.point[0] == pytest.approx(lam * x / (1.0 + lam), rel=1e-6, abs=1e-9)

    def test_grid_enumeration(self, quadratic, euclidean, weak_resistance, small_grid):
        outcome = solve_prox(quadratic, euclidean, weak_resistance, 1.0, as_point(2.0), small_grid)
        # payoffs y^2 + (y - 2)^2 over -2..2 are 20, 10, 4, 2, 4
        assert outcome.method == GRID
        assert outcome.point.tolist() == [1.0]
        assert outcome.payoff == 2.0

    def test_ties_break_lexicographically(self, small_grid, euclidean):
        f = ObjectiveSpec.from_table(small_grid, [1.0, 0.0, 5.0, 0.0, 1.0])
        linear = ResistanceProfile.linear()
        assert prox_argmin_indices(f, euclidean, linear, 0.1, as_point(0.0), small_grid).tolist() == [1, 3]
        assert exact_prox_step(f, euclidean, linear, 0.1, as_point(0.0), small_grid).tolist() == [-1.0]

    @pytest.mark.parametrize("lam", [0.0, -1.0, float("inf")])
    def test_lambda_must_be_positive(self, quadratic, euclidean, weak_resistance, box, lam):
        with pytest.raises(ValueError):
            solve_prox(quadratic, euclidean, weak_resistance, lam, as_point(1.0), box)

    def test_anchor_outside_the_box(self, quadratic, euclidean, weak_resistance, box):
        with pytest.raises(ValueError):
            solve_prox(quadratic, euclidean, weak_resistance, 1.0, as_point(11.0), box)

    def test_global_grid_oracle(self, quadratic, small_grid, box):
        point, value = solve_global(quadratic, small_grid)
        assert point.tolist() == [0.0]
        assert value == 0.0
        with pytest.raises(UnsupportedSpaceError):
            solve_global(quadratic, box)


class TestWorthwhileConstrained:
    def test_constrained_step_matches_free_step(self, quadratic, euclidean, weak_resistance, small_grid):
        settings = SolverSettings(debug_checks=True)
        point = exact_prox_step_constrained(quadratic, euclidean, weak_resistance, 1.0, as_point(2.0),
                                            small_grid, settings)
        assert point.tolist() == [1.0]

    def test_min_over_worthwhile_reaches_further(self, quadratic, euclidean, weak_resistance, small_grid):
        settings = SolverSettings(debug_checks=True)
        # W_1(2) = {0, 1, 2}: f alone is smallest at 0 while the prox step stops at 1
        point = min_over_worthwhile(quadratic, euclidean, weak_resistance, 1.0, as_point(2.0), small_grid, settings)
        assert point.tolist() == [0.0]

    def test_box_is_unsupported(self, quadratic, euclidean, weak_resistance, box):
        with pytest.raises(UnsupportedSpaceError):
            min_over_worthwhile(quadratic, euclidean, weak_resistance, 1.0, as_point(2.0), box)
        with pytest.raises(UnsupportedSpaceError):
            exact_prox_step_constrained(quadratic, euclidean, weak_resistance, 1.0, as_point(2.0), box)

    def test_identities_hold_on_random_instances(self):
        report = run_property_checks(100, seed=0)
        assert report.passed
        assert {name: s.line() for name, s in report.checks.items()} == {
            "lemma1": "lemma1: 100/100 pass",
            "lemma2": "lemma2: 100/100 pass",
            "trap_monotonicity": "trap_monotonicity: 100/100 pass",
        }

    def test_unknown_check_is_rejected(self):
        with pytest.raises(ValueError):
            run_property_checks(1, seed=0, checks=["lemma3"])


class TestLocalProx:
    def test_ball_binds_on_a_box(self, quadratic, euclidean, weak_resistance, box):
        # the free prox step from 2 lands on 1, outside B_0.5(2)
        point = local_prox_step(quadratic, euclidean, weak_resistance, 1.0, as_point(2.0), 0.5, box)
        assert point[0] == pytest.approx(1.5, abs=1e-9)

    def test_ball_binds_on_a_grid(self, quadratic, euclidean, weak_resistance):
        grid = SearchSpace.grid([-2.0], [2.0], 9)
        point = local_prox_step(quadratic, euclidean, weak_resistance, 1.0, as_point(2.0), 0.5, grid)
        assert point.tolist() == [1.5]

    def test_large_ball_is_the_free_step(self, quadratic, euclidean, weak_resistance, box):
        point = local_prox_step(quadratic, euclidean, weak_resistance, 1.0, as_point(2.0), 5.0, box)
        assert point[0] == pytest.approx(1.0, rel=1e-12)

    def test_ball_and_box_both_bind_in_2d(self, euclidean, weak_resistance):
        # f(y) = -y1 - y2 has no feasible closed form; the minimizer sits where y1 = 0.5 meets the unit circle
        f = ObjectiveSpec.linear([-1.0, -1.0])
        space = SearchSpace.box([-0.5, -2.0], [0.5, 2.0])
        outcome = solve_local_prox(f, euclidean, weak_resistance, 0.01, as_point([0.0, 0.0]), 1.0, space)
        assert outcome.method == DESCENT
        assert outcome.converged
        assert outcome.point.tolist() == pytest.approx([0.5, math.sqrt(0.75)], abs=1e-7)
        assert outcome.payoff == pytest.approx(-0.5 - math.sqrt(0.75) + 0.01, rel=1e-9)

    def test_ball_and_box_both_bind_in_3d(self, euclidean, weak_resistance):
        # payoff 2 ||y - (2, 2, 2)||^2 + const: the projection of (2, 2, 2) onto the feasible set
        f = ObjectiveSpec.quadratic([4.0, 4.0, 4.0])
        space = SearchSpace.box([-0.25, -5.0, -5.0], [0.25, 5.0, 5.0])
        point = local_prox_step(f, euclidean, weak_resistance, 1.0, as_point([0.0, 0.0, 0.0]), 1.0, space)
        side = math.sqrt((1.0 - 0.25 ** 2) / 2.0)
        assert point.tolist() == pytest.approx([0.25, side, side], abs=1e-7)
        assert np.linalg.norm(point) <= 1.0 + 1e-12

    def test_local_step_beats_every_feasible_grid_point(self, euclidean, weak_resistance):
        f = ObjectiveSpec.linear([-1.0, -1.0])
        space = SearchSpace.box([-0.5, -2.0], [0.5, 2.0])
        anchor = as_point([0.0, 0.0])
        best = solve_local_prox(f, euclidean, weak_resistance, 0.01, anchor, 1.0, space).payoff
        mesh = SearchSpace.grid([-0.5, -1.0], [0.5, 1.0], 41).points()
        inside = mesh[np.linalg.norm(mesh, axis=1) <= 1.0]
        payoffs = [f(y) + 0.01 * weak_resistance(euclidean(anchor, y)) for y in inside]
        assert best <= min(payoffs) + 1e-9

    def test_radius_must_be_positive(self, quadratic, euclidean, weak_resistance, box):
        with pytest.raises(ValueError):
            local_prox_step(quadratic, euclidean, weak_resistance, 1.0, as_point(2.0), 0.0, box)


class TestInnerDescent:
    def test_projected_minimum_on_the_boundary(self):
        result = projected_gradient_descent(
            lambda x: float((x[0] - 3.0) ** 2),
            lambda x: np.array([2.0 * (x[0] - 3.0)]),
            np.array([0.0]),
            lambda z: np.clip(z, -1.0, 1.0),
        )
        assert result.converged
        assert result.point.tolist() == [1.0]

    def test_best_start_wins(self):
        def fun(x):
            return float(x[0] ** 4 - x[0] ** 2 + 0.1 * x[0])

        def grad(x):
            return np.array([4.0 * x[0] ** 3 - 2.0 * x[0] + 0.1])

        result = multistart_minimize(fun, grad, [np.array([1.0]), np.array([-1.0])],
                                     lambda z: np.clip(z, -2.0, 2.0))
        assert result.point[0] < 0

    def test_needs_a_start(self):
        with pytest.raises(ValueError):
            multistart_minimize(lambda x: 0.0, lambda x: np.zeros(1), [], lambda z: z)


class TestStoppingRule:
    def test_fires_at_equality(self, quadratic, euclidean, weak_resistance):
        # ||f'(1)|| = 2 and λ Γ'(q(2, 1)) ||∇q|| = 1 * 2 * 1
        check = evaluate_stopping_rule(quadratic, euclidean, weak_resistance, 1.0, as_point(2.0), as_point(1.0))
        assert check.fired
        assert check.grad_norm == 2.0
        assert check.resistance_bound == 2.0

    def test_holds_off_while_the_need_still_drops_fast(self, quadratic, euclidean, weak_resistance):
        assert not stopping_rule(quadratic, euclidean, weak_resistance, 1.0, as_point(2.0), as_point(1.5))

    def test_no_resistance_at_the_anchor(self, euclidean, weak_resistance):
        assert marginal_resistance(euclidean, weak_resistance, as_point(2.0), as_point(2.0)) == 0.0

    def test_abstains_on_non_finite_derivatives(self, quadratic, euclidean, weak_resistance):
        check = evaluate_stopping_rule(quadratic, euclidean, weak_resistance, 1.0, as_point(2.0), as_point(1.0),
                                       subgrad_f=np.array([np.inf]))
        assert check.abstained
        assert not check.fired

    def test_negative_bound_is_rejected(self, quadratic, euclidean, weak_resistance):
        with pytest.raises(ValueError):
            stopping_rule(quadratic, euclidean, weak_resistance, 1.0, as_point(2.0), as_point(1.0),
                          resistance_bound=-1.0)


class TestInexactRuns:
    def test_exact_schedule_reproduces_prox_iterates(self, quadratic, euclidean, weak_resistance, box,
                                                     full_length):
        schedule = ProximalSchedule.exact(StepSequence.constant(1.0), max_steps=50)
        result = inexact_prox_run(quadratic, euclidean, weak_resistance, schedule, as_point(8.0), box,
                                  settings=full_length)
        expected = [as_point(8.0)]
        for _ in range(50):
            expected.append(exact_prox_step(quadratic, euclidean, weak_resistance, 1.0, expected[-1], box))
        assert result.stop_reason is StopReason.MAX_STEPS
        assert len(result.steps) == 50
        assert [p.tolist() for p in result.iterates] == [p.tolist() for p in expected]
        assert result.final[0] == 8.0 * 0.5 ** 50

    def test_stopping_rule_ends_a_converging_run(self, quadratic, euclidean, weak_resistance, box):
        schedule = ProximalSchedule.exact(StepSequence.constant(1.0))
        result = inexact_prox_run(quadratic, euclidean, weak_resistance, schedule, as_point(8.0), box)
        # steps cost 4, 2, 1, ... and the rule fires on each; the run ends once a step costs <= 1e-12
        assert result.stop_reason is StopReason.STOPPING_RULE
        assert len(result.steps) == 43
        assert all(step.stop_rule_fired for step in result.steps)

    def test_grid_run_ends_in_a_trap(self, quadratic, euclidean, weak_resistance, small_grid):
        schedule = ProximalSchedule.exact(StepSequence.constant(1.0))
        result = inexact_prox_run(quadratic, euclidean, weak_resistance, schedule, as_point(2.0), small_grid)
        assert result.stop_reason is StopReason.TRAP_REACHED
        assert [p.tolist() for p in result.iterates] == [[2.0], [1.0], [0.0], [0.0]]
        assert result.steps[-1].inner_solver == "trap-check"
        assert result.diagnostics["cumulative_cost"] == 2.0

    def test_relaxed_acceptance_is_sound(self, quadratic, euclidean, weak_resistance, box):
        schedule = ProximalSchedule(
            lam=StepSequence.constant(2.0),
            mu=StepSequence.constant(0.5),
            epsilon=StepSequence.geometric(0.1, 0.5),
            max_steps=40,
        )
        settings = SolverSettings(patience=5)
        result = inexact_prox_run(quadratic, euclidean, weak_resistance, schedule, as_point(9.0), box,
                                  proposal=ProposalPolicy.RANDOM_WORTHWHILE_SAMPLE, settings=settings,
                                  rng=np.random.default_rng(3))
        assert result.steps
        assert all(step.recheck(quadratic, euclidean, weak_resistance) for step in result.steps)
        assert all(step.f_before - step.f_after >= -step.epsilon_k for step in result.steps)

    def test_satisficing_without_error_descends(self, quadratic, euclidean, weak_resistance, box):
        schedule = ProximalSchedule(
            lam=StepSequence.constant(1.0),
            mu=StepSequence.constant(0.5),
            epsilon=StepSequence.constant(0.0),
            max_steps=50,
        )
        result = inexact_prox_run(quadratic, euclidean, weak_resistance, schedule, as_point(8.0), box)
        assert result.f_series[-1] < 1e-4
        assert list(result.f_series) == sorted(result.f_series, reverse=True)
        for step in result.steps:
            assert step.f_before - step.f_after >= 0.5 * step.step_cost ** 2

    def test_start_must_be_feasible(self, quadratic, euclidean, weak_resistance, box):
        schedule = ProximalSchedule.exact(StepSequence.constant(1.0))
        with pytest.raises(ValueError):
            inexact_prox_run(quadratic, euclidean, weak_resistance, schedule, as_point(20.0), box)

    def test_same_seed_same_trajectory(self, quadratic, euclidean, weak_resistance, box):
        schedule = ProximalSchedule(lam=StepSequence.constant(1.0), max_steps=20)
        runs = [
            inexact_prox_run(quadratic, euclidean, weak_resistance, schedule, as_point(5.0), box,
                             proposal=ProposalPolicy.RANDOM_WORTHWHILE_SAMPLE, rng=np.random.default_rng(11))
            for _ in range(2)
        ]
        assert [s.to_dict() for s in runs[0].steps] == [s.to_dict() for s in runs[1].steps]


class TestProposals:
    def context(self, anchor, f):
        return StepContext(as_point(anchor), f(as_point(anchor)), 1.0, 1.0, 0.0)

    def test_unknown_policy(self):
        with pytest.raises(ConfigError) as info:
            ProposalPolicy.parse("hill-climb")
        assert info.value.field == "proposal"

    def test_first_improving_neighbor_on_a_grid(self, quadratic, euclidean, weak_resistance, small_grid):
        manager = ProposalManager(quadratic, euclidean, weak_resistance, small_grid,
                                  ProposalPolicy.FIRST_IMPROVING_NEIGHBOR)
        assert manager.propose(self.context(2.0, quadratic)).point.tolist() == [1.0]
        assert manager.propose(self.context(0.0, quadratic)) is None

    def test_gradient_step_backtracks(self, quadratic, euclidean, weak_resistance, box):
        manager = ProposalManager(quadratic, euclidean, weak_resistance, box, ProposalPolicy.GRADIENT_STEP_THEN_TEST)
        # the full step lands on -8, gaining nothing; half of it lands on the minimizer
        assert manager.propose(self.context(8.0, quadratic)).point.tolist() == [0.0]

    def test_random_sample_passes_the_test(self, quadratic, euclidean, weak_resistance, box):
        manager = ProposalManager(quadratic, euclidean, weak_resistance, box,
                                  ProposalPolicy.RANDOM_WORTHWHILE_SAMPLE, rng=np.random.default_rng(0))
        proposal = manager.propose(self.context(8.0, quadratic))
        assert proposal is not None
        y = proposal.point
        assert accepts(64.0, quadratic(y), euclidean(as_point(8.0), y), 1.0, 1.0, 0.0, weak_resistance)

    def test_local_needs_a_radius(self, quadratic, euclidean, weak_resistance, box):
        manager = ProposalManager(quadratic, euclidean, weak_resistance, box, ProposalPolicy.LOCAL_EXACT)
        with pytest.raises(ConfigError):
            manager.propose(self.context(2.0, quadratic))

    def test_worthwhile_min_needs_a_grid(self, quadratic, euclidean, weak_resistance, box):
        with pytest.raises(UnsupportedSpaceError):
            ProposalManager(quadratic, euclidean, weak_resistance, box, ProposalPolicy.WORTHWHILE_MIN)


class TestProbes:
    PAIRS = [(as_point(-3.0), as_point(5.0)), (as_point(1.0), as_point(1.0)), (as_point(0.5), as_point(-7.25))]

    def test_quadratic_prox_map_contracts(self, quadratic):
        report = prox_map_nonexpansiveness_probe(quadratic, 1.0, self.PAIRS)
        assert report.passed
        assert report.checked == 2
        assert report.skipped == 1
        assert report.statistic == pytest.approx(0.5, rel=1e-12)

    def test_soft_threshold_is_nonexpansive(self):
        report = prox_map_nonexpansiveness_probe(ObjectiveSpec.absolute(), 0.5, self.PAIRS)
        assert report.passed
        assert report.statistic <= 1.0 + 1e-12

    def test_refusals(self, quadratic):
        with pytest.raises(ProbeRefusedError):
            prox_map_nonexpansiveness_probe(ObjectiveSpec.double_well(), 1.0, self.PAIRS)
        with pytest.raises(ProbeRefusedError):
            prox_map_nonexpansiveness_probe(quadratic, 1.0, self.PAIRS, gamma=ResistanceProfile.linear())
        with pytest.raises(ProbeRefusedError):
            prox_map_nonexpansiveness_probe(quadratic, 1.0, self.PAIRS, q=QuasiDistance.weighted_asymmetric())

    @pytest.mark.parametrize("objective", [ObjectiveSpec.quadratic(), ObjectiveSpec.absolute()])
    def test_kl_inequality_is_tight(self, objective):
        samples = [as_point(x) for x in np.linspace(-5.0, 5.0, 11)]
        report = kl_inequality_probe(objective, as_point(0.0), samples, c=1.0)
        assert report.passed
        assert report.checked == 10
        assert report.skipped == 1
        assert report.worst_margin >= -1e-12

    def test_kl_inequality_fails_with_a_small_constant(self, quadratic):
        report = kl_inequality_probe(quadratic, as_point(0.0), [as_point(1.0), as_point(2.0)], c=0.5)
        assert not report.passed
        assert report.statistic == 0.0
        assert report.witness == [[1.0]]
        assert report.worst_margin == pytest.approx(-0.5)

    def test_kl_needs_an_exponent(self):
        with pytest.raises(ProbeRefusedError):
            kl_inequality_probe(ObjectiveSpec.double_well(), as_point(0.0), [as_point(1.0)], c=1.0)
        with pytest.raises(ValueError):
            kl_inequality_probe(ObjectiveSpec.quadratic(), as_point(0.0), [as_point(1.0)], c=0.0)
