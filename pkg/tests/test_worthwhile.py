import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from habitprox.core import (
    ObjectiveSpec,
    QuasiDistance,
    ResistanceProfile,
    SearchSpace,
    TrapMonotonicityError,
    UnsupportedSpaceError,
    as_point,
)
from habitprox.worthwhile import (
    WorthwhileChecker,
    WorthwhileSpec,
    detect_trap,
    enumerate_worthwhile,
    is_worthwhile,
    trap_stability_sweep,
    worthwhile_mask,
)

LAMBDAS = [0.01, 0.1, 0.5, 1.0, 2.0, 10.0, 100.0]


@pytest.fixture
def grid_spec(small_grid):
    f = ObjectiveSpec.from_table(small_grid, [4.0, 1.0, 0.0, 1.0, 4.0])
    return WorthwhileSpec(f, QuasiDistance.euclidean(), ResistanceProfile.quadratic(), 1.0)


@st.composite
def table_instances(draw):
    size = draw(st.integers(min_value=2, max_value=9))
    values = draw(st.lists(st.floats(min_value=0.0, max_value=10.0), min_size=size, max_size=size))
    anchor = draw(st.integers(min_value=0, max_value=size - 1))
    up = draw(st.floats(min_value=0.5, max_value=3.0))
    down = draw(st.floats(min_value=0.5, max_value=3.0))
    space = SearchSpace.grid([-1.0], [1.0], size)
    f = ObjectiveSpec.from_table(space, values)
    spec = WorthwhileSpec(f, QuasiDistance.weighted_asymmetric(up, down), ResistanceProfile.linear(), 1.0)
    return spec, space, as_point(space.points()[anchor])


class TestIsWorthwhile:
    def test_exact_threshold_is_worthwhile(self, grid_spec):
        # f(-1) - f(0) = 1 = λ Γ(1)
        assert is_worthwhile(grid_spec, as_point(-1.0), as_point(0.0))

    def test_uphill_is_not(self, grid_spec):
        assert not is_worthwhile(grid_spec, as_point(0.0), as_point(1.0))

    def test_stay_is_always_worthwhile(self, grid_spec):
        assert is_worthwhile(grid_spec.with_lambda(1e6), as_point(2.0), as_point(2.0))

    def test_infinite_destination_never_is(self, grid_spec):
        assert not is_worthwhile(grid_spec, as_point(0.0), as_point(0.5))

    def test_ratio_must_be_positive(self, grid_spec):
        with pytest.raises(ValueError):
            grid_spec.with_lambda(0.0)
        with pytest.raises(ValueError):
            grid_spec.with_lambda(math.inf)

    def test_experience_weighted_spec(self, grid_spec):
        spec = WorthwhileSpec.from_experience(grid_spec.f, grid_spec.q, grid_spec.gamma, eta=1.0, weight=4.0)
        assert spec.lam == 0.25
        with pytest.raises(ValueError):
            WorthwhileSpec.from_experience(grid_spec.f, grid_spec.q, grid_spec.gamma, eta=1.0, weight=0.0)


class TestEnumerate:
    def test_members_in_grid_order(self, grid_spec):
        members = enumerate_worthwhile(grid_spec, as_point(-2.0), SearchSpace.grid([-2.0], [2.0], 5))
        # from -2 (f = 4): -1 gains 3 >= 1, 0 gains 4 >= 4, 1 gains 3 < 9
        assert members.tolist() == [[-2.0], [-1.0], [0.0]]

    def test_box_is_unsupported(self, grid_spec, box):
        with pytest.raises(UnsupportedSpaceError):
            worthwhile_mask(grid_spec, as_point(0.0), box)

    @given(table_instances())
    @settings(max_examples=100, deadline=None)
    def test_anchor_is_always_a_member(self, instance):
        spec, space, anchor = instance
        assert worthwhile_mask(spec, anchor, space)[space.index_of(anchor)]

    @given(table_instances(), st.floats(min_value=0.01, max_value=10.0), st.floats(min_value=1.0, max_value=10.0))
    @settings(max_examples=100, deadline=None)
    def test_sets_shrink_as_lambda_grows(self, instance, lam, factor):
        spec, space, anchor = instance
        low = worthwhile_mask(spec.with_lambda(lam), anchor, space)
        high = worthwhile_mask(spec.with_lambda(lam * factor), anchor, space)
        assert np.all(low | ~high)

    def test_changeable_count(self, grid_spec, small_grid):
        checker = WorthwhileChecker(grid_spec, small_grid)
        assert checker.get_changeable_count(as_point(-2.0)) == 2
        assert checker.get_changeable_count(as_point(0.0)) == 0


class TestTraps:
    def test_global_minimizer_is_a_trap(self, grid_spec, small_grid):
        report = detect_trap(grid_spec, as_point(0.0), small_grid)
        assert report.is_trap
        assert report.counterexample is None
        assert not report.probabilistic
        assert report.candidates_checked == 5

    def test_counterexample_is_worthwhile(self, grid_spec, small_grid):
        report = detect_trap(grid_spec, as_point(2.0), small_grid)
        assert not report.is_trap
        assert is_worthwhile(grid_spec, as_point(2.0), report.counterexample)

    def test_threshold_separates_verdicts(self, grid_spec, small_grid):
        checker = WorthwhileChecker(grid_spec, small_grid)
        anchor = as_point(2.0)
        threshold = checker.trap_threshold(anchor)
        # max over y of (f(2) - f(y)) / |2 - y|^2 is reached at y = 1
        assert threshold == 3.0
        assert not detect_trap(grid_spec.with_lambda(threshold), anchor, small_grid).is_trap
        assert detect_trap(grid_spec.with_lambda(threshold * 1.01), anchor, small_grid).is_trap

    def test_threshold_of_a_minimizer(self, grid_spec, small_grid):
        assert WorthwhileChecker(grid_spec, small_grid).trap_threshold(as_point(0.0)) == 0.0

    def test_sampled_trap_on_a_box(self, box):
        spec = WorthwhileSpec(ObjectiveSpec.quadratic(), QuasiDistance.euclidean(), ResistanceProfile.quadratic(), 1.0)
        report = detect_trap(spec, as_point(0.0), box, samples=256)
        assert report.is_trap
        assert report.probabilistic
        assert not detect_trap(spec, as_point(4.0), box, samples=256).is_trap

    def test_strong_resistance_traps_near_the_minimum(self, box):
        # with Γ linear and f = x^2, every |x| <= λ/2 is a trap
        spec = WorthwhileSpec(ObjectiveSpec.quadratic(), QuasiDistance.euclidean(), ResistanceProfile.linear(), 1.0)
        assert detect_trap(spec, as_point(0.3), box, samples=256).is_trap
        assert not detect_trap(spec, as_point(2.0), box, samples=256).is_trap


class TestStabilitySweep:
    def test_verdicts_flip_once(self, grid_spec, small_grid):
        reports = trap_stability_sweep(grid_spec, as_point(2.0), small_grid, LAMBDAS)
        verdicts = [r.is_trap for r in reports]
        assert verdicts == [False, False, False, False, False, True, True]

    def test_lambdas_must_ascend(self, grid_spec, small_grid):
        with pytest.raises(ValueError):
            trap_stability_sweep(grid_spec, as_point(2.0), small_grid, [1.0, 0.5])

    @given(table_instances())
    @settings(max_examples=100, deadline=None)
    def test_no_trap_is_ever_left(self, instance):
        spec, space, anchor = instance
        verdicts = [r.is_trap for r in trap_stability_sweep(spec, anchor, space, LAMBDAS)]
        assert verdicts == sorted(verdicts)

    def test_violation_carries_both_reports(self, small_grid):
        # resistance that vanishes after the first grid pass
        calls = {"n": 0}

        def gamma(t):
            calls["n"] += 1
            return t * t if calls["n"] <= small_grid.size else 0.0

        f = ObjectiveSpec.from_table(small_grid, [4.0, 1.0, 0.0, 1.0, 4.0])
        spec = WorthwhileSpec(f, QuasiDistance.euclidean(), ResistanceProfile("custom", gamma), 1.0)
        with pytest.raises(TrapMonotonicityError) as info:
            trap_stability_sweep(spec, as_point(2.0), small_grid, [10.0, 20.0])
        assert info.value.lower.is_trap
        assert info.value.lower.lam == 10.0
        assert not info.value.higher.is_trap
