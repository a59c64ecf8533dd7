"""
Tests for space-time lattices, characteristic tracing, budgets and the
fixed-point iteration.
"""

from __future__ import annotations

import math
from collections.abc import Callable

import numpy as np
import pytest

from pipeobs.exceptions import PicardError
from pipeobs.models.network import NetworkTopology
from pipeobs.models.pressure import PressureLaw
from pipeobs.models.scenario import Scenario
from pipeobs.models.types import Family
from pipeobs.picard.budget import (
    HORIZON_SAFETY,
    damping_limit,
    derive_budget,
    max_horizon,
    network_coupling_gain,
    validate_budget,
)
from pipeobs.picard.characteristics import FootKind, trace_characteristic, trace_family
from pipeobs.picard.fixed_point import (
    PicardProblem,
    apply_phi,
    iterate_to_fixed_point,
    semi_global_continuation,
)
from pipeobs.picard.lattice import EdgeLattice, SpaceTimeField, measure_lipschitz, norm_M

pytestmark = pytest.mark.integration


def _frozen(
    T: float, s_plus: Callable[[np.ndarray], np.ndarray], s_minus: float = 0.0
) -> SpaceTimeField:
    xs = np.linspace(0.0, 1.0, 21)
    times = np.linspace(0.0, T, 11)
    return SpaceTimeField.frozen(times, {"pipe": (xs, s_plus(xs), np.full(xs.size, s_minus))})


@pytest.fixture
def rest_lattice() -> EdgeLattice:
    return _frozen(0.5, np.zeros_like)["pipe"]


class TestLattice:
    """Norms and Lipschitz measurement on lattices."""

    def test_norm_of_constant_field(self) -> None:
        field = _frozen(1.0, lambda xs: np.full(xs.size, 0.1), -0.2)
        assert norm_M(field) == pytest.approx(0.3)
        assert norm_M(field, field) == 0.0

    def test_norm_of_difference(self) -> None:
        a = _frozen(1.0, lambda xs: np.full(xs.size, 0.1))
        b = _frozen(1.0, lambda xs: 0.1 + 0.05 * xs)
        assert norm_M(a, b) == pytest.approx(0.05)

    def test_lipschitz_of_constant(self) -> None:
        slope, sup = measure_lipschitz(_frozen(1.0, lambda xs: np.full(xs.size, -0.3)))
        assert slope == 0.0
        assert sup == pytest.approx(0.3)

    def test_lipschitz_of_ramp(self) -> None:
        slope, sup = measure_lipschitz(_frozen(1.0, lambda xs: 0.5 * xs))
        assert slope == pytest.approx(0.5)
        assert sup == pytest.approx(0.5)

    def test_terminal_rows_and_horizon(self) -> None:
        field = _frozen(0.4, lambda xs: xs)
        xs, sp, sm = field.terminal_rows()["pipe"]
        np.testing.assert_array_equal(sp, xs)
        np.testing.assert_array_equal(sm, 0.0)
        assert field.T == pytest.approx(0.4)
        assert field.is_finite()


class TestCharacteristics:
    """Backward tracing through a rest state, where lambda+- = +-c."""

    @pytest.mark.parametrize(("family", "x_foot"), [(Family.PLUS, 0.2), (Family.MINUS, 0.8)])
    def test_initial_foot(
        self, law: PressureLaw, rest_lattice: EdgeLattice, family: Family, x_foot: float
    ) -> None:
        foot = trace_characteristic(law, rest_lattice, family, 0.5, 0.3, 1.5)
        assert foot.kind is FootKind.INITIAL
        assert foot.x == pytest.approx(x_foot, abs=1e-12)
        assert foot.t == pytest.approx(0.0, abs=1e-12)
        assert foot.path_t[0] == 0.3

    def test_boundary_foot(self, law: PressureLaw, rest_lattice: EdgeLattice) -> None:
        foot = trace_characteristic(law, rest_lattice, Family.PLUS, 0.11, 0.3, 1.5)
        assert foot.kind is FootKind.START
        assert foot.t == pytest.approx(0.19, abs=1e-12)
        assert foot.x == 0.0
        foot = trace_characteristic(law, rest_lattice, Family.MINUS, 0.95, 0.3, 1.5)
        assert foot.kind is FootKind.END
        assert foot.t == pytest.approx(0.25, abs=1e-12)

    def test_family_matches_single_traces(
        self, law: PressureLaw, rest_lattice: EdgeLattice
    ) -> None:
        t = np.array([0.3, 0.3, 0.45])
        x = np.array([0.5, 0.11, 0.9])
        trace = trace_family(law, rest_lattice, Family.PLUS, t, x, 1.5)
        np.testing.assert_allclose(trace.x_foot, [0.2, 0.0, 0.45], atol=1e-12)
        np.testing.assert_allclose(trace.t_foot, [0.0, 0.19, 0.0], atol=1e-12)
        assert list(trace.kind) == [FootKind.INITIAL, FootKind.START, FootKind.INITIAL]
        np.testing.assert_array_equal(trace.integral, 0.0)

    def test_path_integral(self, law: PressureLaw, rest_lattice: EdgeLattice) -> None:
        def ones(s: np.ndarray, _: np.ndarray) -> np.ndarray:
            return np.ones_like(s)

        t, x = np.array([0.3, 0.4]), np.array([0.5, 0.6])
        plain = trace_family(law, rest_lattice, Family.MINUS, t, x, 1.5, ones)
        np.testing.assert_allclose(plain.integral, t - plain.t_foot, rtol=1e-12)
        damped = trace_family(law, rest_lattice, Family.MINUS, t, x, 1.5, ones, rate=1.0)
        expected = 1.0 - np.exp(-(t - damped.t_foot))
        np.testing.assert_allclose(damped.integral, expected, rtol=1e-4)

    def test_lattice_start_time(self, law: PressureLaw, rest_lattice: EdgeLattice) -> None:
        foot = trace_characteristic(law, rest_lattice, Family.PLUS, 0.5, 0.0, 1.5)
        assert foot.kind is FootKind.INITIAL and foot.x == 0.5


class TestBudget:
    """Smallness budgets of frozen data fields."""

    def test_isothermal_budget(self, law: PressureLaw, single_pipe: NetworkTopology) -> None:
        data = _frozen(0.5, lambda xs: np.full(xs.size, 0.01), 0.01)
        budget = derive_budget(law, single_pipe, data, mu=0.0, gamma=0.0)
        assert budget.B_max == pytest.approx(0.01)
        assert budget.S_max == pytest.approx(0.02)
        assert budget.L_I == 0.0
        assert budget.L_R == pytest.approx(0.04)
        assert (budget.lam_lo, budget.lam_hi) == pytest.approx((0.5, 1.5))
        assert budget.L_lambda == pytest.approx(0.5)
        assert budget.coupling_gain == 1.0
        assert budget.margins()["crossing"] == pytest.approx(1.0 / 1.5 - 0.5)
        assert budget.certified
        validate_budget(budget)
        assert budget.to_dict()["certified"] is True

    def test_long_horizon_rejected(self, law: PressureLaw, single_pipe: NetworkTopology) -> None:
        data = _frozen(1.0, lambda xs: np.full(xs.size, 0.01))
        budget = derive_budget(law, single_pipe, data, mu=0.0, gamma=0.0)
        with pytest.raises(PicardError, match="smallness budget") as info:
            validate_budget(budget, window=3)
        assert info.value.details["violated"] == ["crossing"]
        assert info.value.details["window"] == 3

    def test_damping_condition(self, law: PressureLaw, single_pipe: NetworkTopology) -> None:
        data = _frozen(0.5, lambda xs: np.full(xs.size, 0.01))
        budget = derive_budget(law, single_pipe, data, mu=1.0, gamma=0.0)
        assert budget.margins()["damping"] < 0.0
        assert not budget.certified

    def test_explicit_ball_smaller_than_data(
        self, law: PressureLaw, single_pipe: NetworkTopology
    ) -> None:
        data = _frozen(0.1, lambda xs: np.full(xs.size, 0.01))
        budget = derive_budget(law, single_pipe, data, mu=0.0, gamma=0.0, S_max=0.005)
        with pytest.raises(PicardError) as info:
            validate_budget(budget)
        assert info.value.details["violated"] == ["data"]

    def test_small_data_failure(self, law: PressureLaw, single_pipe: NetworkTopology) -> None:
        data = _frozen(0.1, lambda xs: np.full(xs.size, 0.4))
        with pytest.raises(PicardError, match="small-data"):
            derive_budget(law, single_pipe, data, mu=0.0, gamma=0.0)

    def test_horizon(self) -> None:
        limit = damping_limit(0.5, 1.5, 1.0)
        assert limit == pytest.approx(4.0 / 135.0 / 12.0)
        assert max_horizon(0.5, 1.5, 0.0, 1.0, 1.0) == pytest.approx(HORIZON_SAFETY / 1.5)
        assert max_horizon(0.5, 1.5, 1.0, 1.0, 1.0) == pytest.approx(-2.0 * math.log1p(-limit))

    def test_coupling_gain(self, law: PressureLaw, star3: NetworkTopology) -> None:
        assert network_coupling_gain(law, NetworkTopology.single_pipe(1.0), 0.02) == 1.0
        gain = network_coupling_gain(law, star3, 0.02)
        assert 0.0 < gain <= 3.0 + 1e-2


class TestFixedPoint:
    """Iteration, convergence reporting and continuation."""

    def test_zero_data_converges_at_once(self, load_example: Callable[[str], Scenario]) -> None:
        problem = PicardProblem.from_scenario(load_example("rest"), 0.004, 20, 10)
        budget = problem.budget()
        result = iterate_to_fixed_point(problem, budget)
        assert result.converged and result.certified
        assert result.iterations == 1
        assert result.residual == 0.0
        assert norm_M(result.solution) == 0.0

    def test_small_data_contracts(self, load_example: Callable[[str], Scenario]) -> None:
        problem = PicardProblem.from_scenario(load_example("picard_small"), 0.009, 20, 10)
        budget = problem.budget(0.02)
        validate_budget(budget)
        result = iterate_to_fixed_point(problem, budget, max_iters=50)
        assert result.converged
        assert result.max_ratio is not None and result.max_ratio < 1.0
        again = apply_phi(problem, result.solution, budget=budget)
        assert norm_M(again, result.solution) <= 1e-9
        summary = result.to_dict()
        assert summary["iterations"] == result.iterations
        assert summary["budget"]["S_max"] == pytest.approx(0.02)

    def test_observer_needs_truth(self, load_example: Callable[[str], Scenario]) -> None:
        problem = PicardProblem.from_scenario(
            load_example("picard_small"), 0.009, 20, 10, observer=True
        )
        assert problem.observed
        with pytest.raises(PicardError, match="truth field"):
            apply_phi(problem, problem.data_field())
        with pytest.raises(PicardError, match="truth problem"):
            semi_global_continuation(problem, 1)

    def test_observer_with_truth(self, load_example: Callable[[str], Scenario]) -> None:
        scenario = load_example("picard_small")
        truth = PicardProblem.from_scenario(scenario, 0.009, 20, 10)
        observer = PicardProblem.from_scenario(scenario, 0.009, 20, 10, observer=True)
        result = semi_global_continuation(observer, 2, truth, S_max=0.02, max_iters=50)
        assert result.failed_window is None
        assert len(result.windows) == 2 and len(result.truth_windows) == 2
        assert result.certified
        assert 0.0 < result.C_T <= 0.02
        assert result.to_dict()["S_max_k"] == result.sup_norms

    def test_zero_data_continuation(self, load_example: Callable[[str], Scenario]) -> None:
        problem = PicardProblem.from_scenario(load_example("rest"), 0.004, 20, 10)
        result = semi_global_continuation(problem, 2)
        assert result.certified
        assert result.C_T == 0.0
        assert [r.iterations for r in result.windows] == [1, 1]

    def test_failed_budget_names_window(self, load_example: Callable[[str], Scenario]) -> None:
        problem = PicardProblem.from_scenario(load_example("picard_large"), 0.009, 20, 10)
        with pytest.raises(PicardError) as info:
            semi_global_continuation(problem, 2, S_max=0.004)
        assert info.value.details["window"] == 0
        assert "data" in info.value.details["violated"]

    def test_next_window_shifts_schedules(self, load_example: Callable[[str], Scenario]) -> None:
        problem = PicardProblem.from_scenario(load_example("rest"), 0.004, 20, 10)
        shifted = problem.next_window(problem.data_field().terminal_rows())
        assert shifted.T == problem.T
        assert shifted.boundary["left"].schedule(0.0) == problem.boundary["left"].schedule(0.004)
