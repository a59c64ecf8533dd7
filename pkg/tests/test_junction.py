"""
Tests for inner-node coupling and boundary inversions.
"""

from __future__ import annotations

import math

import numpy as np
import pytest
from scipy import optimize
from structlog.testing import CapturingLogger

from pipeobs.exceptions import BoundaryWindowError, NoSubsonicRootError, SmallDataError
from pipeobs.models.pressure import PressureLaw
from pipeobs.numerics import junction
from pipeobs.numerics.junction import (
    NodeProblem,
    couple_node,
    coupling_jacobian,
    coupling_residual,
    invert_boundary_h,
    invert_boundary_m,
)


pytestmark = pytest.mark.unit


class TestCouplingResidual:
    """Mass balance and enthalpy continuity in node-local orientation."""

    def test_zero_state(self, law: PressureLaw) -> None:
        np.testing.assert_array_equal(coupling_residual(law, np.zeros(3), np.zeros(3)), 0.0)

    @pytest.mark.parametrize("r_plus", [-0.05, 0.0, 0.02])
    def test_single_edge(self, law: PressureLaw, r_plus: float) -> None:
        """One edge: the residual is rho (R+ - r), zero only for R+ = r."""
        r = 0.02
        residual = coupling_residual(law, [r], [r_plus])
        rho = math.exp(0.5 * (r + r_plus))
        assert residual[0] == pytest.approx(rho * (r_plus - r), abs=1e-15)
        assert (residual[0] == 0.0) == (r_plus == r)

    def test_jacobian_matches_finite_differences(
        self, power_law: PressureLaw, rng: np.random.Generator
    ) -> None:
        r_minus = rng.uniform(-0.05, 0.05, size=4)
        r_plus = rng.uniform(-0.05, 0.05, size=4)
        jac = coupling_jacobian(power_law, r_minus, r_plus)
        h = 1e-7
        numeric = np.empty_like(jac)
        for j in range(4):
            step = np.zeros(4)
            step[j] = h
            numeric[:, j] = (
                coupling_residual(power_law, r_minus, r_plus + step)
                - coupling_residual(power_law, r_minus, r_plus - step)
            ) / (2 * h)
        np.testing.assert_allclose(jac, numeric, atol=1e-7)


class TestCoupleNode:
    """Damped Newton for inner nodes."""

    def test_zero_incoming(self, law: PressureLaw) -> None:
        solution = couple_node(NodeProblem("n", law, np.zeros(3)))
        np.testing.assert_allclose(solution.R_plus, 0.0, atol=1e-14)
        assert solution.iterations == 0
        assert solution.gain == 0.0

    def test_three_edges(self, law: PressureLaw) -> None:
        r_minus = np.array([0.01, 0.02, 0.03])
        solution = couple_node(NodeProblem("n", law, r_minus))
        residual = coupling_residual(law, r_minus, solution.R_plus)
        assert float(np.max(np.abs(residual))) <= 1e-10
        assert solution.residual <= 1e-10

    def test_three_edges_against_root_finder(self, law: PressureLaw) -> None:
        r_minus = np.array([0.01, 0.02, 0.03])
        solution = couple_node(NodeProblem("n", law, r_minus))
        reference = optimize.root(
            lambda x: coupling_residual(law, r_minus, x), r_minus, tol=1e-14
        )
        np.testing.assert_allclose(solution.R_plus, reference.x, atol=1e-9)

    def test_symmetric_star_reflects(self, law: PressureLaw) -> None:
        """Equal incoming data on all edges forces zero velocity: R+ = R-."""
        r = 0.04
        solution = couple_node(NodeProblem("n", law, np.full(3, r)))
        np.testing.assert_allclose(solution.R_plus, r, atol=1e-12)

    def test_two_identical_edges_pass_through(self, law: PressureLaw) -> None:
        """A degree-two node between equal pipes transmits the arriving waves."""
        r_minus = np.array([0.03, -0.01])
        solution = couple_node(NodeProblem("n", law, r_minus))
        np.testing.assert_allclose(solution.R_plus, r_minus[::-1], atol=1e-10)

    def test_strict_small_data(self, law: PressureLaw) -> None:
        problem = NodeProblem("n", law, np.array([0.2, 0.0, 0.0]), S_max=0.1)
        with pytest.raises(SmallDataError):
            couple_node(problem, strict=True)
        assert not couple_node(problem).certified


class TestBoundaryInversion:
    """Scalar boundary solves for prescribed m or h."""

    def test_mass_flow_rest(self, law: PressureLaw) -> None:
        assert invert_boundary_m(law, 0.0, 0.0) == pytest.approx(0.0, abs=1e-14)

    def test_zero_flux_reflects(self, law: PressureLaw) -> None:
        assert invert_boundary_m(law, 0.0, 0.07) == pytest.approx(0.07, abs=1e-12)

    def test_mass_flow_value(self, law: PressureLaw) -> None:
        root = invert_boundary_m(law, 0.05, 0.0)
        reference = optimize.brentq(lambda x: math.exp(0.5 * x) * 0.5 * x - 0.05, 0.0, 1.0)
        assert root == pytest.approx(reference, abs=1e-10)

    def test_bracket_fallback_is_logged(
        self, law: PressureLaw, monkeypatch: pytest.MonkeyPatch
    ) -> None:
        """One Newton step cannot reach the tolerance; brentq finishes the solve."""
        recorder = CapturingLogger()
        monkeypatch.setattr(junction, "logger", recorder)
        root = invert_boundary_m(law, 0.05, 0.0, max_iter=1)
        reference = optimize.brentq(lambda x: math.exp(0.5 * x) * 0.5 * x - 0.05, 0.0, 1.0)
        assert root == pytest.approx(reference, abs=1e-10)
        (call,) = recorder.calls
        assert call.method_name == "debug"
        assert call.kwargs["what"] == "m_b"
        assert call.kwargs["error_type"] == "RuntimeError"
        assert call.kwargs["max_iter"] == 1

    def test_enthalpy_rest(self, law: PressureLaw) -> None:
        assert invert_boundary_h(law, float(law.dP(1.0)), 0.0) == pytest.approx(0.0, abs=1e-12)

    def test_enthalpy_value(self, law: PressureLaw) -> None:
        """x**2/8 + 1 + x/2 = 1.1 on the subsonic branch."""
        expected = (-4.0 + math.sqrt(16.0 + 3.2)) / 2.0
        assert invert_boundary_h(law, 1.1, 0.0) == pytest.approx(expected, abs=1e-10)

    def test_enthalpy_lipschitz(self, law: PressureLaw) -> None:
        """|dR+/dh_b| <= 4 / (c sqrt(min p'))."""
        h = 1e-6
        for h_b in (0.95, 1.0, 1.05):
            upper = invert_boundary_h(law, h_b + h, 0.01)
            slope = (upper - invert_boundary_h(law, h_b, 0.01)) / h
            assert abs(slope) <= 4.0

    def test_no_subsonic_root(self, law: PressureLaw) -> None:
        """A warm start near the supersonic root R+ = -1.5 is rejected."""
        with pytest.raises(NoSubsonicRootError):
            invert_boundary_h(law, 1.53125, 1.0, warm_start=-1.6)

    def test_window(self, law: PressureLaw) -> None:
        with pytest.raises(BoundaryWindowError):
            invert_boundary_m(law, 0.5, 0.0, window=(-0.1, 0.1), strict=True)
