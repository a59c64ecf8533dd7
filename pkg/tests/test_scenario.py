"""
Tests for scenario loading, profiles, schedules and solver settings.
"""

from __future__ import annotations

import json
from collections.abc import Callable
from pathlib import Path
from typing import Any

import numpy as np
import pytest

from pipeobs.exceptions import ConfigurationError, ValidationError
from pipeobs.models.config import SettingsManager, SolverSettings
from pipeobs.models.profiles import Schedule, parse_profile, parse_schedule
from pipeobs.models.scenario import Scenario, load_scenario, load_scenario_file
from pipeobs.models.types import MeasurementMode, StepperKind

pytestmark = pytest.mark.config


class TestLoadScenario:
    """Parsing and validation of scenario documents."""

    def test_minimal_rest_state(self, make_scenario: Callable[..., Scenario]) -> None:
        scenario = make_scenario()
        assert scenario.cells == 20
        assert scenario.grid["pipe"].cells == 20
        assert scenario.mode is MeasurementMode.VELOCITY
        assert scenario.method is StepperKind.MOC
        assert scenario.anchor_node == "right"
        state = scenario.initial_state()
        np.testing.assert_array_equal(state.rho["pipe"], 1.0)
        np.testing.assert_allclose(state.traces["pipe"], 0.0, atol=1e-15)

    def test_negative_density(self, pipe_config: Callable[..., dict[str, Any]]) -> None:
        document = pipe_config(
            initial={"pipe": {"rho": {"constant": -1.0}, "v": {"constant": 0.0}}}
        )
        with pytest.raises(ValidationError, match="density not positive"):
            load_scenario(json.dumps(document))

    def test_supersonic_initial_data(self, pipe_config: Callable[..., dict[str, Any]]) -> None:
        document = pipe_config(
            initial={"pipe": {"rho": {"constant": 1.0}, "v": {"linear": [0.0, 1.5]}}},
            boundary=[
                {"node": "left", "quantity": "m", "schedule": {"constant": 0.0}},
                {"node": "right", "quantity": "h", "schedule": {"constant": 2.125}},
            ],
        )
        with pytest.raises(ValidationError, match="supersonic"):
            load_scenario(json.dumps(document))

    def test_incompatible_boundary(self, pipe_config: Callable[..., dict[str, Any]]) -> None:
        document = pipe_config(
            boundary=[
                {"node": "left", "quantity": "m", "schedule": {"constant": 0.1}},
                {"node": "right", "quantity": "h", "schedule": {"constant": 1.0}},
            ]
        )
        with pytest.raises(ValidationError, match="incompatible initial/boundary"):
            load_scenario(json.dumps(document))

    def test_incompatible_observer_initial(
        self, pipe_config: Callable[..., dict[str, Any]]
    ) -> None:
        """The observer's own start must also match the closed left end."""
        document = pipe_config(
            observer_initial={"pipe": {"rho": {"constant": 1.0}, "v": {"constant": 0.05}}}
        )
        with pytest.raises(ValidationError, match="incompatible initial/boundary") as info:
            load_scenario(json.dumps(document))
        assert info.value.details["data"] == "observer_initial"
        assert info.value.details["node"] == "left"

    def test_compatible_observer_initial(
        self, pipe_config: Callable[..., dict[str, Any]]
    ) -> None:
        document = pipe_config(
            observer_initial={"pipe": {"rho": {"constant": 1.0}, "v": {"linear": [0.0, 0.0]}}},
            perturbation={"rho": 0.01},
        )
        scenario = load_scenario(json.dumps(document))
        observer = scenario.initial_state(observer=True)
        assert observer.rho["pipe"].max() > 1.0

    def test_negative_length(self, pipe_config: Callable[..., dict[str, Any]]) -> None:
        document = pipe_config()
        document["topology"]["edges"][0]["length"] = -1.0
        with pytest.raises(ValidationError, match="edge length not positive"):
            load_scenario(json.dumps(document))

    def test_malformed_text(self) -> None:
        with pytest.raises(ConfigurationError, match="line 1 column") as info:
            load_scenario('{"name": ')
        assert info.value.details["line"] == 1

    def test_unknown_key(self, pipe_config: Callable[..., dict[str, Any]]) -> None:
        with pytest.raises(ConfigurationError, match="unknown key 'extra'"):
            load_scenario(json.dumps(pipe_config(extra=1)))
        with pytest.raises(ConfigurationError, match="unknown key 'cfl_max'"):
            load_scenario(json.dumps(pipe_config(grid={"cfl_max": 1.0})))

    def test_missing_boundary_condition(
        self, pipe_config: Callable[..., dict[str, Any]]
    ) -> None:
        document = pipe_config(
            boundary=[{"node": "left", "quantity": "m", "schedule": {"constant": 0.0}}]
        )
        with pytest.raises(ValidationError, match="without boundary condition"):
            load_scenario(json.dumps(document))

    @pytest.mark.parametrize(
        ("section", "changes", "message"),
        [
            ("physics", {"gamma": -0.1}, "friction coefficient negative"),
            ("physics", {"mu": -1.0}, "nudging parameter"),
            ("grid", {"cfl": 1.5}, "cfl factor"),
            ("grid", {"cells": 1}, "at least two cells"),
            ("time", {"T": 0.0}, "final time"),
        ],
    )
    def test_invalid_parameters(
        self,
        pipe_config: Callable[..., dict[str, Any]],
        section: str,
        changes: dict[str, Any],
        message: str,
    ) -> None:
        with pytest.raises(ValidationError, match=message):
            load_scenario(json.dumps(pipe_config(**{section: changes})))

    def test_riemann_initial_data(self, pipe_config: Callable[..., dict[str, Any]]) -> None:
        document = pipe_config(
            initial={"pipe": {"S_plus": {"constant": 0.0}, "S_minus": {"constant": 0.0}}}
        )
        state = load_scenario(json.dumps(document)).initial_state()
        np.testing.assert_allclose(state.rho["pipe"], 1.0)
        np.testing.assert_allclose(state.v["pipe"], 0.0)

    def test_perturbation(self, pipe_config: Callable[..., dict[str, Any]]) -> None:
        scenario = load_scenario(json.dumps(pipe_config(perturbation={"v": 0.01})))
        truth, observer = scenario.initial_state(), scenario.initial_state(observer=True)
        x = scenario.grid["pipe"].centers
        gap = observer.v["pipe"] - truth.v["pipe"]
        np.testing.assert_allclose(gap, 0.01 * np.sin(np.pi * x))

    def test_star_example(self, load_example: Callable[[str], Scenario]) -> None:
        scenario = load_example("star3_velocity")
        assert scenario.topology.is_star
        assert {n.id for n in scenario.topology.boundary_nodes} == {"b1", "b2", "b3"}
        assert scenario.anchor_node is None

    def test_anchor_must_prescribe_enthalpy(
        self, pipe_config: Callable[..., dict[str, Any]]
    ) -> None:
        document = pipe_config(physics={"anchor_node": "left"})
        with pytest.raises(ValidationError, match="anchor node"):
            load_scenario(json.dumps(document))

    def test_missing_file(self, tmp_path: Path) -> None:
        with pytest.raises(ConfigurationError, match="not readable"):
            load_scenario_file(tmp_path / "absent.json")

    @pytest.mark.parametrize(
        "stem",
        ["rest", "pulse", "star3_velocity", "star3_density", "picard_small", "picard_large"],
    )
    def test_bundled_scenarios_load(
        self, load_example: Callable[[str], Scenario], stem: str
    ) -> None:
        assert load_example(stem).name == stem


class TestScenarioCopies:
    """Overrides, perturbations and the unobserved copy."""

    def test_overrides_follow_config(self, make_scenario: Callable[..., Scenario]) -> None:
        scenario = make_scenario().with_overrides(mu=5.0, cells=40, mode="density")
        assert scenario.mu == 5.0 and scenario.cells == 40
        assert scenario.mode is MeasurementMode.DENSITY
        assert scenario.config["physics"]["mu"] == 5.0
        assert scenario.config["grid"]["cells"] == 40
        assert scenario.config["physics"]["mode"] == "density"

    def test_unknown_override(self, make_scenario: Callable[..., Scenario]) -> None:
        with pytest.raises(ConfigurationError, match="cannot override"):
            make_scenario().with_overrides(length=2.0)

    def test_truth_run(self, pipe_config: Callable[..., dict[str, Any]]) -> None:
        scenario = load_scenario(json.dumps(pipe_config(perturbation={"rho": 0.01})))
        truth_run = scenario.as_truth_run()
        assert truth_run.mode is MeasurementMode.NONE and truth_run.mu == 0.0
        a, b = truth_run.initial_state(), truth_run.initial_state(observer=True)
        np.testing.assert_array_equal(a.rho["pipe"], b.rho["pipe"])

    def test_with_perturbation_accumulates(
        self, make_scenario: Callable[..., Scenario]
    ) -> None:
        scenario = make_scenario().with_perturbation(d_v=0.01).with_perturbation(d_v=0.02)
        assert scenario.config["perturbation"]["v"] == pytest.approx(0.03)
        x = scenario.grid["pipe"].centers
        observer = scenario.initial_state(observer=True)
        np.testing.assert_allclose(observer.v["pipe"], 0.03 * np.sin(np.pi * x))


class TestProfilesAndSchedules:
    """Profile and schedule parsing."""

    def test_profiles(self) -> None:
        x = np.array([0.0, 0.5, 1.0])
        np.testing.assert_allclose(parse_profile({"constant": 2.0}, 1.0)(x), 2.0)
        np.testing.assert_allclose(parse_profile({"linear": [1.0, 3.0]}, 1.0)(x), [1, 2, 3])
        np.testing.assert_allclose(
            parse_profile({"samples": [0.0, 1.0, 0.0]}, 1.0)(x), [0.0, 1.0, 0.0]
        )
        bump = parse_profile(
            {"bump": {"base": 1.0, "amplitude": 0.1, "center": 0.5, "width": 0.2}}, 1.0
        )
        np.testing.assert_allclose(bump(x), [1.0, 1.1, 1.0])
        sine = parse_profile({"sine": {"base": 0.0, "amplitude": 1.0, "modes": 1}}, 2.0)
        assert sine(np.array([1.0]))[0] == pytest.approx(1.0)

    @pytest.mark.parametrize(
        "spec",
        [
            {"triangle": 1.0},
            {"constant": "one"},
            {"linear": [1.0]},
            {"bump": {"base": 1.0, "amplitude": 0.1, "center": 0.5, "width": 0.0}},
            {"sine": {"base": 1.0, "amplitude": 0.1}},
            {"constant": 1.0, "linear": [0.0, 1.0]},
        ],
    )
    def test_bad_profiles(self, spec: dict[str, Any]) -> None:
        with pytest.raises(ConfigurationError):
            parse_profile(spec, 1.0)

    def test_schedules(self) -> None:
        ramp = parse_schedule({"piecewise_linear": [[0.0, 0.0], [1.0, 2.0]]})
        assert ramp(0.5) == pytest.approx(1.0)
        assert ramp(-1.0) == 0.0 and ramp(5.0) == 2.0
        assert parse_schedule({"constant": 3.0})(10.0) == 3.0
        assert ramp.shifted(0.5)(0.0) == pytest.approx(1.0)
        assert Schedule.constant(1.0).shifted(4.0)(0.0) == 1.0

    def test_bad_schedule(self) -> None:
        with pytest.raises(ConfigurationError, match="strictly increasing"):
            parse_schedule({"piecewise_linear": [[1.0, 0.0], [0.0, 1.0]]})


class TestSettingsManager:
    """Loading of pipeobs.json."""

    def test_defaults_without_file(self, tmp_path: Path) -> None:
        assert SettingsManager(tmp_path).load() == SolverSettings()

    def test_file_values(self, temp_config_dir: Path) -> None:
        settings = SettingsManager(temp_config_dir).load()
        assert settings.log_level == "ERROR"
        assert settings.newton_tol == 1e-11

    def test_cached(self, temp_config_dir: Path) -> None:
        manager = SettingsManager(temp_config_dir)
        assert manager.load() is manager.load()

    def test_unknown_key(self, tmp_path: Path) -> None:
        (tmp_path / "pipeobs.json").write_text(json.dumps({"tolerance": 1.0}))
        with pytest.raises(ConfigurationError, match="unknown key 'tolerance'"):
            SettingsManager(tmp_path).load()

    def test_malformed_json(self, tmp_path: Path) -> None:
        (tmp_path / "pipeobs.json").write_text("{not json")
        with pytest.raises(ConfigurationError, match="Invalid JSON"):
            SettingsManager(tmp_path).load()

    def test_repository_settings(self) -> None:
        settings = SettingsManager(Path(__file__).resolve().parent.parent / "config").load()
        assert settings.newton_max_iter == 50
