"""
Pytest configuration and shared fixtures for pipeobs.

Scenario documents are built as plain dictionaries so each test can tweak
one key and feed the result through ``load_scenario``.
"""

from __future__ import annotations

import copy
import json
import tempfile
from collections.abc import Callable, Generator
from pathlib import Path
from typing import Any

import numpy as np
import pytest

from pipeobs.models.network import NetworkTopology
from pipeobs.models.pressure import PressureLaw
from pipeobs.models.scenario import Scenario, load_scenario, load_scenario_file
from pipeobs.models.state import FieldState, Grid

REPO_ROOT = Path(__file__).resolve().parent.parent
SCENARIO_DIR = REPO_ROOT / "config" / "scenarios"

PIPE_CONFIG: dict[str, Any] = {
    "name": "pipe",
    "topology": {
        "nodes": [{"id": "left", "kind": "boundary"}, {"id": "right", "kind": "boundary"}],
        "edges": [{"id": "pipe", "from": "left", "to": "right", "length": 1.0}],
    },
    "law": {"kind": "isothermal", "params": {"c": 1.0}, "rho_ref": 1.0, "band": [0.5, 2.0]},
    "physics": {"gamma": 0.0, "mu": 1.0, "mode": "velocity", "v_bar": 0.1},
    "initial": {"pipe": {"rho": {"constant": 1.0}, "v": {"constant": 0.0}}},
    "boundary": [
        {"node": "left", "quantity": "m", "schedule": {"constant": 0.0}},
        {"node": "right", "quantity": "h", "schedule": {"constant": 1.0}},
    ],
    "grid": {"cells": 20, "cfl": 0.5, "method": "moc"},
    "time": {"T": 0.5, "samples": 20},
}


def _merge(base: dict[str, Any], changes: dict[str, Any]) -> dict[str, Any]:
    out = copy.deepcopy(base)
    for key, value in copy.deepcopy(changes).items():
        if isinstance(value, dict) and isinstance(out.get(key), dict):
            out[key] = {**out[key], **value}
        else:
            out[key] = value
    return out


@pytest.fixture
def pipe_config() -> Callable[..., dict[str, Any]]:
    """Builder of single-pipe scenario documents; top-level sections are updated."""

    def build(**changes: Any) -> dict[str, Any]:
        return _merge(PIPE_CONFIG, changes)

    return build


@pytest.fixture
def make_scenario(
    pipe_config: Callable[..., dict[str, Any]],
) -> Callable[..., Scenario]:
    """Validated single-pipe scenario with the given changes."""

    def build(**changes: Any) -> Scenario:
        return load_scenario(json.dumps(pipe_config(**changes)))

    return build


@pytest.fixture(scope="session")
def scenario_dir() -> Path:
    return SCENARIO_DIR


@pytest.fixture(scope="session")
def load_example() -> Callable[[str], Scenario]:
    """Load one of the bundled scenario files by stem."""

    def load(stem: str) -> Scenario:
        return load_scenario_file(SCENARIO_DIR / f"{stem}.json")

    return load


@pytest.fixture(scope="session")
def law() -> PressureLaw:
    """Isothermal law with c = 1, rho_ref = 1 and band [0.5, 2]."""
    return PressureLaw.isothermal(1.0, 1.0, rho_lo=0.5, rho_hi=2.0)


@pytest.fixture(scope="session")
def power_law() -> PressureLaw:
    return PressureLaw.power(0.5, 2.0, 1.0, rho_lo=0.5, rho_hi=2.0)


@pytest.fixture(scope="session")
def single_pipe() -> NetworkTopology:
    return NetworkTopology.single_pipe(1.0)


@pytest.fixture(scope="session")
def star3() -> NetworkTopology:
    return NetworkTopology.star([1.0, 1.0, 1.0])


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240607)


@pytest.fixture
def make_state() -> Callable[..., FieldState]:
    """Field state on a uniform grid from per-edge callables or constants."""

    def build(
        topology: NetworkTopology,
        cells: int,
        rho: Any = 1.0,
        v: Any = 0.0,
        t: float = 0.0,
    ) -> FieldState:
        grid = Grid.uniform(topology, cells)
        rho_map, v_map = {}, {}
        for edge_id, eg in grid.edges.items():
            x = eg.centers
            rho_map[edge_id] = rho(x) if callable(rho) else np.full(cells, float(rho))
            v_map[edge_id] = v(x) if callable(v) else np.full(cells, float(v))
        return FieldState(t, grid, rho_map, v_map)

    return build


@pytest.fixture
def temp_out_dir() -> Generator[Path, None, None]:
    """Empty directory for run artifacts."""
    with tempfile.TemporaryDirectory() as temp_dir:
        yield Path(temp_dir) / "out"


@pytest.fixture
def temp_config_dir() -> Generator[Path, None, None]:
    """Settings directory with a quiet pipeobs.json."""
    with tempfile.TemporaryDirectory() as temp_dir:
        config_path = Path(temp_dir) / "config"
        config_path.mkdir(exist_ok=True)
        settings = {"log_level": "ERROR", "newton_tol": 1e-11}
        (config_path / "pipeobs.json").write_text(json.dumps(settings, indent=2))
        yield config_path


@pytest.fixture
def write_config(
    pipe_config: Callable[..., dict[str, Any]],
) -> Generator[Callable[..., Path], None, None]:
    """Write a scenario document (or raw text) to a temporary file."""
    with tempfile.TemporaryDirectory() as temp_dir:
        counter = iter(range(10_000))

        def write(document: dict[str, Any] | str | None = None, **changes: Any) -> Path:
            path = Path(temp_dir) / f"scenario_{next(counter)}.json"
            if isinstance(document, str):
                path.write_text(document, encoding="utf-8")
            else:
                path.write_text(json.dumps(document or pipe_config(**changes)), encoding="utf-8")
            return path

        yield write
