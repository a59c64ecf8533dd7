"""
pipeobs: barotropic pipe-network flow with a Luenberger observer.

The package simulates the 1D barotropic Euler equations on pipe networks,
runs a nudging observer next to the true state and measures how fast the
two synchronize through relative-energy diagnostics.
"""

from __future__ import annotations

__version__ = "0.4.0"

from .exceptions import (
    ConfigurationError,
    DiagnosticsError,
    DomainError,
    JunctionError,
    OutOfBandError,
    PicardError,
    PipeObserverError,
    SolverError,
    ValidationError,
)
from .models.scenario import Scenario, load_scenario, load_scenario_file
from .solver.twin import run_twin

__all__ = [
    "__version__",
    "ConfigurationError",
    "DiagnosticsError",
    "DomainError",
    "JunctionError",
    "OutOfBandError",
    "PicardError",
    "PipeObserverError",
    "Scenario",
    "SolverError",
    "ValidationError",
    "load_scenario",
    "load_scenario_file",
    "run_twin",
]
