"""
Constants module for pipeobs.

Tolerances and defaults are grouped in frozen dataclasses with ``Final``
fields; ``SolverSettings`` in ``models.config`` overrides them from the
settings file.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Final


@dataclass(frozen=True)
class NumericConstants:
    """Tolerances of the nonlinear solves."""

    INVERSION_TOL: Final[float] = 1e-12
    NEWTON_TOL: Final[float] = 1e-10
    NEWTON_MAX_ITER: Final[int] = 50
    MAX_HALVINGS: Final[int] = 12
    BAND_MARGIN: Final[float] = 0.5
    COMPAT_TOL: Final[float] = 1e-6


@dataclass(frozen=True)
class DiagnosticConstants:
    """Energy diagnostics and decay fitting defaults."""

    POINCARE: Final[float] = 0.6366197723675814  # 2/pi
    FIT_TRIM: Final[float] = 0.05
    FIT_MIN_SAMPLES: Final[int] = 10
    FIT_FLOOR: Final[float] = 1e-15
    PLATEAU_RATIO: Final[float] = 0.1
    LYAPUNOV_GRACE_STEPS: Final[int] = 5
    DEFAULT_SAMPLES: Final[int] = 200


@dataclass(frozen=True)
class PicardConstants:
    ITER_TOL: Final[float] = 1e-10
    MAX_ITERS: Final[int] = 100
    DIVERGENCE_PATIENCE: Final[int] = 3


@dataclass(frozen=True)
class OutputConstants:
    """File names and formats of run artifacts."""

    DEFAULT_OUT: Final[str] = "out"
    OUT_ENV_VAR: Final[str] = "PIPEOBS_OUT"
    SERIES_FILE: Final[str] = "series.csv"
    SUMMARY_FILE: Final[str] = "summary.json"
    PICARD_FILE: Final[str] = "picard.json"
    SWEEP_FILE: Final[str] = "sweep.csv"
    PLOT_FILE: Final[str] = "decay.svg"
    DEFAULT_ENCODING: Final[str] = "utf-8"
    SERIES_COLUMNS: Final[tuple[str, ...]] = (
        "t",
        "l2_err_sq",
        "h_rel",
        "f_aux",
        "lyapunov",
        "delta_m",
        "max_v",
        "dt",
    )
    SWEEP_COLUMNS: Final[tuple[str, ...]] = (
        "param",
        "value",
        "C2",
        "nominal_rate",
        "C1",
        "status",
    )


@dataclass(frozen=True)
class ExitCodes:
    OK: Final[int] = 0
    CONFIG: Final[int] = 1
    SOLVER: Final[int] = 2
    AUDIT: Final[int] = 3
    CONTRACTION: Final[int] = 4


NUMERIC: Final = NumericConstants()
DIAGNOSTIC: Final = DiagnosticConstants()
PICARD: Final = PicardConstants()
OUTPUT: Final = OutputConstants()
EXIT: Final = ExitCodes()
