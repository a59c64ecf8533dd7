"""
Settings management for pipeobs.

Solver tolerances and logging defaults come from an optional JSON settings
file (``config/pipeobs.json``); anything missing falls back to the constants
module.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Any

from ..constants import DIAGNOSTIC, NUMERIC, PICARD
from ..exceptions import ConfigurationError


@dataclass(frozen=True)
class SolverSettings:
    """Tunable tolerances shared by the junction solves, loaders and fits."""

    newton_tol: float = NUMERIC.NEWTON_TOL
    newton_max_iter: int = NUMERIC.NEWTON_MAX_ITER
    compat_tol: float = NUMERIC.COMPAT_TOL
    fit_trim: float = DIAGNOSTIC.FIT_TRIM
    picard_tol: float = PICARD.ITER_TOL
    strict: bool = False
    log_level: str = "WARNING"


class SettingsManager:
    """Loads ``SolverSettings`` from a JSON settings file.

    The file is optional; a missing file yields the defaults, a malformed one
    raises ``ConfigurationError``.
    """

    SETTINGS_FILE = "pipeobs.json"

    def __init__(self, config_dir: str | Path = "config") -> None:
        self.config_dir: Path = Path(config_dir)
        self._settings: SolverSettings | None = None

    def load(self) -> SolverSettings:
        if self._settings is None:
            path = self.config_dir / self.SETTINGS_FILE
            try:
                data = self._load_json_file(path, "solver settings")
            except FileNotFoundError:
                data = {}
            self._settings = self._build(data, path)
        return self._settings

    @staticmethod
    def _build(data: dict[str, Any], path: Path) -> SolverSettings:
        known = {f.name: f.type for f in fields(SolverSettings)}
        unknown = sorted(set(data) - set(known))
        if unknown:
            raise ConfigurationError(
                f"unknown key '{unknown[0]}' in settings",
                {"file_path": str(path), "allowed": sorted(known)},
            )
        try:
            return SolverSettings(**data)
        except TypeError as e:
            raise ConfigurationError(
                f"Invalid solver settings: {e}", {"file_path": str(path)}
            ) from e

    def _load_json_file(self, file_path: Path, description: str) -> dict[str, Any]:
        """Load and parse a JSON configuration file.

        Raises:
            FileNotFoundError: if the file does not exist
            ConfigurationError: if the file cannot be parsed
        """
        try:
            with open(file_path, encoding="utf-8") as file:
                data: Any = json.load(file)
        except FileNotFoundError:
            raise
        except json.JSONDecodeError as e:
            raise ConfigurationError(
                f"Invalid JSON in {description} file at line {e.lineno} column {e.colno}",
                {"file_path": str(file_path), "line": e.lineno, "column": e.colno},
            ) from e
        except OSError as e:
            raise ConfigurationError(
                f"Unexpected error loading {description}: {e}",
                {"file_path": str(file_path), "error_type": type(e).__name__},
            ) from e

        if not isinstance(data, dict):
            raise ConfigurationError(
                f"Invalid {description}: expected object, got {type(data).__name__}",
                {"file_path": str(file_path), "data_type": type(data).__name__},
            )
        return data
