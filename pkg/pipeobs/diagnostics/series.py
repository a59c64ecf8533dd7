"""
Time series recorded by a twin run.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

import numpy as np

from ..constants import DIAGNOSTIC, OUTPUT
from ..models.pressure import BoundConstants
from ..models.types import FloatArray
from .energy import EnergyReport, mass_plateau
from .fitting import DecayFit

AUDIT_COLUMNS = ("rho_min", "rho_max", "dt_norm")


@dataclass
class DiagnosticsSeries:
    """One row per sample time.

    The CSV columns come first; ``rho_min``, ``rho_max`` (over both systems)
    and ``dt_norm`` (finite-difference ``max |d_t rho| + max |d_t v|`` of the
    truth) feed the assumption audit only.
    """

    bounds: BoundConstants
    delta: float
    c0: float
    C0: float  # noqa: N815
    aux: str
    rows: dict[str, list[float]] = field(
        default_factory=lambda: {c: [] for c in (*OUTPUT.SERIES_COLUMNS, *AUDIT_COLUMNS)}
    )
    fit: DecayFit | None = None
    fit_error: str | None = None
    final: EnergyReport | None = None
    steps: int = 0
    max_mass_defect: float = 0.0
    nominal_rate: float = 0.0
    total_length: float = 0.0
    warnings: list[str] = field(default_factory=list)

    def append(self, **sample: float) -> None:
        missing = set(self.rows) - set(sample)
        if missing:
            raise KeyError(f"sample lacks {sorted(missing)}")
        for key, column in self.rows.items():
            column.append(float(sample[key]))

    def __len__(self) -> int:
        return len(self.rows["t"])

    def arrays(self) -> dict[str, FloatArray]:
        return {k: np.asarray(v, dtype=np.float64) for k, v in self.rows.items()}

    def column(self, name: str) -> FloatArray:
        return np.asarray(self.rows[name], dtype=np.float64)

    @property
    def delta_m0(self) -> float:
        return self.rows["delta_m"][0] if self.rows["delta_m"] else 0.0

    def lyapunov_increases(self, grace: int = DIAGNOSTIC.LYAPUNOV_GRACE_STEPS) -> list[float]:
        """Sample times after the first ``grace`` samples at which the Lyapunov value grew.

        Growth below a relative rounding tolerance is ignored.
        """
        values = self.column("lyapunov")
        times = self.column("t")
        if values.size <= grace + 1:
            return []
        tol = 1e-12 * np.maximum(np.abs(values[grace:-1]), 1e-300)
        grew = np.diff(values[grace:]) > tol
        return [float(t) for t in times[grace + 1 :][grew]]

    def summary(self) -> dict[str, Any]:
        return {
            "samples": len(self),
            "steps": self.steps,
            "aux": self.aux,
            "delta": self.delta,
            "c0": self.c0,
            "C0": self.C0,
            "delta_m0": self.delta_m0,
            "mass_plateau": (
                mass_plateau(self.delta_m0, self.total_length) if self.total_length else None
            ),
            "nominal_rate": self.nominal_rate,
            "max_mass_defect": self.max_mass_defect,
            "lyapunov_increases": len(self.lyapunov_increases()),
            "fit": self.fit.to_dict() if self.fit is not None else None,
            "fit_error": self.fit_error,
            "final": self.final.to_dict() if self.final is not None else None,
        }
