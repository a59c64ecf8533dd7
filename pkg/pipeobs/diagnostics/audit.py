"""
Audit of the standing assumptions of the synchronization estimates.

Checked per run: density band (truth and observer), subsonic margin of the
band, velocity bound and finite-difference size of the truth's time
derivatives.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Any

import numpy as np

from ..models.pressure import BoundConstants
from .series import DiagnosticsSeries


@dataclass(frozen=True)
class AssumptionCheck:
    name: str
    passed: bool
    margin: float | None
    first_failure: float | None = None
    worst: float | None = None


@dataclass(frozen=True)
class AuditReport:
    checks: tuple[AssumptionCheck, ...]

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def failures(self) -> list[AssumptionCheck]:
        return [c for c in self.checks if not c.passed]

    def to_dict(self) -> dict[str, Any]:
        return {"passed": self.passed, "checks": [asdict(c) for c in self.checks]}


def _first_time(t: np.ndarray, bad: np.ndarray) -> float | None:
    return float(t[np.argmax(bad)]) if np.any(bad) else None


def audit_assumptions(
    series: DiagnosticsSeries, bounds: BoundConstants, c_t: float | None = None
) -> AuditReport:
    """Pass/fail with worst-case margins; ``c_t`` bounds the time derivatives if given."""
    a = series.arrays()
    t = a["t"]
    if t.size == 0:
        return AuditReport(())

    low = a["rho_min"] - bounds.rho_lo
    high = bounds.rho_hi - a["rho_max"]
    band_margin = float(min(low.min(), high.min()))
    band = AssumptionCheck(
        "density band",
        band_margin >= 0.0,
        band_margin,
        _first_time(t, (low < 0.0) | (high < 0.0)),
    )

    subsonic = AssumptionCheck("subsonic", bounds.subsonic, bounds.subsonic_margin)

    v_margin = bounds.v_bar - a["max_v"]
    velocity = AssumptionCheck(
        "velocity bound",
        bool(np.all(v_margin >= 0.0)),
        float(v_margin.min()),
        _first_time(t, v_margin < 0.0),
        float(a["max_v"].max()),
    )

    rates = a["dt_norm"]
    worst_rate = float(np.max(rates))
    if c_t is None:
        rate = AssumptionCheck(
            "time derivatives", bool(np.isfinite(worst_rate)), None, None, worst_rate
        )
    else:
        rate = AssumptionCheck(
            "time derivatives",
            worst_rate <= c_t,
            c_t - worst_rate,
            _first_time(t, rates > c_t),
            worst_rate,
        )
    return AuditReport((band, subsonic, velocity, rate))
