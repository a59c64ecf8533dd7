"""
Exponential decay fits of the synchronization error.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import TYPE_CHECKING, Any

import numpy as np

from ..constants import DIAGNOSTIC
from ..exceptions import AlreadySynchronizedError, DiagnosticsError
from ..models.types import ArrayLike, FloatArray
from ..utils.unified_logger import get_logger

if TYPE_CHECKING:
    from .series import DiagnosticsSeries

logger = get_logger(__name__)


@dataclass(frozen=True)
class DecayFit:
    """``e(t) <= C1 e(0) exp(-C2 t)`` fitted in log space."""

    C1: float  # noqa: N815
    C2: float  # noqa: N815
    t0: float
    t1: float
    residual: float
    plateau: float | None
    samples: int

    @property
    def decaying(self) -> bool:
        return self.C2 > 1e-6

    def to_dict(self) -> dict[str, Any]:
        return {**asdict(self), "decaying": self.decaying}


def _slope(t: FloatArray, y: FloatArray) -> float:
    return float(np.polyfit(t, y, 1)[0])


def fit_exponential(
    t: ArrayLike,
    y: ArrayLike,
    *,
    window: tuple[float, float] | None = None,
    trim: float = DIAGNOSTIC.FIT_TRIM,
) -> DecayFit:
    """Least-squares line through ``(t, log y)``.

    ``trim`` drops that fraction of samples at both ends of the window. When
    the tail is flat compared with the head, the median of the last third is
    reported as plateau and only samples well above it are fitted.

    Raises:
        AlreadySynchronizedError: if every value is zero
        DiagnosticsError: if fewer than the minimum number of samples remain
    """
    times = np.asarray(t, dtype=np.float64)
    values = np.asarray(y, dtype=np.float64)
    if window is not None:
        keep = (times >= window[0]) & (times <= window[1])
        times, values = times[keep], values[keep]
    if values.size and not np.any(values > 0.0):
        raise AlreadySynchronizedError("already synchronized", {"samples": int(values.size)})
    positive = values[values > 0.0]
    reference = float(positive[0]) if positive.size else 1.0

    cut = int(np.floor(trim * values.size))
    times, values = times[cut : values.size - cut], values[cut : values.size - cut]
    minimum = DIAGNOSTIC.FIT_MIN_SAMPLES
    if values.size < minimum:
        raise DiagnosticsError(
            "degenerate fit window", {"samples": int(values.size), "required": minimum}
        )
    logs = np.log(np.maximum(values, DIAGNOSTIC.FIT_FLOOR))

    plateau = None
    third = values.size // 3
    if third >= 2:
        head = _slope(times[:third], logs[:third])
        tail = _slope(times[-third:], logs[-third:])
        if head < 0.0 and abs(tail) < DIAGNOSTIC.PLATEAU_RATIO * abs(head):
            plateau = float(np.median(values[-third:]))
            for factor in (100.0, 10.0):
                mask = values > factor * plateau
                if np.count_nonzero(mask) >= minimum:
                    break
            else:
                mask = np.zeros(values.size, dtype=bool)
                mask[:third] = True
            logger.info("decay plateau detected", plateau=plateau, head_samples=int(mask.sum()))
            times, logs = times[mask], logs[mask]

    slope, intercept = np.polyfit(times, logs, 1)
    fitted = slope * times + intercept
    residual = float(np.sqrt(np.mean((logs - fitted) ** 2)))
    return DecayFit(
        C1=float(np.exp(intercept)) / reference,
        C2=float(-slope),
        t0=float(times[0]),
        t1=float(times[-1]),
        residual=residual,
        plateau=plateau,
        samples=int(times.size),
    )


def fit_decay(
    series: DiagnosticsSeries,
    window: tuple[float, float] | None = None,
    trim: float = DIAGNOSTIC.FIT_TRIM,
) -> DecayFit:
    """Decay fit of the L2 error norm of a twin run."""
    arrays = series.arrays()
    return fit_exponential(
        arrays["t"], np.sqrt(np.maximum(arrays["l2_err_sq"], 0.0)), window=window, trim=trim
    )
