"""
Twin-experiment driver: truth and observer side by side up to the final time.
"""

from __future__ import annotations

from collections.abc import Callable

import numpy as np

from ..diagnostics import energy as en
from ..diagnostics.fitting import fit_decay
from ..diagnostics.series import DiagnosticsSeries
from ..diagnostics.tracker import AntiderivativeTracker
from ..exceptions import AlreadySynchronizedError, DiagnosticsError, SolverError, ValidationError
from ..models.config import SolverSettings
from ..models.pressure import bound_constants
from ..models.scenario import Scenario
from ..models.state import FieldState, convert_conservative, convert_primitive
from ..models.types import MeasurementMode, StepperKind
from ..utils.unified_logger import get_logger
from .base import TwinState, cfl_dt
from .fv import step_fv
from .moc import step_moc

logger = get_logger(__name__)

Stepper = Callable[[TwinState, float], TwinState]

__all__ = ["convert_conservative", "convert_primitive", "run_twin", "twin_dt", "stepper_for"]


def stepper_for(kind: StepperKind) -> Stepper:
    return step_moc if kind is StepperKind.MOC else step_fv


def twin_dt(twin: TwinState) -> float:
    law, cfl = twin.scenario.law, twin.scenario.cfl
    return min(
        cfl_dt(law, twin.truth, cfl, step=twin.step),
        cfl_dt(law, twin.observer, cfl, step=twin.step),
    )


def _aux_kind(mode: MeasurementMode) -> str:
    match mode:
        case MeasurementMode.DENSITY:
            return "f2"
        case MeasurementMode.VELOCITY | MeasurementMode.MASSFLOW:
            return "f1"
    return "none"


def _rate_norm(old: FieldState, new: FieldState, dt: float) -> float:
    if dt <= 0.0:
        return 0.0
    d_rho = max(float(np.max(np.abs(new.rho[e] - old.rho[e]))) for e in old.grid)
    d_v = max(float(np.max(np.abs(new.v[e] - old.v[e]))) for e in old.grid)
    return (d_rho + d_v) / dt


class _Recorder:
    """Samples the diagnostics of a running twin into a series."""

    def __init__(
        self, scenario: Scenario, series: DiagnosticsSeries, tracker: AntiderivativeTracker
    ) -> None:
        self.scenario = scenario
        self.series = series
        self.tracker = tracker

    def aux(self, twin: TwinState) -> float:
        match self.series.aux:
            case "f1":
                return self.tracker.f1(twin.observer, twin.truth)
            case "f2":
                return self.tracker.f2(twin.observer, twin.truth)
        return 0.0

    def record(self, twin: TwinState, rate_norm: float) -> None:
        law = self.scenario.law
        truth, obs = twin.truth, twin.observer
        h_rel = en.relative_energy(law, obs, truth)
        f_aux = self.aux(twin)
        lo_t, hi_t = truth.density_range()
        lo_o, hi_o = obs.density_range()
        sample = {
            "t": twin.t,
            "l2_err_sq": en.l2_error_sq(obs, truth),
            "h_rel": h_rel,
            "f_aux": f_aux,
            "lyapunov": h_rel + self.series.delta * f_aux,
            "delta_m": en.mass_difference(obs, truth),
            "max_v": max(truth.max_abs_v(), obs.max_abs_v()),
            "dt": twin_dt(twin),
            "rho_min": min(lo_t, lo_o),
            "rho_max": max(hi_t, hi_o),
            "dt_norm": rate_norm,
        }
        if not all(np.isfinite(v) for v in sample.values()):
            raise SolverError("non-finite diagnostics", twin.context())
        self.series.append(**sample)


def _new_series(scenario: Scenario) -> DiagnosticsSeries:
    law = scenario.law
    bounds = bound_constants(law, *law.band, scenario.v_bar)
    aux = _aux_kind(scenario.mode) if scenario.mu > 0.0 else "none"
    warnings: list[str] = []
    try:
        c0, big_c0 = en.norm_equiv_constants(bounds)
        delta = en.select_delta(
            c0, bounds, scenario.mu, scenario.gamma, scenario.topology.max_length
        )
    except DiagnosticsError as e:
        logger.warning("norm equivalence unavailable", error=str(e), **e.details)
        warnings.append(str(e))
        c0 = big_c0 = delta = 0.0
    series = DiagnosticsSeries(bounds, delta, c0, big_c0, aux, warnings=warnings)
    series.nominal_rate = en.nominal_rate(delta, bounds, scenario.mu)
    series.total_length = scenario.topology.total_length
    return series


def run_twin(
    scenario: Scenario,
    settings: SolverSettings | None = None,
    stepper: Stepper | None = None,
) -> DiagnosticsSeries:
    """Advance truth and observer to ``scenario.T`` and fit the error decay.

    Samples are taken at the first step reaching each of ``scenario.samples``
    equispaced times, plus t = 0 and t = T.

    Raises:
        SolverError: any stepper failure, with time and step
        ValidationError: density measurement on a network without anchor node
    """
    settings = settings or SolverSettings()
    stepper = stepper or stepper_for(scenario.method)
    twin = TwinState.initial(scenario, settings)
    series = _new_series(scenario)
    tracker = AntiderivativeTracker.for_scenario(scenario, twin.truth, twin.observer)
    if series.aux == "f2" and tracker.enthalpy_root is None:
        raise ValidationError(
            "density measurement needs an enthalpy anchor node", {"scenario": scenario.name}
        )
    recorder = _Recorder(scenario, series, tracker)

    final_t = scenario.T
    eps = 1e-12 * max(1.0, final_t)
    interval = final_t / scenario.samples
    next_sample = 0.0
    rate_norm = 0.0
    logger.info(
        "twin run started",
        scenario=scenario.name,
        method=str(scenario.method),
        mode=str(scenario.mode),
        mu=scenario.mu,
    )
    while True:
        if twin.t >= next_sample - eps or twin.t >= final_t - eps:
            recorder.record(twin, rate_norm)
            next_sample = interval * (np.floor(twin.t / interval + 1e-9) + 1.0)
        if twin.t >= final_t - eps:
            break
        dt = min(twin_dt(twin), final_t - twin.t)
        advanced = stepper(twin, dt)
        tracker.advance(twin.truth, twin.observer, dt)
        rate_norm = _rate_norm(twin.truth, advanced.truth, dt)
        twin = advanced

    series.steps = twin.step
    series.max_mass_defect = max(
        twin.resolvers.truth.max_mass_defect, twin.resolvers.observer.max_mass_defect
    )
    series.final = en.energy_report(
        scenario.law,
        twin.observer,
        twin.truth,
        series.rows["f_aux"][-1],
        series.delta,
        (series.c0, series.C0),
    )
    try:
        series.fit = fit_decay(series, trim=settings.fit_trim)
    except AlreadySynchronizedError as e:
        series.fit_error = str(e)
    except DiagnosticsError as e:
        logger.warning("decay fit failed", error=str(e), **e.details)
        series.fit_error = str(e)
    logger.info(
        "twin run finished",
        steps=twin.step,
        t=twin.t,
        C2=series.fit.C2 if series.fit else None,
    )
    return series
