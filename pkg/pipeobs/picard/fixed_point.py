"""
Fixed-point iteration along characteristics.

One application of the map traces the characteristics of the current
iterate back to their feet and evaluates

    S(t, x) = exp(-a (t - t_f)) S_f + int_{t_f}^t exp(-a (t - r)) Q(r, xi(r)) dr

with ``Q+- = -+sigma + b+- + a S+-`` taken on the current iterate (and the
truth field for the nudging terms). ``S_f`` is initial data or the node
solution of the current iterate at the hitting time.
"""

from __future__ import annotations

from collections.abc import Mapping
from dataclasses import dataclass, field, replace
from typing import Any

import numpy as np

from ..constants import PICARD
from ..exceptions import (
    DomainError,
    JunctionError,
    OutOfBandError,
    PicardError,
    SmallDataError,
)
from ..models.config import SolverSettings
from ..models.network import NetworkTopology
from ..models.pressure import PressureLaw
from ..models.scenario import BoundaryCondition, InitialData, Scenario
from ..models.types import Family, FloatArray, MeasurementMode, RiemannPair
from ..numerics.observer import Measurement, nudging_riemann
from ..numerics.riemann import friction_sigma, to_riemann
from ..solver.nodes import End, NodeResolver
from ..utils.unified_logger import get_logger
from .budget import SmallnessBudget, derive_budget, validate_budget
from .characteristics import FootKind, Source, trace_family
from .lattice import EdgeLattice, SpaceTimeField, measure_lipschitz, norm_M

logger = get_logger(__name__)

Rows = Mapping[str, tuple[FloatArray, FloatArray, FloatArray]]


@dataclass(frozen=True)
class PicardProblem:
    """Data of one window: initial rows, node conditions and the time lattice."""

    law: PressureLaw
    topology: NetworkTopology
    boundary: Mapping[str, BoundaryCondition]
    gamma: float
    measurement: Measurement
    rows: Rows
    times: FloatArray
    settings: SolverSettings = field(default_factory=SolverSettings)

    @classmethod
    def from_scenario(
        cls,
        scenario: Scenario,
        T: float,  # noqa: N803
        nx: int,
        nt: int,
        observer: bool = False,
        settings: SolverSettings | None = None,
    ) -> PicardProblem:
        """Truth problem, or the observer problem when ``observer`` is set."""
        data = scenario.observer_initial if observer else scenario.initial
        measurement = (
            Measurement(scenario.mode, scenario.mu)
            if observer
            else Measurement(MeasurementMode.NONE, 0.0)
        )
        return cls(
            law=scenario.law,
            topology=scenario.topology,
            boundary=scenario.boundary,
            gamma=scenario.gamma,
            measurement=measurement,
            rows=initial_rows(scenario.law, scenario.topology, data, nx),
            times=np.linspace(0.0, T, nt + 1),
            settings=settings or SolverSettings(),
        )

    @property
    def T(self) -> float:  # noqa: N802
        return float(self.times[-1])

    @property
    def observed(self) -> bool:
        return self.measurement.active

    def data_field(self) -> SpaceTimeField:
        """Initial rows frozen in time; the starting iterate."""
        return SpaceTimeField.frozen(self.times, self.rows)

    def next_window(self, rows: Rows) -> PicardProblem:
        """Problem on the following window, starting from ``rows``."""
        boundary = {
            node: replace(bc, schedule=bc.schedule.shifted(self.T))
            for node, bc in self.boundary.items()
        }
        return replace(self, boundary=boundary, rows=dict(rows))

    def budget(self, S_max: float | None = None) -> SmallnessBudget:  # noqa: N803
        return derive_budget(
            self.law, self.topology, self.data_field(), self.measurement.mu, self.gamma, S_max
        )


def initial_rows(
    law: PressureLaw,
    topology: NetworkTopology,
    data: Mapping[str, InitialData],
    nx: int,
) -> dict[str, tuple[FloatArray, FloatArray, FloatArray]]:
    rows = {}
    for edge in topology.edges:
        xs = np.linspace(0.0, edge.length, nx + 1)
        rho, v = data[edge.id].evaluate(xs)
        pair = to_riemann(law, rho, v)
        rows[edge.id] = (xs, np.asarray(pair.S_plus), np.asarray(pair.S_minus))
    return rows


@dataclass
class BoundarySeries:
    """Node solutions of one iterate at every lattice time."""

    start: dict[str, FloatArray]
    end: dict[str, FloatArray]
    junction_gain: float = 0.0


def boundary_series(
    problem: PicardProblem, iterate: SpaceTimeField, S_max: float | None = None  # noqa: N803
) -> BoundarySeries:
    """Outgoing invariants at both ends of every edge over the time lattice."""
    resolver = NodeResolver(
        problem.topology, problem.law, problem.boundary, problem.settings, S_max
    )
    n = problem.times.size
    series = BoundarySeries(
        {e: np.empty(n) for e in iterate}, {e: np.empty(n) for e in iterate}
    )
    inner = {node.id for node in problem.topology.inner_nodes}
    for k, t in enumerate(problem.times):
        incoming = {}
        for e, lat in iterate.edges.items():
            incoming[(e, End.START)] = float(lat.s_minus[k, 0])
            incoming[(e, End.END)] = float(lat.s_plus[k, -1])
        outgoing = resolver.resolve(incoming, float(t))
        for e in iterate:
            series.start[e][k] = outgoing[(e, End.START)]
            series.end[e][k] = outgoing[(e, End.END)]
        for node in inner:
            keys = [
                (inc.edge.id, End.START if inc.at_start else End.END)
                for inc in problem.topology.incident(node)
            ]
            arriving = max(abs(incoming[key]) for key in keys)
            if arriving > 0.0:
                leaving = max(abs(outgoing[key]) for key in keys)
                series.junction_gain = max(series.junction_gain, leaving / arriving)
    return series


def _sources(
    problem: PicardProblem, lattice: EdgeLattice, truth: EdgeLattice | None
) -> tuple[Source, Source]:
    law, measurement = problem.law, problem.measurement
    rate = measurement.damping_rate
    s_interp = lattice.interpolators()
    r_interp = truth.interpolators() if truth is not None else None
    t0, t1, length = float(lattice.times[0]), float(lattice.times[-1]), lattice.length

    def evaluate(s: FloatArray, x: FloatArray) -> tuple[FloatArray, FloatArray]:
        pts = np.column_stack((np.clip(s, t0, t1), np.clip(x, 0.0, length)))
        s_plus, s_minus = s_interp[0](pts), s_interp[1](pts)
        pair = RiemannPair(s_plus, s_minus)
        sigma = np.asarray(friction_sigma(law, pair, problem.gamma))
        q_plus = -sigma + rate * s_plus
        q_minus = sigma + rate * s_minus
        if r_interp is not None and measurement.active:
            b_plus, b_minus = nudging_riemann(
                law, measurement, RiemannPair(r_interp[0](pts), r_interp[1](pts)), pair
            )
            q_plus, q_minus = q_plus + b_plus, q_minus + b_minus
        return q_plus, q_minus

    return (lambda s, x: evaluate(s, x)[0]), (lambda s, x: evaluate(s, x)[1])


def _phi(
    problem: PicardProblem,
    iterate: SpaceTimeField,
    truth: SpaceTimeField | None,
    budget: SmallnessBudget | None,
) -> tuple[SpaceTimeField, float]:
    if problem.observed and truth is None:
        raise PicardError("observer iteration needs the truth field")
    s_max = budget.S_max if budget is not None else None
    lam_hi = budget.lam_hi if budget is not None else _lattice_lam_hi(problem)
    series = boundary_series(problem, iterate, s_max)
    rate = problem.measurement.damping_rate
    times = problem.times

    edges = {}
    for e, lat in iterate.edges.items():
        xs = lat.xs
        tt, xx = np.meshgrid(times[1:], xs, indexing="ij")
        t_pts, x_pts = tt.ravel(), xx.ravel()
        q_plus, q_minus = _sources(problem, lat, truth[e] if truth is not None else None)
        _, sp0, sm0 = problem.rows[e]
        new = {}
        for family, source, row, own, other in (
            (Family.PLUS, q_plus, sp0, series.start[e], FootKind.START),
            (Family.MINUS, q_minus, sm0, series.end[e], FootKind.END),
        ):
            trace = trace_family(
                problem.law, lat, family, t_pts, x_pts, lam_hi, source, rate
            )
            wrong = (trace.kind != FootKind.INITIAL) & (trace.kind != other)
            if np.any(wrong):
                raise PicardError("supersonic trace", {"edge": e, "family": family.name})
            foot = np.where(
                trace.kind == FootKind.INITIAL,
                np.interp(trace.x_foot, xs, row),
                np.interp(trace.t_foot, times, own),
            )
            values = np.exp(-rate * (t_pts - trace.t_foot)) * foot + trace.integral
            grid = np.empty((times.size, xs.size))
            grid[0] = row
            grid[1:] = values.reshape(tt.shape)
            # leaving invariants at the ends are the node solutions
            column = 0 if family is Family.PLUS else -1
            grid[1:, column] = own[1:]
            new[family] = grid
        edges[e] = EdgeLattice(times, xs, new[Family.PLUS], new[Family.MINUS])
    return SpaceTimeField(times, edges), series.junction_gain


def _lattice_lam_hi(problem: PicardProblem) -> float:
    lo, hi = problem.law.band
    return 1.5 * float(np.sqrt(np.max(np.asarray(problem.law.dp(np.array([lo, hi]))))))


def apply_phi(
    problem: PicardProblem,
    iterate: SpaceTimeField,
    truth: SpaceTimeField | None = None,
    budget: SmallnessBudget | None = None,
) -> SpaceTimeField:
    """One application of the fixed-point map.

    Raises:
        PicardError: tracing failed or the truth field is missing
        JunctionError: a node solve failed
    """
    if budget is not None:
        lipschitz, sup = measure_lipschitz(iterate)
        if sup > budget.S_max or lipschitz > budget.L_R:
            logger.warning(
                "iterate outside the budget ball",
                sup=sup,
                S_max=budget.S_max,
                lipschitz=lipschitz,
                L_R=budget.L_R,
            )
    return _phi(problem, iterate, truth, budget)[0]


@dataclass
class PicardResult:
    """Outcome of one fixed-point solve."""

    solution: SpaceTimeField
    differences: list[float] = field(default_factory=list)
    ratios: list[float] = field(default_factory=list)
    lipschitz: list[float] = field(default_factory=list)
    sup_norms: list[float] = field(default_factory=list)
    converged: bool = False
    diverged: bool = False
    reason: str | None = None
    junction_gain: float = 0.0
    budget: SmallnessBudget | None = None
    tol: float = PICARD.ITER_TOL

    @property
    def iterations(self) -> int:
        return len(self.differences)

    @property
    def residual(self) -> float:
        return self.differences[-1] if self.differences else float("inf")

    @property
    def max_ratio(self) -> float | None:
        return max(self.ratios) if self.ratios else None

    @property
    def certified(self) -> bool:
        """Converged with every recorded ratio below one."""
        return self.converged and all(q < 1.0 for q in self.ratios)

    def to_dict(self) -> dict[str, Any]:
        return {
            "iterations": self.iterations,
            "converged": self.converged,
            "diverged": self.diverged,
            "certified": self.certified,
            "reason": self.reason,
            "residual": self.residual,
            "tol": self.tol,
            "max_ratio": self.max_ratio,
            "differences": list(self.differences),
            "ratios": list(self.ratios),
            "lipschitz": list(self.lipschitz),
            "sup_norms": list(self.sup_norms),
            "junction_gain": self.junction_gain,
            "budget": self.budget.to_dict() if self.budget is not None else None,
        }


def iterate_to_fixed_point(
    problem: PicardProblem,
    budget: SmallnessBudget | None = None,
    truth: SpaceTimeField | None = None,
    max_iters: int = PICARD.MAX_ITERS,
    tol: float = PICARD.ITER_TOL,
    initial: SpaceTimeField | None = None,
) -> PicardResult:
    """Iterate the map from the frozen data until successive iterates agree.

    Divergence (persistent ratios >= 1, non-finite iterates, failed node
    solves or inverted densities outside the band) stops the iteration and is
    reported on the result rather than raised.
    """
    current = initial if initial is not None else problem.data_field()
    result = PicardResult(current, budget=budget, tol=tol)
    for _ in range(max_iters):
        try:
            nxt, gain = _phi(problem, current, truth, budget)
        except (JunctionError, SmallDataError, OutOfBandError, DomainError, PicardError) as e:
            result.diverged, result.reason = True, f"{type(e).__name__}: {e}"
            break
        if not nxt.is_finite():
            result.diverged, result.reason = True, "non-finite iterate"
            break
        diff = norm_M(nxt, current)
        if result.differences and result.differences[-1] > 0.0:
            result.ratios.append(diff / result.differences[-1])
        result.differences.append(diff)
        lipschitz, sup = measure_lipschitz(nxt)
        result.lipschitz.append(lipschitz)
        result.sup_norms.append(sup)
        result.junction_gain = max(result.junction_gain, gain)
        result.solution = current = nxt
        logger.debug("picard iteration", iteration=result.iterations, difference=diff)
        if diff <= tol:
            result.converged = True
            break
        recent = result.ratios[-PICARD.DIVERGENCE_PATIENCE :]
        if len(recent) == PICARD.DIVERGENCE_PATIENCE and min(recent) >= 1.0:
            result.diverged, result.reason = True, "contraction ratio >= 1"
            break
    else:
        result.reason = "iteration limit reached"

    if result.diverged:
        margins = budget.margins() if budget is not None else {}
        logger.warning("picard iteration diverged", reason=result.reason, **margins)
    return result


@dataclass
class ContinuationResult:
    """Chained window solves on ``[0, windows * T]``."""

    windows: list[PicardResult] = field(default_factory=list)
    truth_windows: list[PicardResult] = field(default_factory=list)
    failed_window: int | None = None

    @property
    def sup_norms(self) -> list[float]:
        """``S_max,k``: the sup of each window's solution."""
        return [max(r.sup_norms) if r.sup_norms else 0.0 for r in self.windows]

    @property
    def C_T(self) -> float:  # noqa: N802
        return max(self.sup_norms, default=0.0)

    @property
    def certified(self) -> bool:
        runs = self.windows + self.truth_windows
        return self.failed_window is None and bool(runs) and all(r.certified for r in runs)

    def to_dict(self) -> dict[str, Any]:
        return {
            "certified": self.certified,
            "failed_window": self.failed_window,
            "C_T": self.C_T,
            "S_max_k": self.sup_norms,
            "windows": [r.to_dict() for r in self.windows],
            "truth_windows": [r.to_dict() for r in self.truth_windows],
        }


def semi_global_continuation(
    problem: PicardProblem,
    windows: int,
    truth_problem: PicardProblem | None = None,
    S_max: float | None = None,  # noqa: N803
    max_iters: int = PICARD.MAX_ITERS,
    tol: float = PICARD.ITER_TOL,
) -> ContinuationResult:
    """Chain ``windows`` solves of length ``problem.T``.

    The terminal row of each window is the initial data of the next. An
    observed problem needs ``truth_problem``, which is chained alongside.

    Raises:
        PicardError: a window budget fails; ``details["window"]`` names it
    """
    if problem.observed and truth_problem is None:
        raise PicardError("observer continuation needs the truth problem")
    out = ContinuationResult()
    for k in range(windows):
        truth_field = None
        if problem.observed and truth_problem is not None:
            truth_budget = truth_problem.budget(S_max)
            validate_budget(truth_budget, window=k)
            truth_run = iterate_to_fixed_point(truth_problem, truth_budget, None, max_iters, tol)
            out.truth_windows.append(truth_run)
            truth_field = truth_run.solution
            if not truth_run.converged:
                out.failed_window = k
                break
        budget = problem.budget(S_max)
        validate_budget(budget, window=k)
        run = iterate_to_fixed_point(problem, budget, truth_field, max_iters, tol)
        out.windows.append(run)
        if not run.converged:
            out.failed_window = k
            break
        if not np.isfinite(out.C_T):
            raise PicardError("solution bound is not finite", {"window": k})
        logger.info("window solved", window=k, iterations=run.iterations, sup=out.sup_norms[-1])
        problem = problem.next_window(run.solution.terminal_rows())
        if truth_problem is not None and truth_field is not None:
            truth_problem = truth_problem.next_window(truth_field.terminal_rows())
    return out
