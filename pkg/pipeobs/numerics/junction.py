"""
Node resolution in Riemann invariants.

All incident edges are viewed as starting at the node: R- is the invariant
arriving at the node and R+ the one leaving it. Inner nodes conserve mass and
keep the specific enthalpy continuous; boundary nodes prescribe either the
mass flow m_b or the enthalpy h_b.
"""

from __future__ import annotations

from collections.abc import Callable
from dataclasses import dataclass

import numpy as np
from scipy import optimize

from ..constants import NUMERIC
from ..exceptions import (
    BoundaryWindowError,
    ConvergenceError,
    NoSubsonicRootError,
    OutOfBandError,
    SingularJacobianError,
    SmallDataError,
)
from ..models.pressure import PressureLaw, ptilde_inv
from ..models.types import ArrayLike, FloatArray
from ..utils.unified_logger import get_logger

logger = get_logger(__name__)


@dataclass(frozen=True)
class NodeProblem:
    """Incoming invariants at one node in node-local orientation."""

    node_id: str
    law: PressureLaw
    R_minus: FloatArray  # noqa: N815
    S_max: float | None = None  # noqa: N815

    @property
    def degree(self) -> int:
        return int(np.asarray(self.R_minus).size)


@dataclass(frozen=True)
class NodeSolution:
    R_plus: FloatArray  # noqa: N815
    iterations: int
    residual: float
    gain: float
    certified: bool


def _gain(r_plus: ArrayLike, r_minus: ArrayLike) -> float:
    out = float(np.max(np.abs(r_plus)))
    inc = float(np.max(np.abs(r_minus)))
    if inc == 0.0:
        return 0.0 if out == 0.0 else float("inf")
    return out / inc


def _check_small(node_id: str, r_minus: FloatArray, s_max: float | None, strict: bool) -> bool:
    if s_max is None or float(np.max(np.abs(r_minus))) <= s_max:
        return True
    context = {"node": node_id, "max_incoming": float(np.max(np.abs(r_minus))), "S_max": s_max}
    if strict:
        raise SmallDataError("small-data condition failed", context)
    logger.warning("node solve outside the certified small-data ball", **context)
    return False


def _half_density(law: PressureLaw, r_plus: FloatArray, r_minus: FloatArray) -> FloatArray:
    return np.asarray(ptilde_inv(law, 0.5 * (r_plus + r_minus)), dtype=np.float64)


def coupling_residual(
    law: PressureLaw, R_minus: ArrayLike, R_plus: ArrayLike  # noqa: N803
) -> FloatArray:
    """F[0]: mass-flux sum; F[i]: h of edge i minus h of edge i-1."""
    r_minus = np.atleast_1d(np.asarray(R_minus, dtype=np.float64))
    r_plus = np.atleast_1d(np.asarray(R_plus, dtype=np.float64))
    rho = _half_density(law, r_plus, r_minus)
    d = r_plus - r_minus
    h = law.sound_scale**2 / 8.0 * d**2 + np.asarray(law.dP(rho))
    out = np.empty_like(d)
    out[0] = np.sum(rho * d)
    out[1:] = np.diff(h)
    return out


def coupling_jacobian(
    law: PressureLaw, R_minus: ArrayLike, R_plus: ArrayLike  # noqa: N803
) -> FloatArray:
    r_minus = np.atleast_1d(np.asarray(R_minus, dtype=np.float64))
    r_plus = np.atleast_1d(np.asarray(R_plus, dtype=np.float64))
    c = law.sound_scale
    rho = _half_density(law, r_plus, r_minus)
    d = r_plus - r_minus
    n = d.size
    jac = np.zeros((n, n))
    jac[0, :] = rho + 0.5 * np.asarray(law.drho_dy(rho)) * d
    g = c**2 / 4.0 * d + 0.5 * c * np.sqrt(np.asarray(law.dp(rho)))
    for i in range(1, n):
        jac[i, i] = g[i]
        jac[i, i - 1] = -g[i - 1]
    return jac


def couple_node(
    problem: NodeProblem,
    *,
    warm_start: ArrayLike | None = None,
    tol: float = NUMERIC.NEWTON_TOL,
    max_iter: int = NUMERIC.NEWTON_MAX_ITER,
    strict: bool = False,
) -> NodeSolution:
    """Damped Newton for the outgoing invariants of an inner node.

    Raises:
        ConvergenceError: residual above ``tol`` after ``max_iter`` iterations
        SingularJacobianError: the Newton system cannot be solved
        SmallDataError: incoming data outside the ball in strict mode
    """
    law = problem.law
    r_minus = np.atleast_1d(np.asarray(problem.R_minus, dtype=np.float64))
    certified = _check_small(problem.node_id, r_minus, problem.S_max, strict)

    x = r_minus.copy() if warm_start is None else np.array(warm_start, dtype=np.float64)
    residual = coupling_residual(law, r_minus, x)
    norm = float(np.max(np.abs(residual)))
    for iteration in range(max_iter + 1):
        if norm <= tol:
            return NodeSolution(x, iteration, norm, _gain(x, r_minus), certified)
        if iteration == max_iter:
            break
        try:
            step_dir = np.linalg.solve(coupling_jacobian(law, r_minus, x), -residual)
        except np.linalg.LinAlgError as e:
            raise SingularJacobianError(
                "singular coupling Jacobian", {"node": problem.node_id, "R_plus": x.tolist()}
            ) from e
        if not np.all(np.isfinite(step_dir)):
            raise SingularJacobianError("non-finite Newton step", {"node": problem.node_id})

        step = 1.0
        for _ in range(NUMERIC.MAX_HALVINGS):
            trial = x + step * step_dir
            try:
                trial_res = coupling_residual(law, r_minus, trial)
                trial_norm = float(np.max(np.abs(trial_res)))
            except OutOfBandError:
                trial_norm = float("inf")
            if trial_norm < norm:
                break
            step *= 0.5
        else:
            break
        x, residual, norm = trial, trial_res, trial_norm

    raise ConvergenceError(
        "coupling Newton did not converge",
        {"node": problem.node_id, "residual": norm, "R_minus": r_minus.tolist()},
    )


def _check_window(
    value: float, window: tuple[float, float] | None, strict: bool, what: str
) -> None:
    if window is None or window[0] <= value <= window[1]:
        return
    if strict:
        raise BoundaryWindowError(
            f"{what} outside admissible window", {what: value, "window": window}
        )
    logger.warning(
        "boundary value outside admissible window", quantity=what, value=value, window=window
    )


def _scalar_root(
    func: Callable[[float], float],
    fprime: Callable[[float], float],
    x0: float,
    tol: float,
    max_iter: int,
    what: str,
) -> float:
    """Newton from ``x0``; falls back to an expanding bracket with brentq."""
    try:
        root = float(optimize.newton(func, x0, fprime=fprime, tol=1e-15, maxiter=max_iter))
        if np.isfinite(root) and abs(func(root)) <= tol:
            return root
        logger.debug("newton root rejected", what=what, x0=x0, root=root, tol=tol)
    except (RuntimeError, OutOfBandError, ZeroDivisionError) as e:
        logger.debug(
            "newton failed, bracketing instead",
            what=what,
            x0=x0,
            max_iter=max_iter,
            error_type=type(e).__name__,
            error=str(e),
        )

    width = 0.05
    for _ in range(20):
        a, b = x0 - width, x0 + width
        try:
            if func(a) * func(b) < 0.0:
                root = float(optimize.brentq(func, a, b, xtol=1e-15, rtol=4e-16, maxiter=200))
                if abs(func(root)) <= tol:
                    return root
                break
        except OutOfBandError:
            break
        width *= 2.0
    raise ConvergenceError(f"boundary inversion for {what} did not converge", {"x0": x0})


def invert_boundary_m(
    law: PressureLaw,
    m_b: float,
    R_minus: float,  # noqa: N803
    *,
    warm_start: float | None = None,
    tol: float = NUMERIC.NEWTON_TOL,
    max_iter: int = NUMERIC.NEWTON_MAX_ITER,
    strict: bool = False,
    window: tuple[float, float] | None = None,
    S_max: float | None = None,  # noqa: N803
) -> float:
    """Outgoing invariant with node-local mass flow m_b.

    Solves ``P~^{-1}((R+ + R-)/2) c/2 (R+ - R-) = m_b``.
    """
    _check_window(m_b, window, strict, "m_b")
    _check_small("boundary", np.array([R_minus]), S_max, strict)
    c = law.sound_scale
    r = float(R_minus)

    def residual(x: float) -> float:
        rho = float(ptilde_inv(law, 0.5 * (x + r)))
        return rho * 0.5 * c * (x - r) - m_b

    def derivative(x: float) -> float:
        rho = float(ptilde_inv(law, 0.5 * (x + r)))
        return 0.25 * c * float(law.drho_dy(rho)) * (x - r) + 0.5 * c * rho

    if warm_start is None:
        warm_start = r + 2.0 * m_b / (c * float(ptilde_inv(law, r)))
    return _scalar_root(residual, derivative, float(warm_start), tol, max_iter, "m_b")


def invert_boundary_h(
    law: PressureLaw,
    h_b: float,
    R_minus: float,  # noqa: N803
    *,
    warm_start: float | None = None,
    tol: float = NUMERIC.NEWTON_TOL,
    max_iter: int = NUMERIC.NEWTON_MAX_ITER,
    strict: bool = False,
    window: tuple[float, float] | None = None,
    S_max: float | None = None,  # noqa: N803
) -> float:
    """Outgoing invariant with prescribed enthalpy h_b on the subsonic branch.

    Solves ``c**2/8 (R+ - R-)**2 + P'(P~^{-1}((R+ + R-)/2)) = h_b``; the root
    must have positive slope, i.e. a positive outgoing wave speed.
    """
    _check_window(h_b, window, strict, "h_b")
    _check_small("boundary", np.array([R_minus]), S_max, strict)
    c = law.sound_scale
    r = float(R_minus)

    def residual(x: float) -> float:
        rho = float(ptilde_inv(law, 0.5 * (x + r)))
        return c**2 / 8.0 * (x - r) ** 2 + float(law.dP(rho)) - h_b

    def derivative(x: float) -> float:
        rho = float(ptilde_inv(law, 0.5 * (x + r)))
        return c**2 / 4.0 * (x - r) + 0.5 * c * float(np.sqrt(law.dp(rho)))

    if warm_start is None:
        warm_start = r - residual(r) / derivative(r)
    root = _scalar_root(residual, derivative, float(warm_start), tol, max_iter, "h_b")
    if derivative(root) <= 0.0:
        raise NoSubsonicRootError(
            "no subsonic root for prescribed enthalpy", {"h_b": h_b, "R_minus": r, "root": root}
        )
    return root
