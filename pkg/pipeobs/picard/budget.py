"""
Smallness budgets for the fixed-point iteration.

A budget bundles the invariant ball ``S_max``, the size and Lipschitz
constant of the data, the horizon and the derived wave-speed bounds. The
horizon is admissible when no characteristic crosses a whole edge and

    1 - exp(-mu T / 2) <= 1/12 min(1, 4/9 (Lambda_lo / Lambda_hi) / (4 + C(n)))

where ``C(n)`` bounds the junction gain ``|R+| / |R-|``.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Any

import numpy as np

from ..exceptions import JunctionError, PicardError, SmallDataError
from ..models.network import NetworkTopology
from ..models.pressure import PressureLaw, bound_constants
from ..numerics.junction import NodeProblem, couple_node
from ..numerics.riemann import eigen_bounds
from ..utils.unified_logger import get_logger
from .lattice import SpaceTimeField, measure_lipschitz

logger = get_logger(__name__)

GAIN_SAMPLES = 256
HORIZON_SAFETY = 0.999


@dataclass(frozen=True)
class SmallnessBudget:
    S_max: float  # noqa: N815
    B_max: float  # noqa: N815
    L_I: float  # noqa: N815
    L_R: float  # noqa: N815
    T: float  # noqa: N815
    mu: float
    gamma: float
    c: float
    lam_lo: float
    lam_hi: float
    L_lambda: float  # noqa: N815
    coupling_gain: float
    min_length: float

    @property
    def L_sigma(self) -> float:  # noqa: N802
        return self.gamma * self.c * self.S_max

    @property
    def sigma_max(self) -> float:
        return self.gamma * self.c * self.S_max**2

    @property
    def L_x(self) -> float:  # noqa: N802
        return float(np.exp(2.0 * self.L_R * self.T * self.L_lambda))

    @property
    def L_t(self) -> float:  # noqa: N802
        return self.L_x / self.lam_lo

    @property
    def L_s(self) -> float:  # noqa: N802
        return self.lam_hi

    @property
    def damping_limit(self) -> float:
        return damping_limit(self.lam_lo, self.lam_hi, self.coupling_gain)

    def margins(self) -> dict[str, float]:
        """Positive margins mean the condition holds."""
        return {
            "crossing": self.min_length / self.lam_hi - self.T,
            "damping": self.damping_limit - (1.0 - float(np.exp(-0.5 * self.mu * self.T))),
            "data": self.S_max - self.B_max,
        }

    @property
    def certified(self) -> bool:
        m = self.margins()
        return m["crossing"] > 0.0 and m["damping"] >= 0.0 and m["data"] >= 0.0

    def to_dict(self) -> dict[str, Any]:
        out = asdict(self)
        out.update(
            L_sigma=self.L_sigma,
            sigma_max=self.sigma_max,
            L_x=self.L_x,
            L_t=self.L_t,
            L_s=self.L_s,
            margins=self.margins(),
            certified=self.certified,
        )
        return out


def damping_limit(lam_lo: float, lam_hi: float, coupling_gain: float) -> float:
    return min(1.0, 4.0 / 9.0 * (lam_lo / lam_hi) / (4.0 + coupling_gain)) / 12.0


def max_horizon(
    lam_lo: float, lam_hi: float, mu: float, coupling_gain: float, min_length: float
) -> float:
    """Largest horizon meeting both conditions, slightly inside the crossing bound."""
    crossing = HORIZON_SAFETY * min_length / lam_hi
    if mu <= 0.0:
        return crossing
    damping = -2.0 * float(np.log1p(-damping_limit(lam_lo, lam_hi, coupling_gain))) / mu
    return min(crossing, damping)


def estimate_coupling_gain(
    law: PressureLaw,
    degree: int,
    S_max: float,  # noqa: N803
    samples: int = GAIN_SAMPLES,
    seed: int = 0,
) -> float:
    """Largest ``|R+| / |R-|`` over random incoming data in the ``S_max`` ball."""
    if degree < 2:
        return 1.0
    radius = S_max if S_max > 0.0 else 1e-3
    rng = np.random.default_rng(seed)
    gain = 0.0
    for sample in rng.uniform(-radius, radius, size=(samples, degree)):
        try:
            solution = couple_node(NodeProblem("gain", law, sample))
        except JunctionError as e:
            logger.debug("gain sample skipped", reason=str(e))
            continue
        gain = max(gain, solution.gain)
    return gain if gain > 0.0 else 1.0


def network_coupling_gain(
    law: PressureLaw, topology: NetworkTopology, S_max: float  # noqa: N803
) -> float:
    """``C(n)`` over all inner nodes; 1 without inner nodes."""
    degrees = {len(topology.incident(node.id)) for node in topology.inner_nodes}
    if not degrees:
        return 1.0
    return max(estimate_coupling_gain(law, n, S_max) for n in sorted(degrees))


def derive_budget(
    law: PressureLaw,
    topology: NetworkTopology,
    data: SpaceTimeField,
    mu: float,
    gamma: float,
    S_max: float | None = None,  # noqa: N803
    L_R: float | None = None,  # noqa: N803
) -> SmallnessBudget:
    """Budget of the data field ``data`` (initial rows frozen in time).

    ``S_max`` defaults to twice the data bound and ``L_R`` to
    ``2 L_I + 4 B_max / min length``.

    Raises:
        PicardError: the small-data condition on the wave speeds fails
    """
    L_I, B_max = measure_lipschitz(data)  # noqa: N806
    min_length = min(e.length for e in topology.edges)
    s_max = 2.0 * B_max if S_max is None else float(S_max)
    l_r = 2.0 * L_I + 4.0 * B_max / min_length if L_R is None else float(L_R)
    c = law.sound_scale
    bounds = bound_constants(law, *law.band, v_bar=c * s_max)
    try:
        eigen = eigen_bounds(law, s_max, bounds)
    except SmallDataError as e:
        raise PicardError(f"smallness budget violated: {e}", dict(e.details)) from e
    budget = SmallnessBudget(
        S_max=s_max,
        B_max=B_max,
        L_I=L_I,
        L_R=l_r,
        T=data.T,
        mu=mu,
        gamma=gamma,
        c=c,
        lam_lo=eigen.lam_lo,
        lam_hi=eigen.lam_hi,
        L_lambda=eigen.lipschitz,
        coupling_gain=network_coupling_gain(law, topology, s_max),
        min_length=min_length,
    )
    logger.debug("smallness budget derived", **budget.margins())
    return budget


def validate_budget(budget: SmallnessBudget, window: int | None = None) -> None:
    """
    Raises:
        PicardError: a margin is violated; ``details`` carry all margins
    """
    if budget.certified:
        return
    margins = budget.margins()
    details: dict[str, Any] = {
        "violated": [k for k, v in margins.items() if v < 0.0 or (k == "crossing" and v == 0.0)],
        "margins": margins,
    }
    if window is not None:
        details["window"] = window
    raise PicardError("smallness budget violated", details)
