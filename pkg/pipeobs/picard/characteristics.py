"""
Backward characteristics of a space-time invariant field.

Paths solve ``d xi / ds = lambda+-(S(s, xi))`` backwards in time with explicit
Euler substeps no longer than ``dx / Lambda_hi``. A path stops at the start of
the lattice or where it meets a pipe end; the crossing point is interpolated
linearly inside the last substep.
"""

from __future__ import annotations

from collections.abc import Callable
from dataclasses import dataclass
from enum import IntEnum

import numpy as np

from ..exceptions import PicardError
from ..models.pressure import PressureLaw
from ..models.types import Family, FloatArray, RiemannPair
from ..numerics.riemann import eigenvalues, from_riemann
from .lattice import EdgeLattice

# (s, x) -> integrand of the family at those points
Source = Callable[[FloatArray, FloatArray], FloatArray]


class FootKind(IntEnum):
    INITIAL = 0
    START = 1
    END = 2


@dataclass(frozen=True)
class Foot:
    """Where one characteristic meets the data."""

    t: float
    x: float
    kind: FootKind
    path_t: FloatArray
    path_x: FloatArray


@dataclass(frozen=True)
class FamilyTrace:
    """Feet of many characteristics of one family, plus path integrals."""

    t_foot: FloatArray
    x_foot: FloatArray
    kind: FloatArray
    integral: FloatArray
    substeps: int


def wave_speed(
    law: PressureLaw, family: Family, s_plus: FloatArray, s_minus: FloatArray
) -> FloatArray:
    rho, v = from_riemann(law, RiemannPair(s_plus, s_minus))
    lam_plus, lam_minus = eigenvalues(law, rho, v)
    return np.asarray(lam_plus if family is Family.PLUS else lam_minus, dtype=np.float64)


def default_substep(lattice: EdgeLattice, lam_hi: float) -> float:
    dt = float(lattice.times[1] - lattice.times[0]) if lattice.times.size > 1 else np.inf
    return float(min(dt, lattice.dx / lam_hi))


class _Sampler:
    def __init__(self, lattice: EdgeLattice) -> None:
        self.plus, self.minus = lattice.interpolators()
        self.t0 = float(lattice.times[0])
        self.t1 = float(lattice.times[-1])
        self.length = lattice.length
        self.eps = 1e-12 * max(1.0, abs(self.t1))

    def __call__(self, s: FloatArray, x: FloatArray) -> tuple[FloatArray, FloatArray]:
        pts = np.column_stack((np.clip(s, self.t0, self.t1), np.clip(x, 0.0, self.length)))
        return self.plus(pts), self.minus(pts)


def _euler(
    law: PressureLaw,
    sampler: _Sampler,
    family: Family,
    s: FloatArray,
    x: FloatArray,
    h: float,
) -> tuple[FloatArray, FloatArray, FloatArray]:
    """One backward substep; returns (s_new, x_new, kind) with kind 0 inside."""
    lam = wave_speed(law, family, *sampler(s, x))
    if not np.all(np.isfinite(lam)):
        raise PicardError("non-finite field along a characteristic")
    step = np.minimum(h, s - sampler.t0)
    x_new = x - step * lam
    s_new = s - step
    kind = np.where(
        x_new < 0.0, FootKind.START, np.where(x_new > sampler.length, FootKind.END, 0)
    )
    out = kind != 0
    if np.any(out):
        x_b = np.where(kind == FootKind.START, 0.0, sampler.length)
        travel = np.where(out, x - x_new, 1.0)
        theta = np.where(out, (x - x_b) / travel, 1.0)
        s_new = np.where(out, s - theta * step, s_new)
        x_new = np.where(out, x_b, x_new)
    return s_new, x_new, kind


def trace_characteristic(
    law: PressureLaw,
    lattice: EdgeLattice,
    family: Family,
    x: float,
    t: float,
    lam_hi: float,
    substep: float | None = None,
) -> Foot:
    """Follow one characteristic from ``(t, x)`` back to its foot.

    Raises:
        PicardError: non-finite field or a path that never reaches the data
    """
    sampler = _Sampler(lattice)
    h = substep or default_substep(lattice, lam_hi)
    s_arr, x_arr = np.array([float(t)]), np.array([float(x)])
    path_t, path_x = [float(t)], [float(x)]
    kind = FootKind.INITIAL
    limit = int(np.ceil((t - sampler.t0) / h)) + 2
    for _ in range(limit):
        if s_arr[0] <= sampler.t0 + sampler.eps:
            break
        s_arr, x_arr, hit = _euler(law, sampler, family, s_arr, x_arr, h)
        path_t.append(float(s_arr[0]))
        path_x.append(float(x_arr[0]))
        if hit[0]:
            kind = FootKind(int(hit[0]))
            break
    else:
        raise PicardError("characteristic did not reach the data", {"x": x, "t": t})
    return Foot(path_t[-1], path_x[-1], kind, np.array(path_t), np.array(path_x))


def trace_family(
    law: PressureLaw,
    lattice: EdgeLattice,
    family: Family,
    t: FloatArray,
    x: FloatArray,
    lam_hi: float,
    source: Source | None = None,
    rate: float = 0.0,
    substep: float | None = None,
) -> FamilyTrace:
    """Vectorised ``trace_characteristic`` with a path integral.

    The integral is ``int exp(-rate (t - r)) source(r, xi(r)) dr`` from the
    foot to ``t`` by the composite trapezoid rule, with the kernel taken
    exactly at the nodes.
    """
    sampler = _Sampler(lattice)
    h = substep or default_substep(lattice, lam_hi)
    t_end = np.asarray(t, dtype=np.float64)
    s = t_end.copy()
    pos = np.asarray(x, dtype=np.float64).copy()
    kind = np.full(s.shape, FootKind.INITIAL, dtype=np.int64)
    integral = np.zeros_like(s)
    active = s > sampler.t0 + sampler.eps

    q_cur = np.zeros_like(s)
    if source is not None and np.any(active):
        q_cur[active] = source(s[active], pos[active])

    limit = int(np.ceil((float(np.max(t_end, initial=0.0)) - sampler.t0) / h)) + 2
    steps = 0
    while np.any(active):
        if steps >= limit:
            raise PicardError(
                "characteristic did not reach the data", {"active": int(active.sum())}
            )
        steps += 1
        idx = np.flatnonzero(active)
        s_old = s[idx]
        s_new, x_new, hit = _euler(law, sampler, family, s_old, pos[idx], h)
        if source is not None:
            q_new = source(s_new, x_new)
            ends = t_end[idx]
            kernel_old = np.exp(-rate * (ends - s_old))
            kernel_new = np.exp(-rate * (ends - s_new))
            integral[idx] += 0.5 * (s_old - s_new) * (kernel_old * q_cur[idx] + kernel_new * q_new)
            q_cur[idx] = q_new
        s[idx], pos[idx] = s_new, x_new
        kind[idx] = np.where(hit != 0, hit, kind[idx])
        done = (hit != 0) | (s_new <= sampler.t0 + sampler.eps)
        active[idx[done]] = False
    return FamilyTrace(s, pos, kind, integral, steps)
