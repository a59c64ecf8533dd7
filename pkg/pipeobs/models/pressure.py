"""
Pressure-law algebra.

Two law families are supported, both with closed forms for the pressure
potential P and the normalized potential P~:

* isothermal ``p(rho) = c**2 * rho``
* power law ``p(rho) = kappa * rho**alpha`` with ``alpha > 1``

P is normalized so that ``P(rho_ref) = 0`` and satisfies ``rho P'' = p'``.
P~ is ``int_{rho_ref}^{rho} sqrt(p'(s)) / (c s) ds`` with ``c = sqrt(p'(rho_ref))``.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Literal

import numpy as np
from scipy import integrate

from ..constants import NUMERIC
from ..exceptions import DomainError, OutOfBandError, ValidationError
from .types import ArrayLike, FloatArray, LawBundle, LawKind

GRAVITY = 9.81


def match_input(template: ArrayLike, values: FloatArray) -> ArrayLike:
    """Return a float for scalar input and an array otherwise."""
    if np.ndim(template) == 0:
        return float(values)
    return values


def positive_density(rho: ArrayLike) -> FloatArray:
    arr = np.asarray(rho, dtype=np.float64)
    if not np.all(arr > 0.0):
        raise DomainError(
            "density not positive",
            {"min_density": float(np.nanmin(arr)) if arr.size else None},
        )
    return arr


@dataclass(frozen=True)
class PressureLaw:
    """A barotropic pressure law with its reference density and admissible band.

    ``c`` is the isothermal sound speed and is ignored by the power law, whose
    parameters are ``kappa`` and ``alpha``. The band defaults to
    ``[rho_ref / 2, 2 rho_ref]``.
    """

    kind: LawKind
    rho_ref: float = 1.0
    c: float = 1.0
    kappa: float = 1.0
    alpha: float = 2.0
    rho_lo: float = field(default=0.0)
    rho_hi: float = field(default=0.0)

    def __post_init__(self) -> None:
        if self.rho_ref <= 0.0:
            raise ValidationError("reference density not positive", {"rho_ref": self.rho_ref})
        if self.kind is LawKind.ISOTHERMAL and self.c <= 0.0:
            raise ValidationError("sound speed not positive", {"c": self.c})
        if self.kind is LawKind.POWER and (self.kappa <= 0.0 or self.alpha <= 1.0):
            raise ValidationError(
                "power law needs kappa > 0 and alpha > 1",
                {"kappa": self.kappa, "alpha": self.alpha},
            )
        if self.rho_lo == 0.0 and self.rho_hi == 0.0:
            object.__setattr__(self, "rho_lo", 0.5 * self.rho_ref)
            object.__setattr__(self, "rho_hi", 2.0 * self.rho_ref)
        if not 0.0 < self.rho_lo < self.rho_hi:
            raise ValidationError(
                "density band must satisfy 0 < rho_lo < rho_hi",
                {"rho_lo": self.rho_lo, "rho_hi": self.rho_hi},
            )

    @classmethod
    def isothermal(cls, c: float = 1.0, rho_ref: float = 1.0, **band: float) -> PressureLaw:
        return cls(LawKind.ISOTHERMAL, rho_ref=rho_ref, c=c, **band)

    @classmethod
    def power(
        cls, kappa: float, alpha: float, rho_ref: float = 1.0, **band: float
    ) -> PressureLaw:
        return cls(LawKind.POWER, rho_ref=rho_ref, kappa=kappa, alpha=alpha, **band)

    @classmethod
    def saint_venant(cls, rho_ref: float = 1.0, **band: float) -> PressureLaw:
        """Shallow-water analogue: kappa = g/2, alpha = 2."""
        return cls.power(GRAVITY / 2.0, 2.0, rho_ref=rho_ref, **band)

    def with_band(self, rho_lo: float, rho_hi: float) -> PressureLaw:
        return replace(self, rho_lo=rho_lo, rho_hi=rho_hi)

    @property
    def band(self) -> tuple[float, float]:
        return (self.rho_lo, self.rho_hi)

    @property
    def sound_scale(self) -> float:
        """c = sqrt(p'(rho_ref))."""
        return float(np.sqrt(self.dp(self.rho_ref)))

    # Pressure and its derivatives

    def p(self, rho: ArrayLike) -> ArrayLike:
        r = positive_density(rho)
        if self.kind is LawKind.ISOTHERMAL:
            return match_input(rho, self.c**2 * r)
        return match_input(rho, self.kappa * r**self.alpha)

    def dp(self, rho: ArrayLike) -> ArrayLike:
        r = positive_density(rho)
        if self.kind is LawKind.ISOTHERMAL:
            return match_input(rho, np.full_like(r, self.c**2))
        return match_input(rho, self.kappa * self.alpha * r ** (self.alpha - 1.0))

    def d2p(self, rho: ArrayLike) -> ArrayLike:
        r = positive_density(rho)
        if self.kind is LawKind.ISOTHERMAL:
            return match_input(rho, np.zeros_like(r))
        a = self.alpha
        return match_input(rho, self.kappa * a * (a - 1.0) * r ** (a - 2.0))

    # Pressure potential

    def P(self, rho: ArrayLike) -> ArrayLike:  # noqa: N802
        r = positive_density(rho)
        if self.kind is LawKind.ISOTHERMAL:
            return match_input(rho, self.c**2 * r * np.log(r / self.rho_ref))
        a = self.alpha
        return match_input(rho, self.kappa * (r**a - self.rho_ref**a) / (a - 1.0))

    def dP(self, rho: ArrayLike) -> ArrayLike:  # noqa: N802
        r = positive_density(rho)
        if self.kind is LawKind.ISOTHERMAL:
            return match_input(rho, self.c**2 * (1.0 + np.log(r / self.rho_ref)))
        a = self.alpha
        return match_input(rho, self.kappa * a * r ** (a - 1.0) / (a - 1.0))

    def d2P(self, rho: ArrayLike) -> ArrayLike:  # noqa: N802
        r = positive_density(rho)
        if self.kind is LawKind.ISOTHERMAL:
            return match_input(rho, self.c**2 / r)
        return match_input(rho, self.kappa * self.alpha * r ** (self.alpha - 2.0))

    def d3P(self, rho: ArrayLike) -> ArrayLike:  # noqa: N802
        r = positive_density(rho)
        if self.kind is LawKind.ISOTHERMAL:
            return match_input(rho, -(self.c**2) / r**2)
        a = self.alpha
        return match_input(rho, self.kappa * a * (a - 2.0) * r ** (a - 3.0))

    # Normalized potential

    def ptilde(self, rho: ArrayLike) -> ArrayLike:
        r = positive_density(rho)
        if self.kind is LawKind.ISOTHERMAL:
            return match_input(rho, np.log(r / self.rho_ref))
        k = 0.5 * (self.alpha - 1.0)
        return match_input(rho, ((r / self.rho_ref) ** k - 1.0) / k)

    def ptilde_prime(self, rho: ArrayLike) -> ArrayLike:
        """dP~/drho = sqrt(p'(rho)) / (c rho)."""
        r = positive_density(rho)
        return match_input(rho, np.sqrt(np.asarray(self.dp(r))) / (self.sound_scale * r))

    def drho_dy(self, rho: ArrayLike) -> ArrayLike:
        """Derivative of P~^{-1} expressed at rho: c rho / sqrt(p'(rho))."""
        r = positive_density(rho)
        return match_input(rho, self.sound_scale * r / np.sqrt(np.asarray(self.dp(r))))

    def _ptilde_inv_closed(self, y: FloatArray) -> FloatArray:
        if self.kind is LawKind.ISOTHERMAL:
            return self.rho_ref * np.exp(y)
        k = 0.5 * (self.alpha - 1.0)
        base = 1.0 + k * y
        if not np.all(base > 0.0):
            raise OutOfBandError(
                "inversion would leave (0, inf)", {"y_min": float(np.min(y))}
            )
        return self.rho_ref * base ** (1.0 / k)


def law_bundle(law: PressureLaw, rho: ArrayLike) -> LawBundle:
    """Evaluate (p, p', P, P', P'', P~) at ``rho``."""
    return LawBundle(
        p=law.p(rho),
        dp=law.dp(rho),
        P=law.P(rho),
        dP=law.dP(rho),
        d2P=law.d2P(rho),
        ptilde=law.ptilde(rho),
    )


def ptilde_quad(law: PressureLaw, rho: ArrayLike) -> ArrayLike:
    """P~ by adaptive quadrature of sqrt(p')/(c s)."""
    r = positive_density(rho)
    out = np.empty_like(r)
    for idx, value in np.ndenumerate(r):
        out[idx] = integrate.quad(
            lambda s: float(law.ptilde_prime(s)),
            law.rho_ref,
            float(value),
            epsabs=1e-14,
            epsrel=1e-13,
        )[0]
    return match_input(rho, out)


def _bisect_inverse(law: PressureLaw, y: FloatArray) -> FloatArray:
    lo = np.full_like(y, law.rho_lo)
    hi = np.full_like(y, law.rho_hi)
    for _ in range(200):
        below = np.asarray(law.ptilde(lo)) > y
        if not np.any(below):
            break
        lo = np.where(below, 0.5 * lo, lo)
    for _ in range(200):
        above = np.asarray(law.ptilde(hi)) < y
        if not np.any(above):
            break
        hi = np.where(above, 2.0 * hi, hi)
    for _ in range(100):
        mid = 0.5 * (lo + hi)
        too_low = np.asarray(law.ptilde(mid)) < y
        lo = np.where(too_low, mid, lo)
        hi = np.where(too_low, hi, mid)
    return 0.5 * (lo + hi)


def ptilde_inv(
    law: PressureLaw,
    y: ArrayLike,
    *,
    band: tuple[float, float] | None = None,
    margin: float = NUMERIC.BAND_MARGIN,
    tol: float = NUMERIC.INVERSION_TOL,
    method: Literal["closed", "bisect"] = "closed",
) -> ArrayLike:
    """Invert P~ on the admissible band expanded by ``margin`` in P~ units.

    The first guess comes from the closed form (or bisection) and is polished
    by Newton steps on the P~ residual.

    Raises:
        OutOfBandError: if ``y`` maps outside the expanded band or (0, inf)
    """
    y_arr = np.asarray(y, dtype=np.float64)
    rho_lo, rho_hi = band if band is not None else law.band
    y_lo = float(law.ptilde(rho_lo)) - margin
    y_hi = float(law.ptilde(rho_hi)) + margin
    if not np.all(np.isfinite(y_arr)) or np.any(y_arr < y_lo) or np.any(y_arr > y_hi):
        raise OutOfBandError(
            "density outside admissible band",
            {
                "y_min": float(np.nanmin(y_arr)) if y_arr.size else None,
                "y_max": float(np.nanmax(y_arr)) if y_arr.size else None,
                "image": (y_lo, y_hi),
            },
        )

    rho = law._ptilde_inv_closed(y_arr) if method == "closed" else _bisect_inverse(law, y_arr)
    for _ in range(3):
        residual = np.asarray(law.ptilde(rho)) - y_arr
        if np.all(np.abs(residual) <= tol):
            break
        rho = rho - residual / np.asarray(law.ptilde_prime(rho))
        if not np.all(rho > 0.0):
            raise OutOfBandError("inversion would leave (0, inf)", {"y": y_arr.tolist()})
    return match_input(y, rho)


@dataclass(frozen=True)
class BoundConstants:
    """Extrema of p', P'' and |P'''| on the density band, plus the velocity bound."""

    rho_lo: float
    rho_hi: float
    v_bar: float
    dp_lo: float
    dp_hi: float
    d2P_lo: float  # noqa: N815
    d2P_hi: float  # noqa: N815
    d3P_max: float  # noqa: N815
    d2p_max: float
    subsonic_margin: float

    @property
    def subsonic(self) -> bool:
        """rho P''(rho) >= 4 v_bar**2 on the whole band."""
        return self.subsonic_margin >= 0.0


def bound_constants(
    law: PressureLaw, rho_lo: float, rho_hi: float, v_bar: float
) -> BoundConstants:
    """Band extrema in closed form.

    Every quantity involved is a power of rho for both law kinds, hence
    monotone on the band, so the extrema sit at the endpoints.
    """
    if not 0.0 < rho_lo < rho_hi:
        raise ValidationError(
            "density band must satisfy 0 < rho_lo < rho_hi",
            {"rho_lo": rho_lo, "rho_hi": rho_hi},
        )
    ends = np.array([rho_lo, rho_hi])
    dp = np.asarray(law.dp(ends))
    d2P = np.asarray(law.d2P(ends))  # noqa: N806
    d3P = np.abs(np.asarray(law.d3P(ends)))  # noqa: N806
    d2p = np.abs(np.asarray(law.d2p(ends)))
    # rho P'' = p' is monotone as well
    return BoundConstants(
        rho_lo=rho_lo,
        rho_hi=rho_hi,
        v_bar=v_bar,
        dp_lo=float(dp.min()),
        dp_hi=float(dp.max()),
        d2P_lo=float(d2P.min()),
        d2P_hi=float(d2P.max()),
        d3P_max=float(d3P.max()),
        d2p_max=float(d2p.max()),
        subsonic_margin=float(dp.min()) - 4.0 * v_bar**2,
    )
