"""Closed-form flotation kinetics and the economic (NPV-proxy) reward.

All functions are pure, accept scalars or broadcastable numpy arrays, and
evaluate one processed batch (one timestep). Grade, recovery and feedstock
composition are in percent; flotation time in minutes; air flow in L/hr;
money in $M per timestep.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

GRADE_CEILING = 42.2  # % P2O5 at which the enrichment factor collapses to 1


@dataclass(frozen=True)
class KineticParams:
    """Parameters of the kinetic grade/recovery model.

    Attributes:
        k: flotation rate constant, 1/min.
        c_max: theoretical maximum grade, percent; also the denominator of
            the enrichment term in the grade model.
    """

    k: float = 1.0
    c_max: float = GRADE_CEILING

    def __post_init__(self) -> None:
        if not self.k > 0:
            raise ValueError(f"rate constant k must be positive, got {self.k}")
        if not self.c_max > 0:
            raise ValueError(f"grade ceiling c_max must be positive, got {self.c_max}")


@dataclass(frozen=True)
class EconomicParams:
    """Coefficients of the per-batch NPV-proxy reward.

    Revenue is price times production: price_coeff $/t per unit fractional
    grade, production_coeff Mt/yr per unit fractional recovery, prorated by
    timesteps_per_year. OPEX is linear in flotation time and air flow.
    """

    price_coeff: float = 500.0
    production_coeff: float = 35.0
    timesteps_per_year: int = 100
    opex_time_coeff: float = 0.5
    opex_air_coeff: float = 0.02
    measurement_cost: float = 0.0

    def __post_init__(self) -> None:
        if self.timesteps_per_year <= 0:
            raise ValueError("timesteps_per_year must be positive")
        for name in ("price_coeff", "production_coeff", "opex_time_coeff",
                     "opex_air_coeff", "measurement_cost"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")


def _check_action_domain(t, f) -> None:
    if np.any(np.asarray(t) < 0):
        raise ValueError(f"flotation time must be non-negative, got {t}")
    if np.any(np.asarray(f) < 0):
        raise ValueError(f"air flow rate must be non-negative, got {f}")


def recovery_kinetic(params: KineticParams, t, f):
    """Batch recovery in percent: 100 * kt/(1+kt) * f/(f+10).

    Saturates towards 100 as both flotation time and air flow grow; exactly
    zero when either is zero.
    """
    _check_action_domain(t, f)
    kt = params.k * np.asarray(t, dtype=float)
    f = np.asarray(f, dtype=float)
    out = 100.0 * (kt / (1.0 + kt)) * (f / (f + 10.0))
    return float(out) if out.ndim == 0 else out


def grade_kinetic(params: KineticParams, c, t, f):
    """Concentrate grade in percent for feed composition c.

    g = c * [1 + (1 - c/c_max) * (1 - exp(-kt/10) / (1 + exp(4 - 0.04 f)))]

    The bracketed enrichment factor lies in [1, 2 - c/c_max], so the grade
    never drops below the feed composition nor exceeds c_max.
    """
    _check_action_domain(t, f)
    c = np.asarray(c, dtype=float)
    if np.any(c < 0) or np.any(c > params.c_max):
        raise ValueError(f"feed composition must lie in [0, {params.c_max}], got {c}")
    t = np.asarray(t, dtype=float)
    f = np.asarray(f, dtype=float)
    lift = 1.0 - np.exp(-params.k * t / 10.0) / (1.0 + np.exp(4.0 - 0.04 * f))
    out = c * (1.0 + (1.0 - c / params.c_max) * lift)
    return float(out) if out.ndim == 0 else out


def opex(params: EconomicParams, t, f):
    """Operating cost of one batch in $M: opex_time_coeff*t + opex_air_coeff*f."""
    _check_action_domain(t, f)
    out = params.opex_time_coeff * np.asarray(t, dtype=float) + \
        params.opex_air_coeff * np.asarray(f, dtype=float)
    return float(out) if out.ndim == 0 else out


def reward(params: EconomicParams, g, r, t, f, measured=False):
    """Per-batch NPV proxy in $M.

    Revenue uses fractional grade and recovery (percent inputs divided by
    100): price_coeff*(g/100) $/t times production_coeff*(r/100) Mt/yr,
    prorated over timesteps_per_year, minus OPEX and any measurement cost.
    """
    g = np.asarray(g, dtype=float)
    r = np.asarray(r, dtype=float)
    if np.any(g < 0) or np.any(g > 100) or np.any(r < 0) or np.any(r > 100):
        raise ValueError(f"grade and recovery must lie in [0, 100], got g={g}, r={r}")
    revenue = (params.price_coeff * (g / 100.0)) * \
        (params.production_coeff * (r / 100.0)) / params.timesteps_per_year
    out = revenue - opex(params, t, f) - params.measurement_cost * np.asarray(measured)
    return float(out) if out.ndim == 0 else out
