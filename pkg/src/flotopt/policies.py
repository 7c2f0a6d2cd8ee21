"""Deterministic reference policies: setpoint-tracking PID and kinetic MPC.

The PID controller tracks grade/recovery setpoints regardless of operating
cost, the way a stability-first plant loop would. The MPC policy maximizes
the kinetic-model reward by exhaustive search over the action grid; it never
uses learned error information, which is exactly the deterministic-model
behavior the POMDP approach is compared against.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .environment import EpisodeContext, FlotationAction, Policy
from .gp import GPHyperparams, fit_gp
from .kinetics import (EconomicParams, KineticParams, grade_kinetic, opex,
                       recovery_kinetic, reward)


@dataclass(frozen=True)
class PidConfig:
    """Two independent velocity-form PID loops.

    Loop pairing: the grade loop drives air flow (low grade pushes more air,
    the usual plant convention), the recovery loop drives flotation time.
    Gains were tuned once by coarse search on the zero-error kinetic model
    and are frozen here for reproducibility.
    """

    grade_setpoint: float = 30.0
    recovery_setpoint: float = 88.0
    grade_gains: tuple[float, float, float] = (2.0, 1.0, 0.0)     # f loop, per pp
    recovery_gains: tuple[float, float, float] = (0.1, 0.05, 0.0)  # t loop, per pp
    initial_t: float = 5.0
    initial_f: float = 100.0

    def __post_init__(self) -> None:
        if not 0 <= self.grade_setpoint <= 100 or not 0 <= self.recovery_setpoint <= 100:
            raise ValueError("setpoints must lie in [0, 100]")


class PidPolicy(Policy):
    """Incremental PID on the last observed grade and recovery.

    The continuous controller outputs are clamped to the action bounds
    (clamping the increment is the velocity-form equivalent of anti-windup:
    a saturated output freezes the accumulated integral action) and snapped
    to the action grid on emission.
    """

    name = "pid"

    def __init__(self, cfg: PidConfig = PidConfig()):
        self.cfg = cfg

    def reset(self, ctx: EpisodeContext) -> None:
        super().reset(ctx)
        self._t = float(np.clip(self.cfg.initial_t, ctx.grid.t_min, ctx.grid.t_max))
        self._f = float(np.clip(self.cfg.initial_f, ctx.grid.f_min, ctx.grid.f_max))
        self._errors_g: list[float] = []
        self._errors_r: list[float] = []
        self._last_obs = None

    @staticmethod
    def _increment(gains, errors) -> float:
        kp, ki, kd = gains
        e = errors[-1]
        e1 = errors[-2] if len(errors) > 1 else e
        e2 = errors[-3] if len(errors) > 2 else e1
        return kp * (e - e1) + ki * e + kd * (e - 2.0 * e1 + e2)

    def act(self, T: int) -> FlotationAction:
        grid = self.ctx.grid
        if self._last_obs is not None:
            self._errors_g.append(self.cfg.grade_setpoint - self._last_obs.grade)
            self._errors_r.append(self.cfg.recovery_setpoint - self._last_obs.recovery)
            self._f = float(np.clip(
                self._f + self._increment(self.cfg.grade_gains, self._errors_g),
                grid.f_min, grid.f_max))
            self._t = float(np.clip(
                self._t + self._increment(self.cfg.recovery_gains, self._errors_r),
                grid.t_min, grid.t_max))
        t, f = grid.snap(self._t, self._f)
        return FlotationAction(t=t, f=f, measure=self._want_measure(T))

    def _want_measure(self, T: int) -> bool:
        if self.ctx.schedule.mode == "fixed":
            return self.ctx.schedule.scheduled(T)
        return True  # baselines spend the budget greedily

    def observe(self, T, action, obs, step_reward) -> None:
        self._last_obs = obs


@dataclass(frozen=True)
class MpcConfig:
    """Reward-maximizing search over the kinetic model.

    The composition transition is action-independent, so a horizon of 1 is
    already optimal for the kinetic model; larger horizons are supported and
    decompose into the same per-step argmax.
    """

    horizon: int = 1
    composition_source: str = "last-observed"  # or "belief-mean"

    def __post_init__(self) -> None:
        if self.horizon < 1:
            raise ValueError("MPC horizon must be >= 1")
        if self.composition_source not in ("last-observed", "belief-mean"):
            raise ValueError(f"unknown composition source {self.composition_source!r}")


def mpc_act(grid, c_est: float, econ: EconomicParams, kp: KineticParams,
            horizon: int = 1) -> int:
    """Index of the action-grid argmax of the kinetic reward at composition c_est.

    Ties resolve to the first (time-major) index, i.e. the smallest (t, f).
    """
    t = grid.actions[:, 0]
    f = grid.actions[:, 1]
    g = grade_kinetic(kp, np.full_like(t, c_est), t, f)
    r = recovery_kinetic(kp, t, f)
    total = horizon * reward(econ, g, r, t, f)
    return int(np.argmax(total))


class MpcPolicy(Policy):
    """Per-step exhaustive kinetic-reward maximization.

    Between measurements the composition estimate either holds the last
    observed value (default) or follows a feedstock-GP posterior mean; the
    learned grade/recovery errors are never consulted.
    """

    name = "mpc"

    def __init__(self, cfg: MpcConfig = MpcConfig(), prior_composition: float = 15.0,
                 feedstock_hyper: GPHyperparams | None = None):
        if cfg.composition_source == "belief-mean" and feedstock_hyper is None:
            raise ValueError("belief-mean composition source needs feedstock hyperparameters")
        self.cfg = cfg
        self.prior_composition = prior_composition
        self.feedstock_hyper = feedstock_hyper

    def reset(self, ctx: EpisodeContext) -> None:
        super().reset(ctx)
        self._last_measured: float | None = None
        self._comp_log: list[tuple[float, float]] = []
        self._argmax_cache: dict[float, int] = {}

    def _composition_estimate(self, T: int) -> float:
        if self.cfg.composition_source == "belief-mean" and self._comp_log:
            times = np.array([[p[0]] for p in self._comp_log])
            values = np.array([p[1] for p in self._comp_log])
            gp = fit_gp(self.feedstock_hyper, times, values)
            mean, _ = gp.predict(float(T))
            return mean
        if self._last_measured is not None:
            return self._last_measured
        if self.feedstock_hyper is not None:
            return self.feedstock_hyper.mean
        return self.prior_composition

    def act(self, T: int) -> FlotationAction:
        c_est = float(np.clip(self._composition_estimate(T), 0.0, self.ctx.kp.c_max))
        key = round(c_est, 9)
        idx = self._argmax_cache.get(key)
        if idx is None:
            idx = mpc_act(self.ctx.grid, c_est, self.ctx.econ, self.ctx.kp,
                          self.cfg.horizon)
            self._argmax_cache[key] = idx
        t, f = self.ctx.grid.action_at(idx)
        measure = (self.ctx.schedule.scheduled(T)
                   if self.ctx.schedule.mode == "fixed" else True)
        return FlotationAction(t=t, f=f, measure=measure)

    def observe(self, T, action, obs, step_reward) -> None:
        if obs.composition is not None:
            self._last_measured = float(obs.composition)
            self._comp_log.append((float(T), float(obs.composition)))


class ConstantPolicy(Policy):
    """Plays one fixed action forever; useful as a control in tests."""

    name = "constant"

    def __init__(self, t: float, f: float, measure: bool = False):
        self._action = FlotationAction(t=t, f=f, measure=measure)

    def act(self, T: int) -> FlotationAction:
        return self._action
