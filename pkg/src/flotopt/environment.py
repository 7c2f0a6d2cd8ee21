"""The batch-flotation POMDP: transitions, observations, rewards, episodes.

One episode processes `horizon` batches (default 100, one year). The
transition of the feedstock composition is action-independent; observations
are exact (delta observation function), with composition reported only when
a measurement happens.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .ground_truth import GroundTruth, true_outputs
from .kinetics import EconomicParams, KineticParams, reward


@dataclass(frozen=True)
class ActionGrid:
    """Discrete (flotation time, air flow) action lattice.

    Actions are enumerated time-major: index = i_t * n_f + i_f, ascending in
    both coordinates, so ties broken by first index prefer the smallest
    (t, f) pair.
    """

    t_min: float = 0.5
    t_max: float = 14.0
    t_step: float = 0.5
    f_min: float = 5.0
    f_max: float = 200.0
    f_step: float = 5.0

    def __post_init__(self) -> None:
        if self.t_step <= 0 or self.f_step <= 0:
            raise ValueError("grid steps must be positive")
        if self.t_max < self.t_min or self.f_max < self.f_min:
            raise ValueError("grid bounds must be ordered")
        if self.t_min < 0 or self.f_min < 0:
            raise ValueError("grid bounds must be non-negative")

    @cached_property
    def t_values(self) -> np.ndarray:
        n = int(np.floor((self.t_max - self.t_min) / self.t_step + 1e-9)) + 1
        return self.t_min + self.t_step * np.arange(n)

    @cached_property
    def f_values(self) -> np.ndarray:
        n = int(np.floor((self.f_max - self.f_min) / self.f_step + 1e-9)) + 1
        return self.f_min + self.f_step * np.arange(n)

    @property
    def n_actions(self) -> int:
        return len(self.t_values) * len(self.f_values)

    @cached_property
    def actions(self) -> np.ndarray:
        """All (t, f) pairs, shape (n_actions, 2), time-major order."""
        T, F = np.meshgrid(self.t_values, self.f_values, indexing="ij")
        return np.column_stack([T.ravel(), F.ravel()])

    def action_at(self, index: int) -> tuple[float, float]:
        t, f = self.actions[index]
        return float(t), float(f)

    def index_of(self, t: float, f: float) -> int:
        """Flat index of an on-grid action; raises ValueError off the grid."""
        it = (t - self.t_min) / self.t_step
        jf = (f - self.f_min) / self.f_step
        i, j = round(it), round(jf)
        if (abs(it - i) > 1e-6 or abs(jf - j) > 1e-6
                or not 0 <= i < len(self.t_values)
                or not 0 <= j < len(self.f_values)):
            raise ValueError(f"action (t={t}, f={f}) is not on the grid")
        return i * len(self.f_values) + j

    def snap(self, t: float, f: float) -> tuple[float, float]:
        """Nearest on-grid action to an arbitrary (t, f)."""
        i = int(np.clip(round((t - self.t_min) / self.t_step), 0, len(self.t_values) - 1))
        j = int(np.clip(round((f - self.f_min) / self.f_step), 0, len(self.f_values) - 1))
        return float(self.t_values[i]), float(self.f_values[j])


@dataclass(frozen=True)
class MeasurementSchedule:
    """When feedstock composition measurements happen.

    In "fixed" mode the schedule overrides the policy's measure flag: the
    composition is observed exactly at `timesteps`, identically for every
    policy. In "agent-choice" mode the flag is honored until `budget`
    measurements have been spent.
    """

    mode: str = "fixed"
    budget: int = 0
    timesteps: frozenset[int] = field(default_factory=frozenset)

    def __post_init__(self) -> None:
        if self.mode not in ("fixed", "agent-choice"):
            raise ValueError(f"unknown schedule mode {self.mode!r}")
        if self.budget < 0:
            raise ValueError("measurement budget must be non-negative")
        object.__setattr__(self, "timesteps", frozenset(int(t) for t in self.timesteps))
        if self.mode == "fixed" and len(self.timesteps) != self.budget:
            raise ValueError(
                f"fixed schedule lists {len(self.timesteps)} timesteps "
                f"but budget is {self.budget}")

    @classmethod
    def every_step(cls, horizon: int) -> "MeasurementSchedule":
        return cls(mode="fixed", budget=horizon, timesteps=frozenset(range(horizon)))

    @classmethod
    def evenly_spaced(cls, n: int, horizon: int) -> "MeasurementSchedule":
        """n measurements spread evenly over the horizon, starting at T=0."""
        if not 0 <= n <= horizon:
            raise ValueError(f"need 0 <= n <= horizon, got n={n}")
        steps = frozenset(int(i * horizon // n) for i in range(n))
        return cls(mode="fixed", budget=n, timesteps=steps)

    @classmethod
    def agent_choice(cls, budget: int) -> "MeasurementSchedule":
        return cls(mode="agent-choice", budget=budget)

    def scheduled(self, T: int) -> bool:
        return T in self.timesteps


@dataclass(frozen=True)
class FlotationState:
    """c: feedstock composition %; r/g: last batch recovery/grade %; T: timestep."""

    c: float
    r: float
    g: float
    T: int


@dataclass(frozen=True)
class FlotationAction:
    t: float
    f: float
    measure: bool = False


@dataclass(frozen=True)
class FlotationObservation:
    """Exact grade/recovery of the batch; composition is None unless measured."""

    grade: float
    recovery: float
    composition: float | None = None


@dataclass(frozen=True)
class EpisodeContext:
    """Everything a policy may legitimately know at episode start."""

    grid: ActionGrid
    schedule: MeasurementSchedule
    econ: EconomicParams
    kp: KineticParams
    horizon: int


class Policy:
    """Per-episode decision maker; subclasses override act()."""

    name = "policy"

    def reset(self, ctx: EpisodeContext) -> None:
        self.ctx = ctx

    def act(self, T: int) -> FlotationAction:
        raise NotImplementedError

    def observe(self, T: int, action: FlotationAction,
                obs: FlotationObservation, step_reward: float) -> None:
        pass


class FlotationEnv:
    """Owns one episode's ground truth and sequential state."""

    def __init__(self, gt: GroundTruth, grid: ActionGrid,
                 schedule: MeasurementSchedule,
                 econ: EconomicParams = EconomicParams(),
                 kp: KineticParams = KineticParams()):
        self.gt = gt
        self.grid = grid
        self.schedule = schedule
        self.econ = econ
        self.kp = kp
        self.horizon = gt.horizon
        self._state: FlotationState | None = None
        self._measurements_used = 0

    @property
    def state(self) -> FlotationState:
        if self._state is None:
            raise RuntimeError("environment must be reset before use")
        return self._state

    @property
    def measurements_used(self) -> int:
        return self._measurements_used

    def reset(self) -> FlotationState:
        self._state = FlotationState(
            c=float(self.gt.composition_series[0]), r=0.0, g=0.0, T=0)
        self._measurements_used = 0
        return self._state

    def _resolve_measure(self, T: int, requested: bool) -> bool:
        if self.schedule.mode == "fixed":
            return self.schedule.scheduled(T)
        return requested and self._measurements_used < self.schedule.budget

    def step(self, action: FlotationAction):
        """Process one batch; returns (next_state, observation, reward, terminal)."""
        state = self.state
        if state.T >= self.horizon:
            raise RuntimeError("episode is terminal; reset before stepping")
        self.grid.index_of(action.t, action.f)  # raises off-grid
        measured = self._resolve_measure(state.T, action.measure)
        if measured:
            self._measurements_used += 1
        g, r = true_outputs(self.gt, self.kp, state.c, action.t, action.f)
        step_reward = reward(self.econ, g, r, action.t, action.f, measured)
        obs = FlotationObservation(
            grade=g, recovery=r, composition=state.c if measured else None)
        next_T = state.T + 1
        next_c = float(self.gt.composition_series[min(next_T, self.horizon - 1)])
        self._state = FlotationState(c=next_c, r=r, g=g, T=next_T)
        return self._state, obs, step_reward, next_T == self.horizon


@dataclass(frozen=True)
class StepRecord:
    T: int
    c_true: float
    measured: bool
    t: float
    f: float
    grade: float
    recovery: float
    reward: float


@dataclass
class EpisodeRecord:
    """Full per-timestep trace of one policy's episode."""

    policy: str
    seed: int | None
    steps: list[StepRecord]

    CSV_COLUMNS = ("seed", "T", "c_true", "measured", "t", "f", "g", "r", "reward")

    @property
    def total_reward(self) -> float:
        return float(sum(s.reward for s in self.steps))

    @property
    def mean_grade(self) -> float:
        return float(np.mean([s.grade for s in self.steps]))

    @property
    def mean_recovery(self) -> float:
        return float(np.mean([s.recovery for s in self.steps]))

    @property
    def n_measurements(self) -> int:
        return sum(s.measured for s in self.steps)

    def rows(self):
        for s in self.steps:
            yield (self.seed, s.T, repr(s.c_true), int(s.measured), repr(s.t),
                   repr(s.f), repr(s.grade), repr(s.recovery), repr(s.reward))

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(self.CSV_COLUMNS)
            writer.writerows(self.rows())

    def to_dict(self) -> dict:
        return {
            "policy": self.policy,
            "seed": self.seed,
            "steps": [vars(s) for s in self.steps],
        }

    def write_json(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=1)


def run_episode(gt: GroundTruth, grid: ActionGrid, schedule: MeasurementSchedule,
                policy: Policy, econ: EconomicParams = EconomicParams(),
                kp: KineticParams = KineticParams(),
                seed: int | None = None) -> EpisodeRecord:
    """Run one policy through one episode and record the trace."""
    env = FlotationEnv(gt, grid, schedule, econ, kp)
    state = env.reset()
    policy.reset(EpisodeContext(grid=grid, schedule=schedule, econ=econ,
                                kp=kp, horizon=env.horizon))
    steps: list[StepRecord] = []
    terminal = False
    while not terminal:
        T, c_true = state.T, state.c
        action = policy.act(T)
        state, obs, step_reward, terminal = env.step(action)
        policy.observe(T, action, obs, step_reward)
        steps.append(StepRecord(
            T=T, c_true=c_true, measured=obs.composition is not None,
            t=action.t, f=action.f, grade=obs.grade, recovery=obs.recovery,
            reward=step_reward))
    return EpisodeRecord(policy=policy.name,
                         seed=seed if seed is not None else gt.seed, steps=steps)
