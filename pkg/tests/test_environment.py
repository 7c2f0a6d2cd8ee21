"""Tests for the POMDP environment, schedules and episode runner."""

import csv

import numpy as np
import pytest

from flotopt.environment import (ActionGrid, EpisodeContext, FlotationAction,
                                 FlotationEnv, MeasurementSchedule, Policy,
                                 run_episode)
from flotopt.ground_truth import (ErrorSurfaceConfig, FeedstockSignalConfig,
                                  synthesize_ground_truth)
from flotopt.kinetics import (EconomicParams, KineticParams, grade_kinetic,
                              recovery_kinetic, reward)
from flotopt.policies import ConstantPolicy, MpcPolicy, PidPolicy

GRID = ActionGrid()
KP = KineticParams()
ECON = EconomicParams()


def make_gt(seed=0, feed=None, err=None):
    feed = feed or FeedstockSignalConfig()
    err = err or ErrorSurfaceConfig(amplitude=0.0)
    return synthesize_ground_truth(feed, err, GRID.t_values, GRID.f_values,
                                   seed=seed)


class TestActionGrid:
    def test_default_shape(self):
        assert len(GRID.t_values) == 28
        assert len(GRID.f_values) == 40
        assert GRID.n_actions == 1120

    def test_time_major_order(self):
        # first block walks air flow at the smallest time
        assert GRID.action_at(0) == (0.5, 5.0)
        assert GRID.action_at(1) == (0.5, 10.0)
        assert GRID.action_at(40) == (1.0, 5.0)

    def test_index_roundtrip(self):
        for idx in (0, 17, 799):
            t, f = GRID.action_at(idx)
            assert GRID.index_of(t, f) == idx

    def test_off_grid_rejected(self):
        with pytest.raises(ValueError):
            GRID.index_of(0.75, 5.0)
        with pytest.raises(ValueError):
            GRID.index_of(0.5, 201.0)

    def test_snap(self):
        assert GRID.snap(0.74, 12.4) == (0.5, 10.0)
        assert GRID.snap(-5.0, 500.0) == (0.5, 200.0)

    def test_validation(self):
        with pytest.raises(ValueError):
            ActionGrid(t_step=0.0)
        with pytest.raises(ValueError):
            ActionGrid(t_min=5.0, t_max=1.0)


class TestMeasurementSchedule:
    def test_every_step(self):
        s = MeasurementSchedule.every_step(100)
        assert s.budget == 100 and all(s.scheduled(T) for T in range(100))

    def test_evenly_spaced_counts(self):
        for n in (0, 1, 3, 10, 30, 100):
            s = MeasurementSchedule.evenly_spaced(n, 100)
            assert len(s.timesteps) == n
        assert MeasurementSchedule.evenly_spaced(3, 100).timesteps == \
            frozenset({0, 33, 66})

    def test_first_measurement_at_zero(self):
        assert 0 in MeasurementSchedule.evenly_spaced(1, 100).timesteps

    def test_validation(self):
        with pytest.raises(ValueError):
            MeasurementSchedule.evenly_spaced(101, 100)
        with pytest.raises(ValueError):
            MeasurementSchedule(mode="sometimes")
        with pytest.raises(ValueError):
            MeasurementSchedule(mode="fixed", budget=2, timesteps=frozenset({1}))


class TestEnvStep:
    def test_reset_state(self):
        gt = make_gt()
        env = FlotationEnv(gt, GRID, MeasurementSchedule.every_step(100))
        s = env.reset()
        assert s.T == 0 and s.r == 0.0 and s.g == 0.0
        assert s.c == gt.composition_series[0]
        s2 = env.reset()
        assert s == s2

    def test_unmeasured_composition_is_none(self):
        env = FlotationEnv(make_gt(), GRID, MeasurementSchedule.evenly_spaced(0, 100))
        env.reset()
        _, obs, _, _ = env.step(FlotationAction(1.0, 10.0, measure=True))
        assert obs.composition is None  # fixed schedule overrides the flag

    def test_zero_error_outputs_match_kinetics(self):
        """c=10 constant, t=1, f=10: recovery 25, grade from the kinetic model."""
        feed = FeedstockSignalConfig(mean_composition=10.0, amplitude=0.0)
        gt = make_gt(feed=feed)
        env = FlotationEnv(gt, GRID, MeasurementSchedule.every_step(100))
        env.reset()
        _, obs, rew, _ = env.step(FlotationAction(1.0, 10.0))
        assert obs.recovery == pytest.approx(25.0, abs=1e-9)
        assert obs.grade == pytest.approx(grade_kinetic(KP, 10.0, 1.0, 10.0), abs=1e-12)
        assert obs.composition == pytest.approx(10.0)
        assert rew == pytest.approx(
            reward(ECON, obs.grade, obs.recovery, 1.0, 10.0, True), abs=1e-12)

    def test_terminal_at_horizon(self):
        env = FlotationEnv(make_gt(), GRID, MeasurementSchedule.every_step(100))
        env.reset()
        for T in range(100):
            _, _, _, terminal = env.step(FlotationAction(0.5, 5.0))
            assert terminal == (T == 99)
        with pytest.raises(RuntimeError):
            env.step(FlotationAction(0.5, 5.0))

    def test_off_grid_action_rejected(self):
        env = FlotationEnv(make_gt(), GRID, MeasurementSchedule.every_step(100))
        env.reset()
        with pytest.raises(ValueError):
            env.step(FlotationAction(0.6, 5.0))

    def test_agent_choice_budget(self):
        env = FlotationEnv(make_gt(), GRID, MeasurementSchedule.agent_choice(2))
        env.reset()
        measured = []
        for _ in range(5):
            _, obs, _, _ = env.step(FlotationAction(1.0, 10.0, measure=True))
            measured.append(obs.composition is not None)
        assert measured == [True, True, False, False, False]
        assert env.measurements_used == 2

    def test_observation_matches_reward_inputs(self):
        """Delta observation function: observed values are the rewarded ones."""
        err = ErrorSurfaceConfig(log10_variance=0.0)
        gt = make_gt(seed=4, err=err)
        env = FlotationEnv(gt, GRID, MeasurementSchedule.every_step(100))
        env.reset()
        _, obs, rew, _ = env.step(FlotationAction(3.0, 55.0))
        assert rew == pytest.approx(
            reward(ECON, obs.grade, obs.recovery, 3.0, 55.0, True), abs=1e-12)


class TestRunEpisode:
    def test_constant_policy_constant_rewards(self):
        feed = FeedstockSignalConfig(amplitude=0.0)
        gt = make_gt(feed=feed)
        rec = run_episode(gt, GRID, MeasurementSchedule.evenly_spaced(0, 100),
                          ConstantPolicy(2.0, 50.0), seed=0)
        rewards = [s.reward for s in rec.steps]
        assert len(set(rewards)) == 1 and len(rewards) == 100

    def test_cumulative_equals_resummation(self):
        gt = make_gt(seed=2, err=ErrorSurfaceConfig(log10_variance=-1.0))
        rec = run_episode(gt, GRID, MeasurementSchedule.every_step(100),
                          PidPolicy(), seed=2)
        assert rec.total_reward == pytest.approx(sum(s.reward for s in rec.steps),
                                                 abs=1e-12)

    def test_bit_identical_reruns(self):
        gt = make_gt(seed=3, err=ErrorSurfaceConfig(log10_variance=0.0))
        sched = MeasurementSchedule.evenly_spaced(10, 100)
        a = run_episode(gt, GRID, sched, MpcPolicy(), seed=3)
        b = run_episode(gt, GRID, sched, MpcPolicy(), seed=3)
        assert a == b

    def test_transition_is_action_independent(self):
        """Different policies see the same composition sequence."""
        gt = make_gt(seed=5, feed=FeedstockSignalConfig(log10_variance=-1.0),
                     err=ErrorSurfaceConfig(log10_variance=-1.0))
        sched = MeasurementSchedule.evenly_spaced(10, 100)
        a = run_episode(gt, GRID, sched, PidPolicy(), seed=5)
        b = run_episode(gt, GRID, sched, ConstantPolicy(5.0, 100.0), seed=5)
        assert [s.c_true for s in a.steps] == [s.c_true for s in b.steps]

    def test_fixed_schedule_fairness(self):
        gt = make_gt(seed=6)
        sched = MeasurementSchedule.evenly_spaced(7, 100)
        a = run_episode(gt, GRID, sched, PidPolicy(), seed=6)
        b = run_episode(gt, GRID, sched, MpcPolicy(), seed=6)
        measured_a = [s.T for s in a.steps if s.measured]
        measured_b = [s.T for s in b.steps if s.measured]
        assert measured_a == measured_b == sorted(sched.timesteps)

    def test_csv_roundtrip(self, tmp_path):
        gt = make_gt(seed=7)
        rec = run_episode(gt, GRID, MeasurementSchedule.every_step(100),
                          ConstantPolicy(1.0, 20.0), seed=7)
        path = tmp_path / "episode.csv"
        rec.write_csv(path)
        with open(path) as fh:
            rows = list(csv.DictReader(fh))
        assert len(rows) == 100
        assert float(rows[13]["reward"]) == rec.steps[13].reward
        assert rows[0]["seed"] == "7"

    def test_json_dump(self, tmp_path):
        gt = make_gt(seed=8)
        rec = run_episode(gt, GRID, MeasurementSchedule.every_step(100),
                          ConstantPolicy(1.0, 20.0), seed=8)
        path = tmp_path / "episode.json"
        rec.write_json(path)
        import json
        with open(path) as fh:
            data = json.load(fh)
        assert data["policy"] == "constant" and len(data["steps"]) == 100

    def test_off_grid_policy_aborts(self):
        class Rogue(Policy):
            name = "rogue"

            def act(self, T):
                return FlotationAction(0.77, 5.0)

        with pytest.raises(ValueError):
            run_episode(make_gt(), GRID, MeasurementSchedule.every_step(100),
                        Rogue(), seed=0)
