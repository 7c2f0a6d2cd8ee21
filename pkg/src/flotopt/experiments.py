"""Scenario configuration, replicate execution, metrics and study sweeps.

A scenario runs every policy on identical ground truths and measurement
schedules (paired seeds), aggregates per-episode rewards into percentile
summaries, and writes CSV artifacts plus a JSON manifest that reproduces the
run bit-identically.
"""

from __future__ import annotations

import csv
import json
import logging
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from . import __version__
from .belief import BeliefHyperparams
from .environment import (ActionGrid, EpisodeRecord, MeasurementSchedule,
                          Policy, run_episode)
from .ground_truth import (ErrorSurfaceConfig, FeedstockSignalConfig,
                           synthesize_ground_truth)
from .kinetics import EconomicParams, KineticParams
from .policies import MpcConfig, MpcPolicy, PidConfig, PidPolicy
from .pomcp import PomcpConfig, PomcpPolicy

log = logging.getLogger("flotopt")

# model-accuracy levels on the error log-variance axis
ACCURACY_LOG10_VARIANCE = {"high": -3.0, "medium": -2.0, "low": 0.0}


class ScenarioError(RuntimeError):
    """A replicate failed; the message carries the seed for replay."""


@dataclass(frozen=True)
class ScenarioConfig:
    """Everything needed to run one cell of a study."""

    name: str = "scenario"
    # ground-truth synthesis
    error_log10_variance: float = -3.0
    error_length_scale_c: float = 50.0
    error_length_scale_t: float = 2.5
    error_length_scale_f: float = 60.0
    error_amplitude: float = 10.0
    feed_log10_variance: float = -3.0
    feed_log10_correlation_length: float = 2.0
    feed_mean_composition: float = 15.0
    feed_amplitude: float = 5.0
    horizon: int = 100
    freeze_error_surfaces: bool = False
    # environment
    grid: ActionGrid = field(default_factory=ActionGrid)
    measurement_n: int | None = None  # None measures at every timestep
    schedule_mode: str = "fixed"
    # execution
    policies: tuple[str, ...] = ("pid", "mpc", "pomcp")
    replicates: int = 20
    base_seed: int = 0
    # parameters
    econ: EconomicParams = field(default_factory=EconomicParams)
    kp: KineticParams = field(default_factory=KineticParams)
    pid: PidConfig = field(default_factory=PidConfig)
    mpc: MpcConfig = field(default_factory=MpcConfig)
    pomcp: PomcpConfig = field(default_factory=PomcpConfig)
    belief_noise_variance: float = 1e-4

    def __post_init__(self) -> None:
        if self.replicates < 1:
            raise ValueError("need at least one replicate")
        unknown = set(self.policies) - {"pid", "mpc", "pomcp"}
        if unknown:
            raise ValueError(f"unknown policies {sorted(unknown)}")

    def feed_config(self) -> FeedstockSignalConfig:
        return FeedstockSignalConfig(
            log10_variance=self.feed_log10_variance,
            log10_correlation_length=self.feed_log10_correlation_length,
            mean_composition=self.feed_mean_composition,
            amplitude=self.feed_amplitude,
            horizon=self.horizon)

    def error_config(self) -> ErrorSurfaceConfig:
        return ErrorSurfaceConfig(
            log10_variance=self.error_log10_variance,
            length_scale_c=self.error_length_scale_c,
            length_scale_t=self.error_length_scale_t,
            length_scale_f=self.error_length_scale_f,
            amplitude=self.error_amplitude)

    def schedule(self) -> MeasurementSchedule:
        if self.schedule_mode == "agent-choice":
            budget = self.horizon if self.measurement_n is None else self.measurement_n
            return MeasurementSchedule.agent_choice(budget)
        if self.measurement_n is None:
            return MeasurementSchedule.every_step(self.horizon)
        return MeasurementSchedule.evenly_spaced(self.measurement_n, self.horizon)

    def belief_hyperparams(self) -> BeliefHyperparams:
        return BeliefHyperparams.from_configs(
            self.feed_config(), self.error_config(), self.belief_noise_variance)

    def make_policy(self, name: str, seed: int) -> Policy:
        if name == "pid":
            return PidPolicy(self.pid)
        if name == "mpc":
            hyper = (self.belief_hyperparams().feedstock
                     if self.mpc.composition_source == "belief-mean" else None)
            return MpcPolicy(self.mpc, prior_composition=self.feed_mean_composition,
                             feedstock_hyper=hyper)
        if name == "pomcp":
            return PomcpPolicy(self.pomcp, hyper=self.belief_hyperparams(), seed=seed)
        raise ValueError(f"unknown policy {name!r}")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["policies"] = list(self.policies)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ScenarioConfig":
        d = dict(d)
        for key, klass in (("grid", ActionGrid), ("econ", EconomicParams),
                           ("kp", KineticParams), ("pid", PidConfig),
                           ("mpc", MpcConfig), ("pomcp", PomcpConfig)):
            if key in d and isinstance(d[key], dict):
                sub = dict(d[key])
                if klass is PidConfig:
                    sub["grade_gains"] = tuple(sub["grade_gains"])
                    sub["recovery_gains"] = tuple(sub["recovery_gains"])
                d[key] = klass(**sub)
        d["policies"] = tuple(d.get("policies", ("pid", "mpc", "pomcp")))
        return cls(**d)


@dataclass(frozen=True)
class EpisodeSummary:
    policy: str
    seed: int
    total_reward: float
    mean_grade: float
    mean_recovery: float
    n_measurements: int


@dataclass
class ScenarioResult:
    config: ScenarioConfig
    episodes: list[EpisodeSummary]
    records: list[EpisodeRecord] | None = None

    def totals(self, policy: str) -> dict[int, float]:
        return {e.seed: e.total_reward for e in self.episodes if e.policy == policy}

    def episode_means(self, policy: str, attr: str) -> dict[int, float]:
        return {e.seed: getattr(e, attr) for e in self.episodes if e.policy == policy}

    def relative(self, policy: str, baseline: str) -> np.ndarray:
        return relative_reward(self.totals(policy), self.totals(baseline))

    def summary(self, baseline: str = "pid") -> "SummaryStats":
        return SummaryStats.from_result(self, baseline)


def percentile(values, q: float) -> float:
    """Linear-interpolation percentile, q in [0, 100]; empty input raises."""
    arr = np.asarray(values, dtype=float)
    if arr.size == 0:
        raise ValueError("percentile of empty values")
    if not 0.0 <= q <= 100.0:
        raise ValueError(f"percentile rank must lie in [0, 100], got {q}")
    return float(np.percentile(arr, q, method="linear"))


def relative_reward(policy_totals: dict[int, float],
                    baseline_totals: dict[int, float]) -> np.ndarray:
    """Per-seed differences of episode totals ($M/yr), ordered by seed.

    With 100 timesteps per year an episode total in $M is directly $M/yr.
    """
    if set(policy_totals) != set(baseline_totals):
        raise ValueError(
            f"unpaired seeds: {sorted(set(policy_totals) ^ set(baseline_totals))}")
    seeds = sorted(policy_totals)
    return np.array([policy_totals[s] - baseline_totals[s] for s in seeds])


@dataclass
class SummaryStats:
    """Per-policy performance relative to a baseline policy."""

    baseline: str
    rows: dict[str, dict[str, float]]

    @classmethod
    def from_result(cls, result: ScenarioResult, baseline: str) -> "SummaryStats":
        rows = {}
        base_grade = result.episode_means(baseline, "mean_grade")
        base_rec = result.episode_means(baseline, "mean_recovery")
        for policy in result.config.policies:
            if policy == baseline:
                continue
            diffs = result.relative(policy, baseline)
            grade = result.episode_means(policy, "mean_grade")
            rec = result.episode_means(policy, "mean_recovery")
            seeds = sorted(grade)
            rows[policy] = {
                "rel_reward_p20": percentile(diffs, 20),
                "rel_reward_p50": percentile(diffs, 50),
                "rel_reward_p80": percentile(diffs, 80),
                "rel_grade_p50": percentile(
                    [grade[s] - base_grade[s] for s in seeds], 50),
                "rel_recovery_p50": percentile(
                    [rec[s] - base_rec[s] for s in seeds], 50),
            }
        stats = cls(baseline=baseline, rows=rows)
        for policy, row in rows.items():
            assert row["rel_reward_p20"] <= row["rel_reward_p50"] <= row["rel_reward_p80"]
        return stats

    def to_dict(self) -> dict:
        return {"baseline": self.baseline, "rows": self.rows}


def run_scenario(cfg: ScenarioConfig, out_dir=None,
                 keep_records: bool = False, write_steps: bool = False) -> ScenarioResult:
    """Run every policy over paired replicates and aggregate.

    Replicate i uses ground-truth seed base_seed + i; with frozen error
    surfaces the surface seed stays at base_seed while the feedstock signal
    still varies by replicate. All policies of a replicate share the ground
    truth and the measurement schedule.
    """
    feed_cfg = cfg.feed_config()
    err_cfg = cfg.error_config()
    schedule = cfg.schedule()
    episodes: list[EpisodeSummary] = []
    records: list[EpisodeRecord] = []
    for i in range(cfg.replicates):
        seed = cfg.base_seed + i
        surface_seed = cfg.base_seed if cfg.freeze_error_surfaces else seed
        gt = synthesize_ground_truth(
            feed_cfg, err_cfg, cfg.grid.t_values, cfg.grid.f_values,
            seed=seed, surface_seed=surface_seed, c_max=cfg.kp.c_max)
        for name in cfg.policies:
            try:
                record = run_episode(gt, cfg.grid, schedule,
                                     cfg.make_policy(name, seed),
                                     cfg.econ, cfg.kp, seed=seed)
            except Exception as exc:
                log.error("replicate seed=%d policy=%s failed: %s", seed, name, exc)
                raise ScenarioError(
                    f"scenario {cfg.name!r} replicate seed={seed} policy={name} "
                    f"failed: {exc}") from exc
            episodes.append(EpisodeSummary(
                policy=name, seed=seed, total_reward=record.total_reward,
                mean_grade=record.mean_grade, mean_recovery=record.mean_recovery,
                n_measurements=record.n_measurements))
            if keep_records or write_steps:
                records.append(record)
        log.info("scenario %s replicate %d/%d done", cfg.name, i + 1, cfg.replicates)
    result = ScenarioResult(cfg, episodes, records if (keep_records or write_steps) else None)
    if out_dir is not None:
        write_scenario_outputs(result, out_dir, write_steps=write_steps)
    return result


# -- output files -----------------------------------------------------------


def _write_csv(path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


def write_scenario_outputs(result: ScenarioResult, out_dir,
                           write_steps: bool = False) -> None:
    import os
    os.makedirs(out_dir, exist_ok=True)
    _write_csv(
        os.path.join(out_dir, "episodes.csv"),
        ("policy", "seed", "total_reward", "mean_grade", "mean_recovery",
         "n_measurements"),
        [(e.policy, e.seed, repr(e.total_reward), repr(e.mean_grade),
          repr(e.mean_recovery), e.n_measurements) for e in result.episodes])
    baseline = "pid" if "pid" in result.config.policies else result.config.policies[0]
    if len(result.config.policies) > 1:
        with open(os.path.join(out_dir, "summary.json"), "w") as fh:
            json.dump(result.summary(baseline).to_dict(), fh, indent=1, sort_keys=True)
    if write_steps and result.records:
        rows = []
        for rec in result.records:
            rows.extend((rec.policy, *row) for row in rec.rows())
        _write_csv(os.path.join(out_dir, "steps.csv"),
                   ("policy", *EpisodeRecord.CSV_COLUMNS), rows)
    manifest = {"kind": "scenario", "version": __version__,
                "config": result.config.to_dict()}
    with open(os.path.join(out_dir, "manifest.json"), "w") as fh:
        json.dump(manifest, fh, indent=1, sort_keys=True)


# -- studies ------------------------------------------------------------------

STUDIES = ("model-accuracy", "feedstock-variance", "measurements", "action-grid")


def model_accuracy_cells(base: ScenarioConfig) -> list[ScenarioConfig]:
    return [replace(base, name=f"accuracy-{label}",
                    error_log10_variance=lv,
                    policies=("pid", "mpc", "pomcp"))
            for label, lv in ACCURACY_LOG10_VARIANCE.items()]


def feedstock_variance_cells(base: ScenarioConfig,
                             log_vars=(-3.0, -2.0, -1.0, 0.0),
                             corr_lens=(0.0, 1.0, 2.0, 3.0, 4.0)) -> list[ScenarioConfig]:
    """Medium-accuracy surfaces, fully measured feedstock of varying roughness."""
    cells = []
    for lcl in corr_lens:
        for lv in log_vars:
            cells.append(replace(
                base, name=f"feedstock-lv{lv:g}-lcl{lcl:g}",
                error_log10_variance=ACCURACY_LOG10_VARIANCE["medium"],
                feed_log10_variance=lv, feed_log10_correlation_length=lcl,
                measurement_n=None, policies=("mpc", "pomcp")))
    return cells


def measurement_cells(base: ScenarioConfig,
                      ns=(0, 1, 3, 10, 30, 100),
                      accuracies=("high", "medium", "low")) -> list[ScenarioConfig]:
    """High-variance feedstock, frozen surfaces per accuracy, varying n."""
    cells = []
    for label in accuracies:
        for n in ns:
            cells.append(replace(
                base, name=f"measure-{label}-n{n}",
                error_log10_variance=ACCURACY_LOG10_VARIANCE[label],
                feed_log10_variance=0.0, feed_log10_correlation_length=2.0,
                freeze_error_surfaces=True, measurement_n=n,
                policies=("mpc", "pomcp")))
    return cells


def action_grid_cells(base: ScenarioConfig,
                      steps=((0.1, 1.0), (0.25, 2.5), (0.5, 5.0)),
                      log_vars=(-3.0, -2.0, -1.0, 0.0)) -> list[ScenarioConfig]:
    cells = []
    for t_step, f_step in steps:
        grid = replace(base.grid, t_step=t_step, f_step=f_step)
        for lv in log_vars:
            cells.append(replace(
                base, name=f"grid-{t_step:g}x{f_step:g}-lv{lv:g}",
                grid=grid, error_log10_variance=lv,
                policies=("mpc", "pomcp")))
    return cells


def build_cells(study: str, base: ScenarioConfig) -> list[ScenarioConfig]:
    if study == "model-accuracy":
        return model_accuracy_cells(base)
    if study == "feedstock-variance":
        return feedstock_variance_cells(base)
    if study == "measurements":
        return measurement_cells(base)
    if study == "action-grid":
        return action_grid_cells(base)
    raise ValueError(f"unknown study {study!r}; choose from {STUDIES}")


def _cell_medians(result: ScenarioResult, a: str = "pomcp", b: str = "mpc"):
    diffs = result.relative(a, b)
    return (percentile(diffs, 20), percentile(diffs, 50), percentile(diffs, 80))


def emit_study_outputs(study: str, cells: list[ScenarioConfig],
                       results: list[ScenarioResult], out_dir) -> None:
    import os
    os.makedirs(out_dir, exist_ok=True)
    if study == "model-accuracy":
        rows = []
        for cfg, res in zip(cells, results):
            stats = res.summary("pid")
            label = cfg.name.split("-", 1)[1]
            for policy, row in stats.rows.items():
                rows.append((label, repr(cfg.error_log10_variance), policy,
                             *[repr(row[k]) for k in
                               ("rel_recovery_p50", "rel_grade_p50",
                                "rel_reward_p20", "rel_reward_p50", "rel_reward_p80")]))
        _write_csv(os.path.join(out_dir, "table1.csv"),
                   ("accuracy", "error_log10_variance", "policy",
                    "rel_recovery_p50", "rel_grade_p50",
                    "rel_reward_p20", "rel_reward_p50", "rel_reward_p80"), rows)
        low = [res for cfg, res in zip(cells, results) if cfg.name.endswith("low")]
        if low:
            stats = low[0].summary("pid")
            rows = [(policy, *[repr(row[k]) for k in
                               ("rel_reward_p20", "rel_reward_p50", "rel_reward_p80")])
                    for policy, row in stats.rows.items()]
            _write_csv(os.path.join(out_dir, "table2.csv"),
                       ("policy", "rel_reward_p20", "rel_reward_p50",
                        "rel_reward_p80"), rows)
    elif study == "feedstock-variance":
        rows = []
        for cfg, res in zip(cells, results):
            p20, p50, p80 = _cell_medians(res)
            rows.append((repr(cfg.feed_log10_correlation_length),
                         repr(cfg.feed_log10_variance),
                         repr(p20), repr(p50), repr(p80)))
        _write_csv(os.path.join(out_dir, "table3.csv"),
                   ("feed_log10_correlation_length", "feed_log10_variance",
                    "pomcp_vs_mpc_p20", "pomcp_vs_mpc_p50", "pomcp_vs_mpc_p80"), rows)
        fig10 = [r for r in rows if float(r[0]) == 2.0]
        if fig10:
            _write_csv(os.path.join(out_dir, "fig10.csv"),
                       ("feed_log10_correlation_length", "feed_log10_variance",
                        "pomcp_vs_mpc_p20", "pomcp_vs_mpc_p50", "pomcp_vs_mpc_p80"),
                       fig10)
    elif study == "measurements":
        rows = []
        for cfg, res in zip(cells, results):
            label = cfg.name.split("-")[1]
            mpc_med = percentile(list(res.totals("mpc").values()), 50)
            pomcp_med = percentile(list(res.totals("pomcp").values()), 50)
            p20, p50, p80 = _cell_medians(res)
            rows.append((label, cfg.measurement_n, repr(mpc_med), repr(pomcp_med),
                         repr(p20), repr(p50), repr(p80)))
        _write_csv(os.path.join(out_dir, "fig11.csv"),
                   ("accuracy", "n_measurements", "mpc_reward_p50",
                    "pomcp_reward_p50", "pomcp_vs_mpc_p20", "pomcp_vs_mpc_p50",
                    "pomcp_vs_mpc_p80"), rows)
    elif study == "action-grid":
        rows = []
        for cfg, res in zip(cells, results):
            p20, p50, p80 = _cell_medians(res)
            rows.append((repr(cfg.grid.t_step), repr(cfg.grid.f_step),
                         repr(cfg.error_log10_variance),
                         repr(p20), repr(p50), repr(p80)))
        _write_csv(os.path.join(out_dir, "table4.csv"),
                   ("t_step", "f_step", "error_log10_variance",
                    "pomcp_vs_mpc_p20", "pomcp_vs_mpc_p50", "pomcp_vs_mpc_p80"), rows)
    else:
        raise ValueError(f"unknown study {study!r}")


def run_sweep(study: str, out_dir, base: ScenarioConfig | None = None,
              cells: list[ScenarioConfig] | None = None) -> list[ScenarioResult]:
    """Run all cells of a study and emit its table/figure CSVs plus manifest."""
    import os
    base = base or ScenarioConfig()
    if cells is None:
        cells = build_cells(study, base)
    results = []
    for i, cell in enumerate(cells):
        log.info("study %s: cell %d/%d (%s)", study, i + 1, len(cells), cell.name)
        results.append(run_scenario(cell))
    os.makedirs(out_dir, exist_ok=True)
    emit_study_outputs(study, cells, results, out_dir)
    manifest = {"kind": "sweep", "study": study, "version": __version__,
                "cells": [c.to_dict() for c in cells]}
    with open(os.path.join(out_dir, "manifest.json"), "w") as fh:
        json.dump(manifest, fh, indent=1, sort_keys=True)
    return results


def replay(manifest_path, out_dir) -> None:
    """Re-run a manifest; outputs are bit-identical to the original run."""
    with open(manifest_path) as fh:
        manifest = json.load(fh)
    if manifest["kind"] == "scenario":
        cfg = ScenarioConfig.from_dict(manifest["config"])
        run_scenario(cfg, out_dir=out_dir)
    elif manifest["kind"] == "sweep":
        cells = [ScenarioConfig.from_dict(d) for d in manifest["cells"]]
        run_sweep(manifest["study"], out_dir, cells=cells)
    else:
        raise ValueError(f"unknown manifest kind {manifest['kind']!r}")
