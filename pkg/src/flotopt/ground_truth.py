"""Synthetic "reality" for one episode: feedstock signal and error surfaces.

A ground truth is a frozen draw of (a) a feedstock composition time series
and (b) smooth stochastic error surfaces added to the kinetic grade and
recovery models. It is hidden from the policies, which only see it through
observations.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.interpolate import RegularGridInterpolator

from .gp import sample_se_lattice
from .kinetics import GRADE_CEILING, KineticParams, grade_kinetic, recovery_kinetic

COMPOSITION_NODES = 9       # composition-axis nodes of the synthesis lattice
COMPOSITION_SIGMAS = 4.0    # lattice half-span in feedstock standard deviations
MIN_COMPOSITION_HALF_SPAN = 0.5  # pp, keeps the lattice non-degenerate

# independent RNG stream tags, combined with the episode seed
_STREAM_FEEDSTOCK = 1
_STREAM_GRADE = 2
_STREAM_RECOVERY = 3


@dataclass(frozen=True)
class FeedstockSignalConfig:
    """Stationary GP parameterization of the feedstock composition signal.

    The signal has standard deviation amplitude * 10**(log10_variance / 2)
    in percentage points and correlation length 10**log10_correlation_length
    in timesteps, around a constant mean composition.
    """

    log10_variance: float = -3.0
    log10_correlation_length: float = 2.0
    mean_composition: float = 15.0
    amplitude: float = 5.0
    horizon: int = 100

    def __post_init__(self) -> None:
        if self.horizon < 1:
            raise ValueError(f"horizon must be >= 1, got {self.horizon}")
        if not 0.0 < self.mean_composition < GRADE_CEILING:
            raise ValueError(
                f"mean composition must lie in (0, {GRADE_CEILING}), "
                f"got {self.mean_composition}")
        if self.amplitude < 0:
            raise ValueError("amplitude must be non-negative")

    @property
    def variance(self) -> float:
        return self.amplitude ** 2 * 10.0 ** self.log10_variance

    @property
    def std(self) -> float:
        return self.amplitude * 10.0 ** (self.log10_variance / 2.0)

    @property
    def correlation_length(self) -> float:
        return 10.0 ** self.log10_correlation_length


@dataclass(frozen=True)
class ErrorSurfaceConfig:
    """GP parameterization of one grade or recovery error surface over (c, t, f).

    The surface has standard deviation amplitude * 10**(log10_variance / 2)
    in percentage points. Length scales control how far the surface can
    relocate the reward optimum: roughly a third of the actionable range.
    """

    log10_variance: float = -3.0
    length_scale_t: float = 2.5
    length_scale_f: float = 60.0
    length_scale_c: float = 50.0
    amplitude: float = 10.0

    def __post_init__(self) -> None:
        if min(self.length_scale_t, self.length_scale_f, self.length_scale_c) <= 0:
            raise ValueError("length scales must be positive")
        if self.amplitude < 0:
            raise ValueError("amplitude must be non-negative")

    @property
    def variance(self) -> float:
        return self.amplitude ** 2 * 10.0 ** self.log10_variance

    @property
    def std(self) -> float:
        return self.amplitude * 10.0 ** (self.log10_variance / 2.0)

    @property
    def length_scales(self) -> tuple[float, float, float]:
        return (self.length_scale_c, self.length_scale_t, self.length_scale_f)


class ErrorSurface:
    """Trilinear interpolation of error values stored on a (c, t, f) lattice.

    Queries are exact at lattice nodes. Composition queries are clamped into
    the lattice span (tail draws of the feedstock signal may exceed it);
    time/air-flow queries outside the lattice raise.
    """

    def __init__(self, c_nodes, t_nodes, f_nodes, values):
        axes = []
        vals = np.asarray(values, dtype=float)
        for d, nodes in enumerate((c_nodes, t_nodes, f_nodes)):
            nodes = np.asarray(nodes, dtype=float)
            if nodes.size == 1:
                # pad singleton axes so the interpolator stays 3-D
                nodes = np.array([nodes[0], nodes[0] + 1.0])
                vals = np.repeat(vals, 2, axis=d)
            axes.append(nodes)
        self.c_nodes, self.t_nodes, self.f_nodes = axes
        self.values = vals
        if self.values.shape != tuple(len(a) for a in axes):
            raise ValueError(
                f"values shape {self.values.shape} does not match lattice "
                f"{tuple(len(a) for a in axes)}")
        self._interp_cache = None

    @property
    def _interp(self) -> RegularGridInterpolator:
        # built on first query; planners read the lattice values directly
        if self._interp_cache is None:
            self._interp_cache = RegularGridInterpolator(
                (self.c_nodes, self.t_nodes, self.f_nodes), self.values,
                method="linear", bounds_error=True)
        return self._interp_cache

    def __call__(self, c, t, f):
        c = np.clip(np.asarray(c, dtype=float),
                    self.c_nodes[0], self.c_nodes[-1])
        t = np.asarray(t, dtype=float)
        f = np.asarray(f, dtype=float)
        eps = 1e-9
        if np.any(t < self.t_nodes[0] - eps) or np.any(t > self.t_nodes[-1] + eps):
            raise ValueError(f"flotation time {t} outside surface lattice "
                             f"[{self.t_nodes[0]}, {self.t_nodes[-1]}]")
        if np.any(f < self.f_nodes[0] - eps) or np.any(f > self.f_nodes[-1] + eps):
            raise ValueError(f"air flow {f} outside surface lattice "
                             f"[{self.f_nodes[0]}, {self.f_nodes[-1]}]")
        t = np.clip(t, self.t_nodes[0], self.t_nodes[-1])
        f = np.clip(f, self.f_nodes[0], self.f_nodes[-1])
        c, t, f = np.broadcast_arrays(c, t, f)
        scalar = c.ndim == 0
        pts = np.stack([np.atleast_1d(c), np.atleast_1d(t), np.atleast_1d(f)], axis=-1)
        out = self._interp(pts)
        return float(out[0]) if scalar else out

    def to_dict(self) -> dict:
        return {
            "c_nodes": self.c_nodes.tolist(),
            "t_nodes": self.t_nodes.tolist(),
            "f_nodes": self.f_nodes.tolist(),
            "values": self.values.ravel().tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ErrorSurface":
        shape = (len(d["c_nodes"]), len(d["t_nodes"]), len(d["f_nodes"]))
        values = np.asarray(d["values"], dtype=float).reshape(shape)
        return cls(d["c_nodes"], d["t_nodes"], d["f_nodes"], values)


@dataclass(frozen=True)
class GroundTruth:
    """Frozen episode reality: composition series plus error surfaces."""

    composition_series: np.ndarray
    grade_error: ErrorSurface
    recovery_error: ErrorSurface
    seed: int | None = None
    surface_seed: int | None = None

    @property
    def horizon(self) -> int:
        return len(self.composition_series)

    def to_dict(self) -> dict:
        return {
            "seed": self.seed,
            "surface_seed": self.surface_seed,
            "composition_series": self.composition_series.tolist(),
            "grade_error": self.grade_error.to_dict(),
            "recovery_error": self.recovery_error.to_dict(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "GroundTruth":
        return cls(
            composition_series=np.asarray(d["composition_series"], dtype=float),
            grade_error=ErrorSurface.from_dict(d["grade_error"]),
            recovery_error=ErrorSurface.from_dict(d["recovery_error"]),
            seed=d.get("seed"),
            surface_seed=d.get("surface_seed"),
        )


def gen_feedstock_signal(cfg: FeedstockSignalConfig, rng: np.random.Generator,
                         c_max: float = GRADE_CEILING) -> np.ndarray:
    """GP draw of the composition time series, clamped to [1, c_max]."""
    steps = np.arange(cfg.horizon, dtype=float)
    draw = sample_se_lattice(cfg.variance, [cfg.correlation_length], [steps],
                             rng, mean=cfg.mean_composition)
    return np.clip(draw, 1.0, c_max)


def composition_lattice(cfg: FeedstockSignalConfig,
                        c_max: float = GRADE_CEILING,
                        n_nodes: int = COMPOSITION_NODES) -> np.ndarray:
    """Composition-axis nodes covering the feedstock range (mean +- 4 sd)."""
    half = max(COMPOSITION_SIGMAS * cfg.std, MIN_COMPOSITION_HALF_SPAN)
    lo = max(1.0, cfg.mean_composition - half)
    hi = min(c_max, cfg.mean_composition + half)
    return np.linspace(lo, hi, n_nodes)


def gen_error_surface(cfg: ErrorSurfaceConfig, c_nodes, t_nodes, f_nodes,
                      rng: np.random.Generator) -> ErrorSurface:
    """GP draw of an error surface on the given lattice."""
    values = sample_se_lattice(cfg.variance, cfg.length_scales,
                               [c_nodes, t_nodes, f_nodes], rng)
    return ErrorSurface(c_nodes, t_nodes, f_nodes, values)


def synthesize_ground_truth(feed_cfg: FeedstockSignalConfig,
                            error_cfg: ErrorSurfaceConfig,
                            t_nodes, f_nodes, seed: int,
                            surface_seed: int | None = None,
                            c_max: float = GRADE_CEILING) -> GroundTruth:
    """Draw one episode reality, fully determined by (configs, seeds).

    `surface_seed` lets experiments freeze one pair of error surfaces across
    replicates while the feedstock signal is resampled per `seed`.
    """
    if surface_seed is None:
        surface_seed = seed
    series = gen_feedstock_signal(
        feed_cfg, np.random.default_rng([_STREAM_FEEDSTOCK, seed]), c_max)
    c_nodes = composition_lattice(feed_cfg, c_max)
    grade_err = gen_error_surface(
        error_cfg, c_nodes, t_nodes, f_nodes,
        np.random.default_rng([_STREAM_GRADE, surface_seed]))
    recovery_err = gen_error_surface(
        error_cfg, c_nodes, t_nodes, f_nodes,
        np.random.default_rng([_STREAM_RECOVERY, surface_seed]))
    return GroundTruth(series, grade_err, recovery_err, seed, surface_seed)


def true_outputs(gt: GroundTruth, kp: KineticParams, c, t, f):
    """True (grade, recovery) in percent: kinetic model plus surface error,
    clamped to physical ranges."""
    g = grade_kinetic(kp, c, t, f) + gt.grade_error(c, t, f)
    r = recovery_kinetic(kp, t, f) + gt.recovery_error(c, t, f)
    g = np.clip(g, 0.0, kp.c_max)
    r = np.clip(r, 0.0, 100.0)
    if np.ndim(g) == 0:
        return float(g), float(r)
    return g, r
