"""The agent's stochastic world model, updated by sequential GP refitting.

A belief holds a GP posterior over the feedstock composition time series and
GP posteriors over the grade/recovery error functions (residuals of the
kinetic model). It never reads the ground truth directly, only observations.
Snapshots are immutable; updating returns a new snapshot.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.interpolate import RegularGridInterpolator

from .environment import FlotationAction, FlotationObservation
from .gp import (GPHyperparams, GPPosterior, fit_gp, sample_se_lattice,
                 se_axis_factors)
from .ground_truth import (ErrorSurface, ErrorSurfaceConfig, FeedstockSignalConfig,
                           GroundTruth)
from .kinetics import EconomicParams, KineticParams, grade_kinetic, opex, recovery_kinetic

DEFAULT_BELIEF_NOISE = 1e-4  # pp^2; near-exact observations, numerically stable


@dataclass(frozen=True)
class BeliefHyperparams:
    """The three GP priors of the belief."""

    feedstock: GPHyperparams
    grade_error: GPHyperparams
    recovery_error: GPHyperparams

    def __post_init__(self) -> None:
        if self.feedstock.input_dim != 1:
            raise ValueError("feedstock GP must be over the single timestep input")
        for name in ("grade_error", "recovery_error"):
            if getattr(self, name).input_dim != 3:
                raise ValueError(f"{name} GP must be over (c, t, f)")

    @classmethod
    def from_configs(cls, feed_cfg: FeedstockSignalConfig,
                     error_cfg: ErrorSurfaceConfig,
                     noise_variance: float = DEFAULT_BELIEF_NOISE) -> "BeliefHyperparams":
        """Well-specified prior: belief hyperparameters match the synthesis ones."""
        feed = GPHyperparams(
            variance=feed_cfg.variance,
            length_scales=(feed_cfg.correlation_length,),
            noise_variance=noise_variance,
            mean=feed_cfg.mean_composition)
        err = GPHyperparams(
            variance=error_cfg.variance,
            length_scales=error_cfg.length_scales,
            noise_variance=noise_variance,
            mean=0.0)
        return cls(feedstock=feed, grade_error=err, recovery_error=err)


class BeliefState:
    """Immutable belief snapshot: observation log plus fitted posteriors."""

    def __init__(self, hyper: BeliefHyperparams, kp: KineticParams,
                 comp_times=(), comp_values=(), resid_inputs=(),
                 resid_grade=(), resid_recovery=()):
        self.hyper = hyper
        self.kp = kp
        self.comp_times = tuple(comp_times)
        self.comp_values = tuple(comp_values)
        self.resid_inputs = tuple(tuple(p) for p in resid_inputs)
        self.resid_grade = tuple(resid_grade)
        self.resid_recovery = tuple(resid_recovery)
        self.feedstock_gp = fit_gp(
            hyper.feedstock,
            np.asarray(self.comp_times, dtype=float).reshape(-1, 1),
            np.asarray(self.comp_values, dtype=float))
        X = np.asarray(self.resid_inputs, dtype=float).reshape(-1, 3)
        self.grade_error_gp = fit_gp(hyper.grade_error, X,
                                     np.asarray(self.resid_grade, dtype=float))
        self.recovery_error_gp = fit_gp(hyper.recovery_error, X,
                                        np.asarray(self.resid_recovery, dtype=float))

    @classmethod
    def initial(cls, hyper: BeliefHyperparams, kp: KineticParams) -> "BeliefState":
        """Zero-data belief: feedstock prior at its mean, error priors at zero."""
        return cls(hyper, kp)

    @property
    def n_observations(self) -> int:
        return len(self.resid_inputs)

    def updated(self, T: int, action: FlotationAction, obs: FlotationObservation,
                c_used: float) -> "BeliefState":
        """Refit with one new batch observation.

        `c_used` is the composition the agent attributes to the batch: the
        measured value when available, the feedstock posterior mean otherwise.
        Residuals are taken against the kinetic model at that composition.
        """
        resid_g = obs.grade - grade_kinetic(self.kp, c_used, action.t, action.f)
        resid_r = obs.recovery - recovery_kinetic(self.kp, action.t, action.f)
        comp_times = self.comp_times
        comp_values = self.comp_values
        if obs.composition is not None:
            comp_times = comp_times + (float(T),)
            comp_values = comp_values + (float(obs.composition),)
        return BeliefState(
            self.hyper, self.kp,
            comp_times=comp_times, comp_values=comp_values,
            resid_inputs=self.resid_inputs + ((float(c_used), float(action.t),
                                               float(action.f)),),
            resid_grade=self.resid_grade + (float(resid_g),),
            resid_recovery=self.resid_recovery + (float(resid_r),))

    # -- prediction -------------------------------------------------------

    def composition_mean(self, T) -> float:
        mean, _ = self.feedstock_gp.predict(float(T))
        return mean

    def composition_path(self, times) -> np.ndarray:
        """Posterior mean composition at an array of timesteps."""
        mean, _ = self.feedstock_gp.predict(np.asarray(times, dtype=float))
        return mean

    def predict_outputs(self, c: float, t: float, f: float):
        """Posterior (mean, variance) of true grade and recovery at (c, t, f)."""
        x = np.array([c, t, f], dtype=float)
        dg, vg = self.grade_error_gp.predict(x)
        dr, vr = self.recovery_error_gp.predict(x)
        g = grade_kinetic(self.kp, c, t, f) + dg
        r = recovery_kinetic(self.kp, t, f) + dr
        return (g, vg), (r, vr)

    def predict_reward(self, c: float, action: FlotationAction,
                       econ: EconomicParams):
        """Reward at posterior-mean outputs, with first-order variance.

        Variance combines the grade/recovery posterior variances through the
        revenue term's partial derivatives at the posterior means.
        """
        (g, vg), (r, vr) = self.predict_outputs(c, action.t, action.f)
        g = float(np.clip(g, 0.0, self.kp.c_max))
        r = float(np.clip(r, 0.0, 100.0))
        k0 = econ.price_coeff * econ.production_coeff / (1e4 * econ.timesteps_per_year)
        mean = k0 * g * r - opex(econ, action.t, action.f) \
            - econ.measurement_cost * action.measure
        var = (k0 * r) ** 2 * vg + (k0 * g) ** 2 * vr
        return mean, var

    # -- world sampling for planning --------------------------------------

    def sample_worlds(self, c_nodes, t_nodes, f_nodes, horizon: int,
                      rng: np.random.Generator, size: int,
                      cache: dict | None = None) -> list[GroundTruth]:
        """Joint posterior draws packaged like ground truths.

        Composition series are exact joint posterior draws. Error surfaces
        are drawn on the lattice by pathwise conditioning: a lattice prior
        draw is corrected with the training residuals, interpolating the
        prior draw at off-lattice training inputs. A caller-owned `cache`
        (valid for one lattice) reuses the per-axis factorizations across
        repeated sampling from evolving beliefs.
        """
        times = np.arange(horizon, dtype=float).reshape(-1, 1)
        comp = self.feedstock_gp.sample(times, rng, size=size)
        comp = np.clip(comp, 1.0, self.kp.c_max)
        grade_vals = self._sample_error_surfaces(
            self.grade_error_gp, c_nodes, t_nodes, f_nodes, rng, size, cache)
        rec_vals = self._sample_error_surfaces(
            self.recovery_error_gp, c_nodes, t_nodes, f_nodes, rng, size, cache)
        worlds = []
        for i in range(size):
            worlds.append(GroundTruth(
                composition_series=comp[i],
                grade_error=ErrorSurface(c_nodes, t_nodes, f_nodes, grade_vals[i]),
                recovery_error=ErrorSurface(c_nodes, t_nodes, f_nodes, rec_vals[i]),
                seed=None))
        return worlds

    def sample_world(self, c_nodes, t_nodes, f_nodes, horizon: int,
                     rng: np.random.Generator) -> GroundTruth:
        return self.sample_worlds(c_nodes, t_nodes, f_nodes, horizon, rng, 1)[0]

    def _sample_error_surfaces(self, gp: GPPosterior, c_nodes, t_nodes, f_nodes,
                               rng: np.random.Generator, size: int,
                               cache: dict | None = None) -> np.ndarray:
        hyper = gp.hyper
        axes = [np.asarray(c_nodes, float), np.asarray(t_nodes, float),
                np.asarray(f_nodes, float)]
        key = hyper.length_scales
        factors = cache.get(key) if cache is not None else None
        if factors is None:
            factors = se_axis_factors(hyper.length_scales, axes)
            if cache is not None:
                cache[key] = factors
        prior = sample_se_lattice(hyper.variance, hyper.length_scales, axes,
                                  rng, mean=0.0, size=size, factors=factors)
        if gp.n_points == 0:
            return hyper.mean + prior
        # interpolate all prior draws at the training inputs in one pass
        interp = RegularGridInterpolator(
            tuple(axes), np.moveaxis(prior, 0, -1), method="linear",
            bounds_error=False, fill_value=None)
        X = gp.X
        Xq = np.column_stack([
            np.clip(X[:, 0], axes[0][0], axes[0][-1]),
            np.clip(X[:, 1], axes[1][0], axes[1][-1]),
            np.clip(X[:, 2], axes[2][0], axes[2][-1])])
        p_train = interp(Xq)                              # (n_train, size)
        eps = rng.standard_normal((gp.n_points, size)) * np.sqrt(hyper.noise_variance)
        resid = (gp.y - hyper.mean)[:, None] - p_train - eps
        weights = gp.gram_solve(resid)                    # (n_train, size)
        # separable kernel: the lattice/train cross-covariance is a product
        # of one 1-D kernel per axis, contracted without materializing it
        k1d = [np.exp(-0.5 * ((a[:, None] - X[:, d][None, :]) / hyper.length_scales[d]) ** 2)
               for d, a in enumerate(axes)]
        correction = hyper.variance * np.einsum(
            "ai,bi,ci,is->abcs", k1d[0], k1d[1], k1d[2], weights, optimize=True)
        return hyper.mean + prior + np.moveaxis(correction, -1, 0)

    # -- serialization -----------------------------------------------------

    def to_dict(self) -> dict:
        def hp(h: GPHyperparams) -> dict:
            return {"variance": h.variance, "length_scales": list(h.length_scales),
                    "noise_variance": h.noise_variance, "mean": h.mean}

        return {
            "hyperparams": {
                "feedstock": hp(self.hyper.feedstock),
                "grade_error": hp(self.hyper.grade_error),
                "recovery_error": hp(self.hyper.recovery_error),
            },
            "kinetics": {"k": self.kp.k, "c_max": self.kp.c_max},
            "composition_observations": [
                {"T": t, "composition": v}
                for t, v in zip(self.comp_times, self.comp_values)],
            "residual_observations": [
                {"c": p[0], "t": p[1], "f": p[2], "grade_residual": dg,
                 "recovery_residual": dr}
                for p, dg, dr in zip(self.resid_inputs, self.resid_grade,
                                     self.resid_recovery)],
        }
