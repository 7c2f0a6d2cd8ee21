"""Optimization-under-uncertainty benchmark for a simulated batch flotation cell.

Synthesizes hidden ground truths (kinetic model plus stochastic error
surfaces and a stochastic feedstock signal), wraps them in a POMDP
environment, and compares PID, MPC and POMCP policies by an NPV-proxy
reward across uncertainty regimes.
"""

__version__ = "0.1.0"

from .belief import BeliefHyperparams, BeliefState
from .environment import (ActionGrid, EpisodeRecord, FlotationAction,
                          FlotationEnv, FlotationObservation, FlotationState,
                          MeasurementSchedule, Policy, run_episode)
from .gp import GPConditioningError, GPHyperparams, GPPosterior, fit_gp
from .ground_truth import (ErrorSurfaceConfig, FeedstockSignalConfig,
                           GroundTruth, gen_error_surface, gen_feedstock_signal,
                           synthesize_ground_truth, true_outputs)
from .kinetics import (EconomicParams, KineticParams, grade_kinetic, opex,
                       recovery_kinetic, reward)
from .policies import MpcConfig, MpcPolicy, PidConfig, PidPolicy, mpc_act
from .pomcp import PomcpConfig, PomcpPlanner, PomcpPolicy
from .experiments import (ScenarioConfig, ScenarioResult, SummaryStats,
                          percentile, relative_reward, replay, run_scenario,
                          run_sweep)

__all__ = [
    "__version__",
    "ActionGrid", "BeliefHyperparams", "BeliefState", "EconomicParams",
    "EpisodeRecord", "ErrorSurfaceConfig", "FeedstockSignalConfig",
    "FlotationAction", "FlotationEnv", "FlotationObservation", "FlotationState",
    "GPConditioningError", "GPHyperparams", "GPPosterior", "GroundTruth",
    "KineticParams", "MeasurementSchedule", "MpcConfig", "MpcPolicy",
    "PidConfig", "PidPolicy", "Policy", "PomcpConfig", "PomcpPlanner",
    "PomcpPolicy", "ScenarioConfig", "ScenarioResult", "SummaryStats",
    "fit_gp", "gen_error_surface", "gen_feedstock_signal", "grade_kinetic",
    "mpc_act", "opex", "percentile", "recovery_kinetic", "relative_reward",
    "replay", "reward", "run_episode", "run_scenario", "run_sweep",
    "synthesize_ground_truth", "true_outputs",
]
