"""Simulation and exact analysis of the (mu+1) EA with restricted tournament
selection on TwoMax."""

__version__ = "0.1.0"

from .core import (DistanceKind, FitnessKind, Genome, RandomSource, distance, evaluate, mutate,
                   ones, random_genome)
from .engine import (AlgorithmConfig, AlgorithmKind, ConfigError, GenerationEvents,
                     InvariantViolation, Population, RunResult, SelectionPolicy, Status,
                     StopCriteria, branch_stats, closest_in_tournament, init_population, run,
                     select_tournament, step_det_crowding, step_plain, step_rts)
from .experiments import (W_EQUALS_MU, BudgetFormula, CellResult, ExperimentSpec, Protocol,
                          Report, budget, derive_seed, run_cell, run_grid)
from .oracle import (OracleLimitError, OracleLimits, build_model, expected_absorption_time,
                     init_split_lower_bound, init_split_probability_exact, initial_distribution,
                     success_probability_within, transition_distribution)

__all__ = [
    "DistanceKind",
    "FitnessKind",
    "Genome",
    "RandomSource",
    "distance",
    "evaluate",
    "mutate",
    "ones",
    "random_genome",
    "AlgorithmConfig",
    "AlgorithmKind",
    "ConfigError",
    "GenerationEvents",
    "InvariantViolation",
    "Population",
    "RunResult",
    "SelectionPolicy",
    "Status",
    "StopCriteria",
    "branch_stats",
    "closest_in_tournament",
    "init_population",
    "run",
    "select_tournament",
    "step_det_crowding",
    "step_plain",
    "step_rts",
    "W_EQUALS_MU",
    "BudgetFormula",
    "CellResult",
    "ExperimentSpec",
    "Protocol",
    "Report",
    "budget",
    "derive_seed",
    "run_cell",
    "run_grid",
    "OracleLimitError",
    "OracleLimits",
    "build_model",
    "expected_absorption_time",
    "init_split_lower_bound",
    "init_split_probability_exact",
    "initial_distribution",
    "success_probability_within",
    "transition_distribution",
]
