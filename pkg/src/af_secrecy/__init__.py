"""Secrecy-rate resource allocation for amplify-and-forward relay OFDMA downlinks."""

from .channel import NetworkChannels, NoiseModel, TapChannel, build_network, generate_taps, taps_to_gains
from .dual import DualTrace, SolverParams, SolveReport
from .errors import InvalidAssignmentError, InvalidConfigurationError, RateDomainError
from .experiments import ExperimentConfig, ResultRow, monte_carlo_average, run_experiment
from .joint import assign_best, solve_joint
from .kkt import (DualPrices, InnerSolution, inner_max_closed_form, inner_max_joint, inner_max_oracle,
                  relay_power_fixed_source)
from .rates import (Assignment, PowerAllocation, PowerPair, SubcarrierGains, amplification_factor,
                    approx_secrecy_rate, exact_secrecy_rate, sum_secrecy_rate)
from .restricted import evaluate_non_opt_multi, random_assignment, solve_subopt1, solve_subopt2
from .single_link import evaluate_non_opt_single, solve_opt, solve_subopt_relay_only_single

__version__ = "0.1.0"

__all__ = [
    "Assignment", "DualPrices", "DualTrace", "ExperimentConfig", "InnerSolution", "InvalidAssignmentError",
    "InvalidConfigurationError", "NetworkChannels", "NoiseModel", "PowerAllocation", "PowerPair",
    "RateDomainError", "ResultRow", "SolveReport", "SolverParams", "SubcarrierGains", "TapChannel",
    "amplification_factor", "approx_secrecy_rate", "assign_best", "build_network", "evaluate_non_opt_multi",
    "evaluate_non_opt_single", "exact_secrecy_rate", "generate_taps", "inner_max_closed_form",
    "inner_max_joint", "inner_max_oracle", "monte_carlo_average", "random_assignment",
    "relay_power_fixed_source", "run_experiment", "solve_joint", "solve_opt", "solve_subopt1",
    "solve_subopt2", "solve_subopt_relay_only_single", "sum_secrecy_rate", "taps_to_gains",
]
