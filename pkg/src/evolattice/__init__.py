"""Best-response-to-best-neighbor dynamics on lattices.

Players sit on a d-dimensional torus, carry one of two strategies, and at
rate-1 event times compare the best payoff seen among neighbors of each
strategy, switching when their own camp looks worse (fair coin on ties).
The package simulates that process exactly and reproducibly, integrates
its mean-field counterpart, grows the associated growth automaton, and
checks one-dimensional interface behavior with exact golden-ratio
arithmetic.  `evolattice.cli` exposes the experiment families as
subcommands.
"""

from .bootstrap import bootstrap_limit, coupled_initials
from .events import EventSource, ScriptedEventSource
from .harness import ExperimentConfig, estimate, phase_sweep, wilson
from .interface1d import (absorbing_chain_verify, drift_certificate,
                          fixation_case, forbidden_transition_check,
                          interval_survival, pattern_report, run_hitting)
from .lattice import (Configuration, Trajectory, run,
                      sample_product_measure, step, uniform_configuration)
from .meanfield import classify_outcome, fixed_points, solve
from .payoffs import (DerivedParams, NeighborhoodSpec, PayoffMatrix,
                      classify_game, derive_params, flip_rate,
                      parse_payoffs, region_predicates)
from .quadratic import PHI, Surd5, phi_power

__version__ = "0.1.0"

__all__ = [
    "Configuration",
    "DerivedParams",
    "EventSource",
    "ExperimentConfig",
    "NeighborhoodSpec",
    "PHI",
    "PayoffMatrix",
    "ScriptedEventSource",
    "Surd5",
    "Trajectory",
    "absorbing_chain_verify",
    "bootstrap_limit",
    "classify_game",
    "classify_outcome",
    "coupled_initials",
    "derive_params",
    "drift_certificate",
    "estimate",
    "fixation_case",
    "fixed_points",
    "flip_rate",
    "forbidden_transition_check",
    "interval_survival",
    "parse_payoffs",
    "pattern_report",
    "phase_sweep",
    "phi_power",
    "region_predicates",
    "run",
    "run_hitting",
    "sample_product_measure",
    "solve",
    "step",
    "uniform_configuration",
    "wilson",
]
