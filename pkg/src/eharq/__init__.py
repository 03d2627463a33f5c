"""Optimal reception policies for ARQ links with an energy-harvesting receiver.

The package models the receiver as a finite constrained Markov decision
process: :mod:`eharq.model` defines states, actions and transition kernels
for three feedback protocols; :mod:`eharq.chain` evaluates policies exactly
through their induced Markov chains; :mod:`eharq.optimize` minimizes the
packet drop probability under a throughput floor with a Dinkelbach ratio
iteration over occupation-measure linear programs (solved by the built-in
simplex in :mod:`eharq.linalg`); :mod:`eharq.simulate` cross-checks the
analytics with a slot-level Monte Carlo simulator; :mod:`eharq.experiments`
and :mod:`eharq.cli` drive solves, simulations and CSV sweeps; and
:mod:`eharq.verify` bundles the validation suite behind ``eharq verify``.
"""

from eharq.chain import (
    MultipleRecurrentClasses,
    PerformancePoint,
    Policy,
    evaluate_policy,
    induced_kernel,
    stationary_distribution,
    validate_policy,
)
from eharq.config import ConfigError, ExperimentConfig, load_config
from eharq.linalg import (
    LinearProgram,
    LpOutcome,
    LpStatus,
    NumericalTrouble,
    SingularSystem,
    solve_linear_system,
    solve_lp,
)
from eharq.model import (
    ACTIONS,
    DELAYED_ACK,
    IDLE,
    SAMPLE,
    SAMPLE_ACK,
    Action,
    LinkParameters,
    Protocol,
    SystemState,
    bernoulli_harvest,
    enumerate_states,
    feasible_actions,
    rayleigh_unit_tail,
    success_probability,
    transition_distribution,
)
from eharq.optimize import (
    OccupationMeasure,
    SolveReport,
    SolveStatus,
    TooManyPolicies,
    brute_force_best_policy,
    dinkelbach_solve,
    myopic_policy,
    solve_no_feedback,
)
from eharq.presets import reference_link, tiny_link
from eharq.simulate import (
    ReplicatedEstimate,
    SimConfig,
    SimEstimate,
    estimate_with_ci,
    simulate,
    total_variation_distance,
)

__all__ = [
    "ACTIONS",
    "Action",
    "ConfigError",
    "DELAYED_ACK",
    "ExperimentConfig",
    "IDLE",
    "LinearProgram",
    "LinkParameters",
    "LpOutcome",
    "LpStatus",
    "MultipleRecurrentClasses",
    "NumericalTrouble",
    "OccupationMeasure",
    "PerformancePoint",
    "Policy",
    "Protocol",
    "ReplicatedEstimate",
    "SAMPLE",
    "SAMPLE_ACK",
    "SimConfig",
    "SimEstimate",
    "SingularSystem",
    "SolveReport",
    "SolveStatus",
    "SystemState",
    "TooManyPolicies",
    "bernoulli_harvest",
    "brute_force_best_policy",
    "dinkelbach_solve",
    "enumerate_states",
    "estimate_with_ci",
    "evaluate_policy",
    "feasible_actions",
    "induced_kernel",
    "load_config",
    "myopic_policy",
    "rayleigh_unit_tail",
    "reference_link",
    "simulate",
    "solve_linear_system",
    "solve_lp",
    "solve_no_feedback",
    "stationary_distribution",
    "success_probability",
    "tiny_link",
    "total_variation_distance",
    "transition_distribution",
    "validate_policy",
]
