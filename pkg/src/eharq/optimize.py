"""Optimal reception policies via fractional programming over occupation measures.

The long-run packet drop probability is a ratio of two stationary rates
(drops per slot over fresh packets per slot), so minimizing it under a
throughput floor is a linear-fractional program over occupation measures
x(state, action).  Dinkelbach's method reduces it to a short sequence of
ordinary LPs: for a trial ratio q, minimize drop_rate - q * packet_rate
over the same polytope; the optimum is >= 0 exactly when q is at most the
optimal ratio, and setting q to the ratio achieved by the LP solution
strictly decreases it otherwise.  Feasibility of the polytope does not
depend on q, so infeasibility surfaces at the first iteration.
"""

from __future__ import annotations

import itertools
import math
from collections import defaultdict
from dataclasses import dataclass
from enum import Enum
from typing import NamedTuple

import numpy as np

from eharq.chain import (
    MultipleRecurrentClasses,
    PerformancePoint,
    Policy,
    evaluate_policy,
)
from eharq.linalg import LinearProgram, LpStatus, NumericalTrouble, solve_lp
from eharq.model import (
    IDLE,
    Action,
    LinkParameters,
    Protocol,
    SystemState,
    enumerate_states,
    expected_drop,
    expected_success,
    feasible_actions,
    new_packet_indicator,
    transition_distribution,
)

__all__ = [
    "TooManyPolicies",
    "SolveStatus",
    "SolveReport",
    "OccupationMeasure",
    "UnconstrainedLimits",
    "closed_forms_unconstrained",
    "myopic_policy",
    "solve_no_feedback",
    "feasible_pairs",
    "build_weighted_lp",
    "occupation_to_policy",
    "dinkelbach_solve",
    "brute_force_best_policy",
]

DEFAULT_MAX_ITERATIONS = 20
DEFAULT_CONVERGENCE_GAP = 1e-6
# States whose total occupation falls below this are never visited; give
# them the idle action so serialized policies are deterministic.
ZERO_MASS_TOL = 1e-12
POLICY_ENUMERATION_LIMIT = 100_000


class TooManyPolicies(ValueError):
    """The deterministic policy space is too large to enumerate."""


class SolveStatus(Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    ITERATION_LIMIT = "iteration-limit"


@dataclass(frozen=True)
class OccupationMeasure:
    """Stationary state-action frequencies; keys cover every feasible pair."""

    weights: dict[tuple[SystemState, Action], float]

    def total(self) -> float:
        return sum(self.weights.values())


@dataclass(frozen=True)
class SolveReport:
    """Outcome of a policy optimization.

    ``q_trace`` lists the Dinkelbach ratio used for each LP actually solved
    (empty for the closed no-feedback route and for brute force).
    ``iterations`` counts LP solves, or policies examined for brute force.
    ``converged`` is False when the iteration budget ran out or the problem
    was infeasible.
    """

    status: SolveStatus
    policy: Policy | None
    pdp: float
    throughput: float
    q_trace: tuple[float, ...]
    iterations: int
    converged: bool
    occupation: OccupationMeasure | None = None
    multichain_skipped: int = 0


class UnconstrainedLimits(NamedTuple):
    """Performance of myopic reception when reception itself costs nothing."""

    pdp_no_feedback: float
    pdp_non_adaptive: float
    throughput_no_feedback: float
    throughput_non_adaptive: float


def closed_forms_unconstrained(max_attempts: int, success_prob: float) -> UnconstrainedLimits:
    """Zero-cost renewal limits: sample every attempt, drop only on K misses.

    Without feedback every packet takes all ``max_attempts`` slots, so fresh
    packets arrive at rate 1/K; with immediate ACKs a success restarts the
    cycle and the per-slot success rate is the decode probability itself.
    """
    if max_attempts < 1:
        raise ValueError("max_attempts must be positive")
    if not 0.0 <= success_prob <= 1.0:
        raise ValueError("success_prob must lie in [0, 1]")
    miss_all = (1.0 - success_prob) ** max_attempts
    return UnconstrainedLimits(
        pdp_no_feedback=miss_all,
        pdp_non_adaptive=miss_all,
        throughput_no_feedback=(1.0 - miss_all) / max_attempts,
        throughput_non_adaptive=success_prob,
    )


def myopic_policy(protocol: Protocol, params: LinkParameters) -> Policy:
    """Spend stored energy as soon as it covers an active action.

    In every state this picks the most aggressive feasible action: sample
    (with an immediate ACK when the protocol and budget allow it), flush a
    pending ACK, otherwise idle.  Under the canonical action order that is
    simply the last feasible action.
    """
    choice = {}
    for state in enumerate_states(params):
        choice[state] = feasible_actions(state, protocol, params)[-1]
    return Policy.deterministic(choice)


def solve_no_feedback(params: LinkParameters, t_th: float) -> SolveReport:
    """Exact solution for the feedback-free protocol.

    Drops and successes are determined per attempt by sampling alone, with
    no effect on the transmitter, so spending energy as soon as it is
    available dominates every other schedule: it maximizes the stationary
    sampling frequency and both objectives are monotone in it.  The myopic
    policy is therefore optimal whenever the instance is feasible at all.
    """
    if t_th < 0.0:
        raise ValueError("throughput floor must be non-negative")
    policy = myopic_policy(Protocol.NO_FEEDBACK, params)
    point = evaluate_policy(policy, params, Protocol.NO_FEEDBACK)
    feasible = point.throughput >= t_th
    return SolveReport(
        status=SolveStatus.OPTIMAL if feasible else SolveStatus.INFEASIBLE,
        policy=policy,
        pdp=point.pdp,
        throughput=point.throughput,
        q_trace=(),
        iterations=0,
        converged=feasible,
    )


def feasible_pairs(
    params: LinkParameters, protocol: Protocol
) -> tuple[tuple[SystemState, Action], ...]:
    """All (state, feasible action) pairs, states and actions in canonical order."""
    return tuple(
        (state, action)
        for state in enumerate_states(params)
        for action in feasible_actions(state, protocol, params)
    )


def build_weighted_lp(
    q: float, t_th: float, params: LinkParameters, protocol: Protocol
) -> LinearProgram:
    """The Dinkelbach subproblem at ratio ``q`` as an explicit LP.

    Variables are occupation-measure entries over the feasible pairs.  Rows:
    one balance equation per state (outflow minus inflow), one normalization
    row, and one inequality encoding the throughput floor as
    ``-success_rate <= -t_th``.  Bounds keep every entry in [0, 1].
    """
    pairs = feasible_pairs(params, protocol)
    states = enumerate_states(params)
    index = {state: j for j, state in enumerate(states)}
    n_states, n_vars = len(states), len(pairs)
    objective = np.empty(n_vars)
    eq_matrix = np.zeros((n_states + 1, n_vars))
    success_row = np.zeros(n_vars)
    for col, (state, action) in enumerate(pairs):
        objective[col] = expected_drop(state, action, params) - q * new_packet_indicator(state)
        eq_matrix[index[state], col] += 1.0
        for target, prob in transition_distribution(state, action, params):
            eq_matrix[index[target], col] -= prob
        eq_matrix[n_states, col] = 1.0
        success_row[col] = expected_success(state, action, params)
    eq_rhs = np.zeros(n_states + 1)
    eq_rhs[n_states] = 1.0
    return LinearProgram(
        objective=objective,
        eq_matrix=eq_matrix,
        eq_rhs=eq_rhs,
        ub_matrix=-success_row[np.newaxis, :],
        ub_rhs=[-t_th],
        lower=0.0,
        upper=1.0,
    )


def occupation_to_policy(measure: OccupationMeasure) -> Policy:
    """Condition the measure on its state marginals to get a policy.

    States carrying no mass are never visited under the measure; they get
    the idle action so the resulting policy is deterministic there.
    """
    by_state: dict[SystemState, dict[Action, float]] = defaultdict(dict)
    for (state, action), weight in measure.weights.items():
        by_state[state][action] = weight
    table = {}
    for state, weights in by_state.items():
        mass = sum(weights.values())
        if mass <= ZERO_MASS_TOL:
            table[state] = {IDLE: 1.0}
        else:
            table[state] = {a: w / mass for a, w in weights.items() if w > 0.0}
    return Policy(table)


def dinkelbach_solve(
    params: LinkParameters,
    protocol: Protocol,
    t_th: float,
    i_max: int = DEFAULT_MAX_ITERATIONS,
    delta: float = DEFAULT_CONVERGENCE_GAP,
) -> SolveReport:
    """Minimize the packet drop probability subject to a throughput floor.

    Runs Dinkelbach's iteration starting from ratio 1 (drop probabilities
    live in [0, 1]).  Each step solves :func:`build_weighted_lp`; once the
    weighted optimum reaches ``-delta`` the current measure is optimal to
    within ``delta`` and is returned as a policy.  The ratios in ``q_trace``
    decrease strictly until convergence.
    """
    if t_th < 0.0:
        raise ValueError("throughput floor must be non-negative")
    if i_max < 1:
        raise ValueError("iteration budget must be positive")
    if delta <= 0.0:
        raise ValueError("convergence gap must be positive")
    pairs = feasible_pairs(params, protocol)
    drop_vec = np.array([expected_drop(s, a, params) for s, a in pairs])
    packet_vec = np.array([new_packet_indicator(s) for s, _ in pairs])
    success_vec = np.array([expected_success(s, a, params) for s, a in pairs])

    q = 1.0
    trace: list[float] = []
    converged = False
    x = drop_rate = packet_rate = success_rate = None
    for _ in range(i_max):
        outcome = solve_lp(build_weighted_lp(q, t_th, params, protocol))
        if outcome.status is LpStatus.INFEASIBLE:
            # The polytope does not depend on q, so this is final.
            return SolveReport(
                status=SolveStatus.INFEASIBLE,
                policy=None,
                pdp=float("nan"),
                throughput=float("nan"),
                q_trace=(q,),
                iterations=len(trace) + 1,
                converged=False,
            )
        if outcome.status is not LpStatus.OPTIMAL:
            raise NumericalTrouble("weighted subproblem reported unbounded on a compact polytope")
        trace.append(q)
        x = outcome.x
        drop_rate = float(drop_vec @ x)
        packet_rate = float(packet_vec @ x)
        success_rate = float(success_vec @ x)
        if outcome.objective_value >= -delta:
            converged = True
            break
        q = drop_rate / packet_rate
    measure = OccupationMeasure(dict(zip(pairs, (float(v) for v in x))))
    return SolveReport(
        status=SolveStatus.OPTIMAL if converged else SolveStatus.ITERATION_LIMIT,
        policy=occupation_to_policy(measure),
        pdp=drop_rate / packet_rate,
        throughput=success_rate,
        q_trace=tuple(trace),
        iterations=len(trace),
        converged=converged,
        occupation=measure,
    )


def brute_force_best_policy(
    params: LinkParameters,
    protocol: Protocol,
    objective: str = "min-pdp",
    t_th: float = 0.0,
    policy_limit: int = POLICY_ENUMERATION_LIMIT,
) -> SolveReport:
    """Evaluate every deterministic stationary policy and keep the best.

    ``objective`` is ``"min-pdp"`` (subject to throughput >= t_th, checked
    with the LP feasibility slack) or ``"max-throughput"``.  Policies whose
    chain has several recurrent classes are skipped and counted in
    ``multichain_skipped``.  Ties keep the first policy in enumeration
    order, so results are deterministic.
    """
    if objective not in ("min-pdp", "max-throughput"):
        raise ValueError(f"unknown objective {objective!r}")
    states = enumerate_states(params)
    menus = [feasible_actions(state, protocol, params) for state in states]
    count = math.prod(len(menu) for menu in menus)
    if count > policy_limit:
        raise TooManyPolicies(f"{count} deterministic policies exceed the limit {policy_limit}")
    best_policy: Policy | None = None
    best_point: PerformancePoint | None = None
    skipped = 0
    for combo in itertools.product(*menus):
        policy = Policy.deterministic(dict(zip(states, combo)))
        try:
            point = evaluate_policy(policy, params, protocol)
        except MultipleRecurrentClasses:
            skipped += 1
            continue
        if objective == "min-pdp":
            if point.throughput < t_th - 1e-9:
                continue
            better = best_point is None or point.pdp < best_point.pdp
        else:
            better = best_point is None or point.throughput > best_point.throughput
        if better:
            best_policy, best_point = policy, point
    if best_point is None:
        return SolveReport(
            status=SolveStatus.INFEASIBLE,
            policy=None,
            pdp=float("nan"),
            throughput=float("nan"),
            q_trace=(),
            iterations=count,
            converged=False,
            multichain_skipped=skipped,
        )
    return SolveReport(
        status=SolveStatus.OPTIMAL,
        policy=best_policy,
        pdp=best_point.pdp,
        throughput=best_point.throughput,
        q_trace=(),
        iterations=count,
        converged=True,
        multichain_skipped=skipped,
    )
