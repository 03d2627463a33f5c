"""Policies, their induced Markov chains, and analytic performance numbers.

A stationary policy maps each state to a distribution over its feasible
actions.  Closing the MDP with a policy gives a finite Markov chain; when
that chain has a single recurrent class its stationary distribution is the
unique solution of the balance equations, and long-run rates (packet drops,
successful decodes, fresh packets) are stationary expectations of the
per-slot reward functions.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

import numpy as np

from eharq.linalg import SingularSystem, solve_linear_system
from eharq.model import (
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
    "MultipleRecurrentClasses",
    "Policy",
    "validate_policy",
    "induced_kernel",
    "stationary_distribution",
    "PerformancePoint",
    "evaluate_policy",
]

POLICY_SUM_TOL = 1e-12
STATIONARY_RESIDUAL_TOL = 1e-9
NEGATIVITY_TOL = 1e-10


class MultipleRecurrentClasses(ArithmeticError):
    """The policy's chain has no unique stationary distribution."""


@dataclass(frozen=True)
class Policy:
    """Stationary randomized policy: per-state action probabilities.

    ``table`` must give a distribution for every state of the instance it is
    used with; states where the policy is deterministic may map a single
    action to probability one.
    """

    table: Mapping[SystemState, Mapping[Action, float]]

    @classmethod
    def deterministic(cls, choice: Mapping[SystemState, Action]) -> "Policy":
        return cls({state: {action: 1.0} for state, action in choice.items()})

    def action_probabilities(self, state: SystemState) -> Mapping[Action, float]:
        return self.table[state]


def validate_policy(policy: Policy, params: LinkParameters, protocol: Protocol) -> None:
    """Raise ``ValueError`` unless ``policy`` is a complete, feasible policy."""
    states = enumerate_states(params)
    missing = [s for s in states if s not in policy.table]
    if missing:
        raise ValueError(f"policy lacks entries for {len(missing)} states, e.g. {missing[0]}")
    for state in states:
        probs = policy.table[state]
        allowed = set(feasible_actions(state, protocol, params))
        total = 0.0
        for action, p in probs.items():
            if action not in allowed:
                raise ValueError(f"policy plays infeasible action {action} in {state}")
            if p < 0.0:
                raise ValueError(f"negative probability {p} for {action} in {state}")
            total += p
        if abs(total - 1.0) > POLICY_SUM_TOL:
            raise ValueError(f"action probabilities in {state} sum to {total}, not 1")


def induced_kernel(
    policy: Policy, params: LinkParameters, protocol: Protocol
) -> np.ndarray:
    """Transition matrix of the chain the policy induces, in canonical state order."""
    validate_policy(policy, params, protocol)
    states = enumerate_states(params)
    index = {s: j for j, s in enumerate(states)}
    kernel = np.zeros((len(states), len(states)))
    for row, state in enumerate(states):
        for action, weight in policy.table[state].items():
            if weight == 0.0:
                continue
            for target, prob in transition_distribution(state, action, params):
                kernel[row, index[target]] += weight * prob
    return kernel


def stationary_distribution(kernel: np.ndarray) -> np.ndarray:
    """Stationary distribution of a row-stochastic matrix with one recurrent class.

    Solves the balance equations with one of them replaced by normalization.
    That system is non-singular exactly when the chain has a single recurrent
    class; a singular system, a clearly negative component, or a residual
    above ``STATIONARY_RESIDUAL_TOL`` raises :class:`MultipleRecurrentClasses`.
    """
    kernel = np.asarray(kernel, dtype=float)
    if kernel.ndim != 2 or kernel.shape[0] != kernel.shape[1]:
        raise ValueError(f"kernel must be square, got shape {kernel.shape}")
    n = kernel.shape[0]
    if np.abs(kernel.sum(axis=1) - 1.0).max() > 1e-9 or kernel.min() < 0.0:
        raise ValueError("kernel is not row-stochastic")
    system = kernel.T - np.eye(n)
    system[-1, :] = 1.0
    rhs = np.zeros(n)
    rhs[-1] = 1.0
    try:
        pi = solve_linear_system(system, rhs)
    except SingularSystem as exc:
        raise MultipleRecurrentClasses(
            "balance equations are singular; the chain has several recurrent classes"
        ) from exc
    if pi.min() < -NEGATIVITY_TOL:
        raise MultipleRecurrentClasses(f"stationary solve went negative: {pi.min()}")
    pi = np.clip(pi, 0.0, None)
    pi /= pi.sum()
    if np.abs(pi @ kernel - pi).max() > STATIONARY_RESIDUAL_TOL:
        raise MultipleRecurrentClasses("stationary residual above tolerance")
    return pi


@dataclass(frozen=True)
class PerformancePoint:
    """Long-run per-slot rates of a policy.

    ``drop_rate + throughput`` equals ``new_packet_rate`` (every started
    packet either eventually decodes or drops), and the packet drop
    probability is the drop rate per started packet.
    """

    pdp: float
    throughput: float
    new_packet_rate: float
    drop_rate: float

    @property
    def success_probability(self) -> float:
        return 1.0 - self.pdp


def evaluate_policy(
    policy: Policy, params: LinkParameters, protocol: Protocol
) -> PerformancePoint:
    """Exact stationary performance of ``policy`` via its induced chain."""
    kernel = induced_kernel(policy, params, protocol)
    pi = stationary_distribution(kernel)
    states = enumerate_states(params)
    drop = 0.0
    throughput = 0.0
    new_rate = 0.0
    for j, state in enumerate(states):
        new_rate += pi[j] * new_packet_indicator(state)
        for action, weight in policy.table[state].items():
            if weight == 0.0:
                continue
            drop += pi[j] * weight * expected_drop(state, action, params)
            throughput += pi[j] * weight * expected_success(state, action, params)
    # The attempt counter passes 0 at least once every max_attempts slots.
    assert new_rate > 0.0
    return PerformancePoint(
        pdp=drop / new_rate,
        throughput=throughput,
        new_packet_rate=new_rate,
        drop_rate=drop,
    )
