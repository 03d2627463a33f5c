"""Receiver-side ARQ model: states, actions, rewards, transition kernel.

The link is slotted.  A transmitter sends each packet up to ``max_attempts``
times and moves on; the receiver decides, slot by slot, whether to spend
stored energy on sampling/decoding the channel output and whether to send
an ACK.  All energies are integer multiples of one quantum, so the battery
level is an integer and the whole system is a finite Markov decision
process on states ``(battery, attempt, decoded)``:

* ``battery``  -- stored quanta, ``0 .. battery_capacity``;
* ``attempt``  -- index of the current packet's transmission, ``0 .. K-1``;
* ``decoded``  -- 1 if the in-flight packet was already decoded but the
  ACK is still pending, else 0.

An action is a pair of bits ``(sample, feedback)``.  Which pairs a state
admits depends on the ARQ variant (:class:`Protocol`) and on the battery:
an action is only offered when the battery can cover its worst-case cost.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Callable, NamedTuple

__all__ = [
    "EnergyQuanta",
    "LinkParameters",
    "SystemState",
    "Action",
    "TransitionEntry",
    "Protocol",
    "IDLE",
    "DELAYED_ACK",
    "SAMPLE",
    "SAMPLE_ACK",
    "ACTIONS",
    "rayleigh_unit_tail",
    "success_probability",
    "battery_update",
    "bernoulli_harvest",
    "enumerate_states",
    "state_index",
    "feasible_actions",
    "expected_drop",
    "new_packet_indicator",
    "expected_success",
    "transition_distribution",
]

# Battery levels and per-action costs are counted in whole quanta.
EnergyQuanta = int

PROB_SUM_TOL = 1e-12


class Protocol(Enum):
    """ARQ variant; the value doubles as the CLI spelling."""

    NO_FEEDBACK = "wo"
    NON_ADAPTIVE = "na"
    ADAPTIVE = "adaptive"


@dataclass(frozen=True, order=True)
class Action:
    """Receiver decision bits for one slot."""

    sample: int
    feedback: int


IDLE = Action(0, 0)
DELAYED_ACK = Action(0, 1)
SAMPLE = Action(1, 0)
SAMPLE_ACK = Action(1, 1)
# Canonical order everywhere an action axis is enumerated.
ACTIONS = (IDLE, DELAYED_ACK, SAMPLE, SAMPLE_ACK)


@dataclass(frozen=True, order=True)
class SystemState:
    """One MDP state; ordering matches the canonical enumeration."""

    battery: EnergyQuanta
    attempt: int
    decoded: int


class TransitionEntry(NamedTuple):
    next_state: SystemState
    probability: float


def rayleigh_unit_tail(x: float) -> float:
    """P(channel power gain > x) for Rayleigh fading with unit mean gain."""
    return math.exp(-x)


def success_probability(
    rate: float, tx_power: float, tail: Callable[[float], float] = rayleigh_unit_tail
) -> float:
    """Per-attempt decode probability: chance the SNR supports the rate.

    A transmission at ``rate`` bits/symbol succeeds when the instantaneous
    channel power gain exceeds ``(2**rate - 1) / tx_power``; ``tail`` is the
    complementary CDF of the gain.
    """
    if rate <= 0.0:
        raise ValueError(f"rate must be positive, got {rate}")
    if tx_power <= 0.0:
        raise ValueError(f"tx_power must be positive, got {tx_power}")
    p = tail((2.0**rate - 1.0) / tx_power)
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"tail function returned a non-probability: {p}")
    return p


def battery_update(
    battery: EnergyQuanta,
    spent: EnergyQuanta,
    harvested: EnergyQuanta,
    capacity: EnergyQuanta,
) -> EnergyQuanta:
    """Next battery level: spend, then harvest, then clip at capacity."""
    if spent > battery:
        raise ValueError(f"cannot spend {spent} quanta from a battery holding {battery}")
    return min(battery - spent + harvested, capacity)


def bernoulli_harvest(
    rho: float, quantum: EnergyQuanta
) -> tuple[tuple[EnergyQuanta, ...], tuple[float, ...]]:
    """Two-point harvest distribution: ``quantum`` arrives w.p. rho, else nothing."""
    if not 0.0 <= rho <= 1.0:
        raise ValueError(f"rho must lie in [0, 1], got {rho}")
    return (0, quantum), (1.0 - rho, rho)


@dataclass(frozen=True)
class LinkParameters:
    """Static description of one link instance.

    ``eh_values``/``eh_probs`` give the i.i.d. per-slot harvest distribution.
    ``success_prob`` is the per-attempt decode probability; derive it with
    :func:`success_probability` when starting from a rate and tx power.
    """

    max_attempts: int
    battery_capacity: EnergyQuanta
    cost_sample: EnergyQuanta
    cost_decode: EnergyQuanta
    cost_feedback: EnergyQuanta
    eh_values: tuple[EnergyQuanta, ...]
    eh_probs: tuple[float, ...]
    success_prob: float

    def __post_init__(self) -> None:
        if self.max_attempts < 2:
            raise ValueError(f"max_attempts must be at least 2, got {self.max_attempts}")
        if self.battery_capacity < 1:
            raise ValueError("battery_capacity must be positive")
        for name in ("cost_sample", "cost_decode", "cost_feedback"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")
        # Sampling commits to decoding on success, so the battery must be able
        # to hold the sample+decode budget or the sample action never unlocks.
        if self.cost_sample + self.cost_decode > self.battery_capacity:
            raise ValueError("battery_capacity below cost_sample + cost_decode")
        if len(self.eh_values) != len(self.eh_probs) or not self.eh_values:
            raise ValueError("eh_values and eh_probs must be equal-length and non-empty")
        if any(v < 0 for v in self.eh_values):
            raise ValueError("harvest amounts must be non-negative")
        if len(set(self.eh_values)) != len(self.eh_values):
            raise ValueError("harvest amounts must be distinct")
        if any(p < 0.0 for p in self.eh_probs):
            raise ValueError("harvest probabilities must be non-negative")
        if abs(sum(self.eh_probs) - 1.0) > PROB_SUM_TOL:
            raise ValueError(f"harvest probabilities sum to {sum(self.eh_probs)}, not 1")
        if not 0.0 <= self.success_prob <= 1.0:
            raise ValueError(f"success_prob must lie in [0, 1], got {self.success_prob}")


def enumerate_states(params: LinkParameters) -> tuple[SystemState, ...]:
    """All states in canonical order: battery-major, then attempt, then decoded.

    The pair ``(attempt=0, decoded=1)`` is unreachable (a decoded flag never
    survives into a new packet's first slot) but is kept so the state count
    is exactly ``(capacity+1) * max_attempts * 2`` and indexing stays a pure
    arithmetic function of the components.
    """
    return tuple(
        SystemState(b, k, i)
        for b in range(params.battery_capacity + 1)
        for k in range(params.max_attempts)
        for i in (0, 1)
    )


def state_index(params: LinkParameters) -> dict[SystemState, int]:
    """Map each state to its position in :func:`enumerate_states`."""
    return {s: j for j, s in enumerate(enumerate_states(params))}


def feasible_actions(
    state: SystemState, protocol: Protocol, params: LinkParameters
) -> tuple[Action, ...]:
    """Actions available in ``state``, in canonical order.

    Idling is always allowed.  Sampling requires an undecoded packet and the
    sample+decode budget (decoding is committed on success, so the energy
    must be there up front).  The variants differ in how ACKs are tied in:

    * ``NO_FEEDBACK``: no ACKs ever, sampling alone.
    * ``NON_ADAPTIVE``: an ACK always rides on a successful decode, so the
      only active pair is sample-with-ack and it needs the full
      sample+decode+feedback budget.
    * ``ADAPTIVE``: sample with or without an immediate ACK; a decoded-but
      -unacknowledged packet may also be ACKed later on its own.
    """
    sample_budget = params.cost_sample + params.cost_decode
    full_budget = sample_budget + params.cost_feedback
    b, k, i = state.battery, state.attempt, state.decoded
    if protocol is Protocol.NO_FEEDBACK:
        if i == 0 and b >= sample_budget:
            return (IDLE, SAMPLE)
        return (IDLE,)
    if protocol is Protocol.NON_ADAPTIVE:
        if i == 0 and b >= full_budget:
            return (IDLE, SAMPLE_ACK)
        return (IDLE,)
    if protocol is Protocol.ADAPTIVE:
        if i == 0:
            if b >= full_budget:
                return (IDLE, SAMPLE, SAMPLE_ACK)
            if b >= sample_budget:
                return (IDLE, SAMPLE)
            return (IDLE,)
        # A delayed ACK concerns a packet already past its first attempt;
        # (attempt=0, decoded=1) is unreachable and only idles.
        if k > 0 and b >= params.cost_feedback:
            return (IDLE, DELAYED_ACK)
        return (IDLE,)
    raise ValueError(f"unknown protocol {protocol!r}")


def new_packet_indicator(state: SystemState) -> float:
    """1 on the first attempt of a packet, else 0; averages to the packet rate."""
    return 1.0 if state.attempt == 0 else 0.0


def expected_success(state: SystemState, action: Action, params: LinkParameters) -> float:
    """Expected successful decodes this slot (0 or the decode probability)."""
    if state.decoded == 0 and action.sample == 1:
        return params.success_prob
    return 0.0


def expected_drop(state: SystemState, action: Action, params: LinkParameters) -> float:
    """Probability the in-flight packet is lost for good this slot.

    A packet drops when its last attempt passes undecoded: certain if the
    receiver idles through it, and with the decode-failure probability if
    the receiver samples it.
    """
    if state.attempt != params.max_attempts - 1 or state.decoded == 1:
        return 0.0
    if action.sample == 1:
        return 1.0 - params.success_prob
    return 1.0


def transition_distribution(
    state: SystemState, action: Action, params: LinkParameters
) -> tuple[TransitionEntry, ...]:
    """One-step distribution over next states, merged and canonically sorted.

    Raises ``ValueError`` if ``action`` is not executable in ``state``
    (wrong decoded flag, first-attempt delayed ACK, or insufficient battery);
    protocol membership is the caller's concern.  Zero-probability outcomes
    are dropped.
    """
    b, k, i = state.battery, state.attempt, state.decoded
    last = k == params.max_attempts - 1
    next_k = (k + 1) % params.max_attempts
    pc = params.success_prob
    acc: dict[SystemState, float] = {}

    def require_budget(worst_case: EnergyQuanta) -> None:
        if b < worst_case:
            raise ValueError(f"action {action} needs {worst_case} quanta but {state} holds {b}")

    def put(prob: float, spent: EnergyQuanta, nk: int, ni: int) -> None:
        if prob == 0.0:
            return
        for amount, p in zip(params.eh_values, params.eh_probs):
            if p == 0.0:
                continue
            nxt = SystemState(battery_update(b, spent, amount, params.battery_capacity), nk, ni)
            acc[nxt] = acc.get(nxt, 0.0) + prob * p

    if action == IDLE:
        # The decoded flag survives idling unless the retry cycle ends.
        put(1.0, 0, next_k, 0 if last else i)
    elif action == SAMPLE:
        if i != 0:
            raise ValueError("cannot sample an already-decoded packet")
        require_budget(params.cost_sample + params.cost_decode)
        # Decode energy is spent only when the attempt succeeds.
        put(1.0 - pc, params.cost_sample, next_k, 0)
        put(pc, params.cost_sample + params.cost_decode, next_k, 0 if last else 1)
    elif action == SAMPLE_ACK:
        if i != 0:
            raise ValueError("cannot sample an already-decoded packet")
        require_budget(params.cost_sample + params.cost_decode + params.cost_feedback)
        put(1.0 - pc, params.cost_sample, next_k, 0)
        # Success is ACKed immediately, so the transmitter starts a new packet.
        put(pc, params.cost_sample + params.cost_decode + params.cost_feedback, 0, 0)
    elif action == DELAYED_ACK:
        if i != 1:
            raise ValueError("delayed ACK requires a decoded packet")
        if k == 0:
            raise ValueError("delayed ACK cannot occur on a first attempt")
        require_budget(params.cost_feedback)
        put(1.0, params.cost_feedback, 0, 0)
    else:
        raise ValueError(f"unknown action {action!r}")
    return tuple(TransitionEntry(s, p) for s, p in sorted(acc.items()))
