"""Canonical parameter sets shared by experiments, verification and tests."""

from __future__ import annotations

from eharq.model import LinkParameters, bernoulli_harvest, success_probability

__all__ = ["REFERENCE_RATE", "REFERENCE_TX_POWER", "reference_link", "tiny_link"]

# The reference channel: unit-mean Rayleigh fading, unit transmit power,
# half a bit per symbol.  Decode probability exp(1 - sqrt(2)) ~ 0.6609.
REFERENCE_RATE = 0.5
REFERENCE_TX_POWER = 1.0


def reference_link(
    rho: float, *, cost_feedback: int = 1, max_attempts: int = 4
) -> LinkParameters:
    """The link instance the experiments study.

    Energy arrives in bursts of six quanta with probability ``rho`` per slot;
    the battery holds fifteen; sampling and decoding cost three quanta each
    and an ACK costs ``cost_feedback`` (one by default).
    """
    values, probs = bernoulli_harvest(rho, 6)
    return LinkParameters(
        max_attempts=max_attempts,
        battery_capacity=15,
        cost_sample=3,
        cost_decode=3,
        cost_feedback=cost_feedback,
        eh_values=values,
        eh_probs=probs,
        success_prob=success_probability(REFERENCE_RATE, REFERENCE_TX_POWER),
    )


def tiny_link(
    *,
    rho: float = 0.5,
    success_prob: float | None = None,
    max_attempts: int = 2,
    battery_capacity: int = 3,
    quantum: int = 2,
) -> LinkParameters:
    """A 16-state instance small enough to brute-force every stationary policy.

    Unit costs throughout; harvests of ``quantum`` arrive w.p. ``rho``.  The
    channel defaults to the reference one.
    """
    values, probs = bernoulli_harvest(rho, quantum)
    return LinkParameters(
        max_attempts=max_attempts,
        battery_capacity=battery_capacity,
        cost_sample=1,
        cost_decode=1,
        cost_feedback=1,
        eh_values=values,
        eh_probs=probs,
        success_prob=(
            success_probability(REFERENCE_RATE, REFERENCE_TX_POWER)
            if success_prob is None
            else success_prob
        ),
    )
