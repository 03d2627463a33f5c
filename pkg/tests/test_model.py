"""Unit and property tests for the state/action/transition model."""


import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from eharq.model import (
    DELAYED_ACK,
    IDLE,
    SAMPLE,
    SAMPLE_ACK,
    LinkParameters,
    Protocol,
    SystemState,
    battery_update,
    bernoulli_harvest,
    enumerate_states,
    expected_drop,
    expected_success,
    feasible_actions,
    new_packet_indicator,
    rayleigh_unit_tail,
    state_index,
    success_probability,
    transition_distribution,
)
from eharq.presets import reference_link, tiny_link

# exp(1 - sqrt(2)) and exp(-3), frozen from a 40-digit mpmath evaluation.
PC_REFERENCE = 0.66085980140682793
EXP_MINUS_3 = 0.049787068367863943


@st.composite
def link_parameters(draw) -> LinkParameters:
    max_attempts = draw(st.integers(2, 5))
    cost_sample = draw(st.integers(0, 3))
    cost_decode = draw(st.integers(0, 3))
    cost_feedback = draw(st.integers(0, 3))
    floor = max(1, cost_sample + cost_decode)
    battery_capacity = draw(st.integers(floor, floor + 8))
    n_values = draw(st.integers(1, 3))
    values = tuple(
        sorted(draw(st.lists(st.integers(0, 8), min_size=n_values, max_size=n_values, unique=True)))
    )
    weights = draw(st.lists(st.integers(1, 9), min_size=n_values, max_size=n_values))
    total = sum(weights)
    success_prob = draw(
        st.one_of(st.just(0.0), st.just(1.0), st.floats(0.0, 1.0, allow_nan=False))
    )
    return LinkParameters(
        max_attempts=max_attempts,
        battery_capacity=battery_capacity,
        cost_sample=cost_sample,
        cost_decode=cost_decode,
        cost_feedback=cost_feedback,
        eh_values=values,
        eh_probs=tuple(w / total for w in weights),
        success_prob=success_prob,
    )


def all_feasible_pairs(params: LinkParameters, protocol: Protocol):
    for state in enumerate_states(params):
        for action in feasible_actions(state, protocol, params):
            yield state, action


class TestChannel:
    def test_reference_success_probability(self):
        assert success_probability(0.5, 1.0) == pytest.approx(PC_REFERENCE, abs=1e-15)

    def test_rayleigh_tail(self):
        assert rayleigh_unit_tail(0.0) == 1.0
        assert rayleigh_unit_tail(3.0) == pytest.approx(EXP_MINUS_3, abs=1e-16)

    def test_custom_tail_receives_snr_threshold(self):
        seen = []

        def tail(x):
            seen.append(x)
            return 0.25

        assert success_probability(1.0, 2.0, tail) == 0.25
        assert seen == [pytest.approx(0.5)]

    def test_rejects_bad_inputs(self):
        with pytest.raises(ValueError):
            success_probability(0.0, 1.0)
        with pytest.raises(ValueError):
            success_probability(0.5, -1.0)
        with pytest.raises(ValueError):
            success_probability(0.5, 1.0, lambda x: 1.5)


class TestBattery:
    def test_update_clips_at_capacity(self):
        assert battery_update(5, 2, 4, 6) == 6
        assert battery_update(5, 2, 1, 6) == 4
        assert battery_update(5, 5, 0, 6) == 0

    def test_update_rejects_overspend(self):
        with pytest.raises(ValueError):
            battery_update(3, 4, 0, 6)

    def test_bernoulli_harvest(self):
        assert bernoulli_harvest(0.3, 6) == ((0, 6), (0.7, 0.3))
        with pytest.raises(ValueError):
            bernoulli_harvest(1.5, 6)


class TestLinkParameters:
    def test_reference_instance(self):
        params = reference_link(0.6)
        assert params.battery_capacity == 15
        assert params.eh_values == (0, 6)
        assert params.eh_probs == pytest.approx((0.4, 0.6))
        assert params.success_prob == pytest.approx(PC_REFERENCE, abs=1e-15)

    @pytest.mark.parametrize(
        "override",
        [
            {"max_attempts": 1},
            {"battery_capacity": 0},
            {"cost_sample": -1},
            {"battery_capacity": 5, "cost_sample": 4, "cost_decode": 3},
            {"eh_values": (), "eh_probs": ()},
            {"eh_values": (0, 2), "eh_probs": (0.5,)},
            {"eh_values": (0, -1), "eh_probs": (0.5, 0.5)},
            {"eh_values": (2, 2), "eh_probs": (0.5, 0.5)},
            {"eh_probs": (0.6, 0.6)},
            {"eh_probs": (-0.1, 1.1)},
            {"success_prob": 1.5},
        ],
    )
    def test_validation(self, override):
        base = dict(
            max_attempts=2,
            battery_capacity=4,
            cost_sample=1,
            cost_decode=1,
            cost_feedback=1,
            eh_values=(0, 2),
            eh_probs=(0.5, 0.5),
            success_prob=0.5,
        )
        base.update(override)
        with pytest.raises(ValueError):
            LinkParameters(**base)


class TestEnumeration:
    def test_reference_state_space(self):
        params = reference_link(0.6)
        states = enumerate_states(params)
        assert len(states) == 128
        assert states[0] == SystemState(0, 0, 0)
        assert states[1] == SystemState(0, 0, 1)
        assert states[2] == SystemState(0, 1, 0)
        assert states[-1] == SystemState(15, 3, 1)

    def test_index_is_arithmetic(self):
        params = reference_link(0.6)
        index = state_index(params)
        for state, j in index.items():
            assert j == (state.battery * 4 + state.attempt) * 2 + state.decoded

    def test_enumeration_deterministic(self):
        params = tiny_link()
        assert enumerate_states(params) == enumerate_states(params)
        assert len(enumerate_states(params)) == 16


class TestFeasibleActions:
    def test_tiny_adaptive_table(self):
        params = tiny_link()
        cases = {
            SystemState(3, 0, 0): (IDLE, SAMPLE, SAMPLE_ACK),
            SystemState(2, 0, 0): (IDLE, SAMPLE),
            SystemState(1, 0, 0): (IDLE,),
            SystemState(3, 1, 1): (IDLE, DELAYED_ACK),
            SystemState(1, 1, 1): (IDLE, DELAYED_ACK),
            SystemState(0, 1, 1): (IDLE,),
            SystemState(3, 0, 1): (IDLE,),  # unreachable flag combination idles
        }
        for state, expected in cases.items():
            assert feasible_actions(state, Protocol.ADAPTIVE, params) == expected

    def test_tiny_single_action_protocols(self):
        params = tiny_link()
        assert feasible_actions(SystemState(3, 0, 0), Protocol.NO_FEEDBACK, params) == (
            IDLE,
            SAMPLE,
        )
        assert feasible_actions(SystemState(3, 1, 1), Protocol.NO_FEEDBACK, params) == (IDLE,)
        assert feasible_actions(SystemState(3, 0, 0), Protocol.NON_ADAPTIVE, params) == (
            IDLE,
            SAMPLE_ACK,
        )
        assert feasible_actions(SystemState(2, 0, 0), Protocol.NON_ADAPTIVE, params) == (IDLE,)

    def test_reference_budget_thresholds(self):
        params = reference_link(0.6)
        assert feasible_actions(SystemState(5, 0, 0), Protocol.ADAPTIVE, params) == (IDLE,)
        assert feasible_actions(SystemState(6, 0, 0), Protocol.ADAPTIVE, params) == (IDLE, SAMPLE)
        assert feasible_actions(SystemState(7, 0, 0), Protocol.ADAPTIVE, params) == (
            IDLE,
            SAMPLE,
            SAMPLE_ACK,
        )
        assert feasible_actions(SystemState(6, 0, 0), Protocol.NON_ADAPTIVE, params) == (IDLE,)
        assert feasible_actions(SystemState(15, 2, 1), Protocol.ADAPTIVE, params) == (
            IDLE,
            DELAYED_ACK,
        )


class TestRewards:
    def test_frozen_values(self):
        params = tiny_link(success_prob=0.25)
        last_undecoded = SystemState(3, 1, 0)
        assert expected_drop(last_undecoded, IDLE, params) == 1.0
        assert expected_drop(last_undecoded, SAMPLE, params) == 0.75
        assert expected_drop(SystemState(3, 0, 0), SAMPLE, params) == 0.0
        assert expected_drop(SystemState(3, 1, 1), IDLE, params) == 0.0
        assert expected_success(SystemState(3, 0, 0), SAMPLE, params) == 0.25
        assert expected_success(SystemState(3, 1, 1), DELAYED_ACK, params) == 0.0
        assert new_packet_indicator(SystemState(0, 0, 0)) == 1.0
        assert new_packet_indicator(SystemState(0, 1, 0)) == 0.0


class TestTransitions:
    def test_sample_splits_on_decode(self):
        params = tiny_link(success_prob=0.5)
        entries = transition_distribution(SystemState(2, 0, 0), SAMPLE, params)
        assert entries == (
            (SystemState(0, 1, 1), 0.25),
            (SystemState(1, 1, 0), 0.25),
            (SystemState(2, 1, 1), 0.25),
            (SystemState(3, 1, 0), 0.25),
        )

    def test_sample_ack_merges_targets(self):
        params = tiny_link(success_prob=0.5)
        entries = transition_distribution(SystemState(3, 1, 0), SAMPLE_ACK, params)
        assert entries == (
            (SystemState(0, 0, 0), 0.25),
            (SystemState(2, 0, 0), 0.5),
            (SystemState(3, 0, 0), 0.25),
        )

    def test_idle_on_last_attempt_clears_flag(self):
        params = tiny_link(success_prob=0.5)
        entries = transition_distribution(SystemState(3, 1, 1), IDLE, params)
        assert entries == ((SystemState(3, 0, 0), 1.0),)

    def test_delayed_ack_resets_cycle(self):
        params = tiny_link(success_prob=0.5)
        entries = transition_distribution(SystemState(2, 1, 1), DELAYED_ACK, params)
        assert entries == (
            (SystemState(1, 0, 0), 0.5),
            (SystemState(3, 0, 0), 0.5),
        )

    def test_certain_harvest_collapses_entries(self):
        params = tiny_link(rho=1.0, success_prob=0.5)
        entries = transition_distribution(SystemState(2, 0, 0), SAMPLE, params)
        assert entries == (
            (SystemState(2, 1, 1), 0.5),
            (SystemState(3, 1, 0), 0.5),
        )

    def test_rejects_non_executable_actions(self):
        params = tiny_link()
        with pytest.raises(ValueError):
            transition_distribution(SystemState(3, 1, 1), SAMPLE, params)
        with pytest.raises(ValueError):
            transition_distribution(SystemState(1, 0, 0), SAMPLE, params)
        with pytest.raises(ValueError):
            transition_distribution(SystemState(2, 0, 0), SAMPLE_ACK, params)
        with pytest.raises(ValueError):
            transition_distribution(SystemState(3, 0, 1), DELAYED_ACK, params)
        with pytest.raises(ValueError):
            transition_distribution(SystemState(3, 1, 0), DELAYED_ACK, params)
        with pytest.raises(ValueError):
            transition_distribution(SystemState(0, 1, 1), DELAYED_ACK, params)


@settings(deadline=None)
@given(link_parameters())
def test_rows_are_probability_distributions(params):
    states = set(enumerate_states(params))
    for state, action in all_feasible_pairs(params, Protocol.ADAPTIVE):
        entries = transition_distribution(state, action, params)
        assert abs(sum(p for _, p in entries) - 1.0) <= 1e-12
        targets = [s for s, _ in entries]
        assert targets == sorted(targets) and len(set(targets)) == len(targets)
        for target, prob in entries:
            assert 0.0 < prob <= 1.0
            assert target in states
            # A fresh cycle always starts with the decoded flag down.
            assert not (target.attempt == 0 and target.decoded == 1)


@settings(deadline=None)
@given(link_parameters())
def test_battery_targets_follow_spend_set(params):
    spends = {
        IDLE: (0,),
        SAMPLE: (params.cost_sample, params.cost_sample + params.cost_decode),
        SAMPLE_ACK: (
            params.cost_sample,
            params.cost_sample + params.cost_decode + params.cost_feedback,
        ),
        DELAYED_ACK: (params.cost_feedback,),
    }
    for state, action in all_feasible_pairs(params, Protocol.ADAPTIVE):
        allowed = {
            battery_update(state.battery, u, e, params.battery_capacity)
            for u in spends[action]
            if u <= state.battery
            for e in params.eh_values
        }
        for target, _ in transition_distribution(state, action, params):
            assert target.battery in allowed


@settings(deadline=None)
@given(link_parameters())
def test_feasible_sets_are_consistent(params):
    for state in enumerate_states(params):
        adaptive = feasible_actions(state, Protocol.ADAPTIVE, params)
        union = set()
        for protocol in Protocol:
            actions = feasible_actions(state, protocol, params)
            assert actions[0] == IDLE
            assert list(actions) == sorted(actions)
            union.update(actions)
        assert union <= set(adaptive)
        if state.battery < params.battery_capacity:
            richer = SystemState(state.battery + 1, state.attempt, state.decoded)
            for protocol in Protocol:
                assert set(feasible_actions(state, protocol, params)) <= set(
                    feasible_actions(richer, protocol, params)
                )
        assert set(feasible_actions(state, Protocol.NO_FEEDBACK, params)) <= {IDLE, SAMPLE}
        assert set(feasible_actions(state, Protocol.NON_ADAPTIVE, params)) <= {IDLE, SAMPLE_ACK}


@settings(deadline=None)
@given(link_parameters())
def test_reward_bounds(params):
    for state, action in all_feasible_pairs(params, Protocol.ADAPTIVE):
        d = expected_drop(state, action, params)
        s = expected_success(state, action, params)
        assert 0.0 <= d <= 1.0
        assert s in (0.0, params.success_prob)
        assert d + s <= 1.0 + 1e-12
        if d > 0.0:
            assert state.attempt == params.max_attempts - 1 and state.decoded == 0
        assert new_packet_indicator(state) == (1.0 if state.attempt == 0 else 0.0)
