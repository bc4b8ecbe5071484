from __future__ import annotations

import math

import pytest

from tests.common.helpers import energy_by_hand, los_by_hand, make_params
from uav_harvest.errors import DomainError, InfeasibleActionError
from uav_harvest.model import (
    bits_per_slot,
    enumerate_states,
    feasible_actions,
    height_level,
    initial_state,
    is_valid_state,
    reward,
    state_count,
    successors,
)
from uav_harvest.records import MdpAction, MdpState, SystemParams


def test_initial_state_starts_at_lowest_height_with_all_data(default_params: SystemParams) -> None:
    state = initial_state(default_params)

    assert state == MdpState(t=1, height=30.0, data_remaining=5, blocked=False)
    assert is_valid_state(state, default_params)


def test_state_count_matches_enumeration(default_params: SystemParams) -> None:
    states = list(enumerate_states(default_params))

    assert len(states) == state_count(default_params) == 10 * 20 * 6 * 2
    assert all(is_valid_state(state, default_params) for state in states[:50])


def test_is_valid_state_rejects_off_grid_and_out_of_range(default_params: SystemParams) -> None:
    assert not is_valid_state(MdpState(t=1, height=45.0, data_remaining=5, blocked=False), default_params)
    assert not is_valid_state(MdpState(t=11, height=30.0, data_remaining=0, blocked=False), default_params)
    assert not is_valid_state(MdpState(t=2, height=630.0, data_remaining=0, blocked=False), default_params)
    assert not is_valid_state(MdpState(t=2, height=30.0, data_remaining=6, blocked=False), default_params)


def test_height_level_rejects_off_grid(default_params: SystemParams) -> None:
    assert height_level(120.0, default_params) == 4
    with pytest.raises(DomainError):
        height_level(45.0, default_params)


def test_bits_per_slot_requires_member_of_mod_set(default_params: SystemParams) -> None:
    assert bits_per_slot(1, default_params) == 0
    assert bits_per_slot(2, default_params) == 1
    with pytest.raises(DomainError):
        bits_per_slot(4, default_params)


def test_reward_prices_current_height_and_blockage(default_params: SystemParams) -> None:
    clear = MdpState(t=3, height=90.0, data_remaining=3, blocked=False)
    blocked = MdpState(t=3, height=90.0, data_remaining=3, blocked=True)
    climb = MdpAction(move=30.0, mod_order=2)

    assert reward(clear, climb, default_params) == pytest.approx(energy_by_hand(2, 90.0, False, default_params))
    assert reward(blocked, climb, default_params) == pytest.approx(energy_by_hand(2, 90.0, True, default_params))
    assert reward(clear, MdpAction(move=0.0, mod_order=1), default_params) == 0.0


def test_successors_draw_blockage_at_post_move_height(default_params: SystemParams) -> None:
    state = MdpState(t=2, height=60.0, data_remaining=4, blocked=True)
    outcomes = successors(state, MdpAction(move=30.0, mod_order=2), default_params)
    p_los = los_by_hand(90.0, default_params)

    assert [nxt for nxt, _ in outcomes] == [
        MdpState(t=3, height=90.0, data_remaining=3, blocked=False),
        MdpState(t=3, height=90.0, data_remaining=3, blocked=True),
    ]
    assert outcomes[0][1] == pytest.approx(p_los, rel=1e-14)
    assert math.fsum(prob for _, prob in outcomes) == pytest.approx(1.0)


def test_last_slot_lands_on_the_ground(default_params: SystemParams) -> None:
    state = MdpState(t=10, height=30.0, data_remaining=1, blocked=False)
    outcomes = successors(state, MdpAction(move=-30.0, mod_order=2), default_params)

    assert {nxt.t for nxt, _ in outcomes} == {11}
    assert {nxt.height for nxt, _ in outcomes} == {0.0}
    assert {nxt.data_remaining for nxt, _ in outcomes} == {0}


@pytest.mark.parametrize(
    ("state", "action"),
    [
        (MdpState(t=10, height=60.0, data_remaining=0, blocked=False), MdpAction(move=-30.0, mod_order=1)),
        (MdpState(t=10, height=30.0, data_remaining=0, blocked=False), MdpAction(move=0.0, mod_order=1)),
        (MdpState(t=4, height=30.0, data_remaining=2, blocked=False), MdpAction(move=-30.0, mod_order=1)),
        (MdpState(t=4, height=600.0, data_remaining=2, blocked=False), MdpAction(move=30.0, mod_order=1)),
        (MdpState(t=4, height=60.0, data_remaining=2, blocked=False), MdpAction(move=15.0, mod_order=1)),
        (MdpState(t=4, height=60.0, data_remaining=2, blocked=False), MdpAction(move=60.0, mod_order=1)),
        (MdpState(t=4, height=60.0, data_remaining=0, blocked=False), MdpAction(move=0.0, mod_order=2)),
        (MdpState(t=11, height=0.0, data_remaining=0, blocked=False), MdpAction(move=0.0, mod_order=1)),
    ],
)
def test_infeasible_actions_are_rejected(state: MdpState, action: MdpAction, default_params: SystemParams) -> None:
    with pytest.raises(InfeasibleActionError):
        successors(state, action, default_params)
    with pytest.raises(InfeasibleActionError):
        reward(state, action, default_params)


def test_feasible_actions_follow_tie_break_order(default_params: SystemParams) -> None:
    actions = feasible_actions(initial_state(default_params), default_params)

    assert actions == [
        MdpAction(move=0.0, mod_order=1),
        MdpAction(move=30.0, mod_order=1),
        MdpAction(move=0.0, mod_order=2),
        MdpAction(move=30.0, mod_order=2),
    ]


def test_feasible_actions_prune_unfinishable_successors(default_params: SystemParams) -> None:
    behind = MdpState(t=9, height=30.0, data_remaining=2, blocked=True)
    too_high = MdpState(t=9, height=90.0, data_remaining=0, blocked=False)

    assert feasible_actions(behind, default_params) == [MdpAction(move=0.0, mod_order=2)]
    assert feasible_actions(too_high, default_params) == []


def test_feasible_actions_in_last_slot_only_land(default_params: SystemParams) -> None:
    with_data = MdpState(t=10, height=30.0, data_remaining=1, blocked=True)
    empty = MdpState(t=10, height=30.0, data_remaining=0, blocked=True)
    overdue = MdpState(t=10, height=30.0, data_remaining=2, blocked=True)

    assert feasible_actions(with_data, default_params) == [MdpAction(move=-30.0, mod_order=2)]
    assert feasible_actions(empty, default_params) == [MdpAction(move=-30.0, mod_order=1)]
    assert feasible_actions(overdue, default_params) == []


def test_larger_constellations_deliver_more_quanta() -> None:
    params = make_params(mod_set=(1, 2, 4, 16))
    state = MdpState(t=8, height=60.0, data_remaining=5, blocked=False)

    outcomes = successors(state, MdpAction(move=-30.0, mod_order=16), params)

    assert outcomes[0][0].data_remaining == 1
    assert MdpAction(move=-30.0, mod_order=16) in feasible_actions(state, params)
