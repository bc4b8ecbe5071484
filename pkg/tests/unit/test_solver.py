from __future__ import annotations

import math
from pathlib import Path

import numpy as np
import pytest

from tests.common.helpers import energy_by_hand, make_params, single_height_params
from uav_harvest.errors import InfeasibleInstanceError, MissingPolicyEntryError
from uav_harvest.model import feasible_actions, initial_state, reward, successors
from uav_harvest.records import ChannelParams, MdpAction, MdpState, SystemParams, read_csv_rows
from uav_harvest.solver import (
    LOOKUP_HEADER,
    PolicyTable,
    ValueTable,
    export_lookup_table,
    fixed_height_lattice,
    solve,
    value_of_initial_state,
    write_lookup_table,
)

Solution = tuple[ValueTable, PolicyTable]


def _q_value(state: MdpState, action: MdpAction, table: ValueTable, params: SystemParams) -> float:
    total = reward(state, action, params)
    for nxt, prob in successors(state, action, params):
        total += prob * table.value(nxt)
    return total


def test_default_mission_has_finite_value(default_solution: Solution, default_params: SystemParams) -> None:
    table, policy = default_solution
    v1 = value_of_initial_state(table, default_params)

    assert math.isfinite(v1)
    assert v1 > 0
    assert policy.entry_for(initial_state(default_params)).value == v1


def test_first_slot_is_restricted_to_the_initial_state(default_solution: Solution) -> None:
    _, policy = default_solution

    assert policy.slot_keys(1) == [(1, 1, 5, False), (1, 1, 5, True)]


def test_policy_entries_cover_exactly_the_finite_states(default_solution: Solution) -> None:
    table, policy = default_solution
    finite = int(np.isfinite(table.values).sum())

    assert len(policy) == finite
    assert all(math.isfinite(entry.value) for entry in policy.entries.values())


def test_last_slot_entries_all_land(default_solution: Solution) -> None:
    _, policy = default_solution

    for key in policy.slot_keys(10):
        _, level, _, _ = key
        assert level == 1
        assert policy.entries[key].action.move == -30.0


def test_policy_satisfies_bellman_equation(tiny_solution: Solution, tiny_params: SystemParams) -> None:
    table, policy = tiny_solution

    for (t, level, data, blocked), entry in policy.entries.items():
        state = MdpState(t=t, height=level * tiny_params.height_step, data_remaining=data, blocked=blocked)
        candidates = [_q_value(state, action, table, tiny_params) for action in feasible_actions(state, tiny_params)]

        assert _q_value(state, entry.action, table, tiny_params) == pytest.approx(entry.value, rel=1e-12)
        assert min(candidates) == pytest.approx(entry.value, rel=1e-12)


def test_ties_prefer_muting_and_hovering() -> None:
    params = make_params(n_quanta=0)
    table, policy = solve(params)

    assert value_of_initial_state(table, params) == 0.0
    assert policy.action_for(initial_state(params)) == MdpAction(move=0.0, mod_order=1)


def test_no_blockage_penalty_single_height_value() -> None:
    params = single_height_params(n_slots=6, n_quanta=3, kappa=1.0)
    table, _ = solve(params)

    expected = 3 * energy_by_hand(2, 30.0, False, params)
    assert value_of_initial_state(table, params) == pytest.approx(expected, rel=1e-12)


def test_without_blockage_penalty_climbing_is_never_chosen() -> None:
    params = make_params(n_slots=3, n_quanta=2, height_max=60.0, channel=ChannelParams(kappa=1.0))
    table, policy = solve(params)

    expected = 2 * energy_by_hand(2, 30.0, False, params)
    assert value_of_initial_state(table, params) == pytest.approx(expected, rel=1e-12)
    assert all(entry.action.move <= 0.0 for entry in policy.entries.values())


def test_value_is_non_decreasing_in_data_volume() -> None:
    values = []
    for n_quanta in range(8):
        params = make_params(n_quanta=n_quanta)
        table, _ = solve(params)
        values.append(value_of_initial_state(table, params))

    assert values[0] == 0.0
    assert all(later >= earlier for earlier, later in zip(values, values[1:]))


def test_capacity_shortfall_is_infeasible() -> None:
    params = make_params(n_slots=2)

    with pytest.raises(InfeasibleInstanceError) as excinfo:
        solve(params)

    assert excinfo.value.constraint == "data volume"


def test_unreachable_exact_volume_is_infeasible() -> None:
    params = make_params(n_slots=3, n_quanta=1, mod_set=(1, 4))

    with pytest.raises(InfeasibleInstanceError):
        solve(params)


def test_value_table_out_of_range_is_infinite(default_solution: Solution) -> None:
    table, _ = default_solution

    assert table.horizon == 10
    assert math.isinf(table.value(MdpState(t=12, height=30.0, data_remaining=0, blocked=False)))
    assert math.isinf(table.value(MdpState(t=11, height=0.0, data_remaining=2, blocked=False)))
    assert math.isinf(table.value(MdpState(t=3, height=900.0, data_remaining=0, blocked=False)))
    assert table.value(MdpState(t=11, height=0.0, data_remaining=0, blocked=True)) == 0.0


def test_missing_policy_entry_raises_key_error(default_solution: Solution) -> None:
    _, policy = default_solution
    unreachable = MdpState(t=1, height=600.0, data_remaining=0, blocked=False)

    assert unreachable not in policy
    with pytest.raises(MissingPolicyEntryError):
        policy.action_for(unreachable)
    with pytest.raises(KeyError):
        policy.entry_for(unreachable)


def test_export_lookup_table_sorts_rows(default_solution: Solution) -> None:
    _, policy = default_solution
    rows = export_lookup_table(policy, 5)
    order = [(row.data_quanta, row.height_m, row.blocked) for row in rows]

    assert rows
    assert order == sorted(order)
    assert all(row.data_bits == row.data_quanta * 6e6 for row in rows)
    with pytest.raises(ValueError):
        export_lookup_table(policy, 11)


def test_write_lookup_table_embeds_metadata(default_solution: Solution, tmp_path: Path) -> None:
    _, policy = default_solution
    path = write_lookup_table(policy, tmp_path / "table.csv", slots=[1, 10], metadata={"seed": 3})

    metadata, rows = read_csv_rows(path)

    assert metadata == {"seed": "3"}
    assert tuple(rows[0]) == LOOKUP_HEADER
    assert len(rows) == len(export_lookup_table(policy, 1)) + len(export_lookup_table(policy, 10))
    assert {row["t"] for row in rows} == {"1", "10"}


def test_fixed_height_lattice_rejects_non_positive_height(default_params: SystemParams) -> None:
    with pytest.raises(ValueError):
        fixed_height_lattice(default_params, 0.0)
