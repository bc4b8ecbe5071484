"""Backward induction over the finite horizon and the per-slot lookup table."""

from __future__ import annotations

import logging
import math
from collections.abc import Iterable, Mapping
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np
import numpy.typing as npt

from .channel import los_probability, path_loss, slot_energy
from .errors import InfeasibleInstanceError, MissingPolicyEntryError
from .model import MOVE_ORDER, bits_per_slot, initial_state
from .records.models import LookupRow, MdpAction, MdpState, PolicyEntry, SystemParams
from .records.utils import write_csv

logger = logging.getLogger(__name__)

StateKey = tuple[int, int, int, bool]
FloatArray = npt.NDArray[np.float64]

NO_ACTION = -1

LOOKUP_HEADER = (
    "t",
    "data_quanta",
    "data_bits",
    "height_m",
    "blocked",
    "move_m",
    "mod_order",
    "value_j",
)


@dataclass(frozen=True)
class Lattice:
    """Height grid the induction runs on, with per-height channel quantities.

    ``energy[i, b, k]`` is the slot energy at height ``heights[i]``, blockage ``b``
    and the ``k``-th constellation. ``level_moves`` are the grid offsets allowed
    before the last slot, in tie-break order. With ``landing`` set, the last
    slot must leave grid index 0 towards the ground.
    """

    heights: FloatArray
    p_los: FloatArray
    energy: FloatArray
    bits: tuple[int, ...]
    level_moves: tuple[int, ...]
    landing: bool


@dataclass(frozen=True)
class InductionResult:
    values: FloatArray
    terminal: FloatArray
    best_move: npt.NDArray[np.int8]
    best_mod: npt.NDArray[np.int16]


def _build_lattice(
    heights: FloatArray, params: SystemParams, *, level_moves: tuple[int, ...], landing: bool
) -> Lattice:
    mods = np.asarray(params.mod_set, dtype=np.float64)
    blocked = np.array([False, True])
    gains = path_loss(heights[:, None], blocked[None, :], params.channel)
    energy = slot_energy(mods[None, None, :], np.asarray(gains)[:, :, None], params.link)
    return Lattice(
        heights=heights,
        p_los=np.asarray(los_probability(heights, params.channel), dtype=np.float64),
        energy=np.asarray(energy, dtype=np.float64),
        bits=tuple(bits_per_slot(mod_order, params) for mod_order in params.mod_set),
        level_moves=level_moves,
        landing=landing,
    )


def joint_lattice(params: SystemParams) -> Lattice:
    heights = params.height_step * np.arange(1, params.n_levels + 1, dtype=np.float64)
    return _build_lattice(heights, params, level_moves=MOVE_ORDER, landing=True)


def fixed_height_lattice(params: SystemParams, height: float) -> Lattice:
    if height <= 0:
        raise ValueError(f"fixed height must be positive, got {height}")
    return _build_lattice(np.array([float(height)]), params, level_moves=(0,), landing=False)


def _expectation(p_los: FloatArray, v_los: FloatArray, v_nlos: FloatArray) -> FloatArray:
    """``p * v_los + (1 - p) * v_nlos`` where a zero-probability branch contributes 0, even if infinite."""
    with np.errstate(invalid="ignore"):
        los = np.where(p_los > 0.0, p_los * v_los, 0.0)
        nlos = np.where(p_los < 1.0, (1.0 - p_los) * v_nlos, 0.0)
    return los + nlos


def _shift(cont: FloatArray, offset: int, bits: int) -> FloatArray:
    """``out[i, d] = cont[i + offset, d - bits]``, +inf where that index does not exist."""
    n_levels, n_data = cont.shape
    out = np.full_like(cont, np.inf)
    lo, hi = max(0, -offset), min(n_levels, n_levels - offset)
    if lo < hi and bits < n_data:
        out[lo:hi, bits:] = cont[lo + offset : hi + offset, : n_data - bits]
    return out


def _relax(
    stage_values: FloatArray,
    stage_move: npt.NDArray[np.int8],
    stage_mod: npt.NDArray[np.int16],
    candidate: FloatArray,
    move: int,
    mod_index: int,
) -> None:
    better = candidate < stage_values
    stage_values[better] = candidate[better]
    stage_move[better] = move
    stage_mod[better] = mod_index


def backward_induction(lattice: Lattice, n_slots: int, n_quanta: int, *, initial_level: int = 0) -> InductionResult:
    """Bellman recursion from the terminal stage down to slot 1.

    ``values[t-1, i, d, b]`` is V_t at grid index ``i``, ``d`` remaining quanta and
    blockage ``b``. Slot 1 is restricted to (``initial_level``, all data).
    """
    n_levels = lattice.heights.size
    shape = (n_slots, n_levels, n_quanta + 1, 2)
    values = np.full(shape, np.inf)
    best_move = np.zeros(shape, dtype=np.int8)
    best_mod = np.full(shape, NO_ACTION, dtype=np.int16)
    terminal = np.full(n_quanta + 1, np.inf)
    terminal[0] = 0.0

    last = n_slots - 1
    final_cont = np.broadcast_to(terminal, (n_levels, n_quanta + 1))
    final_move = -1 if lattice.landing else 0
    for k, bits in enumerate(lattice.bits):
        cont = _shift(np.ascontiguousarray(final_cont), 0, bits)
        if lattice.landing:
            cont[1:, :] = np.inf
        candidate = lattice.energy[:, None, :, k] + cont[:, :, None]
        _relax(values[last], best_move[last], best_mod[last], candidate, final_move, k)

    for stage in range(last - 1, -1, -1):
        following = values[stage + 1]
        cont = _expectation(lattice.p_los[:, None], following[:, :, 0], following[:, :, 1])
        for k, bits in enumerate(lattice.bits):
            for move in lattice.level_moves:
                candidate = lattice.energy[:, None, :, k] + _shift(cont, move, bits)[:, :, None]
                _relax(values[stage], best_move[stage], best_mod[stage], candidate, move, k)

    keep = np.zeros((n_levels, n_quanta + 1), dtype=bool)
    keep[initial_level, n_quanta] = True
    values[0][~keep] = np.inf
    best_mod[0][~keep] = NO_ACTION
    best_move[0][~keep] = 0
    return InductionResult(values=values, terminal=terminal, best_move=best_move, best_mod=best_mod)


@dataclass(frozen=True)
class ValueTable:
    """Expected energy-to-go V_t (J) on the joint height grid; +inf marks infeasible states."""

    values: FloatArray
    terminal: FloatArray
    height_step: float

    @property
    def horizon(self) -> int:
        return int(self.values.shape[0])

    def value(self, state: MdpState) -> float:
        if state.t == self.horizon + 1:
            if state.height != 0.0 or not 0 <= state.data_remaining < self.terminal.size:
                return math.inf
            return float(self.terminal[state.data_remaining])
        level = round(state.height / self.height_step)
        n_levels = self.values.shape[1]
        if not (1 <= state.t <= self.horizon and 1 <= level <= n_levels):
            return math.inf
        if not 0 <= state.data_remaining < self.values.shape[2]:
            return math.inf
        return float(self.values[state.t - 1, level - 1, state.data_remaining, int(state.blocked)])


@dataclass(frozen=True)
class PolicyTable:
    """Optimal action plus value for every state with finite value, per slot."""

    horizon: int
    height_step: float
    quantum_bits: float
    entries: Mapping[StateKey, PolicyEntry] = field(default_factory=dict)

    def key(self, state: MdpState) -> StateKey:
        return (state.t, round(state.height / self.height_step), state.data_remaining, bool(state.blocked))

    def entry_for(self, state: MdpState) -> PolicyEntry:
        try:
            return self.entries[self.key(state)]
        except KeyError:
            raise MissingPolicyEntryError(f"policy has no entry for {state}") from None

    def action_for(self, state: MdpState) -> MdpAction:
        return self.entry_for(state).action

    def slot_keys(self, t: int) -> list[StateKey]:
        return sorted(key for key in self.entries if key[0] == t)

    def __len__(self) -> int:
        return len(self.entries)

    def __contains__(self, state: object) -> bool:
        return isinstance(state, MdpState) and self.key(state) in self.entries


def _policy_from_induction(result: InductionResult, params: SystemParams) -> PolicyTable:
    step = params.height_step
    entries: dict[StateKey, PolicyEntry] = {}
    for stage, level_index, data, blocked in np.argwhere(np.isfinite(result.values)):
        mod_index = int(result.best_mod[stage, level_index, data, blocked])
        action = MdpAction(
            move=float(result.best_move[stage, level_index, data, blocked]) * step,
            mod_order=params.mod_set[mod_index],
        )
        value = float(result.values[stage, level_index, data, blocked])
        entries[(int(stage) + 1, int(level_index) + 1, int(data), bool(blocked))] = PolicyEntry(action, value)
    return PolicyTable(
        horizon=params.n_slots,
        height_step=step,
        quantum_bits=params.quantum_bits,
        entries=entries,
    )


def check_capacity(params: SystemParams) -> None:
    """Reject instances whose data cannot fit in N slots at the largest constellation."""
    capacity = params.n_slots * params.max_bits
    if capacity < params.n_quanta:
        raise InfeasibleInstanceError(
            f"data volume: {params.n_slots} slots x {params.max_bits} quanta/slot = {capacity} quanta "
            f"< D/q = {params.n_quanta} quanta",
            constraint="data volume",
        )


def solve(params: SystemParams) -> tuple[ValueTable, PolicyTable]:
    """Optimal value table and lookup table of the joint modulation/height MDP."""
    check_capacity(params)
    lattice = joint_lattice(params)
    result = backward_induction(lattice, params.n_slots, params.n_quanta)
    table = ValueTable(values=result.values, terminal=result.terminal, height_step=params.height_step)
    policy = _policy_from_induction(result, params)
    v1 = value_of_initial_state(table, params)
    logger.info(
        "solved N=%d levels=%d quanta=%d |M|=%d: V1=%.6g J over %d states",
        params.n_slots,
        params.n_levels,
        params.n_quanta,
        len(params.mod_set),
        v1,
        len(policy),
    )
    return table, policy


def value_of_initial_state(table: ValueTable, params: SystemParams) -> float:
    value = table.value(initial_state(params))
    if math.isinf(value):
        raise InfeasibleInstanceError(
            f"data volume: no schedule of {list(params.mod_set)} over {params.n_slots} slots "
            f"delivers exactly {params.n_quanta} quanta and lands at H=u",
            constraint="data volume",
        )
    return value


def export_lookup_table(policy: PolicyTable, slot: int) -> list[LookupRow]:
    """Rows ``(D_t, H_t, B_t) -> (U_t*, M_t*)`` of one slot."""
    if not 1 <= slot <= policy.horizon:
        raise ValueError(f"slot {slot} outside 1..{policy.horizon}")
    rows: list[LookupRow] = []
    for key in sorted(policy.slot_keys(slot), key=lambda k: (k[2], k[1], k[3])):
        t, level, data, blocked = key
        entry = policy.entries[key]
        rows.append(
            LookupRow(
                t=t,
                data_quanta=data,
                data_bits=data * policy.quantum_bits,
                height_m=level * policy.height_step,
                blocked=blocked,
                move_m=entry.action.move,
                mod_order=entry.action.mod_order,
                value_j=entry.value,
            )
        )
    return rows


def write_lookup_table(
    policy: PolicyTable,
    path: str | Path,
    *,
    slots: Iterable[int] | None = None,
    metadata: Mapping[str, Any] | None = None,
) -> Path:
    selected = list(slots) if slots is not None else list(range(1, policy.horizon + 1))
    rows = (
        (
            row.t,
            row.data_quanta,
            row.data_bits,
            row.height_m,
            row.blocked,
            row.move_m,
            row.mod_order,
            row.value_j,
        )
        for slot in selected
        for row in export_lookup_table(policy, slot)
    )
    return write_csv(path, LOOKUP_HEADER, rows, metadata=metadata)


__all__ = [
    "Lattice",
    "InductionResult",
    "ValueTable",
    "PolicyTable",
    "StateKey",
    "LOOKUP_HEADER",
    "joint_lattice",
    "fixed_height_lattice",
    "backward_induction",
    "check_capacity",
    "solve",
    "value_of_initial_state",
    "export_lookup_table",
    "write_lookup_table",
]
