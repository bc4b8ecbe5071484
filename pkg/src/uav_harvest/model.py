"""State and action spaces, reward and transition kernel of the harvesting MDP.

Heights are multiples of ``height_step`` in ``[u, H_max]`` for slots ``1..N``.
The slot-N action is the landing move ``-u`` taken from ``H = u``; its
successor is the ground state ``(N+1, 0, 0, *)``.
"""

from __future__ import annotations

import math
from collections.abc import Iterator

from .channel import bits_per_symbol, los_probability, path_loss, slot_energy
from .errors import DomainError, InfeasibleActionError
from .records.models import MdpAction, MdpState, SystemParams

# preference order used to break ties between equal-value actions
MOVE_ORDER: tuple[int, ...] = (0, -1, 1)

Transition = tuple[MdpState, float]


def bits_per_slot(mod_order: int, params: SystemParams) -> int:
    """Quanta delivered by one slot at constellation size ``mod_order``."""
    if mod_order not in params.mod_set:
        raise DomainError(f"constellation size {mod_order} is not in mod_set {list(params.mod_set)}")
    return bits_per_symbol(mod_order)


def height_level(height: float, params: SystemParams) -> int:
    """Integer ``k`` with ``height == k * u``."""
    level = round(height / params.height_step)
    if not math.isclose(level * params.height_step, height, rel_tol=1e-9, abs_tol=1e-9):
        raise DomainError(f"height {height} m is not a multiple of u={params.height_step} m")
    return level


def level_height(level: int, params: SystemParams) -> float:
    return level * params.height_step


def initial_state(params: SystemParams) -> MdpState:
    return MdpState(
        t=1,
        height=params.height_step,
        data_remaining=params.n_quanta,
        blocked=params.initial_blocked,
    )


def is_valid_state(state: MdpState, params: SystemParams) -> bool:
    if not 1 <= state.t <= params.n_slots:
        return False
    if not 0 <= state.data_remaining <= params.n_quanta:
        return False
    try:
        level = height_level(state.height, params)
    except DomainError:
        return False
    return 1 <= level <= params.n_levels


def _next_level(state: MdpState, action: MdpAction, params: SystemParams) -> int:
    if state.t > params.n_slots:
        raise InfeasibleActionError(f"slot {state.t} lies beyond the horizon N={params.n_slots}")
    level = height_level(state.height, params)
    try:
        step = height_level(action.move, params)
    except DomainError as exc:
        raise InfeasibleActionError(f"move {action.move} m is not one of -u, 0, +u") from exc
    if step not in MOVE_ORDER:
        raise InfeasibleActionError(f"move {action.move} m is not one of -u, 0, +u")
    if state.t == params.n_slots:
        if level != 1 or step != -1:
            raise InfeasibleActionError(
                f"slot N must start at H=u and land with U=-u (got H={state.height} m, U={action.move} m)"
            )
        return 0
    target = level + step
    if not 1 <= target <= params.n_levels:
        raise InfeasibleActionError(
            f"move {action.move} m from {state.height} m leaves [u, H_max] = "
            f"[{params.height_step}, {params.height_max}] m"
        )
    return target


def _next_data(state: MdpState, action: MdpAction, params: SystemParams) -> int:
    remaining = state.data_remaining - bits_per_slot(action.mod_order, params)
    if remaining < 0:
        raise InfeasibleActionError(
            f"{action.mod_order}-ary symbols send more than the {state.data_remaining} remaining quanta"
        )
    return remaining


def reward(state: MdpState, action: MdpAction, params: SystemParams) -> float:
    """Transmission energy (J) of slot ``t``, priced at the current height and blockage."""
    _next_level(state, action, params)
    _next_data(state, action, params)
    gain = path_loss(state.height, state.blocked, params.channel)
    return float(slot_energy(action.mod_order, gain, params.link))


def successors(state: MdpState, action: MdpAction, params: SystemParams) -> list[Transition]:
    """Next states with probabilities; blockage is drawn at the post-move height."""
    level = _next_level(state, action, params)
    data = _next_data(state, action, params)
    height = level_height(level, params)
    p_los = float(los_probability(height, params.channel))
    outcomes = [
        (MdpState(t=state.t + 1, height=height, data_remaining=data, blocked=False), p_los),
        (MdpState(t=state.t + 1, height=height, data_remaining=data, blocked=True), 1.0 - p_los),
    ]
    return [(nxt, prob) for nxt, prob in outcomes if prob > 0.0]


def _can_finish(next_t: int, level: int, data: int, params: SystemParams) -> bool:
    if next_t > params.n_slots:
        return data == 0 and level == 0
    slots_left = params.n_slots - next_t + 1
    moves_left = params.n_slots - next_t
    return data <= slots_left * params.max_bits and abs(level - 1) <= moves_left


def feasible_actions(state: MdpState, params: SystemParams) -> list[MdpAction]:
    """Actions that respect the bounds and can still reach the terminal constraints.

    Returned in tie-break preference order: smaller constellation first, then
    moves ``0, -u, +u``.
    """
    actions: list[MdpAction] = []
    for mod_order in params.mod_set:
        for step in MOVE_ORDER:
            action = MdpAction(move=level_height(step, params), mod_order=mod_order)
            try:
                level = _next_level(state, action, params)
                data = _next_data(state, action, params)
            except InfeasibleActionError:
                continue
            if _can_finish(state.t + 1, level, data, params):
                actions.append(action)
    return actions


def enumerate_states(params: SystemParams) -> Iterator[MdpState]:
    for t in range(1, params.n_slots + 1):
        for level in range(1, params.n_levels + 1):
            for data in range(params.n_quanta + 1):
                for blocked in (False, True):
                    yield MdpState(t=t, height=level_height(level, params), data_remaining=data, blocked=blocked)


def state_count(params: SystemParams) -> int:
    return params.n_slots * params.n_levels * (params.n_quanta + 1) * 2


__all__ = [
    "MOVE_ORDER",
    "bits_per_slot",
    "height_level",
    "level_height",
    "initial_state",
    "is_valid_state",
    "reward",
    "successors",
    "feasible_actions",
    "enumerate_states",
    "state_count",
]
