"""Brute-force certification of the backward-induction solver on tiny instances.

Built only on the model primitives (``reward``, ``successors``); it shares no
recursion code with :mod:`uav_harvest.solver`.
"""

from __future__ import annotations

import itertools
import logging
import math
from collections import defaultdict
from collections.abc import Callable, Iterator
from typing import Optional

import numpy as np

from .errors import InfeasibleActionError, InfeasibleInstanceError, MissingPolicyEntryError, OracleGuardError
from .model import MOVE_ORDER, initial_state, level_height, reward, state_count, successors
from .records.models import (
    CertificationCase,
    CertificationReport,
    ChannelParams,
    MdpAction,
    MdpState,
    PolicyEntry,
    SystemParams,
)
from .records.utils import relative_gap
from .solver import PolicyTable, StateKey, solve, value_of_initial_state

logger = logging.getLogger(__name__)

DEFAULT_GUARD = 10**7
AGREEMENT_TOLERANCE = 1e-9

Chooser = Callable[[MdpState], Optional[MdpAction]]

_KAPPAS = (1.0, 1e-1, 1e-3)
_STEPS = (10.0, 20.0, 30.0, 50.0)
_EXTRA_ORDERS = (2, 4, 8)


def _valid_actions(state: MdpState, params: SystemParams) -> list[MdpAction]:
    """Every action the kernel accepts, ignoring whether the mission can still finish."""
    actions: list[MdpAction] = []
    for mod_order in params.mod_set:
        for step in MOVE_ORDER:
            action = MdpAction(move=level_height(step, params), mod_order=mod_order)
            try:
                successors(state, action, params)
            except InfeasibleActionError:
                continue
            actions.append(action)
    return actions


def _terminal_cost(state: MdpState) -> float:
    return 0.0 if state.data_remaining == 0 and state.height == 0.0 else math.inf


def _forward_value(choose: Chooser, params: SystemParams) -> float:
    """Push the state-occupancy distribution through the horizon, summing expected energy."""
    occupancy: dict[MdpState, float] = {initial_state(params): 1.0}
    contributions: list[float] = []
    for _ in range(params.n_slots):
        following: defaultdict[MdpState, float] = defaultdict(float)
        for state, mass in occupancy.items():
            action = choose(state)
            if action is None:
                return math.inf
            try:
                contributions.append(mass * reward(state, action, params))
                outcomes = successors(state, action, params)
            except InfeasibleActionError:
                return math.inf
            for nxt, prob in outcomes:
                following[nxt] += mass * prob
        occupancy = dict(following)
    if any(math.isinf(_terminal_cost(state)) for state, mass in occupancy.items() if mass > 0.0):
        return math.inf
    return math.fsum(contributions)


def evaluate_policy_exact(policy: PolicyTable, params: SystemParams) -> float:
    """Exact expected energy of ``policy`` from the initial state; +inf if it misses the terminal constraints."""

    def choose(state: MdpState) -> MdpAction:
        if state not in policy:
            raise MissingPolicyEntryError(f"policy has no entry for reachable state {state}")
        return policy.action_for(state)

    return _forward_value(choose, params)


def _check_guard(size: int, guard: int, what: str) -> None:
    if size > guard:
        raise OracleGuardError(f"{what}: {size} exceeds the brute-force guard of {guard}")


def _expectimin(params: SystemParams) -> tuple[float, dict[MdpState, PolicyEntry]]:
    memo: dict[MdpState, float] = {}
    chosen: dict[MdpState, PolicyEntry] = {}

    def best(state: MdpState) -> float:
        if state.t > params.n_slots:
            return _terminal_cost(state)
        if state in memo:
            return memo[state]
        value, action = math.inf, None
        for candidate in _valid_actions(state, params):
            total = reward(state, candidate, params)
            for nxt, prob in successors(state, candidate, params):
                total += prob * best(nxt)
            if total < value:
                value, action = total, candidate
        memo[state] = value
        if action is not None and math.isfinite(value):
            chosen[state] = PolicyEntry(action=action, value=value)
        return value

    return best(initial_state(params)), chosen


def _reachable_states(params: SystemParams) -> list[MdpState]:
    """States at slots ``1..N`` reachable under some sequence of valid actions."""
    frontier = [initial_state(params)]
    seen = {frontier[0]}
    order: list[MdpState] = []
    while frontier:
        state = frontier.pop()
        order.append(state)
        for action in _valid_actions(state, params):
            for nxt, _ in successors(state, action, params):
                if nxt.t <= params.n_slots and nxt not in seen:
                    seen.add(nxt)
                    frontier.append(nxt)
    return sorted(order, key=lambda s: (s.t, s.height, s.data_remaining, s.blocked))


def _enumerate_policies(params: SystemParams, guard: int) -> tuple[float, dict[MdpState, MdpAction]]:
    states = _reachable_states(params)
    options: list[list[Optional[MdpAction]]] = [_valid_actions(state, params) or [None] for state in states]
    _check_guard(math.prod(len(choices) for choices in options), guard, "deterministic Markov policies")
    best_value, best_policy = math.inf, None
    for assignment in itertools.product(*options):
        mapping = dict(zip(states, assignment))
        value = _forward_value(mapping.get, params)
        if value < best_value:
            best_value, best_policy = value, mapping
    if best_policy is None:
        return math.inf, {}
    return best_value, {state: action for state, action in best_policy.items() if action is not None}


def _value_under(mapping: dict[MdpState, MdpAction], params: SystemParams) -> dict[MdpState, float]:
    memo: dict[MdpState, float] = {}

    def value(state: MdpState) -> float:
        if state.t > params.n_slots:
            return _terminal_cost(state)
        if state not in memo:
            action = mapping[state]
            total = reward(state, action, params)
            for nxt, prob in successors(state, action, params):
                total += prob * value(nxt)
            memo[state] = total
        return memo[state]

    value(initial_state(params))
    return memo


def brute_force_optimum(
    params: SystemParams, *, exhaustive: bool = False, guard: int = DEFAULT_GUARD
) -> tuple[float, PolicyTable]:
    """Minimum expected energy by exhaustive search, with the policy that achieves it.

    The default search is a memoised expectimin over every valid action of every
    reachable state. With ``exhaustive`` set, every deterministic Markov policy on
    the reachable states is enumerated and evaluated forward instead; the guard
    then bounds the number of policies rather than state-action pairs.
    """
    if exhaustive:
        value, mapping = _enumerate_policies(params, guard)
        values = _value_under(mapping, params) if math.isfinite(value) else {}
        entries = {state: PolicyEntry(action=mapping[state], value=v) for state, v in values.items()}
    else:
        _check_guard(state_count(params) * len(MOVE_ORDER) * len(params.mod_set), guard, "state-action pairs")
        value, entries = _expectimin(params)
    table = PolicyTable(
        horizon=params.n_slots,
        height_step=params.height_step,
        quantum_bits=params.quantum_bits,
        entries=_keyed(entries, params),
    )
    logger.debug("brute force (exhaustive=%s): V1=%r over %d policy entries", exhaustive, value, len(table))
    return value, table


def _keyed(entries: dict[MdpState, PolicyEntry], params: SystemParams) -> dict[StateKey, PolicyEntry]:
    return {
        (state.t, round(state.height / params.height_step), state.data_remaining, state.blocked): entry
        for state, entry in entries.items()
    }


def random_instance(rng: np.random.Generator) -> SystemParams:
    """A tiny instance: N in 2..4, at most 3 levels, 3 constellations and 3 quanta."""
    n_slots = int(rng.integers(2, 5))
    n_levels = int(rng.integers(1, 4))
    step = float(rng.choice(_STEPS))
    extra = int(rng.integers(1, 3))
    orders = sorted(int(m) for m in rng.choice(_EXTRA_ORDERS, size=extra, replace=False))
    n_quanta = int(rng.integers(0, 4))
    symbol_rate, tau = 1.2e5, 50.0
    return SystemParams(
        n_slots=n_slots,
        tau=tau,
        data_total=n_quanta * symbol_rate * tau,
        symbol_rate=symbol_rate,
        height_step=step,
        height_max=step * n_levels,
        mod_set=(1, *orders),
        initial_blocked=bool(rng.integers(0, 2)),
        channel=ChannelParams(kappa=float(rng.choice(_KAPPAS))),
    )


def _instances(n_instances: int, seed: int) -> Iterator[SystemParams]:
    rng = np.random.Generator(np.random.PCG64(seed))
    for _ in range(n_instances):
        yield random_instance(rng)


def _solver_value(params: SystemParams) -> float:
    try:
        table, _ = solve(params)
        return value_of_initial_state(table, params)
    except InfeasibleInstanceError:
        return math.inf


def certify(n_instances: int, seed: int, *, tolerance: float = AGREEMENT_TOLERANCE) -> CertificationReport:
    """Compare solver and brute-force V_1 on ``n_instances`` seeded random instances."""
    cases: list[CertificationCase] = []
    for index, params in enumerate(_instances(n_instances, seed)):
        solver_value = _solver_value(params)
        oracle_value, _ = brute_force_optimum(params)
        gap = relative_gap(solver_value, oracle_value)
        cases.append(
            CertificationCase(
                index=index,
                n_slots=params.n_slots,
                n_levels=params.n_levels,
                mod_set=params.mod_set,
                n_quanta=params.n_quanta,
                kappa=params.channel.kappa,
                solver_value_j=solver_value,
                oracle_value_j=oracle_value,
                relative_gap=gap,
                agree=gap <= tolerance,
            )
        )
        if gap > tolerance:
            logger.warning("instance %d disagrees: solver %r J, oracle %r J", index, solver_value, oracle_value)
    report = CertificationReport(
        seed=seed,
        cases=tuple(cases),
        max_relative_gap=max((case.relative_gap for case in cases), default=0.0),
    )
    logger.info("%d/%d instances agree (seed %d)", report.n_agree, len(cases), seed)
    return report


__all__ = [
    "DEFAULT_GUARD",
    "AGREEMENT_TOLERANCE",
    "evaluate_policy_exact",
    "brute_force_optimum",
    "random_instance",
    "certify",
]
