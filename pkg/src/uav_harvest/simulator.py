"""Monte Carlo rollouts of a lookup-table policy.

Stream rule: rollout ``k`` of seed ``s`` draws from
``Generator(PCG64(SeedSequence(s, spawn_key=(k,))))``. The ``t``-th uniform
``u_t`` (``t = 1..N-1``) sets ``B_{t+1} = u_t >= Pr_LoS(H_{t+1})``.
"""

from __future__ import annotations

import logging
import math
import re
from collections.abc import Callable, Mapping, Sequence
from pathlib import Path
from typing import Any

import msgspec
import numpy as np
import numpy.typing as npt

from .channel import los_probability, modulation_name
from .errors import DomainError, MissingPolicyEntryError
from .model import bits_per_slot, initial_state, reward, successors
from .records.models import MdpState, MonteCarloEstimate, RolloutTrace, SlotRecord, SystemParams
from .records.utils import write_csv
from .solver import NO_ACTION, PolicyTable, joint_lattice

logger = logging.getLogger(__name__)

BlockageFn = Callable[[int, float], bool]

# published realisation under the default mission (u = 30 m, {Muting, BPSK})
REFERENCE_BLOCKAGE: tuple[bool, ...] = (False, True, False, True, False, False, True, False, True, False)
REFERENCE_MODULATIONS: tuple[int, ...] = (2, 1, 2, 1, 2, 2, 1, 2, 1, 1)
REFERENCE_HEIGHTS_M: tuple[float, ...] = (30.0, 60.0, 90.0, 120.0, 120.0, 120.0, 120.0, 90.0, 60.0, 30.0)

TRACE_HEADER = ("slot", "blockage", "modulation", "height_m", "move_m", "energy_j", "bits")

_TRUE_TOKENS = frozenset({"yes", "y", "1", "true", "nlos", "blocked"})
_FALSE_TOKENS = frozenset({"no", "n", "0", "false", "los", "clear"})


def stream_generator(seed: int, stream: int = 0) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(stream,))))


def _run(policy: PolicyTable, params: SystemParams, first_blocked: bool, blockage_at: BlockageFn) -> RolloutTrace:
    state = msgspec.structs.replace(initial_state(params), blocked=first_blocked)
    records: list[SlotRecord] = []
    for t in range(1, params.n_slots + 1):
        action = policy.action_for(state)
        energy = reward(state, action, params)
        bits = bits_per_slot(action.mod_order, params) * params.quantum_bits
        records.append(
            SlotRecord(
                t=t,
                blocked=state.blocked,
                mod_order=action.mod_order,
                height_m=state.height,
                move_m=action.move,
                energy_j=energy,
                bits=bits,
            )
        )
        following: MdpState = successors(state, action, params)[0][0]
        blocked = blockage_at(t + 1, following.height) if t < params.n_slots else following.blocked
        state = msgspec.structs.replace(following, blocked=blocked)
    if state.data_remaining != 0:
        raise RuntimeError(f"rollout ended with {state.data_remaining} quanta undelivered")
    return RolloutTrace(
        records=records,
        total_energy_j=math.fsum(record.energy_j for record in records),
        bits_delivered=math.fsum(record.bits for record in records),
    )


def rollout(policy: PolicyTable, params: SystemParams, seed: int, *, stream: int = 0) -> RolloutTrace:
    """Follow ``policy`` from the initial state with sampled blockage."""
    draws = stream_generator(seed, stream).random(params.n_slots - 1)

    def sampled(t: int, height: float) -> bool:
        return bool(draws[t - 2] >= los_probability(height, params.channel))

    trace = _run(policy, params, params.initial_blocked, sampled)
    trace.seed = seed
    trace.stream = stream
    return trace


def rollout_with_blockage(policy: PolicyTable, params: SystemParams, blockage: Sequence[bool]) -> RolloutTrace:
    """Replay ``policy`` against an injected blockage sequence ``B_1..B_N``."""
    if len(blockage) != params.n_slots:
        raise DomainError(f"blockage sequence has {len(blockage)} entries, expected N={params.n_slots}")
    if bool(blockage[0]) != params.initial_blocked:
        raise DomainError(f"B_1 must be {params.initial_blocked} for this instance")
    return _run(policy, params, bool(blockage[0]), lambda t, _height: bool(blockage[t - 1]))


def _dense_policy(policy: PolicyTable, params: SystemParams) -> tuple[npt.NDArray[np.int16], npt.NDArray[np.int8]]:
    shape = (params.n_slots, params.n_levels, params.n_quanta + 1, 2)
    mod_index = np.full(shape, NO_ACTION, dtype=np.int16)
    move_steps = np.zeros(shape, dtype=np.int8)
    index_of = {mod_order: k for k, mod_order in enumerate(params.mod_set)}
    for (t, level, data, blocked), entry in policy.entries.items():
        cell = (t - 1, level - 1, data, int(blocked))
        mod_index[cell] = index_of[entry.action.mod_order]
        move_steps[cell] = round(entry.action.move / params.height_step)
    return mod_index, move_steps


def simulate_many(policy: PolicyTable, params: SystemParams, n_rollouts: int, seed: int) -> npt.NDArray[np.float64]:
    """Total energy of rollouts ``0..n_rollouts-1``, stepped in lockstep."""
    if n_rollouts < 1:
        raise DomainError("n_rollouts must be at least 1")
    lattice = joint_lattice(params)
    bits = np.asarray(lattice.bits, dtype=np.int64)
    mod_index, move_steps = _dense_policy(policy, params)
    n_draws = params.n_slots - 1
    draws = np.empty((n_rollouts, n_draws))
    for stream in range(n_rollouts):
        draws[stream] = stream_generator(seed, stream).random(n_draws)

    level = np.zeros(n_rollouts, dtype=np.int64)
    data = np.full(n_rollouts, params.n_quanta, dtype=np.int64)
    blocked = np.full(n_rollouts, int(params.initial_blocked), dtype=np.int64)
    totals = np.zeros(n_rollouts)
    for stage in range(params.n_slots):
        chosen = mod_index[stage, level, data, blocked].astype(np.int64)
        if np.any(chosen == NO_ACTION):
            first = int(np.flatnonzero(chosen == NO_ACTION)[0])
            raise MissingPolicyEntryError(
                f"policy has no entry for slot {stage + 1}, level {level[first] + 1}, "
                f"{data[first]} quanta, blocked={bool(blocked[first])}"
            )
        totals += lattice.energy[level, blocked, chosen]
        level = level + move_steps[stage, level, data, blocked]
        data = data - bits[chosen]
        if stage < params.n_slots - 1:
            blocked = (draws[:, stage] >= lattice.p_los[level]).astype(np.int64)
    if np.any(data != 0):
        raise RuntimeError("some rollouts ended with undelivered data")
    return totals


def estimate_expected_energy(
    policy: PolicyTable, params: SystemParams, n_rollouts: int, seed: int
) -> MonteCarloEstimate:
    """Sample mean and standard error of the total energy."""
    totals = simulate_many(policy, params, n_rollouts, seed)
    mean = math.fsum(totals) / n_rollouts
    stderr = float(np.std(totals, ddof=1) / math.sqrt(n_rollouts)) if n_rollouts > 1 else 0.0
    logger.info("%d rollouts (seed %d): mean %.6g J, stderr %.3g J", n_rollouts, seed, mean, stderr)
    return MonteCarloEstimate(mean_j=mean, stderr_j=stderr, n_rollouts=n_rollouts)


def compare_with_reference(trace: RolloutTrace) -> dict[str, Any]:
    """Per-slot agreement with the published realisation; informative only."""
    mods = [record.mod_order for record in trace.records]
    heights = [record.height_m for record in trace.records]
    mod_matches = [a == b for a, b in zip(mods, REFERENCE_MODULATIONS)]
    height_matches = [math.isclose(a, b) for a, b in zip(heights, REFERENCE_HEIGHTS_M)]
    same_length = len(mods) == len(REFERENCE_MODULATIONS)
    return {
        "modulation_matches": mod_matches,
        "height_matches": height_matches,
        "all_match": same_length and all(mod_matches) and all(height_matches),
    }


def write_trace(trace: RolloutTrace, path: str | Path, *, metadata: Mapping[str, Any] | None = None) -> Path:
    rows = (
        (
            record.t,
            "Yes" if record.blocked else "No",
            modulation_name(record.mod_order),
            record.height_m,
            record.move_m,
            record.energy_j,
            record.bits,
        )
        for record in trace.records
    )
    return write_csv(path, TRACE_HEADER, rows, metadata=metadata)


def parse_blockage(text: str) -> tuple[bool, ...]:
    values: list[bool] = []
    body = " ".join(line.split("#", 1)[0] for line in text.splitlines())
    for token in re.split(r"[\s,;]+", body.strip()):
        if not token:
            continue
        lowered = token.lower()
        if lowered in _TRUE_TOKENS:
            values.append(True)
        elif lowered in _FALSE_TOKENS:
            values.append(False)
        else:
            raise DomainError(f"unrecognised blockage token '{token}'")
    return tuple(values)


def read_blockage_file(path: str | Path) -> tuple[bool, ...]:
    return parse_blockage(Path(path).read_text(encoding="utf-8"))


__all__ = [
    "REFERENCE_BLOCKAGE",
    "REFERENCE_MODULATIONS",
    "REFERENCE_HEIGHTS_M",
    "TRACE_HEADER",
    "stream_generator",
    "rollout",
    "rollout_with_blockage",
    "simulate_many",
    "estimate_expected_energy",
    "compare_with_reference",
    "write_trace",
    "parse_blockage",
    "read_blockage_file",
]
