from __future__ import annotations

from .__about__ import __version__
from .config import ConfigLoader, config_digest, dump_config, load_config
from .errors import (
    ConfigError,
    DomainError,
    InfeasibleActionError,
    InfeasibleInstanceError,
    MissingPolicyEntryError,
    OracleGuardError,
)
from .experiments import compare_joint_vs_fixed, solve_fixed_height, sweep_fixed_height, sweep_modulation_set
from .model import feasible_actions, initial_state, reward, successors
from .oracle import brute_force_optimum, certify, evaluate_policy_exact
from .records import (
    ChannelParams,
    LinkParams,
    MdpAction,
    MdpState,
    RolloutTrace,
    RunConfig,
    SystemParams,
    build_system_params,
    derive_params,
)
from .simulator import estimate_expected_energy, rollout, rollout_with_blockage
from .solver import PolicyTable, ValueTable, export_lookup_table, solve

__all__ = [
    "__version__",
    "ChannelParams",
    "LinkParams",
    "SystemParams",
    "MdpState",
    "MdpAction",
    "PolicyTable",
    "ValueTable",
    "RolloutTrace",
    "RunConfig",
    "ConfigLoader",
    "ConfigError",
    "DomainError",
    "InfeasibleActionError",
    "InfeasibleInstanceError",
    "MissingPolicyEntryError",
    "OracleGuardError",
    "build_system_params",
    "derive_params",
    "load_config",
    "dump_config",
    "config_digest",
    "initial_state",
    "feasible_actions",
    "reward",
    "successors",
    "solve",
    "export_lookup_table",
    "rollout",
    "rollout_with_blockage",
    "estimate_expected_energy",
    "solve_fixed_height",
    "sweep_fixed_height",
    "compare_joint_vs_fixed",
    "sweep_modulation_set",
    "evaluate_policy_exact",
    "brute_force_optimum",
    "certify",
]
