from __future__ import annotations

from pathlib import Path

import pytest

from tests.common.helpers import make_params
from uav_harvest.records import SystemParams
from uav_harvest.solver import PolicyTable, ValueTable, solve


@pytest.fixture(scope="session")
def default_params() -> SystemParams:
    """Published mission: N=10, tau=50 s, D=30 Mbit, u=30 m, {Muting, BPSK}."""
    return SystemParams()


@pytest.fixture(scope="session")
def default_solution(default_params: SystemParams) -> tuple[ValueTable, PolicyTable]:
    return solve(default_params)


@pytest.fixture(scope="session")
def tiny_params() -> SystemParams:
    """Three slots, two height levels, two quanta; small enough to check every state by hand."""
    return make_params(n_slots=3, n_quanta=2, height_max=60.0)


@pytest.fixture(scope="session")
def tiny_solution(tiny_params: SystemParams) -> tuple[ValueTable, PolicyTable]:
    return solve(tiny_params)


@pytest.fixture()
def config_file(tmp_path: Path) -> Path:
    path = tmp_path / "mission.toml"
    path.write_text(
        "[system]\n"
        "n_slots = 4\n"
        "data_total = 1.2e7\n"
        "height_max = 90.0\n"
        "\n"
        "[system.channel]\n"
        "kappa = 0.01\n"
        "\n"
        "[run]\n"
        "seed = 7\n"
        "rollouts = 50\n"
        "fixed_height_min = 10.0\n"
        "fixed_height_max = 50.0\n"
        "fixed_height_step = 10.0\n"
        "u_values = [30.0, 45.0]\n"
        "modset_max_size = 3\n"
        "certify_instances = 3\n",
        encoding="utf-8",
    )
    return path
