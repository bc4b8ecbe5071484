from __future__ import annotations

import math
from collections.abc import Callable
from pathlib import Path

import pytest

from uav_harvest.errors import ConfigError
from uav_harvest.records import (
    CertificationCase,
    CertificationReport,
    ChannelParams,
    LinkParams,
    RolloutTrace,
    RunOptions,
    SlotRecord,
    SystemParams,
    build_run_config,
    build_system_params,
    derive_params,
    derive_run_options,
    height_grid,
    read_csv_rows,
    relative_gap,
    write_csv,
)


def test_system_params_derived_sizes(default_params: SystemParams) -> None:
    assert default_params.quantum_bits == 6e6
    assert default_params.n_quanta == 5
    assert default_params.n_levels == 20
    assert default_params.max_bits == 1
    assert derive_params(default_params, mod_set=(1, 2, 4, 32)).max_bits == 5


def test_direct_construction_checks_cross_field_invariants() -> None:
    with pytest.raises(ValueError, match="muting"):
        SystemParams(mod_set=(2, 4))
    with pytest.raises(ValueError, match="multiple"):
        SystemParams(height_step=45.0)
    with pytest.raises(ValueError, match="link.tau"):
        SystemParams(tau=25.0, data_total=3e7)


@pytest.mark.parametrize(
    ("factory", "match"),
    [
        (lambda: ChannelParams(kappa=5.0), "kappa"),
        (lambda: ChannelParams(kappa=0.0), "kappa"),
        (lambda: ChannelParams(radius=-50.0), "radius"),
        (lambda: LinkParams(gamma_ber=0.5), "gamma_ber"),
        (lambda: LinkParams(sigma2=0.0), "sigma2"),
        (lambda: SystemParams(height_step=-30.0), "height_step"),
        (lambda: SystemParams(n_slots=1), "n_slots"),
        (lambda: SystemParams(data_total=-6e6), "data_total"),
    ],
)
def test_direct_construction_checks_ranges(factory: Callable[[], object], match: str) -> None:
    with pytest.raises(ValueError, match=match):
        factory()


def test_build_system_params_validates_ranges() -> None:
    assert build_system_params().n_slots == 10
    assert build_system_params({"n_slots": 6}).n_slots == 6
    with pytest.raises(ConfigError, match="n_slots"):
        build_system_params({"n_slots": 1})
    with pytest.raises(ConfigError):
        build_system_params({"channel": {"alpha": -1.0}})


def test_build_run_config_accepts_mapping() -> None:
    config = build_run_config({"system": {"n_slots": 12}, "run": {"seed": 3}})

    assert config.system.n_slots == 12
    assert config.run.seed == 3
    with pytest.raises(ConfigError):
        build_run_config({"run": {"rollouts": 0}})


def test_derive_params_revalidates_and_syncs_slot_duration(default_params: SystemParams) -> None:
    faster = derive_params(default_params, tau=25.0)

    assert faster.link.tau == 25.0
    assert faster.n_quanta == 10
    assert derive_params(default_params, channel=ChannelParams(kappa=0.5)).channel.kappa == 0.5
    with pytest.raises(ConfigError, match="Unknown"):
        derive_params(default_params, slots=3)
    with pytest.raises(ConfigError):
        derive_params(default_params, height_step=70.0)


def test_derive_run_options() -> None:
    options = derive_run_options(RunOptions(), seed=5, output_dir="out")

    assert (options.seed, options.output_dir, options.rollouts) == (5, "out", 100_000)
    with pytest.raises(ConfigError):
        derive_run_options(RunOptions(), seed=-3)
    with pytest.raises(ConfigError, match="Unknown"):
        derive_run_options(RunOptions(), colour="red")


def test_csv_round_trip_keeps_metadata_and_formats_cells(tmp_path: Path) -> None:
    path = write_csv(
        tmp_path / "out" / "table.csv",
        ("name", "flag", "value"),
        [("a", True, 0.1), ("b", False, math.inf)],
        metadata={"config_digest": "0123456789abcdef", "seed": 2021},
    )

    raw = path.read_bytes()
    metadata, rows = read_csv_rows(path)

    assert b"\r\n" not in raw
    assert raw.startswith(b"# config_digest: 0123456789abcdef\n# seed: 2021\nname,flag,value\n")
    assert metadata == {"config_digest": "0123456789abcdef", "seed": "2021"}
    assert rows == [
        {"name": "a", "flag": "1", "value": "0.1"},
        {"name": "b", "flag": "0", "value": "inf"},
    ]


def test_height_grid_is_inclusive() -> None:
    grid = height_grid(1.0, 400.0, 1.0)

    assert grid.size == 400
    assert (grid[0], grid[-1]) == (1.0, 400.0)
    assert list(height_grid(10.0, 35.0, 10.0)) == [10.0, 20.0, 30.0]
    with pytest.raises(ValueError):
        height_grid(5.0, 1.0, 1.0)
    with pytest.raises(ValueError):
        height_grid(1.0, 5.0, 0.0)


def test_relative_gap() -> None:
    assert relative_gap(1.0, 1.0) == 0.0
    assert relative_gap(math.inf, math.inf) == 0.0
    assert relative_gap(math.inf, 1.0) == math.inf
    assert relative_gap(0.9, 1.0) == pytest.approx(0.1)


def test_rollout_trace_to_dict() -> None:
    record = SlotRecord(t=1, blocked=False, mod_order=2, height_m=30.0, move_m=30.0, energy_j=1e-5, bits=6e6)
    trace = RolloutTrace(records=[record], total_energy_j=1e-5, bits_delivered=6e6, seed=1, stream=0)

    data = trace.to_dict()

    assert data["records"][0]["mod_order"] == 2
    assert data["seed"] == 1


def test_certification_report_counts_agreement() -> None:
    def case(index: int, agree: bool) -> CertificationCase:
        return CertificationCase(
            index=index,
            n_slots=2,
            n_levels=1,
            mod_set=(1, 2),
            n_quanta=1,
            kappa=1.0,
            solver_value_j=1.0,
            oracle_value_j=1.0 if agree else 2.0,
            relative_gap=0.0 if agree else 0.5,
            agree=agree,
        )

    report = CertificationReport(seed=0, cases=(case(0, True), case(1, False)), max_relative_gap=0.5)

    assert report.n_agree == 1
    assert not report.all_agree
