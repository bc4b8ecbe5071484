from __future__ import annotations

import argparse
import logging
import sys
from collections.abc import Mapping, Sequence
from pathlib import Path
from typing import Any, Callable

import msgspec

from . import experiments, oracle, simulator, solver
from .config import load_config, run_metadata
from .errors import DomainError, InfeasibleInstanceError
from .records.builder import derive_params, derive_run_options
from .records.models import CertificationReport, FixedHeightResult, RunConfig
from .records.utils import write_csv

logger = logging.getLogger(__name__)

CERTIFICATION_HEADER = (
    "index",
    "n_slots",
    "n_levels",
    "mod_set",
    "n_quanta",
    "kappa",
    "solver_value_j",
    "oracle_value_j",
    "relative_gap",
    "agree",
)

Command = Callable[[RunConfig, argparse.Namespace], int]


def _configure_logging(verbosity: int) -> None:
    level = logging.WARNING if verbosity <= 0 else logging.INFO if verbosity == 1 else logging.DEBUG
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")


def _apply_overrides(config: RunConfig, args: argparse.Namespace) -> RunConfig:
    run_changes: dict[str, object] = {}
    if args.seed is not None:
        run_changes["seed"] = args.seed
    if args.out is not None:
        run_changes["output_dir"] = str(args.out)
    if getattr(args, "rollouts", None) is not None:
        run_changes["rollouts"] = args.rollouts
    if getattr(args, "instances", None) is not None:
        run_changes["certify_instances"] = args.instances
    system = config.system
    if args.geometric_distance:
        channel = msgspec.structs.replace(system.channel, geometric_distance=True)
        system = derive_params(system, channel=channel)
    run = derive_run_options(config.run, **run_changes) if run_changes else config.run
    return RunConfig(system=system, run=run)


def _output_dir(config: RunConfig) -> Path:
    target = Path(config.run.output_dir)
    target.mkdir(parents=True, exist_ok=True)
    return target


def cmd_solve(config: RunConfig, args: argparse.Namespace) -> int:
    params = config.system
    table, policy = solver.solve(params)
    v1 = solver.value_of_initial_state(table, params)
    path = solver.write_lookup_table(
        policy,
        _output_dir(config) / "lookup_table.csv",
        metadata=run_metadata(config, command="solve", v1_j=v1),
    )
    print(f"V1 = {v1:.6g} J ({len(policy)} policy entries)")
    print(f"lookup table: {path}")
    return 0


def _replay_sequence(config: RunConfig, args: argparse.Namespace) -> tuple[bool, ...] | None:
    if args.blockage_file is not None:
        return simulator.read_blockage_file(args.blockage_file)
    if args.reference_blockage:
        return simulator.REFERENCE_BLOCKAGE
    return config.run.blockage


def cmd_simulate(config: RunConfig, args: argparse.Namespace) -> int:
    params = config.system
    table, policy = solver.solve(params)
    v1 = solver.value_of_initial_state(table, params)
    out = _output_dir(config)
    seed = config.run.seed
    blockage = _replay_sequence(config, args)

    if blockage is not None:
        trace = simulator.rollout_with_blockage(policy, params, blockage)
        simulator.write_trace(trace, out / "trace.csv", metadata=run_metadata(config, command="simulate", replay=True))
        print(f"replayed {len(blockage)} slots: {trace.total_energy_j:.6g} J, {trace.bits_delivered:.6g} bits")
        if tuple(blockage) == simulator.REFERENCE_BLOCKAGE:
            agreement = simulator.compare_with_reference(trace)
            matched = sum(agreement["modulation_matches"])
            print(f"reference realisation: {matched}/{len(agreement['modulation_matches'])} modulations match")
        return 0

    trace = simulator.rollout(policy, params, seed)
    simulator.write_trace(trace, out / "trace.csv", metadata=run_metadata(config, command="simulate", stream=0))
    estimate = simulator.estimate_expected_energy(policy, params, config.run.rollouts, seed)
    write_csv(
        out / "monte_carlo.csv",
        ("n_rollouts", "mean_j", "stderr_j", "v1_j"),
        [(estimate.n_rollouts, estimate.mean_j, estimate.stderr_j, v1)],
        metadata=run_metadata(config, command="simulate"),
    )
    print(f"V1 = {v1:.6g} J")
    print(f"Monte Carlo ({estimate.n_rollouts} rollouts): {estimate.mean_j:.6g} J +/- {estimate.stderr_j:.3g} J")
    return 0


def _fixed_height(config: RunConfig) -> FixedHeightResult:
    run = config.run
    return experiments.sweep_fixed_height(
        config.system, run.fixed_height_min, run.fixed_height_max, run.fixed_height_step
    )


def _experiment_fixed_height(config: RunConfig, out: Path, metadata: Mapping[str, Any], plot: bool) -> None:
    fixed = _fixed_height(config)
    experiments.write_fixed_height(fixed, out / "fixed_height.csv", metadata=metadata)
    print(f"best fixed height: {fixed.best_height_m:g} m at {fixed.best_energy_j:.6g} J")
    if plot:
        experiments.plot_fixed_height(fixed, out / "fixed_height.png")


def _experiment_u_sweep(config: RunConfig, out: Path, metadata: Mapping[str, Any], plot: bool) -> None:
    fixed = _fixed_height(config)
    result = experiments.compare_joint_vs_fixed(config.system, config.run.u_values, fixed=fixed)
    experiments.write_sweep(result, out / "u_sweep.csv", metadata=metadata)
    for point in result.points:
        print(f"u = {point.x:g} m: {point.energy_j:.6g} J, savings {100 * point.savings_fraction:.2f}%")
    check = experiments.check_reference_values(fixed, result, config.system)
    print(
        f"reference check: best height {check['best_height_m']:g} m "
        f"(recovered={check['height_recovered']}), savings recovered={check['savings_recovered']}"
    )
    if plot:
        experiments.plot_sweep(result, out / "u_sweep.png")


def _experiment_modset_sweep(config: RunConfig, out: Path, metadata: Mapping[str, Any], plot: bool) -> None:
    result = experiments.sweep_modulation_set(
        config.system, config.run.modset_max_size, tolerance=config.run.saturation_tolerance
    )
    experiments.write_sweep(result, out / "modset_sweep.csv", metadata=metadata)
    for point in result.points:
        energy = f"{point.energy_j:.6g} J" if point.feasible else "infeasible"
        print(f"|M| = {point.x:g}: {energy}")
    print(f"saturation size: {result.saturation_size}")
    if plot:
        experiments.plot_sweep(result, out / "modset_sweep.png")


EXPERIMENTS: dict[str, Callable[[RunConfig, Path, Mapping[str, Any], bool], None]] = {
    "fixed-height": _experiment_fixed_height,
    "u-sweep": _experiment_u_sweep,
    "modset-sweep": _experiment_modset_sweep,
}


def cmd_experiment(config: RunConfig, args: argparse.Namespace) -> int:
    metadata = run_metadata(config, command=f"experiment {args.experiment}")
    EXPERIMENTS[args.experiment](config, _output_dir(config), metadata, args.plot)
    return 0


def _write_certification(report: CertificationReport, path: Path, config: RunConfig) -> Path:
    rows = (
        (
            case.index,
            case.n_slots,
            case.n_levels,
            " ".join(str(m) for m in case.mod_set),
            case.n_quanta,
            case.kappa,
            case.solver_value_j,
            case.oracle_value_j,
            case.relative_gap,
            case.agree,
        )
        for case in report.cases
    )
    metadata = run_metadata(config, command="certify", max_relative_gap=report.max_relative_gap)
    return write_csv(path, CERTIFICATION_HEADER, rows, metadata=metadata)


def cmd_certify(config: RunConfig, args: argparse.Namespace) -> int:
    report = oracle.certify(config.run.certify_instances, config.run.seed)
    _write_certification(report, _output_dir(config) / "certification.csv", config)
    print(f"{report.n_agree}/{len(report.cases)} instances agree (max relative gap {report.max_relative_gap:.3g})")
    return 0 if report.all_agree else 1


COMMANDS: dict[str, Command] = {
    "solve": cmd_solve,
    "simulate": cmd_simulate,
    "experiment": cmd_experiment,
    "certify": cmd_certify,
}


def build_arg_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="TOML run configuration; defaults apply when omitted.")
    common.add_argument("--out", type=Path, help="Output directory (overrides run.output_dir).")
    common.add_argument("--seed", type=int, help="Random seed (overrides run.seed).")
    common.add_argument(
        "--geometric-distance",
        action="store_true",
        help="Use H^2 + R^2 as the squared distance instead of H + R.",
    )
    common.add_argument("-v", "--verbose", action="count", default=0, help="Increase log verbosity.")

    parser = argparse.ArgumentParser(
        prog="uav-harvest",
        description="Joint modulation and flight-height control for UAV data harvesting.",
    )
    commands = parser.add_subparsers(dest="command", required=True)
    commands.add_parser("solve", parents=[common], help="Solve the MDP and export the lookup table.")

    simulate = commands.add_parser("simulate", parents=[common], help="Roll out the optimal policy.")
    simulate.add_argument("--rollouts", type=int, help="Monte Carlo rollouts (overrides run.rollouts).")
    replay = simulate.add_mutually_exclusive_group()
    replay.add_argument("--blockage-file", type=Path, help="Replay a blockage sequence B_1..B_N from a file.")
    replay.add_argument(
        "--reference-blockage",
        action="store_true",
        help="Replay the published 10-slot blockage realisation.",
    )

    experiment = commands.add_parser("experiment", parents=[common], help="Run a baseline comparison.")
    experiment.add_argument("experiment", choices=("fixed-height", "u-sweep", "modset-sweep"))
    experiment.add_argument("--plot", action="store_true", help="Also render a PNG (needs matplotlib).")

    certify = commands.add_parser("certify", parents=[common], help="Check the solver against brute force.")
    certify.add_argument("--instances", type=int, help="Random instances (overrides run.certify_instances).")
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    cli = build_arg_parser()
    args = cli.parse_args(argv)
    _configure_logging(args.verbose)

    config = _apply_overrides(load_config(args.config), args)
    logger.info("running %s with output in %s", args.command, config.run.output_dir)
    try:
        return COMMANDS[args.command](config, args)
    except InfeasibleInstanceError as exc:
        print(f"infeasible instance ({exc.constraint}): {exc}", file=sys.stderr)
        return 2
    except DomainError as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":  # pragma: no cover - CLI entry point
    raise SystemExit(main())
