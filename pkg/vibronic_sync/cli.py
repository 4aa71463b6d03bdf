"""
Command-line entry point: ``vibronic-sync <subcommand> [options]``.

Exit codes: 0 success, 1 configuration error, 2 numerical failure,
3 regression failure (``table2 --strict``).
"""

import argparse
import json
import os
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional

from .errors import ConfigError, RegressionFailure, VibronicSyncError
from .utils import configure_logging, get_logger, load_app_config

logger = get_logger(__name__)

THREAD_VARIABLES = ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS")

# artefacts written by the single-purpose run subcommands
SUBCOMMAND_OUTPUTS = {
    "sync": ["trajectory", "sync"],
    "spectrum": ["trajectory", "spectra"],
    "coherences": ["trajectory", "coherences"],
}
COHERENCE_HORIZON_PS = 5.0


def _add_scenario_options(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", type=Path, help="Scenario YAML file")
    parser.add_argument("--preset", help="Named scenario (see 'presets')")
    parser.add_argument("--out", type=Path, help="Output directory")
    parser.add_argument("--t-end", type=float, help="Final time in ps")
    parser.add_argument("--window", type=float, help="Pearson window in ps")
    parser.add_argument("--m-levels", type=int, help="Fock truncation M per mode")
    parser.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY.PATH=VALUE",
                        help="Override any scenario field, e.g. params.omega1=1500")
    parser.add_argument("--plot", action="store_true", help="Render PNG figures from the written CSVs")
    parser.add_argument("--drop-smallest", type=int, help="Leave the N weakest coherences out of figures")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="vibronic-sync",
        description="Exciton-vibration dimer dynamics and mode synchronisation analysis",
    )
    parser.add_argument("--log-level", help="DEBUG, INFO, WARNING or ERROR")
    parser.add_argument("--threads", type=int, help="Threads for the linear-algebra kernels")
    parser.add_argument("--app-config", type=Path, help="Application settings file (default application.yaml)")
    parser.add_argument("--no-registry", action="store_true", help="Do not record runs in the registry")
    sub = parser.add_subparsers(dest="command", required=True)

    for name, text in [
        ("simulate", "Run the full pipeline and write every configured artefact"),
        ("sync", "Write the displacement trajectory and synchronisation series"),
        ("spectrum", "Write Fourier spectra of the displacements"),
        ("coherences", "Write eigenbasis coherence tracks (5 ps horizon by default)"),
    ]:
        command = sub.add_parser(name, help=text)
        _add_scenario_options(command)
        if name == "spectrum":
            command.add_argument("--at", type=float, nargs="+", help="FT window start times in ps")
            command.add_argument("--horizon", type=float, help="Propagate to this time for the FT windows, in ps")

    eigenmodes = sub.add_parser("eigenmodes", help="Liouvillian eigenmodes at reduced truncation")
    _add_scenario_options(eigenmodes)
    eigenmodes.add_argument("--top-k", type=int, help="Slowest non-stationary modes to report")

    table2 = sub.add_parser("table2", help="Matrix elements of the dominant coherences")
    _add_scenario_options(table2)
    table2.add_argument("--strict", action="store_true", help="Exit with code 3 if any reference cell fails")

    sweep = sub.add_parser("sweep", help="Run one scenario per value of a parameter")
    _add_scenario_options(sweep)
    sweep.add_argument("--axis", required=True, help="DimerParams field, omega, g, eta or preset")
    sweep.add_argument("--values", required=True, nargs="+", help="Values (space or comma separated)")
    sweep.add_argument("--workers", type=int, help="Worker processes")

    calibrate = sub.add_parser("calibrate-sync", help="C(phi) for two phase-shifted sinusoids")
    calibrate.add_argument("--frequency", type=float, default=1111.0, help="Frequency in cm^-1")
    calibrate.add_argument("--window-choice", choices=["period", "inverse-angular"], default="period",
                           help="Window of one period, or 1/a with a the angular frequency")
    calibrate.add_argument("--window", type=float, help="Explicit window in ps")
    calibrate.add_argument("--points", type=int, default=37, help="Phases sampled on [0, pi]")
    calibrate.add_argument("--out", type=Path, help="Output directory")
    calibrate.add_argument("--plot", action="store_true")

    sub.add_parser("presets", help="List named scenarios")

    runs = sub.add_parser("runs", help="List runs recorded in the registry")
    runs.add_argument("--limit", type=int, default=20)
    return parser


def _set_threads(threads: Optional[int]) -> None:
    if threads is None:
        return
    if threads < 1:
        raise ConfigError("--threads must be at least 1")
    for variable in THREAD_VARIABLES:
        os.environ[variable] = str(threads)


def _split_values(raw: List[str]) -> List[Any]:
    import yaml

    values = []
    for item in raw:
        for token in item.split(","):
            if token.strip():
                values.append(yaml.safe_load(token.strip()))
    if not values:
        raise ConfigError("--values is empty")
    return values


def resolve_scenario(args: argparse.Namespace, app_config: Dict):
    """Scenario from --config or --preset, then flag overrides on top."""
    from .config import apply_overrides, load_scenario, parse_assignments
    from .presets import preset

    if args.config and args.preset:
        raise ConfigError("use either --config or --preset, not both")
    if args.config:
        if not args.config.is_file():
            raise ConfigError(f"config file not found: {args.config}")
        config = load_scenario(args.config)
    else:
        config = preset(args.preset or app_config.get("default_preset", "pe545"))

    overrides: Dict[str, Any] = {}
    if args.command == "coherences" and args.t_end is None:
        overrides["propagation.t_end"] = max(config.propagation.t_end, COHERENCE_HORIZON_PS)
    if args.t_end is not None:
        overrides["propagation.t_end"] = args.t_end
    if args.window is not None:
        overrides["sync_window"] = args.window
    if args.m_levels is not None:
        overrides["params.m_levels"] = args.m_levels
    if args.command in SUBCOMMAND_OUTPUTS:
        overrides["outputs.artefacts"] = SUBCOMMAND_OUTPUTS[args.command]
    if getattr(args, "at", None):
        overrides["outputs.spectrum_times"] = args.at
    if getattr(args, "horizon", None) is not None:
        overrides["outputs.spectrum_horizon"] = args.horizon
    if args.plot:
        overrides["outputs.plot"] = True
    if args.drop_smallest is not None:
        overrides["outputs.drop_smallest"] = args.drop_smallest
    overrides.update(parse_assignments(args.overrides))
    return apply_overrides(config, overrides)


def _out_dir(args: argparse.Namespace, config) -> Path:
    return args.out if args.out else Path("runs") / config.name


def cmd_run(args, app_config) -> int:
    from .runner import ScenarioRunner

    config = resolve_scenario(args, app_config)
    runner = ScenarioRunner(app_config, use_registry=not args.no_registry)
    document = runner.run(config, _out_dir(args, config), command=args.command)
    print(json.dumps(document["summary"], indent=2))
    return 0


def cmd_eigenmodes(args, app_config) -> int:
    from .artifacts import ArtifactWriter
    from .runner import ScenarioRunner

    config = resolve_scenario(args, app_config)
    if args.top_k is not None:
        config = config.model_copy(update={"outputs": config.outputs.model_copy(update={"eigenmode_top_k": args.top_k})})
    runner = ScenarioRunner(app_config, use_registry=False)
    report = runner.eigenmodes(config)
    slowest = runner.slowest_mode(report)
    if slowest is not None:
        print(f"slowest oscillatory mode: pair {slowest.pair}, overlap {slowest.overlap:.3f}, "
              f"decay {slowest.decay_rate:.4f} ps^-1, {slowest.frequency_cm1:.1f} cm^-1")
    if args.out:
        writer = ArtifactWriter(args.out)
        writer.prepare()
        writer.write_json("eigenmodes.json", report.to_dict())
    else:
        print(report.to_json())
    return 0


def cmd_table2(args, app_config) -> int:
    from .runner import ScenarioRunner

    config = resolve_scenario(args, app_config)
    report = ScenarioRunner(app_config, use_registry=False).table2(config)
    text = report.to_text()
    print(text, end="")
    if args.out:
        args.out.mkdir(parents=True, exist_ok=True)
        (args.out / "table2.txt").write_text(text)
    if args.strict and not report.passed:
        failed = ", ".join(f"{cell.pair}:{cell.quantity}" for cell in report.failures())
        raise RegressionFailure(f"{len(report.failures())} reference cells outside tolerance: {failed}")
    return 0


def cmd_sweep(args, app_config) -> int:
    from .runner import ScenarioRunner

    config = resolve_scenario(args, app_config)
    runner = ScenarioRunner(app_config, use_registry=not args.no_registry)
    table = runner.sweep(config, args.axis, _split_values(args.values), out_dir=args.out, workers=args.workers)
    print(table.to_string(index=False))
    return 0


def cmd_calibrate(args, app_config) -> int:
    import numpy as np
    import pandas as pd

    from .artifacts import ArtifactWriter
    from .hilbert import KAPPA
    from .syncanalysis import dominant_period, sync_phase_characterisation

    if args.frequency <= 0 or args.points < 2:
        raise ConfigError("--frequency must be positive and --points at least 2")
    angular = KAPPA * args.frequency
    if args.window is not None:
        window = args.window
    elif args.window_choice == "period":
        window = dominant_period(args.frequency)
    else:
        window = 1.0 / angular
    curve = sync_phase_characterisation(angular, window, np.linspace(0.0, np.pi, args.points))
    frame = pd.DataFrame(curve, columns=["phi", "C"])
    print(f"window = {window:.6g} ps")
    print(frame.to_string(index=False))
    if args.out:
        writer = ArtifactWriter(args.out)
        writer.prepare()
        writer.write_frame("calibration.csv", frame)
        if args.plot:
            from .plotting import plot_calibration

            writer.record(plot_calibration(frame, args.out / "fig_calibration.png"))
    return 0


def cmd_presets(args, app_config) -> int:
    from .presets import list_presets, preset
    from .runner import quiet_et_amplitude

    for name, description in list_presets().items():
        print(f"{name:<14} A={quiet_et_amplitude(preset(name).params):.3f}  {description}")
    return 0


def cmd_runs(args, app_config) -> int:
    from .runner import ScenarioRunner

    result = ScenarioRunner(app_config, use_registry=True).list_runs(limit=args.limit)
    if result["status"] != "success":
        logger.error(result["message"])
        return 1
    for run in result["runs"]:
        wall = f"{run['wall_seconds']:.1f}s" if run["wall_seconds"] is not None else "-"
        print(f"{run['id']:>5}  {run['started_at']}  {run['command']:<11} {run['scenario']:<24} "
              f"{run['status']:<8} {wall:>8}  {run['out_dir'] or ''}")
    return 0


COMMANDS = {
    "simulate": cmd_run,
    "sync": cmd_run,
    "spectrum": cmd_run,
    "coherences": cmd_run,
    "eigenmodes": cmd_eigenmodes,
    "table2": cmd_table2,
    "sweep": cmd_sweep,
    "calibrate-sync": cmd_calibrate,
    "presets": cmd_presets,
    "runs": cmd_runs,
}


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        # must precede the first numpy import
        _set_threads(args.threads)
        app_config = load_app_config(args.app_config)
        configure_logging(args.log_level or app_config.get("log_level", "INFO"))
        return COMMANDS[args.command](args, app_config)
    except VibronicSyncError as e:
        logger.error(f"{type(e).__name__}: {e}")
        return e.exit_code
    except KeyboardInterrupt:
        logger.warning("Interrupted")
        return 130


if __name__ == "__main__":
    sys.exit(main())
