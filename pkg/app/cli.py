"""
Command-line surface: ground-state, propagate, iac, sweep and fn-fit
"""

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional

from . import __version__
from .analysis import autocorr, emission_metrics, fn_analytic
from .config import settings
from .errors import ConfigError, OutputError, ToolkitError
from .physics import units
from .physics.qdynamics import ground_state, infinite_well_estimate
from .sweeps import presets, runner, tables
from .sweeps.spec import RunConfig, SweepSpec, build_config, load_config, output_directory, revalidate

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_COMPUTE = 2
EXIT_IO = 3


def configure_logging(verbose: bool = False) -> None:
    level = logging.DEBUG if verbose else getattr(logging, settings.log_level.upper(), logging.INFO)
    logging.basicConfig(level=level, format="%(asctime)s %(levelname)s %(name)s: %(message)s")


def _load(args) -> RunConfig:
    if args.config:
        config = load_config(args.config, args.preset)
    else:
        config = build_config({}, args.preset)
    if args.output_dir:
        data = config.model_dump()
        data["output"]["directory"] = args.output_dir
        config = revalidate(data)
    return config


def _print_plan(plan: Dict[str, Any]) -> None:
    print("📋 Resolved plan:")
    print(json.dumps(plan, indent=2, default=str))


def _output(config: RunConfig) -> Path:
    return Path(output_directory(config))


def cmd_ground_state(args) -> int:
    config = _load(args)
    metal = config.metal.to_model()
    if args.dry_run:
        _print_plan({
            "command": "ground-state",
            "metal": config.metal.model_dump(),
            "grid": config.grid.model_dump(),
            "infinite_well_estimate_nm": units.from_atomic(infinite_well_estimate(metal), "nm"),
        })
        return EXIT_OK

    print("🚀 Calibrating well width")
    width = runner.calibrate(config)
    grid = config.grid.to_grid(width)
    state = ground_state(metal.with_width(width), grid)
    estimate = infinite_well_estimate(metal)
    summary = {
        "well_width_nm": units.from_atomic(width, "nm"),
        "infinite_well_estimate_nm": units.from_atomic(estimate, "nm"),
        # spill-out past the walls narrows the calibrated box below the hard-wall estimate
        "width_to_estimate_ratio": width / estimate,
        "energy_eV": units.from_atomic(state.energy, "eV"),
        "target_eV": units.from_atomic(metal.fermi_target, "eV"),
        "grid": grid.describe(),
        "config_hash": config.content_hash(),
    }
    path = tables.write_json(summary, _output(config) / f"{config.output.name}_ground_state.json")
    print(f"✅ L = {summary['well_width_nm']:.5f} nm, E1 = {summary['energy_eV']:.6f} eV")
    print(f"   L / hard-wall estimate = {summary['width_to_estimate_ratio']:.3f}")
    print(f"📄 Results saved to: {path}")
    return EXIT_OK


def cmd_propagate(args) -> int:
    config = _load(args)
    if args.dry_run:
        _print_plan({"command": "propagate", "laser": config.laser.model_dump(), "solver": config.solver.model_dump(),
                     "grid": config.grid.model_dump()})
        return EXIT_OK

    print("🚀 Single propagation")
    width = runner.calibrate(config)
    op = runner.build_operating_point(config, width)
    initial = emission_metrics.prepare_state(op)
    total, trace = emission_metrics.simulate(op, initial)
    summary: Dict[str, Any] = {"yield": total, "norm_lost_below": trace.norm_lost_below, **op.describe()}
    if trace.j.max() > 0:
        summary.update(emission_metrics.emission_result(trace).to_dict())
    out = _output(config)
    csv_path = tables.write_frame(trace.to_frame(), out / f"{config.output.name}_flux.csv")
    json_path = tables.write_json({**summary, "metadata": trace.metadata}, out / f"{config.output.name}_flux.json")
    print(f"✅ yield = {total:.6e}")
    if "pulse_fwhm_as" in summary:
        print(f"   dominant burst FWHM = {summary['pulse_fwhm_as']:.1f} as ({summary['dominant_fraction']:.1%} of yield)")
    print(f"📄 Results saved to: {csv_path}, {json_path}")
    return EXIT_OK


def cmd_iac(args) -> int:
    config = _load(args)
    data = config.model_dump()
    if args.model:
        data["iac"]["model"] = args.model
    if args.detector:
        data["iac"]["detector"] = args.detector
    data["sweep"]["task"] = "iac"
    data["sweep"]["axes"] = []
    config = revalidate(data)
    if args.dry_run:
        _print_plan({"command": "iac", "iac": config.iac.model_dump(), "laser": config.laser.model_dump()})
        return EXIT_OK

    print(f"🚀 Autocorrelation ({config.iac.model})")
    op = runner.build_operating_point(config, runner.calibrate(config)) if config.iac.model == "tdse" else None
    trace = runner.iac_trace(config, op, workers=args.workers)
    out = _output(config)
    csv_path = tables.write_frame(trace.to_frame(), out / f"{config.output.name}_iac.csv")
    json_path = tables.write_json(trace.summary(), out / f"{config.output.name}_iac.json")
    print(f"✅ peak-to-baseline = {trace.peak_to_baseline:.3f} (fringe-averaged {trace.fringe_averaged_ratio:.3f})")
    if trace.plateau_spread > autocorr.MAX_PLATEAU_SPREAD:
        print(f"⚠️  Baseline plateau spread {trace.plateau_spread:.2%}")
    print(f"📄 Results saved to: {csv_path}, {json_path}")
    return EXIT_OK


def cmd_sweep(args) -> int:
    config = _load(args)
    spec = SweepSpec(config, source=args.config)
    spec.resolve()
    plan = spec.plan()
    if args.dry_run:
        _print_plan(plan)
        return EXIT_OK

    print(f"🚀 Sweep: {spec.total_points} points ({spec.task})")
    records = runner.run_sweep(spec, workers=args.workers)
    paths = tables.emit_tables(records, _output(config), config.output.name, plan=plan,
                               axis_keys=spec.axis_keys, config_hash=spec.content_hash)

    failed = [r for r in records if r.status == "failed"]
    flagged = [r for r in records if r.status == "flagged"]
    print(f"\n📊 Sweep Summary")
    print("=" * 50)
    print(f"Points: {len(records)}  flagged: {len(flagged)}  failed: {len(failed)}")
    for record in flagged:
        for anomaly in record.anomalies:
            print(f"⚠️  {record.point_id}: {anomaly['type']}: {anomaly['message']}")
    for record in failed:
        print(f"❌ {record.point_id}: {record.error['type']}: {record.error['message']}")
    for kind, path in paths.items():
        print(f"📄 {kind}: {path}")
    return EXIT_COMPUTE if failed else EXIT_OK


def cmd_fn_fit(args) -> int:
    config = _load(args)
    params = config.fn.to_params(config.metal)
    if args.dry_run:
        _print_plan({"command": "fn-fit", "data": args.data, "fn": params.describe(), "fit_b": args.fit_b,
                     "f_laser_guess_GVm": args.guess})
        return EXIT_OK

    print(f"🚀 Fitting F_laser to {args.data}")
    data = fn_analytic.read_ratio_csv(args.data)
    report = fn_analytic.fit_f_laser(data, params, fit_b=args.fit_b, f_laser_guess=args.guess)
    path = report.write_json(_output(config) / f"{config.output.name}_fn_fit.json")
    print(f"✅ F_laser = {report.f_laser:.4f} ± {report.f_laser_sigma:.4f} GV/m")
    if report.fit_b:
        print(f"   B = {report.b:.4f} ± {report.b_sigma:.4f} GV/m")
    if report.suppressed_points:
        print(f"⚠️  Barrier fully suppressed at {report.suppressed_points} points")
    print(f"📄 Results saved to: {path}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=str, help="YAML run configuration")
    common.add_argument("--preset", type=str, help="Named preset to start from")
    common.add_argument("--output-dir", type=str, help="Directory for result files")
    common.add_argument("--workers", type=int, help="Worker processes (default: EMISSION_WORKERS)")
    common.add_argument("-v", "--verbose", action="store_true", help="Debug logging")
    common.add_argument("--dry-run", action="store_true", help="Validate config and print the resolved plan")

    parser = argparse.ArgumentParser(description="Optical field emission toolkit")
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("--list-presets", action="store_true", help="List available presets")
    sub = parser.add_subparsers(dest="command")

    p = sub.add_parser("ground-state", parents=[common], help="Calibrate the well and report E1")
    p.set_defaults(func=cmd_ground_state)

    p = sub.add_parser("propagate", parents=[common], help="Single run, flux trace out")
    p.set_defaults(func=cmd_propagate)

    p = sub.add_parser("iac", parents=[common], help="Interferometric autocorrelation trace")
    p.add_argument("--model", choices=["surrogate", "tdse"], help="Emission model")
    p.add_argument("--detector", choices=["fn", "power_law"], help="Surrogate detector")
    p.set_defaults(func=cmd_iac)

    p = sub.add_parser("sweep", parents=[common], help="Parameter sweep from a config file")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("fn-fit", parents=[common], help="Fit F_laser to (f_dc_GVm, ratio) data")
    p.add_argument("--data", type=str, required=True, help="CSV with f_dc_GVm and ratio columns")
    p.add_argument("--fit-b", action="store_true", help="Fit B alongside F_laser")
    p.add_argument("--guess", type=float, default=1.0, help="Starting F_laser in GV/m")
    p.set_defaults(func=cmd_fn_fit)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)

    if args.list_presets:
        print("Available presets:")
        for name in presets.list_presets():
            print(f"  - {name}: {presets.PRESETS[name].get('description', '')}")
        return EXIT_OK
    if not getattr(args, "command", None):
        parser.print_help()
        return EXIT_CONFIG

    configure_logging(args.verbose)
    try:
        return args.func(args)
    except ConfigError as e:
        print(f"❌ Configuration error: {e}")
        return EXIT_CONFIG
    except OutputError as e:
        print(f"❌ I/O error: {e}")
        return EXIT_IO
    except ToolkitError as e:
        print(f"❌ {type(e).__name__}: {e}")
        return EXIT_COMPUTE
    except KeyboardInterrupt:
        print("\n🛑 Interrupted by user")
        return EXIT_COMPUTE


if __name__ == "__main__":
    sys.exit(main())
