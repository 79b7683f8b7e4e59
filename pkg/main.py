"""
Smooth Entropy Toolkit
Main entry point for the command-line harness.
"""

import argparse
import sys
import logging
from pathlib import Path

# Add src directory to path for imports
sys.path.append(str(Path(__file__).parent / "src"))

from config_manager import ConfigManager
from cli_harness import ToolkitHarness, parse_number_list
from errors import BadSpec, ToolkitError


def setup_logging(config_manager: ConfigManager):
    """Configure file and console logging from run preferences."""
    settings = config_manager.get_logging_config()
    handlers = []
    if settings.get("file_logging", True):
        log_dir = Path(settings.get("log_directory", "logs"))
        log_dir.mkdir(parents=True, exist_ok=True)
        handlers.append(logging.FileHandler(log_dir / "toolkit.log"))
    if settings.get("console_logging", True):
        handlers.append(logging.StreamHandler(sys.stderr))

    logging.basicConfig(
        level=getattr(logging, str(settings.get("level", "INFO")).upper(), logging.INFO),
        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
        handlers=handlers or [logging.NullHandler()]
    )


def parse_thresholds(text: str):
    values = parse_number_list(text)
    if len(values) != 2:
        raise BadSpec(f"--thresholds needs tLow,tHigh, got {text!r}")
    return values[0], values[1]


def build_parser() -> argparse.ArgumentParser:
    """Subcommand parser; output flags are shared by every subcommand."""
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", default=None, help="CSV destination (default stdout)")
    common.add_argument("--no-header", action="store_true", help="Omit CSV header rows")
    common.add_argument("--no-timestamp", action="store_true", help="Omit the timestamp comment line")
    common.add_argument("--seed", type=int, default=None, help="Seed for random states and the battery")
    common.add_argument("--config-dir", default="config", help="Configuration directory")

    parser = argparse.ArgumentParser(
        description="Smooth min/max entropies and information-spectrum rates of quantum states"
    )
    commands = parser.add_subparsers(dest="command", required=True)

    entropy = commands.add_parser("entropy", parents=[common], help="S, H_min and H_max of a state")
    entropy.add_argument("--state", required=True)
    entropy.add_argument("--sigma", default=None)

    smooth = commands.add_parser("smooth", parents=[common], help="Smooth entropies over epsilon")
    smooth.add_argument("--state", required=True)
    smooth.add_argument("--sigma", default=None)
    smooth.add_argument("--eps", required=True, help="Comma-separated epsilon list")
    smooth.add_argument("--mode", choices=["min", "max"], default="min")
    smooth.add_argument("--conditional", action="store_true")
    smooth.add_argument("--json-witness", default=None, help="Write smoothed operators as JSON")

    converge = commands.add_parser("converge", parents=[common], help="i.i.d. smooth entropy rates")
    converge.add_argument("--state", required=True, help="iid:p1,p2,... or any state spec")
    converge.add_argument("--n", required=True, help="Comma-separated n list")
    converge.add_argument("--eps", required=True)

    scan = commands.add_parser("rate-scan", parents=[common], help="Information-spectrum profile")
    scan.add_argument("--state", required=True)
    scan.add_argument("--gamma-grid", default=None, help="lo:hi:step in bits")
    scan.add_argument("--n", required=True)
    scan.add_argument("--thresholds", default=None, help="tLow,tHigh")
    scan.add_argument("--conditional", action="store_true")

    verify = commands.add_parser("verify", parents=[common], help="Seeded verification battery")
    verify.add_argument("--trials", type=int, default=None)
    verify.add_argument("--corrupt-tolerance", action="store_true", help=argparse.SUPPRESS)

    compare = commands.add_parser("oracle-compare", parents=[common], help="Lower bound vs SDP oracle")
    compare.add_argument("--trials", type=int, default=200, help="Number of instances")
    compare.add_argument("--eps", default="0.1")
    compare.add_argument("--trivial-b", action="store_true")

    return parser


def run_command(args, harness: ToolkitHarness, config_manager: ConfigManager):
    """Dispatch parsed arguments to the harness."""
    verify_defaults = config_manager.get_verify_config()
    seed = args.seed if args.seed is not None else verify_defaults["seed"]

    if args.command == "entropy":
        return harness.cmd_entropy(args.state, args.sigma, seed)
    if args.command == "smooth":
        return harness.cmd_smooth(args.state, parse_number_list(args.eps), args.mode, args.conditional,
                                  args.sigma, args.json_witness, seed)
    if args.command == "converge":
        return harness.cmd_converge(args.state, parse_number_list(args.n, int), parse_number_list(args.eps))
    if args.command == "rate-scan":
        grid = args.gamma_grid
        if grid is None:
            defaults = config_manager.get_experiment_defaults()["gamma_grid"]
            grid = f"{defaults['low']}:{defaults['high']}:{defaults['step']}"
        thresholds = parse_thresholds(args.thresholds) if args.thresholds else None
        return harness.cmd_rate_scan(args.state, grid, parse_number_list(args.n, int), thresholds,
                                     args.conditional, seed)
    if args.command == "verify":
        trials = args.trials if args.trials is not None else verify_defaults["trials"]
        return harness.cmd_verify(seed, trials, args.corrupt_tolerance)
    if args.command == "oracle-compare":
        return harness.cmd_oracle_compare(seed, args.trials, parse_number_list(args.eps)[0], args.trivial_b)
    raise BadSpec(f"Unknown command {args.command!r}")


def main(argv=None) -> int:
    """Main entry point for the smooth entropy toolkit."""
    args = build_parser().parse_args(argv)
    config_manager = ConfigManager(args.config_dir)
    setup_logging(config_manager)

    logger = logging.getLogger(__name__)
    logger.info(f"Starting {args.command}")

    try:
        harness = ToolkitHarness(config_manager)
        report = run_command(args, harness, config_manager)
    except ToolkitError as e:
        logger.error(f"{type(e).__name__}: {e}")
        return e.exit_code
    except OSError as e:
        logger.error(f"File error: {e}")
        return 2
    except Exception as e:
        logger.error(f"Application error: {e}")
        raise

    output = config_manager.get_output_config()
    text = report.write(
        args.out,
        header=output["header"] and not args.no_header,
        timestamp=output["timestamp"] and not args.no_timestamp,
        float_format=output["float_format"],
    )
    if not args.out:
        sys.stdout.write(text)

    logger.info(f"{args.command} finished in {report.elapsed:.2f}s "
                f"({len(report.rows)} rows, {report.checks_failed} failed checks)")
    return report.exit_code


if __name__ == "__main__":
    sys.exit(main())
