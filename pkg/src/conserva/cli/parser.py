"""Command-line argument parser for the CLI."""

import argparse
from typing import Any, Callable, Dict, List, Optional, Sequence

from ..config import SCALES
from ..pipeline import VARIANTS
from ..systems import SYSTEM_NAMES

SUITES = ("benchmark", "ablate", "noise", "samples", "sweep", "pareto", "runtime")


def _comma_list(cast: Callable[[str], Any], what: str) -> Callable[[str], List[Any]]:
    """argparse type for comma-separated values"""
    def parse(text: str) -> List[Any]:
        items = [item.strip() for item in text.split(",") if item.strip()]
        if not items:
            raise argparse.ArgumentTypeError(f"expected a comma-separated list of {what}")
        try:
            return [cast(item) for item in items]
        except ValueError:
            raise argparse.ArgumentTypeError(f"invalid {what} list: {text}") from None
    return parse


int_list = _comma_list(int, "integers")
float_list = _comma_list(float, "numbers")
name_list = _comma_list(str, "names")


class ArgumentParser:
    """Parser for CLI arguments"""

    @staticmethod
    def create_parser() -> argparse.ArgumentParser:
        """Create and configure argument parser"""
        parser = argparse.ArgumentParser(
            prog="conserva",
            description="Conservation-law discovery from simulated trajectories",
            formatter_class=argparse.RawDescriptionHelpFormatter,
            epilog="""
Examples:
  # Generate every benchmark dataset at desk scale
  conserva generate --all --scale desk

  # Discover laws for one system over three seeds
  conserva discover --system henon_heiles --seeds 0,1,2 --generate-missing

  # Ablation cells for Lorenz
  conserva experiment ablate --systems lorenz --variants full,no_diversity

  # Noise robustness
  conserva experiment noise --systems mass_spring --sigmas 0.01,0.05,0.1

  # Ground-truth constancy of stored datasets
  conserva audit --dataset-dir runs/datasets
            """
        )

        subparsers = parser.add_subparsers(dest="command", metavar="COMMAND")

        ArgumentParser._add_generate_command(subparsers)
        ArgumentParser._add_discover_command(subparsers)
        ArgumentParser._add_experiment_command(subparsers)
        ArgumentParser._add_audit_command(subparsers)

        return parser

    @staticmethod
    def _add_verbose_flag(parser: argparse.ArgumentParser) -> None:
        parser.add_argument(
            "-v", "--verbose",
            action="store_true",
            help="Enable verbose logging"
        )

    @staticmethod
    def _add_system_selector(parser: argparse.ArgumentParser, required: bool) -> None:
        group = parser.add_mutually_exclusive_group(required=required)
        group.add_argument("--system", choices=SYSTEM_NAMES, help="A single benchmark system")
        group.add_argument("--systems", type=name_list, help="Comma-separated benchmark systems")
        group.add_argument("--all", action="store_true", help="Every benchmark system")

    @staticmethod
    def _add_run_options(parser: argparse.ArgumentParser) -> None:
        """Options shared by commands that run the pipeline"""
        parser.add_argument("--scale", choices=SCALES, default="desk", help="Configuration scale (default: desk)")
        parser.add_argument("--dataset-dir", help="Dataset root (default: <output root>/datasets)")
        parser.add_argument("--output-dir", help="Output root (default: $CONSERVA_OUTPUT_ROOT or ./runs)")
        parser.add_argument("--data-seed", type=int, help="Seed the datasets were generated with")
        parser.add_argument("--tau", type=float, help="Constancy threshold of the acceptance gate")
        parser.add_argument("--rho-min", type=float, help="Minimum diversity ratio of the acceptance gate")
        parser.add_argument("--restarts", type=int, help="Number of invariant-network restarts")
        parser.add_argument("--jobs", type=int, help="Worker cap; results do not depend on it")
        ArgumentParser._add_verbose_flag(parser)

    @staticmethod
    def _add_generate_command(subparsers: Any) -> None:
        parser = subparsers.add_parser("generate", help="Simulate and store benchmark datasets")
        ArgumentParser._add_system_selector(parser, required=True)
        parser.add_argument("--seed", type=int, help="Dataset seed (default: data_seed of the scale)")
        parser.add_argument("--scale", choices=SCALES, default="desk", help="Configuration scale (default: desk)")
        parser.add_argument("--output-dir", help="Dataset root (default: <output root>/datasets)")
        parser.add_argument("--jobs", type=int, help="Worker cap for trajectory integration")
        ArgumentParser._add_verbose_flag(parser)

    @staticmethod
    def _add_discover_command(subparsers: Any) -> None:
        parser = subparsers.add_parser("discover", help="Run the discovery pipeline")
        ArgumentParser._add_system_selector(parser, required=True)
        seeds = parser.add_mutually_exclusive_group()
        seeds.add_argument("--seed", type=int, help="Run seed (default: 0)")
        seeds.add_argument("--seeds", type=int_list, help="Comma-separated run seeds")
        parser.add_argument("--generate-missing", action="store_true",
                            help="Simulate datasets that are not stored yet")
        ArgumentParser._add_run_options(parser)

    @staticmethod
    def _add_experiment_command(subparsers: Any) -> None:
        parser = subparsers.add_parser("experiment", help="Run an experiment suite")
        parser.add_argument("suite", choices=SUITES, help="Experiment suite")
        ArgumentParser._add_system_selector(parser, required=False)
        seeds = parser.add_mutually_exclusive_group()
        seeds.add_argument("--seed", type=int, help="Run seed (default: 0)")
        seeds.add_argument("--seeds", type=int_list, help="Comma-separated run seeds (benchmark)")
        parser.add_argument("--variants", type=name_list, help=f"Ablation variants (default: {','.join(VARIANTS)})")
        parser.add_argument("--sigmas", type=float_list, help="Noise levels (noise)")
        parser.add_argument("--sizes", type=int_list, help="Training-set sizes (samples)")
        parser.add_argument("--restarts-list", type=int_list, help="Restart counts (sweep)")
        parser.add_argument("--rhos", type=float_list, help="Diversity thresholds (sweep)")
        ArgumentParser._add_run_options(parser)

    @staticmethod
    def _add_audit_command(subparsers: Any) -> None:
        parser = subparsers.add_parser("audit", help="Ground-truth constancy of stored datasets")
        parser.add_argument("--dataset-dir", help="Dataset root (default: <output root>/datasets)")
        parser.add_argument("--output-dir", help="Output root (default: $CONSERVA_OUTPUT_ROOT or ./runs)")
        ArgumentParser._add_verbose_flag(parser)

    @staticmethod
    def parse_args(argv: Optional[Sequence[str]] = None) -> Dict[str, Any]:
        """Parse command line arguments"""
        parser = ArgumentParser.create_parser()
        args = parser.parse_args(argv)
        return vars(args)
