"""Main entry point for the polyjoin command line."""
import argparse
import logging
import os
import sys
from typing import List, Optional

from pydantic import ValidationError

from .commands import COMMANDS, DEFAULT_BENCH_SIZES
from .config import load_config, parse_lods, parse_switch, validation_message
from .logging import get_event_logger

logging.basicConfig(
    level=logging.INFO,
    format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
)
logger = logging.getLogger(__name__)


def _lods(value: str) -> List[int]:
    try:
        return parse_lods(value)
    except ValueError as e:
        raise argparse.ArgumentTypeError(f"invalid LoD schedule {value!r}") from e


def _switch(value: str) -> bool:
    try:
        return parse_switch(value)
    except ValueError as e:
        raise argparse.ArgumentTypeError(str(e)) from e


def _sizes(value: str) -> List[int]:
    try:
        return [int(part) for part in value.split(",") if part.strip()]
    except ValueError as e:
        raise argparse.ArgumentTypeError(f"invalid size list {value!r}") from e


def _add_preprocess_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--voxel-ratio", type=float, help="Voxels per facet (default 0.02)")
    parser.add_argument("--lods", type=_lods, help="LoD schedule, e.g. 20,40,60,80,100")
    parser.add_argument("--hd-grid", type=int, help="Barycentric sampling level for hd")
    parser.add_argument("--seed", type=int, help="Seed for voxel clustering")
    parser.add_argument("--workers", type=int, help="Worker count")


def _add_join_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--r", required=True, help="Index file of the query dataset R")
    parser.add_argument("--s", help="Index file of the target dataset S (default: R)")
    parser.add_argument(
        "--type", choices=["within", "intersect", "knn"], default="within", help="Join predicate"
    )
    parser.add_argument("--tau", type=float, help="Distance threshold for within joins")
    parser.add_argument("--k", type=int, help="Neighbors per query object for knn joins")
    parser.add_argument("--self-join", action="store_true", help="Skip pairs of an object with itself")
    parser.add_argument(
        "--exact", action="store_true", help="Refine confirmed pairs to their exact distance"
    )
    parser.add_argument("--lods", type=_lods, help="Expected LoD schedule of the indices")
    parser.add_argument("--filter-chunk", type=int, help="Voxel pairs per filter chunk")
    parser.add_argument("--refine-chunk", type=int, help="Voxel pairs per refinement chunk")
    parser.add_argument("--pipeline", type=_switch, help="on|off")
    parser.add_argument("--workers", type=int, help="Worker threads")
    parser.add_argument("--seed", type=int, help="Seed recorded with the run")
    parser.add_argument("--out", help="Result file (JSON Lines, default stdout)")
    parser.add_argument("--stats", help="Stage statistics file (JSON)")


def build_parser() -> argparse.ArgumentParser:
    """Argument parser for every verb."""
    parser = argparse.ArgumentParser(
        prog="polyjoin", description="Parallel filter-and-refine spatial joins over polyhedra"
    )
    parser.add_argument(
        "--config",
        help="Path to configuration file",
        default=os.environ.get("POLYJOIN_CONFIG_PATH"),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("generate", help="Generate a synthetic population of OFF meshes")
    gen.add_argument("--shape", choices=["sphere", "torus", "tube"], help="Builtin seed shape")
    gen.add_argument("--facets", type=int, help="Facet count of the builtin shape")
    gen.add_argument("--seed-off", action="append", help="Seed OFF file (repeatable)")
    gen.add_argument("--count", type=int, help="Number of objects")
    gen.add_argument("--spacing", type=float, help="Grid pitch")
    gen.add_argument("--jitter", type=float, help="Maximum random shift per axis")
    gen.add_argument("--rng-seed", type=int, help="Placement seed")
    gen.add_argument("--scatter-within", help="Manifest whose extent receives scattered objects")
    gen.add_argument("--allow-overlap", action="store_true", help="Allow overlapping boxes")
    gen.add_argument("--out", required=True, help="Output directory")

    prep = sub.add_parser("preprocess", help="Build an index from OFF meshes")
    prep.add_argument("off_dir", help="Directory of OFF files or a generated dataset")
    _add_preprocess_flags(prep)
    prep.add_argument("--out", required=True, help="Index file to write")

    _add_join_flags(sub.add_parser("join", help="Run a spatial join"))
    _add_join_flags(sub.add_parser("oracle", help="Run the brute-force reference join"))

    bench = sub.add_parser("bench", help="Measure runtime growth with dataset size")
    bench.add_argument(
        "--sizes", type=_sizes, default=list(DEFAULT_BENCH_SIZES), help="Object counts"
    )
    bench.add_argument("--tau", type=float, help="Distance threshold")
    bench.add_argument("--shape", choices=["sphere", "torus", "tube"], help="Builtin seed shape")
    bench.add_argument("--facets", type=int, help="Facets per object")
    _add_preprocess_flags(bench)
    bench.add_argument("--out", help="Report file (JSON, default stdout)")
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    """
    Parse arguments and dispatch to a verb.

    Returns:
        0 on success, 2 for invalid input
    """
    args = build_parser().parse_args(argv)
    config = load_config(args.config)
    logging.getLogger().setLevel(config["logging"]["level"])
    get_event_logger(config["logging"]["event_log"])
    try:
        return COMMANDS[args.command](args, config)
    except ValidationError as e:
        logger.error(f"Invalid parameters: {validation_message(e)}")
        return 2
    except (ValueError, OSError) as e:
        logger.error(str(e))
        return 2


def run() -> None:
    """Run the application from the command line."""
    try:
        sys.exit(main())
    except KeyboardInterrupt:
        logger.info("Interrupted by user")
        sys.exit(130)
    except Exception as e:  # pragma: no cover - unexpected failures
        logger.exception(f"Unhandled exception: {e}")
        sys.exit(1)


if __name__ == "__main__":  # pragma: no cover - manual start
    run()
