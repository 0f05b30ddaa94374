"""
Command handlers behind the ``polyjoin`` verbs.

Each handler takes the parsed arguments and the merged configuration
dictionary; command-line flags override configuration values when given.
"""

import argparse
import json
import logging
import sys
import tempfile
import time
from contextlib import contextmanager
from pathlib import Path
from typing import IO, Any, Dict, Iterator, List, Optional, Sequence, Tuple

from .config import JoinSpec, PreprocessOptions, QueryType, RefineConfig
from .datagen import builtin_seed, generate_dataset, load_meshes, place_meshes
from .engine import JoinResultRecord, configure_parallelism, oracle_join, run_join
from .index import PreparedDataset, index_summary, load_index, prepare_dataset, save_index
from .logging import get_event_logger

logger = logging.getLogger(__name__)

DEFAULT_BENCH_SIZES = (250, 500, 1000, 2000)
DEFAULT_BENCH_TAU = 1.2


def _pick(value: Any, fallback: Any) -> Any:
    return fallback if value is None else value


@contextmanager
def _output(path: Optional[str]) -> Iterator[IO[str]]:
    if path is None:
        yield sys.stdout
        return
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        yield f


def write_records(records: Sequence[JoinResultRecord], path: Optional[str] = None) -> int:
    """Write records as JSON Lines to ``path`` (stdout if None)."""
    with _output(path) as out:
        for record in records:
            out.write(record.to_json())
            out.write("\n")
    return len(records)


def read_records(path: str) -> List[JoinResultRecord]:
    """Read a JSON Lines result file."""
    with open(path, "r", encoding="utf-8") as f:
        return [JoinResultRecord.from_dict(json.loads(line)) for line in f if line.strip()]


def _write_json(payload: Dict[str, Any], path: Optional[str]) -> None:
    with _output(path) as out:
        json.dump(payload, out, indent=2, sort_keys=True)
        out.write("\n")


def cmd_generate(args: argparse.Namespace, config: Dict[str, Any]) -> int:
    """Write a synthetic population."""
    gen = config["generate"]
    manifest = generate_dataset(
        args.out,
        shape=_pick(args.shape, gen["shape"]),
        facets=_pick(args.facets, gen["facets"]),
        seed_offs=args.seed_off or (),
        count=_pick(args.count, gen["count"]),
        spacing=_pick(args.spacing, gen["spacing"]),
        jitter=_pick(args.jitter, gen["jitter"]),
        rng_seed=_pick(args.rng_seed, gen["rng_seed"]),
        allow_overlap=args.allow_overlap,
        scatter_within=args.scatter_within,
    )
    print(f"{manifest['count']} objects, {manifest['total_facets']} facets -> {args.out}")
    return 0


def preprocess_options(args: argparse.Namespace, config: Dict[str, Any]) -> PreprocessOptions:
    """Validated preprocessing parameters from flags over configuration."""
    prep = config["preprocess"]
    return PreprocessOptions(
        voxel_ratio=_pick(args.voxel_ratio, prep["voxel_ratio"]),
        lods=_pick(args.lods, prep["lods"]),
        hd_grid=_pick(args.hd_grid, prep["hd_grid"]),
        seed=_pick(args.seed, prep["seed"]),
        workers=_pick(args.workers, prep["workers"]),
    )


def cmd_preprocess(args: argparse.Namespace, config: Dict[str, Any]) -> int:
    """Build an index file from a directory of OFF meshes."""
    options = preprocess_options(args, config)
    meshes = load_meshes(args.off_dir)
    events = get_event_logger()
    start = time.perf_counter()
    dataset = prepare_dataset(
        meshes, options.lods, options.voxel_ratio, options.hd_grid, options.seed, options.workers
    )
    size = save_index(args.out, dataset)
    objects, facets, voxels = index_summary(dataset)
    events.log_event(
        "preprocess",
        f"Indexed {objects} objects",
        {
            "objects": objects,
            "facets": facets,
            "voxels": voxels,
            "bytes": size,
            "seconds": time.perf_counter() - start,
            **options.model_dump(),
        },
    )
    print(f"{objects} objects, {facets} facets, {voxels} voxels -> {args.out}")
    return 0


def join_spec(args: argparse.Namespace, config: Dict[str, Any]) -> JoinSpec:
    """
    Validated join request from flags over configuration.

    The LoD schedule is only pinned when ``--lods`` is given; otherwise the
    join adopts the schedule stored in the indices.
    """
    join = config["join"]
    pipeline = _pick(args.pipeline, join["pipeline"])
    refine: Dict[str, Any] = {
        "refine_chunk": _pick(args.refine_chunk, join["refine_chunk"]),
        "kernel_facet_pairs": join["kernel_facet_pairs"],
        "pipeline": pipeline,
    }
    if args.lods is not None:
        refine["lods"] = args.lods
    return JoinSpec(
        query_type=QueryType(args.type),
        tau=args.tau,
        k=args.k,
        r_index=args.r,
        s_index=args.s or args.r,
        filter_chunk=_pick(args.filter_chunk, join["filter_chunk"]),
        pipeline=pipeline,
        self_join=args.self_join,
        exact=args.exact,
        seed=_pick(args.seed, config["preprocess"]["seed"]),
        refine=RefineConfig(**refine),
    )


def _load_pair(spec: JoinSpec) -> Tuple[PreparedDataset, PreparedDataset]:
    R = load_index(spec.r_index)
    S = R if spec.s_index == spec.r_index else load_index(spec.s_index)
    return R, S


def cmd_join(args: argparse.Namespace, config: Dict[str, Any]) -> int:
    """Run the filter-and-refine join."""
    spec = join_spec(args, config)
    configure_parallelism(_pick(args.workers, config["join"]["workers"]))
    R, S = _load_pair(spec)
    outcome = run_join(R, S, spec)
    count = write_records(outcome.records, args.out)
    if args.stats:
        _write_json(outcome.stats.to_dict(), args.stats)
    logger.info(
        f"{count} results in {outcome.stats.total_seconds:.3f}s, "
        f"{outcome.stats.filtering_effectiveness:.1%} decided before the exact pass"
    )
    return 0


def cmd_oracle(args: argparse.Namespace, config: Dict[str, Any]) -> int:
    """Run the brute-force reference join."""
    spec = join_spec(args, config)
    R, S = _load_pair(spec)
    start = time.perf_counter()
    records = oracle_join(R, S, spec)
    count = write_records(records, args.out)
    if args.stats:
        _write_json({"results": count, "seconds": time.perf_counter() - start}, args.stats)
    logger.info(f"Oracle produced {count} results")
    return 0


def bench_dataset(
    size: int, shape: str, facets: int, options: PreprocessOptions, work_dir: Path
) -> PreparedDataset:
    """Grid population of ``size`` builtin shapes, prepared and round-tripped through an index file."""
    placed = place_meshes([builtin_seed(shape, facets)], size)
    meshes = [(f"obj_{i:05d}", mesh) for i, (_, mesh, _) in enumerate(placed)]
    dataset = prepare_dataset(
        meshes, options.lods, options.voxel_ratio, options.hd_grid, options.seed, options.workers
    )
    path = work_dir / f"bench_{size}.3dpj"
    save_index(path, dataset)
    return load_index(path)


def run_bench(
    sizes: Sequence[int],
    tau: float,
    shape: str,
    facets: int,
    options: PreprocessOptions,
    spec_overrides: Optional[Dict[str, Any]] = None,
) -> Dict[str, Any]:
    """
    Self-join within ``tau`` over populations of increasing size.

    Returns:
        Report with per-size timings, result counts, filtering effectiveness
        and the runtime growth factor between consecutive sizes
    """
    rows: List[Dict[str, Any]] = []
    with tempfile.TemporaryDirectory(prefix="polyjoin-bench-") as tmp:
        for size in sizes:
            start = time.perf_counter()
            dataset = bench_dataset(size, shape, facets, options, Path(tmp))
            prep_seconds = time.perf_counter() - start
            spec = JoinSpec(
                query_type=QueryType.WITHIN, tau=tau, self_join=True, **(spec_overrides or {})
            )
            start = time.perf_counter()
            outcome = run_join(dataset, dataset, spec)
            join_seconds = time.perf_counter() - start
            previous = rows[-1]["join_seconds"] if rows else 0.0
            row = {
                "objects": size,
                "facets": dataset.n_facets,
                "prep_seconds": prep_seconds,
                "join_seconds": join_seconds,
                "results": len(outcome.records),
                "filtering_effectiveness": outcome.stats.filtering_effectiveness,
                "growth": join_seconds / previous if previous else None,
            }
            rows.append(row)
            logger.info(
                f"bench {size}: join {join_seconds:.3f}s, {row['results']} results, "
                f"effectiveness {row['filtering_effectiveness']:.1%}"
            )
    growth = [row["growth"] for row in rows if row["growth"] is not None]
    return {
        "tau": tau,
        "shape": shape,
        "facets": facets,
        "runs": rows,
        "max_growth": max(growth) if growth else None,
    }


def cmd_bench(args: argparse.Namespace, config: Dict[str, Any]) -> int:
    """Report the size-doubling scaling curve."""
    options = preprocess_options(args, config)
    join = config["join"]
    configure_parallelism(_pick(args.workers, join["workers"]))
    overrides = {
        "filter_chunk": join["filter_chunk"],
        "pipeline": join["pipeline"],
        "refine": RefineConfig(
            lods=options.lods,
            refine_chunk=join["refine_chunk"],
            kernel_facet_pairs=join["kernel_facet_pairs"],
            pipeline=join["pipeline"],
        ),
    }
    report = run_bench(
        args.sizes,
        _pick(args.tau, DEFAULT_BENCH_TAU),
        _pick(args.shape, config["generate"]["shape"]),
        _pick(args.facets, config["generate"]["facets"]),
        options,
        overrides,
    )
    _write_json(report, args.out)
    return 0


COMMANDS = {
    "generate": cmd_generate,
    "preprocess": cmd_preprocess,
    "join": cmd_join,
    "oracle": cmd_oracle,
    "bench": cmd_bench,
}
