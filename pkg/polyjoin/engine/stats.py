"""
Per-stage counters and timings of a join run.
"""

import time
from contextlib import contextmanager
from dataclasses import asdict, dataclass, field
from typing import Any, Dict, Iterator, List

from .candidates import EXACT_STAGE, JoinResultRecord


@dataclass
class StageRecord:
    """
    Counters of one stage.

    ``pairs_in`` equals ``confirmed + removed + pairs_out``, where
    ``pairs_out`` are the pairs still undecided when the stage ends.
    """

    name: str
    seconds: float = 0.0
    pairs_in: int = 0
    pairs_out: int = 0
    confirmed: int = 0
    removed: int = 0
    voxel_pairs_generated: int = 0
    voxel_pairs_pruned: int = 0
    facet_pairs: int = 0
    chunks: int = 0
    oversized_chunks: int = 0

    @property
    def balanced(self) -> bool:
        return self.pairs_in == self.confirmed + self.removed + self.pairs_out


@dataclass
class StageStats:
    """Ordered stage records plus result totals."""

    stages: Dict[str, StageRecord] = field(default_factory=dict)
    results: int = 0
    decided_before_exact: int = 0

    def stage(self, name: str) -> StageRecord:
        if name not in self.stages:
            self.stages[name] = StageRecord(name)
        return self.stages[name]

    @contextmanager
    def timed(self, name: str) -> Iterator[StageRecord]:
        record = self.stage(name)
        start = time.perf_counter()
        try:
            yield record
        finally:
            record.seconds += time.perf_counter() - start

    def count_results(self, records: List[JoinResultRecord]) -> None:
        self.results = len(records)
        self.decided_before_exact = sum(1 for rec in records if rec.decided_at != EXACT_STAGE)

    @property
    def filtering_effectiveness(self) -> float:
        """Fraction of results decided before the exact pass."""
        return self.decided_before_exact / self.results if self.results else 0.0

    @property
    def total_seconds(self) -> float:
        return sum(record.seconds for record in self.stages.values())

    def to_dict(self) -> Dict[str, Any]:
        return {
            "stages": [asdict(record) for record in self.stages.values()],
            "results": self.results,
            "decided_before_exact": self.decided_before_exact,
            "filtering_effectiveness": self.filtering_effectiveness,
            "total_seconds": self.total_seconds,
        }
