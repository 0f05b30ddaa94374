"""
Double-buffered chunk streaming.

``TwoSlotPipeline`` overlaps the drain of chunk ``c`` with the compute of
chunk ``c + 1``. ``Prefetcher`` builds the next work item on a background
thread while the current one is consumed.
"""

import logging
import queue
import threading
from typing import Any, Callable, Generic, Iterable, Iterator, List, Optional, TypeVar

logger = logging.getLogger(__name__)

T = TypeVar("T")
R = TypeVar("R")


class Sentinel:
    """End-of-stream marker."""


class TwoSlotPipeline(Generic[T, R]):
    """
    Producer/consumer loop with two output slots.

    The coordinator computes chunks in order; a single drain thread consumes
    them in the same order. A slot is only written again after the drain of
    its previous chunk has completed.

    Args:
        compute: ``compute(chunk, slot)`` run on the calling thread
        drain: ``drain(index, output)`` run on the drain thread
        enabled: When False, each chunk is drained right after its compute
    """

    SLOTS = 2

    def __init__(
        self,
        compute: Callable[[T, int], R],
        drain: Callable[[int, R], None],
        enabled: bool = True,
    ):
        self.compute = compute
        self.drain = drain
        self.enabled = enabled
        self.slots: List[Optional[R]] = [None] * self.SLOTS
        self._slot_free = [threading.Event() for _ in range(self.SLOTS)]
        for event in self._slot_free:
            event.set()
        self._queue: "queue.Queue[Any]" = queue.Queue()
        self._error: Optional[BaseException] = None

    def _drain_loop(self) -> None:
        while True:
            item = self._queue.get()
            if isinstance(item, Sentinel):
                return
            index, slot = item
            try:
                if self._error is None:
                    self.drain(index, self.slots[slot])
            except BaseException as e:
                self._error = e
            finally:
                self.slots[slot] = None
                self._slot_free[slot].set()

    def run(self, chunks: Iterable[T]) -> int:
        """
        Process every chunk.

        Returns:
            Number of chunks processed

        Raises:
            Whatever ``compute`` or ``drain`` raised first
        """
        if not self.enabled:
            count = 0
            for index, chunk in enumerate(chunks):
                self.drain(index, self.compute(chunk, 0))
                count += 1
            return count

        worker = threading.Thread(target=self._drain_loop, name="chunk-drain", daemon=True)
        worker.start()
        count = 0
        try:
            for index, chunk in enumerate(chunks):
                if self._error is not None:
                    break
                slot = index % self.SLOTS
                self._slot_free[slot].wait()
                self._slot_free[slot].clear()
                self.slots[slot] = self.compute(chunk, slot)
                self._queue.put((index, slot))
                count += 1
        finally:
            self._queue.put(Sentinel())
            worker.join()
        if self._error is not None:
            raise self._error
        logger.debug(f"Pipeline drained {count} chunks")
        return count


class Prefetcher(Generic[T]):
    """
    Iterate over ``producers`` with a background thread running ahead.

    At most ``depth`` prepared items wait in the staging queue. With
    ``enabled`` False the producers run inline.

    Args:
        producers: Zero-argument callables building each item
        depth: Staging slots
        enabled: Run producers on a background thread
    """

    def __init__(self, producers: Iterable[Callable[[], T]], depth: int = 2, enabled: bool = True):
        self.producers = producers
        self.depth = depth
        self.enabled = enabled

    def __iter__(self) -> Iterator[T]:
        if not self.enabled:
            for produce in self.producers:
                yield produce()
            return

        staged: "queue.Queue[Any]" = queue.Queue(self.depth)
        stop = threading.Event()

        def run() -> None:
            try:
                for produce in self.producers:
                    if stop.is_set():
                        break
                    staged.put(produce())
            except BaseException as e:
                staged.put(e)
            staged.put(Sentinel())

        worker = threading.Thread(target=run, name="prefetch", daemon=True)
        worker.start()
        try:
            while True:
                item = staged.get()
                if isinstance(item, Sentinel):
                    break
                if isinstance(item, BaseException):
                    raise item
                yield item
        finally:
            stop.set()
            while worker.is_alive():
                try:
                    staged.get(timeout=0.05)
                except queue.Empty:
                    pass
            worker.join()
