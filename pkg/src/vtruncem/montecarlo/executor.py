"""
Chunked path execution

Paths are split into contiguous chunks of path ids. Chunks run on a
thread pool (model callables are plain numpy code and closures, which do
not pickle for process pools) and the results are reassembled in path_id
order, so the output does not depend on the worker count.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, List, Optional, Sequence, TypeVar

logger = logging.getLogger(__name__)

T = TypeVar("T")
ProgressCallback = Callable[[int], None]


class PathExecutor:
    """Runs a per-chunk function over path ids and reduces in path order"""

    def __init__(self, workers: int = 1, chunk_size: int = 64, progress: Optional[ProgressCallback] = None):
        self.workers = max(1, int(workers))
        self.chunk_size = max(1, int(chunk_size))
        self.progress = progress

    def chunks(self, n_paths: int, first_id: int = 0) -> List[range]:
        stop = first_id + n_paths
        return [range(start, min(start + self.chunk_size, stop)) for start in range(first_id, stop, self.chunk_size)]

    def map_paths(self, func: Callable[[range], Sequence[T]], n_paths: int, first_id: int = 0) -> List[T]:
        """
        Apply ``func`` to every chunk of path ids

        Args:
            func: maps a range of path ids to one result per id
            n_paths: number of paths
            first_id: id of the first path

        Returns:
            Flat list of results ordered by path id
        """
        chunks = self.chunks(n_paths, first_id)
        logger.debug("running %d paths in %d chunks on %d workers", n_paths, len(chunks), self.workers)

        def run(chunk: range) -> Sequence[T]:
            out = func(chunk)
            if len(out) != len(chunk):
                raise RuntimeError(f"chunk {chunk.start}..{chunk.stop - 1} returned {len(out)} results")
            if self.progress is not None:
                self.progress(len(chunk))
            return out

        if self.workers == 1 or len(chunks) == 1:
            per_chunk = [run(chunk) for chunk in chunks]
        else:
            with ThreadPoolExecutor(max_workers=self.workers) as pool:
                per_chunk = list(pool.map(run, chunks))
        results: List[T] = []
        for out in per_chunk:
            results.extend(out)
        return results
