"""
Window Executors
Run window decode tasks in-process or on a multiprocessing pool
"""
import logging
import multiprocessing
import os
import time
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Sequence, Tuple

from .decoding_graph import CodeParams, DecodingGraph, build_graph
from .errors import PipelineError
from .inner_decoders import DefectSet

logger = logging.getLogger(__name__)

# graphs rebuilt inside worker processes, keyed by code parameters
_GRAPH_CACHE: Dict[CodeParams, DecodingGraph] = {}


@dataclass(frozen=True)
class WindowOutcome:
    window: object
    commit: object
    submitted_at: float
    started_at: float
    finished_at: float
    pid: int

    @property
    def decode_time(self) -> float:
        return self.finished_at - self.started_at

    @property
    def dispatch_latency(self) -> float:
        return max(0.0, self.started_at - self.submitted_at)


def _worker_graph(params: CodeParams) -> DecodingGraph:
    graph = _GRAPH_CACHE.get(params)
    if graph is None:
        graph = build_graph(params)
        _GRAPH_CACHE[params] = graph
    return graph


def _run_window(graph: DecodingGraph, inner, window, defects: DefectSet, submitted_at: float) -> WindowOutcome:
    from .windowing import decode_window

    started_at = time.time()
    commit = decode_window(graph, inner, window, defects)
    return WindowOutcome(window, commit, submitted_at, started_at, time.time(), os.getpid())


def _decode_window_task(params: CodeParams, inner, window, defects: DefectSet, submitted_at: float) -> WindowOutcome:
    return _run_window(_worker_graph(params), inner, window, defects, submitted_at)


class SerialExecutor:
    """Decodes windows one after another in the calling process"""

    n_workers = 1

    def submit(self, graph: DecodingGraph, inner, window, defects: DefectSet,
               callback: Callable[[WindowOutcome], None],
               error_callback: Optional[Callable[[BaseException], None]] = None):
        try:
            outcome = _run_window(graph, inner, window, defects, time.time())
        except Exception as exc:
            if error_callback is None:
                raise
            error_callback(PipelineError(f"window {window.window_id} failed: {exc}"))
            return
        callback(outcome)

    def map_windows(self, graph: DecodingGraph, inner, tasks: Sequence[Tuple[object, DefectSet]]) -> List:
        return [_run_window(graph, inner, win, defects, time.time()).commit for win, defects in tasks]

    def close(self):
        pass

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


class WorkerPool:
    """Fixed-size process pool decoding windows concurrently

    Only code parameters, the decoder, the window and its defects travel to
    a worker; each process builds and caches its own decoding graph.
    """

    def __init__(self, n_workers: int):
        if n_workers < 1:
            raise PipelineError("worker pool needs at least one process")
        self.n_workers = n_workers
        self._pool = multiprocessing.Pool(processes=n_workers)
        logger.info("started worker pool with %d processes", n_workers)

    def submit(self, graph: DecodingGraph, inner, window, defects: DefectSet,
               callback: Callable[[WindowOutcome], None],
               error_callback: Optional[Callable[[BaseException], None]] = None):
        def on_error(exc: BaseException):
            wrapped = PipelineError(f"window {window.window_id} failed in worker: {exc!r}")
            wrapped.__cause__ = exc
            if error_callback is not None:
                error_callback(wrapped)
            else:
                logger.error("%s", wrapped)

        self._pool.apply_async(
            _decode_window_task,
            (graph.params, inner, window, defects, time.time()),
            callback=callback,
            error_callback=on_error,
        )

    def map_windows(self, graph: DecodingGraph, inner, tasks: Sequence[Tuple[object, DefectSet]]) -> List:
        pending = [
            (win, self._pool.apply_async(_decode_window_task, (graph.params, inner, win, defects, time.time())))
            for win, defects in tasks
        ]
        commits = []
        for win, result in pending:
            try:
                commits.append(result.get().commit)
            except Exception as exc:
                raise PipelineError(f"window {win.window_id} failed in worker: {exc!r}") from exc
        return commits

    def close(self):
        if self._pool is not None:
            self._pool.close()
            self._pool.join()
            self._pool = None

    def terminate(self):
        if self._pool is not None:
            self._pool.terminate()
            self._pool.join()
            self._pool = None

    def __enter__(self):
        return self

    def __exit__(self, exc_type, exc, tb):
        if exc_type is None:
            self.close()
        else:
            self.terminate()


def make_executor(n_workers: int):
    """Serial executor for a single worker, a process pool otherwise"""
    if n_workers <= 1:
        return SerialExecutor()
    return WorkerPool(n_workers)
