"""
Windowing Module
Window construction, commit splitting with artificial defects, and
sliding-window, parallel-window and global decoding of a syndrome stream
"""
import logging
from dataclasses import dataclass
from enum import Enum
from typing import Dict, FrozenSet, List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from .decoding_graph import BoundaryKind, DecodingGraph, SyndromeStream
from .errors import IntegrityError, ParameterError
from .inner_decoders import Correction, DefectSet

logger = logging.getLogger(__name__)


class WindowMode(str, Enum):
    SLIDING = "sliding"
    PARALLEL = "parallel"


class Layer(str, Enum):
    SLIDING = "sliding"
    A = "A"
    B = "B"


class WindowConfig(BaseModel):
    """Commit, buffer and base window sizes, in rounds"""
    model_config = ConfigDict(frozen=True)

    mode: WindowMode = WindowMode.PARALLEL
    n_com: int = Field(ge=1)
    n_buf: int = Field(ge=0)
    w: int = Field(ge=1)

    @model_validator(mode="after")
    def _check_mode(self) -> "WindowConfig":
        if self.mode == WindowMode.PARALLEL and not (self.n_com == self.n_buf == self.w):
            raise ValueError("parallel windows need n_com == n_buf == w")
        return self

    @property
    def n_w(self) -> int:
        """Window size: n_com + n_buf for sliding, 3w for parallel A windows"""
        if self.mode == WindowMode.PARALLEL:
            return 3 * self.w
        return self.n_com + self.n_buf

    @classmethod
    def sliding(cls, n_com: int, n_buf: Optional[int] = None) -> "WindowConfig":
        n_buf = n_com if n_buf is None else n_buf
        return cls(mode=WindowMode.SLIDING, n_com=n_com, n_buf=n_buf, w=n_com)

    @classmethod
    def parallel(cls, w: int) -> "WindowConfig":
        return cls(mode=WindowMode.PARALLEL, n_com=w, n_buf=w, w=w)

    def warn_if_unsafe(self, distance: int):
        if self.mode == WindowMode.PARALLEL and self.w < distance:
            logger.warning("window unit w=%d below distance %d; logical fidelity is not preserved", self.w, distance)
        elif self.mode == WindowMode.SLIDING and self.n_buf < distance:
            logger.warning("buffer n_buf=%d below distance %d; logical fidelity is not preserved", self.n_buf, distance)


@dataclass(frozen=True)
class Window:
    start: int
    end: int
    commit_start: int
    commit_end: int
    layer: Layer
    bottom: BoundaryKind
    top: BoundaryKind
    index: int = 0

    def __post_init__(self):
        if not self.start <= self.commit_start <= self.commit_end <= self.end:
            raise ParameterError(f"commit interval not inside window: {self}")

    @property
    def window_id(self) -> str:
        return f"{self.layer.value}{self.index}"

    @property
    def length(self) -> int:
        return self.end - self.start

    def in_commit(self, round_index: int) -> bool:
        return self.commit_start <= round_index < self.commit_end

    def manifest_line(self) -> str:
        return (
            f"{self.window_id} {self.layer.value} [{self.start},{self.end}) "
            f"commit=[{self.commit_start},{self.commit_end}) "
            f"bottom={self.bottom.value} top={self.top.value}"
        )


@dataclass(frozen=True)
class CommitResult:
    committed_edges: FrozenSet[int]
    artificial_defects: FrozenSet[int]
    logical_flip_partial: int

    def as_correction(self) -> Correction:
        return Correction(self.committed_edges, self.logical_flip_partial)


def split_commit(window: Window, tentative: Correction, graph: DecodingGraph) -> CommitResult:
    """Keep the part of a tentative correction that lies in the commit region

    A space-like edge is committed when its round is in the commit region, a
    time-like edge when either of its rounds is. The endpoint of a committed
    edge that lies outside the commit region becomes an artificial defect.
    """
    if not tentative.edges:
        return CommitResult(frozenset(), frozenset(), 0)
    faults = tentative.fault_array()
    lo = graph.edge_round_lo[faults]
    hi = graph.edge_round_hi[faults]
    lo_in = (lo >= window.commit_start) & (lo < window.commit_end)
    hi_in = (hi >= window.commit_start) & (hi < window.commit_end)
    committed = faults[lo_in | hi_in]

    crossing = lo_in ^ hi_in
    artificial = set()
    if crossing.any():
        cross = faults[crossing]
        outer_is_a = ~lo_in[crossing]
        outer = np.where(outer_is_a, graph.edge_a[cross], graph.edge_b[cross])
        for v in outer.tolist():
            artificial ^= {v}

    return CommitResult(
        committed_edges=frozenset(committed.tolist()),
        artificial_defects=frozenset(artificial),
        logical_flip_partial=graph.logical_parity(committed),
    )


def window_layout(total_rounds: int, w: int) -> List[Window]:
    """Layer A and B windows covering ``total_rounds`` rounds, ordered by start

    A windows are 3w long and start every 4w rounds; the first commits its
    first 2w rounds, later ones their middle w. B windows fill the gaps
    between A commit regions and are committed in full. Whether the stream
    ends on a B window follows ``total_rounds mod 4w`` taken in (-2w, 2w]:
    a remainder in (-w, w] ends on B, anything else on an A window whose
    commit region is extended to the last round.
    """
    if total_rounds < 1:
        raise ParameterError("total_rounds must be >= 1")
    if w < 1:
        raise ParameterError("w must be >= 1")
    n = total_rounds
    smooth, rough = BoundaryKind.SMOOTH, BoundaryKind.ROUGH
    if n <= 3 * w:
        return [Window(0, n, 0, n, Layer.A, smooth, smooth, 0)]

    period = 4 * w
    m = n % period
    if m > 2 * w:
        m -= period
    cycles = (n - m) // period

    if -w < m <= w:
        num_a, num_b, ends_on_b = cycles, cycles, True
    elif m > w:
        num_a, num_b, ends_on_b = cycles + 1, cycles, False
    else:
        num_a, num_b, ends_on_b = cycles, cycles - 1, False

    windows: List[Window] = []
    for k in range(num_a):
        start = k * period
        last = not ends_on_b and k == num_a - 1
        end = n if last else start + 3 * w
        commit_start = 0 if k == 0 else start + w
        if last:
            commit_end = n
        elif k == 0:
            commit_end = 2 * w
        else:
            commit_end = start + 2 * w
        windows.append(Window(
            start, end, commit_start, commit_end, Layer.A,
            bottom=rough if k > 0 else smooth,
            top=smooth if last else rough,
            index=k,
        ))
    for k in range(num_b):
        start = k * period + 2 * w
        end = min(start + 3 * w, n)
        windows.append(Window(start, end, start, end, Layer.B, smooth, smooth, index=k))
    windows.sort(key=lambda win: win.start)
    return windows


def sliding_layout(total_rounds: int, cfg: WindowConfig) -> List[Window]:
    """Windows of n_com + n_buf rounds moving up by n_com; the last commits everything"""
    if total_rounds < 1:
        raise ParameterError("total_rounds must be >= 1")
    windows = []
    start = 0
    index = 0
    while True:
        end = start + cfg.n_com + cfg.n_buf
        if end >= total_rounds:
            windows.append(Window(
                start, total_rounds, start, total_rounds, Layer.SLIDING,
                BoundaryKind.SMOOTH, BoundaryKind.SMOOTH, index,
            ))
            return windows
        windows.append(Window(
            start, end, start, start + cfg.n_com, Layer.SLIDING,
            BoundaryKind.SMOOTH, BoundaryKind.ROUGH, index,
        ))
        start += cfg.n_com
        index += 1


def layout_manifest(windows: List[Window]) -> str:
    return "\n".join(win.manifest_line() for win in windows) + "\n"


def b_dependencies(windows: List[Window]) -> Dict[str, Tuple[str, ...]]:
    """For each B window, the A windows whose commit regions it abuts"""
    a_ids = {win.index for win in windows if win.layer == Layer.A}
    deps = {}
    for win in windows:
        if win.layer == Layer.B:
            deps[win.window_id] = tuple(f"A{k}" for k in (win.index, win.index + 1) if k in a_ids)
    return deps


class Residual:
    """Running defect set: input defects XOR the syndrome of committed edges"""

    def __init__(self, stream: SyndromeStream):
        self.graph = stream.graph
        self.bits = stream.flat.astype(np.uint8).copy()

    def defects_in(self, window: Window) -> DefectSet:
        ns = self.graph.n_stabilizers
        lo, hi = window.start * ns, window.end * ns
        ids = np.flatnonzero(self.bits[lo:hi]) + lo
        return DefectSet.of(ids.tolist(), window)

    def apply(self, commit: CommitResult):
        if commit.committed_edges:
            flips, _ = self.graph.syndrome_of(sorted(commit.committed_edges))
            self.bits ^= flips

    def check_empty(self):
        left = np.flatnonzero(self.bits)
        if left.size:
            raise IntegrityError(f"{left.size} defects left unresolved, first {left[:5].tolist()}")


def decode_window(graph: DecodingGraph, inner, window: Window, defects: DefectSet) -> CommitResult:
    """Decode one window and keep its commit region"""
    view = graph.window_view(window.start, window.end, window.bottom, window.top)
    tentative = inner.decode(view, defects)
    commit = split_commit(window, tentative, graph)
    logger.debug(
        "window %s: %d defects, %d tentative, %d committed, %d artificial",
        window.window_id, len(defects), len(tentative), len(commit.committed_edges),
        len(commit.artificial_defects),
    )
    return commit


def _merge(total: Correction, commit: CommitResult) -> Correction:
    overlap = total.edges & commit.committed_edges
    if overlap:
        raise IntegrityError(f"commit regions overlap on faults {sorted(overlap)[:5]}")
    return Correction(total.edges | commit.committed_edges, total.logical_flip ^ commit.logical_flip_partial)


def global_decode(stream: SyndromeStream, inner) -> Correction:
    """Decode the full history as one window with smooth initial and final faces"""
    graph = stream.graph
    window = Window(0, stream.rounds, 0, stream.rounds, Layer.A, BoundaryKind.SMOOTH, BoundaryKind.SMOOTH)
    residual = Residual(stream)
    commit = decode_window(graph, inner, window, residual.defects_in(window))
    residual.apply(commit)
    residual.check_empty()
    return commit.as_correction()


def sliding_window_decode(stream: SyndromeStream, cfg: WindowConfig, inner) -> Correction:
    graph = stream.graph
    cfg.warn_if_unsafe(graph.distance)
    residual = Residual(stream)
    total = Correction()
    for window in sliding_layout(stream.rounds, cfg):
        commit = decode_window(graph, inner, window, residual.defects_in(window))
        residual.apply(commit)
        total = _merge(total, commit)
    residual.check_empty()
    return total


def parallel_window_decode(stream: SyndromeStream, cfg: WindowConfig, inner, executor=None) -> Correction:
    """Two-layer parallel window decoding

    Layer A windows are decoded independently (concurrently when an executor
    is given); their commits leave artificial defects in the gaps, which the
    layer B windows then resolve.
    """
    from .executors import SerialExecutor

    graph = stream.graph
    cfg.warn_if_unsafe(graph.distance)
    executor = executor or SerialExecutor()
    windows = window_layout(stream.rounds, cfg.w)
    residual = Residual(stream)
    total = Correction()

    for layer in (Layer.A, Layer.B):
        batch = [win for win in windows if win.layer == layer]
        tasks = [(win, residual.defects_in(win)) for win in batch]
        for commit in executor.map_windows(graph, inner, tasks):
            residual.apply(commit)
            total = _merge(total, commit)
    residual.check_empty()
    return total
