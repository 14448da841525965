"""
Pipeline Scheduler Module
Streams windows through DA/DB worker blocks, measures decoding throughput
and checks for syndrome backlog
"""
import logging
import math
import queue
import time
from typing import Dict, List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from .decoding_graph import CodeParams, build_graph, extract_syndrome, sample_error, shot_seed
from .errors import ContractViolation, IntegrityError, ParameterError, PipelineError
from .executors import SerialExecutor, WindowOutcome, make_executor
from .inner_decoders import Correction, DefectSet, UnionFindDecoder
from .resources import DEFAULT_TAU_RD, TimingModel
from .stream_source import InMemoryStreamSource
from .windowing import CommitResult, Layer, Window, b_dependencies, window_layout

logger = logging.getLogger(__name__)


class PipelinePlan(BaseModel):
    """n pairs of DA/DB blocks (2n workers); window k of a layer runs on block k mod n"""
    model_config = ConfigDict(frozen=True)

    n: int = Field(ge=1)
    w: Optional[int] = Field(default=None, ge=1)

    @property
    def n_workers(self) -> int:
        return 2 * self.n

    def block_of(self, window: Window) -> str:
        return f"D{window.layer.value}{window.index % self.n}"

    def block_dependencies(self) -> Dict[str, Tuple[str, str]]:
        """DB_i waits for DA_i and DA_(i+1 mod n)"""
        return {f"DB{i}": (f"DA{i}", f"DA{(i + 1) % self.n}") for i in range(self.n)}

    @classmethod
    def for_workers(cls, n_workers: int, w: Optional[int] = None) -> "PipelinePlan":
        return cls(n=max(1, math.ceil(n_workers / 2)), w=w)


class ThroughputReport(BaseModel):
    family: str
    d: int
    p: float
    rounds: int
    workers: int
    shots: int = 1
    r_dec: float
    r_dec_stderr: float = 0.0
    r_proc: float
    r_gen: Optional[float] = None
    f: Optional[float] = None
    wall_time: float
    tau_w_mean: float
    tau0_est: float
    tau_w_samples: List[float] = Field(default_factory=list)
    overhead_limited: bool = False


class BacklogStatus(BaseModel):
    f: float
    stable: bool
    k: int
    slowdown: float


class PipelineSimulation(BaseModel):
    """Synthetic-clock run of the block pipeline"""
    total_rounds: int
    w: int
    n: int
    steady_period: float
    r_dec: float
    f: float
    stable: bool
    makespan: float
    lags: Dict[str, float]
    max_lag: float


def check_backlog(r_gen: float, r_proc: float, k: int, c: float = 1.0) -> BacklogStatus:
    """Stable iff f = r_gen / r_proc <= 1, otherwise a c * f**k slowdown over k T-layers"""
    if r_gen <= 0 or r_proc <= 0:
        raise ParameterError("rates must be positive")
    if k < 0:
        raise ParameterError("T-depth must be non-negative")
    f = r_gen / r_proc
    stable = f <= 1.0 + 1e-12
    return BacklogStatus(f=f, stable=stable, k=k, slowdown=1.0 if stable else c * f ** k)


class _PipelineRun:
    """Single-owner aggregator driving one pass of the block pipeline"""

    def __init__(self, source, plan: PipelinePlan, inner, executor):
        self.source = source
        self.graph = source.graph
        self.plan = plan
        self.inner = inner
        self.executor = executor
        w = plan.w or self.graph.distance
        self.windows = window_layout(source.total_rounds, w)
        self.deps = b_dependencies(self.windows)
        self.pending_a = [win for win in self.windows if win.layer == Layer.A]
        self.pending_b = [win for win in self.windows if win.layer == Layer.B]
        self.busy: Dict[str, bool] = {}
        self.a_commits: Dict[str, CommitResult] = {}
        self.events: "queue.Queue" = queue.Queue()
        self.in_flight = 0
        self.total = Correction()
        self.outcomes: List[WindowOutcome] = []

    def _defects(self, window: Window, artificial: Tuple[int, ...] = ()) -> DefectSet:
        ns = self.graph.n_stabilizers
        lo = window.start * ns
        bits = self.source.defects(window.start, window.end).astype(np.uint8).copy()
        for v in artificial:
            if lo <= v < window.end * ns:
                bits[v - lo] ^= 1
        return DefectSet.of((np.flatnonzero(bits) + lo).tolist(), window)

    def _dispatch(self, window: Window, defects: DefectSet):
        block = self.plan.block_of(window)
        self.busy[block] = True
        self.in_flight += 1
        self.executor.submit(
            self.graph, self.inner, window, defects,
            callback=lambda outcome: self.events.put(("done", outcome)),
            error_callback=lambda exc: self.events.put(("error", exc)),
        )

    def _check_dependencies(self, window: Window):
        missing = [dep for dep in self.deps[window.window_id] if dep not in self.a_commits]
        if missing:
            raise ContractViolation(f"{window.window_id} dispatched before {missing} committed")

    def _dispatch_ready(self) -> Optional[int]:
        """Dispatch what can run now; returns the round count still awaited, if any"""
        awaited = None
        available = self.source.rounds_available()
        while self.pending_a:
            win = self.pending_a[0]
            if self.busy.get(self.plan.block_of(win)):
                break
            if available < win.end:
                awaited = win.end
                break
            self.pending_a.pop(0)
            self._dispatch(win, self._defects(win))
        while self.pending_b:
            win = self.pending_b[0]
            if self.busy.get(self.plan.block_of(win)):
                break
            if any(dep not in self.a_commits for dep in self.deps[win.window_id]):
                break
            if available < win.end:
                awaited = win.end if awaited is None else min(awaited, win.end)
                break
            self._check_dependencies(win)
            artificial = []
            for dep in self.deps[win.window_id]:
                artificial.extend(self.a_commits[dep].artificial_defects)
            self.pending_b.pop(0)
            self._dispatch(win, self._defects(win, tuple(artificial)))
        return awaited

    def _collect(self, outcome: WindowOutcome):
        window = outcome.window
        self.busy[self.plan.block_of(window)] = False
        self.in_flight -= 1
        commit = outcome.commit
        if window.layer == Layer.A:
            self.a_commits[window.window_id] = commit
        overlap = self.total.edges & commit.committed_edges
        if overlap:
            raise IntegrityError(f"commit regions overlap on faults {sorted(overlap)[:5]}")
        self.total = Correction(
            self.total.edges | commit.committed_edges,
            self.total.logical_flip ^ commit.logical_flip_partial,
        )
        self.outcomes.append(outcome)

    def run(self) -> Correction:
        while self.pending_a or self.pending_b or self.in_flight:
            awaited = self._dispatch_ready()
            if self.in_flight == 0:
                if awaited is None:
                    raise PipelineError("pipeline stalled with windows left and nothing in flight")
                time.sleep(self.source.seconds_until(awaited))
                continue
            timeout = None if awaited is None else max(self.source.seconds_until(awaited), 1e-4)
            try:
                kind, payload = self.events.get(timeout=timeout)
            except queue.Empty:
                continue
            if kind == "error":
                raise PipelineError(str(payload)) from payload
            self._collect(payload)
        self._check_valid()
        return self.total

    def _check_valid(self):
        flips, _ = self.graph.syndrome_of(sorted(self.total.edges))
        expected = self.source.defects(0, self.source.total_rounds)
        if np.any(flips != expected):
            raise IntegrityError("pipeline correction does not reproduce the defect set")


def _report(graph, rounds: int, workers: int, r_dec_samples: List[float], wall_time: float,
            outcomes: List[WindowOutcome], tau_rd: Optional[float],
            warn_overhead: bool = True) -> ThroughputReport:
    samples = np.asarray(r_dec_samples, dtype=float)
    r_dec = float(samples.mean())
    stderr = float(samples.std(ddof=1) / math.sqrt(len(samples))) if len(samples) > 1 else 0.0
    bits = graph.syndrome_bits_per_round
    r_proc = r_dec * bits
    tau_w = [o.decode_time for o in outcomes]
    latencies = [o.dispatch_latency for o in outcomes]
    tau_w_mean = float(np.mean(tau_w)) if tau_w else 0.0
    tau0 = float(np.mean(latencies)) if latencies else 0.0
    overhead_limited = tau0 * workers > tau_w_mean
    if overhead_limited and warn_overhead:
        logger.warning(
            "dispatch overhead %.3g s x %d workers exceeds window time %.3g s; workers cannot all be busy",
            tau0, workers, tau_w_mean,
        )
    r_gen = bits / (tau_rd or DEFAULT_TAU_RD)
    return ThroughputReport(
        family=graph.family.value, d=graph.distance, p=graph.params.physical_error_rate,
        rounds=rounds, workers=workers, shots=len(samples), r_dec=r_dec, r_dec_stderr=stderr,
        r_proc=r_proc, r_gen=r_gen, f=(r_gen / r_proc if r_proc > 0 else None),
        wall_time=wall_time, tau_w_mean=tau_w_mean, tau0_est=tau0,
        tau_w_samples=tau_w, overhead_limited=overhead_limited,
    )


def run_pipeline(source, plan: PipelinePlan, inner=None, executor=None,
                 tau_rd: Optional[float] = None,
                 warn_overhead: bool = True) -> Tuple[Correction, ThroughputReport]:
    """Decode a stream with the DA/DB block pipeline

    A windows are dispatched as soon as their rounds have arrived and their
    block is free; a B window once both neighbouring A windows have
    committed, with their artificial defects added to its own. Committed
    edges from all blocks are merged into one correction.

    r_gen and f use tau_rd, else the source's round period, else
    DEFAULT_TAU_RD.
    """
    if not hasattr(source, "rounds_available"):
        source = InMemoryStreamSource(source)
    inner = inner or UnionFindDecoder()
    executor = executor or SerialExecutor()
    tau_rd = tau_rd if tau_rd is not None else getattr(source, "tau_rd", None)

    started = time.perf_counter()
    pipeline = _PipelineRun(source, plan, inner, executor)
    correction = pipeline.run()
    wall_time = time.perf_counter() - started

    rounds = source.total_rounds
    report = _report(
        source.graph, rounds, getattr(executor, "n_workers", 1),
        [rounds / wall_time if wall_time > 0 else float("inf")],
        wall_time, pipeline.outcomes, tau_rd, warn_overhead,
    )
    return correction, report


def measure_throughput(params: CodeParams, n_workers: int, shots: int, seed: int = 0,
                       inner=None, w: Optional[int] = None,
                       tau_rd: Optional[float] = None) -> ThroughputReport:
    """Mean decoding frequency over ``shots`` streams of 8(N+1)d rounds"""
    if shots < 1:
        raise ParameterError("shots must be >= 1")
    rounds = 8 * (n_workers + 1) * params.distance
    params = params.model_copy(update={"rounds": rounds})
    graph = build_graph(params)
    inner = inner or UnionFindDecoder()
    plan = PipelinePlan.for_workers(n_workers, w)
    logger.info("throughput d=%d workers=%d rounds=%d shots=%d", params.distance, n_workers, rounds, shots)

    samples: List[float] = []
    tau_w: List[float] = []
    tau0: List[float] = []
    wall = 0.0
    with make_executor(n_workers) as executor:
        # warm-up shot so worker graph caches exist before timing starts
        warm = extract_syndrome(graph, sample_error(graph, params.p, shot_seed(seed, shots)))
        run_pipeline(warm, plan, inner, executor, warn_overhead=False)
        for shot in range(shots):
            err = sample_error(graph, params.p, shot_seed(seed, shot))
            _, report = run_pipeline(extract_syndrome(graph, err), plan, inner, executor, warn_overhead=False)
            samples.append(report.r_dec)
            tau_w.extend(report.tau_w_samples)
            tau0.append(report.tau0_est)
            wall += report.wall_time

    report = _report(graph, rounds, n_workers, samples, wall, [], tau_rd, warn_overhead=False)
    tau_w_mean = float(np.mean(tau_w)) if tau_w else 0.0
    tau0_est = float(np.mean(tau0))
    overhead_limited = tau0_est * n_workers > tau_w_mean
    if overhead_limited:
        logger.warning(
            "dispatch overhead %.3g s x %d workers exceeds window time %.3g s; workers cannot all be busy",
            tau0_est, n_workers, tau_w_mean,
        )
    return report.model_copy(update={
        "tau_w_mean": tau_w_mean, "tau0_est": tau0_est,
        "tau_w_samples": tau_w, "overhead_limited": overhead_limited,
    })


def simulate_pipeline(total_rounds: int, w: int, n: int, timing: TimingModel) -> PipelineSimulation:
    """Discrete-event model of the pipeline on a synthetic clock

    Round r arrives at (r + 1) * tau_rd, a single dispatcher spends tau_0 per
    window, every window takes tau_W on its block. Lags are measured from
    the arrival of a window's last round to its completion.
    """
    plan = PipelinePlan(n=n, w=w)
    windows = window_layout(total_rounds, w)
    deps = b_dependencies(windows)
    finish: Dict[str, float] = {}
    block_free: Dict[str, float] = {}
    dispatcher = 0.0
    remaining = list(windows)

    while remaining:
        best = None
        for pos, win in enumerate(remaining):
            needed = deps.get(win.window_id, ())
            if any(dep not in finish for dep in needed):
                continue
            earliest = max(
                [win.end * timing.tau_rd, block_free.get(plan.block_of(win), 0.0)]
                + [finish[dep] for dep in needed]
            )
            if best is None or earliest < best[0]:
                best = (earliest, pos)
        earliest, pos = best
        win = remaining.pop(pos)
        dispatcher = max(dispatcher, earliest) + timing.tau_0
        done = dispatcher + timing.tau_W
        finish[win.window_id] = done
        block_free[plan.block_of(win)] = done

    lags = {win.window_id: finish[win.window_id] - win.end * timing.tau_rd for win in windows}
    cycle = 4 * w * timing.tau_rd
    steady = max(cycle, (timing.tau_W + timing.tau_0) / n, 2 * timing.tau_0)
    return PipelineSimulation(
        total_rounds=total_rounds, w=w, n=n, steady_period=steady,
        r_dec=4 * w / steady, f=steady / cycle, stable=steady <= cycle * (1 + 1e-9),
        makespan=max(finish.values()), lags=lags, max_lag=max(lags.values()),
    )
