import dataclasses
import logging

import numpy as np
import pytest

from modules.decoding_graph import CodeFamily, CodeParams, build_graph, extract_syndrome, sample_error, shot_seed
from modules.errors import ParameterError, PipelineError
from modules.executors import SerialExecutor, WorkerPool, make_executor
from modules.inner_decoders import UnionFindDecoder
from modules.resources import DEFAULT_TAU_RD, TimingModel
from modules.scheduler import (
    PipelinePlan,
    check_backlog,
    measure_throughput,
    run_pipeline,
    simulate_pipeline,
)
from modules.stream_source import InMemoryStreamSource, RateLimitedStreamSource
from modules.windowing import WindowConfig, parallel_window_decode, window_layout


def streams(family=CodeFamily.ROTATED_PLANAR, d=3, rounds=40, p=0.03, shots=5, seed=5):
    g = build_graph(CodeParams(family=family, distance=d, rounds=rounds, physical_error_rate=p))
    return [extract_syndrome(g, sample_error(g, p, seed=shot_seed(seed, s))) for s in range(shots)]


class FakeClock:
    def __init__(self):
        self.now = 100.0

    def __call__(self):
        return self.now


class FailingDecoder:
    name = "failing"

    def decode(self, view, defects):
        raise RuntimeError("boom")


class LaggingExecutor(SerialExecutor):
    """Reports every window as queued for ten seconds before it started"""

    def submit(self, graph, inner, window, defects, callback, error_callback=None):
        def delayed(outcome):
            callback(dataclasses.replace(outcome, submitted_at=outcome.started_at - 10.0))

        super().submit(graph, inner, window, defects, delayed, error_callback)


def overhead_warnings(caplog):
    return [r for r in caplog.records if "dispatch overhead" in r.getMessage()]


class TestPipelinePlan:
    def test_blocks(self):
        plan = PipelinePlan(n=3, w=3)
        assert plan.n_workers == 6
        windows = {win.window_id: win for win in window_layout(60, 3)}
        assert plan.block_of(windows["A0"]) == "DA0"
        assert plan.block_of(windows["A4"]) == "DA1"
        assert plan.block_of(windows["B2"]) == "DB2"

    def test_block_dependencies_wrap(self):
        deps = PipelinePlan(n=3).block_dependencies()
        assert deps == {"DB0": ("DA0", "DA1"), "DB1": ("DA1", "DA2"), "DB2": ("DA2", "DA0")}

    @pytest.mark.parametrize("workers,n", [(1, 1), (2, 1), (5, 3), (8, 4)])
    def test_for_workers(self, workers, n):
        assert PipelinePlan.for_workers(workers).n == n


class TestRunPipeline:
    @pytest.mark.parametrize("n", [1, 2, 3])
    def test_matches_parallel_decoding(self, n):
        uf = UnionFindDecoder()
        for stream in streams():
            correction, report = run_pipeline(stream, PipelinePlan(n=n, w=3), uf)
            assert correction == parallel_window_decode(stream, WindowConfig.parallel(3), uf)
            assert report.rounds == 40
            assert report.r_dec > 0
            assert len(report.tau_w_samples) == len(window_layout(40, 3))

    def test_matches_parallel_decoding_on_worker_pool(self):
        uf = UnionFindDecoder()
        with WorkerPool(2) as pool:
            for stream in streams(CodeFamily.REPETITION, d=5, rounds=50, p=0.05, shots=3):
                correction, report = run_pipeline(stream, PipelinePlan(n=1, w=5), uf, pool)
                assert correction == parallel_window_decode(stream, WindowConfig.parallel(5), uf)
                assert report.workers == 2

    def test_rate_limited_source(self):
        stream = streams(rounds=24, shots=1)[0]
        source = RateLimitedStreamSource(stream, tau_rd=1e-4)
        correction, report = run_pipeline(source, PipelinePlan(n=1, w=3))
        assert correction == parallel_window_decode(stream, WindowConfig.parallel(3), UnionFindDecoder())
        assert report.r_gen == pytest.approx(stream.graph.syndrome_bits_per_round / 1e-4)
        assert report.f == pytest.approx(report.r_gen / report.r_proc)
        # the last round only arrives after 24 * tau_rd
        assert report.wall_time >= 24 * 1e-4 * 0.9

    def test_decoder_failure_becomes_pipeline_error(self):
        stream = streams(shots=1)[0]
        with pytest.raises(PipelineError, match="boom"):
            run_pipeline(stream, PipelinePlan(n=1, w=3), FailingDecoder())

    def test_serial_executor_without_error_callback_raises(self):
        stream = streams(shots=1)[0]
        window = window_layout(40, 3)[0]
        with pytest.raises(RuntimeError):
            SerialExecutor().submit(stream.graph, FailingDecoder(), window, None, callback=print)


class TestStreamSources:
    def test_in_memory(self):
        stream = streams(rounds=10, shots=1)[0]
        source = InMemoryStreamSource(stream)
        assert source.rounds_available() == 10
        assert source.seconds_until(10) == 0.0
        ns = stream.graph.n_stabilizers
        assert np.array_equal(source.defects(2, 4), stream.flat[2 * ns:4 * ns])

    def test_rate_limited_releases_rounds_over_time(self):
        clock = FakeClock()
        source = RateLimitedStreamSource(streams(rounds=10, shots=1)[0], tau_rd=0.5, clock=clock)
        source.start()
        assert source.rounds_available() == 0
        assert source.seconds_until(3) == pytest.approx(1.5)
        clock.now += 1.6
        assert source.rounds_available() == 3
        assert source.seconds_until(3) == 0.0
        clock.now += 100
        assert source.rounds_available() == 10

    def test_rate_limited_rejects_bad_period(self):
        with pytest.raises(ValueError):
            RateLimitedStreamSource(streams(rounds=4, shots=1)[0], tau_rd=0)


class TestExecutors:
    def test_make_executor(self):
        assert isinstance(make_executor(1), SerialExecutor)
        with make_executor(2) as pool:
            assert isinstance(pool, WorkerPool)
            assert pool.n_workers == 2

    def test_pool_needs_a_process(self):
        with pytest.raises(PipelineError):
            WorkerPool(0)

    def test_pool_map_matches_serial(self):
        stream = streams(rounds=24, shots=1)[0]
        uf = UnionFindDecoder()
        with WorkerPool(2) as pool:
            a = parallel_window_decode(stream, WindowConfig.parallel(3), uf, pool)
        assert a == parallel_window_decode(stream, WindowConfig.parallel(3), uf)


class TestBacklog:
    def test_stable(self):
        status = check_backlog(1.0e6, 2.0e6, k=10)
        assert status.f == pytest.approx(0.5)
        assert status.stable
        assert status.slowdown == 1.0

    def test_unstable_slowdown_grows_with_depth(self):
        status = check_backlog(2.0e6, 1.0e6, k=10)
        assert not status.stable
        assert status.slowdown == pytest.approx(2.0 ** 10)
        assert check_backlog(2.0e6, 1.0e6, k=20).slowdown > status.slowdown

    def test_equal_rates_are_stable(self):
        assert check_backlog(1.0e6, 1.0e6, k=5).stable

    @pytest.mark.parametrize("r_gen,r_proc,k", [(0, 1, 1), (1, -1, 1), (1, 1, -1)])
    def test_rejects_bad_input(self, r_gen, r_proc, k):
        with pytest.raises(ParameterError):
            check_backlog(r_gen, r_proc, k)


class TestSimulatePipeline:
    def test_keeps_up_with_generation(self):
        timing = TimingModel(tau_rd=1e-6, tau_W=5e-6, tau_0=1e-7)
        sim = simulate_pipeline(48, 3, 1, timing)
        assert sim.stable
        assert sim.f == pytest.approx(1.0)
        assert sim.r_dec == pytest.approx(1e6)
        for window_id in ("A0", "A1", "A2", "A3"):
            assert sim.lags[window_id] == pytest.approx(5.1e-6)

    def test_slow_windows_build_a_backlog(self):
        timing = TimingModel(tau_rd=1e-6, tau_W=50e-6, tau_0=1e-7)
        sim = simulate_pipeline(48, 3, 1, timing)
        assert not sim.stable
        assert sim.f > 1
        assert sim.lags["A3"] > sim.lags["A1"] > sim.lags["A0"]

    def test_more_blocks_restore_stability(self):
        timing = TimingModel(tau_rd=1e-6, tau_W=50e-6, tau_0=1e-7)
        assert simulate_pipeline(480, 3, 5, timing).stable

    def test_every_window_finishes_after_its_data(self):
        timing = TimingModel(tau_rd=1e-6, tau_W=7e-6, tau_0=1e-7)
        sim = simulate_pipeline(100, 4, 2, timing)
        assert len(sim.lags) == len(window_layout(100, 4))
        assert min(sim.lags.values()) >= timing.tau_W
        assert sim.makespan >= 100 * timing.tau_rd


def test_measure_throughput_single_shot():
    params = CodeParams(family=CodeFamily.ROTATED_PLANAR, distance=3, rounds=1, physical_error_rate=0.0)
    report = measure_throughput(params, n_workers=1, shots=1)
    assert report.rounds == 8 * 2 * 3
    assert report.workers == 1
    assert report.shots == 1
    assert report.r_dec > 0
    assert report.r_proc == pytest.approx(report.r_dec * 8)
    assert report.tau_w_samples
    assert report.r_gen == pytest.approx(8 / DEFAULT_TAU_RD)
    assert report.f == pytest.approx(report.r_gen / report.r_proc)


def test_measure_throughput_rejects_zero_shots():
    params = CodeParams(distance=3, rounds=1)
    with pytest.raises(ParameterError):
        measure_throughput(params, n_workers=1, shots=0)


def test_pipeline_reports_f_without_round_time():
    stream = streams(shots=1, p=0.0)[0]
    correction, report = run_pipeline(stream, PipelinePlan(n=1, w=3))
    assert correction == parallel_window_decode(stream, WindowConfig.parallel(3), UnionFindDecoder())
    assert report.r_gen == pytest.approx(stream.graph.syndrome_bits_per_round / DEFAULT_TAU_RD)
    assert report.f is not None


def test_pipeline_warns_when_dispatch_dominates(caplog):
    stream = streams(shots=1)[0]
    with caplog.at_level(logging.WARNING, logger="modules.scheduler"):
        _, report = run_pipeline(stream, PipelinePlan(n=1, w=3), executor=LaggingExecutor())
    assert report.overhead_limited
    assert len(overhead_warnings(caplog)) == 1


def test_measure_throughput_warns_once(caplog, monkeypatch):
    monkeypatch.setattr("modules.scheduler.make_executor", lambda n: LaggingExecutor())
    params = CodeParams(family=CodeFamily.REPETITION, distance=3, rounds=1, physical_error_rate=0.02)
    with caplog.at_level(logging.WARNING, logger="modules.scheduler"):
        report = measure_throughput(params, n_workers=1, shots=4)
    assert report.overhead_limited
    assert report.tau0_est >= 10.0
    assert len(overhead_warnings(caplog)) == 1


@pytest.mark.slow
@pytest.mark.parametrize("d", [9, 13])
def test_decoding_frequency_scales_with_workers(d):
    params = CodeParams(family=CodeFamily.ROTATED_PLANAR, distance=d, rounds=1, physical_error_rate=0.02)
    r_dec = {n: measure_throughput(params, n_workers=n, shots=2).r_dec for n in (1, 2, 4, 8)}
    assert r_dec[1] <= r_dec[2] <= r_dec[4] <= r_dec[8]
    assert r_dec[8] >= 4 * r_dec[1]


@pytest.mark.slow
def test_decoding_frequency_falls_with_distance():
    r_dec = [
        measure_throughput(
            CodeParams(family=CodeFamily.ROTATED_PLANAR, distance=d, rounds=1, physical_error_rate=0.02),
            n_workers=2, shots=2,
        ).r_dec
        for d in (5, 9, 13, 17)
    ]
    assert all(a > b for a, b in zip(r_dec, r_dec[1:]))
