import numpy as np
import pytest
from pydantic import ValidationError

from modules.errors import ParameterError
from modules.resources import (
    TimingModel,
    auto_correction_overhead,
    min_workers,
    plan_from_clock,
    response_time,
    total_response_time,
)
from modules.windowing import WindowConfig


@pytest.fixture
def cfg():
    return WindowConfig.parallel(10)


@pytest.fixture
def timing():
    return TimingModel(tau_rd=1e-6, tau_W=2e-4)


class TestMinWorkers:
    def test_exact_ratio(self, cfg, timing):
        # 2 tau_W / ((n_com + n_W) tau_rd) = 4e-4 / 4e-5
        assert min_workers(cfg, timing) == 10

    def test_rounds_up(self, cfg):
        assert min_workers(cfg, TimingModel(tau_rd=1e-6, tau_W=2.1e-4)) == 11

    def test_never_below_one(self, cfg):
        assert min_workers(cfg, TimingModel(tau_rd=1e-6, tau_W=1e-9)) == 1

    def test_sliding_span(self):
        sliding = WindowConfig.sliding(5, 5)
        assert min_workers(sliding, TimingModel(tau_rd=1e-6, tau_W=1.5e-5)) == 2


class TestResponseTime:
    def test_defaults(self, cfg, timing):
        plan = response_time(cfg, timing)
        assert plan.N_par == 10
        assert plan.n_W == 30
        assert plan.n_lag == 400
        assert plan.tau == pytest.approx(4e-4)
        assert plan.tau_clock == pytest.approx(4.1e-4)
        assert plan.aux_qubits == 40

    def test_explicit_workers_and_distance(self, cfg, timing):
        plan = response_time(cfg, timing, n_par=3, d=7)
        assert plan.n_lag == 120
        assert plan.d == 7
        assert plan.aux_qubits == 18

    def test_rejects_zero_workers(self, cfg, timing):
        with pytest.raises(ParameterError):
            response_time(cfg, timing, n_par=0)

    def test_total_is_linear_in_depth(self, cfg, timing):
        plan = response_time(cfg, timing)
        assert total_response_time(plan, 0) == 0
        assert total_response_time(plan, 5) == pytest.approx(5 * plan.tau)
        with pytest.raises(ParameterError):
            total_response_time(plan, -1)


class TestAutoCorrection:
    def test_ten_cycle_clock(self):
        d, tau_rd = 25, 1e-6
        overhead = plan_from_clock(10 * d * tau_rd, d, tau_rd, logical_qubits=100)
        assert overhead.aux_qubits == 9
        assert overhead.time_overhead == pytest.approx(10.0)
        assert overhead.qubit_overhead == pytest.approx(1.09)

    def test_no_lag_needs_no_auxiliary_qubits(self):
        overhead = auto_correction_overhead(0.0, 5, 1e-6, 10)
        assert overhead.aux_qubits == 0
        assert overhead.time_overhead == 1.0

    def test_partial_cycle_rounds_up(self):
        assert auto_correction_overhead(2.5e-6, 2, 1e-6, 10).aux_qubits == 2

    def test_clock_shorter_than_cycle(self):
        with pytest.raises(ParameterError):
            plan_from_clock(1e-6, 5, 1e-6, 10)

    @pytest.mark.parametrize("args", [(-1.0, 5, 1e-6, 1), (1.0, 0, 1e-6, 1), (1.0, 5, 0.0, 1), (1.0, 5, 1e-6, 0)])
    def test_rejects_bad_inputs(self, args):
        with pytest.raises(ParameterError):
            auto_correction_overhead(*args)


def test_timing_model_rejects_non_positive():
    with pytest.raises(ValidationError):
        TimingModel(tau_rd=0, tau_W=1e-6)
    with pytest.raises(ValidationError):
        TimingModel(tau_rd=1e-6, tau_W=1e-6, tau_0=0)


CONFIGS = [WindowConfig.parallel(w) for w in range(1, 26)] + [
    WindowConfig.sliding(n_com, n_buf) for n_com in (1, 3, 5, 9) for n_buf in (0, 2, 5, 9)
]


def random_draws(n, seed=2024):
    """(cfg, timing) pairs with log-uniform round and window times"""
    rng = np.random.default_rng(seed)
    picks = rng.integers(len(CONFIGS), size=n)
    tau_rd = 10.0 ** rng.uniform(-7, -5, size=n)
    tau_W = 10.0 ** rng.uniform(-7, -2, size=n)
    for i in range(n):
        yield CONFIGS[picks[i]], TimingModel(tau_rd=float(tau_rd[i]), tau_W=float(tau_W[i]))


def span(cfg):
    return cfg.n_com + cfg.n_w


class TestResourceProperties:
    def test_min_workers_keep_up_with_generation(self):
        for cfg, t in random_draws(10_000):
            n = min_workers(cfg, t)
            assert n >= 1
            assert n * span(cfg) * t.tau_rd >= 2 * t.tau_W * (1 - 1e-9)
            # one fewer worker falls behind
            if n > 1:
                assert (n - 1) * span(cfg) * t.tau_rd < 2 * t.tau_W

    def test_min_workers_monotone_in_timings(self):
        rng = np.random.default_rng(7)
        for cfg, t in random_draws(2_000, seed=8):
            factor = 1 + float(rng.uniform(0, 3))
            slower_windows = TimingModel(tau_rd=t.tau_rd, tau_W=t.tau_W * factor)
            slower_rounds = TimingModel(tau_rd=t.tau_rd * factor, tau_W=t.tau_W)
            assert min_workers(cfg, slower_windows) >= min_workers(cfg, t)
            assert min_workers(cfg, slower_rounds) <= min_workers(cfg, t)

    def test_response_time_bounds(self):
        for cfg, t in random_draws(2_000, seed=9):
            plan = response_time(cfg, t)
            assert plan.tau == pytest.approx(plan.N_par * span(cfg) * t.tau_rd)
            if plan.N_par > 1:
                assert plan.tau >= 2 * t.tau_W * (1 - 1e-9)
            assert plan.tau < (2 * t.tau_W + span(cfg) * t.tau_rd) * (1 + 1e-9)

    @pytest.mark.parametrize("cfg", [WindowConfig.parallel(3), WindowConfig.parallel(11), WindowConfig.sliding(5, 5)])
    def test_fast_windows_leave_one_window_of_lag(self, cfg):
        for tau_W in (1e-9, 1e-12, 1e-15):
            plan = response_time(cfg, TimingModel(tau_rd=1e-6, tau_W=tau_W))
            assert plan.N_par == 1
            assert plan.tau == pytest.approx(span(cfg) * 1e-6)
