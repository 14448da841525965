"""
Resource Planning Module
Worker counts, response times and auxiliary-qubit overheads of parallel
window decoding
"""
import logging
import math
from typing import Optional

from pydantic import BaseModel, ConfigDict, Field

from .errors import ParameterError

logger = logging.getLogger(__name__)

# superconducting round time, used for r_gen when no round time is given
DEFAULT_TAU_RD = 1e-6


class TimingModel(BaseModel):
    """Seconds per QEC round, per window decode and per task dispatch"""
    model_config = ConfigDict(frozen=True)

    tau_rd: float = Field(gt=0)
    tau_W: float = Field(gt=0)
    tau_0: float = Field(default=1e-9, gt=0)


class ResourcePlan(BaseModel):
    d: int
    n_com: int
    n_W: int
    N_par: int
    n_lag: int
    tau: float
    tau_clock: float
    aux_qubits: int


class AutoCorrectionOverhead(BaseModel):
    """Trade between slowing the logical clock and adding auxiliary logical qubits"""
    tau: float
    tau_clock: float
    time_overhead: float
    logical_qubits: int
    aux_qubits: int
    qubit_overhead: float


def _window_span(cfg) -> int:
    return cfg.n_com + cfg.n_w


def min_workers(cfg, t: TimingModel) -> int:
    """Least worker count with N (n_com + n_W) tau_rd >= 2 tau_W, at least 1"""
    ratio = 2 * t.tau_W / (_window_span(cfg) * t.tau_rd)
    # tolerance keeps exact ratios such as 400/40 from rounding up
    return max(1, math.ceil(ratio - 1e-9))


def response_time(cfg, t: TimingModel, n_par: Optional[int] = None,
                  d: Optional[int] = None) -> ResourcePlan:
    """Decode lag, response time and logical clock time for a window config

    Args:
        cfg: WindowConfig
        t: TimingModel
        n_par: worker count; the minimum from min_workers when omitted
        d: code distance, defaults to the window unit w

    Returns:
        ResourcePlan with n_lag = N (n_com + n_W), tau = n_lag tau_rd,
        tau_clock = d tau_rd + tau and ceil(tau / (d tau_rd)) auxiliary qubits
    """
    d = d or cfg.w
    if d < 1:
        raise ParameterError("distance must be positive")
    workers = n_par if n_par is not None else min_workers(cfg, t)
    if workers < 1:
        raise ParameterError("N_par must be >= 1")
    n_lag = workers * _window_span(cfg)
    tau = n_lag * t.tau_rd
    return ResourcePlan(
        d=d, n_com=cfg.n_com, n_W=cfg.n_w, N_par=workers, n_lag=n_lag,
        tau=tau, tau_clock=d * t.tau_rd + tau, aux_qubits=-(-n_lag // d),
    )


def auto_correction_overhead(tau: float, d: int, tau_rd: float, logical_qubits: int) -> AutoCorrectionOverhead:
    if tau < 0 or d < 1 or tau_rd <= 0 or logical_qubits < 1:
        raise ParameterError("invalid overhead inputs")
    step = d * tau_rd
    aux = math.ceil(round(tau / step, 9))
    return AutoCorrectionOverhead(
        tau=tau,
        tau_clock=step + tau,
        time_overhead=(step + tau) / step,
        logical_qubits=logical_qubits,
        aux_qubits=aux,
        qubit_overhead=(logical_qubits + aux) / logical_qubits,
    )


def plan_from_clock(tau_clock: float, d: int, tau_rd: float, logical_qubits: int) -> AutoCorrectionOverhead:
    """Overheads for a logical clock time, e.g. 10 d tau_rd gives 9 auxiliary qubits"""
    tau = tau_clock - d * tau_rd
    if tau < 0:
        raise ParameterError("logical clock time shorter than one code cycle")
    return auto_correction_overhead(tau, d, tau_rd, logical_qubits)


def total_response_time(plan: ResourcePlan, k: int) -> float:
    """Response time over k T-layers; linear in k"""
    if k < 0:
        raise ParameterError("k must be non-negative")
    return k * plan.tau
