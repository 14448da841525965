"""
Experiment Harness
Logical-fidelity and throughput experiments plus resource plans, emitted as
JSON-lines result records
"""
import io
import json
import logging
import math
import sys
from typing import Dict, Iterable, List, Optional, TextIO

import numpy as np
import pandas as pd
from pydantic import BaseModel

from .config import ExperimentConfig, Mode, PlanRequest
from .decoding_graph import CodeParams, build_graph, extract_syndrome, sample_error, shot_seed
from .inner_decoders import build_inner_decoder
from .resources import (
    AutoCorrectionOverhead,
    ResourcePlan,
    TimingModel,
    auto_correction_overhead,
    response_time,
    total_response_time,
)
from .scheduler import PipelinePlan, measure_throughput, run_pipeline
from .windowing import WindowConfig, global_decode, parallel_window_decode, sliding_window_decode

logger = logging.getLogger(__name__)


class ResultRecord(BaseModel):
    family: str
    d: int
    p: float
    rounds: int
    shots: int
    seed: int
    decoder: str
    mode: Mode
    workers: Optional[int] = None
    w: Optional[int] = None
    n_com: Optional[int] = None
    n_buf: Optional[int] = None
    logical_errors: Optional[int] = None
    logical_error_rate: Optional[float] = None
    stderr: Optional[float] = None
    paired_diff: Optional[float] = None
    paired_diff_stderr: Optional[float] = None
    within_2sigma: Optional[bool] = None
    r_dec: Optional[float] = None
    r_dec_stderr: Optional[float] = None
    r_proc: Optional[float] = None
    tau_w_mean: Optional[float] = None
    tau0_est: Optional[float] = None
    f: Optional[float] = None


TIMING_FIELDS = ("r_dec", "r_dec_stderr", "r_proc", "tau_w_mean", "tau0_est", "f")


class PlanResult(BaseModel):
    plan: ResourcePlan
    overhead: AutoCorrectionOverhead
    k: int
    total_response_time: float
    keeps_up: bool


def binomial_stderr(rate: float, shots: int) -> float:
    return math.sqrt(rate * (1 - rate) / shots)


def paired_stats(fails: np.ndarray, baseline: np.ndarray) -> Dict[str, float]:
    """Mean and standard error of the per-shot failure difference"""
    diff = fails.astype(float) - baseline.astype(float)
    mean = float(diff.mean())
    stderr = float(diff.std(ddof=1) / math.sqrt(len(diff))) if len(diff) > 1 else 0.0
    within = abs(mean) <= 2 * stderr if stderr > 0 else mean == 0.0
    return {"paired_diff": mean, "paired_diff_stderr": stderr, "within_2sigma": within}


def cmd_fidelity(cfg: ExperimentConfig, executor=None) -> List[ResultRecord]:
    """Logical error rates of every requested mode on shared sampled shots"""
    modes: List[str] = list(dict.fromkeys(cfg.modes))
    if cfg.include_pipeline and "pipeline" not in modes:
        modes.append("pipeline")
    if "global" not in modes:
        modes.insert(0, "global")

    records: List[ResultRecord] = []
    inner = build_inner_decoder(cfg.decoder, cfg.growth)
    for d in cfg.distances:
        rounds = cfg.rounds_for(d)
        w = cfg.window_unit(d)
        params = CodeParams(family=cfg.family, distance=d, rounds=rounds, physical_error_rate=cfg.p)
        graph = build_graph(params)
        sliding = WindowConfig.sliding(cfg.n_com or d, cfg.n_buf if cfg.n_buf is not None else d)
        parallel = WindowConfig.parallel(w)
        plan = PipelinePlan(n=1, w=w)
        logger.info("fidelity d=%d rounds=%d p=%g shots=%d modes=%s", d, rounds, cfg.p, cfg.shots, modes)

        fails = {mode: np.zeros(cfg.shots, dtype=bool) for mode in modes}
        for shot in range(cfg.shots):
            stream = extract_syndrome(graph, sample_error(graph, cfg.p, shot_seed(cfg.seed, shot)))
            for mode in modes:
                if mode == "global":
                    correction = global_decode(stream, inner)
                elif mode == "sliding":
                    correction = sliding_window_decode(stream, sliding, inner)
                elif mode == "parallel":
                    correction = parallel_window_decode(stream, parallel, inner, executor)
                else:
                    correction, _ = run_pipeline(stream, plan, inner)
                fails[mode][shot] = bool(correction.logical_flip ^ stream.logical_frame)

        for mode in modes:
            rate = float(fails[mode].mean())
            record = dict(
                family=cfg.family.value, d=d, p=cfg.p, rounds=rounds, shots=cfg.shots,
                seed=cfg.seed, decoder=cfg.decoder, mode=mode,
                logical_errors=int(fails[mode].sum()), logical_error_rate=rate,
                stderr=binomial_stderr(rate, cfg.shots),
            )
            if mode == "sliding":
                record.update(n_com=sliding.n_com, n_buf=sliding.n_buf)
            if mode in ("parallel", "pipeline"):
                record.update(w=w)
            if mode != "global":
                record.update(paired_stats(fails[mode], fails["global"]))
            records.append(ResultRecord(**record))
    return records


def cmd_throughput(cfg: ExperimentConfig) -> List[ResultRecord]:
    """Decoding frequency of the block pipeline for every (distance, workers) pair"""
    records: List[ResultRecord] = []
    inner = build_inner_decoder(cfg.decoder, cfg.growth)
    for d in cfg.distances:
        params = CodeParams(family=cfg.family, distance=d, rounds=1, physical_error_rate=cfg.p)
        for n_workers in cfg.workers:
            report = measure_throughput(params, n_workers, cfg.shots, seed=cfg.seed,
                                        inner=inner, w=cfg.w, tau_rd=cfg.tau_rd)
            logger.info("d=%d workers=%d r_dec=%.1f +- %.1f", d, n_workers, report.r_dec, report.r_dec_stderr)
            records.append(ResultRecord(
                family=cfg.family.value, d=d, p=cfg.p, rounds=report.rounds, shots=cfg.shots,
                seed=cfg.seed, decoder=cfg.decoder, mode="pipeline", workers=n_workers,
                w=cfg.window_unit(d), r_dec=report.r_dec, r_dec_stderr=report.r_dec_stderr,
                r_proc=report.r_proc, tau_w_mean=report.tau_w_mean, tau0_est=report.tau0_est,
                f=report.f,
            ))
    return records


def cmd_plan(req: PlanRequest) -> PlanResult:
    w = req.w or req.d
    cfg = WindowConfig.parallel(w)
    timing = TimingModel(tau_rd=req.tau_rd, tau_W=req.tau_W, tau_0=req.tau_0)
    plan = response_time(cfg, timing, n_par=req.n_par, d=req.d)
    overhead = auto_correction_overhead(plan.tau, req.d, req.tau_rd, req.logical_qubits)
    keeps_up = plan.N_par * (plan.n_com + plan.n_W) * req.tau_rd >= 2 * req.tau_W * (1 - 1e-9)
    return PlanResult(
        plan=plan, overhead=overhead, k=req.k,
        total_response_time=total_response_time(plan, req.k), keeps_up=keeps_up,
    )


def records_to_jsonl(records: Iterable[BaseModel]) -> str:
    return "".join(record.model_dump_json() + "\n" for record in records)


def records_frame(records: Iterable[ResultRecord]) -> pd.DataFrame:
    return pd.DataFrame([record.model_dump(mode="json") for record in records])


def write_records(records: List[ResultRecord], output: Optional[str] = None,
                  csv: Optional[str] = None, stream: Optional[TextIO] = None):
    text = records_to_jsonl(records)
    if output:
        with open(output, "w", encoding="utf-8") as handle:
            handle.write(text)
    else:
        (stream or sys.stdout).write(text)
    if csv:
        records_frame(records).to_csv(csv, index=False)


def read_records(text: str) -> List[ResultRecord]:
    return [ResultRecord.model_validate_json(line) for line in io.StringIO(text) if line.strip()]


def strip_timing(record: ResultRecord) -> Dict:
    return {k: v for k, v in record.model_dump().items() if k not in TIMING_FIELDS}


def result_schema() -> str:
    return json.dumps(ResultRecord.model_json_schema(), indent=2)
