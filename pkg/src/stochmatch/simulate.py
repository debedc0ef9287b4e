"""Seeded Monte Carlo estimates with standard errors.

Trial i always draws from `generator(seed, STREAM_TRIAL, i)` and batch chunk
c from `generator(seed, STREAM_CHUNK, c)`, and results are aggregated in
index order, so a report depends only on (runner, trials, seed).
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import _rng

DEFAULT_CHUNK = 50_000
BAND_SIGMAS = 3.0


class TrialError(RuntimeError):
    def __init__(self, index: int, cause: BaseException):
        super().__init__(f"trial {index} failed: {cause!r}")
        self.index = index
        self.cause = cause


@dataclass(frozen=True)
class SimConfig:
    trials: int
    seed: int = 20240301
    parallelism: int = 1
    arrival: object = None

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if self.parallelism < 1:
            raise ValueError("parallelism must be >= 1")


@dataclass(frozen=True)
class SimReport:
    mean: float
    stderr: float
    ci95: tuple[float, float]
    trials: int
    seed: int


def summarize(values, seed: int) -> SimReport:
    vals = np.asarray(values, dtype=float)
    k = vals.size
    mean = float(vals.mean())
    stderr = float(vals.std(ddof=1) / math.sqrt(k)) if k > 1 else float("inf")
    if k > 1 and np.all(vals == vals[0]):
        stderr = 0.0
    return SimReport(mean, stderr, (mean - 1.96 * stderr, mean + 1.96 * stderr), k, seed)


def _value(out) -> float:
    return float(out.value if hasattr(out, "value") else out)


def run_trials(runner: Callable, config: SimConfig) -> np.ndarray:
    """Per-trial values, index-ordered; `runner(rng)` returns a RunResult or a number."""
    def one(i: int) -> float:
        try:
            return _value(runner(_rng.generator(config.seed, _rng.STREAM_TRIAL, i)))
        except Exception as exc:  # keep the failing index with the error
            raise TrialError(i, exc) from exc

    if config.parallelism == 1:
        return np.array([one(i) for i in range(config.trials)])
    with ThreadPoolExecutor(max_workers=config.parallelism) as pool:
        return np.array(list(pool.map(one, range(config.trials))))


def estimate_value(runner: Callable, config: SimConfig) -> SimReport:
    return summarize(run_trials(runner, config), config.seed)


def run_batches(batch_runner: Callable, config: SimConfig, chunk: int = DEFAULT_CHUNK) -> np.ndarray:
    """Values from a vectorised `batch_runner(count, rng) -> array`, in fixed-size chunks."""
    sizes = [min(chunk, config.trials - s) for s in range(0, config.trials, chunk)]

    def one(c: int) -> np.ndarray:
        out = np.asarray(batch_runner(sizes[c], _rng.generator(config.seed, _rng.STREAM_CHUNK, c)), dtype=float)
        if out.shape != (sizes[c],):
            raise ValueError(f"batch runner returned shape {out.shape}, expected ({sizes[c]},)")
        return out

    if config.parallelism == 1 or len(sizes) == 1:
        parts = [one(c) for c in range(len(sizes))]
    else:
        with ThreadPoolExecutor(max_workers=config.parallelism) as pool:
            parts = list(pool.map(one, range(len(sizes))))
    return np.concatenate(parts)


def estimate_batch(batch_runner: Callable, config: SimConfig, chunk: int = DEFAULT_CHUNK) -> SimReport:
    return summarize(run_batches(batch_runner, config, chunk), config.seed)


@dataclass(frozen=True)
class RatioReport:
    passed: bool
    ratio: float
    slack: float
    threshold: float

    def __str__(self):
        verdict = "pass" if self.passed else "fail"
        return f"{verdict}: ratio {self.ratio:.6f}, slack {self.slack:+.6g} against {self.threshold:.6g}"


def ratio_report(report: SimReport, denominator: float, guarantee: float) -> RatioReport:
    """Pass iff mean >= guarantee * denominator - 3 * stderr."""
    if not denominator > 0:
        raise ValueError(f"denominator must be positive, got {denominator}")
    threshold = guarantee * denominator - BAND_SIGMAS * report.stderr
    slack = report.mean - threshold
    return RatioReport(bool(slack >= 0), report.mean / denominator, slack, threshold)
