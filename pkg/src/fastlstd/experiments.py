"""Reusable experiment pieces: standard instances, multi-seed error curves,
log-log rate fits and the per-step cost benchmark."""

from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Iterable, Optional

import numpy as np

from .core import StepSchedule, TransitionSet
from .kernels import sa_kernel, sherman_morrison_kernel
from .sa import SaMode, SaState, _advance


def _unit_rows(g, t, d):
    x = g.normal(size=(t, d))
    return x / np.linalg.norm(x, axis=1, keepdims=True)


def random_instance(seed: int = 0, d: int = 4, t: int = 100) -> TransitionSet:
    """Pool with unit-norm ``phi``/``phi_next`` and rewards uniform on [-1, 1]."""
    g = np.random.default_rng(seed)
    phi = _unit_rows(g, t, d)
    nxt = _unit_rows(g, t, d)
    return TransitionSet(phi, g.uniform(-1, 1, size=t), nxt)


def regression_instance(seed: int = 0, d: int = 3, t: int = 30):
    """Unit-norm inputs, ``y = theta_star^T x + xi`` with ``xi`` uniform on [-1, 1]."""
    g = np.random.default_rng(seed)
    xs = _unit_rows(g, t, d)
    theta_star = g.normal(size=d)
    ys = xs @ theta_star + g.uniform(-1, 1, size=t)
    return xs, ys


def log_checkpoints(lo: float = 1e3, hi: float = 1e5, count: int = 21) -> np.ndarray:
    return np.unique(np.round(np.logspace(np.log10(lo), np.log10(hi), count)).astype(np.int64))


def error_matrix(
    phi, rewards, phi_next, use_next: bool, beta: float, schedule: StepSchedule,
    mode: Optional[SaMode], seeds: Iterable[int], checkpoints, reference, theta0=None,
):
    """``(runs, checkpoints)`` arrays of plain and averaged-iterate errors.

    Each seed runs to the last checkpoint from ``theta0`` (default zero).
    """
    seeds = list(seeds)
    checkpoints = np.asarray(checkpoints, dtype=np.int64)
    mode = mode or SaMode()
    plain = np.empty((len(seeds), checkpoints.shape[0]))
    avg = np.empty_like(plain)
    for k, seed in enumerate(seeds):
        state = SaState.initial(phi.shape[1], schedule, seed, mode, theta0)
        plain[k], avg[k], _ = _advance(
            state, phi, rewards, phi_next, use_next, beta, int(checkpoints[-1]),
            checkpoints, reference,
        )
    return plain, avg


def loglog_slope(ns, values) -> float:
    """Least-squares slope of ``log(values)`` against ``log(ns)``."""
    return float(np.polyfit(np.log(np.asarray(ns, float)), np.log(np.asarray(values, float)), 1)[0])


# ---------------------------------------------------------------------------
# per-step cost benchmark


def _synthetic(d, t, seed=0):
    g = np.random.default_rng(seed)
    return (
        g.normal(size=(t, d)) / np.sqrt(d),
        g.normal(size=t),
        g.normal(size=(t, d)) / np.sqrt(d),
    )


def _median_ns(fn, per, reps):
    fn()  # warm-up (also triggers compilation)
    times = []
    for _ in range(reps):
        t0 = time.perf_counter_ns()
        fn()
        times.append((time.perf_counter_ns() - t0) / per)
    return float(np.median(times))


def sa_ns_per_step(d: int, steps: int = 20_000, pool: int = 256, reps: int = 5) -> float:
    """Median wall time of one fLSTD-SA step at dimension ``d``."""
    phi, r, nxt = _synthetic(d, pool)
    gammas = np.full(steps, 0.01)
    none = np.empty(0, np.int64)
    rec = np.empty(0)

    def run():
        theta = np.zeros(d)
        sa_kernel(
            phi, r, nxt, True, 0.9, gammas, 0.0, theta, np.zeros(d), 0, 0, 0, False,
            np.uint64(1), 0, theta, none, rec, rec, 0,
        )

    return _median_ns(run, steps, reps)


def sm_ns_per_sample(d: int, budget: float = 2e8, reps: int = 5) -> float:
    """Median wall time of one Sherman-Morrison rank-one update at dimension ``d``.

    The sample count is chosen so each repetition does about ``budget``
    multiply-adds.
    """
    t = max(4, int(budget // (d * d)))
    phi, r, nxt = _synthetic(d, t)
    wu, wv = np.empty(d), np.empty(d)

    def run():
        p = np.eye(d) * 1e8
        sherman_morrison_kernel(phi, r, nxt, 0.9, p, np.zeros(d), wu, wv)

    return _median_ns(run, t, reps)


@dataclass
class BenchResult:
    dims: np.ndarray
    sa_ns: np.ndarray
    sm_ns: np.ndarray

    @property
    def ratio(self) -> np.ndarray:
        return self.sm_ns / self.sa_ns

    @property
    def sa_slope(self) -> float:
        return loglog_slope(self.dims, self.sa_ns) if len(self.dims) > 1 else float("nan")

    @property
    def sm_slope(self) -> float:
        return loglog_slope(self.dims, self.sm_ns) if len(self.dims) > 1 else float("nan")

    def rows(self):
        return [
            (int(d), float(a), float(b), float(b / a))
            for d, a, b in zip(self.dims, self.sa_ns, self.sm_ns)
        ]


def run_bench(dims, reps: int = 5, sa_steps: int = 20_000, sm_budget: float = 2e8) -> BenchResult:
    dims = np.asarray(sorted(int(d) for d in dims))
    sa = np.array([sa_ns_per_step(int(d), sa_steps, reps=reps) for d in dims])
    sm = np.array([sm_ns_per_sample(int(d), sm_budget, reps=reps) for d in dims])
    return BenchResult(dims, sa, sm)
