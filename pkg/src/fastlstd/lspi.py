"""Least-squares policy iteration with exact or randomised evaluation.

Each iteration evaluates the greedy policy of the current ``theta`` on the
fixed sample pool, either by solving the LSTDQ system or by ``tau``
fLSTDQ-SA steps warm-started from the current ``theta``, and stops once
``||theta - theta'||_2 < epsilon``.
"""

from __future__ import annotations

import csv
import json
import time
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

from .core import QTransitionSet, StepSchedule
from .errors import ConfigurationError, SingularityError
from .exact import lstdq_system
from .rng import splitmix64
from .sa import flstdq_sa_run

#: regulariser used when the exact LSTDQ system is singular
FALLBACK_MU = 1.0


class QPolicy:
    """Greedy policy ``s -> argmax_a theta^T phi(s, a)`` (lowest index on ties).

    ``feature_map(state, action)`` returns a ``d``-vector; if the map also
    has ``all_actions(state)`` returning the ``(A, d)`` stack, that is used.
    """

    def __init__(self, theta, feature_map, action_count: int):
        if action_count < 1:
            raise ConfigurationError("action_count must be at least 1")
        self.theta = np.array(theta, dtype=float)
        self.feature_map = feature_map
        self.action_count = int(action_count)

    def action_features(self, state) -> np.ndarray:
        if hasattr(self.feature_map, "all_actions"):
            return np.asarray(self.feature_map.all_actions(state), dtype=float)
        return np.array([self.feature_map(state, a) for a in range(self.action_count)], dtype=float)

    def __call__(self, state) -> int:
        return greedy_action(self, state)


def greedy_action(policy: QPolicy, state) -> int:
    return int(np.argmax(policy.action_features(state) @ policy.theta))


@dataclass(frozen=True)
class ExactEval:
    """Evaluate each policy by solving the (optionally regularised) LSTDQ system."""

    mu: float = 0.0
    name = "exact"


@dataclass(frozen=True)
class SaEval:
    """Evaluate each policy with ``tau`` fLSTDQ-SA steps.

    ``schedule`` defaults to the ``corollary1`` rule with
    ``c = 1.33 / (1 - beta)^2``. Iteration ``k`` uses the stream seeded by
    ``splitmix64(seed, k)``.
    """

    tau: int = 500
    schedule: Optional[StepSchedule] = None
    seed: int = 0
    mu: float = 0.0
    name = "sa"

    def resolved_schedule(self, beta: float) -> StepSchedule:
        if self.schedule is not None:
            return self.schedule
        return StepSchedule.corollary1(beta, 1.33 / (1 - beta) ** 2)


@dataclass
class IterationRecord:
    iter: int
    delta: float
    eval_mode: str
    eval_steps: int
    wall_time: float
    fallback: bool = False


@dataclass
class LspiReport:
    iterations: list
    final_theta: np.ndarray
    converged: bool
    epsilon: float
    thetas: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "iterations": [
                {
                    "iter": r.iter, "delta": r.delta, "eval_mode": r.eval_mode,
                    "eval_steps": r.eval_steps, "wall_time": r.wall_time,
                    "fallback": r.fallback,
                }
                for r in self.iterations
            ],
            "final_theta": [float(x) for x in self.final_theta],
            "converged": self.converged,
            "epsilon": self.epsilon,
        }

    def to_json(self, timings: bool = True) -> str:
        d = self.to_dict()
        if not timings:
            for r in d["iterations"]:
                r.pop("wall_time")
        return json.dumps(d, sort_keys=True)

    def write_csv(self, fh):
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["iter", "delta", "wall_ms"])
        for r in self.iterations:
            w.writerow([r.iter, repr(r.delta), f"{r.wall_time * 1e3:.3f}"])

    @property
    def total_wall_time(self) -> float:
        return sum(r.wall_time for r in self.iterations)


def _exact_step(samples, theta, beta, mu):
    system = lstdq_system(samples, theta, beta)
    try:
        return system.solve(mu), False
    except SingularityError:
        if mu >= FALLBACK_MU:
            raise
        return system.solve(FALLBACK_MU), True


def lspi_run(
    samples: QTransitionSet,
    beta: float,
    epsilon: float = 0.1,
    evaluation: Union[ExactEval, SaEval, None] = None,
    max_iters: int = 50,
    theta0=None,
) -> LspiReport:
    """Policy iteration over a fixed state-action sample pool.

    Args:
        samples: transitions with next-state features for every action.
        beta: discount factor.
        epsilon: stop once ``||theta_k - theta_{k-1}||_2 < epsilon``.
        evaluation: :class:`ExactEval` (default) or :class:`SaEval`.
        max_iters: hard cap on the number of iterations.
        theta0: initial weights (default zero), which also define the
            initial greedy policy.

    In exact mode a singular LSTDQ system is re-solved with ``mu = 1``; the
    affected iteration is flagged ``fallback``.
    """
    evaluation = evaluation or ExactEval()
    if samples.t == 0:
        raise ConfigurationError("empty sample set")
    if max_iters < 1:
        raise ConfigurationError("max_iters must be at least 1")
    if not 0 <= beta < 1:
        raise ConfigurationError(f"beta must lie in [0, 1), got {beta}")
    theta = np.zeros(samples.dim) if theta0 is None else np.array(theta0, dtype=float)
    if theta.shape != (samples.dim,):
        raise ConfigurationError(f"theta0 has shape {theta.shape}, expected ({samples.dim},)")
    schedule = evaluation.resolved_schedule(beta) if isinstance(evaluation, SaEval) else None
    records, thetas = [], [theta.copy()]
    converged = False
    for k in range(1, max_iters + 1):
        t0 = time.perf_counter()
        fallback = False
        if isinstance(evaluation, SaEval):
            seed = splitmix64(evaluation.seed, k)
            new = flstdq_sa_run(
                samples, theta, beta, schedule, evaluation.tau, seed=seed,
                theta0=theta, mu=evaluation.mu,
            )
            steps = evaluation.tau
        else:
            new, fallback = _exact_step(samples, theta, beta, evaluation.mu)
            steps = 0
        wall = time.perf_counter() - t0
        delta = float(np.linalg.norm(theta - new))
        records.append(IterationRecord(k, delta, evaluation.name, steps, wall, fallback))
        theta = new
        thetas.append(theta.copy())
        if delta < epsilon:
            converged = True
            break
    return LspiReport(records, theta, converged, epsilon, thetas)


def compute_true_value(p, r, beta: float) -> np.ndarray:
    """Exact value ``v = (I - beta P)^{-1} r`` of a small Markov chain."""
    if not 0 <= beta < 1:
        raise ConfigurationError(f"beta must lie in [0, 1), got {beta}")
    p = np.atleast_2d(np.asarray(p, dtype=float))
    r = np.asarray(r, dtype=float).ravel()
    s = p.shape[0]
    if p.shape != (s, s) or r.shape != (s,):
        raise ConfigurationError("P must be square and match the length of r")
    if (p < 0).any() or not np.allclose(p.sum(axis=1), 1.0, atol=1e-10):
        raise ConfigurationError("P must be row-stochastic")
    return np.linalg.solve(np.eye(s) - beta * p, r)
