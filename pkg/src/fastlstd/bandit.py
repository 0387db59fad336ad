"""fLinUCB-SA on a synthetic linear contextual bandit.

Each round draws fresh arm contexts uniformly from the unit ball, runs
``tau`` regularised fLS-SA steps over all past ``(x, y)`` pairs
(warm-started from the previous round's iterate), then plays the arm
maximising ``theta^T x + alpha kappa / sqrt(n)``. Rewards are
``theta_star^T x`` plus noise uniform on ``[-noise_bound, noise_bound]``.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from numba import njit

from .errors import ConfigurationError
from .rng import RngHandle, uniform_float, uniform_index


@dataclass(frozen=True)
class BanditConfig:
    """Synthetic instance and algorithm constants.

    ``theta_star`` defaults to ``(1, ..., 1) / sqrt(dim)``; ``theta0``
    defaults to the all-ones vector. Step sizes are ``gamma0 / k`` for inner
    step ``k``. ``fixed_arms`` (an ``(arms, dim)`` array) replaces the random
    contexts with the same arms every round.
    """

    dim: int = 5
    arms_per_round: int = 10
    theta_star: Optional[tuple] = None
    noise_bound: float = 0.5
    alpha: float = 0.1
    kappa: float = 0.1
    mu: float = 1.0
    tau: int = 20
    rounds: int = 10_000
    gamma0: float = 1.0
    theta0: Optional[tuple] = None
    fixed_arms: Optional[tuple] = field(default=None, repr=False)

    def __post_init__(self):
        if self.dim < 1:
            raise ConfigurationError("dim must be positive")
        if self.arms_per_round < 1:
            raise ConfigurationError("every round needs at least one arm")
        if self.rounds < 1:
            raise ConfigurationError("rounds must be at least 1")
        if self.tau < 1:
            raise ConfigurationError("tau must be at least 1")
        if self.noise_bound < 0:
            raise ConfigurationError("noise_bound must be non-negative")
        if not (self.alpha > 0 and self.kappa > 0 and self.mu > 0 and self.gamma0 > 0):
            raise ConfigurationError("alpha, kappa, mu and gamma0 must be positive")
        ts = self.theta_star
        if ts is None:
            ts = (1.0 / math.sqrt(self.dim),) * self.dim
        ts = tuple(float(x) for x in np.ravel(ts))
        if len(ts) != self.dim:
            raise ConfigurationError(f"theta_star has length {len(ts)}, expected {self.dim}")
        object.__setattr__(self, "theta_star", ts)
        t0 = (1.0,) * self.dim if self.theta0 is None else tuple(float(x) for x in np.ravel(self.theta0))
        if len(t0) != self.dim:
            raise ConfigurationError(f"theta0 has length {len(t0)}, expected {self.dim}")
        object.__setattr__(self, "theta0", t0)
        if self.fixed_arms is not None:
            arms = np.asarray(self.fixed_arms, dtype=float).reshape(-1, self.dim)
            if arms.shape[0] != self.arms_per_round:
                raise ConfigurationError("fixed_arms must have arms_per_round rows")
            object.__setattr__(self, "fixed_arms", tuple(map(tuple, arms)))

    def to_dict(self) -> dict:
        d = {k: getattr(self, k) for k in self.__dataclass_fields__}
        for k in ("theta_star", "theta0", "fixed_arms"):
            if d[k] is not None:
                d[k] = [list(r) if isinstance(r, tuple) else r for r in d[k]]
        return d


@njit(cache=True)
def _ball_point(seed, counter, out):
    d = out.shape[0]
    s = 0.0
    j = 0
    while j < d:
        u1, counter = uniform_float(seed, counter)
        u2, counter = uniform_float(seed, counter)
        r = math.sqrt(-2.0 * math.log(1.0 - u1))
        out[j] = r * math.cos(2.0 * math.pi * u2)
        if j + 1 < d:
            out[j + 1] = r * math.sin(2.0 * math.pi * u2)
        j += 2
    for j in range(d):
        s += out[j] * out[j]
    u, counter = uniform_float(seed, counter)
    scale = u ** (1.0 / d) / math.sqrt(s) if s > 0 else 0.0
    for j in range(d):
        out[j] *= scale
    return counter


@njit(cache=True)
def _bandit_kernel(
    theta_star, theta0, arms_fixed, use_fixed, n_arms, noise_bound, alpha, kappa, mu,
    tau, rounds, gamma0, seed, track, xs, ys, arm_out, reward_out, regret_out,
    worst_out, norm_out, choice_gap,
):
    d = theta_star.shape[0]
    theta = theta0.copy()
    ctx = np.empty((n_arms, d))
    gram = np.zeros((d, d))
    bvec = np.zeros(d)
    counter = 0
    for n in range(1, rounds + 1):
        past = n - 1
        if past > 0:
            for k in range(1, tau + 1):
                i, counter = uniform_index(seed, counter, past)
                g = gamma0 / k
                res = ys[i]
                for j in range(d):
                    res -= theta[j] * xs[i, j]
                for j in range(d):
                    theta[j] = theta[j] + g * res * xs[i, j] - g * mu * theta[j]
        if track and past > 0:
            a = gram / past
            for j in range(d):
                a[j, j] += mu
            ref = np.linalg.solve(a, bvec / past)
            s = 0.0
            for j in range(d):
                s += (theta[j] - ref[j]) ** 2
            norm_out[n - 1] = math.sqrt(s)
        else:
            norm_out[n - 1] = np.nan
        if use_fixed:
            ctx[:, :] = arms_fixed
        else:
            for a_ in range(n_arms):
                counter = _ball_point(seed, counter, ctx[a_])
        bonus = alpha * kappa / math.sqrt(n)
        best = 0
        best_ucb = -np.inf
        best_raw = 0
        best_raw_val = -np.inf
        vmax = -np.inf
        vmin = np.inf
        for a_ in range(n_arms):
            est = 0.0
            true = 0.0
            for j in range(d):
                est += theta[j] * ctx[a_, j]
                true += theta_star[j] * ctx[a_, j]
            if est + bonus > best_ucb:
                best_ucb = est + bonus
                best = a_
            if est > best_raw_val:
                best_raw_val = est
                best_raw = a_
            if true > vmax:
                vmax = true
            if true < vmin:
                vmin = true
        if best != best_raw:
            choice_gap[0] += 1
        mean = 0.0
        for j in range(d):
            mean += theta_star[j] * ctx[best, j]
        u, counter = uniform_float(seed, counter)
        y = mean + noise_bound * (2.0 * u - 1.0)
        for j in range(d):
            xs[past, j] = ctx[best, j]
        ys[past] = y
        if track:
            for j in range(d):
                bvec[j] += y * ctx[best, j]
                for l in range(d):
                    gram[j, l] += ctx[best, j] * ctx[best, l]
        arm_out[n - 1] = best
        reward_out[n - 1] = y
        regret_out[n - 1] = vmax - mean
        worst_out[n - 1] = vmax - vmin
    return theta


@dataclass
class BanditHistory:
    """Per-round outcomes; ``norm_diff`` is NaN when not tracked."""

    arm: np.ndarray
    reward: np.ndarray
    regret: np.ndarray
    worst_regret: np.ndarray
    norm_diff: np.ndarray
    bonus_changed_choice: int = 0

    @property
    def rounds(self) -> np.ndarray:
        return np.arange(1, self.arm.shape[0] + 1)

    @property
    def cum_regret(self) -> np.ndarray:
        return np.cumsum(self.regret)

    @property
    def worst_case_regret(self) -> float:
        """``sum_n (max_a - min_a) theta_star^T x_{n,a}``: regret of always picking the worst arm."""
        return float(self.worst_regret.sum())

    def records(self) -> list:
        cr = self.cum_regret
        return [
            (int(n), int(a), float(y), float(r), float(c), float(nd))
            for n, a, y, r, c, nd in zip(
                self.rounds, self.arm, self.reward, self.regret, cr, self.norm_diff
            )
        ]

    def write_csv(self, fh):
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["round", "arm", "reward", "regret", "cum_regret", "norm_diff"])
        for n, a, y, r, c, nd in self.records():
            w.writerow([n, a, repr(y), repr(r), repr(c), "" if math.isnan(nd) else repr(nd)])


def flinucb_sa_run(config: BanditConfig, seed: int = 0, track_norm_diff: bool = True):
    """Play ``config.rounds`` rounds; returns ``(history, final_theta)``.

    With ``track_norm_diff`` the distance between the inner iterate and the
    exact regularised least-squares solution on the same data is recorded
    every round (an extra O(d^3) per round).
    """
    cfg = config
    d = cfg.dim
    rounds = cfg.rounds
    xs = np.zeros((rounds, d))
    ys = np.zeros(rounds)
    arm = np.zeros(rounds, np.int64)
    reward = np.zeros(rounds)
    regret = np.zeros(rounds)
    worst = np.zeros(rounds)
    norm = np.full(rounds, np.nan)
    gap = np.zeros(1, np.int64)
    fixed = np.asarray(cfg.fixed_arms if cfg.fixed_arms is not None else np.zeros((cfg.arms_per_round, d)), float)
    theta = _bandit_kernel(
        np.asarray(cfg.theta_star), np.asarray(cfg.theta0), fixed, cfg.fixed_arms is not None,
        cfg.arms_per_round, float(cfg.noise_bound), float(cfg.alpha), float(cfg.kappa),
        float(cfg.mu), cfg.tau, rounds, float(cfg.gamma0), RngHandle(seed).seed_u64,
        track_norm_diff, xs, ys, arm, reward, regret, worst, norm, gap,
    )
    return BanditHistory(arm, reward, regret, worst, norm, int(gap[0])), theta
