"""Randomised stochastic-approximation iterations.

fLSTD-SA draws ``i_n`` uniformly from the pool and applies one TD step on
that sample; fLS-SA is the same loop with the least-squares residual. Both
support a ridge shrinkage term (``mu``) and Polyak-Ruppert averaging.
"""

from __future__ import annotations

import copy
import csv
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .core import QTransitionSet, StepSchedule, TransitionSet
from .errors import ConfigurationError, StateError
from .exact import ls_solve, lstd_solve, lstd_solve_reg, lstdq_system
from .kernels import sa_kernel, sa_q_kernel
from .rng import RngHandle


@dataclass(frozen=True)
class SaMode:
    """Iteration variant.

    ``mu > 0`` adds the shrinkage ``-gamma_n mu theta_{n-1}`` (regularised
    mode); ``average=True`` maintains the running mean of the iterates with
    index ``n > burn_in``. Both may be combined.
    """

    mu: float = 0.0
    average: bool = False
    burn_in: int = 0

    def __post_init__(self):
        if self.mu < 0 or not math.isfinite(self.mu):
            raise ConfigurationError(f"mu must be non-negative, got {self.mu}")
        if self.burn_in < 0:
            raise ConfigurationError("burn_in must be non-negative")

    @classmethod
    def plain(cls) -> "SaMode":
        return cls()

    @classmethod
    def regularized(cls, mu: float) -> "SaMode":
        if not mu > 0:
            raise ConfigurationError("regularised mode needs mu > 0")
        return cls(mu=mu)

    @classmethod
    def averaged(cls, burn_in: int = 0, mu: float = 0.0) -> "SaMode":
        return cls(mu=mu, average=True, burn_in=burn_in)

    @property
    def name(self) -> str:
        parts = []
        if self.mu:
            parts.append(f"regularized(mu={self.mu:g})")
        if self.average:
            parts.append(f"averaged(burn_in={self.burn_in})")
        return "+".join(parts) or "plain"


@dataclass
class SaState:
    """Iterate ``theta_n``, running average, step counter and RNG for one run."""

    theta: np.ndarray
    schedule: StepSchedule
    rng: RngHandle
    mode: SaMode = field(default_factory=SaMode)
    n: int = 0
    theta_bar: Optional[np.ndarray] = None
    avg_count: int = 0
    max_excursion: float = 0.0

    def __post_init__(self):
        self.theta = np.array(self.theta, dtype=np.float64)
        if self.theta_bar is None:
            self.theta_bar = np.zeros_like(self.theta)

    @classmethod
    def initial(cls, dim, schedule, seed, mode=None, theta0=None) -> "SaState":
        theta = np.zeros(dim) if theta0 is None else np.asarray(theta0, dtype=float)
        if theta.shape != (dim,):
            raise ConfigurationError(f"theta0 has shape {theta.shape}, expected ({dim},)")
        return cls(theta, schedule, RngHandle(seed), mode or SaMode())

    def copy(self) -> "SaState":
        new = copy.copy(self)
        new.theta = self.theta.copy()
        new.theta_bar = self.theta_bar.copy()
        new.rng = self.rng.copy()
        return new


@dataclass
class Trajectory:
    """``||theta_n - reference||`` sampled at selected steps."""

    steps: np.ndarray
    norm_diff: np.ndarray
    gamma: np.ndarray
    reference: np.ndarray
    avg_norm_diff: Optional[np.ndarray] = None

    @property
    def records(self) -> list:
        return [
            (int(n), float(e), float(g))
            for n, e, g in zip(self.steps, self.norm_diff, self.gamma)
        ]

    def __len__(self):
        return len(self.steps)

    def at(self, n: int) -> float:
        """Recorded error at step ``n``; KeyError if ``n`` was not recorded."""
        hit = np.flatnonzero(self.steps == n)
        if hit.size == 0:
            raise KeyError(n)
        return float(self.norm_diff[hit[0]])

    def write_csv(self, fh, bound_k1=None, bound_k2=None):
        """Write ``step,norm_diff,gamma,bound_k1,bound_k2`` rows to an open file.

        ``bound_k1`` / ``bound_k2`` are optional callables ``n -> envelope``.
        """
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["step", "norm_diff", "gamma", "bound_k1", "bound_k2"])
        for n, e, g in self.records:
            k1 = repr(float(bound_k1(n))) if bound_k1 else ""
            k2 = repr(float(bound_k2(n))) if bound_k2 else ""
            w.writerow([n, repr(e), repr(g), k1, k2])


def _check_dim(state: SaState, dim: int):
    if state.theta.shape != (dim,):
        raise ConfigurationError(
            f"iterate has dimension {state.theta.shape[0]} but data has dimension {dim}"
        )


def _advance(state, phi, rewards, phi_next, use_next, beta, steps, checkpoints, reference):
    """Advance ``state`` in place by ``steps``; returns (norms, avg_norms) at checkpoints."""
    gammas = state.schedule.gammas(state.n + 1, steps) if steps else np.empty(0)
    checkpoints = np.asarray(checkpoints, dtype=np.int64)
    rec = np.full(checkpoints.shape[0], np.nan)
    rec_avg = np.full(checkpoints.shape[0], np.nan)
    ref = np.zeros_like(state.theta) if reference is None else np.asarray(reference, float)
    counter, avg_count, _, exc = sa_kernel(
        phi, rewards, phi_next, use_next, float(beta), gammas, float(state.mode.mu),
        state.theta, state.theta_bar, state.n, state.avg_count, state.mode.burn_in,
        state.mode.average, state.rng.seed_u64, state.rng.counter,
        ref, checkpoints, rec, rec_avg, 0,
    )
    state.rng.counter = int(counter)
    state.avg_count = int(avg_count)
    state.n += steps
    state.max_excursion = max(state.max_excursion, float(exc))
    return rec, rec_avg, gammas


_NO_CHECKPOINTS = np.empty(0, dtype=np.int64)


def flstd_sa_step(state: SaState, tset: TransitionSet, beta: float) -> SaState:
    """One fLSTD-SA update on a uniformly drawn sample; returns a new state."""
    tset.require_nonempty()
    _check_dim(state, tset.dim)
    new = state.copy()
    _advance(new, tset.phi, tset.rewards, tset.phi_next, True, beta, 1, _NO_CHECKPOINTS, None)
    return new


def _record_steps(n0, steps, record_every):
    first = (n0 // record_every + 1) * record_every
    return np.arange(first, n0 + steps + 1, record_every, dtype=np.int64)


def _run(state, phi, rewards, phi_next, use_next, beta, steps, record_every, reference):
    if steps < 1:
        raise ConfigurationError("steps must be at least 1")
    if record_every < 1:
        raise ConfigurationError("record_every must be at least 1")
    ckpt = _record_steps(state.n, steps, record_every)
    all_gammas_start = state.n + 1
    rec, rec_avg, gammas = _advance(
        state, phi, rewards, phi_next, use_next, beta, steps, ckpt, reference
    )
    traj = Trajectory(
        steps=ckpt,
        norm_diff=rec,
        gamma=gammas[ckpt - all_gammas_start],
        reference=np.array(reference, dtype=float),
        avg_norm_diff=rec_avg if state.mode.average else None,
    )
    return state, traj


def run_flstd_sa(
    tset: TransitionSet,
    beta: float,
    schedule: StepSchedule,
    mode: Optional[SaMode] = None,
    steps: int = 1000,
    seed: int = 0,
    record_every: int = 10,
    reference=None,
    theta0=None,
):
    """Run fLSTD-SA for ``steps`` iterations from ``theta0`` (default zero).

    The trajectory measures ``||theta_n - reference||`` every ``record_every``
    steps. Without an explicit reference the LSTD solution is used (the
    regularised one when ``mode.mu > 0``), so a singular system raises
    :class:`~fastlstd.errors.SingularityError`.

    Returns:
        ``(final_state, trajectory)``; identical inputs give bitwise
        identical outputs.
    """
    tset.require_nonempty()
    mode = mode or SaMode()
    if reference is None:
        reference = lstd_solve_reg(tset, beta, mode.mu).theta if mode.mu else lstd_solve(tset, beta)
    state = SaState.initial(tset.dim, schedule, seed, mode, theta0)
    return _run(state, tset.phi, tset.rewards, tset.phi_next, True, beta, steps, record_every, reference)


def _ls_arrays(xs, ys):
    xs = np.ascontiguousarray(np.atleast_2d(np.asarray(xs, dtype=np.float64)))
    ys = np.ascontiguousarray(np.asarray(ys, dtype=np.float64).ravel())
    if xs.shape[0] == 0:
        raise ConfigurationError("no regression samples")
    if ys.shape[0] != xs.shape[0]:
        raise ConfigurationError("xs and ys must have the same length")
    return xs, ys


def fls_sa_step(state: SaState, xs, ys) -> SaState:
    """One fLS-SA update ``theta += gamma (y_i - theta^T x_i) x_i`` (minus shrinkage)."""
    xs, ys = _ls_arrays(xs, ys)
    _check_dim(state, xs.shape[1])
    new = state.copy()
    _advance(new, xs, ys, xs, False, 0.0, 1, _NO_CHECKPOINTS, None)
    return new


def run_fls_sa(
    xs,
    ys,
    schedule: StepSchedule,
    mode: Optional[SaMode] = None,
    steps: int = 1000,
    seed: int = 0,
    record_every: int = 10,
    reference=None,
    theta0=None,
):
    """fLS-SA analogue of :func:`run_flstd_sa`; default reference is ``ls_solve``."""
    xs, ys = _ls_arrays(xs, ys)
    mode = mode or SaMode()
    if reference is None:
        if mode.mu:
            t, d = xs.shape
            reference = np.linalg.solve(xs.T @ xs / t + mode.mu * np.eye(d), xs.T @ ys / t)
        else:
            reference = ls_solve(xs, ys)
    state = SaState.initial(xs.shape[1], schedule, seed, mode, theta0)
    return _run(state, xs, ys, xs, False, 0.0, steps, record_every, reference)


def extract_average(state: SaState) -> np.ndarray:
    """Running mean of the iterates ``theta_{burn_in+1}, ..., theta_n``."""
    if not state.mode.average:
        raise StateError("state is not in averaged mode")
    if state.avg_count == 0:
        raise StateError(
            f"no averaged iterate yet (n={state.n}, burn_in={state.mode.burn_in})"
        )
    return state.theta_bar.copy()


def flstdq_sa_trajectory(
    samples: QTransitionSet,
    policy_theta,
    beta: float,
    schedule: StepSchedule,
    steps: int,
    seed: int = 0,
    theta0=None,
    mu: float = 0.0,
    reference=None,
    record_every: int = 1,
):
    """fLSTDQ-SA run that also returns ``||theta_k - reference||`` every ``record_every`` steps.

    The greedy policy of ``policy_theta`` stays frozen for all ``steps``
    updates. ``reference`` defaults to the (regularised when ``mu > 0``)
    LSTDQ solution of that policy.
    """
    if steps < 0:
        raise ConfigurationError("steps must be non-negative")
    if mu < 0:
        raise ConfigurationError("mu must be non-negative")
    policy_theta = np.ascontiguousarray(policy_theta, dtype=np.float64)
    if policy_theta.shape != (samples.dim,):
        raise ConfigurationError(
            f"policy_theta has shape {policy_theta.shape}, expected ({samples.dim},)"
        )
    theta = np.zeros(samples.dim) if theta0 is None else np.array(theta0, dtype=np.float64)
    if theta.shape != (samples.dim,):
        raise ConfigurationError(f"theta0 has shape {theta.shape}, expected ({samples.dim},)")
    if reference is None and record_every:
        reference = lstdq_system(samples, policy_theta, beta).solve(mu)
    ref = np.zeros(samples.dim) if reference is None else np.asarray(reference, float)
    ckpt = (
        np.arange(record_every, steps + 1, record_every, dtype=np.int64)
        if record_every
        else _NO_CHECKPOINTS
    )
    rec = np.full(ckpt.shape[0], np.nan)
    gammas = schedule.gammas(1, steps) if steps else np.empty(0)
    rng = RngHandle(seed)
    sa_q_kernel(
        samples.phi, samples.rewards, samples.next_features, policy_theta, float(beta),
        gammas, float(mu), theta, rng.seed_u64, 0, ref, ckpt, rec,
    )
    traj = Trajectory(ckpt, rec, gammas[ckpt - 1] if steps else np.empty(0), ref)
    return theta, traj


def flstdq_sa_run(
    samples: QTransitionSet,
    policy_theta,
    beta: float,
    schedule: StepSchedule,
    steps: int,
    seed: int = 0,
    theta0=None,
    mu: float = 0.0,
) -> np.ndarray:
    """``theta_tau`` after ``steps`` fLSTDQ-SA updates against a frozen greedy policy."""
    theta, _ = flstdq_sa_trajectory(
        samples, policy_theta, beta, schedule, steps, seed, theta0, mu, record_every=0
    )
    return theta
