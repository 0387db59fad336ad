"""Sample pool, step-size schedules and transition file I/O."""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterator, NamedTuple, Optional, Sequence

import numpy as np

from .errors import ConfigurationError, EmptyPoolError, FormatError
from .rng import RngHandle, draw_index  # noqa: F401  (re-exported)


class Transition(NamedTuple):
    """One sample ``(phi(s_i), r_i, phi(s'_i))`` in feature form."""

    phi: np.ndarray
    reward: float
    phi_next: np.ndarray


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=np.float64, copy=True)
    a.flags.writeable = False
    return a


class TransitionSet:
    """Fixed pool of ``T`` feature transitions, stored column-wise.

    ``phi`` and ``phi_next`` are ``(T, d)`` read-only arrays and ``rewards``
    is a ``(T,)`` array. The set is immutable and may be shared across
    concurrent runs.
    """

    __slots__ = ("phi", "rewards", "phi_next")

    def __init__(self, phi, rewards, phi_next):
        phi = np.asarray(phi, dtype=np.float64)
        phi_next = np.asarray(phi_next, dtype=np.float64)
        rewards = np.asarray(rewards, dtype=np.float64)
        if phi.ndim != 2 or phi_next.shape != phi.shape:
            raise ConfigurationError(
                f"phi {phi.shape} and phi_next {phi_next.shape} must both be (T, d)"
            )
        if rewards.shape != (phi.shape[0],):
            raise ConfigurationError(
                f"rewards shape {rewards.shape} does not match T={phi.shape[0]}"
            )
        if phi.shape[1] < 1:
            raise ConfigurationError("feature dimension must be positive")
        self.phi = _frozen(phi)
        self.rewards = _frozen(rewards)
        self.phi_next = _frozen(phi_next)

    @classmethod
    def from_transitions(cls, entries: Sequence[Transition]) -> "TransitionSet":
        if not entries:
            raise EmptyPoolError("no transitions supplied")
        dim = len(entries[0].phi)
        for k, e in enumerate(entries):
            if len(e.phi) != dim or len(e.phi_next) != dim:
                raise ConfigurationError(f"transition {k} does not have dimension {dim}")
        return cls(
            [e.phi for e in entries],
            [e.reward for e in entries],
            [e.phi_next for e in entries],
        )

    @property
    def t(self) -> int:
        return self.phi.shape[0]

    @property
    def dim(self) -> int:
        return self.phi.shape[1]

    def __len__(self):
        return self.t

    def __iter__(self) -> Iterator[Transition]:
        for k in range(self.t):
            yield Transition(self.phi[k], float(self.rewards[k]), self.phi_next[k])

    def __getitem__(self, k) -> Transition:
        return Transition(self.phi[k], float(self.rewards[k]), self.phi_next[k])

    @property
    def entries(self) -> list:
        return list(self)

    def __eq__(self, other):
        if not isinstance(other, TransitionSet):
            return NotImplemented
        return (
            np.array_equal(self.phi, other.phi)
            and np.array_equal(self.rewards, other.rewards)
            and np.array_equal(self.phi_next, other.phi_next)
        )

    def __repr__(self):
        return f"TransitionSet(T={self.t}, d={self.dim})"

    def require_nonempty(self):
        if self.t == 0:
            raise EmptyPoolError("transition set is empty")

    def check_bounds(self, r_max: Optional[float] = None, tol: float = 1e-12) -> list:
        """List violations of bounded features (``||phi|| <= 1``) and rewards.

        Returns an empty list when every sample satisfies the assumptions.
        """
        problems = []
        for name, arr in (("phi", self.phi), ("phi_next", self.phi_next)):
            norms = np.linalg.norm(arr, axis=1)
            bad = np.flatnonzero(norms > 1.0 + tol)
            if bad.size:
                problems.append(
                    f"{name} norm exceeds 1 at {bad.size} samples (max {norms.max():.6g})"
                )
        if r_max is not None:
            bad = np.flatnonzero(np.abs(self.rewards) > r_max + tol)
            if bad.size:
                problems.append(f"|reward| exceeds r_max={r_max} at {bad.size} samples")
        return problems

    def r_max(self) -> float:
        return float(np.max(np.abs(self.rewards))) if self.t else 0.0


# ---------------------------------------------------------------------------
# step sizes


class ScheduleKind(str, enum.Enum):
    COROLLARY1 = "corollary1"
    ITERATE_AVERAGING = "iterate_averaging"
    LEAST_SQUARES = "least_squares"
    CUSTOM = "custom"


@dataclass(frozen=True)
class StepSchedule:
    """A step-size rule ``gamma_n`` for ``n = 1, 2, ...``.

    corollary1:          (1 - beta) * c / (2 (c + n))
    iterate_averaging:   (1 - beta) / 2 * (c / (c + n)) ** alpha
    least_squares:       c / (2 (c + n))
    custom:              custom(n)
    """

    kind: ScheduleKind
    beta: float = 0.9
    c: float = 1.0
    alpha: float = 0.75
    custom: Optional[Callable[[int], float]] = None

    def __post_init__(self):
        object.__setattr__(self, "kind", ScheduleKind(self.kind))
        if self.kind is ScheduleKind.CUSTOM:
            if self.custom is None:
                raise ConfigurationError("custom schedule needs a generator function")
            return
        if not self.c > 0 or not math.isfinite(self.c):
            raise ConfigurationError(f"step constant c must be positive, got {self.c}")
        if self.kind is not ScheduleKind.LEAST_SQUARES and not 0 < self.beta < 1:
            raise ConfigurationError(f"beta must lie in (0, 1), got {self.beta}")
        if self.kind is ScheduleKind.ITERATE_AVERAGING and not 0.5 < self.alpha < 1:
            raise ConfigurationError(f"alpha must lie in (1/2, 1), got {self.alpha}")

    @classmethod
    def corollary1(cls, beta: float, c: float) -> "StepSchedule":
        return cls(ScheduleKind.COROLLARY1, beta=beta, c=c)

    @classmethod
    def iterate_averaging(cls, beta: float, c: float, alpha: float) -> "StepSchedule":
        return cls(ScheduleKind.ITERATE_AVERAGING, beta=beta, c=c, alpha=alpha)

    @classmethod
    def least_squares(cls, c: float) -> "StepSchedule":
        return cls(ScheduleKind.LEAST_SQUARES, c=c)

    @classmethod
    def from_function(cls, fn: Callable[[int], float]) -> "StepSchedule":
        return cls(ScheduleKind.CUSTOM, custom=fn)

    def gammas(self, start: int, count: int) -> np.ndarray:
        """Step sizes for ``n = start, ..., start + count - 1`` as an array."""
        if start < 1:
            raise ConfigurationError("step index n starts at 1")
        n = np.arange(start, start + count, dtype=np.float64)
        if self.kind is ScheduleKind.COROLLARY1:
            return (1.0 - self.beta) * self.c / (2.0 * (self.c + n))
        if self.kind is ScheduleKind.ITERATE_AVERAGING:
            return (1.0 - self.beta) / 2.0 * (self.c / (self.c + n)) ** self.alpha
        if self.kind is ScheduleKind.LEAST_SQUARES:
            return self.c / (2.0 * (self.c + n))
        out = np.array([self.custom(int(k)) for k in range(start, start + count)], dtype=float)
        if count and not np.all(out > 0):
            raise ConfigurationError("custom schedule produced a non-positive step size")
        return out

    def describe(self) -> dict:
        d = {"kind": self.kind.value}
        if self.kind is ScheduleKind.CUSTOM:
            d["custom"] = getattr(self.custom, "__name__", repr(self.custom))
            return d
        d["c"] = self.c
        if self.kind is not ScheduleKind.LEAST_SQUARES:
            d["beta"] = self.beta
        if self.kind is ScheduleKind.ITERATE_AVERAGING:
            d["alpha"] = self.alpha
        return d


def step_size(schedule: StepSchedule, n: int) -> float:
    if n < 1:
        raise ConfigurationError("step index n starts at 1")
    return float(schedule.gammas(n, 1)[0])


# ---------------------------------------------------------------------------
# JSON Lines transition files


def _vector(value, key, line):
    if not isinstance(value, list) or not all(
        isinstance(v, (int, float)) and not isinstance(v, bool) for v in value
    ):
        raise FormatError(f'"{key}" must be an array of numbers', line)
    return value


def load_transitions(path) -> TransitionSet:
    """Read a JSONL transition file; ``dim`` comes from the first record."""
    phis, rewards, nexts = [], [], []
    dim = None
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            if not raw.strip():
                continue
            try:
                rec = json.loads(raw)
            except json.JSONDecodeError as exc:
                raise FormatError(f"invalid JSON ({exc.msg})", lineno) from None
            if not isinstance(rec, dict) or set(rec) != {"phi", "reward", "phi_next"}:
                raise FormatError('expected exactly the keys "phi", "reward", "phi_next"', lineno)
            phi = _vector(rec["phi"], "phi", lineno)
            nxt = _vector(rec["phi_next"], "phi_next", lineno)
            r = rec["reward"]
            if not isinstance(r, (int, float)) or isinstance(r, bool):
                raise FormatError('"reward" must be a number', lineno)
            if dim is None:
                dim = len(phi)
                if dim == 0:
                    raise FormatError("feature vectors must be non-empty", lineno)
            if len(phi) != dim or len(nxt) != dim:
                raise FormatError(
                    f"dimension mismatch: expected {dim}, got phi={len(phi)} "
                    f"phi_next={len(nxt)}",
                    lineno,
                )
            phis.append(phi)
            rewards.append(float(r))
            nexts.append(nxt)
    if not phis:
        raise EmptyPoolError(f"no transitions in {path}")
    return TransitionSet(phis, rewards, nexts)


def save_transitions(tset: TransitionSet, path) -> None:
    """Write ``tset`` as JSONL; floats use shortest round-trip repr."""
    tset.require_nonempty()
    lines = []
    for k in range(tset.t):
        rec = {
            "phi": [float(v) for v in tset.phi[k]],
            "reward": float(tset.rewards[k]),
            "phi_next": [float(v) for v in tset.phi_next[k]],
        }
        lines.append(json.dumps(rec, separators=(",", ":")))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


# ---------------------------------------------------------------------------
# state-action samples for LSTDQ / LSPI


def greedy_actions(next_features: np.ndarray, theta: np.ndarray) -> np.ndarray:
    """Greedy action per sample for ``next_features`` of shape ``(T, A, d)``.

    Ties go to the lowest action index (``np.argmax`` returns the first
    maximiser).
    """
    return np.argmax(next_features @ theta, axis=1)


class QTransitionSet:
    """Samples ``(phi(s_i, a_i), r_i, [phi(s'_i, a) for every a])``.

    ``next_features`` has shape ``(T, A, d)`` so the next-state feature of
    any greedy policy can be looked up without touching raw states.
    """

    __slots__ = ("phi", "rewards", "next_features")

    def __init__(self, phi, rewards, next_features):
        phi = np.asarray(phi, dtype=np.float64)
        rewards = np.asarray(rewards, dtype=np.float64)
        nf = np.asarray(next_features, dtype=np.float64)
        if phi.ndim != 2 or phi.shape[0] == 0:
            raise EmptyPoolError("state-action sample set is empty")
        if nf.ndim != 3 or nf.shape[0] != phi.shape[0] or nf.shape[2] != phi.shape[1]:
            raise ConfigurationError(
                f"next_features must be (T, A, d) = ({phi.shape[0]}, A, {phi.shape[1]}), "
                f"got {nf.shape}"
            )
        if nf.shape[1] < 1:
            raise ConfigurationError("need at least one action")
        if rewards.shape != (phi.shape[0],):
            raise ConfigurationError("rewards must have one entry per sample")
        self.phi = _frozen(phi)
        self.rewards = _frozen(rewards)
        self.next_features = _frozen(nf)

    @property
    def t(self) -> int:
        return self.phi.shape[0]

    @property
    def dim(self) -> int:
        return self.phi.shape[1]

    @property
    def action_count(self) -> int:
        return self.next_features.shape[1]

    def __len__(self):
        return self.t

    def policy_next_features(self, theta) -> np.ndarray:
        """``phi(s'_i, pi(s'_i))`` for the greedy policy of ``theta``."""
        acts = greedy_actions(self.next_features, np.asarray(theta, dtype=float))
        return self.next_features[np.arange(self.t), acts]

    def as_transition_set(self, theta) -> TransitionSet:
        """Freeze the greedy policy of ``theta`` into a plain TransitionSet."""
        return TransitionSet(self.phi, self.rewards, self.policy_next_features(theta))
