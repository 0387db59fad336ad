"""Synthetic signalised road grid.

Every intersection has ``lanes_per_intersection`` incoming lanes; the first
half belong to the north-south phase and the second half to the east-west
phase. A joint action is a bitmask with bit ``k`` set when intersection
``k`` gives green to east-west. Each tick, green lanes discharge up to
``service_rate`` vehicles (these count as arrived road users), every lane
gains one vehicle with probability ``arrival_prob``, and red lanes age by
one tick. Queues are capped at ``queue_cap`` so rewards stay bounded.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Callable, NamedTuple, Optional

import numpy as np

from .configfile import parse_bool, read_kv, write_kv
from .core import QTransitionSet, TransitionSet
from .errors import ConfigurationError, FormatError, ScaleError
from .rng import RngHandle, uniforms

MAX_ACTIONS = 2**8

# RED feature value per (queue band, elapsed band); GREEN is 0.07 minus it
_RED = np.array([[0.01, 0.02], [0.03, 0.04], [0.05, 0.06]])
FEATURE_TABLE = np.stack([_RED, 0.07 - _RED], axis=-1)  # [qband, tband, green]
FEATURE_MAX = 0.06


def _int_tuple(s):
    s = s.strip()
    return tuple(int(x) for x in s.split(",")) if s else ()


def _float_tuple(s):
    return tuple(float(x) for x in s.split(","))


@dataclass(frozen=True)
class GridConfig:
    """Grid geometry, traffic process, cost weights and feature options.

    ``priority_lanes`` holds global lane indices (intersection ``k`` owns
    lanes ``k*lanes_per_intersection ...``); ``None`` selects every
    north-south lane. ``thresholds`` is ``(L1, L2, T1)`` and
    ``cost_weights`` is ``(u1, w1, u2, w2)``.
    """

    rows: int = 2
    cols: int = 2
    lanes_per_intersection: int = 4
    arrival_prob: float = 0.55
    service_rate: int = 1
    priority_lanes: Optional[tuple] = None
    thresholds: tuple = (6, 14, 130)
    cost_weights: tuple = (0.5, 0.5, 0.6, 0.4)
    horizon: int = 100
    normalize_features: bool = True
    queue_cap: int = 200

    def __post_init__(self):
        if self.rows < 1 or self.cols < 1:
            raise ConfigurationError("rows and cols must be positive")
        lpi = self.lanes_per_intersection
        if lpi < 2 or lpi % 2:
            raise ConfigurationError("lanes_per_intersection must be a positive even number")
        if not 0 <= self.arrival_prob <= 1:
            raise ConfigurationError("arrival_prob must lie in [0, 1]")
        if self.service_rate < 1:
            raise ConfigurationError("service_rate must be a positive integer")
        if self.horizon < 1:
            raise ConfigurationError("horizon must be positive")
        if self.queue_cap < 1:
            raise ConfigurationError("queue_cap must be positive")
        l1, l2, t1 = self.thresholds
        if not l1 < l2:
            raise ConfigurationError(f"need L1 < L2, got {l1}, {l2}")
        if not t1 > 0:
            raise ConfigurationError("T1 must be positive")
        u1, w1, u2, w2 = self.cost_weights
        if min(self.cost_weights) < 0:
            raise ConfigurationError("cost weights must be non-negative")
        if not (math.isclose(u1 + w1, 1.0) and math.isclose(u2 + w2, 1.0)):
            raise ConfigurationError("cost weights need u1 + w1 = 1 and u2 + w2 = 1")
        if not u2 > w2:
            raise ConfigurationError("cost weights need u2 > w2")
        if self.priority_lanes is None:
            half = lpi // 2
            pri = tuple(k * lpi + j for k in range(self.intersections) for j in range(half))
        else:
            pri = tuple(sorted(set(int(i) for i in self.priority_lanes)))
            if any(not 0 <= i < self.lanes for i in pri):
                raise ConfigurationError(f"priority lane index out of range 0..{self.lanes - 1}")
        object.__setattr__(self, "priority_lanes", pri)
        object.__setattr__(self, "thresholds", tuple(int(x) for x in self.thresholds))
        object.__setattr__(self, "cost_weights", tuple(float(x) for x in self.cost_weights))

    @property
    def intersections(self) -> int:
        return self.rows * self.cols

    @property
    def lanes(self) -> int:
        return self.intersections * self.lanes_per_intersection

    @property
    def action_count(self) -> int:
        return 2**self.intersections

    def lane_weights(self) -> np.ndarray:
        """Per-lane weight: ``u2`` on priority lanes, ``w2`` elsewhere."""
        _, _, u2, w2 = self.cost_weights
        w = np.full(self.lanes, w2)
        w[list(self.priority_lanes)] = u2
        return w

    def reward_bound(self) -> float:
        """Largest possible single-stage cost (queues capped, elapsed < horizon)."""
        u1, w1, _, _ = self.cost_weights
        return float(self.lane_weights().sum() * (u1 * self.queue_cap + w1 * self.horizon))

    def to_kv(self) -> dict:
        out = {}
        for f in fields(self):
            v = getattr(self, f.name)
            if isinstance(v, tuple):
                v = ",".join(str(x) for x in v)
            elif isinstance(v, bool):
                v = "true" if v else "false"
            out[f.name] = str(v)
        return out

    @classmethod
    def from_kv(cls, items: dict) -> "GridConfig":
        conv = {
            "rows": int, "cols": int, "lanes_per_intersection": int,
            "arrival_prob": float, "service_rate": int, "priority_lanes": _int_tuple,
            "thresholds": _int_tuple, "cost_weights": _float_tuple, "horizon": int,
            "normalize_features": parse_bool, "queue_cap": int,
        }
        kw = {}
        for key, value in items.items():
            if key not in conv:
                raise ConfigurationError(f"unknown grid config key {key!r}")
            try:
                kw[key] = conv[key](value)
            except ValueError as exc:
                raise ConfigurationError(f"bad value for {key}: {value!r}") from exc
        return cls(**kw)

    def save(self, path) -> None:
        write_kv(self.to_kv(), path)

    @classmethod
    def load(cls, path) -> "GridConfig":
        return cls.from_kv(read_kv(path))

    def with_grid(self, spec: str) -> "GridConfig":
        """Copy with geometry from a ``"RxC"`` string."""
        try:
            r, c = (int(x) for x in spec.lower().split("x"))
        except ValueError as exc:
            raise ConfigurationError(f"grid must look like 2x2, got {spec!r}") from exc
        kw = asdict(self)
        kw.update(rows=r, cols=c, priority_lanes=None)
        return GridConfig(**kw)


@dataclass
class EnvState:
    """Queue lengths and ticks since each lane's light turned red."""

    queues: np.ndarray
    elapsed: np.ndarray

    def __post_init__(self):
        self.queues = np.asarray(self.queues, dtype=np.int64)
        self.elapsed = np.asarray(self.elapsed, dtype=np.int64)
        if self.queues.shape != self.elapsed.shape or self.queues.ndim != 1:
            raise ConfigurationError("queues and elapsed must be equal-length vectors")
        if (self.queues < 0).any() or (self.elapsed < 0).any():
            raise ConfigurationError("queues and elapsed times must be non-negative")

    @classmethod
    def empty(cls, config: GridConfig) -> "EnvState":
        return cls(np.zeros(config.lanes, np.int64), np.zeros(config.lanes, np.int64))

    def copy(self) -> "EnvState":
        return EnvState(self.queues.copy(), self.elapsed.copy())

    def __eq__(self, other):
        return (
            isinstance(other, EnvState)
            and np.array_equal(self.queues, other.queues)
            and np.array_equal(self.elapsed, other.elapsed)
        )


def _green_table(config: GridConfig) -> np.ndarray:
    """``(A, L)`` boolean matrix: lane green under joint action."""
    lpi = config.lanes_per_intersection
    half = lpi // 2
    acts = np.arange(config.action_count)[:, None]
    lane = np.arange(config.lanes)[None, :]
    ew = (acts >> (lane // lpi)) & 1
    return (lane % lpi >= half) == (ew == 1)


def feasible_actions(config: GridConfig) -> list:
    """All joint phase choices, as integers ``0 .. 2^(rows*cols) - 1``.

    Raises:
        ScaleError: more than 256 joint actions.
    """
    if config.action_count > MAX_ACTIONS:
        raise ScaleError(
            f"{config.intersections} intersections give {config.action_count} joint actions "
            f"(limit {MAX_ACTIONS}); use per-intersection factored actions instead"
        )
    return list(range(config.action_count))


def green_lanes(config: GridConfig, action: int) -> np.ndarray:
    if not 0 <= action < config.action_count:
        raise ConfigurationError(f"action {action} not in 0..{config.action_count - 1}")
    lpi = config.lanes_per_intersection
    lane = np.arange(config.lanes)
    ew = (action >> (lane // lpi)) & 1
    return (lane % lpi >= lpi // 2) == (ew == 1)


def cost(state: EnvState, config: GridConfig) -> float:
    """Single-stage cost; non-negative and zero only for the empty network."""
    u1, w1, _, _ = config.cost_weights
    w = config.lane_weights()
    return float(u1 * (w @ state.queues) + w1 * (w @ state.elapsed))


class StepOutcome(NamedTuple):
    state: EnvState
    cost: float
    discharged: np.ndarray
    arrivals: np.ndarray


def step_detailed(state: EnvState, action: int, config: GridConfig, rng: RngHandle) -> StepOutcome:
    green = green_lanes(config, action)
    c = cost(state, config)
    discharged = np.where(green, np.minimum(state.queues, config.service_rate), 0)
    q = state.queues - discharged
    arrivals = (uniforms(rng, config.lanes) < config.arrival_prob).astype(np.int64)
    arrivals = np.minimum(arrivals, config.queue_cap - q)
    q = q + arrivals
    elapsed = np.where(green, 0, state.elapsed + 1)
    return StepOutcome(EnvState(q, elapsed), c, discharged, arrivals)


def step(state: EnvState, action: int, config: GridConfig, rng: RngHandle):
    """Advance one tick; returns ``(next_state, cost_of_current_state)``."""
    out = step_detailed(state, action, config, rng)
    return out.state, out.cost


def _bands(q, t, config):
    l1, l2, t1 = config.thresholds
    qb = (q >= l1).astype(np.int64) + (q >= l2)
    tb = (t >= t1).astype(np.int64)
    return qb, tb


def feature_scale(config: GridConfig) -> float:
    return FEATURE_MAX * math.sqrt(config.lanes) if config.normalize_features else 1.0


def features(state: EnvState, action: int, config: GridConfig) -> np.ndarray:
    """Graded per-lane feature vector of ``(state, action)``."""
    qb, tb = _bands(state.queues, state.elapsed, config)
    g = green_lanes(config, action).astype(np.int64)
    return FEATURE_TABLE[qb, tb, g] / feature_scale(config)


def all_action_features(state: EnvState, config: GridConfig) -> np.ndarray:
    """``(A, L)`` features of ``state`` under every joint action."""
    feasible_actions(config)
    qb, tb = _bands(state.queues, state.elapsed, config)
    g = _green_table(config).astype(np.int64)
    return FEATURE_TABLE[qb[None, :], tb[None, :], g] / feature_scale(config)


def batch_action_features(queues, elapsed, config: GridConfig) -> np.ndarray:
    """``(N, A, L)`` features for ``N`` states stored row-wise."""
    qb, tb = _bands(np.asarray(queues), np.asarray(elapsed), config)
    g = _green_table(config).astype(np.int64)
    return FEATURE_TABLE[qb[:, None, :], tb[:, None, :], g[None]] / feature_scale(config)


class TrafficFeatureMap:
    """State-action feature handle for a grid, usable by LSPI policies."""

    def __init__(self, config: GridConfig):
        self.config = config
        self.dim = config.lanes
        self.action_count = config.action_count

    def __call__(self, state: EnvState, action: int) -> np.ndarray:
        return features(state, action, self.config)

    def all_actions(self, state: EnvState) -> np.ndarray:
        return all_action_features(state, self.config)


@dataclass
class EnvSamples:
    """Recorded transitions ``(s, a, -cost(s), s')`` stored row-wise."""

    q: np.ndarray
    t: np.ndarray
    action: np.ndarray
    reward: np.ndarray
    q_next: np.ndarray
    t_next: np.ndarray

    def __len__(self):
        return self.action.shape[0]

    def __eq__(self, other):
        return isinstance(other, EnvSamples) and all(
            np.array_equal(getattr(self, f.name), getattr(other, f.name)) for f in fields(self)
        )

    def q_transition_set(self, config: GridConfig) -> QTransitionSet:
        """Features of ``(s, a)`` plus next-state features for every action."""
        qb, tb = _bands(self.q, self.t, config)
        g = _green_table(config).astype(np.int64)[self.action]
        phi = FEATURE_TABLE[qb, tb, g] / feature_scale(config)
        nxt = batch_action_features(self.q_next, self.t_next, config)
        return QTransitionSet(phi, self.reward, nxt)

    def uniform_policy_transition_set(self, config: GridConfig) -> TransitionSet:
        """Pool for evaluating the uniformly random policy.

        ``phi_next`` is the expectation of ``phi(s', a')`` over a uniform
        ``a'``, which gives the same LSTD system as sampling ``a'``.
        """
        qs = self.q_transition_set(config)
        return TransitionSet(qs.phi, qs.rewards, qs.next_features.mean(axis=1))

    def save_jsonl(self, path, header: Optional[str] = None) -> None:
        """One JSON object per line; ``header`` (a ``#`` comment) goes first."""
        with open(path, "w", encoding="utf-8") as fh:
            if header:
                fh.write(header if header.endswith("\n") else header + "\n")
            for k in range(len(self)):
                rec = {
                    "q": self.q[k].tolist(),
                    "t": self.t[k].tolist(),
                    "action": int(self.action[k]),
                    "reward": float(self.reward[k]),
                    "q_next": self.q_next[k].tolist(),
                    "t_next": self.t_next[k].tolist(),
                }
                fh.write(json.dumps(rec, separators=(",", ":")) + "\n")

    @classmethod
    def load_jsonl(cls, path) -> "EnvSamples":
        cols = {k: [] for k in ("q", "t", "action", "reward", "q_next", "t_next")}
        with open(path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                if not line.strip() or line.startswith("#"):
                    continue
                try:
                    rec = json.loads(line)
                    for k in cols:
                        cols[k].append(rec[k])
                except (json.JSONDecodeError, KeyError, TypeError) as exc:
                    raise FormatError(f"bad sample record ({exc})", line=lineno) from exc
        if not cols["action"]:
            raise FormatError("no sample records")
        try:
            return cls(
                np.array(cols["q"], np.int64), np.array(cols["t"], np.int64),
                np.array(cols["action"], np.int64), np.array(cols["reward"], float),
                np.array(cols["q_next"], np.int64), np.array(cols["t_next"], np.int64),
            )
        except ValueError as exc:
            raise FormatError(f"inconsistent lane counts ({exc})") from exc


def _choose(policy, state, config, rng):
    if policy is None or policy == "uniform":
        return int(rng.draw_indices(config.action_count, 1)[0])
    return int(policy(state))


def collect_samples(
    config: GridConfig,
    policy=None,
    episodes: int = 100,
    rng: Optional[RngHandle] = None,
) -> EnvSamples:
    """Simulate ``episodes`` episodes of ``config.horizon`` ticks from an empty grid.

    ``policy`` is ``None`` (uniformly random joint action) or a callable
    ``state -> action``. Reward is the negated cost of the pre-transition
    state.
    """
    if episodes < 1:
        raise ConfigurationError("episodes must be positive")
    rng = rng or RngHandle(0)
    total = episodes * config.horizon
    lanes = config.lanes
    out = EnvSamples(
        np.empty((total, lanes), np.int64), np.empty((total, lanes), np.int64),
        np.empty(total, np.int64), np.empty(total), np.empty((total, lanes), np.int64),
        np.empty((total, lanes), np.int64),
    )
    k = 0
    for _ in range(episodes):
        state = EnvState.empty(config)
        for _ in range(config.horizon):
            a = _choose(policy, state, config, rng)
            nxt, c = step(state, a, config, rng)
            out.q[k], out.t[k] = state.queues, state.elapsed
            out.action[k], out.reward[k] = a, -c
            out.q_next[k], out.t_next[k] = nxt.queues, nxt.elapsed
            state = nxt
            k += 1
    return out


class TarResult(NamedTuple):
    tar: int
    mean_cost: float


def evaluate_policy_tar(
    config: GridConfig,
    policy=None,
    episodes: int = 10,
    rng: Optional[RngHandle] = None,
) -> TarResult:
    """Run ``policy`` closed-loop; TAR counts every discharged vehicle."""
    if episodes < 1:
        raise ConfigurationError("episodes must be positive")
    rng = rng or RngHandle(0)
    tar = 0
    total_cost = 0.0
    for _ in range(episodes):
        state = EnvState.empty(config)
        for _ in range(config.horizon):
            a = _choose(policy, state, config, rng)
            out = step_detailed(state, a, config, rng)
            tar += int(out.discharged.sum())
            total_cost += out.cost
            state = out.state
    return TarResult(tar, total_cost / (episodes * config.horizon))
