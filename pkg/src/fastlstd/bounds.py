"""Closed-form error envelopes for the SA iterations and Monte-Carlo checks.

Every envelope here bounds ``||theta_n - theta_hat||`` either in
expectation (the ``K1`` family) or with probability ``1 - delta`` (the
``K2`` family), after dividing by ``sqrt(n + c)`` (or ``(n + c)^(alpha/2)``
for iterate averaging). Logarithms are natural.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, replace
from typing import NamedTuple, Optional, Sequence, Union

import numpy as np
from scipy.special import gammaincc

from .core import StepSchedule, TransitionSet
from .errors import ConfigurationError, RegimeError, SampleSizeError, StepRegimeError
from .exact import min_eigenvalue

# step-size regime bracket shared by the TD and least-squares corollaries
REGIME_LOW, REGIME_HIGH = 1.33, 2.0


def h_beta(r_max: float, v_max: float, beta: float) -> float:
    """Martingale-difference bound ``sqrt(R(R + 2) + (1 + beta)^2 V^2)``."""
    if r_max < 0 or v_max < 0:
        raise ConfigurationError("r_max and v_max must be non-negative")
    return math.sqrt(r_max * (r_max + 2.0) + (1.0 + beta) ** 2 * v_max**2)


@dataclass(frozen=True)
class BoundParams:
    """Inputs to every closed-form bound.

    ``mu`` may be the string ``"auto"``; call :meth:`resolve` with the sample
    set to replace it by the smallest covariance eigenvalue. ``v_max``
    defaults to ``r_max / (1 - beta)``. ``sigma`` is the noise-variance bound
    used only by the least-squares envelopes.
    """

    beta: float = 0.9
    mu: Union[float, str] = "auto"
    c: float = 1.0
    alpha: float = 0.75
    r_max: float = 1.0
    v_max: Optional[float] = None
    delta: float = 0.05
    init_dist: float = 0.0
    sigma: float = 1.0
    warnings: tuple = field(default=(), compare=False)

    def __post_init__(self):
        if not 0 <= self.beta < 1:
            raise ConfigurationError(f"beta must lie in [0, 1), got {self.beta}")
        if not self.c > 0:
            raise ConfigurationError(f"c must be positive, got {self.c}")
        if not 0 < self.delta <= 1:
            raise ConfigurationError(f"delta must lie in (0, 1], got {self.delta}")
        if self.init_dist < 0 or self.r_max < 0 or self.sigma < 0:
            raise ConfigurationError("init_dist, r_max and sigma must be non-negative")
        if self.v_max is None:
            object.__setattr__(self, "v_max", self.r_max / (1.0 - self.beta))
        if self.mu != "auto":
            mu = float(self.mu)
            if not mu > 0:
                raise ConfigurationError(f"mu must be positive, got {mu}")
            object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "warnings", tuple(self._regime_warnings()))

    def _regime_warnings(self):
        if self.mu == "auto":
            return []
        out = []
        td = (1 - self.beta) ** 2 * self.mu * self.c
        if not REGIME_LOW < td < REGIME_HIGH:
            out.append(f"(1-beta)^2 mu c = {td:.4g} outside ({REGIME_LOW}, {REGIME_HIGH})")
        ls = self.mu * self.c
        if not REGIME_LOW < ls < REGIME_HIGH:
            out.append(f"mu c = {ls:.4g} outside ({REGIME_LOW}, {REGIME_HIGH})")
        return out

    @property
    def mu_value(self) -> float:
        if self.mu == "auto":
            raise ConfigurationError('mu is "auto"; call resolve() with the sample set first')
        return self.mu

    @property
    def td_product(self) -> float:
        """``(1 - beta)^2 mu c``, the quantity gating the TD regimes."""
        return (1 - self.beta) ** 2 * self.mu_value * self.c

    def resolve(self, data) -> "BoundParams":
        """Replace ``mu="auto"`` by ``min_eigenvalue(data)``."""
        if self.mu != "auto":
            return self
        return replace(self, mu=min_eigenvalue(data))

    def with_(self, **changes) -> "BoundParams":
        return replace(self, **changes)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["warnings"] = list(self.warnings)
        return d

    @classmethod
    def for_td_product(cls, beta, mu, product, **kw) -> "BoundParams":
        """Params whose ``c`` makes ``(1 - beta)^2 mu c`` equal ``product``."""
        return cls(beta=beta, mu=mu, c=product / ((1 - beta) ** 2 * mu), **kw)


def _log_inv(delta):
    return math.log(1.0 / delta)


def k1(params: BoundParams, n: int) -> float:
    """Expectation constant ``K1(n)``; the envelope is ``K1(n) / sqrt(n + c)``."""
    p = params
    prod = p.td_product
    if prod <= 1:
        raise RegimeError(f"(1-beta)^2 mu c = {prod:.4g} <= 1: initial-error term does not decay")
    h = h_beta(p.r_max, p.v_max, p.beta)
    first = math.sqrt(p.c) * p.init_dist / n ** ((prod - 1) / 2)
    return first + (1 - p.beta) * p.c * h / 2


def k2(params: BoundParams, n: int) -> float:
    """High-probability constant ``K2(n)``: ``P(err <= K2/sqrt(n+c)) >= 1 - delta``."""
    p = params
    rad = 4.0 / 3.0 * p.td_product - 1
    if rad <= 0:
        raise RegimeError(f"(4/3)(1-beta)^2 mu c - 1 = {rad:.4g} <= 0")
    extra = (1 - p.beta) * p.c * math.sqrt(_log_inv(p.delta)) / (2 * math.sqrt(rad))
    return extra + k1(p, n)


def envelope(params: BoundParams, n: int, high_probability: bool = True) -> float:
    """``K2(n) / sqrt(n + c)`` (or ``K1`` when ``high_probability`` is False)."""
    k = k2(params, n) if high_probability else k1(params, n)
    return k / math.sqrt(n + params.c)


class CSum(NamedTuple):
    """``sum_{n>=1} exp(-a n^p)`` with the truncation point and a tail bound."""

    value: float
    terms: int
    tail_bound: float


def _tail_integral(a, p, x):
    # int_x^inf exp(-a t^p) dt = Gamma(1/p, a x^p) / (p a^(1/p))
    s = 1.0 / p
    if x <= 0:
        return math.exp(math.lgamma(s)) / (p * a**s)
    return float(gammaincc(s, a * x**p)) * math.exp(math.lgamma(s)) / (p * a**s)


def averaging_constant(
    mu: float, c: float, alpha: float, max_terms: int = 50_000_000, tail_tol: float = 1e-12
) -> CSum:
    """``C = sum_{n>=1} exp(-mu c n^(1-alpha))`` by direct summation.

    Terms are added until they drop below 1e-16 and the integral of the
    summand beyond the last term (``tail_bound``, an upper bound on the
    truncation error) is below ``tail_tol``. When that would need more than
    ``max_terms`` terms, the remainder is replaced by the integral estimate
    ``int_N^inf f - f(N)/2``.
    """
    a = mu * c
    if not a > 0:
        raise ConfigurationError(f"mu c = {a} must be positive for C to converge")
    if not 0.5 < alpha < 1:
        raise ConfigurationError(f"alpha must lie in (1/2, 1), got {alpha}")
    p = 1.0 - alpha
    need = (math.log(1e16) / a) ** (1.0 / p)
    while _tail_integral(a, p, need) > tail_tol:
        need *= 1.25
    n_stop = int(min(math.ceil(need), max_terms))
    total = 0.0
    chunk = 1 << 20
    for start in range(1, n_stop + 1, chunk):
        idx = np.arange(start, min(start + chunk, n_stop + 1), dtype=np.float64)
        total += float(np.exp(-a * idx**p).sum())
    tail = _tail_integral(a, p, n_stop)
    if n_stop < need:
        total += tail - 0.5 * math.exp(-a * n_stop**p)
    return CSum(total, n_stop, tail)


def k_ia(params: BoundParams, n: int):
    """Iterate-averaging constants ``(K1_IA(n), K2_IA(n))``.

    The envelope is ``K / (n + c)^(alpha/2)``. The constant ``C`` needs
    ``mu`` even though the averaging result is otherwise free of it.
    """
    p = params
    mu = p.mu_value
    a = p.alpha
    if not 0.5 < a < 1:
        raise ConfigurationError(f"alpha must lie in (1/2, 1), got {a}")
    h = h_beta(p.r_max, p.v_max, p.beta)
    base = mu * p.c**a * (1 - p.beta) ** 2
    decay = (n + p.c) ** ((1 - a) / 2)
    first = 0.0
    if p.init_dist:
        first = averaging_constant(mu, p.c, a).value * p.init_dist / decay
    k1_ia = first + h * p.c**a * (1 - p.beta) / base ** (a * (1 + 2 * a) / (2 * (1 - a)))
    bracket = 3**a + (2 * a / base + 2**a / a) ** 2
    k2_ia = math.sqrt(_log_inv(p.delta)) / (mu * (1 - p.beta)) * bracket / decay + k1_ia
    return k1_ia, k2_ia


def h_ls(params: BoundParams, n: int) -> float:
    """``h(n) = c[(sigma + 2 e0^2) + 4 e0 ln n + 2 ln^2 n]`` with ``e0 = init_dist``."""
    p = params
    ln = math.log(n)
    e0 = p.init_dist
    return p.c * ((p.sigma + 2 * e0**2) + 4 * e0 * ln + 2 * ln**2)


def k1_ls(params: BoundParams, n: int) -> float:
    """Least-squares expectation constant; envelope ``K1_LS(n) / sqrt(n + c)``."""
    p = params
    mc = p.mu_value * p.c
    first = math.sqrt(p.c) * p.init_dist / (n + p.c) ** ((mc - 1) / 2)
    return first + h_ls(p, n) / 2


def k_ls(params: BoundParams, n: int):
    """Least-squares constants ``(K1_LS(n), K2_LS(n))``.

    ``K2_LS`` carries the radical ``sqrt(mu c / 2 - 1)``, which is real only
    for ``mu c > 2``, outside the bracket ``(1.33, 2)`` the schedule is
    meant for. Use :func:`k1_ls` alone inside that bracket.

    Raises:
        RegimeError: ``mu c <= 2``.
    """
    p = params
    rad = p.mu_value * p.c / 2 - 1
    if rad <= 0:
        raise RegimeError(f"mu c / 2 - 1 = {rad:.4g} <= 0: K2_LS radical is not real")
    first = k1_ls(p, n)
    return first, math.sqrt(p.c) * math.sqrt(_log_inv(p.delta)) / math.sqrt(rad) + first


def li_factors(gammas: np.ndarray, mu: float, beta: float) -> np.ndarray:
    """Per-step squared contraction factors ``1 - 2 g mu ((1-beta) - beta(2-beta) g)``."""
    return 1.0 - 2.0 * gammas * mu * ((1 - beta) - beta * (2 - beta) * gammas)


def li_sum(schedule: StepSchedule, params: BoundParams, n: int) -> float:
    """``sum_{i=1}^n L_i^2`` with ``L_i^2 = gamma_i^2 prod_{j=i+1}^n f_j``.

    Evaluated by the running recursion ``S_k = f_k S_{k-1} + gamma_k^2``.

    Raises:
        StepRegimeError: some ``f_j`` is negative (steps too large).
    """
    if n < 1:
        raise ConfigurationError("n must be at least 1")
    g = schedule.gammas(1, n)
    f = li_factors(g, params.mu_value, params.beta)
    bad = np.flatnonzero(f < 0)
    if bad.size:
        raise StepRegimeError(f"contraction factor negative at step {int(bad[0]) + 1}")
    s = 0.0
    g2 = g * g
    for k in range(n):
        s = f[k] * s + g2[k]
    return float(s)


def li_sum_closed_form(params: BoundParams, n: int) -> float:
    """Regime-(iii) bound ``K / (n + c)``, ``K = (1-b)^2 c^2 / (4((1-b)^2 mu c - 1))``."""
    p = params
    prod = p.td_product
    if prod <= 1:
        raise RegimeError(f"(1-beta)^2 mu c = {prod:.4g} <= 1 is not regime (iii)")
    kk = (1 - p.beta) ** 2 * p.c**2 / (4 * (prod - 1))
    return kk / (n + p.c)


def li_sum_upper_bound(params: BoundParams, n: int) -> float:
    """Conservative form ``(1-b)^2 c^2 / (4((3/4)(1-b)^2 mu c - 1)(n + c))``.

    The factor 3/4 absorbs the quadratic step term of the contraction
    factor, so this dominates :func:`li_sum` for every ``n``, whereas
    :func:`li_sum_closed_form` is its large-``n`` limit.
    """
    p = params
    prod = 0.75 * p.td_product
    if prod <= 1:
        raise RegimeError(f"(3/4)(1-beta)^2 mu c = {prod:.4g} <= 1")
    return (1 - p.beta) ** 2 * p.c**2 / (4 * (prod - 1)) / (n + p.c)


def raw_tail_bound(eps: float, li: float) -> float:
    """Concentration bound ``exp(-eps^2 / (2 sum L_i^2))``."""
    return math.exp(-(eps**2) / (2 * li))


@dataclass(frozen=True)
class RateNote:
    """Terms of the performance bound whose constants are not explicit."""

    estimation: str = "O(sqrt(d log(1/delta)) / (T mu))"
    approximation: str = "O(sqrt(d log(1/delta) / T)) for the sampling of the pool"
    rank_deficient: bool = False
    rank: int = 0


class PerfBoundTerms(NamedTuple):
    residual: float
    rate_note: RateNote


def perf_bound_terms(tset: TransitionSet, beta: float, true_values) -> PerfBoundTerms:
    """Residual ``||v - Pi v||_T / sqrt(1 - beta^2)`` of the performance bound.

    ``Pi`` is the orthogonal projection onto the column span of the
    ``(T, d)`` feature matrix under ``||x||_T^2 = (1/T) sum x_i^2``. With
    rank-deficient features the projection is taken onto the actual span
    (minimum-norm least squares) and the note is flagged.
    """
    v = np.asarray(true_values, dtype=float).ravel()
    phi = tset.phi
    if v.shape[0] != phi.shape[0]:
        raise ConfigurationError(f"need {phi.shape[0]} true values, got {v.shape[0]}")
    if not 0 <= beta < 1:
        raise ConfigurationError(f"beta must lie in [0, 1), got {beta}")
    coef, _, rank, _ = np.linalg.lstsq(phi, v, rcond=None)
    resid = v - phi @ coef
    norm_t = math.sqrt(float(resid @ resid) / v.shape[0])
    note = RateNote(rank_deficient=int(rank) < phi.shape[1], rank=int(rank))
    return PerfBoundTerms(norm_t / math.sqrt(1 - beta**2), note)


@dataclass(frozen=True)
class QuantileReport:
    params: BoundParams
    n: int
    envelope: float
    empirical_fraction: float
    passed: bool
    runs: int
    threshold: float

    def to_dict(self) -> dict:
        return {
            "params": self.params.to_dict(),
            "n": self.n,
            "envelope": self.envelope,
            "empirical_fraction": self.empirical_fraction,
            "pass": self.passed,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


MIN_RUNS = 100


def binomial_slack(delta: float, runs: int, sigmas: float = 3.0) -> float:
    return sigmas * math.sqrt(delta * (1 - delta) / runs)


def quantile_check_errors(errors: Sequence[float], params: BoundParams, n: int, delta=None):
    """Core of :func:`empirical_quantile_check` on a plain list of errors."""
    delta = params.delta if delta is None else delta
    errors = np.asarray(errors, dtype=float)
    if errors.shape[0] < MIN_RUNS:
        raise SampleSizeError(f"need at least {MIN_RUNS} runs, got {errors.shape[0]}")
    params = params.with_(delta=delta)
    env = envelope(params, n)
    frac = float(np.mean(errors <= env))
    threshold = 1 - delta - binomial_slack(delta, errors.shape[0])
    return QuantileReport(params, n, env, frac, frac >= threshold, errors.shape[0], threshold)


def empirical_quantile_check(trajectories, params: BoundParams, n: int, delta=None) -> QuantileReport:
    """Fraction of runs with ``||theta_n - theta_hat|| <= K2(n) / sqrt(n + c)``.

    Passes when the fraction is at least ``1 - delta`` minus a 3-sigma
    binomial allowance for the finite number of runs.

    Raises:
        SampleSizeError: fewer than 100 trajectories.
        KeyError: some trajectory did not record step ``n``.
    """
    if len(trajectories) < MIN_RUNS:
        raise SampleSizeError(f"need at least {MIN_RUNS} runs, got {len(trajectories)}")
    return quantile_check_errors([tr.at(n) for tr in trajectories], params, n, delta)
