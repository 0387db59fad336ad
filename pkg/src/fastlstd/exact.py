"""Batch LSTD, LSTDQ and least-squares solutions.

These are the reference points every stochastic-approximation iterate is
measured against. Dense solves use LAPACK's pivoted LU (``Ā`` is not
symmetric for LSTD); the Sherman-Morrison path accumulates the inverse one
sample at a time at O(d^2) cost per sample.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import QTransitionSet, TransitionSet, greedy_actions
from .errors import ConfigurationError, EmptyPoolError, SingularityError, UpdateBreakdownError
from .kernels import sherman_morrison_kernel

#: condition-number estimate beyond which a system is declared singular
CONDITION_LIMIT = 1e12
#: default ridge seeding the Sherman-Morrison running inverse
SM_RIDGE = 1e-8


@dataclass(frozen=True)
class LstdSystem:
    """The empirical system ``Ā θ = b̄`` built from ``t`` samples."""

    a_bar: np.ndarray
    b_bar: np.ndarray
    t: int
    beta: float

    @property
    def dim(self) -> int:
        return self.b_bar.shape[0]

    def residual(self, theta, mu: float = 0.0) -> np.ndarray:
        """``(Ā + mu I) θ - b̄``; zero at the (regularised) solution."""
        theta = np.asarray(theta, dtype=float)
        return self.a_bar @ theta + mu * theta - self.b_bar

    def solve(self, mu: float = 0.0) -> np.ndarray:
        a = self.a_bar + mu * np.eye(self.dim) if mu else self.a_bar
        return solve_checked(a, self.b_bar)


@dataclass(frozen=True)
class RegularizedSolution:
    theta: np.ndarray
    mu: float


def solve_checked(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Dense pivoted-LU solve that refuses ill-conditioned matrices."""
    with np.errstate(all="ignore"):
        cond = float(np.linalg.cond(a))
    if not np.isfinite(cond) or cond > CONDITION_LIMIT:
        raise SingularityError(
            f"matrix is singular to working precision (condition estimate {cond:.3e})",
            condition=cond,
        )
    return np.linalg.solve(a, b)


def _check_beta(beta):
    if not 0 <= beta < 1:
        raise ConfigurationError(f"discount beta must lie in [0, 1), got {beta}")


def lstd_system(tset: TransitionSet, beta: float) -> LstdSystem:
    tset.require_nonempty()
    _check_beta(beta)
    t = tset.t
    a_bar = tset.phi.T @ (tset.phi - beta * tset.phi_next) / t
    b_bar = tset.phi.T @ tset.rewards / t
    return LstdSystem(a_bar, b_bar, t, beta)


def lstd_solve(tset: TransitionSet, beta: float) -> np.ndarray:
    """LSTD solution ``Ā⁻¹ b̄``.

    Raises:
        SingularityError: ``Ā`` has condition estimate above 1e12; use
            :func:`lstd_solve_reg` instead.
    """
    return lstd_system(tset, beta).solve()


def lstd_solve_reg(tset: TransitionSet, beta: float, mu: float) -> RegularizedSolution:
    """Regularised LSTD solution ``(Ā + mu I)⁻¹ b̄``."""
    if not mu > 0:
        raise ConfigurationError(f"regulariser mu must be positive, got {mu}")
    return RegularizedSolution(lstd_system(tset, beta).solve(mu), float(mu))


def sherman_morrison_inverse(tset: TransitionSet, beta: float, ridge: float = SM_RIDGE):
    """Running inverse ``P = (ridge I + T Ā)⁻¹`` and ``T b̄`` by rank-one updates."""
    tset.require_nonempty()
    _check_beta(beta)
    if not ridge > 0:
        raise ConfigurationError("ridge must be positive")
    d = tset.dim
    p = np.eye(d) / ridge
    b = np.zeros(d)
    work_u = np.empty(d)
    work_v = np.empty(d)
    k = sherman_morrison_kernel(
        tset.phi, tset.rewards, tset.phi_next, float(beta), p, b, work_u, work_v
    )
    if k >= 0:
        raise UpdateBreakdownError(int(k) + 1, float(work_u[0]))
    return p, b


def lstd_solve_sherman_morrison(
    tset: TransitionSet, beta: float, ridge: float = SM_RIDGE
) -> np.ndarray:
    """LSTD via Sherman-Morrison, O(d^2) per sample.

    The recursion is seeded with ``(ridge I)⁻¹``, which biases the result by
    O(ridge / (T λ_min(Ā))).

    Raises:
        UpdateBreakdownError: an update denominator fell below 1e-12; the
            error names the 1-based sample index.
    """
    p, b = sherman_morrison_inverse(tset, beta, ridge)
    return p @ b


def lstdq_system(samples: QTransitionSet, policy_theta, beta: float) -> LstdSystem:
    """LSTDQ system for the greedy policy of ``policy_theta`` (lowest index on ties)."""
    if samples.t == 0:
        raise EmptyPoolError("no state-action samples")
    policy_theta = np.asarray(policy_theta, dtype=float)
    if policy_theta.shape != (samples.dim,):
        raise ConfigurationError(
            f"policy_theta has shape {policy_theta.shape}, expected ({samples.dim},)"
        )
    acts = greedy_actions(samples.next_features, policy_theta)
    nxt = samples.next_features[np.arange(samples.t), acts]
    return lstd_system(TransitionSet(samples.phi, samples.rewards, nxt), beta)


def ls_system(xs, ys) -> LstdSystem:
    xs = np.atleast_2d(np.asarray(xs, dtype=float))
    ys = np.asarray(ys, dtype=float).ravel()
    if xs.shape[0] == 0:
        raise EmptyPoolError("no regression samples")
    if ys.shape[0] != xs.shape[0]:
        raise ConfigurationError("xs and ys must have the same length")
    t = xs.shape[0]
    return LstdSystem(xs.T @ xs / t, xs.T @ ys / t, t, 0.0)


def ls_solve(xs, ys) -> np.ndarray:
    """Least-squares minimiser of ``sum (y_i - θ^T x_i)^2`` via the normal equations."""
    return ls_system(xs, ys).solve()


def min_eigenvalue(data) -> float:
    """Smallest eigenvalue of the feature covariance ``Φ^T Φ / T``.

    ``data`` is a TransitionSet (its ``phi`` rows are used) or a ``(T, d)``
    array of feature rows.
    """
    phi = data.phi if isinstance(data, (TransitionSet, QTransitionSet)) else np.asarray(data, float)
    phi = np.atleast_2d(phi)
    if phi.shape[0] == 0:
        raise EmptyPoolError("no samples")
    # canonical row order makes the result bitwise permutation-invariant
    phi = phi[np.lexsort(phi.T[::-1])]
    cov = phi.T @ phi / phi.shape[0]
    return max(float(np.linalg.eigvalsh(cov)[0]), 0.0)
