"""Compiled inner loops.

Everything here is plain loops over float64 arrays so that one SA step
costs O(d) and one Sherman-Morrison update costs O(d^2), with no
interpreter overhead hiding the scaling. Index draws go through
``rng.uniform_index`` so compiled and pure-Python paths share one stream.
"""

import numpy as np
from numba import njit

from .rng import uniform_index


@njit(cache=True)
def _dot(a, b):
    s = 0.0
    for j in range(a.shape[0]):
        s += a[j] * b[j]
    return s


@njit(cache=True)
def _dist(a, b):
    s = 0.0
    for j in range(a.shape[0]):
        diff = a[j] - b[j]
        s += diff * diff
    return np.sqrt(s)


@njit(cache=True)
def sa_kernel(
    phi, rewards, phi_next, use_next, beta, gammas, mu,
    theta, theta_bar, n0, avg_count, burn_in, averaging,
    seed, counter, reference, checkpoints, rec_norm, rec_avg, rec_pos,
):
    """Run ``len(gammas)`` randomised TD (or LS, when ``use_next`` is False) steps.

    ``theta`` and ``theta_bar`` are updated in place. The step with global
    index ``n = n0 + k + 1`` uses ``gammas[k]``; whenever ``n`` equals the
    next pending entry of ``checkpoints`` the distances to ``reference`` are
    written at ``rec_pos``. Returns ``(counter, avg_count, rec_pos, excursion)``
    where ``excursion`` is the largest ``|theta^T phi|`` seen on a sampled row.
    """
    t = phi.shape[0]
    d = phi.shape[1]
    excursion = 0.0
    n_ckpt = checkpoints.shape[0]
    for k in range(gammas.shape[0]):
        n = n0 + k + 1
        i, counter = uniform_index(seed, counter, t)
        g = gammas[k]
        row = phi[i]
        v = _dot(theta, row)
        if abs(v) > excursion:
            excursion = abs(v)
        delta = rewards[i] - v
        if use_next:
            delta += beta * _dot(theta, phi_next[i])
        gd = g * delta
        shrink = 1.0 - g * mu
        if mu != 0.0:
            for j in range(d):
                theta[j] = shrink * theta[j] + gd * row[j]
        else:
            for j in range(d):
                theta[j] += gd * row[j]
        if averaging and n > burn_in:
            avg_count += 1
            w = 1.0 / avg_count
            for j in range(d):
                theta_bar[j] += (theta[j] - theta_bar[j]) * w
        while rec_pos < n_ckpt and checkpoints[rec_pos] == n:
            rec_norm[rec_pos] = _dist(theta, reference)
            if averaging and avg_count > 0:
                rec_avg[rec_pos] = _dist(theta_bar, reference)
            else:
                rec_avg[rec_pos] = np.nan
            rec_pos += 1
    return counter, avg_count, rec_pos, excursion


@njit(cache=True)
def sa_q_kernel(
    phi, rewards, next_features, policy_theta, beta, gammas, mu,
    theta, seed, counter, reference, checkpoints, rec_norm,
):
    """Randomised LSTDQ steps against the frozen greedy policy of ``policy_theta``.

    The greedy next action is resolved only for the sampled row, so a step
    costs O(A d) rather than O(T A d). Ties go to the lowest action index.
    """
    t = phi.shape[0]
    d = phi.shape[1]
    n_act = next_features.shape[1]
    n_ckpt = checkpoints.shape[0]
    rec_pos = 0
    for k in range(gammas.shape[0]):
        i, counter = uniform_index(seed, counter, t)
        best = 0
        best_val = _dot(next_features[i, 0], policy_theta)
        for a in range(1, n_act):
            val = _dot(next_features[i, a], policy_theta)
            if val > best_val:
                best_val = val
                best = a
        g = gammas[k]
        row = phi[i]
        delta = rewards[i] + beta * _dot(theta, next_features[i, best]) - _dot(theta, row)
        gd = g * delta
        shrink = 1.0 - g * mu
        for j in range(d):
            theta[j] = shrink * theta[j] + gd * row[j]
        while rec_pos < n_ckpt and checkpoints[rec_pos] == k + 1:
            rec_norm[rec_pos] = _dist(theta, reference)
            rec_pos += 1
    return counter


@njit(cache=True)
def sherman_morrison_kernel(phi, rewards, phi_next, beta, p, b, work_u, work_v):
    """Accumulate ``P = (ridge I + sum_i phi_i (phi_i - beta phi'_i)^T)^{-1}``.

    ``p`` must be passed in as ``I / ridge``; ``b`` receives ``sum_i r_i phi_i``.
    Returns ``-1`` on success, otherwise the 0-based sample index whose update
    denominator fell below 1e-12 in magnitude (``work_u[0]`` then holds it).
    """
    t = phi.shape[0]
    d = phi.shape[1]
    pu = work_u
    vp = work_v
    for k in range(t):
        u = phi[k]
        r = rewards[k]
        for j in range(d):
            b[j] += r * u[j]
            vp[j] = 0.0
        # one sweep over P gives both P u and v^T P, v = u - beta phi'
        den = 1.0
        for i in range(d):
            vi = u[i] - beta * phi_next[k, i]
            s = 0.0
            for j in range(d):
                pij = p[i, j]
                s += pij * u[j]
                vp[j] += vi * pij
            pu[i] = s
            den += vi * s
        if abs(den) < 1e-12:
            work_u[0] = den
            return k
        inv = 1.0 / den
        for i in range(d):
            c = pu[i] * inv
            for j in range(d):
                p[i, j] -= c * vp[j]
    return -1
