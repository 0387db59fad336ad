"""Independent reference implementations used only by the tests.

Nothing here imports the package. Linear algebra is done in plain Python
lists so a LAPACK bug could not hide behind an identical LAPACK call.
"""

import math


def gauss_solve(a, b):
    """Gaussian elimination with partial pivoting on lists of floats."""
    n = len(b)
    m = [list(map(float, row)) + [float(b[i])] for i, row in enumerate(a)]
    for col in range(n):
        piv = max(range(col, n), key=lambda r: abs(m[r][col]))
        if abs(m[piv][col]) < 1e-300:
            raise ZeroDivisionError("singular")
        m[col], m[piv] = m[piv], m[col]
        for r in range(col + 1, n):
            f = m[r][col] / m[col][col]
            for k in range(col, n + 1):
                m[r][k] -= f * m[col][k]
    x = [0.0] * n
    for r in range(n - 1, -1, -1):
        s = m[r][n] - sum(m[r][k] * x[k] for k in range(r + 1, n))
        x[r] = s / m[r][r]
    return x


def lstd_accumulate(phi, rewards, phi_next, beta):
    """Per-sample loop building ``(A_bar, b_bar)`` as nested lists."""
    t = len(rewards)
    d = len(phi[0])
    a = [[0.0] * d for _ in range(d)]
    b = [0.0] * d
    for i in range(t):
        for j in range(d):
            b[j] += rewards[i] * phi[i][j] / t
            for k in range(d):
                a[j][k] += phi[i][j] * (phi[i][k] - beta * phi_next[i][k]) / t
    return a, b


def lstd_oracle(phi, rewards, phi_next, beta, mu=0.0):
    a, b = lstd_accumulate(phi, rewards, phi_next, beta)
    for j in range(len(b)):
        a[j][j] += mu
    return gauss_solve(a, b)


def normal_equations(xs, ys):
    """Least squares by explicitly forming ``X^T X`` and ``X^T y``."""
    d = len(xs[0])
    g = [[sum(x[j] * x[k] for x in xs) for k in range(d)] for j in range(d)]
    r = [sum(x[j] * y for x, y in zip(xs, ys)) for j in range(d)]
    return gauss_solve(g, r)


def jacobi_eigenvalues(sym, sweeps=100, tol=1e-15):
    """All eigenvalues of a symmetric matrix by cyclic Jacobi rotations."""
    n = len(sym)
    a = [list(map(float, row)) for row in sym]
    for _ in range(sweeps):
        off = math.sqrt(sum(a[i][j] ** 2 for i in range(n) for j in range(n) if i != j))
        if off < tol:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                if abs(a[p][q]) < 1e-300:
                    continue
                theta = (a[q][q] - a[p][p]) / (2 * a[p][q])
                t = math.copysign(1.0, theta) / (abs(theta) + math.sqrt(theta * theta + 1))
                c = 1 / math.sqrt(t * t + 1)
                s = t * c
                for k in range(n):
                    akp, akq = a[k][p], a[k][q]
                    a[k][p] = c * akp - s * akq
                    a[k][q] = s * akp + c * akq
                for k in range(n):
                    apk, aqk = a[p][k], a[q][k]
                    a[p][k] = c * apk - s * aqk
                    a[q][k] = s * apk + c * aqk
    return sorted(a[i][i] for i in range(n))


def projection_residual_t_norm(phi, v):
    """``||v - Pi v||_T`` with ``Pi`` from the normal equations."""
    coef = normal_equations(phi, v)
    t = len(v)
    res = [v[i] - sum(phi[i][j] * coef[j] for j in range(len(coef))) for i in range(t)]
    return math.sqrt(sum(r * r for r in res) / t)


def splitmix64_reference(seed, k):
    """k-th (1-based) SplitMix64 output, written from the published constants."""
    mask = 2**64 - 1
    z = (seed + k * 0x9E3779B97F4A7C15) & mask
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & mask
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & mask
    return z ^ (z >> 31)
