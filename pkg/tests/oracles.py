"""Independent reference computations used only by the tests.

Nothing here calls into regdecomp: sums are exact (Fraction) or compensated
(Neumaier), and regressions are solved from the normal equations in
extended precision rather than by QR.
"""

from fractions import Fraction

import mpmath
import numpy as np


def neumaier_sum(values):
    total, comp = 0.0, 0.0
    for v in values:
        v = float(v)
        t = total + v
        if abs(total) >= abs(v):
            comp += (total - t) + v
        else:
            comp += (v - t) + total
        total = t
    return total + comp


def neumaier_dot(a, b):
    return neumaier_sum(float(x) * float(y) for x, y in zip(a, b))


def exact_dot(a, b) -> Fraction:
    return sum((Fraction(float(x)) * Fraction(float(y)) for x, y in zip(a, b)), Fraction(0))


def exact_mean(v, q) -> Fraction:
    return exact_dot(q, v)


def normal_equations_fit(X, z, q, dps: int = 40):
    """Weighted least squares via ``(X'QX) b = X'Qz`` in extended precision.

    The Gram matrix is accumulated in x87 long double (64-bit mantissa) and
    solved with mpmath at ``dps`` digits.
    """
    X = np.asarray(X, dtype=np.longdouble)
    z = np.asarray(z, dtype=np.longdouble)
    q = np.asarray(q, dtype=np.longdouble)
    G = (X * q[:, None]).T @ X
    r = (X * q[:, None]).T @ z
    with mpmath.workdps(dps):
        Gm = mpmath.matrix([[mpmath.mpf(str(v)) for v in row] for row in G])
        rm = mpmath.matrix([mpmath.mpf(str(v)) for v in r])
        b = mpmath.lu_solve(Gm, rm)
        return [b[i] for i in range(len(r))]


def mp_dot(a, b):
    return mpmath.fsum(mpmath.mpf(x) * mpmath.mpf(y) for x, y in zip(a, b))


def exact_fit(X, z, q):
    """Weighted least squares solved in exact rational arithmetic."""
    X = [[Fraction(float(v)) for v in row] for row in np.asarray(X)]
    z = [Fraction(float(v)) for v in z]
    q = [Fraction(float(v)) for v in q]
    k = len(X[0])
    G = [[sum(qj * row[a] * row[b] for qj, row in zip(q, X)) for b in range(k)] for a in range(k)]
    r = [sum(qj * row[a] * zj for qj, row, zj in zip(q, X, z)) for a in range(k)]
    # Gauss-Jordan on the augmented system
    M = [G[a] + [r[a]] for a in range(k)]
    for col in range(k):
        piv = next(i for i in range(col, k) if M[i][col] != 0)
        M[col], M[piv] = M[piv], M[col]
        inv = 1 / M[col][col]
        M[col] = [v * inv for v in M[col]]
        for i in range(k):
            if i != col and M[i][col] != 0:
                f = M[i][col]
                M[i] = [a - f * b for a, b in zip(M[i], M[col])]
    return [M[i][k] for i in range(k)]


def brute_force_selection(loci, q, w):
    """Every quantity of one haploid selection round, from the definitions.

    Works in exact rationals: fitness is normalised to mean one, selection
    applied as q'_j = q_j w_j, and both regressions solved exactly.
    """
    G = np.asarray(loci, dtype=float)
    m, n = G.shape
    X = np.column_stack([np.ones(m), G])
    qf = [Fraction(float(v)) for v in q]
    total = sum(qf)
    qf = [v / total for v in qf]
    wf = [Fraction(float(v)) for v in w]
    wbar = sum(a * b for a, b in zip(qf, wf))
    wn = [v / wbar for v in wf]
    q2 = [a * b for a, b in zip(qf, wn)]
    cols = [[Fraction(float(v)) for v in X[:, i]] for i in range(n + 1)]
    p = [sum(a * x for a, x in zip(qf, col)) for col in cols]
    p2 = [sum(a * x for a, x in zip(q2, col)) for col in cols]
    b = _fit_fractions(cols, wn, qf)
    b2 = _fit_fractions(cols, wn, q2)
    g = [sum(b[i] * cols[i][j] for i in range(n + 1)) for j in range(m)]
    gbar = sum(a * v for a, v in zip(qf, g))
    var_g = sum(a * (v - gbar) ** 2 for a, v in zip(qf, g))
    cov_gw = sum(a * (v - gbar) * (u - 1) for a, v, u in zip(qf, g, wn))
    return {
        "p": p,
        "p_changed": p2,
        "b": b,
        "b_changed": b2,
        "ftns": sum(bi * (y - x) for bi, x, y in zip(b, p, p2)),
        "environment": sum(y * (bj - bi) for bi, bj, y in zip(b, b2, p2)),
        "total": sum(a * v for a, v in zip(q2, wn)) - 1,
        "var_g": var_g,
        "cov_gw": cov_gw,
    }


def _fit_fractions(cols, z, q):
    k = len(cols)
    M = [[sum(qj * cols[a][j] * cols[c][j] for j, qj in enumerate(q)) for c in range(k)]
         + [sum(qj * cols[a][j] * z[j] for j, qj in enumerate(q))] for a in range(k)]
    for col in range(k):
        piv = next(i for i in range(col, k) if M[i][col] != 0)
        M[col], M[piv] = M[piv], M[col]
        inv = 1 / M[col][col]
        M[col] = [v * inv for v in M[col]]
        for i in range(k):
            if i != col and M[i][col] != 0:
                f = M[i][col]
                M[i] = [a - f * c for a, c in zip(M[i], M[col])]
    return [M[i][k] for i in range(k)]
