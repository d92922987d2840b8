"""Brute-force reference solvers.

None of these share code with the modules they check: they use plain Python
(or mpmath) and the most direct formulation available, trading speed for
obviousness.
"""

from fractions import Fraction
import itertools

import mpmath


def oracle_isotonic(labels, max_n=12):
    """Exact isotonic least squares by enumerating contiguous block partitions.

    ``labels`` are taken in score order. Each block is fitted by its mean; a
    partition is feasible when block means never decrease. Returns
    ``(fitted, objective)``.
    """
    y = [float(v) for v in labels]
    n = len(y)
    if n == 0:
        raise ValueError("empty input")
    if n > max_n:
        raise ValueError(f"oracle limited to n <= {max_n}, got {n}")
    best = None
    for cuts in itertools.product((False, True), repeat=n - 1):
        blocks, start = [], 0
        for i, cut in enumerate(cuts, start=1):
            if cut:
                blocks.append((start, i))
                start = i
        blocks.append((start, n))
        means = [sum(y[a:b]) / (b - a) for a, b in blocks]
        if any(m2 < m1 for m1, m2 in zip(means, means[1:])):
            continue
        fitted = []
        for (a, b), m in zip(blocks, means):
            fitted.extend([m] * (b - a))
        obj = sum((yi - pi) ** 2 for yi, pi in zip(y, fitted))
        if best is None or obj < best[1] - 1e-15:
            best = (fitted, obj)
    return best


def _solve_gauss(A, b):
    n = len(A)
    M = [list(map(float, row)) + [float(bi)] for row, bi in zip(A, b)]
    for col in range(n):
        piv = max(range(col, n), key=lambda r: abs(M[r][col]))
        if abs(M[piv][col]) < 1e-13 * max(1.0, max(abs(v) for row in M for v in row[:n])):
            raise ValueError("singular system")
        M[col], M[piv] = M[piv], M[col]
        for r in range(col + 1, n):
            f = M[r][col] / M[col][col]
            if f:
                for c in range(col, n + 1):
                    M[r][c] -= f * M[col][c]
    x = [0.0] * n
    for r in range(n - 1, -1, -1):
        x[r] = (M[r][n] - sum(M[r][c] * x[c] for c in range(r + 1, n))) / M[r][r]
    return x


def oracle_ridge(X, y, lam, max_cols=20):
    """Ridge weights and unpenalized intercept by Gaussian elimination.

    Solves the stationarity equations of ``sum (y - Xw - b)^2 + lam * |w|^2``
    built element by element. Returns ``(weights, intercept)``.
    """
    rows = [[float(v) for v in row] for row in X]
    ys = [float(v) for v in y]
    n = len(rows)
    d = len(rows[0]) if rows else 0
    if d > max_cols:
        raise ValueError(f"oracle limited to {max_cols} columns")
    aug = [row + [1.0] for row in rows]
    A = [[sum(aug[k][i] * aug[k][j] for k in range(n)) for j in range(d + 1)] for i in range(d + 1)]
    for i in range(d):
        A[i][i] += lam
    rhs = [sum(aug[k][i] * ys[k] for k in range(n)) for i in range(d + 1)]
    sol = _solve_gauss(A, rhs)
    return sol[:d], sol[d]


def oracle_ap(labels, n_truth, max_len=20):
    """Area under the stepwise precision-recall curve, in exact rationals."""
    if n_truth < 1:
        raise ValueError("n_truth must be at least 1")
    if len(labels) > max_len:
        raise ValueError(f"oracle limited to {max_len} detections")
    area = Fraction(0)
    prev_recall = Fraction(0)
    for k in range(1, len(labels) + 1):
        hits = sum(1 for v in labels[:k] if v)
        recall = Fraction(hits, n_truth)
        precision = Fraction(hits, k)
        area += (recall - prev_recall) * precision
        prev_recall = recall
    return float(area)


def oracle_pearson(xs, ys, dps=50):
    """Correlation and two-sided t-test p-value in 50-digit arithmetic."""
    with mpmath.workdps(dps):
        x = [mpmath.mpf(v) for v in xs]
        y = [mpmath.mpf(v) for v in ys]
        n = len(x)
        if n < 3:
            raise ValueError("need at least 3 pairs")
        mx, my = mpmath.fsum(x) / n, mpmath.fsum(y) / n
        sxy = mpmath.fsum((a - mx) * (b - my) for a, b in zip(x, y))
        sxx = mpmath.fsum((a - mx) ** 2 for a in x)
        syy = mpmath.fsum((b - my) ** 2 for b in y)
        if sxx == 0 or syy == 0:
            raise ValueError("constant input")
        r = sxy / mpmath.sqrt(sxx * syy)
        df = n - 2
        if abs(r) >= 1:
            return float(r), 0.0
        t = r * mpmath.sqrt(df / (1 - r * r))
        # two-sided tail: 2 * P(T > |t|) via the Student t density
        dens = lambda s: (1 + s * s / df) ** (-(df + 1) / mpmath.mpf(2))
        const = mpmath.gamma((df + 1) / mpmath.mpf(2)) / (mpmath.sqrt(df * mpmath.pi) * mpmath.gamma(df / mpmath.mpf(2)))
        p = 2 * const * mpmath.quad(dens, [abs(t), mpmath.inf])
        return float(r), float(p)
