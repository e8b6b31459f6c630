"""Independent oracles shared by the test modules.

Nothing here calls the package's eigensolver or quadrature.
"""

import math

import numpy as np
import pytest


def det_cofactor(m):
    """Determinant by cofactor expansion (pure Python, small matrices only)."""
    n = len(m)
    if n == 1:
        return m[0][0]
    if n == 2:
        return m[0][0] * m[1][1] - m[0][1] * m[1][0]
    total = 0.0
    for j in range(n):
        minor = [row[:j] + row[j + 1:] for row in m[1:]]
        total += (-1) ** j * m[0][j] * det_cofactor(minor)
    return total


def charpoly_roots(a, grid_points=2001, tol=1e-14):
    """Eigenvalues as sign changes of det(a - x I), refined by bisection.

    Scans a grid between the Gershgorin bounds, refining it tenfold until n
    roots are bracketed (gives up past 2e5 points; distinct roots only).
    """
    roots = _scan_roots(a, grid_points, tol)
    n = np.asarray(a).shape[0]
    while len(roots) < n and grid_points < 200001:
        grid_points = 10 * grid_points - 9
        roots = _scan_roots(a, grid_points, tol)
    return roots


def _scan_roots(a, grid_points, tol):
    a = [[float(v) for v in row] for row in np.asarray(a)]
    n = len(a)
    radius = max(sum(abs(v) for j, v in enumerate(row) if j != i) for i, row in enumerate(a))
    lo = min(a[i][i] for i in range(n)) - radius - 1.0
    hi = max(a[i][i] for i in range(n)) + radius + 1.0

    def p(x):
        return det_cofactor([[a[i][j] - (x if i == j else 0.0) for j in range(n)]
                             for i in range(n)])

    xs = np.linspace(lo, hi, grid_points)
    vals = [p(x) for x in xs]
    roots = []
    for k in range(grid_points - 1):
        if vals[k] == 0.0:
            roots.append(xs[k])
            continue
        if vals[k] * vals[k + 1] < 0:
            left, right, fl = xs[k], xs[k + 1], vals[k]
            while right - left > tol * max(1.0, abs(left)):
                mid = 0.5 * (left + right)
                fm = p(mid)
                if fm == 0.0:
                    left = right = mid
                    break
                if (fm < 0) == (fl < 0):
                    left, fl = mid, fm
                else:
                    right = mid
            roots.append(0.5 * (left + right))
    return np.array(roots)


def half_normal_ratio():
    return math.sqrt(math.pi / 2 - 1)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
