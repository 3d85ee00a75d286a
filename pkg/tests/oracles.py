"""Independent reference computations the package is checked against.

Nothing here imports from ``sigscope``.
"""

import math

import numpy as np
from scipy import integrate, optimize, stats


def brute_dft(x):
    """O(m^2) DFT by direct summation, ``X_k = sum_t x_t exp(-2 pi i k t / m)``."""
    x = np.asarray(x, dtype=float)
    m = x.size
    out = np.empty(m, dtype=complex)
    for k in range(m):
        acc = 0j
        for t in range(m):
            angle = -2.0 * math.pi * k * t / m
            acc += x[t] * complex(math.cos(angle), math.sin(angle))
        out[k] = acc
    return out


def brute_power(x):
    """Amplitudes A_1..A_{m-1}: unit cosine -> 1, Nyquist bin scaled by 1/m."""
    X = brute_dft(x)
    m = len(X)
    amp = np.abs(X[1:]) * 2.0 / m
    if m % 2 == 0:
        amp[m // 2 - 1] = abs(X[m // 2]) / m
    return amp


def naive_sq_distances(X):
    X = np.asarray(X, dtype=float)
    n = len(X)
    D = np.zeros((n, n))
    for i in range(n):
        for j in range(n):
            diff = X[i] - X[j]
            D[i, j] = float(diff @ diff)
    return D


def normal_equations_fit(x, y, degree):
    """Coefficients (lowest power first) from the explicit normal equations."""
    V = np.vander(np.asarray(x, dtype=float), degree + 1, increasing=True)
    return np.linalg.solve(V.T @ V, V.T @ np.asarray(y, dtype=float))


def t_density(t, df):
    logc = math.lgamma((df + 1) / 2) - math.lgamma(df / 2) - 0.5 * math.log(df * math.pi)
    return math.exp(logc) * (1 + t * t / df) ** (-(df + 1) / 2)


def t_critical_quadrature(alpha, df):
    """Two-sided critical value by integrating the t density and root finding."""
    def coverage(t):
        val, _ = integrate.quad(t_density, 0.0, t, args=(df,), epsabs=1e-13, epsrel=1e-13, limit=200)
        return 2.0 * val - (1.0 - alpha)

    hi = 1.0
    while coverage(hi) < 0:
        hi *= 2.0
    return optimize.brentq(coverage, 0.0, hi, xtol=1e-12)


def slr_half_width(x, y, x0, alpha):
    """Textbook pointwise CI half-width for simple linear regression."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    n = x.size
    xbar = x.mean()
    sxx = float(((x - xbar) ** 2).sum())
    slope = float(((x - xbar) * (y - y.mean())).sum()) / sxx
    intercept = y.mean() - slope * xbar
    resid = y - intercept - slope * x
    s = math.sqrt(float(resid @ resid) / (n - 2))
    t = stats.t.ppf(1 - alpha / 2, n - 2)
    return t * s * np.sqrt(1.0 / n + (np.asarray(x0) - xbar) ** 2 / sxx)


def slr_standard_errors(x, y):
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    n = x.size
    xbar = x.mean()
    sxx = float(((x - xbar) ** 2).sum())
    slope = float(((x - xbar) * (y - y.mean())).sum()) / sxx
    intercept = y.mean() - slope * xbar
    resid = y - intercept - slope * x
    s2 = float(resid @ resid) / (n - 2)
    return math.sqrt(s2 * (1.0 / n + xbar**2 / sxx)), math.sqrt(s2 / sxx)


def grid_distance(point, coeffs, lo, hi, n=1_000_000):
    """Minimum distance from ``point`` to ``y = poly(x)`` sampled on a grid over [lo, hi]."""
    xs = np.linspace(lo, hi, n)
    ys = np.polynomial.polynomial.polyval(xs, coeffs)
    d2 = (xs - point[0]) ** 2 + (ys - point[1]) ** 2
    i = int(np.argmin(d2))
    return math.sqrt(d2[i]), xs[i]


def grid_distance_refined(point, coeffs, n=1_000_000):
    """Grid search over a window guaranteed to contain the foot point.

    The foot lies within ``r = |poly(x0) - y0|`` of ``x0`` horizontally, since
    the vertical drop is itself a candidate distance.
    """
    x0, y0 = point
    r = abs(np.polynomial.polynomial.polyval(x0, coeffs) - y0)
    if r == 0:
        return 0.0, x0
    d, xf = grid_distance(point, coeffs, x0 - r, x0 + r, n)
    # second pass around the coarse optimum
    step = 2 * r / (n - 1)
    return grid_distance(point, coeffs, xf - 2 * step, xf + 2 * step, 10_001)


def region_flags(points, cluster_ids, home, alpha, degree):
    """(in_band, in_ellipse) for each point against cluster ``home``'s regions,
    recomputed with numpy.polyfit and scipy.stats."""
    points = np.asarray(points, dtype=float)
    cluster_ids = np.asarray(cluster_ids)
    own = points[cluster_ids == home]
    mean = own.mean(axis=0)
    axes = (own.max(axis=0) - own.min(axis=0)) * (1 - alpha)
    ell = (((points - mean) / axes) ** 2).sum(axis=1) <= 1.0

    coef, cov = np.polyfit(own[:, 0], own[:, 1], degree, cov="unscaled")
    resid = own[:, 1] - np.polyval(coef, own[:, 0])
    df = len(own) - degree - 1
    s2 = float(resid @ resid) / df
    t = stats.t.ppf(1 - alpha / 2, df)
    G = np.vander(points[:, 0], degree + 1)
    hw = t * np.sqrt(s2 * np.einsum("ij,jk,ik->i", G, cov, G))
    band = np.abs(points[:, 1] - np.polyval(coef, points[:, 0])) <= hw
    return band, ell
