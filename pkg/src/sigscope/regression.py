"""Per-cluster polynomial curves, confidence bands and confidence ellipses.

Fitting happens on x rescaled affinely to [-1, 1]; coefficients and their
covariance are mapped back to the original frame for reporting, while band
evaluation stays in the rescaled frame where the Vandermonde matrix is well
conditioned. Both frames describe the same curve.

The coefficient covariance already carries the residual variance,
``cov = (SS/DF) (V'V)^-1``, so the band half-width at ``x`` is
``t * sqrt(g' cov g)`` with ``g = (1, x, ..., x^d)``. This is the same number
as ``sqrt(g' (V'V)^-1 g) * sqrt(SS/DF) * t``.

Ellipses are axis-aligned, centred at the cluster mean, with semi-axes
equal to the coordinate range times the confidence level ``1 - alpha``.
That is deliberately not a covariance ellipse.
"""

from dataclasses import dataclass, field
from math import comb

import numpy as np
from scipy.linalg import solve_triangular
from scipy.special import betaincinv
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_is_fitted, validate_data

from .exceptions import (
    DegenerateGeometryError,
    InsufficientPointsError,
    ValidationError,
)

DEFAULT_ALPHA = 0.05
DEFAULT_MAX_DEGREE = 3
DEFAULT_R2_THRESHOLD = 0.01


@dataclass(frozen=True)
class FittedCurve:
    """Least-squares polynomial ``y = sum_j coeffs[j] * x**j`` for one cluster."""

    cluster_id: int
    degree: int
    coeffs: np.ndarray
    ss: float
    df: int
    covariance: np.ndarray = field(repr=False)
    r_squared: float
    n_points: int = 0
    x_min: float = 0.0
    x_max: float = 0.0
    x_center: float = 0.0
    x_scale: float = 1.0
    scaled_coeffs: np.ndarray = field(default=None, repr=False)
    scaled_covariance: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "coeffs", np.asarray(self.coeffs, dtype=float))
        if self.scaled_coeffs is None:
            # built directly from original-frame coefficients
            object.__setattr__(self, "x_center", 0.0)
            object.__setattr__(self, "x_scale", 1.0)
            object.__setattr__(self, "scaled_coeffs", self.coeffs)
            object.__setattr__(self, "scaled_covariance", self.covariance)

    @classmethod
    def from_coefficients(cls, coeffs, cluster_id=0):
        """A curve with known coefficients and no fit statistics."""
        coeffs = np.asarray(coeffs, dtype=float)
        d = coeffs.size - 1
        return cls(int(cluster_id), d, coeffs, 0.0, 1, np.zeros((d + 1, d + 1)), 1.0)

    def _u(self, x):
        return (np.asarray(x, dtype=float) - self.x_center) / self.x_scale

    def predict(self, x):
        return np.polynomial.polynomial.polyval(self._u(x), self.scaled_coeffs)

    def derivative(self, x):
        return np.polynomial.polynomial.polyval(
            self._u(x), np.polynomial.polynomial.polyder(self.scaled_coeffs)
        ) / self.x_scale

    def gradient(self, x):
        """Gradient of the prediction with respect to the original-frame coefficients."""
        return np.vander(np.atleast_1d(np.asarray(x, dtype=float)), self.degree + 1, increasing=True)

    @property
    def adjusted_r_squared(self):
        n = self.n_points
        if self.df <= 0 or n < 2:
            return self.r_squared
        return 1.0 - (1.0 - self.r_squared) * (n - 1) / self.df

    def equation(self, precision=3):
        terms = []
        for j, c in enumerate(self.coeffs):
            mag = f"{abs(c):.{precision}f}"
            body = mag if j == 0 else f"{mag}x" if j == 1 else f"{mag}x^{j}"
            sign = "-" if c < 0 else "+"
            terms.append((sign, body))
        first_sign, first = terms[0]
        text = ("-" if first_sign == "-" else "") + first
        for sign, body in terms[1:]:
            text += f" {sign} {body}"
        return f"y = {text}"


def _basis_change(center, scale, degree):
    # coeffs_x = T @ coeffs_u for u = (x - center) / scale
    T = np.zeros((degree + 1, degree + 1))
    for j in range(degree + 1):
        for i in range(j + 1):
            T[i, j] = comb(j, i) * (-center) ** (j - i) / scale**j
    return T


def fit_polynomial(x, y, degree, cluster_id=0):
    """Least-squares polynomial of fixed ``degree`` through ``(x, y)``.

    Raises :class:`InsufficientPointsError` when fewer than ``degree + 2``
    points are given (no residual degrees of freedom) and
    :class:`DegenerateGeometryError` when the x-values cannot support the
    degree (fewer than ``degree + 1`` distinct values).
    """
    x = np.asarray(x, dtype=float).ravel()
    y = np.asarray(y, dtype=float).ravel()
    if x.shape != y.shape:
        raise ValidationError("x and y differ in length")
    degree = int(degree)
    if degree < 0:
        raise ValidationError("degree must be non-negative")
    n = x.size
    if n < degree + 2:
        raise InsufficientPointsError(
            f"cluster {cluster_id}: {n} points cannot support a degree-{degree} fit "
            f"(need {degree + 2})"
        )
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
        raise ValidationError("non-finite coordinates")
    if degree >= 1 and np.unique(x).size < degree + 1:
        raise DegenerateGeometryError(
            f"cluster {cluster_id}: {np.unique(x).size} distinct x-values cannot determine "
            f"a degree-{degree} polynomial"
        )

    x_min, x_max = float(x.min()), float(x.max())
    center = 0.5 * (x_min + x_max)
    scale = 0.5 * (x_max - x_min) or 1.0
    u = (x - center) / scale
    V = np.vander(u, degree + 1, increasing=True)
    Q, R = np.linalg.qr(V)
    diag = np.abs(np.diag(R))
    if diag.min() <= np.finfo(float).eps * diag.max() * n:
        raise DegenerateGeometryError(f"cluster {cluster_id}: singular design matrix")
    gamma = solve_triangular(R, Q.T @ y)
    resid = y - V @ gamma
    ss = float(resid @ resid)
    df = n - degree - 1
    Rinv = solve_triangular(R, np.eye(degree + 1))
    scaled_cov = (ss / df) * (Rinv @ Rinv.T)
    scaled_cov = 0.5 * (scaled_cov + scaled_cov.T)

    T = _basis_change(center, scale, degree)
    coeffs = T @ gamma
    cov = T @ scaled_cov @ T.T
    cov = 0.5 * (cov + cov.T)

    dev = y - y.mean()
    ss_total = float(dev @ dev)
    r_squared = 1.0 - ss / ss_total if ss_total > 0 else 1.0
    return FittedCurve(
        cluster_id=int(cluster_id),
        degree=degree,
        coeffs=coeffs,
        ss=ss,
        df=df,
        covariance=cov,
        r_squared=float(r_squared),
        n_points=n,
        x_min=x_min,
        x_max=x_max,
        x_center=center,
        x_scale=scale,
        scaled_coeffs=gamma,
        scaled_covariance=scaled_cov,
    )


def select_degree(x, y, max_degree=DEFAULT_MAX_DEGREE, cluster_id=0, r2_threshold=DEFAULT_R2_THRESHOLD):
    """Most parsimonious polynomial whose adjusted R^2 is within ``r2_threshold``
    of every higher feasible degree.

    Degrees run from 1 to ``min(max_degree, n - 2)``; a degree that the
    x-values cannot support ends the search.
    """
    x = np.asarray(x, dtype=float).ravel()
    n = x.size
    if n < 3:
        raise InsufficientPointsError(f"cluster {cluster_id}: {n} points, need at least 3 for a curve")
    cap = min(int(max_degree), n - 2)
    if cap < 1:
        raise ValidationError("max_degree must be at least 1")
    fits = [fit_polynomial(x, y, 1, cluster_id)]
    for d in range(2, cap + 1):
        try:
            fits.append(fit_polynomial(x, y, d, cluster_id))
        except DegenerateGeometryError:
            break
    adj = np.array([f.adjusted_r_squared for f in fits])
    for i, fit in enumerate(fits):
        if i == len(fits) - 1 or np.max(adj[i + 1:]) - adj[i] < r2_threshold:
            return fit
    return fits[-1]  # pragma: no cover


def t_critical(alpha, df):
    """Two-sided Student t critical value: ``P(|T_df| <= t) = 1 - alpha``.

    Uses ``P(|T| > t) = I_{df/(df+t^2)}(df/2, 1/2)`` and inverts the
    regularized incomplete beta function.
    """
    if not 0 < alpha < 1:
        raise ValidationError(f"alpha must lie in (0, 1), got {alpha}")
    if not df >= 1:
        raise ValidationError(f"degrees of freedom must be >= 1, got {df}")
    z = float(betaincinv(0.5 * df, 0.5, alpha))
    return float(np.sqrt(df * (1.0 - z) / z))


@dataclass(frozen=True)
class ConfidenceBand:
    curve: FittedCurve
    alpha: float
    t_crit: float

    @classmethod
    def from_curve(cls, curve, alpha=DEFAULT_ALPHA):
        return cls(curve, float(alpha), t_critical(alpha, curve.df))

    def half_width(self, x):
        u = self.curve._u(x)
        G = np.vander(np.atleast_1d(u), self.curve.degree + 1, increasing=True)
        q = np.einsum("ij,jk,ik->i", G, self.curve.scaled_covariance, G)
        hw = self.t_crit * np.sqrt(np.maximum(q, 0.0))
        return hw if np.ndim(x) else float(hw[0])

    def bounds(self, x):
        yhat = self.curve.predict(x)
        hw = self.half_width(x)
        return yhat - hw, yhat + hw

    def contains(self, point):
        x0, y0 = point
        lo, hi = self.bounds(float(x0))
        return bool(lo <= y0 <= hi)


def band_half_width(band, x):
    return band.half_width(x)


@dataclass(frozen=True)
class ConfidenceEllipse:
    cluster_id: int
    center: tuple
    semi_axis_x: float
    semi_axis_y: float
    alpha: float

    def contains(self, point):
        return ellipse_contains(self, point)


def confidence_ellipse(points, alpha=DEFAULT_ALPHA, cluster_id=0):
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    if pts.shape[0] < 2:
        raise InsufficientPointsError(f"cluster {cluster_id}: an ellipse needs at least 2 points")
    if not 0 < alpha < 1:
        raise ValidationError(f"alpha must lie in (0, 1), got {alpha}")
    level = 1.0 - alpha
    span = pts.max(axis=0) - pts.min(axis=0)
    mean = pts.mean(axis=0)
    return ConfidenceEllipse(
        int(cluster_id), (float(mean[0]), float(mean[1])),
        float(span[0] * level), float(span[1] * level), float(alpha),
    )


def ellipse_contains(ellipse, point):
    """Closed-region test; a zero semi-axis admits only the centre coordinate."""
    total = 0.0
    for value, centre, axis in zip(point, ellipse.center, (ellipse.semi_axis_x, ellipse.semi_axis_y)):
        offset = float(value) - centre
        if axis == 0:
            if offset != 0:
                return False
            continue
        total += (offset / axis) ** 2
    return total <= 1.0


@dataclass
class ClusterFit:
    """Everything fitted for one cluster; ``curve`` and ``band`` may be absent."""

    cluster_id: int
    size: int
    ellipse: ConfidenceEllipse = None
    curve: FittedCurve = None
    band: ConfidenceBand = None
    reason: str = ""


def fit_clusters(coords, cluster_ids, alpha=DEFAULT_ALPHA, max_degree=DEFAULT_MAX_DEGREE,
                 r2_threshold=DEFAULT_R2_THRESHOLD):
    """Fit curve, band and ellipse for every cluster, keyed by cluster id.

    Clusters of one point get nothing; two-point clusters only an ellipse.
    """
    coords = np.asarray(coords, dtype=float)
    cluster_ids = np.asarray(cluster_ids, dtype=int)
    out = {}
    for cid in sorted(set(cluster_ids.tolist())):
        pts = coords[cluster_ids == cid]
        fit = ClusterFit(cid, len(pts))
        if len(pts) < 2:
            fit.reason = "singleton cluster"
            out[cid] = fit
            continue
        fit.ellipse = confidence_ellipse(pts, alpha, cid)
        try:
            fit.curve = select_degree(pts[:, 0], pts[:, 1], max_degree, cid, r2_threshold)
        except (InsufficientPointsError, DegenerateGeometryError) as exc:
            fit.reason = str(exc)
        else:
            fit.band = ConfidenceBand.from_curve(fit.curve, alpha)
        out[cid] = fit
    return out


class PolynomialCurveRegressor(RegressorMixin, BaseEstimator):
    """Polynomial least-squares curve with a pointwise confidence band.

    Parameters
    ----------
    degree : int or None, default=None
        Fixed degree. ``None`` selects the degree by adjusted R^2.
    max_degree : int, default=3
        Upper bound for degree selection.
    r2_threshold : float, default=0.01
        Adjusted-R^2 gain a higher degree must deliver to be chosen.
    alpha : float, default=0.05
        Band significance level; the band has confidence ``1 - alpha``.
    """

    def __init__(self, degree=None, max_degree=DEFAULT_MAX_DEGREE,
                 r2_threshold=DEFAULT_R2_THRESHOLD, alpha=DEFAULT_ALPHA):
        self.degree = degree
        self.max_degree = max_degree
        self.r2_threshold = r2_threshold
        self.alpha = alpha

    def fit(self, X, y):
        X, y = validate_data(self, X, y, dtype=np.float64, y_numeric=True)
        if X.shape[1] != 1:
            raise ValueError(f"expected a single feature column, got {X.shape[1]}")
        x = X[:, 0]
        if self.degree is None:
            self.curve_ = select_degree(x, y, self.max_degree, 0, self.r2_threshold)
        else:
            self.curve_ = fit_polynomial(x, y, self.degree)
        self.band_ = ConfidenceBand.from_curve(self.curve_, self.alpha)
        self.degree_ = self.curve_.degree
        self.coef_ = self.curve_.coeffs[1:].copy()
        self.intercept_ = float(self.curve_.coeffs[0])
        return self

    def predict(self, X):
        check_is_fitted(self)
        X = validate_data(self, X, dtype=np.float64, reset=False)
        return self.curve_.predict(X[:, 0])

    def predict_band(self, X):
        """Return ``(lower, upper)`` band limits at each row of ``X``."""
        check_is_fitted(self)
        X = validate_data(self, X, dtype=np.float64, reset=False)
        return self.band_.bounds(X[:, 0])


def _floats(a):
    return np.asarray(a, dtype=float).tolist()


def fits_to_dict(fits):
    clusters = []
    for cid in sorted(fits):
        fit = fits[cid]
        entry = {"cluster_id": cid, "size": fit.size, "fitted": fit.curve is not None}
        if fit.reason:
            entry["reason"] = fit.reason
        if fit.curve is not None:
            c = fit.curve
            entry.update(
                degree=c.degree,
                coefficients=_floats(c.coeffs),
                equation=c.equation(),
                ss=c.ss,
                df=c.df,
                r_squared=c.r_squared,
                adjusted_r_squared=c.adjusted_r_squared,
                covariance=_floats(c.covariance),
                x_range=[c.x_min, c.x_max],
                t_crit=fit.band.t_crit,
                alpha=fit.band.alpha,
                scaling={
                    "x_center": c.x_center,
                    "x_scale": c.x_scale,
                    "coefficients": _floats(c.scaled_coeffs),
                    "covariance": _floats(c.scaled_covariance),
                },
            )
        if fit.ellipse is not None:
            e = fit.ellipse
            entry["ellipse"] = {
                "center": list(e.center),
                "semi_axis_x": e.semi_axis_x,
                "semi_axis_y": e.semi_axis_y,
                "alpha": e.alpha,
            }
        clusters.append(entry)
    return {"clusters": clusters}


def fits_from_dict(data):
    fits = {}
    for entry in data["clusters"]:
        cid = int(entry["cluster_id"])
        fit = ClusterFit(cid, int(entry["size"]), reason=entry.get("reason", ""))
        if "ellipse" in entry:
            e = entry["ellipse"]
            fit.ellipse = ConfidenceEllipse(
                cid, tuple(e["center"]), e["semi_axis_x"], e["semi_axis_y"], e["alpha"]
            )
        if entry.get("fitted"):
            s = entry["scaling"]
            x_min, x_max = entry["x_range"]
            fit.curve = FittedCurve(
                cluster_id=cid,
                degree=int(entry["degree"]),
                coeffs=np.array(entry["coefficients"], dtype=float),
                ss=entry["ss"],
                df=int(entry["df"]),
                covariance=np.array(entry["covariance"], dtype=float),
                r_squared=entry["r_squared"],
                n_points=fit.size,
                x_min=x_min,
                x_max=x_max,
                x_center=s["x_center"],
                x_scale=s["x_scale"],
                scaled_coeffs=np.array(s["coefficients"], dtype=float),
                scaled_covariance=np.array(s["covariance"], dtype=float),
            )
            fit.band = ConfidenceBand(fit.curve, entry["alpha"], entry["t_crit"])
        fits[cid] = fit
    return fits
