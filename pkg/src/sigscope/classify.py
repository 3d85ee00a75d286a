"""Potential-outlier taxonomy and ambiguous-membership resolution.

Decision table for a point with home cluster ``h`` (closed regions)::

    in 2+ clusters' ellipses or 2+ clusters' bands   -> ambiguous
    in band(h), in ellipse(h), no foreign region     -> inlier
    in band(h), in ellipse(h), some foreign region   -> ambiguous
    outside band(h), in ellipse(h)                   -> ambiguous
    in band(h), outside ellipse(h)                   -> valid
    outside band(h), outside ellipse(h)              -> absolute

A home cluster without a curve counts as "in band" for the home test. Band
membership is judged vertically: ``|y - yhat(x)| <= half_width(x)``.
Clusters with a single member are known outliers and are reported apart.
"""

import enum
from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted, validate_data

from .exceptions import ConfigError, ResolutionUnavailableError
from .regression import (
    DEFAULT_ALPHA,
    DEFAULT_MAX_DEGREE,
    DEFAULT_R2_THRESHOLD,
    fit_clusters,
)

SCHEMA_VERSION = 1
TIE_RTOL = 1e-12
# leading coefficients this small (relative) only move roots off to infinity
ROOT_TRIM = 1e-14


class OutlierClass(str, enum.Enum):
    INLIER = "inlier"
    ABSOLUTE = "absolute"
    VALID = "valid"
    AMBIGUOUS = "ambiguous"


@dataclass
class Verdict:
    label: str
    home_cluster: int
    cls: OutlierClass
    in_band: bool
    in_ellipse: bool
    foreign_bands: list = field(default_factory=list)
    foreign_ellipses: list = field(default_factory=list)
    home_fitted: bool = True
    resolved_cluster: int = None
    distances: dict = field(default_factory=dict)

    def to_dict(self):
        return {
            "label": self.label,
            "home_cluster": self.home_cluster,
            "class": self.cls.value,
            "in_band": self.in_band,
            "in_ellipse": self.in_ellipse,
            "home_fitted": self.home_fitted,
            "foreign_bands": list(self.foreign_bands),
            "foreign_ellipses": list(self.foreign_ellipses),
            "resolved_cluster": self.resolved_cluster,
            "curve_distances": {str(k): v for k, v in sorted(self.distances.items())},
        }

    @classmethod
    def from_dict(cls, d):
        return cls(
            label=d["label"],
            home_cluster=int(d["home_cluster"]),
            cls=OutlierClass(d["class"]),
            in_band=d["in_band"],
            in_ellipse=d["in_ellipse"],
            foreign_bands=list(d["foreign_bands"]),
            foreign_ellipses=list(d["foreign_ellipses"]),
            home_fitted=d.get("home_fitted", True),
            resolved_cluster=d["resolved_cluster"],
            distances={int(k): v for k, v in d.get("curve_distances", {}).items()},
        )


def decide(in_band, in_ellipse, n_band_hits, n_ellipse_hits, foreign):
    """Apply the decision table to precomputed region flags.

    ``n_band_hits``/``n_ellipse_hits`` count every cluster (home included)
    whose band/ellipse contains the point; ``foreign`` says whether any
    non-home band or ellipse contains it.
    """
    if n_band_hits >= 2 or n_ellipse_hits >= 2:
        return OutlierClass.AMBIGUOUS
    if in_band and in_ellipse:
        return OutlierClass.AMBIGUOUS if foreign else OutlierClass.INLIER
    if in_ellipse:
        return OutlierClass.AMBIGUOUS
    if in_band:
        return OutlierClass.VALID
    return OutlierClass.ABSOLUTE


def classify_point(point, home, bands, ellipses, label=""):
    """Verdict for one point against ``bands``/``ellipses`` keyed by cluster id."""
    if home not in ellipses or ellipses[home] is None:
        raise ConfigError(f"home cluster {home} has no confidence ellipse")
    ellipse_hits = sorted(cid for cid, e in ellipses.items() if e is not None and e.contains(point))
    band_hits = sorted(cid for cid, b in bands.items() if b is not None and b.contains(point))
    home_fitted = bands.get(home) is not None
    in_band = home in band_hits if home_fitted else True
    in_ellipse = home in ellipse_hits
    foreign_bands = [c for c in band_hits if c != home]
    foreign_ellipses = [c for c in ellipse_hits if c != home]
    cls = decide(in_band, in_ellipse, len(band_hits), len(ellipse_hits),
                 bool(foreign_bands or foreign_ellipses))
    return Verdict(label, int(home), cls, bool(in_band), bool(in_ellipse),
                   foreign_bands, foreign_ellipses, home_fitted)


def point_to_curve_distance(point, curve):
    """Shortest Euclidean distance from ``point`` to the graph of ``curve``.

    Returns ``(distance, (x_foot, y_foot))``. Lines use the perpendicular
    formula. Higher degrees minimise the squared distance by locating the
    zeros of its derivative, a polynomial of degree ``2d - 1``, from the
    eigenvalues of its companion matrix; every root (real part) is a
    candidate and the closest one wins.
    """
    x0, y0 = float(point[0]), float(point[1])
    c = curve.coeffs
    if curve.degree == 0:
        return abs(y0 - c[0]), (x0, float(c[0]))
    if curve.degree == 1:
        c0, c1 = float(c[0]), float(c[1])
        dist = abs(c1 * x0 - y0 + c0) / np.hypot(c1, 1.0)
        xf = (x0 + c1 * (y0 - c0)) / (1.0 + c1 * c1)
        return float(dist), (float(xf), c0 + c1 * xf)

    P = np.polynomial.Polynomial
    h, m = curve.x_scale, curve.x_center
    # work in u = (x - m) / h, where the polynomial is well scaled
    p = P(curve.scaled_coeffs)
    dx = P([m - x0, h])
    dy = p - y0
    half_grad = (h * dx + dy * p.deriv()).trim(ROOT_TRIM * np.abs((h * dx + dy * p.deriv()).coef).max())
    roots = half_grad.roots() if half_grad.degree() > 0 else np.array([])
    cand = np.unique(np.concatenate([roots.real, [(x0 - m) / h]]))
    g2 = half_grad.deriv()
    with np.errstate(all="ignore"):
        for _ in range(2):
            slope = g2(cand)
            step = np.divide(half_grad(cand), slope, out=np.zeros_like(cand), where=slope != 0)
            polished = cand - step
            cand = np.where(np.isfinite(polished), polished, cand)
        sq = dx(cand) ** 2 + dy(cand) ** 2
    sq = np.where(np.isfinite(sq), sq, np.inf)
    best = int(np.argmin(sq))
    u = cand[best]
    return float(np.sqrt(sq[best])), (float(m + h * u), float(p(u)))


def resolve_ambiguous(point, curves):
    """Cluster whose curve lies closest to ``point``; ties go to the lowest id."""
    if not curves:
        raise ResolutionUnavailableError("no fitted curves to resolve membership against")
    best, best_d = None, np.inf
    for cid in sorted(curves):
        d, _ = point_to_curve_distance(point, curves[cid])
        if d < best_d and not np.isclose(d, best_d, rtol=TIE_RTOL, atol=0):
            best, best_d = cid, d
    return best


@dataclass
class OutlierReport:
    verdicts: list
    counts: dict
    known_singletons: dict = field(default_factory=dict)
    config: dict = field(default_factory=dict)

    def summary(self):
        """Per-cluster label lists for each non-inlier class."""
        out = {}
        for v in self.verdicts:
            if v.cls is OutlierClass.INLIER:
                continue
            row = out.setdefault(str(v.home_cluster), {"absolute": [], "valid": [], "ambiguous": []})
            row[v.cls.value].append(v.label)
        return dict(sorted(out.items(), key=lambda kv: int(kv[0])))

    def to_dict(self):
        return {
            "schema_version": SCHEMA_VERSION,
            "config": self.config,
            "counts": {c.value: self.counts.get(c, 0) for c in OutlierClass},
            "summary": self.summary(),
            "known_singletons": {str(k): v for k, v in sorted(self.known_singletons.items())},
            "verdicts": [v.to_dict() for v in self.verdicts],
        }

    @classmethod
    def from_dict(cls, d):
        verdicts = [Verdict.from_dict(v) for v in d["verdicts"]]
        counts = {OutlierClass(k): v for k, v in d["counts"].items()}
        singletons = {int(k): v for k, v in d.get("known_singletons", {}).items()}
        return cls(verdicts, counts, singletons, d.get("config", {}))


def build_report(labels, coords, cluster_ids, fits, config=None):
    """Classify every point of a non-singleton cluster.

    ``fits`` maps cluster id to :class:`~sigscope.regression.ClusterFit`.
    """
    coords = np.asarray(coords, dtype=float)
    bands = {cid: f.band for cid, f in fits.items() if f.band is not None}
    ellipses = {cid: f.ellipse for cid, f in fits.items() if f.ellipse is not None}
    curves = {cid: f.curve for cid, f in fits.items() if f.curve is not None}
    verdicts, singletons = [], {}
    for label, point, home in zip(labels, coords, cluster_ids):
        home = int(home)
        if fits[home].size < 2:
            singletons.setdefault(home, []).append(label)
            continue
        v = classify_point(tuple(point), home, bands, ellipses, label)
        v.distances = {cid: point_to_curve_distance(point, c)[0] for cid, c in sorted(curves.items())}
        if v.cls is OutlierClass.AMBIGUOUS and curves:
            v.resolved_cluster = resolve_ambiguous(point, curves)
        verdicts.append(v)
    counts = {c: 0 for c in OutlierClass}
    for v in verdicts:
        counts[v.cls] += 1
    return OutlierReport(verdicts, counts, singletons, dict(config or {}))


def report_for_embedding(embedding, fits, config=None):
    return build_report(embedding.labels, embedding.coords, embedding.cluster_ids(), fits, config)


class PotentialOutlierClassifier(BaseEstimator):
    """Fit per-cluster curves/bands/ellipses and label points by outlier class.

    ``y`` always carries the home cluster of each row of ``X`` (2-D points).

    Parameters
    ----------
    alpha : float, default=0.05
    max_degree : int, default=3
    r2_threshold : float, default=0.01
    """

    def __init__(self, alpha=DEFAULT_ALPHA, max_degree=DEFAULT_MAX_DEGREE,
                 r2_threshold=DEFAULT_R2_THRESHOLD):
        self.alpha = alpha
        self.max_degree = max_degree
        self.r2_threshold = r2_threshold

    def fit(self, X, y):
        X, y = validate_data(self, X, y, dtype=np.float64)
        if X.shape[1] != 2:
            raise ValueError("expected 2-D points")
        y = np.asarray(y).astype(int)
        self.fits_ = fit_clusters(X, y, self.alpha, self.max_degree, self.r2_threshold)
        self.clusters_ = np.array(sorted(self.fits_))
        return self

    def report(self, X, y, labels=None):
        check_is_fitted(self)
        X = validate_data(self, X, dtype=np.float64, reset=False)
        y = np.asarray(y).astype(int)
        unknown = sorted(set(y.tolist()) - set(self.fits_))
        if unknown:
            raise ConfigError(f"clusters {unknown} were not seen during fit")
        if labels is None:
            labels = [str(i) for i in range(len(X))]
        return build_report(labels, X, y, self.fits_)

    def predict(self, X, y):
        """Class name per row; members of singleton clusters get ``"singleton"``."""
        labels = [str(i) for i in range(len(X))]
        rep = self.report(X, y, labels)
        by_label = {v.label: v.cls.value for v in rep.verdicts}
        return np.array([by_label.get(lab, "singleton") for lab in labels], dtype=object)

    def fit_predict(self, X, y):
        return self.fit(X, y).predict(X, y)
