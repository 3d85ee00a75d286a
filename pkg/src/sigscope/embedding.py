"""Squared-distance dissimilarities and their classical (Torgerson) MDS embedding.

The inner-product matrix is recovered from squared distances by double
centering, ``B = -1/2 J D J`` with ``J = I - 11'/n``; coordinates are the
leading eigenvectors of ``B`` scaled by the square roots of their
eigenvalues. Each eigenvector is oriented so that its largest-magnitude
entry is positive (first such entry on ties), which makes the output
deterministic up to the solver.
"""

import csv
import warnings
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
from scipy.spatial.distance import cdist
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted, check_symmetric, validate_data

from .exceptions import DegenerateInputError, ParseError, ValidationError

CLAMP_RTOL = 1e-8


@dataclass(frozen=True)
class DissimilarityMatrix:
    d: np.ndarray = field(repr=False)
    labels: tuple

    def __post_init__(self):
        d = np.asarray(self.d, dtype=float)
        n = len(self.labels)
        if d.shape != (n, n):
            raise ValidationError(f"dissimilarity matrix shape {d.shape} does not match {n} labels")
        if not np.allclose(d, d.T, rtol=0, atol=1e-12 * max(1.0, float(np.abs(d).max(initial=0)))):
            raise ValidationError("dissimilarity matrix is not symmetric")
        if np.any(np.diag(d) != 0):
            raise ValidationError("dissimilarity matrix has a nonzero diagonal")
        if np.any(d < 0):
            raise ValidationError("dissimilarity matrix has negative entries")
        object.__setattr__(self, "d", d)
        object.__setattr__(self, "labels", tuple(self.labels))


@dataclass(frozen=True)
class Embedding:
    """Coordinates of each labelled period, plus the spectrum they came from.

    ``eigenvalues`` holds the whole spectrum of the inner-product matrix in
    non-increasing order after clamping; ``negative_mass`` is the sum of
    eigenvalues that were too negative to clamp (0 for Euclidean input).
    """

    coords: np.ndarray = field(repr=False)
    labels: tuple
    eigenvalues: np.ndarray = field(default=None, repr=False)
    cluster: dict = None
    negative_mass: float = 0.0
    notes: tuple = ()

    @property
    def n_components(self):
        return self.coords.shape[1]

    def cluster_ids(self):
        if self.cluster is None:
            raise ValidationError("embedding has no cluster assignment")
        return np.array([self.cluster[lab] for lab in self.labels], dtype=int)

    def with_clusters(self, mapping):
        mapping = {str(k): int(v) for k, v in mapping.items()}
        labels = set(self.labels)
        unknown = sorted(set(mapping) - labels)
        if unknown:
            raise ValidationError(f"cluster assignment names unknown labels: {', '.join(unknown)}")
        missing = [lab for lab in self.labels if lab not in mapping]
        if missing:
            raise ValidationError(f"no cluster assigned to: {', '.join(missing)}")
        return replace(self, cluster={lab: mapping[lab] for lab in self.labels})


def dissimilarity(signatures, labels=None):
    """Squared Euclidean distances between signatures.

    ``signatures`` is either a list of :class:`~sigscope.signature.Signature`
    or an ``(n, k)`` array accompanied by ``labels``.
    """
    if labels is None:
        labels = [s.label for s in signatures]
        vectors = [np.atleast_1d(np.asarray(s.values, dtype=float)) for s in signatures]
        dims = {v.shape for v in vectors}
        if len(dims) > 1:
            first = vectors[0].shape
            odd = [lab for lab, v in zip(labels, vectors) if v.shape != first]
            raise ValidationError(
                f"signature dimension mismatch: {labels[0]!r} has {first[0]} values, "
                f"{', '.join(map(repr, odd))} differ"
            )
        X = np.vstack(vectors) if vectors else np.empty((0, 0))
    else:
        X = np.asarray(signatures, dtype=float)
        if X.ndim != 2 or X.shape[0] != len(labels):
            raise ValidationError("signature array must be (n, k) with one label per row")
    if X.shape[0] < 2:
        raise ValidationError("need at least 2 signatures")
    D = cdist(X, X, "sqeuclidean")
    D = 0.5 * (D + D.T)
    np.fill_diagonal(D, 0.0)
    return DissimilarityMatrix(D, tuple(labels))


def double_center(D):
    D = np.asarray(D, dtype=float)
    n = D.shape[0]
    J = np.eye(n) - np.full((n, n), 1.0 / n)
    B = -0.5 * J @ D @ J
    return 0.5 * (B + B.T)


def orient_columns(vectors):
    """Flip each column so its largest-magnitude entry is positive."""
    vectors = vectors.copy()
    for j in range(vectors.shape[1]):
        i = int(np.argmax(np.abs(vectors[:, j])))
        if vectors[i, j] < 0:
            vectors[:, j] = -vectors[:, j]
    return vectors


def _decompose(D, p):
    n = D.shape[0]
    if not 1 <= p <= n - 1:
        raise ValidationError(f"n_components must be in [1, {n - 1}], got {p}")
    B = double_center(D)
    evals, evecs = np.linalg.eigh(B)
    order = np.argsort(evals, kind="stable")[::-1]
    evals, evecs = evals[order], evecs[:, order]

    top = max(float(evals[0]), 0.0)
    tol = CLAMP_RTOL * top
    # eigenvalues this close to zero are rounding noise; their eigenvectors
    # are arbitrary within the null space and can pick up a constant offset
    clamp = np.abs(evals) <= tol
    evals = np.where(clamp, 0.0, evals)
    negative = evals < 0
    negative_mass = float(evals[negative].sum())

    retained = evals[:p]
    n_neg = int(np.count_nonzero(retained < 0))
    if n_neg > n - p:
        raise DegenerateInputError(
            f"{n_neg} of the {p} leading eigenvalues are negative; dissimilarities are not embeddable"
        )
    notes = []
    if n_neg:
        notes.append(f"{n_neg} retained eigenvalue(s) negative beyond tolerance; set to zero")
    if negative_mass < 0:
        notes.append(f"negative spectral mass {negative_mass:.6g} (dissimilarities not Euclidean)")
    for note in notes:
        warnings.warn(note, RuntimeWarning, stacklevel=3)

    vectors = orient_columns(evecs[:, :p])
    coords = vectors * np.sqrt(np.maximum(retained, 0.0))
    return B, evals, coords, negative_mass, tuple(notes)


def classical_mds(D, p=2):
    """Embed a :class:`DissimilarityMatrix` of squared distances in ``p`` dimensions."""
    _, evals, coords, negative_mass, notes = _decompose(D.d, p)
    return Embedding(coords, D.labels, evals, None, negative_mass, notes)


class ClassicalMDS(TransformerMixin, BaseEstimator):
    """Classical multidimensional scaling via double centering.

    Parameters
    ----------
    n_components : int, default=2
        Embedding dimension.
    dissimilarity : {"euclidean", "precomputed"}, default="euclidean"
        With ``"euclidean"`` the input rows are feature vectors and squared
        Euclidean distances are computed from them. With ``"precomputed"``
        the input is already a square matrix of *squared* distances.

    Attributes
    ----------
    embedding_ : ndarray of shape (n_samples, n_components)
    eigenvalues_ : ndarray of shape (n_samples,)
        Spectrum of the double-centred matrix, non-increasing.
    inner_product_ : ndarray of shape (n_samples, n_samples)
    negative_mass_ : float
    """

    def __init__(self, n_components=2, dissimilarity="euclidean"):
        self.n_components = n_components
        self.dissimilarity = dissimilarity

    def fit(self, X, y=None):
        self.fit_transform(X)
        return self

    def fit_transform(self, X, y=None):
        if self.dissimilarity == "precomputed":
            X = validate_data(self, X, dtype=np.float64, ensure_min_samples=2)
            D = check_symmetric(X, raise_exception=True)
        elif self.dissimilarity == "euclidean":
            X = validate_data(self, X, dtype=np.float64, ensure_min_samples=2)
            D = cdist(X, X, "sqeuclidean")
            np.fill_diagonal(D, 0.0)
        else:
            raise ValueError(f"unknown dissimilarity {self.dissimilarity!r}")
        B, evals, coords, negative_mass, _ = _decompose(D, self.n_components)
        self.inner_product_ = B
        self.eigenvalues_ = evals
        self.negative_mass_ = negative_mass
        self.embedding_ = coords
        return coords

    def transform(self, X):
        # Classical MDS has no out-of-sample extension; mirror sklearn.manifold.
        check_is_fitted(self)
        raise NotImplementedError("ClassicalMDS embeds only the data it was fitted on; use fit_transform")


def read_clusters(path):
    mapping = {}
    with Path(path).open(newline="", encoding="utf-8") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != 2:
                raise ParseError("cluster rows must be 'label,cluster_id'", row=lineno)
            label, cid = row[0].strip(), row[1].strip()
            try:
                cid = int(cid)
            except ValueError:
                if lineno == 1:
                    continue
                raise ParseError(f"cluster id {row[1]!r} is not an integer", row=lineno, column=2) from None
            if label in mapping:
                raise ValidationError(f"label {label!r} assigned twice in {path}")
            mapping[label] = cid
    return mapping


def load_clusters(embedding, path):
    return embedding.with_clusters(read_clusters(path))


def kmeans_clusters(labels, features, k, seed=0):
    """Fallback cluster model: k-means on the signature vectors."""
    from sklearn.cluster import KMeans

    if k < 1 or k > len(labels):
        raise ValidationError(f"k-means needs 1 <= k <= {len(labels)}, got {k}")
    model = KMeans(n_clusters=k, n_init=10, random_state=seed).fit(np.asarray(features, dtype=float))
    return {lab: int(c) for lab, c in zip(labels, model.labels_)}


def write_embedding(embedding, path):
    cluster = embedding.cluster or {}
    axes = ["x", "y"] if embedding.n_components == 2 else [f"c{i}" for i in range(embedding.n_components)]
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["label", *axes, "cluster"])
        for lab, row in zip(embedding.labels, embedding.coords):
            writer.writerow([lab, *(repr(float(v)) for v in row), cluster.get(lab, "")])


def read_embedding(path):
    labels, rows, cluster = [], [], {}
    with Path(path).open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or header[0] != "label" or header[-1] != "cluster":
            raise ParseError("embedding file needs a 'label,...,cluster' header", row=1)
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise ParseError("wrong number of fields", row=lineno)
            try:
                rows.append([float(v) for v in row[1:-1]])
            except ValueError:
                raise ParseError("non-numeric coordinate", row=lineno) from None
            labels.append(row[0])
            if row[-1] != "":
                cluster[row[0]] = int(row[-1])
    coords = np.array(rows, dtype=float).reshape(len(rows), len(header) - 2)
    emb = Embedding(coords, tuple(labels))
    return emb.with_clusters(cluster) if cluster else emb
