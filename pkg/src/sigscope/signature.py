"""Power-spectrum data signatures.

Normalization convention
------------------------
For a real signal ``x`` of length ``m`` with discrete Fourier transform
``X_k = sum_t x_t exp(-2j*pi*k*t/m)``:

* the offset is the signal mean, ``mu0 = X_0 / m``;
* ``a_k = s_k * Re(X_k)`` and ``b_k = -s_k * Im(X_k)`` with ``s_k = 2/m``,
  except at the Nyquist index ``k = m/2`` (even ``m``) where ``s_k = 1/m``;
* ``A_k = sqrt(a_k**2 + b_k**2)``.

With this scaling ``cos(2*pi*k*t/m)`` has ``A_k = 1`` and ``sin`` has
``b_k = 1`` for every ``1 <= k < m``, and the energy identity reads::

    mean(x**2) = mu0**2 + 1/2 * sum_{1 <= k < m/2} A_k**2 + A_{m/2}**2

where the last term is present only for even ``m``.
"""

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted, validate_data

from .exceptions import ParseError, ValidationError

DEFAULT_HARMONICS = (0, 7, 14, 21, 28, 35, 42)


@dataclass(frozen=True)
class Spectrum:
    offset: float
    a: np.ndarray = field(repr=False)
    b: np.ndarray = field(repr=False)

    @property
    def m(self):
        return len(self.a) + 1

    @property
    def coefficients(self):
        return list(zip(self.a.tolist(), self.b.tolist()))

    @property
    def power(self):
        return power_spectrum(self)


@dataclass(frozen=True)
class HarmonicSelection:
    """Spectrum indices forming a signature; index 0 selects the offset."""

    indices: tuple = DEFAULT_HARMONICS

    def __post_init__(self):
        indices = tuple(int(i) for i in self.indices)
        if not indices:
            raise ValidationError("harmonic selection is empty")
        if any(i < 0 for i in indices):
            raise ValidationError("harmonic indices must be non-negative")
        if len(set(indices)) != len(indices):
            raise ValidationError(f"duplicate harmonic indices in {indices}")
        object.__setattr__(self, "indices", indices)

    def check(self, m):
        too_big = [i for i in self.indices if i >= m]
        if too_big:
            raise ValidationError(
                f"harmonic indices {too_big} out of range for {m} samples per period"
            )


@dataclass(frozen=True)
class Signature:
    label: str
    values: np.ndarray


def _scale(m):
    s = np.full(m - 1, 2.0 / m)
    if m % 2 == 0:
        s[m // 2 - 1] = 1.0 / m
    return s


def dft(samples):
    """Decompose ``samples`` into offset and cosine/sine coefficients."""
    x = np.asarray(samples, dtype=float)
    if x.ndim != 1 or x.size < 2:
        raise ValidationError("dft needs a 1-D signal with at least 2 samples")
    if not np.all(np.isfinite(x)):
        raise ValidationError("signal contains non-finite samples")
    m = x.size
    X = np.fft.fft(x)
    s = _scale(m)
    a = s * X[1:].real
    b = -s * X[1:].imag
    if m % 2 == 0:
        b[m // 2 - 1] = 0.0
    return Spectrum(float(X[0].real / m), a, b)


def inverse_dft(spectrum):
    m = spectrum.m
    X = np.empty(m, dtype=complex)
    X[0] = spectrum.offset * m
    X[1:] = (spectrum.a - 1j * spectrum.b) / _scale(m)
    return np.fft.ifft(X).real


def power_spectrum(spectrum):
    """Amplitudes ``(A_1, ..., A_{m-1})``."""
    return np.hypot(spectrum.a, spectrum.b)


def extract_signature(spectrum, selection=None, label=""):
    selection = selection or HarmonicSelection()
    selection.check(spectrum.m)
    power = power_spectrum(spectrum)
    values = [spectrum.offset if k == 0 else power[k - 1] for k in selection.indices]
    return Signature(label, np.array(values, dtype=float))


def signature_matrix(values, indices=DEFAULT_HARMONICS):
    """Vectorised signatures for every row of an ``(n, m)`` array."""
    values = np.asarray(values, dtype=float)
    n, m = values.shape
    if m < 2:
        raise ValidationError("periods need at least 2 samples")
    HarmonicSelection(indices).check(m)
    X = np.fft.fft(values, axis=1)
    out = np.empty((n, len(indices)))
    for j, k in enumerate(indices):
        if k == 0:
            out[:, j] = X[:, 0].real / m
        elif m % 2 == 0 and k == m // 2:
            out[:, j] = np.abs(X[:, k].real) / m
        else:
            out[:, j] = 2.0 / m * np.abs(X[:, k])
    return out


def signatures(matrix, selection=None):
    """One :class:`Signature` per period of a :class:`~sigscope.ingest.SeriesMatrix`."""
    selection = selection or HarmonicSelection()
    values = signature_matrix(matrix.values, selection.indices)
    return [Signature(lab, row) for lab, row in zip(matrix.labels, values)]


class SignatureTransformer(TransformerMixin, BaseEstimator):
    """Map each row (one period) to its power-spectrum signature.

    Parameters
    ----------
    harmonics : tuple of int, default=(0, 7, 14, 21, 28, 35, 42)
        Spectrum indices to keep, in output order. Index 0 is the offset
        (signal mean); every other index ``k`` yields the amplitude ``A_k``.
    """

    def __init__(self, harmonics=DEFAULT_HARMONICS):
        self.harmonics = harmonics

    def fit(self, X, y=None):
        X = validate_data(self, X, dtype=np.float64, ensure_min_features=2)
        HarmonicSelection(self.harmonics).check(X.shape[1])
        self.harmonics_ = tuple(int(k) for k in self.harmonics)
        return self

    def transform(self, X):
        check_is_fitted(self)
        X = validate_data(self, X, dtype=np.float64, reset=False)
        return signature_matrix(X, self.harmonics_)

    def get_feature_names_out(self, input_features=None):
        check_is_fitted(self)
        return np.array(
            ["offset" if k == 0 else f"harmonic_{k}" for k in self.harmonics_], dtype=object
        )


def write_signatures(labels, values, path):
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        for lab, row in zip(labels, np.asarray(values)):
            writer.writerow([lab, *(repr(float(v)) for v in row)])


def read_signatures(path):
    labels, rows = [], []
    with Path(path).open(newline="", encoding="utf-8") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row:
                continue
            if rows and len(row) != len(rows[0]) + 1:
                raise ParseError("inconsistent signature length", row=lineno)
            try:
                rows.append([float(v) for v in row[1:]])
            except ValueError:
                raise ParseError("non-numeric signature value", row=lineno) from None
            labels.append(row[0])
    if not rows:
        raise ValidationError(f"no signatures in {path}")
    return labels, np.array(rows, dtype=float)
