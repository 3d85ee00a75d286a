"""Reading periodic time-series CSV files and dropping implausible periods.

A file holds one period per row, ``label,v1,...,vm``. An optional header row
is recognised by a non-numeric first value cell.
"""

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .exceptions import ParseError, ValidationError

DEFAULT_SAMPLES_PER_PERIOD = 168


@dataclass(frozen=True)
class Period:
    label: str
    samples: np.ndarray


@dataclass(frozen=True)
class SeriesMatrix:
    """Ordered periods of equal length, stored as an ``(n, m)`` array."""

    labels: tuple
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.ndim != 2:
            raise ValidationError("series values must be a 2-D array (periods x samples)")
        labels = tuple(str(lab) for lab in self.labels)
        if len(labels) != values.shape[0]:
            raise ValidationError(
                f"{len(labels)} labels for {values.shape[0]} periods"
            )
        if any(not lab for lab in labels):
            raise ValidationError("period labels must be nonempty")
        seen = set()
        for lab in labels:
            if lab in seen:
                raise ValidationError(f"duplicate period label {lab!r}")
            seen.add(lab)
        if not np.all(np.isfinite(values)):
            bad = labels[int(np.where(~np.isfinite(values))[0][0])]
            raise ValidationError(f"period {bad!r} contains non-finite samples")
        values.setflags(write=False)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "values", values)

    @property
    def samples_per_period(self):
        return self.values.shape[1]

    @property
    def periods(self):
        return [Period(lab, row) for lab, row in zip(self.labels, self.values)]

    def __len__(self):
        return len(self.labels)

    def subset(self, labels):
        index = {lab: i for i, lab in enumerate(self.labels)}
        rows = [index[lab] for lab in labels]
        return SeriesMatrix(tuple(labels), self.values[rows] if rows else
                            np.empty((0, self.samples_per_period)))


@dataclass(frozen=True)
class FilterSpec:
    """Accepted sample range and how many out-of-range samples a period may hold."""

    min_value: float = 0.0
    max_value: float = math.inf
    max_violations: int = 0

    def __post_init__(self):
        if not self.min_value <= self.max_value:
            raise ValidationError(
                f"min_value {self.min_value} exceeds max_value {self.max_value}"
            )
        if self.max_violations < 0:
            raise ValidationError("max_violations must be non-negative")


def _is_number(text):
    try:
        float(text)
    except ValueError:
        return False
    return True


def parse_csv(path, samples_per_period=DEFAULT_SAMPLES_PER_PERIOD):
    """Read ``path`` into a :class:`SeriesMatrix`, preserving row order.

    Raises :class:`ParseError` naming the 1-based file row and column for a
    wrong-arity row or a non-numeric or non-finite cell, and
    :class:`ValidationError` for duplicate labels.
    """
    if samples_per_period < 1:
        raise ValidationError("samples_per_period must be positive")
    path = Path(path)
    labels, rows = [], []
    seen = {}
    with path.open(newline="", encoding="utf-8") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or all(not cell.strip() for cell in row):
                continue
            if lineno == 1 and len(row) > 1 and not _is_number(row[1].strip()):
                continue
            if len(row) != samples_per_period + 1:
                raise ParseError(
                    f"expected {samples_per_period} values after the label, "
                    f"got {len(row) - 1} for {row[0]!r}",
                    row=lineno,
                )
            label = row[0].strip()
            if not label:
                raise ParseError("empty period label", row=lineno, column=1)
            if label in seen:
                raise ValidationError(
                    f"duplicate period label {label!r} (rows {seen[label]} and {lineno})"
                )
            seen[label] = lineno
            values = []
            for col, cell in enumerate(row[1:], start=2):
                try:
                    value = float(cell)
                except ValueError:
                    raise ParseError(f"non-numeric value {cell!r}", row=lineno, column=col) from None
                if not math.isfinite(value):
                    raise ParseError(f"non-finite value {cell!r}", row=lineno, column=col)
                values.append(value)
            labels.append(label)
            rows.append(values)
    values = np.array(rows, dtype=float).reshape(len(rows), samples_per_period)
    return SeriesMatrix(tuple(labels), values)


def write_csv(matrix, path):
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        for label, row in zip(matrix.labels, matrix.values):
            writer.writerow([label, *(repr(float(v)) for v in row)])


def count_violations(matrix, spec):
    values = matrix.values
    return np.count_nonzero((values < spec.min_value) | (values > spec.max_value), axis=1)


def filter_periods(matrix, spec):
    """Split ``matrix`` into retained periods and rejected labels.

    A period is kept when at most ``spec.max_violations`` of its samples fall
    outside ``[spec.min_value, spec.max_value]``. Rejected labels keep input
    order.
    """
    violations = count_violations(matrix, spec)
    keep = violations <= spec.max_violations
    retained = [lab for lab, k in zip(matrix.labels, keep) if k]
    rejected = [lab for lab, k in zip(matrix.labels, keep) if not k]
    return matrix.subset(retained), rejected


def filter_with_speed(volume, spec, speed=None, speed_spec=None):
    """Filter on volume and, when given, on a parallel speed matrix as well.

    A period is dropped if either channel rejects it. Speed values are used
    only here; they never reach later stages.
    """
    if speed is None:
        return filter_periods(volume, spec)
    if tuple(speed.labels) != tuple(volume.labels):
        raise ValidationError("speed file labels do not match the volume file labels")
    if speed.samples_per_period != volume.samples_per_period:
        raise ValidationError("speed and volume files differ in samples per period")
    speed_spec = speed_spec or FilterSpec()
    _, rejected_volume = filter_periods(volume, spec)
    _, rejected_speed = filter_periods(speed, speed_spec)
    dropped = set(rejected_volume) | set(rejected_speed)
    rejected = [lab for lab in volume.labels if lab in dropped]
    retained = [lab for lab in volume.labels if lab not in dropped]
    return volume.subset(retained), rejected
