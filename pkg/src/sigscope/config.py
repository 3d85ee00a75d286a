"""Pipeline configuration: TOML file merged with command-line overrides."""

import math
from dataclasses import dataclass, field, fields
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .exceptions import ConfigError
from .ingest import DEFAULT_SAMPLES_PER_PERIOD, FilterSpec
from .regression import DEFAULT_ALPHA, DEFAULT_MAX_DEGREE, DEFAULT_R2_THRESHOLD
from .signature import DEFAULT_HARMONICS, HarmonicSelection


@dataclass
class PipelineConfig:
    input: Path = None
    speed: Path = None
    samples_per_period: int = DEFAULT_SAMPLES_PER_PERIOD
    min_value: float = 0.0
    max_value: float = math.inf
    max_violations: int = 0
    speed_min_value: float = 0.0
    speed_max_value: float = math.inf
    speed_max_violations: int = 0
    harmonics: tuple = DEFAULT_HARMONICS
    standardize: bool = False
    clusters: Path = None
    kmeans: int = None
    seed: int = 0
    alpha: float = DEFAULT_ALPHA
    max_degree: int = DEFAULT_MAX_DEGREE
    r2_threshold: float = DEFAULT_R2_THRESHOLD
    out: Path = field(default_factory=lambda: Path("out"))

    @property
    def volume_filter(self):
        return FilterSpec(self.min_value, self.max_value, self.max_violations)

    @property
    def speed_filter(self):
        return FilterSpec(self.speed_min_value, self.speed_max_value, self.speed_max_violations)

    @property
    def selection(self):
        return HarmonicSelection(self.harmonics)

    def echo(self):
        """Settings that shape the analysis, for embedding in reports."""
        return {
            "alpha": self.alpha,
            "harmonics": list(self.harmonics),
            "standardize": self.standardize,
            "max_degree": self.max_degree,
            "r2_threshold": self.r2_threshold,
        }

    def validate(self, needs_input=False, needs_clusters=False):
        if not 0 < self.alpha < 1:
            raise ConfigError(f"alpha must lie in (0, 1), got {self.alpha}")
        if self.max_degree < 1:
            raise ConfigError(f"max_degree must be >= 1, got {self.max_degree}")
        if self.samples_per_period < 2:
            raise ConfigError("samples_per_period must be >= 2")
        if self.r2_threshold < 0:
            raise ConfigError("r2_threshold must be non-negative")
        try:
            self.volume_filter, self.speed_filter
            self.selection.check(self.samples_per_period)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        if needs_input:
            if self.input is None:
                raise ConfigError("no input file given (--input)")
            if not Path(self.input).is_file():
                raise ConfigError(f"input file not found: {self.input}")
            if self.speed is not None and not Path(self.speed).is_file():
                raise ConfigError(f"speed file not found: {self.speed}")
        if needs_clusters:
            if self.clusters is None and self.kmeans is None:
                raise ConfigError("need a cluster file (--clusters) or a k-means cluster count (--kmeans)")
            if self.clusters is not None and not Path(self.clusters).is_file():
                raise ConfigError(f"cluster file not found: {self.clusters}")
            if self.kmeans is not None and self.kmeans < 1:
                raise ConfigError("--kmeans must be positive")
        return self


_PATHS = {"input", "speed", "clusters", "out"}
_KEYS = {f.name for f in fields(PipelineConfig)}


def _coerce(key, value):
    if value is None:
        return None
    if key in _PATHS:
        return Path(value)
    if key == "harmonics":
        if isinstance(value, str):
            value = [v for v in value.replace(" ", "").split(",") if v]
        try:
            return tuple(int(v) for v in value)
        except (TypeError, ValueError):
            raise ConfigError(f"harmonics must be integers, got {value!r}") from None
    default = getattr(PipelineConfig, key, None)
    if isinstance(default, bool):
        return bool(value)
    if key in {"samples_per_period", "max_violations", "speed_max_violations", "kmeans", "seed", "max_degree"}:
        return int(value)
    if key in {"min_value", "max_value", "speed_min_value", "speed_max_value", "alpha", "r2_threshold"}:
        return float(value)
    return value


def load_config_file(path):
    path = Path(path)
    try:
        with path.open("rb") as fh:
            data = tomllib.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from None
    unknown = sorted(set(data) - _KEYS)
    if unknown:
        raise ConfigError(f"unknown config keys in {path}: {', '.join(unknown)}")
    # relative paths in a file are relative to the file
    for key in _PATHS & set(data):
        if isinstance(data[key], str) and not Path(data[key]).is_absolute():
            data[key] = str(path.parent / data[key])
    return data


def build_config(file_values=None, overrides=None):
    """Merge file values and overrides (overrides win; ``None`` means unset)."""
    merged = {}
    for source in (file_values or {}, overrides or {}):
        for key, value in source.items():
            if key in _KEYS and value is not None:
                merged[key] = _coerce(key, value)
    return PipelineConfig(**merged)
