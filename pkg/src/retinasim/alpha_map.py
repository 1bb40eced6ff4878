"""Synthetic retinal transmission maps.

Each eye is modelled as a rectangular grid of interrogable spots, every spot
carrying an effective transmission coefficient ``alpha`` in a global band
``[alpha_min, alpha_max]``.  The map is the stored biometric template: it is
generated once (here, synthetically, with independent uniform draws per
spot), classified into low/mid/high transmission bands, and persisted as a
small JSON document.

Spatial correlations are deliberately ignored — spots are i.i.d. — and maps
are immutable after creation so they can be shared freely across concurrent
trials.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

import numpy as np

from .errors import ConfigError, DomainError, MapFormatError

__all__ = [
    "AlphaMap",
    "SpotClass",
    "PointPair",
    "UniformBands",
    "AlphaDistribution",
    "distribution_support",
    "generate_synthetic",
    "classify",
    "draw_interrogation_spot",
    "save",
    "load",
]


class SpotClass(Enum):
    """Transmission band of a retinal spot."""

    LOW = "low"
    MID = "mid"
    HIGH = "high"


@dataclass(frozen=True, eq=False)
class AlphaMap:
    """Immutable per-spot transmission template.

    ``alpha`` is stored row-major (index ``y * width + x``) as a read-only
    float array; every value must lie inside ``[alpha_min, alpha_max]``.
    """

    width: int
    height: int
    alpha: np.ndarray
    alpha_min: float
    alpha_max: float

    def __post_init__(self) -> None:
        if self.width < 1 or self.height < 1:
            raise DomainError(
                f"map dimensions must be >= 1, got {self.width}x{self.height}"
            )
        if not (0.0 < self.alpha_min < self.alpha_max <= 1.0):
            raise DomainError(
                "need 0 < alpha_min < alpha_max <= 1, got "
                f"alpha_min={self.alpha_min!r}, alpha_max={self.alpha_max!r}"
            )
        arr = np.asarray(self.alpha, dtype=np.float64).reshape(-1).copy()
        if arr.size != self.width * self.height:
            raise DomainError(
                f"expected {self.width * self.height} transmission values, got {arr.size}"
            )
        if arr.min() < self.alpha_min or arr.max() > self.alpha_max:
            bad = int(np.argmax((arr < self.alpha_min) | (arr > self.alpha_max)))
            raise DomainError(
                f"alpha[{bad}] = {arr[bad]!r} outside "
                f"[{self.alpha_min!r}, {self.alpha_max!r}]"
            )
        arr.setflags(write=False)
        object.__setattr__(self, "alpha", arr)

    @property
    def n_spots(self) -> int:
        return self.width * self.height


@dataclass(frozen=True)
class PointPair:
    """Interrogation distribution concentrated on two transmission values."""

    alpha_low: float
    alpha_high: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "alpha_low", float(self.alpha_low))
        object.__setattr__(self, "alpha_high", float(self.alpha_high))
        if not (0.0 < self.alpha_low < self.alpha_high <= 1.0):
            raise DomainError(
                "need 0 < alpha_low < alpha_high <= 1 (two distinct points), got "
                f"({self.alpha_low!r}, {self.alpha_high!r})"
            )


@dataclass(frozen=True)
class UniformBands:
    """Interrogation distribution uniform over a low and a high band.

    Degenerate (zero-width) bands are allowed and behave like point masses.
    """

    low_band: tuple[float, float]
    high_band: tuple[float, float]

    def __post_init__(self) -> None:
        object.__setattr__(
            self, "low_band", (float(self.low_band[0]), float(self.low_band[1]))
        )
        object.__setattr__(
            self, "high_band", (float(self.high_band[0]), float(self.high_band[1]))
        )
        a, b = self.low_band
        c, d = self.high_band
        if not (0.0 < a <= b < c <= d <= 1.0):
            raise DomainError(
                "bands must satisfy 0 < low[0] <= low[1] < high[0] <= high[1] <= 1, "
                f"got low={self.low_band!r}, high={self.high_band!r}"
            )


AlphaDistribution = PointPair | UniformBands


def distribution_support(distribution: AlphaDistribution) -> tuple[float, float]:
    """Smallest and largest transmission value the distribution can produce."""
    if isinstance(distribution, PointPair):
        return distribution.alpha_low, distribution.alpha_high
    if isinstance(distribution, UniformBands):
        return distribution.low_band[0], distribution.high_band[1]
    raise DomainError(f"unknown interrogation distribution {distribution!r}")


def _sample_class_alpha(
    distribution: AlphaDistribution, spot_class: SpotClass, rng: np.random.Generator
) -> float:
    if isinstance(distribution, PointPair):
        return (
            distribution.alpha_high
            if spot_class is SpotClass.HIGH
            else distribution.alpha_low
        )
    band = (
        distribution.high_band
        if spot_class is SpotClass.HIGH
        else distribution.low_band
    )
    if band[0] == band[1]:
        return band[0]
    return float(rng.uniform(band[0], band[1]))


def generate_synthetic(
    width: int, height: int, alpha_min: float, alpha_max: float, seed: int
) -> AlphaMap:
    """Draw a fresh map with independent uniform transmission per spot.

    The same seed always yields the same map (a dedicated counter-based
    generator is constructed locally, so global RNG state is never touched).
    """
    if width < 1 or height < 1:
        raise DomainError(f"map dimensions must be >= 1, got {width}x{height}")
    if not (0.0 < alpha_min < alpha_max <= 1.0):
        raise DomainError(
            f"need 0 < alpha_min < alpha_max <= 1, got ({alpha_min!r}, {alpha_max!r})"
        )
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))
    alpha = rng.uniform(alpha_min, alpha_max, size=width * height)
    return AlphaMap(width, height, alpha, alpha_min, alpha_max)


def classify(alpha_map: AlphaMap, low_max: float, high_min: float) -> list[SpotClass]:
    """Partition every spot into LOW (alpha <= low_max), HIGH (alpha >=
    high_min) or MID.  Both class boundaries are inclusive on the class side.
    """
    low_max = float(low_max)
    high_min = float(high_min)
    if low_max >= high_min:
        raise DomainError(
            f"class thresholds must satisfy low_max < high_min, got "
            f"({low_max!r}, {high_min!r})"
        )
    if low_max < alpha_map.alpha_min or high_min > alpha_map.alpha_max:
        raise DomainError(
            f"class thresholds ({low_max!r}, {high_min!r}) fall outside the map band "
            f"[{alpha_map.alpha_min!r}, {alpha_map.alpha_max!r}]"
        )
    out: list[SpotClass] = []
    for a in alpha_map.alpha:
        if a <= low_max:
            out.append(SpotClass.LOW)
        elif a >= high_min:
            out.append(SpotClass.HIGH)
        else:
            out.append(SpotClass.MID)
    return out


def draw_interrogation_spot(
    alpha_map: AlphaMap,
    distribution: AlphaDistribution,
    rng: np.random.Generator,
) -> tuple[float, SpotClass]:
    """Pick the next interrogation target: a fair coin chooses the hidden
    class, then the transmission value is drawn from that class's part of
    ``distribution``.

    The class label is protocol-internal state — callers hand the subject
    only the resulting pulse, never the label.  The map enters as a
    consistency check: the distribution must be realizable within the map's
    global transmission band.
    """
    lo, hi = distribution_support(distribution)
    if lo < alpha_map.alpha_min or hi > alpha_map.alpha_max:
        raise ConfigError(
            f"interrogation distribution spans [{lo!r}, {hi!r}] but the map only "
            f"provides [{alpha_map.alpha_min!r}, {alpha_map.alpha_max!r}]"
        )
    spot_class = SpotClass.HIGH if rng.random() < 0.5 else SpotClass.LOW
    alpha = _sample_class_alpha(distribution, spot_class, rng)
    return alpha, spot_class


# ---------------------------------------------------------------------------
# Persistence
# ---------------------------------------------------------------------------
#
# Maps are stored as a single flat JSON document.  Floats are written in
# scientific notation with 17 fractional digits (18 significant digits),
# which is more than enough for a lossless binary64 round trip.

_FORMAT_VERSION = 1


def _fmt(value: float) -> str:
    return format(float(value), ".17e")


def save(alpha_map: AlphaMap, path: str | Path) -> None:
    """Write ``alpha_map`` to ``path`` in the versioned JSON map format."""
    parts = [
        "{\n",
        f'  "version": {_FORMAT_VERSION},\n',
        f'  "width": {alpha_map.width},\n',
        f'  "height": {alpha_map.height},\n',
        f'  "alpha_min": {_fmt(alpha_map.alpha_min)},\n',
        f'  "alpha_max": {_fmt(alpha_map.alpha_max)},\n',
        '  "alpha": [\n',
    ]
    body = ",\n".join("    " + _fmt(a) for a in alpha_map.alpha)
    parts.append(body)
    parts.append("\n  ]\n}\n")
    Path(path).write_text("".join(parts), encoding="ascii")


def _require_field(doc: dict, name: str, path: str) -> object:
    if name not in doc:
        raise MapFormatError(f"{path}: missing required field '{name}'")
    return doc[name]


def _require_int(doc: dict, name: str, path: str) -> int:
    value = _require_field(doc, name, path)
    if isinstance(value, bool) or not isinstance(value, int):
        raise MapFormatError(f"{path}: field '{name}' must be an integer, got {value!r}")
    return value


def _require_number(doc: dict, name: str, path: str) -> float:
    value = _require_field(doc, name, path)
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise MapFormatError(f"{path}: field '{name}' must be a number, got {value!r}")
    return float(value)


def load(path: str | Path) -> AlphaMap:
    """Read a map written by :func:`save`, validating structure and values.

    Parse and validation failures raise :class:`MapFormatError` carrying the
    offending location (JSON line/column, or field name / spot index).
    """
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise MapFormatError(f"{path}: cannot read map file: {exc}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise MapFormatError(
            f"{path}: invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}"
        ) from exc
    if not isinstance(doc, dict):
        raise MapFormatError(f"{path}: top-level JSON value must be an object")

    version = _require_int(doc, "version", str(path))
    if version != _FORMAT_VERSION:
        raise MapFormatError(
            f"{path}: unsupported map format version {version} (expected {_FORMAT_VERSION})"
        )
    width = _require_int(doc, "width", str(path))
    height = _require_int(doc, "height", str(path))
    alpha_min = _require_number(doc, "alpha_min", str(path))
    alpha_max = _require_number(doc, "alpha_max", str(path))
    raw_alpha = _require_field(doc, "alpha", str(path))
    if not isinstance(raw_alpha, list):
        raise MapFormatError(f"{path}: field 'alpha' must be an array")

    if width < 1 or height < 1:
        raise MapFormatError(f"{path}: invalid dimensions {width}x{height}")
    if not (0.0 < alpha_min < alpha_max <= 1.0):
        raise MapFormatError(
            f"{path}: invalid transmission band [{alpha_min!r}, {alpha_max!r}]"
        )
    if len(raw_alpha) != width * height:
        raise MapFormatError(
            f"{path}: field 'alpha' has {len(raw_alpha)} entries, "
            f"expected width*height = {width * height}"
        )
    values = np.empty(len(raw_alpha), dtype=np.float64)
    for i, v in enumerate(raw_alpha):
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise MapFormatError(f"{path}: alpha[{i}] is not a number: {v!r}")
        if not (alpha_min <= float(v) <= alpha_max):
            raise MapFormatError(
                f"{path}: alpha[{i}] = {v!r} outside [{alpha_min!r}, {alpha_max!r}]"
            )
        values[i] = float(v)
    return AlphaMap(width, height, values, alpha_min, alpha_max)
