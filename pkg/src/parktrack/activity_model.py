"""
Walking energy-expenditure model.

Distance is lap-quantised (perimeter x completed laps), the average pace
over the session selects a MET band, and calories follow the standard
MET formula::

    kcal/min = MET * body weight (kg) * 3.5 / 200
    total    = kcal/min * elapsed minutes

All arithmetic is carried at full float precision. Published tables
truncate to two decimals; use :func:`truncate` / :func:`format_truncated`
only for display.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from decimal import ROUND_DOWN, Decimal

from .errors import InvalidParameterError

__all__ = [
    "METBand",
    "MET_BANDS",
    "CalorieModel",
    "DEFAULT_CALORIE_MODEL",
    "SessionStats",
    "validate_bands",
    "distance_covered",
    "average_pace",
    "classify_met",
    "band_for_pace",
    "calories_per_minute",
    "total_calories",
    "compute_stats",
    "truncate",
    "format_truncated",
]


@dataclass(frozen=True)
class METBand:
    """Half-open pace interval ``[pace_lo, pace_hi)`` in km/h mapped to a MET."""

    label: str
    pace_lo: float
    pace_hi: float
    met: float

    def contains(self, pace_kmh: float) -> bool:
        return self.pace_lo <= pace_kmh < self.pace_hi


# The running band starts at 7.2 km/h, not 11.2: the published results
# assign MET 11.5 to an 8.8 km/h walker, so the nominal 7.2-11.2 gap is
# folded into the top band.
MET_BANDS: tuple[METBand, ...] = (
    METBand("Strolling (slow walk)", 0.0, 5.6, 2.0),
    METBand("Brisk walking", 5.6, 6.4, 5.0),
    METBand("Concentrated brisk walking", 6.4, 7.2, 6.3),
    METBand("Running", 7.2, math.inf, 11.5),
)


def validate_bands(bands) -> tuple[METBand, ...]:
    """Check that ``bands`` partition ``[0, inf)`` with non-decreasing MET.

    Returns the bands as a tuple. Raises :class:`InvalidParameterError`
    on a gap, overlap, empty interval, unbounded middle band or a
    non-positive / decreasing MET.
    """
    bands = tuple(bands)
    if not bands:
        raise InvalidParameterError("band table is empty")
    if bands[0].pace_lo != 0.0:
        raise InvalidParameterError("first band must start at 0 km/h")
    if bands[-1].pace_hi != math.inf:
        raise InvalidParameterError("last band must be unbounded")
    prev = None
    for band in bands:
        if not band.met > 0 or not math.isfinite(band.met):
            raise InvalidParameterError(f"band {band.label!r}: MET must be positive")
        if not band.pace_lo < band.pace_hi:
            raise InvalidParameterError(f"band {band.label!r}: empty pace interval")
        if prev is not None:
            if band.pace_lo != prev.pace_hi:
                raise InvalidParameterError(
                    f"bands {prev.label!r} and {band.label!r} leave a gap or overlap"
                )
            if band.met < prev.met:
                raise InvalidParameterError("MET values must be non-decreasing with pace")
        prev = band
    return bands


validate_bands(MET_BANDS)


@dataclass(frozen=True)
class CalorieModel:
    """Constants of the per-minute calorie formula."""

    resting_vo2_factor: float = 3.5
    divisor: float = 200.0

    def per_minute(self, met: float, weight_kg: float) -> float:
        return met * weight_kg * self.resting_vo2_factor / self.divisor


DEFAULT_CALORIE_MODEL = CalorieModel()


@dataclass(frozen=True)
class SessionStats:
    """Derived statistics for one walking session."""

    distance_m: float
    elapsed_s: float
    avg_pace_kmh: float
    met: float
    kcal_per_min: float
    total_kcal: float

    def as_dict(self) -> dict:
        return {
            "distance_m": self.distance_m,
            "elapsed_s": self.elapsed_s,
            "avg_pace_kmh": self.avg_pace_kmh,
            "met": self.met,
            "kcal_per_min": self.kcal_per_min,
            "total_kcal": self.total_kcal,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "SessionStats":
        return cls(**{k: float(data[k]) for k in cls.__dataclass_fields__})


def _require(cond: bool, message: str) -> None:
    if not cond:
        raise InvalidParameterError(message)


def _finite(x) -> bool:
    try:
        return math.isfinite(x)
    except TypeError:
        return False


def distance_covered(perimeter_m: float, laps: int) -> float:
    """Distance in meters for ``laps`` completed laps of the loop."""
    _require(_finite(perimeter_m) and perimeter_m > 0, f"perimeter must be positive, got {perimeter_m!r}")
    _require(
        isinstance(laps, int) and not isinstance(laps, bool) and laps >= 0,
        f"laps must be a non-negative integer, got {laps!r}",
    )
    return float(perimeter_m) * laps


def average_pace(distance_m: float, elapsed_s: float) -> float:
    """Average pace in km/h."""
    _require(_finite(distance_m) and distance_m >= 0, f"distance must be >= 0, got {distance_m!r}")
    _require(_finite(elapsed_s) and elapsed_s > 0, f"elapsed time must be positive, got {elapsed_s!r}")
    return (distance_m / 1000.0) / (elapsed_s / 3600.0)


def band_for_pace(pace_kmh: float, bands=MET_BANDS) -> METBand:
    """Return the band whose half-open interval contains ``pace_kmh``."""
    _require(_finite(pace_kmh) and pace_kmh >= 0, f"pace must be finite and >= 0, got {pace_kmh!r}")
    for band in bands:
        if band.contains(pace_kmh):
            return band
    raise InvalidParameterError(f"no band contains pace {pace_kmh!r}")


def classify_met(pace_kmh: float, bands=MET_BANDS) -> float:
    """MET value for an average pace in km/h."""
    return band_for_pace(pace_kmh, bands).met


def calories_per_minute(met: float, weight_kg: float, model: CalorieModel = DEFAULT_CALORIE_MODEL) -> float:
    """Energy expenditure rate in kcal/min."""
    _require(_finite(met) and met > 0, f"MET must be positive, got {met!r}")
    _require(_finite(weight_kg) and weight_kg > 0, f"weight must be positive, got {weight_kg!r}")
    return model.per_minute(met, weight_kg)


def total_calories(kcal_per_min: float, elapsed_s: float) -> float:
    """Total kcal over ``elapsed_s`` seconds (fractional minutes allowed)."""
    _require(_finite(kcal_per_min) and kcal_per_min >= 0, f"kcal/min must be >= 0, got {kcal_per_min!r}")
    _require(_finite(elapsed_s) and elapsed_s >= 0, f"elapsed time must be >= 0, got {elapsed_s!r}")
    return kcal_per_min * (elapsed_s / 60.0)


def compute_stats(
    weight_kg: float,
    perimeter_m: float,
    laps: int,
    elapsed_s: float,
    bands=MET_BANDS,
    model: CalorieModel = DEFAULT_CALORIE_MODEL,
) -> SessionStats:
    """Chain distance -> pace -> MET -> kcal/min -> total for one session.

    Example:
        >>> s = compute_stats(70.5, 110.0, 28, 1800.0)
        >>> round(s.avg_pace_kmh, 9), s.met, s.kcal_per_min
        (6.16, 5.0, 6.16875)
    """
    distance = distance_covered(perimeter_m, laps)
    pace = average_pace(distance, elapsed_s)
    met = classify_met(pace, bands)
    rate = calories_per_minute(met, weight_kg, model)
    total = total_calories(rate, elapsed_s)
    return SessionStats(distance, float(elapsed_s), pace, met, rate, total)


def truncate(value: float, places: int = 2) -> float:
    """Truncate toward zero at ``places`` decimals.

    The value is first rounded to 9 decimals so float noise such as
    ``90.50999999999999`` truncates to ``90.51`` rather than ``90.50``.
    """
    q = Decimal(1).scaleb(-places)
    d = Decimal(repr(value)).quantize(Decimal("1e-9")).quantize(q, rounding=ROUND_DOWN)
    return float(d)


def format_truncated(value: float, places: int = 2) -> str:
    return f"{truncate(value, places):.{places}f}"
