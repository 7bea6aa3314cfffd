"""
Seeded discrete-event park simulator.

Walkers circle a closed loop with a single camera at position 0. Camera
crossing times are solved in closed form from each walker's
piecewise-constant speed profile, then a detection model drops, jitters
or misattributes them. Ground truth is computed from the kinematics
alone, never from the emitted stream.

Scenario document (JSON)::

    {"perimeter_m": 110.0, "horizon_s": 1800,
     "detection": {"detect_prob": 1.0, "jitter_s": 0.0,
                   "false_match_prob": 0.0, "seed": 7},
     "walkers": [{"subject_id": "S1", "weight_kg": 70.5,
                  "speed_kmh": 6.0},
                 {"subject_id": "S2", "weight_kg": 80.0,
                  "start_offset_m": 30.0,
                  "segments": [{"start_s": 0, "end_s": 900, "speed_kmh": 5.0},
                               {"start_s": 900, "end_s": 1800, "speed_kmh": 7.5}]}]}
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from .activity_model import SessionStats, compute_stats
from .errors import EmptySessionError, InvalidParameterError, OrderingError, RoutingError
from .face_gallery import Gallery, SyntheticEmbeddingSource
from .session_tracker import DEFAULT_PERIMETER_M, Decision, SessionTracker, SightingEvent


@dataclass(frozen=True)
class SpeedSegment:
    start_s: float
    end_s: float
    speed_kmh: float


@dataclass(frozen=True)
class WalkerProfile:
    subject_id: str
    weight_kg: float
    segments: tuple[SpeedSegment, ...]
    start_offset_m: float = 0.0

    @classmethod
    def constant(cls, subject_id, weight_kg, speed_kmh, horizon_s, start_offset_m=0.0):
        return cls(subject_id, weight_kg, (SpeedSegment(0.0, float(horizon_s), float(speed_kmh)),), start_offset_m)

    def validate(self, horizon_s: float) -> None:
        if not math.isfinite(self.weight_kg) or self.weight_kg <= 0:
            raise InvalidParameterError(f"{self.subject_id}: weight must be positive")
        if not math.isfinite(self.start_offset_m) or self.start_offset_m < 0:
            raise InvalidParameterError(f"{self.subject_id}: start_offset_m must be >= 0")
        if not self.segments:
            raise InvalidParameterError(f"{self.subject_id}: no speed segments")
        expected = 0.0
        for seg in self.segments:
            if seg.start_s != expected:
                raise InvalidParameterError(
                    f"{self.subject_id}: segment starts at {seg.start_s}, expected {expected} (gap or overlap)"
                )
            if not seg.end_s > seg.start_s:
                raise InvalidParameterError(f"{self.subject_id}: empty segment at {seg.start_s}")
            if not math.isfinite(seg.speed_kmh) or seg.speed_kmh < 0:
                raise InvalidParameterError(f"{self.subject_id}: speed must be finite and >= 0")
            expected = seg.end_s
        if expected < horizon_s:
            raise InvalidParameterError(f"{self.subject_id}: segments end at {expected}, before horizon {horizon_s}")


@dataclass(frozen=True)
class DetectionModel:
    detect_prob: float = 1.0
    jitter_s: float = 0.0
    false_match_prob: float = 0.0
    seed: int = 0

    def __post_init__(self):
        for name in ("detect_prob", "false_match_prob"):
            p = getattr(self, name)
            if not 0.0 <= p <= 1.0:
                raise InvalidParameterError(f"{name} must lie in [0, 1], got {p!r}")
        if not math.isfinite(self.jitter_s) or self.jitter_s < 0:
            raise InvalidParameterError(f"jitter_s must be >= 0, got {self.jitter_s!r}")


@dataclass(frozen=True)
class WalkerTruth:
    subject_id: str
    weight_kg: float
    crossings: tuple[float, ...]
    true_laps: int
    true_distance_m: float
    true_pace_kmh: float
    true_kcal: float


@dataclass
class GroundTruth:
    """Closed-form per-walker truth.

    ``true_laps`` counts completed laps between the first and last camera
    crossing. ``true_distance_m`` and ``true_pace_kmh`` are continuous
    (distance actually walked over the horizon). ``true_kcal`` applies the
    calorie chain to the lap-quantised window between first and last
    crossing, which is what a perfect camera would observe.
    """

    perimeter_m: float
    horizon_s: float
    walkers: dict[str, WalkerTruth] = field(default_factory=dict)

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["subject_id", "true_laps", "true_distance_m", "true_pace_kmh", "true_kcal"])
        for w in self.walkers.values():
            writer.writerow([w.subject_id, w.true_laps, repr(w.true_distance_m), repr(w.true_pace_kmh), repr(w.true_kcal)])
        return buf.getvalue()


@dataclass(frozen=True)
class Scenario:
    perimeter_m: float
    horizon_s: float
    walkers: tuple[WalkerProfile, ...]
    detection: DetectionModel = DetectionModel()


def crossing_times(profile: WalkerProfile, perimeter_m: float, horizon_s: float) -> list[float]:
    """Times in ``[0, horizon_s]`` at which the walker passes position 0.

    Positions are kept in meters and speeds in km/h so that common cases
    (110 m at 6 km/h) give exact lap times: ``d * 3600 / (v * 1000)``.
    """
    times: list[float] = []
    pos = profile.start_offset_m  # cumulative distance from the loop origin
    next_k = math.ceil(pos / perimeter_m)
    if next_k * perimeter_m == pos:
        times.append(0.0)
        next_k += 1
    for seg in profile.segments:
        if seg.start_s >= horizon_s:
            break
        end = min(seg.end_s, horizon_s)
        seg_dist = (end - seg.start_s) * seg.speed_kmh * 1000.0 / 3600.0
        if seg.speed_kmh > 0:
            while next_k * perimeter_m - pos <= seg_dist:
                d = max(next_k * perimeter_m - pos, 0.0)
                t = seg.start_s + d * 3600.0 / (seg.speed_kmh * 1000.0)
                if t > end:
                    break
                times.append(t)
                next_k += 1
        pos += seg_dist
    return times


def distance_walked(profile: WalkerProfile, horizon_s: float) -> float:
    total = 0.0
    for seg in profile.segments:
        if seg.start_s >= horizon_s:
            break
        total += (min(seg.end_s, horizon_s) - seg.start_s) * seg.speed_kmh * 1000.0 / 3600.0
    return total


def _truth_for(profile: WalkerProfile, perimeter_m: float, horizon_s: float, crossings) -> WalkerTruth:
    laps = max(len(crossings) - 1, 0)
    distance = distance_walked(profile, horizon_s)
    pace = (distance / 1000.0) / (horizon_s / 3600.0)
    window = crossings[-1] - crossings[0] if crossings else 0.0
    kcal = compute_stats(profile.weight_kg, perimeter_m, laps, window).total_kcal if window > 0 else 0.0
    return WalkerTruth(profile.subject_id, profile.weight_kg, tuple(crossings), laps, distance, pace, kcal)


def simulate(
    scenario: Scenario,
    embeddings: SyntheticEmbeddingSource | None = None,
) -> tuple[list[SightingEvent], GroundTruth]:
    """Run one scenario.

    Returns the merged, time-ordered sighting stream and the ground truth.
    When ``embeddings`` is given each event also carries a noisy face
    vector of the person actually seen.

    Every crossing consumes the same number of random draws whether or
    not it is detected, so changing ``detect_prob`` alone leaves the
    remaining draws aligned.
    """
    perimeter, horizon = scenario.perimeter_m, scenario.horizon_s
    if not math.isfinite(perimeter) or perimeter <= 0:
        raise InvalidParameterError(f"perimeter_m must be positive, got {perimeter!r}")
    if not math.isfinite(horizon) or horizon <= 0:
        raise InvalidParameterError(f"horizon_s must be positive, got {horizon!r}")
    ids = [w.subject_id for w in scenario.walkers]
    if len(set(ids)) != len(ids):
        raise InvalidParameterError("walker subject ids must be unique")
    for w in scenario.walkers:
        w.validate(horizon)

    det = scenario.detection
    rng = np.random.default_rng(det.seed)
    truth = GroundTruth(perimeter, horizon)
    tagged: list[tuple[float, int, int, SightingEvent]] = []
    for wi, walker in enumerate(scenario.walkers):
        crossings = crossing_times(walker, perimeter, horizon)
        truth.walkers[walker.subject_id] = _truth_for(walker, perimeter, horizon, crossings)
        others = [s for s in ids if s != walker.subject_id]
        last_t = 0.0
        for ci, t in enumerate(crossings):
            u_detect, u_jitter, u_false, u_pick = rng.random(4)
            label = walker.subject_id
            if others and u_false < det.false_match_prob:
                label = others[min(int(u_pick * len(others)), len(others) - 1)]
            # a misattributed sighting carries a face vector resembling the wrong subject
            emb = embeddings.sighting(label, rng) if embeddings is not None else None
            if u_detect >= det.detect_prob:
                continue
            t_obs = t + det.jitter_s * (2.0 * u_jitter - 1.0)
            t_obs = min(max(t_obs, last_t, 0.0), horizon)
            last_t = t_obs
            event = SightingEvent(t_obs, label, 1.0, tuple(float(x) for x in emb) if emb is not None else None)
            tagged.append((t_obs, wi, ci, event))
    tagged.sort(key=lambda item: item[:3])
    return [item[3] for item in tagged], truth


@dataclass
class ReplayResult:
    stats: dict[str, SessionStats]
    laps: dict[str, int]
    empty: list[str]
    parse_errors: int = 0
    unmatched: int = 0
    rejected: int = 0
    out_of_order: int = 0

    def final(self, subject_id: str) -> SessionStats:
        if subject_id not in self.stats:
            raise EmptySessionError(f"no session recorded for {subject_id!r}")
        return self.stats[subject_id]


def replay(
    stream: Iterable,
    gallery: Gallery | None,
    tracker: SessionTracker,
) -> ReplayResult:
    """Feed a stream through identification and the tracker, then close all sessions.

    ``stream`` items may be :class:`SightingEvent` objects or JSON lines.
    Events carrying an embedding are re-identified against ``gallery``;
    the rest are routed by their ``subject_id``. Malformed lines, unknown
    subjects and out-of-order events are skipped and counted.
    """
    result = ReplayResult({}, {}, [])
    for item in stream:
        if isinstance(item, SightingEvent):
            event = item
        else:
            line = item.strip()
            if not line:
                continue
            try:
                event = SightingEvent.from_json_line(line)
            except (ValueError, KeyError, TypeError):
                result.parse_errors += 1
                continue
        if event.embedding is not None:
            if gallery is None:
                result.unmatched += 1
                continue
            try:
                match = gallery.identify(event.embedding)
            except ValueError:
                result.parse_errors += 1
                continue
            if not match.matched:
                result.unmatched += 1
                continue
            event = SightingEvent(event.timestamp_s, match.subject_id, match.score)
        try:
            decision = tracker.ingest(event)
        except RoutingError:
            result.unmatched += 1
            continue
        except OrderingError:
            result.out_of_order += 1
            continue
        if decision is Decision.REJECTED:
            result.rejected += 1
    tracker.close_all()
    for record in tracker.closed:
        sid = record.session.subject_id
        result.stats[sid] = record.stats
        result.laps[sid] = result.laps.get(sid, 0) + record.session.laps
    result.empty = [sid for sid in tracker.weights if sid not in result.stats]
    return result


# -- scenario documents ------------------------------------------------------


def scenario_from_dict(data: dict) -> Scenario:
    """Build a :class:`Scenario`; errors name the offending field path."""

    def num(obj, key, path, default=None):
        if key not in obj:
            if default is None:
                raise InvalidParameterError(f"{path}.{key}: required")
            return default
        value = obj[key]
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise InvalidParameterError(f"{path}.{key}: expected a number, got {value!r}")
        return float(value)

    if not isinstance(data, dict):
        raise InvalidParameterError("scenario: expected a JSON object")
    perimeter = num(data, "perimeter_m", "scenario", DEFAULT_PERIMETER_M)
    horizon = num(data, "horizon_s", "scenario")
    det_raw = data.get("detection", {})
    if not isinstance(det_raw, dict):
        raise InvalidParameterError("scenario.detection: expected an object")
    seed = det_raw.get("seed", 0)
    if isinstance(seed, bool) or not isinstance(seed, int):
        raise InvalidParameterError(f"scenario.detection.seed: expected an integer, got {seed!r}")
    try:
        detection = DetectionModel(
            num(det_raw, "detect_prob", "scenario.detection", 1.0),
            num(det_raw, "jitter_s", "scenario.detection", 0.0),
            num(det_raw, "false_match_prob", "scenario.detection", 0.0),
            seed,
        )
    except InvalidParameterError as exc:
        raise InvalidParameterError(f"scenario.detection: {exc}") from None
    walkers_raw = data.get("walkers")
    if not isinstance(walkers_raw, list) or not walkers_raw:
        raise InvalidParameterError("scenario.walkers: expected a non-empty list")
    walkers = []
    for i, w in enumerate(walkers_raw):
        path = f"scenario.walkers[{i}]"
        if not isinstance(w, dict) or not isinstance(w.get("subject_id"), str):
            raise InvalidParameterError(f"{path}.subject_id: required string")
        weight = num(w, "weight_kg", path)
        offset = num(w, "start_offset_m", path, 0.0)
        if "segments" in w:
            segs = []
            for j, s in enumerate(w["segments"]):
                sp = f"{path}.segments[{j}]"
                segs.append(SpeedSegment(num(s, "start_s", sp), num(s, "end_s", sp), num(s, "speed_kmh", sp)))
            profile = WalkerProfile(w["subject_id"], weight, tuple(segs), offset)
        else:
            profile = WalkerProfile.constant(w["subject_id"], weight, num(w, "speed_kmh", path), horizon, offset)
        try:
            profile.validate(horizon)
        except InvalidParameterError as exc:
            raise InvalidParameterError(f"{path}: {exc}") from None
        walkers.append(profile)
    if perimeter <= 0:
        raise InvalidParameterError("scenario.perimeter_m: must be positive")
    if horizon <= 0:
        raise InvalidParameterError("scenario.horizon_s: must be positive")
    return Scenario(perimeter, horizon, tuple(walkers), detection)


def load_scenario(path) -> Scenario:
    with open(path) as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise InvalidParameterError(f"scenario: invalid JSON ({exc})") from None
    return scenario_from_dict(data)


def write_stream(events: Iterable[SightingEvent], fh) -> int:
    n = 0
    for event in events:
        fh.write(event.to_json_line() + "\n")
        n += 1
    return n
