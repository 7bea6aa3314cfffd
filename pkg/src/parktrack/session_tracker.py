"""
Per-subject walking sessions driven by camera sightings.

The camera sits on the loop, so every accepted sighting after the first
marks one completed lap. Repeated detections of the same pass are
suppressed by a debounce window.

Sighting stream wire format (one JSON object per line)::

    {"t": 66.0, "subject_id": "S1", "score": 0.97}

An optional ``"embedding": [...]`` key carries the face vector when the
stream has not been identified yet.
"""

from __future__ import annotations

import enum
import json
import math
import re
import threading
from dataclasses import dataclass, field
from pathlib import Path

from .activity_model import MET_BANDS, SessionStats, classify_met, compute_stats
from .errors import (
    EmptySessionError,
    InvalidParameterError,
    OrderingError,
    RoutingError,
    SessionStateError,
)

DEFAULT_PERIMETER_M = 110.0
MAX_LAP_SPEED_KMH = 15.0
DEFAULT_TIMEOUT_S = 300.0
SESSION_VERSION = 1


def default_debounce(perimeter_m: float, max_speed_kmh: float = MAX_LAP_SPEED_KMH) -> float:
    """Shortest physically plausible lap time, in seconds."""
    return perimeter_m / (max_speed_kmh / 3.6)


@dataclass(frozen=True)
class SightingEvent:
    timestamp_s: float
    subject_id: str
    score: float = 1.0
    embedding: tuple[float, ...] | None = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        t = self.timestamp_s
        if isinstance(t, bool) or not isinstance(t, (int, float)) or not math.isfinite(t) or t < 0:
            raise InvalidParameterError(f"timestamp must be finite and >= 0, got {t!r}")
        s = self.score
        if isinstance(s, bool) or not isinstance(s, (int, float)) or not -1.0 <= s <= 1.0:
            raise InvalidParameterError(f"score must lie in [-1, 1], got {s!r}")
        object.__setattr__(self, "timestamp_s", float(t))
        object.__setattr__(self, "score", float(s))

    def to_json_line(self) -> str:
        obj = {"t": self.timestamp_s, "subject_id": self.subject_id, "score": self.score}
        if self.embedding is not None:
            obj["embedding"] = list(self.embedding)
        return json.dumps(obj)

    @classmethod
    def from_json_line(cls, line: str) -> "SightingEvent":
        """Parse one stream line; raises ``ValueError`` on any defect."""
        obj = json.loads(line)
        if not isinstance(obj, dict):
            raise ValueError("sighting line is not a JSON object")
        sid = obj.get("subject_id")
        if not isinstance(sid, str):
            raise ValueError("subject_id missing or not a string")
        emb = obj.get("embedding")
        if emb is not None:
            emb = tuple(float(x) for x in emb)
        return cls(obj["t"], sid, obj.get("score", 1.0), emb)


class Decision(enum.Enum):
    SESSION_STARTED = "session_started"
    ACCEPTED_NEW_LAP = "accepted_new_lap"
    DEBOUNCED = "debounced"
    REJECTED = "rejected"


class SessionState(enum.Enum):
    ACTIVE = "active"
    CLOSED = "closed"


def _zero_stats() -> SessionStats:
    return SessionStats(0.0, 0.0, 0.0, classify_met(0.0), 0.0, 0.0)


class WalkSession:
    """Lap-counting state machine for one subject.

    ``min_score`` (optional) rejects low-confidence sightings without
    touching the session state.
    """

    def __init__(
        self,
        subject_id: str,
        weight_kg: float,
        perimeter_m: float = DEFAULT_PERIMETER_M,
        debounce_s: float | None = None,
        min_score: float | None = None,
        bands=MET_BANDS,
    ):
        if not math.isfinite(weight_kg) or weight_kg <= 0:
            raise InvalidParameterError(f"weight must be positive, got {weight_kg!r}")
        if not math.isfinite(perimeter_m) or perimeter_m <= 0:
            raise InvalidParameterError(f"perimeter must be positive, got {perimeter_m!r}")
        if debounce_s is None:
            debounce_s = default_debounce(perimeter_m)
        if not math.isfinite(debounce_s) or debounce_s < 0:
            raise InvalidParameterError(f"debounce must be >= 0, got {debounce_s!r}")
        self.subject_id = subject_id
        self.weight_kg = float(weight_kg)
        self.perimeter_m = float(perimeter_m)
        self.debounce_s = float(debounce_s)
        self.min_score = min_score
        self.bands = bands
        self.t0_s: float | None = None
        self.last_accepted_s: float | None = None
        self.last_seen_s: float | None = None
        self.laps = 0
        self.accepted = 0
        self.state = SessionState.ACTIVE
        self._lock = threading.Lock()

    def __repr__(self):
        return (
            f"WalkSession({self.subject_id!r}, laps={self.laps}, t0={self.t0_s}, "
            f"last={self.last_accepted_s}, state={self.state.value})"
        )

    @property
    def active(self) -> bool:
        return self.state is SessionState.ACTIVE

    def ingest(self, event: SightingEvent) -> Decision:
        """Apply one sighting.

        Raises:
            SessionStateError: session already closed.
            RoutingError: event belongs to another subject.
            OrderingError: timestamp earlier than the last one seen; the
                event is dropped.
        """
        with self._lock:
            if self.state is SessionState.CLOSED:
                raise SessionStateError(f"session for {self.subject_id!r} is closed")
            if event.subject_id != self.subject_id:
                raise RoutingError(f"event for {event.subject_id!r} sent to session {self.subject_id!r}")
            t = event.timestamp_s
            if self.last_seen_s is not None and t < self.last_seen_s:
                raise OrderingError(f"timestamp {t} precedes last seen {self.last_seen_s}")
            if self.min_score is not None and event.score < self.min_score:
                return Decision.REJECTED
            self.last_seen_s = t
            if self.t0_s is None:
                self.t0_s = self.last_accepted_s = t
                self.accepted = 1
                return Decision.SESSION_STARTED
            if t - self.last_accepted_s >= self.debounce_s:
                self.last_accepted_s = t
                self.accepted += 1
                self.laps += 1
                return Decision.ACCEPTED_NEW_LAP
            return Decision.DEBOUNCED

    def stats(self, now_s: float | None = None) -> SessionStats:
        """Statistics at ``now_s`` (defaults to the last accepted sighting)."""
        with self._lock:
            return self._stats_unlocked(now_s)

    def _stats_unlocked(self, now_s):
        if self.t0_s is None:
            raise EmptySessionError(f"no sightings accepted for {self.subject_id!r}")
        if now_s is None:
            now_s = self.last_accepted_s
        if not math.isfinite(now_s) or now_s < self.t0_s:
            raise InvalidParameterError(f"query time {now_s!r} precedes session start {self.t0_s}")
        elapsed = now_s - self.t0_s
        if elapsed == 0:
            return _zero_stats()
        return compute_stats(self.weight_kg, self.perimeter_m, self.laps, elapsed, self.bands)

    def close(self, now_s: float | None = None) -> SessionStats:
        """Close the session and return its final statistics.

        A session with no accepted sighting cannot be closed
        (:class:`EmptySessionError`); closing twice raises
        :class:`SessionStateError`.
        """
        with self._lock:
            if self.state is SessionState.CLOSED:
                raise SessionStateError(f"session for {self.subject_id!r} already closed")
            result = self._stats_unlocked(now_s)
            self.state = SessionState.CLOSED
            return result

    def to_dict(self, final: SessionStats | None = None) -> dict:
        out = {
            "version": SESSION_VERSION,
            "subject_id": self.subject_id,
            "weight_kg": self.weight_kg,
            "perimeter_m": self.perimeter_m,
            "debounce_s": self.debounce_s,
            "t0_s": self.t0_s,
            "last_accepted_s": self.last_accepted_s,
            "laps": self.laps,
            "state": self.state.value,
        }
        if final is not None:
            out["stats"] = final.as_dict()
        return out


def ingest_sighting(session: WalkSession, event: SightingEvent) -> Decision:
    return session.ingest(event)


def session_stats(session: WalkSession, now_s: float | None = None) -> SessionStats:
    return session.stats(now_s)


def close_session(session: WalkSession, now_s: float | None = None, data_dir=None) -> SessionStats:
    """Close ``session``; when ``data_dir`` is given also write its JSON record."""
    final = session.close(now_s)
    if data_dir is not None:
        save_session(session, final, data_dir)
    return final


_UNSAFE = re.compile(r"[^A-Za-z0-9_.-]")


def save_session(session: WalkSession, final: SessionStats, data_dir) -> Path:
    """Write ``<data_dir>/sessions/<subject>-<t0>.json`` and return its path."""
    directory = Path(data_dir) / "sessions"
    directory.mkdir(parents=True, exist_ok=True)
    stem = _UNSAFE.sub("_", session.subject_id) or "_"
    path = directory / f"{stem}-{session.t0_s:012.3f}.json"
    path.write_text(json.dumps(session.to_dict(final), indent=1, sort_keys=True) + "\n")
    return path


def load_session_record(path) -> dict:
    """Read a persisted session; ``stats`` is returned as :class:`SessionStats`."""
    data = json.loads(Path(path).read_text())
    if data.get("version") != SESSION_VERSION:
        raise InvalidParameterError(f"unsupported session version {data.get('version')!r}")
    if "stats" in data:
        data["stats"] = SessionStats.from_dict(data["stats"])
    return data


@dataclass
class ClosedSession:
    session: WalkSession
    stats: SessionStats


class SessionTracker:
    """Routes sightings for many subjects into their sessions.

    A subject's session closes automatically once the stream advances more
    than ``timeout_s`` past its last sighting; the subject's next sighting
    then opens a new session. Every session ends at its last accepted
    sighting.
    """

    def __init__(
        self,
        weights: dict[str, float],
        perimeter_m: float = DEFAULT_PERIMETER_M,
        debounce_s: float | None = None,
        timeout_s: float = DEFAULT_TIMEOUT_S,
        min_score: float | None = None,
        data_dir=None,
    ):
        if not timeout_s > 0:
            raise InvalidParameterError(f"timeout must be positive, got {timeout_s!r}")
        self.weights = dict(weights)
        self.perimeter_m = perimeter_m
        self.debounce_s = default_debounce(perimeter_m) if debounce_s is None else debounce_s
        self.timeout_s = timeout_s
        self.min_score = min_score
        self.data_dir = data_dir
        self.active: dict[str, WalkSession] = {}
        self.closed: list[ClosedSession] = []

    def _new_session(self, subject_id: str) -> WalkSession:
        return WalkSession(
            subject_id, self.weights[subject_id], self.perimeter_m, self.debounce_s, self.min_score
        )

    def _finish(self, session: WalkSession) -> None:
        if session.t0_s is None:
            session.state = SessionState.CLOSED
            return
        final = close_session(session, None, self.data_dir)
        self.closed.append(ClosedSession(session, final))

    def expire(self, now_s: float) -> None:
        """Close every session idle for longer than the timeout."""
        for sid in sorted(self.active):
            session = self.active[sid]
            if session.last_seen_s is not None and now_s - session.last_seen_s > self.timeout_s:
                self._finish(self.active.pop(sid))

    def ingest(self, event: SightingEvent) -> Decision:
        if event.subject_id not in self.weights:
            raise RoutingError(f"unknown subject {event.subject_id!r}")
        self.expire(event.timestamp_s)
        session = self.active.get(event.subject_id)
        if session is None:
            session = self.active[event.subject_id] = self._new_session(event.subject_id)
        return session.ingest(event)

    def close_all(self) -> None:
        for sid in sorted(self.active):
            self._finish(self.active.pop(sid))

    def final_stats(self) -> dict[str, SessionStats]:
        """Stats of each subject's most recent closed session."""
        out: dict[str, SessionStats] = {}
        for record in self.closed:
            out[record.session.subject_id] = record.stats
        return out
