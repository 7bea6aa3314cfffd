"""
Enrollment gallery and cosine-similarity identity verification.

Face vectors are treated as opaque fixed-length embeddings. Producing
them (detection, cropping, CNN encoding) is delegated to an
:class:`EmbeddingSource`; this module ships only a deterministic
synthetic source for simulation and tests.
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
import threading
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Protocol

import numpy as np

from .errors import (
    ConflictError,
    DimensionError,
    InvalidEmbeddingError,
    InvalidParameterError,
    RowError,
)

GALLERY_VERSION = 1
DEFAULT_DIMENSION = 512
DEFAULT_THRESHOLD = 0.80


def as_embedding(values, dimension: int | None = None) -> np.ndarray:
    """Validate ``values`` and return a read-only float64 copy.

    Raises:
        InvalidEmbeddingError: not 1-D, non-finite entries, or all zeros.
        DimensionError: length differs from ``dimension``.
    """
    try:
        arr = np.array(values, dtype=np.float64)
    except (TypeError, ValueError) as exc:
        raise InvalidEmbeddingError(f"embedding is not numeric: {exc}") from exc
    if arr.ndim != 1 or arr.size == 0:
        raise InvalidEmbeddingError(f"embedding must be a non-empty vector, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InvalidEmbeddingError("embedding contains non-finite values")
    if not np.any(arr):
        raise InvalidEmbeddingError("zero embedding has no direction")
    if dimension is not None and arr.size != dimension:
        raise DimensionError(f"expected dimension {dimension}, got {arr.size}")
    arr.setflags(write=False)
    return arr


def _unit(v: np.ndarray) -> np.ndarray:
    # rescale first so tiny or huge magnitudes cannot underflow/overflow the norm
    v = v / np.max(np.abs(v))
    return v / np.linalg.norm(v)


def cosine_similarity(a, b) -> float:
    """Cosine of the angle between two embeddings, clamped to [-1, 1]."""
    a = as_embedding(a)
    b = as_embedding(b)
    if a.size != b.size:
        raise DimensionError(f"dimension mismatch: {a.size} vs {b.size}")
    a = a / np.max(np.abs(a))
    b = b / np.max(np.abs(b))
    score = float(np.dot(a, b)) / (float(np.linalg.norm(a)) * float(np.linalg.norm(b)))
    return min(1.0, max(-1.0, score))


@dataclass(frozen=True, eq=False)
class Subject:
    subject_id: str
    name: str
    weight_kg: float
    embedding: np.ndarray

    def __post_init__(self):
        if not self.subject_id:
            raise InvalidParameterError("subject_id must be non-empty")
        w = self.weight_kg
        if isinstance(w, bool) or not isinstance(w, (int, float)) or not math.isfinite(w) or w <= 0:
            raise InvalidParameterError(f"weight must be positive and finite, got {w!r}")
        object.__setattr__(self, "weight_kg", float(w))
        object.__setattr__(self, "embedding", as_embedding(self.embedding))


@dataclass(frozen=True)
class MatchResult:
    """Outcome of :meth:`Gallery.identify`.

    ``subject_id`` is None when ``matched`` is False. ``score`` is the best
    similarity found, or -1.0 for an empty gallery.
    """

    matched: bool
    subject_id: str | None
    score: float


class Gallery:
    """Enrolled subjects, one embedding each, searched by cosine similarity.

    Identification reads an immutable snapshot that enrollment swaps in
    under a lock, so concurrent readers never see a half-enrolled subject.
    """

    def __init__(self, dimension: int = DEFAULT_DIMENSION, threshold: float = DEFAULT_THRESHOLD):
        if isinstance(dimension, bool) or not isinstance(dimension, int) or dimension <= 0:
            raise InvalidParameterError(f"dimension must be a positive integer, got {dimension!r}")
        _check_threshold(threshold)
        self.dimension = dimension
        self.threshold = float(threshold)
        self._lock = threading.Lock()
        # (subjects, unit-row matrix) replaced atomically on enroll
        self._snapshot: tuple[tuple[Subject, ...], np.ndarray] = ((), np.empty((0, dimension)))

    def __len__(self) -> int:
        return len(self._snapshot[0])

    def __contains__(self, subject_id) -> bool:
        return any(s.subject_id == subject_id for s in self._snapshot[0])

    def __iter__(self):
        return iter(self._snapshot[0])

    @property
    def subjects(self) -> tuple[Subject, ...]:
        """Subjects in enrollment order."""
        return self._snapshot[0]

    def get(self, subject_id: str) -> Subject:
        for s in self._snapshot[0]:
            if s.subject_id == subject_id:
                return s
        raise KeyError(subject_id)

    def enroll(self, subject: Subject) -> "Gallery":
        """Add ``subject``; returns the gallery for chaining."""
        emb = as_embedding(subject.embedding, self.dimension)
        with self._lock:
            subjects, matrix = self._snapshot
            if any(s.subject_id == subject.subject_id for s in subjects):
                raise ConflictError(f"subject {subject.subject_id!r} already enrolled")
            row = _unit(emb)
            new_matrix = np.vstack([matrix, row[None, :]])
            new_matrix.setflags(write=False)
            self._snapshot = (subjects + (subject,), new_matrix)
        return self

    def identify(self, query, threshold: float | None = None) -> MatchResult:
        """Best-matching subject for ``query``.

        Ties at exactly equal scores go to the earliest-enrolled subject.
        """
        tau = self.threshold if threshold is None else threshold
        _check_threshold(tau)
        q = as_embedding(query, self.dimension)
        subjects, matrix = self._snapshot
        if not subjects:
            return MatchResult(False, None, -1.0)
        scores = np.clip(matrix @ _unit(q), -1.0, 1.0)
        best = int(np.argmax(scores))  # first maximum == earliest enrolled
        score = float(scores[best])
        if score >= tau:
            return MatchResult(True, subjects[best].subject_id, score)
        return MatchResult(False, None, score)

    # -- persistence -------------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "version": GALLERY_VERSION,
            "dimension": self.dimension,
            "subjects": [
                {
                    "subject_id": s.subject_id,
                    "name": s.name,
                    "weight_kg": s.weight_kg,
                    "embedding": [float(x) for x in s.embedding],
                }
                for s in self.subjects
            ],
        }

    @classmethod
    def from_dict(cls, data: dict, threshold: float = DEFAULT_THRESHOLD) -> "Gallery":
        version = data.get("version")
        if version != GALLERY_VERSION:
            raise InvalidParameterError(f"unsupported gallery version {version!r}")
        gallery = cls(int(data["dimension"]), threshold)
        for entry in data["subjects"]:
            gallery.enroll(
                Subject(
                    str(entry["subject_id"]),
                    str(entry.get("name", "")),
                    entry["weight_kg"],
                    entry["embedding"],
                )
            )
        return gallery

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=1) + "\n")

    @classmethod
    def load(cls, path, threshold: float = DEFAULT_THRESHOLD) -> "Gallery":
        return cls.from_dict(json.loads(Path(path).read_text()), threshold)


def _check_threshold(tau) -> None:
    if isinstance(tau, bool) or not isinstance(tau, (int, float)) or not 0 < tau <= 1:
        raise InvalidParameterError(f"threshold must lie in (0, 1], got {tau!r}")


def enroll(gallery: Gallery, subject: Subject) -> Gallery:
    return gallery.enroll(subject)


def identify(gallery: Gallery, query, threshold: float | None = None) -> MatchResult:
    return gallery.identify(query, threshold)


@dataclass(frozen=True)
class RosterEntry:
    subject_id: str
    name: str
    weight_kg: float


def read_roster(path) -> list[RosterEntry]:
    """Parse a ``subject_id,name,weight_kg`` CSV.

    Raises:
        RowError: malformed row (bad weight, missing id).
        ConflictError: repeated subject_id; the message names the row.
    """
    with open(path, newline="") as fh:
        return parse_roster(fh)


def parse_roster(lines: Iterable[str]) -> list[RosterEntry]:
    reader = csv.DictReader(lines)
    required = {"subject_id", "name", "weight_kg"}
    if reader.fieldnames is None or not required <= set(reader.fieldnames):
        raise InvalidParameterError(f"roster header must contain {sorted(required)}")
    entries: list[RosterEntry] = []
    seen: dict[str, int] = {}
    for i, row in enumerate(reader):
        sid = (row.get("subject_id") or "").strip()
        if not sid:
            raise RowError(i, "missing subject_id")
        try:
            weight = float(row["weight_kg"])
        except (TypeError, ValueError):
            raise RowError(i, f"weight_kg {row['weight_kg']!r} is not a number") from None
        if not math.isfinite(weight) or weight <= 0:
            raise RowError(i, f"weight_kg must be positive, got {weight!r}")
        if sid in seen:
            raise ConflictError(f"row {i}: duplicate subject_id {sid!r} (first at row {seen[sid]})")
        seen[sid] = i
        entries.append(RosterEntry(sid, (row.get("name") or "").strip(), weight))
    return entries


class EmbeddingSource(Protocol):
    """Anything that turns a sample into a face vector of fixed length."""

    dimension: int

    def encode(self, sample) -> np.ndarray: ...


class SyntheticEmbeddingSource:
    """Deterministic unit-vector embeddings keyed by subject id.

    Each identity vector is ``sqrt(c) * shared + sqrt(1 - c) * private``
    with ``c = cos(separation_deg)``, where ``private`` is orthogonal to
    the shared axis. Independent private directions are nearly orthogonal
    in high dimension, so identities sit about ``separation_deg`` apart.

    Sighting vectors rotate the identity vector by an angle drawn
    uniformly from ``[0, noise_deg]`` toward a random orthogonal
    direction, so ``cos(sighting, identity) >= cos(noise_deg)`` exactly.
    """

    def __init__(
        self,
        dimension: int = DEFAULT_DIMENSION,
        seed: int = 0,
        separation_deg: float = 90.0,
        noise_deg: float = 10.0,
    ):
        if dimension < 2:
            raise InvalidParameterError("synthetic embeddings need dimension >= 2")
        if not 0 < separation_deg <= 90:
            raise InvalidParameterError("separation_deg must lie in (0, 90]")
        if not 0 <= noise_deg < 90:
            raise InvalidParameterError("noise_deg must lie in [0, 90)")
        self.dimension = dimension
        self.seed = int(seed)
        self.separation_deg = float(separation_deg)
        self.noise_deg = float(noise_deg)
        shared = np.random.default_rng([self.seed, 0]).standard_normal(dimension)
        self._shared = shared / np.linalg.norm(shared)

    def _subject_rng(self, subject_id: str) -> np.random.Generator:
        digest = hashlib.sha256(subject_id.encode("utf-8")).digest()
        return np.random.default_rng([self.seed, 1, int.from_bytes(digest[:8], "little")])

    def encode(self, sample) -> np.ndarray:
        """Identity embedding for a subject id."""
        rng = self._subject_rng(str(sample))
        private = _orthogonal_unit(rng.standard_normal(self.dimension), self._shared)
        c = math.cos(math.radians(self.separation_deg))
        vec = math.sqrt(c) * self._shared + math.sqrt(1.0 - c) * private
        return as_embedding(vec / np.linalg.norm(vec))

    def perturb(self, embedding, rng: np.random.Generator) -> np.ndarray:
        """One noisy sighting of ``embedding``; consumes exactly two rng draws."""
        base = as_embedding(embedding, self.dimension)
        base = _unit(base)
        angle = math.radians(self.noise_deg) * rng.random()
        direction = _orthogonal_unit(rng.standard_normal(self.dimension), base)
        return as_embedding(math.cos(angle) * base + math.sin(angle) * direction)

    def sighting(self, subject_id: str, rng: np.random.Generator) -> np.ndarray:
        return self.perturb(self.encode(subject_id), rng)


def _orthogonal_unit(v: np.ndarray, axis: np.ndarray) -> np.ndarray:
    v = v - np.dot(v, axis) * axis
    return v / np.linalg.norm(v)
