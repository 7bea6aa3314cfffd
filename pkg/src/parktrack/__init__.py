"""Camera-sighting lap tracking and MET-based calorie estimation for park loops."""

from .activity_model import (
    MET_BANDS,
    CalorieModel,
    METBand,
    SessionStats,
    average_pace,
    calories_per_minute,
    classify_met,
    compute_stats,
    distance_covered,
    total_calories,
    truncate,
)
from .errors import (
    ConflictError,
    DimensionError,
    EmptySessionError,
    InvalidEmbeddingError,
    InvalidParameterError,
    OrderingError,
    ParkTrackError,
    RoutingError,
    SessionStateError,
)
from .evaluation import ComparisonRecord, EvalReport, evaluate, mae, mpe, reproduce_table3
from .face_gallery import Gallery, MatchResult, Subject, SyntheticEmbeddingSource, cosine_similarity
from .park_simulator import DetectionModel, GroundTruth, Scenario, WalkerProfile, replay, simulate
from .session_tracker import Decision, SessionTracker, SightingEvent, WalkSession

__version__ = "0.1.0"
