"""Exception hierarchy shared by all parktrack modules."""


class ParkTrackError(Exception):
    """Base class for every error raised by parktrack."""


class InvalidParameterError(ParkTrackError, ValueError):
    """A numeric argument is outside its allowed domain."""


class InvalidEmbeddingError(InvalidParameterError):
    """An embedding is zero, non-finite or not one-dimensional."""


class DimensionError(ParkTrackError, ValueError):
    """Two embeddings (or an embedding and a gallery) disagree on length."""


class ConflictError(ParkTrackError):
    """A subject id is already enrolled."""


class OrderingError(ParkTrackError):
    """A sighting arrived with a timestamp earlier than one already seen."""


class RoutingError(ParkTrackError):
    """A sighting was delivered to the session of a different subject."""


class SessionStateError(ParkTrackError):
    """The operation is not allowed in the session's current state."""


class EmptySessionError(ParkTrackError):
    """Statistics were requested before any sighting was accepted."""


class RowError(InvalidParameterError):
    """A tabular input row failed validation.

    Attributes:
        index: zero-based data row index (header excluded).
    """

    def __init__(self, index, message):
        super().__init__(f"row {index}: {message}")
        self.index = index
