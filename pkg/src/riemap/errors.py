"""Exception hierarchy shared by every riemap module."""

from __future__ import annotations


class RiemapError(Exception):
    """Base class for all library errors."""


class ConfigurationError(RiemapError):
    """Unsupported jet order, variable count, or analysis setting."""


class UsageError(RiemapError):
    """An API called outside its contract (e.g. partial above jet order)."""


class SingularityError(RiemapError):
    """Division by zero or an elementary function outside its domain."""

    def __init__(self, message: str, point=None, position=None):
        self.point = None if point is None else tuple(float(v) for v in point)
        self.position = position
        detail = message
        if position is not None:
            detail += f" (at line {position[0]}, column {position[1]})"
        if self.point is not None:
            detail += f" [base point {self.point}]"
        super().__init__(detail)
        self.message = message


class SceneError(RiemapError):
    """Base for problems in scene text or scene structure."""


class LexError(SceneError):
    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"{message} at line {line}, column {column}")
        self.line = line
        self.column = column


class ParseError(SceneError):
    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        where = "" if line is None else f" at line {line}, column {column}"
        super().__init__(message + where)
        self.line = line
        self.column = column


class DimensionMismatchError(SceneError):
    pass


class AsymmetricMetricError(SceneError):
    pass


class UnknownIdentifierError(SceneError):
    pass


class UnknownManifoldError(SceneError):
    pass


class GeometryError(RiemapError):
    """Metric not positive definite, or a frame cannot be built."""

    def __init__(self, message: str, point=None):
        self.point = None if point is None else tuple(float(v) for v in point)
        if self.point is not None:
            message = f"{message} at point {self.point}"
        super().__init__(message)


class RankAmbiguityError(GeometryError):
    """A singular value sits too close to the rank threshold to decide."""


class ConstantRankError(GeometryError):
    """A distribution changes rank across the sample set."""


class DomainError(RiemapError):
    """A vector argument is not in the required subspace (range / normal)."""


class HypothesisError(RiemapError):
    """An operation was refused because its geometric hypotheses fail."""
