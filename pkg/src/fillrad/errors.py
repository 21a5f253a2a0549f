"""Exception hierarchy.

Every error carries a ``context`` dict so the CLI can emit a machine-readable
``{"error": ..., "context": ...}`` record.
"""

from __future__ import annotations


class FillradError(Exception):
    """Base class for all package errors."""

    #: CLI exit code used when this error escapes a subcommand.
    exit_code = 1

    def __init__(self, message: str = "", **context):
        super().__init__(message or self.__class__.__name__)
        self.context = context

    def to_record(self) -> dict:
        return {"error": self.__class__.__name__, "message": str(self), "context": self.context}


class InvalidInput(FillradError):
    exit_code = 2


# metric_core
class NotSquare(InvalidInput):
    pass


class NonFiniteEntry(InvalidInput):
    pass


class AsymmetricInput(InvalidInput):
    pass


class NonzeroDiagonal(InvalidInput):
    pass


class NonpositiveDistance(InvalidInput):
    pass


class TriangleViolation(InvalidInput):
    def __init__(self, i: int, j: int, k: int, excess: float):
        super().__init__(
            f"d[{i}][{j}] exceeds d[{i}][{k}] + d[{k}][{j}] by {excess!r}",
            i=i, j=j, k=k, excess=excess,
        )
        self.triple = (i, j, k)


class LengthMismatch(InvalidInput):
    pass


class NonpositiveScale(InvalidInput):
    pass


# samplers
class TooFewPoints(InvalidInput):
    pass


class BadGrid(InvalidInput):
    pass


class QuotientNotMetric(FillradError):
    pass


class EmptyOrbit(InvalidInput):
    pass


class DisconnectedGraph(FillradError):
    def __init__(self, components: int):
        super().__init__(f"neighbor graph has {components} components", components=components)
        self.components = components


# persistence
class SimplexBudgetExceeded(FillradError):
    exit_code = 3


class NoDominantBar(FillradError):
    pass


class DeathAtThreshold(FillradError):
    pass


# constructions
class EmptyVicinity(FillradError):
    pass


class StrictlyCloserPoint(FillradError):
    pass


# bounds
class NonpositiveInjectivityRadius(InvalidInput):
    pass


class DimensionNotExceeded(FillradError):
    pass


class HypothesisNotMet(FillradError):
    pass
