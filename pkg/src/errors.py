"""
Error types raised by the classical-limit library.
"""
from __future__ import annotations

from typing import List, Optional


class ClassicalLimitError(RuntimeError):
    """Base class for all library errors."""


class InvalidTrajectoryError(ClassicalLimitError):
    pass


class SuperluminalError(ClassicalLimitError):
    pass


class SingularityError(ClassicalLimitError):
    """Pair separation fell below the close-approach guard."""


class OutOfRangeError(ClassicalLimitError):
    pass


class ToleranceError(ClassicalLimitError):
    """Quadrature or integration did not reach the requested tolerance."""


class ResolutionError(ClassicalLimitError):
    pass


class DegenerateMomentsError(ClassicalLimitError):
    pass


class ConsistencyError(ClassicalLimitError):
    """A result that must hold by construction did not."""


class NoSolutionError(ClassicalLimitError):
    pass


class DomainError(ClassicalLimitError):
    pass


class SingularPointError(ClassicalLimitError):
    pass


class GeometryError(ClassicalLimitError):
    pass


class RelativisticInputError(ClassicalLimitError):
    pass


class ScenarioError(ClassicalLimitError):
    """Scenario validation failure, carrying every problem found."""

    def __init__(self, messages: List[str], path: Optional[str] = None):
        self.messages = list(messages)
        self.path = path
        where = f" in {path}" if path else ""
        super().__init__(f"Invalid scenario{where}: " + "; ".join(self.messages))
