"""Variable screening for high-dimensional computer experiments."""

from .core import (
    DesignMatrix,
    ResponseVector,
    ScreeningOutcome,
    SubsetModel,
    VariableSet,
    expand_to_full,
    validate_design,
)

__version__ = "0.1.0"

__all__ = [
    "DesignMatrix",
    "ResponseVector",
    "ScreeningOutcome",
    "SubsetModel",
    "VariableSet",
    "expand_to_full",
    "validate_design",
]
