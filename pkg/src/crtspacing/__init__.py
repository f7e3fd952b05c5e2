"""Spacing statistics of CRT-composed residue sets."""

from .sets import FamilySpec, ResidueSet, components, crt_compose, generate
from .spacings import CorrelationBox, OffsetTuple, correlation, count_tuples, gaps

__version__ = "0.1.0"

__all__ = [
    "CorrelationBox", "FamilySpec", "OffsetTuple", "ResidueSet", "components", "correlation",
    "count_tuples", "crt_compose", "gaps", "generate",
]
