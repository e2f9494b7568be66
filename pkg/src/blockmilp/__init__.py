"""Decomposition solver for two-block mixed-integer linear programs."""

from .model import (BlockStructure, DualState, Iterate, MilSet, TwoBlockMilp,
                    derived_constants, from_json, to_json, validate)

__all__ = [
    "BlockStructure", "DualState", "Iterate", "MilSet", "TwoBlockMilp",
    "derived_constants", "from_json", "to_json", "validate",
]

__version__ = "0.1.0"
