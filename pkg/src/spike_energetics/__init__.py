"""Action-potential dynamics and per-spike energy budgets of ten conductance-based cells."""

from .kinetics import Family, temperature_factor
from .cells import CellParams, CellState, CurrentBreakdown, registry, all_cells, resting_state

__all__ = [
    "Family",
    "temperature_factor",
    "CellParams",
    "CellState",
    "CurrentBreakdown",
    "registry",
    "all_cells",
    "resting_state",
]
