"""Projection bounds for grid partitions and micro-scale extracting mergers."""

__version__ = "0.1.0"

from .errors import BudgetExceeded, DimensionError, PreconditionError  # noqa: E402
from .grid import (  # noqa: E402
    AxisSubset,
    CellMask,
    GridDims,
    PartLabeling,
    max_projection,
    project,
    projection_fraction_table,
)

__all__ = [
    "AxisSubset",
    "BudgetExceeded",
    "CellMask",
    "DimensionError",
    "GridDims",
    "PartLabeling",
    "PreconditionError",
    "__version__",
    "max_projection",
    "project",
    "projection_fraction_table",
]
