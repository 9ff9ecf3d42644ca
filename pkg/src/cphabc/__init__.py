"""Padé-type high-order absorbing boundary conditions for a coupled
surface/basin hydrodynamic wave model, discretized with high-order finite
elements and integrated with an implicit Newmark scheme."""

from .pade import (
    PadeSet,
    PhysicalParams,
    compatibility_coefficients,
    pade_coefficients,
    pade_error_table,
    pade_sqrt,
    reduction_active_set,
    threshold_counts,
)

__version__ = "0.1.0"
