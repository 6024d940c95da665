"""Newtonian, Riesz and branching capacities on the integer lattice."""

from ._latcap import (
    BudgetError,
    ConfigError,
    DomainError,
    Error,
    NumericalError,
    PreconditionError,
    brw_past_green,
    capacity_alpha,
    derivative_sweep_newton,
    derivative_sweep_riesz,
    equilibrium_measure,
    estimate_bcap,
    estimate_hitting_ratio,
    fit_convergence,
    make_shape,
    min_distance,
    newton_capacity,
    offspring,
    riesz_kernel,
    run_sweep,
    srw_green,
    srw_green_convolution,
    translate,
)

__all__ = [name for name in dir() if not name.startswith("_")]
