"""Python bindings for the ks Keller-Segel solver.

Fields are returned as ``(ny, nx)`` float64 arrays indexed ``[j, i]``.
"""

from ._core import (
    ConfigError,
    Error,
    NumericalError,
    Grid,
    RunConfig,
    Simulation,
    bdf_coefficients,
    build_grid,
    compute_energy,
    gradient,
    integrate,
    laplacian,
    load_config,
    parse_config,
    run_convergence,
    simulate,
)

__all__ = [
    "ConfigError",
    "Error",
    "NumericalError",
    "Grid",
    "RunConfig",
    "Simulation",
    "bdf_coefficients",
    "build_grid",
    "compute_energy",
    "gradient",
    "integrate",
    "laplacian",
    "load_config",
    "parse_config",
    "run_convergence",
    "simulate",
]
