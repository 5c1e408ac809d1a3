"""Finite element building blocks and tutorial solvers."""

from ._core import (
    FlexfemError,
    app_names,
    bdf_alpha,
    bdf_beta,
    bdf_integrate,
    cli,
    default_parameters,
    project_l2,
    run_app,
    solve,
)

__all__ = [
    "FlexfemError",
    "app_names",
    "bdf_alpha",
    "bdf_beta",
    "bdf_integrate",
    "cli",
    "default_parameters",
    "project_l2",
    "run_app",
    "solve",
]
