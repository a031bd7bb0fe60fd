"""Semidiscrete convexification for the 3D Helmholtz coefficient inverse problem."""

from ._core import (
    ConfigError,
    Error,
    RunConfig,
    carleman_weight,
    coefficient_field,
    eps_comp,
    invert,
    laplacian_h,
    load_config,
    parse_config,
    report,
    run,
    synth,
    verify,
)

__all__ = [
    "ConfigError",
    "Error",
    "RunConfig",
    "carleman_weight",
    "coefficient_field",
    "eps_comp",
    "invert",
    "laplacian_h",
    "load_config",
    "parse_config",
    "report",
    "run",
    "synth",
    "verify",
]
