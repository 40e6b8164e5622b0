"""Tractable conjugate inference for Dirichlet and beta likelihoods.

The conjugate prior of the Dirichlet (the Boojum distribution) has no
closed-form normalizer. This package replaces it by a point mass at its
mode, which turns the posterior predictive into a plain Dirichlet, and
ships a quadrature oracle that computes the exact quantities for D <= 3.
"""

from .core import (
    ConvergenceReport,
    Hyperparameters,
    ObservationSet,
    check_convergence,
    from_pseudo_observations,
    log_unnormalized_pdf,
    update,
    update_batch,
)
from .errors import (
    BoojumError,
    CapabilityError,
    ConvergenceError,
    DivergenceError,
    DomainError,
    ImproperHyperparametersError,
    ParseError,
    ResolutionError,
)
from .predictive import DirichletParams, dirichlet_log_pdf, map_predictive_log_pdf
from .solver import MapSolution, Method, SolverConfig, map_gradient, map_objective, solve_map

__all__ = [
    "BoojumError",
    "CapabilityError",
    "ConvergenceError",
    "ConvergenceReport",
    "DirichletParams",
    "DivergenceError",
    "DomainError",
    "Hyperparameters",
    "ImproperHyperparametersError",
    "MapSolution",
    "Method",
    "ObservationSet",
    "ParseError",
    "ResolutionError",
    "SolverConfig",
    "check_convergence",
    "dirichlet_log_pdf",
    "from_pseudo_observations",
    "log_unnormalized_pdf",
    "map_gradient",
    "map_objective",
    "map_predictive_log_pdf",
    "solve_map",
    "update",
    "update_batch",
]
