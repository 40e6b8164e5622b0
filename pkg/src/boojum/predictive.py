"""Dirichlet likelihood and the MAP posterior predictive."""

from dataclasses import dataclass

import numpy as np

from .core import SIMPLEX_TOL
from .errors import DomainError
from .solver import MapSolution
from .specialfn import log_multivariate_beta


@dataclass(frozen=True)
class DirichletParams:
    alpha: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.alpha, dtype=float)
        if a.ndim != 1 or a.shape[0] < 2:
            raise DomainError(f"alpha must be a vector of length >= 2, got shape {a.shape}")
        if not np.all(np.isfinite(a)) or np.any(a <= 0):
            raise DomainError(f"alpha must be strictly positive, got {a.tolist()}")
        a.setflags(write=False)
        object.__setattr__(self, "alpha", a)


def _interior_points(theta, dimension):
    t = np.asarray(theta, dtype=float)
    pts = np.atleast_2d(t)
    if pts.shape[-1] != dimension:
        raise DomainError(f"theta has dimension {pts.shape[-1]}, alpha has {dimension}")
    if np.any(pts <= 0.0) or np.any(pts >= 1.0) or not np.all(np.isfinite(pts)):
        raise DomainError("theta must lie strictly inside the simplex")
    if np.any(np.abs(pts.sum(axis=-1) - 1.0) > SIMPLEX_TOL):
        raise DomainError("theta components must sum to 1")
    return t, pts


def dirichlet_log_pdf(theta, params):
    """Log-density of Dir(alpha) at ``theta``.

    ``theta`` is one simplex vector or an ``(N, D)`` array of them; the
    result is a float or an ``(N,)`` array accordingly.
    """
    if not isinstance(params, DirichletParams):
        params = DirichletParams(params)
    t, pts = _interior_points(theta, params.alpha.shape[0])
    out = np.log(pts) @ (params.alpha - 1.0) - log_multivariate_beta(params.alpha)
    return float(out[0]) if t.ndim == 1 else out


def map_predictive_log_pdf(theta, solution: MapSolution):
    """Posterior predictive under the point-mass approximation: Dir(theta | alpha_MAP)."""
    return dirichlet_log_pdf(theta, DirichletParams(solution.alpha_map))


def dirichlet_mode(params):
    """``(alpha_k - 1) / (sum alpha - D)``; defined only when every alpha_k > 1."""
    if not isinstance(params, DirichletParams):
        params = DirichletParams(params)
    a = params.alpha
    if np.any(a <= 1.0):
        raise DomainError("the Dirichlet mode is interior only when all alpha_k > 1")
    return (a - 1.0) / (a.sum() - a.shape[0])
