"""Boojum hyperparameters, posterior updates and the convergence checker.

A Boojum distribution over Dirichlet parameters ``alpha`` has density

    p(alpha | chi, nu) proportional to B(alpha)^(-nu) exp(alpha . chi)

where ``nu`` counts the (pseudo-)observations and ``chi`` is the sum of
their component-wise logs. Everything in this module is an immutable value
or a pure function.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import DomainError
from .specialfn import log_multivariate_beta

SIMPLEX_TOL = 1e-9
# condition (c) compares a sum against 1; identical observations give exactly 1
# in exact arithmetic but can round to 1 - O(n eps) in floating point
CONDITION_C_MARGIN = 1e-12


def _readonly(arr):
    arr = np.array(arr, dtype=float)
    arr.setflags(write=False)
    return arr


def validate_simplex(theta, dimension=None, label="observation"):
    """Check that ``theta`` is strictly inside the simplex and renormalize it.

    Vectors whose components sum to within ``SIMPLEX_TOL`` of one are divided
    by their sum; anything else, and any component outside ``(0, 1)``, raises
    :class:`DomainError`. Boundary values are rejected rather than clamped.
    """
    v = np.asarray(theta, dtype=float)
    if v.ndim != 1:
        raise DomainError(f"{label}: expected a vector, got shape {v.shape}")
    if dimension is not None and v.shape[0] != dimension:
        raise DomainError(f"{label}: dimension mismatch (expected {dimension}, got {v.shape[0]})")
    if v.shape[0] < 2:
        raise DomainError(f"{label}: dimension must be >= 2")
    if not np.all(np.isfinite(v)):
        raise DomainError(f"{label}: non-finite component in {v.tolist()}")
    if np.any(v <= 0.0) or np.any(v >= 1.0):
        raise DomainError(f"{label}: components must lie in the open interval (0, 1), got {v.tolist()}")
    total = v.sum()
    if abs(total - 1.0) > SIMPLEX_TOL:
        raise DomainError(f"{label}: components sum to {float(total)!r}, not 1")
    return v / total


@dataclass(frozen=True)
class ObservationSet:
    """Simplex-valued observations stored row-wise as an ``(n, D)`` array."""

    observations: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.observations, dtype=float)
        if arr.ndim != 2:
            raise DomainError(f"observations must be a 2-D array, got shape {arr.shape}")
        if arr.shape[1] < 2:
            raise DomainError("observations must have dimension D >= 2")
        rows = [validate_simplex(row, arr.shape[1], label=f"row {i}") for i, row in enumerate(arr)]
        clean = np.array(rows, dtype=float).reshape(arr.shape)
        object.__setattr__(self, "observations", _readonly(clean))

    @classmethod
    def from_rows(cls, rows, dimension=None):
        rows = list(rows)
        if not rows:
            if dimension is None:
                raise DomainError("an empty observation set needs an explicit dimension")
            return cls(np.empty((0, dimension)))
        return cls(np.asarray(rows, dtype=float))

    @property
    def dimension(self) -> int:
        return self.observations.shape[1]

    def __len__(self):
        return self.observations.shape[0]

    def __iter__(self):
        return iter(self.observations)

    def replicate(self, m: int) -> "ObservationSet":
        """Each observation repeated ``m`` times, in blocks of the whole set."""
        return ObservationSet(np.tile(self.observations, (m, 1)))

    def concat(self, other: "ObservationSet") -> "ObservationSet":
        if other.dimension != self.dimension:
            raise DomainError("dimension mismatch")
        return ObservationSet(np.vstack([self.observations, other.observations]))


@dataclass(frozen=True)
class Hyperparameters:
    """Boojum hyperparameters ``(nu, chi)``.

    ``nu`` is any real so that the convergence checker can be evaluated on
    its full domain; constructors from data always give ``nu = n``.
    """

    nu: float
    chi: np.ndarray

    def __post_init__(self):
        chi = np.asarray(self.chi, dtype=float)
        if chi.ndim != 1 or chi.shape[0] < 2:
            raise DomainError(f"chi must be a vector of length >= 2, got shape {chi.shape}")
        if not np.all(np.isfinite(chi)):
            raise DomainError("chi must have finite components")
        if not np.isfinite(self.nu):
            raise DomainError("nu must be finite")
        object.__setattr__(self, "nu", float(self.nu))
        object.__setattr__(self, "chi", _readonly(chi))

    @property
    def dimension(self) -> int:
        return self.chi.shape[0]

    @property
    def ratio(self) -> np.ndarray:
        """``chi / nu``, the only quantity the MAP objective depends on."""
        if self.nu == 0.0:
            raise DomainError("chi/nu is undefined for nu = 0")
        return self.chi / self.nu

    def __eq__(self, other):
        if not isinstance(other, Hyperparameters):
            return NotImplemented
        return self.nu == other.nu and np.array_equal(self.chi, other.chi)

    def __hash__(self):
        return hash((self.nu, self.chi.tobytes()))


@dataclass(frozen=True)
class ConvergenceReport:
    condition_a: bool
    condition_b: bool
    condition_c: bool
    # sum_k exp(chi_k / nu); None when nu <= 0 (ratio never formed)
    geometric_mean_sum: Optional[float]

    @property
    def proper(self) -> bool:
        return self.condition_a and self.condition_b and self.condition_c

    def failed_conditions(self):
        return [name for name, ok in (("a", self.condition_a), ("b", self.condition_b), ("c", self.condition_c)) if not ok]

    def as_dict(self):
        return {
            "condition_a": self.condition_a,
            "condition_b": self.condition_b,
            "condition_c": self.condition_c,
            "geometric_mean_sum": self.geometric_mean_sum,
            "proper": self.proper,
        }


def _log_rows(theta_set: ObservationSet) -> np.ndarray:
    return np.log(theta_set.observations)


def _fold(chi, log_rows):
    # strict left-to-right accumulation so batch and streaming updates agree bit-for-bit
    if log_rows.shape[0] == 0:
        return np.array(chi, dtype=float)
    return np.cumsum(np.vstack([chi, log_rows]), axis=0)[-1]


def from_pseudo_observations(theta_set) -> Hyperparameters:
    """Hyperparameters defined by a set of (pseudo-)observations.

    ``nu`` is the number of observations and ``chi`` the sum of their logs.
    """
    if not isinstance(theta_set, ObservationSet):
        theta_set = ObservationSet.from_rows(theta_set)
    if len(theta_set) == 0:
        raise DomainError("cannot build hyperparameters from an empty observation set")
    chi = _fold(np.zeros(theta_set.dimension), _log_rows(theta_set))
    return Hyperparameters(nu=float(len(theta_set)), chi=chi)


def update(hyper: Hyperparameters, theta) -> Hyperparameters:
    """Posterior hyperparameters after one observation."""
    v = validate_simplex(theta, hyper.dimension)
    return Hyperparameters(nu=hyper.nu + 1.0, chi=hyper.chi + np.log(v))


def update_batch(hyper: Hyperparameters, theta_set) -> Hyperparameters:
    if not isinstance(theta_set, ObservationSet):
        theta_set = ObservationSet.from_rows(theta_set, dimension=hyper.dimension)
    if len(theta_set) == 0:
        return hyper
    if theta_set.dimension != hyper.dimension:
        raise DomainError(
            f"dimension mismatch (hyperparameters {hyper.dimension}, observations {theta_set.dimension})"
        )
    return Hyperparameters(nu=hyper.nu + len(theta_set), chi=_fold(hyper.chi, _log_rows(theta_set)))


def log_unnormalized_pdf(alpha, hyper: Hyperparameters):
    """``alpha . chi - nu * ln B(alpha)``, the Boojum log-density without its normalizer.

    ``alpha`` may be a single vector or a stack of vectors along the last axis.
    """
    a = np.asarray(alpha, dtype=float)
    if a.shape[-1] != hyper.dimension:
        raise DomainError(f"alpha has dimension {a.shape[-1]}, hyperparameters {hyper.dimension}")
    return a @ hyper.chi - hyper.nu * log_multivariate_beta(a)


def check_convergence(hyper: Hyperparameters) -> ConvergenceReport:
    """Evaluate the three conditions under which the Boojum normalizer is finite.

    (a) every ``chi_k < 0``; (b) ``nu > -1``; (c) ``nu <= 0`` or
    ``sum_k exp(chi_k / nu) < 1``. For data-defined hyperparameters the sum
    is the total of the component-wise geometric means, which equals one
    exactly when all observations coincide; sums within
    ``CONDITION_C_MARGIN`` of one are treated as equality.
    """
    cond_a = bool(np.all(hyper.chi < 0.0))
    cond_b = hyper.nu > -1.0
    if hyper.nu <= 0.0:
        return ConvergenceReport(cond_a, cond_b, True, None)
    gsum = float(np.sum(np.exp(hyper.chi / hyper.nu)))
    return ConvergenceReport(cond_a, cond_b, gsum < 1.0 - CONDITION_C_MARGIN, gsum)
