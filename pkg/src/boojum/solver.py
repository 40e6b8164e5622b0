"""Mode of the Boojum distribution.

The mode maximizes

    f(alpha) = alpha . s - ln B(alpha),    s = chi / nu,

whose stationarity conditions ``s_k + psi(sum alpha) - psi(alpha_k) = 0``
are the Dirichlet maximum-likelihood equations with sufficient statistic
``s``. ``f`` is concave (``ln B`` is convex), so any stationary point is the
maximizer.
"""

import enum
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .core import Hyperparameters, check_convergence
from .errors import ConvergenceError, DivergenceError, DomainError, ImproperHyperparametersError
from .specialfn import digamma, digamma_inverse, log_multivariate_beta, trigamma

DIVERGENCE_LIMIT = 1e12
INIT_FALLBACK_LIMIT = 1e6
FIXED_POINT_WARMUP = 20


class Method(enum.Enum):
    FIXED_POINT = "fixed_point"
    NEWTON = "newton"
    GRADIENT_ASCENT = "gradient_ascent"


@dataclass(frozen=True)
class SolverConfig:
    method: Method = Method.FIXED_POINT
    gradient_tolerance: float = 1e-9
    max_iterations: int = 1000
    initial_alpha: Optional[np.ndarray] = None
    # finish fixed-point runs with Newton steps once the gradient is small
    newton_refine: bool = True

    def __post_init__(self):
        object.__setattr__(self, "method", Method(self.method))
        if not self.gradient_tolerance > 0:
            raise ValueError("gradient_tolerance must be > 0")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if self.initial_alpha is not None:
            a = np.asarray(self.initial_alpha, dtype=float)
            if np.any(a <= 0) or not np.all(np.isfinite(a)):
                raise ValueError("initial_alpha must be strictly positive")
            object.__setattr__(self, "initial_alpha", a)


@dataclass(frozen=True)
class MapSolution:
    alpha_map: np.ndarray
    gradient_sup_norm: float
    iterations: int
    objective_value: float
    method_used: Method
    # per-phase iteration counts, e.g. {"fixed_point": 12, "newton": 3}
    phases: dict = field(default_factory=dict)


def map_objective(alpha, hyper: Hyperparameters) -> float:
    """``alpha . chi/nu - ln B(alpha)``."""
    if hyper.nu <= 0:
        raise DomainError("the MAP objective needs nu > 0")
    a = np.asarray(alpha, dtype=float)
    return a @ hyper.ratio - log_multivariate_beta(a)


def _gradient(alpha, s):
    return s + digamma(alpha.sum()) - digamma(alpha)


def map_gradient(alpha, hyper: Hyperparameters) -> np.ndarray:
    """Gradient of :func:`map_objective`: ``chi_k/nu + psi(sum alpha) - psi(alpha_k)``."""
    if hyper.nu <= 0:
        raise DomainError("the MAP gradient needs nu > 0")
    a = np.asarray(alpha, dtype=float)
    if a.shape != (hyper.dimension,):
        raise DomainError(f"alpha must have shape ({hyper.dimension},), got {a.shape}")
    if np.any(a <= 0):
        raise DomainError("alpha must be strictly positive")
    return _gradient(a, hyper.ratio)


def initial_guess(s: np.ndarray) -> np.ndarray:
    """``D exp(s_k) / (1 - sum exp(s))``; all ones if that is not usable."""
    g = np.exp(s)
    deficit = 1.0 - g.sum()
    if deficit <= 0:
        return np.ones_like(s)
    alpha = s.shape[0] * g / deficit
    if np.any(alpha > INIT_FALLBACK_LIMIT):
        return np.ones_like(s)
    return alpha


def _guard(alpha, it):
    if np.any(alpha > DIVERGENCE_LIMIT) or not np.all(np.isfinite(alpha)):
        raise DivergenceError(
            f"iterate diverged at iteration {it} (max component {np.max(alpha):.3e})",
            last_iterate=alpha,
        )


def _newton_direction(alpha, grad):
    # Hessian = trigamma(sum) 11^T - diag(trigamma(alpha)); solve H d = g via Sherman-Morrison
    q = -trigamma(alpha)
    z = trigamma(alpha.sum())
    b = np.sum(grad / q) / (1.0 / z + np.sum(1.0 / q))
    return (grad - b) / q


def _objective(alpha, s):
    return alpha @ s - log_multivariate_beta(alpha)


def _newton_steps(alpha, s, tol, budget, start_it):
    grad = _gradient(alpha, s)
    it = start_it
    stall = 0
    while np.max(np.abs(grad)) > tol:
        if it >= budget:
            break
        it += 1
        step = _newton_direction(alpha, grad)
        f0 = _objective(alpha, s)
        t = 1.0
        # damp until positive and not worse; near the optimum the full step is taken
        while True:
            cand = alpha - t * step
            if np.all(cand > 0) and _objective(cand, s) >= f0 - 1e-12 * abs(f0):
                break
            t *= 0.5
            if t < 1e-12:
                cand = alpha
                break
        new_grad = _gradient(cand, s) if cand is not alpha else grad
        if np.max(np.abs(new_grad)) >= np.max(np.abs(grad)):
            stall += 1
        else:
            stall = 0
        alpha, grad = cand, new_grad
        _guard(alpha, it)
        if stall >= 5:
            break
    return alpha, grad, it


def _polish(alpha, grad, s):
    # one extra Newton step so nearby inputs land on the same digits, whichever side of tol they stopped
    if not np.all(np.isfinite(grad)):
        return alpha, grad
    cand = alpha - _newton_direction(alpha, grad)
    if np.all(cand > 0):
        cand_grad = _gradient(cand, s)
        if np.max(np.abs(cand_grad)) <= np.max(np.abs(grad)):
            return cand, cand_grad
    return alpha, grad


def _fixed_point(alpha, s, tol, budget, refine):
    grad = _gradient(alpha, s)
    it = 0
    # Newton converges quadratically once the fixed point has located the basin
    switch = 1e-2 if refine else 0.0
    while np.max(np.abs(grad)) > max(tol, switch):
        if it >= budget or (refine and it >= FIXED_POINT_WARMUP):
            break
        it += 1
        alpha = digamma_inverse(s + digamma(alpha.sum()))
        _guard(alpha, it)
        grad = _gradient(alpha, s)
    fp_its = it
    if refine and np.max(np.abs(grad)) > tol and it < budget:
        alpha, grad, it = _newton_steps(alpha, s, tol, budget, it)
    # Newton can stall at rounding level; fall back to plain fixed-point steps
    while np.max(np.abs(grad)) > tol and it < budget:
        it += 1
        alpha = digamma_inverse(s + digamma(alpha.sum()))
        _guard(alpha, it)
        grad = _gradient(alpha, s)
    return alpha, grad, it, {"fixed_point": fp_its, "newton": it - fp_its}


def _gradient_ascent(alpha, s, tol, budget):
    grad = _gradient(alpha, s)
    f = _objective(alpha, s)
    it = 0
    while np.max(np.abs(grad)) > tol and it < budget:
        it += 1
        t = 1.0
        while True:
            cand = alpha + t * grad
            if np.all(cand > 0):
                fc = _objective(cand, s)
                if fc > f:
                    break
                # objective differences below rounding: accept if still ascending along grad
                if abs(fc - f) <= 64 * np.finfo(float).eps * abs(f) and _gradient(cand, s) @ grad > 0:
                    break
            t *= 0.5
            if t < 1e-30:
                raise ConvergenceError(
                    "gradient ascent line search failed to increase the objective",
                    last_iterate=alpha,
                    residual=float(np.max(np.abs(grad))),
                )
        alpha, f = cand, fc
        _guard(alpha, it)
        grad = _gradient(alpha, s)
    return alpha, grad, it, {"gradient_ascent": it}


def solve_map(hyper: Hyperparameters, config: Optional[SolverConfig] = None, check: bool = True) -> MapSolution:
    """Find the mode of the Boojum distribution defined by ``hyper``.

    Parameters
    ----------
    hyper : Hyperparameters
        Must satisfy all convergence conditions unless ``check`` is False.
    config : SolverConfig, optional
        Method, tolerance and iteration cap.
    check : bool
        Run :func:`check_convergence` first. Even with the check bypassed, an
        iterate above ``DIVERGENCE_LIMIT`` aborts with :class:`DivergenceError`.

    Raises
    ------
    ImproperHyperparametersError
        If the convergence conditions fail.
    ConvergenceError
        If the gradient tolerance is not met within ``max_iterations``.
    """
    config = config or SolverConfig()
    if hyper.nu <= 0:
        raise DomainError("MAP estimation needs nu > 0")
    if check:
        report = check_convergence(hyper)
        if not report.proper:
            failed = ", ".join(report.failed_conditions())
            raise ImproperHyperparametersError(
                f"improper hyperparameters: convergence condition(s) {failed} violated "
                f"(geometric mean sum {report.geometric_mean_sum})",
                report=report,
            )
    s = hyper.ratio
    if config.initial_alpha is not None:
        alpha = np.array(config.initial_alpha, dtype=float)
        if alpha.shape != s.shape:
            raise DomainError("initial_alpha has the wrong dimension")
    else:
        alpha = initial_guess(s)

    tol, budget = config.gradient_tolerance, config.max_iterations
    if config.method is Method.FIXED_POINT:
        alpha, grad, it, phases = _fixed_point(alpha, s, tol, budget, config.newton_refine)
    elif config.method is Method.NEWTON:
        alpha, grad, it = _newton_steps(alpha, s, tol, budget, 0)
        phases = {"newton": it}
        if np.max(np.abs(grad)) > tol and it < budget:
            alpha, grad, it2, _ = _fixed_point(alpha, s, tol, budget - it, False)
            phases["fixed_point"] = it2
            it += it2
    else:
        alpha, grad, it, phases = _gradient_ascent(alpha, s, tol, budget)

    if config.method is not Method.GRADIENT_ASCENT:
        alpha, grad = _polish(alpha, grad, s)
    sup = float(np.max(np.abs(grad)))
    if sup > tol:
        raise ConvergenceError(
            f"{config.method.value} did not reach gradient tolerance {tol:g} in {budget} iterations "
            f"(residual {sup:.3e})",
            last_iterate=alpha,
            residual=sup,
        )
    alpha.setflags(write=False)
    return MapSolution(
        alpha_map=alpha,
        gradient_sup_norm=sup,
        iterations=it,
        objective_value=float(_objective(alpha, s)),
        method_used=config.method,
        phases=phases,
    )
