"""Quadrature ground truth for the quantities the MAP approximation replaces.

Integrals over the positive orthant of alpha use the per-axis change of
variables ``alpha = c u / (1 - u)`` with a midpoint rule in ``u``; all sums
are accumulated in log space. Only D = 2 and D = 3 are supported.

The scale ``c`` defaults to the mean component of the MAP estimate (at
least 1). With ``c = 1`` a 400-node axis reaches only ``alpha ~ 800``,
which truncates concentrated-direction posteriors such as two nearby
observations; scaling to the mode keeps the mass inside the resolved range.

The log-gamma evaluations here go through :mod:`scipy.special` rather than
:mod:`boojum.specialfn`, so the oracle does not share code with the path it
checks.
"""

import functools
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.special import gammaln, logsumexp

from .core import Hyperparameters, check_convergence
from .errors import CapabilityError, DomainError, ImproperHyperparametersError, ResolutionError

DEFAULT_NODES = {2: 400, 3: 120}
DEFAULT_SIMPLEX_NODES = {2: 2000, 3: 200}
SIMPLEX_CLIP = 1e-4
DOUBLING_RTOL = 5e-3
# posterior nodes this far (in log) below the peak carry < 1e-17 of the mass
PRUNE_LOG_MARGIN = 40.0
_BLOCK = 1 << 18


def _check_dimension(dimension):
    if dimension not in (2, 3):
        raise CapabilityError(f"the quadrature oracle supports D in {{2, 3}}, got D = {dimension}")


def _require_proper(hyper):
    report = check_convergence(hyper)
    if not report.proper:
        raise ImproperHyperparametersError(
            f"improper hyperparameters (failed conditions: {', '.join(report.failed_conditions())}); "
            "the normalizing integral diverges",
            report=report,
        )


def _log_beta(alpha):
    return np.sum(gammaln(alpha), axis=-1) - gammaln(np.sum(alpha, axis=-1))


def _log_integrand(alpha, hyper):
    return alpha @ hyper.chi - hyper.nu * _log_beta(alpha)


@functools.lru_cache(maxsize=64)
def _default_scale(hyper):
    from .solver import solve_map

    return max(1.0, float(np.mean(solve_map(hyper).alpha_map)))


@dataclass(frozen=True)
class QuadratureGrid:
    """Tensor midpoint grid on ``u in (0, 1)^D`` mapped to ``alpha = scale * u / (1 - u)``."""

    dimension: int
    nodes_per_axis: Optional[int] = None
    scale: float = 1.0

    def __post_init__(self):
        _check_dimension(self.dimension)
        if self.nodes_per_axis is None:
            object.__setattr__(self, "nodes_per_axis", DEFAULT_NODES[self.dimension])
        if self.nodes_per_axis < 2:
            raise ValueError("nodes_per_axis must be >= 2")
        if not (self.scale > 0 and np.isfinite(self.scale)):
            raise ValueError("scale must be positive")
        object.__setattr__(self, "scale", float(self.scale))

    @classmethod
    def for_hyper(cls, hyper: Hyperparameters, nodes_per_axis: Optional[int] = None) -> "QuadratureGrid":
        """Grid scaled to the MAP estimate of ``hyper`` (which must be proper)."""
        _check_dimension(hyper.dimension)
        _require_proper(hyper)
        return cls(hyper.dimension, nodes_per_axis, _default_scale(hyper))

    @property
    def u(self):
        n = self.nodes_per_axis
        return (np.arange(n) + 0.5) / n

    @property
    def axis_alpha(self):
        u = self.u
        return self.scale * u / (1.0 - u)

    @property
    def axis_log_weights(self):
        # d alpha = c du / (1 - u)^2
        u = self.u
        return np.log(self.scale / self.nodes_per_axis) - 2.0 * np.log1p(-u)

    def refined(self) -> "QuadratureGrid":
        return QuadratureGrid(self.dimension, 2 * self.nodes_per_axis, self.scale)

    def blocks(self):
        """Yield ``(alpha, log_weight)`` chunks covering the grid in a fixed order."""
        a1, w1 = self.axis_alpha, self.axis_log_weights
        n, d = self.nodes_per_axis, self.dimension
        total = n**d
        for start in range(0, total, _BLOCK):
            flat = np.arange(start, min(total, start + _BLOCK))
            idx = np.stack(np.unravel_index(flat, (n,) * d), axis=-1)
            yield a1[idx], np.sum(w1[idx], axis=-1)


def _log_mass(hyper, grid):
    # per-block logsumexp then an ordered reduction keeps the result independent of chunking
    parts = [logsumexp(_log_integrand(a, hyper) + w) for a, w in grid.blocks()]
    return float(logsumexp(parts))


def _as_hyper_grid(hyper, grid):
    if grid is None:
        grid = QuadratureGrid.for_hyper(hyper)
    if grid.dimension != hyper.dimension:
        raise DomainError(f"grid dimension {grid.dimension} != hyperparameter dimension {hyper.dimension}")
    return grid


def log_normalizer_integral(hyper: Hyperparameters, grid: Optional[QuadratureGrid] = None) -> float:
    """log of ``Z = integral B(alpha)^(-nu) exp(alpha . chi) d alpha`` on ``grid``, unchecked."""
    _check_dimension(hyper.dimension)
    grid = _as_hyper_grid(hyper, grid)
    _require_proper(hyper)
    return _log_mass(hyper, grid)


def normalizing_constant(hyper: Hyperparameters, grid: Optional[QuadratureGrid] = None, check_resolution=True) -> float:
    """``f(chi, nu) = 1 / Z`` by midpoint quadrature.

    With ``check_resolution`` the integral is recomputed on the grid with
    twice the nodes per axis and a relative change of 0.5% or more raises
    :class:`ResolutionError`.
    """
    log_z = log_normalizer_integral(hyper, grid)
    if check_resolution:
        grid = _as_hyper_grid(hyper, grid)
        log_z2 = _log_mass(hyper, grid.refined())
        change = abs(np.expm1(log_z - log_z2))
        if not change < DOUBLING_RTOL:
            raise ResolutionError(
                f"normalizing constant changed by {change:.3%} when doubling "
                f"{grid.nodes_per_axis} -> {2 * grid.nodes_per_axis} nodes per axis"
            )
    return float(np.exp(-log_z))


@dataclass(frozen=True)
class _PosteriorTable:
    alpha: np.ndarray  # (M, D) retained nodes
    log_mass: np.ndarray  # (M,) normalized log quadrature mass, logsumexp == 0
    log_beta: np.ndarray  # (M,)


@functools.lru_cache(maxsize=32)
def _posterior_table(hyper: Hyperparameters, grid: QuadratureGrid) -> _PosteriorTable:
    alphas, masses = [], []
    for a, w in grid.blocks():
        alphas.append(a)
        masses.append(_log_integrand(a, hyper) + w)
    alpha = np.concatenate(alphas)
    lm = np.concatenate(masses)
    keep = lm > lm.max() - PRUNE_LOG_MARGIN
    alpha, lm = alpha[keep], lm[keep]
    lm = lm - logsumexp(lm)
    return _PosteriorTable(alpha, lm, _log_beta(alpha))


def exact_predictive_log_pdf(theta, hyper: Hyperparameters, grid: Optional[QuadratureGrid] = None):
    """log of the posterior predictive ``integral Dir(theta | alpha) p(alpha) d alpha``."""
    _check_dimension(hyper.dimension)
    grid = _as_hyper_grid(hyper, grid)
    _require_proper(hyper)
    t = np.asarray(theta, dtype=float)
    pts = np.atleast_2d(t)
    if pts.shape[-1] != hyper.dimension:
        raise DomainError("theta dimension mismatch")
    if np.any(pts <= 0) or np.any(pts >= 1):
        raise DomainError("theta must lie strictly inside the simplex")
    table = _posterior_table(hyper, grid)
    log_theta = np.log(pts)
    base = table.log_mass - table.log_beta
    out = np.empty(pts.shape[0])
    step = max(1, _BLOCK // max(1, table.alpha.shape[0]))
    for i in range(0, pts.shape[0], step):
        lt = log_theta[i : i + step]
        terms = lt @ (table.alpha - 1.0).T + base
        out[i : i + step] = logsumexp(terms, axis=1)
    return float(out[0]) if t.ndim == 1 else out


def exact_predictive_pdf(theta, hyper: Hyperparameters, grid: Optional[QuadratureGrid] = None):
    return np.exp(exact_predictive_log_pdf(theta, hyper, grid))


@dataclass(frozen=True)
class SimplexGrid:
    """Interior quadrature nodes on the simplex with integration weights.

    Densities are with respect to Lebesgue measure on the first D - 1
    coordinates, as for the Dirichlet.
    """

    points: np.ndarray
    weights: np.ndarray

    @property
    def log_weights(self):
        return np.log(self.weights)


@functools.lru_cache(maxsize=16)
def simplex_grid(dimension: int, nodes: Optional[int] = None, clip: float = SIMPLEX_CLIP) -> SimplexGrid:
    """Trapezoid nodes on ``[clip, 1 - clip]`` for D = 2; a clipped triangular lattice for D = 3."""
    _check_dimension(dimension)
    nodes = nodes or DEFAULT_SIMPLEX_NODES[dimension]
    if dimension == 2:
        x = np.linspace(clip, 1.0 - clip, nodes)
        h = x[1] - x[0]
        w = np.full(nodes, h)
        w[0] = w[-1] = 0.5 * h
        pts = np.column_stack([x, 1.0 - x])
    else:
        # lattice spacing chosen so the clipped triangle holds `nodes` points per edge
        h = (1.0 - 3.0 * clip) / (nodes - 1)
        i, j = np.meshgrid(np.arange(nodes), np.arange(nodes), indexing="ij")
        keep = i + j <= nodes - 1
        x1 = clip + h * i[keep]
        x2 = clip + h * j[keep]
        pts = np.column_stack([x1, x2, 1.0 - x1 - x2])
        pts[:, 2] = np.maximum(pts[:, 2], clip)
        # trapezoid-style weights: interior h^2, edges h^2/2, corners h^2/6
        on_i = i[keep] == 0
        on_j = j[keep] == 0
        on_k = i[keep] + j[keep] == nodes - 1
        edges = on_i.astype(int) + on_j.astype(int) + on_k.astype(int)
        w = np.where(edges == 0, h * h, np.where(edges == 1, 0.5 * h * h, h * h / 6.0))
    pts.setflags(write=False)
    w.setflags(write=False)
    return SimplexGrid(pts, w)


def integrate_on_simplex(log_density, grid: SimplexGrid) -> float:
    return float(np.exp(logsumexp(log_density + grid.log_weights)))


def kl_from_log_densities(log_p, log_q, grid: SimplexGrid) -> float:
    """KL(p || q) of two densities tabulated on ``grid``.

    Both are renormalized to discrete distributions over the grid nodes
    first, so the result is a true discrete KL and is never negative beyond
    rounding.
    """
    lw = grid.log_weights
    lp = log_p + lw
    lq = log_q + lw
    lp = lp - logsumexp(lp)
    lq = lq - logsumexp(lq)
    return float(np.sum(np.exp(lp) * (lp - lq)))


def kl_exact_vs_map(
    hyper: Hyperparameters,
    grid: Optional[QuadratureGrid] = None,
    simplex_nodes: Optional[int] = None,
    solution=None,
) -> float:
    """KL(exact predictive || MAP predictive) on the clipped simplex grid."""
    from .predictive import map_predictive_log_pdf
    from .solver import solve_map

    _check_dimension(hyper.dimension)
    grid = _as_hyper_grid(hyper, grid)
    _require_proper(hyper)
    solution = solution or solve_map(hyper)
    sgrid = simplex_grid(hyper.dimension, simplex_nodes)
    log_exact = exact_predictive_log_pdf(sgrid.points, hyper, grid)
    log_map = map_predictive_log_pdf(sgrid.points, solution)
    return kl_from_log_densities(log_exact, log_map, sgrid)


@dataclass(frozen=True)
class DivergenceVerdict:
    diverging: bool
    partial_integrals: list  # unnormalized mass over {sum(alpha) <= 10^j}, j in PROBE_DECADES
    log_partial_integrals: list = field(default_factory=list)

    @property
    def growth_ratio(self) -> float:
        """Mass in the largest region over mass in the smallest."""
        return float(np.exp(self.log_partial_integrals[-1] - self.log_partial_integrals[0]))

    @property
    def tail_ratio(self) -> float:
        """Mass in the largest region over mass in the next smaller one."""
        return float(np.exp(self.log_partial_integrals[-1] - self.log_partial_integrals[-2]))

    def as_dict(self):
        return {
            "diverging": self.diverging,
            "partial_integrals": list(self.partial_integrals),
            "log_partial_integrals": list(self.log_partial_integrals),
            "growth_ratio": self.growth_ratio,
            "tail_ratio": self.tail_ratio,
        }


# a proper density whose mass lies beyond the largest region cannot be told
# apart from a divergent one, so the regions reach far past any practical mode
PROBE_DECADES = tuple(range(1, 9))
PROBE_LOWER = 1e-6
GROWTH_THRESHOLD = 1e3
TAIL_THRESHOLD = 2.0
# half-width of the direction grid: in standard deviations, and its cap in log-ratio units
PROBE_SPREAD = 10.0
PROBE_MAX_HALF_WIDTH = 25.0


def _direction_grid(center, half_width, nodes):
    """Midpoints of a cube in additive log-ratio coordinates and the log cell volume."""
    k = center.shape[0]
    offsets = (np.arange(nodes) + 0.5) / nodes * 2.0 - 1.0
    mesh = np.stack(np.meshgrid(*([offsets] * k), indexing="ij"), axis=-1).reshape(-1, k)
    y = center + half_width * mesh
    log_u = np.concatenate([y, np.zeros((y.shape[0], 1))], axis=1)
    log_u -= logsumexp(log_u, axis=1, keepdims=True)
    return log_u, k * np.log(2.0 * half_width / nodes)


def divergence_probe(
    hyper: Hyperparameters, nodes_per_decade: Optional[int] = None, direction_nodes: Optional[int] = None
) -> DivergenceVerdict:
    """Unnormalized Boojum mass over the nested regions ``sum(alpha) <= 10^j``.

    A divergent integral keeps accumulating mass as the region grows. The
    verdict requires both a large overall growth (last region over first,
    above ``GROWTH_THRESHOLD``) and continued growth over the final decade
    (above ``TAIL_THRESHOLD``); the second test stops a proper density whose
    mode lies beyond the first region from being flagged.

    The integral is taken in polar-like coordinates ``alpha = t u`` with
    ``t = sum(alpha)`` on a log grid aligned to decades and ``u`` on the
    simplex in additive log-ratio coordinates. For large ``t`` the integrand
    concentrates around the direction of the normalized geometric means
    ``exp(chi / nu)`` with a width shrinking like ``t^(-1/2)``; the direction
    grid is centred there and scaled accordingly, which a fixed box grid
    cannot resolve beyond ``alpha ~ 10^4``.

    Works for any hyperparameters, proper or not.
    """
    d = hyper.dimension
    _check_dimension(d)
    per_decade = nodes_per_decade or 40
    q = direction_nodes or (201 if d == 2 else 61)
    lo = np.log10(PROBE_LOWER)
    n = int(round((PROBE_DECADES[-1] - lo) * per_decade))
    edges = np.linspace(lo, PROBE_DECADES[-1], n + 1) * np.log(10.0)
    log_t = 0.5 * (edges[:-1] + edges[1:])
    log_dt = np.log(np.diff(edges))
    nu = hyper.nu
    if nu > 0:
        log_g = hyper.chi / nu
        center = log_g[:-1] - log_g[-1]
        # smallest curvature of nu t sum(u log u) in log-ratio coordinates near the centre
        u_c = np.exp(log_g - logsumexp(log_g))
        curvature = nu * float(np.min(u_c * (1.0 - u_c)))
    else:
        center = np.zeros(d - 1)
        curvature = 0.0
    slices = np.empty(n)
    for i, lt in enumerate(log_t):
        t = np.exp(lt)
        half = PROBE_MAX_HALF_WIDTH
        if curvature > 0:
            half = min(half, PROBE_SPREAD / np.sqrt(curvature * t))
        log_u, log_cell = _direction_grid(center, half, q)
        alpha = t * np.exp(log_u)
        # d alpha = t^(D-1) dt du, du = prod(u) dy, dt = t d(log t)
        log_w = d * lt + np.sum(log_u, axis=1) + log_cell + log_dt[i]
        slices[i] = logsumexp(_log_integrand(alpha, hyper) + log_w)
    upper = edges[1:] / np.log(10.0)
    log_partials = [float(logsumexp(slices[upper <= j + 1e-9])) for j in PROBE_DECADES]
    growth = log_partials[-1] - log_partials[0]
    tail = log_partials[-1] - log_partials[-2]
    diverging = bool(growth > np.log(GROWTH_THRESHOLD) and tail > np.log(TAIL_THRESHOLD))
    return DivergenceVerdict(
        diverging=diverging,
        partial_integrals=[float(np.exp(v)) for v in log_partials],
        log_partial_integrals=log_partials,
    )


@dataclass(frozen=True)
class DensityGrid:
    """Boojum density on a regular box grid, scaled so its maximum is 1."""

    axes: tuple  # cell-centre coordinates per axis
    values: np.ndarray  # shape (resolution,) * D
    log_values: np.ndarray  # unnormalized log density
    mode_index: tuple
    mode_location: np.ndarray

    @property
    def cell_widths(self):
        return np.array([ax[1] - ax[0] for ax in self.axes])

    def contains(self, alpha, cells=1.0) -> bool:
        """Whether ``alpha`` lies within ``cells`` grid cells of the argmax cell centre."""
        return bool(np.all(np.abs(np.asarray(alpha) - self.mode_location) <= cells * self.cell_widths))

    def on_boundary(self) -> bool:
        n = self.values.shape[0]
        return any(i in (0, n - 1) for i in self.mode_index)


def boojum_density_grid(hyper: Hyperparameters, bounds=(0.0, 100.0), resolution: int = 400) -> DensityGrid:
    """Tabulate the unnormalized Boojum density on a box and scale its peak to 1.

    ``bounds`` is ``(low, high)`` for every axis or a sequence of per-axis
    pairs; the grid uses cell centres, so a lower bound of 0 is fine.
    Improper hyperparameters are allowed.
    """
    d = hyper.dimension
    _check_dimension(d)
    if np.ndim(bounds) == 1:
        bounds = [tuple(bounds)] * d
    if len(bounds) != d:
        raise DomainError("need one (low, high) pair per dimension")
    axes = []
    for lo, hi in bounds:
        if not 0 <= lo < hi:
            raise DomainError(f"invalid bounds ({lo}, {hi})")
        h = (hi - lo) / resolution
        axes.append(lo + h * (np.arange(resolution) + 0.5))
    mesh = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)
    log_vals = _log_integrand(mesh.reshape(-1, d), hyper).reshape((resolution,) * d)
    flat = int(np.argmax(log_vals))
    idx = np.unravel_index(flat, log_vals.shape)
    values = np.exp(log_vals - log_vals[idx])
    mode = np.array([axes[k][idx[k]] for k in range(d)])
    return DensityGrid(tuple(axes), values, log_vals, tuple(int(i) for i in idx), mode)
