"""Canonical two-dimensional scenarios and plot-ready scenario bundles.

S1 two distinct observations averaging (0.7, 0.3); S2 the same set with
every observation five times; S3 two observations with the same average
but further apart; S4 a single observation; S5 that observation ten times.
S4 and S5 are improper.
"""

import numpy as np

from .core import ObservationSet, check_convergence, from_pseudo_observations
from .oracle import (
    QuadratureGrid,
    boojum_density_grid,
    divergence_probe,
    exact_predictive_log_pdf,
    kl_from_log_densities,
    normalizing_constant,
    simplex_grid,
)
from .predictive import map_predictive_log_pdf
from .solver import solve_map

_S1 = [(0.75, 0.25), (0.65, 0.35)]
_S3 = [(0.95, 0.05), (0.45, 0.55)]
_S4 = [(0.7, 0.3)]

CANONICAL = {
    "S1": _S1,
    "S2": _S1 * 5,
    "S3": _S3,
    "S4": _S4,
    "S5": _S4 * 10,
}

DEFAULT_BOUNDS = (0.0, 100.0)


def canonical(name: str) -> ObservationSet:
    key = name.strip().upper().replace("Ş", "S")
    if key not in CANONICAL:
        raise KeyError(f"unknown scenario {name!r}; choose from {', '.join(CANONICAL)}")
    return ObservationSet.from_rows(CANONICAL[key])


def build_bundle(
    observations: ObservationSet,
    name: str = "custom",
    bounds=DEFAULT_BOUNDS,
    resolution: int = 400,
    solver_config=None,
    oracle_nodes=None,
    simplex_nodes=None,
) -> dict:
    """Everything needed to redraw a scenario panel: density grid, mode, predictives, KL or divergence."""
    hyper = from_pseudo_observations(observations)
    report = check_convergence(hyper)
    density = boojum_density_grid(hyper, bounds, resolution)
    bundle = {
        "scenario": name,
        "dimension": hyper.dimension,
        "observations": observations.observations.tolist(),
        "nu": hyper.nu,
        "chi": hyper.chi.tolist(),
        "convergence": report.as_dict(),
        "density_grid": {
            "bounds": [list(map(float, b)) for b in np.broadcast_to(np.asarray(bounds, float), (hyper.dimension, 2))],
            "resolution": resolution,
            "axes": [ax.tolist() for ax in density.axes],
            "values": density.values.tolist(),
            "argmax": density.mode_location.tolist(),
        },
    }
    if report.proper:
        solution = solve_map(hyper, solver_config)
        grid = QuadratureGrid.for_hyper(hyper, oracle_nodes)
        sgrid = simplex_grid(hyper.dimension, simplex_nodes)
        log_exact = exact_predictive_log_pdf(sgrid.points, hyper, grid)
        log_map = map_predictive_log_pdf(sgrid.points, solution)
        bundle["mode"] = solution.alpha_map.tolist()
        bundle["normalizing_constant"] = normalizing_constant(hyper, grid)
        bundle["predictive"] = {
            "theta": sgrid.points.tolist(),
            "exact": np.exp(log_exact).tolist(),
            "map": np.exp(log_map).tolist(),
        }
        bundle["kl"] = kl_from_log_densities(log_exact, log_map, sgrid)
    else:
        bundle["divergence"] = divergence_probe(hyper).as_dict()
    return bundle
