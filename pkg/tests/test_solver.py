import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from boojum.core import Hyperparameters, from_pseudo_observations
from boojum.errors import ConvergenceError, DivergenceError, DomainError, ImproperHyperparametersError
from boojum.solver import (
    Method,
    SolverConfig,
    initial_guess,
    map_gradient,
    map_objective,
    solve_map,
)

from conftest import SCENARIO_MODES, random_proper_observations, simplex_vectors

# root of psi(a) - psi(2a) = ln(0.21) / 2, by mpmath.findroot at 30 digits and
# cross-checked with scipy brentq on scipy.special.digamma
SYMMETRIC_MODE = 3.09640094651514948


def finite_difference_gradient(alpha, hyper, h=1e-5):
    g = np.empty_like(alpha)
    for k in range(alpha.shape[0]):
        e = np.zeros_like(alpha)
        e[k] = h
        g[k] = (map_objective(alpha + e, hyper) - map_objective(alpha - e, hyper)) / (2 * h)
    return g


def test_symmetric_gradient():
    h = from_pseudo_observations([(0.3, 0.7), (0.7, 0.3)])
    g = map_gradient([2.5, 2.5], h)
    assert g[0] == g[1]


def test_gradient_matches_finite_differences():
    rng = np.random.default_rng(11)
    for _ in range(50):
        d = int(rng.integers(2, 6))
        h = from_pseudo_observations(random_proper_observations(rng, d, int(rng.integers(2, 10))))
        alpha = rng.uniform(0.2, 20.0, size=d)
        np.testing.assert_allclose(map_gradient(alpha, h), finite_difference_gradient(alpha, h), atol=1e-6)


def test_gradient_domain():
    with pytest.raises(DomainError):
        map_gradient([1.0, 1.0], Hyperparameters(0.0, [-1.0, -1.0]))
    h = from_pseudo_observations([(0.3, 0.7), (0.7, 0.3)])
    with pytest.raises(DomainError):
        map_gradient([1.0, -1.0], h)


def test_symmetric_mode_matches_scalar_root():
    h = from_pseudo_observations([(0.3, 0.7), (0.7, 0.3)])
    sol = solve_map(h)
    assert sol.alpha_map[0] == sol.alpha_map[1]
    assert sol.alpha_map[0] == pytest.approx(SYMMETRIC_MODE, rel=1e-8)
    assert sol.gradient_sup_norm <= 1e-9
    assert np.max(np.abs(map_gradient(sol.alpha_map, h))) <= 1e-9


@pytest.mark.parametrize(
    "name, obs", [("S1", [(0.75, 0.25), (0.65, 0.35)]), ("S3", [(0.95, 0.05), (0.45, 0.55)])]
)
def test_canonical_modes(name, obs):
    sol = solve_map(from_pseudo_observations(obs))
    np.testing.assert_allclose(sol.alpha_map, SCENARIO_MODES[name], rtol=1e-10)


def test_multiplicity_does_not_move_mode():
    s1 = [(0.75, 0.25), (0.65, 0.35)]
    a1 = solve_map(from_pseudo_observations(s1)).alpha_map
    a2 = solve_map(from_pseudo_observations(s1 * 5)).alpha_map
    np.testing.assert_allclose(a2, a1, rtol=1e-9)


def test_improper_rejected():
    with pytest.raises(ImproperHyperparametersError) as info:
        solve_map(from_pseudo_observations([(0.7, 0.3)]))
    assert "c" in info.value.report.failed_conditions()


@pytest.mark.parametrize("method", [Method.FIXED_POINT, Method.NEWTON])
def test_divergence_guard_when_check_bypassed(method):
    # the gradient decays like 1/alpha along the escaping ray, so a loose
    # tolerance would stop early; a tight one must run into the guard
    h = from_pseudo_observations([(0.7, 0.3)] * 3)
    with pytest.raises(DivergenceError) as info:
        solve_map(h, SolverConfig(method=method, gradient_tolerance=1e-15, max_iterations=100000), check=False)
    assert np.max(info.value.last_iterate) > 1e12


def test_iteration_limit_error_carries_state():
    h = from_pseudo_observations([(0.75, 0.25), (0.65, 0.35)])
    with pytest.raises(ConvergenceError) as info:
        solve_map(h, SolverConfig(method="gradient_ascent", max_iterations=3))
    assert info.value.residual > 1e-9
    assert info.value.last_iterate.shape == (2,)


def test_config_validation():
    with pytest.raises(ValueError):
        SolverConfig(gradient_tolerance=0.0)
    with pytest.raises(ValueError):
        SolverConfig(max_iterations=0)
    with pytest.raises(ValueError):
        SolverConfig(initial_alpha=[1.0, -1.0])


def test_initial_guess_positive_iff_condition_c():
    s = np.log([0.3, 0.5])  # geometric sum 0.8 < 1
    a = initial_guess(s)
    assert np.all(a > 0)
    np.testing.assert_allclose(a, 2 * np.exp(s) / 0.2)
    np.testing.assert_array_equal(initial_guess(np.log([0.7, 0.3])), [1.0, 1.0])


def test_deterministic():
    h = from_pseudo_observations([(0.2, 0.5, 0.3), (0.4, 0.4, 0.2), (0.1, 0.6, 0.3)])
    a, b = solve_map(h), solve_map(h)
    np.testing.assert_array_equal(a.alpha_map, b.alpha_map)
    assert a.iterations == b.iterations


@pytest.mark.parametrize("method", list(Method))
def test_methods_agree(method):
    rng = np.random.default_rng(21)
    for _ in range(8):
        d = int(rng.integers(2, 5))
        h = from_pseudo_observations(random_proper_observations(rng, d, int(rng.integers(2, 12))))
        ref = solve_map(h).alpha_map
        sol = solve_map(h, SolverConfig(method=method, max_iterations=100000))
        assert sol.method_used is method
        assert sol.gradient_sup_norm <= 1e-9
        np.testing.assert_allclose(sol.alpha_map, ref, rtol=1e-6)


def test_multi_start_agreement():
    rng = np.random.default_rng(8)
    h = from_pseudo_observations(random_proper_observations(rng, 3, 6))
    ref = solve_map(h).alpha_map
    for _ in range(5):
        start = rng.uniform(0.05, 50.0, size=3)
        sol = solve_map(h, SolverConfig(initial_alpha=start))
        np.testing.assert_allclose(sol.alpha_map, ref, rtol=1e-8)


def test_grid_dominance():
    rng = np.random.default_rng(4)
    axis = np.logspace(-2, 3, 200)
    mesh = np.stack(np.meshgrid(axis, axis, indexing="ij"), axis=-1).reshape(-1, 2)
    cases = [[(0.75, 0.25), (0.65, 0.35)], [(0.95, 0.05), (0.45, 0.55)]]
    cases += [random_proper_observations(rng, 2, int(rng.integers(2, 10))) for _ in range(5)]
    for obs in cases:
        h = from_pseudo_observations(obs)
        sol = solve_map(h)
        grid_values = mesh @ h.ratio - (
            np.sum([[math.lgamma(x) for x in row] for row in mesh], axis=1)
            - np.array([math.lgamma(s) for s in mesh.sum(axis=1)])
        )
        assert sol.objective_value >= np.max(grid_values) - 1e-12


@settings(max_examples=25)
@given(st.lists(simplex_vectors(3), min_size=2, max_size=6), st.floats(0.1, 20.0))
def test_scale_invariance(obs, m):
    h = from_pseudo_observations(obs)
    if not h.nu or not all(np.ptp(np.asarray(obs), axis=0) > 1e-3):
        return
    scaled = Hyperparameters(h.nu * m, h.chi * m)
    a = solve_map(h).alpha_map
    b = solve_map(scaled).alpha_map
    np.testing.assert_allclose(b, a, rtol=1e-9)


@settings(max_examples=25)
@given(st.lists(simplex_vectors(3), min_size=2, max_size=6), st.permutations(range(3)))
def test_permutation_equivariance(obs, perm):
    if not all(np.ptp(np.asarray(obs), axis=0) > 1e-3):
        return
    h = from_pseudo_observations(obs)
    hp = Hyperparameters(h.nu, h.chi[list(perm)])
    np.testing.assert_allclose(solve_map(hp).alpha_map, solve_map(h).alpha_map[list(perm)], rtol=1e-8)
