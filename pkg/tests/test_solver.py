import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from halfspace.experiments import random_smooth_data
from halfspace.grid import BoundaryDatum, HalfSpaceGrid
from halfspace.solver import ConvergenceError, SolveConfig, fit_family, max_principle_check, solve


def family_data(a, c_star, c2):
    return BoundaryDatum.dirichlet_from(lambda p: c_star * p[..., -1] ** (1 - a) + c2)


@pytest.mark.parametrize("a", [-0.5, 0.0, 0.5])
def test_dirichlet_family_recovered(a):
    g = HalfSpaceGrid(2, 2.0, 4.0, 65, 65)
    u, rep = solve(g, a, family_data(a, 2.0, 1.0))
    fit = fit_family(u)
    assert fit.c_star == pytest.approx(2.0, rel=1e-6)
    assert fit.c2 == pytest.approx(1.0, rel=1e-6)
    assert fit.residual < 1e-6
    assert rep.converged and rep.residual <= 1e-10 and rep.max_principle_ok


def test_constant_data_needs_no_iterations():
    g = HalfSpaceGrid(2, 2.0, 4.0, 33, 33)
    u, rep = solve(g, 0.5, BoundaryDatum.dirichlet_from(lambda p: np.ones(len(p))))
    assert rep.iterations == 0
    np.testing.assert_allclose(u.values, 1.0)
    fit = fit_family(u)
    assert abs(fit.c_star) < 1e-12 and fit.c2 == pytest.approx(1.0)


@pytest.mark.parametrize("a", [-0.5, 0.0, 0.5])
def test_energy_history_monotone(a):
    rng = np.random.default_rng(3)
    g = HalfSpaceGrid(2, 1.0, 2.0, 33, 33)
    _, rep = solve(g, a, random_smooth_data(2, rng))
    e = np.array(rep.energy_history)
    slack = 1e-12 * np.max(np.abs(e))
    assert np.all(np.diff(e) <= slack)
    assert rep.residual_history[-1] <= 1e-10


def test_different_initial_guesses_agree():
    rng = np.random.default_rng(5)
    g = HalfSpaceGrid(2, 1.0, 2.0, 33, 33)
    data = random_smooth_data(2, rng)
    tol = 1e-10
    u1, _ = solve(g, 0.3, data, SolveConfig(tol))
    u2, _ = solve(g, 0.3, data, SolveConfig(tol), x0=rng.normal(size=g.shape) * 10)
    scale = np.max(np.abs(u1.values))
    # relative residual tol bounds the error up to the condition number
    assert np.max(np.abs(u1.values - u2.values)) <= 10 * tol * scale * g.m_t**2


def test_tangentially_symmetric_data_give_symmetric_solution():
    g = HalfSpaceGrid(3, 1.0, 2.0, 17, 17)
    data = BoundaryDatum.dirichlet_from(lambda p: np.cos(p[..., 0]) * np.cos(p[..., 1]) + p[..., 2] ** 2)
    u, _ = solve(g, -0.5, data)
    U = u.values
    scale = np.max(np.abs(U))
    for mirrored in (U[::-1], U[:, ::-1], np.swapaxes(U, 0, 1)):
        assert np.max(np.abs(U - mirrored)) <= 1e-8 * scale


def test_solve_is_bitwise_deterministic():
    rng = np.random.default_rng(7)
    g = HalfSpaceGrid(2, 1.0, 2.0, 33, 33)
    data = random_smooth_data(2, rng)
    u1, r1 = solve(g, 0.5, data)
    u2, r2 = solve(g, 0.5, data)
    assert np.array_equal(u1.values, u2.values)
    assert r1.residual_history == r2.residual_history


@settings(max_examples=20)
@given(seed=st.integers(0, 2**32 - 1), a=st.floats(-0.9, 0.9), n=st.sampled_from([2, 3]))
def test_maximum_principle(seed, a, n):
    rng = np.random.default_rng(seed)
    g = HalfSpaceGrid(n, 1.0, 2.0, 17, 17) if n == 2 else HalfSpaceGrid(n, 1.0, 2.0, 9, 9)
    data = random_smooth_data(n, rng)
    u, rep = solve(g, a, data)
    ok, worst = max_principle_check(u, data)
    assert ok and rep.max_principle_ok, worst


def test_iteration_cap_raises_with_history():
    rng = np.random.default_rng(1)
    g = HalfSpaceGrid(2, 1.0, 2.0, 33, 33)
    with pytest.raises(ConvergenceError) as info:
        solve(g, 0.0, random_smooth_data(2, rng), SolveConfig(max_iterations=2))
    assert len(info.value.history) == 3


@pytest.mark.parametrize("a", [-0.5, 0.0, 0.5])
def test_zero_flux_neumann_gives_constant(a):
    g = HalfSpaceGrid(3, 1.0, 2.0, 17, 17)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        u, _ = solve(g, a, BoundaryDatum.neumann(0.0, 3.0))
        noisy, rep = solve(g, a, BoundaryDatum.neumann(0.0, 3.0), x0=3 + np.random.default_rng(0).normal(size=g.shape))
    assert np.ptp(u.values) <= 1e-8 * 3.0
    assert rep.iterations > 0 and np.ptp(noisy.values) <= 1e-8 * 3.0


@pytest.mark.parametrize("a", [-0.5, 0.0, 0.5])
def test_neumann_flux_reproduces_family(a):
    # u = 2 x_n^{1-a} + 1 has weighted flux 2 (1 - a)
    g = HalfSpaceGrid(2, 1.0, 2.0, 33, 33)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        u, _ = solve(g, a, BoundaryDatum.neumann(2 * (1 - a), lambda p: 2 * p[..., -1] ** (1 - a) + 1))
    fit = fit_family(u)
    assert fit.c_star == pytest.approx(2.0, rel=1e-8)
    assert fit.c2 == pytest.approx(1.0, rel=1e-8)


def test_neumann_outside_window_warns():
    g = HalfSpaceGrid(2, 1.0, 2.0, 9, 9)
    with pytest.warns(UserWarning, match="window"):
        solve(g, -0.5, BoundaryDatum.neumann(0.0, 1.0))


def test_rejections():
    g = HalfSpaceGrid(2, 1.0, 2.0, 9, 9)
    with pytest.raises(ValueError, match="pure-Neumann"):
        solve(g, 0.0, BoundaryDatum("neumann", lambda p: 0 * p[..., 0], None))
    with pytest.raises(ValueError):
        solve(g, -1.0, BoundaryDatum.neumann(0.0, 1.0))
    with pytest.raises(ValueError):
        SolveConfig(tolerance=-1.0)
    with pytest.raises(ValueError):
        SolveConfig(max_iterations=0)
    with pytest.raises(ValueError):
        SolveConfig(preconditioner="ilu")


def test_unpreconditioned_matches_jacobi():
    rng = np.random.default_rng(11)
    g = HalfSpaceGrid(2, 1.0, 2.0, 17, 17)
    data = random_smooth_data(2, rng)
    u1, _ = solve(g, 0.5, data)
    u2, _ = solve(g, 0.5, data, SolveConfig(preconditioner="none"))
    assert np.max(np.abs(u1.values - u2.values)) < 1e-8


def test_fit_family_degenerate_and_large_a():
    g = HalfSpaceGrid(2, 1.0, 2.0, 17, 17)
    u, _ = solve(g, 1.0, BoundaryDatum.dirichlet_from(lambda p: np.full(len(p), 4.0)))
    fit = fit_family(u)
    assert fit.degenerate and fit.c2 == pytest.approx(4.0)
    u, _ = solve(g, 1.5, BoundaryDatum.dirichlet_from(lambda p: np.full(len(p), -1.0)))
    fit = fit_family(u)
    assert not fit.degenerate and fit.c2 == pytest.approx(-1.0) and abs(fit.c_star) < 1e-10


def test_power_trace_recovered_on_standard_grid():
    a = 0.5
    g = HalfSpaceGrid(2, 2.0, 4.0, 129, 129)
    u, _ = solve(g, a, family_data(a, 1.0, 0.0))
    exact = g.coords()[..., -1] ** (1 - a)
    assert np.max(np.abs(u.values - exact)) / np.max(exact) <= 2e-3
    fit = fit_family(u)
    assert fit.c_star == pytest.approx(1.0, abs=2e-3) and abs(fit.c2) <= 2e-3 and fit.residual <= 2e-3


def test_corrupted_field_violates_maximum_principle():
    g = HalfSpaceGrid(2, 1.0, 2.0, 17, 17)
    data = BoundaryDatum.dirichlet_from(lambda p: np.ones(len(p)))
    u, rep = solve(g, 0.5, data)
    assert max_principle_check(u, data) == (True, 0.0)
    u.values[8, 8] += 10
    ok, worst = max_principle_check(u, data)
    assert not ok and worst == pytest.approx(10.0)


def test_fit_family_exact_and_non_family():
    from halfspace.grid import ScalarField

    g = HalfSpaceGrid(2, 2.0, 4.0, 129, 129)
    a = 0.5
    fit = fit_family(ScalarField.from_function(g, a, lambda p: 2 * p[..., -1] ** (1 - a) + 3))
    assert fit.c_star == pytest.approx(2.0) and fit.c2 == pytest.approx(3.0) and fit.residual < 1e-12
    assert fit_family(ScalarField.from_function(g, a, lambda p: p[..., 0])).residual > 0.1
