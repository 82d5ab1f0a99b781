import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from halfspace.discrete import (
    PreconditionError,
    Stencil,
    apply_operator,
    boundary_flux,
    even_reflection_residual,
    tangential_weights,
    vertical_weights,
    weighted_div_fd,
)
from halfspace.grid import BoundaryDatum, HalfSpaceGrid, ScalarField
from halfspace.solver import _System


def _power(a):
    return lambda p: p[..., -1] ** (1 - a)


@pytest.mark.parametrize("n", [2, 3])
@pytest.mark.parametrize("a", [-0.9, -0.5, 0.0, 0.5, 0.9])
def test_harmonic_rule_annihilates_power(n, a):
    g = HalfSpaceGrid.from_spacing(n, 1.0, 2.0, 1 / 8)
    u = ScalarField.from_function(g, a, _power(a))
    res = apply_operator(u).values
    scale = np.max(Stencil(g, a).diagonal_interior())
    assert np.max(np.abs(res)) <= 1e-12 * scale * np.max(u.values)


@pytest.mark.parametrize("a", [-0.5, 0.0, 0.5])
def test_boundary_flux_of_power_is_exact(a):
    g = HalfSpaceGrid(2, 2.0, 4.0, 129, 129)
    u = ScalarField.from_function(g, a, _power(a))
    np.testing.assert_allclose(boundary_flux(u), 1 - a, rtol=1e-12)


def test_midpoint_rule_is_second_order_in_interior():
    a = 0.5
    errs = []
    for h in (1 / 8, 1 / 16, 1 / 32):
        g = HalfSpaceGrid.from_spacing(2, 1.0, 2.0, h)
        u = ScalarField.from_function(g, a, _power(a))
        res = apply_operator(u, rule="midpoint").values
        c = g.coords()
        errs.append(np.max(np.abs(res[c[..., -1] >= 0.5])))
    rate = np.polyfit(np.log([1 / 8, 1 / 16, 1 / 32]), np.log(errs), 1)[0]
    assert rate > 1.8


def test_weights_special_exponents():
    h = 0.1
    w = vertical_weights(1.0, h, 5)
    assert w[0] == 0 and np.all(w[1:] > 0)
    w = vertical_weights(1.5, h, 5)
    assert w[0] == 0 and np.all(w[1:] > 0)
    np.testing.assert_allclose(vertical_weights(0.0, h, 5), 1.0)
    np.testing.assert_allclose(tangential_weights(0.0, h, 5), 1.0)
    with pytest.raises(ValueError):
        vertical_weights(0.0, h, 5, rule="simpson")


def test_tangential_linear_functions_are_exact():
    g = HalfSpaceGrid.from_spacing(3, 1.0, 2.0, 1 / 8)
    u = ScalarField.from_function(g, 0.3, lambda p: 2 * p[..., 0] - p[..., 1] + 4)
    assert np.max(np.abs(apply_operator(u).values)) < 1e-10


def test_weighted_div_fd_second_order():
    a = 0.5

    def f(p):
        return p[..., 0] ** 2 * np.cos(p[..., 1]) + p[..., 1] ** 3

    def exact(p):
        x, t = p[..., 0], p[..., 1]
        # t^a (2 cos t) + d/dt (t^a (-x^2 sin t + 3 t^2))
        return t**a * 2 * np.cos(t) + a * t ** (a - 1) * (-(x**2) * np.sin(t) + 3 * t**2) + t**a * (
            -(x**2) * np.cos(t) + 6 * t
        )

    pts = np.array([[0.3, 0.7], [-1.0, 1.2], [0.5, 0.4]])
    errs = [np.max(np.abs(weighted_div_fd(f, pts, a, h) - exact(pts))) for h in (0.02, 0.01, 0.005)]
    rate = np.polyfit(np.log([0.02, 0.01, 0.005]), np.log(errs), 1)[0]
    assert rate > 1.9
    with pytest.raises(ValueError):
        weighted_div_fd(f, [[0.0, 0.01]], a, 0.02)


def _assemble(system, shape):
    unk = np.flatnonzero(system.unknown.reshape(-1))
    A = np.zeros((len(unk), len(unk)))
    for j, idx in enumerate(unk):
        e = np.zeros(int(np.prod(shape)))
        e[idx] = 1.0
        A[:, j] = system.matvec(e.reshape(shape)).reshape(-1)[unk]
    return A


@given(a=st.floats(-0.9, 0.9), kind=st.sampled_from(["dirichlet", "neumann"]), n=st.sampled_from([2, 3]))
def test_operator_symmetric_positive_definite(a, kind, n):
    g = HalfSpaceGrid(n, 1.0, 2.0, 5, 5) if n == 3 else HalfSpaceGrid(n, 1.0, 2.0, 7, 7)
    data = BoundaryDatum.dirichlet_from(lambda p: 0 * p[..., 0]) if kind == "dirichlet" else BoundaryDatum.neumann(
        0.0, 0.0
    )
    A = _assemble(_System(g, a, data, "harmonic"), g.shape)
    np.testing.assert_allclose(A, A.T, rtol=1e-12, atol=1e-12 * np.abs(A).max())
    assert np.min(np.linalg.eigvalsh(0.5 * (A + A.T))) > 0


def test_reflection_requires_zero_flux():
    g = HalfSpaceGrid(2, 1.0, 2.0, 9, 9)
    u = ScalarField.from_function(g, 0.0, lambda p: p[..., -1])
    with pytest.raises(PreconditionError):
        even_reflection_residual(u)


def test_reflection_of_constant_is_zero():
    g = HalfSpaceGrid(3, 1.0, 2.0, 9, 9)
    u = ScalarField(g, 0.5, np.full(g.shape, 2.0), {"zero_flux": True})
    assert even_reflection_residual(u) == 0.0


def test_constants_have_zero_residual_and_flux():
    g = HalfSpaceGrid(3, 1.0, 2.0, 9, 9)
    u = ScalarField(g, -0.5, np.full(g.shape, 7.0))
    assert np.all(apply_operator(u).values == 0)
    assert np.all(boundary_flux(u) == 0) and np.all(boundary_flux(u, extrapolate=True) == 0)


@given(a=st.floats(-0.99, 5.0))
def test_midpoint_weights_positive(a):
    assert np.all(vertical_weights(a, 0.1, 20, "midpoint") > 0)
    assert np.all(tangential_weights(a, 0.1, 20) > 0)


@pytest.mark.parametrize("kind,a,n", [("gamma_d", 0.5, 3), ("gamma_d", -0.5, 2), ("gamma_n", 0.5, 3)])
def test_kernel_solutions_second_order(kind, a, n):
    from halfspace.experiments import kernel_residual_rate

    rate, errs = kernel_residual_rate(kind, a, n)
    assert rate >= 1.8


@pytest.mark.parametrize("a", [-0.5, 0.0, 0.5])
def test_reflection_of_solved_neumann_field(a):
    from halfspace.solver import solve

    g = HalfSpaceGrid(2, 1.0, 2.0, 33, 33)
    data = BoundaryDatum.neumann(0.0, lambda p: 1 + 0.5 * np.cos(2 * p[..., 0]) * (1 + p[..., -1] ** 2))
    with pytest.warns(UserWarning) if a <= 0 else _nullcontext():
        u, _ = solve(g, a, data)
    assert np.ptp(u.values) > 0.1
    assert even_reflection_residual(u) <= 1e-10 + g.h


def _nullcontext():
    import contextlib

    return contextlib.nullcontext()
