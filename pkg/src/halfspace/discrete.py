"""Flux-form discretization of div(x_n^a grad u) on half-space grids.

Along each axis the stencil is ``(w+ (u+ - u0) - w- (u0 - u-)) / h^2``.
Tangential edges at height k*h carry weight (k h)^a.  Vertical edges carry
either the midpoint value ((k + 1/2) h)^a or, by default, the cell-harmonic
value ``h / int_{kh}^{(k+1)h} t^{-a} dt``.  The harmonic rule makes the
discrete operator annihilate x_n^{1-a} exactly and keeps the boundary flux
of x_n^{1-a} equal to 1 - a at any spacing; neither rule evaluates 0^a.
"""

from __future__ import annotations

import warnings
from typing import Callable, Literal

import numpy as np

from .grid import HalfSpaceGrid, ScalarField

WeightRule = Literal["harmonic", "midpoint"]


def vertical_weights(a: float, h: float, m_v: int, rule: WeightRule = "harmonic") -> np.ndarray:
    """Weights of the ``m_v - 1`` vertical edges between rows k and k+1."""
    k = np.arange(m_v - 1, dtype=float)
    if rule == "midpoint":
        return ((k + 0.5) * h) ** a
    if rule != "harmonic":
        raise ValueError(f"unknown weight rule {rule!r}")
    with np.errstate(divide="ignore"):
        if a < 1:
            denom = (k + 1) ** (1 - a) - k ** (1 - a)
            return (1 - a) * h**a / denom
        if a == 1:
            # int t^{-1} diverges on the first cell: that edge decouples
            w = np.zeros_like(k)
            w[1:] = h / np.log((k[1:] + 1) / k[1:])
            return w
        w = np.zeros_like(k)
        w[1:] = (a - 1) * h**a / (k[1:] ** (1 - a) - (k[1:] + 1) ** (1 - a))
        return w


def tangential_weights(a: float, h: float, m_v: int) -> np.ndarray:
    """Per-row tangential weights; row 0 uses the half-cell mean of x_n^a."""
    w = np.empty(m_v)
    w[1:] = (np.arange(1, m_v) * h) ** a
    w[0] = (h / 2) ** a / (1 + a) if a > -1 else np.inf
    return w


class Stencil:
    """Edge weights of the operator on one grid for one exponent."""

    def __init__(self, grid: HalfSpaceGrid, a: float, rule: WeightRule = "harmonic"):
        self.grid = grid
        self.a = a
        self.rule = rule
        self.h = grid.h
        self.wv = vertical_weights(a, grid.h, grid.m_v, rule)
        self.wt = tangential_weights(a, grid.h, grid.m_v)

    def interior(self, U: np.ndarray) -> np.ndarray:
        """Operator on interior nodes; returns the ``(m-2,)*n`` block."""
        return _interior_div(U, self.wv, self.wt, self.h)

    def bottom_row(self, U: np.ndarray) -> np.ndarray:
        """Half-cell operator on row 0 at tangentially interior nodes, zero flux."""
        return _bottom_div(U, self.wv[0], self.wt[0], self.h)

    def diagonal_interior(self) -> np.ndarray:
        g = self.grid
        n = g.n
        d = (2 * (n - 1) * self.wt[1:-1] + self.wv[1:] + self.wv[:-1]) / self.h**2
        return np.broadcast_to(d, (g.m_t - 2,) * (n - 1) + (g.m_v - 2,))

    def diagonal_bottom(self) -> np.ndarray:
        g = self.grid
        d = (2 * (g.n - 1) * self.wt[0] + 2 * self.wv[0]) / self.h**2
        return np.full((g.m_t - 2,) * (g.n - 1), d)


def _core(n):
    return (slice(1, -1),) * n


def _interior_div(U, wv, wt, h):
    n = U.ndim
    core = _core(n)
    c = U[core]
    out = np.zeros_like(c)
    wk = wt[1:-1]
    for ax in range(n - 1):
        plus = list(core)
        minus = list(core)
        plus[ax] = slice(2, None)
        minus[ax] = slice(None, -2)
        out += wk * (U[tuple(plus)] - 2 * c + U[tuple(minus)])
    up = U[core[:-1] + (slice(2, None),)]
    down = U[core[:-1] + (slice(None, -2),)]
    out += wv[1:] * (up - c) - wv[:-1] * (c - down)
    return out / h**2


def _bottom_div(U, wv0, wt0, h):
    n = U.ndim
    tcore = _core(n - 1)
    c = U[tcore + (0,)]
    out = np.zeros_like(c)
    for ax in range(n - 1):
        plus = list(tcore)
        minus = list(tcore)
        plus[ax] = slice(2, None)
        minus[ax] = slice(None, -2)
        out += wt0 * (U[tuple(plus) + (0,)] - 2 * c + U[tuple(minus) + (0,)])
    out += 2 * wv0 * (U[tcore + (1,)] - c)
    return out / h**2


def apply_operator(u: ScalarField, rule: WeightRule = "harmonic") -> ScalarField:
    """Residual div(x_n^a grad u) at interior nodes (zero on boundary nodes)."""
    st = Stencil(u.grid, u.a, rule)
    out = np.zeros(u.grid.shape)
    out[_core(u.grid.n)] = st.interior(u.values)
    return ScalarField(u.grid, u.a, out, {"kind": "residual", "rule": rule})


def boundary_flux(u: ScalarField, extrapolate: bool = False, rule: WeightRule = "harmonic") -> np.ndarray:
    """One-sided estimate of lim x_n^a du/dx_n on the bottom row.

    ``w_{1/2} (u(., h) - u(., 0)) / h``.  With ``extrapolate`` the rows h and
    2h are combined by Richardson extrapolation with exponent min(2, 1 + a).
    """
    g = u.grid
    h = g.h
    U = u.values
    w1 = vertical_weights(u.a, h, 2, rule)[0]
    f1 = w1 * (U[..., 1] - U[..., 0]) / h
    if not extrapolate:
        return f1
    w2 = vertical_weights(u.a, 2 * h, 2, rule)[0]
    f2 = w2 * (U[..., 2] - U[..., 0]) / (2 * h)
    p = min(2.0, 1.0 + u.a)
    return (2**p * f1 - f2) / (2**p - 1)


class PreconditionError(ValueError):
    pass


def even_reflection_residual(u: ScalarField, rule: WeightRule = "harmonic") -> float:
    """Seam residual of the even reflection of a zero-flux field.

    The field is mirrored across x_n = 0 and the |x_n|^a stencil is applied
    on the doubled grid; the max residual over rows -1, 0, 1 is returned
    relative to ``max(diag) * max|u|``.
    """
    if not u.meta.get("zero_flux", False):
        flux = boundary_flux(u, rule=rule)
        scale = max(1.0, float(np.max(np.abs(u.values))))
        if np.max(np.abs(flux)) > 1e-8 * scale:
            raise PreconditionError("field does not have zero weighted flux on x_n = 0")
    g = u.grid
    U = u.values
    D = np.concatenate([U[..., :0:-1], U], axis=-1)
    st = Stencil(g, u.a, rule)
    wv = np.concatenate([st.wv[::-1], st.wv])
    wt = np.concatenate([st.wt[:0:-1], st.wt])
    res = _interior_div(D, wv, wt, g.h)
    mid = g.m_v - 2  # doubled row 0 in the interior block
    seam = res[..., mid - 1 : mid + 2]
    diag = (2 * (g.n - 1) * wt[1:-1] + wv[1:] + wv[:-1]) / g.h**2
    scale = float(np.max(diag[mid - 1 : mid + 2])) * max(float(np.max(np.abs(U))), 1e-300)
    return float(np.max(np.abs(seam)) / scale)


def weighted_div_fd(func: Callable[[np.ndarray], np.ndarray], points, a: float, h: float) -> np.ndarray:
    """Pointwise centered flux-form estimate of div(y_n^a grad f) at ``points``.

    Midpoint weights; every sample must stay in y_n > 0, so points need
    y_n > h / 2 at least (y_n >= h in practice).
    """
    pts = np.asarray(points, dtype=float)
    n = pts.shape[-1]
    if np.any(pts[..., -1] - h <= 0):
        raise ValueError("finite-difference probes must satisfy y_n > h")
    f0 = func(pts)
    yn = pts[..., -1]
    out = np.zeros_like(f0)
    for i in range(n):
        e = np.zeros(n)
        e[i] = h
        fp = func(pts + e)
        fm = func(pts - e)
        if i < n - 1:
            w = yn**a
            out += w * (fp - 2 * f0 + fm)
        else:
            out += (yn + h / 2) ** a * (fp - f0) - (yn - h / 2) ** a * (f0 - fm)
    return out / h**2


def warn_if_outside_neumann_window(a: float, n: int) -> None:
    if not max(-1.0, 2.0 - n) < a < 1:
        warnings.warn(
            f"a={a} is outside the weighted-Neumann window (max(-1, 2-n), 1); results untested",
            stacklevel=3,
        )
