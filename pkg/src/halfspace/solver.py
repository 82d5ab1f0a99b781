"""Discrete boundary-value problems for div(x_n^a grad u) = 0.

After the Dirichlet nodes are eliminated the system is the minimizer of the
weighted Dirichlet energy sum_e w_e (u_i - u_j)^2, symmetric positive
definite, and is solved matrix-free by Jacobi-preconditioned conjugate
gradients.  A weighted-Neumann bottom is imposed through a half-cell row at
x_n = 0 (the natural boundary condition of that energy).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Literal

import numpy as np

from .discrete import Stencil, WeightRule, warn_if_outside_neumann_window
from .grid import BoundaryDatum, HalfSpaceGrid, ScalarField

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class SolveConfig:
    tolerance: float = 1e-10
    max_iterations: int | None = None
    preconditioner: Literal["none", "diagonal"] = "diagonal"
    rule: WeightRule = "harmonic"

    def __post_init__(self):
        if not self.tolerance > 0:
            raise ValueError(f"tolerance must be positive, got {self.tolerance}")
        if self.max_iterations is not None and self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if self.preconditioner not in ("none", "diagonal"):
            raise ValueError(f"unknown preconditioner {self.preconditioner!r}")


@dataclass
class SolveReport:
    iterations: int
    residual: float
    residual_history: list[float]
    energy_history: list[float]
    converged: bool
    residual_l2: float = float("nan")
    residual_linf: float = float("nan")
    max_principle_ok: bool | None = None
    max_principle_violation: float | None = None

    def to_dict(self) -> dict:
        return {
            "iterations": self.iterations,
            "residual": self.residual,
            "residual_l2": self.residual_l2,
            "residual_linf": self.residual_linf,
            "converged": self.converged,
            "max_principle_ok": self.max_principle_ok,
            "max_principle_violation": self.max_principle_violation,
        }


class ConvergenceError(RuntimeError):
    def __init__(self, message, history):
        super().__init__(message)
        self.history = history


@dataclass
class FamilyFit:
    c_star: float
    c2: float
    residual: float
    degenerate: bool = False

    def to_dict(self) -> dict:
        return {"c_star": self.c_star, "c2": self.c2, "fit_residual": self.residual, "degenerate": self.degenerate}


def _dot(x, y):
    # np.sum reduces pairwise in a fixed order; BLAS dot may not
    return float(np.sum(x * y))


class _System:
    """Matrix-free operator on the unknown nodes of one boundary problem."""

    def __init__(self, grid: HalfSpaceGrid, a: float, data: BoundaryDatum, rule: WeightRule):
        self.grid = grid
        self.data = data
        self.st = Stencil(grid, a, rule)
        self.neumann = data.kind == "neumann"
        self.core = (slice(1, -1),) * grid.n
        self.bcore = (slice(1, -1),) * (grid.n - 1) + (0,)
        if self.neumann:
            self.flux = data.bottom_flux(grid)[(slice(1, -1),) * (grid.n - 1)]
        self.unknown = np.zeros(grid.shape, dtype=bool)
        self.unknown[self.core] = True
        if self.neumann:
            self.unknown[self.bcore] = True

    def residual(self, U):
        """Volume-scaled residual of the full field on unknown nodes."""
        r = np.zeros(self.grid.shape)
        r[self.core] = self.st.interior(U)
        if self.neumann:
            r[self.bcore] = 0.5 * self.st.bottom_row(U) - self.flux / self.grid.h
        return r

    def matvec(self, P):
        """A P for P vanishing on Dirichlet nodes; A = -(volume-scaled operator)."""
        r = np.zeros(self.grid.shape)
        r[self.core] = -self.st.interior(P)
        if self.neumann:
            r[self.bcore] = -0.5 * self.st.bottom_row(P)
        return r

    def diagonal(self):
        d = np.ones(self.grid.shape)
        d[self.core] = self.st.diagonal_interior()
        if self.neumann:
            d[self.bcore] = 0.5 * self.st.diagonal_bottom()
        return d


def solve(
    grid: HalfSpaceGrid,
    a: float,
    data: BoundaryDatum,
    cfg: SolveConfig | None = None,
    x0: np.ndarray | float | None = None,
) -> tuple[ScalarField, SolveReport]:
    """Solve div(x_n^a grad u) = 0 on the truncated grid.

    ``x0`` overrides the initial guess on unknown nodes (default: mean of the
    Dirichlet data).  Raises :class:`ConvergenceError` if the relative
    residual does not reach ``cfg.tolerance`` within the iteration cap.
    """
    cfg = cfg or SolveConfig()
    if data.lateral_top is None:
        raise ValueError("pure-Neumann data is rejected: at least one Dirichlet face is required")
    if data.kind == "neumann":
        if not a > -1:
            raise ValueError(f"weighted-Neumann bottom requires a > -1, got a={a}")
        warn_if_outside_neumann_window(a, grid.n)
    sysm = _System(grid, a, data, cfg.rule)
    UD, dmask = data.dirichlet_values(grid)
    unk = sysm.unknown

    # right-hand side for a zero initial guess, used to normalize residuals
    bnorm = float(np.sqrt(_dot(*(2 * [sysm.residual(UD)[unk]]))))
    bnorm = bnorm if bnorm > 0 else 1.0

    U = UD.copy()
    if x0 is None:
        U[unk] = float(np.mean(UD[dmask]))
    else:
        U[unk] = np.broadcast_to(np.asarray(x0, dtype=float), grid.shape)[unk]

    max_it = cfg.max_iterations or 10 * grid.m_t * grid.m_v
    r = sysm.residual(U)
    dinv = 1.0 / sysm.diagonal() if cfg.preconditioner == "diagonal" else np.ones(grid.shape)
    dinv[~unk] = 0.0
    r[~unk] = 0.0

    # track the correction x = U - U_start so energy = -(x.b + x.r)/2
    r0 = r.copy()
    X = np.zeros(grid.shape)
    rel = float(np.sqrt(_dot(r, r))) / bnorm
    history = [rel]
    energy = [0.0]
    it = 0
    if rel > cfg.tolerance:
        z = dinv * r
        p = z.copy()
        rz = _dot(r, z)
        while it < max_it:
            Ap = sysm.matvec(p)
            pAp = _dot(p, Ap)
            if pAp <= 0:
                break
            alpha = rz / pAp
            X += alpha * p
            r -= alpha * Ap
            it += 1
            rel = float(np.sqrt(_dot(r, r))) / bnorm
            history.append(rel)
            energy.append(-0.5 * (_dot(X, r0) + _dot(X, r)))
            if rel <= cfg.tolerance:
                break
            z = dinv * r
            rz_new = _dot(r, z)
            p = z + (rz_new / rz) * p
            rz = rz_new
    U += X
    converged = rel <= cfg.tolerance
    if not converged:
        raise ConvergenceError(
            f"conjugate gradients stopped at relative residual {rel:.3e} after {it} iterations", history
        )
    final = sysm.residual(U)[unk]
    report = SolveReport(
        iterations=it,
        residual=rel,
        residual_history=history,
        energy_history=energy,
        converged=True,
        residual_l2=float(np.sqrt(_dot(final, final))) / bnorm,
        residual_linf=float(np.max(np.abs(final))) if final.size else 0.0,
    )
    meta = {"bottom": data.kind, "zero_flux": data.zero_flux, "tolerance": cfg.tolerance, "rule": cfg.rule}
    u = ScalarField(grid, a, U, meta)
    ok, viol = max_principle_check(u, data, cfg.tolerance)
    report.max_principle_ok, report.max_principle_violation = ok, viol
    log.debug("solve: %d iterations, relative residual %.3e", it, rel)
    return u, report


def max_principle_check(u: ScalarField, data: BoundaryDatum, tolerance: float | None = None) -> tuple[bool, float]:
    """Check min(data) - tol <= u <= max(data) + tol on every node.

    ``tol = 10 * tolerance * range(data)``; ``tolerance`` defaults to the one
    the field was solved with.  Returns the flag and the worst violation.
    """
    tolerance = tolerance if tolerance is not None else u.meta.get("tolerance", 1e-10)
    vals, mask = data.dirichlet_values(u.grid)
    dv = vals[mask]
    lo, hi = float(dv.min()), float(dv.max())
    tol = 10 * tolerance * (hi - lo)
    over = float(np.max(u.values - hi))
    under = float(np.max(lo - u.values))
    worst = max(over, under, 0.0)
    return worst <= tol, worst


def fit_family(u: ScalarField) -> FamilyFit:
    """Least-squares fit of u to c_star * x_n^{1-a} + c2 over all nodes.

    The residual is the L-infinity deviation relative to max|u|.  At a = 1
    the basis degenerates and everything is absorbed by the constant.
    """
    g = u.grid
    if g.m_v < 2:
        raise ValueError("fit needs at least two distinct heights")
    xn = np.broadcast_to(g.vertical_axis(), g.shape).reshape(-1)
    vals = u.values.reshape(-1)
    if u.a == 1:
        c2 = float(np.mean(vals))
        model = np.full_like(vals, c2)
        c_star, degenerate = 0.0, True
    else:
        with np.errstate(divide="ignore"):
            basis = xn ** (1 - u.a)
        if not np.all(np.isfinite(basis)):
            # a > 1: x_n^{1-a} blows up on the bottom row, fit above it
            keep = np.isfinite(basis)
            basis, vals_fit = basis[keep], vals[keep]
        else:
            keep = slice(None)
            vals_fit = vals
        A = np.column_stack([basis, np.ones_like(basis)])
        (c_star, c2), *_ = np.linalg.lstsq(A, vals_fit, rcond=None)
        model = np.full_like(vals, np.nan)
        model[keep] = A @ np.array([c_star, c2])
        vals = np.where(np.isnan(model), np.nan, vals)
        c_star, c2, degenerate = float(c_star), float(c2), False
    scale = float(np.nanmax(np.abs(vals))) or 1.0
    resid = float(np.nanmax(np.abs(vals - model))) / scale
    return FamilyFit(c_star, c2, resid, degenerate)
