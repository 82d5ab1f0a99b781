"""Moving-sphere comparison scans and end-to-end uniqueness experiments.

A scan measures w_{x,lam} = u - u_{x,lam} outside the ball B_lam(x) for a
batch of boundary-centered inversions.  For the classified families
C y_n^{1-a} + 1 (a > 2-n), C y_n^{1-a} - 1 (a < 2-n) and C y_n^{1-a} with
the logarithmic transform (a = 2-n), w stays nonnegative; a scan is a
certificate for the sampled maps and probes, not a proof.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Literal, Sequence

import numpy as np
from scipy.interpolate import RegularGridInterpolator
from scipy.stats import qmc

from .grid import BoundaryDatum, HalfSpaceGrid, ScalarField, constant
from .solver import FamilyFit, SolveConfig, SolveReport, fit_family, solve
from .transform import MoebiusMap, kelvin

Function = Callable[[np.ndarray], np.ndarray]


@dataclass
class ScanReport:
    per_map_min: list[float]
    global_min: float
    violations: list[tuple[int, list[float], float]] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "per_map_min": self.per_map_min,
            "global_min": self.global_min,
            "violations": [{"map": i, "point": p, "w": w} for i, p, w in self.violations],
        }


def family(a: float, n: int, c_star: float = 1.0) -> Function:
    """The nonnegative-w family member for exponent a in dimension n."""
    offset = 1.0 if a > 2 - n else (-1.0 if a < 2 - n else 0.0)
    if a >= 1:
        c_star = 0.0

    def u(y):
        y = np.asarray(y, dtype=float)
        with np.errstate(divide="ignore"):
            base = y[..., -1] ** (1 - a) if c_star else 0.0
        return c_star * base + offset

    return u


def field_function(u: ScalarField, method: str = "linear") -> Function:
    """Interpolate a grid field; points outside the grid raise."""
    interp = RegularGridInterpolator(tuple(u.grid.axes()), u.values, method=method, bounds_error=True)
    return lambda y: interp(np.asarray(y, dtype=float))


def comparison_field(u: Function, m: MoebiusMap, a: float, probe) -> np.ndarray:
    """w_{x,lam}(y) = u(y) - u_{x,lam}(y) on probe points outside the closed ball."""
    probe = np.asarray(probe, dtype=float)
    _, r2 = m.offset(probe)
    if np.any(r2 <= m.radius**2):
        raise ValueError("probe points must lie strictly outside the ball B_lam(x)")
    if np.any(probe[..., -1] <= 0):
        raise ValueError("probe points must lie in the open half space")
    return u(probe) - kelvin(u, m, a)(probe)


def moving_sphere_scan(
    u: Function | ScalarField,
    a: float,
    maps: Sequence[MoebiusMap],
    probe: np.ndarray | Callable[[MoebiusMap, int], np.ndarray],
    tol: float = 1e-12,
    max_violations: int = 20,
) -> ScanReport:
    """Minimum of w_{x,lam} per map over the probe set.

    ``probe`` is either one point array shared by all maps or a callable
    producing the probe set for ``(map, index)``.
    """
    if isinstance(u, ScalarField):
        u = field_function(u)
    per_map = []
    violations = []
    for i, m in enumerate(maps):
        pts = probe(m, i) if callable(probe) else probe
        w = comparison_field(u, m, a, pts)
        per_map.append(float(np.min(w)))
        bad = np.flatnonzero(w < -tol)
        for j in bad[: max(0, max_violations - len(violations))]:
            violations.append((i, np.asarray(pts)[j].tolist(), float(w[j])))
    return ScanReport(per_map, float(min(per_map)), violations)


def random_maps(count: int, n: int, rng: np.random.Generator, span: float = 2.0,
                radius_range: tuple[float, float] = (0.05, 2.0)) -> list[MoebiusMap]:
    """Centers uniform in [-span, span]^{n-1}; radii log-uniform in ``radius_range``."""
    lo, hi = radius_range
    maps = []
    for _ in range(count):
        c = rng.uniform(-span, span, n - 1)
        lam = math.exp(rng.uniform(math.log(lo), math.log(hi)))
        maps.append(MoebiusMap.at(c, lam))
    return maps


def exterior_probes(m: MoebiusMap, count: int, rng: np.random.Generator, reach: float = 4.0,
                    n_quasi: int = 100, min_ratio: float = 1.0 + 1e-6) -> np.ndarray:
    """Probe points outside B_lam(x) within radius ``reach * lam``.

    A tensor grid in (distance, direction) plus ``n_quasi`` scrambled Halton
    points, so symmetric grids do not hide a violation.
    """
    n = m.n
    lam = m.radius
    n_quasi = min(n_quasi, count)
    n_grid = count - n_quasi
    sampler = qmc.Halton(d=n - 1 + 1, scramble=True, seed=rng)
    q = sampler.random(n_quasi)
    pts_q = _polar_points(m, lam * (min_ratio + (reach - min_ratio) * q[:, 0]), q[:, 1:])
    if n_grid <= 0:
        return pts_q
    k = max(2, int(round(n_grid ** (1 / n))))
    radii = lam * np.geomspace(min_ratio, reach, k)
    ang = (np.arange(k) + 0.5) / k
    mesh = np.meshgrid(radii, *([ang] * (n - 1)), indexing="ij")
    flat = np.column_stack([g.reshape(-1) for g in mesh])
    stride = max(1, len(flat) // n_grid)
    flat = flat[::stride][:n_grid]
    pts_g = _polar_points(m, flat[:, 0], flat[:, 1:])
    return np.vstack([pts_g, pts_q])


def _polar_points(m: MoebiusMap, rho, unit):
    """Points x + rho * omega with omega in the open upper hemisphere from unit-cube coords."""
    n = m.n
    c = np.asarray(m.center)
    if n == 2:
        th = np.pi * np.clip(unit[:, 0], 1e-9, 1 - 1e-9)
        omega = np.column_stack([np.cos(th), np.sin(th)])
    else:
        cos_polar = np.clip(unit[:, 0], 1e-9, 1.0)  # uniform on the hemisphere
        sin_polar = np.sqrt(1 - cos_polar**2)
        phi = 2 * np.pi * unit[:, 1]
        omega = np.column_stack([sin_polar * np.cos(phi), sin_polar * np.sin(phi), cos_polar])
    return c + rho[:, None] * omega


def tangential_variation(u: ScalarField) -> float:
    """max over heights of the tangential spread, relative to the field range."""
    vals = u.values
    flat = vals.reshape(-1, vals.shape[-1])
    spread = float(np.max(flat.max(axis=0) - flat.min(axis=0)))
    rng = float(vals.max() - vals.min())
    return spread / rng if rng > 0 else 0.0


@dataclass
class ExperimentResult:
    scenario: str
    a: float
    fit: FamilyFit
    variation: float
    scan: ScanReport
    solve_report: SolveReport
    field: ScalarField

    def to_dict(self) -> dict:
        return {
            "scenario": self.scenario,
            "a": self.a,
            "n": self.field.grid.n,
            "grid": self.field.grid.to_dict(),
            **self.fit.to_dict(),
            "tangential_variation": self.variation,
            "scan_global_min": self.scan.global_min,
            **self.solve_report.to_dict(),
        }


def field_scan_maps(grid: HalfSpaceGrid, count: int, rng: np.random.Generator) -> list[MoebiusMap]:
    """Maps whose probe shells fit inside the truncated grid (lambda in [h, L/2])."""
    L = grid.L
    lam_hi = min(L / 2, grid.H / 3)
    lam_lo = min(grid.h * 4, lam_hi / 2)
    maps = []
    for _ in range(count):
        lam = math.exp(rng.uniform(math.log(lam_lo), math.log(lam_hi)))
        c = rng.uniform(-(L - 1.5 * lam), L - 1.5 * lam, grid.n - 1)
        maps.append(MoebiusMap.at(c, lam))
    return maps


def uniqueness_experiment(
    scenario: Literal["dirichlet", "neumann"],
    a: float,
    grid: HalfSpaceGrid,
    cfg: SolveConfig | None = None,
    c_star: float = 1.0,
    c2: float = 1.0,
    n_maps: int = 10,
    n_probes: int = 200,
    seed: int = 0,
) -> ExperimentResult:
    """Solve with data from a family member, then fit, measure and scan.

    dirichlet: every face carries c_star x_n^{1-a} + c2.
    neumann:   zero weighted flux on x_n = 0, the constant c2 elsewhere.
    """
    n = grid.n
    if scenario == "dirichlet":
        cs = 0.0 if a >= 1 else c_star
        data = BoundaryDatum.dirichlet_from(lambda p: cs * p[..., -1] ** (1 - a) + c2)
    elif scenario == "neumann":
        if not max(-1.0, 2.0 - n) < a < 1:
            raise ValueError(f"neumann scenario needs max(-1, 2-n) < a < 1, got a={a}")
        data = BoundaryDatum.neumann(0.0, c2)
    else:
        raise ValueError(f"unknown scenario {scenario!r}")
    u, rep = solve(grid, a, data, cfg)
    fit = fit_family(u)
    var = tangential_variation(u)
    rng = np.random.default_rng(seed)
    maps = field_scan_maps(grid, n_maps, rng)
    interp = field_function(u)

    def probe(m, i):
        pts = exterior_probes(m, n_probes, rng, reach=1.5, min_ratio=1.05)
        return pts[pts[:, -1] >= grid.h]

    scan = moving_sphere_scan(interp, a, maps, probe, tol=np.inf)
    return ExperimentResult(scenario, a, fit, var, scan, rep, u)
