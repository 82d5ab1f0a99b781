"""Truncated half-space grids, fields on them, and boundary data."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Literal

import numpy as np

from .kernels import SUPPORTED_DIMS

PointFunction = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class HalfSpaceGrid:
    """Vertex-centered grid on [-L, L]^{n-1} x [0, H] with uniform spacing h.

    Arrays living on the grid have shape ``(m_t,) * (n-1) + (m_v,)``; the
    last axis is the height x_n and row 0 sits exactly on x_n = 0.
    """

    n: int
    L: float
    H: float
    m_t: int
    m_v: int

    def __post_init__(self):
        if self.n not in SUPPORTED_DIMS:
            raise ValueError(f"dimension must be one of {SUPPORTED_DIMS}, got {self.n}")
        if self.m_t < 3 or self.m_v < 3:
            raise ValueError("grid needs at least 3 nodes per axis")
        if not (self.L > 0 and self.H > 0):
            raise ValueError("grid extents must be positive")
        ht = 2 * self.L / (self.m_t - 1)
        hv = self.H / (self.m_v - 1)
        if not math.isclose(ht, hv, rel_tol=1e-12):
            raise ValueError(
                f"spacing mismatch: 2L/(m_t-1)={ht} but H/(m_v-1)={hv}; the grid is uniform"
            )

    @classmethod
    def from_spacing(cls, n: int, L: float, H: float, h: float) -> "HalfSpaceGrid":
        m_t = round(2 * L / h) + 1
        m_v = round(H / h) + 1
        return cls(n, L, H, m_t, m_v)

    @property
    def h(self) -> float:
        return self.H / (self.m_v - 1)

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.m_t,) * (self.n - 1) + (self.m_v,)

    @property
    def size(self) -> int:
        return int(np.prod(self.shape))

    def tangential_axis(self) -> np.ndarray:
        return np.linspace(-self.L, self.L, self.m_t)

    def vertical_axis(self) -> np.ndarray:
        return np.arange(self.m_v) * self.h

    def axes(self) -> list[np.ndarray]:
        return [self.tangential_axis()] * (self.n - 1) + [self.vertical_axis()]

    def coords(self) -> np.ndarray:
        """Node coordinates, shape ``grid.shape + (n,)``."""
        return np.stack(np.meshgrid(*self.axes(), indexing="ij"), axis=-1)

    def points(self) -> np.ndarray:
        """Node coordinates flattened row-major, shape ``(size, n)``."""
        return self.coords().reshape(-1, self.n)

    def interior_mask(self) -> np.ndarray:
        mask = np.zeros(self.shape, dtype=bool)
        mask[(slice(1, -1),) * self.n] = True
        return mask

    def bottom_mask(self) -> np.ndarray:
        mask = np.zeros(self.shape, dtype=bool)
        mask[..., 0] = True
        return mask

    def truncation_mask(self) -> np.ndarray:
        """Lateral faces plus the top face (the artificial boundary)."""
        mask = np.zeros(self.shape, dtype=bool)
        for ax in range(self.n - 1):
            idx = [slice(None)] * self.n
            for end in (0, -1):
                idx[ax] = end
                mask[tuple(idx)] = True
        mask[..., -1] = True
        return mask

    def to_dict(self) -> dict:
        return {"n": self.n, "L": self.L, "H": self.H, "m_t": self.m_t, "m_v": self.m_v, "h": self.h}


@dataclass
class ScalarField:
    """Nodal values of u on a grid, tagged with the weight exponent a."""

    grid: HalfSpaceGrid
    a: float
    values: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != self.grid.shape:
            raise ValueError(f"values shape {self.values.shape} != grid shape {self.grid.shape}")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("field values must be finite")

    @classmethod
    def from_function(cls, grid: HalfSpaceGrid, a: float, func: PointFunction, **meta) -> "ScalarField":
        vals = np.asarray(func(grid.points()), dtype=float).reshape(grid.shape)
        return cls(grid, a, vals, dict(meta))

    def _check(self, other: "ScalarField"):
        if other.grid != self.grid:
            raise TypeError("fields live on different grids")
        if other.a != self.a:
            raise TypeError(f"cannot combine fields with exponents a={self.a} and a={other.a}")

    def __add__(self, other):
        if isinstance(other, ScalarField):
            self._check(other)
            return ScalarField(self.grid, self.a, self.values + other.values)
        return ScalarField(self.grid, self.a, self.values + other)

    def __sub__(self, other):
        if isinstance(other, ScalarField):
            self._check(other)
            return ScalarField(self.grid, self.a, self.values - other.values)
        return ScalarField(self.grid, self.a, self.values - other)

    def __mul__(self, scalar):
        if isinstance(scalar, ScalarField):
            raise TypeError("fields multiply by scalars only")
        return ScalarField(self.grid, self.a, self.values * scalar)

    __rmul__ = __mul__


@dataclass
class BoundaryDatum:
    """Boundary data for the truncated problem.

    ``bottom`` gives u on x_n = 0 for ``dirichlet`` and the weighted flux
    lim x_n^a du/dx_n for ``neumann``.  ``lateral_top`` supplies Dirichlet
    values on the truncation faces.  All callables take points ``(m, n)``.
    """

    kind: Literal["dirichlet", "neumann"]
    bottom: PointFunction | None
    lateral_top: PointFunction | None

    def __post_init__(self):
        if self.kind not in ("dirichlet", "neumann"):
            raise ValueError(f"unknown boundary kind {self.kind!r}")

    @classmethod
    def dirichlet_from(cls, func: PointFunction) -> "BoundaryDatum":
        """Dirichlet data on every face taken from one function."""
        return cls("dirichlet", func, func)

    @classmethod
    def neumann(cls, flux: PointFunction | float, lateral_top: PointFunction | float) -> "BoundaryDatum":
        return cls("neumann", _as_function(flux), _as_function(lateral_top))

    @property
    def zero_flux(self) -> bool:
        return self.kind == "neumann" and getattr(self.bottom, "constant", None) == 0.0

    def dirichlet_mask(self, grid: HalfSpaceGrid) -> np.ndarray:
        mask = grid.truncation_mask()
        if self.kind == "dirichlet":
            mask |= grid.bottom_mask()
        return mask

    def dirichlet_values(self, grid: HalfSpaceGrid) -> tuple[np.ndarray, np.ndarray]:
        """Full-shape array holding Dirichlet values (zero elsewhere) and its mask."""
        if self.lateral_top is None:
            raise ValueError("at least one Dirichlet face is required; lateral/top data missing")
        mask = self.dirichlet_mask(grid)
        pts = grid.coords()
        vals = np.zeros(grid.shape)
        trunc = grid.truncation_mask()
        vals[trunc] = np.asarray(self.lateral_top(pts[trunc]), dtype=float)
        if self.kind == "dirichlet":
            if self.bottom is None:
                raise ValueError("dirichlet bottom data missing")
            bot = grid.bottom_mask() & ~trunc
            vals[bot] = np.asarray(self.bottom(pts[bot]), dtype=float)
        return vals, mask

    def bottom_flux(self, grid: HalfSpaceGrid) -> np.ndarray:
        """Weighted flux on the bottom row, shape ``grid.shape[:-1]``."""
        if self.kind != "neumann":
            raise ValueError("bottom flux only exists for neumann data")
        pts = grid.coords()[..., 0, :]
        return np.asarray(self.bottom(pts.reshape(-1, grid.n)), dtype=float).reshape(grid.shape[:-1])


class _Constant:
    def __init__(self, c: float):
        self.constant = float(c)

    def __call__(self, pts):
        pts = np.asarray(pts)
        return np.full(pts.shape[:-1], self.constant)

    def __repr__(self):
        return f"constant({self.constant})"


def constant(c: float) -> PointFunction:
    return _Constant(c)


def _as_function(f):
    if callable(f):
        return f
    return _Constant(f)


def write_field_csv(path, u: ScalarField) -> None:
    """Write ``x1,...,xn,u`` rows in grid row-major order, full precision."""
    pts = u.grid.points()
    vals = u.values.reshape(-1)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow([f"x{i + 1}" for i in range(u.grid.n)] + ["u"])
        for p, v in zip(pts, vals):
            writer.writerow([repr(float(c)) for c in p] + [repr(float(v))])


def read_field_csv(path, grid: HalfSpaceGrid, a: float) -> ScalarField:
    data = np.loadtxt(Path(path), delimiter=",", skiprows=1, ndmin=2)
    if data.shape != (grid.size, grid.n + 1):
        raise ValueError(f"csv has shape {data.shape}, expected {(grid.size, grid.n + 1)}")
    if not np.allclose(data[:, :-1], grid.points(), rtol=0, atol=1e-12 * max(grid.L, grid.H)):
        raise ValueError("csv node coordinates do not match the grid")
    return ScalarField(grid, a, data[:, -1].reshape(grid.shape))
