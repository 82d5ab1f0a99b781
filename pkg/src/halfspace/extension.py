"""Extension of boundary data into the half space by kernel quadrature.

Both extensions are radial convolutions around the target's tangential
position x', so they reduce to

    u(x', t) = int_0^inf K(r, t) r^{n-2} M_f(x', r) dr,

where M_f(x', r) integrates f over the sphere |y - x'| = r in R^{n-1} (two
points for n = 2, a circle for n = 3).  The radial integral is split at t
and 10 t, and at the shells where f changes, then handed to QUADPACK.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Literal

import numpy as np
from scipy import integrate
from scipy.interpolate import RegularGridInterpolator

from .discrete import weighted_div_fd
from .kernels import extension_constant, poisson_mass

Kind = Literal["gaussian", "bump", "constant", "sampled"]


@dataclass(frozen=True)
class DecayCertificate:
    """|f(y')| <= bound * (1 + |y'|)^(-rate); rate may be inf."""

    bound: float
    rate: float


@dataclass(frozen=True)
class BoundaryFunction:
    """Boundary data f on R^{n-1}.

    gaussian: amplitude * exp(-|y - center|^2 / width^2)
    bump:     amplitude * exp(1 - 1 / (1 - |y - center|^2 / width^2)), |y - center| < width
    constant: amplitude
    sampled:  linear interpolation of ``samples`` on ``axes``, zero outside
    """

    kind: Kind
    dim: int
    amplitude: float = 1.0
    width: float = 1.0
    center: tuple[float, ...] | None = None
    axes: tuple | None = field(default=None, compare=False)
    samples: np.ndarray | None = field(default=None, compare=False)

    def __post_init__(self):
        if self.kind not in ("gaussian", "bump", "constant", "sampled"):
            raise ValueError(f"unknown boundary function kind {self.kind!r}")
        if self.dim not in (1, 2):
            raise ValueError("boundary dimension must be 1 or 2")
        c = (0.0,) * self.dim if self.center is None else tuple(float(v) for v in np.atleast_1d(self.center))
        if len(c) != self.dim:
            raise ValueError("center dimension mismatch")
        object.__setattr__(self, "center", c)
        if self.kind in ("gaussian", "bump") and not self.width > 0:
            raise ValueError("width must be positive")
        if self.kind == "sampled":
            if self.axes is None or self.samples is None:
                raise ValueError("sampled boundary function needs axes and samples")
            interp = RegularGridInterpolator(
                tuple(np.asarray(ax, float) for ax in self.axes), np.asarray(self.samples, float),
                bounds_error=False, fill_value=0.0,
            )
            object.__setattr__(self, "_interp", interp)

    @classmethod
    def gaussian(cls, dim, amplitude=1.0, width=1.0, center=None):
        return cls("gaussian", dim, amplitude, width, center)

    @classmethod
    def bump(cls, dim, amplitude=1.0, width=1.0, center=None):
        return cls("bump", dim, amplitude, width, center)

    @classmethod
    def constant(cls, dim, value=1.0):
        return cls("constant", dim, value)

    @property
    def decay(self) -> DecayCertificate:
        if self.kind == "constant":
            return DecayCertificate(abs(self.amplitude), 0.0)
        if self.kind == "sampled":
            return DecayCertificate(float(np.max(np.abs(self.samples))), math.inf)
        return DecayCertificate(abs(self.amplitude), math.inf)

    def __call__(self, y) -> np.ndarray:
        y = np.asarray(y, dtype=float)
        if self.dim == 1 and (y.ndim == 0 or y.shape[-1] != 1):
            y = y[..., None]
        if self.kind == "constant":
            return np.full(y.shape[:-1], float(self.amplitude))
        if self.kind == "sampled":
            return self._interp(y)
        d2 = np.sum((y - np.asarray(self.center)) ** 2, axis=-1) / self.width**2
        if self.kind == "gaussian":
            return self.amplitude * np.exp(-d2)
        out = np.zeros_like(d2)
        inside = d2 < 1
        out[inside] = self.amplitude * np.exp(1 - 1 / (1 - d2[inside]))
        return out

    def shifted(self, offset) -> "BoundaryFunction":
        if self.kind == "sampled":
            axes = tuple(np.asarray(ax) + o for ax, o in zip(self.axes, np.atleast_1d(offset)))
            return BoundaryFunction("sampled", self.dim, axes=axes, samples=self.samples)
        c = tuple(np.asarray(self.center) + np.atleast_1d(offset))
        return BoundaryFunction(self.kind, self.dim, self.amplitude, self.width, c)

    def shells(self, xprime) -> list[float]:
        """Radii around ``xprime`` where f's structure changes (integration breakpoints)."""
        xprime = np.atleast_1d(np.asarray(xprime, float))
        if self.kind == "constant":
            return []
        if self.kind == "sampled":
            lo = np.array([ax[0] for ax in self.axes])
            hi = np.array([ax[-1] for ax in self.axes])
            far = float(np.linalg.norm(np.maximum(np.abs(lo - xprime), np.abs(hi - xprime))))
            # the interpolant kinks where a sphere touches a grid line
            kinks = {float(abs(v - x)) for ax, x in zip(self.axes, xprime) for v in np.asarray(ax, float)}
            return sorted(k for k in kinks if k < far) + [far]
        d = float(np.linalg.norm(xprime - np.asarray(self.center)))
        if self.kind == "bump":
            return [max(d - self.width, 0.0), d, d + self.width]
        w = self.width
        return [max(d - k * w, 0.0) for k in (6, 3, 1)] + [d] + [d + k * w for k in (1, 3, 6)]

    def support_radius(self, xprime) -> float:
        """Radius beyond which f is negligible (< 1e-16 * amplitude); inf if none."""
        if self.kind == "constant":
            return math.inf
        if self.kind == "sampled":
            return self.shells(xprime)[-1]
        d = float(np.linalg.norm(np.atleast_1d(xprime) - np.asarray(self.center)))
        if self.kind == "bump":
            return d + self.width
        return d + 6.1 * self.width

    def spherical_mean(self, xprime, r: float, rtol: float = 1e-13) -> float:
        """Integral of f over {|y - x'| = r} (counting measure for dim 1)."""
        xprime = np.atleast_1d(np.asarray(xprime, float))
        if self.dim == 1:
            return float(np.sum(self(np.stack([xprime + r, xprime - r]))))
        if r == 0:
            return 2 * math.pi * float(self(xprime))
        if self.kind == "constant":
            return 2 * math.pi * self.amplitude
        # periodic trapezoid, doubled until converged
        m = 32
        prev = None
        while True:
            th = 2 * math.pi * np.arange(m) / m
            pts = xprime + r * np.column_stack([np.cos(th), np.sin(th)])
            val = 2 * math.pi * float(np.mean(self(pts)))
            if prev is not None and abs(val - prev) <= rtol * max(abs(val), 1e-300) + 1e-300:
                return val
            if m >= 16384:
                return val
            prev = val
            m *= 2

    def to_dict(self) -> dict:
        d = {"kind": self.kind, "dim": self.dim, "amplitude": self.amplitude}
        if self.kind in ("gaussian", "bump"):
            d.update(width=self.width, center=list(self.center))
        return d


def _radial_integral(kernel, f: BoundaryFunction, xprime, t: float, n: int, tol: float) -> tuple[float, float]:
    def integrand(r):
        return kernel(r) * r ** (n - 2) * f.spherical_mean(xprime, r)

    support = f.support_radius(xprime)
    breaks = sorted({0.0, t, 10 * t, *f.shells(xprime)})
    if math.isfinite(support):
        breaks = [b for b in breaks if b < support] + [support]
    total = 0.0
    err = 0.0
    for lo, hi in zip(breaks[:-1], breaks[1:]):
        if hi <= lo:
            continue
        val, e = integrate.quad(integrand, lo, hi, epsabs=tol / 4, epsrel=1e-13, limit=200)
        total += val
        err += e
    if not math.isfinite(support):
        val, e = integrate.quad(integrand, breaks[-1], math.inf, epsabs=tol / 4, epsrel=1e-13, limit=200)
        total += val
        err += e
    return total, err


def _points(pts, n):
    pts = np.atleast_2d(np.asarray(pts, dtype=float))
    if pts.shape[-1] != n:
        raise ValueError(f"points must have {n} coordinates")
    if np.any(~(pts[:, -1] > 0)):
        raise ValueError("extension points need x_n > 0")
    return pts


def _map(fn, items, threads):
    if threads and threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            return list(ex.map(fn, items))
    return [fn(it) for it in items]


def _collect(pairs, with_error):
    vals = np.array([p[0] for p in pairs])
    if with_error:
        return vals, np.array([p[1] for p in pairs])
    return vals


def extend_dirichlet(f: BoundaryFunction, a: float, pts, tol: float = 1e-8, threads: int = 1,
                     with_error: bool = False):
    """Mass-one normalized P_a extension of ``f`` at half-space points.

    ``tol`` is the absolute quadrature target per point.  With ``with_error``
    the QUADPACK error estimates are returned as a second array.
    """
    n = f.dim + 1
    if not a < 1:
        raise ValueError(f"Dirichlet extension requires a < 1, got a={a}")
    if not f.decay.rate > a - 1:
        raise ValueError("decay certificate too weak for the P_a kernel")
    pts = _points(pts, n)
    mass = poisson_mass(a, n)
    p = (n - a) / 2

    def one(x):
        t = x[-1]
        kern = lambda r: t ** (1 - a) * (r * r + t * t) ** (-p)  # noqa: E731
        val, err = _radial_integral(kern, f, x[:-1], t, n, tol * mass)
        return val / mass, err / mass

    return _collect(_map(one, pts, threads), with_error)


def _check_neumann(f: BoundaryFunction, a: float):
    n = f.dim + 1
    alpha = 2 - a
    if not 1 < alpha < n:
        raise ValueError(f"Neumann extension needs alpha = 2 - a in (1, {n}), got alpha={alpha}")
    if not f.decay.rate > alpha:
        raise ValueError(f"decay certificate rate {f.decay.rate} must exceed alpha={alpha}")
    return n


def extend_neumann(f: BoundaryFunction, a: float, pts, tol: float = 1e-8, threads: int = 1,
                   with_error: bool = False):
    """Unnormalized E_{2-a} extension of ``f``; its weighted flux is proportional to f."""
    n = _check_neumann(f, a)
    pts = _points(pts, n)
    p = (n - 2 + a) / 2

    def one(x):
        t = x[-1]
        return _radial_integral(lambda r: (r * r + t * t) ** (-p), f, x[:-1], t, n, tol)

    return _collect(_map(one, pts, threads), with_error)


@dataclass(frozen=True)
class FracOrder:
    """Fractional order s together with the weight exponent a = 1 - 2 s."""

    s: float

    def __post_init__(self):
        if not 0 < self.s < 1:
            raise ValueError(f"fractional order must lie in (0, 1), got {self.s}")

    @classmethod
    def from_a(cls, a: float) -> "FracOrder":
        return cls((1 - a) / 2)

    @property
    def a(self) -> float:
        return 1 - 2 * self.s


@dataclass
class FluxLimit:
    value: float
    error_estimate: float
    low_confidence: bool
    samples: np.ndarray
    heights: np.ndarray

    def to_dict(self) -> dict:
        return {"value": self.value, "error_estimate": self.error_estimate, "low_confidence": self.low_confidence}


def _extrapolate(heights, samples, p1, p2, rtol):
    V = np.column_stack([np.ones(3), heights**p1, heights**p2])
    full = float(np.linalg.solve(V, samples)[0])
    # two finest levels, first-order term only
    t1, t2 = heights[1], heights[2]
    g1, g2 = samples[1], samples[2]
    two = float((g2 * t1**p1 - g1 * t2**p1) / (t1**p1 - t2**p1))
    err = abs(full - two)
    return full, err, err > rtol * max(abs(full), 1e-12)


def fractional_laplacian(
    f: BoundaryFunction, s: FracOrder | float, xprime, h: float = 0.05, tol: float = 1e-12, rtol: float = 1e-2
) -> FluxLimit:
    """(-Delta)^s f(x') as the weighted normal-flux limit of the Dirichlet extension.

    The one-sided difference (1-a) (u(x', t) - f(x')) / t^{1-a} estimates
    t^a du/dt; it is sampled at t in {h, h/2, h/4}, extrapolated in t^{1+a}
    and t^2, negated and divided by the extension constant d_s.
    """
    s = s if isinstance(s, FracOrder) else FracOrder(s)
    a = s.a
    xprime = np.atleast_1d(np.asarray(xprime, float))
    heights = h / np.array([1.0, 2.0, 4.0])
    pts = np.column_stack([np.tile(xprime, (3, 1)), heights])
    u = extend_dirichlet(f, a, pts, tol=tol)
    f0 = float(f(xprime))
    g = (1 - a) * (u - f0) / heights ** (1 - a)
    lim, err, low = _extrapolate(heights, g, 1 + a, 2.0, rtol)
    d = extension_constant(s.s)
    return FluxLimit(-lim / d, err / d, low, g, heights)


def neumann_flux(f: BoundaryFunction, a: float, xprime, h: float = 0.05, tol: float = 1e-12) -> FluxLimit:
    """lim t^a du/dt of the E_{2-a} extension at x', by differentiating the kernel."""
    n = _check_neumann(f, a)
    xprime = np.atleast_1d(np.asarray(xprime, float))
    heights = h / np.array([1.0, 2.0, 4.0])
    p = (n + a) / 2
    g = []
    for t in heights:
        val, _ = _radial_integral(lambda r: (r * r + t * t) ** (-p), f, xprime, t, n, tol / t ** (1 + a))
        g.append(-(n - 2 + a) * t ** (1 + a) * val)
    g = np.array(g)
    lim, err, low = _extrapolate(heights, g, 1 + a, 2.0, 1e-2)
    return FluxLimit(lim, err, low, g, heights)


def extension_residual(extend, f: BoundaryFunction, a: float, probe, h: float = 1 / 64,
                       tol: float = 1e-14) -> np.ndarray:
    """div(x_n^a grad u) of an extension at ``probe``, Richardson-combined.

    Centered flux-form differences at steps h and h/2 are combined as
    (4 R(h/2) - R(h)) / 3, cancelling the h^2 truncation term.
    """
    n = f.dim + 1

    def u(p):
        p = np.asarray(p, dtype=float)
        return extend(f, a, p.reshape(-1, n), tol=tol).reshape(p.shape[:-1])

    r1 = weighted_div_fd(u, probe, a, h)
    r2 = weighted_div_fd(u, probe, a, h / 2)
    return (4 * r2 - r1) / 3


def fourier_oracle(f: BoundaryFunction, s: FracOrder | float, xprime, tol: float = 1e-10) -> float:
    """(-Delta)^s f(x') = (1/2pi) int |xi|^{2s} fhat(xi) e^{i xi x'} dxi for a 1D Gaussian."""
    s = s if isinstance(s, FracOrder) else FracOrder(s)
    if f.kind != "gaussian":
        raise NotImplementedError("the Fourier oracle needs a Gaussian (closed-form transform)")
    if f.dim != 1:
        raise NotImplementedError("the Fourier oracle covers a one-dimensional boundary (n = 2) only")
    A, w, c = f.amplitude, f.width, f.center[0]
    dx = float(np.atleast_1d(xprime)[0]) - c
    # fhat(xi) = A w sqrt(pi) exp(-w^2 xi^2 / 4); even integrand -> cosine transform
    top = 24.0 / w

    def integrand(xi):
        return xi ** (2 * s.s) * math.exp(-((w * xi) ** 2) / 4) * math.cos(xi * dx)

    val, _ = integrate.quad(integrand, 0.0, top, epsabs=tol, epsrel=tol, limit=400)
    return A * w * math.sqrt(math.pi) * val / math.pi
