"""Closed-form kernels for div(x_n^a grad u) on the upper half space.

All kernels are written as functions of a tangential offset ``x'`` (shape
``(..., n-1)``) and a height ``x_n > 0``.  The families are

* ``poisson``  -- x_n^{1-a} / (|x'|^2 + x_n^2)^{(n-a)/2}, Dirichlet extension kernel
* ``riesz``    -- 1 / (|x'|^2 + x_n^2)^{(n-alpha)/2}
* ``gluck``    -- x_n^beta / (|x'|^2 + x_n^2)^{(n-alpha)/2}
* ``gamma_d``  -- x_n^{1-a} / |x|^{n-a}  (same function as ``poisson``)
* ``gamma_n``  -- 1 / |x|^{n-2+a}
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal

import numpy as np
from scipy import integrate, special

KernelKind = Literal["poisson", "riesz", "gluck", "gamma_d", "gamma_n"]
KINDS = ("poisson", "riesz", "gluck", "gamma_d", "gamma_n")
SUPPORTED_DIMS = (2, 3)


class DomainError(ValueError):
    """Raised when a point lies outside the open half space."""


class NonNormalizableError(ValueError):
    """Raised when the boundary integral of a kernel diverges."""


@dataclass(frozen=True)
class WeightExponent:
    """The exponent ``a`` of the weight x_n^a, with its regime flags."""

    a: float

    def __post_init__(self):
        if not math.isfinite(self.a):
            raise ValueError(f"weight exponent must be finite, got {self.a!r}")

    @property
    def integrable(self) -> bool:
        return self.a < 1

    def neumann_valid(self, n: int) -> bool:
        return max(-1.0, 2.0 - n) < self.a < 1

    def special(self, n: int) -> bool:
        return self.a == 2 - n

    @property
    def frac_order(self) -> float:
        return (1.0 - self.a) / 2.0


@dataclass(frozen=True)
class KernelSpec:
    kind: KernelKind
    n: int
    a: float | None = None
    alpha: float | None = None
    beta: float | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown kernel kind {self.kind!r}")
        if self.n not in SUPPORTED_DIMS:
            raise ValueError(f"dimension must be one of {SUPPORTED_DIMS}, got {self.n}")
        n = self.n
        if self.kind in ("poisson", "gamma_d", "gamma_n"):
            if self.a is None or not math.isfinite(self.a):
                raise ValueError(f"{self.kind} kernel needs a finite exponent a")
            if self.kind == "poisson" and not self.a < 1:
                raise ValueError(f"poisson kernel requires a < 1, got a={self.a}")
        elif self.kind == "riesz":
            # 0 < alpha < n keeps the kernel decaying; the extension operator
            # itself further requires alpha in (1, n), checked in extension.
            if self.alpha is None or not 0 < self.alpha < n:
                raise ValueError(f"riesz kernel requires 0 < alpha < n, got alpha={self.alpha}")
        else:
            al, be = self.alpha, self.beta
            if al is None or be is None:
                raise ValueError("gluck kernel needs alpha and beta")
            if not (be >= 0 and 0 < al + be < n - be):
                raise ValueError(
                    f"gluck kernel requires beta >= 0 and 0 < alpha+beta < n-beta, "
                    f"got alpha={al}, beta={be}, n={n}"
                )

    @classmethod
    def poisson(cls, a, n):
        return cls("poisson", n, a=a)

    @classmethod
    def riesz(cls, alpha, n):
        return cls("riesz", n, alpha=alpha)

    @classmethod
    def gluck(cls, alpha, beta, n):
        return cls("gluck", n, alpha=alpha, beta=beta)

    @classmethod
    def gamma_d(cls, a, n):
        return cls("gamma_d", n, a=a)

    @classmethod
    def gamma_n(cls, a, n):
        return cls("gamma_n", n, a=a)

    def to_dict(self) -> dict:
        d = {"kind": self.kind, "n": self.n}
        for key in ("a", "alpha", "beta"):
            val = getattr(self, key)
            if val is not None:
                d[key] = val
        return d


def _split(spec: KernelSpec, xprime, xn):
    xprime = np.asarray(xprime, dtype=float)
    if xprime.ndim == 0:
        xprime = xprime[None]
    if xprime.shape[-1] != spec.n - 1:
        if spec.n == 2:
            xprime = xprime[..., None]
        else:
            raise ValueError(f"tangential point must have {spec.n - 1} components")
    xn = np.asarray(xn, dtype=float)
    if np.any(~(xn > 0)):
        raise DomainError("kernels are evaluated at x_n > 0 only")
    rho2 = np.sum(xprime * xprime, axis=-1)
    return rho2, xn


def eval_kernel(spec: KernelSpec, xprime, xn):
    """Evaluate the kernel at tangential offset ``xprime`` and height ``xn``.

    Broadcasts over leading axes; returns a float for scalar input.
    """
    rho2, xn = _split(spec, xprime, xn)
    r2 = rho2 + xn * xn
    n = spec.n
    if spec.kind in ("poisson", "gamma_d"):
        a = spec.a
        val = xn ** (1 - a) * r2 ** (-(n - a) / 2)
    elif spec.kind == "riesz":
        val = r2 ** (-(n - spec.alpha) / 2)
    elif spec.kind == "gluck":
        val = xn**spec.beta * r2 ** (-(n - spec.alpha) / 2)
    else:
        val = r2 ** (-(n - 2 + spec.a) / 2)
    return val[()] if np.ndim(val) == 0 else val


def eval_kernel_at(spec: KernelSpec, points):
    """Evaluate at full half-space points of shape ``(..., n)``."""
    points = np.asarray(points, dtype=float)
    return eval_kernel(spec, points[..., :-1], points[..., -1])


def sphere_measure(dim: int) -> float:
    """Surface measure of the unit sphere S^{dim-1} in R^dim (2 for dim=1)."""
    return 2 * math.pi ** (dim / 2) / math.gamma(dim / 2)


def _poisson_mass_closed(a: float, n: int) -> float:
    return math.pi ** ((n - 1) / 2) * math.gamma((1 - a) / 2) / math.gamma((n - a) / 2)


def _poisson_mass_quad(a: float, n: int) -> float:
    # radial reduction, then r = t / (1 - t) maps [0, inf) onto [0, 1)
    p = (n - a) / 2

    def integrand(t):
        s = 1.0 - t
        r = t / s
        return r ** (n - 2) * (1 + r * r) ** (-p) / (s * s)

    val, _ = integrate.quad(integrand, 0.0, 1.0, epsabs=0.0, epsrel=1e-12, limit=400)
    return sphere_measure(n - 1) * val


def kernel_normalization(spec: KernelSpec, method: str = "closed") -> float:
    """Integral of the kernel over the boundary hyperplane at x_n = 1.

    Only the Dirichlet (poisson / gamma_d) kernels with a < 1 have a finite
    mass; everything else raises :class:`NonNormalizableError`.  ``method``
    selects the Gamma-function closed form or adaptive quadrature.
    """
    if spec.kind not in ("poisson", "gamma_d"):
        raise NonNormalizableError(f"{spec.kind} kernel has divergent boundary mass")
    if not spec.a < 1:
        raise NonNormalizableError(f"boundary mass diverges for a={spec.a} >= 1")
    if method == "closed":
        return _poisson_mass_closed(spec.a, spec.n)
    if method == "quadrature":
        return _poisson_mass_quad(spec.a, spec.n)
    raise ValueError(f"unknown method {method!r}")


def poisson_mass(a: float, n: int) -> float:
    return kernel_normalization(KernelSpec.poisson(a, n))


def kernel_identity_gluck(a: float, b: float, points, n: int = 3) -> float:
    """Max |x_n^b E_{a,1-a-b} - Gamma_d| over ``points`` of shape (m, n)."""
    gluck = KernelSpec.gluck(alpha=a, beta=1 - a - b, n=n)
    gamma_d = KernelSpec.gamma_d(a, n)
    points = np.asarray(points, dtype=float)
    xn = points[:, -1]
    lhs = xn**b * eval_kernel_at(gluck, points)
    rhs = eval_kernel_at(gamma_d, points)
    return float(np.max(np.abs(lhs - rhs)))


def neumann_flux_constant(a: float, n: int) -> float:
    """Limit of x_n^a d/dx_n of the unnormalized E_{2-a} extension per unit f.

    Equals -(n-2+a) * int_{R^{n-1}} (1+|z|^2)^{-(n+a)/2} dz.
    """
    if not a > -1:
        raise ValueError("flux constant requires a > -1")
    mass = math.pi ** ((n - 1) / 2) * math.gamma((1 + a) / 2) / math.gamma((n + a) / 2)
    return -(n - 2 + a) * mass


def extension_constant(s: float) -> float:
    """d_s with -lim t^a du/dt = d_s (-Delta)^s f for the mass-one extension."""
    return 2 ** (1 - 2 * s) * special.gamma(1 - s) / special.gamma(s)
