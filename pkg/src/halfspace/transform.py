"""Inversion through spheres centered on the boundary, and the Kelvin-type
transform that maps solutions of div(y_n^a grad u) = 0 to solutions.

For a center x on {y_n = 0} and radius lam,

    y^{x,lam} = x + lam^2 (y - x) / |y - x|^2
    u_{x,lam}(y) = (lam / |y - x|)^{n-2+a} u(y^{x,lam})            (a != 2-n)
    u_{x,lam}(y) = u(y^{x,lam}) + log(lam / |y - x|)               (a == 2-n)
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Literal

import numpy as np

from .discrete import weighted_div_fd

Function = Callable[[np.ndarray], np.ndarray]


class SingularityError(ValueError):
    """Evaluation at the inversion center."""


@dataclass(frozen=True)
class MoebiusMap:
    center: tuple[float, ...]
    radius: float

    def __post_init__(self):
        c = tuple(float(v) for v in self.center)
        object.__setattr__(self, "center", c)
        if len(c) < 2:
            raise ValueError("center needs at least two coordinates")
        if c[-1] != 0.0:
            raise ValueError(f"center must lie on the boundary x_n = 0, got {c}")
        if not self.radius > 0:
            raise ValueError(f"radius must be positive, got {self.radius}")

    @classmethod
    def at(cls, tangential, radius: float) -> "MoebiusMap":
        return cls(tuple(np.atleast_1d(tangential)) + (0.0,), radius)

    @property
    def n(self) -> int:
        return len(self.center)

    def offset(self, y) -> tuple[np.ndarray, np.ndarray]:
        y = np.asarray(y, dtype=float)
        d = y - np.asarray(self.center)
        r2 = np.sum(d * d, axis=-1)
        if np.any(r2 == 0):
            raise SingularityError("point coincides with the inversion center")
        return d, r2

    def invert(self, y) -> np.ndarray:
        d, r2 = self.offset(y)
        return np.asarray(self.center) + (self.radius**2 / r2)[..., None] * d

    def to_dict(self) -> dict:
        return {"center": list(self.center), "radius": self.radius}


def invert_point(m: MoebiusMap, y) -> np.ndarray:
    return m.invert(y)


@dataclass(frozen=True)
class TransformedFunction:
    base: Function
    map: MoebiusMap
    a: float
    variant: Literal["standard", "logarithmic"]

    def __call__(self, y) -> np.ndarray:
        m = self.map
        _, r2 = m.offset(y)
        ys = m.invert(y)
        if self.variant == "logarithmic":
            return self.base(ys) + 0.5 * np.log(m.radius**2 / r2)
        k = m.n - 2 + self.a
        return (m.radius**2 / r2) ** (k / 2) * self.base(ys)


def kelvin(u: Function, m: MoebiusMap, a: float) -> TransformedFunction:
    """Transform ``u``; the logarithmic variant is used iff a == 2 - n exactly."""
    variant = "logarithmic" if a == 2 - m.n else "standard"
    return TransformedFunction(u, m, a, variant)


def conformal_factor(m: MoebiusMap, y, a: float) -> np.ndarray:
    """(lam / |y - x|)^{n+2-a}, the factor relating the two operators."""
    _, r2 = m.offset(y)
    return (m.radius**2 / r2) ** ((m.n + 2 - a) / 2)


def _check_probe(m: MoebiusMap, probe, h):
    probe = np.asarray(probe, dtype=float)
    if probe.shape[-1] != m.n:
        raise ValueError(f"probe points must have {m.n} coordinates")
    if np.any(probe[..., -1] <= h):
        raise ValueError("probe must stay above the boundary: y_n > h")
    _, r2 = m.offset(probe)
    if np.any(np.sqrt(r2) <= 2 * h):
        raise ValueError("probe too close to the inversion center")
    ys = m.invert(probe)
    if np.any(ys[..., -1] <= h):
        raise ValueError("inverted probe falls within h of the boundary")
    return probe


def invariance_residual(u: Function, m: MoebiusMap, a: float, probe, h: float) -> np.ndarray:
    """LHS - RHS of the weighted-operator intertwining identity at ``probe``.

    LHS = div(y_n^a grad u_{x,lam})(y), RHS = (lam/|y-x|)^{n+2-a} div(y_n^a grad u)(y^{x,lam});
    both sides by centered flux-form differences of step h.  Holds for any
    smooth u, so the residual is O(h^2).
    """
    probe = _check_probe(m, probe, h)
    v = kelvin(u, m, a)
    lhs = weighted_div_fd(v, probe, a, h)
    rhs = conformal_factor(m, probe, a) * weighted_div_fd(u, m.invert(probe), a, h)
    return lhs - rhs


def _transformed_normal_derivative(u, grad, m: MoebiusMap, a: float, y):
    """d/dy_n of the standard transform through the chain rule, closed form."""
    d, r2 = m.offset(y)
    r = np.sqrt(r2)
    lam = m.radius
    n = m.n
    ys = m.invert(y)
    yn = y[..., -1]
    g = grad(ys)
    k = n - 2 + a
    if a == 2 - n:
        # log variant: d/dy_n [u(y*) + log(lam/r)]
        jac_n = lam**2 / r2 * g[..., -1] - 2 * lam**2 * yn / r2**2 * np.sum(g * d, axis=-1)
        return jac_n - yn / r2
    return (
        -k * lam**k * yn / r ** (n + a) * u(ys)
        + lam ** (n + a) / r ** (n + a) * g[..., -1]
        - 2 * lam ** (n + a) * yn / r ** (n + 2 + a) * np.sum(g * d, axis=-1)
    )


def central_gradient(u: Function, step: float = 1e-6) -> Function:
    """Gradient by centered differences; the normal step shrinks near y_n = 0."""

    def grad(y):
        y = np.asarray(y, dtype=float)
        n = y.shape[-1]
        out = np.empty(y.shape)
        for i in range(n):
            hs = np.full(y.shape[:-1], step)
            if i == n - 1:
                hs = np.minimum(hs, 0.5 * y[..., -1])
            e = np.zeros(y.shape)
            e[..., i] = hs
            out[..., i] = (u(y + e) - u(y - e)) / (2 * hs)
        return out

    return grad


@dataclass
class FluxCheck:
    value: float
    samples: np.ndarray
    heights: np.ndarray


def flux_invariance_check(
    u: Function,
    m: MoebiusMap,
    a: float,
    points,
    h: float = 1e-2,
    grad: Function | None = None,
    method: Literal["closed", "fd"] = "closed",
) -> FluxCheck:
    """Extrapolated lim_{y_n -> 0} y_n^a d/dy_n u_{x,lam} at boundary points.

    ``method="closed"`` differentiates the transform through the chain rule
    using ``grad`` (centered differences of u when omitted); ``method="fd"``
    takes centered differences (step 1e-3 y_n) of the transformed function.  Values
    at y_n in {h, h/2, h/4} are extrapolated assuming an expansion in
    y_n^{1+a} and y_n^{2+a}.  Returns the max |limit| over the points.
    """
    if not a > -1:
        raise ValueError("flux invariance requires a > -1")
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    if np.any(np.all(pts[:, :-1] == np.asarray(m.center[:-1]), axis=-1)):
        raise SingularityError("boundary probe sits at the inversion center")
    heights = h / np.array([1.0, 2.0, 4.0])
    samples = []
    v = kelvin(u, m, a)
    for t in heights:
        y = pts.copy()
        y[:, -1] = t
        if method == "closed":
            dn = _transformed_normal_derivative(u, grad or central_gradient(u), m, a, y)
        elif method == "fd":
            dt = 1e-3 * t
            up, dn_ = y.copy(), y.copy()
            up[:, -1] += dt
            dn_[:, -1] -= dt
            dn = (v(up) - v(dn_)) / (2 * dt)
        else:
            raise ValueError(f"unknown method {method!r}")
        samples.append(t**a * dn)
    samples = np.array(samples)
    p1, p2 = 1 + a, 2 + a
    V = np.column_stack([np.ones(3), heights**p1, heights**p2])
    limits = np.linalg.solve(V, samples)[0]
    return FluxCheck(float(np.max(np.abs(limits))), samples, heights)
