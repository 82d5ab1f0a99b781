"""Reusable experiment batteries shared by the CLI, scripts and tests."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .discrete import apply_operator
from .grid import BoundaryDatum, HalfSpaceGrid, ScalarField
from .kernels import KernelSpec, eval_kernel_at
from .transform import MoebiusMap, invariance_residual

DEFAULT_STEPS = (1 / 32, 1 / 64, 1 / 128)


def _sin_exp(y):
    return np.sin(y[..., 0]) * np.exp(y[..., -1]) + y[..., -1] ** 2


def _rational(y):
    return 1.0 / (1.0 + np.sum(y * y, axis=-1)) + y[..., 0] * y[..., -1]


def _cos_cubic(y):
    return np.cos(y[..., 0] - y[..., -1]) * y[..., -1] ** 3 + np.exp(-np.sum(y[..., :-1] ** 2, axis=-1))


# none of these solve div(y_n^a grad u) = 0 for any a
TEST_FUNCTIONS = {"sin_exp": _sin_exp, "rational": _rational, "cos_cubic": _cos_cubic}


def convergence_rate(steps, errors) -> float:
    """Slope of log(error) against log(step); inf when every error is at round-off."""
    errors = np.asarray(errors, dtype=float)
    if np.all(errors <= 1e-13):
        return float("inf")
    return float(np.polyfit(np.log(steps), np.log(np.maximum(errors, 1e-300)), 1)[0])


def invariance_probe(n: int, count: int = 27) -> np.ndarray:
    """Tensor probe in [0.5, 1.5]^{n-1} x [0.6, 1.4], away from center and boundary."""
    k = max(2, int(round(count ** (1 / n))))
    t = np.linspace(0.5, 1.5, k)
    v = np.linspace(0.6, 1.4, k)
    mesh = np.meshgrid(*([t] * (n - 1) + [v]), indexing="ij")
    return np.column_stack([g.reshape(-1) for g in mesh])


@dataclass
class InvarianceRecord:
    n: int
    a: float
    function: str
    map: MoebiusMap
    steps: tuple[float, ...]
    residuals: list[float]
    rate: float

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "a": self.a,
            "function": self.function,
            "map": self.map.to_dict(),
            "h": list(self.steps),
            "residual_linf": self.residuals,
            "rate": self.rate,
        }


def invariance_battery(dims=(2, 3), exponents=None, steps=DEFAULT_STEPS, radius: float = 1.5) -> list[InvarianceRecord]:
    """Residual of the intertwining identity under refinement for every test function.

    ``exponents`` defaults to (-0.5, 0, 0.5, 2 - n) per dimension.
    """
    out = []
    for n in dims:
        exps = exponents if exponents is not None else (-0.5, 0.0, 0.5, 2.0 - n)
        m = MoebiusMap.at([0.3] * (n - 1), radius)
        probe = invariance_probe(n)
        for a in exps:
            for name, fn in TEST_FUNCTIONS.items():
                res = [float(np.max(np.abs(invariance_residual(fn, m, a, probe, h)))) for h in steps]
                out.append(InvarianceRecord(n, a, name, m, tuple(steps), res, convergence_rate(steps, res)))
    return out


def kernel_residual_rate(kind: str, a: float, n: int, steps=(1 / 8, 1 / 16, 1 / 32)) -> tuple[float, list[float]]:
    """apply_operator residual of Gamma_d / Gamma_n on [0.5, 1]^{n-1} x [0.5, 1].

    The probe box excludes the origin; grids cover [-1, 1]^{n-1} x [0, 2].
    ``kind="log"`` uses -log|x|, the a = 2-n replacement for Gamma_n (which
    degenerates to the constant 1 there).
    """
    if kind == "log":
        if a != 2 - n:
            raise ValueError("the logarithmic kernel belongs to a = 2 - n")
        kernel = lambda p: -0.5 * np.log(np.sum(p * p, axis=-1))  # noqa: E731
    else:
        spec = KernelSpec(kind, n, a=a)
        kernel = lambda p: eval_kernel_at(spec, p)  # noqa: E731
    errs = []
    for h in steps:
        g = HalfSpaceGrid.from_spacing(n, 1.0, 2.0, h)
        pts = g.points()
        vals = np.zeros(len(pts))
        away = np.sum(pts * pts, axis=-1) > 0
        upper = pts[:, -1] > 0
        ok = away & upper
        vals[ok] = kernel(pts[ok])
        u = ScalarField(g, a, vals.reshape(g.shape))
        res = apply_operator(u).values
        c = g.coords()
        box = np.all((c >= 0.5 - 1e-12) & (c <= 1.0 + 1e-12), axis=-1)
        errs.append(float(np.max(np.abs(res[box]))))
    return convergence_rate(steps, errs), errs


def random_smooth_data(n: int, rng: np.random.Generator, modes: int = 4, amplitude: float = 1.0) -> BoundaryDatum:
    """Dirichlet data from a random trigonometric sum on every face."""
    k = rng.normal(size=(modes, n))
    phase = rng.uniform(0, 2 * np.pi, modes)
    coef = amplitude * rng.normal(size=modes) / modes

    def f(p):
        p = np.asarray(p, dtype=float)
        return np.sum(coef * np.cos(p @ k.T + phase), axis=-1)

    return BoundaryDatum.dirichlet_from(f)
