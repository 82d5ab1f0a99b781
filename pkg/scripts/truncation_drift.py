"""Lateral truncation error of the discrete Dirichlet problem.

Bottom data is a Gaussian.  The truncation faces get either the exact
extension (quadrature) or zero; the drift at fixed probe points is the
difference between the two solves as the box grows.
"""

import argparse

import numpy as np

from halfspace.extension import BoundaryFunction, extend_dirichlet
from halfspace.grid import BoundaryDatum, HalfSpaceGrid
from halfspace.liouville import field_function
from halfspace.solver import solve


def run(a, L, h, f, probe):
    g = HalfSpaceGrid.from_spacing(2, L, 2 * L, h)

    def exact_faces(p):
        out = np.zeros(len(p))
        up = p[:, -1] > 0
        out[up] = extend_dirichlet(f, a, p[up], tol=1e-10)
        out[~up] = f(p[~up, :-1])
        return out

    zero_faces = BoundaryDatum("dirichlet", lambda p: f(p[:, :-1]), lambda p: np.where(p[:, -1] == 0, f(p[:, :-1]), 0.0))
    u_exact, _ = solve(g, a, BoundaryDatum.dirichlet_from(exact_faces))
    u_zero, _ = solve(g, a, zero_faces)
    ref = extend_dirichlet(f, a, probe, tol=1e-12)
    e_exact = np.max(np.abs(field_function(u_exact)(probe) - ref))
    e_zero = np.max(np.abs(field_function(u_zero)(probe) - ref))
    return e_exact, e_zero


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--a", type=float, nargs="+", default=[-0.5, 0.0, 0.5])
    p.add_argument("--L", type=float, nargs="+", default=[1.0, 2.0, 4.0, 8.0])
    p.add_argument("--h", type=float, default=1 / 16)
    args = p.parse_args()

    f = BoundaryFunction.gaussian(1, width=0.5)
    probe = np.array([[0.0, 0.25], [0.0, 0.5], [0.5, 0.5]])
    print(f"{'a':>6} {'L':>5} {'err exact faces':>16} {'err zero faces':>16}")
    for a in args.a:
        for L in args.L:
            e1, e0 = run(a, L, args.h, f, probe)
            print(f"{a:6.2f} {L:5.1f} {e1:16.3e} {e0:16.3e}")


if __name__ == "__main__":
    main()
