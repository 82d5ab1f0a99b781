"""Moving-sphere scans for the solution families, plus one sign-changing counterexample.

For u = c y_n^{1-a} +- 1 (and the logarithmic case a = 2 - n) the comparison
function w = u - u_{x,lam} stays nonnegative outside every ball.  The
solution u = y_1 is unbounded below, and the scan finds negative w at once.
"""

import argparse

import numpy as np

from halfspace.liouville import exterior_probes, family, moving_sphere_scan, random_maps


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--maps", type=int, default=50)
    p.add_argument("--probes", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    args = p.parse_args()

    rng = np.random.default_rng(args.seed)
    cases = [(3, 0.0), (3, 0.5), (2, 0.5), (2, -1.0), (3, -1.5), (2, 0.0), (3, -1.0)]
    print(f"{'n':>2} {'a':>6} {'case':<8} {'global min w':>14} violations")
    for n, a in cases:
        tag = "log" if a == 2 - n else ("+1" if a > 2 - n else "-1")
        maps = random_maps(args.maps, n, rng)
        rep = moving_sphere_scan(family(a, n), a, maps, lambda m, i: exterior_probes(m, args.probes, rng))
        print(f"{n:>2} {a:>6.2f} {tag:<8} {rep.global_min:14.3e} {len(rep.violations)}")

    maps = random_maps(args.maps, 2, rng)
    rep = moving_sphere_scan(lambda y: y[..., 0], 0.5, maps, lambda m, i: exterior_probes(m, args.probes, rng))
    print(f"\nsign-changing u = y_1 (a=0.5, n=2): global min {rep.global_min:.3e}, "
          f"{sum(v < 0 for v in rep.per_map_min)}/{len(maps)} maps with negative w")


if __name__ == "__main__":
    main()
