"""Refinement study of the inversion intertwining identity.

Prints one row per (n, a, test function) with the residual at each step
and the fitted rate; optionally writes the records as JSON.
"""

import argparse
import json

from halfspace.experiments import invariance_battery


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--steps", type=float, nargs="+", default=[1 / 16, 1 / 32, 1 / 64, 1 / 128])
    p.add_argument("--radius", type=float, default=1.5)
    p.add_argument("--json", help="write records here")
    args = p.parse_args()

    recs = invariance_battery(steps=tuple(args.steps), radius=args.radius)
    head = "  ".join(f"h=1/{round(1 / h):<5d}" for h in args.steps)
    print(f"{'n':>2} {'a':>6} {'function':<10} {head}  rate")
    for r in recs:
        cols = "  ".join(f"{e:9.2e}" for e in r.residuals)
        print(f"{r.n:>2} {r.a:>6.2f} {r.function:<10} {cols}  {r.rate:.3f}")
    print(f"min rate {min(r.rate for r in recs):.3f}")
    if args.json:
        with open(args.json, "w") as fh:
            json.dump([r.to_dict() for r in recs], fh, indent=2, sort_keys=True)


if __name__ == "__main__":
    main()
