"""Fractional Laplacian of a Gaussian: flux limit of the extension vs the Fourier integral."""

import argparse

from halfspace.extension import BoundaryFunction, fourier_oracle, fractional_laplacian


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--s", type=float, nargs="+", default=[0.1, 0.25, 0.5, 0.75, 0.9])
    p.add_argument("--x", type=float, nargs="+", default=[0.0, 0.5, 1.0, 2.0])
    p.add_argument("--h", type=float, nargs="+", default=[0.1, 0.05, 0.025])
    p.add_argument("--width", type=float, default=1.0)
    args = p.parse_args()

    f = BoundaryFunction.gaussian(1, width=args.width)
    print(f"{'s':>5} {'x':>5} {'oracle':>12} " + " ".join(f"{'rel err h=' + str(h):>16}" for h in args.h) + "  flags")
    for s in args.s:
        for x in args.x:
            ref = fourier_oracle(f, s, [x])
            errs, flags = [], []
            for h in args.h:
                lim = fractional_laplacian(f, s, [x], h=h)
                errs.append(abs(lim.value - ref) / max(abs(ref), 1e-300))
                flags.append("L" if lim.low_confidence else ".")
            row = " ".join(f"{e:16.2e}" for e in errs)
            print(f"{s:5.2f} {x:5.2f} {ref:12.6f} {row}  {''.join(flags)}")
    print("flags: L = low-confidence extrapolation at that h")


if __name__ == "__main__":
    main()
