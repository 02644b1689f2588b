"""Exponential decay of the reflection coefficient for analytic sech data.

    python scripts/reflection_decay.py --amplitude 0.93 --scale 0.25 --lam 0.5

For sech data the closed form |b| = |sin(pi A L / eps)| / cosh(pi lam L / eps)
is printed next to the computed value, so the sweep doubles as a check.
"""
import argparse
import json
import math

from zswkb import direct, output
from zswkb.fits import decay_fit
from zswkb.potentials import PotentialSpec


def closed_form(A, L, lam, eps):
    b = abs(math.sin(math.pi * A * L / eps)) / math.cosh(math.pi * lam * L / eps)
    return b / math.sqrt(1 - b * b)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--amplitude", type=float, default=0.93)
    ap.add_argument("--scale", type=float, default=0.25)
    ap.add_argument("--lam", type=float, default=0.5)
    ap.add_argument("--eps", default="0.2,0.1,0.05,0.025")
    ap.add_argument("--out", default="results/reflection")
    args = ap.parse_args()
    spec = PotentialSpec.make("sech-scaled", amplitude=args.amplitude, scale=args.scale)
    eps_list = [float(e) for e in args.eps.split(",")]
    rows = []
    for eps, absR, logR in direct.reflection_sweep(spec, args.lam, eps_list):
        rows.append({"epsilon": eps, "abs_R": absR, "log_abs_R": logR,
                     "closed_form": closed_form(args.amplitude, args.scale, args.lam, eps)})
    fit = decay_fit(eps_list, [r["abs_R"] for r in rows])
    output.write_outputs(args.out, "reflection", rows, ("epsilon", "abs_R", "log_abs_R", "closed_form"))
    print(json.dumps({"rows": rows, "fit": fit.to_json()}))


if __name__ == "__main__":
    main()
