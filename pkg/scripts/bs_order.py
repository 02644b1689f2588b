"""Order of the Bohr-Sommerfeld residual at direct eigenvalues for a compactly supported bump.

    python scripts/bs_order.py --eps 0.1,0.05,0.025,0.0125 --out results/bs_order

Writes one row per eigenvalue and prints the fitted log-log slope of the
largest residual per epsilon.
"""
import argparse
import json

import numpy as np

from zswkb import direct, output, wkb_real as wr
from zswkb.fits import order_fit
from zswkb.potentials import PotentialSpec


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--eps", default="0.1,0.05,0.025,0.0125")
    ap.add_argument("--floor", type=float, default=0.25, help="lowest height kept, as a fraction of A_max")
    ap.add_argument("--out", default="results/bs_order")
    args = ap.parse_args()
    spec = PotentialSpec.make("spline-bump")
    eps_list = [float(e) for e in args.eps.split(",")]
    rows, worst = [], []
    for eps in eps_list:
        recs = direct.locate_eigenvalues(spec, eps, (-0.5, 0.5, args.floor * spec.a_max, 1.05 * spec.a_max))
        mus = sorted((r.lam.imag for r in recs), reverse=True)
        res = wr.bs_residuals(spec, eps, mus)
        rows += [{"epsilon": eps, "n": n, "mu": m, "residual": float(r)} for n, (m, r) in enumerate(zip(mus, res))]
        worst.append(float(np.max(res)))
    fit = order_fit(eps_list, worst)
    output.write_outputs(args.out, "residuals", rows, ("epsilon", "n", "mu", "residual"))
    print(json.dumps({"max_residual": dict(zip(map(str, eps_list), worst)), "fit": fit.to_json()}))


if __name__ == "__main__":
    main()
