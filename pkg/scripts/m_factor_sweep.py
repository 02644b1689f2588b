"""Convergence of the exact-WKB factor m(eps) to its leading value for two turning-point pairs.

    python scripts/m_factor_sweep.py

The same-factor pair is the real pair of sech data at lambda = i/2 (m -> -1);
the opposite-factor pair is a complex pair of Gaussian data at lambda = 1
(m -> +1).
"""
import argparse
import json

from zswkb import exact_wkb as ew, geometry as g, output
from zswkb.fits import order_fit
from zswkb.potentials import PotentialSpec


def sweep(spec, lam, a, b, eps_list, **kw):
    rows = []
    for eps in eps_list:
        mf = ew.m_factor(spec, lam, eps, a, b, **kw)
        rows.append({"pair": spec.family, "epsilon": eps, "re_m": mf.m.real, "im_m": mf.m.imag,
                     "delta": mf.delta, "deviation": mf.deviation})
    return rows


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--eps", default="0.2,0.1,0.05,0.025,0.0125")
    ap.add_argument("--out", default="results/m_factor")
    args = ap.parse_args()
    eps_list = [float(e) for e in args.eps.split(",")]
    sech = PotentialSpec.make("sech-scaled")
    a, b = g.find_turning_points(sech, 0.5j, (-3, 3, -1.5, 1.5))
    rows = sweep(sech, 0.5j, a, b, eps_list, radius=0.5)
    gauss = PotentialSpec.make("gaussian-tail")
    tps = g.find_turning_points(gauss, 1.0, (-3, 3, 0.2, 1.9))
    rows += sweep(gauss, 1.0, tps[1], tps[2], eps_list, radius=0.35, offset=0.6)
    fits = {}
    for fam in ("sech-scaled", "gaussian-tail"):
        sub = [r for r in rows if r["pair"] == fam]
        fits[fam] = order_fit([r["epsilon"] for r in sub], [r["deviation"] for r in sub]).to_json()
    output.write_outputs(args.out, "m_factor", rows, tuple(rows[0]))
    print(json.dumps({"fits": fits}))


if __name__ == "__main__":
    main()
