"""End-to-end acceptance checks at their stated tolerances.

Each test records one PASS/FAIL line through the ``criterion`` fixture; the
lines are printed in the terminal summary.  Asymptotic statements are
checked through fitted orders and limits, never through fitted constants.
"""
import math

import numpy as np
import pytest

from zswkb import direct, exact_wkb as ew, geometry as g, wkb_real as wr
from zswkb.fits import decay_fit, linear_fit, order_fit
from zswkb.potentials import PotentialSpec

SECH = PotentialSpec.make("sech-scaled")
SPLINE = PotentialSpec.make("spline-bump")
GAUSS = PotentialSpec.make("gaussian-tail")


def _sorted_heights(recs):
    return sorted((r.lam.imag for r in recs), reverse=True)


def test_c1_exact_spectrum(criterion):
    worst_direct = worst_bs = 0.0
    for eps in (0.4, 0.2, 0.1):
        exact = [1 - (n + 0.5) * eps for n in range(int(1 / eps) + 1)]
        exact = [e for e in exact if e > 0.02]
        recs = direct.locate_eigenvalues(SECH, eps, (-0.5, 0.5, 0.02, 1.1))
        got = _sorted_heights(recs)
        assert len(got) == len(exact), eps
        worst_direct = max(worst_direct, max(abs(a - b) for a, b in zip(got, exact)),
                           max(abs(r.lam.real) for r in recs))
        bs = wr.bs_eigenvalues(SECH, eps, mu_min=0.01)
        assert [r.n for r in bs] == list(range(len(exact)))
        worst_bs = max(worst_bs, max(abs(r.lam - 1j * e) for r, e in zip(bs, exact)))
    ok = criterion("C1 exact spectrum", worst_direct <= 1e-6 and worst_bs <= 1e-8,
                   f"direct max err {worst_direct:.2e} (<=1e-6), BS-real max err {worst_bs:.2e} (<=1e-8)")
    assert ok


def test_c2_bohr_sommerfeld_order(criterion):
    eps_list = (0.1, 0.05, 0.025, 0.0125)
    floor = 0.25 * SPLINE.a_max
    worst = []
    for eps in eps_list:
        recs = direct.locate_eigenvalues(SPLINE, eps, (-0.5, 0.5, floor, 1.05 * SPLINE.a_max))
        mus = _sorted_heights(recs)
        worst.append(float(np.max(wr.bs_residuals(SPLINE, eps, mus))))
    fit = order_fit(eps_list, worst)
    ok = criterion("C2 Bohr-Sommerfeld order", fit.slope >= 1.5 - 0.15 and fit.r2 >= 0.98,
                   f"residual slope {fit.slope:.3f} (>=1.35), R^2 {fit.r2:.4f} (>=0.98); max residuals "
                   + ", ".join(f"{w:.2e}" for w in worst))
    assert ok


# no eigenvalue of the sech family sits on 0.1 or 0.9 for these epsilons
COUNT_EPS = (0.18, 0.09, 0.045, 0.0225)


@pytest.mark.parametrize("spec", [SECH, SPLINE], ids=["sech", "spline"])
def test_c3_counting(spec, criterion):
    a = spec.a_max
    lines = []
    ok = True
    for eps in COUNT_EPS:
        recs = direct.locate_eigenvalues(spec, eps, (-0.5 * a, 0.5 * a, 0.1 * a, 0.9 * a))
        est = wr.count_eigenvalues(spec, eps, 0.1 * a, 0.9 * a).estimate
        ok &= abs(len(recs) - est) <= 1
        lines.append(f"{len(recs)}/{est:.2f}")
    criterion(f"C3 counting ({spec.family})", ok, "N_direct/estimate at eps " + ", ".join(
        f"{e}: {s}" for e, s in zip(COUNT_EPS, lines)))
    assert ok


def test_c4_reflection_decay(criterion):
    eps_list = (0.2, 0.1, 0.05, 0.025)
    decaying = PotentialSpec.make("sech-scaled", amplitude=0.93, scale=0.25)
    rows = direct.reflection_sweep(decaying, 0.5, eps_list)
    fit = decay_fit(eps_list, [r[1] for r in rows])
    free = direct.reflection_sweep(SECH, 0.5, eps_list)
    worst_free = max(r[1] for r in free)
    ok = criterion("C4 reflection decay", fit.slope < 0 and fit.r2 >= 0.99 and worst_free <= 1e-8,
                   f"log|R| vs 1/eps slope {fit.slope:.3f}, R^2 {fit.r2:.4f}; "
                   f"reflectionless max |R| {worst_free:.1e} (<=1e-8)")
    assert ok


@pytest.mark.parametrize("spec", [SECH, GAUSS, SPLINE], ids=["sech", "gaussian", "spline"])
def test_c5_norming_constants(spec, criterion):
    eps = 0.1
    a = spec.a_max
    recs = direct.locate_eigenvalues(spec, eps, (-0.5 * a, 0.5 * a, 0.1 * a, 1.1 * a))
    recs.sort(key=lambda r: -r.lam.imag)
    worst = 0.0
    for n, r in enumerate(recs):
        gamma = direct.norming_constant(spec, r, eps)
        worst = max(worst, abs(gamma - (-1) ** n))
    ok = criterion(f"C5 norming constants ({spec.family})", bool(recs) and worst <= 1e-6,
                   f"{len(recs)} eigenvalues, max |gamma - (-1)^n| {worst:.1e} (<=1e-6)")
    assert ok


@pytest.fixture(scope="module")
def sech2x_arcs():
    return g.sech2x_arcs(PotentialSpec.make("sech2x-phase"))


def test_c6_sech2x_geometry(sech2x_arcs, criterion):
    spec = PotentialSpec.make("sech2x-phase")
    eps = 0.05
    ends = max(abs(a.ends["start"] - g.lambda_double(a.ends["sigma"], a.ends["tau"])) for a in sech2x_arcs)
    junction = [abs(a.ends["end"].imag) for a in sech2x_arcs]
    meet = float(np.mean(junction))
    recs = direct.locate_eigenvalues(spec, eps, (-0.6, 0.6, 0.02, 0.95))
    lams = np.array([r.lam for r in recs])
    worst, used = 0.0, 0
    # eigenvalues live in the upper half plane; the conjugate arcs carry their mirror images
    for arc in (a for a in sech2x_arcs if a.ends["start"].imag > 0):
        for r in g.quantize_on_arc(spec, arc, eps):
            # the pair next to the junction merges with the axis branch
            if abs(r.lam - arc.ends["end"]) < eps:
                continue
            worst = max(worst, float(np.min(np.abs(lams - r.lam))))
            used += 1
    ok = criterion("C6 sech2x geometry",
                   ends <= 1e-6 and all(abs(j - 0.28) <= 0.01 for j in junction) and used > 0
                   and worst <= 0.05 * eps,
                   f"arc ends {ends:.1e} from double points (<=1e-6), junction Im {meet:.5f} (0.28+-0.01), "
                   f"{used} BS-arc points within {worst:.2e} of direct (<={0.05 * eps:.1e})")
    assert ok


EWKB_EPS = (0.2, 0.1, 0.05, 0.025)


@pytest.fixture(scope="module")
def sech_pair():
    return g.find_turning_points(SECH, 0.5j, (-3, 3, -1.5, 1.5))


def test_c7_exact_wkb_asymptotics(sech_pair, criterion):
    a, b = sech_pair
    de, do = [], []
    for eps in EWKB_EPS:
        sr = ew.sector_symbol(SECH, 0.5j, eps, b, radius=0.5, toward=a.x)
        de.append(abs(sr.w_even - 1))
        do.append(abs(sr.w_odd))
    fe, fo = order_fit(EWKB_EPS, de), order_fit(EWKB_EPS, do)
    dev = {"W01": [], "W12": [], "W20": []}
    for eps in EWKB_EPS:
        ct = ew.connection_triple(SECH, 0.5j, eps, b, radius=0.5, toward=-5)
        for k, v in ct.normalized.items():
            dev[k].append(abs(v - 1))
    wfits = {k: order_fit(EWKB_EPS, v) for k, v in dev.items()}
    rng = np.random.default_rng(20)
    spec = PotentialSpec.make("sech2x-phase")
    worst_id = 0.0
    for _ in range(10):
        lam = complex(rng.uniform(-0.4, 0.4), rng.uniform(0.2, 0.8))
        V0 = rng.normal(size=(2, 3)) + 1j * rng.normal(size=(2, 3))
        end = complex(rng.uniform(-0.8, 0.8), rng.uniform(-0.3, 0.3))
        V = ew.integrate(spec, lam, 0.1, V0, [0.0, 0.5 * end + 0.1j, end])
        worst_id = max(worst_id, ew.three_solution_residual(V[:, 0], V[:, 1], V[:, 2]))
    ok = (fe.slope >= 0.9 and fo.slope >= 0.9 and all(f.slope >= 0.9 for f in wfits.values())
          and all(v[-1] < v[0] for v in dev.values()) and worst_id <= 1e-8)
    criterion("C7 exact-WKB asymptotics", ok,
              f"symbol slopes even {fe.slope:.2f}, odd {fo.slope:.2f}; wronskian slopes "
              + ", ".join(f"{k} {f.slope:.2f}" for k, f in wfits.items())
              + f"; identity residual {worst_id:.1e} (<=1e-8)")
    assert ok


def test_c8_m_factor(sech_pair, criterion):
    a, b = sech_pair
    same = [ew.m_factor(SECH, 0.5j, eps, a, b, radius=0.5) for eps in EWKB_EPS]
    assert all(m.delta == -1 for m in same)
    f_same = order_fit(EWKB_EPS, [m.deviation for m in same])
    # the zero-phase limit: extrapolate m linearly in eps from the two smallest epsilons
    limit = linear_fit(EWKB_EPS[-2:], [m.m.real for m in same[-2:]]).intercept
    opp_eps = (0.2, 0.1, 0.05, 0.025, 0.0125)
    tps = g.find_turning_points(GAUSS, 1.0, (-3, 3, 0.2, 1.9))
    opp = [ew.m_factor(GAUSS, 1.0, eps, tps[1], tps[2], radius=0.35, offset=0.6) for eps in opp_eps]
    assert all(m.delta == 1 for m in opp)
    f_opp = order_fit(opp_eps, [m.deviation for m in opp])
    ok = criterion("C8 m-factor", f_same.slope >= 0.9 and f_opp.slope >= 0.9 and abs(limit + 1) < 1e-3,
                   f"same-factor slope {f_same.slope:.2f}, opposite-factor slope {f_opp.slope:.2f}, "
                   f"zero-phase limit {limit:.6f} (-> -1)")
    assert ok


def _near_zero_ratio(eps):
    spec = PotentialSpec.make("algebraic-tail", d=2.0)
    mu0 = eps ** 0.6
    recs = direct.locate_eigenvalues(spec, eps, (-0.5, 0.5, 0.8 * mu0, 1.05))
    recs.sort(key=lambda r: -r.lam.imag)
    for n, r in enumerate(recs):
        r.n = n
    bs = wr.bs_eigenvalues(spec, eps, 0.8 * mu0)
    rows = [e for e in wr.error_table(recs, bs) if e.mu_direct >= mu0]
    return len(rows), max(e.abs_err for e in rows) / eps


@pytest.mark.slow
def test_c9_near_zero_window(criterion):
    eps_list = (0.1, 0.05, 0.025)
    res = [_near_zero_ratio(eps) for eps in eps_list]
    ratios = [r for _, r in res]
    ok = criterion("C9 near-zero window", all(x > y for x, y in zip(ratios, ratios[1:])),
                   "max err/eps down to mu = eps^0.6: " + ", ".join(
                       f"{e}: {r:.4f} ({n} rows)" for e, (n, r) in zip(eps_list, res)))
    assert ok
