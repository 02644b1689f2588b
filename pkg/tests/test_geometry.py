import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from zswkb import geometry as g
from zswkb.potentials import PotentialSpec

SECH = PotentialSpec.make("sech-scaled")
SECH2X = PotentialSpec.make("sech2x-phase")
BOX = (-3.0, 3.0, -1.5, 1.5)


@pytest.fixture(scope="module")
def sech_pair():
    return g.find_turning_points(SECH, 0.5j, BOX)


@pytest.fixture(scope="module")
def curved_arcs():
    return g.sech2x_arcs(SECH2X)


def test_sech_turning_points(sech_pair):
    x = math.acosh(2.0)
    assert len(sech_pair) == 2
    assert [t.x for t in sech_pair] == pytest.approx([-x, x], abs=1e-13)
    assert all(t.vanishing_factor == "g_minus" and g.is_simple(t) for t in sech_pair)


@pytest.mark.parametrize("lam", [0.2 + 0.5j, 0.1 + 0.3j, -0.3 + 0.6j])
def test_turning_points_are_zeros(lam):
    for t in g.find_turning_points(SECH2X, lam, (-2.5, 2.5, -0.78, 0.78)):
        gp, gm = g.g_factors(SECH2X, t.x, lam)
        k = 0 if t.vanishing_factor == "g_plus" else 1
        assert abs([gp, gm][k]) < 1e-10
        assert abs(g.V0(SECH2X, t.x, lam)) < 1e-10


def test_double_zero_is_flagged_or_raised():
    x_d = g.double_point_x(1, 1)
    lam_d = g.lambda_double(1, 1)
    tps = g.find_turning_points(SECH2X, lam_d, (0.0, 0.8, -0.5, 0.0))
    assert any(t.order == 2 and abs(t.x - x_d) < 1e-5 for t in tps)
    with pytest.raises(g.DegenerateCluster):
        g.find_turning_points(SECH2X, lam_d, (0.0, 0.8, -0.5, 0.0), on_cluster="raise")


def test_refine_follows_the_same_zero(sech_pair):
    t = g.refine_turning_point(SECH, sech_pair[1], 0.6j)
    assert t.x.real == pytest.approx(math.acosh(1 / 0.6), abs=1e-12)


def test_non_analytic_family_refused():
    with pytest.raises(g.GeometryError):
        g.find_turning_points(PotentialSpec.make("spline-bump"), 0.5j, BOX)


def test_sqrt_branch_on_and_off_the_cut(sech_pair):
    a, b = sech_pair
    cut = g.ContourPath(np.array([a.x, b.x]), "C_zero", 0.5j)
    below = g.sqrt_mV0(SECH, 0.0, 0.5j, cut, side="below")
    above = g.sqrt_mV0(SECH, 0.0, 0.5j, cut, side="above")
    assert below == pytest.approx(math.sqrt(0.75), abs=1e-12)
    assert above == pytest.approx(-below, abs=1e-12)
    with pytest.raises(g.OnCutError):
        g.sqrt_mV0(SECH, 0.0, 0.5j, cut)
    far = g.sqrt_mV0(SECH, 8.0, 0.5j, cut)
    assert abs(far - 0.5j) < 1e-5


def test_action_is_additive_over_a_polyline(sech_pair):
    a, b = sech_pair
    bent = g.ContourPath(np.array([a.x, 0.0, b.x]), "C_zero", 0.5j)
    whole = g.action_between(SECH, 0.5j, a, b)
    assert g.action_between(SECH, 0.5j, a, b, bent) == pytest.approx(whole, abs=1e-12)
    halves = g.action_between(SECH, 0.5j, a, 0.0) + g.action_between(SECH, 0.5j, 0.0, b)
    assert halves == pytest.approx(whole, abs=1e-12)


def test_sech_action_closed_form(sech_pair):
    a, b = sech_pair
    z, err = g.action_between(SECH, 0.5j, a, b, return_error=True)
    # z = i * integral of sqrt(A^2 - mu^2) over the real segment
    assert abs(abs(z) - math.pi * 0.5) < 1e-10 and abs(z.real) < 1e-12
    assert err < 1e-8


@settings(max_examples=20, deadline=None)
@given(mu=st.floats(0.05, 0.95))
def test_action_matches_real_line_action(mu):
    from zswkb.wkb_real import H_value

    spec = PotentialSpec.make("gaussian-tail")
    lam = 1j * mu
    xs = [t for t in g.find_turning_points(spec, lam, (-4, 4, -0.5, 0.5)) if abs(t.x.imag) < 1e-9]
    a, b = sorted(xs, key=lambda t: t.x.real)
    z = g.action_between(spec, lam, a, b)
    assert abs(z) == pytest.approx(H_value(spec, mu), rel=1e-9)


def test_delta_index(sech_pair):
    a, b = sech_pair
    assert g.delta_index(a, b) == -1
    other = g.TurningPoint(0j, "g_plus", 1, 0.5j)
    assert g.delta_index(a, other) == 1
    with pytest.raises(g.GeometryError):
        g.delta_index(a, g.TurningPoint(0j, "g_plus", 2, 0.5j))


def test_stokes_lines_keep_real_part_zero(sech_pair):
    b = sech_pair[1]
    ang = g.stokes_angles(SECH, b, 0.5j)
    assert np.allclose(np.sort(np.diff(np.sort(ang))), [2 * math.pi / 3] * 2, atol=1e-12)
    lines = g.trace_stokes(SECH, 0.5j, b, box=(-3, 3, -1.4, 1.4), others=sech_pair)
    assert len(lines) == 3
    for ln in lines:
        assert ln.diag["residual"] < 1e-6
        assert ln.diag["end"] in ("left_box", "turning_point", "singularity", "max_arclength")
    # one line joins the two real turning points along the segment
    assert any(ln.diag["end"] == "turning_point" for ln in lines)


def test_admissible_real_contour(sech_pair):
    a, b = sech_pair
    cm = g.ContourPath(np.array([-10.0, a.x]), "C_minus", 0.5j)
    c0 = g.ContourPath(np.array([a.x, b.x]), "C_zero", 0.5j)
    cp = g.ContourPath(np.array([b.x, 10.0]), "C_plus", 0.5j)
    ok, diag = g.check_admissible(SECH, 0.5j, cm, c0, cp, tps=sech_pair)
    assert ok and diag["c0_residual"] < 1e-12
    bent = g.ContourPath(np.array([a.x, -0.5 + 1.8j, 0.5 + 1.8j, b.x]), "C_zero", 0.5j)
    ok, diag = g.check_admissible(SECH, 0.5j, cm, bent, cp, tps=sech_pair)
    assert not ok and diag["enclosed_singularities"] == [pytest.approx(0.5j * math.pi)]


def test_lambda_double_closed_form():
    lam = g.lambda_double(1, 1)
    assert lam == pytest.approx(0.3878509901924627 + 0.7461088329414642j, abs=1e-15)
    assert g.lambda_double(1, -1) == pytest.approx(-lam.conjugate())
    assert g.lambda_double(-1, 1) == pytest.approx(-lam)
    x = g.double_point_x(1, 1)
    gp, gm = g.g_factors(SECH2X, x, lam)
    assert abs(gm) < 1e-12
    x2, lam2 = g.double_point(SECH2X, x + 0.01, "g_minus")
    assert abs(lam2 - lam) < 1e-12 and abs(x2 - x) < 1e-12


def test_arcs_end_at_double_points(curved_arcs):
    assert len(curved_arcs) == 4
    for arc in curved_arcs:
        lam_d = g.lambda_double(arc.ends["sigma"], arc.ends["tau"])
        assert arc.ends["start_reason"] == "double_point"
        assert abs(arc.ends["start"] - lam_d) < 1e-6
        assert arc.ends["end_reason"] == "imaginary_axis"
        assert abs(arc.ends["end"].imag) == pytest.approx(0.28, abs=0.01)
        assert max(abs(s.action.real) for s in arc.samples) < 1e-6


def test_arc_json(curved_arcs):
    j = curved_arcs[0].to_json()
    assert j["branch_id"] == 0 and len(j["samples"]) == len(curved_arcs[0].samples)


@pytest.mark.parametrize("eps", [0.1, 0.05])
def test_quantized_points_lie_on_the_arc(curved_arcs, eps):
    arc = curved_arcs[0]
    recs = g.quantize_on_arc(SECH2X, arc, eps)
    assert recs and [r.n for r in recs] == list(range(len(recs)))
    for r in recs:
        assert r.method == "BS-arc"
        z = complex(*r.diag["action"])
        assert abs(z.real) < 1e-8
        assert abs(abs(z.imag) / (math.pi * eps) - (r.n + 0.5)) < 1e-8


def test_huge_eps_has_no_quantized_points(curved_arcs):
    assert g.quantize_on_arc(SECH2X, curved_arcs[0], 50.0) == []


def test_imaginary_segment_reproduces_bs_real():
    from zswkb.wkb_real import bs_eigenvalues

    seg = g.imaginary_segment(SECH, n=32)
    recs = g.quantize_on_arc(SECH, seg, 0.1)
    bs = bs_eigenvalues(SECH, 0.1, mu_min=0.02)
    assert [r.n for r in recs] == [r.n for r in bs]
    for a, b in zip(recs, bs):
        assert abs(a.lam - b.lam) < 1e-9


def test_poles():
    assert g.poles(SECH, (-1, 1, -2, 2)) == pytest.approx([-0.5j * math.pi, 0.5j * math.pi])
    assert sorted(g.poles(PotentialSpec.make("algebraic-tail"), (-1, 1, -2, 2)), key=lambda p: p.imag) == [-1j, 1j]
    assert g.poles(PotentialSpec.make("gaussian-tail"), (-1, 1, -2, 2)) == []
