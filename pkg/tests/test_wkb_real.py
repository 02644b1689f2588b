import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from zswkb import wkb_real as wr
from zswkb.direct import EigenvalueRecord
from zswkb.potentials import PotentialSpec, UnsupportedDecayClass

SECH = PotentialSpec.make("sech-scaled")


@settings(max_examples=50, deadline=None)
@given(mu=st.floats(0.01, 0.99))
def test_sech_action_closed_form(mu):
    prof = wr.action_H(SECH, mu)
    assert prof.H == pytest.approx(math.pi * (1 - mu), abs=1e-11)
    assert prof.dH_dmu == pytest.approx(-math.pi, rel=1e-6)
    assert prof.x_star == pytest.approx(math.acosh(1 / mu), rel=1e-12)


@settings(max_examples=30, deadline=None)
@given(mu=st.floats(0.05, 0.95), family=st.sampled_from(["gaussian-tail", "algebraic-tail", "spline-bump"]))
def test_turning_point_solves_level_set(mu, family):
    spec = PotentialSpec.make(family)
    x = wr.turning_point(spec, mu)
    assert float(np.real(wr._A(spec, x))) == pytest.approx(mu, abs=1e-13)


@pytest.mark.parametrize("family", ["gaussian-tail", "algebraic-tail", "spline-bump", "sech2x-phase"])
def test_action_is_decreasing(family):
    spec = PotentialSpec.make(family)
    mus = np.linspace(0.05, 0.95, 10)
    H = [wr.H_value(spec, m) for m in mus]
    assert np.all(np.diff(H) < 0)
    assert wr.H_value(spec, 0.0) > H[0]


@pytest.mark.parametrize("family,expected", [
    ("sech-scaled", math.pi),
    ("sech2x-phase", math.pi / 2),
    ("gaussian-tail", math.sqrt(math.pi)),
    ("spline-bump", 1.5 * 512 / 693),
])
def test_action_at_zero(family, expected):
    assert wr.action_at_zero(PotentialSpec.make(family)) == pytest.approx(expected, rel=1e-12)


def test_gaussian_action_at_zero_uses_quadrature():
    spec = PotentialSpec.make("algebraic-tail", d=2.0)
    assert wr.action_at_zero(spec) == pytest.approx(math.pi, rel=1e-10)


@pytest.mark.parametrize("eps", [0.4, 0.2, 0.1])
def test_sech_bs_eigenvalues_exact(eps):
    recs = wr.bs_eigenvalues(SECH, eps, mu_min=0.01)
    for r in recs:
        assert abs(r.lam.imag - (1 - (r.n + 0.5) * eps)) < 1e-12
        assert r.method == "BS-real" and r.norming == (-1) ** r.n


def test_count_is_consistent_with_bs():
    recs = wr.bs_eigenvalues(SECH, 0.05, mu_min=0.01)
    inside = sum(1 for r in recs if 0.1 < r.lam.imag < 0.9)
    c = wr.count_eigenvalues(SECH, 0.05, 0.1, 0.9)
    assert abs(c.count - inside) <= 1
    assert c.estimate == pytest.approx(0.8 / 0.05)


def test_ranges_and_windows():
    with pytest.raises(wr.OutOfRange):
        wr.action_H(SECH, 1.5)
    with pytest.raises(ValueError):
        wr.bs_eigenvalues(SECH, -0.1)
    w = wr.admissibility_window(PotentialSpec.make("algebraic-tail", d=2.0), "eigenvalue")
    assert w.alpha_max == pytest.approx(2 / 3) and w.basis == "polynomial(2)"
    assert wr.admissibility_window(SECH, "reflection").alpha_max == 1.0
    with pytest.raises(UnsupportedDecayClass):
        wr.admissibility_window(PotentialSpec.make("spline-bump"), "eigenvalue")
    assert wr.default_mu_min(PotentialSpec.make("spline-bump"), 0.1) == 0.0


def test_error_table_pairs_by_index():
    d = [EigenvalueRecord(0.9j, 0.2, "direct", 0), EigenvalueRecord(0.7j, 0.2, "direct", 1)]
    w = [EigenvalueRecord(0.9000001j, 0.2, "BS-real", 0)]
    rows = wr.error_table(d, w)
    assert len(rows) == 1 and rows[0].abs_err == pytest.approx(1e-7)


def test_norming_sign():
    assert [wr.norming_sign(n) for n in range(4)] == [1, -1, 1, -1]
