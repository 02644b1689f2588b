import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from zswkb import direct
from zswkb.potentials import PotentialSpec

SECH = PotentialSpec.make("sech-scaled")


def sech_reflection(amp, scale, lam, eps):
    """|R| = |b|/|a| for A sech(x/L), with |b| = |sin(pi A L/eps)| / cosh(pi lam L/eps) and |a|^2 + |b|^2 = 1."""
    b = abs(math.sin(math.pi * amp * scale / eps)) / math.cosh(math.pi * lam * scale / eps)
    return b / math.sqrt(1.0 - b * b)


@pytest.mark.parametrize("eps", [0.4, 0.2])
def test_sech_eigenvalues_are_exact(eps):
    recs = direct.locate_eigenvalues(SECH, eps, (-0.5, 0.5, 0.02, 1.1))
    exact = [1 - (n + 0.5) * eps for n in range(int(1 / eps - 0.5) + 1) if 1 - (n + 0.5) * eps > 0.02]
    assert [r.n for r in recs] == list(range(len(exact)))
    assert max(abs(r.lam - 1j * m) for r, m in zip(recs, exact)) < 1e-8


def test_empty_region_and_bad_region():
    assert direct.locate_eigenvalues(SECH, 0.2, (0.5, 0.4, 0.1, 0.2)) == []
    with pytest.raises(ValueError):
        direct.locate_eigenvalues(SECH, 0.2, (-0.5, 0.5, 0.0, 1.0))


def test_box_strategy_agrees_with_axis_scan():
    spec = PotentialSpec.make("gaussian-tail")
    a = direct.locate_eigenvalues(spec, 0.3, (-0.3, 0.3, 0.05, 1.1), strategy="axis")
    b = direct.locate_eigenvalues(spec, 0.3, (-0.3, 0.3, 0.05, 1.1), strategy="boxes")
    assert len(a) == len(b) > 0
    for x, y in zip(a, b):
        assert abs(x.lam - y.lam) < 1e-8


@pytest.mark.parametrize("family", ["sech-scaled", "sech2x-phase", "spline-bump", "algebraic-tail"])
@pytest.mark.parametrize("lam", [0.3, 1.2])
def test_transfer_matrix_is_unimodular(family, lam):
    sd = direct.scattering_data(PotentialSpec.make(family), lam, 0.1)
    assert sd.residual < 1e-8


def test_transfer_matrix_focusing_symmetry():
    T = direct.transfer_matrices(PotentialSpec.make("gaussian-tail"), [0.4, 0.9], 0.2)
    for t in T:
        assert abs(t[1, 1] - np.conj(t[0, 0])) < 1e-8
        assert abs(t[0, 1] + np.conj(t[1, 0])) < 1e-8


@pytest.mark.parametrize("amp,scale,eps", [(0.93, 0.25, 0.1), (1.0, 1.0, 0.3), (1.3, 0.5, 0.2)])
def test_sech_reflection_matches_closed_form(amp, scale, eps):
    spec = PotentialSpec.make("sech-scaled", amplitude=amp, scale=scale)
    R = abs(direct.scattering_data(spec, 0.5, eps).R)
    assert R == pytest.approx(sech_reflection(amp, scale, 0.5, eps), rel=1e-6, abs=1e-12)


def test_near_zero_lambda_is_refused():
    with pytest.raises(direct.NearZeroLambda):
        direct.scattering_data(SECH, 1e-6, 0.1)


def test_free_solution_outside_support():
    spec = PotentialSpec.make("spline-bump")
    v = direct.jost_solve(spec, 1.0, 0.1, "right", "plus", x_eval=1.5)
    assert np.allclose(v, [0.0, np.exp(1j * 1.0 * 1.5 / 0.1)], atol=1e-12)


def test_integrators_agree():
    spec = PotentialSpec.make("sech2x-phase")
    a = direct.evans(spec, [0.2 + 0.5j], 0.2)
    b = direct.evans(spec, [0.2 + 0.5j], 0.2, direct.SolverConfig(integrator="dop853"))
    assert abs(a[0] - b[0]) < 1e-7 * max(1.0, abs(a[0]))


@pytest.mark.parametrize("family", ["sech-scaled", "gaussian-tail"])
def test_norming_constants_alternate(family):
    spec = PotentialSpec.make(family)
    recs = direct.locate_eigenvalues(spec, 0.25, (-0.3, 0.3, 0.05, 1.1))
    for r in recs:
        g = direct.norming_constant(spec, r, 0.25)
        assert abs(g - (-1) ** r.n) < 1e-6


def test_winding_number_counts_polynomial_roots():
    f = lambda z: (z - 0.2j) * (z - 0.5 - 0.5j) * (z + 3)
    assert direct.winding_number(f, (-1, 1, 0.1, 1)) == 2
    with pytest.raises(direct.BoundaryZero):
        direct.winding_number(lambda z: z - 0.1j, (-1, 1, 0.1, 1))


def test_reflection_sweep_rows():
    rows = direct.reflection_sweep(PotentialSpec.make("sech-scaled", amplitude=0.93, scale=0.25), 0.5, [0.2, 0.1])
    assert [r[0] for r in rows] == [0.2, 0.1]
    assert all(r[2] == pytest.approx(math.log(r[1])) for r in rows)


@settings(max_examples=8, deadline=None)
@given(lam=st.floats(0.05, 2.0), eps=st.floats(0.1, 0.5))
def test_unimodular_for_random_parameters(lam, eps):
    sd = direct.scattering_data(PotentialSpec.make("sech2x-phase"), lam, eps)
    assert sd.residual < 1e-8
    assert abs(abs(sd.a) ** 2 + abs(sd.b) ** 2 - 1.0) < 1e-8
