import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from zswkb.potentials import (
    FAMILIES,
    DomainError,
    NonAnalyticEvaluation,
    PotentialError,
    PotentialSpec,
    UnsupportedDecayClass,
    amplitude_derivs,
    decay_scales,
    eval_A,
    eval_derivs,
    phase_derivs,
    real_coefficients,
)

ANALYTIC = [f for f in FAMILIES if f != "spline-bump"]


def _fd(f, x, h=1e-5):
    return (f(x + h) - f(x - h)) / (2 * h)


@pytest.mark.parametrize("family", FAMILIES)
def test_json_round_trip(family):
    spec = PotentialSpec.make(family)
    assert PotentialSpec.from_json(spec.to_json()) == spec
    assert PotentialSpec.from_json('{"family": "%s"}' % family) == spec


def test_unknown_family_and_parameter():
    with pytest.raises(PotentialError):
        PotentialSpec.make("square-well")
    with pytest.raises(PotentialError):
        PotentialSpec.make("sech-scaled", width=2.0)
    with pytest.raises(PotentialError):
        PotentialSpec.make("sech-scaled", amplitude=-1.0)
    with pytest.raises(PotentialError):
        PotentialSpec.make("algebraic-tail", d=1.0)
    with pytest.raises(PotentialError):
        PotentialSpec.from_json("[1, 2]")


def test_params_are_order_independent():
    a = PotentialSpec("sech-scaled", (("scale", 2.0), ("amplitude", 0.5)))
    b = PotentialSpec.make("sech-scaled", amplitude=0.5, scale=2.0)
    assert a == b and hash(a) == hash(b)


@pytest.mark.parametrize("family", FAMILIES)
@pytest.mark.parametrize("x", [-1.3, -0.2, 0.0, 0.7, 1.1])
def test_derivatives_match_finite_differences(family, x):
    spec = PotentialSpec.make(family)
    A, A1, A2 = amplitude_derivs(spec, x)
    assert A1 == pytest.approx(_fd(lambda t: amplitude_derivs(spec, t)[0], x), abs=1e-7)
    assert A2 == pytest.approx(_fd(lambda t: amplitude_derivs(spec, t)[1], x), abs=1e-6)
    S, S1, S2, S3 = phase_derivs(spec, x)
    assert S1 == pytest.approx(_fd(lambda t: phase_derivs(spec, t)[0], x), abs=1e-7)
    assert S2 == pytest.approx(_fd(lambda t: phase_derivs(spec, t)[1], x), abs=1e-6)
    assert S3 == pytest.approx(_fd(lambda t: phase_derivs(spec, t)[2], x), abs=1e-5)


@pytest.mark.parametrize("family", ANALYTIC)
def test_complex_derivative_is_holomorphic(family):
    spec = PotentialSpec.make(family)
    x = 0.4 + 0.3 * spec.strip * 1j
    h = 1e-5
    A, A1, _ = amplitude_derivs(spec, x)
    along_re = (eval_A(spec, x + h) - eval_A(spec, x - h)) / (2 * h)
    along_im = (eval_A(spec, x + 1j * h) - eval_A(spec, x - 1j * h)) / (2j * h)
    assert abs(along_re - A1) < 1e-7 and abs(along_im - A1) < 1e-7


@pytest.mark.parametrize("family", ANALYTIC)
def test_strip_is_enforced(family):
    spec = PotentialSpec.make(family)
    with pytest.raises(DomainError):
        eval_A(spec, 0.1 + 1j * spec.strip)


def test_spline_bump_is_real_only_and_vanishes_outside():
    spec = PotentialSpec.make("spline-bump")
    with pytest.raises(NonAnalyticEvaluation):
        eval_A(spec, 0.1 + 0.1j)
    assert all(v == 0 for v in eval_derivs(spec, 2.0))
    assert spec.strip == 0.0 and not spec.analytic


def test_sech_at_origin():
    spec = PotentialSpec.make("sech-scaled")
    A, A1, A2 = amplitude_derivs(spec, 0.0)
    assert (A, A1, A2) == (1.0, 0.0, -1.0)


@pytest.mark.parametrize("family", FAMILIES)
def test_real_coefficients_agree(family):
    spec = PotentialSpec.make(family)
    fast = real_coefficients(spec)
    for x in np.linspace(-3, 3, 13):
        A, A1, S1, _ = (complex(v) for v in eval_derivs(spec, x))
        a, a1, s, s1 = fast(float(x))
        assert a == pytest.approx(A.real, abs=1e-14)
        assert a1 == pytest.approx(A1.real, abs=1e-13)
        assert s1 == pytest.approx(S1.real, abs=1e-13)


@pytest.mark.parametrize("family", ["sech-scaled", "sech2x-phase", "algebraic-tail", "gaussian-tail"])
@pytest.mark.parametrize("X", [0.5, 2.0, 6.0])
def test_tail_integral_bounds_the_integrand(family, X):
    from scipy import integrate

    spec = PotentialSpec.make(family)

    def f(t):
        A, _, S1, _ = eval_derivs(spec, t)
        return abs(A) + 0.5 * abs(S1)

    val, _ = integrate.quad(f, X, np.inf, limit=200)
    assert val <= spec.tail_integral(X) * (1 + 1e-9) + 1e-15


def test_decay_scales():
    poly = PotentialSpec.make("algebraic-tail", d=2.0)
    a, b = decay_scales(poly, 0.1, 0.1)
    assert a == pytest.approx(0.1) and b == pytest.approx(0.1 ** 1.25)
    with pytest.raises(UnsupportedDecayClass):
        decay_scales(PotentialSpec.make("spline-bump"), 0.1, 0.1)
    with pytest.raises(PotentialError):
        decay_scales(poly, 2.0, 0.1)


@settings(max_examples=60, deadline=None)
@given(x=st.floats(-20, 20), family=st.sampled_from(FAMILIES))
def test_amplitude_is_symmetric_and_bounded(x, family):
    spec = PotentialSpec.make(family)
    A = amplitude_derivs(spec, x)[0]
    Am = amplitude_derivs(spec, -x)[0]
    assert A == pytest.approx(Am, abs=1e-15)
    assert 0.0 <= A <= spec.a_max * (1 + 1e-15)


@settings(max_examples=40, deadline=None)
@given(amp=st.floats(0.1, 5.0), scale=st.floats(0.2, 4.0))
def test_sech_parameters_scale_the_shape(amp, scale):
    spec = PotentialSpec.make("sech-scaled", amplitude=amp, scale=scale)
    assert spec.a_max == amp
    assert spec.strip == pytest.approx(0.5 * math.pi * scale)
    assert amplitude_derivs(spec, scale)[0] == pytest.approx(amp / math.cosh(1.0))
