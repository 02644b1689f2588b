"""Zero-phase semiclassical predictions on the real line.

For a symmetric single-hump amplitude A the level set A(x) = mu has two real
points -x*, x*; the action between them fixes the Bohr-Sommerfeld
eigenvalues i mu_n through H(mu_n) = pi (n + 1/2) eps.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate, optimize

from .direct import EigenvalueRecord
from .potentials import PotentialSpec, UnsupportedDecayClass, amplitude_derivs


class OutOfRange(ValueError):
    pass


class NotSingleHump(ValueError):
    """The amplitude is not decreasing on x > 0, so turning points are not unique."""


@dataclass(frozen=True)
class ActionProfile:
    mu: float
    x_star: float
    H: float
    dH_dmu: float
    quad_error: float = 0.0


@dataclass(frozen=True)
class AdmissibilityWindow:
    kind: str  # reflection | eigenvalue
    alpha_max: float  # open bound: use alpha strictly below
    basis: str  # "polynomial(d)" or "exponential(sigma)"


@dataclass(frozen=True)
class EigenvalueCount:
    count: int
    estimate: float  # (H(mu1) - H(mu2)) / (pi eps) before rounding
    error_bound: int = 1


@dataclass
class ErrorRow:
    epsilon: float
    n: int
    mu_direct: float
    mu_wkb: float
    abs_err: float = field(init=False)

    def __post_init__(self):
        self.abs_err = abs(self.mu_direct - self.mu_wkb)


def _A(spec: PotentialSpec, x):
    return np.real(amplitude_derivs(spec, np.asarray(x, dtype=float))[0])


def _A1(spec: PotentialSpec, x):
    return np.real(amplitude_derivs(spec, np.asarray(x, dtype=float))[1])


def _check_mu(spec: PotentialSpec, mu: float):
    if not (0.0 < mu < spec.a_max):
        raise OutOfRange(f"mu must lie in (0, {spec.a_max:g}), got {mu!r}")


def _check_single_hump(spec: PotentialSpec, x_hi: float):
    xs = np.linspace(0.0, x_hi, 257)
    a = _A(spec, xs)
    if np.any(np.diff(a) > 1e-14 * spec.a_max):
        raise NotSingleHump(f"{spec} is not decreasing on (0, {x_hi:g})")


def turning_point(spec: PotentialSpec, mu: float) -> float:
    """Positive root x* of A(x) = mu (bracketing, then Newton polish)."""
    _check_mu(spec, mu)
    hi = 1.0
    cap = spec.support if spec.support is not None else 1e12
    while _A(spec, hi) >= mu:
        if hi >= cap:
            raise OutOfRange(f"no turning point below {cap:g}")
        hi = min(2.0 * hi, cap)
    _check_single_hump(spec, hi)
    x = optimize.brentq(lambda t: float(_A(spec, t)) - mu, 0.0, hi, xtol=1e-15, rtol=1e-15, maxiter=500)
    for _ in range(3):
        d = float(_A1(spec, x))
        if d == 0.0:
            break
        step = (float(_A(spec, x)) - mu) / d
        if not (0.0 < x - step < hi):
            break
        x -= step
        if abs(step) < 1e-16 * max(1.0, x):
            break
    return float(x)


def _gl(order: int):
    t, w = np.polynomial.legendre.leggauss(order)
    # map [-1, 1] to theta in [0, pi/2]
    return 0.25 * np.pi * (t + 1.0), 0.25 * np.pi * w


def _action_quadrature(spec: PotentialSpec, mu: float, xs: float, order: int):
    theta, w = _gl(order)
    x = xs * np.sin(theta)
    jac = xs * np.cos(theta)
    gap = np.maximum(_A(spec, x) ** 2 - mu * mu, 0.0)
    root = np.sqrt(gap)
    H = 2.0 * np.sum(w * jac * root)
    with np.errstate(divide="ignore", invalid="ignore"):
        inv = np.where(root > 0, jac / root, 0.0)
    dH = -2.0 * mu * np.sum(w * inv)
    return H, dH


def action_H(spec: PotentialSpec, mu: float, order: int = 200) -> ActionProfile:
    """H(mu) = integral of sqrt(A^2 - mu^2) between the turning points.

    The substitution x = x* sin(theta) removes the square-root endpoint
    behaviour; the Gauss-Legendre result at ``order`` is compared with the one
    at ``2*order`` and the latter is returned with the difference as
    ``quad_error``.  Only the amplitude enters; any phase is ignored.
    """
    if mu == spec.a_max:
        return ActionProfile(float(mu), 0.0, 0.0, -math.inf)
    _check_mu(spec, mu)
    xs = turning_point(spec, mu)
    H1, d1 = _action_quadrature(spec, mu, xs, order)
    H2, d2 = _action_quadrature(spec, mu, xs, 2 * order)
    err = abs(H2 - H1) / max(abs(H2), 1e-300)
    return ActionProfile(float(mu), xs, float(H2), float(d2), float(err))


def action_at_zero(spec: PotentialSpec) -> float:
    """H(0) = integral of A over the whole line."""
    if spec.family == "sech-scaled":
        return math.pi * spec.a_max * spec.p("scale")
    if spec.family == "sech2x-phase":
        return 0.5 * math.pi * spec.a_max
    if spec.family == "spline-bump":
        # a * b * integral over (-1, 1) of (1 - u^2)^5
        return spec.a_max * spec.p("support") * 512.0 / 693.0
    val, _ = integrate.quad(lambda t: float(_A(spec, t)), 0.0, np.inf, epsabs=0.0, epsrel=1e-13, limit=400)
    return 2.0 * val


def H_value(spec: PotentialSpec, mu: float, order: int = 200) -> float:
    if mu <= 0.0:
        return action_at_zero(spec)
    return action_H(spec, mu, order).H


def window(spec: PotentialSpec, kind: str) -> AdmissibilityWindow:
    return admissibility_window(spec, kind)


def admissibility_window(spec: PotentialSpec, kind: str) -> AdmissibilityWindow:
    """Largest exponent alpha for which lam = eps^alpha stays in the controlled range (open bound)."""
    if kind not in ("reflection", "eigenvalue"):
        raise ValueError("kind must be reflection or eigenvalue")
    dc = spec.decay_class
    if dc.kind == "polynomial":
        d = float(dc.exponent)
        basis = f"polynomial({d:g})"
        alpha = 1.0 if kind == "reflection" else d / (d + 1.0)
    elif dc.kind == "exponential":
        basis = f"exponential({dc.exponent:g})"
        alpha = 1.0
    else:
        raise UnsupportedDecayClass(f"{dc.kind} tails have no near-zero window")
    return AdmissibilityWindow(kind, alpha, basis)


def default_mu_min(spec: PotentialSpec, eps: float) -> float:
    """eps^(alpha_max / 2): well inside the eigenvalue window; 0 for compact support."""
    try:
        win = admissibility_window(spec, "eigenvalue")
    except UnsupportedDecayClass:
        return 0.0
    return eps ** (0.5 * win.alpha_max)


def bs_eigenvalues(spec: PotentialSpec, eps: float, mu_min: float | None = None,
                   order: int = 200) -> list[EigenvalueRecord]:
    """Solutions of H(mu_n) = pi (n + 1/2) eps with mu_n >= mu_min, largest first."""
    if eps <= 0:
        raise ValueError("eps must be positive")
    if mu_min is None:
        mu_min = default_mu_min(spec, eps)
    if not (0.0 <= mu_min < spec.a_max):
        raise OutOfRange("mu_min must lie in [0, A_max)")
    top = H_value(spec, mu_min, order)
    # brackets stay strictly inside (0, A_max)
    lo = mu_min if mu_min > 0 else min(1e-10, 1e-6 * spec.a_max)
    H_lo = H_value(spec, lo, order)
    recs = []
    n = 0
    while math.pi * (n + 0.5) * eps <= top:
        target = math.pi * (n + 0.5) * eps
        diag = {}
        if target > H_lo:
            # root lies below the bracket floor; only reached when mu_min == 0
            mu = lo
            diag["below_floor"] = True
        else:
            mu = optimize.brentq(lambda m: H_value(spec, m, order) - target, lo, spec.a_max,
                                 xtol=1e-15, rtol=1e-15, maxiter=200)
            prof = action_H(spec, mu, order) if mu < spec.a_max else None
            if prof is not None and math.isfinite(prof.dH_dmu) and prof.dH_dmu != 0:
                polished = mu - (prof.H - target) / prof.dH_dmu
                if lo < polished < spec.a_max:
                    mu = polished
            if mu < spec.a_max:
                diag["residual"] = abs(H_value(spec, mu, order) - target)
        recs.append(EigenvalueRecord(complex(0.0, mu), float(eps), "BS-real", n, complex(norming_sign(n)), diag))
        n += 1
    return recs


def count_eigenvalues(spec: PotentialSpec, eps: float, mu1: float, mu2: float, order: int = 200) -> EigenvalueCount:
    """Predicted number of eigenvalues with mu in (mu1, mu2), correct to within one."""
    if eps <= 0:
        raise ValueError("eps must be positive")
    if not (0.0 < mu1 <= mu2 <= spec.a_max):
        raise OutOfRange("need 0 < mu1 <= mu2 <= A_max")
    if mu1 == mu2:
        return EigenvalueCount(0, 0.0)
    est = (H_value(spec, mu1, order) - H_value(spec, mu2, order)) / (math.pi * eps)
    return EigenvalueCount(int(round(est)), float(est))


def norming_sign(n: int) -> int:
    """Leading-order norming constant (-1)^n."""
    return -1 if n % 2 else 1


def bs_residuals(spec: PotentialSpec, eps: float, mus, order: int = 200) -> np.ndarray:
    """|H(mu_n) - pi (n + 1/2) eps| for eigenvalue heights ordered from the top (n = 0, 1, ...)."""
    mus = np.asarray(mus, dtype=float)
    return np.array([abs(H_value(spec, m, order) - math.pi * (n + 0.5) * eps) for n, m in enumerate(mus)])


def error_table(direct: list[EigenvalueRecord], wkb: list[EigenvalueRecord]) -> list[ErrorRow]:
    """Pair direct and semiclassical eigenvalues by index n."""
    by_n = {r.n: r for r in wkb}
    rows = []
    for k, r in enumerate(direct):
        n = r.n if r.n is not None else k
        if n in by_n:
            rows.append(ErrorRow(r.epsilon, n, r.lam.imag, by_n[n].lam.imag))
    return rows
