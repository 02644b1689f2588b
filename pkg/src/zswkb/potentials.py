"""Potential families A(x) exp(i S(x)/eps) with closed-form derivatives.

Every family evaluates on complex ``x`` (numpy broadcasting) and carries the
metadata the downstream engines need: decay class, analyticity strip,
symmetry and the location of the maximum of ``A``.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np
from scipy import special


class PotentialError(ValueError):
    pass


class DomainError(PotentialError):
    """Complex argument outside the declared analyticity strip."""


class NonAnalyticEvaluation(PotentialError):
    """Complex argument requested for a family that is only smooth."""


class UnsupportedDecayClass(PotentialError):
    pass


FAMILIES = ("sech-scaled", "sech2x-phase", "algebraic-tail", "gaussian-tail", "spline-bump")

_DEFAULTS: dict[str, dict[str, float]] = {
    "sech-scaled": {"amplitude": 1.0, "scale": 1.0},
    "sech2x-phase": {"amplitude": 1.0, "phase": 1.0},
    "algebraic-tail": {"amplitude": 1.0, "d": 2.0},
    "gaussian-tail": {"amplitude": 1.0, "width": 1.0},
    "spline-bump": {"amplitude": 1.0, "support": 1.5},
}


@dataclass(frozen=True)
class DecayClass:
    kind: str  # "polynomial" | "exponential" | "compact-smooth"
    exponent: float | None = None  # d for polynomial, sigma for exponential


@dataclass(frozen=True)
class ComplexPoint:
    re: float
    im: float

    def __post_init__(self):
        if not (math.isfinite(self.re) and math.isfinite(self.im)):
            raise ValueError("ComplexPoint components must be finite")

    def __complex__(self) -> complex:
        return complex(self.re, self.im)


@dataclass(frozen=True)
class PotentialSpec:
    """An immutable potential family with its parameters.

    ``params`` is stored as a sorted tuple of ``(name, value)`` pairs so the
    spec stays hashable; use :meth:`p` to read a parameter.
    """

    family: str
    params: tuple[tuple[str, float], ...] = field(default=())

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise PotentialError(f"unknown family {self.family!r}; known: {FAMILIES}")
        merged = dict(_DEFAULTS[self.family])
        for key, value in dict(self.params).items():
            if key not in merged:
                raise PotentialError(f"family {self.family!r} has no parameter {key!r}")
            merged[key] = float(value)
        object.__setattr__(self, "params", tuple(sorted(merged.items())))
        self._validate()

    def _validate(self):
        p = dict(self.params)
        if p["amplitude"] <= 0:
            raise PotentialError("amplitude must be positive")
        for key in ("scale", "width", "support"):
            if key in p and p[key] <= 0:
                raise PotentialError(f"{key} must be positive")
        if self.family == "algebraic-tail" and p["d"] <= 1:
            raise PotentialError("algebraic-tail needs d > 1")

    # -- construction helpers -------------------------------------------------
    @classmethod
    def make(cls, family: str, **params: float) -> "PotentialSpec":
        return cls(family, tuple(params.items()))

    @classmethod
    def from_json(cls, obj: str | dict[str, Any]) -> "PotentialSpec":
        if isinstance(obj, str):
            obj = json.loads(obj)
        if not isinstance(obj, dict) or "family" not in obj:
            raise PotentialError('potential JSON must look like {"family": ..., "params": {...}}')
        params = obj.get("params", {}) or {}
        if not isinstance(params, dict):
            raise PotentialError("params must be a JSON object")
        return cls(obj["family"], tuple(params.items()))

    def to_json(self) -> dict[str, Any]:
        return {"family": self.family, "params": dict(self.params)}

    def p(self, name: str) -> float:
        return dict(self.params)[name]

    # -- metadata ---------------------------------------------------------------
    @property
    def analytic(self) -> bool:
        return self.family != "spline-bump"

    @property
    def symmetric(self) -> bool:
        return True

    @property
    def zero_phase(self) -> bool:
        return self.family != "sech2x-phase"

    @property
    def a_max(self) -> float:
        return self.p("amplitude")

    @property
    def decay_class(self) -> DecayClass:
        if self.family == "algebraic-tail":
            return DecayClass("polynomial", self.p("d"))
        if self.family == "gaussian-tail":
            return DecayClass("exponential", 2.0)
        if self.family == "spline-bump":
            return DecayClass("compact-smooth")
        return DecayClass("exponential", 1.0)

    @property
    def strip(self) -> float:
        """Half-width of the horizontal strip where A and S are holomorphic."""
        f = self.family
        if f == "sech-scaled":
            return 0.5 * math.pi * self.p("scale")
        if f == "sech2x-phase":
            return 0.25 * math.pi
        if f == "algebraic-tail":
            return 1.0
        if f == "gaussian-tail":
            # entire; the cap keeps exp(y^2/w^2) growth moderate
            return 2.0 * self.p("width")
        return 0.0

    @property
    def support(self) -> float | None:
        return self.p("support") if self.family == "spline-bump" else None

    def tail_integral(self, X: float) -> float:
        """Upper bound for the integral of A + |S'|/2 over (X, inf)."""
        f = self.family
        a = self.p("amplitude")
        if f == "sech-scaled":
            L = self.p("scale")
            return 2.0 * a * L * math.atan(math.exp(-X / L))
        if f == "sech2x-phase":
            b = self.p("phase")
            e = math.exp(-2.0 * X)
            return a * math.atan(e) + b * e / (1.0 + e * e)
        if f == "algebraic-tail":
            d = self.p("d")
            return a / ((d - 1.0) * X ** (d - 1.0))
        if f == "gaussian-tail":
            w = self.p("width")
            return 0.5 * a * w * math.sqrt(math.pi) * special.erfc(X / w)
        return 0.0 if X >= self.p("support") else float("inf")

    def __str__(self) -> str:
        inner = ",".join(f"{k}={v:g}" for k, v in self.params)
        return f"{self.family}({inner})"


def _check_domain(spec: PotentialSpec, x):
    x = np.asarray(x)
    if np.iscomplexobj(x):
        im = np.abs(x.imag)
        if spec.analytic:
            if np.any(im >= spec.strip):
                raise DomainError(f"|Im x| must stay below {spec.strip:g} for {spec}")
        elif np.any(im > 0):
            raise NonAnalyticEvaluation(f"{spec.family} cannot be evaluated off the real axis")
    return x


def _sech(u):
    # cosh overflows to inf far out, which gives the correct limit 0
    with np.errstate(over="ignore"):
        return 1.0 / np.cosh(u)


def amplitude_derivs(spec: PotentialSpec, x):
    """Return ``(A, A', A'')`` at ``x``."""
    x = _check_domain(spec, x)
    f = spec.family
    a = spec.p("amplitude")
    if f == "sech-scaled":
        L = spec.p("scale")
        u = x / L
        s, t = _sech(u), np.tanh(u)
        return a * s, -a / L * s * t, a / L**2 * s * (t * t - s * s)
    if f == "sech2x-phase":
        s, t = _sech(2 * x), np.tanh(2 * x)
        return a * s, -2 * a * s * t, 4 * a * s * (t * t - s * s)
    if f == "algebraic-tail":
        d = spec.p("d")
        q = 1.0 + x * x
        A = a * q ** (-d / 2)
        A1 = -a * d * x * q ** (-d / 2 - 1)
        A2 = -a * d * (q ** (-d / 2 - 1) - (d + 2) * x * x * q ** (-d / 2 - 2))
        return A, A1, A2
    if f == "gaussian-tail":
        w = spec.p("width")
        g = a * np.exp(-(x / w) ** 2)
        return g, -2 * x / w**2 * g, (4 * x * x / w**4 - 2 / w**2) * g
    # spline-bump: a (1 - u^2)^5 on |u| < 1, C^4 at the edges
    b = spec.p("support")
    u = np.real(x) / b
    inside = np.abs(u) < 1
    v = np.where(inside, 1.0 - u * u, 0.0)
    A = a * v**5
    A1 = -10 * a * u / b * v**4
    A2 = -10 * a / b**2 * (v**4 - 8 * u * u * v**3)
    return A, A1, A2


def phase_derivs(spec: PotentialSpec, x):
    """Return ``(S, S', S'', S''')`` at ``x``."""
    x = _check_domain(spec, x)
    zero = np.zeros_like(x, dtype=complex)
    if spec.family != "sech2x-phase":
        return zero, zero, zero, zero
    b = spec.p("phase")
    s, t = _sech(2 * x), np.tanh(2 * x)
    S1 = -2 * b * s * t
    S2 = 4 * b * s * (t * t - s * s)
    S3 = 8 * b * (-s * t**3 + 5 * s**3 * t)
    return b * s + zero, S1 + zero, S2 + zero, S3 + zero


def eval_A(spec: PotentialSpec, x):
    A = amplitude_derivs(spec, x)[0]
    return np.asarray(A, dtype=complex) if np.ndim(A) else complex(A)


def eval_S(spec: PotentialSpec, x):
    S = phase_derivs(spec, x)[0]
    return np.asarray(S, dtype=complex) if np.ndim(S) else complex(S)


def eval_derivs(spec: PotentialSpec, x):
    """``(A, A', S', S'')`` at ``x``; closed forms per family."""
    A, A1, _ = amplitude_derivs(spec, x)
    _, S1, S2, _ = phase_derivs(spec, x)
    return A, A1, S1, S2


def decay_scales(spec: PotentialSpec, lam: float, mu: float, c: float = 1.0) -> tuple[float, float]:
    """Scale functions a(lambda), b(mu) of the near-zero admissibility domains."""
    dc = spec.decay_class
    top = spec.a_max
    if not (0 < lam < top and 0 < mu <= top):
        raise PotentialError("lambda, mu must lie in (0, A_max)")
    if dc.kind == "polynomial":
        d = dc.exponent
        return c * lam, c * mu ** (1 + 1 / (2 * d))
    if dc.kind == "exponential":
        sigma = dc.exponent
        return c * lam / math.log(1 / lam), c * mu * math.log(1 / mu) ** (-1 + 1 / sigma)
    raise UnsupportedDecayClass(f"{dc.kind} tails have no near-zero scale functions")


def real_coefficients(spec: PotentialSpec):
    """Fast scalar evaluator ``x -> (A, A', S, S')`` for real ``x``.

    Used inside ODE right-hand sides where numpy call overhead dominates.
    """
    f = spec.family
    a = spec.p("amplitude")
    if f == "sech-scaled":
        L = spec.p("scale")

        def coeffs(x):
            u = x / L
            if abs(u) > 700:
                return 0.0, 0.0, 0.0, 0.0
            s = 1.0 / math.cosh(u)
            return a * s, -a / L * s * math.tanh(u), 0.0, 0.0
    elif f == "sech2x-phase":
        b = spec.p("phase")

        def coeffs(x):
            if abs(x) > 350:
                return 0.0, 0.0, 0.0, 0.0
            s = 1.0 / math.cosh(2 * x)
            t = math.tanh(2 * x)
            return a * s, -2 * a * s * t, b * s, -2 * b * s * t
    elif f == "algebraic-tail":
        d = spec.p("d")

        def coeffs(x):
            q = 1.0 + x * x
            A = a * q ** (-d / 2)
            return A, -d * x * A / q, 0.0, 0.0
    elif f == "gaussian-tail":
        w = spec.p("width")

        def coeffs(x):
            g = a * math.exp(-(x / w) ** 2)
            return g, -2 * x / w**2 * g, 0.0, 0.0
    else:
        sup = spec.p("support")

        def coeffs(x):
            u = x / sup
            if abs(u) >= 1:
                return 0.0, 0.0, 0.0, 0.0
            v = 1.0 - u * u
            v4 = v**4
            return a * v4 * v, -10 * a * u / sup * v4, 0.0, 0.0
    return coeffs
