"""Exact WKB solutions, their symbols, and connection data at simple turning points.

In the reduced variables v (with u = P R v, P = diag(e^{iS/2eps}, e^{-iS/2eps}),
R = [[1, 1], [-1, 1]]) the system reads (eps/i) v' = M v with
M = [[0, g+], [-g-, 0]].  Write H = (g-/g+)^{1/4}, r = -i g+ H^2 (a branch of
sqrt(-V0)), z = i * integral of r, and T = [[1/H, 1/H], [iH, -iH]] / sqrt 2.  Then

    u+ = e^{ z/eps} P R T sigma_x w+,     u- = e^{-z/eps} P R T w-,

where the symbol w = (w_even, w_odd) solves dw_even/dz = Hc w_odd,
(d/dz +- 2/eps) w_odd = Hc w_even with Hc = (dH/dz)/H and w(z0) = (1, 0).
The factor 1/sqrt 2 makes W[u+(x0), u-(x1)] = 2i w_even+(z1, z0).

Solutions are computed two ways: the symbol by iterated quadrature of the
transport recurrence, and the full solution by integrating the ODE from its
base point with the exact symbol data there.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp

from .geometry import (TurningPoint, g_derivs, g_factors, stokes_angles)
from .potentials import PotentialSpec, amplitude_derivs, phase_derivs

SQRT2 = math.sqrt(2.0)


class ExactWKBError(RuntimeError):
    pass


class TurningPointSingularity(ExactWKBError):
    """A path passes too close to a turning point, where the symbol coefficient blows up."""


class NotProgressive(ExactWKBError):
    pass


class KernelOverflow(ExactWKBError):
    pass


class BaseMismatch(ExactWKBError):
    pass


class RegionIdentificationFailure(ExactWKBError):
    pass


class H1Violation(ExactWKBError):
    """The symbol series fails to converge (terms do not decrease)."""


@dataclass(frozen=True)
class ExactWKBConfig:
    step: float = 2e-3  # path sampling for branch continuation and quadrature
    ode_rtol: float = 1e-12
    series_tol: float = 1e-14
    max_terms: int = 60
    tp_margin: float = 1e-3
    progressive_tol: float = 1e-10
    radius: float = 0.3


DEFAULT = ExactWKBConfig()


# -- coefficient helpers ----------------------------------------------------------------


def _coeffs(spec, x):
    x = np.asarray(x, dtype=complex)
    A, A1, _ = amplitude_derivs(spec, x)
    _, S1, S2, _ = phase_derivs(spec, x)
    return (np.asarray(A, dtype=complex) + 0 * x, np.asarray(A1, dtype=complex) + 0 * x,
            np.asarray(S1, dtype=complex) + 0 * x, np.asarray(S2, dtype=complex) + 0 * x)


def script_H(spec: PotentialSpec, lam: complex, x, r):
    """(dH/dz)/H = (A S'' - 2 lam A' - A' S') / (4 r^3) with r the chosen sqrt(-V0)."""
    A, A1, S1, S2 = _coeffs(spec, x)
    return (A * S2 - 2 * lam * A1 - A1 * S1) / (4 * np.asarray(r) ** 3)


def _densify(pts, step):
    pts = np.asarray(pts, dtype=complex)
    out = [pts[0]]
    for a, b in zip(pts[:-1], pts[1:]):
        n = max(1, int(math.ceil(abs(b - a) / step)))
        out.extend(a + (b - a) * np.linspace(0, 1, n + 1)[1:])
    return np.array(out)


def _arc(center, radius, phi_from, phi_to, orientation, step):
    """Points on a circle from angle phi_from to phi_to (orientation +1 anticlockwise)."""
    d = (phi_to - phi_from) % (2 * math.pi)
    if orientation < 0:
        d = d - 2 * math.pi if d > 0 else 0.0
    n = max(2, int(math.ceil(abs(d) * radius / step)))
    ph = phi_from + d * np.linspace(0, 1, n + 1)
    return center + radius * np.exp(1j * ph)


# -- branch field -------------------------------------------------------------------------------


@dataclass
class PhaseMap:
    """H and r = sqrt(-V0) continued along a route from an anchor, and z along it.

    ``route`` is a densified polyline starting at the anchor; ``H`` holds the
    continued fourth root at every route point, ``r = -i g+ H^2`` and ``z``
    the phase measured from the turning point ``alpha``.
    """

    spec: PotentialSpec
    lam: complex
    alpha: TurningPoint
    route: np.ndarray
    H: np.ndarray
    r: np.ndarray
    z: np.ndarray

    def index(self, x: complex, tol: float = 1e-9) -> int:
        d = np.abs(self.route - x)
        k = int(np.argmin(d))
        if d[k] > tol:
            raise BaseMismatch(f"{x} is not a node of the continuation route")
        return k

    def at(self, x: complex):
        k = self.index(x)
        return complex(self.H[k]), complex(self.r[k]), complex(self.z[k])


def _fourth_root_continue(spec, lam, pts, H0):
    gp, gm = g_factors(spec, pts, lam)
    with np.errstate(all="ignore"):
        h4 = gm / gp
    if not np.all(np.isfinite(h4)):
        raise TurningPointSingularity("route meets a zero of g+ or a singularity")
    roots = h4 ** 0.25
    out = np.empty_like(roots)
    prev = complex(H0)
    phases = np.array([1, 1j, -1, -1j])
    for k, base in enumerate(roots):
        cands = base * phases
        j = int(np.argmin(np.abs(cands - prev)))
        out[k] = cands[j]
        prev = out[k]
    return out, gp


def _z_along(r, pts):
    """Cumulative i * integral of r along a densified polyline (trapezoid with end correction).

    Uses Simpson on consecutive node triples where possible, trapezoid otherwise.
    """
    dz = np.zeros(pts.size, dtype=complex)
    mids_needed = pts.size - 1
    if mids_needed == 0:
        return dz
    dx = np.diff(pts)
    dz[1:] = np.cumsum(0.5 * (r[1:] + r[:-1]) * dx)
    return 1j * dz


def _radial_z(spec, lam, tp: TurningPoint, x: complex, r_end: complex, order: int = 40):
    """z(x, tp) = i * integral from tp to x along the segment, on the branch with r(x) = r_end."""
    t, w = np.polynomial.legendre.leggauss(order)
    u = 0.5 * (t + 1.0)
    w = 0.5 * w
    s = u * u
    xs = tp.x + (x - tp.x) * s
    gp, gm = g_factors(spec, xs, lam)
    q = np.sqrt(-(gp * gm) / s)  # r = q sqrt(s), q smooth
    # align q backwards from the end value
    q_end = complex(np.sqrt(-complex(np.prod(g_factors(spec, x, lam)))))
    if abs(q_end - r_end) > abs(q_end + r_end):
        q_end = -q_end
    prev = q_end
    for k in range(q.size - 1, -1, -1):
        if abs(q[k] + prev) < abs(q[k] - prev):
            q[k] = -q[k]
        prev = q[k]
    # integrand r dx = q sqrt(s) (x - tp) 2u du = q u (x - tp) 2u du
    return complex(1j * np.sum(w * q * u * 2 * u) * (x - tp.x))


# -- symbols ---------------------------------------------------------------------------------------------


@dataclass
class SymbolResult:
    w_even: complex
    w_odd: complex
    terms: int
    error: float
    z: np.ndarray = field(repr=False, default=None)
    even_path: np.ndarray = field(repr=False, default=None)
    odd_path: np.ndarray = field(repr=False, default=None)


def _phi(q):
    """phi1(q) = (e^q - 1)/q and phi2(q) = (e^q - 1 - q)/q^2, stable near 0."""
    q = np.asarray(q, dtype=complex)
    small = np.abs(q) < 1e-3
    with np.errstate(all="ignore"):
        e = np.exp(q)
        p1 = np.where(small, 1 + q / 2 + q * q / 6 + q ** 3 / 24, (e - 1) / q)
        p2 = np.where(small, 0.5 + q / 6 + q * q / 24 + q ** 3 / 120, (e - 1 - q) / (q * q))
    return e, p1, p2


def _iterate(z, Hc, a, tol, max_terms):
    """Iterated quadrature of the transport recurrence on nodes z with coefficient Hc.

    Odd terms use the exponential kernel e^{a (z - z')} exactly for a linear
    interpolant of the source; even terms use the trapezoid rule.
    """
    dz = np.diff(z)
    e, p1, p2 = _phi(a * dz)
    even = np.ones_like(z)
    odd = np.zeros_like(z)
    term_e = np.ones_like(z)
    prev_size = math.inf
    n = 0
    for n in range(1, max_terms + 1):
        f = Hc * term_e
        term_o = np.zeros_like(z)
        inc = dz * (f[:-1] * (p1 - p2) + f[1:] * p2)
        acc = 0j
        for k in range(dz.size):
            acc = e[k] * acc + inc[k]
            term_o[k + 1] = acc
        g = Hc * term_o
        term_e = np.concatenate([[0j], np.cumsum(0.5 * (g[1:] + g[:-1]) * dz)])
        even += term_e
        odd += term_o
        size = max(float(np.max(np.abs(term_o))), float(np.max(np.abs(term_e))))
        if size < tol * max(1.0, float(np.max(np.abs(even)))):
            break
        if n > 3 and size > prev_size:
            raise H1Violation("symbol series terms stopped decreasing")
        prev_size = size
    else:
        raise H1Violation(f"symbol series did not converge in {max_terms} terms")
    return even, odd, n


def symbol_iterate(spec: PotentialSpec, lam: complex, eps: float, alpha: TurningPoint, path, sign: int,
                   H0: complex, cfg: ExactWKBConfig = DEFAULT, check_progressive: bool = True) -> SymbolResult:
    """Symbol w+- at the end of ``path``, with base point at its start.

    ``path`` is a polyline from the base point x0; ``H0`` fixes the branch of
    H at x0.  The series sum(w_n) is formed term by term at two sampling
    steps; the end values are Richardson-extrapolated and ``error`` is the
    size of the correction.
    """
    if sign not in (1, -1):
        raise ValueError("sign must be +1 or -1")
    pts_coarse = _densify(path, cfg.step)
    if np.min(np.abs(pts_coarse - alpha.x)) < cfg.tp_margin:
        raise TurningPointSingularity("symbol path passes through the turning point")
    results = []
    for step in (2 * cfg.step, cfg.step):
        pts = _densify(path, step)
        H, gp = _fourth_root_continue(spec, lam, pts, H0)
        r = -1j * gp * H * H
        z = _z_along(r, pts)
        if check_progressive:
            rz = sign * z.real
            if np.any(np.diff(rz) < -cfg.progressive_tol * max(1.0, float(np.max(np.abs(rz))))):
                raise NotProgressive(f"Re z is not monotone along the path for sign {sign:+d}")
        expo = np.max(-2 * sign * np.real(z[-1] - z) / eps)
        if expo > 700:
            raise KernelOverflow("symbol kernel exceeds the floating point range")
        Hc = script_H(spec, lam, pts, r)
        even, odd, n = _iterate(z, Hc, -2.0 * sign / eps, cfg.series_tol, cfg.max_terms)
        results.append((even, odd, n, z))
    (e1, o1, _, _), (e2, o2, n2, z2) = results
    # both quadratures are second order in the step: extrapolate the end values
    we = e2[-1] + (e2[-1] - e1[-1]) / 3.0
    wo = o2[-1] + (o2[-1] - o1[-1]) / 3.0
    err = max(abs(e2[-1] - e1[-1]), abs(o2[-1] - o1[-1])) / 3.0
    return SymbolResult(complex(we), complex(wo), n2, float(err), z2, e2, o2)


# -- ODE solutions ---------------------------------------------------------------------------------------


def _rhs(spec, lam, eps, a, b):
    d = b - a

    def f(t, y):
        x = a + d * t
        gp, gm = g_factors(spec, x, lam)
        gp, gm = complex(gp), complex(gm)
        Y = y.reshape(2, -1)
        out = np.empty_like(Y)
        out[0] = gp * Y[1]
        out[1] = -gm * Y[0]
        return (1j / eps) * d * out.ravel()

    return f


def integrate(spec: PotentialSpec, lam: complex, eps: float, V0, path, cfg: ExactWKBConfig = DEFAULT):
    """Integrate (eps/i) v' = M v for the columns of V0 (shape (2, k)) along a polyline."""
    V = np.array(V0, dtype=complex).reshape(2, -1)
    pts = np.asarray(path, dtype=complex)
    for a, b in zip(pts[:-1], pts[1:]):
        if a == b:
            continue
        scale = float(np.max(np.abs(V)))
        sol = solve_ivp(_rhs(spec, lam, eps, a, b), (0.0, 1.0), V.ravel(), method="DOP853",
                        rtol=cfg.ode_rtol, atol=cfg.ode_rtol * 1e-3 * scale)
        if not sol.success:
            raise ExactWKBError(sol.message)
        V = sol.y[:, -1].reshape(2, -1)
    return V


def frame(H: complex) -> np.ndarray:
    """T / sqrt 2 with T = [[1/H, 1/H], [iH, -iH]]."""
    return np.array([[1 / H, 1 / H], [1j * H, -1j * H]]) / SQRT2


def wkb_data(H: complex, z: complex, sign: int, eps: float, w=(1.0, 0.0)) -> np.ndarray:
    """v-components of u+- at a point where the phase is z and the symbol is w."""
    w = np.asarray(w, dtype=complex)
    vec = frame(H) @ (w[::-1] if sign > 0 else w)
    return cmath.exp(sign * z / eps) * vec


@dataclass
class ExactSolution:
    """An exact WKB solution fixed by its data at the symbol base point."""

    spec: PotentialSpec
    lam: complex
    eps: float
    base: complex
    sign: int
    data: np.ndarray  # v at the base point
    label: str = ""

    def at(self, path, cfg: ExactWKBConfig = DEFAULT) -> np.ndarray:
        p = np.asarray(path, dtype=complex)
        if abs(p[0] - self.base) > 1e-12:
            raise BaseMismatch("paths must start at the base point")
        return integrate(self.spec, self.lam, self.eps, self.data, p, cfg)[:, 0]


def exact_wkb_solution(spec: PotentialSpec, lam: complex, eps: float, pmap: PhaseMap, x0: complex, sign: int,
                       z_shift: complex = 0j, label: str = "") -> ExactSolution:
    """u+-(x, lam, eps, alpha, x0); ``z_shift`` = z(beta, alpha) moves the phase base to beta."""
    H, _, z = pmap.at(x0)
    return ExactSolution(spec, complex(lam), float(eps), complex(x0), int(sign),
                         wkb_data(H, z - z_shift, sign, eps), label)


def wronskian(va, vb) -> complex:
    """Wronskian of the original-variable solutions from their reduced components (det P R = 2)."""
    return complex(2.0 * (va[0] * vb[1] - va[1] * vb[0]))


def symbol_from_solution(v, H: complex, z: complex, sign: int, eps: float) -> np.ndarray:
    """Recover (w_even, w_odd) from reduced components at a point."""
    c = np.linalg.solve(frame(H), np.asarray(v, dtype=complex)) * cmath.exp(-sign * z / eps)
    return c[::-1] if sign > 0 else c


def three_solution_residual(u0, u1, u2) -> float:
    """Relative size of W[u1,u2] u0 + W[u2,u0] u1 + W[u0,u1] u2 at one or more points.

    Each argument has shape (2,) or (2, npoints); the Wronskians are taken at
    the first point.
    """
    U0, U1, U2 = (np.asarray(u, dtype=complex).reshape(2, -1) for u in (u0, u1, u2))
    w12 = wronskian(U1[:, 0], U2[:, 0])
    w20 = wronskian(U2[:, 0], U0[:, 0])
    w01 = wronskian(U0[:, 0], U1[:, 0])
    res = w12 * U0 + w20 * U1 + w01 * U2
    scale = max(abs(w12) * np.max(np.abs(U0)), abs(w20) * np.max(np.abs(U1)), abs(w01) * np.max(np.abs(U2)))
    return float(np.max(np.abs(res)) / scale)


# -- local connection ---------------------------------------------------------------------------------------


def _sector_angles(spec, lam, alpha: TurningPoint, toward: complex | None, orientation: int):
    """Stokes angles l0, l1, l2 (numbered in ``orientation``) and the bisectors of w0, w1, w2."""
    th = np.array(stokes_angles(spec, alpha, lam))
    if toward is None:
        k0 = 0
    else:
        ref = cmath.phase(toward - alpha.x)
        k0 = int(np.argmin([abs(cmath.exp(1j * t) - cmath.exp(1j * ref)) for t in th]))
    l0 = th[k0]
    steps = [(t - l0) * orientation % (2 * math.pi) for t in th]
    order = np.argsort(steps)
    l = [th[order[0]], th[order[1]], th[order[2]]]  # l0, l1, l2 in the requested orientation
    def mid(a, b):
        d = (b - a) * orientation % (2 * math.pi)
        return a + orientation * 0.5 * d
    phi0 = mid(l[1], l[2])
    phi1 = mid(l[2], l[0])
    phi2 = mid(l[0], l[1])
    return l, (phi0, phi1, phi2)


def _anchor_H(spec, lam, alpha: TurningPoint, x0: complex):
    """H at x0 such that Re z(x0, alpha) < 0, i.e. Re z increases from x0 toward alpha."""
    gp, gm = (complex(v) for v in g_factors(spec, x0, lam))
    H = (gm / gp) ** 0.25
    for cand in (H, 1j * H):
        r = -1j * gp * cand * cand
        z = _radial_z(spec, lam, alpha, x0, r)
        if z.real < 0:
            return cand, z
    raise RegionIdentificationFailure("x0 lies on a Stokes line of alpha")


def sector_symbol(spec: PotentialSpec, lam: complex, eps: float, alpha: TurningPoint,
                  radius: float | None = None, toward: complex | None = None,
                  cfg: ExactWKBConfig = DEFAULT) -> SymbolResult:
    """Symbol of u+ based on the bisector of the first Stokes sector, carried along the circle into the next one.

    The sectors are numbered as in :func:`connection_triple`, so the result
    is the symbol behind its W01.  The arc is progressive for sign +1.
    """
    R = radius if radius is not None else cfg.radius
    _, phis = _sector_angles(spec, lam, alpha, toward, +1)
    H0, _ = _anchor_H(spec, lam, alpha, alpha.x + R * cmath.exp(1j * phis[0]))
    path = _arc(alpha.x, R, phis[0], phis[1], +1, cfg.step)
    return symbol_iterate(spec, lam, eps, alpha, path, +1, H0, cfg)


@dataclass
class ConnectionTriple:
    alpha: TurningPoint
    base_points: tuple[complex, complex, complex]
    solutions: tuple[ExactSolution, ExactSolution, ExactSolution]
    values_at_alpha: np.ndarray  # (2, 3)
    W01: complex
    W12: complex
    W20: complex
    expected: dict
    pmap: PhaseMap = field(repr=False, default=None)

    @property
    def normalized(self) -> dict:
        return {k: getattr(self, k) / v for k, v in self.expected.items()}

    @property
    def identity_residual(self) -> float:
        v = self.values_at_alpha
        return three_solution_residual(v[:, 0], v[:, 1], v[:, 2])


def expected_wronskians(alpha: TurningPoint) -> dict:
    """Leading values 2i, -2i and +-2 (plus when alpha is a zero of g+).

    The sign of W20 follows from continuing H anticlockwise from x0 to x2;
    it enters m only through the product over both turning points.
    """
    return {"W01": 2j, "W12": -2j, "W20": 2.0 if alpha.vanishing_factor == "g_plus" else -2.0}


def _check_path_progressive(pmap_z, sign, tol=1e-9):
    rz = sign * np.real(pmap_z)
    return bool(np.all(np.diff(rz) >= -tol * max(1.0, float(np.max(np.abs(rz))))))


def connection_triple(spec: PotentialSpec, lam: complex, eps: float, alpha: TurningPoint,
                      radius: float | None = None, toward: complex | None = None,
                      cfg: ExactWKBConfig = DEFAULT) -> ConnectionTriple:
    """Exact WKB solutions u0 = u+(x0), u1 = u-(x1), u2 = u+(x2) around a simple turning point.

    Base points sit on the bisectors of the three Stokes sectors at distance
    ``radius``; the Stokes lines are numbered anticlockwise starting from the
    one pointing closest to ``toward``.  The branch is fixed at x0 and carried
    anticlockwise (away from the cut on l1) through x1 to x2.  Each solution
    is integrated radially to alpha, where the Wronskians are taken.
    """
    if alpha.order != 1:
        raise TurningPointSingularity("connection data needs a simple turning point")
    R = radius if radius is not None else cfg.radius
    _, phis = _sector_angles(spec, lam, alpha, toward, +1)
    xs = [alpha.x + R * cmath.exp(1j * p) for p in phis]
    H0, z0 = _anchor_H(spec, lam, alpha, xs[0])
    route = np.concatenate([_arc(alpha.x, R, phis[0], phis[1], +1, cfg.step),
                            _arc(alpha.x, R, phis[1], phis[2], +1, cfg.step)[1:]])
    pmap = _phase_map(spec, lam, alpha, route, H0, z0)
    sols = (exact_wkb_solution(spec, lam, eps, pmap, xs[0], +1, label="u0"),
            exact_wkb_solution(spec, lam, eps, pmap, xs[1], -1, label="u1"),
            exact_wkb_solution(spec, lam, eps, pmap, xs[2], +1, label="u2"))
    vals = np.stack([s.at([s.base, alpha.x], cfg) for s in sols], axis=1)
    W01 = wronskian(vals[:, 0], vals[:, 1])
    W12 = wronskian(vals[:, 1], vals[:, 2])
    W20 = wronskian(vals[:, 2], vals[:, 0])
    return ConnectionTriple(alpha, tuple(xs), sols, vals, W01, W12, W20, expected_wronskians(alpha), pmap)


def _phase_map(spec, lam, alpha, route, H0, z0):
    H, gp = _fourth_root_continue(spec, lam, route, H0)
    r = -1j * gp * H * H
    z = z0 + _z_along_fine(spec, lam, route, H)
    return PhaseMap(spec, complex(lam), alpha, route, H, r, z)


def _z_along_fine(spec, lam, route, H):
    """i * integral of r along the route using 3-point Gauss per segment (branch from H)."""
    t = np.array([-math.sqrt(0.6), 0.0, math.sqrt(0.6)])
    w = np.array([5 / 9, 8 / 9, 5 / 9])
    a, b = route[:-1], route[1:]
    out = np.zeros(route.size, dtype=complex)
    if route.size < 2:
        return out
    acc = np.zeros(a.size, dtype=complex)
    for tk, wk in zip(t, w):
        xm = 0.5 * (a + b) + 0.5 * (b - a) * tk
        gp, gm = g_factors(spec, xm, lam)
        # H at the node by continuation from the segment start
        h4 = gm / gp
        base = h4 ** 0.25
        cands = base[:, None] * np.array([1, 1j, -1, -1j])[None, :]
        j = np.argmin(np.abs(cands - H[:-1, None]), axis=1)
        Hm = cands[np.arange(a.size), j]
        acc += wk * (-1j * gp * Hm * Hm)
    out[1:] = np.cumsum(1j * 0.5 * (b - a) * acc)
    return out


# -- m-factor for a pair of turning points --------------------------------------------------------------------


@dataclass
class MFactor:
    m: complex
    delta: int
    z_beta_alpha: complex
    wronskians: dict
    base_points: dict
    progressive: dict

    @property
    def deviation(self) -> float:
        return abs(self.m - self.delta)


def m_factor(spec: PotentialSpec, lam: complex, eps: float, alpha: TurningPoint, beta: TurningPoint,
             x1: complex | None = None, x2: complex | None = None, radius: float | None = None,
             offset: float | None = None, cfg: ExactWKBConfig = DEFAULT) -> MFactor:
    """m = W[u0a, u1a] W[u2b, u0b] / (W[u2a, u0a] W[u0b, u1b]) for a pair of simple turning points.

    u0a = u+(alpha, x0a) with x0a on the side of alpha away from beta,
    u0b = u-(beta, x0b) on the far side of beta, and u1 = u-(., x1),
    u2 = u+(., x2) share the base points x1 (right of the chord alpha -> beta)
    and x2 (left of it).  The branch is fixed at x0a and continued around
    alpha anticlockwise to x1, across the chord to x2 and clockwise around
    beta to x0b.
    """
    from .geometry import delta_index
    delta = delta_index(alpha, beta)
    R = radius if radius is not None else cfg.radius
    chord = beta.x - alpha.x
    unit = chord / abs(chord)
    d = offset if offset is not None else 0.5 * abs(chord)
    mid = 0.5 * (alpha.x + beta.x)
    x1 = x1 if x1 is not None else mid - 1j * unit * d
    x2 = x2 if x2 is not None else mid + 1j * unit * d
    _, phis_a = _sector_angles(spec, lam, alpha, beta.x, +1)
    _, phis_b = _sector_angles(spec, lam, beta, alpha.x, -1)
    x0a = alpha.x + R * cmath.exp(1j * phis_a[0])
    x0b = beta.x + R * cmath.exp(1j * phis_b[0])
    H0, z0 = _anchor_H(spec, lam, alpha, x0a)
    psi1 = cmath.phase(x1 - alpha.x)
    psi2 = cmath.phase(x2 - beta.x)
    legs = [_arc(alpha.x, R, phis_a[0], psi1, +1, cfg.step),
            _densify([alpha.x + R * cmath.exp(1j * psi1), x1, x2, beta.x + R * cmath.exp(1j * psi2)], cfg.step)[1:],
            _arc(beta.x, R, psi2, phis_b[0], -1, cfg.step)[1:]]
    route = np.concatenate(legs)
    # exact nodes for the shared base points
    pmap = _phase_map(spec, lam, alpha, route, H0, z0)
    k1 = int(np.argmin(np.abs(route - x1)))
    k2 = int(np.argmin(np.abs(route - x2)))
    x1, x2 = complex(route[k1]), complex(route[k2])
    Hb, rb, zb2 = pmap.at(x2)
    z_beta_alpha = zb2 - _radial_z(spec, lam, beta, x2, rb)
    sol = {
        "u0a": exact_wkb_solution(spec, lam, eps, pmap, x0a, +1, label="u0a"),
        "u1a": exact_wkb_solution(spec, lam, eps, pmap, x1, -1, label="u1a"),
        "u2a": exact_wkb_solution(spec, lam, eps, pmap, x2, +1, label="u2a"),
        "u0b": exact_wkb_solution(spec, lam, eps, pmap, complex(route[-1]), -1, z_beta_alpha, label="u0b"),
        "u1b": exact_wkb_solution(spec, lam, eps, pmap, x1, -1, z_beta_alpha, label="u1b"),
        "u2b": exact_wkb_solution(spec, lam, eps, pmap, x2, +1, z_beta_alpha, label="u2b"),
    }
    at_a = {k: sol[k].at([sol[k].base, alpha.x], cfg) for k in ("u0a", "u1a", "u2a")}
    at_b = {k: sol[k].at([sol[k].base, beta.x], cfg) for k in ("u0b", "u1b", "u2b")}
    W = {"W01a": wronskian(at_a["u0a"], at_a["u1a"]), "W20a": wronskian(at_a["u2a"], at_a["u0a"]),
         "W20b": wronskian(at_b["u2b"], at_b["u0b"]), "W01b": wronskian(at_b["u0b"], at_b["u1b"])}
    m = W["W01a"] * W["W20b"] / (W["W20a"] * W["W01b"])
    x0b = complex(route[-1])
    Hb0, _, zb0 = pmap.at(x0b)
    Ha0 = complex(pmap.H[0])
    prog = {
        "x0a->x1": _progressive_via(spec, lam, alpha.x, R, x0a, x1, +1, phis_a[1], Ha0, z0, +1, cfg),
        "x0a->x2": _progressive_via(spec, lam, alpha.x, R, x0a, x2, -1, phis_a[2], Ha0, z0, +1, cfg),
        "x0b->x2": _progressive_via(spec, lam, beta.x, R, x0b, x2, +1, phis_b[2], Hb0, zb0, -1, cfg),
        "x0b->x1": _progressive_via(spec, lam, beta.x, R, x0b, x1, -1, phis_b[1], Hb0, zb0, -1, cfg),
    }
    return MFactor(complex(m), delta, complex(z_beta_alpha), W,
                   {"x0a": x0a, "x1": x1, "x2": x2, "x0b": x0b}, prog)


def _progressive_via(spec, lam, center, R, xa, xb, orientation, phi_target, H0, z0, sign, cfg):
    """Whether some candidate curve from xa to xb keeps sign * Re z non-decreasing.

    Candidates: along the circle of radius R around ``center`` (in the given
    orientation) to the bisector angle ``phi_target`` and then straight to
    xb, to the angle of xb and then radially, or first inward to radius R/4
    where the local (x - center)^{3/2} picture is accurate.
    """
    pa = cmath.phase(xa - center)
    for rho, phi in ((R, phi_target), (R, cmath.phase(xb - center)), (0.25 * R, phi_target)):
        start = _densify([xa, center + rho * cmath.exp(1j * pa)], cfg.step)
        pts = np.concatenate([start, _arc(center, rho, pa, phi, orientation, cfg.step)[1:],
                              _densify([center + rho * cmath.exp(1j * phi), xb], cfg.step)[1:]])
        H, _ = _fourth_root_continue(spec, lam, pts, H0)
        z = z0 + _z_along_fine(spec, lam, pts, H)
        if _check_path_progressive(z, sign):
            return True
    return False
