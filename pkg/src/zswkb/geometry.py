"""Complex turning-point geometry for nonzero phase.

The reduced system has coefficient matrix [[0, g+], [-g-, 0]] with
g+-(x, lam) = -+[lam + S'(x)/2 +- i A(x)], so V0 = g+ g- = -(lam + S'/2)^2 - A^2.
This module locates zeros of g+-, continues sqrt(-V0) along paths, traces
Stokes lines Re{i sqrt(-V0) dx} = 0, evaluates actions between turning
points, and follows the curves Re z(beta, lam, alpha) = 0 in the lam-plane.
"""
from __future__ import annotations

import cmath
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .direct import EigenvalueRecord
from .potentials import PotentialSpec, amplitude_derivs, phase_derivs

log = logging.getLogger(__name__)

FACTORS = ("g_plus", "g_minus")


class GeometryError(RuntimeError):
    pass


class DegenerateCluster(GeometryError):
    """Two zeros of the same factor nearly coincide (a near-double turning point)."""


class OnCutError(GeometryError):
    pass


class SingularityHit(GeometryError):
    pass


class BranchSwap(GeometryError):
    pass


class NonMonotonePhase(GeometryError):
    pass


@dataclass(frozen=True)
class GeometryConfig:
    grid: int = 40
    dedup: float = 1e-6
    tp_sep: float = 1e-4
    newton_tol: float = 1e-14
    path_step: float = 1e-2
    arc_tol: float = 1e-8
    sing_margin: float = 1e-2
    quad_order: int = 48
    arc_step: float = 0.02
    max_samples: int = 2000
    lam_fd: float = 1e-6


DEFAULT = GeometryConfig()


@dataclass(frozen=True)
class TurningPoint:
    x: complex
    vanishing_factor: str  # g_plus | g_minus
    order: int = 1
    lam: complex = 0j

    def __post_init__(self):
        if self.vanishing_factor not in FACTORS:
            raise ValueError(f"vanishing_factor must be one of {FACTORS}")


@dataclass
class ContourPath:
    points: np.ndarray
    role: str  # C_minus | C_zero | C_plus | stokes | generic
    lam: complex
    diag: dict = field(default_factory=dict)

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=complex)

    def to_json(self, branch_id: int | None = None) -> dict:
        out = {"role": self.role, "lam": [self.lam.real, self.lam.imag],
               "samples": [{"re": float(p.real), "im": float(p.imag)} for p in self.points]}
        if branch_id is not None:
            out["branch_id"] = branch_id
        return out


@dataclass
class ArcSample:
    lam: complex
    alpha: TurningPoint
    beta: TurningPoint
    action: complex


@dataclass
class SpectralArc:
    samples: list[ArcSample]
    branch_id: int = 0
    ends: dict = field(default_factory=dict)

    @property
    def lams(self) -> np.ndarray:
        return np.array([s.lam for s in self.samples])

    def to_json(self) -> dict:
        return {"branch_id": self.branch_id,
                "samples": [{"re": float(s.lam.real), "im": float(s.lam.imag),
                             "action_re": float(s.action.real), "action_im": float(s.action.imag)}
                            for s in self.samples],
                "ends": {k: [complex(v).real, complex(v).imag] if isinstance(v, complex) else v
                         for k, v in self.ends.items()}}


# -- coefficient evaluation ------------------------------------------------------------


def _coeffs(spec: PotentialSpec, x):
    """(A, A', S', S'') at complex x; NaN outside the analyticity strip."""
    x = np.asarray(x, dtype=complex)
    bad = np.abs(x.imag) >= spec.strip if spec.analytic else np.abs(x.imag) > 0
    xs = np.where(bad, np.nan, x)
    with np.errstate(all="ignore"):
        A, A1, _ = amplitude_derivs(spec, xs)
        _, S1, S2, _ = phase_derivs(spec, xs)
        A, A1, S1, S2 = (np.asarray(v, dtype=complex) + 0 * xs for v in (A, A1, S1, S2))
    return A, A1, S1, S2


def g_factors(spec: PotentialSpec, x, lam):
    """(g+, g-) at x."""
    A, _, S1, _ = _coeffs(spec, x)
    base = lam + 0.5 * S1
    return -(base + 1j * A), base - 1j * A


def g_derivs(spec: PotentialSpec, x):
    """x-derivatives (g+', g-') (independent of lam)."""
    _, A1, _, S2 = _coeffs(spec, x)
    return -(0.5 * S2 + 1j * A1), 0.5 * S2 - 1j * A1


def V0(spec: PotentialSpec, x, lam):
    """-(lam + S'/2)^2 - A^2."""
    A, _, S1, _ = _coeffs(spec, x)
    return -(lam + 0.5 * S1) ** 2 - A * A


def poles(spec: PotentialSpec, box) -> list[complex]:
    """Singularities of A, S inside ``box = (re0, re1, im0, im1)``."""
    re0, re1, im0, im1 = box
    out = []
    if spec.family in ("sech-scaled", "sech2x-phase"):
        half = 0.5 * math.pi * (spec.p("scale") if spec.family == "sech-scaled" else 0.5)
        k = math.floor((im0 / half - 1) / 2) - 1
        while True:
            y = (2 * k + 1) * half
            if y > im1:
                break
            if y >= im0 and re0 <= 0 <= re1:
                out.append(complex(0.0, y))
            k += 1
    elif spec.family == "algebraic-tail":
        out = [p for p in (1j, -1j) if re0 <= 0 <= re1 and im0 <= p.imag <= im1]
    return out


# -- turning points ------------------------------------------------------------------------


def find_turning_points(spec: PotentialSpec, lam: complex, box, cfg: GeometryConfig = DEFAULT,
                        on_cluster: str = "flag") -> list[TurningPoint]:
    """Zeros of g+ and g- inside ``box = (re0, re1, im0, im1)``.

    Newton's method runs separately on each factor from a ``cfg.grid`` squared
    seed grid; roots within ``cfg.dedup`` are merged and roots with
    |g'| < tp_sep are marked order 2.  With ``on_cluster="raise"`` a
    near-double configuration raises DegenerateCluster.
    """
    if not spec.analytic:
        raise GeometryError("turning points need an analytic family")
    re0, re1, im0, im1 = map(float, box)
    lim = spec.strip * (1 - 1e-9)
    im0c, im1c = max(im0, -lim), min(im1, lim)
    gx = np.linspace(re0, re1, cfg.grid)
    gy = np.linspace(im0c, im1c, cfg.grid)
    seeds = (gx[None, :] + 1j * gy[:, None]).ravel()
    out: list[TurningPoint] = []
    for k, name in enumerate(FACTORS):
        x = seeds.copy()
        for _ in range(60):
            g = g_factors(spec, x, lam)[k]
            d = g_derivs(spec, x)[k]
            with np.errstate(all="ignore"):
                step = g / d
            x = x - step
            if np.all(~np.isfinite(step) | (np.abs(step) < cfg.newton_tol)):
                break
        g = g_factors(spec, x, lam)[k]
        d = g_derivs(spec, x)[k]
        ok = np.isfinite(x) & (np.abs(g) < 1e-10) & (x.real >= re0) & (x.real <= re1) \
            & (x.imag >= im0) & (x.imag <= im1)
        roots = []
        for xr, dr in zip(x[ok], d[ok]):
            if all(abs(xr - r) > cfg.dedup for r, _ in roots):
                roots.append((complex(xr), complex(dr)))
        for i, (r, dr) in enumerate(roots):
            for r2, _ in roots[i + 1:]:
                if abs(r - r2) < 10 * cfg.dedup and on_cluster == "raise":
                    raise DegenerateCluster(f"{name} roots {r:.6g} and {r2:.6g} nearly coincide")
            order = 1 if abs(dr) >= cfg.tp_sep else 2
            if order == 2 and on_cluster == "raise":
                raise DegenerateCluster(f"double zero of {name} at {r:.8g}")
            out.append(TurningPoint(r, name, order, complex(lam)))
    out.sort(key=lambda t: (round(t.x.real, 9), t.x.imag))
    return out


def refine_turning_point(spec: PotentialSpec, tp: TurningPoint, lam: complex, tol: float = 1e-14) -> TurningPoint:
    """Newton continuation of ``tp`` to a new lam on the same factor."""
    k = FACTORS.index(tp.vanishing_factor)
    x = complex(tp.x)
    for _ in range(50):
        g = complex(g_factors(spec, x, lam)[k])
        d = complex(g_derivs(spec, x)[k])
        if not (np.isfinite(g) and np.isfinite(d)) or d == 0:
            raise GeometryError("turning point continuation failed")
        step = g / d
        x -= step
        if abs(step) < tol:
            break
    return TurningPoint(x, tp.vanishing_factor, tp.order, complex(lam))


def is_simple(tp: TurningPoint) -> bool:
    return tp.order == 1


# -- branch of sqrt(-V0) ----------------------------------------------------------------------


def _align(vals: np.ndarray, start: complex | None = None) -> np.ndarray:
    """Flip signs so consecutive square-root samples vary continuously."""
    out = np.array(vals, dtype=complex)
    if start is not None and abs(out[0] + start) < abs(out[0] - start):
        out[0] = -out[0]
    for k in range(1, out.size):
        if abs(out[k] + out[k - 1]) < abs(out[k] - out[k - 1]):
            out[k] = -out[k]
    return out


def _segments_cross(p1, p2, q1, q2) -> bool:
    def cross(a, b):
        return a.real * b.imag - a.imag * b.real

    d1, d2 = p2 - p1, q2 - q1
    den = cross(d1, d2)
    if den == 0:
        return False
    t = cross(q1 - p1, d2) / den
    u = cross(q1 - p1, d1) / den
    return 0.0 < t <= 1.0 and 0.0 <= u <= 1.0


def sqrt_mV0(spec: PotentialSpec, x: complex, lam: complex, cut: ContourPath | None = None,
             cfg: GeometryConfig = DEFAULT, x_far: float | None = None, side: str | None = None) -> complex:
    """Branch of sqrt(-V0) that behaves like lam far to the right, cut along ``cut``.

    The value is continued from x_far along the vertical then horizontal legs
    to ``x``; each crossing of the cut polyline flips the sign.  Points on the
    cut raise OnCutError unless ``side`` ("above" or "below") asks for a
    one-sided limit.
    """
    x = complex(x)
    if cut is not None and side is None:
        pts = cut.points
        seg_d = _dist_to_polyline(x, pts)
        if seg_d < 1e-12:
            raise OnCutError(f"x={x} lies on the cut")
    if side is not None:
        x = x + (1j if side == "above" else -1j) * 1e-9
    R = x_far if x_far is not None else max(12.0, abs(x.real) + 12.0)
    legs = [complex(R, 0.0), complex(R, x.imag), x]
    path = [legs[0]]
    for a, b in zip(legs[:-1], legs[1:]):
        n = max(2, int(math.ceil(abs(b - a) / cfg.path_step)))
        path.extend(a + (b - a) * np.linspace(0, 1, n + 1)[1:])
    path = np.array(path)
    vals = np.sqrt(-V0(spec, path, lam))
    vals = _align(vals, start=complex(lam))
    val = vals[-1]
    if cut is not None:
        flips = 0
        for p1, p2 in zip(path[:-1], path[1:]):
            for q1, q2 in zip(cut.points[:-1], cut.points[1:]):
                if _segments_cross(p1, p2, q1, q2):
                    flips += 1
        if flips % 2:
            val = -val
    return complex(val)


def _dist_to_polyline(x: complex, pts: np.ndarray) -> float:
    best = math.inf
    for a, b in zip(pts[:-1], pts[1:]):
        d = b - a
        t = 0.0 if d == 0 else max(0.0, min(1.0, ((x - a) * d.conjugate()).real / abs(d) ** 2))
        best = min(best, abs(x - (a + t * d)))
    return best


# -- action integrals ------------------------------------------------------------------------------


def _gl01(order: int):
    t, w = np.polynomial.legendre.leggauss(order)
    return 0.5 * (t + 1.0), 0.5 * w


def _segment_action(spec, lam, a, b, tp_a: bool, tp_b: bool, order: int, start=None):
    """i * integral of sqrt(-V0) over the straight segment a -> b.

    Endpoints that are turning points are handled by a cosine substitution
    under which the square-root endpoint behaviour becomes analytic.
    Returns the value and the last sqrt sample (for branch continuity).
    """
    u, w = _gl01(order)
    theta = u * np.pi
    if tp_a and tp_b:
        s = 0.5 * (1 - np.cos(theta))
        ds = 0.5 * np.pi * np.sin(theta) * w
        weight = np.sqrt(s * (1 - s))
    elif tp_a:
        s = 1 - np.cos(0.5 * theta)
        ds = 0.5 * np.pi * np.sin(0.5 * theta) * w
        weight = np.sqrt(s)
    elif tp_b:
        s = np.sin(0.5 * theta)
        ds = 0.5 * np.pi * np.cos(0.5 * theta) * w
        weight = np.sqrt(1 - s)
    else:
        s, ds, weight = u, w, np.ones_like(u)
    x = a + (b - a) * s
    with np.errstate(all="ignore"):
        q = np.sqrt(-V0(spec, x, lam) / (weight * weight))
    ref = None if start is None else start / max(weight[0], 1e-300)
    q = _align(q, start=ref)
    r = q * weight
    val = 1j * np.sum(r * ds) * (b - a)
    return complex(val), complex(r[-1] if not tp_b else q[-1])


def action_between(spec: PotentialSpec, lam: complex, alpha: TurningPoint | complex, beta: TurningPoint | complex,
                   path: ContourPath | None = None, cfg: GeometryConfig = DEFAULT, sign_ref: complex | None = None,
                   return_error: bool = False):
    """z(beta, lam, alpha) = i * integral of sqrt(-V0) along ``path`` from alpha to beta.

    ``path`` defaults to the straight segment.  The branch is continued along
    the path; ``sign_ref`` fixes it through the value of sqrt(-V0) expected
    near alpha (otherwise the principal square root there is used).  The
    result is the order-(2n) Gauss-Legendre value; ``return_error`` also
    returns its relative difference to order n.
    """
    xa = complex(alpha.x if isinstance(alpha, TurningPoint) else alpha)
    xb = complex(beta.x if isinstance(beta, TurningPoint) else beta)
    if xa == xb and path is None:
        return (0j, 0.0) if return_error else 0j
    pts = np.array([xa, xb]) if path is None else np.asarray(path.points, dtype=complex)
    a_is_tp = isinstance(alpha, TurningPoint)
    b_is_tp = isinstance(beta, TurningPoint)
    vals = []
    for order in (cfg.quad_order, 2 * cfg.quad_order):
        total, last = 0j, sign_ref
        nseg = len(pts) - 1
        for k in range(nseg):
            v, last = _segment_action(spec, lam, pts[k], pts[k + 1], a_is_tp and k == 0,
                                      b_is_tp and k == nseg - 1, order, start=last if k else sign_ref)
            total += v
        vals.append(total)
    err = abs(vals[1] - vals[0]) / max(abs(vals[1]), 1e-300)
    return (vals[1], err) if return_error else vals[1]


def delta_index(alpha: TurningPoint, beta: TurningPoint) -> int:
    """-1 when both points kill the same factor, +1 otherwise."""
    if alpha.order != 1 or beta.order != 1:
        raise GeometryError("delta index needs simple turning points")
    return -1 if alpha.vanishing_factor == beta.vanishing_factor else 1


# -- Stokes lines ----------------------------------------------------------------------------------


def _local_c(spec, tp: TurningPoint, lam):
    gp, gm = g_factors(spec, tp.x, lam)
    dp, dm = g_derivs(spec, tp.x)
    return complex(-(dp * gm + gp * dm))  # -V0 ~ c (x - tp)


def stokes_angles(spec: PotentialSpec, tp: TurningPoint, lam: complex) -> np.ndarray:
    """Launch angles of the three Stokes lines from the local (x - tp)^{3/2} model."""
    c = _local_c(spec, tp, lam)
    phase = cmath.phase(1j * cmath.sqrt(c))
    return np.mod([(2.0 / 3.0) * (0.5 * math.pi + k * math.pi - phase) for k in range(3)], 2 * math.pi)


def trace_stokes(spec: PotentialSpec, lam: complex, tp: TurningPoint, box=None, cfg: GeometryConfig = DEFAULT,
                 max_arclength: float = 6.0, others: list[TurningPoint] | None = None,
                 on_singularity: str = "stop", r0: float = 1e-3) -> list[ContourPath]:
    """The three Stokes lines Re{i sqrt(-V0) dx} = 0 emanating from a simple turning point.

    Lines are launched along the local-model angles and integrated with RK4
    in arclength along dx ~ 1/sqrt(-V0).  Each stops on leaving ``box``, on
    reaching another turning point in ``others``, near a singularity of the
    coefficients, or at ``max_arclength``; ``diag["residual"]`` holds the
    largest |Re z| along the line.
    """
    if tp.order != 1:
        raise GeometryError("Stokes lines are traced from simple turning points")
    if box is None:
        lim = spec.strip
        box = (-4.0, 4.0, -lim, lim)
    re0, re1, im0, im1 = box
    sing = poles(spec, (re0 - 1, re1 + 1, im0 - 1, im1 + 1))
    others = [o for o in (others or []) if abs(o.x - tp.x) > 10 * r0]
    c = _local_c(spec, tp, lam)
    sc = cmath.sqrt(c)
    lines = []
    for th in stokes_angles(spec, tp, lam):
        x = tp.x + r0 * cmath.exp(1j * th)
        # local model gives z(x) = i (2/3) sqrt(c) (x - tp)^{3/2}, and branch reference
        r_ref = sc * cmath.sqrt(x - tp.x)
        r_ref = r_ref if abs((r_ref * (x - tp.x)).imag) >= 0 else r_ref
        d_prev = cmath.exp(1j * th)
        z = 1j * (2.0 / 3.0) * sc * (x - tp.x) ** 1.5
        # choose the root branch consistent with the launch direction
        root = complex(np.sqrt(-V0(spec, x, lam)))
        if abs(root - r_ref) > abs(root + r_ref):
            root = -root
        pts = [tp.x, x]
        resid = abs(z.real)
        reason = "max_arclength"
        s = r0
        h = cfg.path_step
        while s < max_arclength:
            def field(xx, rprev):
                r = complex(np.sqrt(-V0(spec, xx, lam)))
                if abs(r + rprev) < abs(r - rprev):
                    r = -r
                d = 1.0 / r
                return d / abs(d), r

            k1, r1 = field(x, root)
            if (k1 * d_prev.conjugate()).real < 0:
                sgn = -1.0
            else:
                sgn = 1.0
            k1 *= sgn
            k2, _ = field(x + 0.5 * h * k1, r1)
            k2 *= sgn
            k3, _ = field(x + 0.5 * h * k2, r1)
            k3 *= sgn
            k4, r4 = field(x + h * k3, r1)
            k4 *= sgn
            xn = x + h * (k1 + 2 * k2 + 2 * k3 + k4) / 6.0
            if not np.isfinite(xn):
                reason = "nonfinite"
                break
            # Simpson update of z along the step
            rm = complex(np.sqrt(-V0(spec, 0.5 * (x + xn), lam)))
            rm = rm if abs(rm - r1) <= abs(rm + r1) else -rm
            rn = complex(np.sqrt(-V0(spec, xn, lam)))
            rn = rn if abs(rn - rm) <= abs(rn + rm) else -rn
            z += 1j * (xn - x) * (r1 + 4 * rm + rn) / 6.0
            resid = max(resid, abs(z.real))
            d_prev = (xn - x) / abs(xn - x)
            x, root = xn, rn
            pts.append(x)
            s += h
            if not (re0 <= x.real <= re1 and im0 <= x.imag <= im1):
                reason = "left_box"
                break
            near = [o for o in others if abs(o.x - x) < 2 * h]
            if near:
                pts.append(near[0].x)
                reason = "turning_point"
                break
            if any(abs(x - p) < cfg.sing_margin for p in sing):
                if on_singularity == "raise":
                    raise SingularityHit(f"Stokes line from {tp.x:.6g} reached a singularity near {x:.6g}")
                reason = "singularity"
                break
        lines.append(ContourPath(np.array(pts), "stokes", complex(lam),
                                 {"angle": float(th), "end": reason, "residual": float(resid),
                                  "length": float(s)}))
    return lines


# -- admissibility -----------------------------------------------------------------------------------


def _cumulative_action(spec, lam, pts, r_start):
    """Cumulative i*integral of sqrt(-V0) along a polyline (Simpson per segment)."""
    pts = np.asarray(pts, dtype=complex)
    z = np.zeros(pts.size, dtype=complex)
    r = r_start
    for k in range(1, pts.size):
        a, b = pts[k - 1], pts[k]
        m = 0.5 * (a + b)
        ra = r
        rm = complex(np.sqrt(-V0(spec, m, lam)))
        rm = rm if abs(rm - ra) <= abs(rm + ra) else -rm
        rb = complex(np.sqrt(-V0(spec, b, lam)))
        rb = rb if abs(rb - rm) <= abs(rb + rm) else -rb
        z[k] = z[k - 1] + 1j * (b - a) * (ra + 4 * rm + rb) / 6.0
        r = rb
    return z


def _densify(pts, step):
    pts = np.asarray(pts, dtype=complex)
    out = [pts[0]]
    for a, b in zip(pts[:-1], pts[1:]):
        n = max(1, int(math.ceil(abs(b - a) / step)))
        out.extend(a + (b - a) * np.linspace(0, 1, n + 1)[1:])
    return np.array(out)


def _point_in_polygon(p: complex, poly: np.ndarray) -> bool:
    inside = False
    n = len(poly)
    for i in range(n):
        a, b = poly[i], poly[(i + 1) % n]
        if (a.imag > p.imag) != (b.imag > p.imag):
            xint = a.real + (p.imag - a.imag) * (b.real - a.real) / (b.imag - a.imag)
            if p.real < xint:
                inside = not inside
    return inside


def check_admissible(spec: PotentialSpec, lam: complex, c_minus: ContourPath, c_zero: ContourPath,
                     c_plus: ContourPath, cfg: GeometryConfig = DEFAULT, tps: list[TurningPoint] | None = None,
                     mono_tol: float = 1e-10):
    """Check the four admissibility conditions for C- U C0 U C+.

    Returns ``(ok, diag)``.  The branch of sqrt(-V0) is the one that behaves
    like ``lam`` at the right end of C+; it is carried back along C+, C0
    and C- by continuity.  Condition (i) is checked by sampling: no
    singularity of the coefficients and no further turning point may lie in
    the region between the contour and the real axis.
    """
    lam = complex(lam)
    diag: dict = {}
    ends_ok = (abs(c_minus.points[-1] - c_zero.points[0]) < 1e-8
               and abs(c_zero.points[-1] - c_plus.points[0]) < 1e-8)
    diag["joined"] = bool(ends_ok)
    if tps is not None:
        on_tp = [min(abs(c_zero.points[k] - t.x) for t in tps) < 1e-8 for k in (0, -1)]
        diag["c0_endpoints_are_turning_points"] = bool(all(on_tp))
    else:
        on_tp = [True, True]
    step = cfg.path_step
    plus = _densify(c_plus.points, step)
    zero = _densify(c_zero.points, step)
    minus = _densify(c_minus.points, step)
    # branch: ~ lam at the far right end of C+
    r_far = complex(np.sqrt(-V0(spec, plus[-1], lam)))
    if abs(r_far - lam) > abs(r_far + lam):
        r_far = -r_far
    back = _cumulative_action(spec, lam, plus[::-1], r_far)  # from +inf end toward beta
    # Re{i int_beta^x} = Re(back[0] - back[x]) along C+ read from beta outward
    z_plus = (back[0] - back)[::-1]
    # continue the branch through C0 from beta back to alpha, then along C- outward
    rb = _branch_at(spec, lam, plus[::-1], r_far)
    z0_rev = _cumulative_action(spec, lam, zero[::-1], rb)
    ra = _branch_at(spec, lam, zero[::-1], rb)
    z_minus_rev = _cumulative_action(spec, lam, minus[::-1], ra)  # from alpha toward -inf
    diag["c0_residual"] = float(np.max(np.abs((z0_rev - z0_rev[0]).real)))
    # (ii): Re{i int_x^alpha} decreasing as x -> -inf; int_x^alpha = -(integral alpha -> x)
    phi_minus = (-z_minus_rev).real
    cond2 = bool(np.all(np.diff(phi_minus) <= mono_tol))
    # (iv): Re{i int_beta^x} increasing as x -> +inf
    cond4 = bool(np.all(np.diff(z_plus.real) >= -mono_tol))
    cond3 = bool(diag["c0_residual"] <= max(cfg.arc_tol, 1e-6 * max(1.0, _length(zero))) and all(on_tp))
    # (i): sample the enclosed region for singularities and extra turning points
    contour = np.concatenate([minus, zero[1:], plus[1:]])
    poly = np.concatenate([contour, [contour[-1].real + 0j, contour[0].real + 0j]])
    re0, re1 = float(np.min(poly.real)), float(np.max(poly.real))
    im0, im1 = float(np.min(poly.imag)), float(np.max(poly.imag))
    bad = [p for p in poles(spec, (re0, re1, min(im0, 0.0) - 1e-9, max(im1, 0.0) + 1e-9))
           if _point_in_polygon(p, poly)]
    extra = []
    if tps is not None:
        ends = (c_zero.points[0], c_zero.points[-1])
        extra = [t.x for t in tps if min(abs(t.x - e) for e in ends) > 1e-6 and _point_in_polygon(t.x, poly)]
    cond1 = not bad and not extra
    diag.update({"i_holomorphic": cond1, "ii_minus_decreasing": cond2, "iii_c0_real_part_zero": cond3,
                 "iv_plus_increasing": cond4, "enclosed_singularities": bad, "enclosed_turning_points": extra})
    ok = bool(ends_ok and cond1 and cond2 and cond3 and cond4)
    return ok, diag


def _branch_at(spec, lam, pts, r_start):
    r = r_start
    for p in pts[1:]:
        rn = complex(np.sqrt(-V0(spec, p, lam)))
        r = rn if abs(rn - r) <= abs(rn + r) else -rn
    return r


def _length(pts) -> float:
    pts = np.asarray(pts)
    return float(np.sum(np.abs(np.diff(pts))))


# -- spectral arcs ---------------------------------------------------------------------------------


def _pair_action(spec, lam, alpha, beta, cfg, sign_ref=None):
    return action_between(spec, lam, alpha, beta, None, cfg, sign_ref=sign_ref)


class _ArcState:
    """Turning-point pair and action at one lam, with the branch fixed by continuity."""

    def __init__(self, spec, lam, alpha, beta, cfg, ref=None):
        self.spec, self.cfg = spec, cfg
        self.lam = complex(lam)
        self.alpha = refine_turning_point(spec, alpha, lam)
        self.beta = refine_turning_point(spec, beta, lam)
        z = _pair_action(spec, lam, self.alpha, self.beta, cfg)
        if ref is not None and abs(z + ref) < abs(z - ref):
            z = -z
        self.z = z

    def moved(self, lam):
        return _ArcState(self.spec, lam, self.alpha, self.beta, self.cfg, ref=self.z)

    def deriv(self):
        h = self.cfg.lam_fd
        zp = self.moved(self.lam + h).z
        zm = self.moved(self.lam - h).z
        return (zp - zm) / (2 * h)


def _correct(state: _ArcState, tol: float, maxit: int = 12):
    """Newton on Re z = 0 along the normal direction; returns (state, iterations)."""
    for it in range(maxit):
        if abs(state.z.real) <= tol:
            return state, it
        d = state.deriv()
        if d == 0:
            break
        n = d.conjugate() / abs(d)
        state = state.moved(state.lam - state.z.real / abs(d) * n)
    if abs(state.z.real) <= tol:
        return state, maxit
    raise GeometryError(f"arc corrector did not converge (Re z = {state.z.real:.2e})")


def double_point(spec: PotentialSpec, x0: complex, factor: str, tol: float = 1e-15):
    """Solve g(x, lam) = 0 and g_x(x) = 0 for a double zero near x0; returns (x, lam)."""
    k = FACTORS.index(factor)
    x = complex(x0)
    h = 1e-6
    for _ in range(60):
        d = complex(g_derivs(spec, x)[k])
        dd = (complex(g_derivs(spec, x + h)[k]) - complex(g_derivs(spec, x - h)[k])) / (2 * h)
        step = d / dd
        x -= step
        if abs(step) < tol:
            break
    # g is affine in lam: g+ = -(lam + b + iA), g- = lam + b - iA
    A, _, S1, _ = (complex(v) for v in _coeffs(spec, x))
    lam = -0.5 * S1 - 1j * A if factor == "g_plus" else -0.5 * S1 + 1j * A
    return x, lam


def trace_spectral_arc(spec: PotentialSpec, lam_seed: complex, pair: tuple[TurningPoint, TurningPoint],
                       cfg: GeometryConfig = DEFAULT, direction: complex | None = None, both: bool = True,
                       collision_tol: float = 2e-3, branch_id: int = 0) -> SpectralArc:
    """Continue the curve Re z(beta, lam, alpha) = 0 through ``lam_seed``.

    Predictor along the tangent i conj(z'), Newton corrector along the
    normal, step halved when the corrector needs more than four iterations.
    The turning points are continued by Newton from the previous sample.  A
    branch ends where its two turning points collide (the endpoint is then
    refined on the double-point system), where it reaches the real or
    imaginary axis (endpoint by interpolation), or after ``max_samples``.
    """
    alpha, beta = pair
    st, _ = _correct(_ArcState(spec, lam_seed, alpha, beta, cfg), cfg.arc_tol)
    seed = st

    def run(sign):
        samples, step = [], cfg.arc_step
        cur = seed
        prev_dir = None
        end = ("max_samples", None)
        while len(samples) < cfg.max_samples:
            d = cur.deriv()
            tang = 1j * d.conjugate() / abs(d)
            if prev_dir is None:
                ref = direction if direction is not None else 1j
                if (tang * complex(ref).conjugate()).real < 0:
                    tang = -tang
                tang *= sign
            elif (tang * prev_dir.conjugate()).real < 0:
                tang = -tang
            # keep the step below a fraction of the turning-point separation near a collision
            sep = abs(cur.alpha.x - cur.beta.x)
            h = min(step, max(0.25 * sep * sep, 1e-7) * 4.0)
            try:
                nxt, its = _correct(cur.moved(cur.lam + h * tang), cfg.arc_tol)
            except GeometryError:
                step *= 0.5
                if step < 1e-9:
                    end = ("corrector_failed", cur.lam)
                    break
                continue
            jump = max(abs(nxt.alpha.x - cur.alpha.x), abs(nxt.beta.x - cur.beta.x))
            if jump > 10 * max(h, 1e-3) and h > 1e-9:
                step = 0.5 * h
                continue
            if its > 4:
                step = 0.5 * h
            elif its <= 2:
                step = min(1.5 * step, cfg.arc_step)
            # axis crossings
            if nxt.lam.real * seed.lam.real < 0 or nxt.lam.imag * seed.lam.imag < 0:
                t = cur.lam.real / (cur.lam.real - nxt.lam.real) if nxt.lam.real * seed.lam.real < 0 \
                    else cur.lam.imag / (cur.lam.imag - nxt.lam.imag)
                lam_end = cur.lam + t * (nxt.lam - cur.lam)
                fin, _ = _correct(cur.moved(complex(0.0, lam_end.imag) if nxt.lam.real * seed.lam.real < 0
                                            else complex(lam_end.real, 0.0)), cfg.arc_tol)
                end = ("imaginary_axis" if nxt.lam.real * seed.lam.real < 0 else "real_axis", lam_end)
                samples.append(fin)
                break
            prev_dir = (nxt.lam - cur.lam) / abs(nxt.lam - cur.lam)
            samples.append(nxt)
            cur = nxt
            if abs(cur.alpha.x - cur.beta.x) < collision_tol:
                if cur.alpha.vanishing_factor == cur.beta.vanishing_factor:
                    xd, lam_d = double_point(spec, 0.5 * (cur.alpha.x + cur.beta.x), cur.alpha.vanishing_factor)
                    end = ("double_point", lam_d)
                else:
                    end = ("collision", cur.lam)
                break
        return samples, end

    fwd, end_f = run(1.0)
    bwd, end_b = run(-1.0) if both else ([], ("seed", seed.lam))
    states = bwd[::-1] + [seed] + fwd
    samples = [ArcSample(s.lam, s.alpha, s.beta, s.z) for s in states]
    arc = SpectralArc(samples, branch_id, {"start_reason": end_b[0], "start": end_b[1],
                                           "end_reason": end_f[0], "end": end_f[1]})
    return arc


def arc_from_double_point(spec: PotentialSpec, x_d: complex, lam_d: complex, factor: str,
                          cfg: GeometryConfig = DEFAULT, offset: float = 1e-3, toward: complex = 0j,
                          branch_id: int = 0) -> SpectralArc:
    """Trace the spectral arc that ends at a double turning point (x_d, lam_d).

    Near lam_d the action between the two split points is linear in
    lam - lam_d, so the arc leaves along a straight ray; of the two rays the
    one pointing toward ``toward`` is followed.
    """
    probe = lam_d + offset
    tps = _split_pair(spec, x_d, probe, factor)
    z = _pair_action(spec, probe, tps[0], tps[1], cfg)
    K = z / (probe - lam_d)
    ray = 1j * K.conjugate() / abs(K)
    if ((toward - lam_d) * ray.conjugate()).real < 0:
        ray = -ray
    seed = lam_d + 20 * offset * ray
    tps = _split_pair(spec, x_d, seed, factor)
    arc = trace_spectral_arc(spec, seed, (tps[0], tps[1]), cfg, direction=ray, both=True, branch_id=branch_id)
    return arc


def _split_pair(spec, x_d, lam, factor):
    """The two simple zeros of ``factor`` near a double point, at a nearby lam."""
    k = FACTORS.index(factor)
    out = []
    # second-order model g ~ g(x_d) + g''(x_d)/2 (x - x_d)^2
    h = 1e-5
    g0 = complex(g_factors(spec, x_d, lam)[k])
    g2 = (complex(g_derivs(spec, x_d + h)[k]) - complex(g_derivs(spec, x_d - h)[k])) / (2 * h)
    r = cmath.sqrt(-2 * g0 / g2)
    for sgn in (1, -1):
        tp = TurningPoint(x_d + sgn * r, factor, 1, complex(lam))
        out.append(refine_turning_point(spec, tp, lam))
    return out


def lambda_double(sigma: int, tau: int) -> complex:
    """Closed-form double-point values for A = S = sech(2x)."""
    if sigma not in (-1, 1) or tau not in (-1, 1):
        raise ValueError("sigma and tau must be +-1")
    w = 1 + 1j * tau * math.sqrt(7.0)
    return 1j * sigma * cmath.sqrt(0.5 + w / 8) * (1 - w / 4)


def double_point_x(sigma: int, tau: int) -> complex:
    """x with tanh(2x) = (1 + i tau sqrt 7)/(4 i sigma), principal branch."""
    w = 1 + 1j * tau * math.sqrt(7.0)
    return 0.5 * cmath.atanh(w / (4j * sigma))


# -- quantization along an arc ------------------------------------------------------------------------


def quantize_on_arc(spec: PotentialSpec, arc: SpectralArc, eps: float, m_mode: str = "leading",
                    m_func=None, cfg: GeometryConfig = DEFAULT) -> list[EigenvalueRecord]:
    """Eigenvalues predicted on ``arc`` by m e^{2z/eps} = 1.

    ``leading`` uses m = delta(alpha, beta), i.e. |Im z|/(pi eps) - (1 - delta)/4
    is an integer; ``exact-wkb`` takes m from ``m_func(lam, eps)`` and solves
    z + (eps/2) log m = i pi k eps by Newton in lam.  Brackets come from the
    monotone sampled phase |Im z| along the arc.
    """
    if m_mode not in ("leading", "exact-wkb"):
        raise ValueError("m_mode must be leading or exact-wkb")
    if m_mode == "exact-wkb" and m_func is None:
        raise ValueError("exact-wkb mode needs m_func")
    s = arc.samples
    if len(s) < 2:
        return []
    phase = np.array([abs(p.action.imag) for p in s])
    dphi = np.diff(phase)
    if not (np.all(dphi >= -1e-12) or np.all(dphi <= 1e-12)):
        raise NonMonotonePhase("|Im z| is not monotone along the arc")
    delta = delta_index(s[0].alpha, s[0].beta)
    offset = 0.5 if delta == -1 else 0.0
    lo, hi = float(phase.min()), float(phase.max())
    kmin = math.ceil(lo / (math.pi * eps) - offset)
    kmax = math.floor(hi / (math.pi * eps) - offset)
    recs = []
    for k in range(max(kmin, 0), kmax + 1):
        target = math.pi * eps * (k + offset)
        j = int(np.searchsorted(phase, target) if dphi[0] >= 0 else np.searchsorted(-phase, -target))
        j = min(max(j, 1), len(s) - 1)
        a, b = s[j - 1], s[j]
        t = (target - abs(a.action.imag)) / (abs(b.action.imag) - abs(a.action.imag))
        lam0 = a.lam + t * (b.lam - a.lam)
        st = _ArcState(spec, lam0, a.alpha, a.beta, cfg, ref=a.action)
        sgn = 1.0 if a.action.imag >= 0 else -1.0
        for it in range(30):
            if m_mode == "leading":
                F = st.z - 1j * sgn * target
            else:
                m = m_func(st.lam, eps)
                F = st.z + 0.5 * eps * cmath.log(m) - 1j * sgn * math.pi * eps * k
                # log branch: pick the representative closest to the leading rule
                shift = round(((F - (st.z - 1j * sgn * target)) / (1j * math.pi * eps)).real)
                F -= 1j * math.pi * eps * shift
            d = st.deriv()
            step = F / d
            st = st.moved(st.lam - step)
            if abs(step) < 1e-12:
                break
        recs.append(EigenvalueRecord(st.lam, float(eps), "BS-arc", k, None,
                                     {"branch_id": arc.branch_id, "delta": delta, "m_mode": m_mode,
                                      "action": [st.z.real, st.z.imag], "newton_iterations": it + 1}))
    return recs


# -- whole-spectrum helpers -----------------------------------------------------------------------------


def sech2x_arcs(spec: PotentialSpec, cfg: GeometryConfig = DEFAULT) -> list[SpectralArc]:
    """The four curved arcs of the sech(2x)-phase data, one from each double point.

    Double points are seeded from the closed form and solved on g = g_x = 0
    for the actual amplitude and phase; each arc is followed from its double
    point toward the imaginary axis.
    """
    if spec.family != "sech2x-phase":
        raise GeometryError("sech2x_arcs needs the sech2x-phase family")
    arcs = []
    for k, (sigma, tau) in enumerate(((1, 1), (1, -1), (-1, 1), (-1, -1))):
        x0 = double_point_x(sigma, tau)
        lam0 = lambda_double(sigma, tau)
        gp, gm = (abs(complex(v)) for v in g_factors(spec, x0, lam0))
        factor = "g_minus" if gm <= gp else "g_plus"
        x_d, lam_d = double_point(spec, x0, factor)
        toward = complex(0.0, 0.5 * lam_d.imag)
        arc = arc_from_double_point(spec, x_d, lam_d, factor, cfg, toward=toward, branch_id=k)
        arc.ends.update({"sigma": sigma, "tau": tau, "double_point_x": [x_d.real, x_d.imag]})
        arcs.append(arc)
    return arcs


def imaginary_segment(spec: PotentialSpec, mu_top: float | None = None, n: int = 64,
                      cfg: GeometryConfig = DEFAULT, branch_id: int = 4) -> SpectralArc:
    """Samples of the action along lam = i mu, 0 < mu < mu_top, for the outer symmetric pair.

    The pair is the same-factor couple x_b = -conj(x_a) with the largest real
    parts; the action is taken along the polyline through x = 0, which is the
    real segment between the turning points when S = 0.
    """
    if mu_top is None:
        if spec.family == "sech2x-phase":
            arcs = sech2x_arcs(spec, cfg)
            mu_top = float(abs(arcs[0].ends["end"].imag))
        else:
            mu_top = spec.a_max
    box = (-8.0, 8.0, -0.999 * spec.strip, 0.999 * spec.strip)
    samples = []
    for mu in np.linspace(mu_top, 0.0, n + 2)[1:-1]:
        lam = complex(0.0, mu)
        tps = find_turning_points(spec, lam, box, cfg)
        best = None
        for t in tps:
            if t.x.real <= 1e-9:
                continue
            mirror = [u for u in tps if u.vanishing_factor == t.vanishing_factor
                      and abs(u.x + t.x.conjugate()) < 1e-6]
            if mirror and (best is None or t.x.real > best[1].x.real):
                best = (mirror[0], t)
        if best is None:
            continue
        a, b = best
        path = ContourPath(np.array([a.x, 0.0, b.x]), "C_zero", lam)
        z = action_between(spec, lam, a, b, path, cfg)
        samples.append(ArcSample(lam, a, b, z))
    return SpectralArc(samples, branch_id, {"start_reason": "imaginary_axis", "start": complex(0.0, mu_top),
                                            "end_reason": "origin", "end": 0j})
