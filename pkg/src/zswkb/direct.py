"""Direct spectral oracle: Jost solutions, scattering data and eigenvalues.

The Zakharov-Shabat system is integrated in its phase-removed form

    (eps/i) v' = [[-lam - S'/2, -i A], [i A, lam + S'/2]] v,

which is related to the original system by ``u = diag(e^{iS/2eps},
e^{-iS/2eps}) v``.  Jost solutions are carried in normalized form
``y = exp(-/+ i lam x / eps) v`` so that magnitudes stay moderate on both
half lines, and many spectral parameters are integrated in one batch.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate, optimize

from . import magnus
from .potentials import PotentialSpec, amplitude_derivs, phase_derivs, real_coefficients

log = logging.getLogger(__name__)

JOST_KINDS = ("r+", "r-", "l+", "l-")


class SpectralError(RuntimeError):
    pass


class StiffnessFailure(SpectralError):
    pass


class TailError(SpectralError):
    pass


class NearZeroLambda(SpectralError):
    pass


class BoundaryZero(SpectralError):
    pass


class NotAnEigenvalue(SpectralError):
    pass


@dataclass(frozen=True)
class SolverConfig:
    tail_tol: float = 1e-12
    ode_tol: float = 1e-11
    lambda_floor: float = 1e-4
    x_cap: float = 2.0e3
    newton_tol: float = 1e-10
    boundary_tol: float = 0.05
    integrator: str = "magnus"  # magnus | dop853
    max_steps: int = 2_000_000


@dataclass
class ScatteringData:
    lam: complex
    epsilon: float
    a: complex
    b: complex
    R: complex
    residual: float
    T: np.ndarray | None = field(default=None, repr=False)


@dataclass
class EigenvalueRecord:
    lam: complex
    epsilon: float
    method: str  # direct | BS-real | BS-arc | exact-WKB
    n: int | None = None
    norming: complex | None = None
    diag: dict = field(default_factory=dict)


DEFAULT = SolverConfig()


# -- truncation -----------------------------------------------------------------


def truncation_length(spec: PotentialSpec, eps: float, kappa_abs: float,
                      cfg: SolverConfig = DEFAULT) -> float:
    """Half-width X of the integration window.

    Compact supports start at the support edge; other families solve
    ``tail(X) <= tail_tol``.  Polynomial tails never reach that within
    ``x_cap``, so they rely on the asymptotic start vector and X is chosen so
    the neglected terms of that expansion fall below ``tail_tol``.
    """
    if spec.support is not None:
        return spec.support
    tail = spec.tail_integral
    if tail(cfg.x_cap) <= cfg.tail_tol:
        return optimize.brentq(lambda X: tail(X) - cfg.tail_tol, 1e-3, cfg.x_cap, xtol=1e-6)
    if spec.decay_class.kind != "polynomial":
        raise TailError(f"tail_tol {cfg.tail_tol:g} unreachable for {spec}")
    k = max(kappa_abs, 1e-300)
    X = 10.0
    while X <= 64 * cfg.x_cap:
        A, _, A2 = (abs(complex(v)) for v in amplitude_derivs(spec, X))
        rem = A2 / (eps * k**3) + (tail(X) * A / (eps * eps * k)) ** 2
        if rem <= cfg.tail_tol:
            return X
        X *= 1.25
    raise TailError(f"asymptotic start cannot reach tail_tol for {spec} at |kappa|={kappa_abs:g}")


def _tail_square(spec: PotentialSpec, X: float) -> float:
    """Integral of A^2 over (X, inf); zero for compact support."""
    if spec.support is not None and X >= spec.support:
        return 0.0
    val, _ = integrate.quad(lambda t: complex(amplitude_derivs(spec, t)[0]).real ** 2, X, np.inf,
                            epsabs=1e-16, limit=200)
    return val


# -- batched Jost integration -------------------------------------------------------


def _coeffs(spec: PotentialSpec, x: float):
    return real_coefficients(spec)(x)


def _start_vectors(spec: PotentialSpec, lams: np.ndarray, eps: float, kind: str, X: float):
    """Normalized Jost data at the window edge, with the leading tail correction."""
    side = 1.0 if kind[0] == "r" else -1.0
    plus = kind[1] == "+"
    x0 = side * X
    A, A1, S, S1 = _coeffs(spec, x0)
    sq = _tail_square(spec, X)  # A is even
    if plus:
        kappa = -1j / eps * (2 * lams + 0.5 * S1)
        big0 = np.exp(1j * S / (2 * eps))
    else:
        kappa = 1j / eps * (2 * lams + 0.5 * S1)
        big0 = np.exp(-1j * S / (2 * eps))
    with np.errstate(divide="ignore", invalid="ignore"):
        big = big0 * (1.0 - side * sq / (eps * eps * kappa))
        f = (A / eps) * big * (1.0 if plus else -1.0)
        fp = (A1 / eps) * big * (1.0 if plus else -1.0)
        small = -f / kappa - fp / kappa**2
    small = np.where(np.isfinite(small), small, 0.0)
    big = np.where(np.isfinite(big), big, big0)
    y = np.empty((2, lams.size), dtype=complex)
    if plus:
        y[0], y[1] = small, big
    else:
        y[0], y[1] = big, small
    return y


def _rhs_factory(spec: PotentialSpec, lams: np.ndarray, eps: float, plus: bool):
    # y' = (i/eps)(B -/+ lam) y; the lam-dependent diagonal entry is fixed per batch
    n = lams.size
    ie = 1j / eps
    coeffs = real_coefficients(spec)
    two_lam = ie * 2 * lams
    if plus:
        def rhs(x, yflat):
            A, _, _, S1 = coeffs(x)
            y0, y1 = yflat[:n], yflat[n:]
            h = 0.5 * ie * S1
            return np.concatenate(((-two_lam - h) * y0 + (A / eps) * y1, -(A / eps) * y0 + h * y1))
    else:
        def rhs(x, yflat):
            A, _, _, S1 = coeffs(x)
            y0, y1 = yflat[:n], yflat[n:]
            h = 0.5 * ie * S1
            return np.concatenate((-h * y0 + (A / eps) * y1, -(A / eps) * y0 + (two_lam + h) * y1))

    return rhs


def _generator(spec: PotentialSpec, lams: np.ndarray, eps: float, plus: bool):
    """Split y' = G y into the constant diagonal and the potential entries."""
    ie = 1j / eps
    zero = np.zeros(lams.size, dtype=complex)
    d0, d1 = ((-2 * ie * lams, zero) if plus else (zero, 2 * ie * lams))

    def coeffs(xn):
        A = np.real(amplitude_derivs(spec, xn)[0]) / eps
        h = 0.5 * ie * np.real(phase_derivs(spec, xn)[1])
        return -h, h, A, -A

    return coeffs, d0, d1


_DECAY_WEIGHT = 0.25


def _grid_density(spec: PotentialSpec, lams: np.ndarray, eps: float, tol: float):
    """Local phase rate of the normalized system, in radians per unit x.

    The spectral-parameter term only counts where the coupling A/eps is above
    the tolerance; further out the solution is frozen and long steps are exact.
    Oscillation (Re lam) must be resolved; pure decay (Im lam) is handled by
    the exponential and only weighted lightly.
    """
    lam_abs = 2.0 * float(np.max(np.abs(lams.real)) + _DECAY_WEIGHT * np.max(np.abs(lams.imag)))
    floor = 0.05 * spec.a_max

    def rho(x):
        A, A1, _ = amplitude_derivs(spec, x)
        _, S1, S2, _ = phase_derivs(spec, x)
        A = np.abs(A)
        active = np.minimum(1.0, (A / (eps * tol)) ** (1.0 / 6.0))
        return (A + np.abs(A1) + 0.5 * (np.abs(S1) + np.abs(S2)) + lam_abs * active
                + floor / (1.0 + np.abs(x))) / eps

    return rho


def _magnus_run(spec, lams, eps, kind, y0, X, t_eval, cfg):
    side = 1.0 if kind[0] == "r" else -1.0
    rho = _grid_density(spec, lams, eps, cfg.ode_tol)
    coeffs, d0, d1 = _generator(spec, lams, eps, kind[1] == "+")
    x0 = side * X
    probe = np.linspace(x0, t_eval[-1], 513)
    r = rho(probe)
    total = float(np.sum(0.5 * (r[1:] + r[:-1]) * np.abs(np.diff(probe))))
    n = max(32, int(2 * total))
    grid, idx = magnus.graded_grid(x0, t_eval, rho, n)
    prev = magnus.propagate(coeffs, d0, d1, y0.T, grid, idx)
    prev_diff = math.inf
    while True:
        grid = magnus.refine(grid)
        idx = 2 * idx
        if grid.size > cfg.max_steps:
            raise StiffnessFailure(f"Magnus step doubling exceeded {cfg.max_steps} steps")
        cur = magnus.propagate(coeffs, d0, d1, y0.T, grid, idx)
        scale = np.maximum(np.abs(cur).max(axis=2, keepdims=True), 1e-300)
        diff = float(np.max(np.abs(cur - prev) / scale))
        log.debug("magnus %d steps diff %.3e", grid.size - 1, diff)
        if not np.isfinite(diff):
            raise StiffnessFailure("Magnus propagation overflowed")
        if diff <= 16 * cfg.ode_tol or (diff <= 1e3 * cfg.ode_tol and diff >= 0.5 * prev_diff):
            # converged, or stalled at the rounding floor
            return cur.transpose(2, 1, 0), grid.size - 1
        prev, prev_diff = cur, diff


def jost_batch(spec: PotentialSpec, lams, eps: float, kind: str, x_eval=0.0,
               cfg: SolverConfig = DEFAULT, X: float | None = None) -> np.ndarray:
    """Normalized Jost vectors ``y`` for many spectral parameters.

    Returns an array of shape ``(2, len(lams))`` (or ``(2, len(lams), len(x_eval))``
    when ``x_eval`` is a sequence).  The phase-removed Jost solution is
    ``v = exp(+/- i lam x / eps) y`` with ``+`` for kinds ``r+``, ``l+``.
    """
    if kind not in JOST_KINDS:
        raise ValueError(f"kind must be one of {JOST_KINDS}")
    if eps <= 0:
        raise ValueError("eps must be positive")
    lams = np.atleast_1d(np.asarray(lams, dtype=complex))
    if X is None:
        # each parameter gets its own window; similar windows share a batch
        Xs = np.array([truncation_length(spec, eps, 2 * abs(l) / eps, cfg) for l in lams])
        keys = np.ceil(np.log(Xs) / math.log(1.25))
        if np.unique(keys).size > 1:
            out = None
            for key in np.unique(keys):
                sel = keys == key
                part = jost_batch(spec, lams[sel], eps, kind, x_eval, cfg, float(Xs[sel].max()))
                if out is None:
                    out = np.empty(part.shape[:1] + (lams.size,) + part.shape[2:], dtype=complex)
                out[:, sel] = part
            return out
        X = float(Xs.max())
    side = 1.0 if kind[0] == "r" else -1.0
    xs = np.atleast_1d(np.asarray(x_eval, dtype=float))
    if np.any(np.abs(xs) > X):
        raise ValueError("x_eval outside the integration window")
    y0 = _start_vectors(spec, lams, eps, kind, X)
    order = np.argsort(-side * xs, kind="stable")  # integrate away from the start edge
    t_eval = xs[order]
    res = np.empty((2, lams.size, len(xs)), dtype=complex)
    if cfg.integrator == "magnus":
        # positions coinciding with the start edge are recorded before any step
        vals, _ = _magnus_run(spec, lams, eps, kind, y0, X, t_eval, cfg) if np.any(t_eval != side * X) \
            else (np.repeat(y0[:, :, None], len(xs), axis=2), 0)
        res[:, :, order] = vals
    elif cfg.integrator == "dop853":
        rhs = _rhs_factory(spec, lams, eps, kind[1] == "+")
        span = (side * X, float(t_eval[-1]))
        if span[0] == span[1]:
            res[:] = y0[:, :, None]
        else:
            sol = integrate.solve_ivp(rhs, span, y0.ravel(), method="DOP853", t_eval=t_eval,
                                      rtol=cfg.ode_tol, atol=1e-40)
            if sol.status != 0:
                raise StiffnessFailure(f"Jost integration failed: {sol.message}")
            res[:, :, order] = sol.y.reshape(2, lams.size, len(xs))
    else:
        raise ValueError(f"unknown integrator {cfg.integrator!r}")
    if np.ndim(x_eval) == 0:
        return res[..., 0]
    return res


def jost_solve(spec: PotentialSpec, lam: complex, eps: float, side: str, branch: str,
               x_eval: float = 0.0, cfg: SolverConfig = DEFAULT) -> np.ndarray:
    """Jost solution of the original system at ``x_eval`` as a 2-vector.

    ``side`` is ``left``/``right``, ``branch`` is ``plus``/``minus``; e.g. the
    right/plus solution behaves like ``(0, e^{i lam x/eps})`` as x -> +inf.
    """
    kind = ("r" if side == "right" else "l") + ("+" if branch == "plus" else "-")
    y = jost_batch(spec, [lam], eps, kind, x_eval, cfg)[:, 0]
    sgn = 1.0 if branch == "plus" else -1.0
    v = np.exp(sgn * 1j * lam * x_eval / eps) * y
    S = complex(phase_derivs(spec, x_eval)[0]).real
    return np.array([np.exp(1j * S / (2 * eps)) * v[0], np.exp(-1j * S / (2 * eps)) * v[1]])


def _det(p, q):
    return p[0] * q[1] - p[1] * q[0]


# -- scattering data -------------------------------------------------------------------


def transfer_matrices(spec: PotentialSpec, lams, eps: float, cfg: SolverConfig = DEFAULT) -> np.ndarray:
    """Change-of-basis matrices T with (f_l+, f_l-) = (f_r+, f_r-) T at real lams."""
    lams = np.atleast_1d(np.asarray(lams, dtype=complex))
    ys = {k: jost_batch(spec, lams, eps, k, 0.0, cfg) for k in JOST_KINDS}
    T = np.empty((lams.size, 2, 2), dtype=complex)
    for j in range(lams.size):
        Fr = np.column_stack([ys["r+"][:, j], ys["r-"][:, j]])
        Fl = np.column_stack([ys["l+"][:, j], ys["l-"][:, j]])
        T[j] = np.linalg.solve(Fr, Fl)
    return T


def scattering_data(spec: PotentialSpec, lam: float, eps: float, cfg: SolverConfig = DEFAULT) -> ScatteringData:
    """Transfer entries a, b and the reflection coefficient R = b/a at real lam."""
    if abs(lam) < cfg.lambda_floor:
        raise NearZeroLambda(f"|lambda| < {cfg.lambda_floor:g}; use a near-zero sweep")
    T = transfer_matrices(spec, [lam], eps, cfg)[0]
    a, b = T[0, 0], T[1, 0]
    resid = abs(np.linalg.det(T) - 1.0)
    return ScatteringData(complex(lam), eps, a, b, b / a, float(resid), T)


def reflection_sweep(spec: PotentialSpec, lam: float, eps_list, cfg: SolverConfig = DEFAULT):
    """Rows ``(eps, |R|, log|R|)`` for each eps."""
    rows = []
    for eps in eps_list:
        sd = scattering_data(spec, lam, eps, cfg)
        r = abs(sd.R)
        rows.append((float(eps), r, math.log(r) if r > 0 else -math.inf))
    return rows


# -- eigenvalues -----------------------------------------------------------------------


def evans(spec: PotentialSpec, lams, eps: float, cfg: SolverConfig = DEFAULT, X: float | None = None) -> np.ndarray:
    """Analytic eigenvalue function F(lam) = W(f_l-, f_r+) in the upper half plane.

    F is the continuation of the (2,2) entry of T; its zeros with Im lam > 0
    are exactly the eigenvalues.
    """
    lams = np.atleast_1d(np.asarray(lams, dtype=complex))
    m = jost_batch(spec, lams, eps, "r+", 0.0, cfg, X)
    n = jost_batch(spec, lams, eps, "l-", 0.0, cfg, X)
    return _det(n, m)


def _edge_points(z0: complex, z1: complex, n: int) -> np.ndarray:
    return z0 + (z1 - z0) * np.linspace(0.0, 1.0, n, endpoint=False)


def winding_number(func, box, n0: int = 48, max_points: int = 6000, max_step: float = 0.6,
                   spacing: float | None = None):
    """Argument-principle count of zeros of ``func`` inside ``box``.

    ``box = (re0, re1, im0, im1)``; ``func`` maps an array of points to values.
    Each edge starts with at least ``n0`` points (and at most ``spacing``
    apart); the boundary is refined until consecutive arguments differ by
    less than ``max_step``.
    """
    re0, re1, im0, im1 = box
    corners = [complex(re0, im0), complex(re1, im0), complex(re1, im1), complex(re0, im1)]
    pts = []
    for k in range(4):
        z0, z1 = corners[k], corners[(k + 1) % 4]
        n = n0 if spacing is None else max(n0, int(math.ceil(abs(z1 - z0) / spacing)))
        pts.append(_edge_points(z0, z1, n))
    pts = np.concatenate(pts)
    perimeter = 2.0 * ((re1 - re0) + (im1 - im0))
    vals = func(pts)
    while True:
        nxt = np.roll(vals, -1)
        with np.errstate(divide="ignore", invalid="ignore"):
            dphi = np.angle(nxt / vals)
        if not np.all(np.isfinite(dphi)):
            raise BoundaryZero("eigenvalue function vanished on the contour")
        bad = np.abs(dphi) > max_step
        if not bad.any():
            break
        if pts.size + bad.sum() > max_points:
            raise BoundaryZero("argument principle did not resolve; zero near the boundary")
        idx = np.nonzero(bad)[0]
        seg = np.abs(np.roll(pts, -1)[idx] - pts[idx])
        if seg.min() < 1e-9 * perimeter:
            z = pts[idx[np.argmin(seg)]]
            raise BoundaryZero(f"argument jump persists on a vanishing segment near {z:.8g}")
        mids = 0.5 * (pts[idx] + np.roll(pts, -1)[idx])
        # wrap-around segment: midpoint between last and first point
        wrap = idx == pts.size - 1
        mids[wrap] = 0.5 * (pts[-1] + pts[0])
        mvals = func(mids)
        pts = np.insert(pts, idx + 1, mids)
        vals = np.insert(vals, idx + 1, mvals)
    w = dphi.sum() / (2 * np.pi)
    k = int(round(w))
    if abs(w - k) > 0.05:
        raise BoundaryZero(f"non-integer winding {w:.3f}")
    return k


def _newton(func, z0: complex, box=None, tol: float = 1e-10, h: float = 1e-6, maxit: int = 40):
    z = complex(z0)
    for it in range(maxit):
        pts = np.array([z, z + h, z - h, z + h / 2, z - h / 2])
        f0, fp, fm, fp2, fm2 = func(pts)
        d1 = (fp - fm) / (2 * h)
        d2 = (fp2 - fm2) / h
        deriv = (4 * d2 - d1) / 3  # Richardson
        if deriv == 0:
            break
        step = f0 / deriv
        z -= step
        if box is not None:
            re0, re1, im0, im1 = box
            pad = 0.5 * max(re1 - re0, im1 - im0)
            if not (re0 - pad <= z.real <= re1 + pad and im0 - pad <= z.imag <= im1 + pad):
                return z, it + 1, False
        if abs(step) <= tol:
            return z, it + 1, True
    return z, maxit, False


def _inside(z, box, margin=0.0):
    re0, re1, im0, im1 = box
    return re0 - margin <= z.real <= re1 + margin and im0 - margin <= z.imag <= im1 + margin


def _axis_roots(spec: PotentialSpec, eps: float, mu0: float, mu1: float, cfg: SolverConfig,
                spacing: float) -> list[tuple[float, dict]]:
    """Sign changes of the (real) eigenvalue function along lam = i mu.

    All brackets are refined together by the Illinois variant of regula falsi,
    so every iteration costs one batched evaluation.
    """
    n = max(8, int(math.ceil((mu1 - mu0) / spacing)) + 1)
    mu = np.linspace(mu0, mu1, n)

    def f(m):
        return evans(spec, 1j * np.asarray(m), eps, cfg).real

    F = f(mu)
    exact = [(float(m), {"bracket_iterations": 0}) for m, v in zip(mu, F) if v == 0.0]
    k = np.nonzero(np.sign(F[:-1]) * np.sign(F[1:]) < 0)[0]
    a, b, fa, fb = mu[k], mu[k + 1], F[k], F[k + 1]
    side = np.zeros(k.size, dtype=int)
    its = np.zeros(k.size, dtype=int)
    live = np.ones(k.size, dtype=bool)
    for it in range(100):
        if not live.any():
            break
        idx = np.nonzero(live)[0]
        c = b[idx] - fb[idx] * (b[idx] - a[idx]) / (fb[idx] - fa[idx])
        fc = f(c)
        for j, cj, fcj in zip(idx, c, fc):
            its[j] += 1
            if fcj == 0.0:
                a[j] = b[j] = cj
                live[j] = False
                continue
            if np.sign(fcj) == np.sign(fb[j]):
                b[j], fb[j] = cj, fcj
                if side[j] == -1:
                    fa[j] *= 0.5
                side[j] = -1
            else:
                a[j], fa[j] = cj, fcj
                if side[j] == 1:
                    fb[j] *= 0.5
                side[j] = 1
            if abs(b[j] - a[j]) <= 0.1 * cfg.newton_tol * max(1.0, abs(cj)):
                live[j] = False
    roots = [(float(0.5 * (a[j] + b[j])), {"bracket_iterations": int(its[j]),
                                           "bracket_width": float(abs(b[j] - a[j]))})
             for j in range(k.size)]
    return sorted(exact + roots, key=lambda t: -t[0])


def _on_axis_applicable(spec: PotentialSpec, region) -> bool:
    re0, re1, _, _ = region
    return spec.symmetric and spec.zero_phase and re0 < 0.0 < re1


def locate_eigenvalues(spec: PotentialSpec, eps: float, region, cfg: SolverConfig = DEFAULT,
                       max_depth: int = 14, strategy: str = "auto") -> list[EigenvalueRecord]:
    """Eigenvalues inside ``region = (re0, re1, im0, im1)`` of the upper half plane.

    Zeros of the analytic eigenvalue function are counted by the argument
    principle over the whole region.  For symmetric zero-phase data the
    function is real on the imaginary axis, and ``strategy="auto"`` first looks
    for sign changes there; the result is accepted only when it accounts for
    every zero counted in the region.  Otherwise boxes are split until each
    holds at most one zero and each zero is polished by Newton's method.
    """
    re0, re1, im0, im1 = map(float, region)
    if im0 < cfg.lambda_floor:
        raise ValueError("region must stay at least lambda_floor above the real axis")
    if strategy not in ("auto", "axis", "boxes"):
        raise ValueError("strategy must be auto, axis or boxes")
    if re1 <= re0 or im1 <= im0:
        return []

    def func(z):
        return evans(spec, z, eps, cfg)

    box = (re0, re1, im0, im1)
    total = winding_number(func, box, max_points=40000, spacing=eps / 4)
    found: list[tuple[complex, dict]] = []
    if strategy != "boxes" and _on_axis_applicable(spec, box):
        spacing = eps / 16
        for attempt in range(3):
            roots = _axis_roots(spec, eps, im0, im1, cfg, spacing)
            if len(roots) == total:
                found = [(complex(0.0, m), dict(d, scan_spacing=spacing, method="axis-scan"))
                         for m, d in roots]
                break
            log.info("axis scan found %d of %d zeros at spacing %.3g", len(roots), total, spacing)
            spacing /= 4
        else:
            if strategy == "axis":
                raise SpectralError(f"axis scan found {len(roots)} zeros but winding number is {total}")
    if not found and total:
        found = _box_search(func, box, total, cfg, max_depth)
    if len(found) != total:
        raise SpectralError(f"found {len(found)} roots but winding number is {total}")
    found.sort(key=lambda t: -t[0].imag)
    vals = func(np.array([z for z, _ in found])) if found else []
    recs = []
    # along the imaginary axis the ordering by height is the quantum number
    axis = bool(found) and all(d.get("method") == "axis-scan" for _, d in found) and im1 >= spec.a_max
    for k, ((z, diag), v) in enumerate(zip(found, vals)):
        diag = dict(diag)
        diag["abs_F"] = float(abs(v))
        diag["winding_total"] = total
        if diag.get("method") != "axis-scan":
            diag["derivative"] = "central differences h=1e-6 with Richardson"
        recs.append(EigenvalueRecord(complex(z), eps, "direct", k if axis else None, None, diag))
    return recs


def _box_search(func, box, total, cfg, max_depth):
    """Recursive bisection by winding numbers; Newton is batched over boxes."""
    found: list[tuple[complex, dict]] = []
    level = [(box, total, 0)]
    while level:
        singles = [(b, d) for b, c, d in level if c == 1]
        results = _newton_many(func, [complex(0.5 * (b[0] + b[1]), 0.5 * (b[2] + b[3])) for b, _ in singles],
                               [b for b, _ in singles], cfg.newton_tol)
        solved = set()
        for i, ((b, d), (z, its, ok)) in enumerate(zip(singles, results)):
            if ok and _inside(z, b, 1e-9):
                found.append((z, {"newton_iterations": its, "box_depth": d, "method": "box-newton"}))
                solved.add(b)
        nxt = []
        for b, count, depth in level:
            if count == 0 or b in solved:
                continue
            b0, b1, c0, c1 = b
            if depth >= max_depth:
                z, its, ok = _newton(func, complex(0.5 * (b0 + b1), 0.5 * (c0 + c1)), None, cfg.newton_tol)
                found.extend((z, {"newton_iterations": its, "box_depth": depth, "multiplicity": count,
                                  "method": "box-newton"}) for _ in range(count))
                continue
            # split the longer side slightly off-centre so symmetric zeros avoid the cut
            if (b1 - b0) > (c1 - c0):
                cut = b0 + 0.5137 * (b1 - b0)
                halves = [(b0, cut, c0, c1), (cut, b1, c0, c1)]
            else:
                cut = c0 + 0.5137 * (c1 - c0)
                halves = [(b0, b1, c0, cut), (b0, b1, cut, c1)]
            first = _retry_winding(func, halves[0])
            for hb, hc in zip(halves, (first, count - first)):
                nxt.append((hb, hc, depth + 1))
        level = nxt
    return found


def _newton_many(func, seeds, boxes, tol, h: float = 1e-6, maxit: int = 40):
    """Newton's method for several seeds at once (one batched call per iteration)."""
    z = np.array(seeds, dtype=complex)
    its = np.zeros(z.size, dtype=int)
    state = np.zeros(z.size, dtype=int)  # 0 running, 1 converged, -1 failed
    for _ in range(maxit):
        run = np.nonzero(state == 0)[0]
        if run.size == 0:
            break
        zr = z[run]
        pts = np.concatenate([zr, zr + h, zr - h, zr + h / 2, zr - h / 2])
        f0, fp, fm, fp2, fm2 = func(pts).reshape(5, run.size)
        d1 = (fp - fm) / (2 * h)
        d2 = (fp2 - fm2) / h
        deriv = (4 * d2 - d1) / 3  # Richardson
        for j, i in enumerate(run):
            its[i] += 1
            if deriv[j] == 0:
                state[i] = -1
                continue
            step = f0[j] / deriv[j]
            z[i] -= step
            b0, b1, c0, c1 = boxes[i]
            pad = 0.5 * max(b1 - b0, c1 - c0)
            if not (b0 - pad <= z[i].real <= b1 + pad and c0 - pad <= z[i].imag <= c1 + pad):
                state[i] = -1
            elif abs(step) <= tol:
                state[i] = 1
    return [(complex(z[i]), int(its[i]), bool(state[i] == 1)) for i in range(z.size)]


def _retry_winding(func, box):
    try:
        return winding_number(func, box)
    except BoundaryZero:
        # nudge the shared edge; a zero sitting on it is the usual cause
        b0, b1, c0, c1 = box
        dx, dy = 0.0137 * (b1 - b0), 0.0137 * (c1 - c0)
        return winding_number(func, (b0, b1 + dx, c0, c1 + dy))


def _proportionality(fa, fb, xs, tol, label):
    """gamma with fa = gamma fb, estimated at each sample point."""
    gammas = []
    for j in range(xs.size):
        k = int(np.argmax(np.abs(fb[:, j])))
        gammas.append(fa[k, j] / fb[k, j])
        dep = abs(_det(fa[:, j], fb[:, j])) / (np.linalg.norm(fa[:, j]) * np.linalg.norm(fb[:, j]))
        if dep > 1e3 * tol:
            raise NotAnEigenvalue(f"{label}: Jost solutions not dependent at x={xs[j]:g} (residual {dep:.2e})")
    gammas = np.array(gammas)
    mid = gammas[xs.size // 2]
    spread = float(np.max(np.abs(gammas - mid)) / max(abs(mid), 1e-300))
    return complex(mid), spread


def norming_constant(spec: PotentialSpec, rec: EigenvalueRecord, eps: float, cfg: SolverConfig = DEFAULT,
                     tol: float = 1e-6) -> complex:
    """Norming constant gamma of an eigenvalue, with f_l+ = gamma f_r- at conj(lam).

    At the conjugate point the left solution decaying at -inf and the right
    solution decaying at +inf are proportional; for symmetric data gamma tends
    to (-1)^n.  The companion constant with f_l- = gamma_up f_r+ at lam itself
    is stored in ``rec.diag["norming_upper"]``.  Each constant is checked at
    x = 0 and x = +-1 (or inside the support); the relative spread of the
    three estimates must stay below ``tol``.
    """
    lam = complex(rec.lam)
    X = truncation_length(spec, eps, 2 * abs(lam) / eps, cfg)
    xs = np.array([-min(1.0, 0.5 * X), 0.0, min(1.0, 0.5 * X)])
    out = {}
    for name, z, ka, kb, sa in (("lower", lam.conjugate(), "l+", "r-", 1), ("upper", lam, "l-", "r+", -1)):
        ya = jost_batch(spec, [z], eps, ka, xs, cfg, X)[:, 0, :]
        yb = jost_batch(spec, [z], eps, kb, xs, cfg, X)[:, 0, :]
        # actual Jost solutions from the normalized ones
        fa = ya * np.exp(sa * 1j * z * xs / eps)
        fb = yb * np.exp(-sa * 1j * z * xs / eps)
        out[name] = _proportionality(fa, fb, xs, tol, name)
    gamma, spread = out["lower"]
    rec.diag["norming_spread"] = spread
    rec.diag["norming_upper"] = out["upper"][0]
    rec.diag["norming_upper_spread"] = out["upper"][1]
    if spread > tol:
        raise NotAnEigenvalue(f"norming constant spread {spread:.2e} exceeds {tol:g}")
    rec.norming = gamma
    return gamma
