"""Command-line front end: spectrum, wkb, arcs, reflection and compare.

Each command turns a :class:`RunConfig` into a list of rows tagged with the
schema version and the configuration hash.  Rows go to standard output as
JSON lines, or to ``<out>/<command>.jsonl`` plus a CSV mirror when ``--out``
is given.  Work is split per epsilon and may run in a process pool; rows are
always merged in the order of the epsilon list, so the bytes written do not
depend on ``--jobs``.

Exit codes: 0 on success, 2 for configuration errors, 3 for numerical
failures.  Failures print one JSON object with the error type and message on
standard error.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Callable

from . import direct, geometry, output, wkb_real
from .fits import decay_fit, order_fit
from .potentials import PotentialSpec

COMMANDS = ("spectrum", "wkb", "arcs", "reflection", "compare")

# flag name -> (config section, field); defaults are read from the dataclasses
SOLVER_TOLS = {"ode": "ode_tol", "tail": "tail_tol", "newton": "newton_tol",
               "boundary": "boundary_tol", "floor": "lambda_floor"}
GEOMETRY_TOLS = {"tp-newton": "newton_tol", "arc": "arc_tol", "dedup": "dedup", "tp-sep": "tp_sep"}
OTHER_TOLS = {"norming": 1e-6}


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    """Everything that determines a command's output.

    ``jobs`` and ``out`` only affect where and how fast rows are produced, so
    they are left out of the hash.
    """

    command: str
    potential: PotentialSpec
    epsilons: list[float]
    region: tuple[float, float, float, float] | None = None
    lam: float = 0.5
    mu_min: float | None = None
    norming: bool = True
    tolerances: dict[str, float] = field(default_factory=dict)
    out: str | None = None
    jobs: int = 1

    def __post_init__(self):
        if self.command not in COMMANDS:
            raise ConfigError(f"unknown command {self.command!r}")
        if not self.epsilons:
            raise ConfigError("at least one epsilon is required")
        if any(not (e > 0 and math.isfinite(e)) for e in self.epsilons):
            raise ConfigError("epsilons must be positive and finite")
        for k, v in self.tolerances.items():
            if not (v > 0 and math.isfinite(v)):
                raise ConfigError(f"tolerance {k} must be positive")
        if self.region is not None:
            if len(self.region) != 4:
                raise ConfigError("region needs four numbers re0,re1,im0,im1")
        if self.command == "compare":
            if len(self.epsilons) < 3:
                raise ConfigError("compare needs at least three epsilons")
            if any(b >= a for a, b in zip(self.epsilons, self.epsilons[1:])):
                raise ConfigError("compare needs strictly decreasing epsilons")
        if self.jobs < 1:
            raise ConfigError("jobs must be at least 1")

    def to_json(self) -> dict[str, Any]:
        d = {"command": self.command, "potential": self.potential.to_json(), "epsilons": list(self.epsilons),
             "region": None if self.region is None else list(self.region), "lam": self.lam,
             "mu_min": self.mu_min, "norming": self.norming, "tolerances": dict(sorted(self.tolerances.items()))}
        return d

    @property
    def hash(self) -> str:
        return output.config_hash(self.to_json())

    def solver(self) -> direct.SolverConfig:
        kw = {f: self.tolerances[k] for k, f in SOLVER_TOLS.items() if k in self.tolerances}
        return replace(direct.DEFAULT, **kw)

    def geometry(self) -> geometry.GeometryConfig:
        kw = {f: self.tolerances[k] for k, f in GEOMETRY_TOLS.items() if k in self.tolerances}
        return replace(geometry.DEFAULT, **kw)

    def tol(self, name: str) -> float:
        return self.tolerances.get(name, OTHER_TOLS[name])

    def default_region(self) -> tuple[float, float, float, float]:
        a = self.potential.a_max
        floor = max(self.solver().lambda_floor, 0.02 * a)
        return (-a, a, floor, 1.1 * a)


# -- per-epsilon work items (top level so a process pool can pickle them) -----------------


def _spectrum_item(cfg: RunConfig, eps: float) -> list[dict]:
    region = cfg.region if cfg.region is not None else cfg.default_region()
    recs = direct.locate_eigenvalues(cfg.potential, eps, region, cfg.solver())
    if cfg.norming:
        for r in recs:
            direct.norming_constant(cfg.potential, r, eps, cfg.solver(), tol=cfg.tol("norming"))
    return [output.eigen_row(r) for r in recs]


def _wkb_item(cfg: RunConfig, eps: float) -> list[dict]:
    recs = wkb_real.bs_eigenvalues(cfg.potential, eps, cfg.mu_min)
    return [output.eigen_row(r) for r in recs]


COMPACT_FLOOR = 0.25  # fraction of A_max below which compact-support eigenvalues are not compared


def compare_floor(spec: PotentialSpec, eps: float) -> float:
    """Default lowest height kept by compare.

    Decaying data use the near-zero window eps^(alpha_max/2).  Compact support
    has no such window; the order estimate holds on a fixed interval
    [A0, A_max] and A0 = COMPACT_FLOOR * A_max is used.
    """
    if spec.support is not None:
        return COMPACT_FLOOR * spec.a_max
    return wkb_real.default_mu_min(spec, eps)


def _compare_item(cfg: RunConfig, eps: float) -> list[dict]:
    spec = cfg.potential
    mu_min = cfg.mu_min if cfg.mu_min is not None else compare_floor(spec, eps)
    floor = max(mu_min, cfg.solver().lambda_floor)
    a = spec.a_max
    region = cfg.region if cfg.region is not None else (-0.5 * a, 0.5 * a, floor, 1.05 * a)
    dir_recs = direct.locate_eigenvalues(spec, eps, region, cfg.solver())
    wkb_recs = wkb_real.bs_eigenvalues(spec, eps, mu_min)
    return [output.error_row(e) for e in wkb_real.error_table(dir_recs, wkb_recs)]


def _reflection_item(cfg: RunConfig, eps: float) -> list[dict]:
    sd = direct.scattering_data(cfg.potential, cfg.lam, eps, cfg.solver())
    r = abs(sd.R)
    return [{"epsilon": float(eps), "lambda": float(cfg.lam), "abs_R": r,
             "log_abs_R": math.log(r) if r > 0 else -math.inf, "residual": sd.residual}]


def _run_items(cfg: RunConfig, item: Callable[[RunConfig, float], list[dict]]) -> list[list[dict]]:
    if cfg.jobs == 1 or len(cfg.epsilons) == 1:
        return [item(cfg, e) for e in cfg.epsilons]
    with ProcessPoolExecutor(max_workers=min(cfg.jobs, len(cfg.epsilons))) as pool:
        return list(pool.map(item, [cfg] * len(cfg.epsilons), cfg.epsilons))


# -- commands ---------------------------------------------------------------------------------


@dataclass
class Result:
    rows: list[dict]
    csv: dict[str, tuple[list[dict], tuple[str, ...]]] = field(default_factory=dict)
    warnings: list[str] = field(default_factory=list)


def cmd_spectrum(cfg: RunConfig) -> Result:
    rows = output.sort_eigen_rows([r for chunk in _run_items(cfg, _spectrum_item) for r in chunk])
    rows = output.tag(rows, cfg.hash, "eigenvalue")
    return Result(rows, {"spectrum": (rows, output.EIGEN_COLUMNS)})


def cmd_wkb(cfg: RunConfig) -> Result:
    if not cfg.potential.zero_phase:
        raise ConfigError("wkb predictions on the real line need zero phase; use arcs")
    rows = output.sort_eigen_rows([r for chunk in _run_items(cfg, _wkb_item) for r in chunk])
    rows = output.tag(rows, cfg.hash, "eigenvalue")
    return Result(rows, {"wkb": (rows, output.EIGEN_COLUMNS)})


def cmd_compare(cfg: RunConfig) -> Result:
    if not cfg.potential.zero_phase:
        raise ConfigError("compare needs zero-phase data")
    chunks = _run_items(cfg, _compare_item)
    table = [r for chunk in chunks for r in chunk]
    maxima = [(e, max((r["abs_err"] for r in c), default=0.0)) for e, c in zip(cfg.epsilons, chunks)]
    rows = output.tag(table, cfg.hash, "error")
    warnings = []
    summary = {"global_max": max((m for _, m in maxima), default=0.0),
               "max_per_epsilon": [[e, m] for e, m in maxima]}
    try:
        fit = order_fit([e for e, _ in maxima], [m for _, m in maxima])
        summary.update(order=fit.slope, intercept=fit.intercept, r2=fit.r2, n_points=fit.n_points)
    except ValueError as exc:
        warnings.append(f"no order fit: {exc}")
    rows += output.tag([summary], cfg.hash, "fit")
    return Result(rows, {"compare": (rows[:-1], output.ERROR_COLUMNS)}, warnings)


def cmd_reflection(cfg: RunConfig) -> Result:
    if cfg.lam < cfg.solver().lambda_floor:
        raise ConfigError("reflection needs lambda above the near-zero floor")
    table = [r for chunk in _run_items(cfg, _reflection_item) for r in chunk]
    rows = output.tag(table, cfg.hash, "reflection")
    warnings = []
    if len(table) < 2:
        warnings.append("a single epsilon gives no decay fit")
    else:
        try:
            fit = decay_fit([r["epsilon"] for r in table], [r["abs_R"] for r in table])
            rows += output.tag([{"slope": fit.slope, "sigma": -fit.slope, "intercept": fit.intercept,
                                 "r2": fit.r2, "n_points": fit.n_points}], cfg.hash, "fit")
        except ValueError as exc:
            warnings.append(f"no decay fit: {exc}")
    return Result(rows, {"reflection": (rows[:len(table)], output.REFLECTION_COLUMNS)}, warnings)


def _arc_header(arc, kind: str) -> dict:
    ends = {k: v for k, v in arc.ends.items()}
    return {"branch_id": arc.branch_id, "arc_kind": kind, "n_samples": len(arc.samples), "ends": ends,
            "polyline": [[s.lam.real, s.lam.imag] for s in arc.samples]}


def cmd_arcs(cfg: RunConfig) -> Result:
    spec = cfg.potential
    if not spec.analytic:
        raise ConfigError("arcs need an analytic potential")
    gcfg = cfg.geometry()
    if spec.zero_phase:
        curved = []
        segment = geometry.imaginary_segment(spec, cfg=gcfg, branch_id=0)
        quantized = [segment]
    elif spec.family == "sech2x-phase":
        curved = geometry.sech2x_arcs(spec, gcfg)
        top = max(abs(a.ends["end"].imag) for a in curved)
        segment = geometry.imaginary_segment(spec, mu_top=top, cfg=gcfg, branch_id=len(curved))
        quantized = curved
    else:
        raise ConfigError(f"no arc construction for {spec.family}")
    headers = [_arc_header(a, "curved") for a in curved] + [_arc_header(segment, "imaginary_segment")]
    eig = []
    for eps in cfg.epsilons:
        for arc in quantized:
            for rec in geometry.quantize_on_arc(spec, arc, eps, cfg=gcfg):
                row = output.eigen_row(rec)
                row["branch_id"] = arc.branch_id
                eig.append(row)
    eig = output.sort_eigen_rows(eig)
    rows = output.tag(headers, cfg.hash, "arc") + output.tag(eig, cfg.hash, "eigenvalue")
    samples = output.tag([r for a in curved + [segment] for r in output.arc_rows(a)], cfg.hash, "arc_sample")
    cols = output.EIGEN_COLUMNS + ("branch_id",)
    return Result(rows, {"arcs": (samples, output.ARC_COLUMNS), "arcs_eigenvalues": (output.tag(eig, cfg.hash, "eigenvalue"), cols)})


RUNNERS = {"spectrum": cmd_spectrum, "wkb": cmd_wkb, "arcs": cmd_arcs,
           "reflection": cmd_reflection, "compare": cmd_compare}


# -- argument parsing ---------------------------------------------------------------------------


def _floats(text: str, what: str) -> list[float]:
    try:
        vals = [float(t) for t in text.replace(" ", "").split(",") if t]
    except ValueError as exc:
        raise ConfigError(f"{what}: {exc}") from None
    return vals


def _potential(text: str) -> PotentialSpec:
    if text.startswith("@"):
        try:
            text = Path(text[1:]).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read potential file: {exc}") from None
    try:
        return PotentialSpec.from_json(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"potential is not valid JSON: {exc}") from None


class _Parser(argparse.ArgumentParser):
    """Usage errors become ConfigError so they are reported as JSON with exit code 2."""

    def error(self, message):
        raise ConfigError(message)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="zswkb", description="Semiclassical Zakharov-Shabat spectra.")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--potential", required=True,
                   help='JSON such as \'{"family": "sech-scaled", "params": {"amplitude": 1}}\' or @file.json')
    p.add_argument("--eps", required=True, help="comma-separated epsilons, e.g. 0.2,0.1,0.05")
    p.add_argument("--region", help="re0,re1,im0,im1 (spectrum and compare); write --region=-0.5,... when re0 is negative")
    p.add_argument("--lam", type=float, default=0.5, help="real spectral parameter for reflection (default 0.5)")
    p.add_argument("--mu-min", type=float, help="lowest eigenvalue height kept by wkb and compare")
    p.add_argument("--no-norming", action="store_true", help="skip norming constants in spectrum")
    p.add_argument("--out", help="output directory; without it JSON lines go to stdout")
    p.add_argument("--jobs", type=int, default=1, help="worker processes over epsilon (default 1)")
    for name, f in SOLVER_TOLS.items():
        p.add_argument(f"--tol-{name}", type=float, help=f"direct solver {f} (default {getattr(direct.DEFAULT, f):g})")
    for name, f in GEOMETRY_TOLS.items():
        p.add_argument(f"--tol-{name}", type=float, help=f"geometry {f} (default {getattr(geometry.DEFAULT, f):g})")
    for name, v in OTHER_TOLS.items():
        p.add_argument(f"--tol-{name}", type=float, help=f"{name} consistency tolerance (default {v:g})")
    return p


def config_from_args(ns: argparse.Namespace) -> RunConfig:
    tols = {}
    for name in list(SOLVER_TOLS) + list(GEOMETRY_TOLS) + list(OTHER_TOLS):
        v = getattr(ns, "tol_" + name.replace("-", "_"))
        if v is not None:
            tols[name] = v
    region = tuple(_floats(ns.region, "region")) if ns.region else None
    return RunConfig(command=ns.command, potential=_potential(ns.potential), epsilons=_floats(ns.eps, "eps"),
                     region=region, lam=ns.lam, mu_min=ns.mu_min, norming=not ns.no_norming,
                     tolerances=tols, out=ns.out, jobs=ns.jobs)


def _fail(code: int, exc: BaseException) -> int:
    sys.stderr.write(json.dumps({"schema": output.SCHEMA, "error": type(exc).__name__, "message": str(exc),
                                 "exit_code": code}) + "\n")
    return code


def run(cfg: RunConfig, stdout=None) -> Result:
    res = RUNNERS[cfg.command](cfg)
    stdout = sys.stdout if stdout is None else stdout
    if cfg.out is None:
        stdout.write(output.dumps_jsonl(res.rows))
    else:
        output.write_outputs(cfg.out, cfg.command, res.rows, None)
        for stem, (rows, cols) in res.csv.items():
            Path(cfg.out, f"{stem}.csv").write_text(output.dumps_csv(rows, cols))
    for w in res.warnings:
        sys.stderr.write(json.dumps({"schema": output.SCHEMA, "warning": w}) + "\n")
    return res


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code else 0
    except ConfigError as exc:
        return _fail(2, exc)
    try:
        cfg = config_from_args(ns)
        run(cfg)
    except (ValueError, KeyError, TypeError) as exc:
        return _fail(2, exc)
    except (RuntimeError, ArithmeticError) as exc:
        return _fail(3, exc)
    return 0


if __name__ == "__main__":
    sys.exit(main())
