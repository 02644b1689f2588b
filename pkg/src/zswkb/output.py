"""Row builders and writers for the machine-readable outputs.

Every row is a flat dict tagged with ``schema`` and the hash of the run
configuration.  JSON lines are the primary format; CSV files mirror them with
a fixed column order so repeated runs produce identical bytes.
"""
from __future__ import annotations

import csv
import hashlib
import io
import json
import math
from pathlib import Path
from typing import Any, Iterable

SCHEMA = "zs/1"

EIGEN_COLUMNS = ("re_lambda", "im_lambda", "n", "method", "epsilon", "norming_re", "norming_im", "residual")
ERROR_COLUMNS = ("epsilon", "n", "mu_direct", "mu_wkb", "abs_err")
REFLECTION_COLUMNS = ("epsilon", "lambda", "abs_R", "log_abs_R", "residual")
ARC_COLUMNS = ("branch_id", "index", "re_lambda", "im_lambda", "re_action", "im_action")


def canonical(obj: Any) -> str:
    return json.dumps(_plain(obj), sort_keys=True, separators=(",", ":"))


def config_hash(obj: Any) -> str:
    """First 16 hex digits of the sha256 of the canonical JSON form."""
    return hashlib.sha256(canonical(obj).encode()).hexdigest()[:16]


def _plain(v: Any) -> Any:
    """Convert numpy scalars, complex numbers and non-finite floats into JSON values."""
    if isinstance(v, dict):
        return {str(k): _plain(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_plain(x) for x in v]
    if hasattr(v, "item") and not isinstance(v, (str, bytes)):
        try:
            v = v.item()
        except (ValueError, AttributeError):
            v = v.tolist()
            return _plain(v)
    if isinstance(v, complex):
        return [_plain(v.real), _plain(v.imag)]
    if isinstance(v, float) and not math.isfinite(v):
        return None if math.isnan(v) else ("inf" if v > 0 else "-inf")
    return v


def tag(rows: Iterable[dict], chash: str, kind: str) -> list[dict]:
    return [{"schema": SCHEMA, "config_hash": chash, "kind": kind, **r} for r in rows]


def eigen_row(rec) -> dict:
    g = rec.norming
    resid = rec.diag.get("abs_F", rec.diag.get("residual"))
    return {
        "re_lambda": float(rec.lam.real),
        "im_lambda": float(rec.lam.imag),
        "n": rec.n,
        "method": rec.method,
        "epsilon": float(rec.epsilon),
        "norming_re": None if g is None else float(complex(g).real),
        "norming_im": None if g is None else float(complex(g).imag),
        "residual": None if resid is None else float(resid),
    }


def sort_eigen_rows(rows: list[dict]) -> list[dict]:
    """Order by epsilon (descending), then Im lambda (descending), then Re lambda."""
    return sorted(rows, key=lambda r: (-r["epsilon"], -r["im_lambda"], r["re_lambda"]))


def error_row(er) -> dict:
    return {"epsilon": er.epsilon, "n": er.n, "mu_direct": er.mu_direct, "mu_wkb": er.mu_wkb, "abs_err": er.abs_err}


def arc_rows(arc) -> list[dict]:
    return [{"branch_id": arc.branch_id, "index": i, "re_lambda": s.lam.real, "im_lambda": s.lam.imag,
             "re_action": s.action.real, "im_action": s.action.imag} for i, s in enumerate(arc.samples)]


def dumps_jsonl(rows: Iterable[dict]) -> str:
    return "".join(json.dumps(_plain(r), sort_keys=False, separators=(",", ":")) + "\n" for r in rows)


def dumps_csv(rows: Iterable[dict], columns: Iterable[str]) -> str:
    cols = list(columns)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(cols)
    for r in rows:
        w.writerow(["" if r.get(c) is None else _cell(r.get(c)) for c in cols])
    return buf.getvalue()


def _cell(v: Any) -> str:
    v = _plain(v)
    return repr(v) if isinstance(v, float) else str(v)


def write_outputs(out_dir: str | Path, stem: str, rows: list[dict], columns: Iterable[str] | None) -> list[Path]:
    """Write ``stem.jsonl`` and, when ``columns`` is given, ``stem.csv``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = [out / f"{stem}.jsonl"]
    paths[0].write_text(dumps_jsonl(rows))
    if columns is not None:
        paths.append(out / f"{stem}.csv")
        paths[1].write_text(dumps_csv(rows, columns))
    return paths
