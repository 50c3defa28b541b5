"""JSON and CSV persistence for scans and certificates.

JSON is canonical.  Floats are written with 17 significant digits so that a
read after a write reproduces every value bit for bit; non-finite floats are
written as null.
"""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np

from . import __version__
from .errors import SchemaMismatch
from .tracemap import SpectrumScan

SCHEMA_VERSION = 1
SCAN_KIND = "spectrum-scan"
ROW_FIELDS = ("angle", "zeta", "status", "escape_step", "lyapunov", "invariant_drift", "trace_sup", "weight")


def _emit(obj, out: list, indent: int, level: int):
    pad = "\n" + " " * (indent * (level + 1))
    end = "\n" + " " * (indent * level)
    if isinstance(obj, (bool, np.bool_)) or obj is None:
        out.append(json.dumps(None if obj is None else bool(obj)))
    elif isinstance(obj, (int, np.integer)):
        out.append(str(int(obj)))
    elif isinstance(obj, (float, np.floating)):
        x = float(obj)
        out.append(format(x, ".17g") if math.isfinite(x) else "null")
    elif isinstance(obj, complex):
        _emit([obj.real, obj.imag], out, indent, level)
    elif isinstance(obj, str):
        out.append(json.dumps(obj))
    elif isinstance(obj, dict):
        if not obj:
            out.append("{}")
            return
        out.append("{")
        for i, (k, v) in enumerate(obj.items()):
            out.append(("," if i else "") + pad + json.dumps(str(k)) + ": ")
            _emit(v, out, indent, level + 1)
        out.append(end + "}")
    elif isinstance(obj, (list, tuple, np.ndarray)):
        items = list(obj)
        flat = all(not isinstance(v, (dict, list, tuple, np.ndarray)) for v in items)
        if flat:
            parts = []
            for v in items:
                buf = []
                _emit(v, buf, indent, level + 1)
                parts.append("".join(buf))
            out.append("[" + ", ".join(parts) + "]")
            return
        out.append("[")
        for i, v in enumerate(items):
            out.append(("," if i else "") + pad)
            _emit(v, out, indent, level + 1)
        out.append(end + "]")
    else:
        raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps(obj, indent: int = 1) -> str:
    """JSON text with every float at 17 significant digits."""
    out: list = []
    _emit(obj, out, indent, 0)
    return "".join(out) + "\n"


def write_json(path, obj):
    Path(path).write_text(dumps(obj), encoding="utf-8")


def envelope(kind: str, payload: dict, config: dict | None = None) -> dict:
    return {"schema_version": SCHEMA_VERSION, "tool_version": __version__, "kind": kind,
            "config": config or {}, **payload}


def scan_rows(scan: SpectrumScan) -> list:
    rows = []
    status = scan.status
    for i in range(scan.angles.size):
        esc = int(scan.escape_step[i])
        rows.append({
            "angle": scan.angles[i],
            "zeta": [math.cos(scan.angles[i]), math.sin(scan.angles[i])],
            "status": str(status[i]),
            "escape_step": esc if esc >= 0 else None,
            "lyapunov": scan.lyapunov[i],
            "invariant_drift": scan.invariant_drift[i],
            "trace_sup": scan.trace_sup[i],
            "weight": scan.weights[i],
        })
    return rows


def scan_document(scan: SpectrumScan, config: dict | None = None) -> dict:
    header = {
        "beta": scan.beta, "gamma": scan.gamma, "cf": list(scan.cf), "budget": scan.budget,
        "grid_size": scan.grid_size, "refine": scan.refine, "lyapunov_level": scan.lyapunov_level,
    }
    summary = {
        "bounded_measure_by_budget": scan.measure_by_budget(),
        "bounded_fraction_by_budget": [m / (2 * math.pi) for m in scan.measure_by_budget()],
        "n_bounded": int(scan.bounded_mask().sum()),
        "n_rows": int(scan.angles.size),
    }
    return envelope(SCAN_KIND, {"scan": header, "summary": summary, "rows": scan_rows(scan)}, config)


def write_scan(path, scan: SpectrumScan, config: dict | None = None):
    """Write ``scan`` as JSON, or as a CSV export when the suffix is ``.csv``."""
    path = Path(path)
    if path.suffix.lower() == ".csv":
        write_scan_csv(path, scan)
    else:
        write_json(path, scan_document(scan, config))


def write_scan_csv(path, scan: SpectrumScan):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["angle", "zeta_re", "zeta_im", "status", "escape_step", "lyapunov",
                    "invariant_drift", "trace_sup", "weight"])
        for r in scan_rows(scan):
            w.writerow([format(r["angle"], ".17g"), format(r["zeta"][0], ".17g"), format(r["zeta"][1], ".17g"),
                        r["status"], "" if r["escape_step"] is None else r["escape_step"],
                        format(r["lyapunov"], ".17g"), format(r["invariant_drift"], ".17g"),
                        format(r["trace_sup"], ".17g"), format(r["weight"], ".17g")])


def _require(doc, key, kind=dict):
    if not isinstance(doc, dict) or key not in doc or not isinstance(doc[key], kind):
        raise SchemaMismatch(f"missing or malformed field {key!r}")
    return doc[key]


def _nan(x):
    return float("nan") if x is None else float(x)


def read_scan(path) -> SpectrumScan:
    """Load a JSON scan written by :func:`write_scan`."""
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise SchemaMismatch(f"cannot read scan file: {exc}")
    return scan_from_document(doc)


def scan_from_document(doc) -> SpectrumScan:
    if _require(doc, "schema_version", int) != SCHEMA_VERSION:
        raise SchemaMismatch(f"unsupported schema_version {doc['schema_version']}")
    if doc.get("kind") != SCAN_KIND:
        raise SchemaMismatch(f"expected kind {SCAN_KIND!r}, got {doc.get('kind')!r}")
    head = _require(doc, "scan")
    rows = _require(doc, "rows", list)
    for r in rows:
        if not isinstance(r, dict) or any(f not in r for f in ROW_FIELDS):
            raise SchemaMismatch("scan row is missing fields")
    try:
        beta, gamma = complex(*head["beta"]), complex(*head["gamma"])
        scan = SpectrumScan(
            beta, gamma, [int(a) for a in head["cf"]], int(head["budget"]),
            np.array([float(r["angle"]) for r in rows]),
            np.array([-1 if r["escape_step"] is None else int(r["escape_step"]) for r in rows], dtype=np.int64),
            np.array([_nan(r["lyapunov"]) for r in rows]),
            np.array([_nan(r["invariant_drift"]) for r in rows]),
            np.array([_nan(r["trace_sup"]) for r in rows]),
            np.array([_nan(r["weight"]) for r in rows]),
            int(head["grid_size"]), int(head["lyapunov_level"]), int(head.get("refine", 0)),
            {"config": doc.get("config", {})},
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise SchemaMismatch(f"malformed scan header: {exc}")
    return scan
