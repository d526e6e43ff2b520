"""Structured residual reports and their deterministic JSON/CSV serialization."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from .errors import RiemapError

DEFAULT_TOLERANCES = {
    "rank": 1e-7,  # relative singular-value threshold
    "residual": 1e-8,  # isometry, pseudo-umbilical, normality preconditions
    "identity": 1e-10,  # algebraic identities (tension split, duality, adjoint)
    "curvature": 1e-9,  # curvature trace identity, composition identity
    "order4": 1e-7,  # order-4 derived quantities (bitension, condition terms)
    "harmonic": 1e-8,  # |tau| below this counts as harmonic
    "oracle": 1e-5,  # relative jet vs finite-difference agreement
}


@dataclass
class PointRecord:
    index: int
    point: list[float]
    residuals: dict[str, float] = field(default_factory=dict)
    vectors: dict[str, list[float]] = field(default_factory=dict)
    labels: dict[str, str] = field(default_factory=dict)


@dataclass
class Report:
    command: str
    map_name: str = ""
    scene_name: str = ""
    scene_digest: str = ""
    samples: dict = field(default_factory=dict)
    tolerances: dict[str, float] = field(default_factory=lambda: dict(DEFAULT_TOLERANCES))
    checks: dict[str, str] = field(default_factory=dict)  # residual name -> tolerance key
    records: list[PointRecord] = field(default_factory=list)
    verdicts: dict[str, str] = field(default_factory=dict)
    failures: list[str] = field(default_factory=list)
    info: dict[str, Any] = field(default_factory=dict)

    def check(self, name: str, tol_key: str) -> None:
        self.checks[name] = tol_key

    def tolerance_for(self, name: str) -> float | None:
        key = self.checks.get(name)
        return None if key is None else self.tolerances[key]

    def residual_names(self) -> list[str]:
        names = set()
        for r in self.records:
            names.update(r.residuals)
        return sorted(names)

    def max_of(self, name: str) -> float:
        vals = [r.residuals[name] for r in self.records if name in r.residuals]
        return max(vals) if vals else 0.0

    def summary(self) -> dict:
        out = {}
        for name in self.residual_names():
            vals = [r.residuals[name] for r in self.records if name in r.residuals]
            entry = {"max": max(vals), "mean": sum(vals) / len(vals), "count": len(vals)}
            tol = self.tolerance_for(name)
            if tol is not None:
                entry["tolerance"] = tol
                entry["verdict"] = "pass" if max(vals) < tol else "fail"
            out[name] = entry
        return out

    def _summary_with_aliases(self) -> dict:
        out = self.summary()
        for name, alias in (("tau", "max_tension"), ("tau2", "max_bitension")):
            if name in out:
                out[alias] = out[name]["max"]
        return out

    def failed_checks(self) -> list[str]:
        return [n for n, e in self.summary().items() if e.get("verdict") == "fail"]

    @property
    def ok(self) -> bool:
        return not self.failed_checks() and not self.failures

    def sort(self) -> None:
        self.records.sort(key=lambda r: r.index)

    def to_dict(self) -> dict:
        from . import __version__

        self.sort()
        return {
            "version": __version__,
            "command": self.command,
            "map": self.map_name,
            "scene": self.scene_name,
            "scene_digest": self.scene_digest,
            "samples": self.samples,
            "tolerances": {k: self.tolerances[k] for k in sorted(set(self.checks.values()))},
            "records": [
                {
                    "index": r.index,
                    "point": r.point,
                    "residuals": r.residuals,
                    "vectors": r.vectors,
                    "labels": r.labels,
                }
                for r in self.records
            ],
            "summary": self._summary_with_aliases(),
            "verdicts": self.verdicts,
            "failures": self.failures,
            "info": self.info,
            "status": "pass" if self.ok else "fail",
        }


def run_points(fn, points, workers: int = 1) -> list[PointRecord]:
    """Evaluate ``fn(index, point)`` over the sample set; output is ordered by index."""
    items = list(enumerate(points))
    if workers <= 1 or len(items) <= 1:
        records = [fn(i, p) for i, p in items]
    else:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(lambda ip: fn(*ip), items))
    return sorted(records, key=lambda r: r.index)


def _format_float(x: float) -> str:
    if math.isnan(x):
        return '"NaN"'
    if math.isinf(x):
        return '"Infinity"' if x > 0 else '"-Infinity"'
    if x == 0.0:
        return "0.0"
    s = format(x, ".17g")
    if "e" not in s and "." not in s and "n" not in s:
        s += ".0"
    return s


def dumps(obj: Any, indent: int = 2, _level: int = 0) -> str:
    """JSON text with sorted keys and every float at 17 significant digits."""
    pad = " " * (indent * (_level + 1))
    end = " " * (indent * _level)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{_string(str(k))}: {dumps(obj[k], indent, _level + 1)}" for k in sorted(obj, key=str)]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        if all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in obj):
            return "[" + ", ".join(dumps(v) for v in obj) + "]"
        items = [pad + dumps(v, indent, _level + 1) for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    if isinstance(obj, bool):
        return "true" if obj else "false"
    if obj is None:
        return "null"
    if isinstance(obj, int):
        return str(obj)
    if isinstance(obj, float):
        return _format_float(obj)
    if hasattr(obj, "item"):  # numpy scalar
        return dumps(obj.item(), indent, _level)
    return _string(str(obj))


def _string(s: str) -> str:
    import json

    return json.dumps(s, ensure_ascii=False)


CSV_HEADER = ["scene", "map", "command", "point_index", "coordinates", "residual", "value", "tolerance", "verdict"]


def csv_text(report: Report) -> str:
    report.sort()
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for r in report.records:
        coords = " ".join(format(float(v), ".17g") for v in r.point)
        for name in sorted(r.residuals):
            tol = report.tolerance_for(name)
            val = r.residuals[name]
            verdict = "info" if tol is None else ("pass" if val < tol else "fail")
            w.writerow([
                report.scene_name, report.map_name, report.command, r.index, coords, name,
                format(float(val), ".17g"), "" if tol is None else format(tol, ".17g"), verdict,
            ])
    return buf.getvalue()


def emit_report(report: Report, formats=("json", "csv"), out_dir: str | Path = ".", stem: str | None = None) -> list[Path]:
    """Write the report in the requested formats; returns the written paths."""
    out_dir = Path(out_dir)
    stem = stem or f"{report.scene_name or 'scene'}_{report.command}".replace(" ", "_").replace("/", "_")
    written = []
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        for fmt in formats:
            if fmt == "json":
                path = out_dir / f"{stem}.json"
                path.write_text(dumps(report.to_dict()) + "\n", encoding="utf-8")
            elif fmt == "csv":
                path = out_dir / f"{stem}.csv"
                path.write_text(csv_text(report), encoding="utf-8")
            else:
                raise RiemapError(f"unknown report format {fmt!r}")
            written.append(path)
    except OSError as err:
        raise RiemapError(f"cannot write report to {out_dir}: {err}") from err
    return written
