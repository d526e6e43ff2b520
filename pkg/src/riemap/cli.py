"""riemap command-line front end.

Exit status: 0 when every checked residual and verdict passes, 1 when one
fails, 2 on usage or scene errors.
"""

from __future__ import annotations

import argparse
import os
import sys
import time
from dataclasses import replace
from pathlib import Path

from . import __version__, gallery
from .biharmonic import bitension_report, collect, tension_report, dichotomy_verdicts, thm41_verify
from .errors import RiemapError, UsageError
from .report import DEFAULT_TOLERANCES, Report, emit_report
from .rmap import verify_riemannian, verify_thm31
from .sampling import SampleSpec, grid_sample
from .scene import Scene, load_scene

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


def parse_tol(text: str) -> tuple[str, float]:
    name, sep, value = text.partition("=")
    if not sep:
        raise argparse.ArgumentTypeError(f"expected NAME=VALUE, got {text!r}")
    if name not in DEFAULT_TOLERANCES:
        raise argparse.ArgumentTypeError(
            f"unknown tolerance {name!r}; known: {', '.join(sorted(DEFAULT_TOLERANCES))}"
        )
    try:
        v = float(value)
    except ValueError:
        raise argparse.ArgumentTypeError(f"tolerance {name} needs a number, got {value!r}") from None
    if not v > 0:
        raise argparse.ArgumentTypeError(f"tolerance {name} must be positive")
    return name, v


def parse_formats(text: str) -> tuple[str, ...]:
    fmts = tuple(f.strip() for f in text.split(",") if f.strip())
    bad = [f for f in fmts if f not in ("json", "csv")]
    if bad or not fmts:
        raise argparse.ArgumentTypeError(f"formats must be json and/or csv, got {text!r}")
    return fmts


def positive_int(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError("expected a positive integer")
    return v


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--samples", type=positive_int, help="random sample count (default from scene, 25)")
    common.add_argument("--seed", type=int, help="random sampling seed (default from scene, 42)")
    common.add_argument("--grid", type=positive_int, metavar="K", help="use a K-per-axis grid instead")
    common.add_argument("--order", type=int, choices=(2, 4), help="jet order; 2 only supports check and tension")
    common.add_argument("--tol", type=parse_tol, action="append", default=[], metavar="NAME=VALUE")
    common.add_argument("--out", default="riemap-reports", help="report directory")
    common.add_argument("--format", type=parse_formats, default=("json", "csv"), help="json,csv")

    scene_opts = argparse.ArgumentParser(add_help=False, parents=[common])
    scene_opts.add_argument("scene", help="scene file (or the name of a built-in gallery scene)")
    scene_opts.add_argument("--map", help="map to analyze (default: the last declared map)")

    p = argparse.ArgumentParser(prog="riemap", description="Riemannian map and biharmonicity checks on scene files.")
    p.add_argument("--version", action="version", version=f"riemap {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("check", parents=[scene_opts], help="isometry residual of F_* on the horizontal space")
    sub.add_parser("tension", parents=[scene_opts], help="tension field and its range/kernel decomposition")
    sub.add_parser("bitension", parents=[scene_opts], help="bitension field and harmonic/biharmonic verdicts")
    sub.add_parser("classify", parents=[scene_opts], help="pseudo-umbilicality and the harmonic-or-equality dichotomy")
    v = sub.add_parser("verify", parents=[scene_opts], help="composite, condition and dichotomy verifiers")
    v.add_argument("--thm", required=True, choices=("3.1", "4.1", "4.2"))

    g = sub.add_parser("gallery", help="built-in scenes")
    gsub = g.add_subparsers(dest="gallery_command", required=True)
    gsub.add_parser("list", help="list built-in scenes")
    run = gsub.add_parser("run", parents=[common], help="run built-in scenes against their expected values")
    run.add_argument("name", nargs="?", help="scene name")
    run.add_argument("--all", action="store_true", help="run every built-in scene")
    return p


def worker_count() -> int:
    raw = os.environ.get("RIEMAP_THREADS")
    if raw is None or raw == "":
        return os.cpu_count() or 1
    try:
        n = int(raw)
    except ValueError:
        raise UsageError(f"RIEMAP_THREADS must be a positive integer, got {raw!r}") from None
    if n < 1:
        raise UsageError(f"RIEMAP_THREADS must be a positive integer, got {raw!r}")
    return n


def resolve_scene(arg: str) -> Scene:
    path = Path(arg)
    if not path.exists():
        stem = path.name[:-6] if path.name.endswith(".scene") else path.name
        if stem in gallery.registry() or gallery.scene_path(stem).exists():
            path = gallery.scene_path(stem)
    if not path.exists():
        raise UsageError(f"scene file {arg!r} not found")
    return load_scene(path)


def sample_spec(args, scene: Scene | None) -> SampleSpec:
    base = scene.analysis.sample_spec() if scene is not None else SampleSpec()
    if args.grid is not None:
        return SampleSpec(kind="grid", k=args.grid)
    if base.kind == "grid" and args.samples is None and args.seed is None:
        return base
    spec = SampleSpec(kind="random", n=base.n if base.kind == "random" else 25,
                      seed=base.seed if base.kind == "random" else 42)
    if args.samples is not None:
        spec = replace(spec, n=args.samples)
    if args.seed is not None:
        spec = replace(spec, seed=args.seed)
    return spec


def tolerance_table(args, scene: Scene | None) -> dict[str, float]:
    tol = scene.analysis.tolerance_table() if scene is not None else dict(DEFAULT_TOLERANCES)
    tol.update(dict(args.tol))
    return tol


def jet_order(args, scene: Scene | None) -> int:
    if args.order is not None:
        return args.order
    return scene.analysis.jet_order if scene is not None else 4


def run_scene_command(args, workers: int) -> list[Report]:
    scene = resolve_scene(args.scene)
    tol = tolerance_table(args, scene)
    spec = sample_spec(args, scene)
    order = jet_order(args, scene)
    cmd = args.command if args.command != "verify" else f"verify-{args.thm}"
    if order < 4 and cmd not in ("check", "tension"):
        raise UsageError(f"{cmd} needs fourth derivatives; use --order 4")

    if cmd == "verify-3.1":
        pair = scene.composition_pair()
        if pair is None:
            raise UsageError("scene has no pair of maps F1: A -> B, F2: B -> C to compose")
        F1, F2 = pair
        report = verify_thm31(F1, F2, grid_sample(spec, F1.source.domain), tol, workers)
    else:
        F = scene.get_map(args.map)
        points = grid_sample(spec, F.source.domain)
        if cmd == "check":
            report = verify_riemannian(F, points, tol, workers)
        elif cmd == "tension":
            report = tension_report(F, points, tol, workers, order=order)
        elif cmd == "bitension":
            report = bitension_report(F, points, tol, workers)
        elif cmd == "verify-4.1":
            report = thm41_verify(F, points, tol, workers)
        else:  # classify, verify-4.2
            report = collect(F, points, cmd, tol, workers)
            if F.target.curvature is None:
                report.check("isometry", "residual")
                report.verdicts["dichotomy"] = "hypotheses-not-met"
                report.info["dichotomy_note"] = f"target {F.target.name!r} is not a declared space form"
            else:
                dichotomy_verdicts(report, F.target.curvature)
    report.scene_name = scene.name
    report.scene_digest = scene.digest
    report.samples = spec.describe()
    return [report]


def run_gallery(args, workers: int) -> list[Report]:
    if args.gallery_command == "list":
        for name in gallery.registry():
            entry = gallery.builtin_scene(name)
            print(f"{name:4s} {entry.title}  [{entry.path}]")
        return []
    if args.all == bool(args.name):
        raise UsageError("gallery run takes a scene name or --all")
    names = gallery.registry() if args.all else [args.name]
    if args.order is not None and args.order < 4:
        raise UsageError("gallery runs need fourth derivatives; use --order 4")
    reports = []
    for name in names:
        entry = gallery.builtin_scene(name)
        spec = sample_spec(args, entry.scene)
        tol = dict(args.tol)
        reports.append(gallery.run_entry(entry, spec, tol, workers))
    return reports


def print_summary(report: Report, stream) -> None:
    status = "PASS" if report.ok else "FAIL"
    print(f"[{status}] {report.command} {report.scene_name} map={report.map_name} "
          f"points={len(report.records)}", file=stream)
    summary = report.summary()
    for name in sorted(summary):
        e = summary[name]
        if "verdict" in e:
            print(f"  {e['verdict']:4s} {name}: max {e['max']:.3e} (tol {e['tolerance']:.1e})", file=stream)
    for name in ("tau", "tau2", "H2_norm_sq", "range_condition", "normal_condition", "vertical_trace_remainder"):
        if name in summary and name not in report.checks:
            print(f"  info {name}: max {summary[name]['max']:.6g}", file=stream)
    for k in sorted(report.verdicts):
        print(f"  verdict {k}: {report.verdicts[k]}", file=stream)
    for f in report.failures:
        print(f"  failure: {f}", file=stream)


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    start = time.perf_counter()
    try:
        workers = worker_count()
        if args.command == "gallery":
            reports = run_gallery(args, workers)
        else:
            reports = run_scene_command(args, workers)
        for report in reports:
            stem = f"gallery_{report.scene_name}" if args.command == "gallery" else None
            emit_report(report, args.format, args.out, stem)
            print_summary(report, sys.stdout)
    except RiemapError as err:
        print(f"riemap: error: {err}", file=sys.stderr)
        return EXIT_USAGE
    print(f"wall time {time.perf_counter() - start:.3f}s", file=sys.stderr)
    return EXIT_OK if all(r.ok for r in reports) else EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
