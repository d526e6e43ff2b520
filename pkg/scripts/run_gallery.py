"""Run every built-in scene and print a one-line summary per scene.

    python scripts/run_gallery.py [--samples N] [--out DIR]
"""

import argparse
import time

from riemap import gallery
from riemap.report import emit_report
from riemap.sampling import SampleSpec

COLUMNS = ("isometry", "tau", "tau2", "H2_norm", "mu_ker", "range_condition", "normal_condition")


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--samples", type=int, default=None, help="random points per scene (default: scene setting)")
    ap.add_argument("--seed", type=int, default=42)
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--out", default=None, help="also write JSON/CSV reports here")
    args = ap.parse_args()

    print(f"{'scene':5s} {'status':6s} {'pts':>4s} " + " ".join(f"{c:>16s}" for c in COLUMNS) + "  verdicts")
    for name in gallery.registry():
        entry = gallery.builtin_scene(name)
        spec = None if args.samples is None else SampleSpec(n=args.samples, seed=args.seed)
        t0 = time.perf_counter()
        rep = gallery.run_entry(entry, spec, workers=args.workers)
        dt = time.perf_counter() - t0
        cells = []
        for c in COLUMNS:
            names = rep.residual_names()
            cells.append(f"{rep.max_of(c):16.6e}" if c in names else f"{'-':>16s}")
        verdicts = ", ".join(f"{k}={v}" for k, v in sorted(rep.verdicts.items())
                             if k in ("biharmonic", "dichotomy", "conditions_vs_bitension"))
        print(f"{name:5s} {'PASS' if rep.ok else 'FAIL':6s} {len(rep.records):4d} " + " ".join(cells)
              + f"  {verdicts}  ({dt:.2f}s)")
        if not rep.ok:
            for f in rep.failed_checks() + rep.failures:
                print(f"      failed: {f}")
        if args.out:
            emit_report(rep, ("json", "csv"), args.out, f"gallery_{name}")


if __name__ == "__main__":
    main()
