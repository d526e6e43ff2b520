"""Jet tension/bitension against the finite-difference oracle, scene by scene.

Prints the relative error with and without Richardson extrapolation, which
shows how the plain O(h^2) error grows towards the poles of sphere charts.
"""

import argparse
import time

import numpy as np

from riemap import gallery
from riemap.biharmonic import bitension, tension
from riemap.fdoracle import Oracle, relative_error


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--points", type=int, default=5)
    ap.add_argument("--step", type=float, default=1e-3)
    ap.add_argument("scenes", nargs="*", default=gallery.registry())
    args = ap.parse_args()

    print(f"{'scene':5s} {'point':>32s} {'tau plain':>10s} {'tau extr':>10s} {'tau2 plain':>10s} {'tau2 extr':>10s}")
    worst = np.zeros(4)
    for name in args.scenes:
        entry = gallery.builtin_scene(name)
        F = entry.map
        plain, extr = Oracle(F, args.step, extrapolate=False), Oracle(F, args.step)
        t0 = time.perf_counter()
        for p in entry.points()[: args.points]:
            t, b = tension(F, p), bitension(F, p)
            errs = np.array([
                relative_error(t, plain.tension(p)), relative_error(t, extr.tension(p)),
                relative_error(b, plain.bitension(p)), relative_error(b, extr.bitension(p)),
            ])
            worst = np.maximum(worst, errs)
            coords = "(" + ", ".join(f"{x:.3f}" for x in p) + ")"
            print(f"{name:5s} {coords:>32s} " + " ".join(f"{e:10.2e}" for e in errs))
        print(f"{'':5s} {'':>32s} oracle time {time.perf_counter() - t0:.2f}s")
    print(f"worst {'':>32s} " + " ".join(f"{e:10.2e}" for e in worst))


if __name__ == "__main__":
    main()
