"""How much of the bitension the horizontal-trace conditions leave out.

Builds warped products U x_f R -> U -> (sphere in a space form), whose
fibers have mean curvature -grad log f, and compares the range and normal
conditions with the full bitension split into its horizontal-trace part and
the vertical-trace remainder.  With f = 1 the fibers are geodesics and the
remainder vanishes.
"""

import argparse

import numpy as np

from riemap.biharmonic import bitension_breakdown
from riemap.rmap import MapAtPoint
from riemap.sampling import SampleSpec, grid_sample
from riemap.scene import parse_scene

SCENE = """
manifold W {{
  dim 3
  coords u v t
  metric [[{s2}, 0, 0], [0, {s2} * sin(u)^2, 0], [0, 0, ({warp})^2]]
  domain [0.3, pi - 0.3] x [-3, 3] x [-1, 1]
}}
spaceform M {{ dim 3 curvature {c} coords a b w }}
map F : W -> M {{
  a = {rho} * sin(u) * cos(v)
  b = {rho} * sin(u) * sin(v)
  w = {rho} * cos(u)
}}
"""


def scene_for(c: float, warp: str):
    # a coordinate sphere of conformal radius rho in the model of curvature c has
    # induced metric s2 (du^2 + sin^2 u dv^2) with s2 = (rho / (1 + c rho^2 / 4))^2
    rho = 0.8
    s2 = (rho / (1 + c * rho * rho / 4)) ** 2
    return parse_scene(SCENE.format(s2=repr(s2), warp=warp, c=c, rho=rho), f"warped_c{c}")


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--points", type=int, default=4)
    ap.add_argument("--warp", default="1 + 0.3 * cos(u)", help="fiber length factor f(u)")
    args = ap.parse_args()

    print(f"{'c':>5s} {'warp':>18s} {'|mu_ker|':>9s} {'|vert|':>9s} {'range-hor':>10s} {'normal+hor':>10s} "
          f"{'range-full':>10s} {'normal+full':>11s}")
    for c in (0.0, 1.0, -0.5):
        for warp in ("1", args.warp):
            F = scene_for(c, warp).get_map()
            pts = grid_sample(SampleSpec(n=args.points, seed=5, corners=False), F.source.domain)
            rows = []
            for p in pts:
                ctx = MapAtPoint(F, p)
                bd = bitension_breakdown(F, p, ctx)
                n = ctx.g2_norm
                rows.append([
                    ctx.g1_norm(ctx.mu_ker.value), n(bd.vertical_trace_remainder),
                    n(bd.range_condition - bd.tau2_horizontal_range), n(bd.normal_condition + bd.tau2_horizontal_normal),
                    n(bd.range_condition - bd.tau2_range), n(bd.normal_condition + bd.tau2_normal),
                ])
            w = np.max(rows, axis=0)
            print(f"{c:5.1f} {warp:>18s} " + " ".join(f"{x:9.2e}" if k < 2 else f"{x:10.2e}" for k, x in enumerate(w)))


if __name__ == "__main__":
    main()
