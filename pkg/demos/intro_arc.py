"""Polygonal Euler arcs for the sign-switching inclusion.

Refines the arc from x = 0.5 over the default (k, eps) schedule and prints
the sup gap between successive refinements, the largest value of x**2 on
each arc and the distance to the exact solution max(0.5 - t, 0).
"""

import numpy as np

from stronginv import EulerConfig, build_polygonal_arc, default_schedule, quadratic
from stronginv.scenarios import intro_realization


def main():
    f = intro_realization([0.5])
    cfg = EulerConfig.from_feedback(f)
    psi = quadratic()
    print("T_tilde = %.6g, gamma = %.6g" % (cfg.t_tilde, cfg.gamma))
    prev = None
    for k, eps in default_schedule():
        arc = build_polygonal_arc(f, eps, k, psi, [0.5], cfg)
        exact = np.maximum(0.5 - arc.times, 0.0)
        err = np.max(np.abs(arc.points[:, 0] - exact))
        gap = arc.sup_distance(prev) if prev is not None else float("nan")
        print("k=%4d eps=%-9g max psi=%.10f  |x-exact|=%.2e  gap=%.2e"
              % (k, eps, arc.psi_values.max(), err, gap))
        prev = arc


if __name__ == "__main__":
    main()
