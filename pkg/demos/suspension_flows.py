"""Pressure of suspension flows and the edge-subdivision picture.

The flow pressure is the root of t -> P(Delta - t tau). A constant roof c
divides the base pressure by c; on the full shift with roof x_1 the root
solves sum e^{-t n} = 1, that is t = log 2.
"""

import math

import numpy as np

from cmsthermo import (
    SuspensionSpec, build_truncation, constant, first_coordinate, flow_report, full_shift,
    renewal_shift, subdivide_edges, suspension_pressure,
)


def main():
    x1 = first_coordinate(lambda i: float(i), vec=lambda s: np.asarray(s, dtype=float), tail=(1.0, 0.0, 0.0))
    cases = [("full 2-shift, tau = 2", SuspensionSpec(full_shift(2), constant(2.0))),
             ("renewal, tau = 1", SuspensionSpec(renewal_shift(), constant(1.0))),
             ("full shift, tau = x1", SuspensionSpec(full_shift(), x1))]
    for name, s in cases:
        rep = flow_report(s)
        print(f"{name:<24} P = {rep['P_theta']:.10f}  P_inf = {rep['P_theta_inf']}  SPR: {rep['spr']}")
    print("log 2 / 2 =", math.log(2) / 2, " log 2 =", math.log(2))
    print("with roof x1 the flow pressure at infinity is 0; the small positive estimate")
    print("reflects how slowly the penalised pressures fall when t is close to 0")

    g = build_truncation(full_shift(2))
    hat = subdivide_edges(g, constant(2))
    print(f"subdividing every edge of the 2-shift: {g.n} -> {hat.n} vertices, "
          f"entropy {suspension_pressure(SuspensionSpec(hat, constant(1.0))).value:.10f}")


if __name__ == "__main__":
    main()
