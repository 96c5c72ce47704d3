"""Nodal points: where the wavefunction vanishes and chaos is born.

Locates the zeros of Psi three independent ways (closed form, Newton on a
seeded grid, and high-speed velocity contours), then follows them in time.
The nodes sweep through the plane between the colliding packets; every
close encounter with a trajectory is a scattering event.

Writes node-trace images to demos/output; pass --plot for matplotlib.
"""

import argparse
import math
from dataclasses import replace
from pathlib import Path

from bohmqubits import nodal, serialization
from bohmqubits.wavefunction import SystemSpec

OUT = Path(__file__).resolve().parent / "output"
BOX = (-9.0, 9.0, -9.0, 9.0)


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--plot", action="store_true")
    args = parser.parse_args()
    OUT.mkdir(exist_ok=True)

    bell = SystemSpec.with_entanglement(
        math.sqrt(0.5), a0=2.5, b0=2.5, omega_x=1.0, omega_y=math.sqrt(3.0)
    )

    # --- 1. Three locators, one answer ----------------------------------
    t = 1.9
    ana = nodal.nodes_analytic(bell, t, 13)
    num = nodal.nodes_numeric(bell, t)
    cloud = nodal.velocity_contour_nodes(bell, (t, t), dt=1.0,
                                         speed_level=100.0)
    print(f"t={t}: {len(ana)} closed-form nodes (|k|<=13), "
          f"{len(num)} Newton roots, {len(cloud)} fast-velocity cells")
    k1 = [p for p in ana if abs(p.k) == 1]
    for p in k1:
        match = min(num, key=lambda q: math.hypot(q.x - p.x, q.y - p.y))
        print(f"  k={p.k:+d}: closed form ({p.x:+.6f}, {p.y:+.6f}), "
              f"Newton off by "
              f"{math.hypot(match.x - p.x, match.y - p.y):.1e}")

    # --- 2. The innermost pair over one collision cycle ------------------
    # The |k|=1 nodes approach the origin closest; their minimum distance
    # sets how deep into the bulk the chaos-generating machinery reaches.
    best_t, best_d = None, float("inf")
    ts = [0.005 + i * 0.005 for i in range(2000)]
    for ti in ts:
        try:
            d = nodal.min_node_distance(bell, ti)
        except nodal.NodesAtInfinityError:
            continue
        if d < best_d:
            best_t, best_d = ti, d
    print(f"\nclosest origin approach of the |k|=1 pair: "
          f"{best_d:.4f} at t={best_t:.3f}")

    # --- 3. Node families traced through time ----------------------------
    traces = nodal.trace_nodes(bell, (0.5, 4.5), dt=0.01)
    cloud = nodal.trace_cloud(traces)
    serialization.write_point_cloud_pgm(cloud, OUT / "node_traces.pgm", BOX)
    print(f"{len(traces)} node families traced over t in [0.5, 4.5] "
          f"({len(cloud)} positions) -> node_traces.pgm")

    # --- 4. Truncated states have finitely many nodes --------------------
    # With the band cut at n_f, Psi is a degree-2*n_f polynomial times a
    # Gaussian: at generic times a band state shows exactly 2*n_f nodes.
    small = SystemSpec.with_entanglement(
        math.sqrt(0.5), a0=0.5, b0=0.5, omega_x=1.0, omega_y=math.sqrt(3.0)
    )
    wide = (-24.0, 24.0, -24.0, 24.0)
    for n_f in (2, 4):
        trunc = replace(small, n_f=n_f)
        found = nodal.nodes_numeric(trunc, 0.8, box=wide, seed_grid=600)
        print(f"n_f={n_f}: {len(found)} nodes at t=0.8 (expect {2 * n_f})")

    if args.plot:
        import matplotlib.pyplot as plt

        plt.figure(figsize=(6, 6))
        plt.scatter(cloud[:, 1], cloud[:, 2], s=0.3, c=cloud[:, 0],
                    cmap="viridis")
        plt.colorbar(label="t")
        plt.title("nodal point traces")
        plt.gca().set_aspect("equal")
        plt.show()


if __name__ == "__main__":
    main()
