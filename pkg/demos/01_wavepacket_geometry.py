"""Geometry of the entangled two-packet state.

Walks through the static structure of Psi = c1 Y_R(x) Y_L(y) + c2 Y_L(x) Y_R(y):
how many Fock levels a coherent packet of a given amplitude needs, how the
left/right packets overlap, and what the density looks like at the start of
the evolution and at the collision time.

Writes PPM heatmaps next to this script; pass --plot to also open matplotlib
figures if it is installed.
"""

import argparse
import math
from pathlib import Path

import numpy as np

from bohmqubits import analysis, serialization
from bohmqubits import wavefunction as wf
from bohmqubits.wavefunction import SystemSpec

OUT = Path(__file__).resolve().parent / "output"


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--plot", action="store_true",
                        help="show matplotlib figures as well")
    args = parser.parse_args()
    OUT.mkdir(exist_ok=True)

    # --- 1. How large must the Fock band be? ---------------------------
    # A coherent packet of amplitude a0 occupies Poisson-distributed levels
    # with mean a0^2. Truncating at n_f keeps only part of that mass.
    print("Band coverage (fraction of the packet kept by a cutoff n_f):")
    print(f"{'a0':>5} {'n_f=2':>9} {'n_f=4':>9} {'n_f=12':>9} {'n_f=25':>9}")
    for a0 in (1.0, 1.5, 2.0, 2.5):
        row = [wf.poisson_coverage(a0, 0, n) for n in (2, 4, 12, 25)]
        print(f"{a0:5.1f} " + " ".join(f"{v:9.4f}" for v in row))

    # --- 2. Distinguishability of the qubit basis states ---------------
    # The qubit encoding needs <Y_L|Y_R> ~ 0. For the full packet the
    # overlap is exp(-2 a0^2); truncation makes it much larger.
    print("\nBasis overlap <Y_L|Y_R> (full band vs n_f=12):")
    for a0 in (1.0, 1.5, 2.0, 2.5):
        full = wf.overlap_1d(a0)
        trunc = wf.overlap_1d(a0, n_f=12)
        print(f"  a0={a0:.1f}: full={full: .3e}  n_f=12={trunc: .3e}")
    print("  (a0=2.5 gives exp(-12.5) = %.3e: effectively orthogonal)"
          % math.exp(-12.5))

    # --- 3. Density snapshots ------------------------------------------
    # The two packets start at opposite corners of a Lissajous figure and
    # meet near the origin around t=4.58, where the nodal structure that
    # drives chaos is strongest.
    spec = SystemSpec.with_entanglement(
        math.sqrt(0.5), a0=2.5, b0=2.5, omega_x=1.0, omega_y=math.sqrt(3.0),
        renormalize=True,
    )
    snapshots = {}
    for label, t in (("start", 0.0), ("quarter", 1.2), ("collision", 4.58)):
        snap = analysis.density_snapshot(spec, t)
        snapshots[label] = snap
        path = OUT / f"density_{label}.ppm"
        serialization.write_ppm(np.maximum(snap.values, snap.floor), path,
                                log_scale=True)
        i, j = np.unravel_index(np.argmax(snap.values), snap.values.shape)
        dx = 18.0 / snap.resolution
        x, y = -9.0 + dx * (i + 0.5), -9.0 + dx * (j + 0.5)
        print(f"\nt={t:5.2f}: density max at ({x:+.2f}, {y:+.2f}), "
              f"support area {snap.support_mask.sum() * snap.cell_area:.1f}"
              f" -> {path.name}")

    (x1, y1), (x2, y2), d_max = wf.blob_centers(spec, 0.0)
    print(f"\nBlob centers at t=0: ({x1:+.2f}, {y1:+.2f}) and "
          f"({x2:+.2f}, {y2:+.2f}); farthest origin distance d_max="
          f"{d_max:.2f} = {d_max / spec.a0:.3f} a0")

    if args.plot:
        import matplotlib.pyplot as plt

        fig, axes = plt.subplots(1, 3, figsize=(13, 4))
        for ax, (label, snap) in zip(axes, snapshots.items()):
            ax.imshow(np.log10(np.maximum(snap.values, snap.floor)).T,
                      origin="lower", extent=(-9, 9, -9, 9), cmap="inferno")
            ax.set_title(f"log10 density, {label} (t={snap.t:.2f})")
        plt.tight_layout()
        plt.show()


if __name__ == "__main__":
    main()
