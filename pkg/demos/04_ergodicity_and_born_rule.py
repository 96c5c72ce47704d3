"""Ergodicity of chaotic trajectories and the Born rule.

A single chaotic trajectory, binned over a long time, approaches an
occupancy distribution that is independent of where it started; an ensemble
of trajectories drawn from |Psi|^2 stays |Psi|^2-distributed.  This script
measures both at a desk-friendly horizon and shows how the occupancy
distance shrinks as 1/sqrt(T) toward the shot-noise floor.

Pass --t-end to lengthen the runs (t=1e5 reproduces the long-run numbers,
at a few minutes per trajectory).
"""

import argparse
import math
from pathlib import Path

import numpy as np

from bohmqubits import analysis, dynamics, serialization
from bohmqubits.dynamics import IntegratorSettings
from bohmqubits.wavefunction import SystemSpec

OUT = Path(__file__).resolve().parent / "output"


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--t-end", type=float, default=1e4)
    parser.add_argument("--plot", action="store_true")
    args = parser.parse_args()
    OUT.mkdir(exist_ok=True)

    bell = SystemSpec.with_entanglement(
        math.sqrt(0.5), a0=2.5, b0=2.5, omega_x=1.0, omega_y=math.sqrt(3.0)
    )

    # --- 1. Occupancy distance between two chaotic trajectories ----------
    # Two starts, one invariant distribution: the Frobenius distance D of
    # the time-normalized occupancy grids measures how far the two time
    # averages still are from each other.
    settings = IntegratorSettings(t_end=args.t_end)
    grids = {}
    for x0, y0 in ((3.0, 0.0), (0.1, 0.2)):
        grid, rec = analysis.grid_from_trajectory(bell, x0, y0, settings)
        grids[(x0, y0)] = grid
        serialization.write_ppm(grid.counts,
                                OUT / f"occupancy_{x0}_{y0}.ppm",
                                log_scale=True)
        print(f"trajectory ({x0}, {y0}): status={rec.status}, "
              f"{grid.counts.sum():.0f} in-box samples")
    (g1, g2) = grids.values()
    d = analysis.frobenius_distance(g1, g2)
    floor = math.sqrt(2.0 / (args.t_end * settings.sample_dt))
    print(f"D(T={args.t_end:g}) = {d:.4f} "
          f"(independent-sampling shot-noise floor {floor:.4f})")

    # --- 2. Convergence with the time horizon -----------------------------
    checkpoints = [args.t_end / 8, args.t_end / 4, args.t_end / 2,
                   args.t_end]
    series = analysis.convergence_series(bell, 3.0, 0.0, 0.1, 0.2,
                                         settings, checkpoints)
    print("\nD(T) along the run (expect ~1/sqrt(T)):")
    for t, dt_val in series:
        print(f"  T={t:10.0f}  D={dt_val:.4f}  "
              f"D*sqrt(T)={dt_val * math.sqrt(t):.2f}")

    # --- 3. Born-rule ensemble ------------------------------------------
    # Positions drawn from |Psi|^2 at t=0, pushed forward by the flow,
    # should match |Psi|^2 at the later time (equivariance).
    born = SystemSpec.with_entanglement(
        math.sqrt(0.5), a0=2.5, b0=2.5, omega_x=1.0, omega_y=math.sqrt(3.0),
        renormalize=True,
    )
    n = 400
    t1 = 2.0
    starts = analysis.born_sample(born, 0.0, n, seed=123)
    records = dynamics.integrate_ensemble(
        bell, [tuple(p) for p in starts], IntegratorSettings(t_end=t1)
    )
    finals = np.array([r.samples[-1, 1:] for r in records])
    dens = analysis.density_snapshot(born, t1, resolution=90)
    # average density at the evolved points vs at uniform points: the
    # evolved ensemble should strongly prefer high-density cells
    from bohmqubits.wavefunction import density

    at_pts = density(born, finals[:, 0], finals[:, 1], t1).mean()
    uniform = np.random.default_rng(0).uniform(-9, 9, size=(n, 2))
    at_uniform = density(born, uniform[:, 0], uniform[:, 1], t1).mean()
    print(f"\nBorn ensemble ({n} points) pushed to t={t1}: mean density at "
          f"evolved points {at_pts:.4f} vs {at_uniform:.4f} at uniform "
          f"points (ratio {at_pts / at_uniform:.0f}x)")

    if args.plot:
        import matplotlib.pyplot as plt

        fig, axes = plt.subplots(1, 2, figsize=(11, 5))
        axes[0].imshow(np.log1p(g1.counts).T, origin="lower",
                       extent=(-9, 9, -9, 9), cmap="inferno")
        axes[0].set_title("occupancy, start (3, 0)")
        axes[1].scatter(finals[:, 0], finals[:, 1], s=2)
        axes[1].set_title(f"Born ensemble at t={t1}")
        axes[1].set_aspect("equal")
        plt.tight_layout()
        plt.show()


if __name__ == "__main__":
    main()
