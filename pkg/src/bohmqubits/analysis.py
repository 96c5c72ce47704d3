"""Trajectory statistics: occupancy grids, Frobenius distances, truncation
sweeps, Born-rule sampling and density snapshots.

The occupancy grid counts how many times a trajectory visits each cell of a
square lattice; normalizing by the accumulated integration time makes grids
from runs of different lengths comparable, and the Frobenius norm of the
difference of two normalized grids measures how differently two trajectories
fill the support.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .dynamics import COMPLETED, IntegratorSettings, TrajectoryRecord, integrate
from .errors import (
    ConfigError,
    EnvelopeViolationError,
    GridShapeError,
    StrideMismatchError,
)
from .wavefunction import SystemSpec, density

DEFAULT_BOUNDS = (-9.0, 9.0, -9.0, 9.0)
DEFAULT_RESOLUTION = 360
DEFAULT_STRIDE = 0.05
DEFAULT_FLOOR = 1e-5


@dataclass
class OccupancyGrid:
    """Visit counts of trajectory samples on a square lattice.

    ``counts[i, j]`` covers the cell x in [x_i, x_{i+1}), y in [y_j, y_{j+1})
    (last cell closed on the right).  ``total_time`` is the integration time
    the counts represent; normalized entries are counts / total_time.
    """

    bounds: tuple = DEFAULT_BOUNDS
    resolution: int = DEFAULT_RESOLUTION
    stride: float = DEFAULT_STRIDE
    counts: np.ndarray = None
    total_time: float = 0.0
    out_of_bounds: int = 0

    def __post_init__(self):
        if self.resolution < 1:
            raise ConfigError("resolution must be >= 1")
        if self.stride <= 0.0:
            raise ConfigError("stride must be positive")
        x0, x1, y0, y1 = self.bounds
        if not (x0 < x1 and y0 < y1):
            raise ConfigError("bounds must be a nonempty rectangle")
        if self.counts is None:
            self.counts = np.zeros((self.resolution, self.resolution))
        elif self.counts.shape != (self.resolution, self.resolution):
            raise GridShapeError("counts shape does not match resolution")

    def normalized(self) -> np.ndarray:
        if self.total_time <= 0.0:
            raise ConfigError("grid holds no accumulated time")
        return self.counts / self.total_time

    def merged(self, other: "OccupancyGrid") -> "OccupancyGrid":
        """Combine two grids of identical geometry (matrix addition)."""
        _require_same_geometry(self, other)
        return OccupancyGrid(
            bounds=self.bounds,
            resolution=self.resolution,
            stride=self.stride,
            counts=self.counts + other.counts,
            total_time=self.total_time + other.total_time,
            out_of_bounds=self.out_of_bounds + other.out_of_bounds,
        )


@dataclass
class DensitySnapshot:
    """|Psi|^2 on a lattice at fixed t with a plotting floor."""

    bounds: tuple
    resolution: int
    t: float
    values: np.ndarray
    floor: float = DEFAULT_FLOOR

    @property
    def support_mask(self) -> np.ndarray:
        return self.values >= self.floor

    @property
    def cell_area(self) -> float:
        x0, x1, y0, y1 = self.bounds
        return ((x1 - x0) / self.resolution) * ((y1 - y0) / self.resolution)

    def integral(self) -> float:
        """Lattice approximation of the total probability on the box."""
        return float(self.values.sum() * self.cell_area)


def _require_same_geometry(a: OccupancyGrid, b: OccupancyGrid):
    if a.bounds != b.bounds or a.resolution != b.resolution:
        raise GridShapeError("grids differ in bounds or resolution")
    if abs(a.stride - b.stride) > 1e-12:
        raise StrideMismatchError(
            f"grid strides differ: {a.stride} vs {b.stride}"
        )


def _bin_edges(grid: OccupancyGrid):
    x0, x1, y0, y1 = grid.bounds
    return (
        np.linspace(x0, x1, grid.resolution + 1),
        np.linspace(y0, y1, grid.resolution + 1),
    )


def accumulate(grid: OccupancyGrid, record: TrajectoryRecord) -> OccupancyGrid:
    """Add a trajectory record's samples into the grid (in place).

    Every in-bounds sample increments its cell by one; out-of-bounds samples
    are tallied in ``out_of_bounds``.  The record must have been sampled at
    the grid's stride.
    """
    if abs(record.sample_dt - grid.stride) > 1e-12:
        raise StrideMismatchError(
            f"record stride {record.sample_dt} != grid stride {grid.stride}"
        )
    if len(record.samples) == 0:
        return grid
    xs = record.samples[:, 1]
    ys = record.samples[:, 2]
    ex, ey = _bin_edges(grid)
    hist, _, _ = np.histogram2d(xs, ys, bins=(ex, ey))
    grid.counts += hist
    grid.out_of_bounds += int(len(xs) - hist.sum())
    grid.total_time += record.duration
    return grid


def frobenius_distance(a: OccupancyGrid, b: OccupancyGrid) -> float:
    """|| A/T_A - B/T_B ||_F between time-normalized grids."""
    _require_same_geometry(a, b)
    return float(np.linalg.norm(a.normalized() - b.normalized()))


def grid_from_trajectory(spec: SystemSpec, x0: float, y0: float,
                         settings: IntegratorSettings,
                         bounds=DEFAULT_BOUNDS,
                         resolution: int = DEFAULT_RESOLUTION) -> tuple:
    """Integrate one trajectory and bin it; returns (grid, record)."""
    record = integrate(spec, x0, y0, settings)
    grid = OccupancyGrid(bounds=bounds, resolution=resolution,
                         stride=settings.sample_dt)
    accumulate(grid, record)
    return grid, record


def truncation_sweep(base_spec: SystemSpec, n_f_list, c2_list,
                     x0: float = 0.1, y0: float = 0.4,
                     settings: IntegratorSettings | None = None,
                     bounds=DEFAULT_BOUNDS,
                     resolution: int = DEFAULT_RESOLUTION):
    """D between truncated-state and full-state grids per (n_f, c2).

    For each entanglement value the reference grid comes from the full
    (untruncated) state with the same initial condition; entries where
    either integration did not complete are NaN, with the failing statuses
    collected in the diagnostics dict.

    Returns (matrix, diagnostics) with matrix shape (len(n_f_list),
    len(c2_list)).
    """
    n_f_list = list(n_f_list)
    c2_list = list(c2_list)
    if not n_f_list or not c2_list:
        raise ConfigError("n_f_list and c2_list must be nonempty")
    if settings is None:
        settings = IntegratorSettings()
    out = np.full((len(n_f_list), len(c2_list)), np.nan)
    diagnostics: dict = {}
    for j, c2 in enumerate(c2_list):
        full = SystemSpec.with_entanglement(
            c2, a0=base_spec.a0, b0=base_spec.b0,
            omega_x=base_spec.omega_x, omega_y=base_spec.omega_y,
            n_in=0, n_f=None,
        )
        ref_grid, ref_rec = grid_from_trajectory(
            full, x0, y0, settings, bounds, resolution
        )
        if ref_rec.status != COMPLETED or ref_rec.out_of_box:
            diagnostics[("full", c2)] = ref_rec.status
            continue
        for i, n_f in enumerate(n_f_list):
            trunc = replace(full, n_in=base_spec.n_in, n_f=n_f)
            grid, rec = grid_from_trajectory(
                trunc, x0, y0, settings, bounds, resolution
            )
            if rec.status != COMPLETED or rec.out_of_box:
                diagnostics[(n_f, c2)] = rec.status
                continue
            out[i, j] = frobenius_distance(grid, ref_grid)
    return out, diagnostics


def convergence_series(spec: SystemSpec, x0a: float, y0a: float,
                       x0b: float, y0b: float,
                       settings: IntegratorSettings, checkpoints,
                       bounds=DEFAULT_BOUNDS,
                       resolution: int = DEFAULT_RESOLUTION) -> np.ndarray:
    """D(t) between the running grids of two trajectories.

    Integrates each trajectory once to the last checkpoint and evaluates the
    Frobenius distance of the prefix grids at every checkpoint.  Returns rows
    (t, D).
    """
    cps = [float(c) for c in checkpoints]
    if not cps or any(b <= a for a, b in zip(cps, cps[1:])) or cps[0] <= 0:
        raise ConfigError("checkpoints must be positive and increasing")
    run = replace_settings_t_end(settings, cps[-1])
    rec_a = integrate(spec, x0a, y0a, run)
    rec_b = integrate(spec, x0b, y0b, run)
    template = OccupancyGrid(bounds=bounds, resolution=resolution,
                             stride=run.sample_dt)
    ex, ey = _bin_edges(template)
    out = []
    for cp in cps:
        n = int(round(cp / run.sample_dt)) + 1
        if n > len(rec_a.samples) or n > len(rec_b.samples):
            out.append((cp, np.nan))
            continue
        ha, _, _ = np.histogram2d(
            rec_a.samples[:n, 1], rec_a.samples[:n, 2], bins=(ex, ey)
        )
        hb, _, _ = np.histogram2d(
            rec_b.samples[:n, 1], rec_b.samples[:n, 2], bins=(ex, ey)
        )
        out.append((cp, float(np.linalg.norm(ha / cp - hb / cp))))
    return np.array(out)


def replace_settings_t_end(settings: IntegratorSettings,
                           t_end: float) -> IntegratorSettings:
    return IntegratorSettings(
        t_end=t_end, rel_tol=settings.rel_tol, abs_tol=settings.abs_tol,
        dt_init=settings.dt_init, dt_min=settings.dt_min,
        v_cap=settings.v_cap, sample_dt=settings.sample_dt,
        box_half=settings.box_half,
    )


def density_snapshot(spec: SystemSpec, t: float, bounds=DEFAULT_BOUNDS,
                     resolution: int = DEFAULT_RESOLUTION,
                     floor: float = DEFAULT_FLOOR) -> DensitySnapshot:
    """|Psi|^2 on a lattice of cell centers at time t."""
    x0, x1, y0, y1 = bounds
    dx = (x1 - x0) / resolution
    dy = (y1 - y0) / resolution
    xs = x0 + dx * (np.arange(resolution) + 0.5)
    ys = y0 + dy * (np.arange(resolution) + 0.5)
    gx, gy = np.meshgrid(xs, ys, indexing="ij")
    values = density(spec, gx, gy, t)
    return DensitySnapshot(bounds=tuple(bounds), resolution=resolution,
                           t=t, values=values, floor=floor)


def born_sample(spec: SystemSpec, t: float, count: int, seed: int,
                bounds=DEFAULT_BOUNDS) -> np.ndarray:
    """i.i.d. positions drawn from |Psi(x, y, t)|^2 by rejection sampling.

    The proposal is uniform over ``bounds`` with envelope constant 1.1 times
    the lattice maximum of the density; a density value above the envelope
    raises an error (the lattice estimate was stale).  Deterministic per
    seed.  Returns an (count, 2) array.
    """
    if count < 1:
        raise ConfigError("count must be >= 1")
    if not spec.renormalize:
        raise ConfigError("born_sample requires a renormalized spec")
    snap = density_snapshot(spec, t, bounds=bounds, resolution=DEFAULT_RESOLUTION)
    envelope = 1.1 * float(snap.values.max())
    if envelope <= 0.0:
        raise ConfigError("density vanishes on the sampling box")
    x0, x1, y0, y1 = bounds
    rng = np.random.default_rng(seed)
    out = np.empty((count, 2))
    filled = 0
    while filled < count:
        m = max(256, 2 * (count - filled))
        xs = rng.uniform(x0, x1, m)
        ys = rng.uniform(y0, y1, m)
        us = rng.uniform(0.0, envelope, m)
        dens = density(spec, xs, ys, t)
        if np.any(dens > envelope):
            raise EnvelopeViolationError(
                "density exceeds the rejection envelope; lattice maximum "
                "was stale"
            )
        keep = us < dens
        take = min(int(keep.sum()), count - filled)
        idx = np.nonzero(keep)[0][:take]
        out[filled:filled + take, 0] = xs[idx]
        out[filled:filled + take, 1] = ys[idx]
        filled += take
    return out
