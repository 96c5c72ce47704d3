"""File formats for trajectories, grids, node sets and images.

Binary formats are little-endian with a fixed magic and version:

  grid   "BQGR" | u32 version | 4 x f64 bounds | u32 resolution | f64 stride
         | f64 total_time | u64 out_of_bounds | 32-byte manifest hash
         | resolution^2 x f64 counts (row-major)

  track  "BQTR" | u32 version | 32-byte spec hash | u64 sample count
         | f64 stride | u8 status | u8 out_of_box | 6 pad bytes
         | count x 3 x f64 samples (t, x, y)

Images are plain portable pixmaps (PPM/PGM) with a built-in colormap, so no
plotting library is required.
"""

from __future__ import annotations

import csv
import struct
from pathlib import Path

import numpy as np

from .analysis import OccupancyGrid
from .dynamics import ABORTED_AT_NODE, COMPLETED, TrajectoryRecord
from .errors import ConfigError
from .wavefunction import SystemSpec

GRID_MAGIC = b"BQGR"
TRACK_MAGIC = b"BQTR"
FORMAT_VERSION = 1

_STATUS_CODES = {COMPLETED: 0, ABORTED_AT_NODE: 1}
_STATUS_NAMES = {v: k for k, v in _STATUS_CODES.items()}


# ---------------------------------------------------------------- CSV

def write_trajectory_csv(record: TrajectoryRecord, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "x", "y"])
        for t, x, y in record.samples:
            w.writerow([repr(float(t)), repr(float(x)), repr(float(y))])


def read_trajectory_csv(path) -> np.ndarray:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or rows[0] != ["t", "x", "y"]:
        raise ConfigError(f"{path} is not a trajectory CSV")
    return np.array([[float(v) for v in row] for row in rows[1:]]).reshape(-1, 3)


def write_nodes_csv(nodes, path):
    """Node list CSV with columns t, x, y, k, residual."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "x", "y", "k", "residual"])
        for p in nodes:
            w.writerow([
                repr(p.t), repr(p.x), repr(p.y),
                "" if p.k is None else p.k, repr(p.residual),
            ])


def write_sweep_csv(matrix, n_f_list, c2_list, n_in, path):
    """Truncation-sweep CSV with columns n_in, n_f, c2, D."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["n_in", "n_f", "c2", "D"])
        for i, n_f in enumerate(n_f_list):
            for j, c2 in enumerate(c2_list):
                w.writerow([n_in, n_f, repr(float(c2)),
                            repr(float(matrix[i, j]))])


def write_matrix_csv(matrix: np.ndarray, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        for row in np.atleast_2d(matrix):
            w.writerow([repr(float(v)) for v in row])


# ---------------------------------------------------------------- binary

def save_grid(grid: OccupancyGrid, path, manifest_hash: bytes = b""):
    h = bytes(manifest_hash)[:32].ljust(32, b"\0")
    header = GRID_MAGIC + struct.pack(
        "<I4dIddQ", FORMAT_VERSION, *grid.bounds, grid.resolution,
        grid.stride, grid.total_time, grid.out_of_bounds,
    ) + h
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(np.ascontiguousarray(grid.counts, dtype="<f8").tobytes())


def load_grid(path) -> tuple[OccupancyGrid, bytes]:
    """Read a grid file; returns (grid, manifest_hash)."""
    raw = Path(path).read_bytes()
    if raw[:4] != GRID_MAGIC:
        raise ConfigError(f"{path} is not a grid file")
    fmt = "<I4dIddQ"
    size = struct.calcsize(fmt)
    version, x0, x1, y0, y1, res, stride, total_time, oob = struct.unpack_from(
        fmt, raw, 4
    )
    if version != FORMAT_VERSION:
        raise ConfigError(f"unsupported grid format version {version}")
    off = 4 + size
    manifest_hash = raw[off:off + 32]
    counts = np.frombuffer(raw[off + 32:], dtype="<f8")
    if counts.size != res * res:
        raise ConfigError(f"{path} is truncated")
    grid = OccupancyGrid(
        bounds=(x0, x1, y0, y1), resolution=res, stride=stride,
        counts=counts.reshape(res, res).copy(), total_time=total_time,
        out_of_bounds=oob,
    )
    return grid, manifest_hash


def save_trajectory(record: TrajectoryRecord, path, spec_hash: bytes = b""):
    h = bytes(spec_hash)[:32].ljust(32, b"\0")
    header = TRACK_MAGIC + struct.pack("<I", FORMAT_VERSION) + h + struct.pack(
        "<QdBB6x", len(record.samples), record.sample_dt,
        _STATUS_CODES[record.status], int(record.out_of_box),
    )
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(np.ascontiguousarray(record.samples, dtype="<f8").tobytes())


def load_trajectory(path) -> dict:
    """Read a trajectory file into a plain dict (no spec reconstruction)."""
    raw = Path(path).read_bytes()
    if raw[:4] != TRACK_MAGIC:
        raise ConfigError(f"{path} is not a trajectory file")
    (version,) = struct.unpack_from("<I", raw, 4)
    if version != FORMAT_VERSION:
        raise ConfigError(f"unsupported trajectory format version {version}")
    spec_hash = raw[8:40]
    fmt = "<QdBB6x"
    count, stride, status, oob = struct.unpack_from(fmt, raw, 40)
    off = 40 + struct.calcsize(fmt)
    samples = np.frombuffer(raw[off:], dtype="<f8")
    if samples.size != count * 3:
        raise ConfigError(f"{path} is truncated")
    return {
        "spec_hash": spec_hash,
        "sample_dt": stride,
        "status": _STATUS_NAMES[status],
        "out_of_box": bool(oob),
        "samples": samples.reshape(count, 3).copy(),
    }


# ---------------------------------------------------------------- images

def _colormap() -> np.ndarray:
    """256-entry blue -> cyan -> yellow -> red lookup table (uint8 RGB)."""
    t = np.linspace(0.0, 1.0, 256)
    r = np.clip(np.interp(t, [0.0, 0.35, 0.65, 1.0], [0.0, 0.0, 1.0, 0.9]), 0, 1)
    g = np.clip(np.interp(t, [0.0, 0.35, 0.65, 1.0], [0.0, 0.9, 0.9, 0.0]), 0, 1)
    b = np.clip(np.interp(t, [0.0, 0.35, 0.65, 1.0], [0.4, 0.9, 0.0, 0.0]), 0, 1)
    return (np.stack([r, g, b], axis=1) * 255).astype(np.uint8)


def _quantize(matrix: np.ndarray, log_scale: bool) -> np.ndarray:
    m = np.asarray(matrix, dtype=float)
    if log_scale:
        positive = m[m > 0.0]
        lo = positive.min() if positive.size else 1.0
        m = np.log10(np.maximum(m, lo))
    top = m.max()
    bottom = m.min()
    if top == bottom:
        return np.zeros(m.shape, dtype=np.uint8)
    return np.clip((m - bottom) / (top - bottom) * 255.0, 0, 255).astype(np.uint8)


def write_ppm(matrix: np.ndarray, path, log_scale: bool = False):
    """Color-mapped binary PPM; matrix row index = x, column = y.

    The image is written so x increases rightward and y upward.
    """
    levels = _quantize(matrix, log_scale)
    rgb = _colormap()[levels]
    img = np.transpose(rgb, (1, 0, 2))[::-1]
    h, w, _ = img.shape
    with open(path, "wb") as fh:
        fh.write(f"P6\n{w} {h}\n255\n".encode())
        fh.write(img.tobytes())


def write_pgm(matrix: np.ndarray, path, log_scale: bool = False):
    """Grayscale binary PGM with the same orientation as write_ppm."""
    levels = _quantize(matrix, log_scale)
    img = levels.T[::-1]
    h, w = img.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{w} {h}\n255\n".encode())
        fh.write(img.tobytes())


def write_point_cloud_pgm(points: np.ndarray, path, bounds,
                          resolution: int = 720):
    """Scatter an (m, >=3) point cloud (t, x, y) into a binary image."""
    x0, x1, y0, y1 = bounds
    img = np.zeros((resolution, resolution))
    if len(points):
        xs = np.clip(
            ((points[:, 1] - x0) / (x1 - x0) * resolution).astype(int),
            0, resolution - 1,
        )
        ys = np.clip(
            ((points[:, 2] - y0) / (y1 - y0) * resolution).astype(int),
            0, resolution - 1,
        )
        img[xs, ys] = 1.0
    write_pgm(img, path)


def spec_to_dict(spec: SystemSpec) -> dict:
    return {
        "a0": spec.a0, "b0": spec.b0,
        "omega_x": spec.omega_x, "omega_y": spec.omega_y,
        "c1": spec.c1, "c2": spec.c2,
        "n_in": spec.n_in, "n_f": spec.n_f,
        "renormalize": spec.renormalize,
    }


def spec_from_dict(d: dict) -> SystemSpec:
    return SystemSpec(**d)
