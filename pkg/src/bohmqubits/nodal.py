"""Zeros of the two-mode wavefunction and their motion.

For the full (non-truncated, equal-amplitude) state the nodal points form a
single straight-line family indexed by an integer k and are available in
closed form.  Truncated states need a numerical search: a lattice scan of
|Psi|^2 seeds a damped Newton iteration on (Re Psi, Im Psi).  A
derivative-free alternative marks the cells where the Bohmian speed exceeds
a large threshold, which draws tiny closed curves around every node.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from .errors import NodesAtInfinityError
from .wavefunction import SystemSpec, blob_centers, psi

DEFAULT_BOX = (-9.0, 9.0, -9.0, 9.0)

# sin(omega_xy * t) below this is treated as the nodes-at-infinity degeneracy
DEGENERACY_EPS = 1e-12

RESIDUAL_FACTOR = 1e-8

# Absolute evaluation-noise level of the automatically band-limited psi,
# relative to the global amplitude (set by the band-cutoff tail mass).
CUTOFF_NOISE = 1e-9


@dataclass
class NodalPoint:
    """Instantaneous zero of Psi; ``k`` is None for numerically found nodes.

    ``uncertainty`` is the positional error scale set by the evaluation
    noise of psi projected through the local gradient (0 for exact states
    and closed-form nodes).
    """

    t: float
    x: float
    y: float
    k: int | None
    residual: float
    uncertainty: float = 0.0


@dataclass
class NodalTrace:
    """Time-continuation of one node; gaps mark intervals outside the box."""

    points: list[NodalPoint] = field(default_factory=list)
    gaps: list[tuple[float, float]] = field(default_factory=list)
    k: int | None = None


def _require_analytic_regime(spec: SystemSpec):
    if not spec.is_full_band:
        raise ValueError("analytic nodal formula requires the full band")
    if abs(spec.a0 - spec.b0) > 1e-12:
        raise ValueError("analytic nodal formula requires a0 == b0")
    if spec.c1 * spec.c2 == 0.0:
        raise ValueError("product states have no nodal points at finite position")


def analytic_node_position(spec: SystemSpec, t: float, k: int):
    """Closed-form node coordinates for family index k."""
    _require_analytic_regime(spec)
    s = math.sin((spec.omega_x - spec.omega_y) * t)
    if abs(s) < DEGENERACY_EPS:
        raise NodesAtInfinityError(f"nodal points at infinity at t={t}")
    log_ratio = math.log(abs(spec.c1 / spec.c2))
    x = (
        math.sqrt(2.0)
        * (k * math.pi * math.cos(spec.omega_y * t) + math.sin(spec.omega_y * t) * log_ratio)
        / (4.0 * math.sqrt(spec.omega_x) * spec.a0 * s)
    )
    y = (
        math.sqrt(2.0)
        * (k * math.pi * math.cos(spec.omega_x * t) + math.sin(spec.omega_x * t) * log_ratio)
        / (4.0 * math.sqrt(spec.omega_y) * spec.b0 * s)
    )
    return x, y


def _family_indices(spec: SystemSpec, k_max: int):
    even = spec.c1 * spec.c2 < 0.0
    ks = [k for k in range(-k_max, k_max + 1) if (k % 2 == 0) == even]
    return ks


def _local_scale(spec: SystemSpec, x: float, y: float, t: float) -> float:
    """max |Psi| sampled on a unit box around (x, y)."""
    g = np.linspace(-0.5, 0.5, 9)
    gx, gy = np.meshgrid(x + g, y + g, indexing="ij")
    return float(np.abs(psi(spec, gx, gy, t).value).max())


def _residuals(spec: SystemSpec, xs, ys, t: float) -> np.ndarray:
    return np.abs(psi(spec, np.asarray(xs), np.asarray(ys), t).value)


def nodes_analytic(spec: SystemSpec, t: float, k_max: int,
                   validate: bool = True) -> list[NodalPoint]:
    """All closed-form nodes with |k| <= k_max at time t.

    Raises NodesAtInfinityError at the degenerate times where
    sin((omega_x - omega_y) t) vanishes (e.g. t = 0).  Validation checks the
    residual against psi where the evaluation is signal-dominated; far-tail
    nodes (large |k|) sit where the evaluated Psi is pure band-cutoff noise,
    so their residual carries no information and is not checked.
    """
    ks = _family_indices(spec, k_max)
    coords = [analytic_node_position(spec, t, k) for k in ks]
    xs = np.array([c[0] for c in coords])
    ys = np.array([c[1] for c in coords])
    res = _residuals(spec, xs, ys, t)
    nodes = [
        NodalPoint(t=t, x=float(x), y=float(y), k=k, residual=float(r))
        for k, x, y, r in zip(ks, xs, ys, res)
    ]
    if validate:
        (bx1, by1), (bx2, by2), _ = blob_centers(spec, t)
        global_scale = max(
            _local_scale(spec, bx1, by1, t), _local_scale(spec, bx2, by2, t)
        )
        for p in nodes:
            scale = _local_scale(spec, p.x, p.y, t)
            bound = RESIDUAL_FACTOR * scale + CUTOFF_NOISE * global_scale
            if p.residual >= bound:
                raise RuntimeError(
                    f"analytic node k={p.k} failed the residual bound at t={t}"
                )
    return nodes


def min_node_distance(spec: SystemSpec, t: float) -> float:
    """Distance of the |k|=1 nodes from the origin (c1 = c2 case)."""
    _require_analytic_regime(spec)
    if abs(spec.c1 - spec.c2) > 1e-12:
        raise ValueError("minimal-distance formula assumes c1 == c2")
    s = math.sin((spec.omega_x - spec.omega_y) * t)
    if abs(s) < DEGENERACY_EPS:
        raise NodesAtInfinityError(f"nodal points at infinity at t={t}")
    return abs(
        math.sqrt(2.0)
        * math.pi
        / (4.0 * spec.a0 * math.sqrt(spec.omega_x * spec.omega_y) * s)
    ) * math.sqrt(
        spec.omega_x * math.cos(spec.omega_x * t) ** 2
        + spec.omega_y * math.cos(spec.omega_y * t) ** 2
    )


def _newton_root(spec: SystemSpec, x0: float, y0: float, t: float,
                 max_iter: int = 50, noise: float = 0.0):
    """Damped Newton iteration on (Re Psi, Im Psi) with the analytic Jacobian.

    Convergence is judged against the local gradient magnitude, so nodes far
    out in the Gaussian tails (where |Psi| is tiny everywhere) are resolved
    to the same positional accuracy as nodes inside the support.  ``noise``
    is the absolute evaluation-noise level of psi; the residual cannot be
    driven below it.
    """
    x, y = x0, y0
    f = psi(spec, x, y, t)
    for _ in range(max_iter):
        gnorm = math.hypot(abs(f.grad_x), abs(f.grad_y))
        if gnorm == 0.0:
            return None
        if abs(f.value.real) + abs(f.value.imag) < 1e-12 * gnorm + noise:
            return x, y
        jac = np.array(
            [[f.grad_x.real, f.grad_y.real], [f.grad_x.imag, f.grad_y.imag]]
        )
        rhs = np.array([f.value.real, f.value.imag])
        try:
            step = np.linalg.solve(jac, rhs)
        except np.linalg.LinAlgError:
            return None
        if not np.all(np.isfinite(step)):
            return None
        # step-halving line search on |Psi|^2
        best = abs(f.value) ** 2
        lam = 1.0
        for _ in range(20):
            xt, yt = x - lam * step[0], y - lam * step[1]
            ft = psi(spec, xt, yt, t)
            if abs(ft.value) ** 2 < best:
                x, y, f = xt, yt, ft
                break
            lam *= 0.5
        else:
            return None
    gnorm = math.hypot(abs(f.grad_x), abs(f.grad_y))
    if gnorm > 0.0 and abs(f.value.real) + abs(f.value.imag) < 1e-12 * gnorm + noise:
        return x, y
    return None


def nodes_numeric(spec: SystemSpec, t: float, box=DEFAULT_BOX,
                  seed_grid: int = 120, validate: bool = True,
                  noise_floor: float = 1e-7,
                  diagnostics: dict | None = None) -> list[NodalPoint]:
    """Locate the zeros of Psi inside ``box`` at time t.

    Scans |Psi|^2 on a seed_grid x seed_grid lattice, then polishes every
    sufficiently deep local minimum by damped Newton iteration.  Converged
    roots are deduplicated; non-converged seeds are only counted.

    For specs with an automatically resolved band cutoff, roots in regions
    where the local wavefunction amplitude is below ``noise_floor`` times the
    global amplitude are discarded: out there the evaluated Psi is dominated
    by cutoff noise and its zeros carry no information.  Explicitly truncated
    states are exact finite sums, so their far-tail zeros are genuine and
    only a floating-point underflow guard applies.
    """
    if seed_grid < 64:
        raise ValueError("seed_grid must be >= 64")
    x0, x1, y0, y1 = box
    xs = np.linspace(x0, x1, seed_grid)
    ys = np.linspace(y0, y1, seed_grid)
    gx, gy = np.meshgrid(xs, ys, indexing="ij")
    dens = np.abs(psi(spec, gx, gy, t).value) ** 2
    grid_max = float(dens.max())
    if grid_max == 0.0:
        return []
    # A zero sitting on a steep Gaussian slope is not a local minimum of
    # |Psi|^2 itself (the downhill neighbor is lower), so seed on the
    # envelope-normalized log density instead, which flattens the Gaussian
    # decay and turns every zero into a genuine dip.  Underflowed cells are
    # masked out: their sign structure is meaningless.
    with np.errstate(divide="ignore"):
        score = np.log(dens) + spec.omega_x * gx**2 + spec.omega_y * gy**2
    score[dens == 0.0] = np.inf
    is_min = (
        np.isfinite(score)
        & (ndimage.minimum_filter(score, size=3, mode="nearest") == score)
        & (ndimage.maximum_filter(score, size=3, mode="nearest") > score)
    )
    seeds = np.argwhere(is_min)

    global_scale = math.sqrt(grid_max)
    noise = CUTOFF_NOISE * global_scale if spec.n_f is None else 0.0
    roots: list[tuple[float, float, float]] = []
    failed = 0
    for i, j in seeds:
        sol = _newton_root(spec, float(xs[i]), float(ys[j]), t, noise=noise)
        if sol is None:
            failed += 1
            continue
        x, y = sol
        if not (x0 <= x <= x1 and y0 <= y <= y1):
            continue
        # positional uncertainty of this root: the evaluation noise projected
        # through the local gradient; duplicates of the same faint node land
        # anywhere inside that disk, so deduplicate at its scale.  A huge
        # uncertainty means the whole neighborhood is below the noise level
        # and the "root" carries no positional information at all.
        f = psi(spec, x, y, t)
        gnorm = math.hypot(abs(f.grad_x), abs(f.grad_y))
        unc = noise / gnorm if gnorm > 0.0 else math.inf
        if noise > 0.0 and unc > 0.01:
            continue
        if any(
            (x - rx) ** 2 + (y - ry) ** 2 < max(1e-6, 3.0 * max(unc, ru)) ** 2
            for rx, ry, ru in roots
        ):
            continue
        roots.append((x, y, unc))
    if diagnostics is not None:
        diagnostics.update(seeds=len(seeds), non_converged=failed)

    if not roots:
        return []
    res = _residuals(spec, [r[0] for r in roots], [r[1] for r in roots], t)
    floor = noise_floor * global_scale if spec.n_f is None else 1e-140
    nodes = []
    for (rx, ry, ru), r in zip(roots, res):
        local = _local_scale(spec, rx, ry, t)
        if local <= floor:
            continue
        if validate and r >= RESIDUAL_FACTOR * local + noise:
            continue
        nodes.append(NodalPoint(t=t, x=rx, y=ry, k=None, residual=float(r),
                                uncertainty=ru))
    return nodes


def velocity_contour_nodes(spec: SystemSpec, t_range, dt: float,
                           speed_level: float = 500.0, box=DEFAULT_BOX,
                           grid: int = 360,
                           density_floor: float = 1e-12) -> np.ndarray:
    """Point cloud of cell centers where the Bohmian speed exceeds a level.

    Marks, for every sample time in ``t_range`` with stride ``dt``, the grid
    cells with |v| >= speed_level; the marked cells form very small closed
    curves around the nodal points, so this doubles as a derivative-free
    node locator for any wavefunction.  Cells with density below
    ``density_floor`` times the instantaneous grid maximum are excluded:
    out there the evaluated amplitude is dominated by band-cutoff noise and
    the apparent speed carries no information.  Returns an (m, 3) array
    with columns (t, x, y).
    """
    if speed_level <= 0:
        raise ValueError("speed_level must be positive")
    x0, x1, y0, y1 = box
    xs = np.linspace(x0, x1, grid)
    ys = np.linspace(y0, y1, grid)
    gx, gy = np.meshgrid(xs, ys, indexing="ij")
    t_start, t_end = t_range
    out = []
    for t in np.arange(t_start, t_end + 0.5 * dt, dt):
        f = psi(spec, gx, gy, float(t))
        dens = np.abs(f.value) ** 2
        with np.errstate(divide="ignore", invalid="ignore"):
            vx = (f.grad_x * f.value.conjugate()).imag / dens
            vy = (f.grad_y * f.value.conjugate()).imag / dens
            speed = np.hypot(vx, vy)
        speed = np.where(dens >= density_floor * dens.max(), speed, 0.0)
        ii, jj = np.nonzero(speed >= speed_level)
        for i, j in zip(ii, jj):
            out.append((float(t), float(xs[i]), float(ys[j])))
    return np.array(out).reshape(-1, 3)


def _analytic_traces(spec: SystemSpec, ts, box) -> list[NodalTrace]:
    x0, x1, y0, y1 = box
    # nodes are linear in k at fixed t, so the in-box k range is cheap to find
    half_span = max(abs(x0), abs(x1), abs(y0), abs(y1))
    traces: dict[int, NodalTrace] = {}
    open_gap: dict[int, float] = {}
    for t in ts:
        t = float(t)
        try:
            s = math.sin((spec.omega_x - spec.omega_y) * t)
            if abs(s) < DEGENERACY_EPS:
                raise NodesAtInfinityError
            # |x| <= ~ sqrt(2)(|k|pi + |L|) / (4 sqrt(w) a0 |s|): invert for k
            denom = 4.0 * min(math.sqrt(spec.omega_x), math.sqrt(spec.omega_y))
            k_lim = int(
                (half_span * denom * spec.a0 * abs(s)) / (math.sqrt(2.0) * math.pi)
                + abs(math.log(abs(spec.c1 / spec.c2))) / math.pi
                + 2
            )
            nodes = nodes_analytic(spec, t, k_lim, validate=False)
        except NodesAtInfinityError:
            nodes = []
        seen = set()
        for p in nodes:
            if not (x0 <= p.x <= x1 and y0 <= p.y <= y1):
                continue
            seen.add(p.k)
            tr = traces.setdefault(p.k, NodalTrace(k=p.k))
            if p.k in open_gap:
                tr.gaps.append((open_gap.pop(p.k), t))
            tr.points.append(p)
        for k, tr in traces.items():
            if k not in seen and k not in open_gap:
                open_gap[k] = t
    t_last = float(ts[-1])
    for k, start in open_gap.items():
        traces[k].gaps.append((start, t_last))
    return [traces[k] for k in sorted(traces)]


def _numeric_traces(spec: SystemSpec, ts, box, seed_grid: int,
                    match_radius: float) -> list[NodalTrace]:
    traces: list[NodalTrace] = []
    last_pos: list[tuple[float, float] | None] = []
    open_gap: list[float | None] = []
    for t in ts:
        t = float(t)
        nodes = nodes_numeric(spec, t, box=box, seed_grid=seed_grid, validate=False)
        unmatched = list(range(len(nodes)))
        # greedy nearest-neighbor continuation
        pairs = []
        for ti, pos in enumerate(last_pos):
            for ni in unmatched:
                d = math.hypot(nodes[ni].x - pos[0], nodes[ni].y - pos[1])
                if d <= match_radius:
                    pairs.append((d, ti, ni))
        pairs.sort()
        used_t, used_n = set(), set()
        for d, ti, ni in pairs:
            if ti in used_t or ni in used_n:
                continue
            used_t.add(ti)
            used_n.add(ni)
            if open_gap[ti] is not None:
                traces[ti].gaps.append((open_gap[ti], t))
                open_gap[ti] = None
            traces[ti].points.append(nodes[ni])
            last_pos[ti] = (nodes[ni].x, nodes[ni].y)
        for ti in range(len(traces)):
            if ti not in used_t and open_gap[ti] is None:
                open_gap[ti] = t
        for ni in range(len(nodes)):
            if ni not in used_n:
                traces.append(NodalTrace(points=[nodes[ni]]))
                last_pos.append((nodes[ni].x, nodes[ni].y))
                open_gap.append(None)
    t_last = float(ts[-1])
    for ti, start in enumerate(open_gap):
        if start is not None:
            traces[ti].gaps.append((start, t_last))
    return traces


def trace_nodes(spec: SystemSpec, t_range, dt: float = 0.01, box=DEFAULT_BOX,
                seed_grid: int = 120, match_radius: float = 0.5) -> list[NodalTrace]:
    """Time-continued node families over ``t_range`` with stride ``dt``.

    Uses the closed-form family when it applies (full band, a0 == b0),
    otherwise numerical node finding with nearest-neighbor matching.
    Gaps record intervals where a node left the search box.
    """
    t_start, t_end = t_range
    ts = np.arange(t_start, t_end + 0.5 * dt, dt)
    try:
        _require_analytic_regime(spec)
    except ValueError:
        return _numeric_traces(spec, ts, box, seed_grid, match_radius)
    return _analytic_traces(spec, ts, box)


def trace_cloud(traces: list[NodalTrace]) -> np.ndarray:
    """Union point cloud of all traces as an (m, 3) array (t, x, y)."""
    rows = [(p.t, p.x, p.y) for tr in traces for p in tr.points]
    return np.array(rows).reshape(-1, 3)
