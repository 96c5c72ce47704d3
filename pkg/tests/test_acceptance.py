"""End-to-end acceptance checks, one test per criterion.

Each test prints a single PASS/FAIL line with the measured numbers before
asserting, so a full run reads as a ten-line report.  The expensive
long-horizon variants (t >= 1e5) only run when BOHMQUBITS_LONG_RUN is set.
"""

import math
import os
from dataclasses import replace

import numpy as np
import pytest

from bohmqubits import analysis, dynamics, nodal
from bohmqubits import wavefunction as wf
from bohmqubits.dynamics import IntegratorSettings
from bohmqubits.errors import NodesAtInfinityError
from bohmqubits.wavefunction import SystemSpec, blob_centers, psi

BELL = math.sqrt(2.0) / 2.0
OMEGA_Y = math.sqrt(3.0)

LONG_RUN = bool(os.environ.get("BOHMQUBITS_LONG_RUN"))
needs_long_run = pytest.mark.skipif(
    not LONG_RUN, reason="set BOHMQUBITS_LONG_RUN=1 to run t >= 1e5 checks"
)


def bell(a0=2.5, **kwargs):
    return SystemSpec.with_entanglement(
        BELL, a0=a0, b0=a0, omega_x=1.0, omega_y=OMEGA_Y, **kwargs
    )


def report(num, ok, detail):
    print(f"criterion {num:02d}: {'PASS' if ok else 'FAIL'} - {detail}")
    return ok


def test_criterion_01_poisson_coverage():
    got = [wf.poisson_coverage(2.5, 0, n) for n in (2, 4, 12)]
    want = [0.051, 0.253, 0.987]
    ok = all(abs(g - w) <= 1e-3 for g, w in zip(got, want))
    assert report(1, ok,
                  f"coverage(2,4,12) = {got[0]:.4f}, {got[1]:.4f}, "
                  f"{got[2]:.4f} vs {want} within 0.001")


def test_criterion_02_geometry_constants():
    spec = bell()
    _, _, d_max = blob_centers(spec, 0.0)
    ratio = d_max / spec.a0
    ds = []
    for t in np.linspace(0.005, 10.0, 2000):
        try:
            ds.append(nodal.min_node_distance(spec, float(t)))
        except NodesAtInfinityError:
            pass
    d_min = min(ds)
    ok = abs(ratio - 1.78) <= 0.01 and abs(d_min - 0.3) <= 0.05
    assert report(2, ok,
                  f"d_max/a0 = {ratio:.5f} (want 1.78 +- 0.01), "
                  f"min node distance over (0,10] = {d_min:.4f} "
                  f"(want 0.3 +- 0.05)")


def test_criterion_03_overlap():
    full = wf.overlap_1d(2.5)
    err = abs(full - math.exp(-12.5))
    lo = abs(wf.overlap_1d(2.5, n_f=12))
    hi = abs(wf.overlap_1d(1.0, n_f=12))
    ratio = hi / lo
    ok = err < 1e-10 and ratio > 100.0
    # The small-amplitude growth trend holds, but the measured factor at
    # n_f=12 is ~28.6x, not >100x: at a0=2.5 the truncated overlap is
    # dominated by the cut tail (0.0047 vs the full-band 3.7e-6), so the
    # >100x figure is only reachable for the untruncated overlap
    # (exp(-2)/exp(-12.5) ~ 3.6e4).
    assert report(3, ok,
                  f"full-band overlap err = {err:.2e} (want < 1e-10); "
                  f"n_f=12 magnitude ratio a0 2.5->1.0 = {ratio:.1f} "
                  f"(want > 100; trend increases but truncation dominates "
                  f"the a0=2.5 value)")


def test_criterion_04_node_oracles():
    spec = bell()
    rng = np.random.default_rng(20260823)
    worst = 0.0
    matched = 0
    times = []
    while len(times) < 20:
        t = float(rng.uniform(0.5, 9.5))
        if abs(math.sin((spec.omega_x - spec.omega_y) * t)) > 0.05:
            times.append(t)
    for t in times:
        ana = nodal.nodes_analytic(spec, t, 13)
        num = nodal.nodes_numeric(spec, t)
        (x1, y1), (x2, y2), _ = blob_centers(spec, t)
        g = np.linspace(-0.5, 0.5, 9)
        scale = 0.0
        for cx, cy in ((x1, y1), (x2, y2)):
            gx, gy = np.meshgrid(cx + g, cy + g, indexing="ij")
            scale = max(scale, float(np.abs(psi(spec, gx, gy, t).value).max()))
        for p in ana:
            f = psi(spec, p.x, p.y, t)
            if math.hypot(abs(f.grad_x), abs(f.grad_y)) <= 3e-3 * scale:
                continue  # below the band-cutoff noise localization limit
            if not num:
                continue
            worst = max(worst, min(math.hypot(q.x - p.x, q.y - p.y)
                                   for q in num))
            matched += 1

    census_spec = SystemSpec.with_entanglement(
        BELL, a0=0.5, b0=0.5, omega_x=1.0, omega_y=OMEGA_Y
    )
    census_times = [0.8, 1.4, 2.6, 4.5, 4.6, 4.8, 7.6, 8.1, 8.2, 9.8]
    box = (-24.0, 24.0, -24.0, 24.0)
    counts = {2: [], 4: []}
    for n_f in (2, 4):
        trunc = replace(census_spec, n_f=n_f)
        for t in census_times:
            counts[n_f].append(
                len(nodal.nodes_numeric(trunc, t, box=box, seed_grid=600))
            )
    census_ok = counts[2] == [4] * 10 and counts[4] == [8] * 10
    ok = worst < 1e-6 and matched >= 20 and census_ok
    assert report(4, ok,
                  f"numeric-vs-analytic worst = {worst:.2e} over {matched} "
                  f"nodes at 20 times (want < 1e-6); census n_f=2 "
                  f"{sorted(set(counts[2]))}, n_f=4 {sorted(set(counts[4]))} "
                  f"(want 4 and 8 at all 10 times)")


def test_criterion_05_product_state_dynamics():
    spec = SystemSpec.with_entanglement(
        0.0, a0=2.5, b0=2.5, omega_x=1.0, omega_y=OMEGA_Y
    )
    settings = IntegratorSettings(t_end=100.0)
    (bx0, by0), _, _ = blob_centers(spec, 0.0)
    rng = np.random.default_rng(5)
    # Born-rule-typical starts: within two standard deviations of the
    # packet center, where the state actually carries probability
    sx = 1.0 / math.sqrt(2.0 * spec.omega_x)
    sy = 1.0 / math.sqrt(2.0 * spec.omega_y)
    starts = [(bx0 + rng.uniform(-2 * sx, 2 * sx),
               by0 + rng.uniform(-2 * sy, 2 * sy)) for _ in range(20)]
    records = dynamics.integrate_ensemble(spec, starts, settings)
    worst = 0.0
    for (x0, y0), rec in zip(starts, records):
        assert rec.status == dynamics.COMPLETED
        ts = rec.samples[:, 0]
        bx = np.sqrt(2.0 / spec.omega_x) * spec.a0 * np.cos(spec.omega_x * ts)
        by = -np.sqrt(2.0 / spec.omega_y) * spec.b0 * np.cos(spec.omega_y * ts)
        rx = x0 + bx - bx0
        ry = y0 + by - by0
        worst = max(worst, float(np.hypot(rec.samples[:, 1] - rx,
                                          rec.samples[:, 2] - ry).max()))
    ok = worst < 1e-6
    assert report(5, ok,
                  f"20 trajectories to t=100: worst Lissajous deviation = "
                  f"{worst:.2e} (want < 1e-6)")


def test_criterion_06_gradient_and_scale_invariance():
    spec = bell()
    rng = np.random.default_rng(11)
    pts = rng.uniform(-4.5, 4.5, size=(1000, 2))
    t = 1.234
    h = 1e-6
    f = wf.psi(spec, pts[:, 0], pts[:, 1], t)
    fxp = wf.psi(spec, pts[:, 0] + h, pts[:, 1], t).value
    fxm = wf.psi(spec, pts[:, 0] - h, pts[:, 1], t).value
    fyp = wf.psi(spec, pts[:, 0], pts[:, 1] + h, t).value
    fym = wf.psi(spec, pts[:, 0], pts[:, 1] - h, t).value
    scale = np.abs(f.value).max()
    grad_err = max(
        float(np.abs(f.grad_x - (fxp - fxm) / (2 * h)).max()),
        float(np.abs(f.grad_y - (fyp - fym) / (2 * h)).max()),
    ) / scale

    scaled = wf.psi(replace(spec, renormalize=True), pts[:, 0], pts[:, 1], t)
    v_raw = (f.grad_x / f.value).imag
    v_scaled = (scaled.grad_x / scaled.value).imag
    denom = np.maximum(np.abs(v_raw), 1.0)
    scale_err = float((np.abs(v_raw - v_scaled) / denom).max())
    ok = grad_err < 1e-6 and scale_err < 1e-12
    assert report(6, ok,
                  f"gradient rel err = {grad_err:.2e} (want < 1e-6), "
                  f"velocity scale-invariance err = {scale_err:.2e} "
                  f"(want < 1e-12) on 1000 points")


def _two_trajectory_distance(t_end):
    spec = bell()
    settings = IntegratorSettings(t_end=t_end)
    grids = []
    for x0, y0 in ((3.0, 0.0), (0.1, 0.2)):
        grid, rec = analysis.grid_from_trajectory(spec, x0, y0, settings)
        assert rec.status == dynamics.COMPLETED
        grids.append(grid)
    return analysis.frobenius_distance(grids[0], grids[1])


def test_criterion_07_desk_scale_ergodicity():
    d = _two_trajectory_distance(1e4)
    floor = math.sqrt(2.0 / (1e4 * 0.05))
    ok = d < 0.05
    # Even for perfectly ergodic sampling of the same invariant measure the
    # expected distance between two independent time-normalized count grids
    # is sqrt(2/(T*dt)) (Poisson shot noise), which at T=1e4, dt=0.05 is
    # already 0.063 > 0.05; the measured value tracks that floor (inflated
    # ~1.35x by sample autocorrelation) and shrinks as 1/sqrt(T).
    assert report(7, ok,
                  f"D(t=1e4) = {d:.4f} (want < 0.05; statistical floor of "
                  f"this estimator is {floor:.4f}, so the threshold is "
                  f"unreachable at this horizon)")


@needs_long_run
def test_criterion_07_long_run_ergodicity():
    d = _two_trajectory_distance(1e5)
    floor = math.sqrt(2.0 / (1e5 * 0.05))
    ok = d < 0.015
    assert report(7, ok,
                  f"D(t=1e5) = {d:.4f} (want < 0.015; statistical floor "
                  f"{floor:.4f}, so the threshold is unreachable)")


def test_criterion_08_truncation_convergence():
    settings = IntegratorSettings(t_end=1e4)
    c2_list = [0.2, 0.5, BELL]
    matrix, diag = analysis.truncation_sweep(
        bell(), [2, 10, 12], c2_list, x0=0.1, y0=0.4, settings=settings,
    )
    self_noise = _two_trajectory_distance(1e4)
    ordered_ok = bool(np.all(matrix[2, :] < matrix[0, :]))
    floor_ok = bool(np.all(matrix[1:, :] < 2.0 * self_noise))
    ok = ordered_ok and floor_ok and not diag
    with np.printoptions(precision=4):
        assert report(8, ok,
                      f"D rows (n_f=2,10,12) x c2 {c2_list}: "
                      f"{matrix.tolist()}; D(n_f=12) < D(n_f=2) for all c2: "
                      f"{ordered_ok}; D(n_f>=10) < 2x self-noise "
                      f"({2 * self_noise:.4f}): {floor_ok}")


def test_criterion_09_small_amplitude_order_and_ring():
    spec = SystemSpec.with_entanglement(
        BELL, a0=0.5, b0=0.5, omega_x=1.0, omega_y=OMEGA_Y
    )
    settings = IntegratorSettings(t_end=1e4)
    lcns = []
    for x0, y0 in ((0.2, 0.1), (0.5, 0.3), (-0.4, 0.6)):
        est = dynamics.lyapunov(spec, x0, y0, settings)
        lcns.append(est.final_lcn)
    ordered_ok = all(dynamics.ordered_envelope(v, 1e4) for v in lcns)
    chaotic = dynamics.lyapunov(spec, 3.0, 0.0, settings).final_lcn
    chaotic_ok = not dynamics.ordered_envelope(chaotic, 1e4)

    ring_settings = IntegratorSettings(t_end=2e4)
    grid, rec = analysis.grid_from_trajectory(spec, 3.0, 0.0, ring_settings)
    c = grid.resolution // 2
    central = grid.counts[c - 10:c + 10, c - 10:c + 10]
    ring_ok = (rec.status == dynamics.COMPLETED and central.sum() == 0.0
               and grid.counts.sum() > 0)
    ok = ordered_ok and chaotic_ok and ring_ok
    assert report(9, ok,
                  f"central LCNs = {[f'{v:.1e}' for v in lcns]} (all ordered: "
                  f"{ordered_ok}); LCN(3,0) = {chaotic:.2e} (chaotic: "
                  f"{chaotic_ok}); t=2e4 ring with empty central 20x20 "
                  f"cells: {ring_ok}")


@needs_long_run
def test_criterion_09_long_run_ring():
    spec = SystemSpec.with_entanglement(
        BELL, a0=0.5, b0=0.5, omega_x=1.0, omega_y=OMEGA_Y
    )
    grid, rec = analysis.grid_from_trajectory(
        spec, 3.0, 0.0, IntegratorSettings(t_end=4e5)
    )
    c = grid.resolution // 2
    central = grid.counts[c - 10:c + 10, c - 10:c + 10]
    ok = (rec.status == dynamics.COMPLETED and central.sum() == 0.0
          and grid.counts.sum() > 0)
    assert report(9, ok,
                  f"t=4e5 ring: central 20x20 empty = {central.sum() == 0.0}")


def test_criterion_10_collision_snapshot():
    spec = bell()

    def max_distance(t):
        snap = analysis.density_snapshot(spec, t)
        i, j = np.unravel_index(np.argmax(snap.values), snap.values.shape)
        dx = 18.0 / snap.resolution
        return math.hypot(-9.0 + dx * (i + 0.5), -9.0 + dx * (j + 0.5))

    d_collision = max_distance(4.58)
    d_start = max_distance(0.0)
    (x1, y1), (x2, y2), _ = blob_centers(spec, 0.0)
    separation = math.hypot(x1 - x2, y1 - y2)
    ok = d_collision < 1.0 and d_start > 8.0
    # At t=0 the density maxima are the two blob centers, each ~4.43 from
    # the origin; it is their mutual separation that exceeds 8 (8.88).
    assert report(10, ok,
                  f"max distance from origin: t=4.58 -> {d_collision:.3f} "
                  f"(want < 1), t=0 -> {d_start:.3f} (want > 8; the blob "
                  f"separation is {separation:.3f} > 8, but each maximum "
                  f"sits at half that)")
