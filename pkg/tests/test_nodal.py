import math
from dataclasses import replace

import numpy as np
import pytest

from bohmqubits import nodal
from bohmqubits.errors import NodesAtInfinityError
from bohmqubits.wavefunction import SystemSpec, blob_centers, psi


def strong_scale(spec, t):
    """Amplitude scale of the signal-dominated region (blob neighborhoods)."""
    (x1, y1), (x2, y2), _ = blob_centers(spec, t)
    g = np.linspace(-0.5, 0.5, 9)
    out = 0.0
    for cx, cy in ((x1, y1), (x2, y2)):
        gx, gy = np.meshgrid(cx + g, cy + g, indexing="ij")
        out = max(out, float(np.abs(psi(spec, gx, gy, t).value).max()))
    return out


class TestAnalyticNodes:
    def test_positions_are_zeros_of_psi(self, bell_spec):
        t = 1.9
        nodes = nodal.nodes_analytic(bell_spec, t, 13)
        scale = strong_scale(bell_spec, t)
        assert len(nodes) == 14
        for p in nodes:
            assert abs(psi(bell_spec, p.x, p.y, t).value) < 1e-7 * scale

    def test_family_parity(self, bell_spec):
        # c1*c2 > 0 selects odd k; flipping the sign of c2 selects even k
        odd = nodal.nodes_analytic(bell_spec, 1.9, 13, validate=False)
        assert all(p.k % 2 == 1 for p in odd)
        flipped = replace(bell_spec, c2=-bell_spec.c2)
        even = nodal.nodes_analytic(flipped, 1.9, 13, validate=False)
        assert all(p.k % 2 == 0 for p in even)
        assert len(even) == 13  # k = 0 included

    def test_positions_scale_inversely_with_amplitude(self):
        t, k = 2.3, 3
        specs = [
            SystemSpec.with_entanglement(
                math.sqrt(0.5), a0=a0, b0=a0, omega_x=1.0,
                omega_y=math.sqrt(3.0),
            )
            for a0 in (1.0, 2.0)
        ]
        x1, y1 = nodal.analytic_node_position(specs[0], t, k)
        x2, y2 = nodal.analytic_node_position(specs[1], t, k)
        assert x1 == pytest.approx(2.0 * x2, rel=1e-12)
        assert y1 == pytest.approx(2.0 * y2, rel=1e-12)

    def test_degenerate_times_raise(self, bell_spec):
        with pytest.raises(NodesAtInfinityError):
            nodal.nodes_analytic(bell_spec, 0.0, 13)
        t_degenerate = math.pi / (math.sqrt(3.0) - 1.0)
        with pytest.raises(NodesAtInfinityError):
            nodal.nodes_analytic(bell_spec, t_degenerate, 13)

    def test_requires_common_amplitude_full_band(self, product_spec):
        with pytest.raises(ValueError):
            nodal.nodes_analytic(product_spec, 1.0, 13)  # c2 = 0
        lopsided = SystemSpec.with_entanglement(
            math.sqrt(0.5), a0=2.5, b0=1.5, omega_x=1.0, omega_y=math.sqrt(3.0)
        )
        with pytest.raises(ValueError):
            nodal.nodes_analytic(lopsided, 1.0, 13)

    def test_min_distance_curve(self, bell_spec):
        # closest origin approach of the |k|=1 pair over one beat period
        ts = np.linspace(0.05, 10.0, 2000)
        ds = []
        for t in ts:
            try:
                ds.append(nodal.min_node_distance(bell_spec, float(t)))
            except NodesAtInfinityError:
                ds.append(np.inf)
        d_min = min(ds)
        assert d_min == pytest.approx(0.2702, abs=2e-3)
        assert d_min == pytest.approx(0.3, abs=0.05)


class TestNumericNodes:
    def test_matches_analytic_on_strong_nodes(self, bell_spec):
        t = 1.9
        ana = nodal.nodes_analytic(bell_spec, t, 13)
        num = nodal.nodes_numeric(bell_spec, t)
        scale = strong_scale(bell_spec, t)
        checked = 0
        for p in ana:
            g = psi(bell_spec, p.x, p.y, t)
            if math.hypot(abs(g.grad_x), abs(g.grad_y)) <= 3e-3 * scale:
                continue
            d = min(math.hypot(q.x - p.x, q.y - p.y) for q in num)
            assert d < 1e-6
            checked += 1
        assert checked >= 4

    def test_no_duplicate_roots(self, bell_spec):
        num = nodal.nodes_numeric(bell_spec, 2.6)
        for i, p in enumerate(num):
            for q in num[i + 1:]:
                assert math.hypot(q.x - p.x, q.y - p.y) > 1e-6

    def test_truncated_census_at_one_time(self, small_spec):
        box = (-24.0, 24.0, -24.0, 24.0)
        nf2 = nodal.nodes_numeric(replace(small_spec, n_f=2), 0.8,
                                  box=box, seed_grid=600)
        assert len(nf2) == 4
        for p in nf2:
            f = psi(replace(small_spec, n_f=2), p.x, p.y, 0.8)
            assert abs(f.value) < 1e-10

    def test_empty_when_product_state(self, product_spec):
        assert nodal.nodes_numeric(product_spec, 1.9) == []


class TestContourAndTraces:
    def test_contour_cells_surround_true_nodes(self, bell_spec):
        t = 1.9
        cloud = nodal.velocity_contour_nodes(bell_spec, (t, t), dt=1.0,
                                             speed_level=100.0)
        assert len(cloud)
        ana = nodal.nodes_analytic(bell_spec, t, 41, validate=False)
        for row in cloud:
            d = min(math.hypot(row[1] - p.x, row[2] - p.y) for p in ana)
            assert d < 0.2

    def test_traces_are_time_continuous(self, bell_spec):
        traces = nodal.trace_nodes(bell_spec, (1.5, 2.5), dt=0.05)
        assert traces
        for tr in traces:
            pts = tr.points
            # far families sweep fast; continuity just means no teleporting
            for a, b in zip(pts, pts[1:]):
                assert b.t > a.t
                assert math.hypot(b.x - a.x, b.y - a.y) < 2.0

    def test_cloud_concatenates_traces(self, bell_spec):
        traces = nodal.trace_nodes(bell_spec, (1.5, 2.0), dt=0.1)
        cloud = nodal.trace_cloud(traces)
        assert cloud.shape == (sum(len(tr.points) for tr in traces), 3)
