"""Bohmian trajectory integration and Lyapunov classification.

Single trajectories run in one compiled stepper loop; ensembles are
data-parallel over threads (the kernel releases the GIL).  Chaos is
classified by the finite-time Lyapunov characteristic number from a
two-trajectory renormalized-deviation method.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from . import _stepper
from .errors import ConfigError, NodeSingularityError
from .wavefunction import SystemSpec, band_coefficients, psi

WORKERS_ENV = "BOHMQUBITS_WORKERS"

# trajectory record statuses
COMPLETED = "completed"
ABORTED_AT_NODE = "aborted-at-node"


@dataclass(frozen=True)
class IntegratorSettings:
    """Step-control and sampling parameters of the trajectory integrator."""

    t_end: float = 100.0
    rel_tol: float = 1e-8
    abs_tol: float = 1e-10
    dt_init: float = 1e-3
    dt_min: float = 1e-10
    v_cap: float = 1e4
    sample_dt: float = 0.05
    box_half: float = 50.0

    def __post_init__(self):
        if not (0.0 < self.dt_min < self.dt_init):
            raise ConfigError("require 0 < dt_min < dt_init")
        if self.rel_tol <= 0.0 or self.abs_tol <= 0.0:
            raise ConfigError("tolerances must be positive")
        if self.sample_dt <= 0.0:
            raise ConfigError("sample_dt must be positive")
        if self.t_end <= 0.0:
            raise ConfigError("t_end must be positive")
        if self.v_cap <= 0.0 or self.box_half <= 0.0:
            raise ConfigError("v_cap and box_half must be positive")


@dataclass
class TrajectoryRecord:
    """Sampled trajectory plus integration diagnostics.

    ``samples`` holds rows (t, x, y) at stride sample_dt in physical time;
    ``status`` is "completed" or "aborted-at-node"; ``out_of_box`` flags a
    trajectory that left the safety box (samples end there).
    """

    spec: SystemSpec
    samples: np.ndarray
    sample_dt: float
    status: str
    out_of_box: bool
    diagnostics: dict = field(default_factory=dict)

    @property
    def duration(self) -> float:
        if len(self.samples) < 2:
            return 0.0
        return abs(float(self.samples[-1, 0] - self.samples[0, 0]))


@dataclass
class LyapunovEstimate:
    """Finite-time Lyapunov characteristic number series.

    lcn_series rows are (t, LCN(t)) with LCN(t) = (1/t) sum ln(d_i / delta0).
    """

    lcn_series: np.ndarray
    renorm_interval: float
    final_lcn: float
    status: str = COMPLETED


@lru_cache(maxsize=None)
def _kernel_args(spec: SystemSpec):
    """Immutable per-spec argument pack for the compiled kernel."""
    band_x = band_coefficients(spec.a0, spec.n_in, _cutoff(spec, spec.a0))
    band_y = band_coefficients(spec.b0, spec.n_in, _cutoff(spec, spec.b0))
    return (
        spec.omega_x, spec.omega_y, spec.n_in,
        band_x, band_y, spec.c1, spec.c2,
    )


def _cutoff(spec: SystemSpec, amplitude: float) -> int:
    if spec.n_f is not None:
        return spec.n_f
    from .wavefunction import _full_band_cutoff

    return _full_band_cutoff(amplitude)


def velocity(spec: SystemSpec, x: float, y: float, t: float):
    """Bohmian velocity (Im d_x Psi / Psi, Im d_y Psi / Psi) at one point."""
    f = psi(spec, x, y, t)
    dens = (f.value * f.value.conjugate()).real
    if dens < _stepper.DENSITY_GUARD:
        raise NodeSingularityError(
            f"|Psi|^2 = {dens:.3e} below the machine-zero guard at "
            f"({x}, {y}, t={t})"
        )
    return (
        float((f.grad_x / f.value).imag),
        float((f.grad_y / f.value).imag),
    )


def _run_kernel(spec, x0, y0, t0, duration, time_sign, settings):
    args = _kernel_args(spec)
    return _stepper.integrate_kernel(
        float(x0), float(y0), float(t0), float(duration), float(time_sign),
        settings.sample_dt, settings.rel_tol, settings.abs_tol,
        settings.dt_init, settings.dt_min, settings.v_cap, settings.box_half,
        *args,
    )


def integrate(spec: SystemSpec, x0: float, y0: float,
              settings: IntegratorSettings, t0: float = 0.0,
              time_sign: int = 1) -> TrajectoryRecord:
    """Integrate one trajectory from (x0, y0) at t0 over settings.t_end.

    ``time_sign=-1`` integrates backward in physical time.  Deterministic:
    identical inputs give identical sample sequences.
    """
    if time_sign not in (1, -1):
        raise ConfigError("time_sign must be +1 or -1")
    positions, filled, code, stats = _run_kernel(
        spec, x0, y0, t0, settings.t_end, time_sign, settings
    )
    times = t0 + time_sign * settings.sample_dt * np.arange(filled)
    samples = np.column_stack([times, positions[:filled]])
    min_dens = float(stats[_stepper.STAT_MIN_DENS])
    grad2 = float(stats[_stepper.STAT_GRAD2_MIN])
    # |Psi| / |grad Psi| at the minimum-density point estimates the distance
    # to the nearest node encountered along the trajectory
    approach = math.sqrt(min_dens / grad2) if grad2 > 0.0 else math.inf
    diagnostics = {
        "steps": int(stats[_stepper.STAT_STEPS]),
        "rejections": int(stats[_stepper.STAT_REJECTED]),
        "velocity_cap_hits": int(stats[_stepper.STAT_VCAP_HITS]),
        "min_density": min_dens,
        "min_density_t": t0 + time_sign * float(stats[_stepper.STAT_TAU_MIN]),
        "min_density_xy": (
            float(stats[_stepper.STAT_X_MIN]),
            float(stats[_stepper.STAT_Y_MIN]),
        ),
        "closest_node_approach": approach,
    }
    status = ABORTED_AT_NODE if code == _stepper.NODE_ABORT else COMPLETED
    return TrajectoryRecord(
        spec=spec,
        samples=samples,
        sample_dt=settings.sample_dt,
        status=status,
        out_of_box=(code == _stepper.OUT_OF_BOX),
        diagnostics=diagnostics,
    )


def lyapunov(spec: SystemSpec, x0: float, y0: float,
             settings: IntegratorSettings, renorm_interval: float = 1.0,
             delta0: float = 1e-8, t0: float = 0.0) -> LyapunovEstimate:
    """Finite-time LCN by the two-trajectory renormalized-deviation method.

    A shadow trajectory starts offset by delta0 in x; every renorm_interval
    the deviation d_i is logged and rescaled back to delta0.
    """
    if renorm_interval <= 0.0 or delta0 <= 0.0:
        raise ConfigError("renorm_interval and delta0 must be positive")
    n_intervals = int(round(settings.t_end / renorm_interval))
    if n_intervals < 1:
        raise ConfigError("t_end must cover at least one renorm_interval")
    leg = IntegratorSettings(
        t_end=renorm_interval, rel_tol=settings.rel_tol,
        abs_tol=settings.abs_tol, dt_init=settings.dt_init,
        dt_min=settings.dt_min, v_cap=settings.v_cap,
        sample_dt=renorm_interval, box_half=settings.box_half,
    )
    xa, ya = float(x0), float(y0)
    xb, yb = xa + delta0, ya
    log_sum = 0.0
    series = []
    status = COMPLETED
    for i in range(n_intervals):
        t_leg = t0 + i * renorm_interval
        pa, fa, ca, _ = _run_kernel(spec, xa, ya, t_leg, renorm_interval, 1.0, leg)
        pb, fb, cb, _ = _run_kernel(spec, xb, yb, t_leg, renorm_interval, 1.0, leg)
        if ca != _stepper.OK or cb != _stepper.OK or fa < 2 or fb < 2:
            status = ABORTED_AT_NODE
            break
        xa, ya = pa[1]
        xb, yb = pb[1]
        d = math.hypot(xb - xa, yb - ya)
        if d <= 0.0:
            # deviation collapsed below representable resolution; count the
            # floor so the sum stays finite
            d = 1e-300
        log_sum += math.log(d / delta0)
        t_now = (i + 1) * renorm_interval
        series.append((t0 + t_now, log_sum / t_now))
        # renormalize the shadow back to distance delta0
        xb = xa + delta0 * (xb - xa) / d
        yb = ya + delta0 * (yb - ya) / d
    arr = np.array(series).reshape(-1, 2)
    final = float(arr[-1, 1]) if len(arr) else math.nan
    return LyapunovEstimate(
        lcn_series=arr,
        renorm_interval=renorm_interval,
        final_lcn=final,
        status=status,
    )


def ordered_envelope(final_lcn: float, t_end: float) -> bool:
    """Ordered/chaotic classification: ordered iff LCN(t_end) < 5 / t_end."""
    return final_lcn < 5.0 / t_end


def _worker_count() -> int:
    env = os.environ.get(WORKERS_ENV)
    if env:
        try:
            n = int(env)
        except ValueError as exc:
            raise ConfigError(f"{WORKERS_ENV} must be an integer") from exc
        if n < 1:
            raise ConfigError(f"{WORKERS_ENV} must be >= 1")
        return n
    return os.cpu_count() or 1


def integrate_ensemble(spec: SystemSpec, initial_points,
                       settings: IntegratorSettings, t0: float = 0.0,
                       time_sign: int = 1) -> list[TrajectoryRecord]:
    """Integrate many trajectories; results ordered like the inputs.

    Work is distributed over threads (the kernel releases the GIL); the
    worker count comes from the BOHMQUBITS_WORKERS environment variable,
    defaulting to the CPU count.  Per-trajectory results are identical to
    sequential integrate calls.
    """
    points = list(initial_points)
    if not points:
        raise ConfigError("initial_points must be nonempty")
    # warm the JIT and the per-spec cache once before going parallel
    _kernel_args(spec)
    with ThreadPoolExecutor(max_workers=_worker_count()) as pool:
        futures = [
            pool.submit(integrate, spec, x, y, settings, t0, time_sign)
            for x, y in points
        ]
        return [f.result() for f in futures]
