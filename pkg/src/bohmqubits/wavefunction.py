"""Entangled two-mode coherent states of the harmonic oscillator.

Evaluates the (optionally truncated, optionally renormalized) two-mode
wavefunction

    Psi(x, y, t) = c1 * Y_R(x, t) * Y_L(y, t) + c2 * Y_L(x, t) * Y_R(y, t)

built from right/left-displaced coherent states of two non-interacting
oscillators (hbar = m = 1 throughout), together with its spatial gradient,
norms, overlaps and level statistics.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from functools import lru_cache

import numpy as np
from scipy.special import gammaln, roots_hermite

from .errors import QuadratureConvergenceError, TermOverflowError

SQRT3 = math.sqrt(3.0)

# Omitted Poisson tail mass allowed when resolving the "unbounded" cutoff.
# Amplitude-level truncation error scales like sqrt(tail), so keeping the
# tail this far down keeps |Psi| residuals at analytic nodes below 1e-9.
TAIL_MASS = 1e-20


@dataclass(frozen=True)
class SystemSpec:
    """Physical parameters of the two-mode entangled coherent state.

    ``n_f=None`` means the numerically converged full state: the cutoff is
    raised until the omitted Poisson tail mass is below ``TAIL_MASS`` for
    the larger of the two mean occupations a0^2, b0^2.
    """

    a0: float
    b0: float
    omega_x: float
    omega_y: float
    c1: float
    c2: float
    n_in: int = 0
    n_f: int | None = None
    renormalize: bool = False

    def __post_init__(self):
        if self.a0 <= 0 or self.b0 <= 0:
            raise ValueError("amplitudes a0, b0 must be positive")
        if self.omega_x <= 0 or self.omega_y <= 0:
            raise ValueError("frequencies must be positive")
        if abs(self.c1 * self.c1 + self.c2 * self.c2 - 1.0) > 1e-12:
            raise ValueError("entanglement coefficients must satisfy c1^2+c2^2=1")
        if self.n_in < 0:
            raise ValueError("n_in must be >= 0")
        if self.n_f is not None and self.n_f < self.n_in:
            raise ValueError("n_f must be >= n_in")

    @classmethod
    def with_entanglement(cls, c2: float, **kwargs) -> "SystemSpec":
        """Build a spec from the entanglement parameter alone (c1 >= 0)."""
        if not -1.0 <= c2 <= 1.0:
            raise ValueError("c2 must lie in [-1, 1]")
        return cls(c1=math.sqrt(max(0.0, 1.0 - c2 * c2)), c2=c2, **kwargs)

    @property
    def n_f_effective(self) -> int:
        """Concrete highest included level (resolves the unbounded sentinel)."""
        if self.n_f is not None:
            return self.n_f
        return _full_band_cutoff(max(self.a0, self.b0))

    @property
    def is_full_band(self) -> bool:
        return self.n_in == 0 and self.n_f is None

    def without_renormalization(self) -> "SystemSpec":
        return replace(self, renormalize=False)


@dataclass
class ComplexField2D:
    """Complex amplitude and spatial gradient at one or more points."""

    value: np.ndarray | complex
    grad_x: np.ndarray | complex
    grad_y: np.ndarray | complex

    def __mul__(self, s):
        return ComplexField2D(self.value * s, self.grad_x * s, self.grad_y * s)

    __rmul__ = __mul__


@lru_cache(maxsize=None)
def _full_band_cutoff(amplitude: float) -> int:
    mean = amplitude * amplitude
    hi = int(mean + 40.0 * math.sqrt(mean) + 120)
    pmf = _poisson_pmf(mean, np.arange(hi + 1))
    # suffix sum keeps the tail accurate far below float epsilon of the cdf
    tail = np.cumsum(pmf[::-1])[::-1]
    ok = np.nonzero(tail < TAIL_MASS)[0]
    if len(ok) == 0:
        raise RuntimeError("failed to resolve full-band cutoff")
    return max(8, int(ok[0]) - 1)


def _poisson_pmf(mean: float, n) -> np.ndarray | float:
    n = np.asarray(n, dtype=float)
    return np.exp(n * math.log(mean) - mean - gammaln(n + 1.0))


def _poisson_sum(mean: float, n_lo: int, n_hi: int) -> float:
    ns = np.arange(n_lo, n_hi + 1)
    return float(_poisson_pmf(mean, ns).sum())


def poisson_levels(amplitude: float, n_max: int) -> np.ndarray:
    """Level statistics P(n) = e^{-<n>} <n>^n / n! for n = 0..n_max."""
    return np.atleast_1d(_poisson_pmf(amplitude * amplitude, np.arange(n_max + 1)))


def poisson_coverage(amplitude: float, n_in: int, n_f: int | None) -> float:
    """Probability mass of the levels kept in the band [n_in, n_f]."""
    if n_in < 0:
        raise ValueError("n_in must be >= 0")
    if n_f is None:
        n_f = _full_band_cutoff(amplitude)
    if n_f < n_in:
        raise ValueError("n_f must be >= n_in")
    return _poisson_sum(amplitude * amplitude, n_in, n_f)


def eigenfunction_row(x, omega: float, n_max: int) -> np.ndarray:
    """Oscillator eigenfunctions psi_0(x)..psi_{n_max}(x).

    Uses the normalized three-term recurrence

        psi_{n+1} = sqrt(2*omega/(n+1)) * x * psi_n - sqrt(n/(n+1)) * psi_{n-1}

    which stays finite to n ~ 200 where the textbook Hermite-times-factorial
    form overflows.  Levels are on the last axis of the result.
    """
    if n_max < 0:
        raise ValueError("n_max must be >= 0")
    x = np.asarray(x, dtype=float)
    out = np.empty(x.shape + (n_max + 1,))
    psi_prev = np.zeros_like(x)
    psi = (omega / math.pi) ** 0.25 * np.exp(-0.5 * omega * x * x)
    out[..., 0] = psi
    for n in range(n_max):
        psi, psi_prev = (
            math.sqrt(2.0 * omega / (n + 1)) * x * psi
            - math.sqrt(n / (n + 1.0)) * psi_prev,
            psi,
        )
        out[..., n + 1] = psi
    return out


def eigenfunction_rows_with_derivative(x, omega: float, n_max: int):
    """(psi_n(x), psi_n'(x)) for n = 0..n_max, derivative by recurrence.

    psi_n' = sqrt(2*omega*n) * psi_{n-1} - omega * x * psi_n.
    """
    psi = eigenfunction_row(x, omega, n_max)
    x = np.asarray(x, dtype=float)
    dpsi = np.empty_like(psi)
    dpsi[..., 0] = -omega * x * psi[..., 0]
    for n in range(1, n_max + 1):
        dpsi[..., n] = (
            math.sqrt(2.0 * omega * n) * psi[..., n - 1] - omega * x * psi[..., n]
        )
    return psi, dpsi


def band_coefficients(amplitude: float, n_in: int, n_f: int) -> np.ndarray:
    """Real coefficients e^{-a0^2/2} a0^n / sqrt(n!) for the kept band."""
    ns = np.arange(n_in, n_f + 1, dtype=float)
    log_c = -0.5 * amplitude * amplitude + ns * math.log(amplitude) - 0.5 * gammaln(
        ns + 1.0
    )
    coef = np.exp(log_c)
    bad = ~np.isfinite(coef)
    if bad.any():
        raise TermOverflowError(int(n_in + np.argmax(bad)))
    return coef


def coherent_1d(x, t: float, amplitude: float, phase: float, omega: float,
                n_in: int, n_f: int | None):
    """One oscillator mode Y(x, t) restricted to levels [n_in, n_f].

    Returns (value, d/dx value); the derivative comes from the eigenfunction
    recurrence, never from numerical differencing.  ``n_f=None`` resolves to
    the converged full-state cutoff.
    """
    if n_f is None:
        n_f = _full_band_cutoff(amplitude)
    coef = band_coefficients(amplitude, n_in, n_f)
    psi, dpsi = eigenfunction_rows_with_derivative(x, omega, n_f)
    ns = np.arange(n_in, n_f + 1)
    rot = coef * np.exp(1j * ns * (phase - omega * t))
    global_phase = np.exp(-0.5j * omega * t)
    value = global_phase * (psi[..., n_in:] @ rot)
    dvalue = global_phase * (dpsi[..., n_in:] @ rot)
    bad = ~(np.isfinite(value.real) & np.isfinite(value.imag))
    if np.any(bad):
        raise TermOverflowError(n_f, "non-finite coherent-state sum")
    return value, dvalue


def psi(spec: SystemSpec, x, y, t: float) -> ComplexField2D:
    """Value and gradient of the two-mode wavefunction at (x, y, t).

    Accepts scalars or broadcastable arrays.  When ``spec.renormalize`` is
    set the whole field is divided by the global norm, which leaves the
    Bohmian velocity Im(grad Psi / Psi) unchanged.
    """
    band = (spec.n_in, spec.n_f)
    yr_x, dyr_x = coherent_1d(x, t, spec.a0, 0.0, spec.omega_x, *band)
    yl_x, dyl_x = coherent_1d(x, t, spec.a0, math.pi, spec.omega_x, *band)
    yr_y, dyr_y = coherent_1d(y, t, spec.b0, 0.0, spec.omega_y, *band)
    yl_y, dyl_y = coherent_1d(y, t, spec.b0, math.pi, spec.omega_y, *band)

    value = spec.c1 * yr_x * yl_y + spec.c2 * yl_x * yr_y
    grad_x = spec.c1 * dyr_x * yl_y + spec.c2 * dyl_x * yr_y
    grad_y = spec.c1 * yr_x * dyl_y + spec.c2 * yl_x * dyr_y
    field = ComplexField2D(value, grad_x, grad_y)
    if spec.renormalize:
        field = field * (1.0 / norm_psi(spec.without_renormalization()))
    return field


def density(spec: SystemSpec, x, y, t: float):
    """|Psi|^2 at (x, y, t) (renormalized when the spec says so)."""
    v = psi(spec, x, y, t).value
    return (v * v.conjugate()).real


def _gauss_hermite_points(omega: float, order: int):
    """Nodes and effective weights for integrating f(x) dx over the line.

    The returned weights absorb the e^{u^2} factor, so they apply directly
    to integrands that carry their own Gaussian decay (as |Y|^2 does).
    """
    u, w = roots_hermite(order)
    sq = math.sqrt(omega)
    return u / sq, np.exp(np.log(w) + u * u) / sq


def _overlap_quadrature(amplitude: float, omega: float, n_in: int, n_f: int,
                        order: int) -> tuple[float, float]:
    """(norm^2 of one band-limited mode, L/R overlap) at t=0 by quadrature."""
    x, w = _gauss_hermite_points(omega, order)
    yr, _ = coherent_1d(x, 0.0, amplitude, 0.0, omega, n_in, n_f)
    yl, _ = coherent_1d(x, 0.0, amplitude, math.pi, omega, n_in, n_f)
    mode_norm2 = float(np.real(w @ (yr * yr.conjugate())))
    overlap = float(np.real(w @ (yl * yr.conjugate())))
    return mode_norm2, overlap


def overlap_1d(amplitude: float, omega: float = 1.0, n_in: int = 0,
               n_f: int | None = None) -> float:
    """t=0 overlap integral of the left and right basis states.

    For the full band this converges to the closed form e^{-2 a0^2}.
    """
    if n_f is None:
        n_f = _full_band_cutoff(amplitude)
    order = 2 * n_f + 8
    _, overlap = _overlap_quadrature(amplitude, omega, n_in, n_f, order)
    return overlap


@lru_cache(maxsize=None)
def norm_psi(spec: SystemSpec) -> float:
    """Global norm sqrt(iint |Psi|^2 dx dy) by tensor Gauss-Hermite quadrature.

    The tensor integral factorizes into 1-D mode norms plus the
    non-orthogonality cross term 2*c1*c2*S_x*S_y, where S is the 1-D L/R
    overlap.  A doubled-order evaluation guards against non-convergence.
    """
    base = spec.without_renormalization()
    n_f = base.n_f_effective
    order = 2 * n_f + 8

    def norm_at(p: int) -> float:
        nx, sx = _overlap_quadrature(base.a0, base.omega_x, base.n_in, n_f, p)
        ny, sy = _overlap_quadrature(base.b0, base.omega_y, base.n_in, n_f, p)
        norm2 = nx * ny + 2.0 * base.c1 * base.c2 * sx * sy
        return math.sqrt(max(norm2, 0.0))

    coarse, fine = norm_at(order), norm_at(2 * order)
    if abs(coarse - fine) > 1e-10:
        raise QuadratureConvergenceError(
            f"norm quadrature drifted by {abs(coarse - fine):.3e} on order doubling"
        )
    return fine


def blob_centers(spec: SystemSpec, t: float):
    """Instantaneous Gaussian-blob centers and the maximum origin distance.

    Returns ((x1, y1), (x2, y2), d_max): the first center belongs to the c1
    product Y_R(x) Y_L(y), the second to the c2 one.  d_max is reported for
    the common-amplitude case (it uses a0).
    """
    xc = math.sqrt(2.0 / spec.omega_x) * spec.a0 * math.cos(spec.omega_x * t)
    yc = math.sqrt(2.0 / spec.omega_y) * spec.b0 * math.cos(spec.omega_y * t)
    d_max = (
        math.sqrt(2.0 * (spec.omega_x + spec.omega_y))
        * spec.a0
        / math.sqrt(spec.omega_x * spec.omega_y)
    )
    return (xc, -yc), (-xc, yc), d_max
