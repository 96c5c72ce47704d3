"""Bohmian trajectories of entangled coherent-state qubits.

Simulation and analysis toolkit for the guidance-equation dynamics of a
two-mode harmonic oscillator prepared in an entangled pair of coherent
states: wavefunction evaluation, trajectory integration, nodal-point
location and ergodicity statistics.
"""

__version__ = "0.1.0"

from .wavefunction import SystemSpec  # noqa: F401
