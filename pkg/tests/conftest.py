import math

import pytest

from bohmqubits.wavefunction import SystemSpec

BELL = math.sqrt(2.0) / 2.0
OMEGA_Y = math.sqrt(3.0)


@pytest.fixture
def bell_spec():
    """Maximally entangled full-band state at the reference amplitude."""
    return SystemSpec.with_entanglement(
        BELL, a0=2.5, b0=2.5, omega_x=1.0, omega_y=OMEGA_Y
    )


@pytest.fixture
def product_spec():
    """Unentangled (c2 = 0) state: exactly solvable dynamics."""
    return SystemSpec.with_entanglement(
        0.0, a0=2.5, b0=2.5, omega_x=1.0, omega_y=OMEGA_Y
    )


@pytest.fixture
def small_spec():
    """Small-amplitude entangled state (ordered central region)."""
    return SystemSpec.with_entanglement(
        BELL, a0=0.5, b0=0.5, omega_x=1.0, omega_y=OMEGA_Y
    )
