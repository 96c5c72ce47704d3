"""Exception types shared across the package."""


class BohmQubitsError(Exception):
    """Base class for all package-specific errors."""


class ConfigError(BohmQubitsError):
    """Invalid run configuration (maps to CLI exit code 2)."""


class TermOverflowError(BohmQubitsError):
    """An intermediate series term left the representable range.

    Carries the offending level index in ``level``.
    """

    def __init__(self, level, message=None):
        self.level = level
        super().__init__(message or f"series term overflow at level n={level}")


class QuadratureConvergenceError(BohmQubitsError):
    """Two successive quadrature orders disagreed beyond tolerance."""


class NodeSingularityError(BohmQubitsError):
    """|Psi|^2 fell below the machine-zero guard at an evaluation point."""


class NodesAtInfinityError(BohmQubitsError):
    """The analytic nodal formula is degenerate (nodes at infinity)."""


class StrideMismatchError(BohmQubitsError):
    """A trajectory record's sampling stride differs from the grid's."""


class GridShapeError(BohmQubitsError):
    """Occupancy grids have incompatible bounds or resolution."""


class EnvelopeViolationError(BohmQubitsError):
    """Rejection-sampling envelope was exceeded by the target density."""
