"""Exception hierarchy for the DS-II scattering toolkit.

Every exception carries an ``exit_code`` used by the CLI:
2 for validation failures, 3 for numerical failures, 4 for budget refusals.
"""

from typing import Any


class DSIIError(Exception):
    """Base class for all toolkit errors."""

    exit_code: int = 1

    def to_dict(self) -> dict[str, Any]:
        """Return a machine-readable description of the error."""
        return {
            "status": "error",
            "error": type(self).__name__,
            "message": str(self),
            "exit_code": self.exit_code,
        }


class ValidationFailure(DSIIError, ValueError):
    """Inputs violate a precondition."""

    exit_code = 2


class GridMismatchError(ValidationFailure):
    """Two fields live on different grids."""


class SpaceMismatchError(ValidationFailure):
    """A field carries the wrong variable-space tag."""


class AliasingError(ValidationFailure):
    """A requested spectral parameter is not representable on the grid."""


class BoundaryMassError(ValidationFailure):
    """A field carries too much mass near the edge of the periodic box."""


class NonFiniteFieldError(ValidationFailure):
    """A field contains NaN or Inf samples."""


class FieldFormatError(ValidationFailure):
    """A DSF1 file is malformed."""


class CriticalityPreconditionError(ValidationFailure):
    """The criticality enumeration is not complete for this instance."""


class NumericalFailure(DSIIError):
    """A numerical procedure did not deliver a trustworthy result."""

    exit_code = 3


class SolverConvergenceError(NumericalFailure):
    """An iterative solve missed its tolerance within the iteration cap."""

    def __init__(self, message: str, best_residual: float, iterations: int):
        super().__init__(f"{message} (best residual {best_residual:.3e} after {iterations} iterations)")
        self.best_residual = best_residual
        self.iterations = iterations

    def to_dict(self) -> dict[str, Any]:
        data = super().to_dict()
        data["best_residual"] = self.best_residual
        data["iterations"] = self.iterations
        return data


class ScatteringError(NumericalFailure):
    """Too many per-point solves failed during a transform sweep."""

    def __init__(self, message: str, failed_points: list[tuple[int, int]]):
        super().__init__(f"{message} ({len(failed_points)} failed points)")
        self.failed_points = failed_points

    def to_dict(self) -> dict[str, Any]:
        data = super().to_dict()
        data["failed_points"] = [list(p) for p in self.failed_points]
        return data


class FitConditioningError(NumericalFailure):
    """A least-squares fit is too ill-conditioned to report."""


class BlowUpError(NumericalFailure):
    """The split-step solution grew uncontrollably within one step."""


class DivergentVarianceError(NumericalFailure):
    """Monte-Carlo weights look heavy-tailed with infinite variance."""


class OscillationBudgetError(DSIIError):
    """The requested time exceeds what the lattice resolves without aliasing."""

    exit_code = 4

    def __init__(self, t: float, t_max: float, lattice_t_max: float | None = None):
        message = f"|t| = {abs(t):.6g} exceeds the oscillation budget t_max = {t_max:.6g}"
        if lattice_t_max is not None:
            message += f" (full-lattice bound {lattice_t_max:.6g})"
        super().__init__(message)
        self.t = t
        self.t_max = t_max
        self.lattice_t_max = lattice_t_max

    def to_dict(self) -> dict[str, Any]:
        data = super().to_dict()
        data["t"] = self.t
        data["t_max"] = self.t_max
        if self.lattice_t_max is not None:
            data["lattice_t_max"] = self.lattice_t_max
        return data
