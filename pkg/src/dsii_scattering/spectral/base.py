"""Base protocols for operators acting on sampled fields."""

from typing import Protocol

from dsii_scattering.spectral.field import Field


class FieldOperator(Protocol):
    """Protocol for a map between fields on one grid."""

    def __call__(self, psi: Field) -> Field:
        """
        Apply the operator.

        Args:
            psi: Input field.

        Returns:
            Field on the same grid and in the same space.
        """
        ...


class LinearFieldOperator(FieldOperator, Protocol):
    """A complex-linear field operator that knows its adjoint."""

    def adjoint(self, psi: Field) -> Field:
        """Apply the adjoint with respect to the cell-weighted L2 inner product."""
        ...
