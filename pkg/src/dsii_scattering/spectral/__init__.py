"""Grids, fields and the spectral operators every solver is built from."""

from dsii_scattering.spectral.base import FieldOperator, LinearFieldOperator
from dsii_scattering.spectral.field import (
    Field,
    boundary_mass,
    check_boundary,
    read_field,
    read_field_with_meta,
    write_field,
)
from dsii_scattering.spectral.grid import GridSpec
from dsii_scattering.spectral.operators import (
    beurling_S,
    cauchy_P,
    cauchy_P_adjoint,
    cauchy_Pbar,
    check_resolvable,
    d,
    dbar,
    ek_multiply,
    ek_value,
    fourier_forward,
    fourier_inverse,
    pairing,
    unimodular,
)

__all__ = [
    "Field",
    "FieldOperator",
    "GridSpec",
    "LinearFieldOperator",
    "beurling_S",
    "boundary_mass",
    "cauchy_P",
    "cauchy_P_adjoint",
    "cauchy_Pbar",
    "check_boundary",
    "check_resolvable",
    "d",
    "dbar",
    "ek_multiply",
    "ek_value",
    "fourier_forward",
    "fourier_inverse",
    "pairing",
    "read_field",
    "read_field_with_meta",
    "unimodular",
    "write_field",
]
