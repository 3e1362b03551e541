"""Solvers for the coupled dbar systems."""

from dsii_scattering.dbar.probe import power_norm, random_field
from dsii_scattering.dbar.solver import (
    CoupledDbarSystem,
    MuSolution,
    NuSolution,
    apply_T,
    apply_T2,
    dbar_residual,
    neumann_terms,
    solve_mu,
    solve_nu,
    sweep_mu,
    sweep_nu,
    t2_norm_probe,
)

__all__ = [
    "CoupledDbarSystem",
    "MuSolution",
    "NuSolution",
    "apply_T",
    "apply_T2",
    "dbar_residual",
    "neumann_terms",
    "power_norm",
    "random_field",
    "solve_mu",
    "solve_nu",
    "sweep_mu",
    "sweep_nu",
    "t2_norm_probe",
]
