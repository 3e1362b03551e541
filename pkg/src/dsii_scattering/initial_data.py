"""Named initial-data families."""

import logging

import numpy as np

from dsii_scattering.config import FileSpec, GaussianSpec, GridConfig, InitialDataSpec, TwoBumpSpec
from dsii_scattering.spectral.field import Field, read_field
from dsii_scattering.spectral.grid import GridSpec

logger = logging.getLogger(__name__)


def gaussian(
    grid: GridSpec, amplitude: complex = 1.0, width: float = 1.0, center: complex = 0j
) -> Field:
    """amplitude * exp(-|z - center|^2 / width^2) on a z-grid."""
    if width <= 0:
        raise ValueError(f"width must be positive, got {width}")
    return Field.from_function(
        grid, "z", lambda z: amplitude * np.exp(-np.abs(z - center) ** 2 / width**2)
    )


def two_bump(grid: GridSpec, spec: TwoBumpSpec | None = None) -> Field:
    """Two Gaussians with complex amplitudes, an asymmetric non-radial test profile."""
    spec = spec or TwoBumpSpec()
    out = Field.zeros(grid, "z")
    for amp, width, center in zip(spec.amplitudes, spec.widths, spec.centers):
        out = out + gaussian(grid, complex(*amp), width, complex(*center))
    return out


def from_spec(spec: InitialDataSpec, grid_cfg: GridConfig | None = None) -> Field:
    """
    Build the initial field described by ``spec``.

    File data carries its own grid, which takes precedence over ``grid_cfg``.
    """
    if isinstance(spec, FileSpec):
        q = read_field(spec.path).require("z")
        if grid_cfg is not None and (grid_cfg.n != q.grid.n or grid_cfg.L != q.grid.L):
            logger.info(f"Using the grid stored in {spec.path} ({q.grid!r}) instead of n={grid_cfg.n}, L={grid_cfg.L}")
        return q
    grid_cfg = grid_cfg or GridConfig()
    grid = GridSpec(n=grid_cfg.n, L=grid_cfg.L)
    if isinstance(spec, GaussianSpec):
        return gaussian(grid, spec.amplitude, spec.width, complex(*spec.center))
    return two_bump(grid, spec)
