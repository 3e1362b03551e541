"""DSII Scattering - inverse-scattering toolkit for the defocussing Davey-Stewartson II equation."""

from dsii_scattering.toolkit import ScatteringToolkit

__all__ = ["ScatteringToolkit"]
__version__ = "0.1.0"
