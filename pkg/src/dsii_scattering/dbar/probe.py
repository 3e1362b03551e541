"""Randomized power-iteration estimates of operator norms."""

import logging

import numpy as np

from dsii_scattering.spectral.base import LinearFieldOperator
from dsii_scattering.spectral.field import Field, Space
from dsii_scattering.spectral.grid import GridSpec

logger = logging.getLogger(__name__)

DEFAULT_PROBE_SEED = 1234


def random_field(grid: GridSpec, space: Space, seed: int) -> Field:
    """Unit-norm complex Gaussian field from a fixed seed."""
    rng = np.random.default_rng(seed)
    data = rng.standard_normal(grid.shape) + 1j * rng.standard_normal(grid.shape)
    f = Field(grid, space, data)
    return f / f.norm()


def power_norm(
    op: LinearFieldOperator,
    grid: GridSpec,
    space: Space,
    iters: int = 20,
    seed: int = DEFAULT_PROBE_SEED,
) -> float:
    """
    Estimate ||op|| by power iteration on op* op.

    Args:
        op: Complex-linear operator with an adjoint.
        grid: Grid the operator acts on.
        space: Space tag of its fields.
        iters: Number of op* op applications.
        seed: Seed of the start vector.

    Returns:
        ||op v|| for the final unit vector v, a lower bound that converges to the norm.
    """
    if iters < 1:
        raise ValueError(f"iters must be positive, got {iters}")
    v = random_field(grid, space, seed)
    for _ in range(iters):
        w = op.adjoint(op(v))
        size = w.norm()
        if size == 0.0:
            return 0.0
        v = w / size
    estimate = op(v).norm()
    logger.debug(f"Power iteration: {iters} steps, norm estimate {estimate:.6e}")
    return estimate
