"""Split-step spectral solver of DS-II, independent of the scattering transform.

The equation is i q_t + 2(dbar^2 + d^2) q + (g + conj g) q = 0 with
dbar g = -d |q|^2, i.e. g = -S(|q|^2) for the Beurling transform S.
"""

import logging
import math

import numpy as np
import scipy.fft

from dsii_scattering.config import StepConfig
from dsii_scattering.errors import BlowUpError, ValidationFailure
from dsii_scattering.evolution import check_budget
from dsii_scattering.spectral.field import Field
from dsii_scattering.spectral.grid import GridSpec
from dsii_scattering.spectral.operators import (
    beurling_S,
    cauchy_P,
    d,
    fourier_forward,
)
from dsii_scattering.telemetry import emit
from dsii_scattering.types import StepRecord

logger = logging.getLogger(__name__)

# Nonlinear phase per step above which the splitting error is no longer small
MAX_STEP_PHASE = math.pi / 4


def _linear_symbol(grid: GridSpec, t: float) -> np.ndarray:
    # 2(dbar^2 + d^2) has symbol (xi_y^2 - xi_x^2)/2
    xi_x, xi_y = grid.frequencies
    return np.exp(1j * t * (xi_y**2 - xi_x**2))


def _linear_step(q: Field, t: float) -> Field:
    return q.like(scipy.fft.ifft2(_linear_symbol(q.grid, t) * scipy.fft.fft2(q.data)))


def linear_group(q: Field, t: float) -> Field:
    """
    S(t) q for i u_t + 2(dbar^2 + d^2) u = 0.

    The multiplier exp(i t (xi_y^2 - xi_x^2)) corresponds to exp(4 i t Re k^2)
    under the transform, so F(S(t) q) = evolve_r(F q, t) on the lattice.

    Raises:
        OscillationBudgetError: t exceeds what q's spectrum allows.
    """
    q.require("z")
    check_budget(fourier_forward(q), t)
    return _linear_step(q, t)


def nonlocal_g(q: Field) -> Field:
    """g = -S(|q|^2)."""
    q.require("z")
    return -beurling_S(q.abs2())


def potential(q: Field) -> Field:
    """Real potential g + conj(g) = -2 Re S(|q|^2)."""
    return nonlocal_g(q).real() * 2.0


def dsii_int_potential(q: Field) -> Field:
    """The same potential as -2 Re(dbar^-1 d)(|q|^2), through separate multipliers."""
    q.require("z")
    return cauchy_P(d(q.abs2())).real() * -2.0


def _nonlinear_half_step(q: Field, dt: float) -> Field:
    v = potential(q).data.real
    return q.like(q.data * np.exp(0.5j * dt * v))


def split_step_run(
    q0: Field, t: float, cfg: StepConfig | None = None, telemetry_every: int | None = None
) -> tuple[Field, list[StepRecord]]:
    """
    Strang splitting: half nonlinear phase, full linear step, half nonlinear phase.

    The potential is frozen from the current q inside each half step; since
    |q| is unchanged by the phase, each half step is exactly invertible and
    the scheme is time-reversible.

    Args:
        q0: Initial data.
        t: Final time (negative runs backwards).
        cfg: Step policy; the step is shrunk so that steps * dt = t.
        telemetry_every: Record (t, L2, sup) every this many steps.

    Returns:
        Final field and the telemetry rows.

    Raises:
        OscillationBudgetError: t exceeds what q0's spectrum allows.
        ValidationFailure: The nonlinear phase per step exceeds pi/4.
        BlowUpError: The sup norm more than doubled within one step.
    """
    cfg = cfg or StepConfig()
    q0.require("z")
    check_budget(fourier_forward(q0), t)
    steps = cfg.steps_for(t)
    dt = cfg.dt_for(t)
    q = q0
    records: list[StepRecord] = []
    if telemetry_every:
        records.append({"step": 0, "t": 0.0, "l2_norm": q.norm(), "sup_norm": q.sup()})
    if steps:
        v_max = float(np.max(np.abs(potential(q0).data)))
        if abs(dt) * v_max > MAX_STEP_PHASE:
            raise ValidationFailure(
                f"Nonlinear phase per step {abs(dt) * v_max:.3f} exceeds {MAX_STEP_PHASE:.3f}; reduce dt"
            )
    for step in range(1, steps + 1):
        before = q.sup()
        q = _nonlinear_half_step(q, dt)
        q = _linear_step(q, dt)
        q = _nonlinear_half_step(q, dt)
        after = q.sup()
        if before > 0 and after > 2.0 * before:
            raise BlowUpError(f"sup norm grew from {before:.3e} to {after:.3e} at step {step}")
        if telemetry_every and (step % telemetry_every == 0 or step == steps):
            record: StepRecord = {"step": step, "t": step * dt, "l2_norm": q.norm(), "sup_norm": after}
            records.append(record)
            emit("split_step", **record)
    logger.debug(f"Split-step: {steps} steps of dt={dt:.3e} to t={t}")
    return q, records


def split_step(q0: Field, t: float, cfg: StepConfig | None = None) -> Field:
    """q(t) by the Strang split-step scheme."""
    return split_step_run(q0, t, cfg)[0]
