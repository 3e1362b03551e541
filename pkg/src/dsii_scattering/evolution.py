"""Time evolution through the scattering transform and its large-time analysis."""

import logging
import math
from collections.abc import Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict, Field as PydanticField

from dsii_scattering.config import SolverConfig, settings
from dsii_scattering.dbar.probe import power_norm
from dsii_scattering.dbar.solver import CoupledDbarSystem
from dsii_scattering.errors import OscillationBudgetError
from dsii_scattering.scattering import forward_R, inverse_at, inverse_I
from dsii_scattering.spectral.field import Field
from dsii_scattering.spectral.grid import GridSpec
from dsii_scattering.spectral.operators import cauchy_P, dbar, fourier_inverse, unimodular
from dsii_scattering.types import AsymptoticRow

logger = logging.getLogger(__name__)


class PhaseParams(BaseModel):
    """
    Stationary-phase geometry of the time-t inverse problem at a point z.

    S(k) = (k z - conj(k z))/(i t) + 4 Re(k^2) = S0 + 4 Re((k - k_c)^2)
    with k_c = i z/(4t) and S0 = S(k_c) = Re(z^2/t^2)/4.
    """

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    z: complex
    t: float = PydanticField(..., gt=0)

    @property
    def k_c(self) -> complex:
        return 1j * self.z / (4.0 * self.t)

    @property
    def S0(self) -> float:
        return 0.25 * (self.z**2 / self.t**2).real

    def phase(self, k: np.ndarray) -> np.ndarray:
        """Completed-square form of S."""
        return self.S0 + 4.0 * ((k - self.k_c) ** 2).real

    def phase_direct(self, k: np.ndarray) -> np.ndarray:
        """S from its definition."""
        return ((k * self.z - np.conj(k * self.z)) / (1j * self.t)).real + 4.0 * (k**2).real

    def phase_kbar(self, k: np.ndarray) -> np.ndarray:
        """dS/d(conj k) = 4 (conj(k) - conj(k_c))."""
        return 4.0 * (np.conj(k) - np.conj(self.k_c))


def _bump_tail(x: np.ndarray) -> np.ndarray:
    safe = np.where(x > 0, x, 1.0)
    return np.where(x > 0, np.exp(-1.0 / safe), 0.0)


def _bump_tail_prime(x: np.ndarray) -> np.ndarray:
    safe = np.where(x > 0, x, 1.0)
    return np.where(x > 0, np.exp(-1.0 / safe) / safe**2, 0.0)


def smooth_step(s: np.ndarray) -> np.ndarray:
    """C-infinity profile: 1 for s <= 1, 0 for s >= 2, monotone in between."""
    s = np.asarray(s, dtype=np.float64)
    a = _bump_tail(2.0 - s)
    b = _bump_tail(s - 1.0)
    return a / (a + b)


def smooth_step_derivative(s: np.ndarray) -> np.ndarray:
    s = np.asarray(s, dtype=np.float64)
    a = _bump_tail(2.0 - s)
    b = _bump_tail(s - 1.0)
    da = -_bump_tail_prime(2.0 - s)
    db = _bump_tail_prime(s - 1.0)
    return (da * b - a * db) / (a + b) ** 2


class CutoffChi(BaseModel):
    """chi(k) = eta(t^(1/4) |k - center|): 1 near the critical point, 0 beyond 2 t^(-1/4)."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    center: complex
    t: float = PydanticField(..., gt=0)

    @classmethod
    def for_phase(cls, phase: PhaseParams) -> "CutoffChi":
        return cls(center=phase.k_c, t=phase.t)

    @property
    def scale(self) -> float:
        return self.t**0.25

    def values(self, grid: GridSpec) -> np.ndarray:
        return smooth_step(self.scale * np.abs(grid.points - self.center))

    def dbar_values(self, grid: GridSpec) -> np.ndarray:
        """Analytic dbar chi; dbar |w| = w/(2|w|)."""
        w = grid.points - self.center
        radius = np.abs(w)
        direction = np.where(radius > 0, w / np.where(radius > 0, radius, 1.0), 0.0)
        return smooth_step_derivative(self.scale * radius) * self.scale * 0.5 * direction


def evolve_r(r: Field, t: float) -> Field:
    """r(k) -> exp(4 i t Re(k^2)) r(k)."""
    r.require("k")
    x, y = r.grid.mesh
    return r.like(np.exp(4j * t * (x**2 - y**2)) * r.data)


def support_radius(r: Field, threshold: float | None = None) -> float:
    """Largest max(|Re k|, |Im k|) over samples with |r| above threshold * max|r|."""
    threshold = settings.support_threshold if threshold is None else threshold
    peak = r.sup()
    if peak == 0:
        return 0.0
    x, y = r.grid.mesh
    mask = np.abs(r.data) > threshold * peak
    return float(np.max(np.maximum(np.abs(x[mask]), np.abs(y[mask]))))


def effective_t_max(r: Field, threshold: float | None = None) -> float:
    """
    Largest |t| whose phase exp(4 i t Re k^2) changes by at most pi/2 per k-cell
    wherever r carries data: |t| <= L / (8 kappa) with L the z-box half-width.
    """
    kappa = support_radius(r, threshold)
    if kappa == 0:
        return math.inf
    return r.grid.dual().L / (8.0 * kappa)


def check_budget(r: Field, t: float, threshold: float | None = None) -> None:
    """
    Raise OscillationBudgetError when t is beyond what the lattice resolves.

    The error also carries the full-lattice bound of the z grid, which data
    filling the whole k box would get.
    """
    t_max = effective_t_max(r, threshold)
    if abs(t) > t_max:
        raise OscillationBudgetError(t, t_max, r.grid.dual().t_max())


def linear_u(r: Field, t: float) -> Field:
    """Linear comparison solution u(t) = F^-1(exp(4 i t Re k^2) r)."""
    check_budget(r, t)
    return fourier_inverse(evolve_r(r, t))


def gaussian_linear_u(grid: GridSpec, amplitude: float, width: float, t: float) -> Field:
    """
    Closed-form linear solution from q0 = amplitude * exp(-|z|^2/width^2).

    Its transform is -amplitude * width^2 * exp(-width^2 |k|^2), and
    u(z, t) = a w^2 / sqrt((w^2 - 4it)(w^2 + 4it)) * exp(-x^2/(w^2 + 4it) - y^2/(w^2 - 4it)).
    """
    x, y = grid.mesh
    w2 = width * width
    minus = w2 - 4j * t
    plus = w2 + 4j * t
    data = amplitude * w2 / np.sqrt(minus * plus) * np.exp(-(x**2) / plus - (y**2) / minus)
    return Field(grid, "z", data)


def solve_ds2(
    q0: Field,
    t: float,
    cfg: SolverConfig | None = None,
    r: Field | None = None,
    boundary_tol: float | None = None,
) -> Field:
    """
    q(t) = I(evolve_r(R q0, t)).

    Args:
        q0: Initial data.
        t: Time; must lie within the oscillation budget of R q0.
        cfg: Solver policy.
        r: Precomputed R q0, reused across several times.
        boundary_tol: Override of the box-truncation guard for both transforms.
    """
    cfg = cfg or SolverConfig()
    if r is None:
        r = forward_R(q0, cfg, boundary_tol).field
    check_budget(r, t)
    return inverse_I(evolve_r(r, t), cfg, boundary_tol).field


def default_probe_set(grid: GridSpec) -> list[complex]:
    """Nine points on a 3x3 pattern with spacing L/16 around the origin."""
    step = grid.L / 16.0
    return [complex(i * step, j * step) for j in (-1, 0, 1) for i in (-1, 0, 1)]


def asymptotic_gap(
    q0: Field,
    tlist: Sequence[float],
    cfg: SolverConfig | None = None,
    probe: Sequence[complex] | None = None,
    r: Field | None = None,
    boundary_tol: float | None = None,
) -> list[AsymptoticRow]:
    """
    Table of g(t) = t * ||q(t) - u(t)||_inf.

    With ``probe`` the sup norm runs over those points (snapped to the
    lattice) and q(t) is only reconstructed there; the L2 conservation
    column is then NaN. Without it q(t) is reconstructed on the whole grid.
    """
    cfg = cfg or SolverConfig()
    if r is None:
        r = forward_R(q0, cfg, boundary_tol).field
    q0_norm = q0.norm()
    rows: list[AsymptoticRow] = []
    points = None
    if probe is not None:
        points = [q0.grid.points[q0.grid.nearest_index(p)] for p in probe]
    for t in tlist:
        check_budget(r, t)
        u = linear_u(r, t)
        if points is None:
            q_t = inverse_I(evolve_r(r, t), cfg, boundary_tol).field
            sup_gap = (q_t - u).sup()
            defect = abs(q_t.norm() - q0_norm) / q0_norm if q0_norm > 0 else q_t.norm()
        else:
            q_vals = inverse_at(evolve_r(r, t), points, cfg)
            u_vals = np.array([u.sample(p) for p in points])
            sup_gap = float(np.max(np.abs(q_vals - u_vals)))
            defect = math.nan
        rows.append(
            {"t": float(t), "sup_gap": sup_gap, "t_times_gap": float(t) * sup_gap, "l2_conservation_defect": defect}
        )
        logger.info(f"Asymptotics t={t}: sup gap {sup_gap:.3e}, t*gap {t * sup_gap:.3e}")
    return rows


def m_squared_system(r: Field, z: complex, t: float, cfg: SolverConfig | None = None) -> CoupledDbarSystem:
    """
    The time-t k-side system at z, whose coefficient is exp(-itS) conj(r).

    Its T is M/2, with M psi = P_k(exp(-itS) conj(r) conj(psi)).
    """
    compensate = (cfg or SolverConfig()).mean_compensation
    return CoupledDbarSystem.for_nu(evolve_r(r, t), z, compensate)


def m_norm_probe(
    r: Field, z: complex, t: float, iters: int = 20, cfg: SolverConfig | None = None
) -> float:
    """Power-iteration estimate of ||M^2|| at the stationary-phase geometry of (z, t)."""
    cfg = cfg or SolverConfig()
    if iters < 5:
        raise ValueError(f"iters must be at least 5, got {iters}")
    check_budget(r, t)
    system = m_squared_system(r, z, t, cfg)
    if system.is_trivial:
        return 0.0
    # T^2 = M^2 / 4
    return 4.0 * power_norm(system, r.grid, "k", iters=iters, seed=cfg.probe_seed)


def ip_identity_check(f: Field, phase: PhaseParams, enforce_support: bool = True) -> float:
    """
    Relative defect of the integration-by-parts identity

        P(e^{i phi} f) = e^{i phi} f/(i phi_kbar) - P(e^{i phi} dbar(f/(i phi_kbar)))

    with phi = -t S, evaluated with the plain periodic Cauchy multiplier.
    Both sides are compared after removing the mean of their difference.

    Args:
        f: k-field.
        phase: Geometry (z, t).
        enforce_support: Multiply f by (1 - chi) so it vanishes near k_c.

    Returns:
        ||lhs - rhs|| / ||lhs||, or the absolute defect if lhs vanishes.
    """
    f.require("k")
    if enforce_support:
        f = f * (1.0 - CutoffChi.for_phase(phase).values(f.grid))
    k = f.grid.points
    i_phi_kbar = -1j * phase.t * phase.phase_kbar(k)
    nonzero = np.abs(i_phi_kbar) > 1e-14
    g = f.like(np.where(nonzero, f.data / np.where(nonzero, i_phi_kbar, 1.0), 0.0))
    # exp(-itS) = e_k(z) exp(-4it Re k^2)
    oscillation = unimodular(f.grid, phase.z) * np.exp(-4j * phase.t * (k**2).real)
    lhs = cauchy_P(f * oscillation)
    rhs = g * oscillation - cauchy_P(dbar(g) * oscillation)
    diff = lhs - rhs
    diff = diff - diff.mean()
    scale = lhs.norm()
    return diff.norm() / scale if scale > 0 else diff.norm()
