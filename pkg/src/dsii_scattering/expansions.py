"""Large-k expansion coefficients of the z-side solution and related identities.

The pair nu = (mu1, e_k conj(mu2)) solves dbar nu1 = q nu2 / 2 and
(d + k) nu2 = conj(q) nu1 / 2, and for large |k|

    nu - (1, 0) ~ sum_l k^-(l+1) (nu1_l, nu2_l)

with nu2_0 = conj(q)/2, nu1_l = P(q nu2_l)/2 and
nu2_{l+1} = conj(q) nu1_l / 2 - d nu2_l.
"""

import logging
from collections.abc import Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict

from dsii_scattering.config import SolverConfig
from dsii_scattering.dbar.solver import MuSolution, sweep_mu
from dsii_scattering.errors import FitConditioningError, NumericalFailure, ValidationFailure
from dsii_scattering.evolution import CutoffChi
from dsii_scattering.spectral.field import Field
from dsii_scattering.spectral.grid import GridSpec
from dsii_scattering.spectral.operators import cauchy_P, d, ek_value
from dsii_scattering.types import ExpansionFitRow, MomentReport

logger = logging.getLogger(__name__)

MIN_LADDER_K = 4.0
MAX_FIT_CONDITION = 1e8


class ExpansionCoeffs(BaseModel):
    """Closed-form coefficients nu1_0, nu2_0, nu1_1, nu2_1 and nu2_2 as z-fields."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    nu10: Field
    nu20: Field
    nu11: Field
    nu21: Field
    nu22: Field

    def as_dict(self) -> dict[str, Field]:
        return {name: getattr(self, name) for name in ("nu10", "nu20", "nu11", "nu21", "nu22")}

    def at(self, z: complex) -> dict[str, complex]:
        """All coefficients at the lattice point nearest to z."""
        return {name: f.sample(z) for name, f in self.as_dict().items()}


def compute_coeffs(q: Field, compensate_mean: bool = True) -> ExpansionCoeffs:
    """
    Closed forms of the first expansion coefficients.

    nu2_2 is the recursion value
    conj(q) P(|q|^2 P|q|^2)/32 - conj(q) P(q d conj(q))/8
    - d(conj(q) P|q|^2)/8 + d^2 conj(q)/2.
    """
    q.require("z")

    def P(f: Field) -> Field:
        return cauchy_P(f, compensate_mean=compensate_mean)

    qbar = q.conj()
    density = q.abs2()
    p_density = P(density)
    d_qbar = d(qbar)
    nu10 = p_density * 0.25
    nu20 = qbar * 0.5
    nu11 = P(density * p_density) * (1 / 16) - P(q * d_qbar) * 0.25
    nu21 = qbar * p_density * (1 / 8) - d_qbar * 0.5
    nu22 = (
        qbar * P(density * p_density) * (1 / 32)
        - qbar * P(q * d_qbar) * (1 / 8)
        - d(qbar * p_density) * (1 / 8)
        + d(d_qbar) * 0.5
    )
    return ExpansionCoeffs(nu10=nu10, nu20=nu20, nu11=nu11, nu21=nu21, nu22=nu22)


def recursion_coeffs(q: Field, order: int, compensate_mean: bool = True) -> list[tuple[Field, Field]]:
    """
    (nu1_l, nu2_l) for l = 0..order from the recursion alone.

    Raises:
        ValidationFailure: order is negative.
    """
    q.require("z")
    if order < 0:
        raise ValidationFailure(f"order must be non-negative, got {order}")
    qbar = q.conj()
    nu2 = qbar * 0.5
    out: list[tuple[Field, Field]] = []
    for _ in range(order + 1):
        nu1 = cauchy_P(q * nu2, compensate_mean=compensate_mean) * 0.5
        out.append((nu1, nu2))
        nu2 = qbar * nu1 * 0.5 - d(nu2)
    return out


def recursion_defect(q: Field, compensate_mean: bool = True) -> dict[str, float]:
    """Relative gaps between the closed forms and the recursion for nu1_1, nu2_1 and nu2_2."""
    closed = compute_coeffs(q, compensate_mean)
    steps = recursion_coeffs(q, 2, compensate_mean)
    pairs = {
        "nu10": (closed.nu10, steps[0][0]),
        "nu11": (closed.nu11, steps[1][0]),
        "nu21": (closed.nu21, steps[1][1]),
        "nu22": (closed.nu22, steps[2][1]),
    }
    return {name: a.relative_error(b) for name, (a, b) in pairs.items()}


class ExpansionFit:
    """Least-squares coefficients of nu - (1, 0) in 1/k and 1/k^2 at one point."""

    def __init__(
        self,
        z: complex,
        kladder: list[float],
        nu1: tuple[complex, complex],
        nu2: tuple[complex, complex],
        residual: float,
        condition: float,
    ):
        self.z = z
        self.kladder = kladder
        self.nu1 = nu1
        self.nu2 = nu2
        self.residual = residual
        self.condition = condition

    def compare(self, closed: ExpansionCoeffs) -> list[ExpansionFitRow]:
        """Rows of fitted against closed-form values at the fit point."""
        values = closed.at(self.z)
        pairs = (
            ("nu10", self.nu1[0]),
            ("nu11", self.nu1[1]),
            ("nu20", self.nu2[0]),
            ("nu21", self.nu2[1]),
        )
        rows: list[ExpansionFitRow] = []
        for name, fitted in pairs:
            exact = values[name]
            err = abs(fitted - exact)
            rows.append(
                {
                    "name": name,
                    "fitted": fitted,
                    "closed_form": exact,
                    "rel_error": err / abs(exact) if abs(exact) > 0 else err,
                }
            )
        return rows

    def __repr__(self) -> str:
        return (
            f"ExpansionFit(z={self.z}, kladder={self.kladder}, "
            f"residual={self.residual:.3e}, condition={self.condition:.3g})"
        )


def fit_expansion(
    q: Field, z: complex, kladder: Sequence[float], cfg: SolverConfig | None = None
) -> ExpansionFit:
    """
    Fit the two leading expansion orders from solved mu at real k.

    Args:
        q: Potential.
        z: Fit point, snapped to the nearest lattice point.
        kladder: Increasing real k values, all at least 4.
        cfg: Solver policy; ladder solves share ``cfg.workers`` threads.

    Raises:
        ValidationFailure: The ladder is unsorted, too short, or starts below 4.
        FitConditioningError: The 1/k design matrix is ill-conditioned.
    """
    cfg = cfg or SolverConfig()
    q.require("z")
    ks = [float(k) for k in kladder]
    if len(ks) < 2:
        raise ValidationFailure("kladder needs at least two values for a two-term fit")
    if any(b <= a for a, b in zip(ks, ks[1:])):
        raise ValidationFailure(f"kladder must be strictly increasing, got {ks}")
    if ks[0] < MIN_LADDER_K:
        raise ValidationFailure(f"kladder must start at k >= {MIN_LADDER_K}, got {ks[0]}")

    iy, ix = q.grid.nearest_index(z)
    z0 = complex(q.grid.points[iy, ix])
    solutions = sweep_mu(q, [complex(k) for k in ks], cfg)
    nu1_vals = np.empty(len(ks), dtype=np.complex128)
    nu2_vals = np.empty(len(ks), dtype=np.complex128)
    for i, (k, sol) in enumerate(zip(ks, solutions)):
        if isinstance(sol, NumericalFailure):
            raise sol
        assert isinstance(sol, MuSolution)
        nu1_vals[i] = sol.mu1.data[iy, ix] - 1.0
        nu2_vals[i] = ek_value(k, z0) * np.conj(sol.mu2.data[iy, ix])

    k_arr = np.asarray(ks)
    design = np.stack([1.0 / k_arr, 1.0 / k_arr**2], axis=1)
    condition = float(np.linalg.cond(design))
    if condition > MAX_FIT_CONDITION:
        raise FitConditioningError(f"expansion fit design matrix has condition {condition:.3e}")
    coeffs, *_ = np.linalg.lstsq(design, np.stack([nu1_vals, nu2_vals], axis=1), rcond=None)
    residual = float(np.max(np.abs(design @ coeffs - np.stack([nu1_vals, nu2_vals], axis=1))))
    logger.info(f"Expansion fit at z={z0}: residual {residual:.3e}, condition {condition:.3g}")
    return ExpansionFit(
        z=z0,
        kladder=ks,
        nu1=(complex(coeffs[0, 0]), complex(coeffs[1, 0])),
        nu2=(complex(coeffs[0, 1]), complex(coeffs[1, 1])),
        residual=residual,
        condition=condition,
    )


def bilinear_identity_defect(f: Field, compensate_mean: bool = True) -> float:
    """Relative defect of (P f)^2 = 2 P(f P f)."""
    pf = cauchy_P(f, compensate_mean=compensate_mean)
    lhs = pf * pf
    rhs = cauchy_P(f * pf, compensate_mean=compensate_mean) * 2.0
    return (lhs - rhs).norm() / lhs.norm() if lhs.norm() > 0 else (lhs - rhs).norm()


def moment_identity_check(
    grid: GridSpec, order: int, coefficients: dict[int, complex], radius: float = 2.0
) -> MomentReport:
    """
    Moment identity for h(k) = sum_j c_j (1 - chi(k)) / k^(j+1).

    chi is the smooth cutoff equal to 1 on |k| <= radius and 0 beyond
    2 * radius, so dbar h = -sum_j c_j dbar(chi) / k^(j+1). With Lebesgue
    measure, integral k^n dbar h dm = pi * c_n; the report also gives the
    ratio of the quadrature to 2 pi i c_n.

    Raises:
        ValidationFailure: The cutoff does not fit in the box, or order < 0.
    """
    if order < 0:
        raise ValidationFailure(f"order must be non-negative, got {order}")
    if 2 * radius >= grid.L:
        raise ValidationFailure(f"cutoff radius {radius} needs a box half-width above {2 * radius}")
    k = grid.points
    dchi = CutoffChi(center=0j, t=radius**-4).dbar_values(grid)
    support = dchi != 0
    safe_k = np.where(support, k, 1.0)
    dbar_h = np.zeros(grid.shape, dtype=np.complex128)
    for j, c in coefficients.items():
        dbar_h -= c * dchi / safe_k ** (j + 1)
    integral = complex(np.sum((safe_k**order * dbar_h).ravel()) * grid.cell_area)
    expected = complex(np.pi * coefficients.get(order, 0.0))
    defect = abs(integral - expected) / abs(expected) if expected != 0 else abs(integral)
    stated = 2j * np.pi * coefficients.get(order, 0.0)
    ratio = complex(integral / stated) if stated != 0 else complex(np.nan)
    return {
        "order": order,
        "integral": integral,
        "expected": expected,
        "defect": float(defect),
        "ratio_to_2pi_i": ratio,
    }


def predicted_mu1_farfield(r: Field, k: complex, compensate_mean: bool = True) -> complex:
    """Large-z coefficient a in mu1 - 1 ~ a/z, predicted from r as P_k(|r|^2)(k)/4."""
    r.require("k")
    return 0.25 * cauchy_P(r.abs2(), compensate_mean=compensate_mean).sample(k)
