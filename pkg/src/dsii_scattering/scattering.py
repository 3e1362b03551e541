"""Forward and inverse scattering transforms on the lattice."""

import logging
from collections.abc import Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict

from dsii_scattering.config import SolverConfig
from dsii_scattering.dbar.solver import parallel_map, solve_mu, solve_nu
from dsii_scattering.errors import FitConditioningError, NumericalFailure, ScatteringError
from dsii_scattering.spectral.field import Field, check_boundary
from dsii_scattering.spectral.operators import unimodular
from dsii_scattering.telemetry import emit
from dsii_scattering.types import FarFieldFit, ScatteringSummary, SymmetryReport

logger = logging.getLogger(__name__)

# Fraction of lattice points allowed to fail before a sweep is rejected
MAX_FAILED_FRACTION = 1e-3
# Largest condition number of an accepted far-field fit
MAX_FIT_CONDITION = 1e8


class ScatteringResult(BaseModel):
    """Output of forward_R (field is r) or inverse_I (field is q)."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    field: Field
    source_norm: float
    max_residual: float
    mean_residual: float
    failed_points: list[tuple[int, int]]
    iterations: int

    @property
    def plancherel_defect(self) -> float:
        if self.source_norm == 0:
            return self.field.norm()
        return abs(self.field.norm() - self.source_norm) / self.source_norm

    def summary(self) -> ScatteringSummary:
        return {
            "l2_in": self.source_norm,
            "l2_out": self.field.norm(),
            "plancherel_defect": self.plancherel_defect,
            "max_residual": self.max_residual,
            "mean_residual": self.mean_residual,
            "failed_points": [list(p) for p in self.failed_points],
        }


def _r_value(q: Field, k: complex, cfg: SolverConfig) -> tuple[complex, float, int]:
    sol = solve_mu(q, k, cfg)
    integrand = unimodular(q.grid, k) * q.data * np.conj(sol.mu1.data)
    value = -(q.grid.cell_area / np.pi) * np.sum(integrand.ravel())
    return complex(value), sol.residual, sol.iterations


def _q_value(r: Field, z: complex, cfg: SolverConfig) -> tuple[complex, float, int]:
    sol = solve_nu(r, z, cfg)
    # e_{-k}(z) as a function of k is conj(e_z(k))
    integrand = np.conj(unimodular(r.grid, z)) * r.data * sol.nu1.data
    value = -(r.grid.cell_area / np.pi) * np.sum(integrand.ravel())
    return complex(value), sol.residual, sol.iterations


def _assemble(
    values: list[tuple[complex, float, int] | NumericalFailure],
    source: Field,
    target_grid_field: Field,
    label: str,
) -> ScatteringResult:
    n = target_grid_field.grid.n
    data = np.zeros(n * n, dtype=np.complex128)
    residuals = []
    iterations = 0
    failed: list[tuple[int, int]] = []
    for idx, outcome in enumerate(values):
        if isinstance(outcome, NumericalFailure):
            failed.append(divmod(idx, n))
            continue
        value, residual, its = outcome
        data[idx] = value
        residuals.append(residual)
        iterations += its
    if len(failed) > MAX_FAILED_FRACTION * n * n:
        raise ScatteringError(f"{label}: too many per-point solves failed", failed)
    if failed:
        logger.warning(f"{label}: {len(failed)} points failed and were set to zero")
    residual_arr = np.asarray(residuals) if residuals else np.zeros(1)
    result = ScatteringResult(
        field=target_grid_field.like(data.reshape(n, n)),
        source_norm=source.norm(),
        max_residual=float(np.max(residual_arr)),
        mean_residual=float(np.mean(residual_arr)),
        failed_points=failed,
        iterations=iterations,
    )
    emit(
        "transform",
        kind=label,
        points=n * n,
        failed=len(failed),
        max_residual=result.max_residual,
        plancherel_defect=result.plancherel_defect,
    )
    logger.info(
        f"{label}: {n * n} points, {iterations} iterations, "
        f"plancherel defect {result.plancherel_defect:.3e}"
    )
    return result


def forward_R(q: Field, cfg: SolverConfig | None = None, boundary_tol: float | None = None) -> ScatteringResult:
    """
    Forward scattering transform r = R q on the dual lattice of q's grid.

    For every lattice point k, mu is solved at k and
    r(k) = -(1/pi) * integral e_k q conj(mu1) dm is evaluated by quadrature.

    Args:
        q: Potential on a z-grid.
        cfg: Solver policy; ``cfg.workers`` threads share the sweep.
        boundary_tol: Override of the box-truncation guard.

    Returns:
        ScatteringResult carrying r.

    Raises:
        BoundaryMassError: q does not decay inside the box.
        ScatteringError: More than 0.1% of the lattice failed to solve.
    """
    cfg = cfg or SolverConfig()
    q.require("z")
    check_boundary(q, boundary_tol)
    target = Field.zeros(q.grid.dual(), "k")
    if not np.any(q.data):
        return _assemble([(0j, 0.0, 0)] * (q.grid.n**2), q, target, "forward")
    ks = target.grid.points.ravel().tolist()
    values = parallel_map(lambda k: _r_value(q, k, cfg), ks, cfg.workers)
    return _assemble(values, q, target, "forward")


def inverse_I(r: Field, cfg: SolverConfig | None = None, boundary_tol: float | None = None) -> ScatteringResult:
    """
    Inverse scattering transform q = I r on the dual lattice of r's grid.

    For every z, nu is solved at z and
    q(z) = -(1/pi) * integral e_{-k}(z) r(k) nu1(z, k) dm(k).
    """
    cfg = cfg or SolverConfig()
    r.require("k")
    check_boundary(r, boundary_tol)
    target = Field.zeros(r.grid.dual(), "z")
    if not np.any(r.data):
        return _assemble([(0j, 0.0, 0)] * (r.grid.n**2), r, target, "inverse")
    zs = target.grid.points.ravel().tolist()
    values = parallel_map(lambda z: _q_value(r, z, cfg), zs, cfg.workers)
    return _assemble(values, r, target, "inverse")


def forward_at(q: Field, ks: Sequence[complex], cfg: SolverConfig | None = None) -> np.ndarray:
    """r(k) at selected spectral points; failures raise."""
    cfg = cfg or SolverConfig()
    q.require("z")
    values = parallel_map(lambda k: _r_value(q, k, cfg), list(ks), cfg.workers)
    return _collect(values)


def inverse_at(r: Field, zs: Sequence[complex], cfg: SolverConfig | None = None) -> np.ndarray:
    """q(z) at selected physical points, for probe-set sup norms."""
    cfg = cfg or SolverConfig()
    r.require("k")
    values = parallel_map(lambda z: _q_value(r, z, cfg), list(zs), cfg.workers)
    return _collect(values)


def _collect(values: list[tuple[complex, float, int] | NumericalFailure]) -> np.ndarray:
    out = np.empty(len(values), dtype=np.complex128)
    for i, outcome in enumerate(values):
        if isinstance(outcome, NumericalFailure):
            raise outcome
        out[i] = outcome[0]
    return out


def _annulus_fit(f: Field) -> FarFieldFit:
    # Basis 1/z, 1/z^2 and conj(z); the last absorbs any residual periodic gauge term
    radius = np.abs(f.grid.points)
    mask = (radius > f.grid.L / 4) & (radius < f.grid.L / 2)
    z = f.grid.points[mask]
    design = np.stack([1.0 / z, 1.0 / z**2, np.conj(z)], axis=1)
    target = f.data[mask]
    condition = float(np.linalg.cond(design))
    if not np.isfinite(condition) or condition > MAX_FIT_CONDITION:
        raise FitConditioningError(f"far-field design matrix has condition {condition:.3e}")
    coeffs, *_ = np.linalg.lstsq(design, target, rcond=None)
    fitted = design @ coeffs
    scale = np.linalg.norm(target)
    residual = float(np.linalg.norm(target - fitted) / scale) if scale > 0 else 0.0
    return {"coefficients": [complex(c) for c in coeffs], "residual": residual, "condition": condition}


def farfield_fit(q: Field, k: complex, cfg: SolverConfig | None = None) -> FarFieldFit:
    """Fit mu2 ~ c/z + d/z^2 + e conj(z) on the annulus; c = -r(k)/2."""
    sol = solve_mu(q, k, cfg or SolverConfig())
    if not np.any(sol.mu2.data):
        return {"coefficients": [0j, 0j, 0j], "residual": 0.0, "condition": 0.0}
    return _annulus_fit(sol.mu2)


def extract_r_farfield(q: Field, k: complex, cfg: SolverConfig | None = None) -> complex:
    """Independent estimate of r(k) from the 1/z tail of mu2."""
    return -2.0 * farfield_fit(q, k, cfg)["coefficients"][0]


def farfield_coefficients(q: Field, k: complex, cfg: SolverConfig | None = None) -> dict[str, complex]:
    """
    Leading far-field coefficients of both components of mu.

    Returns:
        ``mu1``: a in mu1 - 1 ~ a/z, and ``mu2``: c in mu2 ~ c/z.
    """
    sol = solve_mu(q, k, cfg or SolverConfig())
    out = {}
    for name, f in (("mu1", sol.mu1 - 1.0), ("mu2", sol.mu2)):
        if not np.any(f.data):
            out[name] = 0j
            continue
        out[name] = _annulus_fit(f)["coefficients"][0]
    return out


def symmetry_check(
    q: Field, cfg: SolverConfig | None = None, boundary_tol: float | None = None
) -> SymmetryReport:
    """
    Transform q under the symmetries of R and compare with predicted images.

    Reflections act on the periodic lattice (index j -> -j mod n), where
    z -> -z and k -> -k are exact.
    """
    cfg = cfg or SolverConfig()
    r = forward_R(q, cfg, boundary_tol).field

    def discrepancy(transformed: Field, predicted: Field) -> float:
        image = forward_R(transformed, cfg, boundary_tol).field
        return image.relative_error(predicted)

    negation = discrepancy(-q, -r)
    reflection = discrepancy(-q.reflect(), -r.reflect())
    conj_image = forward_R(q.conj(), cfg, boundary_tol).field
    statement = conj_image.relative_error(-r.conj())
    proof = conj_image.relative_error(r.reflect().conj())
    dual_data = discrepancy(q.reflect().conj(), r.conj())
    supported = "conj(r(-k))" if proof < statement else "-conj(r(k))"
    logger.info(
        f"Symmetry check: negation {negation:.2e}, reflection {reflection:.2e}, "
        f"conjugation {statement:.2e} (statement) / {proof:.2e} (proof)"
    )
    return {
        "negation": negation,
        "reflection": reflection,
        "conjugation_statement": statement,
        "conjugation_proof": proof,
        "supported_conjugation": supported,
        "dual_data": dual_data,
    }


def lipschitz_ratio(
    q: Field, dq: Field, cfg: SolverConfig | None = None, boundary_tol: float | None = None
) -> float:
    """||R(q + dq) - R(q)|| / ||dq||, both transforms under the same box-truncation guard."""
    cfg = cfg or SolverConfig()
    q.check_compatible(dq)
    size = dq.norm()
    if size == 0:
        return 0.0
    base = forward_R(q, cfg, boundary_tol).field
    moved = forward_R(q + dq, cfg, boundary_tol).field
    return (moved - base).norm() / size
