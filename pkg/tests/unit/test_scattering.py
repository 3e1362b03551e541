"""Unit tests for the forward and inverse scattering transforms."""

import numpy as np
import pytest

from dsii_scattering.config import SolverConfig
from dsii_scattering.errors import BoundaryMassError, SpaceMismatchError
from dsii_scattering.expansions import predicted_mu1_farfield
from dsii_scattering.initial_data import gaussian, two_bump
from dsii_scattering.scattering import (
    extract_r_farfield,
    farfield_coefficients,
    forward_at,
    forward_R,
    inverse_I,
    lipschitz_ratio,
    symmetry_check,
)
from dsii_scattering.spectral.field import Field
from dsii_scattering.spectral.grid import GridSpec
from dsii_scattering.spectral.operators import fourier_forward
from dsii_scattering.toolkit import self_dual_grid

# Coarse test boxes leave about 2e-3 of the norm near the edge
SMALL_BOX_TOL = 1e-2


class TestForward:
    """Test forward_R."""

    def test_zero_potential(self, small_grid, solver_cfg):
        """Test that q = 0 maps to r = 0 with no defect."""
        result = forward_R(Field.zeros(small_grid, "z"), solver_cfg)
        assert result.field.space == "k"
        assert not np.any(result.field.data)
        assert result.plancherel_defect == 0.0
        assert result.failed_points == []

    def test_small_data_is_linear(self, small_grid, solver_cfg):
        """Test that R agrees with the Fourier transform to first order."""
        q = gaussian(small_grid, amplitude=1e-3)
        r = forward_R(q, solver_cfg, boundary_tol=SMALL_BOX_TOL).field
        assert r.relative_error(fourier_forward(q)) < 1e-4

    def test_plancherel(self, weak_gaussian, solver_cfg):
        """Test that R preserves the L2 norm."""
        result = forward_R(weak_gaussian, solver_cfg, boundary_tol=SMALL_BOX_TOL)
        assert result.plancherel_defect < 1e-2
        assert result.max_residual <= solver_cfg.tol

    def test_rejects_k_field(self, small_grid):
        """Test that a k-field cannot be transformed forward."""
        with pytest.raises(SpaceMismatchError):
            forward_R(Field.zeros(small_grid, "k"))

    def test_rejects_wide_data(self, small_grid):
        """Test that data reaching the box edge is refused."""
        with pytest.raises(BoundaryMassError):
            forward_R(gaussian(small_grid, width=4.0))

    def test_pointwise_matches_sweep(self, weak_gaussian, solver_cfg):
        """Test that forward_at reproduces the lattice value."""
        r = forward_R(weak_gaussian, solver_cfg, boundary_tol=SMALL_BOX_TOL).field
        k = complex(r.grid.points[14, 19])
        value = forward_at(weak_gaussian, [k], solver_cfg)[0]
        assert value == pytest.approx(r.data[14, 19], abs=1e-12)

    def test_summary_keys(self, weak_gaussian, solver_cfg):
        """Test the machine-readable summary."""
        summary = forward_R(weak_gaussian, solver_cfg, boundary_tol=SMALL_BOX_TOL).summary()
        assert set(summary) == {
            "l2_in",
            "l2_out",
            "plancherel_defect",
            "max_residual",
            "mean_residual",
            "failed_points",
        }
        assert summary["l2_in"] == pytest.approx(weak_gaussian.norm())


class TestInverse:
    """Test inverse_I."""

    def test_zero_data(self, small_grid, solver_cfg):
        """Test that r = 0 maps to q = 0."""
        result = inverse_I(Field.zeros(small_grid.dual(), "k"), solver_cfg)
        assert result.field.space == "z"
        assert not np.any(result.field.data)

    def test_rejects_z_field(self, small_grid):
        """Test that a z-field cannot be transformed back."""
        with pytest.raises(SpaceMismatchError):
            inverse_I(Field.zeros(small_grid, "z"))

    def test_roundtrip(self, solver_cfg):
        """Test that I(R q) recovers q."""
        grid = self_dual_grid(48)
        q = gaussian(grid, amplitude=0.5)
        r = forward_R(q, solver_cfg, boundary_tol=SMALL_BOX_TOL).field
        back = inverse_I(r, solver_cfg, boundary_tol=SMALL_BOX_TOL).field
        assert back.grid.matches(grid)
        assert back.relative_error(q) < 1e-2


class TestSymmetries:
    """Test the symmetry report and the Lipschitz ratio."""

    def test_negation_and_reflection(self, weak_gaussian, solver_cfg):
        """Test that negation and reflection act exactly on the lattice."""
        report = symmetry_check(weak_gaussian, solver_cfg, boundary_tol=SMALL_BOX_TOL)
        assert report["negation"] < 1e-6
        assert report["reflection"] < 1e-6
        assert report["supported_conjugation"] in ("conj(r(-k))", "-conj(r(k))")

    def test_lipschitz_zero_perturbation(self, weak_gaussian):
        """Test that a zero perturbation gives ratio zero."""
        assert lipschitz_ratio(weak_gaussian, Field.zeros(weak_gaussian.grid, "z")) == 0.0

    def test_farfield_of_zero_potential(self, small_grid):
        """Test that q = 0 has vanishing far-field coefficients."""
        coeffs = farfield_coefficients(Field.zeros(small_grid, "z"), 1.0)
        assert coeffs == {"mu1": 0j, "mu2": 0j}

    def test_lipschitz_small_perturbation(self, weak_gaussian, solver_cfg):
        """Test that a small off-center perturbation moves r by about its own size."""
        dq = gaussian(weak_gaussian.grid, amplitude=1e-3, width=0.8, center=0.3 - 0.2j)
        ratio = lipschitz_ratio(weak_gaussian, dq, solver_cfg, boundary_tol=SMALL_BOX_TOL)
        halved = lipschitz_ratio(weak_gaussian, dq * 0.5, solver_cfg, boundary_tol=SMALL_BOX_TOL)
        assert 0.5 < ratio < 1.5
        assert halved == pytest.approx(ratio, rel=1e-2)

    def test_conjugation_reading_on_asymmetric_data(self, small_grid, solver_cfg):
        """Test that only conj(r(-k)) describes R(conj q) for an asymmetric profile."""
        q = two_bump(small_grid) * 0.5
        report = symmetry_check(q, solver_cfg, boundary_tol=SMALL_BOX_TOL)
        assert report["supported_conjugation"] == "conj(r(-k))"
        assert report["conjugation_proof"] < 1e-6
        assert report["conjugation_statement"] > 0.5


@pytest.mark.slow
class TestFarField:
    """Test the far-field estimates of r and of the mu1 coefficient."""

    def test_extract_r_matches_quadrature(self, solver_cfg):
        """Test the 1/z tail of mu2 against r from the quadrature at k = 1 + i."""
        q = gaussian(GridSpec(n=256, L=16.0))
        k = 1.0 + 1.0j
        expected = forward_at(q, [k], solver_cfg)[0]
        estimate = extract_r_farfield(q, k, solver_cfg)
        assert abs(expected) > 1e-2
        assert abs(estimate - expected) < 0.02 * abs(expected)

    def test_mu1_coefficient_matches_prediction(self, solver_cfg):
        """Test the fitted 1/z coefficient of mu1 - 1 against P_k(|r|^2)(k)/4."""
        q = gaussian(GridSpec(n=64, L=12.0))
        r = forward_R(q, SolverConfig(workers=2)).field
        k = complex(r.grid.points[r.grid.nearest_index(0.5 + 0.5j)])
        fitted = farfield_coefficients(q, k, solver_cfg)["mu1"]
        predicted = predicted_mu1_farfield(r, k)
        assert abs(predicted) > 1e-2
        assert abs(fitted - predicted) < 0.02 * abs(predicted)
