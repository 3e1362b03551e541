"""Unit tests for the split-step reference solver."""

import numpy as np
import pytest

from dsii_scattering.config import StepConfig
from dsii_scattering.errors import OscillationBudgetError, ValidationFailure
from dsii_scattering.evolution import gaussian_linear_u
from dsii_scattering.initial_data import gaussian, two_bump
from dsii_scattering.reference import (
    dsii_int_potential,
    linear_group,
    nonlocal_g,
    potential,
    split_step,
    split_step_run,
)
from dsii_scattering.spectral.field import Field
from dsii_scattering.spectral.grid import GridSpec


class TestLinearGroup:
    """Test the free propagator."""

    def test_matches_gaussian_oracle(self):
        """Test the multiplier against the closed-form Gaussian solution."""
        grid = GridSpec(n=128, L=20.0)
        u = linear_group(gaussian(grid, amplitude=0.5, width=2.0), 0.5)
        assert u.relative_error(gaussian_linear_u(grid, 0.5, 2.0, 0.5)) < 1e-8

    def test_group_property(self):
        """Test that S(s) S(t) = S(s + t)."""
        grid = GridSpec(n=64, L=12.0)
        q = gaussian(grid, width=1.5)
        assert linear_group(linear_group(q, 0.1), 0.2).relative_error(linear_group(q, 0.3)) < 1e-12

    def test_budget(self):
        """Test that large times on a coarse box are refused."""
        with pytest.raises(OscillationBudgetError):
            linear_group(gaussian(GridSpec(n=16, L=4.0)), 100.0)


class TestPotential:
    """Test the nonlocal term."""

    def test_two_routes_agree(self, medium_grid):
        """Test that the Beurling and Cauchy routes give the same potential."""
        q = two_bump(medium_grid)
        assert potential(q).relative_error(dsii_int_potential(q)) < 1e-12

    def test_potential_is_twice_real_part(self, medium_grid):
        """Test that g + conj g = 2 Re g."""
        q = two_bump(medium_grid)
        g = nonlocal_g(q)
        assert potential(q).relative_error(g + g.conj()) < 1e-14
        assert np.allclose(potential(q).data.imag, 0.0)

    def test_zero_field(self, medium_grid):
        """Test that q = 0 has zero potential."""
        assert potential(Field.zeros(medium_grid, "z")).norm() == 0.0


class TestSplitStep:
    """Test the Strang scheme."""

    def test_time_reversible(self):
        """Test that running forward then backward recovers the data."""
        grid = GridSpec(n=64, L=8.0)
        q0 = gaussian(grid, amplitude=0.5)
        cfg = StepConfig(dt=0.01)
        back = split_step(split_step(q0, 0.1, cfg), -0.1, cfg)
        assert back.relative_error(q0) < 1e-10

    def test_conserves_l2(self):
        """Test that each step is unitary."""
        grid = GridSpec(n=64, L=8.0)
        q0 = two_bump(grid)
        q1 = split_step(q0, 0.05, StepConfig(dt=0.005))
        assert q1.norm() == pytest.approx(q0.norm(), rel=1e-12)

    def test_telemetry_records(self):
        """Test the step records, including the initial row."""
        grid = GridSpec(n=32, L=6.0)
        q0 = gaussian(grid, amplitude=0.5)
        _, records = split_step_run(q0, 0.03, StepConfig(dt=0.01), telemetry_every=1)
        assert [rec["step"] for rec in records] == [0, 1, 2, 3]
        assert records[-1]["t"] == pytest.approx(0.03)
        assert records[0]["l2_norm"] == pytest.approx(q0.norm())

    def test_no_telemetry_by_default(self, small_grid):
        """Test that no records are collected without a stride."""
        _, records = split_step_run(gaussian(small_grid, amplitude=0.5), 0.01, StepConfig(dt=0.005))
        assert records == []

    def test_zero_time(self, small_grid):
        """Test that t = 0 returns the data unchanged."""
        q0 = gaussian(small_grid, amplitude=0.5)
        assert np.array_equal(split_step(q0, 0.0).data, q0.data)

    def test_zero_field_stays_zero(self, small_grid):
        """Test that the zero solution is stationary."""
        q = split_step(Field.zeros(small_grid, "z"), 0.02, StepConfig(dt=0.01))
        assert q.norm() == 0.0

    def test_budget(self):
        """Test that the reference solver shares the oscillation budget."""
        with pytest.raises(OscillationBudgetError):
            split_step(gaussian(GridSpec(n=16, L=4.0)), 100.0)

    def test_step_phase_limit(self):
        """Test that a step whose nonlinear phase exceeds pi/4 is refused."""
        grid = GridSpec(n=32, L=6.0)
        q0 = gaussian(grid, amplitude=10.0)
        with pytest.raises(ValidationFailure, match="reduce dt"):
            split_step(q0, 0.05, StepConfig(dt=0.05))

    def test_step_phase_limit_is_per_step(self):
        """Test that the same data runs once dt is small enough."""
        grid = GridSpec(n=32, L=6.0)
        q0 = gaussian(grid, amplitude=10.0)
        q1 = split_step(q0, 0.05, StepConfig(dt=0.001))
        assert q1.norm() == pytest.approx(q0.norm(), rel=1e-10)
