"""End-to-end checks of the scattering pipeline against independent solvers."""

import math

import pytest

from dsii_scattering import ScatteringToolkit
from dsii_scattering.config import SolverConfig
from dsii_scattering.evolution import default_probe_set, effective_t_max
from dsii_scattering.initial_data import gaussian
from dsii_scattering.spectral.grid import GridSpec
from dsii_scattering.toolkit import self_dual_grid


@pytest.mark.integration
@pytest.mark.slow
class TestCrossOracle:
    """Inverse-scattering evolution against the split-step reference."""

    @pytest.fixture(scope="class")
    def kit(self):
        """Toolkit on a 64-point self-dual box."""
        with ScatteringToolkit(self_dual_grid(64), SolverConfig(workers=2), boundary_tol=1e-4) as toolkit:
            yield toolkit

    def test_roundtrip(self, kit):
        """Test that forward then inverse recovers a unit Gaussian."""
        report, _, _ = kit.roundtrip(kit.gaussian())
        assert report["forward"]["plancherel_defect"] < 1e-3
        assert report["rel_l2_error"] < 1e-3
        assert report["forward"]["failed_points"] == []

    def test_compare_short_time(self, kit):
        """Test agreement with the split-step solution at small t."""
        report, q_scat, q_ref = kit.compare(kit.gaussian(amplitude=0.5), 0.1)
        assert q_scat.grid.matches(q_ref.grid)
        assert report["rel_l2"] < 1e-2 or report["modulus_rel_l2"] < 5e-3
        assert report["l2_defect_scattering"] < 2e-3
        assert report["l2_defect_reference"] < 2e-3


@pytest.mark.integration
@pytest.mark.slow
class TestLargeTime:
    """Large-time gap to the linear solution on a fixed point set."""

    def test_point_table(self):
        """Test the point-mode table shape and its decay."""
        grid = GridSpec(n=64, L=32.0)
        with ScatteringToolkit(grid, SolverConfig(workers=2), boundary_tol=1e-4) as kit:
            q0 = gaussian(grid, amplitude=0.5, width=4.0)
            tlist = [0.75, 1.5, 3.0]
            assert effective_t_max(kit.forward(q0).field) > tlist[-1]
            rows = kit.asymptotics(q0, tlist, probe=default_probe_set(grid))
        assert [row["t"] for row in rows] == tlist
        for row in rows:
            assert math.isnan(row["l2_conservation_defect"])
            assert row["t_times_gap"] == pytest.approx(row["t"] * row["sup_gap"])
        assert rows[-1]["t_times_gap"] < rows[0]["t_times_gap"]
