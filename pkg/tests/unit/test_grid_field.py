"""Unit tests for grids, fields and the DSF1 format."""

import math

import numpy as np
import pytest

from dsii_scattering.errors import (
    BoundaryMassError,
    FieldFormatError,
    GridMismatchError,
    NonFiniteFieldError,
    SpaceMismatchError,
)
from dsii_scattering.initial_data import gaussian
from dsii_scattering.spectral.field import (
    Field,
    boundary_mass,
    check_boundary,
    read_field,
    read_field_with_meta,
    write_field,
)
from dsii_scattering.spectral.grid import GridSpec


class TestGridSpec:
    """Test the periodic box."""

    def test_spacing_and_area(self):
        """Test spacing, cell area and box area."""
        grid = GridSpec(n=64, L=8.0)
        assert grid.h == pytest.approx(0.25)
        assert grid.cell_area == pytest.approx(0.0625)
        assert grid.area == pytest.approx(256.0)

    def test_dual_spacing(self):
        """Test that the dual lattice has spacing pi/(2L)."""
        grid = GridSpec(n=64, L=8.0)
        dual = grid.dual()
        assert dual.h == pytest.approx(math.pi / 16.0)
        assert dual.L == pytest.approx(64 * math.pi / 32.0)

    def test_dual_of_dual(self):
        """Test that dualising twice returns the original box."""
        grid = GridSpec(n=32, L=5.0)
        assert grid.dual().dual().matches(grid)

    def test_odd_n_rejected(self):
        """Test that odd sample counts are rejected."""
        with pytest.raises(ValueError, match="even"):
            GridSpec(n=33, L=4.0)

    def test_points_layout(self):
        """Test that samples are indexed [iy, ix] with x = Re z."""
        grid = GridSpec(n=8, L=4.0)
        assert grid.points[0, 0] == complex(-4.0, -4.0)
        assert grid.points[0, 1] == complex(-3.0, -4.0)
        assert grid.points[1, 0] == complex(-4.0, -3.0)

    def test_nearest_index_wraps(self):
        """Test that nearest_index snaps and wraps periodically."""
        grid = GridSpec(n=8, L=4.0)
        assert grid.nearest_index(complex(0.1, -0.2)) == (4, 4)
        assert grid.nearest_index(complex(4.0, 0.0)) == (4, 0)

    def test_nyquist_mask(self):
        """Test that the mask covers the zero mode and the Nyquist row and column."""
        grid = GridSpec(n=8, L=4.0)
        mask = grid.nyquist_mask
        assert mask[0, 0]
        assert mask[4, :].all()
        assert mask[:, 4].all()
        assert mask.sum() == 1 + 8 + 8 - 1

    def test_t_max(self):
        """Test the full-lattice oscillation budget."""
        grid = GridSpec(n=64, L=8.0)
        assert grid.t_max() == pytest.approx(64.0 / (128.0 * math.pi))


class TestField:
    """Test sampled fields."""

    def test_shape_mismatch(self):
        """Test that data of the wrong shape is rejected."""
        with pytest.raises(GridMismatchError):
            Field(GridSpec(n=8, L=1.0), "z", np.zeros((4, 4)))

    def test_non_finite_rejected(self):
        """Test that NaN samples are rejected."""
        data = np.zeros((8, 8))
        data[2, 3] = np.nan
        with pytest.raises(NonFiniteFieldError):
            Field(GridSpec(n=8, L=1.0), "z", data)

    def test_space_tags_must_agree(self):
        """Test that z- and k-fields cannot be combined."""
        grid = GridSpec(n=8, L=1.0)
        with pytest.raises(SpaceMismatchError):
            Field.zeros(grid, "z") + Field.zeros(grid, "k")

    def test_grids_must_agree(self):
        """Test that fields on different boxes cannot be combined."""
        with pytest.raises(GridMismatchError):
            Field.zeros(GridSpec(n=8, L=1.0), "z") * Field.zeros(GridSpec(n=8, L=2.0), "z")

    def test_require(self):
        """Test the space guard."""
        f = Field.zeros(GridSpec(n=8, L=1.0), "k")
        assert f.require("k") is f
        with pytest.raises(SpaceMismatchError, match="expected a z-field"):
            f.require("z")

    def test_norm_of_constant(self):
        """Test the cell-area weighted L2 norm."""
        grid = GridSpec(n=16, L=3.0)
        assert Field.constant(grid, "z", 1.0).norm() == pytest.approx(6.0)

    def test_integral_of_gaussian(self):
        """Test midpoint quadrature of a Gaussian."""
        f = gaussian(GridSpec(n=64, L=8.0))
        assert f.integral() == pytest.approx(math.pi, rel=1e-12)

    def test_arithmetic(self):
        """Test scalar and field arithmetic."""
        grid = GridSpec(n=8, L=1.0)
        f = Field.constant(grid, "z", 2.0)
        g = 1.0 + f * 3.0 - f / 2.0
        assert np.allclose(g.data, 6.0)
        assert np.allclose((-f).data, -2.0)
        assert np.allclose((1.0 - f).data, -1.0)

    def test_reflect(self):
        """Test that reflection maps z to -z away from the wrapped row and column."""
        grid = GridSpec(n=16, L=4.0)
        f = Field.from_function(grid, "z", lambda z: z)
        reflected = f.reflect()
        assert np.allclose(reflected.data[1:, 1:], -f.data[1:, 1:])
        assert np.array_equal(reflected.reflect().data, f.data)

    def test_sample(self):
        """Test nearest-lattice sampling."""
        grid = GridSpec(n=16, L=4.0)
        f = Field.from_function(grid, "z", lambda z: z)
        assert f.sample(complex(1.02, -0.49)) == complex(1.0, -0.5)

    def test_relative_error_against_zero(self):
        """Test that relative_error is absolute when the reference vanishes."""
        grid = GridSpec(n=8, L=2.0)
        f = Field.constant(grid, "z", 1.0)
        assert f.relative_error(Field.zeros(grid, "z")) == pytest.approx(f.norm())


class TestBoundaryGuard:
    """Test the box-truncation guard."""

    def test_decayed_field_passes(self):
        """Test that a well-contained Gaussian passes the default guard."""
        f = gaussian(GridSpec(n=64, L=12.0))
        assert boundary_mass(f) < 1e-10
        check_boundary(f)

    def test_constant_field_fails(self):
        """Test that a field filling the box is rejected."""
        f = Field.constant(GridSpec(n=16, L=4.0), "z", 1.0)
        with pytest.raises(BoundaryMassError, match="enlarge the box"):
            check_boundary(f)

    def test_zero_field(self):
        """Test that the zero field has no boundary mass."""
        assert boundary_mass(Field.zeros(GridSpec(n=8, L=1.0), "z")) == 0.0

    def test_explicit_tolerance(self):
        """Test that an explicit tolerance overrides the setting."""
        f = gaussian(GridSpec(n=32, L=4.0))
        with pytest.raises(BoundaryMassError):
            check_boundary(f, 1e-12)
        check_boundary(f, 0.1)


class TestFieldIO:
    """Test DSF1 reading and writing."""

    def test_write_then_read(self, tmp_path):
        """Test that a field and its metadata survive the file format."""
        grid = GridSpec(n=16, L=3.0)
        f = Field.from_function(grid, "k", lambda k: np.exp(-np.abs(k) ** 2) * (1 + 2j))
        path = tmp_path / "r.dsf"
        write_field(path, f, {"config_hash": "abc", "version": "0.1.0"})
        back, meta = read_field_with_meta(path)
        assert back.space == "k"
        assert back.grid.matches(grid)
        assert np.array_equal(back.data, f.data)
        assert meta["config_hash"] == "abc"
        assert meta["n"] == 16

    def test_bad_magic(self, tmp_path):
        """Test that files without the DSF1 magic are rejected."""
        path = tmp_path / "bad.dsf"
        path.write_bytes(b'XXXX {"n": 8, "L": 1.0, "space": "z"}\n')
        with pytest.raises(FieldFormatError, match="bad magic"):
            read_field(path)

    def test_truncated_body(self, tmp_path):
        """Test that a short body is rejected."""
        path = tmp_path / "short.dsf"
        write_field(path, Field.zeros(GridSpec(n=8, L=1.0), "z"))
        path.write_bytes(path.read_bytes()[:-16])
        with pytest.raises(FieldFormatError, match="bytes"):
            read_field(path)
