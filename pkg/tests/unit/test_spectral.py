"""Unit tests for the Fourier pair and the Cauchy and Beurling transforms."""

import numpy as np
import pytest

from dsii_scattering.errors import AliasingError, SpaceMismatchError
from dsii_scattering.initial_data import gaussian
from dsii_scattering.spectral.field import Field
from dsii_scattering.spectral.grid import GridSpec
from dsii_scattering.spectral.operators import (
    beurling_S,
    cauchy_P,
    cauchy_P_adjoint,
    cauchy_Pbar,
    check_resolvable,
    d,
    dbar,
    ek_multiply,
    ek_value,
    fourier_forward,
    fourier_inverse,
    pairing,
    unimodular,
)
from dsii_scattering.toolkit import self_dual_grid


def _bump(grid: GridSpec) -> Field:
    """Smooth non-radial test field."""
    return Field.from_function(
        grid, "z", lambda z: (1 + 0.5j * z) * np.exp(-np.abs(z - 0.3 + 0.2j) ** 2)
    )


class TestFourierPair:
    """Test the forward and inverse transforms."""

    def test_inverse_undoes_forward(self):
        """Test that the inverse recovers the input to rounding."""
        f = _bump(GridSpec(n=32, L=5.0))
        back = fourier_inverse(fourier_forward(f))
        assert back.space == "z"
        assert back.grid.matches(f.grid)
        assert back.relative_error(f) < 1e-12

    def test_gaussian_transform(self):
        """Test that the unit Gaussian maps to minus the unit Gaussian."""
        grid = self_dual_grid(64)
        fk = fourier_forward(gaussian(grid))
        expected = Field.from_function(fk.grid, "k", lambda k: -np.exp(-np.abs(k) ** 2))
        assert fk.relative_error(expected) < 1e-8

    def test_plancherel(self):
        """Test that the transform preserves the weighted L2 norm."""
        f = _bump(GridSpec(n=48, L=6.0))
        assert fourier_forward(f).norm() == pytest.approx(f.norm(), rel=1e-12)

    def test_space_tags(self):
        """Test that the transforms check their input space."""
        f = Field.zeros(GridSpec(n=8, L=1.0), "k")
        with pytest.raises(SpaceMismatchError):
            fourier_forward(f)
        with pytest.raises(SpaceMismatchError):
            fourier_inverse(Field.zeros(f.grid, "z"))

    def test_k_range_guard(self):
        """Test that requesting k beyond the dual lattice raises."""
        f = _bump(GridSpec(n=16, L=4.0))
        with pytest.raises(AliasingError, match="dual half-width"):
            fourier_forward(f, k_max=100.0)
        fourier_forward(f, k_max=1.0)


class TestMultipliers:
    """Test dbar, d, P and S on periodic data."""

    def test_P_inverts_dbar(self):
        """Test that P is a right inverse of dbar on derivatives."""
        g = _bump(GridSpec(n=64, L=8.0))
        dg = dbar(g)
        assert dbar(cauchy_P(dg)).relative_error(dg) < 1e-10

    def test_Pbar_inverts_d(self):
        """Test that Pbar is a right inverse of d on derivatives."""
        g = _bump(GridSpec(n=64, L=8.0))
        dg = d(g)
        assert d(cauchy_Pbar(dg)).relative_error(dg) < 1e-10

    def test_beurling_maps_dbar_to_d(self):
        """Test that S takes dbar g to d g."""
        g = _bump(GridSpec(n=64, L=8.0))
        assert beurling_S(dbar(g)).relative_error(d(g)) < 1e-10

    def test_cauchy_far_field(self):
        """Test that compensated P decays like integral f / (pi z)."""
        grid = GridSpec(n=128, L=16.0)
        f = gaussian(grid)
        pf = cauchy_P(f, compensate_mean=True)
        z = complex(4.0, 0.0)
        assert abs(pf.sample(z) - f.integral() / (np.pi * z)) < 1e-2 * abs(1 / z)

    def test_conjugation_symmetry(self):
        """Test that conj(P f) equals Pbar(conj f)."""
        f = _bump(GridSpec(n=32, L=4.0))
        for compensate in (False, True):
            lhs = cauchy_P(f, compensate_mean=compensate).conj()
            rhs = cauchy_Pbar(f.conj(), compensate_mean=compensate)
            assert lhs.relative_error(rhs) < 1e-12

    @pytest.mark.parametrize("compensate", [False, True])
    def test_adjoint_under_pairing(self, compensate):
        """Test that <P f, g> = <f, P* g> with and without compensation."""
        grid = GridSpec(n=32, L=4.0)
        f = _bump(grid)
        g = Field.from_function(grid, "z", lambda z: np.exp(-np.abs(z + 0.5) ** 2) * (2 - 1j))
        lhs = pairing(cauchy_P(f, compensate_mean=compensate), g)
        rhs = pairing(f, cauchy_P_adjoint(g, compensate_mean=compensate))
        assert abs(lhs - rhs) < 1e-10 * max(1.0, abs(lhs))


class TestUnimodular:
    """Test the oscillating factors e_k."""

    def test_inverse_pair(self):
        """Test that e_k e_-k = 1 with unit modulus."""
        grid = GridSpec(n=16, L=2.0)
        k = complex(0.7, -1.3)
        ek = unimodular(grid, k)
        assert np.allclose(ek * unimodular(grid, -k), 1.0)
        assert np.allclose(np.abs(ek), 1.0)

    def test_point_value_matches_array(self):
        """Test that ek_value agrees with the sampled array."""
        grid = GridSpec(n=16, L=2.0)
        k = complex(1.1, 0.4)
        z = complex(grid.points[3, 11])
        assert ek_value(k, z) == pytest.approx(unimodular(grid, k)[3, 11], abs=1e-13)

    def test_symmetric_in_arguments(self):
        """Test that e_k(z) = e_z(k)."""
        assert ek_value(0.3 + 2j, -1 + 0.5j) == pytest.approx(ek_value(-1 + 0.5j, 0.3 + 2j))

    def test_multiply(self):
        """Test pointwise multiplication on a z-field."""
        grid = GridSpec(n=16, L=2.0)
        f = Field.constant(grid, "z", 2.0)
        out = ek_multiply(f, 0.5j)
        assert np.allclose(out.data, 2.0 * unimodular(grid, 0.5j))

    def test_resolvable_guard(self):
        """Test that parameters beyond the dual lattice raise."""
        grid = GridSpec(n=16, L=4.0)
        check_resolvable(grid, complex(1.0, -1.0))
        with pytest.raises(AliasingError, match="oscillates faster"):
            check_resolvable(grid, complex(0.0, 50.0))
