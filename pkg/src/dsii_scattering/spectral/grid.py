"""Square periodic computational box and its spectral lattice."""

import math
from functools import cached_property

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator


class GridSpec(BaseModel):
    """
    The box [-L, L)^2 sampled with n points per axis.

    Sample (iy, ix) sits at x + iy with x = -L + ix*h and y = -L + iy*h.
    The same class describes k-lattices; ``dual()`` maps a z-box to the
    k-lattice of the discrete Fourier pair and back.
    """

    model_config = ConfigDict(frozen=True, extra="forbid")

    n: int = Field(..., ge=8, description="Samples per axis (even)")
    L: float = Field(..., gt=0, description="Box half-width")

    @field_validator("n")
    @classmethod
    def _check_even(cls, v: int) -> int:
        if v % 2:
            raise ValueError(f"n must be even, got {v}")
        return v

    @property
    def h(self) -> float:
        """Sample spacing."""
        return 2.0 * self.L / self.n

    @property
    def cell_area(self) -> float:
        return self.h * self.h

    @property
    def area(self) -> float:
        """Area of the periodic box."""
        return 4.0 * self.L * self.L

    @property
    def shape(self) -> tuple[int, int]:
        return (self.n, self.n)

    def dual(self) -> "GridSpec":
        """Lattice paired with this box by the discrete transform (spacing pi/(2L))."""
        return GridSpec(n=self.n, L=self.n * math.pi / (4.0 * self.L))

    def matches(self, other: "GridSpec") -> bool:
        """Equality up to rounding in L (dual of dual is not bit-exact)."""
        return self.n == other.n and math.isclose(self.L, other.L, rel_tol=1e-12)

    @cached_property
    def axis(self) -> np.ndarray:
        return -self.L + self.h * np.arange(self.n, dtype=np.float64)

    @cached_property
    def mesh(self) -> tuple[np.ndarray, np.ndarray]:
        """(X, Y) coordinate arrays indexed [iy, ix]."""
        x, y = np.meshgrid(self.axis, self.axis, indexing="xy")
        return x, y

    @cached_property
    def points(self) -> np.ndarray:
        """Complex sample positions x + iy."""
        x, y = self.mesh
        return x + 1j * y

    @cached_property
    def frequencies(self) -> tuple[np.ndarray, np.ndarray]:
        """Angular FFT frequencies (xi_x, xi_y) indexed [iy, ix]."""
        xi = 2.0 * np.pi * np.fft.fftfreq(self.n, d=self.h)
        xi_x, xi_y = np.meshgrid(xi, xi, indexing="xy")
        return xi_x, xi_y

    @cached_property
    def nyquist_mask(self) -> np.ndarray:
        """True on the zero mode and on the Nyquist row and column."""
        mask = np.zeros(self.shape, dtype=bool)
        mask[0, 0] = True
        mask[self.n // 2, :] = True
        mask[:, self.n // 2] = True
        return mask

    def nearest_index(self, point: complex) -> tuple[int, int]:
        """Lattice index (iy, ix) nearest to a point, wrapped periodically."""
        ix = int(round((point.real + self.L) / self.h)) % self.n
        iy = int(round((point.imag + self.L) / self.h)) % self.n
        return iy, ix

    def t_max(self) -> float:
        """Oscillation budget of 4 Re k^2 evolution over the full dual lattice."""
        return self.L * self.L / (2.0 * self.n * math.pi)

    def __repr__(self) -> str:
        return f"GridSpec(n={self.n}, L={self.L!r})"
