"""Fourier pair, Cauchy and Beurling transforms, unimodular factors and pairing.

Lattice correspondence
----------------------
With z = x + iy and k = k1 + i k2, e_k(z) = exp(-2i(k1*y + k2*x)), so the
transform variable pairs k1 with y and k2 with x:

    (F psi)(k) = -(1/pi) * psi_hat(xi_x = 2*k2, xi_y = 2*k1).

On the box [-L, L)^2 with n samples the dual lattice has spacing pi/(2L)
and half-width n*pi/(4L). With the checkerboard s = (-1)^(ix+iy),

    F psi     = -(h^2/pi)          * s * fft2(s * psi).T
    F^-1 phi  = -(dk^2 n^2/pi)     * s * ifft2(s * phi.T)

which are exact inverses. With cell-area weighted norms ||F psi|| = ||psi||.

Multipliers
-----------
All symbols below use the angular FFT frequencies of the field's own grid
and vanish on the zero mode and on the Nyquist row and column. Nyquist modes
have no conjugate partner; removing them keeps conj(P f) = Pbar(conj f).

    dbar : (i/2)(xi_x + i xi_y)       P    : -2i/(xi_x + i xi_y)
    d    : (i/2)(xi_x - i xi_y)       Pbar : -2i/(xi_x - i xi_y)
    S    : (xi_x - i xi_y)/(xi_x + i xi_y)
"""

import logging
from functools import lru_cache

import numpy as np
import scipy.fft

from dsii_scattering.errors import AliasingError
from dsii_scattering.spectral.field import Field
from dsii_scattering.spectral.grid import GridSpec

logger = logging.getLogger(__name__)

SymbolName = str


@lru_cache(maxsize=16)
def _checkerboard(n: int) -> np.ndarray:
    j = np.arange(n)
    s = np.where((j[:, None] + j[None, :]) % 2 == 0, 1.0, -1.0)
    s.setflags(write=False)
    return s


@lru_cache(maxsize=64)
def _symbol(n: int, L: float, name: SymbolName) -> np.ndarray:
    grid = GridSpec(n=n, L=L)
    xi_x, xi_y = grid.frequencies
    plus = xi_x + 1j * xi_y
    minus = xi_x - 1j * xi_y
    mask = grid.nyquist_mask
    safe_plus = np.where(mask, 1.0, plus)
    safe_minus = np.where(mask, 1.0, minus)
    if name == "dbar":
        sym = 0.5j * plus
    elif name == "d":
        sym = 0.5j * minus
    elif name == "P":
        sym = -2j / safe_plus
    elif name == "Pbar":
        sym = -2j / safe_minus
    elif name == "S":
        sym = safe_minus / safe_plus
    else:
        raise ValueError(f"unknown symbol {name!r}")
    sym = np.where(mask, 0.0, sym).astype(np.complex128)
    sym.setflags(write=False)
    return sym


def symbol(grid: GridSpec, name: SymbolName) -> np.ndarray:
    """Read-only multiplier array for ``name`` on ``grid``."""
    return _symbol(grid.n, grid.L, name)


def apply_multiplier(f: Field, sym: np.ndarray) -> Field:
    """Apply a Fourier multiplier given on the FFT index layout."""
    return f.like(scipy.fft.ifft2(sym * scipy.fft.fft2(f.data)))


def fourier_forward(f: Field, k_max: float | None = None) -> Field:
    """
    (F psi)(k) = -(1/pi) * integral e_k(zeta) psi(zeta) dm(zeta).

    Args:
        f: z-field.
        k_max: Optional largest |Re k|, |Im k| the caller needs.

    Returns:
        k-field on ``f.grid.dual()``.
    """
    f.require("z")
    dual = f.grid.dual()
    if k_max is not None and k_max > dual.L * (1 + 1e-12):
        raise AliasingError(
            f"k range {k_max:.6g} exceeds the dual half-width {dual.L:.6g}; increase n or decrease L"
        )
    s = _checkerboard(f.grid.n)
    spectrum = scipy.fft.fft2(s * f.data)
    data = -(f.grid.cell_area / np.pi) * s * spectrum.T
    return Field(dual, "k", data)


def fourier_inverse(f: Field) -> Field:
    """(F^-1 psi)(z) = -(1/pi) * integral e_{-zeta}(z) psi(zeta) dm(zeta)."""
    f.require("k")
    n = f.grid.n
    s = _checkerboard(n)
    values = scipy.fft.ifft2(s * f.data.T)
    data = -(f.grid.cell_area * n * n / np.pi) * s * values
    return Field(f.grid.dual(), "z", data)


def dbar(f: Field) -> Field:
    """Spectral dbar = (d/dx + i d/dy)/2 in the field's own variable."""
    return apply_multiplier(f, symbol(f.grid, "dbar"))


def d(f: Field) -> Field:
    """Spectral d = (d/dx - i d/dy)/2 in the field's own variable."""
    return apply_multiplier(f, symbol(f.grid, "d"))


def cauchy_array(
    grid: GridSpec, data: np.ndarray, conjugate: bool = False, compensate_mean: bool = False
) -> np.ndarray:
    """P (or Pbar with ``conjugate``) on raw samples; used by the iterative solvers."""
    out = scipy.fft.ifft2(symbol(grid, "Pbar" if conjugate else "P") * scipy.fft.fft2(data))
    if compensate_mean:
        # Adds back (w * int f - int w f)/A with w = conj(z) for P and w = z for Pbar.
        w = grid.points if conjugate else np.conj(grid.points)
        out += w * np.mean(data) - np.mean(w * data)
    return out


def cauchy_P(f: Field, compensate_mean: bool = False) -> Field:
    """
    Solid Cauchy transform, the right inverse of dbar.

    (Pf)(z) = (1/pi) * integral f(zeta)/(z - zeta) dm(zeta), so that
    Pf ~ (1/(pi z)) * integral f far from the support of f.

    The periodic multiplier returns the zero-mean solution of
    dbar u = f - mean(f); its far field carries the extra term
    -(1/A) * integral (conj(z) - conj(zeta)) f. With ``compensate_mean``
    that term is added back, which leaves dbar(Pf) unchanged for zero-mean f
    and keeps P* = -Pbar exact.

    Args:
        f: Field in z or k.
        compensate_mean: Restore the planar far-field behaviour.

    Returns:
        Field in the same space.
    """
    return f.like(cauchy_array(f.grid, f.data, compensate_mean=compensate_mean))


def cauchy_Pbar(f: Field, compensate_mean: bool = False) -> Field:
    """Conjugate Cauchy transform, the right inverse of d; conj(P conj f)."""
    return f.like(cauchy_array(f.grid, f.data, conjugate=True, compensate_mean=compensate_mean))


def cauchy_P_adjoint(f: Field, compensate_mean: bool = False) -> Field:
    """Adjoint of P for the pairing: the conjugate-kernel transform -Pbar."""
    return -cauchy_Pbar(f, compensate_mean=compensate_mean)


def beurling_S(f: Field) -> Field:
    """Ahlfors-Beurling transform, principal value convolution with -1/(pi w^2)."""
    return apply_multiplier(f, symbol(f.grid, "S"))


def check_resolvable(grid: GridSpec, param: complex) -> None:
    """Raise AliasingError unless e_param is representable on ``grid``."""
    limit = grid.dual().L * (1 + 1e-12)
    if abs(param.real) > limit or abs(param.imag) > limit:
        raise AliasingError(
            f"parameter {param} oscillates faster than the grid resolves "
            f"(|Re|, |Im| must stay below {grid.dual().L:.6g})"
        )


def unimodular(grid: GridSpec, param: complex) -> np.ndarray:
    """
    e_param sampled on ``grid``: exp(-2i(Re(param)*y + Im(param)*x)).

    On a z-grid with param k this is e_k(z); on a k-grid with param z it is
    the same function of k, e_k(z) = e_z(k).
    """
    x, y = grid.mesh
    return np.exp(-2j * (param.real * y + param.imag * x))


def ek_multiply(f: Field, k: complex) -> Field:
    """Pointwise product with e_k(z) = exp(conj(k) conj(z) - k z)."""
    f.require("z")
    return f.like(unimodular(f.grid, complex(k)) * f.data)


def ek_value(k: complex, z: complex) -> complex:
    """e_k(z) at a single point."""
    k, z = complex(k), complex(z)
    return complex(np.exp(np.conj(k) * np.conj(z) - k * z))


def pairing(f: Field, g: Field) -> complex:
    """<f, g> = -(1/pi) * h^2 * sum conj(f) g."""
    f.check_compatible(g)
    return complex(-(f.grid.cell_area / np.pi) * np.sum((np.conj(f.data) * g.data).ravel()))
