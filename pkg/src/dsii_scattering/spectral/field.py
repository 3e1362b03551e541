"""Sampled complex fields and the DSF1 file format."""

import json
import logging
from pathlib import Path
from typing import Any, Literal

import numpy as np

from dsii_scattering.errors import (
    BoundaryMassError,
    FieldFormatError,
    GridMismatchError,
    NonFiniteFieldError,
    SpaceMismatchError,
)
from dsii_scattering.spectral.grid import GridSpec

logger = logging.getLogger(__name__)

Space = Literal["z", "k"]

DSF1_MAGIC = "DSF1"


class Field:
    """An n x n array of complex samples on a GridSpec, tagged z or k."""

    __array_priority__ = 100

    def __init__(self, grid: GridSpec, space: Space, data: np.ndarray, *, check: bool = True):
        """
        Wrap samples.

        Args:
            grid: Box the samples live on.
            space: "z" for physical space, "k" for the spectral variable.
            data: Array of shape (n, n) indexed [iy, ix].
            check: Reject NaN/Inf samples.
        """
        if space not in ("z", "k"):
            raise SpaceMismatchError(f"space must be 'z' or 'k', got {space!r}")
        arr = np.asarray(data, dtype=np.complex128)
        if arr.shape != grid.shape:
            raise GridMismatchError(f"data shape {arr.shape} does not match grid {grid.shape}")
        if check and not np.all(np.isfinite(arr)):
            raise NonFiniteFieldError("field contains non-finite samples")
        self.grid = grid
        self.space: Space = space
        self.data = arr

    @classmethod
    def zeros(cls, grid: GridSpec, space: Space) -> "Field":
        return cls(grid, space, np.zeros(grid.shape, dtype=np.complex128))

    @classmethod
    def constant(cls, grid: GridSpec, space: Space, value: complex) -> "Field":
        return cls(grid, space, np.full(grid.shape, value, dtype=np.complex128))

    @classmethod
    def from_function(cls, grid: GridSpec, space: Space, func: Any) -> "Field":
        """Sample ``func(points)`` where points are complex lattice positions."""
        return cls(grid, space, func(grid.points))

    def like(self, data: np.ndarray) -> "Field":
        """New field on the same grid and space."""
        return Field(self.grid, self.space, data)

    def require(self, space: Space) -> "Field":
        if self.space != space:
            raise SpaceMismatchError(f"expected a {space}-field, got a {self.space}-field")
        return self

    def check_compatible(self, other: "Field") -> None:
        if self.space != other.space:
            raise SpaceMismatchError(f"space tags differ: {self.space} vs {other.space}")
        if not self.grid.matches(other.grid):
            raise GridMismatchError(f"grids differ: {self.grid!r} vs {other.grid!r}")

    def _operand(self, other: Any) -> Any:
        if isinstance(other, Field):
            self.check_compatible(other)
            return other.data
        return other

    def __add__(self, other: Any) -> "Field":
        return self.like(self.data + self._operand(other))

    __radd__ = __add__

    def __sub__(self, other: Any) -> "Field":
        return self.like(self.data - self._operand(other))

    def __rsub__(self, other: Any) -> "Field":
        return self.like(self._operand(other) - self.data)

    def __mul__(self, other: Any) -> "Field":
        return self.like(self.data * self._operand(other))

    __rmul__ = __mul__

    def __truediv__(self, other: Any) -> "Field":
        return self.like(self.data / self._operand(other))

    def __neg__(self) -> "Field":
        return self.like(-self.data)

    def conj(self) -> "Field":
        return self.like(np.conj(self.data))

    def abs2(self) -> "Field":
        return self.like(np.abs(self.data) ** 2)

    def real(self) -> "Field":
        return self.like(self.data.real.astype(np.complex128))

    def norm(self) -> float:
        """L2 norm with cell-area weights."""
        return float(np.sqrt(np.sum(np.abs(self.data.ravel()) ** 2) * self.grid.cell_area))

    def sup(self) -> float:
        return float(np.max(np.abs(self.data)))

    def integral(self) -> complex:
        """Midpoint quadrature of the samples over the box."""
        return complex(np.sum(self.data.ravel()) * self.grid.cell_area)

    def mean(self) -> complex:
        return complex(np.mean(self.data))

    def sample(self, point: complex) -> complex:
        """Value at the lattice point nearest to ``point``."""
        iy, ix = self.grid.nearest_index(point)
        return complex(self.data[iy, ix])

    def reflect(self) -> "Field":
        """The field evaluated at minus its argument, wrapped on the periodic lattice."""
        flipped = np.roll(np.flip(self.data, axis=(0, 1)), shift=1, axis=(0, 1))
        return self.like(flipped)

    def relative_error(self, reference: "Field") -> float:
        """||self - reference|| / ||reference|| (absolute if the reference vanishes)."""
        self.check_compatible(reference)
        denom = reference.norm()
        diff = (self - reference).norm()
        return diff / denom if denom > 0 else diff

    def copy(self) -> "Field":
        return self.like(self.data.copy())

    def __repr__(self) -> str:
        return f"Field(space={self.space!r}, grid={self.grid!r}, norm={self.norm():.6g})"


def boundary_mass(f: Field) -> float:
    """Fraction of the L2 norm carried by samples with |z| > L/2."""
    total = f.norm()
    if total == 0:
        return 0.0
    outside = np.abs(f.grid.points) > f.grid.L / 2
    tail = float(np.sqrt(np.sum(np.abs(f.data[outside]) ** 2) * f.grid.cell_area))
    return tail / total


def check_boundary(f: Field, tol: float | None = None) -> None:
    """Raise BoundaryMassError when the box truncation is not negligible."""
    from dsii_scattering.config import settings

    limit = settings.boundary_tol if tol is None else tol
    mass = boundary_mass(f)
    if mass > limit:
        raise BoundaryMassError(
            f"{mass:.3e} of the norm lies in |z| > L/2 (limit {limit:.1e}); enlarge the box"
        )


def write_field(path: str | Path, f: Field, meta: dict[str, Any] | None = None) -> None:
    """
    Write a field in DSF1 format.

    The header is ``DSF1 {json}`` on one line; the body is n*n little-endian
    float64 (re, im) pairs in row-major, y-major order. Extra ``meta`` keys
    are embedded in the header JSON.
    """
    header: dict[str, Any] = {"n": f.grid.n, "L": f.grid.L, "space": f.space}
    if meta:
        header.update({k: v for k, v in meta.items() if k not in header})
    line = f"{DSF1_MAGIC} {json.dumps(header, separators=(',', ':'))}\n"
    with open(path, "wb") as fh:
        fh.write(line.encode("utf-8"))
        fh.write(f.data.astype("<c16", copy=False).tobytes(order="C"))
    logger.debug(f"Wrote {f!r} to {path}")


def read_field_with_meta(path: str | Path) -> tuple[Field, dict[str, Any]]:
    """Read a DSF1 file, returning the field and its header."""
    with open(path, "rb") as fh:
        raw_header = fh.readline()
        body = fh.read()
    try:
        text = raw_header.decode("utf-8").rstrip("\n")
        magic, payload = text.split(" ", 1)
        header = json.loads(payload)
    except (UnicodeDecodeError, ValueError) as e:
        raise FieldFormatError(f"{path}: unreadable DSF1 header: {e}") from e
    if magic != DSF1_MAGIC:
        raise FieldFormatError(f"{path}: bad magic {magic!r}")
    try:
        grid = GridSpec(n=int(header["n"]), L=float(header["L"]))
        space = header["space"]
    except (KeyError, ValueError) as e:
        raise FieldFormatError(f"{path}: incomplete DSF1 header: {e}") from e
    expected = grid.n * grid.n * 16
    if len(body) != expected:
        raise FieldFormatError(f"{path}: body has {len(body)} bytes, expected {expected}")
    data = np.frombuffer(body, dtype="<c16").reshape(grid.shape).astype(np.complex128)
    return Field(grid, space, data), header


def read_field(path: str | Path) -> Field:
    """Read a DSF1 file."""
    return read_field_with_meta(path)[0]
