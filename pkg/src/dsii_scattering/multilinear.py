"""Exact criticality checks and Monte-Carlo evaluation of the Brown multilinear form.

Criticality
-----------
For surjections l_j : F^N -> F^(N_j) with exponents p_j, a subspace V is
critical when dim V = sum_j dim l_j(V)/p_j and subcritical when the sum is
larger. The hypotheses hold when F^N is critical and every proper nonzero
subspace is subcritical.

When every N_j = 1, l_j(V) has dimension 0 if V lies in ker l_j and 1
otherwise, so the right-hand side only depends on the set A(V) of maps that
vanish on V. V lies in the flat V_A = intersection of ker l_j over j in A,
and the maps vanishing on V_A contain A. Hence

    dim V <= dim V_A < RHS(V_A) <= RHS(V)

whenever V_A is subcritical, and it is enough to test the flats. The flats
are enumerated as closures of index sets under linear span, in exact
integer arithmetic.
"""

import logging
import math
from collections import deque
from concurrent.futures import ThreadPoolExecutor
from fractions import Fraction
from typing import Literal, Protocol

import numpy as np
import sympy
from pydantic import BaseModel, ConfigDict, Field as PydanticField, field_validator
from scipy.interpolate import RegularGridInterpolator

from dsii_scattering.errors import (
    CriticalityPreconditionError,
    DivergentVarianceError,
    ValidationFailure,
)
from dsii_scattering.spectral.field import Field
from dsii_scattering.types import CriticalityJSON, LambdaEstimate, Violation

logger = logging.getLogger(__name__)

MAX_MAPS = 24
MC_CHUNKS = 16
# Minimum Hill tail index of the importance weights for a finite variance
MIN_TAIL_INDEX = 2.0
# Proposal spread relative to a profile scale w; wider than |q| ~ exp(-|z|^2/w^2)
PROPOSAL_WIDTH = math.sqrt(0.75)

Verdict = Literal["critical", "subcritical", "supercritical"]


def parse_exponent(value: str | int | float | Fraction) -> Fraction | None:
    """Parse p in [1, inf]; returns None for infinity."""
    if isinstance(value, str) and value.strip().lower() in {"inf", "infinity", "oo"}:
        return None
    if isinstance(value, float) and math.isinf(value):
        return None
    p = Fraction(str(value)) if isinstance(value, (str, float)) else Fraction(value)
    if p < 1:
        raise ValueError(f"exponent must lie in [1, inf], got {value}")
    return p


def _reduce(basis: dict[int, list[int]], vec: list[int]) -> list[int]:
    """Fraction-free reduction of ``vec`` against an echelon basis keyed by pivot."""
    v = list(vec)
    for col, row in basis.items():
        if v[col]:
            pivot, factor = row[col], v[col]
            v = [pivot * a - factor * b for a, b in zip(v, row)]
            g = math.gcd(*v)
            if g > 1:
                v = [a // g for a in v]
    return v


def _insert(basis: dict[int, list[int]], vec: list[int]) -> bool:
    """Add ``vec`` to the basis; False if it already lies in the span."""
    v = _reduce(basis, vec)
    nonzero = [i for i, a in enumerate(v) if a]
    if not nonzero:
        return False
    col = nonzero[0]
    # Clear the new pivot from the existing rows to keep the basis reduced
    for key, row in list(basis.items()):
        if row[col]:
            updated = [v[col] * a - row[col] * b for a, b in zip(row, v)]
            g = math.gcd(*updated)
            basis[key] = [a // g for a in updated] if g > 1 else updated
    basis[col] = v
    return True


def integer_rank(rows: list[list[int]]) -> int:
    """Exact rank of an integer matrix."""
    basis: dict[int, list[int]] = {}
    return sum(_insert(basis, row) for row in rows)


class BLInstance(BaseModel):
    """Linear maps l_j (integer matrices) with exponents p_j."""

    model_config = ConfigDict(frozen=True)

    N: int = PydanticField(..., ge=1)
    field: Literal["real", "complex"] = "complex"
    maps: list[list[list[int]]]
    exponents: list[str]

    @field_validator("exponents")
    @classmethod
    def _check_exponents(cls, v: list[str]) -> list[str]:
        for p in v:
            parse_exponent(p)
        return v

    def model_post_init(self, __context: object) -> None:
        if not self.maps:
            raise ValidationFailure("an instance needs at least one map")
        if len(self.maps) != len(self.exponents):
            raise ValidationFailure(f"{len(self.maps)} maps but {len(self.exponents)} exponents")
        for j, mat in enumerate(self.maps):
            if not mat or any(len(row) != self.N for row in mat):
                raise ValidationFailure(f"map {j} must have rows of length {self.N}")
            if integer_rank(mat) != len(mat):
                raise ValidationFailure(f"map {j} is not surjective (rank below {len(mat)})")

    @property
    def m(self) -> int:
        return len(self.maps)

    def inverse_exponents(self) -> list[Fraction]:
        """1/p_j, with 1/inf = 0."""
        out = []
        for p in self.exponents:
            parsed = parse_exponent(p)
            out.append(Fraction(0) if parsed is None else 1 / parsed)
        return out

    def with_exponents(self, exponents: list[str]) -> "BLInstance":
        return BLInstance(N=self.N, field=self.field, maps=self.maps, exponents=exponents)


def build_brown_instance(n: int) -> BLInstance:
    """
    Maps of the Brown form on C^(2n+1).

    Coordinates z_0..z_2n, consecutive differences z_i - z_{i-1} for i = 1..2n,
    and the alternating sum sum (-1)^j z_j; every exponent is 2.
    """
    if n < 1:
        raise ValueError(f"n must be positive, got {n}")
    N = 2 * n + 1
    rows: list[list[int]] = []
    for j in range(N):
        rows.append([1 if c == j else 0 for c in range(N)])
    for i in range(1, N):
        row = [0] * N
        row[i - 1], row[i] = -1, 1
        rows.append(row)
    rows.append([(-1) ** j for j in range(N)])
    return BLInstance(N=N, field="complex", maps=[[r] for r in rows], exponents=["2"] * len(rows))


class CriticalityReport:
    """Verdicts of criticality_check."""

    def __init__(
        self, N: int, maps: int, whole_space: Verdict, violations: list[Violation], checked_count: int
    ):
        self.N = N
        self.maps = maps
        self.whole_space = whole_space
        self.violations = violations
        self.checked_count = checked_count

    def __repr__(self) -> str:
        return (
            f"CriticalityReport(N={self.N}, whole_space={self.whole_space!r}, "
            f"violations={len(self.violations)}, checked_count={self.checked_count})"
        )

    @property
    def hypotheses_hold(self) -> bool:
        return self.whole_space == "critical" and not self.violations

    def to_json(self) -> CriticalityJSON:
        return {
            "N": self.N,
            "maps": self.maps,
            "whole_space": self.whole_space,
            "violations": list(self.violations),
            "checked_count": self.checked_count,
            "verdict": "hypotheses hold" if self.hypotheses_hold else "hypotheses fail",
        }

    def render(self) -> str:
        """Human-readable summary."""
        lines = [
            f"N = {self.N}, {self.maps} maps, {self.checked_count} subspaces checked",
            f"whole space: {self.whole_space}",
        ]
        for v in self.violations:
            lines.append(f"  violation: dim {v['dimension']} >= {v['rhs']}, basis {v['basis']}")
        lines.append("verdict: " + ("hypotheses hold" if self.hypotheses_hold else "hypotheses fail"))
        return "\n".join(lines)


def _classify(dim: int, rhs: Fraction) -> Verdict:
    if dim == rhs:
        return "critical"
    return "subcritical" if dim < rhs else "supercritical"


def _closure(rows: list[list[int]], indices: frozenset[int]) -> tuple[frozenset[int], int]:
    basis: dict[int, list[int]] = {}
    for j in sorted(indices):
        _insert(basis, rows[j])
    members = frozenset(j for j, row in enumerate(rows) if not any(_reduce(basis, row)))
    return members, len(basis)


def _kernel_basis(rows: list[list[int]], flat: frozenset[int]) -> list[list[str]]:
    matrix = sympy.Matrix([rows[j] for j in sorted(flat)])
    return [[str(sympy.nsimplify(x)) for x in vec] for vec in matrix.nullspace()]


def criticality_check(inst: BLInstance) -> CriticalityReport:
    """
    Exact criticality verdicts for rank-one maps.

    Raises:
        CriticalityPreconditionError: Some map has more than one row, or
            the instance has more than 24 maps.
    """
    if any(len(mat) != 1 for mat in inst.maps):
        raise CriticalityPreconditionError("flat enumeration is complete only when every map has rank one")
    if inst.m > MAX_MAPS:
        raise CriticalityPreconditionError(f"{inst.m} maps exceed the enumeration cap of {MAX_MAPS}")
    rows = [mat[0] for mat in inst.maps]
    weights = inst.inverse_exponents()
    N = inst.N

    whole = _classify(N, sum(weights, Fraction(0)))
    violations: list[Violation] = []
    checked = 1

    start, _ = _closure(rows, frozenset())
    seen = {start}
    queue = deque([start])
    while queue:
        flat = queue.popleft()
        covered: set[int] = set(flat)
        for j in range(len(rows)):
            if j in covered:
                continue
            extended, rank = _closure(rows, flat | {j})
            covered |= extended
            if extended in seen:
                continue
            seen.add(extended)
            if rank >= N:
                continue
            dim = N - rank
            rhs = sum((weights[i] for i in range(len(rows)) if i not in extended), Fraction(0))
            checked += 1
            if dim >= rhs:
                violations.append(
                    {"basis": _kernel_basis(rows, extended), "dimension": dim, "rhs": str(rhs)}
                )
            queue.append(extended)
    logger.info(f"Criticality: {checked} subspaces checked, whole space {whole}, {len(violations)} violations")
    return CriticalityReport(
        N=N, maps=inst.m, whole_space=whole, violations=violations, checked_count=checked
    )


class Profile(Protocol):
    """A function on C sampled by the Monte-Carlo evaluator."""

    def modulus(self, z: np.ndarray) -> np.ndarray: ...

    def norm(self) -> float: ...

    def center(self) -> complex: ...

    def scale(self) -> float: ...


class GaussianProfile(BaseModel):
    """amplitude * exp(-|z - center|^2 / width^2)."""

    model_config = ConfigDict(frozen=True)

    amplitude: float = 1.0
    width: float = PydanticField(1.0, gt=0)
    position: tuple[float, float] = (0.0, 0.0)

    def modulus(self, z: np.ndarray) -> np.ndarray:
        c = complex(*self.position)
        return abs(self.amplitude) * np.exp(-np.abs(z - c) ** 2 / self.width**2)

    def norm(self) -> float:
        return abs(self.amplitude) * self.width * math.sqrt(math.pi / 2)

    def center(self) -> complex:
        return complex(*self.position)

    def scale(self) -> float:
        return self.width

    def dilated(self, factor: float) -> "GaussianProfile":
        """f(z/factor), keeping the amplitude."""
        return GaussianProfile(
            amplitude=self.amplitude,
            width=self.width * factor,
            position=(self.position[0] * factor, self.position[1] * factor),
        )


class FieldProfile:
    """|f| of a sampled z-field, bilinearly interpolated and zero outside the box."""

    def __init__(self, field: Field):
        field.require("z")
        self.field = field
        axis = field.grid.axis
        self._interp = RegularGridInterpolator(
            (axis, axis), np.abs(field.data), bounds_error=False, fill_value=0.0
        )
        weights = np.abs(field.data) ** 2
        total = float(np.sum(weights))
        pts = field.grid.points
        self._center = complex(np.sum(pts * weights) / total) if total > 0 else 0j
        spread = float(np.sum(np.abs(pts - self._center) ** 2 * weights) / total) if total > 0 else 1.0
        # A Gaussian of width w has r.m.s. radius w / sqrt(2)
        self._scale = max(math.sqrt(2.0 * spread), field.grid.h)

    def modulus(self, z: np.ndarray) -> np.ndarray:
        return self._interp(np.stack([z.imag, z.real], axis=-1))

    def norm(self) -> float:
        return self.field.norm()

    def center(self) -> complex:
        return self._center

    def scale(self) -> float:
        return self._scale

    def __repr__(self) -> str:
        return f"FieldProfile({self.field!r})"


def _draw_gaussian(rng: np.random.Generator, count: int, center: complex, spread: float) -> np.ndarray:
    return center + spread * (rng.standard_normal(count) + 1j * rng.standard_normal(count))


def _gaussian_density(z: np.ndarray, center: complex, spread: float) -> np.ndarray:
    return np.exp(-np.abs(z - center) ** 2 / (2 * spread**2)) / (2 * math.pi * spread**2)


def _radial_density_times_gap(gap: np.ndarray, spread: float) -> np.ndarray:
    # |w| times the density exp(-|w|^2/2 s^2) / (|w| s pi sqrt(2 pi)); finite at w = 0
    return np.exp(-(gap**2) / (2 * spread**2)) / (spread * math.pi * math.sqrt(2 * math.pi))


def _chunk_weights(n: int, profiles: list[Profile], count: int, rng: np.random.Generator) -> np.ndarray:
    """
    Importance weights of one chunk.

    z_0 is drawn from a Gaussian matched to q_0. Each later z_j comes from
    an equal mixture of z_{j-1} - w with the radial proposal for w and a
    Gaussian matched to q_j; the last step adds a third component that puts
    zeta on a Gaussian matched to rho. Every factor of the weight stays bounded.
    """
    rho, qs = profiles[0], profiles[1:]
    spreads = [PROPOSAL_WIDTH * p.scale() for p in profiles]
    z = _draw_gaussian(rng, count, qs[0].center(), spreads[1])
    weight = qs[0].modulus(z) / _gaussian_density(z, qs[0].center(), spreads[1])
    zeta = z.copy()
    last = 2 * n
    for j in range(1, last + 1):
        center, spread = qs[j].center(), spreads[j + 1]
        radius = spread * np.abs(rng.standard_normal(count))
        near = z - radius * np.exp(1j * rng.uniform(0.0, 2 * math.pi, count))
        far = _draw_gaussian(rng, count, center, spread)
        choice = rng.random(count)
        parts = 3 if j == last else 2
        nxt = np.where(choice < 1.0 / parts, near, far)
        if j == last:
            # The last step has sign +1, so zeta = zeta_partial + z_2n
            on_rho = _draw_gaussian(rng, count, rho.center(), spreads[0]) - zeta
            nxt = np.where(choice >= 2.0 / 3.0, on_rho, nxt)
        gap = np.abs(z - nxt)
        mix = _radial_density_times_gap(gap, spread) + gap * _gaussian_density(nxt, center, spread)
        if j == last:
            mix = mix + gap * _gaussian_density(zeta + nxt, rho.center(), spreads[0])
        weight = weight * qs[j].modulus(nxt) * parts / mix
        zeta = zeta + (-1) ** j * nxt
        z = nxt
    return weight * rho.modulus(zeta)


def hill_tail_index(weights: np.ndarray, fraction: float = 0.01) -> float:
    """Hill estimate of the tail index from the largest weights."""
    positive = np.sort(weights[weights > 0])[::-1]
    k = max(10, int(fraction * positive.size))
    if positive.size <= k:
        return math.inf
    logs = np.log(positive[:k] / positive[k])
    mean = float(np.mean(logs))
    return math.inf if mean == 0 else 1.0 / mean


def lambda_mc(
    n: int,
    profiles: list[Profile],
    samples: int,
    seed: int,
    workers: int = 1,
) -> LambdaEstimate:
    """
    Importance-sampled estimate of Lambda_n / (||rho|| * prod ||q_j||).

    Lambda_n = integral |rho(zeta)| prod_j |q_j(z_j)| / prod_{j=1}^{2n} |z_{j-1} - z_j|
    over z_0..z_2n in C with zeta = sum_j (-1)^j z_j. The differences
    w_j = z_{j-1} - z_j are drawn in part from exp(-|w|^2/2 sigma^2)/|w|,
    sigma matched to q_j, so the singular factors cancel.

    Args:
        n: Order (1 or 2).
        profiles: rho followed by q_0..q_2n.
        samples: Total number of samples.
        seed: Root seed; chunk streams come from SeedSequence(seed).spawn.
        workers: Thread count; the result does not depend on it.

    Returns:
        Estimate with standard error and the Hill tail index of the weights.

    Raises:
        DivergentVarianceError: The weights look heavy-tailed (index below 2).
    """
    if n not in (1, 2):
        raise ValidationFailure(f"n must be 1 or 2, got {n}")
    if len(profiles) != 2 * n + 2:
        raise ValidationFailure(f"n = {n} needs {2 * n + 2} functions (rho, q_0..q_{2 * n}), got {len(profiles)}")
    if samples < MC_CHUNKS:
        raise ValidationFailure(f"samples must be at least {MC_CHUNKS}")

    norms = [p.norm() for p in profiles]
    if any(nv == 0 for nv in norms):
        return {"n": n, "samples": samples, "estimate": 0.0, "stderr": 0.0, "tail_index": math.inf}

    sizes = [samples // MC_CHUNKS + (1 if i < samples % MC_CHUNKS else 0) for i in range(MC_CHUNKS)]
    streams = [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(MC_CHUNKS)]

    def run(i: int) -> np.ndarray:
        return _chunk_weights(n, profiles, sizes[i], streams[i])

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            chunks = list(pool.map(run, range(MC_CHUNKS)))
    else:
        chunks = [run(i) for i in range(MC_CHUNKS)]
    weights = np.concatenate(chunks)

    scale = math.prod(norms)
    estimate = float(np.mean(weights)) / scale
    stderr = float(np.std(weights, ddof=1) / math.sqrt(weights.size)) / scale
    tail = hill_tail_index(weights)
    if tail < MIN_TAIL_INDEX:
        raise DivergentVarianceError(f"importance weights have tail index {tail:.2f} < {MIN_TAIL_INDEX}")
    logger.info(f"Lambda_{n}: {estimate:.6f} +- {stderr:.2e} from {samples} samples")
    return {"n": n, "samples": samples, "estimate": estimate, "stderr": stderr, "tail_index": tail}
