"""Matrix-free solver for the coupled dbar systems of the scattering maps.

Both systems have the form

    dbar psi1 = 1/2 * a * conj(psi2),   dbar psi2 = 1/2 * a * conj(psi1),
    psi -> (1, 0) at infinity,

with a = e_k(z) q(z) on a z-grid (the mu system at spectral point k) or
a = e_z(k) conj(r(k)) on a k-grid (the nu system at physical point z).
With T psi = 1/2 P(a conj psi) the solution is psi1 = 1 + w where
(I - T^2) w = T^2 1, and psi2 = T psi1. T is antilinear; T^2 is
complex-linear and is what the Krylov iteration sees.
"""

import logging
import math
import time
from collections.abc import Callable, Sequence
from concurrent.futures import ThreadPoolExecutor
from typing import Any, Literal, TypeVar

import numpy as np
from pydantic import BaseModel, ConfigDict
from scipy.sparse.linalg import LinearOperator, gmres

from dsii_scattering.config import SolverConfig
from dsii_scattering.dbar.probe import power_norm
from dsii_scattering.errors import NumericalFailure, SolverConvergenceError
from dsii_scattering.spectral.field import Field, Space
from dsii_scattering.spectral.grid import GridSpec
from dsii_scattering.spectral.operators import (
    cauchy_array,
    check_resolvable,
    dbar,
    unimodular,
)
from dsii_scattering.telemetry import emit

logger = logging.getLogger(__name__)

SolveMethod = Literal["trivial", "neumann", "krylov"]

# Extra GMRES passes when the true residual misses the target after a run
MAX_REFINEMENTS = 3


class CoupledDbarSystem:
    """The antilinear operator T and its square for one coefficient a."""

    def __init__(self, grid: GridSpec, space: Space, coefficient: np.ndarray, compensate_mean: bool = True):
        """
        Bind a coefficient.

        Args:
            grid: Grid the unknowns live on.
            space: Space tag of the unknowns.
            coefficient: Samples of a, already multiplied by the unimodular factor.
            compensate_mean: Use the planar-corrected Cauchy transform.
        """
        self.grid = grid
        self.space: Space = space
        self.a = coefficient
        self.a_conj = np.conj(coefficient)
        self.compensate_mean = compensate_mean
        self.is_trivial = not np.any(coefficient)

    @classmethod
    def for_mu(cls, q: Field, k: complex, compensate_mean: bool = True) -> "CoupledDbarSystem":
        """System in z at spectral point k with a = e_k q."""
        q.require("z")
        k = complex(k)
        check_resolvable(q.grid, k)
        return cls(q.grid, "z", unimodular(q.grid, k) * q.data, compensate_mean)

    @classmethod
    def for_nu(cls, r: Field, z: complex, compensate_mean: bool = True) -> "CoupledDbarSystem":
        """System in k at physical point z with a = e_z(k) conj(r)."""
        r.require("k")
        z = complex(z)
        check_resolvable(r.grid, z)
        return cls(r.grid, "k", unimodular(r.grid, z) * np.conj(r.data), compensate_mean)

    def _P(self, data: np.ndarray) -> np.ndarray:
        return cauchy_array(self.grid, data, compensate_mean=self.compensate_mean)

    def _Pbar(self, data: np.ndarray) -> np.ndarray:
        return cauchy_array(self.grid, data, conjugate=True, compensate_mean=self.compensate_mean)

    def t_array(self, psi: np.ndarray) -> np.ndarray:
        return 0.5 * self._P(self.a * np.conj(psi))

    def t2_array(self, psi: np.ndarray) -> np.ndarray:
        return 0.25 * self._P(self.a * self._Pbar(self.a_conj * psi))

    def t2_adjoint_array(self, psi: np.ndarray) -> np.ndarray:
        # P* = -Pbar and Pbar* = -P; the two signs cancel
        return 0.25 * self.a * self._P(self.a_conj * self._Pbar(psi))

    def T(self, psi: Field) -> Field:
        return psi.like(self.t_array(psi.data))

    def __call__(self, psi: Field) -> Field:
        return psi.like(self.t2_array(psi.data))

    def adjoint(self, psi: Field) -> Field:
        return psi.like(self.t2_adjoint_array(psi.data))

    def __repr__(self) -> str:
        return f"CoupledDbarSystem(space={self.space!r}, grid={self.grid!r}, trivial={self.is_trivial})"


class _SolutionBase(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    residual: float
    iterations: int
    method: SolveMethod
    t2_norm: float | None = None
    elapsed: float = 0.0


class MuSolution(_SolutionBase):
    """Solution (mu1, mu2) of the z-side system at spectral point k."""

    k: complex
    mu1: Field
    mu2: Field


class NuSolution(_SolutionBase):
    """Solution (nu1, nu2) of the k-side system at physical point z."""

    z: complex
    nu1: Field
    nu2: Field


def apply_T(q: Field, k: complex, psi: Field, cfg: SolverConfig | None = None) -> Field:
    """T psi = 1/2 P(e_k q conj(psi))."""
    q.check_compatible(psi)
    compensate = (cfg or SolverConfig()).mean_compensation
    return CoupledDbarSystem.for_mu(q, k, compensate).T(psi)


def apply_T2(q: Field, k: complex, psi: Field, cfg: SolverConfig | None = None) -> Field:
    """T^2 psi = 1/4 P(e_k q Pbar(e_{-k} conj(q) psi))."""
    q.check_compatible(psi)
    compensate = (cfg or SolverConfig()).mean_compensation
    return CoupledDbarSystem.for_mu(q, k, compensate)(psi)


def t2_norm_probe(
    q: Field, k: complex, iters: int = 20, cfg: SolverConfig | None = None
) -> float:
    """Power-iteration estimate of ||T^2|| at spectral point k (deterministic seed)."""
    cfg = cfg or SolverConfig()
    if iters < 5:
        raise ValueError(f"iters must be at least 5, got {iters}")
    system = CoupledDbarSystem.for_mu(q, k, cfg.mean_compensation)
    if system.is_trivial:
        return 0.0
    return power_norm(system, q.grid, "z", iters=iters, seed=cfg.probe_seed)


def neumann_terms(q: Field, k: complex, N: int, cfg: SolverConfig | None = None) -> list[Field]:
    """
    Terms T^(2j) 1 for j = 1..N of the Neumann expansion of mu1 - 1.

    Args:
        q: Potential.
        k: Spectral point.
        N: Number of terms.
        cfg: Solver configuration (only ``mean_compensation`` is used).

    Returns:
        List of N fields.
    """
    if N < 1:
        raise ValueError(f"N must be positive, got {N}")
    compensate = (cfg or SolverConfig()).mean_compensation
    system = CoupledDbarSystem.for_mu(q, k, compensate)
    term = np.ones(q.grid.shape, dtype=np.complex128)
    terms = []
    for _ in range(N):
        term = system.t2_array(term)
        terms.append(q.like(term))
    return terms


def _relative_residual(system: CoupledDbarSystem, w: np.ndarray, rhs_norm: float) -> float:
    defect = w - system.t2_array(1.0 + w)
    return float(np.linalg.norm(defect.ravel()) / rhs_norm)


def _solve_neumann(
    system: CoupledDbarSystem, rhs: np.ndarray, cfg: SolverConfig, w0: np.ndarray
) -> tuple[np.ndarray, float, int]:
    rhs_norm = float(np.linalg.norm(rhs.ravel()))
    w = w0
    best = math.inf
    for it in range(1, cfg.max_iter + 1):
        w_next = system.t2_array(1.0 + w)
        residual = float(np.linalg.norm((w_next - w).ravel()) / rhs_norm)
        w = w_next
        best = min(best, residual)
        if residual <= cfg.tol:
            return w, _relative_residual(system, w, rhs_norm), it
    raise SolverConvergenceError("Neumann iteration did not converge", best, cfg.max_iter)


def _solve_krylov(
    system: CoupledDbarSystem, rhs: np.ndarray, cfg: SolverConfig, w0: np.ndarray
) -> tuple[np.ndarray, float, int]:
    n = rhs.size
    shape = rhs.shape

    def matvec(v: np.ndarray) -> np.ndarray:
        x = v.reshape(shape)
        return (x - system.t2_array(x)).ravel()

    operator = LinearOperator((n, n), matvec=matvec, dtype=np.complex128)
    b = rhs.ravel()
    rhs_norm = float(np.linalg.norm(b))
    # scipy counts maxiter in restart cycles
    cycles = max(1, math.ceil(cfg.max_iter / cfg.restart))

    iterations = 0

    def callback(_: float) -> None:
        nonlocal iterations
        iterations += 1

    x = w0.ravel()
    best = math.inf
    for _ in range(MAX_REFINEMENTS + 1):
        x, info = gmres(
            operator,
            b,
            x0=x,
            rtol=cfg.tol,
            atol=0.0,
            restart=cfg.restart,
            maxiter=cycles,
            callback=callback,
            callback_type="pr_norm",
        )
        w = x.reshape(shape)
        residual = _relative_residual(system, w, rhs_norm)
        best = min(best, residual)
        if residual <= cfg.tol:
            return w, residual, iterations
        if info > 0 or iterations >= cfg.max_iter:
            break
        logger.debug(f"GMRES true residual {residual:.3e} above target; refining")
    raise SolverConvergenceError("GMRES did not reach the residual target", best, iterations)


def _solve_system(
    system: CoupledDbarSystem,
    cfg: SolverConfig,
    initial_guess: np.ndarray | None = None,
) -> tuple[np.ndarray, np.ndarray, float, int, SolveMethod, float | None]:
    ones = np.ones(system.grid.shape, dtype=np.complex128)
    if system.is_trivial:
        return ones, np.zeros_like(ones), 0.0, 0, "trivial", 0.0

    rhs = system.t2_array(ones)
    if not np.any(rhs):
        return ones, system.t_array(ones), 0.0, 0, "trivial", 0.0

    w0 = np.zeros_like(ones) if initial_guess is None else np.asarray(initial_guess, dtype=np.complex128) - 1.0
    t2_norm: float | None = None
    method: SolveMethod = "krylov"
    if cfg.method == "neumann":
        method = "neumann"
    elif cfg.method == "auto":
        t2_norm = power_norm(system, system.grid, system.space, iters=cfg.probe_iters, seed=cfg.probe_seed)
        method = "neumann" if t2_norm < cfg.neumann_threshold else "krylov"

    if method == "neumann":
        w, residual, iterations = _solve_neumann(system, rhs, cfg, w0)
    else:
        w, residual, iterations = _solve_krylov(system, rhs, cfg, w0)
    psi1 = 1.0 + w
    return psi1, system.t_array(psi1), residual, iterations, method, t2_norm


def solve_mu(
    q: Field,
    k: complex,
    cfg: SolverConfig | None = None,
    initial_guess: Field | None = None,
) -> MuSolution:
    """
    Solve the z-side system at spectral point k.

    Args:
        q: Potential on a z-grid.
        k: Spectral point; |Re k| and |Im k| must be resolvable on q's grid.
        cfg: Solver policy.
        initial_guess: Optional starting value for mu1.

    Returns:
        MuSolution with mu1 = (I - T^2)^-1 1 and mu2 = T mu1.

    Raises:
        SolverConvergenceError: The residual target was missed within max_iter.
    """
    cfg = cfg or SolverConfig()
    start = time.perf_counter()
    system = CoupledDbarSystem.for_mu(q, k, cfg.mean_compensation)
    guess = None
    if initial_guess is not None:
        q.check_compatible(initial_guess)
        guess = initial_guess.data
    mu1, mu2, residual, iterations, method, t2_norm = _solve_system(system, cfg, guess)
    elapsed = time.perf_counter() - start
    emit(
        "solve",
        space="z",
        param=[float(complex(k).real), float(complex(k).imag)],
        method=method,
        iterations=iterations,
        residual=residual,
        t2_norm=t2_norm,
    )
    return MuSolution(
        k=complex(k),
        mu1=q.like(mu1),
        mu2=q.like(mu2),
        residual=residual,
        iterations=iterations,
        method=method,
        t2_norm=t2_norm,
        elapsed=elapsed,
    )


def solve_nu(r: Field, z: complex, cfg: SolverConfig | None = None) -> NuSolution:
    """
    Solve the k-side system at physical point z.

    The coefficient is e_z(k) conj(r(k)); nu1 = (I - T^2)^-1 1 and nu2 = T nu1
    with every transform taken in the k variable.
    """
    cfg = cfg or SolverConfig()
    start = time.perf_counter()
    system = CoupledDbarSystem.for_nu(r, z, cfg.mean_compensation)
    nu1, nu2, residual, iterations, method, t2_norm = _solve_system(system, cfg)
    elapsed = time.perf_counter() - start
    emit(
        "solve",
        space="k",
        param=[float(complex(z).real), float(complex(z).imag)],
        method=method,
        iterations=iterations,
        residual=residual,
        t2_norm=t2_norm,
    )
    return NuSolution(
        z=complex(z),
        nu1=r.like(nu1),
        nu2=r.like(nu2),
        residual=residual,
        iterations=iterations,
        method=method,
        t2_norm=t2_norm,
        elapsed=elapsed,
    )


def dbar_residual(
    q: Field, k: complex, mu1: Field, mu2: Field, cfg: SolverConfig | None = None
) -> dict[str, float]:
    """
    Plug-back defect of both dbar equations.

    Returns ||dbar(mu1 - 1 - T mu2)|| / ||1/2 e_k q conj(mu2)|| and the same
    quantity for the second equation, under keys ``eq1`` and ``eq2``.
    """
    compensate = (cfg or SolverConfig()).mean_compensation
    system = CoupledDbarSystem.for_mu(q, k, compensate)
    q.check_compatible(mu1)
    q.check_compatible(mu2)
    out = {}
    for key, lhs, other in (("eq1", mu1 - 1.0, mu2), ("eq2", mu2, mu1)):
        defect = dbar(lhs - system.T(other)).norm()
        scale = q.like(0.5 * system.a * np.conj(other.data)).norm()
        out[key] = defect / scale if scale > 0 else defect
    return out


Result = TypeVar("Result")


def parallel_map(
    func: Callable[[Any], Result], params: Sequence[Any], workers: int
) -> list[Result | NumericalFailure]:
    """
    Evaluate ``func`` over ``params`` with a thread pool.

    Results come back in input order; numerical failures are returned in
    place of the result instead of being raised.
    """

    def guarded(p: Any) -> Result | NumericalFailure:
        try:
            return func(p)
        except NumericalFailure as e:
            logger.warning(f"Solve failed at {p}: {e}")
            return e

    if workers <= 1 or len(params) <= 1:
        return [guarded(p) for p in params]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(guarded, params))


def sweep_mu(
    q: Field, ks: Sequence[complex], cfg: SolverConfig | None = None
) -> list[MuSolution | NumericalFailure]:
    """solve_mu at every k, in parallel over ``cfg.workers`` threads."""
    cfg = cfg or SolverConfig()
    results = parallel_map(lambda k: solve_mu(q, k, cfg), list(ks), cfg.workers)
    _emit_sweep(results)
    return results


def sweep_nu(
    r: Field, zs: Sequence[complex], cfg: SolverConfig | None = None
) -> list[NuSolution | NumericalFailure]:
    """solve_nu at every z, in parallel over ``cfg.workers`` threads."""
    cfg = cfg or SolverConfig()
    results = parallel_map(lambda z: solve_nu(r, z, cfg), list(zs), cfg.workers)
    _emit_sweep(results)
    return results


def _emit_sweep(results: Sequence[Any]) -> None:
    residuals = [res.residual for res in results if isinstance(res, _SolutionBase)]
    emit(
        "sweep",
        points=len(results),
        failed=len(results) - len(residuals),
        max_residual=max(residuals, default=0.0),
    )
