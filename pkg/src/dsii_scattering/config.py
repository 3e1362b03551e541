"""Configuration management for the DS-II scattering toolkit."""

import hashlib
import json
import math
from pathlib import Path
from typing import Annotated, Literal

from pydantic import BaseModel, ConfigDict, Field, field_validator
from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """Application settings."""

    model_config = SettingsConfigDict(
        env_file=".env",
        env_file_encoding="utf-8",
        env_prefix="DSII_",
        case_sensitive=False,
    )

    # Default computational box
    grid_n: int = 256
    grid_L: float = 16.0

    # Iterative solver defaults
    tol: float = 1e-10
    max_iter: int = 200
    restart: int = 30
    threads: int = 1

    seed: int = 7

    # Fraction of L2 norm allowed outside |z| > L/2
    boundary_tol: float = 1e-8
    # Relative amplitude below which spectral data counts as absent
    support_threshold: float = 1e-8

    out_dir: str = "runs"
    telemetry: bool = False


# Global settings instance
settings = Settings()


class SolverConfig(BaseModel):
    """Iterative-solver policy for the coupled dbar systems."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    method: Literal["auto", "krylov", "neumann"] = Field(
        "auto", description="auto probes the operator norm and picks Neumann or Krylov"
    )
    tol: float = Field(default_factory=lambda: settings.tol, gt=0, description="Relative residual target")
    max_iter: int = Field(default_factory=lambda: settings.max_iter, ge=1, description="Iteration cap")
    restart: int = Field(default_factory=lambda: settings.restart, ge=1, description="Krylov restart length")
    workers: int = Field(default_factory=lambda: settings.threads, ge=1, description="Parallel sweep width")
    neumann_threshold: float = Field(0.5, gt=0, lt=1, description="Probe bound that certifies Neumann")
    probe_iters: int = Field(20, ge=5, description="Power iterations for the norm probe")
    probe_seed: int = Field(1234, description="Seed of the probe start vector")
    mean_compensation: bool = Field(
        True, description="Restore the planar far field of the periodic Cauchy transform"
    )


class StepConfig(BaseModel):
    """Time-stepping policy for the split-step reference solver."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    dt: float = Field(1e-3, gt=0, description="Requested time step")
    scheme: Literal["strang"] = "strang"

    def steps_for(self, t: float) -> int:
        """Number of steps needed to reach |t| with steps no longer than dt."""
        if t == 0:
            return 0
        return max(1, math.ceil(abs(t) / self.dt - 1e-9))

    def dt_for(self, t: float) -> float:
        """Signed step such that dt * steps == t."""
        steps = self.steps_for(t)
        return 0.0 if steps == 0 else t / steps


class GridConfig(BaseModel):
    """Square periodic box."""

    model_config = ConfigDict(extra="forbid")

    n: int = Field(default_factory=lambda: settings.grid_n, ge=8)
    L: float = Field(default_factory=lambda: settings.grid_L, gt=0)

    @field_validator("n")
    @classmethod
    def _even(cls, v: int) -> int:
        if v % 2:
            raise ValueError("n must be even")
        return v


class GaussianSpec(BaseModel):
    """q(z) = amplitude * exp(-|z - center|^2 / width^2)."""

    model_config = ConfigDict(extra="forbid")

    family: Literal["gaussian"] = "gaussian"
    amplitude: float = 1.0
    width: float = Field(1.0, gt=0)
    center: tuple[float, float] = (0.0, 0.0)


class TwoBumpSpec(BaseModel):
    """Sum of two Gaussians with independent complex amplitudes."""

    model_config = ConfigDict(extra="forbid")

    family: Literal["two-bump"] = "two-bump"
    amplitudes: tuple[tuple[float, float], tuple[float, float]] = ((1.0, 0.0), (0.0, 0.6))
    widths: tuple[float, float] = (0.8, 0.6)
    centers: tuple[tuple[float, float], tuple[float, float]] = ((-0.8, 0.3), (0.9, -0.5))


class FileSpec(BaseModel):
    """Initial data read from a DSF1 file."""

    model_config = ConfigDict(extra="forbid")

    family: Literal["file"] = "file"
    path: str


InitialDataSpec = Annotated[GaussianSpec | TwoBumpSpec | FileSpec, Field(discriminator="family")]


class ExperimentConfig(BaseModel):
    """Fully serialisable description of one CLI run."""

    model_config = ConfigDict(extra="forbid")

    grid: GridConfig = Field(default_factory=GridConfig)
    initial: InitialDataSpec = Field(default_factory=GaussianSpec)
    solver: SolverConfig = Field(default_factory=SolverConfig)
    step: StepConfig = Field(default_factory=StepConfig)

    # Task parameters
    t: float = 0.25
    tlist: list[float] = Field(default_factory=lambda: [1.0, 2.0, 4.0])
    kladder: list[float] = Field(default_factory=lambda: [8.0, 12.0, 16.0, 24.0, 32.0])
    z: tuple[float, float] = (0.0, 0.0)
    bl_n: int = Field(1, ge=1)
    exponents: list[str] | None = None
    samples: int = Field(100_000, ge=100)

    seed: int = Field(default_factory=lambda: settings.seed)
    out_dir: str = Field(default_factory=lambda: settings.out_dir)

    @classmethod
    def from_file(cls, path: str | Path) -> "ExperimentConfig":
        """Load a config from a single JSON document."""
        with open(path, encoding="utf-8") as fh:
            return cls.model_validate(json.load(fh))

    def with_overrides(self, **overrides: object) -> "ExperimentConfig":
        """Return a copy with dotted-path overrides applied (``grid.n=128``)."""
        data = self.model_dump()
        for dotted, value in overrides.items():
            if value is None:
                continue
            node = data
            *parents, leaf = dotted.split(".")
            for key in parents:
                node = node[key]
            node[leaf] = value
        return type(self).model_validate(data)

    def canonical_json(self) -> str:
        """Deterministic JSON dump used for hashing and echoing."""
        return json.dumps(self.model_dump(mode="json"), sort_keys=True, separators=(",", ":"))

    def config_hash(self) -> str:
        """Short SHA-256 digest of the resolved config."""
        return hashlib.sha256(self.canonical_json().encode("utf-8")).hexdigest()[:16]
