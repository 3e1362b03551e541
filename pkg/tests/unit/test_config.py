"""Unit tests for settings, experiment configs and initial data."""

import json

import numpy as np
import pytest
from pydantic import TypeAdapter, ValidationError

from dsii_scattering.config import (
    ExperimentConfig,
    FileSpec,
    GaussianSpec,
    GridConfig,
    InitialDataSpec,
    Settings,
    SolverConfig,
    StepConfig,
    TwoBumpSpec,
)
from dsii_scattering.initial_data import from_spec, gaussian, two_bump
from dsii_scattering.spectral.field import Field, write_field
from dsii_scattering.spectral.grid import GridSpec


class TestSettings:
    """Test environment-driven settings."""

    def test_defaults(self):
        """Test the documented defaults."""
        s = Settings(_env_file=None)
        assert s.grid_n == 256
        assert s.grid_L == 16.0
        assert s.tol == 1e-10
        assert s.boundary_tol == 1e-8

    def test_env_prefix(self, monkeypatch):
        """Test that DSII_ variables override defaults."""
        monkeypatch.setenv("DSII_GRID_N", "64")
        monkeypatch.setenv("DSII_THREADS", "3")
        s = Settings(_env_file=None)
        assert s.grid_n == 64
        assert s.threads == 3


class TestSolverAndStep:
    """Test solver and step policies."""

    def test_frozen(self):
        """Test that solver configs are immutable."""
        cfg = SolverConfig()
        with pytest.raises(ValidationError):
            cfg.tol = 1e-3

    def test_extra_forbidden(self):
        """Test that unknown keys are rejected."""
        with pytest.raises(ValidationError):
            SolverConfig(tolerance=1e-3)

    def test_positive_tolerance(self):
        """Test that tol must be positive."""
        with pytest.raises(ValidationError):
            SolverConfig(tol=0.0)

    def test_steps_for(self):
        """Test step counts for exact and inexact multiples."""
        step = StepConfig(dt=0.01)
        assert step.steps_for(0.0) == 0
        assert step.steps_for(0.03) == 3
        assert step.steps_for(0.035) == 4
        assert step.steps_for(-0.03) == 3

    def test_dt_for(self):
        """Test that the signed step lands exactly on t."""
        step = StepConfig(dt=0.01)
        assert step.dt_for(0.035) == pytest.approx(0.00875)
        assert step.dt_for(-0.02) == pytest.approx(-0.01)
        assert step.dt_for(0.0) == 0.0


class TestExperimentConfig:
    """Test serialisable experiment configs."""

    def test_odd_grid_rejected(self):
        """Test that odd sample counts are rejected."""
        with pytest.raises(ValidationError):
            GridConfig(n=65, L=4.0)

    def test_overrides(self):
        """Test dotted overrides, skipping None values."""
        cfg = ExperimentConfig().with_overrides(**{"grid.n": 64, "solver.tol": 1e-6, "seed": None, "t": 0.5})
        assert cfg.grid.n == 64
        assert cfg.solver.tol == 1e-6
        assert cfg.t == 0.5
        assert cfg.seed == ExperimentConfig().seed

    def test_override_validation(self):
        """Test that overrides are validated."""
        with pytest.raises(ValidationError):
            ExperimentConfig().with_overrides(**{"grid.n": 15})

    def test_hash_tracks_content(self):
        """Test that equal configs hash equally and changes alter the hash."""
        a = ExperimentConfig()
        b = ExperimentConfig()
        assert a.config_hash() == b.config_hash()
        assert len(a.config_hash()) == 16
        assert a.with_overrides(t=1.0).config_hash() != a.config_hash()

    def test_canonical_json(self):
        """Test that the canonical dump is sorted and round-trips."""
        cfg = ExperimentConfig().with_overrides(**{"grid.L": 8.0})
        data = json.loads(cfg.canonical_json())
        assert list(data) == sorted(data)
        assert ExperimentConfig.model_validate(data).config_hash() == cfg.config_hash()

    def test_from_file(self, tmp_path):
        """Test loading a JSON config with a discriminated initial-data block."""
        path = tmp_path / "exp.json"
        path.write_text(
            json.dumps({"grid": {"n": 32, "L": 5.0}, "initial": {"family": "two-bump"}, "t": 0.1}),
            encoding="utf-8",
        )
        cfg = ExperimentConfig.from_file(path)
        assert cfg.grid.n == 32
        assert isinstance(cfg.initial, TwoBumpSpec)
        assert cfg.t == 0.1

    def test_discriminator(self):
        """Test that the family key selects the initial-data model."""
        adapter = TypeAdapter(InitialDataSpec)
        assert isinstance(adapter.validate_python({"family": "gaussian", "width": 2.0}), GaussianSpec)
        assert isinstance(adapter.validate_python({"family": "file", "path": "q.dsf"}), FileSpec)
        with pytest.raises(ValidationError):
            adapter.validate_python({"family": "sech"})

    def test_unknown_keys(self):
        """Test that typos in a config are errors."""
        with pytest.raises(ValidationError):
            ExperimentConfig.model_validate({"gird": {"n": 32}})


class TestInitialData:
    """Test the named initial-data families."""

    def test_gaussian_peak(self):
        """Test amplitude and center of the Gaussian family."""
        grid = GridSpec(n=32, L=4.0)
        q = gaussian(grid, amplitude=2.0, width=0.5, center=1.0 - 0.5j)
        assert q.sample(1.0 - 0.5j) == pytest.approx(2.0)
        assert q.sup() == pytest.approx(2.0)

    def test_gaussian_width(self):
        """Test that non-positive widths are rejected."""
        with pytest.raises(ValueError, match="width"):
            gaussian(GridSpec(n=8, L=1.0), width=0.0)

    def test_two_bump_is_complex(self):
        """Test that the default two-bump profile is not real."""
        q = two_bump(GridSpec(n=64, L=6.0))
        assert np.abs(q.data.imag).max() > 0.1

    def test_from_spec_gaussian(self):
        """Test building the Gaussian family on a configured grid."""
        q = from_spec(GaussianSpec(amplitude=0.5), GridConfig(n=32, L=5.0))
        assert q.grid.n == 32
        assert q.sup() == pytest.approx(0.5)

    def test_from_spec_two_bump(self):
        """Test building the two-bump family."""
        q = from_spec(TwoBumpSpec(), GridConfig(n=32, L=5.0))
        assert q.relative_error(two_bump(GridSpec(n=32, L=5.0))) == 0.0

    def test_file_grid_takes_precedence(self, tmp_path):
        """Test that file data keeps the grid stored with it."""
        path = tmp_path / "q.dsf"
        write_field(path, gaussian(GridSpec(n=16, L=4.0)))
        q = from_spec(FileSpec(path=str(path)), GridConfig(n=64, L=8.0))
        assert q.grid.n == 16
        assert q.grid.L == 4.0

    def test_file_must_hold_z_field(self, tmp_path):
        """Test that k-space files are refused as initial data."""
        path = tmp_path / "r.dsf"
        write_field(path, Field.zeros(GridSpec(n=16, L=4.0), "k"))
        with pytest.raises(ValueError):
            from_spec(FileSpec(path=str(path)))
