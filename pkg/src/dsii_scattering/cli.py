"""CLI for the DS-II scattering toolkit."""

import csv
import json
import logging
from collections.abc import Callable, Iterable, Sequence
from pathlib import Path
from typing import Any

import numpy as np
import typer
from pydantic import ValidationError

from dsii_scattering import __version__
from dsii_scattering.config import ExperimentConfig
from dsii_scattering.errors import DSIIError
from dsii_scattering.evolution import default_probe_set, effective_t_max
from dsii_scattering.spectral.field import Field, read_field, write_field
from dsii_scattering.spectral.grid import GridSpec
from dsii_scattering.telemetry import configure_telemetry
from dsii_scattering.toolkit import ScatteringToolkit

# Initialize logging
logging.basicConfig(
    level=logging.INFO,
    format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
)
logger = logging.getLogger(__name__)

# Create Typer app
app = typer.Typer(
    name="dsii-scattering",
    help="Inverse-scattering experiments for the defocussing DS-II equation",
    add_completion=False,
)

MOMENT_GRID = GridSpec(n=256, L=8.0)


def _encode(value: Any) -> Any:
    if isinstance(value, complex | np.complexfloating):
        return [float(value.real), float(value.imag)]
    if isinstance(value, np.floating | np.integer | np.bool_):
        return value.item()
    if isinstance(value, Path):
        return str(value)
    raise TypeError(f"cannot serialise {type(value).__name__}")


def _dumps(payload: Any) -> str:
    return json.dumps(payload, sort_keys=True, indent=2, default=_encode)


def _floats(text: str | None) -> list[float] | None:
    if text is None:
        return None
    return [float(part) for part in text.split(",") if part.strip()]


def _point(text: str | None) -> tuple[float, float] | None:
    values = _floats(text)
    if values is None:
        return None
    if len(values) != 2:
        raise typer.BadParameter(f"expected 'x,y', got {text!r}")
    return values[0], values[1]


def _initial(q: Path | None, amplitude: float | None, width: float | None) -> dict[str, Any] | None:
    if q is not None:
        return {"family": "file", "path": str(q)}
    if amplitude is None and width is None:
        return None
    return {
        "family": "gaussian",
        "amplitude": 1.0 if amplitude is None else amplitude,
        "width": 1.0 if width is None else width,
    }


class Artifacts:
    """Writes outputs stamped with the config hash and library version."""

    def __init__(self, out_dir: Path, cfg: ExperimentConfig):
        self.out_dir = out_dir
        self.meta = {"config_hash": cfg.config_hash(), "version": __version__}

    def path(self, name: str) -> Path:
        return self.out_dir / name

    def field(self, name: str, f: Field) -> Path:
        path = self.path(name)
        write_field(path, f, self.meta)
        return path

    def json(self, name: str, payload: dict[str, Any]) -> Path:
        path = self.path(name)
        path.write_text(_dumps({**self.meta, **payload}) + "\n", encoding="utf-8")
        return path

    def csv(self, name: str | Path, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> Path:
        path = name if isinstance(name, Path) else self.path(name)
        with open(path, "w", newline="", encoding="utf-8") as fh:
            fh.write(f"# dsii-scattering {self.meta['version']} config {self.meta['config_hash']}\n")
            writer = csv.writer(fh)
            writer.writerow(header)
            for row in rows:
                writer.writerow([repr(v) if isinstance(v, float) else v for v in row])
        return path

    def heatmap(self, stem: str, f: Field) -> Path:
        """CSV dump of |f| with a gnuplot script that renders it."""
        x, y = f.grid.mesh
        modulus = np.abs(f.data)
        rows = (
            (float(x[iy, ix]), float(y[iy, ix]), float(modulus[iy, ix]))
            for iy in range(f.grid.n)
            for ix in range(f.grid.n)
        )
        data_path = self.csv(f"{stem}.csv", ["x", "y", "modulus"], rows)
        script = (
            f"set datafile separator ','\n"
            f"set view map\n"
            f"set size ratio -1\n"
            f"set xlabel 'x'\nset ylabel 'y'\n"
            f"set title '|{stem}|'\n"
            f"splot '{data_path.name}' every ::1 using 1:2:3 with image notitle\n"
        )
        script_path = self.path(f"{stem}.gp")
        script_path.write_text(script, encoding="utf-8")
        return script_path


def _resolve(ctx: typer.Context, **task: Any) -> ExperimentConfig:
    state = ctx.obj or {}
    cfg_path = state.get("config")
    base = ExperimentConfig.from_file(cfg_path) if cfg_path else ExperimentConfig()
    overrides = {**state.get("overrides", {}), **task}
    return base.with_overrides(**overrides)


def _fail(name: str, payload: dict[str, Any], out_dir: Path | None) -> None:
    typer.echo(json.dumps(payload, sort_keys=True), err=True)
    if out_dir is not None:
        status = {**payload, "task": name, "incomplete": True}
        (out_dir / "status.json").write_text(_dumps(status) + "\n", encoding="utf-8")
    raise typer.Exit(code=int(payload["exit_code"]))


def _run(
    ctx: typer.Context,
    name: str,
    body: Callable[[ScatteringToolkit, ExperimentConfig, Artifacts], None],
    **task: Any,
) -> None:
    out_dir: Path | None = None
    try:
        cfg = _resolve(ctx, **task)
        out_dir = Path(cfg.out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        artifacts = Artifacts(out_dir, cfg)
        artifacts.json("config.json", {"config": json.loads(cfg.canonical_json())})
        kit = ScatteringToolkit.from_config(cfg, boundary_tol=(ctx.obj or {}).get("boundary_tol"))
        with kit:
            body(kit, cfg, artifacts)
        artifacts.json("status.json", {"status": "ok", "task": name})
    except DSIIError as e:
        logger.error(f"Error running {name}: {e}")
        _fail(name, e.to_dict(), out_dir)
    except (ValidationError, ValueError, OSError) as e:
        logger.error(f"Error running {name}: {e}")
        payload = {"status": "error", "error": type(e).__name__, "message": str(e), "exit_code": 2}
        _fail(name, payload, out_dir)
    except Exception as e:
        logger.exception(f"Unexpected error running {name}")
        payload = {"status": "error", "error": type(e).__name__, "message": str(e), "exit_code": 1}
        _fail(name, payload, out_dir)


@app.callback()
def main(
    ctx: typer.Context,
    grid_n: int = typer.Option(None, "--grid-n", help="Samples per axis"),
    grid_L: float = typer.Option(None, "--grid-L", help="Box half-width"),
    tol: float = typer.Option(None, "--tol", help="Relative residual target"),
    threads: int = typer.Option(None, "--threads", "-j", help="Worker threads"),
    seed: int = typer.Option(None, "--seed", help="Monte-Carlo seed"),
    out: Path = typer.Option(None, "--out", "-o", help="Output directory"),
    boundary_tol: float = typer.Option(None, "--boundary-tol", help="Box-truncation guard"),
    config: Path = typer.Option(None, "--config", "-c", help="JSON experiment config"),
    verbose: bool = typer.Option(False, "--verbose", "-v", help="Debug logging and solver telemetry"),
) -> None:
    """Options shared by every subcommand; flags override the config file."""
    if verbose:
        logging.getLogger().setLevel(logging.DEBUG)
    configure_telemetry(True if verbose else None)
    ctx.obj = {
        "config": config,
        "boundary_tol": boundary_tol,
        "overrides": {
            "grid.n": grid_n,
            "grid.L": grid_L,
            "solver.tol": tol,
            "solver.workers": threads,
            "seed": seed,
            "out_dir": str(out) if out is not None else None,
        },
    }


QOption = typer.Option(None, "--q0", "--q", help="DSF1 file with the initial data")
AmplitudeOption = typer.Option(None, "--amplitude", help="Gaussian amplitude")
WidthOption = typer.Option(None, "--width", help="Gaussian width")


@app.command()
def forward(
    ctx: typer.Context, q: Path = QOption, amplitude: float = AmplitudeOption, width: float = WidthOption
) -> None:
    """
    Forward scattering transform r = R q.

    Example:
        dsii-scattering --grid-n 128 --grid-L 10 forward --amplitude 1
    """

    def body(kit: ScatteringToolkit, cfg: ExperimentConfig, art: Artifacts) -> None:
        result = kit.forward(kit.initial(cfg.initial))
        art.field("r.dsf", result.field)
        summary = result.summary()
        art.json("forward.json", dict(summary))
        print(f"✓ r written to {art.path('r.dsf')}")
        print(f"  Plancherel defect: {summary['plancherel_defect']:.3e}")

    _run(ctx, "forward", body, initial=_initial(q, amplitude, width))


@app.command()
def inverse(
    ctx: typer.Context, r: Path = typer.Option(..., "--r", help="DSF1 file with k-space data")
) -> None:
    """Inverse scattering transform q = I r."""

    def body(kit: ScatteringToolkit, cfg: ExperimentConfig, art: Artifacts) -> None:
        result = kit.inverse(read_field(r).require("k"))
        art.field("q.dsf", result.field)
        art.json("inverse.json", dict(result.summary()))
        print(f"✓ q written to {art.path('q.dsf')}")
        print(f"  Plancherel defect: {result.plancherel_defect:.3e}")

    _run(ctx, "inverse", body)


@app.command()
def roundtrip(
    ctx: typer.Context, q: Path = QOption, amplitude: float = AmplitudeOption, width: float = WidthOption
) -> None:
    """Forward then inverse transform, reporting the reconstruction error."""

    def body(kit: ScatteringToolkit, cfg: ExperimentConfig, art: Artifacts) -> None:
        report, r_field, q_back = kit.roundtrip(kit.initial(cfg.initial))
        art.field("r.dsf", r_field)
        art.field("q_roundtrip.dsf", q_back)
        art.json("roundtrip.json", dict(report))
        print(f"✓ Round trip relative L2 error: {report['rel_l2_error']:.3e}")

    _run(ctx, "roundtrip", body, initial=_initial(q, amplitude, width))


@app.command()
def evolve(
    ctx: typer.Context,
    t: float = typer.Option(None, "--t", help="Final time"),
    q: Path = QOption,
    amplitude: float = AmplitudeOption,
    width: float = WidthOption,
) -> None:
    """Evolve by inverse scattering: q(t) = I(exp(4it Re k^2) R q0)."""

    def body(kit: ScatteringToolkit, cfg: ExperimentConfig, art: Artifacts) -> None:
        q0 = kit.initial(cfg.initial)
        q_t = kit.evolve(q0, cfg.t)
        art.field("q_t.dsf", q_t)
        art.heatmap("q_t", q_t)
        art.json(
            "evolve.json",
            {
                "t": cfg.t,
                "t_max": effective_t_max(kit.forward(q0).field),
                "l2_initial": q0.norm(),
                "l2_final": q_t.norm(),
            },
        )
        print(f"✓ q({cfg.t}) written to {art.path('q_t.dsf')}")

    _run(ctx, "evolve", body, t=t, initial=_initial(q, amplitude, width))


@app.command()
def reference(
    ctx: typer.Context,
    t: float = typer.Option(None, "--t", help="Final time"),
    dt: float = typer.Option(None, "--dt", help="Time step"),
    telemetry_every: int = typer.Option(10, "--telemetry-every", help="Steps between conservation rows"),
    q: Path = QOption,
    amplitude: float = AmplitudeOption,
    width: float = WidthOption,
) -> None:
    """Evolve with the split-step spectral reference solver."""

    def body(kit: ScatteringToolkit, cfg: ExperimentConfig, art: Artifacts) -> None:
        q_ref, records = kit.reference(kit.initial(cfg.initial), cfg.t, telemetry_every)
        art.field("q_reference.dsf", q_ref)
        art.heatmap("q_reference", q_ref)
        art.csv(
            "conservation.csv",
            ["step", "t", "l2_norm", "sup_norm"],
            ([rec["step"], rec["t"], rec["l2_norm"], rec["sup_norm"]] for rec in records),
        )
        print(f"✓ Reference q({cfg.t}) written to {art.path('q_reference.dsf')}")

    _run(ctx, "reference", body, t=t, initial=_initial(q, amplitude, width), **{"step.dt": dt})


@app.command()
def compare(
    ctx: typer.Context,
    t: float = typer.Option(None, "--t", help="Final time"),
    dt: float = typer.Option(None, "--dt", help="Split-step time step"),
    q: Path = QOption,
    amplitude: float = AmplitudeOption,
    width: float = WidthOption,
) -> None:
    """Compare inverse-scattering evolution with the split-step reference."""

    def body(kit: ScatteringToolkit, cfg: ExperimentConfig, art: Artifacts) -> None:
        report, q_scat, q_ref = kit.compare(kit.initial(cfg.initial), cfg.t)
        art.field("q_scattering.dsf", q_scat)
        art.field("q_reference.dsf", q_ref)
        art.json("compare.json", dict(report))
        print(f"✓ Relative L2 difference at t={cfg.t}: {report['rel_l2']:.3e}")
        print(f"  Modulus-only difference: {report['modulus_rel_l2']:.3e}")

    _run(ctx, "compare", body, t=t, initial=_initial(q, amplitude, width), **{"step.dt": dt})


@app.command()
def asymptotics(
    ctx: typer.Context,
    tlist: str = typer.Option(None, "--tlist", help="Comma-separated times"),
    full_grid: bool = typer.Option(False, "--full-grid", help="Sup norm over the whole grid"),
    q: Path = QOption,
    amplitude: float = AmplitudeOption,
    width: float = WidthOption,
) -> None:
    """Tabulate t * ||q(t) - u(t)||_inf against the linear solution."""

    def body(kit: ScatteringToolkit, cfg: ExperimentConfig, art: Artifacts) -> None:
        q0 = kit.initial(cfg.initial)
        probe = None if full_grid else default_probe_set(q0.grid)
        rows = kit.asymptotics(q0, cfg.tlist, probe)
        art.csv(
            "asymptotics.csv",
            ["t", "sup_gap", "t_times_gap", "l2_conservation_defect"],
            ([row["t"], row["sup_gap"], row["t_times_gap"], row["l2_conservation_defect"]] for row in rows),
        )
        for row in rows:
            print(f"  t={row['t']:<8g} t*gap={row['t_times_gap']:.4e}")

    _run(ctx, "asymptotics", body, tlist=_floats(tlist), initial=_initial(q, amplitude, width))


@app.command()
def symmetry(
    ctx: typer.Context, q: Path = QOption, amplitude: float = AmplitudeOption, width: float = WidthOption
) -> None:
    """Check the symmetries of the forward transform."""

    def body(kit: ScatteringToolkit, cfg: ExperimentConfig, art: Artifacts) -> None:
        report = kit.symmetry(kit.initial(cfg.initial))
        art.json("symmetry.json", dict(report))
        print(f"✓ negation {report['negation']:.2e}, reflection {report['reflection']:.2e}")
        print(f"  conjugation supported: {report['supported_conjugation']}")

    _run(ctx, "symmetry", body, initial=_initial(q, amplitude, width))


@app.command()
def expansion(
    ctx: typer.Context,
    z: str = typer.Option(None, "--z", help="Fit point 'x,y'"),
    kladder: str = typer.Option(None, "--kladder", help="Comma-separated increasing k values"),
    csv_path: Path = typer.Option(None, "--csv", help="CSV destination for the fit rows"),
    q: Path = QOption,
    amplitude: float = AmplitudeOption,
    width: float = WidthOption,
) -> None:
    """Fit large-k expansion coefficients and compare with closed forms."""

    def body(kit: ScatteringToolkit, cfg: ExperimentConfig, art: Artifacts) -> None:
        result = kit.expansion(kit.initial(cfg.initial), complex(*cfg.z), cfg.kladder)
        rows = result.pop("rows")
        art.csv(
            csv_path or "expansion.csv",
            ["name", "fitted_re", "fitted_im", "closed_re", "closed_im", "rel_error"],
            (
                [
                    row["name"],
                    row["fitted"].real,
                    row["fitted"].imag,
                    row["closed_form"].real,
                    row["closed_form"].imag,
                    row["rel_error"],
                ]
                for row in rows
            ),
        )
        result["moments"] = [kit.moment(n, grid=MOMENT_GRID) for n in (0, 1, 2)]
        art.json("expansion.json", result)
        for row in rows:
            print(f"  {row['name']}: rel error {row['rel_error']:.3e}")

    _run(
        ctx,
        "expansion",
        body,
        z=_point(z),
        kladder=_floats(kladder),
        initial=_initial(q, amplitude, width),
    )


@app.command()
def criticality(
    ctx: typer.Context,
    n: int = typer.Option(None, "--n", help="Order of the Brown form"),
    exponents: str = typer.Option(None, "--exponents", help="Comma-separated exponents (e.g. 2,1/2,inf)"),
) -> None:
    """
    Exact criticality check of the Brown linear maps.

    Example:
        dsii-scattering criticality --n 1
    """

    def body(kit: ScatteringToolkit, cfg: ExperimentConfig, art: Artifacts) -> None:
        report = kit.criticality(cfg.bl_n, cfg.exponents)
        art.json("criticality.json", dict(report.to_json()))
        print(report.render())

    parsed = [part.strip() for part in exponents.split(",")] if exponents else None
    _run(ctx, "criticality", body, bl_n=n, exponents=parsed)


@app.command("lambda")
def lambda_(
    ctx: typer.Context,
    n: int = typer.Option(None, "--n", help="Order (1 or 2)"),
    samples: str = typer.Option(None, "--samples", help="Comma-separated sample counts (e.g. 1e4,1e5)"),
    width: float = typer.Option(1.0, "--width", help="Width of the unit-amplitude Gaussian inputs"),
) -> None:
    """Monte-Carlo estimate of the normalised multilinear form."""

    def body(kit: ScatteringToolkit, cfg: ExperimentConfig, art: Artifacts) -> None:
        counts = [int(float(s)) for s in samples.split(",")] if samples else [cfg.samples]
        estimates = kit.lambda_estimates(cfg.bl_n, counts, width)
        art.csv(
            "lambda.csv",
            ["n", "samples", "estimate", "stderr", "tail_index"],
            ([e["n"], e["samples"], e["estimate"], e["stderr"], e["tail_index"]] for e in estimates),
        )
        for e in estimates:
            print(f"  {e['samples']:>10d} samples: {e['estimate']:.6f} ± {e['stderr']:.2e}")

    _run(ctx, "lambda", body, bl_n=n)


@app.command("verify-all")
def verify_all(
    ctx: typer.Context, quick: bool = typer.Option(False, "--quick", help="Reduced grids")
) -> None:
    """Run the acceptance suite and write verify.json."""

    def body(kit: ScatteringToolkit, cfg: ExperimentConfig, art: Artifacts) -> None:
        checks = kit.verify(quick=quick)
        failed = [c["name"] for c in checks if not c["passed"]]
        art.json(
            "verify.json",
            {"quick": quick, "checks": checks, "passed": len(checks) - len(failed), "total": len(checks)},
        )
        for c in checks:
            mark = "✓" if c["passed"] else "✗"
            print(f"{mark} {c['name']}: {c['value']:.4g} (threshold {c['threshold']:.4g})")
        if failed:
            payload = {
                "status": "failed",
                "error": "AcceptanceFailure",
                "message": f"{len(failed)} checks failed: {', '.join(failed)}",
                "exit_code": 3,
            }
            _fail("verify-all", payload, art.out_dir)

    _run(ctx, "verify-all", body)


@app.command()
def info() -> None:
    """Display configuration information."""
    from dsii_scattering.config import settings

    print(f"Version: {__version__}")
    print(f"Grid: n={settings.grid_n}, L={settings.grid_L}")
    print(f"Solver tolerance: {settings.tol}")
    print(f"Threads: {settings.threads}")
    print(f"Output directory: {settings.out_dir}")


if __name__ == "__main__":
    app()
