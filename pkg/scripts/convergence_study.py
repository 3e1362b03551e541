"""Grid-convergence ladder for the Plancherel and round-trip defects."""

from __future__ import annotations

import argparse
import math
import sys
from typing import Any

from dsii_scattering.config import SolverConfig
from dsii_scattering.toolkit import ScatteringToolkit, self_dual_grid


def pretty(data: Any) -> str:
    """Return deterministic pretty JSON-like string."""
    import json

    return json.dumps(data, indent=2, sort_keys=True)


def main() -> int:
    parser = argparse.ArgumentParser(
        description="Plancherel and round-trip defects of a Gaussian over a ladder of grids."
    )
    parser.add_argument(
        "--sizes",
        default="32,48,64,96",
        help="Comma-separated samples per axis; each runs on its self-dual box.",
    )
    parser.add_argument("--amplitude", type=float, default=1.0, help="Gaussian amplitude.")
    parser.add_argument("--width", type=float, default=1.0, help="Gaussian width.")
    parser.add_argument("--tol", type=float, default=1e-10, help="Solver residual target.")
    parser.add_argument("--threads", type=int, default=1, help="Worker threads per sweep.")
    parser.add_argument(
        "--boundary-tol",
        type=float,
        default=1e-3,
        help="Box-truncation guard; small boxes need a loose value.",
    )
    parser.add_argument(
        "--max-defect",
        type=float,
        default=None,
        help="Fail unless the finest grid's round-trip error is below this.",
    )

    args = parser.parse_args()
    sizes = [int(s) for s in args.sizes.split(",") if s.strip()]
    solver = SolverConfig(tol=args.tol, workers=args.threads)

    rows = []
    for n in sizes:
        grid = self_dual_grid(n)
        print(f"→ n={n}, L={grid.L:.4f}", file=sys.stderr, flush=True)
        with ScatteringToolkit(grid, solver, boundary_tol=args.boundary_tol) as kit:
            report, _, _ = kit.roundtrip(kit.gaussian(args.amplitude, args.width))
        rows.append(
            {
                "n": n,
                "L": grid.L,
                "plancherel_defect": report["forward"]["plancherel_defect"],
                "roundtrip_error": report["rel_l2_error"],
                "max_residual": max(report["forward"]["max_residual"], report["inverse"]["max_residual"]),
            }
        )

    for coarse, fine in zip(rows, rows[1:]):
        if fine["roundtrip_error"] > 0 and coarse["roundtrip_error"] > 0:
            fine["observed_order"] = math.log(coarse["roundtrip_error"] / fine["roundtrip_error"]) / math.log(
                fine["n"] / coarse["n"]
            )
    print(pretty(rows))

    if args.max_defect is not None and rows and rows[-1]["roundtrip_error"] > args.max_defect:
        print(
            f"\n✗ Round-trip error {rows[-1]['roundtrip_error']:.3e} above {args.max_defect:.3e}",
            file=sys.stderr,
        )
        return 1
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
