"""Command-line interface: reproducible sweeps, descents, and figure data.

Subcommands:

    poincare        sharp constant (closed form + eigenvalue oracle) at one kappa2
    sweep           energy-landscape table over a kappa2 range
    minimize        multistart projected gradient descent, labeled outcome
    threshold       anisotropy where the winding classes exchange optimality
    elliptic        alpha, complete integral, and minimal energies per kappa2
    phase-portrait  level-set samples of y^2 - kappa^2 sin^2 x for plotting

Exit codes: 0 success, 2 usage error, 3 numerical failure. CYLMIN_THREADS
caps the worker threads used for sweep rows and multistart seeds.
"""

from __future__ import annotations

import argparse
import io
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import elliptic as ell
from . import minimize as mini
from . import relax
from .energy import EnergyParams, circle_energy, cylinder_energy
from .errors import NumericalError
from .grid import make_grid, write_cylinder_csv, write_field_csv

TWOPI = 2.0 * math.pi

COMMANDS = ("poincare", "sweep", "minimize", "threshold", "elliptic", "phase-portrait")


@dataclass(frozen=True)
class RunConfig:
    command: str
    kappa2: float | None = None
    kappa2_min: float | None = None
    kappa2_max: float | None = None
    steps: int | None = None
    grid_n: int = 512
    z_n: int = 65
    seeds: int = 8
    constraint: str = "none"
    degree: int | None = None
    cylinder: bool = False
    out_path: str | None = None
    format: str = "csv"

    tol: float | None = None

    def __post_init__(self):
        if self.command not in COMMANDS:
            raise ValueError(f"unknown command {self.command!r}")
        if self.format not in ("csv", "json"):
            raise ValueError(f"format must be csv or json, got {self.format!r}")
        if self.kappa2 is not None and self.kappa2 < 0.0:
            raise ValueError("kappa2 must be >= 0")
        if (self.kappa2_min is None) != (self.kappa2_max is None):
            raise ValueError("kappa2-min and kappa2-max must be given together")
        if self.kappa2_min is not None:
            if self.kappa2_min <= 0.0 or self.kappa2_max <= 0.0:
                raise ValueError("kappa2 range must be positive")
            if self.kappa2_max <= self.kappa2_min:
                raise ValueError("kappa2-max must exceed kappa2-min")
            if self.steps is None or self.steps < 2:
                raise ValueError("sweeps need --steps >= 2")
        if self.grid_n < 8:
            raise ValueError("grid-n must be >= 8")
        if self.z_n < 3:
            raise ValueError("z-n must be >= 3")
        if self.seeds < 1:
            raise ValueError("seeds must be >= 1")


def thread_count() -> int:
    env = os.environ.get("CYLMIN_THREADS", "").strip()
    if env:
        n = int(env)
        if n < 1:
            raise ValueError("CYLMIN_THREADS must be >= 1")
        return n
    return min(8, os.cpu_count() or 1)


def _parallel_map(fn, items: list):
    items = list(items)
    workers = min(thread_count(), max(1, len(items)))
    if workers == 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(fn, items))


def _emit(text: str, out_path: str | None) -> None:
    if out_path:
        with open(out_path, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
        if not text.endswith("\n"):
            sys.stdout.write("\n")


def _csv_text(header: list[str], rows: list[list]) -> str:
    import csv

    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


_F = "{:.17g}".format


# ---------------------------------------------------------------------------
# subcommands


def cmd_poincare(config: RunConfig) -> int:
    if config.kappa2 is None:
        raise ValueError("poincare needs --kappa2")
    grid = make_grid(config.grid_n)
    res = relax.poincare_result(config.kappa2, grid)
    diff = abs(res.c2_closed - res.c2_numeric)
    if config.format == "json":
        text = json.dumps(
            {
                "kappa2": res.kappa2,
                "c2_closed": res.c2_closed,
                "c2_numeric": res.c2_numeric,
                "phi_kappa": res.phi_kappa,
                "regime": res.regime,
                "difference": diff,
            }
        )
    else:
        text = _csv_text(
            ["kappa2", "c2_closed", "c2_numeric", "phi_kappa", "regime"],
            [
                [
                    _F(res.kappa2),
                    _F(res.c2_closed),
                    _F(res.c2_numeric),
                    _F(res.phi_kappa),
                    res.regime,
                ]
            ],
        )
    _emit(text, config.out_path)
    if config.out_path:
        print(
            f"kappa2={res.kappa2:g} c2_closed={res.c2_closed:.12g}"
            f" c2_numeric={res.c2_numeric:.12g} |diff|={diff:.3e} regime={res.regime}"
        )
    return 0


def _sweep_row(k2: float) -> dict:
    res = relax.closed_form_constant(k2)
    sol = ell.solve_elliptic(k2)
    energy_normal = TWOPI
    energy_axisym = TWOPI * k2 if k2 <= 1.0 else TWOPI
    inplane_min = min(energy_normal, sol.energy_deg0)
    return {
        "kappa2": k2,
        "c2_closed": res.c2_closed,
        "energy_normal": energy_normal,
        "energy_axisym": energy_axisym,
        "energy_deg0": sol.energy_deg0,
        "energy_inplane_min": inplane_min,
    }


def cmd_sweep(config: RunConfig) -> int:
    if config.kappa2_min is None:
        raise ValueError("sweep needs --kappa2-min, --kappa2-max, and --steps")
    values = np.linspace(config.kappa2_min, config.kappa2_max, config.steps)
    rows = _parallel_map(_sweep_row, [float(v) for v in values])
    rows.sort(key=lambda r: r["kappa2"])
    if config.format == "json":
        text = json.dumps(rows)
    else:
        header = [
            "kappa2",
            "c2_closed",
            "energy_normal",
            "energy_axisym",
            "energy_deg0",
            "energy_inplane_min",
        ]
        text = _csv_text(header, [[_F(r[k]) for k in header] for r in rows])
    _emit(text, config.out_path)
    return 0


def cmd_threshold(config: RunConfig) -> int:
    tol = config.tol if config.tol is not None else 1e-10
    root = ell.solve_threshold(tol)
    residual = ell.threshold_gap(root)
    if config.format == "json":
        text = json.dumps({"kappa2_star": root, "residual": residual})
        _emit(text, config.out_path)
    else:
        if config.out_path:
            sol = ell.solve_elliptic(root)
            ell.write_elliptic_csv([sol], config.out_path)
        print(f"kappa2_star={root:.12g} residual={residual:.3e}")
    return 0


def cmd_elliptic(config: RunConfig) -> int:
    if config.kappa2 is not None:
        values = [config.kappa2]
    elif config.kappa2_min is not None:
        values = [
            float(v)
            for v in np.linspace(config.kappa2_min, config.kappa2_max, config.steps)
        ]
    else:
        raise ValueError("elliptic needs --kappa2 or a kappa2 range")
    sols = _parallel_map(ell.solve_elliptic, values)
    sols.sort(key=lambda s: s.kappa2)
    if config.format == "json":
        text = json.dumps(
            [
                {
                    "kappa2": s.kappa2,
                    "alpha": s.alpha,
                    "E_complete": s.E_complete,
                    "energy_deg0": s.energy_deg0,
                    "energy_deg1": TWOPI,
                }
                for s in sols
            ]
        )
    else:
        header = ["kappa2", "alpha", "E_complete", "energy_deg0", "energy_deg1"]
        text = _csv_text(
            header,
            [
                [_F(s.kappa2), _F(s.alpha), _F(s.E_complete), _F(s.energy_deg0), _F(TWOPI)]
                for s in sols
            ],
        )
    _emit(text, config.out_path)
    return 0


def cmd_minimize(config: RunConfig) -> int:
    if config.kappa2 is None:
        raise ValueError("minimize needs --kappa2")
    params = EnergyParams(config.kappa2)
    grid = make_grid(config.grid_n)
    grad_tol = config.tol if config.tol is not None else 1e-5
    opts = mini.DescentOptions(
        grad_tol=grad_tol, seed=0, constraint=config.constraint
    )
    turns = None if config.degree is None else config.degree - 1
    if config.cylinder:
        traces = _parallel_minimize_cylinder(params, grid, config, opts)
    else:
        traces = _parallel_minimize_circle(params, grid, config, opts, turns)
    best = mini.best_trace(traces)

    if config.cylinder:
        try:
            ring = mini.collapse_cylinder(best.final_field)
        except NumericalError:
            ring = best.final_field.ring(best.final_field.z_count // 2)
        match = mini.match_to_family(ring, params.kappa2)
    else:
        match = mini.match_to_family(best.final_field, params.kappa2)

    trace_json = json.dumps(
        {
            "kappa2": params.kappa2,
            "constraint": opts.constraint,
            "iterations": best.iterations,
            "energies": [float(e) for e in best.energies],
            "final_label": match.label,
            "final_energy": best.final_energy,
        }
    )
    print(trace_json)
    if config.out_path:
        if config.cylinder:
            write_cylinder_csv(best.final_field, config.out_path)
        else:
            write_field_csv(best.final_field, config.out_path)
    return 0


def _parallel_minimize_circle(params, grid, config, opts, turns):
    def run(seed: int):
        if opts.constraint == mini.CONSTRAINT_IN_PLANE:
            init = mini.random_in_plane_field(grid, seed, turns)
        else:
            init = mini.random_unit_field(grid, seed)
        return mini.descend_circle(init, params, mini._with_seed(opts, seed))

    return _parallel_map(run, list(range(config.seeds)))


def _parallel_minimize_cylinder(params, grid, config, opts):
    def run(seed: int):
        if opts.constraint == mini.CONSTRAINT_WAS:
            init = mini.random_was_cylinder(grid, config.z_n, seed)
        else:
            init = mini.random_cylinder_field(grid, config.z_n, seed)
        return mini.descend_cylinder(init, params, mini._with_seed(opts, seed))

    return _parallel_map(run, list(range(config.seeds)))


def cmd_phase_portrait(config: RunConfig) -> int:
    if config.kappa2 is None or config.kappa2 <= 0.0:
        raise ValueError("phase-portrait needs --kappa2 > 0")
    k2 = config.kappa2
    kappa = math.sqrt(k2)
    x = np.linspace(-math.pi, math.pi, 257)
    rows = []
    sep = kappa * np.abs(np.sin(x))
    for sign, name in ((1.0, "separatrix+"), (-1.0, "separatrix-")):
        for xi, yi in zip(x, sign * sep):
            rows.append([name, 0.0, float(xi), float(yi)])
    for idx, c in enumerate((-0.75, -0.5, -0.25, 0.25, 0.5, 1.0)):
        level = c * k2
        y2 = level + k2 * np.sin(x) ** 2
        mask = y2 >= 0.0
        y = np.sqrt(np.where(mask, y2, 0.0))
        for sign, suffix in ((1.0, "+"), (-1.0, "-")):
            name = f"level{idx}{suffix}"
            for xi, yi, ok in zip(x, sign * y, mask):
                if ok:
                    rows.append([name, level, float(xi), float(yi)])
    if config.format == "json":
        text = json.dumps(
            [
                {"curve": r[0], "level": r[1], "x": r[2], "y": r[3]}
                for r in rows
            ]
        )
    else:
        text = _csv_text(
            ["curve", "level", "x", "y"],
            [[r[0], _F(r[1]), _F(r[2]), _F(r[3])] for r in rows],
        )
    _emit(text, config.out_path)
    return 0


# ---------------------------------------------------------------------------
# argument parsing


def _add_common(p: argparse.ArgumentParser, *names: str) -> None:
    if "kappa2" in names:
        p.add_argument("--kappa2", type=float, default=None)
    if "range" in names:
        p.add_argument("--kappa2-min", type=float, default=None)
        p.add_argument("--kappa2-max", type=float, default=None)
        p.add_argument("--steps", type=int, default=None)
    if "grid" in names:
        p.add_argument("--grid-n", type=int, default=512)
    if "zn" in names:
        p.add_argument("--z-n", type=int, default=65)
    if "seeds" in names:
        p.add_argument("--seeds", type=int, default=8)
    if "constraint" in names:
        p.add_argument(
            "--constraint", choices=("none", "in-plane", "was"), default="none"
        )
    if "degree" in names:
        p.add_argument("--degree", type=int, default=None)
    if "cylinder" in names:
        p.add_argument("--cylinder", action="store_true")
    if "tol" in names:
        p.add_argument("--tol", type=float, default=None)
    p.add_argument("--out", type=str, default=None)
    p.add_argument("--format", choices=("csv", "json"), default="csv")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cylmin",
        description="variational toolkit for anisotropic unit-vector fields"
        " on the circle and cylinder",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    _add_common(sub.add_parser("poincare"), "kappa2", "grid")
    _add_common(sub.add_parser("sweep"), "range", "grid")
    _add_common(
        sub.add_parser("minimize"),
        "kappa2",
        "grid",
        "zn",
        "seeds",
        "constraint",
        "degree",
        "cylinder",
        "tol",
    )
    _add_common(sub.add_parser("threshold"), "tol")
    _add_common(sub.add_parser("elliptic"), "kappa2", "range")
    _add_common(sub.add_parser("phase-portrait"), "kappa2")
    return parser


def config_from_args(args: argparse.Namespace) -> RunConfig:
    return RunConfig(
        command=args.command,
        kappa2=getattr(args, "kappa2", None),
        kappa2_min=getattr(args, "kappa2_min", None),
        kappa2_max=getattr(args, "kappa2_max", None),
        steps=getattr(args, "steps", None),
        grid_n=getattr(args, "grid_n", 512),
        z_n=getattr(args, "z_n", 65),
        seeds=getattr(args, "seeds", 8),
        constraint=getattr(args, "constraint", "none"),
        degree=getattr(args, "degree", None),
        cylinder=getattr(args, "cylinder", False),
        out_path=getattr(args, "out", None),
        format=getattr(args, "format", "csv"),
        tol=getattr(args, "tol", None),
    )


_DISPATCH = {
    "poincare": cmd_poincare,
    "sweep": cmd_sweep,
    "minimize": cmd_minimize,
    "threshold": cmd_threshold,
    "elliptic": cmd_elliptic,
    "phase-portrait": cmd_phase_portrait,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config = config_from_args(args)
        return _DISPATCH[config.command](config)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
