"""Command-line interface.

    boojum fit       --input prior.csv [--state state.json]
    boojum update    --state state.json [--input stream.csv|-]
    boojum predict   --state state.json --input points.csv [--oracle]
    boojum check     (--state state.json | --input obs.csv)
    boojum scenario  {S1..S5} | --input obs.csv [--output-dir DIR]

``update`` is the streaming loop: for each observation the hyperparameters
are updated, the MAP estimate re-solved (warm-started from the previous
one) and a report line emitted; the final state is written back.
"""

import argparse
import csv
import json
import os
import sys
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import fileio
from .core import check_convergence, from_pseudo_observations, update, validate_simplex
from .errors import (
    BoojumError,
    CapabilityError,
    ConvergenceError,
    DomainError,
    ImproperHyperparametersError,
    ParseError,
)
from .oracle import QuadratureGrid, exact_predictive_log_pdf
from .predictive import map_predictive_log_pdf
from .scenarios import CANONICAL, build_bundle, canonical
from .solver import Method, SolverConfig, solve_map

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_PARSE = 3
EXIT_DOMAIN = 4
EXIT_IMPROPER = 5
EXIT_CAPABILITY = 6
EXIT_CONVERGENCE = 7
EXIT_IO = 8

MAX_RESOLUTION = 2000

_METHODS = {"fixed-point": Method.FIXED_POINT, "newton": Method.NEWTON, "gradient": Method.GRADIENT_ASCENT}


@dataclass
class RunConfig:
    command: str
    input: Optional[str] = None
    state: Optional[str] = None
    output: Optional[str] = None
    output_dir: Optional[str] = None
    format: str = "json"
    tolerance: float = 1e-9
    max_iters: int = 1000
    method: str = "fixed-point"
    oracle: bool = False
    oracle_resolution: Optional[int] = None
    grid_resolution: int = 400
    bounds: tuple = (0.0, 100.0)
    solve_every: int = 1
    scenario: Optional[str] = None
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.command not in ("fit", "update", "predict", "check", "scenario"):
            raise ValueError(f"unknown command {self.command!r}")
        for name in ("oracle_resolution", "grid_resolution"):
            value = getattr(self, name)
            if value is not None and not 2 <= value <= MAX_RESOLUTION:
                raise ValueError(f"{name.replace('_', '-')} must be in [2, {MAX_RESOLUTION}]")
        if self.solve_every < 1:
            raise ValueError("solve-every must be >= 1")
        if self.format not in ("json", "csv"):
            raise ValueError("format must be json or csv")

    def solver_config(self, initial_alpha=None) -> SolverConfig:
        return SolverConfig(
            method=_METHODS[self.method],
            gradient_tolerance=self.tolerance,
            max_iterations=self.max_iters,
            initial_alpha=initial_alpha,
        )


def _warn(message):
    print(f"warning: {message}", file=sys.stderr)


def _fit_report(hyper, config):
    report = check_convergence(hyper)
    out = {
        "dimension": hyper.dimension,
        "nu": hyper.nu,
        "chi": hyper.chi.tolist(),
        "convergence": report.as_dict(),
    }
    if report.proper:
        sol = solve_map(hyper, config.solver_config())
        out["alpha_map"] = sol.alpha_map.tolist()
        out["solver"] = {
            "method": sol.method_used.value,
            "iterations": sol.iterations,
            "gradient_sup_norm": sol.gradient_sup_norm,
            "objective_value": sol.objective_value,
        }
    else:
        failed = ", ".join(report.failed_conditions())
        out["warning"] = (
            f"improper prior: convergence condition(s) {failed} violated "
            f"(geometric mean sum {report.geometric_mean_sum}); the mode diverges and no alpha_map exists"
        )
    return out


def cmd_fit(config: RunConfig) -> dict:
    """Hyperparameters, convergence report and MAP estimate from an observation file."""
    obs = fileio.read_observations(config.input)
    hyper = from_pseudo_observations(obs)
    out = _fit_report(hyper, config)
    if "warning" in out:
        _warn(out["warning"])
    if config.state:
        fileio.write_state(config.state, hyper, n_updates=0)
    return out


def cmd_check(config: RunConfig) -> dict:
    if config.state:
        hyper, _ = fileio.read_state(config.state)
    elif config.input:
        hyper = from_pseudo_observations(fileio.read_observations(config.input))
    else:
        raise ParseError("check needs --state or --input")
    out = {"dimension": hyper.dimension, "nu": hyper.nu, "chi": hyper.chi.tolist()}
    out.update(check_convergence(hyper).as_dict())
    return out


def cmd_update(config: RunConfig, stream=None):
    """Consume observations one at a time; yields one report per accepted line.

    Lines that fail parsing or validation are skipped with a diagnostic on
    stderr and leave the state untouched. The final state is written to
    ``config.state`` once the stream ends.
    """
    hyper, meta = fileio.read_state(config.state)
    n_updates = int(meta.get("n_updates", 0))
    created = meta.get("created")
    previous = None
    accepted = 0
    if stream is None:
        with fileio._maybe_open(config.input) as fh:
            text = fh.read()
    else:
        text = stream.read() if hasattr(stream, "read") else stream
    try:
        for line_no, raw in enumerate(text.splitlines(), 1):
            cells = [c.strip() for c in next(csv.reader([raw]), [])]
            if not cells or all(c == "" for c in cells) or cells[0].startswith("#"):
                continue
            try:
                values = [float(c) for c in cells]
            except ValueError:
                if line_no == 1:
                    continue  # header
                _warn(f"line {line_no}: skipped, non-numeric value in {raw!r}")
                continue
            try:
                theta = validate_simplex(values, hyper.dimension, label=f"line {line_no}")
            except DomainError as exc:
                _warn(f"{exc}; skipped")
                continue
            hyper = update(hyper, theta)
            accepted += 1
            n_updates += 1
            record = {"line": line_no, "nu": hyper.nu, "chi": hyper.chi.tolist()}
            report = check_convergence(hyper)
            record["proper"] = report.proper
            if report.proper and accepted % config.solve_every == 0:
                init = previous if previous is not None and previous.shape == (hyper.dimension,) else None
                try:
                    sol = solve_map(hyper, config.solver_config(initial_alpha=init))
                except ConvergenceError:
                    if init is None:
                        raise
                    # a stale warm start should never be fatal; retry cold
                    sol = solve_map(hyper, config.solver_config())
                previous = sol.alpha_map
                record["alpha_map"] = sol.alpha_map.tolist()
                record["predictive"] = {"family": "dirichlet", "alpha": sol.alpha_map.tolist()}
            yield record
    finally:
        fileio.write_state(config.state, hyper, n_updates=n_updates, created=created)


def cmd_predict(config: RunConfig) -> list:
    """MAP predictive log-density per point; with ``oracle`` also the exact one and their log ratio."""
    hyper, _ = fileio.read_state(config.state)
    report = check_convergence(hyper)
    if not report.proper:
        raise ImproperHyperparametersError(
            f"state is improper, no predictive exists: {json.dumps(report.as_dict())}", report=report
        )
    sol = solve_map(hyper, config.solver_config())
    points = fileio.read_observations(config.input).observations
    if points.shape[1] != hyper.dimension:
        raise DomainError(f"points have dimension {points.shape[1]}, state has {hyper.dimension}")
    map_lp = map_predictive_log_pdf(points, sol)
    rows = []
    exact_lp = None
    if config.oracle:
        if hyper.dimension > 3:
            raise CapabilityError("the exact predictive is available only for D <= 3")
        grid = QuadratureGrid.for_hyper(hyper, config.oracle_resolution)
        exact_lp = exact_predictive_log_pdf(points, hyper, grid)
    for i, theta in enumerate(points):
        row = {"theta": theta.tolist(), "map_log_pdf": float(map_lp[i])}
        if exact_lp is not None:
            row["exact_log_pdf"] = float(exact_lp[i])
            row["log_ratio"] = float(exact_lp[i] - map_lp[i])
        rows.append(row)
    return rows


def cmd_scenario(config: RunConfig) -> dict:
    if config.scenario:
        obs = canonical(config.scenario)
        name = config.scenario.upper().replace("Ş", "S")
    elif config.input:
        obs = fileio.read_observations(config.input)
        name = os.path.splitext(os.path.basename(config.input))[0]
    else:
        raise ParseError("scenario needs a canonical name or --input")
    if obs.dimension > 3:
        raise CapabilityError("scenario bundles need the quadrature oracle, available only for D <= 3")
    return build_bundle(
        obs,
        name=name,
        bounds=config.bounds,
        resolution=config.grid_resolution,
        solver_config=config.solver_config(),
        oracle_nodes=config.oracle_resolution,
    )


def write_bundle_files(bundle, out_dir):
    os.makedirs(out_dir, exist_ok=True)
    name = bundle["scenario"]
    grid = bundle["density_grid"]
    if bundle["dimension"] == 2:
        fileio.write_matrix_csv(
            os.path.join(out_dir, f"{name}_density.csv"), grid["axes"][0], grid["axes"][1], grid["values"]
        )
    else:
        axes = [np.asarray(a) for a in grid["axes"]]
        mesh = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, len(axes))
        vals = np.asarray(grid["values"]).ravel()
        with open(os.path.join(out_dir, f"{name}_density.csv"), "w", newline="", encoding="utf-8") as fh:
            fileio.write_table_csv(
                fh,
                [f"alpha_{k + 1}" for k in range(len(axes))] + ["density"],
                ([repr(float(x)) for x in m] + [repr(float(v))] for m, v in zip(mesh, vals)),
            )
    if "predictive" in bundle:
        pred = bundle["predictive"]
        d = bundle["dimension"]
        with open(os.path.join(out_dir, f"{name}_predictive.csv"), "w", newline="", encoding="utf-8") as fh:
            fileio.write_table_csv(
                fh,
                [f"theta_{k + 1}" for k in range(d)] + ["exact", "map"],
                ([repr(t) for t in th] + [repr(e), repr(m)] for th, e, m in zip(pred["theta"], pred["exact"], pred["map"])),
            )
    summary = {k: v for k, v in bundle.items() if k not in ("density_grid", "predictive")}
    summary["density_grid"] = {k: v for k, v in grid.items() if k not in ("values", "axes")}
    summary["files"] = sorted(f for f in os.listdir(out_dir) if f.startswith(f"{name}_"))
    with open(os.path.join(out_dir, f"{name}_bundle.json"), "w", encoding="utf-8") as fh:
        json.dump(summary, fh, indent=2)
    return summary


def _emit(obj, config, fh):
    if config.format == "json":
        json.dump(obj, fh, indent=2)
        fh.write("\n")
        return
    w = csv.writer(fh)
    if isinstance(obj, dict):
        w.writerow(["key", "value"])
        for k, v in _flatten(obj):
            w.writerow([k, repr(v) if isinstance(v, float) else v])
    else:
        rows = [dict(_flatten(r)) for r in obj]
        header = list(rows[0]) if rows else []
        w.writerow(header)
        for r in rows:
            w.writerow([repr(r[h]) if isinstance(r.get(h), float) else r.get(h, "") for h in header])


def _flatten(obj, prefix=""):
    for k, v in obj.items():
        key = f"{prefix}{k}"
        if isinstance(v, dict):
            yield from _flatten(v, key + ".")
        elif isinstance(v, list) and all(isinstance(x, (int, float)) for x in v):
            for i, x in enumerate(v, 1):
                yield f"{key}_{i}", x
        else:
            yield key, v


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--input", "-i", help="observation/point file (CSV or JSON); '-' for stdin")
    common.add_argument("--state", "-s", help="state file (JSON)")
    common.add_argument("--output", "-o", help="output file, default stdout")
    common.add_argument("--format", choices=("json", "csv"), default="json")
    common.add_argument("--tolerance", type=float, default=1e-9, help="gradient sup-norm tolerance")
    common.add_argument("--max-iters", type=int, default=1000)
    common.add_argument("--method", choices=tuple(_METHODS), default="fixed-point")
    common.add_argument("--oracle-resolution", type=int, default=None, help="quadrature nodes per axis")
    common.add_argument("--solve-every", type=int, default=1, help="re-solve the MAP every k observations")

    parser = argparse.ArgumentParser(prog="boojum", description="Approximate conjugate inference for Dirichlet and beta likelihoods.")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("fit", parents=[common], help="hyperparameters and MAP estimate from prior observations")
    sub.add_parser("update", parents=[common], help="stream observations into a state file")
    p = sub.add_parser("predict", parents=[common], help="predictive log-densities at points")
    p.add_argument("--oracle", action="store_true", help="also compute the exact predictive (D <= 3)")
    sub.add_parser("check", parents=[common], help="convergence conditions")
    p = sub.add_parser("scenario", parents=[common], help="plot-ready bundle for a scenario")
    p.add_argument("name", nargs="?", choices=tuple(CANONICAL) + tuple(n.replace("S", "Ş") for n in CANONICAL))
    p.add_argument("--output-dir", help="write bundle JSON and CSV grids here")
    p.add_argument("--grid-resolution", type=int, default=400)
    p.add_argument("--bounds", type=float, nargs=2, default=(0.0, 100.0), metavar=("LOW", "HIGH"))
    return parser


def _config_from_args(args) -> RunConfig:
    return RunConfig(
        command=args.command,
        input=args.input,
        state=args.state,
        output=args.output,
        output_dir=getattr(args, "output_dir", None),
        format=args.format,
        tolerance=args.tolerance,
        max_iters=args.max_iters,
        method=args.method,
        oracle=getattr(args, "oracle", False),
        oracle_resolution=args.oracle_resolution,
        grid_resolution=getattr(args, "grid_resolution", 400),
        bounds=tuple(getattr(args, "bounds", (0.0, 100.0))),
        solve_every=args.solve_every,
        scenario=getattr(args, "name", None),
    )


def _run(config: RunConfig, out):
    if config.command == "fit":
        _emit(cmd_fit(config), config, out)
    elif config.command == "check":
        _emit(cmd_check(config), config, out)
    elif config.command == "predict":
        _emit(cmd_predict(config), config, out)
    elif config.command == "update":
        if not config.state:
            raise ParseError("update needs --state")
        records = cmd_update(config)
        if config.format == "json":
            # one JSON object per line
            for rec in records:
                out.write(json.dumps(rec) + "\n")
        else:
            _emit(list(records), config, out)
    elif config.command == "scenario":
        bundle = cmd_scenario(config)
        if config.output_dir:
            bundle = write_bundle_files(bundle, config.output_dir)
        _emit(bundle, config, out)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config = _config_from_args(args)
    except ValueError as exc:
        parser.error(str(exc))
    if config.command in ("fit", "predict") and not config.input:
        parser.error(f"{config.command} needs --input")
    if config.command == "predict" and not config.state:
        parser.error("predict needs --state")
    try:
        if config.output:
            with open(config.output, "w", encoding="utf-8", newline="") as out:
                _run(config, out)
        else:
            _run(config, sys.stdout)
    except ParseError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except ImproperHyperparametersError as exc:
        print(f"improper state: {exc}", file=sys.stderr)
        return EXIT_IMPROPER
    except DomainError as exc:
        print(f"domain error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except CapabilityError as exc:
        print(f"capability error: {exc}", file=sys.stderr)
        return EXIT_CAPABILITY
    except ConvergenceError as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return EXIT_CONVERGENCE
    except BoojumError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
