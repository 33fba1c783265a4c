"""Batch command line: seeded sampling, closed-form means, path export,
condition checks, phase diagnosis, and the escaping-mass table.

Every run is reproducible: stochastic subcommands require an explicit
--seed (there is no wall-clock default), output files are never silently
overwritten (pass --force), and results are byte-identical for a fixed
configuration regardless of --jobs.  Errors print one machine-parsable
line ``error[code] detail`` and map to exit code 1 (validation) or 2
(numeric failure).
"""

from __future__ import annotations

import json
import os
import sys
from pathlib import Path
from typing import Optional

import click
import numpy as np

from .conditions import (
    EVALUATOR_TAGS,
    MATRIX_DEPTH,
    PRODUCT_DEPTH,
    dirichlet_condition,
    dirichlet_weak_condition,
    gaussian_conditions,
    leakage_counterexample,
    polya_leakage_condition,
    polya_tight_condition,
    polya_weak_condition,
)
from .diagnostics import MIN_STATISTICAL_SAMPLES, phase_report
from .errors import NumericError, ValidationError
from .histograms import dump_json, histogram_to_csv, histogram_to_json, stack_to_csv
from .partitions import (
    PartitionChain,
    chain_from_json_text,
    dyadic_chain,
    endpoint_to_float,
    max_depth,
)
from .sampling import path_from_histogram, sample_stack
from .streams import RandomStream
from .systems import (
    DirichletSystem,
    GaussianSystem,
    LeakageSystem,
    PolyaTreeSystem,
    system_from_json,
)

_EVALUATOR_LINES = "\n".join(
    f"  {name}  [{tag}]" for name, tag in sorted(EVALUATOR_TAGS.items()))

EPILOG = ("Condition evaluators and their condition tags:\n\n"
          + _EVALUATOR_LINES)


def _load_system(path: str):
    try:
        text = Path(path).read_text()
    except OSError as e:
        raise ValidationError("cli/system-file", f"cannot read {path}: {e}")
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as e:
        raise ValidationError("cli/system-json", f"{path}: {e}")
    return system_from_json(obj)


def _resolve_chain(system, chain_path: Optional[str], depth: int) -> PartitionChain:
    if chain_path is not None:
        try:
            text = Path(chain_path).read_text()
        except OSError as e:
            raise ValidationError("cli/chain-file", f"cannot read {chain_path}: {e}")
        chain = chain_from_json_text(text)
    elif isinstance(system, LeakageSystem):
        chain = system.chain()
    else:
        chain = dyadic_chain(depth=depth)
    if depth > chain.depth:
        raise ValidationError("cli/depth",
                              f"depth {depth} exceeds the chain depth {chain.depth}")
    return chain


def _write_text(text: str, out: Optional[str], force: bool) -> None:
    if out is None:
        click.echo(text, nl=not text.endswith("\n"))
        return
    target = Path(out)
    if target.exists() and not force:
        raise ValidationError("cli/exists",
                              f"{out} exists; pass --force to overwrite")
    target.write_text(text if text.endswith("\n") else text + "\n")


def _parse_number_list(raw: str, what: str) -> tuple[float, ...]:
    try:
        values = tuple(float(v) for v in raw.split(",") if v.strip())
    except ValueError:
        raise ValidationError("cli/number-list", f"cannot parse {what} {raw!r}")
    if not values:
        raise ValidationError("cli/number-list", f"empty {what}")
    return values


system_option = click.option("--system", "system_path", required=True,
                             help="System descriptor JSON file.")
chain_option = click.option("--chain", "chain_path", default=None,
                            help="Partition chain JSON file (default: the "
                                 "system's own chain, or a dyadic unit chain).")
out_option = click.option("--out", default=None,
                          help="Output file (default: stdout).")
force_option = click.option("--force", is_flag=True,
                            help="Overwrite an existing output file.")
jobs_option = click.option("--jobs", default=None, type=int,
                           help="Worker threads (default: available "
                                "parallelism); results do not depend on it.")


def _jobs(jobs: Optional[int]) -> int:
    if jobs is None:
        return max(1, os.cpu_count() or 1)
    if jobs < 1:
        raise ValidationError("cli/jobs", f"--jobs must be >= 1, got {jobs}")
    return jobs


@click.group(epilog=EPILOG)
def cli():
    """Coherent systems of random histograms: sample them, check the
    existence and domination conditions, and diagnose the phase."""


@cli.command()
@system_option
@chain_option
@click.option("--depth", required=True, type=int, help="Chain level to sample.")
@click.option("--replicates", default=1, type=int, show_default=True)
@click.option("--seed", required=True, type=int,
              help="Stream seed (required; no wall-clock default).")
@jobs_option
@out_option
@click.option("--format", "fmt", type=click.Choice(["csv", "json"]),
              default="csv", show_default=True)
@force_option
def sample(system_path, chain_path, depth, replicates, seed, jobs, out, fmt, force):
    """Draw seeded histogram samples at one chain level."""
    system = _load_system(system_path)
    chain = _resolve_chain(system, chain_path, depth)
    stack = sample_stack(system, chain, depth, RandomStream(seed),
                         replicates, jobs=_jobs(jobs))
    if fmt == "csv":
        _write_text(stack_to_csv(stack), out, force)
    else:
        payload = {"system": system.to_json(), "depth": depth, "seed": seed,
                   "kind": stack.kind,
                   "cells": [c.index.label() for c in stack.partition.cells],
                   "values": [[float(v) for v in row] for row in stack.values]}
        _write_text(dump_json(payload), out, force)


@cli.command()
@system_option
@chain_option
@click.option("--depth", required=True, type=int, help="Chain level.")
@out_option
@click.option("--format", "fmt", type=click.Choice(["csv", "json"]),
              default="csv", show_default=True)
@force_option
def mean(system_path, chain_path, depth, out, fmt, force):
    """Closed-form mean histogram at one chain level (no sampling)."""
    system = _load_system(system_path)
    chain = _resolve_chain(system, chain_path, depth)
    part = chain[depth]
    if isinstance(system, (DirichletSystem, PolyaTreeSystem)):
        h = system.mean(part)
    elif isinstance(system, GaussianSystem):
        h = system.centre_histogram(part)
    elif isinstance(system, LeakageSystem):
        h = system.histogram(part)
    else:
        raise ValidationError("cli/system", f"no mean for {type(system).__name__}")
    if fmt == "csv":
        _write_text(histogram_to_csv(h), out, force)
    else:
        _write_text(dump_json(histogram_to_json(h)), out, force)


@cli.command()
@system_option
@chain_option
@click.option("--depth", required=True, type=int, help="Chain level to sample.")
@click.option("--replicates", default=1, type=int, show_default=True)
@click.option("--seed", required=True, type=int,
              help="Stream seed (required; no wall-clock default).")
@jobs_option
@out_option
@force_option
def path(system_path, chain_path, depth, replicates, seed, jobs, out, force):
    """Sampled cumulative-mass paths as CSV (replicate, t, value)."""
    system = _load_system(system_path)
    chain = _resolve_chain(system, chain_path, depth)
    stack = sample_stack(system, chain, depth, RandomStream(seed),
                         replicates, jobs=_jobs(jobs))
    left = chain.domain.left
    origin = None
    try:
        origin = endpoint_to_float(left)
    except (TypeError, ValueError):
        origin = None
    if origin is not None and not np.isfinite(origin):
        origin = None
    lines = ["replicate,t,value"]
    for r in range(len(stack)):
        points = path_from_histogram(stack.histogram(r))
        if origin is not None:
            lines.append(f"{r},{origin!r},0.0")
        lines.extend(f"{r},{t!r},{v!r}" for t, v in points)
    _write_text("\n".join(lines) + "\n", out, force)


@cli.command()
@system_option
@chain_option
@click.option("--depth", default=None, type=int,
              help=f"Evaluation depth (default {PRODUCT_DEPTH} for product "
                   f"conditions, {MATRIX_DEPTH} for covariance conditions).")
@out_option
@force_option
def check(system_path, chain_path, depth, out, force):
    """Evaluate every condition for the family; JSON verdicts."""
    system = _load_system(system_path)
    verdicts = {}
    if isinstance(system, DirichletSystem):
        chain = _resolve_chain(system, chain_path, 0)
        verdicts["dirichlet-existence"] = dirichlet_condition(system, chain.domain)
        verdicts["dirichlet-weak"] = dirichlet_weak_condition(
            system, chain.domain, depth=depth or PRODUCT_DEPTH)
    elif isinstance(system, PolyaTreeSystem):
        d = depth or PRODUCT_DEPTH
        verdicts["polya-tight"] = polya_tight_condition(system, depth=d)
        verdicts["polya-leakage"] = polya_leakage_condition(system, depth=d)
        verdicts["polya-weak"] = polya_weak_condition(system, depth=d)
    elif isinstance(system, GaussianSystem):
        d = depth or MATRIX_DEPTH
        chain = _resolve_chain(system, chain_path, min(d, max_depth()))
        for v in gaussian_conditions(system, chain, depth=d).values():
            verdicts[v.condition] = v
    elif isinstance(system, LeakageSystem):
        report = leakage_counterexample(system.delta, system.depth,
                                        interior=system.interior)
        verdicts[report.verdict.condition] = report.verdict
    else:
        raise ValidationError("cli/system",
                              f"no conditions for {type(system).__name__}")
    payload = {"conditions": {k: v.to_json() for k, v in verdicts.items()}}
    _write_text(dump_json(payload), out, force)


@cli.command()
@system_option
@chain_option
@click.option("--depths", "depths_raw", default=None,
              help="Comma-separated Monte-Carlo depths (default 2..8).")
@click.option("--depth", "depth_max", default=None, type=int,
              help="Shorthand for --depths 2..DEPTH.")
@click.option("--N", "n", default=10_000, type=int, show_default=True,
              help="Replicates per depth (>= 1000).")
@click.option("--seed", required=True, type=int,
              help="Stream seed (required; no wall-clock default).")
@click.option("--L-grid", "l_grid_raw", default="1,2,5,20", show_default=True)
@click.option("--delta", default=0.1, type=float, show_default=True)
@jobs_option
@out_option
@click.option("--format", "fmt", type=click.Choice(["json", "csv"]),
              default="json", show_default=True,
              help="csv additionally writes the curves next to --out.")
@force_option
def diagnose(system_path, chain_path, depths_raw, depth_max, n, seed,
             l_grid_raw, delta, jobs, out, fmt, force):
    """Aggregate phase report: condition verdicts plus Monte-Carlo curves."""
    if n < MIN_STATISTICAL_SAMPLES:
        raise ValidationError("cli/samples",
                              f"--N must be >= {MIN_STATISTICAL_SAMPLES}, got {n}")
    system = _load_system(system_path)
    if depths_raw is not None:
        depths = tuple(int(v) for v in _parse_number_list(depths_raw, "--depths"))
    elif depth_max is not None:
        depths = tuple(range(2, depth_max + 1))
    else:
        depths = None
    top = max(depths) if depths else 8
    chain = _resolve_chain(system, chain_path, top)
    l_grid = _parse_number_list(l_grid_raw, "--L-grid")
    report = phase_report(system, chain, depths=depths, replicates=n,
                          seed=seed, L_grid=l_grid, delta=delta,
                          jobs=_jobs(jobs))
    if fmt == "csv":
        if out is None:
            raise ValidationError("cli/out",
                                  "--format csv needs --out for the curve files")
        for curve in (report.atomicity_curve, report.domination_curve,
                      report.domination_tail_curve):
            if curve is not None:
                _write_text(curve.to_csv(), f"{out}.{curve.name}.csv", force)
    _write_text(dump_json(report.to_json()), out, force)


@cli.command()
@click.option("--delta", required=True, type=float,
              help="Escaping mass fraction in [0, 1).")
@click.option("--depth", default=12, type=int, show_default=True)
@click.option("--interior", is_flag=True,
              help="Leak toward the endpoints of (0, 1) instead of infinity.")
@out_option
@click.option("--format", "fmt", type=click.Choice(["csv", "json"]),
              default="csv", show_default=True)
@force_option
def counterexample(delta, depth, interior, out, fmt, force):
    """Outside-mass table of the escaping-mass construction."""
    report = leakage_counterexample(delta, depth, interior=interior)
    if fmt == "json":
        _write_text(dump_json(report.to_json()), out, force)
        return
    lines = ["depth,window,outside_mass"]
    lines.extend(f"{d},{k!r},{v!r}" for d, k, v in report.rows)
    _write_text("\n".join(lines) + "\n", out, force)


def main(argv=None) -> int:
    """Console entry point; returns the exit code instead of raising."""
    try:
        cli.main(args=argv, standalone_mode=False)
    except ValidationError as e:
        click.echo(f"error[{e.code}] {e}", err=True)
        return 1
    except NumericError as e:
        click.echo(f"error[{e.code}] {e}", err=True)
        return 2
    except click.UsageError as e:
        click.echo(f"error[cli/usage] {e.format_message()}", err=True)
        return 1
    except click.exceptions.Exit as e:
        return e.exit_code
    except click.exceptions.Abort:
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
