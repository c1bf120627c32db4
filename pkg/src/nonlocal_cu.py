#!/usr/bin/env python3
"""
nonlocal-cu - Finite-volume solver CLI for nonlocal conservation and balance laws
"""

import csv
import logging
import os
import time
from typing import List, Optional, Sequence

import click
from tabulate import tabulate

from checks import run_invariant_checks
from convergence import ConvergenceReport, convergence_study, export_report_csv, run_scenario
from errors import InvalidParameterError, NumericalFailureError
from models import Grid, State
from scenarios import get_scenario, get_scenario_summary, list_scenarios
from settings import RunSettings, resolve_settings
from timeint import SCHEMES, RunResult

logger = logging.getLogger(__name__)

LOG_LEVELS = {0: logging.WARNING, 1: logging.INFO}

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_NUMERICAL = 2


def _digits(value: float) -> str:
    return f"{value:.17g}"


def write_profile_csv(state: State, grid: Grid, filename: str) -> str:
    """x,rho_1[,rho_2...] at every cell center"""
    with open(filename, "w", newline="", encoding="utf-8") as csvfile:
        writer = csv.writer(csvfile)
        writer.writerow(["x"] + [f"rho_{k + 1}" for k in range(state.n_components)])
        for j, x in enumerate(grid.centers):
            writer.writerow([_digits(x)] + [_digits(v) for v in state.values[:, j]])
    return filename


def emit_solution_csv(result: RunResult, grid: Grid, prefix: str) -> List[str]:
    """One CSV per snapshot; the final snapshot is ``<prefix>.csv``"""
    written = []
    for state in result.snapshots[:-1]:
        written.append(write_profile_csv(state, grid, f"{prefix}_t{state.t:.6g}.csv"))
    written.append(write_profile_csv(result.final, grid, f"{prefix}.csv"))
    return written


def emit_mass_log(result: RunResult, filename: str) -> str:
    """step,t,dt,mass_1[,mass_2,mass_total]; dt is empty on the initial row"""
    masses = result.mass_array()
    components = masses.shape[1]
    headers = ["step", "t", "dt"] + [f"mass_{k + 1}" for k in range(components)]
    if components > 1:
        headers.append("mass_total")
    with open(filename, "w", newline="", encoding="utf-8") as csvfile:
        writer = csv.writer(csvfile)
        writer.writerow(headers)
        for step, (t, row) in enumerate(zip(result.times, masses)):
            dt = "" if step == 0 else _digits(result.dt_history[step - 1])
            line = [step, _digits(t), dt] + [_digits(m) for m in row]
            if components > 1:
                line.append(_digits(float(row.sum())))
            writer.writerow(line)
    return filename


def display_report(report: ConvergenceReport) -> None:
    headers, lines = report.table()
    click.echo(f"\n📊 {report.scenario}: L1 errors vs cu2 reference at level {report.reference_level}\n")
    click.echo(tabulate(lines, headers=headers, tablefmt="grid"))
    for label, message in sorted(report.failures.items()):
        click.echo(f"❌ {label}: {message}")


def _settings(ctx: click.Context, flags: dict, config: Optional[str]) -> RunSettings:
    try:
        return resolve_settings(flags, config)
    except InvalidParameterError as e:
        click.echo(f"❌ Error: {e}", err=True)
        ctx.exit(EXIT_INVALID)


def _fail(ctx: click.Context, error: Exception) -> None:
    code = EXIT_NUMERICAL if isinstance(error, NumericalFailureError) else EXIT_INVALID
    click.echo(f"❌ {type(error).__name__}: {error}", err=True)
    ctx.exit(code)


@click.group()
@click.option("--verbose", "-v", count=True, help="-v for progress logging, -vv for per-step debugging")
def cli(verbose):
    """Central-upwind and Kurganov-Tadmor schemes for nonlocal conservation laws"""
    logging.basicConfig(
        level=LOG_LEVELS.get(verbose, logging.DEBUG),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )


scenario_option = click.option(
    "--scenario", "-s", type=click.Choice(list_scenarios(), case_sensitive=False), help="Built-in scenario"
)
scheme_option = click.option(
    "--scheme", "schemes", multiple=True, type=click.Choice(SCHEMES), help="Scheme (repeatable)"
)
config_option = click.option(
    "--config", type=click.Path(exists=True, dir_okay=False), help="Flat key=value settings file"
)


@cli.command()
@scenario_option
@scheme_option
@click.option("--n", "n", type=int, help="Grid level: dx = (1/20) 2^-n")
@click.option("--cells", type=int, help="Explicit cell count (overrides --n)")
@click.option("--cfl", type=float, help="CFL safety factor in (0, 1]")
@click.option("--theta", type=float, help="Limiter parameter in [1, 2] (default: 1.0)")
@click.option("--t-final", "t_final", type=float, help="Override the scenario's final time")
@click.option("--out", help="Output directory (default: results)")
@click.option("--snapshot", "snapshots", multiple=True, type=float, help="Extra output time (repeatable)")
@click.option("--strict-paper-formulas", "strict", is_flag=True, help="KT: use the displayed formulas without repairs")
@config_option
@click.pass_context
def solve(ctx, scenario, schemes, n, cells, cfl, theta, t_final, out, snapshots, strict, config):
    """Run schemes on one grid and write solution profiles plus a mass log"""
    flags = dict(
        scenario=scenario, schemes=schemes, n=n, cells=cells, cfl=cfl, theta=theta,
        t_final=t_final, out=out, strict_paper_formulas=strict or None,
    )
    settings = _settings(ctx, flags, config)
    chosen = get_scenario(settings.scenario)
    level, n_cells = settings.n, settings.cells
    if level is None and n_cells is None:
        if chosen.figure_cells is not None:
            n_cells = chosen.figure_cells
        else:
            level = 0
    os.makedirs(settings.out, exist_ok=True)

    for scheme in settings.schemes:
        resolution = f"{n_cells} cells" if n_cells else f"level {level}"
        click.echo(f"🚀 {scheme} on {chosen.name} ({resolution})")
        try:
            problem, result = run_scenario(
                chosen,
                scheme,
                level=level,
                n_cells=n_cells,
                cfl_safety=settings.cfl,
                theta=settings.theta,
                t_final=settings.t_final,
                strict_paper_formulas=settings.strict_paper_formulas,
                snapshot_times=snapshots,
            )
        except (InvalidParameterError, NumericalFailureError) as e:
            _fail(ctx, e)
        prefix = os.path.join(settings.out, f"{chosen.name}_{scheme}_{problem.grid.n_cells}")
        files = emit_solution_csv(result, problem.grid, prefix)
        mass_file = emit_mass_log(result, f"{prefix}_mass.csv")
        drift = float(result.mass_drift().max())
        click.echo(
            f"✅ {result.steps} steps in {result.wall_time:.2f}s, mass drift {drift:.1e}"
        )
        for filename in files + [mass_file]:
            click.echo(f"📁 {filename}")
    ctx.exit(EXIT_OK)


@cli.command()
@scenario_option
@scheme_option
@click.option("--levels", type=int, help="Number of test levels n = 0..levels-1 (default: 6)")
@click.option("--ref-level", "ref_level", type=int, help="Reference grid level (default: 9)")
@click.option("--cfl", type=float, help="CFL safety factor in (0, 1]")
@click.option("--theta", type=float, help="Limiter parameter in [1, 2] (default: 1.0)")
@click.option("--t-final", "t_final", type=float, help="Override the scenario's final time")
@click.option("--out", help="Output directory (default: results)")
@click.option("--workers", type=int, help="Parallel sweep jobs (default: 4)")
@config_option
@click.pass_context
def converge(ctx, scenario, schemes, levels, ref_level, cfl, theta, t_final, out, workers, config):
    """Grid-refinement study: L1 errors and rates per scheme and level"""
    flags = dict(
        scenario=scenario, schemes=schemes, levels=levels, ref_level=ref_level, cfl=cfl,
        theta=theta, t_final=t_final, out=out, workers=workers,
    )
    settings = _settings(ctx, flags, config)
    chosen = get_scenario(settings.scenario)
    started = time.time()
    try:
        report = convergence_study(
            chosen,
            settings.schemes,
            n_levels=settings.levels,
            reference_level=settings.ref_level,
            theta=settings.theta,
            cfl_safety=settings.cfl,
            t_final=settings.t_final,
            max_workers=settings.workers,
            quiet=False,
        )
    except (InvalidParameterError, NumericalFailureError) as e:
        _fail(ctx, e)

    os.makedirs(settings.out, exist_ok=True)
    filename = export_report_csv(report, os.path.join(settings.out, f"{chosen.name}_convergence.csv"))
    display_report(report)
    click.echo(f"\n📁 Report exported to: {filename} ({time.time() - started:.1f}s)")
    ctx.exit(EXIT_NUMERICAL if report.failures else EXIT_OK)


@cli.command()
@click.option("--seed", type=int, help="Random seed (default: 0)")
@click.option("--samples", type=int, default=1000, help="Random samples per check (default: 1000)")
@config_option
@click.pass_context
def check(ctx, seed, samples, config):
    """Randomized checks of the flux, kernel and conservation invariants"""
    seed = _settings(ctx, dict(seed=seed), config).seed
    if samples < 1:
        click.echo("❌ Error: --samples must be positive", err=True)
        ctx.exit(EXIT_INVALID)
    results = run_invariant_checks(seed=seed, samples=samples)
    table = [["✅" if r.passed else "❌", r.name, r.detail] for r in results]
    click.echo(tabulate(table, headers=["", "check", "detail"], tablefmt="grid"))
    failed = [r for r in results if not r.passed]
    if failed:
        click.echo(f"❌ {len(failed)}/{len(results)} checks failed")
        ctx.exit(EXIT_INVALID)
    click.echo(f"🎉 All {len(results)} checks passed (seed {seed})")
    ctx.exit(EXIT_OK)


@cli.command()
def scenarios():
    """List the built-in scenarios"""
    click.echo("\n🧪 Built-in scenarios:\n")
    table = [
        [name, info["components"], info["t_final"], info["description"]]
        for name, info in get_scenario_summary().items()
    ]
    click.echo(tabulate(table, headers=["name", "components", "T", "description"], tablefmt="grid"))


def cli_main(argv: Optional[Sequence[str]] = None) -> int:
    """Run the command group and return its exit status instead of exiting"""
    try:
        rv = cli.main(args=list(argv) if argv is not None else None, prog_name="nonlocal-cu", standalone_mode=False)
    except click.ClickException as e:
        e.show()
        return EXIT_INVALID
    except click.Abort:
        click.echo("Aborted!", err=True)
        return EXIT_INVALID
    except InvalidParameterError as e:
        click.echo(f"❌ Error: {e}", err=True)
        return EXIT_INVALID
    except NumericalFailureError as e:
        click.echo(f"❌ {type(e).__name__}: {e}", err=True)
        return EXIT_NUMERICAL
    return rv if isinstance(rv, int) else EXIT_OK
