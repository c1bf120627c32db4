#!/usr/bin/env python3
"""
Convergence studies against a fine-grid reference - run sweeps programmatically without CLI
"""

import csv
import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import dataclass, field
from datetime import datetime
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from errors import InvalidParameterError, NonlocalSolverError, SolverDefaults
from models import Grid, State
from scenarios import Scenario
from timeint import SCHEMES, Problem, RunResult, SchemeConfig, run

logger = logging.getLogger(__name__)

REFERENCE_SCHEME = "cu2"


def l1_error(coarse: State, reference: State, coarse_grid: Grid, reference_grid: Grid) -> float:
    """dx * sum |rho - block mean of the reference|, summed over components"""
    if abs(coarse_grid.length - reference_grid.length) > 1e-12 * coarse_grid.length:
        raise InvalidParameterError("coarse and reference grids cover different domains")
    ratio = reference_grid.n_cells / coarse_grid.n_cells
    if ratio < 1 or ratio != int(ratio):
        raise InvalidParameterError(
            f"reference grid ({reference_grid.n_cells} cells) is not an integer refinement of {coarse_grid.n_cells} cells"
        )
    if coarse.n_components != reference.n_components:
        raise InvalidParameterError("coarse and reference states have different component counts")
    restricted = reference.values.reshape(reference.n_components, coarse_grid.n_cells, int(ratio)).mean(axis=-1)
    return float(coarse_grid.dx * np.sum(np.abs(coarse.values - restricted)))


def convergence_rate(coarse_error: float, fine_error: float) -> float:
    """log2(e_{n-1} / e_n), nan when either error vanishes"""
    if coarse_error <= 0.0 or fine_error <= 0.0:
        return float("nan")
    return math.log2(coarse_error / fine_error)


@dataclass
class ConvergenceRow:
    scheme: str
    level: int
    dx: float
    error: float
    rate: Optional[float] = None


@dataclass
class ConvergenceReport:
    """Errors and rates per scheme and level, plus the failed jobs"""

    scenario: str
    reference_level: int
    theta: float
    t_final: float
    cfl_safety: Dict[str, float]
    rows: List[ConvergenceRow] = field(default_factory=list)
    failures: Dict[str, str] = field(default_factory=dict)
    timestamp: str = field(default_factory=lambda: datetime.now().isoformat())

    def schemes(self) -> List[str]:
        seen = []
        for row in self.rows:
            if row.scheme not in seen:
                seen.append(row.scheme)
        return seen

    def errors_for(self, scheme: str) -> List[float]:
        return [row.error for row in self.rows if row.scheme == scheme]

    def rates_for(self, scheme: str) -> List[Optional[float]]:
        return [row.rate for row in self.rows if row.scheme == scheme]

    def table(self) -> Tuple[List[str], List[List[str]]]:
        """Rows shaped like the published tables: one line per level"""
        schemes = self.schemes()
        headers = ["n", "dx"]
        for scheme in schemes:
            headers += [f"{scheme} L1", f"{scheme} rate"]
        levels = sorted({row.level for row in self.rows})
        by_key = {(row.scheme, row.level): row for row in self.rows}
        lines = []
        for level in levels:
            dx = next(row.dx for row in self.rows if row.level == level)
            line = [str(level), f"{dx:.6g}"]
            for scheme in schemes:
                row = by_key.get((scheme, level))
                if row is None:
                    line += ["failed", ""]
                else:
                    line += [f"{row.error:.2e}", "" if row.rate is None else f"{row.rate:.2f}"]
            lines.append(line)
        return headers, lines


def run_scenario(
    scenario: Scenario,
    scheme: str,
    level: Optional[int] = None,
    n_cells: Optional[int] = None,
    cfl_safety: Optional[float] = None,
    theta: float = SolverDefaults.THETA,
    t_final: Optional[float] = None,
    strict_paper_formulas: bool = False,
    snapshot_times: Optional[Sequence[float]] = None,
) -> Tuple[Problem, RunResult]:
    """Build the scenario at one resolution and run one scheme on it"""
    problem = scenario.build_problem(level, n_cells)
    config = SchemeConfig(
        scheme=scheme,
        cfl_safety=cfl_safety,
        theta=theta,
        t_final=scenario.t_final if t_final is None else t_final,
        strict_paper_formulas=strict_paper_formulas,
    )
    return problem, run(problem, config, snapshot_times)


def convergence_study(
    scenario: Scenario,
    schemes: Sequence[str],
    n_levels: int = SolverDefaults.DEFAULT_LEVELS,
    reference_level: int = SolverDefaults.REFERENCE_LEVEL,
    theta: float = SolverDefaults.THETA,
    cfl_safety: Optional[float] = None,
    t_final: Optional[float] = None,
    max_workers: int = SolverDefaults.WORKERS,
    quiet: bool = True,
) -> ConvergenceReport:
    """L1 errors of every scheme on levels 0..n_levels-1 against a cu2 reference"""
    unknown = [s for s in schemes if s not in SCHEMES]
    if unknown:
        raise InvalidParameterError(f"unknown scheme(s) {', '.join(unknown)}; valid: {', '.join(SCHEMES)}")
    if n_levels < 1:
        raise InvalidParameterError(f"need at least one level, got {n_levels}")
    if reference_level <= n_levels - 1:
        raise InvalidParameterError(
            f"reference level {reference_level} must exceed the finest test level {n_levels - 1}"
        )
    t_end = scenario.t_final if t_final is None else t_final
    safety = {s: (SchemeConfig(scheme=s, cfl_safety=cfl_safety).cfl_safety) for s in schemes}
    safety["reference"] = SchemeConfig(scheme=REFERENCE_SCHEME, cfl_safety=cfl_safety).cfl_safety

    if not quiet:
        print(f"🎯 Reference: {REFERENCE_SCHEME} at level {reference_level} for {scenario.name}")
    started = time.time()
    reference_problem, reference_run = run_scenario(
        scenario, REFERENCE_SCHEME, reference_level, cfl_safety=cfl_safety, theta=theta, t_final=t_end
    )
    logger.info("reference for %s ready after %.1fs", scenario.name, time.time() - started)

    report = ConvergenceReport(
        scenario=scenario.name, reference_level=reference_level, theta=theta, t_final=t_end, cfl_safety=safety
    )
    jobs = [(scheme, level) for scheme in schemes for level in range(n_levels)]

    def solve_single_level(job: Tuple[str, int]) -> tuple:
        """Run one scheme on one level and return its error"""
        scheme, level = job
        try:
            problem, result = run_scenario(
                scenario, scheme, level, cfl_safety=cfl_safety, theta=theta, t_final=t_end
            )
            error = l1_error(result.final, reference_run.final, problem.grid, reference_problem.grid)
            return job, (problem.grid.dx, error), None
        except NonlocalSolverError as e:
            return job, None, f"{type(e).__name__}: {e}"

    errors: Dict[Tuple[str, int], Tuple[float, float]] = {}
    with ThreadPoolExecutor(max_workers=max_workers) as executor:
        future_to_job = {executor.submit(solve_single_level, job): job for job in jobs}
        for future in as_completed(future_to_job):
            job, value, error = future.result()
            label = f"{job[0]} n={job[1]}"
            if error:
                if not quiet:
                    print(f"❌ {label}: {error}")
                report.failures[label] = error
            else:
                if not quiet:
                    print(f"✅ {label}: L1 error {value[1]:.3e}")
                logger.info("finished %s: error %.3e", label, value[1])
                errors[job] = value

    for scheme in schemes:
        previous = None
        for level in range(n_levels):
            if (scheme, level) not in errors:
                previous = None
                continue
            dx, error = errors[(scheme, level)]
            rate = None if previous is None else convergence_rate(previous, error)
            report.rows.append(ConvergenceRow(scheme=scheme, level=level, dx=dx, error=error, rate=rate))
            previous = error

    if not quiet:
        print(f"🎉 Convergence study completed in {time.time() - started:.1f} seconds")
    return report


def _digits(value: float) -> str:
    return f"{value:.17g}"


def export_report_csv(report: ConvergenceReport, filename: str) -> str:
    """Write scheme,n,dx,l1_error,rate with the run parameters as # header lines"""
    with open(filename, "w", newline="", encoding="utf-8") as csvfile:
        csvfile.write(f"# scenario={report.scenario}\n")
        csvfile.write(f"# reference={REFERENCE_SCHEME} level={report.reference_level}\n")
        csvfile.write(f"# t_final={_digits(report.t_final)} theta={_digits(report.theta)}\n")
        safety = " ".join(f"{k}={_digits(v)}" for k, v in report.cfl_safety.items())
        csvfile.write(f"# cfl_safety {safety}\n")
        for label, message in sorted(report.failures.items()):
            csvfile.write(f"# failed {label}: {message}\n")

        writer = csv.writer(csvfile)
        writer.writerow(["scheme", "n", "dx", "l1_error", "rate"])
        for row in report.rows:
            rate = "" if row.rate is None else _digits(row.rate)
            writer.writerow([row.scheme, row.level, _digits(row.dx), _digits(row.error), rate])
    return filename
