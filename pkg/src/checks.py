#!/usr/bin/env python3
"""
Randomized invariant suite behind the ``check`` command
"""

import logging
from dataclasses import dataclass
from typing import Callable, List, Tuple

import numpy as np

from errors import NonlocalSolverError, SolverDefaults
from flux import anti_diffusion, cu_flux
from kt import kt_cfl_dt, kt_step
from models import (
    Grid,
    ScalarModel,
    State,
    lane_exchange_source,
    make_arrhenius_model,
    make_constant_kernel,
    make_lane_model,
    make_multilane_model,
    make_quadratic_kernel,
    make_transport_model,
)
from nonlocal_terms import compute_kernel_weights
from systems import semidiscrete_rhs

logger = logging.getLogger(__name__)

FD_STEP = 1e-6
MONOTONE_SLACK = 1e-10
LIPSCHITZ_SLACK = 1e-9
WEIGHT_SPACINGS = (0.1, 0.05, 0.025, 0.0125)


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str


def _triples(rng: np.random.Generator, model: ScalarModel, samples: int, margin: float = 0.0):
    lo, hi = model.interval
    a = rng.uniform(lo, hi - margin, samples)
    b = rng.uniform(lo, hi - margin, samples)
    R = rng.uniform(lo, hi, samples)
    return a, b, R


def _relative(x: np.ndarray, y: np.ndarray) -> float:
    scale = np.maximum(np.maximum(np.abs(x), np.abs(y)), np.finfo(float).tiny)
    return float(np.max(np.abs(x - y) / scale))


def check_consistency(rng, samples: int) -> CheckResult:
    model = make_arrhenius_model()
    rho, _, R = _triples(rng, model, samples)
    worst = _relative(cu_flux(rho, rho, R, model), model.flux(rho, R))
    return CheckResult("consistency F(r, r) = g(r) v(R)", worst <= 1e-14, f"max relative error {worst:.2e}")


def check_monotonicity(rng, samples: int) -> CheckResult:
    """Reduced flux G = F / v(R) nondecreasing in a and nonincreasing in b"""
    model = make_arrhenius_model()
    a, b, R = _triples(rng, model, samples, margin=FD_STEP)
    vR = model.v(R)
    base = cu_flux(a, b, R, model) / vR
    in_a = cu_flux(a + FD_STEP, b, R, model) / vR - base
    in_b = cu_flux(a, b + FD_STEP, R, model) / vR - base
    worst_a, worst_b = float(np.min(in_a)), float(np.max(in_b))
    passed = worst_a >= -MONOTONE_SLACK and worst_b <= MONOTONE_SLACK
    return CheckResult("monotone flux", passed, f"min dG/da step {worst_a:.2e}, max dG/db step {worst_b:.2e}")


def check_lipschitz(rng, samples: int) -> CheckResult:
    model = make_arrhenius_model()
    a, b, R = _triples(rng, model, samples)
    vR = model.v(R)
    bound = 2.0 * model.norm_bounds.g_prime * np.abs(a - b) + LIPSCHITZ_SLACK
    G = cu_flux(a, b, R, model) / vR
    excess_left = np.abs(G - cu_flux(b, b, R, model) / vR) - bound
    excess_right = np.abs(G - cu_flux(a, a, R, model) / vR) - bound
    worst = float(max(np.max(excess_left), np.max(excess_right)))
    return CheckResult("Lipschitz constant 2|g'|", worst <= 0.0, f"max excess over bound {worst:.2e}")


def check_godunov_reduction(rng, samples: int) -> CheckResult:
    """Monotone g turns the central-upwind flux into plain upwinding"""
    samples = max(samples, 10_000)
    worst = 0.0
    for model in (make_transport_model(), make_lane_model(name="lane_1"), make_lane_model(name="lane_2")):
        a, b, R = _triples(rng, model, samples)
        worst = max(worst, _relative(cu_flux(a, b, R, model), model.g(a) * model.v(R)))
    return CheckResult("upwind reduction for g' >= 0", worst <= 1e-14, f"max relative error {worst:.2e}")


def check_anti_diffusion(rng, samples: int) -> CheckResult:
    model = make_arrhenius_model()
    a, b, R = _triples(rng, model, samples)
    excess = float(np.max(np.abs(anti_diffusion(a, b, R, model)) - np.abs(b - a)))
    return CheckResult("anti-diffusion |d| <= |b - a|", excess <= 1e-15, f"max excess {excess:.2e}")


def check_source_antisymmetry(rng, samples: int) -> CheckResult:
    rho = rng.uniform(0.0, 1.0, (2, samples))
    R = rng.uniform(0.0, 1.0, (2, samples))
    worst = float(np.max(np.abs(lane_exchange_source(rho, R).sum(axis=0))))
    return CheckResult("lane exchange sums to zero", worst == 0.0, f"max |S_1 + S_2| {worst:.2e}")


def check_kernel_weights(rng, samples: int) -> CheckResult:
    worst = 0.0
    for kernel in (make_quadratic_kernel(SolverDefaults.ETA), make_constant_kernel(SolverDefaults.ETA)):
        for dx in WEIGHT_SPACINGS:
            total = float(np.sum(compute_kernel_weights(kernel, dx).gamma))
            worst = max(worst, abs(total - 1.0))
    return CheckResult("kernel weights sum to 1", worst <= 1e-12, f"max |sum - 1| {worst:.2e}")


def check_conservation(rng, samples: int) -> CheckResult:
    """Telescoping flux sums on random periodic states"""
    grid = Grid.from_level(1)
    weights = compute_kernel_weights(make_quadratic_kernel(SolverDefaults.ETA), grid.dx)
    worst = 0.0
    cases = ((make_arrhenius_model(), 1), (make_multilane_model(), 2))
    for model, components in cases:
        values = rng.uniform(0.0, 1.0, (components, grid.n_cells))
        for scheme, order in (("cu", 1), ("godunov", 1), ("cu", 2)):
            rhs = semidiscrete_rhs(values, grid, weights, model, scheme=scheme, order=order)
            worst = max(worst, abs(float(np.sum(rhs))) * grid.dx)
    return CheckResult("semi-discrete mass conservation", worst <= 1e-13, f"max |d mass / dt| {worst:.2e}")


def check_kt_constant_state(rng, samples: int) -> CheckResult:
    grid = Grid.from_level(0)
    kernel = make_quadratic_kernel(SolverDefaults.ETA)
    weights = compute_kernel_weights(kernel, grid.dx)
    model = make_arrhenius_model()
    worst = 0.0
    for level in rng.uniform(0.05, 0.95, 3):
        state = State(0.0, np.full((1, grid.n_cells), level))
        dt = kt_cfl_dt(state, grid, model, weights)
        worst = max(worst, float(np.max(np.abs(kt_step(state, grid, kernel, weights, model, dt).values - level))))
    return CheckResult("KT keeps constant states", worst <= 1e-13, f"max deviation {worst:.2e}")


CHECKS: Tuple[Callable[[np.random.Generator, int], CheckResult], ...] = (
    check_consistency,
    check_monotonicity,
    check_lipschitz,
    check_godunov_reduction,
    check_anti_diffusion,
    check_source_antisymmetry,
    check_kernel_weights,
    check_conservation,
    check_kt_constant_state,
)


def run_invariant_checks(seed: int = 0, samples: int = 1000) -> List[CheckResult]:
    """Run every check with one seeded generator; a crashing check counts as failed"""
    rng = np.random.default_rng(seed)
    results = []
    for check in CHECKS:
        try:
            result = check(rng, samples)
        except NonlocalSolverError as e:
            result = CheckResult(check.__name__, False, f"{type(e).__name__}: {e}")
        logger.info("%s: %s (%s)", result.name, "ok" if result.passed else "FAILED", result.detail)
        results.append(result)
    return results
