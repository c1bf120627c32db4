#!/usr/bin/env python3
"""
CFL bounds, explicit steppers and the run loop for every scheme
"""

import logging
import time
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Iterable, List, Optional

import numpy as np

from errors import InvalidParameterError, NumericalFailureError, SolverDefaults
from kt import kt_cfl_dt, kt_step
from models import AnyModel, Grid, Kernel, State, as_system_model
from nonlocal_terms import KernelWeights, compute_kernel_weights
from recon import validate_theta
from systems import semidiscrete_rhs

logger = logging.getLogger(__name__)

SCHEMES = ("cu1", "godunov1", "cu2", "kt")

Rhs = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class SchemeConfig:
    """Scheme choice and its time-stepping parameters

    cu1 and godunov1 use constant reconstruction with explicit Euler, cu2 uses
    the limited linear reconstruction with SSP-RK2, kt runs the fully-discrete
    scheme. ``cfl_safety`` defaults per scheme.
    """

    scheme: str = "cu2"
    cfl_safety: Optional[float] = None
    theta: float = SolverDefaults.THETA
    t_final: float = 0.0
    strict_paper_formulas: bool = False

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise InvalidParameterError(f"unknown scheme '{self.scheme}', expected one of {', '.join(SCHEMES)}")
        if self.cfl_safety is None:
            object.__setattr__(self, "cfl_safety", SolverDefaults.CFL_SAFETY[self.scheme])
        if not 0.0 < self.cfl_safety <= 1.0:
            raise InvalidParameterError(f"CFL safety factor must lie in (0, 1], got {self.cfl_safety}")
        validate_theta(self.theta)
        if self.t_final < 0.0:
            raise InvalidParameterError(f"t_final must be >= 0, got {self.t_final}")

    @property
    def order(self) -> int:
        return 1 if self.scheme in ("cu1", "godunov1") else 2

    @property
    def flux_family(self) -> str:
        return "godunov" if self.scheme == "godunov1" else "cu"


@dataclass(frozen=True)
class Problem:
    grid: Grid
    kernel: Kernel
    model: AnyModel
    initial: State

    def __post_init__(self):
        self.initial.check_components(self.model)
        if self.initial.n_cells != self.grid.n_cells:
            raise InvalidParameterError(
                f"initial state has {self.initial.n_cells} cells, grid has {self.grid.n_cells}"
            )

    @cached_property
    def weights(self) -> KernelWeights:
        return compute_kernel_weights(self.kernel, self.grid.dx)


def _cfl_from_denominators(denominators: Iterable[float], dx: float, safety: float, label: str) -> float:
    steps = [safety * dx / d for d in denominators if d > 0.0]
    if not steps:
        logger.warning("%s CFL bound degenerate (all norms vanish); using dt = %g", label, safety * dx)
        return safety * dx
    return min(steps)


def cfl_dt_first_order(model: AnyModel, weights: KernelWeights, safety: float = 1.0) -> float:
    """safety dx / [(2|g'||rho| + |g|) |v'| gamma_0 + 4 |g'||v|], minimum over components"""
    denominators = []
    for component in as_system_model(model).components:
        nb = component.norm_bounds
        denominators.append((2.0 * nb.g_prime * nb.rho + nb.g) * nb.v_prime * weights.gamma0 + 4.0 * nb.g_prime * nb.v)
    return _cfl_from_denominators(denominators, weights.dx, safety, "first-order")


def cfl_dt_second_order(model: AnyModel, weights: KernelWeights, safety: float = 1.0) -> float:
    """safety dx / [2 (|g||v'| gamma_0 + |g'||v|)], minimum over components"""
    denominators = []
    for component in as_system_model(model).components:
        nb = component.norm_bounds
        denominators.append(2.0 * (nb.g * nb.v_prime * weights.gamma0 + nb.g_prime * nb.v))
    return _cfl_from_denominators(denominators, weights.dx, safety, "second-order")


def euler_step(state: State, rhs: Rhs, dt: float) -> State:
    return State(state.t + dt, state.values + dt * rhs(state.values))


def ssp_rk2_step(state: State, rhs: Rhs, dt: float) -> State:
    u = state.values
    stage = u + dt * rhs(u)
    return State(state.t + dt, 0.5 * u + 0.5 * (stage + dt * rhs(stage)))


@dataclass
class RunResult:
    snapshots: List[State] = field(default_factory=list)
    times: List[float] = field(default_factory=list)
    dt_history: List[float] = field(default_factory=list)
    mass_history: List[np.ndarray] = field(default_factory=list)
    range_history: List[np.ndarray] = field(default_factory=list)  # (components, 2) min and max
    wall_time: float = 0.0

    @property
    def final(self) -> State:
        return self.snapshots[-1]

    @property
    def steps(self) -> int:
        return len(self.dt_history)

    def mass_array(self) -> np.ndarray:
        """(steps + 1, components)"""
        return np.array(self.mass_history)

    def mass_drift(self) -> np.ndarray:
        """Relative drift of the component-summed mass at every recorded step"""
        masses = self.mass_array()
        totals = masses.sum(axis=1)
        scale = max(abs(totals[0]), np.finfo(float).tiny)
        return np.abs(totals - totals[0]) / scale

    def range_array(self) -> np.ndarray:
        """(steps + 1, components, 2) cell-average minimum and maximum after every step"""
        return np.array(self.range_history)

    def record(self, state: State, grid: Grid) -> None:
        self.times.append(state.t)
        self.mass_history.append(state.mass(grid))
        self.range_history.append(np.stack([state.values.min(axis=1), state.values.max(axis=1)], axis=1))


def _snapshot_targets(t_final: float, snapshot_times: Optional[Iterable[float]]) -> List[float]:
    targets = {float(t_final)}
    for t in snapshot_times or ():
        if t < 0.0 or t > t_final:
            raise InvalidParameterError(f"snapshot time {t} outside [0, {t_final}]")
        targets.add(float(t))
    return sorted(targets)


def make_rhs(problem: Problem, config: SchemeConfig) -> Rhs:
    def rhs(values: np.ndarray) -> np.ndarray:
        return semidiscrete_rhs(
            values,
            problem.grid,
            problem.weights,
            problem.model,
            scheme=config.flux_family,
            order=config.order,
            theta=config.theta,
        )

    return rhs


def run(problem: Problem, config: SchemeConfig, snapshot_times: Optional[Iterable[float]] = None) -> RunResult:
    """Advance to config.t_final, landing exactly on every snapshot time"""
    grid, weights = problem.grid, problem.weights
    targets = _snapshot_targets(config.t_final, snapshot_times)
    tolerance = SolverDefaults.LANDING_TOLERANCE * max(config.t_final, 1.0)

    if config.scheme == "kt":

        def step_bound(state: State) -> float:
            return kt_cfl_dt(state, grid, problem.model, weights, config.cfl_safety, config.theta)

        def advance(state: State, dt: float) -> State:
            return kt_step(
                state, grid, problem.kernel, weights, problem.model, dt, config.theta, config.strict_paper_formulas
            )

    else:
        rhs = make_rhs(problem, config)
        if config.order == 1:
            fixed = cfl_dt_first_order(problem.model, weights, config.cfl_safety)
            stepper = euler_step
        else:
            fixed = cfl_dt_second_order(problem.model, weights, config.cfl_safety)
            stepper = ssp_rk2_step

        def step_bound(state: State) -> float:
            return fixed

        def advance(state: State, dt: float) -> State:
            return stepper(state, rhs, dt)

    logger.info(
        "run start: scheme=%s cells=%d t_final=%g cfl=%g", config.scheme, grid.n_cells, config.t_final, config.cfl_safety
    )
    started = time.perf_counter()
    result = RunResult()
    state = problem.initial
    result.record(state, grid)
    if targets[0] <= state.t + tolerance:
        result.snapshots.append(state)

    for target in targets:
        while target - state.t > tolerance:
            step = len(result.dt_history) + 1
            try:
                dt = step_bound(state)
                landing = dt >= target - state.t
                if landing:
                    dt = target - state.t
                new_state = advance(state, dt)
            except NumericalFailureError as exc:
                raise type(exc)(f"step {step} from t={state.t:.17g}: {exc}") from exc
            state = State(target, new_state.values) if landing else new_state
            result.dt_history.append(dt)
            result.record(state, grid)
            logger.debug("step %d t=%.17g dt=%.6e mass=%s", step, state.t, dt, result.mass_history[-1])
        if not result.snapshots or result.snapshots[-1].t != state.t:
            result.snapshots.append(state)

    result.wall_time = time.perf_counter() - started
    logger.info("run finished: scheme=%s steps=%d wall=%.2fs", config.scheme, result.steps, result.wall_time)
    return result
