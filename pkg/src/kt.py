#!/usr/bin/env python3
"""
Fully-discrete second-order Kurganov-Tadmor scheme for nonlocal balance laws

One step splits every cell into a smooth part and the non-smooth fans
[x_{j+1/2} + c- dt, x_{j+1/2} + c+ dt] around each interface, integrates the
balance law exactly over the resulting space-time cells with midpoint-in-time
Taylor predictors, and projects the piecewise-linear result back onto the grid.
Five families of nonlocal terms are evaluated per step: interface convolutions
for the speeds, shifted convolutions on both sides of every fan, and their
time derivatives.
"""

import logging
from dataclasses import dataclass
from typing import Tuple

import numpy as np

from errors import CflViolationError, InvalidParameterError, SolverDefaults
from flux import SpeedPair
from models import AnyModel, Grid, Kernel, State, SystemModel, as_system_model, state_values
from nonlocal_terms import LEFT, RIGHT, KernelWeights, convolve_interfaces, convolve_shifted, convolve_time_derivative
from recon import compute_slopes, interface_values, minmod
from systems import componentwise_speeds

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class KtWorkspace:
    """Every intermediate quantity of one step, arrays shaped (components, cells)"""

    t: float
    dt: float
    values: np.ndarray
    slopes: np.ndarray
    speeds: SpeedPair
    split_left: np.ndarray
    split_right: np.ndarray
    rho_left: np.ndarray
    rho_right: np.ndarray
    R_left: np.ndarray
    R_right: np.ndarray
    flux_slopes_left: np.ndarray
    flux_slopes_right: np.ndarray
    source_left: np.ndarray
    source_right: np.ndarray
    dR_left: np.ndarray
    dR_right: np.ndarray
    rho_half_left: np.ndarray
    rho_half_right: np.ndarray
    R_half_left: np.ndarray
    R_half_right: np.ndarray
    w_mid: np.ndarray
    w_smooth: np.ndarray
    degenerate: np.ndarray
    proj_slopes: np.ndarray


def _speed_epsilon(system: SystemModel) -> np.ndarray:
    return np.array([[m.speed_epsilon] for m in system.components])


def interface_speeds(values: np.ndarray, grid: Grid, weights: KernelWeights, system: SystemModel, theta: float):
    """Slopes and c+- from the reconstructed interface values and R_{j+1/2}"""
    slopes = compute_slopes(values, grid, theta)
    recons = [interface_values(values[k], slopes[k], grid) for k in range(system.n_components)]
    R = convolve_interfaces(values, weights, slopes, grid)
    pairs = componentwise_speeds(values, recons, R, system)
    speeds = SpeedPair(
        c_plus=np.stack([p.c_plus for p in pairs]),
        c_minus=np.stack([p.c_minus for p in pairs]),
    )
    return slopes, speeds


def kt_cfl_dt(
    state,
    grid: Grid,
    model: AnyModel,
    weights: KernelWeights,
    safety: float = SolverDefaults.CFL_SAFETY["kt"],
    theta: float = SolverDefaults.THETA,
) -> float:
    """dt = safety dx / (2 max(c+, -c-)); safety dx when every speed vanishes"""
    if not 0.0 < safety <= 1.0:
        raise InvalidParameterError(f"CFL safety factor must lie in (0, 1], got {safety}")
    system = as_system_model(model)
    _, speeds = interface_speeds(state_values(state), grid, weights, system, theta)
    fastest = speeds.max_speed
    if fastest <= 0.0:
        logger.debug("all KT speeds vanish; stationary step %g", safety * grid.dx)
        return safety * grid.dx
    return safety * grid.dx / (2.0 * fastest)


def kt_shifted_values(state, slopes, speeds: SpeedPair, grid: Grid, dt: float) -> Tuple[np.ndarray, np.ndarray]:
    """Reconstruction at x_{j+1/2,l} (cell j) and x_{j+1/2,r} (cell j+1)"""
    values = state_values(state)
    s = np.broadcast_to(np.asarray(slopes, dtype=float), values.shape)
    half = 0.5 * grid.dx
    rho_left = values + s * (half + dt * speeds.c_minus)
    rho_right = np.roll(values, -1, axis=-1) - np.roll(s, -1, axis=-1) * (half - dt * speeds.c_plus)
    return rho_left, rho_right


def _check_denominators(denominators, label: str) -> None:
    for name, den in denominators:
        if np.any(den <= 0.0):
            raise CflViolationError(f"{label}: nonpositive {name} distance {float(np.min(den)):.17g}")


def kt_flux_slopes(
    rho_left,
    rho_right,
    R_left,
    R_right,
    speeds: SpeedPair,
    model: AnyModel,
    grid: Grid,
    dt: float,
    strict_paper_formulas: bool = False,
) -> Tuple[np.ndarray, np.ndarray]:
    """Minmod-limited F_x along each family of shifted points"""
    system = as_system_model(model)
    F_left = system.flux(np.atleast_2d(rho_left), np.atleast_2d(R_left))
    F_right = system.flux(np.atleast_2d(rho_right), np.atleast_2d(R_right))
    cp, cm = speeds.c_plus, speeds.c_minus
    dx = grid.dx

    left_back = dx + (cm - np.roll(cm, 1, axis=-1)) * dt
    if strict_paper_formulas:
        left_fwd = dx - cp * dt + np.roll(cp, -1, axis=-1) * dt
    else:
        left_fwd = dx + (np.roll(cm, -1, axis=-1) - cm) * dt
    right_back = dx - np.roll(cp, 1, axis=-1) * dt + cp * dt
    right_fwd = dx - cp * dt + np.roll(cp, -1, axis=-1) * dt
    _check_denominators(
        [("left backward", left_back), ("left forward", left_fwd), ("right backward", right_back), ("right forward", right_fwd)],
        "flux slopes",
    )

    fx_left = minmod(
        (F_left - np.roll(F_left, 1, axis=-1)) / left_back,
        (np.roll(F_left, -1, axis=-1) - F_left) / left_fwd,
    )
    fx_right = minmod(
        (F_right - np.roll(F_right, 1, axis=-1)) / right_back,
        (np.roll(F_right, -1, axis=-1) - F_right) / right_fwd,
    )
    return np.asarray(fx_left), np.asarray(fx_right)


def kt_predictors(rho_left, rho_right, R_left, R_right, fx_left, fx_right, dR_left, dR_right, dt: float):
    """Midpoint-in-time Taylor values; fx may already carry -S for balance laws"""
    half = 0.5 * dt
    return (
        rho_left - half * fx_left,
        rho_right - half * fx_right,
        R_left + half * dR_left,
        R_right + half * dR_right,
    )


def kt_intermediate_averages(
    state,
    slopes,
    rho_left,
    rho_right,
    rho_half_left,
    rho_half_right,
    R_half_left,
    R_half_right,
    speeds: SpeedPair,
    model: AnyModel,
    grid: Grid,
    dt: float,
    strict_paper_formulas: bool = False,
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(w_{j+1/2}, w_j, degenerate mask) at t + dt"""
    system = as_system_model(model)
    values = state_values(state)
    s = np.broadcast_to(np.asarray(slopes, dtype=float), values.shape)
    cp, cm = speeds.c_plus, speeds.c_minus
    F_half_left = system.flux(rho_half_left, R_half_left)
    F_half_right = system.flux(rho_half_right, R_half_right)

    width = cp - cm
    degenerate = width <= _speed_epsilon(system)
    safe = np.where(degenerate, 1.0, width)
    s_next = np.roll(s, -1, axis=-1)
    numerator = (
        rho_right * cp
        - 0.5 * s_next * cp**2 * dt
        - rho_left * cm
        + 0.5 * s * cm**2 * dt
        - (F_half_right - F_half_left)
    )
    w_mid = np.where(degenerate, 0.5 * (rho_left + rho_right), numerator / safe)

    cp_prev = np.roll(cp, 1, axis=-1)
    length = grid.dx - dt * (cp_prev - cm)
    _check_denominators([("smooth cell", length)], "intermediate averages")
    if strict_paper_formulas:
        inflow = system.flux(np.roll(rho_half_right, 1, axis=-1), R_half_left)
        w_smooth = values + 0.5 * s * (cp + cm) - dt / length * (F_half_left - inflow)
    else:
        # a zero-width fan carries no flux difference: both neighbours see one interface flux
        shared = 0.5 * (F_half_left + F_half_right)
        F_half_left = np.where(degenerate, shared, F_half_left)
        inflow = np.roll(np.where(degenerate, shared, F_half_right), 1, axis=-1)
        w_smooth = values + 0.5 * dt * (cp_prev + cm) * s - dt / length * (F_half_left - inflow)
    return w_mid, w_smooth, degenerate


def kt_projection_slopes(
    w_mid, w_smooth, rho_left, rho_right, fx_left, fx_right, speeds: SpeedPair, dt: float, degenerate=None
) -> np.ndarray:
    """Slopes of the linear pieces on the fans, zeroed where an end leaves the neighbouring averages"""
    cp, cm = speeds.c_plus, speeds.c_minus
    half = 0.5 * (cp - cm) * dt
    if degenerate is None:
        degenerate = half <= 0.0
    safe = np.where(degenerate, 1.0, half)
    full_left = rho_left - dt * fx_left
    full_right = rho_right - dt * fx_right
    sigma = np.asarray(minmod((w_mid - full_left) / safe, (full_right - w_mid) / safe))

    w_next = np.roll(w_smooth, -1, axis=-1)
    lo = np.minimum(np.minimum(w_smooth, w_mid), w_next)
    hi = np.maximum(np.maximum(w_smooth, w_mid), w_next)
    ends = (w_mid - half * sigma, w_mid + half * sigma)
    inside = np.logical_and.reduce([(end >= lo) & (end <= hi) for end in ends])
    return np.where(degenerate | ~inside, 0.0, sigma)


def build_kt_workspace(
    state: State,
    grid: Grid,
    kernel: Kernel,
    weights: KernelWeights,
    model: AnyModel,
    dt: float,
    theta: float = SolverDefaults.THETA,
    strict_paper_formulas: bool = False,
) -> KtWorkspace:
    if not weights.integer_ratio:
        raise InvalidParameterError(
            f"the KT scheme needs eta/dx to be an integer, got eta={weights.eta:g}, dx={weights.dx:.17g}"
        )
    if not dt > 0.0:
        raise InvalidParameterError(f"time step must be positive, got {dt}")
    system = as_system_model(model)
    values = state_values(state)

    slopes, speeds = interface_speeds(values, grid, weights, system, theta)
    cp, cm = speeds.c_plus, speeds.c_minus
    rho_left, rho_right = kt_shifted_values(values, slopes, speeds, grid, dt)
    R_left = convolve_shifted(values, slopes, kernel, grid, cm * dt, LEFT)
    R_right = convolve_shifted(values, slopes, kernel, grid, cp * dt, RIGHT)

    fx_left, fx_right = kt_flux_slopes(
        rho_left, rho_right, R_left, R_right, speeds, system, grid, dt, strict_paper_formulas
    )
    source_left = system.source_rates(rho_left, R_left)
    source_right = system.source_rates(rho_right, R_right)
    # d/dt rho = -(F_x - S)
    g_left, g_right = fx_left - source_left, fx_right - source_right

    dR_left = convolve_time_derivative(g_left, kernel, grid, cm * dt, LEFT)
    dR_right = convolve_time_derivative(g_right, kernel, grid, cp * dt, RIGHT)
    rho_half_left, rho_half_right, R_half_left, R_half_right = kt_predictors(
        rho_left, rho_right, R_left, R_right, g_left, g_right, dR_left, dR_right, dt
    )

    w_mid, w_smooth, degenerate = kt_intermediate_averages(
        values,
        slopes,
        rho_left,
        rho_right,
        rho_half_left,
        rho_half_right,
        R_half_left,
        R_half_right,
        speeds,
        system,
        grid,
        dt,
        strict_paper_formulas,
    )
    # w_mid holds the flux part only, so the fan endpoints use F_x without -S
    proj_slopes = kt_projection_slopes(w_mid, w_smooth, rho_left, rho_right, fx_left, fx_right, speeds, dt, degenerate)
    if np.any(degenerate):
        logger.debug("%d degenerate KT interfaces at t=%g", int(np.count_nonzero(degenerate)), state_time(state))

    return KtWorkspace(
        t=state_time(state),
        dt=float(dt),
        values=values,
        slopes=slopes,
        speeds=speeds,
        split_left=grid.interfaces + cm * dt,
        split_right=grid.interfaces + cp * dt,
        rho_left=rho_left,
        rho_right=rho_right,
        R_left=R_left,
        R_right=R_right,
        flux_slopes_left=fx_left,
        flux_slopes_right=fx_right,
        source_left=source_left,
        source_right=source_right,
        dR_left=dR_left,
        dR_right=dR_right,
        rho_half_left=rho_half_left,
        rho_half_right=rho_half_right,
        R_half_left=R_half_left,
        R_half_right=R_half_right,
        w_mid=w_mid,
        w_smooth=w_smooth,
        degenerate=degenerate,
        proj_slopes=proj_slopes,
    )


def state_time(state) -> float:
    return state.t if isinstance(state, State) else 0.0


def interface_half_states(workspace: KtWorkspace) -> Tuple[np.ndarray, np.ndarray]:
    """rho and R at x_{j+1/2} and t + dt/2, interpolated across each fan"""
    ws = workspace
    cp, cm = ws.speeds.c_plus, ws.speeds.c_minus
    width = np.where(ws.degenerate, 1.0, cp - cm)

    def across(left, right):
        return np.where(ws.degenerate, 0.5 * (left + right), (cp * left - cm * right) / width)

    return across(ws.rho_half_left, ws.rho_half_right), across(ws.R_half_left, ws.R_half_right)


def cell_source(workspace: KtWorkspace, model: AnyModel) -> np.ndarray:
    """Trapezoid average of S over cell j at t + dt/2"""
    rho, R = interface_half_states(workspace)
    rates = as_system_model(model).source_rates(rho, R)
    return 0.5 * (np.roll(rates, 1, axis=-1) + rates)


def kt_update(workspace: KtWorkspace, grid: Grid, model: AnyModel) -> np.ndarray:
    """Conservative re-averaging of the smooth and fan pieces onto the grid, plus dt times the source"""
    ws = workspace
    cp, cm = ws.speeds.c_plus, ws.speeds.c_minus
    dt, dx = ws.dt, grid.dx
    w, w_mid, sigma = ws.w_smooth, ws.w_mid, ws.proj_slopes
    cp_prev, cm_prev = np.roll(cp, 1, axis=-1), np.roll(cm, 1, axis=-1)
    w_mid_prev, sigma_prev = np.roll(w_mid, 1, axis=-1), np.roll(sigma, 1, axis=-1)

    updated = (
        w
        + dt / dx * (cp_prev * (w_mid_prev - w) - cm * (w_mid - w))
        + dt**2 / (2.0 * dx) * (sigma * cp * cm - sigma_prev * cm_prev * cp_prev)
    )

    system = as_system_model(model)
    if system.source is not None:
        updated = updated + dt * cell_source(ws, system)
    return updated


def kt_step(
    state: State,
    grid: Grid,
    kernel: Kernel,
    weights: KernelWeights,
    model: AnyModel,
    dt: float,
    theta: float = SolverDefaults.THETA,
    strict_paper_formulas: bool = False,
) -> State:
    workspace = build_kt_workspace(state, grid, kernel, weights, model, dt, theta, strict_paper_formulas)
    return State(state_time(state) + dt, kt_update(workspace, grid, model))
