#!/usr/bin/env python3
"""
Piecewise-linear reconstruction with minmod-limited slopes on a periodic grid
"""

from dataclasses import dataclass

import numpy as np

from errors import InvalidParameterError, SolverDefaults
from models import Grid, state_values


def _unwrap(result: np.ndarray):
    return result if result.ndim else float(result)


def minmod(a, b):
    """Smaller-magnitude argument when the signs agree, zero otherwise (ties return a)"""
    a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    result = np.where(a * b <= 0.0, 0.0, np.where(np.abs(a) <= np.abs(b), a, b))
    return _unwrap(result)


def minmod3(a, b, c):
    """Three-argument minmod"""
    a, b, c = (np.asarray(z, dtype=float) for z in (a, b, c))
    positive = (a > 0.0) & (b > 0.0) & (c > 0.0)
    negative = (a < 0.0) & (b < 0.0) & (c < 0.0)
    result = np.where(
        positive,
        np.minimum(np.minimum(a, b), c),
        np.where(negative, np.maximum(np.maximum(a, b), c), 0.0),
    )
    return _unwrap(result)


@dataclass(frozen=True)
class Reconstruction:
    """Slopes per cell and one-sided values per interface x_{j+1/2}"""

    slopes: np.ndarray
    left_values: np.ndarray  # rho^-_{j+1/2}, from cell j
    right_values: np.ndarray  # rho^+_{j+1/2}, from cell j+1


def validate_theta(theta: float) -> float:
    if not SolverDefaults.THETA_MIN <= theta <= SolverDefaults.THETA_MAX:
        raise InvalidParameterError(
            f"limiter parameter theta must lie in [{SolverDefaults.THETA_MIN}, {SolverDefaults.THETA_MAX}], got {theta}"
        )
    return float(theta)


def compute_slopes(state, grid: Grid, theta: float = SolverDefaults.THETA) -> np.ndarray:
    """Limited slopes s_j along the cell axis of a state or array"""
    theta = validate_theta(theta)
    values = state_values(state)
    backward = (values - np.roll(values, 1, axis=-1)) / grid.dx
    forward = (np.roll(values, -1, axis=-1) - values) / grid.dx
    if theta == 1.0:
        slopes = np.asarray(minmod(backward, forward))
    else:
        central = 0.5 * (backward + forward)
        slopes = np.asarray(minmod3(theta * backward, central, theta * forward))

    # one-sided values may not overshoot the neighbouring averages
    bound = 2.0 * np.minimum(np.abs(backward), np.abs(forward))
    return np.sign(slopes) * np.minimum(np.abs(slopes), bound)


def interface_values(state, slopes: np.ndarray, grid: Grid) -> Reconstruction:
    values = state_values(state)
    slopes = np.broadcast_to(np.asarray(slopes, dtype=float), values.shape)
    half = 0.5 * grid.dx
    left = values + half * slopes
    right = np.roll(values - half * slopes, -1, axis=-1)
    return Reconstruction(slopes=np.array(slopes), left_values=left, right_values=right)
