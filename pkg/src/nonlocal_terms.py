#!/usr/bin/env python3
"""
Kernel weights and the nonlocal convolution terms R = omega_eta * rho

Interface convolutions use the cell-integrated weights gamma_k and are valid
for any eta/dx. The shifted evaluations and their time derivatives used by the
fully-discrete scheme assume eta/dx is an integer.
"""

import logging
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import integrate

from errors import CflViolationError, InvalidParameterError, NumericalFailureError, SolverDefaults
from models import Grid, Kernel, state_values

logger = logging.getLogger(__name__)

LEFT = "left"
RIGHT = "right"


@dataclass(frozen=True)
class KernelWeights:
    """gamma_0..gamma_{n_eta} for a kernel on a grid spacing dx"""

    gamma: np.ndarray
    n_eta: int
    dx: float
    eta: float
    integer_ratio: bool

    @property
    def gamma0(self) -> float:
        return float(self.gamma[0])

    @property
    def partial_weight(self) -> float:
        return float(self.gamma[self.n_eta])

    @property
    def partial_offset(self) -> float:
        """Offset of the residual window midpoint from the center of cell j+n_eta+1"""
        return 0.5 * (self.eta - self.n_eta * self.dx - self.dx)


def eta_ratio(eta: float, dx: float):
    """(n_eta, is_integer) for eta/dx"""
    ratio = eta / dx
    nearest = round(ratio)
    if nearest >= 1 and abs(ratio - nearest) <= SolverDefaults.RATIO_TOLERANCE * max(1.0, ratio):
        return int(nearest), True
    return int(math.floor(ratio)), False


def adaptive_simpson(func, a: float, b: float, tol: float = SolverDefaults.SIMPSON_TOLERANCE) -> float:
    """Composite Simpson with interval doubling until successive values agree to tol"""
    if b <= a:
        return 0.0
    intervals = 2
    previous = None
    for _ in range(SolverDefaults.SIMPSON_MAX_REFINEMENTS):
        x = np.linspace(a, b, intervals + 1)
        current = float(integrate.simpson(np.asarray(func(x), dtype=float), x=x))
        if previous is not None and abs(current - previous) <= tol:
            return current
        previous = current
        intervals *= 2
    raise NumericalFailureError(
        f"Simpson quadrature on [{a:.17g}, {b:.17g}] did not reach tolerance {tol:g} with {intervals // 2} intervals"
    )


def compute_kernel_weights(kernel: Kernel, dx: float) -> KernelWeights:
    """gamma_k = integral of omega over [k dx, min((k+1) dx, eta)]"""
    if not dx > 0:
        raise InvalidParameterError(f"grid spacing must be positive, got {dx}")
    n_eta, integer_ratio = eta_ratio(kernel.eta, dx)

    gamma = np.zeros(n_eta + 1)
    top = n_eta if integer_ratio else n_eta + 1
    for k in range(top):
        lo = k * dx
        hi = kernel.eta if k == n_eta else min((k + 1) * dx, kernel.eta)
        if kernel.antiderivative is not None:
            gamma[k] = float(kernel.antiderivative(np.asarray(hi)) - kernel.antiderivative(np.asarray(lo)))
        else:
            gamma[k] = adaptive_simpson(kernel, lo, hi)

    gamma.setflags(write=False)
    logger.debug("kernel weights for dx=%g: n_eta=%d integer=%s sum=%.17g", dx, n_eta, integer_ratio, gamma.sum())
    return KernelWeights(gamma=gamma, n_eta=n_eta, dx=float(dx), eta=float(kernel.eta), integer_ratio=integer_ratio)


def _check_spacing(weights: KernelWeights, grid: Grid) -> None:
    if abs(weights.dx - grid.dx) > 1e-12 * grid.dx:
        raise InvalidParameterError(f"kernel weights were built for dx={weights.dx:.17g}, grid has dx={grid.dx:.17g}")


def _shifted(values: np.ndarray, offset: int) -> np.ndarray:
    """values[..., j + offset] with periodic wrap"""
    n = values.shape[-1]
    return np.take(values, (np.arange(n) + offset) % n, axis=-1)


def _window_sum(row: np.ndarray, gamma: np.ndarray) -> np.ndarray:
    """sum_k gamma_k row[j+k+1] by direct summation"""
    n = row.shape[0]
    extended = np.take(row, np.arange(1, n + gamma.size + 1), mode="wrap")
    return np.correlate(extended, gamma, mode="valid")[:n]


def convolve_interfaces(state, weights: KernelWeights, slopes: Optional[np.ndarray] = None, grid: Optional[Grid] = None):
    """R_{j+1/2} per component; zero slopes give the first-order variant"""
    values = state_values(state)
    if grid is not None:
        _check_spacing(weights, grid)
    full = np.asarray(weights.gamma[: weights.n_eta])
    if full.size:
        result = np.stack([_window_sum(row, full) for row in values])
    else:
        result = np.zeros_like(values)

    partial = weights.partial_weight
    if partial > 0.0:
        target = _shifted(values, weights.n_eta + 1)
        if slopes is not None:
            s = np.broadcast_to(np.asarray(slopes, dtype=float), values.shape)
            target = target + weights.partial_offset * _shifted(s, weights.n_eta + 1)
        result = result + partial * target
    return result


def _integer_support(kernel: Kernel, grid: Grid) -> int:
    n_eta, integer_ratio = eta_ratio(kernel.eta, grid.dx)
    if not integer_ratio:
        raise InvalidParameterError(
            f"shifted convolutions need eta/dx to be an integer, got eta={kernel.eta:g}, dx={grid.dx:.17g}"
        )
    return n_eta


def _check_shift(shift: np.ndarray, grid: Grid) -> None:
    limit = 0.5 * grid.dx * (1.0 + 1e-12)
    if np.any(np.abs(shift) > limit):
        worst = float(np.max(np.abs(shift)))
        raise CflViolationError(f"shift {worst:.17g} exceeds half a cell ({0.5 * grid.dx:.17g})")


def _pick(result: np.ndarray, j: Optional[int]):
    if j is None:
        return result
    return result[..., int(j) % result.shape[-1]]


def convolve_shifted(state, slopes, kernel: Kernel, grid: Grid, shift, side: str, j: Optional[int] = None):
    """R at x_{j+1/2} + shift by midpoint quadrature on the linear reconstruction

    ``shift`` is c^- dt for the left family and c^+ dt for the right family,
    either a scalar or one value per interface.
    """
    values = state_values(state)
    s = np.broadcast_to(np.asarray(slopes, dtype=float), values.shape)
    shift = np.broadcast_to(np.asarray(shift, dtype=float), values.shape)
    _check_shift(shift, grid)
    n_eta = _integer_support(kernel, grid)
    dx = grid.dx

    if side == LEFT:
        a = shift
        result = (-a) * kernel(-0.5 * a) * (values + 0.5 * (dx + a) * s)
        for ell in range(n_eta - 1):
            result = result + dx * kernel((ell + 0.5) * dx - a) * _shifted(values, ell + 1)
        closing = _shifted(values, n_eta) + 0.5 * a * _shifted(s, n_eta)
        result = result + (dx + a) * kernel(0.5 * ((2 * n_eta - 1) * dx - a)) * closing
    elif side == RIGHT:
        b = shift
        opening = _shifted(values, 1) + 0.5 * b * _shifted(s, 1)
        result = (dx - b) * kernel(0.5 * (dx - b)) * opening
        for ell in range(n_eta - 1):
            result = result + dx * kernel((ell + 1.5) * dx - b) * _shifted(values, ell + 2)
        closing = _shifted(values, n_eta + 1) - 0.5 * (dx - b) * _shifted(s, n_eta + 1)
        result = result + b * kernel(0.5 * (2 * n_eta * dx - b)) * closing
    else:
        raise InvalidParameterError(f"side must be '{LEFT}' or '{RIGHT}', got '{side}'")
    return _pick(result, j)


def convolve_time_derivative(flux_slopes, kernel: Kernel, grid: Grid, shift, side: str, j: Optional[int] = None):
    """d/dt R at the shifted points from flux derivatives of the same family

    Pass F_x - S to include a source term.
    """
    fx = np.atleast_2d(np.asarray(flux_slopes, dtype=float))
    shift = np.broadcast_to(np.asarray(shift, dtype=float), fx.shape)
    _check_shift(shift, grid)
    n_eta = _integer_support(kernel, grid)
    dx = grid.dx

    if side == LEFT:
        a = shift
        result = a * kernel(-0.5 * a) * fx
        for ell in range(n_eta - 1):
            result = result - dx * kernel((ell + 0.5) * dx - a) * _shifted(fx, ell + 1)
        result = result - (dx + a) * kernel(0.5 * ((2 * n_eta - 1) * dx - a)) * _shifted(fx, n_eta)
    elif side == RIGHT:
        b = shift
        result = -(dx - b) * kernel(0.5 * (dx - b)) * fx
        for ell in range(n_eta - 1):
            result = result - dx * kernel((ell + 1.5) * dx - b) * _shifted(fx, ell + 1)
        result = result - b * kernel(0.5 * (2 * n_eta * dx - b)) * _shifted(fx, n_eta)
    else:
        raise InvalidParameterError(f"side must be '{LEFT}' or '{RIGHT}', got '{side}'")
    return _pick(result, j)
