#!/usr/bin/env python3
"""
Local speeds, central-upwind and Godunov numerical fluxes, scalar semi-discrete operator
"""

import logging
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from errors import InvalidParameterError, SolverDefaults
from models import Grid, ScalarModel, state_values
from nonlocal_terms import KernelWeights, convolve_interfaces
from recon import Reconstruction, compute_slopes, interface_values, minmod

logger = logging.getLogger(__name__)

FLUX_FAMILIES = ("cu", "godunov")


@dataclass(frozen=True)
class SpeedPair:
    """c+ >= 0 >= c- per interface"""

    c_plus: np.ndarray
    c_minus: np.ndarray

    @property
    def width(self) -> np.ndarray:
        return self.c_plus - self.c_minus

    @property
    def max_speed(self) -> float:
        return float(max(np.max(self.c_plus), np.max(-self.c_minus)))


@dataclass(frozen=True)
class InterfaceFlux:
    value: np.ndarray
    speeds: SpeedPair


def local_speeds(a, b, R, model: ScalarModel) -> SpeedPair:
    """c+- = max/min(g'(a), g'(b), 0) v(R)"""
    ga = np.asarray(model.g_prime(a), dtype=float)
    gb = np.asarray(model.g_prime(b), dtype=float)
    vR = np.asarray(model.v(R), dtype=float)
    # clamped so that c- <= 0 <= c+ survives v(R) rounding below zero
    c_plus = np.maximum(np.maximum(np.maximum(ga, gb), 0.0) * vR, 0.0)
    c_minus = np.minimum(np.minimum(np.minimum(ga, gb), 0.0) * vR, 0.0)
    return SpeedPair(c_plus=c_plus, c_minus=c_minus)


def _cu_terms(a, b, R, model: ScalarModel, speeds: Optional[SpeedPair]):
    a, b, R = (np.asarray(z, dtype=float) for z in (a, b, R))
    if speeds is None:
        speeds = local_speeds(a, b, R, model)
    cp, cm = speeds.c_plus, speeds.c_minus
    width = cp - cm
    degenerate = width <= model.speed_epsilon
    safe = np.where(degenerate, 1.0, width)
    Fa, Fb = model.flux(a, R), model.flux(b, R)
    rho_star = (cp * b - cm * a - (Fb - Fa)) / safe
    d = np.where(degenerate, 0.0, minmod(b - rho_star, rho_star - a))
    return a, b, cp, cm, width, degenerate, safe, Fa, Fb, d


def anti_diffusion(a, b, R, model: ScalarModel, speeds: Optional[SpeedPair] = None) -> np.ndarray:
    """d_{j+1/2} = minmod(b - rho*, rho* - a)"""
    return _cu_terms(a, b, R, model, speeds)[-1]


def cu_flux(a, b, R, model: ScalarModel, speeds: Optional[SpeedPair] = None) -> np.ndarray:
    """Central-upwind flux with built-in anti-diffusion"""
    model.check_domain(a, "left interface value")
    model.check_domain(b, "right interface value")
    model.check_domain(R, "convolution")
    a, b, cp, cm, width, degenerate, safe, Fa, Fb, d = _cu_terms(a, b, R, model, speeds)

    value = (cp * Fa - cm * Fb) / safe + cp * cm * (b - a - d) / safe
    # one-sided fans are exact upwinding
    value = np.where(cm == 0.0, Fa, np.where(cp == 0.0, Fb, value))
    fallback = np.where(cp > 0.0, Fa, np.where(cm < 0.0, Fb, 0.5 * (Fa + Fb)))
    result = np.where(degenerate, fallback, value)
    return result if result.ndim else float(result)


def godunov_flux(a, b, R, model: ScalarModel) -> np.ndarray:
    """v(R) min g over [a, b] if a <= b, else v(R) max g over [b, a]"""
    a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    vR = np.asarray(model.v(R), dtype=float)
    if model.g_monotone_nonneg:
        result = np.asarray(model.g(a), dtype=float) * vR
        return result if result.ndim else float(result)

    lo, hi = np.minimum(a, b), np.maximum(a, b)
    g_lo, g_hi = np.asarray(model.g(lo), dtype=float), np.asarray(model.g(hi), dtype=float)
    g_min, g_max = np.minimum(g_lo, g_hi), np.maximum(g_lo, g_hi)
    c = model.stationary_point
    if c is not None:
        inside = (lo <= c) & (c <= hi)
        g_c = float(model.g(np.asarray(c)))
        if model.g_shape == "concave":
            g_max = np.where(inside, np.maximum(g_max, g_c), g_max)
        else:
            g_min = np.where(inside, np.minimum(g_min, g_c), g_min)
    result = np.where(a <= b, g_min, g_max) * vR
    return result if result.ndim else float(result)


def numerical_flux(a, b, R, model: ScalarModel, family: str = "cu", speeds: Optional[SpeedPair] = None):
    if family == "cu":
        return cu_flux(a, b, R, model, speeds=speeds)
    if family == "godunov":
        return godunov_flux(a, b, R, model)
    raise InvalidParameterError(f"unknown flux family '{family}', expected one of {', '.join(FLUX_FAMILIES)}")


def reconstruct_component(
    values: np.ndarray, grid: Grid, weights: KernelWeights, order: int = 1, theta: float = SolverDefaults.THETA
) -> Tuple[Reconstruction, np.ndarray]:
    """Interface values and interface convolutions for one component row"""
    values = np.asarray(values, dtype=float)
    if order == 1:
        slopes = np.zeros_like(values)
        R = convolve_interfaces(values, weights, None, grid)[0]
    elif order == 2:
        slopes = compute_slopes(values, grid, theta)[0]
        R = convolve_interfaces(values, weights, slopes, grid)[0]
    else:
        raise InvalidParameterError(f"order must be 1 or 2, got {order}")
    return interface_values(values, slopes, grid), R


def interface_flux(
    recon: Reconstruction, R: np.ndarray, model: ScalarModel, family: str = "cu", speeds: Optional[SpeedPair] = None
) -> InterfaceFlux:
    a, b = recon.left_values[0], recon.right_values[0]
    if speeds is None:
        speeds = local_speeds(a, b, R, model)
    value = np.asarray(numerical_flux(a, b, R, model, family, speeds=speeds))
    return InterfaceFlux(value=value, speeds=speeds)


def flux_divergence(flux_values: np.ndarray, dx: float) -> np.ndarray:
    """-(F_{j+1/2} - F_{j-1/2}) / dx"""
    return -(flux_values - np.roll(flux_values, 1, axis=-1)) / dx


def scalar_rhs(
    state,
    grid: Grid,
    weights: KernelWeights,
    model: ScalarModel,
    scheme: str = "cu",
    order: int = 1,
    theta: float = SolverDefaults.THETA,
) -> np.ndarray:
    """d rho_j / dt for a single source-free law, shape (1, cells)"""
    values = state_values(state)
    if values.shape[0] != 1:
        raise InvalidParameterError(f"a scalar law takes one component, got {values.shape[0]}")
    recon, R = reconstruct_component(values[0], grid, weights, order, theta)
    flux = interface_flux(recon, R, model, scheme)
    return flux_divergence(flux.value, grid.dx)[np.newaxis, :]

