#!/usr/bin/env python3
"""
Component-wise central-upwind operator for weakly coupled systems with sources,
and the semi-discrete entry point shared by scalars and systems
"""

from typing import List, Sequence

import numpy as np

from errors import InvalidParameterError, SolverDefaults
from flux import SpeedPair, flux_divergence, interface_flux, local_speeds, reconstruct_component, scalar_rhs
from models import AnyModel, Grid, SystemModel, as_system_model, state_values
from nonlocal_terms import KernelWeights
from recon import Reconstruction


def componentwise_speeds(
    system_state,
    reconstructions: Sequence[Reconstruction],
    convolutions: np.ndarray,
    system_model: SystemModel,
) -> List[SpeedPair]:
    """Speeds per component from that component's g_k' and v_k(R_k)"""
    values = state_values(system_state)
    if not (len(reconstructions) == len(convolutions) == values.shape[0] == system_model.n_components):
        raise InvalidParameterError("component counts of state, reconstructions, convolutions and model differ")
    speeds = []
    for recon, R, model in zip(reconstructions, convolutions, system_model.components):
        speeds.append(local_speeds(recon.left_values[0], recon.right_values[0], R, model))
    return speeds


def center_convolutions(convolutions: np.ndarray) -> np.ndarray:
    """(R_{j-1/2} + R_{j+1/2}) / 2"""
    return 0.5 * (convolutions + np.roll(convolutions, 1, axis=-1))


def system_rhs(
    system_state,
    grid: Grid,
    weights: KernelWeights,
    system_model: SystemModel,
    scheme: str = "cu",
    order: int = 1,
    theta: float = SolverDefaults.THETA,
) -> np.ndarray:
    """Flux divergence per component plus the signed source"""
    values = state_values(system_state)

    # every convolution of the stage comes from the same snapshot
    reconstructions, convolutions = [], []
    for k in range(system_model.n_components):
        recon, R = reconstruct_component(values[k], grid, weights, order, theta)
        reconstructions.append(recon)
        convolutions.append(R)
    convolutions = np.stack(convolutions)
    speeds = componentwise_speeds(values, reconstructions, convolutions, system_model)

    rates = np.empty_like(values)
    for k, model in enumerate(system_model.components):
        flux = interface_flux(reconstructions[k], convolutions[k], model, scheme, speeds=speeds[k])
        rates[k] = flux_divergence(flux.value, grid.dx)

    if system_model.source is not None:
        rates = rates + system_model.source_rates(values, center_convolutions(convolutions))
    return rates


def semidiscrete_rhs(
    state,
    grid: Grid,
    weights: KernelWeights,
    model: AnyModel,
    scheme: str = "cu",
    order: int = 1,
    theta: float = SolverDefaults.THETA,
) -> np.ndarray:
    """d rho_j / dt per component, shape (components, cells)"""
    values = state_values(state)
    system = as_system_model(model)
    if values.shape[0] != system.n_components:
        raise InvalidParameterError(f"state has {values.shape[0]} components, model expects {system.n_components}")
    if system.n_components == 1 and system.source is None:
        return scalar_rhs(values, grid, weights, system.components[0], scheme=scheme, order=order, theta=theta)
    return system_rhs(values, grid, weights, system, scheme=scheme, order=order, theta=theta)
