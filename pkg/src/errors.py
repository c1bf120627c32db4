#!/usr/bin/env python3
"""
Exception hierarchy and tuning constants for the nonlocal solver
"""


class NonlocalSolverError(Exception):
    """Base class for every error raised by the solver"""


class InvalidParameterError(NonlocalSolverError, ValueError):
    """A parameter or input violates an operation's precondition"""


class NumericalFailureError(NonlocalSolverError):
    """Quadrature did not converge or a state became non-finite"""


class CflViolationError(NumericalFailureError):
    """A time step is too large for the geometry of the scheme"""


class SolverDefaults:
    """Constants for the discretization and the convergence harness"""

    # Periodic domain and look-ahead length of the shipped scenarios
    X_MIN = -1.0
    X_MAX = 1.0
    ETA = 0.2

    # Grid levels: dx = BASE_DX * 2**-level
    BASE_DX = 1.0 / 20.0
    REFERENCE_LEVEL = 9
    REDUCED_REFERENCE_LEVEL = 8
    DEFAULT_LEVELS = 6

    # Degenerate-speed threshold factor (scaled by max(1, |g'| |v|))
    SPEED_EPSILON_FACTOR = 1e-14

    # Norm bounds without closed form: sampled supremum, inflated
    NORM_SAMPLES = 10_000
    NORM_INFLATION = 1.01

    # Kernel quadrature
    SIMPSON_TOLERANCE = 1e-12
    SIMPSON_MAX_REFINEMENTS = 22
    NORMALIZATION_TOLERANCE = 1e-10
    RATIO_TOLERANCE = 1e-9

    # Initial data projection
    GAUSS_POINTS = 5

    # Soft domain check on flux inputs
    DOMAIN_TOLERANCE = 1e-10

    # Landing tolerance relative to t_final
    LANDING_TOLERANCE = 1e-14

    # CFL safety factor per scheme
    CFL_SAFETY = {"cu1": 1.0, "godunov1": 1.0, "cu2": 1.0, "kt": 0.9}

    # Limiter parameter
    THETA = 1.0
    THETA_MIN = 1.0
    THETA_MAX = 2.0

    # Parallel sweep jobs
    WORKERS = 4
