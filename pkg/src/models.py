#!/usr/bin/env python3
"""
Grids, kernels, flux/speed models and initial data for nonlocal balance laws

Everything here is immutable once built and safe to share between threads.
"""

import dataclasses
import logging
from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Optional, Sequence, Tuple, Union

import numpy as np
from scipy import integrate, optimize
from scipy.special import roots_legendre

from errors import InvalidParameterError, NumericalFailureError, SolverDefaults

logger = logging.getLogger(__name__)

ArrayFunction = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class Grid:
    """Uniform periodic mesh on [x_min, x_max]"""

    x_min: float
    x_max: float
    n_cells: int

    def __post_init__(self):
        if int(self.n_cells) != self.n_cells or self.n_cells <= 0:
            raise InvalidParameterError(f"n_cells must be a positive integer, got {self.n_cells}")
        if not self.x_max > self.x_min:
            raise InvalidParameterError(f"empty domain [{self.x_min}, {self.x_max}]")

    @classmethod
    def from_level(cls, level: int, x_min: float = SolverDefaults.X_MIN, x_max: float = SolverDefaults.X_MAX) -> "Grid":
        """Grid with dx = (1/20) * 2**-level"""
        if level < 0:
            raise InvalidParameterError(f"grid level must be >= 0, got {level}")
        dx = SolverDefaults.BASE_DX * 2.0 ** (-level)
        return cls(x_min, x_max, int(round((x_max - x_min) / dx)))

    @property
    def length(self) -> float:
        return self.x_max - self.x_min

    @property
    def dx(self) -> float:
        return self.length / self.n_cells

    @cached_property
    def centers(self) -> np.ndarray:
        x = self.x_min + (np.arange(self.n_cells) + 0.5) * self.dx
        x.setflags(write=False)
        return x

    @cached_property
    def interfaces(self) -> np.ndarray:
        """x_{j+1/2} for j = 0..n_cells-1"""
        x = self.x_min + (np.arange(self.n_cells) + 1.0) * self.dx
        x.setflags(write=False)
        return x

    def wrap(self, j):
        return np.mod(j, self.n_cells)


@dataclass(frozen=True)
class Kernel:
    """Look-ahead kernel supported on [0, eta]"""

    eta: float
    omega: ArrayFunction
    antiderivative: Optional[ArrayFunction] = None
    name: str = "custom"

    def __post_init__(self):
        if not self.eta > 0:
            raise InvalidParameterError(f"kernel length eta must be positive, got {self.eta}")

    def __call__(self, y) -> np.ndarray:
        y = np.asarray(y, dtype=float)
        inside = (y >= 0.0) & (y <= self.eta)
        values = np.broadcast_to(np.asarray(self.omega(np.clip(y, 0.0, self.eta)), dtype=float), y.shape)
        return np.where(inside, values, 0.0)

    def validate(self, samples: int = 1001) -> None:
        """Check positivity, monotonicity and unit mass"""
        y = np.linspace(0.0, self.eta, samples)
        w = self(y)
        if np.any(w < 0.0):
            raise InvalidParameterError(f"kernel '{self.name}' takes negative values on [0, eta]")
        if np.any(np.diff(w) > 1e-12 * max(1.0, float(np.max(np.abs(w))))):
            raise InvalidParameterError(f"kernel '{self.name}' is not nonincreasing on [0, eta]")
        total, _ = integrate.quad(lambda s: float(self.omega(np.asarray(s))), 0.0, self.eta)
        if abs(total - 1.0) > SolverDefaults.NORMALIZATION_TOLERANCE:
            raise InvalidParameterError(f"kernel '{self.name}' integrates to {total:.15g}, expected 1")


def make_quadratic_kernel(eta: float) -> Kernel:
    """omega(x) = 3 (eta^2 - x^2) / (2 eta^3) with exact antiderivative"""
    if not eta > 0:
        raise InvalidParameterError(f"kernel length eta must be positive, got {eta}")
    scale = 2.0 * eta**3

    def omega(x):
        x = np.asarray(x, dtype=float)
        return 3.0 * (eta**2 - x**2) / scale

    def antiderivative(x):
        x = np.asarray(x, dtype=float)
        return (3.0 * eta**2 * x - x**3) / scale

    kernel = Kernel(eta=eta, omega=omega, antiderivative=antiderivative, name="quadratic")
    kernel.validate()
    return kernel


def make_constant_kernel(eta: float) -> Kernel:
    """omega(x) = 1/eta on [0, eta]"""
    if not eta > 0:
        raise InvalidParameterError(f"kernel length eta must be positive, got {eta}")

    def omega(x):
        return np.full(np.shape(x), 1.0 / eta)

    def antiderivative(x):
        return np.asarray(x, dtype=float) / eta

    kernel = Kernel(eta=eta, omega=omega, antiderivative=antiderivative, name="constant")
    kernel.validate()
    return kernel


@dataclass(frozen=True)
class NormBounds:
    """Sup-norms over the invariant interval used by the CFL conditions"""

    g: float
    g_prime: float
    v: float
    v_prime: float
    rho: float


def _sampled_sup(func: ArrayFunction, interval: Tuple[float, float]) -> float:
    lo, hi = interval
    samples = np.linspace(lo, hi, SolverDefaults.NORM_SAMPLES)
    values = np.broadcast_to(np.asarray(func(samples), dtype=float), samples.shape)
    return float(np.max(np.abs(values))) * SolverDefaults.NORM_INFLATION


@dataclass(frozen=True)
class ScalarModel:
    """Flux F(rho, R) = g(rho) v(R) for one conserved density"""

    g: ArrayFunction
    g_prime: ArrayFunction
    v: ArrayFunction
    v_prime: ArrayFunction
    interval: Tuple[float, float] = (0.0, 1.0)
    g_shape: str = "concave"  # convex or concave
    g_monotone_nonneg: bool = False
    critical_point: Optional[float] = None  # zero of g'
    closed_form_bounds: Optional[Callable[[Tuple[float, float]], NormBounds]] = None
    name: str = "custom"

    def __post_init__(self):
        if self.g_shape not in ("convex", "concave"):
            raise InvalidParameterError(f"g_shape must be 'convex' or 'concave', got '{self.g_shape}'")
        lo, hi = self.interval
        if not hi >= lo:
            raise InvalidParameterError(f"invalid interval [{lo}, {hi}]")

    def flux(self, rho, R) -> np.ndarray:
        return np.asarray(self.g(rho), dtype=float) * np.asarray(self.v(R), dtype=float)

    def with_interval(self, lo: float, hi: float) -> "ScalarModel":
        return dataclasses.replace(self, interval=(float(lo), float(hi)))

    @cached_property
    def norm_bounds(self) -> NormBounds:
        if self.closed_form_bounds is not None:
            return self.closed_form_bounds(self.interval)
        lo, hi = self.interval
        return NormBounds(
            g=_sampled_sup(self.g, self.interval),
            g_prime=_sampled_sup(self.g_prime, self.interval),
            v=_sampled_sup(self.v, self.interval),
            v_prime=_sampled_sup(self.v_prime, self.interval),
            rho=max(abs(lo), abs(hi)),
        )

    @cached_property
    def stationary_point(self) -> Optional[float]:
        """Zero of g' inside the interval, if any"""
        if self.g_monotone_nonneg:
            return None
        if self.critical_point is not None:
            return float(self.critical_point)
        lo, hi = self.interval
        d_lo, d_hi = float(self.g_prime(np.asarray(lo))), float(self.g_prime(np.asarray(hi)))
        if d_lo == 0.0:
            return lo
        if d_hi == 0.0:
            return hi
        if d_lo * d_hi > 0.0:
            return None
        return optimize.brentq(lambda r: float(self.g_prime(np.asarray(r))), lo, hi, xtol=1e-15)

    @property
    def speed_epsilon(self) -> float:
        bounds = self.norm_bounds
        return SolverDefaults.SPEED_EPSILON_FACTOR * max(1.0, bounds.g_prime * bounds.v)

    def check_domain(self, values, label: str) -> bool:
        """Log a warning when values leave the interval; never raises"""
        lo, hi = self.interval
        values = np.asarray(values)
        if values.size == 0:
            return True
        tol = SolverDefaults.DOMAIN_TOLERANCE
        low, high = float(np.min(values)), float(np.max(values))
        if low < lo - tol or high > hi + tol:
            logger.warning("%s outside [%g, %g] for model '%s': range [%.17g, %.17g]", label, lo, hi, self.name, low, high)
            return False
        return True

    def validate(self, samples: int = 1001) -> None:
        """Sampled check of g >= 0, v >= 0 and v' <= 0 on the interval"""
        lo, hi = self.interval
        rho = np.linspace(lo, hi, samples)
        tol = 1e-14
        if np.any(np.asarray(self.g(rho)) < -tol):
            raise InvalidParameterError(f"model '{self.name}': g is negative on [{lo}, {hi}]")
        if np.any(np.asarray(self.v(rho)) < -tol):
            raise InvalidParameterError(f"model '{self.name}': v is negative on [{lo}, {hi}]")
        if np.any(np.asarray(self.v_prime(rho)) > tol):
            raise InvalidParameterError(f"model '{self.name}': v is increasing on [{lo}, {hi}]")


SourceFunction = Callable[[np.ndarray, np.ndarray], np.ndarray]


@dataclass(frozen=True)
class SystemModel:
    """Weakly coupled system: component k is transported by g_k(rho_k) v_k(omega * rho_k)

    ``source(rho, R)`` receives (N, n) arrays of densities and convolutions and
    returns the signed rate added to every component.
    """

    components: Tuple[ScalarModel, ...]
    source: Optional[SourceFunction] = None
    name: str = "custom"

    def __post_init__(self):
        if len(self.components) == 0:
            raise InvalidParameterError("a system needs at least one component")
        object.__setattr__(self, "components", tuple(self.components))

    @classmethod
    def from_scalar(cls, model: ScalarModel) -> "SystemModel":
        return cls(components=(model,), name=model.name)

    @property
    def n_components(self) -> int:
        return len(self.components)

    def with_intervals(self, intervals: Sequence[Tuple[float, float]]) -> "SystemModel":
        if len(intervals) != self.n_components:
            raise InvalidParameterError(f"expected {self.n_components} intervals, got {len(intervals)}")
        return dataclasses.replace(
            self, components=tuple(m.with_interval(lo, hi) for m, (lo, hi) in zip(self.components, intervals))
        )

    def flux(self, rho: np.ndarray, R: np.ndarray) -> np.ndarray:
        return np.stack([m.flux(rho[k], R[k]) for k, m in enumerate(self.components)])

    def source_rates(self, rho: np.ndarray, R: np.ndarray) -> np.ndarray:
        if self.source is None:
            return np.zeros_like(rho)
        return np.asarray(self.source(rho, R), dtype=float)

    def validate(self) -> None:
        for model in self.components:
            model.validate()


AnyModel = Union[ScalarModel, SystemModel]


def as_system_model(model: AnyModel) -> SystemModel:
    if isinstance(model, SystemModel):
        return model
    if isinstance(model, ScalarModel):
        return SystemModel.from_scalar(model)
    raise InvalidParameterError(f"unsupported model type {type(model).__name__}")


@dataclass(frozen=True)
class State:
    """Cell averages per component at time t, shape (components, cells)"""

    t: float
    values: np.ndarray

    def __post_init__(self):
        values = np.array(self.values, dtype=float, copy=True)
        if values.ndim == 1:
            values = values[np.newaxis, :]
        if values.ndim != 2:
            raise InvalidParameterError(f"state values must be 1D or 2D, got shape {values.shape}")
        if not np.all(np.isfinite(values)):
            bad = np.argwhere(~np.isfinite(values))[0]
            raise NumericalFailureError(
                f"non-finite value at t={self.t:.17g} in component {bad[0] + 1}, cell {bad[1]}"
            )
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "t", float(self.t))

    @property
    def n_components(self) -> int:
        return self.values.shape[0]

    @property
    def n_cells(self) -> int:
        return self.values.shape[1]

    def mass(self, grid: Grid) -> np.ndarray:
        return grid.dx * np.sum(self.values, axis=1)

    def check_components(self, model: AnyModel) -> None:
        expected = as_system_model(model).n_components
        if expected != self.n_components:
            raise InvalidParameterError(f"state has {self.n_components} components, model expects {expected}")


def state_values(state) -> np.ndarray:
    """2D float view of a State or a raw array"""
    if isinstance(state, State):
        return state.values
    return np.atleast_2d(np.asarray(state, dtype=float))


@dataclass(frozen=True)
class PiecewiseConstant:
    """Sum of indicator pieces (a, b, value) on top of a default value"""

    pieces: Tuple[Tuple[float, float, float], ...]
    default: float = 0.0

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        out = np.full(x.shape, float(self.default))
        for a, b, value in self.pieces:
            out = np.where((x >= a) & (x <= b), value, out)
        return out

    def cell_averages(self, grid: Grid) -> np.ndarray:
        left = grid.centers - 0.5 * grid.dx
        right = grid.centers + 0.5 * grid.dx
        total = np.full(grid.n_cells, float(self.default) * grid.dx)
        for a, b, value in self.pieces:
            overlap = np.clip(np.minimum(b, right) - np.maximum(a, left), 0.0, None)
            total += (value - self.default) * overlap
        return total / grid.dx


InitialData = Union[ArrayFunction, PiecewiseConstant, float]


def _project_component(rho0: InitialData, grid: Grid, nodes: np.ndarray, weights: np.ndarray) -> np.ndarray:
    if isinstance(rho0, PiecewiseConstant):
        return rho0.cell_averages(grid)
    if not callable(rho0):
        return np.full(grid.n_cells, float(rho0))
    x = grid.centers[:, np.newaxis] + 0.5 * grid.dx * nodes[np.newaxis, :]
    samples = np.broadcast_to(np.asarray(rho0(x), dtype=float), x.shape)
    return 0.5 * samples @ weights


def project_initial_data(rho0: Union[InitialData, Sequence[InitialData]], grid: Grid, t: float = 0.0) -> State:
    """Cell averages of the initial data, one row per component"""
    components = list(rho0) if isinstance(rho0, (list, tuple)) else [rho0]
    nodes, weights = roots_legendre(SolverDefaults.GAUSS_POINTS)
    return State(t, np.stack([_project_component(c, grid, nodes, weights) for c in components]))


def interval_of(state: State):
    """Per-component [min, max] of the cell averages"""
    return [(float(np.min(row)), float(np.max(row))) for row in state.values]


# Concrete models


def _arrhenius_bounds(interval):
    lo, hi = interval
    g = lambda r: r * (1.0 - r)  # noqa: E731
    g_sup = max(abs(g(lo)), abs(g(hi)), 0.25 if lo <= 0.5 <= hi else 0.0)
    return NormBounds(
        g=g_sup,
        g_prime=max(abs(1.0 - 2.0 * lo), abs(1.0 - 2.0 * hi)),
        v=max(np.exp(-lo), np.exp(-hi)),
        v_prime=max(np.exp(-lo), np.exp(-hi)),
        rho=max(abs(lo), abs(hi)),
    )


def make_arrhenius_model(interval: Tuple[float, float] = (0.0, 1.0)) -> ScalarModel:
    """g(rho) = rho (1 - rho), v(R) = exp(-R)"""
    model = ScalarModel(
        g=lambda r: np.asarray(r) * (1.0 - np.asarray(r)),
        g_prime=lambda r: 1.0 - 2.0 * np.asarray(r),
        v=lambda R: np.exp(-np.asarray(R)),
        v_prime=lambda R: -np.exp(-np.asarray(R)),
        interval=interval,
        g_shape="concave",
        g_monotone_nonneg=False,
        critical_point=0.5,
        closed_form_bounds=_arrhenius_bounds,
        name="arrhenius",
    )
    model.validate()
    return model


def _lane_bounds(interval):
    lo, hi = interval
    rho_sup = max(abs(lo), abs(hi))
    v_sup = max(abs(1.0 - lo**2), abs(1.0 - hi**2), 1.0 if lo <= 0.0 <= hi else 0.0)
    return NormBounds(g=rho_sup, g_prime=1.0, v=v_sup, v_prime=2.0 * rho_sup, rho=rho_sup)


def make_lane_model(interval: Tuple[float, float] = (0.0, 1.0), name: str = "lane") -> ScalarModel:
    """g(rho) = rho, v(R) = 1 - R^2"""
    model = ScalarModel(
        g=lambda r: np.array(r, dtype=float, copy=True),
        g_prime=lambda r: np.ones(np.shape(r)),
        v=lambda R: 1.0 - np.asarray(R) ** 2,
        v_prime=lambda R: -2.0 * np.asarray(R),
        interval=interval,
        g_shape="convex",
        g_monotone_nonneg=True,
        closed_form_bounds=_lane_bounds,
        name=name,
    )
    model.validate()
    return model


def lane_change_rate(rho1, rho2, R1, R2) -> np.ndarray:
    """Net flow from lane 1 to lane 2 driven by the nonlocal speed difference"""
    rho1, rho2 = np.asarray(rho1, dtype=float), np.asarray(rho2, dtype=float)
    v1, v2 = 1.0 - np.asarray(R1, dtype=float) ** 2, 1.0 - np.asarray(R2, dtype=float) ** 2
    gap = v2 - v1
    return gap * np.where(gap >= 0.0, rho1 * (1.0 - rho2), rho2 * (1.0 - rho1))


def lane_exchange_source(rho: np.ndarray, R: np.ndarray) -> np.ndarray:
    S = lane_change_rate(rho[0], rho[1], R[0], R[1])
    return np.stack([-S, S])


def make_multilane_model(
    intervals: Sequence[Tuple[float, float]] = ((0.0, 1.0), (0.0, 1.0)),
) -> SystemModel:
    """Two lanes with nonlocal transport and lane-change exchange"""
    lanes = tuple(make_lane_model(interval, name=f"lane_{k + 1}") for k, interval in enumerate(intervals))
    if len(lanes) != 2:
        raise InvalidParameterError(f"the multilane model has 2 lanes, got {len(lanes)} intervals")
    return SystemModel(components=lanes, source=lane_exchange_source, name="multilane")


def _transport_bounds(interval):
    lo, hi = interval
    rho_sup = max(abs(lo), abs(hi))
    return NormBounds(g=rho_sup, g_prime=1.0, v=1.0, v_prime=0.0, rho=rho_sup)


def make_transport_model(interval: Tuple[float, float] = (0.0, 1.0)) -> ScalarModel:
    """Linear transport g(rho) = rho with unit speed"""
    model = ScalarModel(
        g=lambda r: np.array(r, dtype=float, copy=True),
        g_prime=lambda r: np.ones(np.shape(r)),
        v=lambda R: np.ones(np.shape(R)),
        v_prime=lambda R: np.zeros(np.shape(R)),
        interval=interval,
        g_shape="convex",
        g_monotone_nonneg=True,
        closed_form_bounds=_transport_bounds,
        name="transport",
    )
    model.validate()
    return model

