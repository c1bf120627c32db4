#!/usr/bin/env python3
"""
Scenario Definitions for the nonlocal solver
Built-in test problems on [-1, 1] with periodic boundaries and the quadratic kernel
"""

from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np

from errors import SolverDefaults
from models import (
    AnyModel,
    Grid,
    InitialData,
    PiecewiseConstant,
    as_system_model,
    interval_of,
    make_arrhenius_model,
    make_multilane_model,
    make_quadratic_kernel,
    project_initial_data,
)
from timeint import Problem


@dataclass
class Scenario:
    """A model, its initial data and the final time"""

    name: str
    description: str
    model_factory: Callable[[], AnyModel]
    initial_data: Sequence[InitialData]
    t_final: float
    eta: float = SolverDefaults.ETA
    x_min: float = SolverDefaults.X_MIN
    x_max: float = SolverDefaults.X_MAX
    interval_from_data: bool = True  # else keep the model's own invariant intervals
    figure_cells: Optional[int] = None  # resolution of the published profile
    tags: List[str] = None

    def __post_init__(self):
        if self.tags is None:
            self.tags = []

    @property
    def n_components(self) -> int:
        return len(self.initial_data)

    def grid(self, level: Optional[int] = None, n_cells: Optional[int] = None) -> Grid:
        """Level grid dx = (1/20) 2**-level, or an explicit cell count"""
        if n_cells is not None:
            return Grid(self.x_min, self.x_max, n_cells)
        return Grid.from_level(0 if level is None else level, self.x_min, self.x_max)

    def build_problem(self, level: Optional[int] = None, n_cells: Optional[int] = None) -> Problem:
        """Grid, kernel, projected initial data and the model restricted to the data's range"""
        grid = self.grid(level, n_cells)
        kernel = make_quadratic_kernel(self.eta)
        initial = project_initial_data(list(self.initial_data), grid)
        model = as_system_model(self.model_factory())
        if self.interval_from_data:
            model = model.with_intervals(interval_of(initial))
        model.validate()
        if model.n_components == 1 and model.source is None:
            model = model.components[0]
        return Problem(grid=grid, kernel=kernel, model=model, initial=initial)


def _smooth_arrhenius(x):
    return 0.5 + 0.4 * np.sin(np.pi * x)


def _smooth_lane_1(x):
    return 0.5 + 0.5 * np.sin(np.pi * x)


def _smooth_lane_2(x):
    return 0.25 + 0.25 * np.cos(2.0 * np.pi * x)


SCENARIOS: Dict[str, Scenario] = {
    "arrhenius_smooth": Scenario(
        name="arrhenius_smooth",
        description="Arrhenius model, rho0 = 0.5 + 0.4 sin(pi x)",
        model_factory=make_arrhenius_model,
        initial_data=(_smooth_arrhenius,),
        t_final=0.15,
        tags=["scalar", "smooth", "convergence"],
    ),
    "arrhenius_discontinuous": Scenario(
        name="arrhenius_discontinuous",
        description="Arrhenius model, rho0 = 1 on [-0.5, 0], 0.8 on [0.5, 0.75], 0.2 elsewhere",
        model_factory=make_arrhenius_model,
        initial_data=(PiecewiseConstant(pieces=((-0.5, 0.0, 1.0), (0.5, 0.75, 0.8)), default=0.2),),
        t_final=1.0,
        figure_cells=100,
        tags=["scalar", "discontinuous", "profile"],
    ),
    "multilane_smooth": Scenario(
        name="multilane_smooth",
        description="Two lanes, rho0 = 0.5 + 0.5 sin(pi x) and 0.25 + 0.25 cos(2 pi x)",
        model_factory=make_multilane_model,
        initial_data=(_smooth_lane_1, _smooth_lane_2),
        t_final=0.15,
        interval_from_data=False,
        tags=["system", "smooth", "convergence"],
    ),
    "multilane_discontinuous": Scenario(
        name="multilane_discontinuous",
        description="Two lanes, rho0 = indicator of [0, 0.5] and of [0.5, 1]",
        model_factory=make_multilane_model,
        initial_data=(
            PiecewiseConstant(pieces=((0.0, 0.5, 1.0),), default=0.0),
            PiecewiseConstant(pieces=((0.5, 1.0, 1.0),), default=0.0),
        ),
        t_final=0.25,
        interval_from_data=False,
        figure_cells=200,
        tags=["system", "discontinuous", "profile"],
    ),
}


def custom_scenario(
    name: str,
    model_factory: Callable[[], AnyModel],
    initial_data: Sequence[InitialData],
    t_final: float,
    eta: float = SolverDefaults.ETA,
    description: str = "user-defined scenario",
) -> Scenario:
    return Scenario(
        name=name,
        description=description,
        model_factory=model_factory,
        initial_data=tuple(initial_data),
        t_final=t_final,
        eta=eta,
        tags=["custom"],
    )


def get_scenario(name: str) -> Optional[Scenario]:
    """Get scenario by name"""
    return SCENARIOS.get(name.lower())


def list_scenarios() -> List[str]:
    """List all built-in scenario names"""
    return list(SCENARIOS.keys())


def get_scenario_summary() -> Dict[str, Dict[str, object]]:
    """Summary of every built-in scenario"""
    summary = {}
    for name, scenario in SCENARIOS.items():
        summary[name] = {
            "description": scenario.description,
            "components": scenario.n_components,
            "t_final": scenario.t_final,
            "eta": scenario.eta,
            "tags": scenario.tags,
        }
    return summary
