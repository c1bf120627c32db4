#!/usr/bin/env python3
"""
nonlocal-cu Examples - Using the solver modules without the CLI
"""

import os
import sys

import numpy as np

# Add src directory to Python path
sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

from convergence import convergence_study, run_scenario  # noqa: E402
from flux import cu_flux, godunov_flux  # noqa: E402
from models import (  # noqa: E402
    Grid,
    PiecewiseConstant,
    make_arrhenius_model,
    make_constant_kernel,
    make_quadratic_kernel,
    project_initial_data,
)
from nonlocal_terms import compute_kernel_weights, convolve_interfaces  # noqa: E402
from scenarios import custom_scenario, get_scenario  # noqa: E402
from timeint import Problem, SchemeConfig, run  # noqa: E402


def example_kernel_weights():
    """Example 1: Cell-integrated kernel weights"""
    print("🎯 Example 1: Kernel Weights")
    print("=" * 50)

    for kernel in (make_quadratic_kernel(0.2), make_constant_kernel(0.2)):
        weights = compute_kernel_weights(kernel, 0.1)
        print(f"{kernel.name:<10} gamma = {np.round(weights.gamma, 6)} (sum {weights.gamma.sum():.15f})")
    return weights


def example_interface_convolution():
    """Example 2: R at every interface of a small grid"""
    print("\n🎯 Example 2: Interface Convolutions")
    print("=" * 50)

    grid = Grid.from_level(0)
    state = project_initial_data(lambda x: 0.5 + 0.4 * np.sin(np.pi * x), grid)
    weights = compute_kernel_weights(make_quadratic_kernel(0.2), grid.dx)
    R = convolve_interfaces(state, weights, grid=grid)[0]
    print(f"R ranges over [{R.min():.6f}, {R.max():.6f}] on {grid.n_cells} cells")
    return R


def example_numerical_fluxes():
    """Example 3: Central-upwind against Godunov on a few interface states"""
    print("\n🎯 Example 3: Numerical Fluxes")
    print("=" * 50)

    model = make_arrhenius_model()
    print(f"{'a':>5} {'b':>5} {'R':>5} {'CU':>12} {'Godunov':>12}")
    for a, b, R in ((0.2, 0.8, 0.5), (0.8, 0.2, 0.5), (0.4, 0.45, 0.1), (0.9, 0.7, 0.3)):
        print(f"{a:5.2f} {b:5.2f} {R:5.2f} {cu_flux(a, b, R, model):12.8f} {godunov_flux(a, b, R, model):12.8f}")


def example_direct_run():
    """Example 4: Build a problem by hand and run the KT scheme"""
    print("\n🎯 Example 4: Direct Run")
    print("=" * 50)

    grid = Grid.from_level(1)
    initial = project_initial_data(PiecewiseConstant(pieces=((-0.5, 0.0, 0.9),), default=0.1), grid)
    problem = Problem(
        grid=grid,
        kernel=make_quadratic_kernel(0.2),
        model=make_arrhenius_model((0.1, 0.9)),
        initial=initial,
    )
    result = run(problem, SchemeConfig("kt", t_final=0.5), snapshot_times=[0.25])
    for state in result.snapshots:
        print(f"t={state.t:.2f}: min {state.values.min():.4f}, max {state.values.max():.4f}")
    print(f"✅ {result.steps} steps, mass drift {result.mass_drift().max():.1e}")
    return result


def example_custom_scenario():
    """Example 5: A user-defined scenario through the scenario runner"""
    print("\n🎯 Example 5: Custom Scenario")
    print("=" * 50)

    scenario = custom_scenario(
        "arrhenius_bump",
        make_arrhenius_model,
        [lambda x: 0.3 + 0.5 * np.exp(-20.0 * x**2)],
        t_final=0.2,
    )
    _, result = run_scenario(scenario, "cu2", level=1)
    print(f"✅ {scenario.name}: {result.steps} steps in {result.wall_time:.2f}s")
    return result


def example_small_convergence_study():
    """Example 6: A short grid-refinement study"""
    print("\n🎯 Example 6: Convergence Study")
    print("=" * 50)

    report = convergence_study(
        get_scenario("arrhenius_smooth"), ["cu1", "cu2"], n_levels=3, reference_level=5, t_final=0.05
    )
    for scheme in report.schemes():
        rates = ", ".join("-" if r is None else f"{r:.2f}" for r in report.rates_for(scheme))
        print(f"{scheme}: rates {rates}")
    return report


def run_all_examples():
    """Run all examples in sequence"""
    print("🚀 nonlocal-cu Examples")
    print("=" * 60)

    examples = [
        example_kernel_weights,
        example_interface_convolution,
        example_numerical_fluxes,
        example_direct_run,
        example_custom_scenario,
        example_small_convergence_study,
    ]

    results = {}
    for example_func in examples:
        try:
            results[example_func.__name__] = example_func()
        except Exception as e:
            print(f"❌ Error in {example_func.__name__}: {e}")
            results[example_func.__name__] = e

    failed = [name for name, value in results.items() if isinstance(value, Exception)]
    print("\n✅ All examples completed!")
    print(f"📊 {len(examples) - len(failed)}/{len(examples)} examples ran successfully")
    return results


if __name__ == "__main__":
    run_all_examples()
