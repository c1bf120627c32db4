#!/usr/bin/env python3
"""
Benchmark Suite for nonlocal-cu - Wall time and mass drift per scheme
"""

import json
import os
import statistics
import sys
from datetime import datetime

import click
from tabulate import tabulate

# Add src directory to Python path
sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

from convergence import run_scenario  # noqa: E402
from scenarios import get_scenario, list_scenarios  # noqa: E402
from timeint import SCHEMES  # noqa: E402


def benchmark_scheme(scenario_name, scheme, level=2, iterations=3, t_final=None):
    """Time one scheme on one scenario over several identical runs"""
    scenario = get_scenario(scenario_name)
    print(f"🚀 Benchmarking {scheme} on {scenario_name} (level {level})")

    times, steps, drifts = [], [], []
    for i in range(iterations):
        print(f"Iteration {i + 1}/{iterations}... ", end="", flush=True)
        _, result = run_scenario(scenario, scheme, level=level, t_final=t_final)
        times.append(result.wall_time)
        steps.append(result.steps)
        drifts.append(float(result.mass_drift().max()))
        print(f"✅ {result.wall_time:.2f}s")

    return {
        "scenario": scenario_name,
        "scheme": scheme,
        "level": level,
        "iterations": iterations,
        "steps": steps[-1],
        "avg_time": statistics.mean(times),
        "min_time": min(times),
        "max_time": max(times),
        "std_time": statistics.stdev(times) if len(times) > 1 else 0.0,
        "max_mass_drift": max(drifts),
    }


def comprehensive_benchmark(scenario_name, level, iterations, t_final=None):
    """Benchmark every scheme on one scenario"""
    print("🚀 nonlocal-cu Benchmark Suite")
    print("=" * 60)
    print(f"Started at: {datetime.now().strftime('%Y-%m-%d %H:%M:%S')}")

    results = [benchmark_scheme(scenario_name, scheme, level, iterations, t_final) for scheme in SCHEMES]

    table = [
        [
            r["scheme"],
            r["steps"],
            f"{r['avg_time']:.3f}",
            f"{r['min_time']:.3f} / {r['max_time']:.3f}",
            f"{r['std_time']:.3f}",
            f"{r['max_mass_drift']:.1e}",
        ]
        for r in results
    ]
    print(f"\n📊 {scenario_name} at level {level}:")
    print(tabulate(table, headers=["scheme", "steps", "mean [s]", "min / max [s]", "stdev [s]", "mass drift"], tablefmt="grid"))

    fastest = min(results, key=lambda r: r["avg_time"])
    print(f"\n🏆 Fastest: {fastest['scheme']} ({fastest['avg_time']:.3f}s)")
    return {"results": results, "timestamp": datetime.now().isoformat()}


@click.command()
@click.option("--scenario", "-s", type=click.Choice(list_scenarios()), default="arrhenius_smooth")
@click.option("--level", type=int, default=2, help="Grid level (default: 2)")
@click.option("--iterations", type=int, default=3, help="Runs per scheme (default: 3)")
@click.option("--t-final", "t_final", type=float, help="Override the scenario's final time")
def main(scenario, level, iterations, t_final):
    results = comprehensive_benchmark(scenario, level, iterations, t_final)
    filename = f"benchmark_results_{datetime.now().strftime('%Y%m%d_%H%M%S')}.json"
    with open(filename, "w") as f:
        json.dump(results, f, indent=2, default=str)
    print(f"\n💾 Benchmark results saved to: {filename}")


if __name__ == "__main__":
    main()
