#!/usr/bin/env python3
"""
Test Suite for CFL bounds, steppers and the run loop
"""

import math
import os
import sys
import unittest
from unittest.mock import patch

import numpy as np

# Add src directory to Python path
sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

from errors import InvalidParameterError, NumericalFailureError  # noqa: E402
from models import (  # noqa: E402
    Grid,
    ScalarModel,
    State,
    make_arrhenius_model,
    make_quadratic_kernel,
    make_transport_model,
    project_initial_data,
)
from nonlocal_terms import compute_kernel_weights  # noqa: E402
from timeint import (  # noqa: E402
    Problem,
    RunResult,
    SchemeConfig,
    cfl_dt_first_order,
    cfl_dt_second_order,
    euler_step,
    run,
    ssp_rk2_step,
)


def _smooth(x):
    return 0.5 + 0.4 * np.sin(np.pi * x)


class TestCflBounds(unittest.TestCase):
    """Test cases for the semi-discrete time step restrictions"""

    def setUp(self):
        self.weights = compute_kernel_weights(make_quadratic_kernel(0.2), 0.05)

    def test_transport(self):
        """Test dx / 4 and dx / 2 for unit transport"""
        model = make_transport_model()
        self.assertAlmostEqual(cfl_dt_first_order(model, self.weights), 0.05 / 4.0, places=15)
        self.assertAlmostEqual(cfl_dt_second_order(model, self.weights), 0.05 / 2.0, places=15)

    def test_arrhenius_on_data_range(self):
        """Test the Arrhenius bounds on [0.2, 1] with gamma_0 = 0.3671875"""
        model = make_arrhenius_model((0.2, 1.0))
        self.assertAlmostEqual(self.weights.gamma0, 0.3671875, places=15)
        expected_first = 0.05 / (4.826171875 * math.exp(-0.2))
        expected_second = 0.05 / (2.18359375 * math.exp(-0.2))
        self.assertAlmostEqual(cfl_dt_first_order(model, self.weights), expected_first, places=14)
        self.assertAlmostEqual(cfl_dt_second_order(model, self.weights), expected_second, places=14)

    def test_safety_factor(self):
        """Test that the safety factor scales the step"""
        model = make_transport_model()
        self.assertAlmostEqual(cfl_dt_second_order(model, self.weights, 0.5), 0.05 / 4.0, places=15)

    def test_degenerate_bound(self):
        """Test the fallback step when every norm vanishes"""
        model = ScalarModel(
            g=lambda r: np.zeros(np.shape(r)),
            g_prime=lambda r: np.zeros(np.shape(r)),
            v=lambda R: np.ones(np.shape(R)),
            v_prime=lambda R: np.zeros(np.shape(R)),
        )
        with self.assertLogs("timeint", level="WARNING"):
            dt = cfl_dt_first_order(model, self.weights)
        self.assertEqual(dt, 0.05)


class TestSteppers(unittest.TestCase):
    """Test cases for explicit Euler and SSP-RK2"""

    def test_euler_linear(self):
        """Test u (1 + lambda dt)"""
        result = euler_step(State(0.0, [1.0, 2.0]), lambda u: -2.0 * u, 0.1)
        np.testing.assert_allclose(result.values[0], [0.8, 1.6], rtol=1e-15)
        self.assertAlmostEqual(result.t, 0.1, places=15)

    def test_ssp_rk2_linear(self):
        """Test u (1 + lambda dt + (lambda dt)^2 / 2)"""
        lam, dt = -2.0, 0.1
        result = ssp_rk2_step(State(0.0, [1.0]), lambda u: lam * u, dt)
        self.assertAlmostEqual(result.values[0, 0], 1.0 + lam * dt + 0.5 * (lam * dt) ** 2, places=15)


class TestSchemeConfig(unittest.TestCase):
    """Test cases for scheme parameter validation"""

    def test_default_safety(self):
        """Test per-scheme default safety factors"""
        self.assertEqual(SchemeConfig("cu1").cfl_safety, 1.0)
        self.assertEqual(SchemeConfig("cu2").cfl_safety, 1.0)
        self.assertEqual(SchemeConfig("kt").cfl_safety, 0.9)

    def test_orders_and_families(self):
        """Test order and flux family per scheme"""
        self.assertEqual((SchemeConfig("cu1").order, SchemeConfig("cu1").flux_family), (1, "cu"))
        self.assertEqual((SchemeConfig("godunov1").order, SchemeConfig("godunov1").flux_family), (1, "godunov"))
        self.assertEqual(SchemeConfig("cu2").order, 2)

    def test_invalid_parameters(self):
        """Test rejected scheme names, safety factors, theta and t_final"""
        for kwargs in (
            {"scheme": "weno5"},
            {"scheme": "cu2", "cfl_safety": 1.5},
            {"scheme": "cu2", "cfl_safety": 0.0},
            {"scheme": "cu2", "theta": 2.5},
            {"scheme": "cu2", "t_final": -1.0},
        ):
            with self.subTest(**kwargs):
                with self.assertRaises(InvalidParameterError):
                    SchemeConfig(**kwargs)


class TestRun(unittest.TestCase):
    """Test cases for the run loop"""

    def setUp(self):
        self.grid = Grid.from_level(0)
        self.initial = project_initial_data(_smooth, self.grid)
        self.problem = Problem(
            grid=self.grid,
            kernel=make_quadratic_kernel(0.2),
            model=make_arrhenius_model((0.1, 0.9)),
            initial=self.initial,
        )

    def test_exact_landing(self):
        """Test that snapshots and the final state land on the requested times"""
        result = run(self.problem, SchemeConfig("cu2", t_final=0.1), snapshot_times=[0.05])
        self.assertEqual([s.t for s in result.snapshots], [0.05, 0.1])
        self.assertIn(0.05, result.times)
        self.assertEqual(result.final.t, 0.1)
        self.assertEqual(len(result.mass_history), result.steps + 1)

    def test_range_history(self):
        """Test one minimum and maximum per component after every step"""
        result = run(self.problem, SchemeConfig("cu1", t_final=0.05))
        ranges = result.range_array()
        self.assertEqual(ranges.shape, (result.steps + 1, 1, 2))
        np.testing.assert_array_equal(ranges[0, 0], [self.initial.values.min(), self.initial.values.max()])
        np.testing.assert_array_equal(ranges[-1, 0], [result.final.values.min(), result.final.values.max()])

    def test_zero_final_time(self):
        """Test that t_final = 0 returns the initial state without steps"""
        result = run(self.problem, SchemeConfig("cu1", t_final=0.0))
        self.assertEqual(result.steps, 0)
        self.assertEqual(len(result.snapshots), 1)
        np.testing.assert_array_equal(result.final.values, self.initial.values)

    def test_snapshot_outside_range(self):
        """Test that snapshot times beyond t_final are rejected"""
        with self.assertRaises(InvalidParameterError):
            run(self.problem, SchemeConfig("cu1", t_final=0.1), snapshot_times=[0.2])

    def test_mass_conservation(self):
        """Test conservation over a run for every scheme"""
        for scheme in ("cu1", "godunov1", "cu2", "kt"):
            with self.subTest(scheme=scheme):
                result = run(self.problem, SchemeConfig(scheme, t_final=0.05))
                self.assertLessEqual(float(np.max(result.mass_drift())), 1e-12)

    def test_time_step_history(self):
        """Test that constant steps are used by the semi-discrete schemes"""
        result = run(self.problem, SchemeConfig("cu1", t_final=0.05))
        fixed = cfl_dt_first_order(self.problem.model, self.problem.weights)
        self.assertTrue(all(dt <= fixed for dt in result.dt_history))
        self.assertEqual(result.dt_history[0], fixed)
        self.assertAlmostEqual(sum(result.dt_history), 0.05, places=14)

    def test_failure_reports_step(self):
        """Test that numerical failures carry the step number"""
        nan_rates = np.full((1, self.grid.n_cells), np.nan)
        with patch("timeint.semidiscrete_rhs", return_value=nan_rates):
            with self.assertRaises(NumericalFailureError) as context:
                run(self.problem, SchemeConfig("cu1", t_final=0.1))
        self.assertIn("step 1", str(context.exception))

    def test_cell_count_mismatch(self):
        """Test that the initial state must fit the grid"""
        with self.assertRaises(InvalidParameterError):
            Problem(
                grid=Grid.from_level(1),
                kernel=make_quadratic_kernel(0.2),
                model=make_arrhenius_model(),
                initial=self.initial,
            )

    def test_empty_result(self):
        """Test the defaults of an empty result"""
        result = RunResult()
        self.assertEqual(result.steps, 0)
        self.assertEqual(result.wall_time, 0.0)


if __name__ == "__main__":
    unittest.main()
