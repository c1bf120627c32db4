#!/usr/bin/env python3
"""
Test Suite for the fully-discrete Kurganov-Tadmor step
"""

import dataclasses
import math
import os
import sys
import unittest
from unittest.mock import patch

import numpy as np

# Add src directory to Python path
sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

import kt  # noqa: E402
from errors import CflViolationError, InvalidParameterError  # noqa: E402
from flux import SpeedPair  # noqa: E402
from models import (  # noqa: E402
    Grid,
    State,
    make_arrhenius_model,
    make_multilane_model,
    make_quadratic_kernel,
    make_transport_model,
)
from models import lane_exchange_source  # noqa: E402
from nonlocal_terms import compute_kernel_weights  # noqa: E402
from scenarios import get_scenario  # noqa: E402


def _mm(a, b):
    if a * b <= 0.0:
        return 0.0
    return a if abs(a) <= abs(b) else b


def _reference_arrhenius_step(u, dx, dt, eta):
    """One KT step for g = rho (1 - rho), v = exp(-R), written out cell by cell"""
    n = len(u)
    N = int(round(eta / dx))

    def omega(x):
        return 3.0 * (eta**2 - x**2) / (2.0 * eta**3) if 0.0 <= x <= eta else 0.0

    def W(x):
        return (3.0 * eta**2 * x - x**3) / (2.0 * eta**3)

    def g(r):
        return r * (1.0 - r)

    def dg(r):
        return 1.0 - 2.0 * r

    def flux(r, R):
        return g(r) * math.exp(-R)

    def at(seq, j):
        return seq[j % n]

    s = [_mm((at(u, j) - at(u, j - 1)) / dx, (at(u, j + 1) - at(u, j)) / dx) for j in range(n)]
    a = [u[j] + 0.5 * dx * s[j] for j in range(n)]
    b = [at(u, j + 1) - 0.5 * dx * at(s, j + 1) for j in range(n)]
    gamma = [W((k + 1) * dx) - W(k * dx) for k in range(N)]
    R = [sum(gamma[k] * at(u, j + k + 1) for k in range(N)) for j in range(n)]
    cp = [max(dg(a[j]), dg(b[j]), 0.0) * math.exp(-R[j]) for j in range(n)]
    cm = [min(dg(a[j]), dg(b[j]), 0.0) * math.exp(-R[j]) for j in range(n)]

    rho_l = [u[j] + s[j] * (0.5 * dx + dt * cm[j]) for j in range(n)]
    rho_r = [at(u, j + 1) - at(s, j + 1) * (0.5 * dx - dt * cp[j]) for j in range(n)]

    R_l, R_r = [], []
    for j in range(n):
        x = cm[j] * dt
        value = -x * omega(-0.5 * x) * (u[j] + 0.5 * (dx + x) * s[j])
        for ell in range(N - 1):
            value += dx * omega((ell + 0.5) * dx - x) * at(u, j + ell + 1)
        value += (dx + x) * omega(0.5 * ((2 * N - 1) * dx - x)) * (at(u, j + N) + 0.5 * x * at(s, j + N))
        R_l.append(value)

        y = cp[j] * dt
        value = (dx - y) * omega(0.5 * (dx - y)) * (at(u, j + 1) + 0.5 * y * at(s, j + 1))
        for ell in range(N - 1):
            value += dx * omega((ell + 1.5) * dx - y) * at(u, j + ell + 2)
        value += y * omega(0.5 * (2 * N * dx - y)) * (at(u, j + N + 1) - 0.5 * (dx - y) * at(s, j + N + 1))
        R_r.append(value)

    F_l = [flux(rho_l[j], R_l[j]) for j in range(n)]
    F_r = [flux(rho_r[j], R_r[j]) for j in range(n)]
    fx_l, fx_r = [], []
    for j in range(n):
        back = (F_l[j] - at(F_l, j - 1)) / (dx + (cm[j] - at(cm, j - 1)) * dt)
        fwd = (at(F_l, j + 1) - F_l[j]) / (dx + (at(cm, j + 1) - cm[j]) * dt)
        fx_l.append(_mm(back, fwd))
        back = (F_r[j] - at(F_r, j - 1)) / (dx - at(cp, j - 1) * dt + cp[j] * dt)
        fwd = (at(F_r, j + 1) - F_r[j]) / (dx - cp[j] * dt + at(cp, j + 1) * dt)
        fx_r.append(_mm(back, fwd))

    dR_l, dR_r = [], []
    for j in range(n):
        x = cm[j] * dt
        value = x * omega(-0.5 * x) * fx_l[j]
        for ell in range(N - 1):
            value -= dx * omega((ell + 0.5) * dx - x) * at(fx_l, j + ell + 1)
        value -= (dx + x) * omega(0.5 * ((2 * N - 1) * dx - x)) * at(fx_l, j + N)
        dR_l.append(value)

        y = cp[j] * dt
        value = -(dx - y) * omega(0.5 * (dx - y)) * fx_r[j]
        for ell in range(N - 1):
            value -= dx * omega((ell + 1.5) * dx - y) * at(fx_r, j + ell + 1)
        value -= y * omega(0.5 * (2 * N * dx - y)) * at(fx_r, j + N)
        dR_r.append(value)

    Fh_l = [flux(rho_l[j] - 0.5 * dt * fx_l[j], R_l[j] + 0.5 * dt * dR_l[j]) for j in range(n)]
    Fh_r = [flux(rho_r[j] - 0.5 * dt * fx_r[j], R_r[j] + 0.5 * dt * dR_r[j]) for j in range(n)]

    w_mid = []
    for j in range(n):
        numerator = (
            rho_r[j] * cp[j]
            - 0.5 * at(s, j + 1) * cp[j] ** 2 * dt
            - rho_l[j] * cm[j]
            + 0.5 * s[j] * cm[j] ** 2 * dt
            - (Fh_r[j] - Fh_l[j])
        )
        w_mid.append(numerator / (cp[j] - cm[j]))

    w = []
    for j in range(n):
        length = dx - dt * (at(cp, j - 1) - cm[j])
        w.append(u[j] + 0.5 * dt * (at(cp, j - 1) + cm[j]) * s[j] - dt / length * (Fh_l[j] - at(Fh_r, j - 1)))

    sigma = []
    for j in range(n):
        half = 0.5 * (cp[j] - cm[j]) * dt
        value = _mm((w_mid[j] - (rho_l[j] - dt * fx_l[j])) / half, ((rho_r[j] - dt * fx_r[j]) - w_mid[j]) / half)
        lo = min(w[j], w_mid[j], at(w, j + 1))
        hi = max(w[j], w_mid[j], at(w, j + 1))
        for end in (w_mid[j] - value * half, w_mid[j] + value * half):
            if end < lo or end > hi:
                value = 0.0
        sigma.append(value)

    return [
        w[j]
        + dt / dx * (at(cp, j - 1) * (at(w_mid, j - 1) - w[j]) - cm[j] * (w_mid[j] - w[j]))
        + dt**2 / (2.0 * dx) * (sigma[j] * cp[j] * cm[j] - at(sigma, j - 1) * at(cm, j - 1) * at(cp, j - 1))
        for j in range(n)
    ]


class TestKtStep(unittest.TestCase):
    """Test cases for one fully-discrete step"""

    def setUp(self):
        self.grid = Grid.from_level(0)
        self.kernel = make_quadratic_kernel(0.2)
        self.weights = compute_kernel_weights(self.kernel, self.grid.dx)
        self.model = make_arrhenius_model()

    def _step(self, state, model=None, dt=None, **kwargs):
        model = model or self.model
        if dt is None:
            dt = kt.kt_cfl_dt(state, self.grid, model, self.weights)
        return kt.kt_step(state, self.grid, self.kernel, self.weights, model, dt, **kwargs)

    def test_cell_by_cell_reference(self):
        """Test an 8-cell step against the cell-by-cell evaluation"""
        grid = Grid(-1.0, 1.0, 8)
        kernel = make_quadratic_kernel(0.5)
        weights = compute_kernel_weights(kernel, grid.dx)
        u = [0.2, 0.35, 0.6, 0.9, 0.75, 0.5, 0.3, 0.25]
        result = kt.kt_step(State(0.0, u), grid, kernel, weights, self.model, 0.05)
        self.assertAlmostEqual(result.t, 0.05, places=15)
        np.testing.assert_allclose(result.values[0], _reference_arrhenius_step(u, 0.25, 0.05, 0.5), rtol=0, atol=1e-13)

    def test_constant_state_preserved(self):
        """Test that constant states stay constant"""
        state = State(0.0, np.full(self.grid.n_cells, 0.3))
        np.testing.assert_allclose(self._step(state).values, 0.3, rtol=0, atol=1e-13)

    def test_conservation(self):
        """Test mass conservation for a random state"""
        state = State(0.0, np.random.default_rng(8).uniform(0, 1, self.grid.n_cells))
        result = self._step(state)
        self.assertLessEqual(abs(float(result.mass(self.grid)[0] - state.mass(self.grid)[0])), 1e-12)

    def test_multilane_total_mass(self):
        """Test that the lane exchange moves mass without creating it"""
        model = make_multilane_model()
        rng = np.random.default_rng(9)
        state = State(0.0, rng.uniform(0, 1, (2, self.grid.n_cells)))
        result = self._step(state, model=model)
        self.assertLessEqual(abs(float(np.sum(result.mass(self.grid)) - np.sum(state.mass(self.grid)))), 1e-12)

    def test_multilane_constant_lanes(self):
        """Test that equal constant lanes stay constant"""
        state = State(0.0, np.full((2, self.grid.n_cells), 0.6))
        np.testing.assert_allclose(self._step(state, model=make_multilane_model()).values, 0.6, rtol=0, atol=1e-13)

    def _lane_indicator_step(self, model_transform=None):
        scenario = get_scenario("multilane_discontinuous")
        problem = scenario.build_problem(n_cells=scenario.figure_cells)
        model = problem.model if model_transform is None else model_transform(problem.model)
        dt = kt.kt_cfl_dt(problem.initial, problem.grid, model, problem.weights)
        workspace = kt.build_kt_workspace(problem.initial, problem.grid, problem.kernel, problem.weights, model, dt)
        result = kt.kt_step(problem.initial, problem.grid, problem.kernel, problem.weights, model, dt)
        return problem, workspace, result

    def test_degenerate_interfaces_conserve_lane_mass(self):
        """Test that every lane keeps its mass across interfaces where v(R) = 0"""
        problem, workspace, result = self._lane_indicator_step(lambda m: dataclasses.replace(m, source=None))
        self.assertTrue(np.all(np.any(workspace.degenerate, axis=-1)))
        np.testing.assert_allclose(result.mass(problem.grid), problem.initial.mass(problem.grid), rtol=0, atol=1e-13)

    def test_degenerate_interfaces_conserve_total_mass(self):
        """Test that the two lanes together keep their mass with the exchange switched on"""
        problem, workspace, result = self._lane_indicator_step()
        self.assertTrue(np.any(workspace.degenerate))
        drift = float(np.sum(result.mass(problem.grid)) - np.sum(problem.initial.mass(problem.grid)))
        self.assertLessEqual(abs(drift), 1e-13)

    def test_nonlocal_evaluation_counts(self):
        """Test one interface, two shifted and two time-derivative convolutions per step"""
        state = State(0.0, np.sin(np.pi * self.grid.centers) ** 2)
        with patch("kt.convolve_interfaces", wraps=kt.convolve_interfaces) as interfaces, patch(
            "kt.convolve_shifted", wraps=kt.convolve_shifted
        ) as shifted, patch("kt.convolve_time_derivative", wraps=kt.convolve_time_derivative) as derivative:
            kt.kt_step(state, self.grid, self.kernel, self.weights, self.model, 0.01)
        self.assertEqual(interfaces.call_count, 1)
        self.assertEqual(shifted.call_count, 2)
        self.assertEqual(derivative.call_count, 2)
        self.assertEqual({c.args[5] for c in shifted.call_args_list}, {kt.LEFT, kt.RIGHT})

    def test_non_integer_ratio(self):
        """Test that eta/dx must be an integer"""
        grid = Grid(-1.0, 1.0, 35)
        weights = compute_kernel_weights(self.kernel, grid.dx)
        with self.assertRaises(InvalidParameterError):
            kt.kt_step(State(0.0, np.full(35, 0.3)), grid, self.kernel, weights, self.model, 0.01)

    def test_nonpositive_dt(self):
        """Test that dt must be positive"""
        state = State(0.0, np.full(self.grid.n_cells, 0.3))
        with self.assertRaises(InvalidParameterError):
            self._step(state, dt=0.0)

    def test_oversized_dt(self):
        """Test that fans wider than half a cell are rejected"""
        state = State(0.0, np.full(self.grid.n_cells, 0.1))
        with self.assertRaises(CflViolationError):
            self._step(state, dt=self.grid.dx)

    def test_strict_formulas_run(self):
        """Test that the literal formula variant still produces a finite state"""
        state = State(0.0, 0.5 + 0.4 * np.sin(np.pi * self.grid.centers))
        result = self._step(state, strict_paper_formulas=True)
        self.assertTrue(np.all(np.isfinite(result.values)))

    def test_time_advances(self):
        """Test that the step carries the time forward"""
        state = State(0.25, np.full(self.grid.n_cells, 0.3))
        self.assertAlmostEqual(self._step(state, dt=0.01).t, 0.26, places=15)


class TestKtPieces(unittest.TestCase):
    """Test cases for the building blocks of a step"""

    def setUp(self):
        self.grid = Grid(0.0, 1.0, 10)
        self.speeds = SpeedPair(c_plus=np.full((1, 10), 0.5), c_minus=np.full((1, 10), -0.5))

    def test_shifted_values(self):
        """Test rho_l = 0.4 + 1 (0.05 - 0.02) and rho_r = 0.4 - 1 (0.05 - 0.02)"""
        values = np.full((1, 10), 0.4)
        slopes = np.zeros((1, 10))
        slopes[0, 3] = 1.0
        rho_left, rho_right = kt.kt_shifted_values(values, slopes, self.speeds, self.grid, 0.04)
        self.assertAlmostEqual(rho_left[0, 3], 0.43, places=15)
        self.assertAlmostEqual(rho_right[0, 2], 0.37, places=15)
        self.assertEqual(rho_left[0, 0], 0.4)

    def test_predictors(self):
        """Test half-step Taylor predictors"""
        rho_l, rho_r, R_l, R_r = kt.kt_predictors(0.5, 0.5, 0.3, 0.3, 0.2, -0.2, 0.4, -0.4, 0.1)
        self.assertAlmostEqual(rho_l, 0.49, places=15)
        self.assertAlmostEqual(rho_r, 0.51, places=15)
        self.assertAlmostEqual(R_l, 0.32, places=15)
        self.assertAlmostEqual(R_r, 0.28, places=15)

    def test_projection_slopes_on_flat_data(self):
        """Test zero slopes when every intermediate value agrees"""
        flat = np.full((1, 10), 0.3)
        zeros = np.zeros((1, 10))
        sigma = kt.kt_projection_slopes(flat, flat, flat, flat, zeros, zeros, self.speeds, 0.01)
        np.testing.assert_array_equal(sigma, 0.0)

    def test_projection_slopes_zeroed_on_overshoot(self):
        """Test that a slope with an end outside the neighbouring averages is set to zero"""
        speeds = SpeedPair(c_plus=np.full((1, 2), 0.5), c_minus=np.full((1, 2), -0.5))
        zeros = np.zeros((1, 2))
        w_mid = np.full((1, 2), 0.5)
        rising = kt.kt_projection_slopes(
            w_mid, np.array([[0.4, 0.55]]), np.full((1, 2), 0.4), np.full((1, 2), 0.6), zeros, zeros, speeds, 0.1
        )
        np.testing.assert_allclose(rising, 0.0, rtol=0, atol=1e-12)
        falling = kt.kt_projection_slopes(
            w_mid, np.array([[0.6, 0.45]]), np.full((1, 2), 0.6), np.full((1, 2), 0.4), zeros, zeros, speeds, 0.1
        )
        np.testing.assert_allclose(falling, 0.0, rtol=0, atol=1e-12)

    def test_projection_slopes_inside_range_untouched(self):
        """Test that a slope whose ends stay in range is kept"""
        speeds = SpeedPair(c_plus=np.full((1, 2), 0.5), c_minus=np.full((1, 2), -0.5))
        zeros = np.zeros((1, 2))
        sigma = kt.kt_projection_slopes(
            np.full((1, 2), 0.5),
            np.array([[0.3, 0.7]]),
            np.full((1, 2), 0.45),
            np.full((1, 2), 0.55),
            zeros,
            zeros,
            speeds,
            0.1,
        )
        np.testing.assert_allclose(sigma, 1.0, rtol=0, atol=1e-12)

    def test_interface_half_states(self):
        """Test interpolation across a fan to x_{j+1/2}, and the average on degenerate fans"""
        grid = Grid.from_level(0)
        weights = compute_kernel_weights(make_quadratic_kernel(0.2), grid.dx)
        model = make_multilane_model()
        values = np.stack([np.full(grid.n_cells, 0.6), np.full(grid.n_cells, 0.3)])
        workspace = kt.build_kt_workspace(
            State(0.0, values), grid, make_quadratic_kernel(0.2), weights, model, 0.01
        )
        shape = values.shape
        degenerate = np.zeros(shape, dtype=bool)
        degenerate[:, 0] = True
        workspace = dataclasses.replace(
            workspace,
            speeds=SpeedPair(c_plus=np.full(shape, 0.3), c_minus=np.full(shape, -0.1)),
            rho_half_left=np.full(shape, 0.2),
            rho_half_right=np.full(shape, 0.6),
            R_half_left=np.full(shape, 0.5),
            R_half_right=np.full(shape, 0.1),
            degenerate=degenerate,
        )
        rho, R = kt.interface_half_states(workspace)
        self.assertAlmostEqual(rho[0, 3], 0.3, places=14)
        self.assertAlmostEqual(R[1, 3], 0.4, places=14)
        self.assertAlmostEqual(rho[0, 0], 0.4, places=14)
        self.assertAlmostEqual(R[1, 0], 0.3, places=14)

        rates = lane_exchange_source(rho, R)
        source = kt.cell_source(workspace, model)
        np.testing.assert_allclose(source[:, 1], 0.5 * (rates[:, 0] + rates[:, 1]), rtol=0, atol=1e-15)
        np.testing.assert_allclose(np.sum(source, axis=0), 0.0, rtol=0, atol=1e-15)


class TestKtTimeStep(unittest.TestCase):
    """Test cases for the KT time step restriction"""

    def setUp(self):
        self.grid = Grid.from_level(0)
        self.weights = compute_kernel_weights(make_quadratic_kernel(0.2), self.grid.dx)

    def test_transport(self):
        """Test 0.9 dx / 2 for unit speed"""
        dt = kt.kt_cfl_dt(np.full(self.grid.n_cells, 0.4), self.grid, make_transport_model(), self.weights)
        self.assertAlmostEqual(dt, 0.9 * self.grid.dx / 2.0, places=15)

    def test_vanishing_speeds(self):
        """Test safety dx when every speed is zero"""
        dt = kt.kt_cfl_dt(np.full(self.grid.n_cells, 0.5), self.grid, make_arrhenius_model(), self.weights)
        self.assertAlmostEqual(dt, 0.9 * self.grid.dx, places=15)

    def test_custom_safety(self):
        """Test the safety factor range"""
        values = np.full(self.grid.n_cells, 0.4)
        dt = kt.kt_cfl_dt(values, self.grid, make_transport_model(), self.weights, safety=0.5)
        self.assertAlmostEqual(dt, 0.25 * self.grid.dx, places=15)
        with self.assertRaises(InvalidParameterError):
            kt.kt_cfl_dt(values, self.grid, make_transport_model(), self.weights, safety=1.5)


if __name__ == "__main__":
    unittest.main()
