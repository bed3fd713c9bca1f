"""
Tests for the Mathieu eigenproblem and the minimum-uncertainty curve.

Usage:
    pytest tests/test_mathieu.py
"""

import math
import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from orbita.core import uncertainty_report
from orbita.errors import ConvergenceError, ParameterError
from orbita.mathieu import (
    asymptotic_uncertainties,
    ce,
    curve_table,
    hermite_overlap,
    mode_uncertainties,
    mode_to_state,
    q_for_variance,
    solve_mode,
    solve_modes,
    sweep_uncertainty_curve,
    theta_sum,
    von_mises_fit,
)


def test_characteristic_values_at_q_one():
    """Tabulated a_0(1), a_2(1) and b_2(1)."""
    even = solve_modes(1.0, n_max=1)
    assert even[0].char_value == pytest.approx(-0.45513860, abs=1e-8)
    assert even[1].char_value == pytest.approx(4.37130098, abs=1e-7)
    odd = solve_modes(1.0, n_max=1, parity="odd")
    assert odd[0].n == 1
    assert odd[0].char_value == pytest.approx(3.91702477, abs=1e-7)


def test_characteristic_values_ordered_and_continuous():
    """a_0 < b_2 < a_2 < b_4 < a_4 on the whole q range; |da/dq| <= 2 between grid points."""
    q_grid = np.geomspace(0.1, 1e4, 60)
    previous = None
    for q in q_grid:
        a = [m.char_value for m in solve_modes(q, n_max=2)]
        b = [m.char_value for m in solve_modes(q, n_max=2, parity="odd")]
        assert a[0] < b[0] < a[1] < b[1] < a[2]
        current = np.array(a + b)
        if previous is not None:
            # da/dq = 2 <cos 2 eta> by Hellmann-Feynman
            step = 2.0 * (q - previous[0])
            assert np.all(np.abs(current - previous[1]) <= step + 1e-9 * np.abs(current).max())
        previous = (q, current)


@pytest.mark.parametrize("parity,n_max", [("even", 2), ("odd", 2)])
def test_modes_solve_the_mathieu_equation(parity, n_max):
    """ce'' + (a - 2q cos 2 eta) ce = 0 by central differences at q = 1."""
    q, h = 1.0, 1e-3
    eta = np.linspace(0.0, math.pi, 181)
    for mode in solve_modes(q, n_max=n_max, parity=parity):
        center = ce(mode, eta)
        second = (ce(mode, eta + h) - 2.0 * center + ce(mode, eta - h)) / (h * h)
        residual = second + (mode.char_value - 2.0 * q * np.cos(2.0 * eta)) * center
        assert np.max(np.abs(residual)) < 1e-3 * max(1.0, abs(mode.char_value))


def test_q_zero_gives_free_rotor():
    modes = solve_modes(0.0, n_max=2)
    np.testing.assert_allclose([m.char_value for m in modes], [0.0, 4.0, 16.0], atol=1e-12)
    point = mode_uncertainties(modes[0])
    assert point.var_e == pytest.approx(1.0)
    assert point.var_l == pytest.approx(0.0, abs=1e-14)


def test_coefficient_normalization_and_sign():
    mode = solve_mode(5.0, 0)
    A = mode.coeffs
    assert 2 * A[0] ** 2 + np.sum(A[1:] ** 2) == pytest.approx(1.0, abs=1e-12)
    assert A[0] > 0
    assert mode.converged
    assert mode.eigen_residual < 1e-12


def test_fundamental_mode_peaks_at_pi():
    """ce_0 is largest at eta = pi/2, i.e. phi = pi."""
    mode = solve_mode(10.0, 0)
    eta = np.linspace(0, math.pi, 201)
    values = np.abs(ce(mode, eta))
    assert eta[int(np.argmax(values))] == pytest.approx(math.pi / 2, abs=0.02)


def test_closed_form_variances_match_momentum_sums():
    for q in np.geomspace(0.01, 1e3, 10):
        for mode in solve_modes(float(q), n_max=2):
            point = mode_uncertainties(mode, cross_check=False)
            report = uncertainty_report(mode.to_state(), cross_check=False)
            assert point.var_e == pytest.approx(report.var_e, abs=1e-10)
            assert point.var_l == pytest.approx(report.var_l, abs=1e-10)
            assert theta_sum(mode) == pytest.approx(report.mean_e.real, abs=1e-12)


def test_odd_modes_are_normalized_states():
    for mode in solve_modes(3.0, n_max=3, parity="odd"):
        state = mode_to_state(mode)
        assert state.probabilities().sum() == pytest.approx(1.0, abs=1e-12)
        assert state.amplitude(0) == 0


def test_large_q_product_approaches_constant():
    """Delta L Delta E -> (4n+1)/2, monotonically in q."""
    for n in (0, 1, 2):
        target = (4 * n + 1) / 2.0
        far = mode_uncertainties(solve_mode(1e4, n)).product
        near = mode_uncertainties(solve_mode(1e2, n)).product
        err_far = abs(far - target) / target
        err_near = abs(near - target) / target
        assert err_far <= 0.05
        assert err_far < err_near


@pytest.mark.parametrize("n", [0, 1, 2])
def test_small_q_expansion(n):
    """varL matches the quadratic expansion to 1e-4 at q = 0.1 with a quartic error."""
    errors = []
    for q in (0.05, 0.1, 0.2):
        exact = mode_uncertainties(solve_mode(q, n)).var_l
        approx = asymptotic_uncertainties(n, q, "small").var_l
        errors.append(abs(exact - approx))
        if q == 0.1:
            assert abs(exact - approx) <= 1e-4
    for small, large in zip(errors, errors[1:]):
        assert 8.0 <= large / small <= 32.0


def test_asymptotic_regime_warning():
    assert asymptotic_uncertainties(0, 2.0, "small").regime_warning is not None
    assert asymptotic_uncertainties(0, 0.1, "small").regime_warning is None
    assert asymptotic_uncertainties(1, 1.0, "large").regime_warning is not None
    with pytest.raises(ParameterError):
        asymptotic_uncertainties(0, 1.0, "medium")


def test_truncation_cap_raises():
    with pytest.raises(ConvergenceError) as info:
        solve_modes(1e4, n_max=0, truncation=8, max_truncation=8)
    assert info.value.diagnostics["K"] == 8


def test_invalid_arguments():
    with pytest.raises(ParameterError):
        solve_modes(-1.0)
    with pytest.raises(ParameterError):
        solve_modes(1.0, n_max=0, parity="odd")
    with pytest.raises(ParameterError):
        solve_modes(1.0, parity="mixed")


def test_unconverged_mode_refused():
    mode = solve_modes(50.0, n_max=0, truncation=4, max_truncation=4096)[0]
    assert mode.converged
    forged = type(mode)(n=0, q=50.0, char_value=mode.char_value, coeffs=mode.coeffs, tail=1e-3)
    with pytest.raises(ConvergenceError):
        mode_uncertainties(forged)


def test_sweep_is_ordered_and_tabulated():
    points = sweep_uncertainty_curve(2, [0.5, 1.0, 5.0])
    assert [(p.q, p.n) for p in points] == [(q, n) for q in (0.5, 1.0, 5.0) for n in range(3)]
    table = curve_table(points)
    assert list(table.columns) == ["q", "n", "varE", "varL", "product"]
    fundamental = table[table["n"] == 0]
    assert fundamental["varE"].is_monotonic_decreasing
    with pytest.raises(ParameterError):
        sweep_uncertainty_curve(0, [2.0, 1.0])


def test_q_for_variance_round_trip():
    for var_e in (0.31, 0.54, 0.79, 0.91):
        q = q_for_variance(var_e)
        assert mode_uncertainties(solve_mode(q, 0)).var_e == pytest.approx(var_e, abs=1e-10)
    with pytest.raises(ParameterError):
        q_for_variance(1.2)


def test_hermite_form_at_large_q():
    assert hermite_overlap(solve_mode(1e3, 0)) > 0.99
    assert hermite_overlap(solve_mode(1e3, 1)) > 0.99


def test_von_mises_shape_limits():
    """Best-fit concentration tends to q at small q and sqrt(q) at large q."""
    small = von_mises_fit(0.01)
    assert small["kappa"] == pytest.approx(0.01, rel=0.05)
    assert small["kl"] < 1e-4
    large = [von_mises_fit(q) for q in (1e3, 3e3, 1e4)]
    assert large[0]["kappa"] == pytest.approx(math.sqrt(1e3), rel=0.15)
    assert large[0]["kl"] < 1e-2
    kl = [fit["kl"] for fit in large]
    assert kl[0] > kl[1] > kl[2]
