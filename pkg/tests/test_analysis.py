"""
Tests for crosstalk inversion, family fits, bootstrap error bars and the
synthetic measurement pipeline.

Usage:
    pytest tests/test_analysis.py
"""

import math
import os
import sys

import numpy as np
import pandas as pd
import pytest

sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from orbita.analysis import (
    RecoveredSpectrum,
    deconvolve,
    fit_family,
    fit_spectrum,
    fitted_spectrum,
    get_model,
    l_curve,
    mathieu_product,
    pipeline_summary,
    run_pipeline,
    uncertainty_with_errors,
)
from orbita.config import load_scenario, scenario_from
from orbita.errors import DeconvolutionError, ParameterError
from orbita.mathieu import mode_uncertainties, q_for_variance, solve_mode
from orbita.optics import ResponseMatrix
from orbita.states import momentum_spectrum_closed_form

from .conftest import FAST_OPTICS

SCENARIO_DIR = os.path.join(os.path.dirname(os.path.dirname(os.path.abspath(__file__))), "config", "scenarios")


def _banded_response(helicities=tuple(range(-3, 4)), diagonal=0.8, neighbor=0.1):
    n = len(helicities)
    C = diagonal * np.eye(n) + neighbor * (np.eye(n, k=1) + np.eye(n, k=-1))
    return ResponseMatrix(tuple(helicities), C, 25e-6)


def test_exact_inversion_without_regularization():
    response = _banded_response()
    p_true = np.array([0.02, 0.08, 0.2, 0.4, 0.2, 0.08, 0.02])
    recovered = deconvolve(response.apply(p_true), response, regularization=0.0)
    np.testing.assert_allclose(recovered.pm, p_true / p_true.sum(), atol=1e-10)
    assert recovered.regularization == 0.0
    assert recovered.residual_norm < 1e-12
    assert list(recovered.to_frame().columns) == ["m", "p_m"]


def test_identity_response_renormalizes():
    response = ResponseMatrix((0, 1, 2), np.eye(3), 25e-6)
    recovered = deconvolve([2.0, 1.0, 1.0], response)
    np.testing.assert_allclose(recovered.pm, [0.5, 0.25, 0.25])


def test_singular_response_needs_regularization():
    C = np.array([[0.5, 0.5, 0.0], [0.5, 0.5, 0.0], [0.0, 0.0, 1.0]])
    response = ResponseMatrix((0, 1, 2), C, 25e-6)
    with pytest.raises(DeconvolutionError):
        deconvolve([0.5, 0.5, 0.2], response, regularization=0.0)
    recovered = deconvolve([0.5, 0.5, 0.2], response, regularization=1e-6)
    assert recovered.pm.sum() == pytest.approx(1.0)
    assert (recovered.pm >= 0).all()


def test_l_curve_selects_interior_weight(rng):
    response = _banded_response(diagonal=0.5, neighbor=0.24)
    p_true = np.array([0.02, 0.08, 0.2, 0.4, 0.2, 0.08, 0.02])
    y = response.apply(p_true) * (1.0 + 0.02 * rng.standard_normal(7))
    curve = l_curve(response.matrix, y)
    assert curve.lambdas[0] <= curve.corner <= curve.lambdas[-1]
    assert np.all(np.diff(curve.residual_norms) >= -1e-12)
    recovered = deconvolve(y, response, regularization=None)
    assert recovered.regularization == pytest.approx(curve.corner)
    assert recovered.pm.sum() == pytest.approx(1.0)


def test_window_restricts_helicities():
    response = _banded_response()
    recovered = deconvolve(response.apply(np.full(7, 1.0 / 7)), response, window=(-1, 1))
    assert recovered.window == (-1, 1)
    assert recovered.pm.size == 3
    with pytest.raises(ParameterError):
        deconvolve(np.ones(7), response, window=(-5, 5))
    with pytest.raises(ParameterError):
        deconvolve(np.ones(5), response)


def test_mathieu_fit_recovers_parameter():
    m = np.arange(-15, 16)
    state = solve_mode(4.0, 0).to_state()
    p = np.array([abs(state.amplitude(int(k))) ** 2 for k in m])
    fit = fit_spectrum(m, p, "mathieu")
    assert fit.width == pytest.approx(4.0, rel=1e-4)
    expected = mode_uncertainties(solve_mode(4.0, 0)).product
    assert fit.product == pytest.approx(expected, rel=1e-4)
    assert fit.normalization == pytest.approx(1.0, rel=1e-6)


def test_cosine_fit_recovers_width():
    m = np.arange(-15, 16)
    p = momentum_spectrum_closed_form("cosine", 1.0, (-15, 15)).pm
    fit = fit_spectrum(m, 3.0 * p, "cosine")
    assert fit.width == pytest.approx(1.0, rel=1e-6)
    assert fit.normalization == pytest.approx(3.0, rel=1e-6)
    assert fit.var_l == pytest.approx(1.0, rel=1e-6)
    np.testing.assert_allclose(fitted_spectrum(fit, m), 3.0 * p, rtol=1e-5, atol=1e-12)


def test_fit_rejects_families_without_model():
    with pytest.raises(ParameterError):
        get_model("coherent")
    with pytest.raises(ParameterError):
        fit_spectrum([0], [1.0], "vonMises")


def test_bootstrap_is_deterministic(rng):
    m = np.arange(-8, 9)
    clean = momentum_spectrum_closed_form("vonMises", 0.5, (-8, 8)).pm
    noisy = np.clip(clean * (1.0 + 0.05 * rng.standard_normal(m.size)), 0.0, None)
    recovered = RecoveredSpectrum(helicities=m, pm=noisy / noisy.sum(), regularization=0.0)
    fit = fit_family(recovered, "vonMises")
    first = uncertainty_with_errors(fit, recovered, bootstrap_count=20, seed=3)
    again = uncertainty_with_errors(fit, recovered, bootstrap_count=20, seed=3)
    other = uncertainty_with_errors(fit, recovered, bootstrap_count=20, seed=4)
    assert first.error_bar == again.error_bar
    assert first.error_bar > 0
    assert other.error_bar != first.error_bar
    assert first.product == fit.product
    with pytest.raises(ParameterError):
        uncertainty_with_errors(fit, recovered, bootstrap_count=1)


def test_mathieu_product_is_lower_envelope():
    for var_e in (0.3, 0.6):
        bound = mathieu_product(var_e)
        assert bound == pytest.approx(
            mode_uncertainties(solve_mode(q_for_variance(var_e), 0)).product, rel=1e-12
        )
        assert bound >= math.sqrt((1.0 - var_e) / 4.0) - 1e-12


def test_noiseless_pipeline_recovers_product():
    scenario = scenario_from({
        "name": "noiseless",
        "states": [{"family": "mathieu", "var_e": 0.54}],
        "optics": dict(FAST_OPTICS),
        "noise": {"relative_level": 0.0},
        "window": [-5, 5],
        "bootstrap": 5,
        "regularization": 0.0,
    })
    result = run_pipeline(scenario)
    row = result.table.iloc[0]
    assert row["varE_theory"] == pytest.approx(0.54, abs=1e-9)
    assert row["product_recovered"] == pytest.approx(row["product_theory"], rel=1e-3)
    assert row["product_mathieu"] == pytest.approx(row["product_theory"], rel=1e-9)
    assert list(result.triple.columns) == ["m", "raw", "deconvolved", "fitted"]
    assert result.triple["deconvolved"].sum() == pytest.approx(1.0)
    assert result.metadata["seed"] == scenario.seed


def test_pipeline_summary_flags():
    table = pd.DataFrame({
        "family": ["wedge", "wedge", "wedge", "vonMises", "vonMises"],
        "varE_theory": [0.1, 0.4, 0.25, 0.2, 0.5],
        "product_recovered": [0.95, 1.27, 1.15, 0.3, 0.28],
        "err": [0.01, 0.01, 0.01, 0.05, 0.05],
        "product_mathieu": [0.2, 0.4, 0.3, 0.25, 0.26],
    })
    summary = pipeline_summary(table).set_index("family")
    assert summary.loc["wedge", "increasing"]
    assert summary.loc["wedge", "above_mathieu"] == 3
    assert not summary.loc["vonMises", "increasing"]
    assert summary.loc["vonMises", "above_mathieu"] == 0


@pytest.mark.slow
def test_mathieu_scenario_with_noise():
    result = run_pipeline(load_scenario(os.path.join(SCENARIO_DIR, "comparison_mathieu.yaml")))
    table = result.table
    deviation = (table["product_recovered"] - table["product_theory"]).abs() / table["product_theory"]
    assert (deviation < 0.1).all()
    assert (table["err"] > 0).all()


@pytest.mark.slow
def test_wedge_scenario_increases_with_variance():
    result = run_pipeline(load_scenario(os.path.join(SCENARIO_DIR, "comparison_wedge.yaml")))
    summary = pipeline_summary(result.table)
    assert bool(summary.loc[0, "increasing"])
