"""
Tests for the OAM bench: mask preparation, propagation, analyzer
transforms, response matrix and aperture optimization.

Usage:
    pytest tests/test_optics.py
    pytest tests/test_optics.py -m slow   # default geometry
"""

import math
import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from orbita.config import NoiseConfig, OpticalConfig
from orbita.errors import ApertureError, ParameterError, PropagationError
from orbita.optics import (
    MaskSpectrum,
    analyzer_field,
    aperture_scan,
    detected_power,
    mask_spectrum,
    mode_field,
    mode_power,
    optimize_aperture,
    propagate,
    response_matrix,
    simulate_spectrum,
    state_mask,
)
from orbita.states import make_state

from .conftest import FAST_OPTICS


def test_default_geometry_derived_quantities(default_optics):
    spot = default_optics.wavelength * default_optics.focal_length / (math.pi * default_optics.waist)
    assert spot == pytest.approx(50.8e-6, rel=1e-3)
    assert default_optics.nu_aperture == pytest.approx(156.6, rel=1e-3)
    assert default_optics.nu_max == pytest.approx(1909.86, rel=1e-4)
    assert default_optics.helicities[0] == -15 and default_optics.helicities[-1] == 15


def test_constant_mask_is_pure_zero_mode():
    spectrum = mask_spectrum(np.ones(64))
    assert spectrum.amplitude(0) == pytest.approx(1.0)
    assert spectrum.total_power() == pytest.approx(1.0)


def test_active_mask_rejected():
    with pytest.raises(ParameterError):
        mask_spectrum(np.full(16, 1.5))


def test_state_mask_is_passive_and_keeps_ratios(von_mises_state):
    mask, dropped = state_mask(von_mises_state, (-15, 15))
    assert float(np.max(np.abs(mask.transmission()))) == pytest.approx(1.0, abs=1e-12)
    assert dropped < 1e-12
    powers = mask.powers(range(-3, 4))
    probs = np.array([abs(von_mises_state.state.amplitude(m)) ** 2 for m in range(-3, 4)])
    np.testing.assert_allclose(powers / powers[3], probs / probs[3], rtol=1e-12)


def test_mode_fields_carry_unit_power(fast_optics):
    for m in (0, 1, -2, 5):
        assert mode_power(mode_field(m, fast_optics)) == pytest.approx(1.0, abs=1e-3)


def test_closed_form_field_matches_quadrature(default_optics):
    """The Bessel-I form agrees with direct integration of the Fresnel integral."""
    r = np.array([0.25, 0.5, 1.0, 1.5]) * default_optics.beam_radius
    for m in range(0, 9):
        closed = mode_field(m, default_optics, r).values
        direct = mode_field(m, default_optics, r, method="quadrature").values
        assert np.max(np.abs(closed - direct)) <= 1e-6 * np.max(np.abs(closed))


def test_zero_distance_refused():
    cfg = OpticalConfig(distance=0.0)
    with pytest.raises(PropagationError):
        mode_field(0, cfg)


def test_unknown_propagation_method(fast_optics):
    with pytest.raises(ParameterError):
        mode_field(0, fast_optics, method="fresnelNumber")


def test_crosstalk_transform_vanishes_on_axis(fast_optics):
    """Orders m - N != 0 carry a vortex and have no power at nu = 0."""
    fields = propagate(MaskSpectrum.from_mapping({0: 0.6, 1: 0.8}), fast_optics)
    decomposition = analyzer_field(fields, 0, fast_optics)
    assert decomposition.nu[0] == 0.0
    assert decomposition.vbar[1][0] == 0
    assert abs(decomposition.ubar[0]) > 0


def test_detected_power_matches_response_row(fast_optics, fast_response):
    mask = MaskSpectrum.from_mapping({0: 0.6, 2: 0.8})
    decomposition = analyzer_field(propagate(mask, fast_optics), 0, fast_optics)
    signal, crosstalk = detected_power(decomposition, fast_optics)
    assert signal == pytest.approx(0.36 * fast_response.entry(0, 0), rel=1e-10)
    assert crosstalk == pytest.approx(0.64 * fast_response.entry(0, 2), rel=1e-10)


def test_full_plane_captures_transmitted_power():
    """With the pinhole at the grid edge, signal plus crosstalk is the total power."""
    wide = dict(FAST_OPTICS, frequency_samples=1024, frequency_extent=4.0 * 6.0 / (math.pi * 1e-3))
    base = OpticalConfig(**wide)
    cfg = OpticalConfig(**wide, aperture_radius=0.999 * base.nu_max * base.wavelength * base.focal_length)
    mask = MaskSpectrum.from_mapping({0: 0.6, 1: 0.8})
    signal, crosstalk = detected_power(analyzer_field(propagate(mask, cfg), 0, cfg), cfg)
    assert signal + crosstalk == pytest.approx(mask.total_power(), rel=1e-2)


def test_small_pinhole_suppresses_crosstalk():
    cfg = OpticalConfig(**FAST_OPTICS, aperture_radius=2e-6)
    mask = MaskSpectrum.from_mapping({0: 0.6, 1: 0.8})
    signal, crosstalk = detected_power(analyzer_field(propagate(mask, cfg), 0, cfg), cfg)
    assert signal > 0
    assert crosstalk / signal < 1e-2


def test_pinhole_beyond_grid_raises():
    cfg = OpticalConfig(**FAST_OPTICS, aperture_radius=1e-2)
    with pytest.raises(ApertureError):
        response_matrix(cfg)


def test_response_matrix_entries(fast_response):
    C = fast_response.matrix
    assert C.shape == (11, 11)
    assert C.min() >= 0.0
    assert C.max() <= 1.0 + 1e-6
    for N in fast_response.helicities:
        row = C[fast_response.index(N)]
        assert row[fast_response.index(N)] == row.max()


def test_cumulative_power_saturates(fast_optics):
    """The matched-mode focal spot is Gaussian and lies inside the frequency grid."""
    scan = aperture_scan(fast_optics)
    i = scan.helicities.index(0)
    assert scan.cumulative[i, i, -1] == pytest.approx(1.0, abs=1e-3)
    assert np.all(np.diff(scan.cumulative[i, i]) >= 0)


def test_basis_input_reproduces_response_column(fast_optics, fast_response):
    measured = simulate_spectrum(MaskSpectrum.from_mapping({2: 1.0}), fast_optics, response=fast_response)
    np.testing.assert_allclose(measured.power, fast_response.matrix[:, fast_response.index(2)])
    assert measured.helicities[int(np.argmax(measured.power))] == 2


def test_detection_is_linear_in_mode_powers(fast_optics, fast_response):
    mixed = simulate_spectrum(MaskSpectrum.from_mapping({0: 0.6, 1: 0.8}), fast_optics, response=fast_response)
    expected = 0.36 * fast_response.matrix[:, fast_response.index(0)] \
        + 0.64 * fast_response.matrix[:, fast_response.index(1)]
    np.testing.assert_allclose(mixed.power, expected, rtol=1e-12)


def test_noise_is_seeded_and_nonnegative(fast_optics, fast_response):
    state = make_state("vonMises", 0.5)
    noise = NoiseConfig(seed=11, relative_level=0.05)
    first = simulate_spectrum(state, fast_optics, noise=noise, response=fast_response)
    again = simulate_spectrum(state, fast_optics, noise=noise, response=fast_response)
    np.testing.assert_array_equal(first.power, again.power)
    assert (first.power >= 0).all()
    assert not np.allclose(first.power, first.noiseless)
    frame = first.to_frame()
    assert list(frame.columns) == ["N", "power"]


def test_aperture_optimum_is_interior(fast_optics):
    report = optimize_aperture(fast_optics, [0, 1, -1, 2, -2])
    radii = report.table["radius"].to_numpy()
    assert radii[0] < report.radius < radii[-1]
    assert np.all(np.diff(report.table["loss"].to_numpy()) <= 1e-12)
    assert np.all(np.diff(report.table["crosstalk"].to_numpy()) >= -1e-12)


def test_single_mode_prefers_largest_pinhole(fast_optics):
    report = optimize_aperture(fast_optics, [1])
    assert report.radius == pytest.approx(report.table["radius"].iloc[-1])


def test_aperture_scan_rejects_bad_input(fast_optics):
    with pytest.raises(ParameterError):
        optimize_aperture(fast_optics, [])
    with pytest.raises(ParameterError):
        optimize_aperture(fast_optics, [0, 9])
    with pytest.raises(ApertureError):
        optimize_aperture(fast_optics, [0], radii=[1e-5])
    with pytest.raises(ApertureError):
        optimize_aperture(fast_optics, [0], radii=[0.0, 1e-5])
    with pytest.raises(ApertureError):
        optimize_aperture(fast_optics, [0], radii=[1e-5, 1e-5])


@pytest.mark.slow
def test_diagonal_dominance_degrades_with_helicity(default_optics):
    C = response_matrix(default_optics)
    dominance = [C.diagonal_dominance(N) for N in (0, 1, 2, 5)]
    assert all(a > b for a, b in zip(dominance, dominance[1:]))


@pytest.mark.slow
def test_default_aperture_optimum_is_interior(default_optics):
    report = optimize_aperture(default_optics, [0, 1, -1, 2, -2])
    radii = report.table["radius"].to_numpy()
    assert radii[0] < report.radius < radii[-1]
