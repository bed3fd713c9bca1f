"""
Tests for momentum wavefunctions, angle synthesis and uncertainty reports.

Usage:
    pytest tests/test_core.py
"""

import math
import os
import sys

import numpy as np
import pytest
from scipy.integrate import quad

sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from orbita.core import (
    AngularSamples,
    MomentumWavefunction,
    PovmKernel,
    analyze,
    circular_mean,
    density,
    povm_smooth,
    relation_slacks,
    shift_state,
    synthesize,
    uncertainty_report,
)
from orbita.errors import KernelError, NormalizationError, TruncationError


def test_uncertainty_relations_hold_for_random_states(random_state_factory):
    """varE varL >= (1 - varE)/4 and both Robertson pairs hold for 1000 random states."""
    worst = {"dispersion": np.inf, "cosine": np.inf, "sine": np.inf}
    for _ in range(1000):
        state = MomentumWavefunction(random_state_factory(32))
        slacks = relation_slacks(uncertainty_report(state, cross_check=False))
        for key, value in slacks.items():
            worst[key] = min(worst[key], value)
    assert all(value >= -1e-12 for value in worst.values()), worst


def test_basis_state_statistics():
    """|m> has no angular information and no momentum spread."""
    report = uncertainty_report(MomentumWavefunction.basis(3, truncation=8))
    assert report.var_e == pytest.approx(1.0)
    assert report.var_l == pytest.approx(0.0)
    assert report.mean_l == pytest.approx(3.0)
    assert report.product == pytest.approx(0.0)


def test_two_mode_state_mean_e():
    """(|0> + |1>)/sqrt 2 has <E> = 1/2."""
    state = MomentumWavefunction.from_mapping({0: 1.0, 1: 1.0}, truncation=4)
    report = uncertainty_report(state)
    assert report.mean_e == pytest.approx(0.5)
    assert report.var_e == pytest.approx(0.75)
    assert report.var_l == pytest.approx(0.25)
    assert report.quadrature_deviation < 1e-12


def test_quadrature_cross_check_agrees(random_state_factory):
    """Momentum sums and angle-grid quadrature give the same moments."""
    state = MomentumWavefunction(random_state_factory(16))
    report = uncertainty_report(state, cross_check=True, grid_size=64)
    assert report.quadrature_deviation < 1e-10


def test_synthesize_then_analyze_recovers_state(random_state_factory):
    """Angle samples on a fine grid carry the full state."""
    state = MomentumWavefunction(random_state_factory(10))
    samples = synthesize(state, 128)
    assert samples.norm() == pytest.approx(1.0, abs=1e-12)
    recovered = analyze(samples, 10)
    np.testing.assert_allclose(recovered.coefficients, state.coefficients, atol=1e-12)


def test_density_peaks_at_zero_for_centered_state(von_mises_state):
    """A state centered at 0 has its angular density maximum at phi = 0."""
    p = density(von_mises_state.state, 512)
    assert int(np.argmax(p)) == 0
    assert 2 * math.pi / 512 * np.sum(p) == pytest.approx(1.0, abs=1e-12)


def test_synthesize_refuses_aliasing_grid():
    """A grid smaller than 2M+1 raises TruncationError."""
    state = MomentumWavefunction.basis(0, truncation=16)
    with pytest.raises(TruncationError):
        synthesize(state, 16)


def test_unnormalized_raw_array_rejected():
    """Raw arrays are validated, not silently normalized."""
    with pytest.raises(NormalizationError):
        uncertainty_report(np.array([1.0, 1.0, 0.0]))


def test_even_length_coefficients_rejected():
    with pytest.raises(TruncationError):
        MomentumWavefunction(np.array([1.0, 0.0]))


def test_from_coefficients_with_offset():
    """Amplitudes placed at an explicit offset land on the right m."""
    state = MomentumWavefunction.from_coefficients([3.0, 4.0], truncation=5, offset=2)
    assert state.amplitude(2) == pytest.approx(0.6)
    assert state.amplitude(3) == pytest.approx(0.8)
    assert state.amplitude(9) == 0j
    with pytest.raises(TruncationError):
        MomentumWavefunction.from_coefficients([1.0, 1.0], truncation=2, offset=2)


def test_json_keeps_amplitudes(random_state_factory):
    state = MomentumWavefunction(random_state_factory(4))
    again = MomentumWavefunction.from_json(state.to_json())
    np.testing.assert_array_equal(again.coefficients, state.coefficients)


def test_angle_shift_rotates_mean_e(von_mises_state):
    """An angle shift a multiplies <E> by exp(i a) and keeps the variances."""
    base = uncertainty_report(von_mises_state.state)
    shifted = uncertainty_report(shift_state(von_mises_state.state, angle_shift=0.8))
    assert shifted.mean_e == pytest.approx(base.mean_e * np.exp(0.8j), abs=1e-12)
    assert shifted.var_e == pytest.approx(base.var_e, abs=1e-12)
    assert shifted.var_l == pytest.approx(base.var_l, abs=1e-12)
    p = density(shift_state(von_mises_state.state, angle_shift=math.pi / 2), 512)
    assert int(np.argmax(p)) == 128


def test_momentum_shift_moves_mean_l():
    state = MomentumWavefunction.from_mapping({0: 1.0, 1: 1.0j}, truncation=6)
    base = uncertainty_report(state)
    moved = uncertainty_report(shift_state(state, momentum_shift=3))
    assert moved.mean_l == pytest.approx(base.mean_l + 3)
    assert moved.var_e == pytest.approx(base.var_e)
    assert moved.var_l == pytest.approx(base.var_l)


def test_momentum_shift_off_grid_raises():
    state = MomentumWavefunction.basis(5, truncation=6)
    with pytest.raises(TruncationError):
        shift_state(state, momentum_shift=2)


def test_povm_smoothing_scales_circular_mean(von_mises_state):
    """Smearing multiplies <exp(i phi)> by lambda_1."""
    kernel = PovmKernel.von_mises(2.0)
    p = density(von_mises_state.state, 1024)
    smoothed = povm_smooth(p, kernel)
    assert circular_mean(smoothed) == pytest.approx(kernel.coefficient(1) * circular_mean(p), abs=1e-12)
    assert 2 * math.pi / 1024 * np.sum(smoothed) == pytest.approx(1.0, abs=1e-12)
    var_e_out = 1.0 - abs(circular_mean(smoothed)) ** 2
    assert var_e_out >= 1.0 - abs(circular_mean(p)) ** 2


def _density_at(state, phi):
    amplitude = np.sum(state.coefficients * np.exp(-1j * state.indices() * phi)) / math.sqrt(2 * math.pi)
    return abs(amplitude) ** 2


def test_poisson_smoothing_matches_direct_convolution(von_mises_state):
    """r = 0.5 halves |<exp(i phi)>|; grid result equals the convolution integral."""
    r, N = 0.5, 256
    state = shift_state(von_mises_state.state, angle_shift=0.7)
    p = density(state, N)
    smoothed = povm_smooth(p, PovmKernel.poisson(r))
    assert abs(circular_mean(smoothed)) == pytest.approx(0.5 * abs(circular_mean(p)), abs=1e-12)
    assert 1.0 - abs(circular_mean(smoothed)) ** 2 > 1.0 - abs(circular_mean(p)) ** 2

    def kernel(x):
        return (1 - r * r) / (2 * math.pi * (1 - 2 * r * math.cos(x) + r * r))

    phi = 2 * math.pi * np.arange(N) / N
    for j in range(0, N, 16):
        direct, _ = quad(lambda x: kernel(x) * _density_at(state, phi[j] + x), -math.pi, math.pi,
                         epsabs=1e-13, epsrel=1e-12, limit=200)
        assert smoothed[j] == pytest.approx(direct, abs=1e-10)


def test_wedge_shift_keeps_variances(wedge_state):
    base = uncertainty_report(wedge_state.state)
    shifted_state = shift_state(wedge_state.state, angle_shift=math.pi / 2)
    shifted = uncertainty_report(shifted_state)
    assert shifted.var_e == pytest.approx(base.var_e, abs=1e-12)
    assert shifted.var_l == pytest.approx(base.var_l, abs=1e-12)
    assert shifted.mean_e == pytest.approx(1j * base.mean_e, abs=1e-12)
    p, moved = density(wedge_state.state, 512), density(shifted_state, 512)
    np.testing.assert_allclose(moved, np.roll(p, 128), atol=1e-12)


def test_ideal_and_uniform_kernels(von_mises_state):
    p = density(von_mises_state.state, 256)
    np.testing.assert_allclose(povm_smooth(p, PovmKernel.ideal()), p)
    flat = povm_smooth(p, PovmKernel.uniform())
    np.testing.assert_allclose(flat, np.full(256, 1.0 / (2 * math.pi)), atol=1e-12)


def test_poisson_kernel_is_positive_and_complete():
    kernel = PovmKernel.poisson(0.6)
    samples = kernel.kernel_samples(1024)
    assert samples.min() > 0
    assert 2 * math.pi / 1024 * samples.sum() == pytest.approx(1.0, abs=1e-12)


def test_invalid_kernels_rejected():
    with pytest.raises(KernelError):
        PovmKernel(np.array([0.5, 0.9, 0.5]))
    with pytest.raises(KernelError):
        PovmKernel(np.array([1.2, 1.0, 1.2]))
    with pytest.raises(KernelError):
        PovmKernel.poisson(1.5)


def test_povm_rejects_unnormalized_density():
    with pytest.raises(NormalizationError):
        povm_smooth(np.ones(64), PovmKernel.uniform())


def test_angular_samples_are_read_only():
    samples = AngularSamples(np.ones(8))
    with pytest.raises(ValueError):
        samples.values[0] = 2.0
