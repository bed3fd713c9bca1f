"""
Orbita: Quantum Mechanics on the Circle
=======================================

Angle/angular-momentum uncertainty with circular variance, the Mathieu
intelligent states that minimize it, the suboptimal families compared
against them, and a simulated OAM spectrum measurement with its analysis
pipeline.

Modules:
- core: momentum wavefunctions, angle synthesis, uncertainty reports
- mathieu: Mathieu eigenproblem and the minimum-uncertainty curve
- states: wedge, cosine, von Mises, Gaussian and coherent families
- optics: vortex propagation, analyzer masks, response matrices
- analysis: deconvolution, family fits, bootstrap and the full pipeline
- cli: command-line front end (``python -m orbita``)

Example usage:
    >>> from orbita import make_state, uncertainty_report
    >>> pkg = make_state("wedge", 3.14159)
    >>> round(pkg.closed_form.var_e, 4)
    0.5947

    >>> from orbita import solve_mode, mode_uncertainties
    >>> point = mode_uncertainties(solve_mode(4.0, 0))
"""

from .core import (
    MomentumWavefunction,
    AngularSamples,
    UncertaintyReport,
    PovmKernel,
    synthesize,
    analyze,
    density,
    uncertainty_report,
    relation_slacks,
    povm_smooth,
    shift_state,
    quadrature_pair,
)

from .mathieu import (
    MathieuMode,
    UncertaintyCurvePoint,
    solve_modes,
    solve_mode,
    mode_uncertainties,
    asymptotic_uncertainties,
    sweep_uncertainty_curve,
    q_for_variance,
    hermite_approximation,
    von_mises_fit,
    mode_to_state,
)

from .states import (
    FAMILIES,
    StatePackage,
    canonical_family,
    make_state,
    angular_amplitude,
    momentum_spectrum_closed_form,
    verify_eigenrelations,
    family_statistics,
    width_for_variance,
    matched_variance_table,
)

from .optics import (
    MaskSpectrum,
    ResponseMatrix,
    MeasuredSpectrum,
    mask_spectrum,
    state_mask,
    mode_field,
    propagate,
    analyzer_field,
    detected_power,
    response_matrix,
    simulate_spectrum,
    optimize_aperture,
)

from .analysis import (
    RecoveredSpectrum,
    FitResult,
    deconvolve,
    fit_family,
    uncertainty_with_errors,
    run_pipeline,
)

from .config import (
    OpticalConfig,
    NoiseConfig,
    Scenario,
    get_config,
    load_optical_config,
    load_scenario,
)

from .errors import OrbitaError

__version__ = "1.0.0"

__all__ = [
    # Core
    "MomentumWavefunction",
    "AngularSamples",
    "UncertaintyReport",
    "PovmKernel",
    "synthesize",
    "analyze",
    "density",
    "uncertainty_report",
    "relation_slacks",
    "povm_smooth",
    "shift_state",
    "quadrature_pair",

    # Mathieu
    "MathieuMode",
    "UncertaintyCurvePoint",
    "solve_modes",
    "solve_mode",
    "mode_uncertainties",
    "asymptotic_uncertainties",
    "sweep_uncertainty_curve",
    "q_for_variance",
    "hermite_approximation",
    "mode_to_state",
    "von_mises_fit",

    # States
    "FAMILIES",
    "StatePackage",
    "canonical_family",
    "make_state",
    "angular_amplitude",
    "momentum_spectrum_closed_form",
    "verify_eigenrelations",
    "family_statistics",
    "width_for_variance",
    "matched_variance_table",

    # Optics
    "MaskSpectrum",
    "ResponseMatrix",
    "MeasuredSpectrum",
    "mask_spectrum",
    "state_mask",
    "mode_field",
    "propagate",
    "analyzer_field",
    "detected_power",
    "response_matrix",
    "simulate_spectrum",
    "optimize_aperture",

    # Analysis
    "RecoveredSpectrum",
    "FitResult",
    "deconvolve",
    "fit_family",
    "uncertainty_with_errors",
    "run_pipeline",

    # Config
    "OpticalConfig",
    "NoiseConfig",
    "Scenario",
    "get_config",
    "load_optical_config",
    "load_scenario",

    "OrbitaError",
]
