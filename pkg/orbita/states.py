"""
State Families on the Circle
============================

Constructors and closed-form statistics for the families compared against
the Mathieu intelligent states:

- wedge: constant amplitude on an opening angle alpha
- cosine: positive cosine half-wave of width pi*alpha (wrapped for alpha > 2)
- vonMises: exp(kappa cos phi) amplitude, kappa = 1/(2 alpha)
- truncatedGaussian: exp(-alpha^2 phi^2 / 2) cut at +-pi
- wrappedGaussian: square root of the wrapped normal density of spread sigma
- coherent: eigenstates of W|m> = exp(m - 1/2)|m-1> with eigenvalue
  w = exp(i theta - ell)

Every family is centered at phi = 0; a center mu is applied with
``core.shift_state`` (the statistics do not depend on it).

Example:
    >>> pkg = make_state("wedge", math.pi)
    >>> round(pkg.closed_form.var_e, 4)
    0.5947
"""

import math
from dataclasses import dataclass, field
from typing import Any, Dict, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from loguru import logger
from scipy.integrate import quad
from scipy.optimize import brentq
from scipy.special import ive, wofz

from .core import (
    DEFAULT_TRUNCATION,
    MomentumWavefunction,
    AngularSamples,
    SQRT_2PI,
    analyze,
    angle_grid,
    quadrature_pair,
    relation_slacks,
    shift_state,
    uncertainty_report,
)
from .errors import ConvergenceError, ParameterError
from .mathieu import mode_uncertainties, q_for_variance, solve_mode
from .utils import parallel_map

FAMILIES: Tuple[str, ...] = (
    "wedge",
    "cosine",
    "vonMises",
    "truncatedGaussian",
    "wrappedGaussian",
    "coherent",
    "mathieu",
)

_ALIASES: Dict[str, str] = {
    "wedge": "wedge",
    "cosine": "cosine",
    "vonmises": "vonMises",
    "mises": "vonMises",
    "truncatedgaussian": "truncatedGaussian",
    "truncated": "truncatedGaussian",
    "wrappedgaussian": "wrappedGaussian",
    "wrapped": "wrappedGaussian",
    "coherent": "coherent",
    "mathieu": "mathieu",
}

MAX_TRUNCATION = 4096
THETA_CUTOFF = 1e-16
IMAGE_THRESHOLD = 0.1  # sigma^2 below which images beat the theta series
EIGEN_TOLERANCE = 1e-8

# families whose spectra decay algebraically; the truncation is not grown for them
_ALGEBRAIC = ("wedge",)
_EDGED = ("wedge", "truncatedGaussian")


def canonical_family(name: str) -> str:
    """
    Map a family name or alias to its canonical spelling.

    Raises:
        ParameterError: For unknown names

    Example:
        >>> canonical_family("von_mises")
        'vonMises'
    """
    key = str(name).replace("_", "").replace("-", "").replace(" ", "").lower()
    if key not in _ALIASES:
        raise ParameterError(f"unknown state family {name!r}; expected one of {FAMILIES}")
    return _ALIASES[key]


@dataclass(frozen=True)
class ClosedFormReport:
    """
    Statistics from the family's own formulas.

    ``window`` is set when varL is a truncated-window variance (wedge).
    ``var_l`` is None when the family has no closed-form momentum spread.
    """

    var_e: float
    var_l: Optional[float] = None
    window: Optional[int] = None

    @property
    def product(self) -> Optional[float]:
        if self.var_l is None:
            return None
        return math.sqrt(self.var_e * self.var_l)

    def as_dict(self) -> Dict[str, Any]:
        return {"varE": self.var_e, "varL": self.var_l, "product": self.product, "window": self.window}


@dataclass(frozen=True)
class StatePackage:
    """A family member: parameters, normalized state and closed-form statistics."""

    family: str
    width: Optional[float]
    center: float
    ell: float
    state: MomentumWavefunction
    closed_form: Optional[ClosedFormReport] = None
    method: str = "closed"

    @property
    def converged(self) -> bool:
        return self.state.converged

    def to_json(self) -> Dict[str, Any]:
        return {
            "family": self.family,
            "alpha": self.width,
            "mu": self.center,
            "ell": self.ell,
            "state": self.state.to_json(),
        }


@dataclass(frozen=True)
class SpectrumClosedForm:
    """Closed-form p_m over a range of m."""

    family: str
    params: Dict[str, float]
    m: np.ndarray
    pm: np.ndarray

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({"m": self.m, "p_m_closed_form": self.pm})


@dataclass(frozen=True)
class EigenrelationReport:
    """Residual of a defining eigen-relation and the saturation slack it implies."""

    family: str
    relation: str
    residual: float
    saturation_slack: float
    details: Dict[str, Any] = field(default_factory=dict)

    @property
    def holds(self) -> bool:
        return self.residual <= EIGEN_TOLERANCE and abs(self.saturation_slack) <= EIGEN_TOLERANCE


# ---------------------------------------------------------------------------
# Parameter validation
# ---------------------------------------------------------------------------

def validate_width(family: str, width: Optional[float]) -> Optional[float]:
    """
    Check a width parameter against the family's admissible range.

    wedge: 0 < alpha <= 2 pi; cosine, vonMises, truncatedGaussian,
    wrappedGaussian: > 0; mathieu: q >= 0; coherent: ignored.
    """
    family = canonical_family(family)
    if family == "coherent":
        return width
    if width is None or not np.isfinite(width):
        raise ParameterError(f"{family} needs a finite width parameter, got {width}")
    width = float(width)
    if family == "wedge" and not 0.0 < width <= 2.0 * math.pi:
        raise ParameterError(f"wedge opening angle must satisfy 0 < alpha <= 2 pi, got {width}")
    if family == "mathieu":
        if width < 0:
            raise ParameterError(f"Mathieu parameter q must be >= 0, got {width}")
    elif width <= 0:
        raise ParameterError(f"{family} width must be > 0, got {width}")
    return width


# ---------------------------------------------------------------------------
# Special functions
# ---------------------------------------------------------------------------

def theta3(z, nome: float):
    """
    Jacobi theta function theta_3(z | q) = sum_k q^(k^2) exp(2 i k z).

    The series is cut where |q|^(k^2) exp(2 |k| |Im z|) drops below 1e-16.

    Args:
        z: Real or complex argument (scalar or array)
        nome: Real nome, 0 <= q < 1

    Raises:
        ParameterError: If the nome is outside [0, 1)
    """
    if not 0.0 <= nome < 1.0:
        raise ParameterError(f"theta nome must lie in [0, 1), got {nome}")
    z = np.asarray(z, dtype=complex)
    if nome == 0.0:
        return np.ones_like(z)
    a = -math.log(nome)
    b = 2.0 * float(np.max(np.abs(z.imag))) if z.size else 0.0
    c = -math.log(THETA_CUTOFF)
    K = int(math.ceil((b + math.sqrt(b * b + 4.0 * a * c)) / (2.0 * a))) + 1
    k = np.arange(-K, K + 1)
    terms = np.exp(-a * k * k + 2j * np.multiply.outer(z, k))
    return terms.sum(axis=-1)


def _wrap(phi: np.ndarray) -> np.ndarray:
    return np.mod(np.asarray(phi, dtype=float) + math.pi, 2.0 * math.pi) - math.pi


def wrapped_gaussian_density(phi, sigma: float, mu: float = 0.0, method: str = "auto") -> np.ndarray:
    """
    Wrapped normal density (1/2 pi) theta_3((phi - mu)/2 | exp(-sigma^2/2)).

    Args:
        phi: Angles
        sigma: Spread of the unwrapped normal
        mu: Center
        method: "series" (theta series), "images" (sum over 2 pi images)
            or "auto" (images when sigma^2 < 0.1)
    """
    if sigma <= 0:
        raise ParameterError(f"wrapped Gaussian needs sigma > 0, got {sigma}")
    x = _wrap(np.asarray(phi, dtype=float) - mu)
    if method == "auto":
        method = "images" if sigma * sigma < IMAGE_THRESHOLD else "series"
    if method == "series":
        return theta3(x / 2.0, math.exp(-sigma * sigma / 2.0)).real / (2.0 * math.pi)
    if method == "images":
        K = int(math.ceil((math.pi + 9.0 * sigma) / (2.0 * math.pi))) + 1
        k = np.arange(-K, K + 1)
        shifted = np.add.outer(x, 2.0 * math.pi * k)
        return np.exp(-shifted ** 2 / (2.0 * sigma * sigma)).sum(axis=-1) / (SQRT_2PI * sigma)
    raise ParameterError(f"method must be 'auto', 'series' or 'images', got {method!r}")


def coherent_amplitude(phi, theta: float = 0.0, ell: float = 0.0) -> np.ndarray:
    """
    Coherent state in the angle representation.

    Psi(phi) = theta_3((phi - theta - i ell)/2 | e^(-1/2)) / (sqrt(2 pi) N)
    with N^2 = theta_3(i ell | e^(-1)).
    """
    phi = np.asarray(phi, dtype=float)
    norm = math.sqrt(float(theta3(1j * ell, math.exp(-1.0)).real))
    return theta3((phi - theta - 1j * ell) / 2.0, math.exp(-0.5)) / (SQRT_2PI * norm)


def _damped_re_erf(x: float, y: np.ndarray) -> np.ndarray:
    """exp(-y^2) Re erf(x + i y) without overflow, via the Faddeeva function."""
    y = np.asarray(y, dtype=float)
    return np.exp(-y * y) - np.real(np.exp(-x * x - 2j * x * y) * wofz(-y + 1j * x))


# ---------------------------------------------------------------------------
# Closed-form coefficients and statistics
# ---------------------------------------------------------------------------

def _wedge_coefficients(alpha: float, m: np.ndarray) -> np.ndarray:
    return math.sqrt(alpha / (2.0 * math.pi)) * np.sinc(m * alpha / (2.0 * math.pi))


def _cosine_coefficients(alpha: float, m: np.ndarray) -> np.ndarray:
    # (2 sqrt(alpha)/pi) cos(pi x/2)/(1 - x^2), x = m alpha, written without the pole at |x| = 1
    x = np.abs(m * alpha)
    return math.sqrt(alpha) * np.sinc((x - 1.0) / 2.0) / (x + 1.0)


def _von_mises_coefficients(alpha: float, m: np.ndarray) -> np.ndarray:
    kappa = 1.0 / (2.0 * alpha)
    return ive(np.abs(m), kappa) / math.sqrt(ive(0, 2.0 * kappa))


def _truncated_coefficients(alpha: float, m: np.ndarray) -> np.ndarray:
    c = math.sqrt(alpha / (math.sqrt(math.pi) * math.erf(math.pi * alpha)))
    return (c / alpha) * _damped_re_erf(math.pi * alpha / math.sqrt(2.0), m / (math.sqrt(2.0) * alpha))


def _coherent_coefficients(theta: float, ell: float, m: np.ndarray) -> np.ndarray:
    m = np.asarray(m, dtype=float)
    return np.exp(m * (1j * theta - ell) - m * m / 2.0)


def _coefficients(family: str, width: Optional[float], m: np.ndarray, theta: float = 0.0, ell: float = 0.0) -> np.ndarray:
    if family == "wedge":
        return _wedge_coefficients(width, m)
    if family == "cosine":
        return _cosine_coefficients(width, m)
    if family == "vonMises":
        return _von_mises_coefficients(width, m)
    if family == "truncatedGaussian":
        return _truncated_coefficients(width, m)
    if family == "coherent":
        return _coherent_coefficients(theta, ell, m)
    raise ParameterError(f"{family} has no closed-form Fourier coefficients")


def wedge_window_variance(alpha: float, window: int) -> float:
    """sum_{|m|<=W} m^2 p_m / sum_{|m|<=W} p_m for the wedge spectrum."""
    validate_width("wedge", alpha)
    if window < 0:
        raise ParameterError(f"window must be >= 0, got {window}")
    m = np.arange(-window, window + 1)
    p = _wedge_coefficients(alpha, m) ** 2
    return float(np.sum(m * m * p) / np.sum(p))


def wedge_minimum_window(alpha: float, order: int = 1) -> int:
    """Largest |m| up to the order-th zero of the wedge spectrum, m = 2 pi order / alpha."""
    validate_width("wedge", alpha)
    if order < 1:
        raise ParameterError(f"minimum order must be >= 1, got {order}")
    return int(math.floor(2.0 * math.pi * order / alpha + 1e-12))


def _cosine_mean_e(alpha: float) -> float:
    # <cos phi> of the unwrapped half-wave; 4 sinc((alpha-2)/2) / (alpha (alpha+2))
    return float(4.0 * np.sinc((alpha - 2.0) / 2.0) / (alpha * (alpha + 2.0)))


def _closed_form(family: str, width: Optional[float], theta: float, ell: float,
                 state: Optional[MomentumWavefunction]) -> Optional[ClosedFormReport]:
    if family == "wedge":
        return ClosedFormReport(
            var_e=float(1.0 - np.sinc(width / (2.0 * math.pi)) ** 2),
            var_l=wedge_window_variance(width, state.truncation),
            window=state.truncation,
        )
    if family == "cosine":
        if width <= 2.0:
            return ClosedFormReport(var_e=1.0 - _cosine_mean_e(width) ** 2, var_l=1.0 / (width * width))
        # wrapped half-wave: statistics of the renormalized closed-form coefficients
        report = uncertainty_report(state, cross_check=False)
        return ClosedFormReport(var_e=report.var_e, var_l=report.var_l)
    if family == "vonMises":
        x = 1.0 / width
        ratio = ive(1, x) / ive(0, x)
        return ClosedFormReport(var_e=float(1.0 - ratio * ratio), var_l=float(ratio / (4.0 * width)))
    if family == "truncatedGaussian":
        a = width
        erf_pa = math.erf(math.pi * a)
        mean_e = float(_damped_re_erf(math.pi * a, 1.0 / (2.0 * a))) / erf_pa
        var_l = (a * a / 2.0) * (1.0 - 2.0 * math.sqrt(math.pi) * a * math.exp(-(math.pi * a) ** 2) / erf_pa)
        return ClosedFormReport(var_e=1.0 - mean_e * mean_e, var_l=var_l)
    if family == "wrappedGaussian":
        return ClosedFormReport(var_e=1.0 - math.exp(-width * width))
    if family == "coherent":
        return _coherent_statistics(theta, ell)
    return None


def _coherent_statistics(theta: float, ell: float) -> ClosedFormReport:
    K = 40 + int(math.ceil(abs(ell)))
    center = int(round(-ell))
    m = np.arange(center - K, center + K + 1)
    c = _coherent_coefficients(theta, ell, m)
    p = np.abs(c) ** 2
    z = float(np.sum(p))
    mean_e = complex(np.vdot(c[:-1], c[1:])) / z
    mean_l = float(np.sum(m * p)) / z
    var_l = float(np.sum(m * m * p)) / z - mean_l ** 2
    return ClosedFormReport(var_e=1.0 - abs(mean_e) ** 2, var_l=var_l)


# ---------------------------------------------------------------------------
# Angle-domain amplitudes (quadrature path)
# ---------------------------------------------------------------------------

def angular_amplitude(family: str, width: Optional[float], phi, ell: float = 0.0, theta: float = 0.0) -> np.ndarray:
    """
    Family amplitude Psi(phi) centered at 0 (coherent: centered at theta).

    The cosine half-wave is wrapped onto the circle when it is wider than 2 pi.
    """
    family = canonical_family(family)
    width = validate_width(family, width)
    x = _wrap(phi)
    if family == "wedge":
        return np.where(np.abs(x) <= width / 2.0, 1.0 / math.sqrt(width), 0.0).astype(complex)
    if family == "cosine":
        half = math.pi * width / 2.0
        K = int(math.ceil((half + math.pi) / (2.0 * math.pi)))
        shifted = np.add.outer(x, 2.0 * math.pi * np.arange(-K, K + 1))
        wave = np.where(np.abs(shifted) <= half, np.cos(shifted / width), 0.0)
        return (math.sqrt(2.0 / (math.pi * width)) * wave.sum(axis=-1)).astype(complex)
    if family == "vonMises":
        kappa = 1.0 / (2.0 * width)
        return (np.exp(kappa * (np.cos(x) - 1.0)) / math.sqrt(2.0 * math.pi * ive(0, 2.0 * kappa))).astype(complex)
    if family == "truncatedGaussian":
        c = math.sqrt(width / (math.sqrt(math.pi) * math.erf(math.pi * width)))
        return (c * np.exp(-(width * x) ** 2 / 2.0)).astype(complex)
    if family == "wrappedGaussian":
        return np.sqrt(wrapped_gaussian_density(x, width)).astype(complex)
    if family == "coherent":
        return coherent_amplitude(phi, theta, ell)
    raise ParameterError(f"{family} has no angle-domain amplitude")


def _quadrature_grid(truncation: int, width: Optional[float], family: str) -> int:
    needed = max(8192, 8 * (2 * truncation + 1))
    if family in ("wrappedGaussian", "vonMises", "truncatedGaussian") and width:
        spread = width if family == "wrappedGaussian" else 1.0 / width
        needed = max(needed, int(64 * 2.0 * math.pi / spread))
    return 1 << int(math.ceil(math.log2(needed)))


def _quadrature_state(family: str, width: Optional[float], truncation: int, theta: float, ell: float) -> MomentumWavefunction:
    N = _quadrature_grid(truncation, width, family)
    samples = AngularSamples(angular_amplitude(family, width, angle_grid(N), ell=ell, theta=theta))
    return analyze(samples, truncation)


def _edged_quadrature_state(family: str, width: float, truncation: int) -> MomentumWavefunction:
    # even real amplitude with a jump at the support edge; QAWO integrates each cos(m phi) moment
    edge = width / 2.0 if family == "wedge" else math.pi
    amp = lambda x: float(angular_amplitude(family, width, np.array([x]))[0].real)
    half = np.empty(truncation + 1)
    half[0], _ = quad(amp, 0.0, edge, epsabs=1e-14, epsrel=1e-12, limit=200)
    for m in range(1, truncation + 1):
        half[m], _ = quad(amp, 0.0, edge, weight="cos", wvar=float(m), epsabs=1e-14, limit=200)
    coeffs = 2.0 * np.concatenate([half[:0:-1], half]) / SQRT_2PI
    return MomentumWavefunction.from_coefficients(coeffs.astype(complex))


# ---------------------------------------------------------------------------
# Construction
# ---------------------------------------------------------------------------

def _build(family: str, width: Optional[float], truncation: int, method: str, theta: float, ell: float) -> MomentumWavefunction:
    if family == "mathieu":
        state = solve_mode(width, 0, truncation=truncation).to_state()
        return state.padded(max(truncation, state.truncation))
    if method == "quadrature" and family in _EDGED:
        return _edged_quadrature_state(family, width, truncation)
    if method == "quadrature" or family == "wrappedGaussian":
        return _quadrature_state(family, width, truncation, theta, ell)
    m = np.arange(-truncation, truncation + 1)
    return MomentumWavefunction.from_coefficients(_coefficients(family, width, m, theta, ell))


def make_state(
    family: str,
    width: Optional[float] = None,
    mu: float = 0.0,
    ell: float = 0.0,
    truncation: Optional[int] = None,
    method: str = "closed",
) -> StatePackage:
    """
    Build a normalized family member.

    With ``truncation=None`` the truncation starts at 64 and doubles until
    the tail criterion holds (up to 4096). The wedge spectrum decays
    algebraically and is kept at the starting truncation, flagged as not
    converged.

    Args:
        family: Family name or alias
        width: alpha (wedge, cosine, vonMises, truncatedGaussian), sigma
            (wrappedGaussian) or q (mathieu); ignored for coherent
        mu: Center angle; theta for coherent states
        ell: Coherent log-radius
        truncation: Fixed M, or None for automatic growth
        method: "closed" (Fourier coefficients) or "quadrature" (sampled
            amplitude transformed with ``core.analyze``)

    Returns:
        StatePackage

    Raises:
        ParameterError: For invalid families or widths
    """
    family = canonical_family(family)
    width = validate_width(family, width)
    if method not in ("closed", "quadrature"):
        raise ParameterError(f"method must be 'closed' or 'quadrature', got {method!r}")
    if method == "quadrature" and family == "mathieu":
        raise ParameterError("mathieu states are built from their Fourier coefficients only")

    theta = mu if family == "coherent" else 0.0
    auto = truncation is None
    M = DEFAULT_TRUNCATION if auto else int(truncation)
    if M < 1:
        raise ParameterError(f"truncation must be >= 1, got {M}")

    state = _build(family, width, M, method, theta, ell)
    if auto and family not in _ALGEBRAIC:
        while not state.converged and M < MAX_TRUNCATION:
            M *= 2
            logger.debug(f"🔧 Growing {family} truncation to M={M}")
            state = _build(family, width, M, method, theta, ell)
    if not state.converged:
        logger.info(
            f"ℹ️  {family} state (width={width}) does not meet the tail criterion at M={state.truncation}"
        )

    if family != "coherent" and mu != 0.0:
        state = shift_state(state, angle_shift=mu)

    closed = _closed_form(family, width, theta, ell, state) if family != "mathieu" else _mathieu_closed_form(width)
    return StatePackage(
        family=family,
        width=width,
        center=float(mu),
        ell=float(ell),
        state=state,
        closed_form=closed,
        method=method,
    )


def _mathieu_closed_form(q: float) -> ClosedFormReport:
    point = mode_uncertainties(solve_mode(q, 0), cross_check=False)
    return ClosedFormReport(var_e=point.var_e, var_l=point.var_l)


def momentum_spectrum_closed_form(
    family: str,
    width: Optional[float] = None,
    m_range: Optional[Tuple[int, int]] = None,
    mu: float = 0.0,
    ell: float = 0.0,
) -> SpectrumClosedForm:
    """
    Closed-form p_m of a family over an inclusive range of m.

    Wedge: (alpha/2 pi) sinc^2(m alpha/2). Cosine: 4 alpha cos^2(pi m alpha/2) /
    (pi^2 (m^2 alpha^2 - 1)^2), renormalized on the circle for alpha > 2.
    von Mises: I_m^2(kappa)/I_0(2 kappa). Truncated Gaussian: exp(-m^2/alpha^2)
    (Re erf)^2 / (sqrt(pi) alpha erf(pi alpha)). Coherent: |w|^(2m) exp(-m^2)
    over theta_3(i ell | e^-1). The spectrum does not depend on the center.

    Raises:
        ParameterError: For the wrapped Gaussian (no closed form) or bad ranges
    """
    family = canonical_family(family)
    width = validate_width(family, width)
    lo, hi = m_range if m_range is not None else (-DEFAULT_TRUNCATION, DEFAULT_TRUNCATION)
    if lo > hi:
        raise ParameterError(f"m range must satisfy lo <= hi, got {(lo, hi)}")
    m = np.arange(lo, hi + 1)

    if family == "wrappedGaussian":
        raise ParameterError("the wrapped Gaussian has no closed-form momentum spectrum")
    if family == "mathieu":
        state = solve_mode(width, 0).to_state()
        pm = np.array([abs(state.amplitude(int(k))) ** 2 for k in m])
    elif family == "coherent":
        z = float(theta3(1j * ell, math.exp(-1.0)).real)
        pm = np.abs(_coherent_coefficients(mu, ell, m)) ** 2 / z
    else:
        pm = np.abs(_coefficients(family, width, m)) ** 2
        if family == "cosine" and width > 2.0:
            pm = pm / _cosine_wrapped_norm(width)
    return SpectrumClosedForm(family=family, params={"alpha": width, "mu": mu, "ell": ell}, m=m, pm=pm)


def _cosine_wrapped_norm(alpha: float) -> float:
    """Integral of |wrapped half-wave|^2 over the circle."""
    amp = lambda x: float(np.abs(angular_amplitude("cosine", alpha, np.array([x]))[0]) ** 2)
    half = math.pi * alpha / 2.0
    breaks = sorted({float(_wrap(np.array([s * half]))[0]) for s in (-1.0, 1.0)})
    value, _ = quad(amp, -math.pi, math.pi, points=breaks, limit=400, epsabs=1e-13, epsrel=1e-12)
    return value


# ---------------------------------------------------------------------------
# Eigen-relations
# ---------------------------------------------------------------------------

def _apply_s(psi: np.ndarray) -> np.ndarray:
    # (S psi)_m = (psi_{m+1} - psi_{m-1}) / (2i)
    up = np.zeros_like(psi)
    down = np.zeros_like(psi)
    up[:-1] = psi[1:]
    down[1:] = psi[:-1]
    return (up - down) / 2j


def _apply_c(psi: np.ndarray) -> np.ndarray:
    up = np.zeros_like(psi)
    down = np.zeros_like(psi)
    up[:-1] = psi[1:]
    down[1:] = psi[:-1]
    return (up + down) / 2.0


def coherent_ladder(truncation: int) -> Tuple[np.ndarray, np.ndarray]:
    """(m, d_m) of W|m> = exp(m - 1/2)|m-1> on [-M, M]."""
    m = np.arange(-truncation, truncation + 1)
    return m, np.exp(m - 0.5)


def verify_eigenrelations(pkg: StatePackage) -> EigenrelationReport:
    """
    Check the relation that defines a von Mises or coherent state.

    von Mises: residual of (L + i kappa S_mu) Psi = 0 with kappa = 1/(2 alpha),
    where S_mu is the sine measured from the center, and the saturation slack
    of (Delta S)^2 (Delta L)^2 >= <C>^2/4 on the centered state.

    coherent: residual of W Psi = w Psi with w = exp(i theta - ell), and the
    slack of (Delta Q)^2 (Delta P)^2 >= |<[Q, P]>|^2/4.

    Raises:
        ParameterError: For families without a defining eigen-relation
    """
    psi = pkg.state.coefficients
    m = pkg.state.indices().astype(float)

    if pkg.family == "vonMises":
        kappa = 1.0 / (2.0 * pkg.width)
        a = pkg.center
        rotated_s = math.cos(a) * _apply_s(psi) - math.sin(a) * _apply_c(psi)
        residual = float(np.linalg.norm(m * psi + 1j * kappa * rotated_s))
        centered = shift_state(pkg.state, angle_shift=-a) if a else pkg.state
        slack = relation_slacks(uncertainty_report(centered, cross_check=False))["cosine"]
        logger.debug(f"🔍 von Mises eigen-relation residual {residual:.2e}, saturation slack {slack:.2e}")
        return EigenrelationReport(
            family=pkg.family,
            relation="(L + i kappa S) Psi = 0",
            residual=residual,
            saturation_slack=float(slack),
            details={"kappa": kappa},
        )

    if pkg.family == "coherent":
        w = complex(np.exp(1j * pkg.center - pkg.ell))
        ladder = coherent_ladder(pkg.state.truncation)
        weights = ladder[1]
        lowered = np.zeros_like(psi)
        lowered[:-1] = weights[1:] * psi[1:]
        residual = float(np.linalg.norm(lowered - w * psi))
        pair = quadrature_pair(pkg.state, ladder)
        expected = float(np.sum(pkg.state.probabilities() * (np.exp(2 * m + 1) - np.exp(2 * m - 1))))
        logger.debug(f"🔍 Coherent eigen-relation residual {residual:.2e}, slack {pair['slack']:.2e}")
        return EigenrelationReport(
            family=pkg.family,
            relation="W Psi = w Psi",
            residual=residual,
            saturation_slack=float(pair["slack"]),
            details={
                "w": w,
                "var_q": pair["var_q"],
                "var_p": pair["var_p"],
                "commutator": pair["commutator"],
                "commutator_expected": 1j * expected,
            },
        )

    raise ParameterError(f"{pkg.family} states have no defining eigen-relation to verify")


# ---------------------------------------------------------------------------
# Sweeps and matched-variance comparisons
# ---------------------------------------------------------------------------

def family_statistics(family: str, width: float, window: Optional[int] = None) -> ClosedFormReport:
    """
    varE and varL of a family member, from closed forms where they exist.

    The wedge momentum spread is the window variance, by default truncated at
    the first spectral minimum.
    """
    family = canonical_family(family)
    width = validate_width(family, width)
    if family == "wedge":
        W = wedge_minimum_window(width, 1) if window is None else int(window)
        return ClosedFormReport(
            var_e=float(1.0 - np.sinc(width / (2.0 * math.pi)) ** 2),
            var_l=wedge_window_variance(width, W),
            window=W,
        )
    if family == "mathieu":
        return _mathieu_closed_form(width)
    if family in ("vonMises", "truncatedGaussian") or (family == "cosine" and width <= 2.0):
        return _closed_form(family, width, 0.0, 0.0, None)
    pkg = make_state(family, width)
    report = uncertainty_report(pkg.state, cross_check=False)
    return ClosedFormReport(var_e=pkg.closed_form.var_e, var_l=report.var_l)


def family_sweep(family: str, widths: Sequence[float], window: Optional[int] = None) -> pd.DataFrame:
    """
    varE, varL and product over a list of widths.

    Returns:
        DataFrame with columns family, width, varE, varL, product, window
    """
    family = canonical_family(family)
    if family == "coherent":
        raise ParameterError("coherent states have no width to sweep")

    def one(width: float) -> Dict[str, Any]:
        stats = family_statistics(family, width, window)
        return {
            "family": family,
            "width": float(width),
            "varE": stats.var_e,
            "varL": stats.var_l,
            "product": stats.product,
            "window": stats.window,
        }

    rows = parallel_map(one, [float(w) for w in widths])
    return pd.DataFrame(rows, columns=["family", "width", "varE", "varL", "product", "window"])


def _variance(family: str, width: float) -> float:
    return family_statistics(family, width).var_e


_BRACKETS: Dict[str, Tuple[float, float]] = {
    "vonMises": (1e-4, 1e4),
    "truncatedGaussian": (1e-3, 1e3),
    "wedge": (1e-6, 2.0 * math.pi),
    "cosine": (1e-4, 2.0),
}


def width_for_variance(family: str, var_e: float) -> float:
    """
    Width parameter of a family member with circular variance ``var_e``.

    Root finding in log-width on the monotone branch. The cosine family is
    searched on alpha <= 2 first and on wrapped widths beyond.

    Raises:
        ParameterError: If the variance is outside (0, 1) or unreachable
    """
    family = canonical_family(family)
    if not 0.0 < var_e < 1.0:
        raise ParameterError(f"circular variance must lie in (0, 1), got {var_e}")
    if family == "wrappedGaussian":
        return math.sqrt(-math.log(1.0 - var_e))
    if family == "mathieu":
        return q_for_variance(var_e)
    if family == "coherent":
        raise ParameterError("coherent states have no width parameter")

    lo, hi = _BRACKETS[family]
    f = lambda t: _variance(family, math.exp(t)) - var_e
    t_lo, t_hi = math.log(lo), math.log(hi)
    f_lo, f_hi = f(t_lo), f(t_hi)

    if family == "cosine" and f_lo * f_hi > 0:
        # extend over wrapped widths
        grid = np.geomspace(2.0, 64.0, 25)
        previous = 2.0
        for alpha in grid[1:]:
            if _variance(family, float(alpha)) >= var_e:
                t_lo, t_hi = math.log(previous), math.log(float(alpha))
                f_lo, f_hi = f(t_lo), f(t_hi)
                break
            previous = float(alpha)

    if f_lo * f_hi > 0:
        raise ParameterError(
            f"varE={var_e} is not reachable by the {family} family",
            diagnostics={"family": family, "varE_low": f_lo + var_e, "varE_high": f_hi + var_e},
        )
    t = brentq(f, t_lo, t_hi, xtol=1e-14, rtol=1e-15, maxiter=200)
    return math.exp(t)


def matched_variance_table(
    var_grid: Sequence[float],
    families: Sequence[str] = ("mathieu", "vonMises", "truncatedGaussian", "cosine", "wrappedGaussian", "wedge"),
) -> pd.DataFrame:
    """
    Every family placed on a shared circular-variance grid.

    Unreachable (family, varE) pairs are kept with NaN width and product.

    Returns:
        Long table with columns family, varE, width, varL, product
    """
    jobs = [(canonical_family(f), float(v)) for f in families for v in var_grid]

    def one(job: Tuple[str, float]) -> Dict[str, Any]:
        family, var_e = job
        try:
            width = width_for_variance(family, var_e)
            stats = family_statistics(family, width)
        except (ParameterError, ConvergenceError) as e:
            logger.debug(f"⏭️  Skipping {family} at varE={var_e}: {e}")
            return {"family": family, "varE": var_e, "width": np.nan, "varL": np.nan, "product": np.nan}
        return {
            "family": family,
            "varE": var_e,
            "width": width,
            "varL": stats.var_l,
            "product": math.sqrt(var_e * stats.var_l),
        }

    rows = parallel_map(one, jobs)
    return pd.DataFrame(rows, columns=["family", "varE", "width", "varL", "product"])
