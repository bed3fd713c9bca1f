"""
OAM Spectrum Bench
==================

Simulation of the measurement chain:

1. Gaussian beam (waist w0, unit power) through an amplitude mask t_A(phi)
   with mode decomposition t_A = sum_m a_m exp(i m phi)
2. Fresnel propagation over z, helicity by helicity:

       u_m(r) = 2 pi u0 i^m h0 exp(-i k r^2 / 2z) A_m(r)
       A_m(r) = integral_0^inf exp(-alpha r'^2) J_m(beta r r') r' dr'

   with alpha = 1/w0^2 + i k/(2z), beta = k/z, h0 = i/(lambda z)
3. Spiral phase analyzer exp(-i N phi) and a Fourier lens f'
4. Power through a pinhole of radius R, i.e. spatial frequencies below
   nu0 = R/(lambda f')

Each vortex u_m carries unit power, so the detected spectrum of a mask is
C |a|^2 with the response matrix C[N][m]. The azimuthal integral removes all
cross terms between helicities, hence powers do not depend on the phase
factors i^(m-N) of the transformed fields.
"""

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from loguru import logger
from scipy.integrate import cumulative_trapezoid, quad, trapezoid
from scipy.special import ive, jv

from .config import NoiseConfig, OpticalConfig
from .core import MomentumWavefunction
from .errors import ApertureError, ParameterError, PropagationError
from .states import StatePackage
from .utils import parallel_map, safe_divide

PASSIVE_TOLERANCE = 1e-12
QUADRATURE_EXTENT = 6.0  # in units of w0
QUADRATURE_LIMIT = 4000
DROPPED_POWER_WARNING = 1e-6


@dataclass(frozen=True)
class MaskSpectrum:
    """Mask Fourier coefficients a_m for m = offset..offset+len-1."""

    coefficients: np.ndarray
    offset: int = 0

    def __post_init__(self):
        coeffs = np.array(self.coefficients, dtype=complex).ravel()
        coeffs.setflags(write=False)
        object.__setattr__(self, "coefficients", coeffs)

    @property
    def m(self) -> np.ndarray:
        return np.arange(self.offset, self.offset + self.coefficients.size)

    def amplitude(self, m: int) -> complex:
        i = m - self.offset
        if 0 <= i < self.coefficients.size:
            return complex(self.coefficients[i])
        return 0j

    def powers(self, helicities: Sequence[int]) -> np.ndarray:
        """|a_m|^2 on the given helicities."""
        return np.array([abs(self.amplitude(int(m))) ** 2 for m in helicities])

    def total_power(self) -> float:
        return float(np.sum(np.abs(self.coefficients) ** 2))

    def transmission(self, grid_size: int = 4096) -> np.ndarray:
        """t_A(phi_j) = sum_m a_m exp(i m phi_j)."""
        phi = 2.0 * math.pi * np.arange(grid_size) / grid_size
        return np.exp(1j * np.outer(phi, self.m)) @ self.coefficients

    @classmethod
    def from_mapping(cls, amplitudes: Dict[int, complex]) -> "MaskSpectrum":
        lo, hi = min(amplitudes), max(amplitudes)
        coeffs = np.zeros(hi - lo + 1, dtype=complex)
        for m, a in amplitudes.items():
            coeffs[m - lo] = a
        return cls(coeffs, lo)


@dataclass(frozen=True)
class RadialField:
    """Unit-power radial profile u_m(r) at the analyzer plane and its mask weight a_m."""

    m: int
    r: np.ndarray
    values: np.ndarray
    amplitude: complex = 1.0 + 0j

    @property
    def power(self) -> float:
        return mode_power(self)


@dataclass(frozen=True)
class FourierDecomposition:
    """
    Fourier-plane field behind analyzer N.

    ``ubar`` is the order-0 transform of u_N (None if a_N = 0) and ``vbar[m]``
    the order m-N transform of u_m, both on the frequency grid ``nu``.
    """

    charge: int
    nu: np.ndarray
    ubar: Optional[np.ndarray]
    vbar: Dict[int, np.ndarray]
    amplitudes: Dict[int, complex]


@dataclass(frozen=True)
class ResponseMatrix:
    """C[N][m]: power detected by analyzer N from a unit-power vortex m."""

    helicities: Tuple[int, ...]
    matrix: np.ndarray
    aperture_radius: float

    def index(self, m: int) -> int:
        return self.helicities.index(int(m))

    def entry(self, N: int, m: int) -> float:
        return float(self.matrix[self.index(N), self.index(m)])

    def apply(self, powers: np.ndarray) -> np.ndarray:
        return self.matrix @ np.asarray(powers, dtype=float)

    def diagonal_dominance(self, N: int) -> float:
        """C[N][N] over the crosstalk sum of row N."""
        row = self.matrix[self.index(N)]
        off = float(np.sum(row)) - row[self.index(N)]
        return safe_divide(float(row[self.index(N)]), off, default=math.inf)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(self.matrix, index=pd.Index(self.helicities, name="N"), columns=list(self.helicities))


@dataclass(frozen=True)
class MeasuredSpectrum:
    """Detected powers P(N) over the analyzer charges."""

    helicities: np.ndarray
    power: np.ndarray
    noiseless: np.ndarray
    mask: MaskSpectrum
    dropped_power: float = 0.0

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({"N": self.helicities, "power": self.power})


@dataclass
class ApertureScan:
    """
    Cumulative detected power per (N, m) over the frequency grid.

    Evaluating the response matrix for another aperture only interpolates
    these curves.
    """

    helicities: Tuple[int, ...]
    nu: np.ndarray
    cumulative: np.ndarray  # [N, m, nu]
    wavelength: float
    focal_length: float

    def matrix_at(self, radius: float) -> np.ndarray:
        nu0 = radius / (self.wavelength * self.focal_length)
        if nu0 > self.nu[-1] * (1.0 + 1e-12):
            raise ApertureError(
                f"aperture frequency {nu0:.4g} 1/m exceeds the grid maximum {self.nu[-1]:.4g} 1/m",
                diagnostics={"nu_aperture": nu0, "nu_max": float(self.nu[-1]), "radius": radius},
            )
        n = len(self.helicities)
        out = np.empty((n, n))
        for i in range(n):
            for j in range(n):
                out[i, j] = np.interp(nu0, self.nu, self.cumulative[i, j])
        return out

    def response(self, radius: float) -> ResponseMatrix:
        return ResponseMatrix(self.helicities, self.matrix_at(radius), float(radius))


# ---------------------------------------------------------------------------
# Mask preparation
# ---------------------------------------------------------------------------

def mask_spectrum(mask_samples: Sequence[complex]) -> MaskSpectrum:
    """
    Mode decomposition a_m = (1/2 pi) integral t_A exp(-i m phi) dphi.

    Args:
        mask_samples: t_A on the uniform grid phi_j = 2 pi j / N

    Returns:
        MaskSpectrum over m = -(N-1)//2 .. N//2

    Raises:
        ParameterError: If |t_A| exceeds 1 (active mask)
    """
    t = np.asarray(mask_samples, dtype=complex).ravel()
    if t.size == 0:
        raise ParameterError("mask needs at least one sample")
    peak = float(np.max(np.abs(t)))
    if peak > 1.0 + PASSIVE_TOLERANCE:
        raise ParameterError(f"mask transmission must satisfy |t_A| <= 1, got {peak:.6g}")
    N = t.size
    a = np.fft.fft(t) / N
    lo = -((N - 1) // 2)
    m = np.arange(lo, lo + N)
    return MaskSpectrum(a[m % N], lo)


def state_mask(
    state: Union[MomentumWavefunction, StatePackage],
    helicity_range: Tuple[int, int],
    grid_size: int = 4096,
) -> Tuple[MaskSpectrum, float]:
    """
    Passive mask whose OAM spectrum reproduces a state's p_m.

    a_m is proportional to Psi_m on the helicity range and scaled so that
    max |t_A| = 1.

    Returns:
        (mask, dropped) with dropped the state probability outside the range
    """
    if isinstance(state, StatePackage):
        state = state.state
    lo, hi = helicity_range
    m = np.arange(lo, hi + 1)
    psi = np.array([state.amplitude(int(k)) for k in m])
    kept = float(np.sum(np.abs(psi) ** 2))
    dropped = max(1.0 - kept, 0.0)
    if kept == 0.0:
        raise ParameterError(f"state has no weight on helicities [{lo}, {hi}]")
    if dropped > DROPPED_POWER_WARNING:
        logger.warning(f"⚠️  {dropped:.3e} of the state lies outside helicities [{lo}, {hi}] and is not prepared")
    raw = MaskSpectrum(psi, lo)
    peak = float(np.max(np.abs(raw.transmission(grid_size))))
    return MaskSpectrum(psi / peak, lo), dropped


# ---------------------------------------------------------------------------
# Propagation
# ---------------------------------------------------------------------------

def beam_radius(cfg: OpticalConfig) -> float:
    """w(z) = w0 sqrt(1 + (z/z_R)^2)."""
    return cfg.beam_radius


def radial_grid(cfg: OpticalConfig) -> np.ndarray:
    return np.linspace(0.0, cfg.r_max, cfg.radial_samples)


def frequency_grid(cfg: OpticalConfig) -> np.ndarray:
    return np.linspace(0.0, cfg.nu_max, cfg.frequency_samples)


def _check_distance(cfg: OpticalConfig) -> None:
    if cfg.distance <= 0:
        raise PropagationError(
            "propagation distance must be > 0 (the Fresnel kernel is singular at z = 0)",
            diagnostics={"distance": cfg.distance},
        )


def _beam_parameters(cfg: OpticalConfig) -> Tuple[complex, float, complex]:
    k = cfg.wavenumber
    alpha = 1.0 / cfg.waist ** 2 + 1j * k / (2.0 * cfg.distance)
    beta = k / cfg.distance
    return alpha, beta, beta * beta / (8.0 * alpha)


def _a_closed_form(m: int, r: np.ndarray, cfg: OpticalConfig) -> np.ndarray:
    alpha, beta, Q = _beam_parameters(cfg)
    if m == 0:
        return np.exp(-beta * beta * r * r / (4.0 * alpha)) / (2.0 * alpha)
    n = abs(m)
    x = Q * r * r
    with np.errstate(all="ignore"):
        # exp(-x) I_nu(x) = ive(nu, x) exp(-i Im x) for Re x > 0
        bracket = (ive((n - 1) / 2.0, x) - ive((n + 1) / 2.0, x)) * np.exp(-1j * x.imag)
        out = r * (Q / beta) * np.sqrt(math.pi / alpha) * bracket
    out = np.where(r == 0.0, 0.0, out)
    return out * (-1) ** n if m < 0 else out


def _a_quadrature(m: int, r: np.ndarray, cfg: OpticalConfig) -> np.ndarray:
    w0 = cfg.waist
    gamma = cfg.wavenumber * w0 * w0 / (2.0 * cfg.distance)
    out = np.empty(r.size, dtype=complex)
    for i, radius in enumerate(r):
        b = cfg.wavenumber / cfg.distance * radius * w0
        parts = []
        for fn in (np.cos, np.sin):
            integrand = lambda s, fn=fn: math.exp(-s * s) * fn(gamma * s * s) * jv(m, b * s) * s
            result = quad(integrand, 0.0, QUADRATURE_EXTENT, limit=QUADRATURE_LIMIT,
                          epsabs=1e-14, epsrel=1e-11, full_output=1)
            value, abserr = result[0], result[1]
            if len(result) > 3 and abserr > 1e-9 * max(1.0, abs(value)):
                raise PropagationError(
                    f"radial quadrature did not converge for m={m} at r={radius:.4g} m",
                    diagnostics={"m": m, "r": float(radius), "abserr": abserr, "message": str(result[3])},
                )
            parts.append(value)
        # exp(-i gamma s^2) = cos - i sin
        out[i] = w0 * w0 * (parts[0] - 1j * parts[1])
    return out


def mode_field(
    m: int,
    cfg: OpticalConfig,
    r: Optional[np.ndarray] = None,
    method: str = "closedForm",
) -> RadialField:
    """
    Unit-power vortex exp(i m phi) u_G propagated to the analyzer plane.

    Args:
        m: Helicity
        cfg: Bench geometry
        r: Radii (defaults to the configured radial grid)
        method: "closedForm" (Bessel-I form) or "quadrature" (adaptive
            integration of the Fresnel integral)

    Raises:
        PropagationError: For z = 0 or a failing quadrature
    """
    _check_distance(cfg)
    r = radial_grid(cfg) if r is None else np.asarray(r, dtype=float)
    if method == "closedForm":
        A = _a_closed_form(m, r, cfg)
    elif method == "quadrature":
        A = _a_quadrature(m, r, cfg)
    else:
        raise ParameterError(f"method must be 'closedForm' or 'quadrature', got {method!r}")
    u0 = math.sqrt(2.0 / (math.pi * cfg.waist ** 2))
    h0 = 1j / (cfg.wavelength * cfg.distance)
    chirp = np.exp(-1j * cfg.wavenumber * r * r / (2.0 * cfg.distance))
    values = 2.0 * math.pi * u0 * (1j ** (m % 4)) * h0 * chirp * A
    return RadialField(m=int(m), r=r, values=values)


def propagate(mask: MaskSpectrum, cfg: OpticalConfig, method: str = "closedForm") -> List[RadialField]:
    """
    Propagate every helicity of a mask that lies in the configured range.

    Returns:
        One RadialField per nonzero a_m, carrying a_m as its amplitude
    """
    _check_distance(cfg)
    lo, hi = cfg.helicity_range
    fields = []
    for m in mask.m:
        a = mask.amplitude(int(m))
        if a == 0 or not lo <= m <= hi:
            continue
        base = mode_field(int(m), cfg, method=method)
        fields.append(RadialField(m=base.m, r=base.r, values=base.values, amplitude=a))
    logger.debug(f"🔭 Propagated {len(fields)} helicities over z={cfg.distance:g} m ({method})")
    return fields


def mode_power(field: RadialField) -> float:
    """2 pi integral |u_m|^2 r dr on the field's grid."""
    return float(2.0 * math.pi * trapezoid(np.abs(field.values) ** 2 * field.r, field.r))


# ---------------------------------------------------------------------------
# Analyzer and detection
# ---------------------------------------------------------------------------

def _hankel_kernel(order: int, nu: np.ndarray, r: np.ndarray) -> np.ndarray:
    """2 pi J_|l|(2 pi nu r) r times trapezoid weights."""
    weights = np.full(r.size, r[1] - r[0])
    weights[0] *= 0.5
    weights[-1] *= 0.5
    return 2.0 * math.pi * jv(abs(order), 2.0 * math.pi * np.outer(nu, r)) * (r * weights)


def hankel_transform(field: RadialField, order: int, nu: np.ndarray) -> np.ndarray:
    """F(nu) = 2 pi integral u(r) J_l(2 pi nu r) r dr, with J_{-l} = (-1)^l J_l."""
    out = _hankel_kernel(order, nu, field.r) @ field.values
    return out * (-1) ** abs(order) if order < 0 else out


def analyzer_field(fields: Sequence[RadialField], charge: int, cfg: OpticalConfig) -> FourierDecomposition:
    """
    Fourier-plane components behind the spiral analyzer of charge N.

    The mode m = N loses its vortex and transforms with J_0; every other mode
    keeps order m - N and has a null at nu = 0.
    """
    nu = frequency_grid(cfg)
    ubar = None
    vbar: Dict[int, np.ndarray] = {}
    amplitudes: Dict[int, complex] = {}
    for f in fields:
        amplitudes[f.m] = complex(f.amplitude)
        transformed = hankel_transform(f, f.m - charge, nu)
        if f.m == charge:
            ubar = transformed
        else:
            vbar[f.m] = transformed
    return FourierDecomposition(charge=int(charge), nu=nu, ubar=ubar, vbar=vbar, amplitudes=amplitudes)


def _power_below(nu: np.ndarray, spectrum: np.ndarray, nu0: float) -> float:
    cumulative = 2.0 * math.pi * cumulative_trapezoid(np.abs(spectrum) ** 2 * nu, nu, initial=0.0)
    return float(np.interp(nu0, nu, cumulative))


def detected_power(decomposition: FourierDecomposition, cfg: OpticalConfig) -> Tuple[float, float]:
    """
    Signal and crosstalk power through the pinhole.

    P_N = 2 pi |a_N|^2 integral_0^nu0 |ubar_N|^2 nu dnu and
    P_C = 2 pi sum_{m != N} |a_m|^2 integral_0^nu0 |vbar_m|^2 nu dnu.

    Raises:
        ApertureError: If nu0 lies beyond the frequency grid
    """
    nu = decomposition.nu
    nu0 = cfg.nu_aperture
    if nu0 > nu[-1] * (1.0 + 1e-12):
        raise ApertureError(
            f"aperture frequency {nu0:.4g} 1/m exceeds the grid maximum {nu[-1]:.4g} 1/m",
            diagnostics={"nu_aperture": nu0, "nu_max": float(nu[-1])},
        )
    p_signal = 0.0
    if decomposition.ubar is not None:
        a = decomposition.amplitudes[decomposition.charge]
        p_signal = abs(a) ** 2 * _power_below(nu, decomposition.ubar, nu0)
    p_cross = sum(
        abs(decomposition.amplitudes[m]) ** 2 * _power_below(nu, v, nu0)
        for m, v in decomposition.vbar.items()
    )
    return p_signal, float(p_cross)


# ---------------------------------------------------------------------------
# Response matrix
# ---------------------------------------------------------------------------

def _scan_key(cfg: OpticalConfig) -> OpticalConfig:
    # the aperture only enters through interpolation of the cumulative curves
    return cfg.model_copy(update={"aperture_radius": OpticalConfig.model_fields["aperture_radius"].default})


@lru_cache(maxsize=8)
def _cached_scan(cfg: OpticalConfig) -> ApertureScan:
    helicities = tuple(cfg.helicities)
    r = radial_grid(cfg)
    nu = frequency_grid(cfg)
    modes = np.stack([mode_field(m, cfg, r).values for m in helicities], axis=1)  # [r, m]
    n = len(helicities)
    hel = np.array(helicities)
    order = hel[None, :] - hel[:, None]  # order[N, m] = m - N
    max_order = int(np.max(np.abs(order)))

    def transforms(l: int) -> np.ndarray:
        return _hankel_kernel(l, nu, r) @ modes  # [nu, m]

    logger.info(f"🔭 Computing response curves for {n} helicities ({max_order + 1} Hankel orders)")
    by_order = parallel_map(transforms, range(max_order + 1))

    cumulative = np.empty((n, n, nu.size))
    for i in range(n):
        for j in range(n):
            spectrum = by_order[abs(order[i, j])][:, j]
            cumulative[i, j] = 2.0 * math.pi * cumulative_trapezoid(np.abs(spectrum) ** 2 * nu, nu, initial=0.0)
    return ApertureScan(helicities, nu, cumulative, cfg.wavelength, cfg.focal_length)


def aperture_scan(cfg: OpticalConfig) -> ApertureScan:
    """Cumulative detected-power curves for every (N, m); cached per geometry."""
    _check_distance(cfg)
    return _cached_scan(_scan_key(cfg))


def response_matrix(cfg: OpticalConfig) -> ResponseMatrix:
    """
    C[N][m] over the configured helicity range at the configured aperture.

    Raises:
        ApertureError: If nu0 exceeds the frequency grid
        PropagationError: For z = 0
    """
    return aperture_scan(cfg).response(cfg.aperture_radius)


def simulate_spectrum(
    source: Union[MomentumWavefunction, StatePackage, MaskSpectrum],
    cfg: OpticalConfig,
    noise: Optional[NoiseConfig] = None,
    response: Optional[ResponseMatrix] = None,
) -> MeasuredSpectrum:
    """
    Detected powers P(N) for every analyzer charge in the helicity range.

    A state is first mapped to its passive mask. Noise, when requested, is
    multiplicative Gaussian P (1 + level xi), clipped at zero.
    """
    dropped = 0.0
    if isinstance(source, MaskSpectrum):
        mask = source
    else:
        mask, dropped = state_mask(source, cfg.helicity_range)
    C = response if response is not None else response_matrix(cfg)
    clean = C.apply(mask.powers(C.helicities))
    measured = clean.copy()
    if noise is not None and noise.relative_level > 0:
        rng = np.random.default_rng(noise.seed)
        measured = np.clip(clean * (1.0 + noise.relative_level * rng.standard_normal(clean.size)), 0.0, None)
    return MeasuredSpectrum(
        helicities=np.array(C.helicities),
        power=measured,
        noiseless=clean,
        mask=mask,
        dropped_power=dropped,
    )


@dataclass(frozen=True)
class ApertureReport:
    """Optimal pinhole radius and the scan it was chosen from."""

    radius: float
    table: pd.DataFrame = field(repr=False)


def optimize_aperture(
    cfg: OpticalConfig,
    mode_set: Iterable[int],
    radii: Optional[Sequence[float]] = None,
) -> ApertureReport:
    """
    Pinhole radius minimizing lost signal plus crosstalk over a mode set.

    loss(R) = sum_N (1 - C_R[N][N]) and crosstalk(R) = sum_{N != m} C_R[N][m]
    over N, m in the set. Ties go to the larger radius.

    Args:
        cfg: Bench geometry
        mode_set: Helicities that should be separated
        radii: Scan grid; defaults to 0.05..5 focal-spot radii lambda f'/(pi w0)

    Raises:
        ParameterError: For an empty set or modes outside the range
        ApertureError: For a degenerate radius grid
    """
    modes = sorted({int(m) for m in mode_set})
    if not modes:
        raise ParameterError("mode set must not be empty")
    lo, hi = cfg.helicity_range
    if modes[0] < lo or modes[-1] > hi:
        raise ParameterError(f"mode set {modes} exceeds helicity range {cfg.helicity_range}")
    if radii is None:
        spot = cfg.wavelength * cfg.focal_length / (math.pi * cfg.waist)
        radii = np.geomspace(0.05, 5.0, 60) * spot
    radii = np.asarray(sorted(float(r) for r in radii))
    if radii.size < 2 or radii[0] <= 0 or np.any(np.diff(radii) <= 0):
        raise ApertureError(
            "aperture scan needs at least two distinct positive radii", diagnostics={"radii": radii.tolist()}
        )

    scan = aperture_scan(cfg)
    idx = [scan.helicities.index(m) for m in modes]
    rows = []
    for R in radii:
        C = scan.matrix_at(R)[np.ix_(idx, idx)]
        loss = float(np.sum(1.0 - np.diag(C)))
        crosstalk = float(np.sum(C) - np.trace(C))
        rows.append({"radius": R, "loss": loss, "crosstalk": crosstalk, "objective": loss + crosstalk})
    table = pd.DataFrame(rows)
    objective = table["objective"].to_numpy()
    best = int(len(objective) - 1 - np.argmin(objective[::-1]))
    logger.info(f"🎯 Optimal aperture radius {radii[best]:.3e} m for modes {modes}")
    return ApertureReport(radius=float(radii[best]), table=table)
