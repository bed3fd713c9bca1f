"""
Quantum Mechanics on the Circle
===============================

Canonical state representation and the angle <-> angular-momentum Fourier pair.

A state is stored by its momentum amplitudes Psi_m, m = -M..M. The angle
representation is

    Psi(phi) = (1/sqrt(2 pi)) sum_m exp(-i m phi) Psi_m

so the shift operator E|m> = |m-1> acts as multiplication by exp(i phi), the
angular momentum acts as L = i d/dphi, and an angle shift Psi_m -> exp(i m a) Psi_m
moves the angular density by +a and multiplies <E> by exp(i a).

Circular statistics use the unitary E rather than a raw angle operator:

- circular variance (Delta E)^2 = 1 - |<E>|^2
- C = (E + E^dagger)/2, S = (E - E^dagger)/(2i), with C^2 = (E^2 + E^dagger^2 + 2)/4
- dispersion relation (Delta E)^2 (Delta L)^2 >= (1 - (Delta E)^2)/4
- Robertson pairs from [C, L] = iS and [S, L] = -iC:
  (Delta S)^2 (Delta L)^2 >= <C>^2/4 and (Delta C)^2 (Delta L)^2 >= <S>^2/4

Example:
    >>> state = MomentumWavefunction.from_coefficients([1, 1], offset=0)
    >>> report = uncertainty_report(state)
    >>> round(report.var_e, 3)
    0.75
"""

import math
from dataclasses import dataclass, field
from typing import Any, Dict, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
from loguru import logger
from scipy.special import ive

from .errors import KernelError, NormalizationError, TruncationError

DEFAULT_TRUNCATION = 64
DEFAULT_GRID_SIZE = 1024
NORMALIZATION_TOLERANCE = 1e-10
TAIL_TOLERANCE = 1e-12

SQRT_2PI = math.sqrt(2.0 * math.pi)


@dataclass(frozen=True)
class MomentumWavefunction:
    """
    Normalized amplitudes Psi_m on the integer grid m = -M..M.

    ``coefficients[i]`` holds Psi_{i - M}. The array is copied and made
    read-only on construction; normalization is checked, not repaired
    (use ``from_coefficients`` to normalize).
    """

    coefficients: np.ndarray

    def __post_init__(self):
        coeffs = np.array(self.coefficients, dtype=complex).ravel()
        if coeffs.size % 2 == 0:
            raise TruncationError(f"coefficient array must have odd length 2M+1, got {coeffs.size}")
        total = float(np.sum(np.abs(coeffs) ** 2))
        if abs(total - 1.0) > NORMALIZATION_TOLERANCE:
            raise NormalizationError(
                f"state is not normalized: sum |Psi_m|^2 = {total:.12g}",
                diagnostics={"norm": total},
            )
        coeffs.setflags(write=False)
        object.__setattr__(self, "coefficients", coeffs)

    @classmethod
    def from_coefficients(
        cls,
        coefficients: Sequence[complex],
        truncation: Optional[int] = None,
        offset: Optional[int] = None,
    ) -> "MomentumWavefunction":
        """
        Build a normalized state from raw amplitudes.

        Args:
            coefficients: Amplitudes for consecutive m values
            truncation: Target M (zero padded); defaults to the smallest fitting M
            offset: m value of ``coefficients[0]``; defaults to centering (-M)

        Raises:
            NormalizationError: If every amplitude vanishes
            TruncationError: If the amplitudes do not fit into [-M, M]
        """
        raw = np.asarray(coefficients, dtype=complex).ravel()
        if offset is None:
            if raw.size % 2 == 0:
                raise TruncationError("centered coefficients need odd length; pass offset explicitly")
            offset = -(raw.size // 2)
        last = offset + raw.size - 1
        needed = max(abs(offset), abs(last))
        M = needed if truncation is None else int(truncation)
        if M < needed:
            raise TruncationError(f"amplitudes span m in [{offset}, {last}], outside truncation M={M}")
        padded = np.zeros(2 * M + 1, dtype=complex)
        padded[offset + M:last + M + 1] = raw
        norm = math.sqrt(float(np.sum(np.abs(padded) ** 2)))
        if norm == 0.0 or not np.isfinite(norm):
            raise NormalizationError("cannot normalize a vanishing or non-finite state")
        return cls(padded / norm)

    @classmethod
    def basis(cls, m: int, truncation: int = DEFAULT_TRUNCATION) -> "MomentumWavefunction":
        """Momentum eigenstate |m>."""
        if abs(m) > truncation:
            raise TruncationError(f"|m|={abs(m)} exceeds truncation M={truncation}")
        coeffs = np.zeros(2 * truncation + 1, dtype=complex)
        coeffs[m + truncation] = 1.0
        return cls(coeffs)

    @classmethod
    def from_mapping(cls, amplitudes: Mapping[int, complex], truncation: int = DEFAULT_TRUNCATION) -> "MomentumWavefunction":
        """Build a state from ``{m: amplitude}``."""
        coeffs = np.zeros(2 * truncation + 1, dtype=complex)
        for m, amp in amplitudes.items():
            if abs(m) > truncation:
                raise TruncationError(f"|m|={abs(m)} exceeds truncation M={truncation}")
            coeffs[m + truncation] = amp
        return cls.from_coefficients(coeffs)

    @property
    def truncation(self) -> int:
        return (self.coefficients.size - 1) // 2

    @property
    def converged(self) -> bool:
        """True when both edge probabilities are below the tail criterion."""
        p = self.probabilities()
        return bool(p[0] <= TAIL_TOLERANCE and p[-1] <= TAIL_TOLERANCE)

    def indices(self) -> np.ndarray:
        M = self.truncation
        return np.arange(-M, M + 1)

    def probabilities(self) -> np.ndarray:
        return np.abs(self.coefficients) ** 2

    def amplitude(self, m: int) -> complex:
        M = self.truncation
        if abs(m) > M:
            return 0j
        return complex(self.coefficients[m + M])

    def padded(self, truncation: int) -> "MomentumWavefunction":
        """Same state on a larger truncation."""
        M = self.truncation
        if truncation < M:
            raise TruncationError(f"cannot pad M={M} down to {truncation}")
        coeffs = np.zeros(2 * truncation + 1, dtype=complex)
        coeffs[truncation - M:truncation + M + 1] = self.coefficients
        return MomentumWavefunction(coeffs)

    def to_json(self) -> Dict[str, Any]:
        """Serialize as ``{"M": int, "re": [...], "im": [...]}`` ordered m = -M..M."""
        return {
            "M": self.truncation,
            "re": [float(x) for x in self.coefficients.real],
            "im": [float(x) for x in self.coefficients.imag],
        }

    @classmethod
    def from_json(cls, data: Mapping[str, Any]) -> "MomentumWavefunction":
        M = int(data["M"])
        re = np.asarray(data["re"], dtype=float)
        im = np.asarray(data.get("im", np.zeros_like(re)), dtype=float)
        if re.size != 2 * M + 1 or im.size != 2 * M + 1:
            raise TruncationError(f"expected {2 * M + 1} amplitudes for M={M}, got {re.size}/{im.size}")
        return cls(re + 1j * im)


@dataclass(frozen=True)
class AngularSamples:
    """Complex amplitude Psi(phi_j) on phi_j = 2 pi j / N, j = 0..N-1."""

    values: np.ndarray

    def __post_init__(self):
        values = np.array(self.values, dtype=complex).ravel()
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def grid_size(self) -> int:
        return self.values.size

    def phi(self) -> np.ndarray:
        return angle_grid(self.grid_size)

    def norm(self) -> float:
        """(2 pi / N) sum_j |Psi(phi_j)|^2."""
        return float(2.0 * math.pi / self.grid_size * np.sum(np.abs(self.values) ** 2))


@dataclass(frozen=True)
class UncertaintyReport:
    """Circular and angular-momentum statistics of a pure state."""

    mean_e: complex
    mean_l: float
    var_e: float
    var_l: float
    var_c: float
    var_s: float
    product: float
    quadrature_deviation: float = 0.0

    @property
    def mean_c(self) -> float:
        return float(self.mean_e.real)

    @property
    def mean_s(self) -> float:
        return float(self.mean_e.imag)

    def as_dict(self) -> Dict[str, float]:
        return {
            "mean_e_re": float(self.mean_e.real),
            "mean_e_im": float(self.mean_e.imag),
            "mean_l": self.mean_l,
            "var_e": self.var_e,
            "var_l": self.var_l,
            "var_c": self.var_c,
            "var_s": self.var_s,
            "product": self.product,
        }


@dataclass(frozen=True)
class PovmKernel:
    """
    Shift-covariant smoothing of the ideal angle projectors.

    ``lambdas[i]`` holds lambda_{i - Lmax}; ``lambdas=None`` is the ideal
    measurement (lambda_l = 1 for every l, K = delta). The kernel in the
    angle domain is K(phi) = (1/2 pi) sum_l lambda_l exp(i l phi).
    """

    lambdas: Optional[np.ndarray] = None
    label: str = field(default="custom", compare=False)

    def __post_init__(self):
        if self.lambdas is None:
            return
        lam = np.array(self.lambdas, dtype=complex).ravel()
        if lam.size % 2 == 0:
            raise KernelError(f"lambdas must cover l = -L..L (odd length), got {lam.size}")
        L = lam.size // 2
        if abs(lam[L] - 1.0) > 1e-12:
            raise KernelError(f"lambda_0 must equal 1 (completeness), got {lam[L]}")
        if np.max(np.abs(lam - np.conj(lam[::-1]))) > 1e-12:
            raise KernelError("lambda_{-l} must equal conj(lambda_l)")
        if np.max(np.abs(lam)) > 1.0 + 1e-12:
            raise KernelError(f"|lambda_l| must not exceed 1, got max {np.max(np.abs(lam)):.6g}")
        lam.setflags(write=False)
        object.__setattr__(self, "lambdas", lam)
        grid = max(1024, 8 * L + 8)
        k_min = float(np.min(self.kernel_samples(grid)))
        if k_min < -1e-12:
            raise KernelError(f"kernel K(phi) is negative (min {k_min:.3e})", diagnostics={"min": k_min})

    @property
    def is_ideal(self) -> bool:
        return self.lambdas is None

    @property
    def lmax(self) -> Optional[int]:
        return None if self.lambdas is None else self.lambdas.size // 2

    def coefficient(self, l: int) -> complex:
        if self.lambdas is None:
            return 1.0 + 0j
        L = self.lmax
        if abs(l) > L:
            return 0j
        return complex(self.lambdas[l + L])

    def multipliers(self, grid_size: int) -> np.ndarray:
        """lambda_n laid out in FFT order for an N-point grid."""
        n = np.rint(np.fft.fftfreq(grid_size, d=1.0 / grid_size)).astype(int)
        if self.lambdas is None:
            return np.ones(grid_size, dtype=complex)
        L = self.lmax
        out = np.zeros(grid_size, dtype=complex)
        inside = np.abs(n) <= L
        out[inside] = self.lambdas[n[inside] + L]
        return out

    def kernel_samples(self, grid_size: int) -> np.ndarray:
        """K(phi_j) on an N-point grid (requires a finite kernel)."""
        if self.lambdas is None:
            raise KernelError("the ideal kernel is a delta and has no samples")
        L = self.lmax
        if grid_size < 2 * L + 1:
            raise TruncationError(f"grid of {grid_size} points cannot hold |l| <= {L}")
        arr = np.zeros(grid_size, dtype=complex)
        arr[np.arange(-L, L + 1) % grid_size] = self.lambdas
        return (grid_size * np.fft.ifft(arr)).real / (2.0 * math.pi)

    @classmethod
    def ideal(cls) -> "PovmKernel":
        return cls(None, label="ideal")

    @classmethod
    def uniform(cls) -> "PovmKernel":
        """lambda_l = delta_{l,0}: all angular information destroyed."""
        return cls(np.ones(1, dtype=complex), label="uniform")

    @classmethod
    def poisson(cls, r: float, lmax: Optional[int] = None) -> "PovmKernel":
        """Wrapped-Cauchy kernel, lambda_l = r^|l|."""
        if not 0.0 <= r <= 1.0:
            raise KernelError(f"Poisson kernel needs 0 <= r <= 1, got {r}")
        if r == 1.0:
            return cls.ideal()
        if r == 0.0:
            return cls.uniform()
        if lmax is None:
            lmax = int(math.ceil(math.log(1e-17) / math.log(r)))
        l = np.arange(-lmax, lmax + 1)
        return cls(r ** np.abs(l), label=f"poisson(r={r:g})")

    @classmethod
    def von_mises(cls, kappa: float, lmax: Optional[int] = None) -> "PovmKernel":
        """von Mises kernel, lambda_l = I_l(kappa)/I_0(kappa)."""
        if kappa <= 0:
            raise KernelError(f"von Mises kernel needs kappa > 0, got {kappa}")
        if lmax is None:
            lmax = 1
            while ive(lmax, kappa) / ive(0, kappa) > 1e-17 and lmax < 4096:
                lmax += 1
        l = np.arange(-lmax, lmax + 1)
        return cls(ive(np.abs(l), kappa) / ive(0, kappa), label=f"vonMises(kappa={kappa:g})")


def angle_grid(grid_size: int) -> np.ndarray:
    """Uniform grid phi_j = 2 pi j / N."""
    return 2.0 * math.pi * np.arange(grid_size) / grid_size


def _as_state(state: Union[MomentumWavefunction, Sequence[complex]]) -> MomentumWavefunction:
    if isinstance(state, MomentumWavefunction):
        return state
    # raw arrays must already be normalized
    return MomentumWavefunction(np.asarray(state, dtype=complex))


def synthesize(state: MomentumWavefunction, grid_size: int = DEFAULT_GRID_SIZE) -> AngularSamples:
    """
    Evaluate Psi(phi_j) = (1/sqrt(2 pi)) sum_m exp(-i m phi_j) Psi_m.

    Args:
        state: Momentum amplitudes
        grid_size: Number of grid points N (must be >= 2M+1)

    Returns:
        AngularSamples on the N-point grid

    Raises:
        TruncationError: If the grid would alias the state
    """
    M = state.truncation
    if grid_size < 2 * M + 1:
        raise TruncationError(
            f"grid of {grid_size} points aliases a state with M={M} (needs >= {2 * M + 1})"
        )
    arr = np.zeros(grid_size, dtype=complex)
    arr[state.indices() % grid_size] = state.coefficients
    return AngularSamples(np.fft.fft(arr) / SQRT_2PI)


def fourier_coefficients(samples: AngularSamples, truncation: int) -> np.ndarray:
    """Raw Psi_m = integral Psi(phi) exp(i m phi) dphi / sqrt(2 pi) for m = -M..M, unnormalized."""
    N = samples.grid_size
    if 2 * truncation + 1 > N:
        raise TruncationError(f"M={truncation} needs at least {2 * truncation + 1} grid points, got {N}")
    spectrum = np.fft.ifft(samples.values) * SQRT_2PI
    m = np.arange(-truncation, truncation + 1)
    return spectrum[m % N]


def analyze(samples: AngularSamples, truncation: Optional[int] = None) -> MomentumWavefunction:
    """
    Momentum amplitudes of angular samples (inverse of ``synthesize``).

    The result is normalized; for band-limited normalized input the
    renormalization is a no-op to rounding.

    Args:
        samples: Psi(phi_j) on a uniform grid
        truncation: Requested M, defaults to min(64, (N-1)//2)

    Raises:
        TruncationError: If 2M+1 exceeds the grid size
    """
    if truncation is None:
        truncation = min(DEFAULT_TRUNCATION, (samples.grid_size - 1) // 2)
    return MomentumWavefunction.from_coefficients(fourier_coefficients(samples, truncation))


def density(state: MomentumWavefunction, grid_size: int = DEFAULT_GRID_SIZE) -> np.ndarray:
    """Angular probability density |Psi(phi_j)|^2 on the N-point grid."""
    return np.abs(synthesize(state, grid_size).values) ** 2


def angle_moments(samples: AngularSamples) -> Dict[str, Any]:
    """
    <E>, <E^2>, <L> and <L^2> by trapezoid quadrature on the angle grid.

    L = i d/dphi is applied spectrally, which is exact for band-limited
    samples.
    """
    N = samples.grid_size
    v = samples.values
    phi = samples.phi()
    weight = 2.0 * math.pi / N
    p = np.abs(v) ** 2
    freq = np.fft.fftfreq(N, d=1.0 / N)
    lv = np.fft.fft(np.fft.ifft(v) * freq)
    return {
        "mean_e": complex(weight * np.sum(p * np.exp(1j * phi))),
        "mean_e2": complex(weight * np.sum(p * np.exp(2j * phi))),
        "mean_l": float(weight * np.real(np.vdot(v, lv))),
        "mean_l2": float(weight * np.sum(np.abs(lv) ** 2)),
    }


def _quadrature_grid(truncation: int, grid_size: int) -> int:
    # |Psi|^2 exp(2 i phi) has harmonics up to 2M+2
    needed = 2 * truncation + 3
    if grid_size >= needed:
        return grid_size
    return 1 << int(math.ceil(math.log2(needed)))


def uncertainty_report(
    state: Union[MomentumWavefunction, Sequence[complex]],
    cross_check: bool = True,
    grid_size: int = DEFAULT_GRID_SIZE,
) -> UncertaintyReport:
    """
    Circular and angular-momentum statistics of a normalized state.

    meanE = sum_m conj(Psi_m) Psi_{m+1}; varE = 1 - |meanE|^2;
    varL = sum m^2 p_m - (sum m p_m)^2; <C^2> = (2 + 2 Re<E^2>)/4 and
    <S^2> = (2 - 2 Re<E^2>)/4.

    Args:
        state: Normalized state (raw arrays are validated)
        cross_check: Compare against angle-grid quadrature
        grid_size: Quadrature grid (enlarged automatically if too small)

    Returns:
        UncertaintyReport

    Raises:
        NormalizationError: If a raw array is not normalized
    """
    state = _as_state(state)
    psi = state.coefficients
    m = state.indices().astype(float)
    p = state.probabilities()

    mean_e = complex(np.vdot(psi[:-1], psi[1:]))
    mean_e2 = complex(np.vdot(psi[:-2], psi[2:])) if psi.size > 2 else 0j
    mean_l = float(np.sum(m * p))
    mean_l2 = float(np.sum(m * m * p))

    var_e = min(max(1.0 - abs(mean_e) ** 2, 0.0), 1.0)
    var_l = max(mean_l2 - mean_l ** 2, 0.0)
    c2 = (2.0 + 2.0 * mean_e2.real) / 4.0
    s2 = (2.0 - 2.0 * mean_e2.real) / 4.0
    var_c = max(c2 - mean_e.real ** 2, 0.0)
    var_s = max(s2 - mean_e.imag ** 2, 0.0)

    deviation = 0.0
    if cross_check:
        grid = _quadrature_grid(state.truncation, grid_size)
        moments = angle_moments(synthesize(state, grid))
        deviation = max(
            abs(moments["mean_e"] - mean_e),
            abs(moments["mean_e2"] - mean_e2),
            abs(moments["mean_l"] - mean_l) / max(1.0, abs(mean_l)),
            abs(moments["mean_l2"] - mean_l2) / max(1.0, mean_l2),
        )
        if deviation > NORMALIZATION_TOLERANCE:
            logger.warning(f"⚠️  Angle-grid quadrature disagrees with momentum sums by {deviation:.3e}")

    return UncertaintyReport(
        mean_e=mean_e,
        mean_l=mean_l,
        var_e=var_e,
        var_l=var_l,
        var_c=var_c,
        var_s=var_s,
        product=math.sqrt(var_e * var_l),
        quadrature_deviation=float(deviation),
    )


def relation_slacks(report: UncertaintyReport) -> Dict[str, float]:
    """
    Slack of each uncertainty relation (non-negative when the relation holds).

    Returns:
        Dict with keys ``dispersion`` (E-L), ``cosine`` (S-L bounded by <C>^2/4)
        and ``sine`` (C-L bounded by <S>^2/4)
    """
    return {
        "dispersion": report.var_e * report.var_l - (1.0 - report.var_e) / 4.0,
        "cosine": report.var_s * report.var_l - report.mean_c ** 2 / 4.0,
        "sine": report.var_c * report.var_l - report.mean_s ** 2 / 4.0,
    }


def povm_smooth(density_samples: np.ndarray, kernel: PovmKernel) -> np.ndarray:
    """
    Smear an angular density with a covariant POVM kernel.

    p_out(phi) = integral K(phi') p(phi + phi') dphi'. In Fourier terms the
    circular moments <exp(i n phi)> are multiplied by lambda_n, so
    varE_out = 1 - |lambda_1|^2 |meanE|^2.

    Args:
        density_samples: p(phi_j) on a uniform grid, integrating to 1
        kernel: Validated PovmKernel

    Returns:
        Smoothed density on the same grid

    Raises:
        NormalizationError: If the input density does not integrate to 1
    """
    p = np.asarray(density_samples, dtype=float).ravel()
    N = p.size
    total = 2.0 * math.pi / N * float(np.sum(p))
    if abs(total - 1.0) > NORMALIZATION_TOLERANCE:
        raise NormalizationError(f"density integrates to {total:.12g}, expected 1", diagnostics={"integral": total})
    if kernel.is_ideal:
        return p.copy()
    return np.fft.fft(kernel.multipliers(N) * np.fft.ifft(p)).real


def circular_mean(density_samples: np.ndarray) -> complex:
    """<exp(i phi)> of density samples on a uniform grid."""
    p = np.asarray(density_samples, dtype=float).ravel()
    N = p.size
    return complex(2.0 * math.pi / N * np.sum(p * np.exp(1j * angle_grid(N))))


def shift_state(
    state: MomentumWavefunction,
    angle_shift: float = 0.0,
    momentum_shift: int = 0,
    support_tolerance: float = 1e-15,
) -> MomentumWavefunction:
    """
    Apply an angle shift then a momentum shift.

    Psi_m -> exp(i m a) Psi_m, then Psi_m -> Psi_{m - l}. The density moves by
    +a under the angle shift and is unchanged by the momentum shift.

    Args:
        state: Input state
        angle_shift: a (radians)
        momentum_shift: l (integer)
        support_tolerance: Probability that may fall off the edge before refusing

    Raises:
        TruncationError: If the shifted support leaves [-M, M]
    """
    M = state.truncation
    m = state.indices()
    coeffs = state.coefficients * np.exp(1j * m * angle_shift)
    l = int(momentum_shift)
    if l == 0:
        return MomentumWavefunction.from_coefficients(coeffs)
    if abs(l) > 2 * M:
        raise TruncationError(f"momentum shift {l} exceeds the grid of M={M}")
    p = np.abs(coeffs) ** 2
    lost = float(np.sum(p[-l:])) if l > 0 else float(np.sum(p[:-l]))
    if lost > support_tolerance:
        raise TruncationError(
            f"momentum shift {l} pushes probability {lost:.3e} outside [-{M}, {M}]",
            diagnostics={"lost_probability": lost},
        )
    shifted = np.zeros_like(coeffs)
    if l > 0:
        shifted[l:] = coeffs[:-l]
    else:
        shifted[:l] = coeffs[-l:]
    return MomentumWavefunction.from_coefficients(shifted)


def quadrature_pair(state: MomentumWavefunction, ladder: Tuple[np.ndarray, np.ndarray]) -> Dict[str, float]:
    """
    Variances of Q = (W + W^dagger)/sqrt 2 and P = (W - W^dagger)/(sqrt 2 i)
    for a lowering operator W|m> = d_m |m-1> given by its weights.

    Args:
        state: State on [-M, M]
        ladder: (m values, d_m weights) of W

    Returns:
        Dict with var_q, var_p, commutator (<[Q, P]>, purely imaginary) and slack
    """
    psi = state.coefficients
    _, weights = ladder
    weights = np.asarray(weights, dtype=float)

    def lower(v: np.ndarray) -> np.ndarray:
        # (W v)_m = d_{m+1} v_{m+1}
        out = np.zeros_like(v)
        out[:-1] = weights[1:] * v[1:]
        return out

    def raise_(v: np.ndarray) -> np.ndarray:
        # (W^dagger v)_m = d_m v_{m-1}
        out = np.zeros_like(v)
        out[1:] = weights[1:] * v[:-1]
        return out

    def q_op(v):
        return (lower(v) + raise_(v)) / math.sqrt(2.0)

    def p_op(v):
        return (lower(v) - raise_(v)) / (math.sqrt(2.0) * 1j)

    qv, pv = q_op(psi), p_op(psi)
    mean_q = np.vdot(psi, qv).real
    mean_p = np.vdot(psi, pv).real
    var_q = float(np.vdot(qv, qv).real - mean_q ** 2)
    var_p = float(np.vdot(pv, pv).real - mean_p ** 2)
    commutator = complex(np.vdot(psi, q_op(pv) - p_op(qv)))
    bound = abs(commutator) ** 2 / 4.0
    return {
        "var_q": var_q,
        "var_p": var_p,
        "commutator": commutator,
        "bound": bound,
        "slack": var_q * var_p - bound,
    }
