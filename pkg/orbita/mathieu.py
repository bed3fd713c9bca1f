"""
Mathieu Intelligent States
==========================

States that minimize the angular-momentum spread at fixed circular variance
solve the eigenproblem

    H = L^2 + (q/2) cos(phi)

whose eigenfunctions, with eta = phi/2, are the angular Mathieu functions
ce_{2n}(eta, q) with characteristic value a = 4 * eigenvalue. The even
sector is solved in the parity-adapted momentum basis |0>, (|k> + |-k>)/sqrt 2,
where H is symmetric tridiagonal (diagonal k^2, off-diagonal q/(2 sqrt 2)
between k = 0 and 1 and q/4 elsewhere). The odd sector se_{2n} uses
(|k> - |-k>)/sqrt 2 and is available through ``parity="odd"``.

Fourier coefficients follow the usual normalization
2 A_0^2 + sum_{k>=1} A_{2k}^2 = 1, with the lowest significant coefficient
positive. The fundamental mode n = 0 peaks at phi = pi (eta = pi/2).
"""

import math
from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from loguru import logger
from scipy.linalg import eigh_tridiagonal
from scipy.optimize import brentq, minimize_scalar
from scipy.special import eval_hermite, ive

from .core import MomentumWavefunction, density, uncertainty_report
from .errors import ConvergenceError, ParameterError
from .utils import parallel_map

DEFAULT_TRUNCATION = 64
MAX_TRUNCATION = 4096
TAIL_TOLERANCE = 1e-14
CROSS_CHECK_TOLERANCE = 1e-8

SMALL_Q_LIMIT = 1.0
LARGE_Q_LIMIT = 100.0


@dataclass(frozen=True)
class MathieuMode:
    """
    One angular Mathieu function.

    ``coeffs[k]`` is A_{2k} (even parity, k = 0..K) or B_{2k} (odd parity,
    ``coeffs[0]`` unused and zero).
    """

    n: int
    q: float
    char_value: float
    coeffs: np.ndarray
    parity: str = "even"
    eigen_residual: float = 0.0
    tail: float = 0.0

    @property
    def truncation(self) -> int:
        return self.coeffs.size - 1

    @property
    def converged(self) -> bool:
        return self.tail < TAIL_TOLERANCE

    def to_state(self) -> MomentumWavefunction:
        """Momentum amplitudes: Psi_0 = sqrt 2 A_0, Psi_{+-k} = A_{2k}/sqrt 2."""
        K = self.truncation
        psi = np.zeros(2 * K + 1, dtype=complex)
        k = np.arange(1, K + 1)
        if self.parity == "even":
            psi[K] = math.sqrt(2.0) * self.coeffs[0]
            psi[K + k] = self.coeffs[1:] / math.sqrt(2.0)
            psi[K - k] = self.coeffs[1:] / math.sqrt(2.0)
        else:
            psi[K + k] = 1j * self.coeffs[1:] / math.sqrt(2.0)
            psi[K - k] = -1j * self.coeffs[1:] / math.sqrt(2.0)
        return MomentumWavefunction.from_coefficients(psi)

    def to_json(self) -> Dict[str, Any]:
        return {
            "n": self.n,
            "q": self.q,
            "a": self.char_value,
            "parity": self.parity,
            "A": [float(x) for x in self.coeffs],
        }


@dataclass(frozen=True)
class UncertaintyCurvePoint:
    """Variances of one mode at one q."""

    q: float
    n: int
    var_e: float
    var_l: float
    product: float
    regime_warning: Optional[str] = None

    def as_dict(self) -> Dict[str, Any]:
        return {
            "q": self.q,
            "n": self.n,
            "varE": self.var_e,
            "varL": self.var_l,
            "product": self.product,
        }


def _tridiagonal(q: float, K: int, parity: str) -> Tuple[np.ndarray, np.ndarray]:
    if parity == "even":
        k = np.arange(K + 1, dtype=float)
        off = np.full(K, q / 4.0)
        off[0] = q / (2.0 * math.sqrt(2.0))
    else:
        k = np.arange(1, K + 1, dtype=float)
        off = np.full(K - 1, q / 4.0)
    return k * k, off


def _fix_sign(coeffs: np.ndarray) -> np.ndarray:
    scale = np.max(np.abs(coeffs))
    significant = np.nonzero(np.abs(coeffs) > 1e-12 * scale)[0]
    if significant.size and coeffs[significant[0]] < 0:
        return -coeffs
    return coeffs


def solve_modes(
    q: float,
    n_max: int = 0,
    truncation: int = DEFAULT_TRUNCATION,
    parity: str = "even",
    max_truncation: int = MAX_TRUNCATION,
    tail_tolerance: float = TAIL_TOLERANCE,
) -> List[MathieuMode]:
    """
    Solve for the lowest Mathieu modes at parameter q.

    The truncation K is doubled until every returned mode has its last
    coefficient below ``tail_tolerance``.

    Args:
        q: Mathieu parameter (>= 0)
        n_max: Highest mode index; even parity returns ce_0..ce_{2 n_max},
            odd parity returns se_2..se_{2 n_max}
        truncation: Starting K
        parity: "even" or "odd"
        max_truncation: Cap on K
        tail_tolerance: Required size of the last coefficient

    Returns:
        Modes sorted by characteristic value

    Raises:
        ParameterError: If q < 0, n_max is invalid or parity is unknown
        ConvergenceError: If the tail criterion fails at the cap

    Example:
        >>> modes = solve_modes(1.0, n_max=0)
        >>> round(modes[0].char_value, 4)
        -0.4551
    """
    if not np.isfinite(q) or q < 0:
        raise ParameterError(f"Mathieu parameter q must be >= 0, got {q}")
    if parity not in ("even", "odd"):
        raise ParameterError(f"parity must be 'even' or 'odd', got {parity!r}")
    first = 0 if parity == "even" else 1
    if n_max < first:
        raise ParameterError(f"n_max must be >= {first} for {parity} parity, got {n_max}")
    count = n_max - first + 1

    K = max(int(truncation), n_max + 8)
    while True:
        diag, off = _tridiagonal(q, K, parity)
        values, vectors = eigh_tridiagonal(diag, off, select="i", select_range=(0, count - 1))
        tail = float(np.max(np.abs(vectors[-1, :])))
        if tail < tail_tolerance:
            break
        if K >= max_truncation:
            raise ConvergenceError(
                f"Mathieu coefficients did not decay below {tail_tolerance:g} at K={K}",
                diagnostics={"q": q, "K": K, "tail": tail},
            )
        logger.debug(f"🔧 Growing Mathieu truncation K={K} -> {2 * K} (tail {tail:.2e}, q={q:g})")
        K = min(2 * K, max_truncation)

    modes = []
    for j in range(count):
        v = vectors[:, j]
        lam = float(values[j])
        residual = _residual(diag, off, v, lam)
        if parity == "even":
            coeffs = v.copy()
            coeffs[0] = v[0] / math.sqrt(2.0)
        else:
            coeffs = np.concatenate([[0.0], v])
        coeffs = _fix_sign(coeffs)
        modes.append(MathieuMode(
            n=first + j,
            q=float(q),
            char_value=4.0 * lam,
            coeffs=coeffs,
            parity=parity,
            eigen_residual=residual,
            tail=float(abs(v[-1])),
        ))
    return modes


def _residual(diag: np.ndarray, off: np.ndarray, v: np.ndarray, lam: float) -> float:
    tv = diag * v
    tv[:-1] += off * v[1:]
    tv[1:] += off * v[:-1]
    return float(np.max(np.abs(tv - lam * v)) / max(1.0, abs(lam)))


def solve_mode(q: float, n: int = 0, **kwargs) -> MathieuMode:
    """Single mode ce_{2n} (or se_{2n} with ``parity="odd"``)."""
    parity = kwargs.get("parity", "even")
    modes = solve_modes(q, n_max=n, **kwargs)
    return modes[n - (0 if parity == "even" else 1)]


def mode_to_state(mode: MathieuMode) -> MomentumWavefunction:
    return mode.to_state()


def theta_sum(mode: MathieuMode) -> float:
    """<E> of the mode: 2 A_0 A_2 + sum_{k>=1} A_{2k} A_{2k+2} (even), sum B_{2k} B_{2k+2} (odd)."""
    A = mode.coeffs
    if A.size < 2:
        return 0.0
    tail = float(np.dot(A[1:-1], A[2:]))
    if mode.parity == "even":
        return 2.0 * A[0] * A[1] + tail
    return tail


def mode_uncertainties(mode: MathieuMode, cross_check: bool = True) -> UncertaintyCurvePoint:
    """
    Variances of a Mathieu mode from its Fourier coefficients.

    varE = 1 - Theta^2 and varL = (a - 2 q Theta)/4, optionally cross-checked
    against the momentum-space statistics of the converted state.

    Raises:
        ConvergenceError: If the mode did not meet the tail criterion
    """
    if not mode.converged:
        raise ConvergenceError(
            f"mode n={mode.n} at q={mode.q:g} is not converged (tail {mode.tail:.2e})",
            diagnostics={"n": mode.n, "q": mode.q, "tail": mode.tail},
        )
    theta = theta_sum(mode)
    var_e = min(max(1.0 - theta * theta, 0.0), 1.0)
    var_l = max((mode.char_value - 2.0 * mode.q * theta) / 4.0, 0.0)

    if cross_check:
        report = uncertainty_report(mode.to_state(), cross_check=False)
        dev_e = abs(report.var_e - var_e)
        dev_l = abs(report.var_l - var_l) / max(1.0, var_l)
        if max(dev_e, dev_l) > CROSS_CHECK_TOLERANCE:
            logger.warning(
                f"⚠️  Mathieu closed-form variances disagree with momentum sums "
                f"(q={mode.q:g}, n={mode.n}): dE={dev_e:.2e}, dL={dev_l:.2e}"
            )

    return UncertaintyCurvePoint(
        q=mode.q,
        n=mode.n,
        var_e=var_e,
        var_l=var_l,
        product=math.sqrt(var_e * var_l),
    )


def asymptotic_uncertainties(n: int, q: float, regime: str) -> UncertaintyCurvePoint:
    """
    Small-q and large-q expansions of the variances of ce_{2n}.

    small: varL = n^2 - q^2/(8(4n^2-1)), varE = 1 - q^2/(4(4n^2-1)^2);
           for n = 1, varL = 1 - 5q^2/48 and varE = 1 - 25q^2/144.
    large: varL = (4n+1) sqrt(q)/4, varE = (4n+1)/sqrt(q).

    A q outside the regime is flagged in ``regime_warning``, not refused.
    """
    if n < 0:
        raise ParameterError(f"mode index must be >= 0, got {n}")
    if q < 0:
        raise ParameterError(f"Mathieu parameter q must be >= 0, got {q}")
    warning = None
    if regime == "small":
        if q > SMALL_Q_LIMIT:
            warning = f"q={q:g} outside the small-q regime (q <= {SMALL_Q_LIMIT:g})"
        if n == 1:
            var_l = 1.0 - 5.0 * q * q / 48.0
            var_e = 1.0 - 25.0 * q * q / 144.0
        else:
            d = 4.0 * n * n - 1.0
            var_l = n * n - q * q / (8.0 * d)
            var_e = 1.0 - q * q / (4.0 * d * d)
    elif regime == "large":
        if q < LARGE_Q_LIMIT:
            warning = f"q={q:g} outside the large-q regime (q >= {LARGE_Q_LIMIT:g})"
        if q == 0:
            raise ParameterError("large-q asymptotics need q > 0")
        var_l = (4 * n + 1) * math.sqrt(q) / 4.0
        var_e = (4 * n + 1) / math.sqrt(q)
    else:
        raise ParameterError(f"regime must be 'small' or 'large', got {regime!r}")
    if warning:
        logger.warning(f"⚠️  {warning}")
    return UncertaintyCurvePoint(
        q=float(q),
        n=n,
        var_e=var_e,
        var_l=var_l,
        product=math.sqrt(max(var_e * var_l, 0.0)),
        regime_warning=warning,
    )


def sweep_uncertainty_curve(n_max: int, q_grid: Sequence[float]) -> List[UncertaintyCurvePoint]:
    """
    Variances of modes n = 0..n_max over a q grid.

    Each q is solved independently on the shared thread pool.

    Returns:
        Points ordered by q, then n
    """
    q_values = [float(q) for q in q_grid]
    if any(q < 0 for q in q_values):
        raise ParameterError("q grid must be nonnegative")
    if any(b < a for a, b in zip(q_values, q_values[1:])):
        raise ParameterError("q grid must be sorted")

    def one(q: float) -> List[UncertaintyCurvePoint]:
        return [mode_uncertainties(mode) for mode in solve_modes(q, n_max)]

    rows = parallel_map(one, q_values)
    return [point for row in rows for point in row]


def curve_table(points: Sequence[UncertaintyCurvePoint]) -> pd.DataFrame:
    """Sweep points as a table with columns q, n, varE, varL, product."""
    return pd.DataFrame([p.as_dict() for p in points], columns=["q", "n", "varE", "varL", "product"])


def fundamental_variance(q: float) -> float:
    """Circular variance of ce_0 at q."""
    return mode_uncertainties(solve_mode(q, 0), cross_check=False).var_e


def q_for_variance(var_e: float, q_min: float = 1e-8, q_max: float = 1e8) -> float:
    """
    Invert the monotone map q -> varE of the fundamental mode.

    Raises:
        ParameterError: If var_e lies outside the reachable range
    """
    if not 0.0 < var_e < 1.0:
        raise ParameterError(f"circular variance must lie in (0, 1), got {var_e}")
    lo, hi = math.log(q_min), math.log(q_max)
    f_lo = fundamental_variance(q_min) - var_e
    f_hi = fundamental_variance(q_max) - var_e
    if f_lo * f_hi > 0:
        raise ParameterError(
            f"varE={var_e} not reachable for q in [{q_min:g}, {q_max:g}]",
            diagnostics={"varE_at_qmin": f_lo + var_e, "varE_at_qmax": f_hi + var_e},
        )
    t = brentq(lambda t: fundamental_variance(math.exp(t)) - var_e, lo, hi, xtol=1e-14, rtol=1e-15, maxiter=200)
    return math.exp(t)


def ce(mode: MathieuMode, eta: np.ndarray) -> np.ndarray:
    """Evaluate ce_{2n}(eta) = sum A_{2k} cos(2k eta) (or se_{2n} with sines)."""
    eta = np.asarray(eta, dtype=float)
    k = np.arange(mode.coeffs.size)
    if mode.parity == "even":
        return np.cos(2.0 * np.outer(eta, k)) @ mode.coeffs
    return np.sin(2.0 * np.outer(eta, k)) @ mode.coeffs


def hermite_approximation(n: int, q: float, grid_size: int = 2048) -> Tuple[np.ndarray, np.ndarray]:
    """
    Large-q form ce_{2n}(eta) ~ exp(-u^2/4) H_{2n}(u/sqrt 2), u = 2 q^(1/4) cos(eta).

    Returns:
        (eta, values) on a uniform grid over [0, pi), normalized so that
        the integral of values^2 over [0, pi) equals pi/2
    """
    if q <= 0:
        raise ParameterError(f"Hermite approximation needs q > 0, got {q}")
    eta = math.pi * np.arange(grid_size) / grid_size
    u = 2.0 * q ** 0.25 * np.cos(eta)
    values = np.exp(-u * u / 4.0) * eval_hermite(2 * n, u / math.sqrt(2.0))
    norm = math.pi / grid_size * float(np.sum(values ** 2))
    return eta, values * math.sqrt((math.pi / 2.0) / norm)


def hermite_overlap(mode: MathieuMode, grid_size: int = 2048) -> float:
    """|<ce, Hermite form>| normalized on [0, pi)."""
    eta, approx = hermite_approximation(mode.n, mode.q, grid_size)
    exact = ce(mode, eta)
    num = abs(float(np.sum(exact * approx)))
    den = math.sqrt(float(np.sum(exact ** 2)) * float(np.sum(approx ** 2)))
    return num / den


def _kl_to_von_mises(p: np.ndarray, phi: np.ndarray, kappa: float) -> float:
    # von Mises centered at pi, written with ive to avoid overflow
    log_f = kappa * (-np.cos(phi) - 1.0) - math.log(2.0 * math.pi * ive(0, kappa))
    weight = 2.0 * math.pi / p.size
    mask = p > 0
    return float(weight * np.sum(p[mask] * (np.log(p[mask]) - log_f[mask])))


def von_mises_fit(q: float, grid_size: int = 2048) -> Dict[str, float]:
    """
    Best-fit von Mises shape to the fundamental density |ce_0|^2.

    Minimizes the Kullback-Leibler divergence over the concentration.

    Returns:
        Dict with kappa, kl, and the reference concentrations q (small-q
        limit) and sqrt(q) (large-q limit)
    """
    if q <= 0:
        raise ParameterError(f"von Mises fit needs q > 0, got {q}")
    state = solve_mode(q, 0).to_state()
    N = max(grid_size, 4 * state.truncation + 8)
    p = density(state, N)
    phi = 2.0 * math.pi * np.arange(N) / N
    result = minimize_scalar(
        lambda t: _kl_to_von_mises(p, phi, math.exp(t)),
        bounds=(math.log(1e-8), math.log(1e6)),
        method="bounded",
        options={"xatol": 1e-10},
    )
    kappa = math.exp(result.x)
    return {
        "q": float(q),
        "kappa": kappa,
        "kl": float(result.fun),
        "kappa_small_q": float(q),
        "kappa_large_q": math.sqrt(q),
    }
