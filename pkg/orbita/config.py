"""
Orbita Configuration
====================

Configuration is read from the first readable file among:

- an explicit path passed by the caller
- ``$ORBITA_CONFIG``
- ``~/.orbita/config.yaml`` / ``~/.orbita/config.json``
- ``/etc/orbita/config.yaml``
- the repository ``config/orbita.yaml``

and deep-merged over built-in defaults. Typed views (bench geometry, noise,
scenarios) are frozen pydantic models so they can key caches and be hashed
into output headers.
"""

import copy
import math
import json
import os
from typing import Any, Dict, List, Optional, Tuple

import yaml
from dotenv import load_dotenv
from loguru import logger
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from .errors import ConfigError
from .states import FAMILIES, canonical_family

# Load environment variables
load_dotenv()

_config: Optional[Dict[str, Any]] = None


def _get_default_config() -> Dict[str, Any]:
    """Return default configuration."""
    return {
        "optics": {
            "wavelength": 532e-9,
            "waist": 1e-3,
            "distance": 0.5,
            "focal_length": 0.3,
            "aperture_radius": 25e-6,
            "radial_samples": 2048,
            "radial_extent": None,  # 8x the propagated beam radius
            "frequency_samples": 1024,
            "frequency_extent": None,  # 6 / (pi w0)
            "helicity_range": [-15, 15],
        },
        "noise": {
            "seed": 0,
            "relative_level": 0.0,
        },
        "analysis": {
            "window": [-15, 15],
            "bootstrap": 200,
            "regularization": None,  # None selects the L-curve corner
        },
        "logging": {
            "level": os.getenv("ORBITA_LOG_LEVEL", "INFO"),
        },
    }


def _deep_merge(base: Dict[str, Any], override: Dict[str, Any]) -> Dict[str, Any]:
    merged = copy.deepcopy(base)
    for key, value in (override or {}).items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = _deep_merge(merged[key], value)
        else:
            merged[key] = value
    return merged


def _read_file(path: str) -> Dict[str, Any]:
    with open(path, "r", encoding="utf-8") as f:
        if path.endswith(".yaml") or path.endswith(".yml"):
            data = yaml.safe_load(f)
        else:
            data = json.load(f)
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise ConfigError(f"Top level of {path} must be a mapping, got {type(data).__name__}")
    return data


def load_config(config_path: Optional[str] = None) -> Dict[str, Any]:
    """
    Load configuration from file, merged over defaults.

    Args:
        config_path: Optional explicit YAML/JSON path, searched first

    Returns:
        Configuration dictionary

    Raises:
        ConfigError: If an explicitly requested file is missing or unreadable
    """
    if config_path and not os.path.exists(config_path):
        raise ConfigError(f"Config file not found: {config_path}")

    search_paths = []
    if config_path:
        search_paths.append(config_path)
    env_path = os.getenv("ORBITA_CONFIG")
    if env_path:
        search_paths.append(env_path)
    search_paths.extend([
        os.path.expanduser("~/.orbita/config.yaml"),
        os.path.expanduser("~/.orbita/config.json"),
        "/etc/orbita/config.yaml",
        os.path.join(os.path.dirname(__file__), "../config/orbita.yaml"),
    ])

    for path in search_paths:
        if os.path.exists(path):
            try:
                data = _read_file(path)
            except (OSError, ValueError, yaml.YAMLError, ConfigError) as e:
                if path == config_path:
                    raise ConfigError(f"Failed to load config from {path}: {e}") from e
                logger.warning(f"⚠️  Failed to load config from {path}: {e}")
                continue
            logger.info(f"🔧 Loaded orbita config from: {path}")
            return _deep_merge(_get_default_config(), data)

    logger.debug("🔧 Using default orbita config")
    return _get_default_config()


def get_config(config_path: Optional[str] = None) -> Dict[str, Any]:
    """Get or create the global configuration dictionary."""
    global _config
    if _config is None or config_path is not None:
        _config = load_config(config_path)
    return _config


class OpticalConfig(BaseModel):
    """
    Bench geometry: Gaussian beam at the amplitude mask, free-space distance
    to the spiral analyzer, Fourier lens and detector pinhole.

    All lengths are in meters. ``radial_extent`` and ``frequency_extent``
    default to values derived from the beam (see ``r_max`` and ``nu_max``).
    """

    model_config = ConfigDict(frozen=True)

    wavelength: float = Field(default=532e-9, description="Laser wavelength (m)")
    waist: float = Field(default=1e-3, description="Gaussian waist w0 at the mask plane (m)")
    distance: float = Field(default=0.5, description="Mask to analyzer distance z (m)")
    focal_length: float = Field(default=0.3, description="Fourier lens focal length f' (m)")
    aperture_radius: float = Field(default=25e-6, description="Detector pinhole radius R (m)")
    radial_samples: int = Field(default=2048, description="Samples of the radial grid at the analyzer")
    radial_extent: Optional[float] = Field(
        default=None,
        description="Radial grid extent rMax (m); None means 8x the propagated beam radius"
    )
    frequency_samples: int = Field(default=1024, description="Samples of the Fourier-plane frequency grid")
    frequency_extent: Optional[float] = Field(
        default=None,
        description="Largest spatial frequency (1/m) on the Fourier-plane grid; None means 6/(pi w0)"
    )
    helicity_range: Tuple[int, int] = Field(
        default=(-15, 15),
        description="Inclusive range of propagated helicities and analyzer charges"
    )

    @field_validator("wavelength", "waist", "focal_length", "aperture_radius")
    @classmethod
    def validate_positive(cls, v: float) -> float:
        """Lengths must be strictly positive."""
        if not v > 0:
            raise ValueError(f"length must be > 0, got {v}")
        return float(v)

    @field_validator("distance")
    @classmethod
    def validate_distance(cls, v: float) -> float:
        """z = 0 is representable; propagation refuses it."""
        if v < 0:
            raise ValueError(f"distance must be >= 0, got {v}")
        return float(v)

    @field_validator("radial_samples", "frequency_samples")
    @classmethod
    def validate_samples(cls, v: int) -> int:
        if v < 16:
            raise ValueError(f"grids need at least 16 samples, got {v}")
        return v

    @field_validator("helicity_range")
    @classmethod
    def validate_helicity_range(cls, v: Tuple[int, int]) -> Tuple[int, int]:
        lo, hi = int(v[0]), int(v[1])
        if lo > hi:
            raise ValueError(f"helicity range must satisfy lo <= hi, got {v}")
        return lo, hi

    @model_validator(mode="after")
    def validate_grid_resolves_beam(self) -> "OpticalConfig":
        """The radial grid must cover at least four propagated beam radii."""
        if self.radial_extent is not None and self.radial_extent < 4.0 * self.beam_radius:
            raise ValueError(
                f"radial_extent {self.radial_extent:.3e} m does not resolve the beam "
                f"(needs >= {4.0 * self.beam_radius:.3e} m)"
            )
        if self.frequency_extent is not None and self.frequency_extent <= 0:
            raise ValueError("frequency_extent must be > 0")
        return self

    @property
    def wavenumber(self) -> float:
        return 2.0 * math.pi / self.wavelength

    @property
    def rayleigh_range(self) -> float:
        return math.pi * self.waist ** 2 / self.wavelength

    @property
    def beam_radius(self) -> float:
        """Propagated Gaussian radius w(z)."""
        return self.waist * (1.0 + (self.distance / self.rayleigh_range) ** 2) ** 0.5

    @property
    def r_max(self) -> float:
        if self.radial_extent is not None:
            return self.radial_extent
        return 8.0 * self.beam_radius

    @property
    def nu_max(self) -> float:
        if self.frequency_extent is not None:
            return self.frequency_extent
        return 6.0 / (math.pi * self.waist)

    @property
    def nu_aperture(self) -> float:
        """Aperture radius expressed as a spatial frequency, R / (lambda f')."""
        return self.aperture_radius / (self.wavelength * self.focal_length)

    @property
    def helicities(self) -> List[int]:
        lo, hi = self.helicity_range
        return list(range(lo, hi + 1))


class NoiseConfig(BaseModel):
    """Multiplicative Gaussian detector noise."""

    model_config = ConfigDict(frozen=True)

    seed: int = Field(default=0, description="Seed of the noise generator")
    relative_level: float = Field(default=0.0, description="Standard deviation relative to each detected power")

    @field_validator("relative_level")
    @classmethod
    def validate_level(cls, v: float) -> float:
        if v < 0:
            raise ValueError(f"relative noise level must be >= 0, got {v}")
        return float(v)


class StateSpec(BaseModel):
    """
    One state of a scenario.

    The width is given either directly (``alpha`` for the angular families,
    ``q`` for Mathieu beams) or through a target circular variance ``var_e``.
    """

    model_config = ConfigDict(frozen=True)

    family: str = Field(description=f"State family, one of {FAMILIES}")
    alpha: Optional[float] = Field(default=None, description="Width parameter (alpha or sigma)")
    q: Optional[float] = Field(default=None, description="Mathieu parameter for mathieu beams")
    var_e: Optional[float] = Field(default=None, description="Target circular variance")
    mu: float = Field(default=0.0, description="Center angle (rad) or coherent theta")
    ell: float = Field(default=0.0, description="Coherent log-radius")
    fit_family: Optional[str] = Field(default=None, description="Family fitted to the recovered spectrum")

    @field_validator("family", "fit_family")
    @classmethod
    def validate_family(cls, v: Optional[str]) -> Optional[str]:
        if v is None:
            return v
        return canonical_family(v)

    @field_validator("var_e")
    @classmethod
    def validate_var_e(cls, v: Optional[float]) -> Optional[float]:
        if v is not None and not 0.0 < v < 1.0:
            raise ValueError(f"target circular variance must lie in (0, 1), got {v}")
        return v

    @model_validator(mode="after")
    def validate_width(self) -> "StateSpec":
        if self.family != "coherent" and self.alpha is None and self.q is None and self.var_e is None:
            raise ValueError(f"state '{self.family}' needs alpha, q or var_e")
        return self


class Scenario(BaseModel):
    """A complete synthetic measurement campaign."""

    model_config = ConfigDict(frozen=True)

    name: str = Field(default="scenario", description="Label used in output headers")
    states: Tuple[StateSpec, ...] = Field(description="States pushed through the bench")
    optics: OpticalConfig = Field(default_factory=OpticalConfig)
    noise: NoiseConfig = Field(default_factory=NoiseConfig)
    window: Tuple[int, int] = Field(default=(-15, 15), description="Detection window [lo, hi]")
    bootstrap: int = Field(default=200, description="Bootstrap resamples per state")
    seed: int = Field(default=0, description="Seed for bootstrap streams")
    regularization: Optional[float] = Field(
        default=None,
        description="Tikhonov weight; None selects the L-curve corner"
    )
    triple_index: int = Field(default=0, description="State whose raw/deconvolved/fitted spectra are exported")

    @field_validator("states")
    @classmethod
    def validate_states(cls, v: Tuple[StateSpec, ...]) -> Tuple[StateSpec, ...]:
        if len(v) == 0:
            raise ValueError("scenario needs at least one state")
        return v

    @field_validator("bootstrap")
    @classmethod
    def validate_bootstrap(cls, v: int) -> int:
        if v < 2:
            raise ValueError(f"bootstrap count must be >= 2, got {v}")
        return v

    @field_validator("regularization")
    @classmethod
    def validate_regularization(cls, v: Optional[float]) -> Optional[float]:
        if v is not None and v < 0:
            raise ValueError(f"regularization must be >= 0, got {v}")
        return v

    @model_validator(mode="after")
    def validate_window(self) -> "Scenario":
        lo, hi = self.window
        o_lo, o_hi = self.optics.helicity_range
        if lo > hi:
            raise ValueError(f"window must satisfy lo <= hi, got {self.window}")
        if lo < o_lo or hi > o_hi:
            raise ValueError(f"window {self.window} exceeds the propagated helicity range {self.optics.helicity_range}")
        if not 0 <= self.triple_index < len(self.states):
            raise ValueError(f"triple_index {self.triple_index} out of range")
        return self


def optical_config_from(data: Optional[Dict[str, Any]] = None) -> OpticalConfig:
    """
    Build an OpticalConfig from a mapping merged over the configured defaults.

    Raises:
        ConfigError: If validation fails
    """
    base = get_config()["optics"]
    merged = _deep_merge(base, data or {})
    try:
        return OpticalConfig(**merged)
    except ValidationError as e:
        raise ConfigError(f"Invalid optics config: {e}") from e


def load_optical_config(path: Optional[str] = None) -> OpticalConfig:
    """
    Read an optics config file (YAML or JSON).

    The file may hold the optics block at top level or under an ``optics`` key.
    """
    if path is None:
        return optical_config_from(None)
    if not os.path.exists(path):
        raise ConfigError(f"Optics config not found: {path}")
    try:
        data = _read_file(path)
    except (OSError, ValueError, yaml.YAMLError) as e:
        raise ConfigError(f"Failed to read optics config {path}: {e}") from e
    return optical_config_from(data.get("optics", data))


def load_scenario(path: str) -> Scenario:
    """
    Read and validate a scenario file.

    Args:
        path: YAML or JSON scenario file

    Returns:
        Validated Scenario

    Raises:
        ConfigError: If the file is missing, unreadable or invalid
    """
    if not os.path.exists(path):
        raise ConfigError(f"Scenario file not found: {path}")
    try:
        data = _read_file(path)
    except (OSError, ValueError, yaml.YAMLError) as e:
        raise ConfigError(f"Failed to read scenario {path}: {e}") from e
    return scenario_from(data)


def scenario_from(data: Dict[str, Any]) -> Scenario:
    """Validate a scenario mapping, filling optics and noise from the configured defaults."""
    defaults = get_config()
    payload = dict(data)
    payload["optics"] = _deep_merge(defaults["optics"], data.get("optics", {}))
    payload["noise"] = _deep_merge(defaults["noise"], data.get("noise", {}))
    analysis = defaults["analysis"]
    payload.setdefault("window", analysis["window"])
    payload.setdefault("bootstrap", analysis["bootstrap"])
    payload.setdefault("regularization", analysis["regularization"])
    try:
        return Scenario(**payload)
    except ValidationError as e:
        raise ConfigError(f"Invalid scenario: {e}") from e
