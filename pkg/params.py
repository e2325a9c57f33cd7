"""
Physical Parameters
Experimental knobs, fundamental constants, unit conversion and derived scalars
"""

import json
import math
from dataclasses import asdict, dataclass, fields, replace
from enum import Enum
from pathlib import Path
from typing import Any, Dict, Iterable, Mapping, Optional, Tuple, Union

from errors import ConfigError

# CODATA, 10 significant digits
HBAR: float = 1.054571817e-34  # J s
K_B: float = 1.380649000e-23  # J/K

TWO_PI = 2.0 * math.pi


class Units(Enum):
    """Frequency convention of a config document"""
    RAD_S = "rad_s"
    HZ_2PI = "hz_2pi"


# Keys holding (angular) frequencies; converted by 2π under Units.HZ_2PI
FREQUENCY_KEYS = frozenset({"omega_m", "gamma_m", "kappa", "omega_c", "omega_l", "detuning"})

REQUIRED_KEYS: Tuple[str, ...] = (
    "units", "omega_m", "kappa", "omega_c", "mass",
    "cavity_length", "beta_prime", "p_in", "temperature",
)
EXCLUSIVE_PAIRS: Tuple[Tuple[str, str], ...] = (("gamma_m", "q_factor"), ("omega_l", "detuning"))
KNOWN_KEYS = frozenset(REQUIRED_KEYS) | {k for pair in EXCLUSIVE_PAIRS for k in pair}


@dataclass(frozen=True)
class PhysicalParams:
    """Experimental parameters, every angular frequency in rad/s"""
    omega_m: float        # mechanical resonance Ω_m
    gamma_m: float        # mechanical damping Γ_m
    kappa: float          # cavity decay κ
    omega_c: float        # cavity mode ω_c
    omega_l: float        # drive laser ω_ℓ
    mass: float           # kg
    cavity_length: float  # m
    beta_prime: float     # 1/(m² s²)
    p_in: float           # W
    temperature: float    # K

    def __post_init__(self):
        for f in fields(self):
            value = getattr(self, f.name)
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                raise ConfigError(f"{f.name} must be numeric, got {value!r}", field=f.name)
            if not math.isfinite(value):
                raise ConfigError(f"{f.name} must be finite, got {value!r}", field=f.name)
            object.__setattr__(self, f.name, float(value))

        positive = ("omega_m", "kappa", "omega_c", "omega_l", "mass", "cavity_length")
        non_negative = ("gamma_m", "beta_prime", "p_in", "temperature")
        for name in positive:
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be > 0, got {getattr(self, name)!r}", field=name)
        for name in non_negative:
            if getattr(self, name) < 0:
                raise ConfigError(f"{name} must be >= 0, got {getattr(self, name)!r}", field=name)

    @property
    def detuning(self) -> float:
        """Δ = ω_ℓ − ω_c"""
        return self.omega_l - self.omega_c

    @property
    def q_factor(self) -> float:
        return self.omega_m / self.gamma_m if self.gamma_m > 0 else math.inf

    def with_overrides(self, **changes: float) -> "PhysicalParams":
        """Copy with some fields replaced; `detuning` moves ω_ℓ"""
        if "detuning" in changes:
            changes["omega_l"] = self.omega_c + changes.pop("detuning")
        unknown = set(changes) - {f.name for f in fields(self)}
        if unknown:
            raise ConfigError(f"Unknown parameter(s): {sorted(unknown)}", field=sorted(unknown)[0])
        return replace(self, **changes)


@dataclass(frozen=True)
class DerivedScalars:
    """Single-valued quantities derived from PhysicalParams"""
    x_zpf: float       # m
    g_m: float         # rad/s, single-photon coupling
    epsilon_in: float  # sqrt(photons)/s
    n_thermal: float   # 2 k_B T/(ħ Ω_m)
    tau_th: float      # s, re-thermalization time


def derive_scalars(p: PhysicalParams) -> DerivedScalars:
    """x_ZPF, g_M, ε^in, the thermal number and τ_th from the physical parameters"""
    x_zpf = math.sqrt(HBAR / (2.0 * p.mass * p.omega_m))
    g_m = math.sqrt(2.0) * p.omega_c * x_zpf / p.cavity_length
    epsilon_in = math.sqrt(2.0 * p.kappa * p.p_in / (HBAR * p.omega_m))
    n_thermal = 2.0 * K_B * p.temperature / (HBAR * p.omega_m)
    if p.temperature > 0 and p.gamma_m > 0:
        tau_th = HBAR * p.q_factor / (K_B * p.temperature)
    else:
        tau_th = math.inf
    return DerivedScalars(x_zpf=x_zpf, g_m=g_m, epsilon_in=epsilon_in,
                          n_thermal=n_thermal, tau_th=tau_th)


def laser_frequency(p: PhysicalParams, detuning: float) -> float:
    """ω_ℓ for a detuning that may differ from the configured one"""
    return p.omega_c + detuning


def _number(document: Mapping[str, Any], key: str) -> float:
    value = document[key]
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{key} must be numeric, got {value!r}", field=key)
    return float(value)


def parse_params(document: Mapping[str, Any]) -> PhysicalParams:
    """Validate a flat key-value mapping and convert it to rad/s"""
    if not isinstance(document, Mapping):
        raise ConfigError("Config document must be a key-value object", field="<root>")

    unknown = sorted(set(document) - KNOWN_KEYS)
    if unknown:
        raise ConfigError(f"Unknown config key: {unknown[0]}", field=unknown[0])
    for key in REQUIRED_KEYS:
        if key not in document:
            raise ConfigError(f"Missing required field: {key}", field=key)
    for first, second in EXCLUSIVE_PAIRS:
        present = [k for k in (first, second) if k in document]
        if len(present) != 1:
            raise ConfigError(f"Exactly one of {first} or {second} is required", field=first)

    try:
        units = Units(document["units"])
    except ValueError:
        raise ConfigError(f"units must be one of {[u.value for u in Units]}, "
                          f"got {document['units']!r}", field="units") from None

    scale = TWO_PI if units is Units.HZ_2PI else 1.0
    values: Dict[str, float] = {}
    for key in document:
        if key == "units":
            continue
        number = _number(document, key)
        values[key] = number * scale if key in FREQUENCY_KEYS else number

    if "q_factor" in values:
        q_factor = values.pop("q_factor")
        if q_factor <= 0:
            raise ConfigError(f"q_factor must be > 0, got {q_factor!r}", field="q_factor")
        values["gamma_m"] = values["omega_m"] / q_factor
    if "detuning" in values:
        values["omega_l"] = values["omega_c"] + values.pop("detuning")

    return PhysicalParams(**values)


def load_params(config_text: str) -> PhysicalParams:
    try:
        document = json.loads(config_text)
    except json.JSONDecodeError as e:
        raise ConfigError(f"Config is not valid JSON: {e}", field="<root>") from e
    return parse_params(document)


def read_document(path: Union[str, Path]) -> Dict[str, Any]:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigError(f"Cannot read config file {path}: {e.strerror or e}", path=str(path)) from e
    try:
        return json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError(f"Config file {path} is not valid JSON: {e}", path=str(path)) from e


def load_params_file(path: Union[str, Path],
                     overrides: Optional[Mapping[str, float]] = None) -> PhysicalParams:
    document = read_document(path)
    if overrides:
        document = apply_overrides(document, overrides)
    return parse_params(document)


def apply_overrides(document: Mapping[str, Any], overrides: Mapping[str, float]) -> Dict[str, Any]:
    """Overlay key=value pairs on a raw document, keeping exclusive pairs consistent"""
    merged = dict(document)
    for key, value in overrides.items():
        if key not in KNOWN_KEYS or key == "units":
            raise ConfigError(f"Cannot override unknown config key: {key}", field=key)
        for first, second in EXCLUSIVE_PAIRS:
            if key == first:
                merged.pop(second, None)
            elif key == second:
                merged.pop(first, None)
        merged[key] = value
    return merged


def serialize_params(p: PhysicalParams) -> str:
    """Full-precision JSON; load_params inverts it exactly"""
    document: Dict[str, Any] = {"units": Units.RAD_S.value}
    document.update(asdict(p))
    return json.dumps(document, indent=2)


def parse_assignments(pairs: Iterable[str]) -> Dict[str, float]:
    """Parse `key=value` strings as used by --override"""
    parsed: Dict[str, float] = {}
    for pair in pairs:
        key, sep, raw = pair.partition("=")
        key = key.strip()
        if not sep or not key:
            raise ConfigError(f"Override must look like key=value, got {pair!r}", field=pair)
        try:
            parsed[key] = float(raw)
        except ValueError:
            raise ConfigError(f"Override {key} is not numeric: {raw!r}", field=key) from None
    return parsed
