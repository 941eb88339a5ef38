"""Scenario parameters and unit handling.

All internal arithmetic is in SI units (watts, Hz, meters, bits/s).  Powers
that arrive in dBm are converted once at load time; the noise density stays
in dBm/Hz because the noise floor is only ever needed together with the
bandwidth.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields, replace
from typing import Any, Mapping

try:
    import tomllib
except ModuleNotFoundError:  # python < 3.11
    import tomli as tomllib

from .errors import ConfigError

SPEED_OF_LIGHT = 299_792_458.0  # m/s, exact by definition


def dbm_to_watt(p_dbm: float) -> float:
    return 10.0 ** (p_dbm / 10.0) / 1000.0


def watt_to_dbm(p_watt: float) -> float:
    return 10.0 * math.log10(p_watt * 1000.0)


@dataclass(frozen=True)
class ScenarioConfig:
    """Physical, power and algorithmic parameters of one scenario."""

    region_width_D1: float = 10.0          # m, extent along y
    region_length_D2: float = 20.0         # m, extent along x = waveguide length
    waveguide_height_d: float = 3.0        # m
    num_candidate_positions_L: int = 40
    num_users_K: int = 4
    bandwidth_B: float = 10e6              # Hz
    carrier_frequency_fc: float = 28e9     # Hz
    noise_psd_N0: float = -174.0           # dBm/Hz
    effective_refractive_index_n_eff: float = 1.4
    waveguide_attenuation_kappa: float = 0.02   # dB/m
    static_power_P_static: float = 0.1     # W
    activation_power_P_act: float = dbm_to_watt(3.0)  # W per active antenna
    transmit_budget_P_t: float = dbm_to_watt(20.0)    # W
    amplifier_efficiency_eta: float = 1.0  # in (0, 1]
    min_rate_R_min: float = 10e6           # bits/s, identical for every user
    dinkelbach_tolerance_eps: float = 1e-6
    rng_seed: int = 1

    def __post_init__(self) -> None:
        positive = {
            "region_width_D1": self.region_width_D1,
            "region_length_D2": self.region_length_D2,
            "waveguide_height_d": self.waveguide_height_d,
            "bandwidth_B": self.bandwidth_B,
            "carrier_frequency_fc": self.carrier_frequency_fc,
            "effective_refractive_index_n_eff": self.effective_refractive_index_n_eff,
            "static_power_P_static": self.static_power_P_static,
            "activation_power_P_act": self.activation_power_P_act,
            "transmit_budget_P_t": self.transmit_budget_P_t,
            "dinkelbach_tolerance_eps": self.dinkelbach_tolerance_eps,
        }
        for name, value in positive.items():
            if not (value > 0.0) or not math.isfinite(value):
                raise ConfigError(f"{name} must be strictly positive, got {value!r}")
        if not (0.0 < self.amplifier_efficiency_eta <= 1.0):
            raise ConfigError(
                f"amplifier_efficiency_eta must lie in (0, 1], got {self.amplifier_efficiency_eta!r}"
            )
        if self.num_candidate_positions_L < 1:
            raise ConfigError("num_candidate_positions_L must be >= 1")
        if self.num_users_K < 1:
            raise ConfigError("num_users_K must be >= 1")
        if self.waveguide_attenuation_kappa < 0.0:
            raise ConfigError("waveguide_attenuation_kappa must be >= 0 dB/m")
        if self.min_rate_R_min < 0.0:
            raise ConfigError("min_rate_R_min must be >= 0")
        if not math.isfinite(self.noise_psd_N0):
            raise ConfigError("noise_psd_N0 must be finite (dBm/Hz)")
        if self.rng_seed < 0:
            raise ConfigError("rng_seed must be a non-negative integer")

    @property
    def wavelength(self) -> float:
        """Free-space wavelength, m."""
        return SPEED_OF_LIGHT / self.carrier_frequency_fc

    @property
    def guided_wavelength(self) -> float:
        """Wavelength inside the waveguide, m."""
        return self.wavelength / self.effective_refractive_index_n_eff

    @property
    def noise_power(self) -> float:
        """Noise power over the full band, W."""
        return dbm_to_watt(self.noise_psd_N0) * self.bandwidth_B


# Keys a sweep description may add next to the plain scenario fields.
SWEEP_KEYS = frozenset({"sweep_variable", "sweep_values", "schemes", "num_trials"})

# File keys that carry dBm values for fields stored in watts (or dBm/Hz).
_DBM_KEYS = {
    "P_t_dBm": ("transmit_budget_P_t", True),
    "P_act_dBm": ("activation_power_P_act", True),
    "N0_dBm_per_Hz": ("noise_psd_N0", False),  # canonical field is already dBm/Hz
}

_INT_FIELDS = {"num_candidate_positions_L", "num_users_K", "rng_seed"}


def _coerce(name: str, value: Any) -> Any:
    if name in _INT_FIELDS:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{name} must be an integer, got {value!r}")
        if isinstance(value, float):
            if not value.is_integer():
                raise ConfigError(f"{name} must be an integer, got {value!r}")
            value = int(value)
        return value
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{name} must be a number, got {value!r}")
    return float(value)


def scenario_from_mapping(mapping: Mapping[str, Any]) -> ScenarioConfig:
    """Build a ScenarioConfig from a flat mapping of field names to values.

    Accepts the dBm aliases ``P_t_dBm``, ``P_act_dBm`` and ``N0_dBm_per_Hz``;
    sweep-description keys are ignored so one file can drive both ``run`` and
    ``sweep``.  Any other unknown key is an error.
    """
    known = {f.name for f in fields(ScenarioConfig)}
    kwargs: dict[str, Any] = {}
    for key, value in mapping.items():
        if key in SWEEP_KEYS:
            continue
        if key in _DBM_KEYS:
            target, is_power = _DBM_KEYS[key]
            if target in kwargs:
                raise ConfigError(f"{key} duplicates {target}")
            level = _coerce(key, value)
            kwargs[target] = dbm_to_watt(level) if is_power else level
        elif key in known:
            if key in kwargs:
                raise ConfigError(f"{key} given both directly and as a dBm alias")
            kwargs[key] = _coerce(key, value)
        else:
            raise ConfigError(f"unknown config key {key!r}")
    return ScenarioConfig(**kwargs)


def load_config_document(path: str) -> dict[str, Any]:
    """Parse a flat TOML config file into a plain dict."""
    with open(path, "rb") as fh:
        try:
            return tomllib.load(fh)
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"{path}: {exc}") from exc


def load_scenario(path: str) -> ScenarioConfig:
    return scenario_from_mapping(load_config_document(path))


def with_overrides(config: ScenarioConfig, **changes: Any) -> ScenarioConfig:
    """Frozen-dataclass update that re-runs validation."""
    return replace(config, **changes)
