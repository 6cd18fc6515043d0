"""System parameters: unit normalization at the config boundary.

Every quantity is converted exactly once, when a config document is read, to
SI units on a linear scale. Downstream modules never see dB values. Derived
quantities (sensing/communication intensities, data symbols, slot length) are
properties so they can never go stale.
"""
from __future__ import annotations

import dataclasses
import json
import math
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Any, Mapping

from .errors import ConfigError

__all__ = [
    "SystemParameters",
    "from_config",
    "to_config",
    "load_config",
    "default_config",
    "default_parameters",
    "effective_aleph",
    "UNITS",
    "FIELD_DIMENSIONS",
    "convert",
]


def _db(x):
    return 10.0 ** (x / 10.0)


def _dbm(x):
    return 10.0 ** (x / 10.0) / 1000.0


# unit name -> (dimension, to-SI converter)
UNITS = {
    "linear": ("ratio", float),
    "db": ("ratio", _db),
    "dbi": ("ratio", _db),
    "dbsm": ("area", _db),
    "m2": ("area", float),
    "w": ("power", float),
    "mw": ("power", lambda x: x / 1000.0),
    "dbm": ("power", _dbm),
    "dbw": ("power", _db),
    "per_m2": ("intensity", float),
    "per_km2": ("intensity", lambda x: x / 1e6),
    "s": ("time", float),
    "ms": ("time", lambda x: x / 1e3),
    "us": ("time", lambda x: x / 1e6),
    "hz": ("frequency", float),
    "khz": ("frequency", lambda x: x * 1e3),
    "mhz": ("frequency", lambda x: x * 1e6),
    "m": ("length", float),
    "km": ("length", lambda x: x * 1e3),
    "rad": ("angle", float),
    "deg": ("angle", math.radians),
    "pi_rad": ("angle", lambda x: x * math.pi),
    "count": ("count", float),
    "symbols": ("count", float),
    "bits": ("count", float),
}

# SI unit used when re-emitting a normalized document.
_SI_UNIT = {
    "ratio": "linear",
    "area": "m2",
    "power": "w",
    "intensity": "per_m2",
    "time": "s",
    "frequency": "hz",
    "length": "m",
    "angle": "rad",
    "count": "count",
}

# pilot_snr is a normalized SNR; a dBm entry (as labelled in the defaults
# table) is converted to watts like every other dBm quantity.
FIELD_DIMENSIONS = {
    "lambda_total": ("intensity",),
    "lambda_u": ("intensity",),
    "beta": ("ratio",),
    "n_antennas": ("count",),
    "alpha": ("ratio",),
    "power": ("power",),
    "bandwidth_s": ("frequency",),
    "bandwidth_c": ("frequency",),
    "scan_interval": ("time",),
    "paoi_threshold": ("time",),
    "packet_bits": ("count",),
    "gain_tx": ("ratio",),
    "gain_rx": ("ratio",),
    "rcs_mean": ("area",),
    "max_range": ("length",),
    "detect_threshold": ("ratio",),
    "beam_halfwidth": ("angle",),
    "noise_sensing": ("power",),
    "coherence_symbols": ("count",),
    "pilot_symbols": ("count",),
    "blocklength": ("count",),
    "pilot_snr": ("ratio", "power"),
    "sinr_threshold": ("ratio",),
    "wavelength": ("length",),
    "aleph_mean": ("count", "ratio"),
    "serving_radius": ("length",),
}

_OPTIONAL = {"aleph_mean", "serving_radius"}
_INTEGER = {"n_antennas", "coherence_symbols", "pilot_symbols", "blocklength", "packet_bits"}


def convert(value, unit: str, name: str = "value") -> float:
    """Convert ``value`` given in ``unit`` to SI/linear."""
    unit_key = str(unit).lower()
    if unit_key not in UNITS:
        raise ConfigError(f"unknown unit {unit!r}", field=name)
    dims = FIELD_DIMENSIONS.get(name)
    dim, fn = UNITS[unit_key]
    if dims is not None and dim not in dims:
        raise ConfigError(f"unit {unit!r} has dimension {dim}, expected one of {dims}", field=name)
    try:
        x = float(value)
    except (TypeError, ValueError):
        raise ConfigError(f"value {value!r} is not a number", field=name) from None
    if not math.isfinite(x):
        raise ConfigError("value is not finite", field=name)
    out = fn(x)
    if not math.isfinite(out):
        raise ConfigError(f"value {x!r} {unit} overflows after conversion", field=name)
    return out


@dataclass(frozen=True)
class SystemParameters:
    """Normalized (SI, linear) network parameters.

    Field meanings follow the defaults table: intensities in AP/m^2, powers in
    watts, times in seconds, gains/thresholds as linear ratios.
    """

    lambda_total: float
    lambda_u: float
    beta: float
    n_antennas: int
    alpha: float
    power: float
    bandwidth_s: float
    bandwidth_c: float
    scan_interval: float
    paoi_threshold: float
    packet_bits: int
    gain_tx: float
    gain_rx: float
    rcs_mean: float
    max_range: float
    detect_threshold: float
    beam_halfwidth: float
    noise_sensing: float
    coherence_symbols: int
    pilot_symbols: int
    blocklength: int
    pilot_snr: float
    sinr_threshold: float
    wavelength: float
    aleph_mean: float | None = None
    serving_radius: float | None = None

    def __post_init__(self):
        for f in dataclasses.fields(self):
            v = getattr(self, f.name)
            if v is None:
                if f.name not in _OPTIONAL:
                    raise ConfigError("missing value", field=f.name)
                continue
            if not math.isfinite(v):
                raise ConfigError("value is not finite", field=f.name)
            if v < 0:
                raise ConfigError(f"must be nonnegative, got {v!r}", field=f.name)
        if not 0.0 <= self.beta <= 1.0:
            raise ConfigError(f"must lie in [0, 1], got {self.beta!r}", field="beta")
        if not self.alpha > 2.0:
            raise ConfigError(f"path-loss exponent must exceed 2, got {self.alpha!r}", field="alpha")
        if self.n_antennas < 1:
            raise ConfigError("need at least one antenna", field="n_antennas")
        if self.pilot_symbols < 1:
            raise ConfigError("need at least one pilot symbol", field="pilot_symbols")
        if self.pilot_symbols >= self.coherence_symbols:
            raise ConfigError(
                f"pilot_symbols ({self.pilot_symbols}) must be < coherence_symbols ({self.coherence_symbols})",
                field="pilot_symbols",
            )
        for name in ("scan_interval", "bandwidth_c", "wavelength", "gain_tx", "gain_rx", "rcs_mean", "pilot_snr"):
            if getattr(self, name) <= 0:
                raise ConfigError("must be positive", field=name)
        if self.beam_halfwidth > math.pi:
            raise ConfigError("beam half-width cannot exceed pi", field="beam_halfwidth")

    # derived quantities
    @property
    def lambda_s(self) -> float:
        # complement of lambda_c so the two tiers add back to lambda_total
        return self.lambda_total - self.lambda_c

    @property
    def lambda_c(self) -> float:
        return self.beta * self.lambda_total

    @property
    def tau_d(self) -> int:
        """Data symbols per coherence interval."""
        return self.coherence_symbols - self.pilot_symbols

    @property
    def slot(self) -> float:
        """Coherence-interval duration T_c in seconds."""
        return self.coherence_symbols / self.bandwidth_c

    def replace(self, **changes) -> "SystemParameters":
        return dataclasses.replace(self, **changes)

    def as_dict(self) -> dict:
        return dataclasses.asdict(self)


def _coerce(name, value):
    if name in _INTEGER:
        iv = int(round(value))
        if abs(iv - value) > 1e-9 * max(1.0, abs(value)):
            raise ConfigError(f"must be an integer, got {value!r}", field=name)
        return iv
    return value


def from_config(raw: Mapping[str, Any]) -> SystemParameters:
    """Build parameters from a ``{name: {"value": x, "unit": u}}`` document.

    A bare number is accepted for dimensionless fields and read as linear.
    Unknown keys are rejected so typos surface early.
    """
    if not isinstance(raw, Mapping):
        raise ConfigError("config document must be a mapping")
    names = {f.name for f in dataclasses.fields(SystemParameters)}
    unknown = sorted(k for k in raw if k not in names and not str(k).startswith("_"))
    if unknown:
        raise ConfigError(f"unknown keys {unknown}")
    kwargs = {}
    for name in names:
        if name not in raw or raw[name] is None:
            if name in _OPTIONAL:
                continue
            raise ConfigError("missing required key", field=name)
        entry = raw[name]
        if isinstance(entry, Mapping):
            if "value" not in entry:
                raise ConfigError("entry lacks 'value'", field=name)
            unit = entry.get("unit", "linear")
            value = convert(entry["value"], unit, name)
        else:
            dims = FIELD_DIMENSIONS[name]
            if "ratio" not in dims and "count" not in dims:
                raise ConfigError("dimensional value needs an explicit unit", field=name)
            value = convert(entry, "count" if "count" in dims else "linear", name)
        kwargs[name] = _coerce(name, value)
    return SystemParameters(**kwargs)


def to_config(p: SystemParameters) -> dict:
    """Re-emit normalized parameters as a config document in SI units."""
    out = {}
    for f in dataclasses.fields(p):
        v = getattr(p, f.name)
        if v is None:
            continue
        dim = FIELD_DIMENSIONS[f.name][0]
        out[f.name] = {"value": v, "unit": _SI_UNIT[dim]}
    return out


def load_config(path: str | Path) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"params file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"params file is not valid JSON: {exc}") from None


def default_config() -> dict:
    """The bundled default document (defaults table plus wavelength and aleph_mean)."""
    text = resources.files("cfpavp").joinpath("data/defaults.json").read_text(encoding="utf-8")
    return json.loads(text)


def default_parameters(**overrides) -> SystemParameters:
    p = from_config(default_config())
    return p.replace(**overrides) if overrides else p


def effective_aleph(p: SystemParameters) -> float:
    """Expected aggregate number of serving antennas used as the Gamma shape.

    Uses ``aleph_mean`` when configured; otherwise ``N * lambda_c * pi * R_serve^2``.
    """
    if p.aleph_mean is not None:
        aleph = float(p.aleph_mean)
    elif p.serving_radius is not None:
        aleph = p.n_antennas * p.lambda_c * math.pi * p.serving_radius ** 2
    else:
        raise ConfigError("neither aleph_mean nor serving_radius is configured", field="aleph_mean")
    if aleph < 1.0:
        raise ConfigError(f"effective aleph {aleph:.6g} < 1; the Gamma-shape approximation is meaningless", field="aleph_mean")
    return aleph
