"""Scenario files: TOML with the unit spelled out in every key name.

Every section is optional; missing keys take the defaults below, which
describe the cesium slow-light HOM experiment.  Unknown keys are rejected so
that a misspelt unit suffix cannot silently fall back to a default.
"""

from __future__ import annotations

import copy
import hashlib
import json
import sys
from dataclasses import dataclass
from importlib import resources

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

import numpy as np

from . import __version__
from .correlation import sigma_for_visibility
from .errors import ConfigurationError
from .models import DetectorModel, EmitterModel, InterferometerConfig, RunConfig
from .vapor import VaporCell, cesium_d1_data, optical_response, window_center
from .wavepacket import TWO_PI, FrequencyGrid

FIGURES = ("1c", "2a", "2b", "2c", "3a", "3b", "4a", "4b")

DEFAULTS = {
    "vapor": {"temperature_C": 105.0, "length_cm": 10.0},
    "grid": {"spacing_MHz": 2.0, "points": 2**15},
    "emitter": {
        "tau_ns": 0.43,
        "sigma_GHz": "fit",
        "visibility_target": 0.53,
        "carrier_GHz": "window_center",
        "repetition_ns": 6.5,
        "g2_zero": 0.014,
    },
    "interferometer": {
        "path_delay_ns": 6.5,
        "polarization": "parallel",
        "bs1_transmission": 0.5,
        "bs2_transmission": 0.5,
        "vapor_in_path": False,
        "bypass": False,
    },
    "detector": {"jitter_fwhm_ps": 400.0, "efficiency": 0.1, "dead_time_ns": 0.0},
    "run": {"pulses": 1_000_000, "seed": 0, "samples": 4000, "workers": 1, "dark_count_rate_Hz": 0.0},
    "output": {
        "modes": ["distinct_ports", "same_port"],
        "bin_width_ps": 50.0,
        "n_peaks": 7,
        "coincidence_window_ns": 3.0,
        "t_min_ns": -2.0,
        "t_max_ns": 20.0,
        "tcspc_bin_ps": 20.0,
        "sigma_scan_GHz": [],
        "delta_t_max_ns": 3.25,
    },
}


def _merge(base, override, where=""):
    out = copy.deepcopy(base)
    for key, value in override.items():
        if key not in base:
            raise ConfigurationError(f"unknown scenario key {where}{key!r}")
        if isinstance(base[key], dict):
            if not isinstance(value, dict):
                raise ConfigurationError(f"scenario key {where}{key!r} must be a table")
            out[key] = _merge(base[key], value, f"{where}{key}.")
        else:
            out[key] = value
    return out


def preset_text(figure):
    if figure not in FIGURES:
        raise ConfigurationError(f"unknown figure {figure!r}; choose from {', '.join(FIGURES)}")
    return resources.files("fockflow.scenarios").joinpath(f"fig{figure}.toml").read_text()


def load_raw(path=None, figure=None, overrides=None):
    """Merge defaults, a preset, a scenario file and ``{section: {key: value}}`` overrides."""
    raw = copy.deepcopy(DEFAULTS)
    try:
        if figure is not None:
            raw = _merge(raw, tomllib.loads(preset_text(figure)))
        if path is not None:
            with open(path, "rb") as fh:
                raw = _merge(raw, tomllib.load(fh))
    except tomllib.TOMLDecodeError as exc:
        raise ConfigurationError(f"scenario is not valid TOML: {exc}") from None
    for section, values in (overrides or {}).items():
        raw = _merge(raw, {section: values})
    return raw


def scenario_hash(raw):
    canon = json.dumps(raw, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode()).hexdigest()


@dataclass(frozen=True, eq=False)
class Scenario:
    """Validated scenario: model objects ready for the pipelines."""

    raw: dict
    cell: VaporCell
    grid: FrequencyGrid
    emitter: EmitterModel
    interferometer: InterferometerConfig
    detector: DetectorModel
    run: RunConfig

    @property
    def hash(self):
        return scenario_hash(self.raw)

    @property
    def header(self):
        return f"# fockflow {__version__}, scenario hash {self.hash}"

    @property
    def output(self):
        return self.raw["output"]

    @property
    def response(self):
        return optical_response(self.cell, self.grid)

    @property
    def medium(self):
        """``(response, length)`` when the photons cross the vapor, else ``(None, 0.0)``."""
        if not self.interferometer.vapor_in_path:
            return None, 0.0
        return self.response, self.cell.length


def _number(section, key, raw, positive=False, allow_zero=True):
    value = raw[section][key]
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigurationError(f"{section}.{key} must be a number, got {value!r}")
    if positive and not (value > 0 or (allow_zero and value == 0)):
        raise ConfigurationError(f"{section}.{key} must be {'non-negative' if allow_zero else 'positive'}")
    return float(value)


def build(raw):
    """Validate every section and construct the model objects."""
    temperature = _number("vapor", "temperature_C", raw) + 273.15
    cell = VaporCell.cesium_d1(temperature, _number("vapor", "length_cm", raw, positive=True) * 1e-2)
    points = raw["grid"]["points"]
    spacing = TWO_PI * _number("grid", "spacing_MHz", raw, True, False) * 1e6
    grid = FrequencyGrid(cesium_d1_data().reference_frequency, spacing, int(points))

    e = raw["emitter"]
    tau = _number("emitter", "tau_ns", raw, True, False) * 1e-9
    sigma = e["sigma_GHz"]
    if sigma == "fit":
        sigma = sigma_for_visibility(_number("emitter", "visibility_target", raw), tau)
    else:
        sigma = TWO_PI * _number("emitter", "sigma_GHz", raw, positive=True) * 1e9
    carrier = e["carrier_GHz"]
    if carrier == "window_center":
        carrier = window_center(optical_response(cell, grid))
    else:
        carrier = TWO_PI * _number("emitter", "carrier_GHz", raw) * 1e9
    emitter = EmitterModel(
        tau=tau,
        sigma=sigma,
        carrier=carrier,
        repetition_period=_number("emitter", "repetition_ns", raw, True, False) * 1e-9,
        g2_zero=_number("emitter", "g2_zero", raw),
    )

    i = raw["interferometer"]
    t1 = _number("interferometer", "bs1_transmission", raw)
    t2 = _number("interferometer", "bs2_transmission", raw)
    ifm = InterferometerConfig(
        path_delay=_number("interferometer", "path_delay_ns", raw, True, False) * 1e-9,
        polarization=i["polarization"],
        bs1=(t1, 1.0 - t1),
        bs2=(t2, 1.0 - t2),
        vapor_in_path=bool(i["vapor_in_path"]),
        bypass=bool(i["bypass"]),
    )

    det = DetectorModel(
        jitter_fwhm=_number("detector", "jitter_fwhm_ps", raw, positive=True) * 1e-12,
        efficiency=_number("detector", "efficiency", raw),
        dead_time=_number("detector", "dead_time_ns", raw, positive=True) * 1e-9,
    )

    r = raw["run"]
    for key in ("pulses", "seed", "samples", "workers"):
        if isinstance(r[key], bool) or not isinstance(r[key], int):
            raise ConfigurationError(f"run.{key} must be an integer")
    run = RunConfig(
        n_pulses=r["pulses"],
        seed=r["seed"],
        emitter=emitter,
        interferometer=ifm,
        detectors={ch: det for ch in (3, 4, 5, 6)},
        vapor=cell if ifm.vapor_in_path else None,
        dark_count_rate=_number("run", "dark_count_rate_Hz", raw, positive=True),
    )

    o = raw["output"]
    for key in ("bin_width_ps", "coincidence_window_ns", "tcspc_bin_ps", "delta_t_max_ns"):
        _number("output", key, raw, True, False)
    if not isinstance(o["n_peaks"], int) or o["n_peaks"] < 1 or o["n_peaks"] % 2 == 0:
        raise ConfigurationError("output.n_peaks must be a positive odd integer")
    if o["t_max_ns"] <= o["t_min_ns"]:
        raise ConfigurationError("output.t_max_ns must exceed output.t_min_ns")
    if any(m not in ("distinct_ports", "same_port") for m in o["modes"]):
        raise ConfigurationError("output.modes may contain 'distinct_ports' and 'same_port'")
    if np.any(np.asarray(o["sigma_scan_GHz"], dtype=float) < 0):
        raise ConfigurationError("output.sigma_scan_GHz must be non-negative")
    return Scenario(raw, cell, grid, emitter, ifm, det, run)


def load(path=None, figure=None, overrides=None):
    return build(load_raw(path, figure, overrides))
