"""Linear optical response of a thermal cesium vapor around the D1 line.

Every hyperfine component contributes a Doppler-broadened (Voigt) complex
susceptibility, evaluated through the Faddeeva function ``w(z)``:

    chi_j(delta) = N lambda^3 Gamma_j s_j / (8 pi^2) * i sqrt(pi) / (k u) * w((delta - delta_j + i Gamma_j / 2) / (k u))

with ``u = sqrt(2 k_B T / m)`` the most probable speed and ``s_j`` the
population-weighted line strength (the strengths of a line list sum to one
for the full D1 manifold).  The refractive index is ``n = 1 + chi/2`` and the
intensity absorption coefficient ``alpha = 2 (omega/c) Im n``.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources

import numpy as np
from scipy import constants
from scipy.special import wofz

from .errors import ConfigurationError, DomainError
from .wavepacket import C_LIGHT, TWO_PI, FrequencyGrid

K_B = constants.k
ATM = constants.atm
AMU = constants.physical_constants["atomic mass constant"][0]

T_MIN, T_MAX = 273.0, 500.0


@dataclass(frozen=True)
class AtomicLine:
    """One hyperfine component; all frequencies are angular (rad/s)."""

    detuning: float
    relative_strength: float
    natural_linewidth: float

    def __post_init__(self):
        if not self.relative_strength > 0:
            raise ConfigurationError("line strength must be positive")
        if not self.natural_linewidth > 0:
            raise ConfigurationError("natural linewidth must be positive")


@dataclass(frozen=True)
class VaporPressureLaw:
    """Two-phase correlation ``log10(p) = A + B/T + C log10(T)``."""

    name: str
    unit_pa: float
    melting_point: float
    solid: tuple
    liquid: tuple

    def pressure(self, temperature):
        """Saturated vapor pressure in pascal."""
        a, b, c = self.solid if temperature < self.melting_point else self.liquid
        return self.unit_pa * 10.0 ** (a + b / temperature + c * np.log10(temperature))


@dataclass(frozen=True)
class LineData:
    lines: tuple
    atomic_mass: float
    reference_wavelength: float
    vapor_pressure: VaporPressureLaw
    metadata: dict = field(default_factory=dict, compare=False)

    @property
    def reference_frequency(self):
        return TWO_PI * C_LIGHT / self.reference_wavelength


def parse_line_data(text):
    """Parse the line-data format shipped in ``fockflow/data``."""
    meta = {}
    rows = []
    for num, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            key, sep, value = line[1:].partition(":")
            if sep:
                meta[key.strip()] = value.strip()
            continue
        try:
            d, s, g = (float(x) for x in line.split(","))
        except ValueError:
            raise ConfigurationError(f"line data row {num} needs three numbers: {line!r}") from None
        rows.append((d, s, g))
    try:
        units = {"atm": ATM, "Pa": 1.0, "torr": constants.torr}
        law = VaporPressureLaw(
            name=meta["vapor_pressure"],
            unit_pa=units[meta.get("vapor_pressure_unit", "atm")],
            melting_point=float(meta["vapor_pressure_melting_K"]),
            solid=tuple(float(x) for x in meta["vapor_pressure_solid"].split()),
            liquid=tuple(float(x) for x in meta["vapor_pressure_liquid"].split()),
        )
        mass = float(meta["atomic_mass_u"]) * AMU
        wavelength = float(meta["reference_wavelength_nm"]) * 1e-9
    except KeyError as exc:
        raise ConfigurationError(f"line data is missing header field {exc}") from None
    lines = tuple(
        AtomicLine(TWO_PI * d * 1e9, s, TWO_PI * g * 1e6) for d, s, g in rows
    )
    return LineData(lines, mass, wavelength, law, meta)


@lru_cache(maxsize=None)
def cesium_d1_data():
    text = resources.files("fockflow.data").joinpath("cs_d1.dat").read_text()
    return parse_line_data(text)


def number_density(temperature, law=None):
    """Saturated cesium number density (m^-3) at ``temperature`` kelvin."""
    if not T_MIN <= temperature <= T_MAX:
        raise DomainError(f"temperature {temperature} K outside the valid interval [{T_MIN}, {T_MAX}] K")
    law = law or cesium_d1_data().vapor_pressure
    return law.pressure(temperature) / (K_B * temperature)


@dataclass(frozen=True)
class VaporCell:
    """Vapor cell: temperature (K), length (m) and the lines it absorbs on.

    ``density`` overrides the saturated number density when given.
    """

    temperature: float
    length: float
    lines: tuple
    atomic_mass: float
    reference_frequency: float
    density: float | None = None

    def __post_init__(self):
        if not self.temperature > 0:
            raise ConfigurationError("temperature must be positive")
        if self.length < 0:
            raise ConfigurationError("cell length must be non-negative")
        object.__setattr__(self, "lines", tuple(self.lines))

    @classmethod
    def cesium_d1(cls, temperature=378.15, length=0.10, **kwargs):
        data = cesium_d1_data()
        return cls(temperature, length, data.lines, data.atomic_mass, data.reference_frequency, **kwargs)

    @property
    def number_density(self):
        if self.density is not None:
            return self.density
        return number_density(self.temperature)

    @property
    def doppler_width(self):
        """1/e half-width ``k u`` of the Doppler profile (rad/s)."""
        u = np.sqrt(2.0 * K_B * self.temperature / self.atomic_mass)
        return self.reference_frequency / C_LIGHT * u


@dataclass(frozen=True, eq=False)
class OpticalResponse:
    """Complex refractive index sampled on a frequency grid."""

    grid: FrequencyGrid
    refractive_index: np.ndarray
    line_detunings: tuple = ()

    def __post_init__(self):
        n = np.asarray(self.refractive_index, dtype=complex)
        n.setflags(write=False)
        object.__setattr__(self, "refractive_index", n)

    @property
    def is_vacuum(self):
        return bool(np.all(self.refractive_index == 1.0))

    @property
    def susceptibility(self):
        return 2.0 * (self.refractive_index - 1.0)

    @property
    def absorption_coefficient(self):
        return 2.0 * self.grid.omega / C_LIGHT * self.refractive_index.imag


def vacuum_response(grid):
    return OpticalResponse(grid, np.ones(grid.count, dtype=complex))


def optical_response(cell, grid):
    """Refractive index of ``cell`` on ``grid`` (linear, weak-probe response)."""
    if not cell.lines:
        return OpticalResponse(grid, np.ones(grid.count, dtype=complex))
    ku = cell.doppler_width
    fwhm = 2.0 * np.sqrt(np.log(2.0)) * ku
    offset = cell.reference_frequency - grid.center
    positions = [line.detuning + offset for line in cell.lines]
    margin = 5.0 * fwhm
    if min(positions) - margin < -grid.half_span or max(positions) + margin > grid.half_span:
        raise ConfigurationError("frequency grid does not cover every line with a 5 Doppler-width margin")
    wavelength = TWO_PI * C_LIGHT / cell.reference_frequency
    density = cell.number_density
    d = grid.detunings
    chi = np.zeros(grid.count, dtype=complex)
    for pos, line in zip(positions, cell.lines):
        gamma = line.natural_linewidth
        scale = density * wavelength**3 * gamma * line.relative_strength / (8.0 * np.pi**2)
        z = (d - pos + 0.5j * gamma) / ku
        chi += scale * 1j * np.sqrt(np.pi) / ku * wofz(z)
    return OpticalResponse(grid, 1.0 + 0.5 * chi, tuple(positions))


def transmission_spectrum(response, length):
    """Beer-Lambert intensity transmission ``exp(-alpha L)``."""
    if length < 0:
        raise DomainError(f"length must be non-negative, got {length}")
    if length == 0:
        return np.ones(response.grid.count)
    return np.exp(-response.absorption_coefficient * length)


def _index_at(grid, detuning):
    k = int(round(detuning / grid.spacing)) + grid.count // 2
    if not 1 <= k <= grid.count - 2:
        raise DomainError("frequency lies at or beyond the grid edge")
    return k


def group_index_spectrum(response):
    """``Re d(omega n)/d omega`` by central differences on the grid."""
    n = response.refractive_index.real
    dn = np.gradient(n, response.grid.spacing)
    return n + response.grid.omega * dn


def group_index(response, detuning):
    k = _index_at(response.grid, detuning)
    grid = response.grid
    n = response.refractive_index.real
    dn = (n[k + 1] - n[k - 1]) / (2.0 * grid.spacing)
    return float(n[k] + grid.omega[k] * dn)


def group_delay(response, length, detuning):
    """Traversal time (s) of ``length`` metres at the grid point nearest ``detuning``.

    The excess slow-light delay is this value minus ``length / c``.
    """
    if length < 0:
        raise DomainError(f"length must be non-negative, got {length}")
    return length / C_LIGHT * group_index(response, detuning)


def window_center(response):
    """Detuning of the transmission maximum inside the widest gap between lines.

    For Cs D1 that gap separates the F=4 and F=3 ground-state groups.
    """
    pos = np.sort(np.asarray(response.line_detunings))
    if pos.size < 2:
        raise DomainError("a transmission window needs at least two lines")
    gap = int(np.argmax(np.diff(pos)))
    d = response.grid.detunings
    inside = (d > pos[gap]) & (d < pos[gap + 1])
    alpha = np.where(inside, response.absorption_coefficient, np.inf)
    return float(d[int(np.argmin(alpha))])


def write_spectrum_csv(path, response, length, header=None):
    d = response.grid.detunings
    trans = transmission_spectrum(response, length)
    delay = length / C_LIGHT * group_index_spectrum(response)
    with open(path, "w", newline="") as fh:
        if header:
            fh.write(header + "\n")
        w = csv.writer(fh)
        w.writerow(["omega_detuning_GHz", "transmission", "group_delay_ns"])
        for row in zip(d / TWO_PI / 1e9, trans, delay * 1e9):
            w.writerow([f"{row[0]:.9g}", f"{row[1]:.12g}", f"{row[2]:.12g}"])
