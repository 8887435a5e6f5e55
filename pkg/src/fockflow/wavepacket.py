"""Single-photon amplitude spectra on a uniform frequency grid.

Conventions used throughout fockflow
------------------------------------
* Spectra are stored against the detuning ``delta = omega - grid.center``;
  absolute frequency only enters through the vapor response.
* The temporal wavepacket is ``chi(t) = int d(omega)/sqrt(2 pi) exp(-i omega t) chi(omega)``.
  With this kernel a spectral factor ``exp(+i omega T)`` delays the packet by
  ``T``, so propagation multiplies by ``exp(+i omega n(omega) L / c)``.  A
  medium with ``dn/domega > 0`` therefore retards the photon, and
  ``Im n > 0`` attenuates it.
* The constant phase ``exp(i omega_c (t0 + L/c))`` is dropped: every
  observable is a modulus or a product ``chi_a chi_a^*``.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import constants

from .errors import ConfigurationError, ContractError, DomainError

C_LIGHT = constants.c
TWO_PI = 2.0 * np.pi


@dataclass(frozen=True)
class FrequencyGrid:
    """Uniform angular-frequency axis and its conjugate time axis.

    ``center`` is an absolute angular frequency (rad/s); ``spacing`` is the
    angular step.  ``count`` must be a power of two, at least 1024.
    """

    center: float
    spacing: float
    count: int

    def __post_init__(self):
        if not self.spacing > 0:
            raise ConfigurationError(f"grid spacing must be positive, got {self.spacing}")
        n = int(self.count)
        if n < 1024 or n & (n - 1):
            raise ConfigurationError(f"grid count must be a power of two >= 1024, got {self.count}")

    @classmethod
    def default(cls, center):
        """2 MHz steps, 2**15 points: a 500 ns time window."""
        return cls(center=center, spacing=TWO_PI * 2.0e6, count=2**15)

    @property
    def detunings(self):
        return (np.arange(self.count) - self.count // 2) * self.spacing

    @property
    def omega(self):
        return self.center + self.detunings

    @property
    def half_span(self):
        return 0.5 * self.count * self.spacing

    @property
    def time_step(self):
        return TWO_PI / (self.count * self.spacing)

    @property
    def window(self):
        return TWO_PI / self.spacing

    @property
    def times(self):
        return (np.arange(self.count) - self.count // 2) * self.time_step


def forward_transform(grid, spectrum):
    """Spectrum(s) -> temporal amplitude(s) along the last axis (unitary)."""
    spec = np.fft.ifftshift(spectrum, axes=-1)
    out = np.fft.fftshift(np.fft.fft(spec, axis=-1), axes=-1)
    return out * (grid.spacing / np.sqrt(TWO_PI))


def inverse_transform(grid, samples):
    """Temporal amplitude(s) -> spectrum(s); exact inverse of :func:`forward_transform`."""
    tmp = np.fft.ifftshift(samples, axes=-1)
    out = np.fft.fftshift(np.fft.ifft(tmp, axis=-1), axes=-1)
    return out * (grid.count * grid.time_step / np.sqrt(TWO_PI))


def lorentzian_spectrum(grid, tau, carrier, emission_time=0.0):
    """Lorentzian single-photon amplitude sampled on the grid (not renormalized).

    ``carrier`` may be an array, in which case one row per carrier is returned.
    """
    d = grid.detunings
    carrier = np.asarray(carrier, dtype=float)
    shift = d - carrier[..., None] if carrier.ndim else d - carrier
    pref = np.sqrt(2.0 * tau / np.pi)
    return pref * np.exp(1j * d * emission_time) / (1.0 - 2j * tau * shift)


@dataclass(frozen=True, eq=False)
class PhotonWavepacket:
    """Immutable single-photon amplitude spectrum.

    ``carrier`` is the detuning of the carrier from ``grid.center`` (rad/s).
    ``analytic`` marks packets that still equal the closed-form Lorentzian,
    whose temporal amplitude is then available exactly through
    :meth:`temporal_amplitude`.
    """

    grid: FrequencyGrid
    amplitude: np.ndarray
    carrier: float
    emission_time: float
    tau: float
    initial_norm: float = 1.0
    analytic: bool = field(default=False)

    def __post_init__(self):
        if not self.tau > 0:
            raise ConfigurationError(f"decay constant must be positive, got {self.tau}")
        amp = np.asarray(self.amplitude, dtype=complex)
        if amp.shape != (self.grid.count,):
            raise ContractError("amplitude length does not match the grid")
        amp.setflags(write=False)
        object.__setattr__(self, "amplitude", amp)

    @property
    def norm(self):
        return float(np.sum(np.abs(self.amplitude) ** 2) * self.grid.spacing)

    def temporal_amplitude(self, t):
        """Exact inverse transform of the Lorentzian spectrum, at arbitrary times."""
        if not self.analytic:
            raise DomainError("closed-form temporal amplitude only exists for free Lorentzian packets")
        s = np.asarray(t, dtype=float) - self.emission_time
        env = np.exp(-0.5 * np.clip(s, 0.0, None) / self.tau) / np.sqrt(self.tau)
        step = np.where(s > 0, 1.0, np.where(s == 0, np.sqrt(0.5), 0.0))
        return step * env * np.exp(-1j * self.carrier * s)


def lorentzian_amplitude(grid, tau, carrier=0.0, emission_time=0.0):
    """Normalized Lorentzian photon emitted at ``emission_time``.

    |chi|^2 is a Lorentzian of angular FWHM ``1/tau`` centred on ``carrier``
    (a detuning from ``grid.center``).  The sampled spectrum is renormalized
    on the grid, since the finite window clips the Lorentzian tails.
    """
    if not tau > 0:
        raise ConfigurationError(f"decay constant must be positive, got {tau}")
    if abs(carrier) > 0.5 * grid.half_span:
        raise ConfigurationError("carrier lies outside the central half of the grid")
    if 1.0 / tau > 0.05 * 2.0 * grid.half_span:
        raise ConfigurationError("linewidth 1/tau is not small against the grid span")
    if abs(emission_time) > 0.25 * grid.window:
        raise ConfigurationError("emission time lies outside the central half of the time window")
    amp = lorentzian_spectrum(grid, tau, carrier, emission_time)
    amp = amp / np.sqrt(np.sum(np.abs(amp) ** 2) * grid.spacing)
    return PhotonWavepacket(grid, amp, float(carrier), float(emission_time), float(tau), 1.0, analytic=True)


def to_time_domain(wp):
    """Return ``(times, chi_t)`` on the conjugate time axis of the grid."""
    return wp.grid.times, forward_transform(wp.grid, wp.amplitude)


def from_time_domain(grid, samples):
    """Spectrum of temporal samples laid out on ``grid.times``."""
    samples = np.asarray(samples, dtype=complex)
    if samples.shape[-1] != grid.count:
        raise ContractError("sample count does not match the grid")
    return inverse_transform(grid, samples)


def propagation_factor(response, length, relative_to_vacuum=False):
    """Spectral transfer function ``exp(i omega n L / c)`` without its constant phase."""
    grid = response.grid
    phase = grid.omega * (response.refractive_index - 1.0) * (length / C_LIGHT)
    if not relative_to_vacuum:
        phase = phase + grid.detunings * (length / C_LIGHT)
    return np.exp(1j * phase)


def propagate(wp, response, length, relative_to_vacuum=False):
    """Propagate a wavepacket through ``length`` metres of a dispersive medium.

    With ``relative_to_vacuum`` the vacuum transit ``L/c`` is removed, i.e.
    the result is referenced to a photon that travelled the same geometric
    path in vacuum.
    """
    if response.grid != wp.grid:
        raise ContractError("wavepacket and response live on different grids")
    if length < 0:
        raise DomainError(f"propagation length must be non-negative, got {length}")
    if length == 0:
        return wp
    if response.is_vacuum:
        if relative_to_vacuum:
            return wp
        # pure delay: still a closed-form packet
        factor = np.exp(1j * wp.grid.detunings * (length / C_LIGHT))
        return replace(wp, amplitude=wp.amplitude * factor, emission_time=wp.emission_time + length / C_LIGHT)
    amp = wp.amplitude * propagation_factor(response, length, relative_to_vacuum)
    return replace(wp, amplitude=amp, analytic=False)


def temporal_centroid(wp):
    t, chi = to_time_domain(wp)
    w = np.abs(chi) ** 2
    total = w.sum()
    if total <= 0:
        raise DomainError("centroid of a zero-norm wavepacket is undefined")
    return float(np.dot(t, w) / total)


def survival_probability(wp):
    norm = wp.norm
    if norm <= 0:
        raise DomainError("wavepacket has zero norm")
    return norm / wp.initial_norm


def write_spectrum_csv(path, wp, header=None):
    with open(path, "w", newline="") as fh:
        if header:
            fh.write(header + "\n")
        w = csv.writer(fh)
        w.writerow(["detuning_GHz", "re_chi", "im_chi"])
        for d, a in zip(wp.grid.detunings / TWO_PI / 1e9, wp.amplitude):
            w.writerow([f"{d:.9g}", f"{a.real:.12g}", f"{a.imag:.12g}"])


def write_temporal_csv(path, wp, t_range=None, header=None):
    t, chi = to_time_domain(wp)
    keep = slice(None)
    if t_range is not None:
        keep = (t >= t_range[0]) & (t <= t_range[1])
    with open(path, "w", newline="") as fh:
        if header:
            fh.write(header + "\n")
        w = csv.writer(fh)
        w.writerow(["time_ns", "intensity"])
        for ti, ii in zip(t[keep] * 1e9, np.abs(chi[keep]) ** 2):
            w.writerow([f"{ti:.9g}", f"{ii:.12g}"])
