"""Parameter records shared by the analytic and Monte-Carlo pipelines.

All quantities are SI: seconds, rad/s, metres.  Frequencies called
``carrier`` or ``detuning`` are measured from the frequency-grid centre,
which by default is the cesium D1 reference frequency.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError

PARALLEL = "parallel"
ORTHOGONAL = "orthogonal"


@dataclass(frozen=True)
class EmitterModel:
    """Quantum-dot emission parameters.

    ``sigma`` is the standard deviation of a single photon's carrier; the
    detuning between two independent photons then has variance ``2 sigma^2``.
    """

    tau: float = 0.43e-9
    sigma: float = 0.0
    carrier: float = 0.0
    repetition_period: float = 6.5e-9
    g2_zero: float = 0.014

    def __post_init__(self):
        if not self.tau > 0:
            raise ConfigurationError("decay constant must be positive")
        if self.sigma < 0:
            raise ConfigurationError("diffusion width must be non-negative")
        if not self.repetition_period > 0:
            raise ConfigurationError("repetition period must be positive")
        if not 0 <= self.g2_zero < 1:
            raise ConfigurationError("g2(0) must lie in [0, 1)")

    @property
    def two_photon_probability(self):
        """Probability of a second photon per pulse reproducing ``g2_zero``.

        Solves ``g2 = 2 p / (1 + p)^2`` for a source emitting one photon with
        probability ``1 - p`` and two with probability ``p``.
        """
        g = self.g2_zero
        if g == 0:
            return 0.0
        return ((1.0 - g) - np.sqrt(1.0 - 2.0 * g)) / g


@dataclass(frozen=True)
class InterferometerConfig:
    """Unbalanced Mach-Zehnder (BS1) followed by the analysing splitter BS2.

    ``bs1`` and ``bs2`` are (transmission, reflection) pairs.  Photons from
    the short arm enter BS1 at input 1, long-arm photons at input 2; the
    input splitter of the interferometer is balanced.  With ``bypass`` every
    photon goes straight to the detector on channel 3.
    """

    path_delay: float = 6.5e-9
    polarization: str = PARALLEL
    bs1: tuple = (0.5, 0.5)
    bs2: tuple = (0.5, 0.5)
    vapor_in_path: bool = False
    bypass: bool = False

    def __post_init__(self):
        if self.polarization not in (PARALLEL, ORTHOGONAL):
            raise ConfigurationError(f"unknown polarization {self.polarization!r}")
        for name in ("bs1", "bs2"):
            t, r = getattr(self, name)
            if not (0 < t < 1 and 0 < r < 1) or abs(t + r - 1.0) > 1e-12:
                raise ConfigurationError(f"{name} ratios must lie in (0, 1) and sum to 1")
        if not self.path_delay > 0:
            raise ConfigurationError("path delay must be positive")


@dataclass(frozen=True)
class DetectorModel:
    """Single-photon detector: Gaussian timing jitter, efficiency, dead time."""

    jitter_fwhm: float = 400e-12
    efficiency: float = 0.1
    dead_time: float = 0.0

    def __post_init__(self):
        if self.jitter_fwhm < 0:
            raise ConfigurationError("jitter must be non-negative")
        if not 0 < self.efficiency <= 1:
            raise ConfigurationError("efficiency must lie in (0, 1]")
        if self.dead_time < 0:
            raise ConfigurationError("dead time must be non-negative")

    @property
    def jitter_sigma(self):
        return self.jitter_fwhm / (2.0 * np.sqrt(2.0 * np.log(2.0)))


@dataclass(frozen=True)
class RunConfig:
    """Everything :func:`fockflow.montecarlo.simulate_stream` needs."""

    n_pulses: int
    seed: int = 0
    emitter: EmitterModel = field(default_factory=EmitterModel)
    interferometer: InterferometerConfig = field(default_factory=InterferometerConfig)
    detectors: dict = field(default_factory=dict)
    vapor: object = None
    dark_count_rate: float = 0.0

    def __post_init__(self):
        if int(self.n_pulses) < 1:
            raise ConfigurationError("n_pulses must be at least 1")
        if not 0 <= int(self.seed) < 2**64:
            raise ConfigurationError("seed must fit in 64 unsigned bits")
        if self.dark_count_rate < 0:
            raise ConfigurationError("dark-count rate must be non-negative")

    def detector(self, channel):
        return self.detectors.get(channel, DetectorModel())
