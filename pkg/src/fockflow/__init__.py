"""Simulation of HOM interference and slow-light propagation of photon Fock states."""

__version__ = "0.1.0"

from .correlation import (
    CorrelationHistogram,
    DetuningSampler,
    ensemble_g2_closed_form,
    ensemble_g2_model,
    ensemble_g2_numeric,
    g2_distinct,
    g2_orthogonal,
    g2_same,
    peak_pattern,
    sigma_for_visibility,
    tcspc_one_photon,
    tcspc_two_photon,
    visibility,
)
from .errors import ConfigurationError, ContractError, DomainError, EventFileError, FockflowError
from .events import EventRecord, read_events, write_events
from .models import DetectorModel, EmitterModel, InterferometerConfig, RunConfig
from .montecarlo import correlate_events, heralded_tcspc, simulate_stream
from .vapor import VaporCell, group_delay, number_density, optical_response, transmission_spectrum
from .wavepacket import (
    FrequencyGrid,
    PhotonWavepacket,
    lorentzian_amplitude,
    propagate,
    survival_probability,
    temporal_centroid,
    to_time_domain,
)
