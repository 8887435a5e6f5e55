import csv

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fockflow.errors import ConfigurationError, ContractError, DomainError
from fockflow.vapor import vacuum_response
from fockflow.wavepacket import (
    C_LIGHT,
    TWO_PI,
    FrequencyGrid,
    forward_transform,
    from_time_domain,
    inverse_transform,
    lorentzian_amplitude,
    propagate,
    survival_probability,
    temporal_centroid,
    to_time_domain,
    write_spectrum_csv,
    write_temporal_csv,
)

TAU = 0.43e-9


@pytest.fixture(scope="module")
def packet(grid, center):
    return lorentzian_amplitude(grid, TAU, center)


def test_grid_axes_are_conjugate(grid):
    assert grid.time_step * grid.spacing * grid.count == pytest.approx(TWO_PI)
    assert grid.detunings[grid.count // 2] == 0.0
    assert grid.times[grid.count // 2] == 0.0
    assert grid.window == pytest.approx(500e-9)


@pytest.mark.parametrize("count", [1000, 512, 3 * 1024])
def test_grid_rejects_bad_counts(count):
    with pytest.raises(ConfigurationError):
        FrequencyGrid(1e15, 1e7, count)


def test_grid_rejects_nonpositive_spacing():
    with pytest.raises(ConfigurationError):
        FrequencyGrid(1e15, 0.0, 1024)


def test_parseval(packet):
    t, x = to_time_domain(packet)
    e_t = np.sum(np.abs(x) ** 2) * packet.grid.time_step
    assert e_t == pytest.approx(packet.norm, rel=1e-12)
    assert packet.norm == pytest.approx(1.0, rel=1e-12)


def test_transform_round_trip(grid):
    rng = np.random.default_rng(3)
    a = rng.normal(size=grid.count) + 1j * rng.normal(size=grid.count)
    np.testing.assert_allclose(inverse_transform(grid, forward_transform(grid, a)), a, atol=1e-12)
    np.testing.assert_allclose(from_time_domain(grid, forward_transform(grid, a)), a, atol=1e-12)


def test_sampled_packet_matches_closed_form_away_from_the_edge(packet):
    t, x = to_time_domain(packet)
    exact = packet.temporal_amplitude(t)
    late = (t > 1e-9) & (t < 10e-9)
    # residual is the ringing of the Lorentzian clipped at the grid edges
    assert np.abs(x[late] - exact[late]).max() < 5e-3 * np.abs(exact).max()
    assert np.abs(x[t < -1e-9]).max() < 5e-3 * np.abs(exact).max()


def test_closed_form_intensity_is_exponential(packet):
    t = np.linspace(0.01e-9, 3e-9, 50)
    np.testing.assert_allclose(np.abs(packet.temporal_amplitude(t)) ** 2, np.exp(-t / TAU) / TAU, rtol=1e-12)
    assert packet.temporal_amplitude(-1e-9) == 0


def test_free_centroid_is_tau(packet):
    # clipped spectral tails shift the centroid by a few ps
    assert temporal_centroid(packet) == pytest.approx(TAU, abs=5e-12)


def test_emission_time_shifts_the_packet(grid):
    a = lorentzian_amplitude(grid, TAU, 0.0)
    b = lorentzian_amplitude(grid, TAU, 0.0, emission_time=2e-9)
    assert temporal_centroid(b) - temporal_centroid(a) == pytest.approx(2e-9, abs=1e-14)


@pytest.mark.parametrize(
    "kwargs",
    [dict(tau=0.0), dict(carrier=1e12), dict(tau=1e-12), dict(emission_time=200e-9)],
)
def test_lorentzian_rejects_bad_parameters(grid, kwargs):
    args = dict(tau=TAU, carrier=0.0, emission_time=0.0) | kwargs
    with pytest.raises(ConfigurationError):
        lorentzian_amplitude(grid, **args)


def test_amplitude_is_read_only(packet):
    with pytest.raises(ValueError):
        packet.amplitude[0] = 1.0


def test_zero_length_is_identity(packet, response):
    out = propagate(packet, response, 0.0)
    assert out is packet
    assert np.array_equal(propagate(packet, response, 0.0, relative_to_vacuum=True).amplitude, packet.amplitude)


def test_negative_length_rejected(packet, response):
    with pytest.raises(DomainError):
        propagate(packet, response, -1e-3)


def test_grid_mismatch_rejected(packet, response):
    other = lorentzian_amplitude(FrequencyGrid(response.grid.center, response.grid.spacing, 2**14), TAU)
    with pytest.raises(ContractError):
        propagate(other, response, 0.1)


def test_vacuum_is_a_pure_delay(packet, grid):
    out = propagate(packet, vacuum_response(grid), 0.3)
    assert out.analytic
    assert out.emission_time == pytest.approx(0.3 / C_LIGHT)
    assert temporal_centroid(out) - temporal_centroid(packet) == pytest.approx(0.3 / C_LIGHT, abs=2e-14)
    assert propagate(packet, vacuum_response(grid), 0.3, relative_to_vacuum=True) is packet


def test_linearity(grid, response):
    a = lorentzian_amplitude(grid, TAU, TWO_PI * 0.7e9)
    b = lorentzian_amplitude(grid, 0.3e-9, TWO_PI * 0.9e9, emission_time=1e-9)
    mix = a.amplitude * (0.6 - 0.2j) + b.amplitude * 1.3
    out = propagate(a.__class__(grid, mix, 0.0, 0.0, TAU), response, 0.1).amplitude
    ref = propagate(a, response, 0.1).amplitude * (0.6 - 0.2j) + propagate(b, response, 0.1).amplitude * 1.3
    assert np.abs(out - ref).max() < 1e-10 * np.abs(ref).max()


def test_composition(packet, response):
    two = propagate(propagate(packet, response, 0.04), response, 0.06)
    one = propagate(packet, response, 0.10)
    assert np.abs(two.amplitude - one.amplitude).max() < 1e-10 * np.abs(one.amplitude).max()


@settings(max_examples=25, deadline=None)
@given(
    length=st.floats(0.0, 0.3),
    carrier_ghz=st.floats(-8.0, 8.0),
    relative=st.booleans(),
)
def test_propagation_never_increases_the_norm(grid, response, length, carrier_ghz, relative):
    wp = lorentzian_amplitude(grid, TAU, TWO_PI * carrier_ghz * 1e9)
    out = propagate(wp, response, length, relative_to_vacuum=relative)
    assert out.norm <= wp.norm * (1 + 1e-12)
    assert 0 < survival_probability(out) <= 1 + 1e-12


def test_window_packet_is_delayed_and_mostly_transmitted(packet, response):
    out = propagate(packet, response, 0.10, relative_to_vacuum=True)
    delay = temporal_centroid(out) - temporal_centroid(packet)
    # regression values; the acceptance suite checks the stated bounds
    assert delay == pytest.approx(2.490e-9, abs=5e-12)
    assert survival_probability(out) == pytest.approx(0.9164, abs=5e-4)
    absolute = propagate(packet, response, 0.10)
    assert temporal_centroid(absolute) - temporal_centroid(out) == pytest.approx(0.10 / C_LIGHT, abs=1e-14)


def test_centroid_of_zero_packet(grid):
    wp = lorentzian_amplitude(grid, TAU)
    empty = wp.__class__(grid, np.zeros(grid.count), 0.0, 0.0, TAU)
    with pytest.raises(DomainError):
        temporal_centroid(empty)
    with pytest.raises(DomainError):
        survival_probability(empty)


def test_temporal_amplitude_needs_closed_form(packet, response):
    with pytest.raises(DomainError):
        propagate(packet, response, 0.1).temporal_amplitude(0.0)


def test_csv_writers(tmp_path, packet):
    write_spectrum_csv(tmp_path / "s.csv", packet, header="# h")
    write_temporal_csv(tmp_path / "t.csv", packet, t_range=(0, 5e-9))
    with open(tmp_path / "s.csv") as fh:
        assert fh.readline() == "# h\n"
        rows = list(csv.reader(fh))
    assert rows[0] == ["detuning_GHz", "re_chi", "im_chi"]
    assert len(rows) == packet.grid.count + 1
    with open(tmp_path / "t.csv") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["time_ns", "intensity"]
    times = np.array([float(r[0]) for r in rows[1:]])
    assert times.min() >= 0 and times.max() <= 5
