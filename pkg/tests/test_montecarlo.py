import warnings

import numpy as np
import pytest
from scipy import stats

from fockflow import correlation as corr
from fockflow import montecarlo as mc
from fockflow.errors import ConfigurationError, DomainError
from fockflow.events import FS, make_stream, read_events, write_events
from fockflow.models import ORTHOGONAL, DetectorModel, EmitterModel, InterferometerConfig, RunConfig

TAU = 0.43e-9
PERIOD = 6.5e-9
SHARP = {ch: DetectorModel(jitter_fwhm=0.0, efficiency=1.0) for ch in (3, 4, 5, 6)}


def _run(n, emitter=None, detectors=None, seed=0, **ifm):
    return RunConfig(
        n_pulses=n,
        seed=seed,
        emitter=emitter or EmitterModel(tau=TAU, sigma=0.0, g2_zero=0.0),
        interferometer=InterferometerConfig(**ifm),
        detectors=SHARP if detectors is None else detectors,
    )


def _since_pulse(stream):
    return stream["t_fs"] * FS - stream["pulse_index"] * PERIOD


@pytest.fixture(scope="module")
def star_stream(sigma_star):
    em = EmitterModel(tau=TAU, sigma=sigma_star)
    cfg = RunConfig(n_pulses=1_000_000, seed=11, emitter=em)
    return cfg, mc.simulate_stream(cfg)


def test_same_seed_same_bytes_any_worker_count():
    cfg = _run(3 * mc.BLOCK + 17, emitter=EmitterModel(tau=TAU, sigma=2e9, g2_zero=0.02), detectors={})
    a = mc.simulate_stream(cfg)
    b = mc.simulate_stream(cfg)
    c = mc.simulate_stream(cfg, workers=2)
    assert a.tobytes() == b.tobytes() == c.tobytes()
    d = mc.simulate_stream(_run(3 * mc.BLOCK + 17, emitter=cfg.emitter, detectors={}, seed=1))
    assert a.tobytes() != d.tobytes()


def test_prefix_of_a_longer_run_is_unchanged():
    # blocks are independent streams, so extending the run leaves earlier full blocks alone
    short = mc.simulate_stream(_run(2 * mc.BLOCK + 1))
    long = mc.simulate_stream(_run(4 * mc.BLOCK))
    cut = (2 * mc.BLOCK - 1) * PERIOD / FS
    assert np.array_equal(short[short["t_fs"] < cut], long[long["t_fs"] < cut])


def test_direct_detection_is_exponential():
    s = mc.simulate_stream(_run(1_000_000, bypass=True))
    assert s.size == 1_000_000
    assert np.all(s["channel"] == 3)
    t = _since_pulse(s)
    assert stats.kstest(t, "expon", args=(0, TAU)).pvalue > 1e-3
    assert t.mean() == pytest.approx(TAU, rel=3 * 1e-3)


def test_perfect_photons_never_split():
    s = mc.simulate_stream(_run(400_000))
    h = mc.correlate_events(s, 3, 4, 50e-12, 3.5 * PERIOD)
    # neighbouring peaks leak e^{-3.25/0.43} into the half-period window; 1 ns is clear of them
    assert h.area(-1e-9, 1e-9) == 0
    assert h.counts[np.abs(h.centers - PERIOD) < 0.5 * PERIOD].sum() > 1000


def test_orthogonal_central_peak_is_half():
    s = mc.simulate_stream(_run(1_000_000, polarization=ORTHOGONAL))
    h = mc.correlate_events(s, 3, 4, 50e-12, 3.5 * PERIOD)
    c = h.centers
    n0 = h.counts[np.abs(c) < 0.5 * PERIOD].sum()
    n_out = h.counts[np.abs(np.abs(c) - 3 * PERIOD) < 0.5 * PERIOD].sum()
    ratio = n0 / (0.5 * n_out)
    err = ratio * np.sqrt(1 / n0 + 1 / n_out)
    assert ratio == pytest.approx(0.5, abs=3 * err)


def test_event_histogram_agrees_with_model(star_stream):
    cfg, s = star_stream
    det = {ch: cfg.detector(ch) for ch in (3, 4, 5, 6)}
    for mode, (a, b) in ((corr.DISTINCT, (3, 4)), (corr.SAME, (5, 6))):
        h = mc.correlate_events(s, a, b, 100e-12, 3.5 * PERIOD)
        model = corr.peak_pattern(cfg.emitter, cfg.interferometer, mode, bin_width=100e-12, detectors=det)
        expected = mc.expected_counts(model, cfg.n_pulses, 0.1, 0.1)
        assert np.array_equal(np.round(h.bin_edges / 1e-12), np.round(model.bin_edges / 1e-12))
        assert mc.chi2_per_bin(h.counts, expected) < 1.5
        assert h.counts.sum() == pytest.approx(expected.sum(), rel=5 * np.sqrt(expected.sum()) / expected.sum())


def test_heralded_events_are_rare(star_stream):
    cfg, s = star_stream
    tr = mc.heralded_tcspc(s, (5, 6), 3e-9, PERIOD)
    n2 = tr["two_photon"].counts.sum()
    n1 = tr["one_photon"].counts.sum()
    assert 0 < n2 < 0.05 * n1


def test_heralded_window_must_be_shorter_than_the_period(star_stream):
    _, s = star_stream
    with pytest.raises(ConfigurationError):
        mc.heralded_tcspc(s, (5, 6), PERIOD, PERIOD)


def test_rate_budget_and_linear_efficiency():
    em = EmitterModel(tau=TAU, sigma=1e9, g2_zero=0.014)
    lo = mc.simulate_stream(_run(300_000, emitter=em, detectors={c: DetectorModel(efficiency=0.2) for c in (4, 5, 6)}))
    hi = mc.simulate_stream(_run(300_000, emitter=em, detectors={c: DetectorModel(efficiency=0.4) for c in (4, 5, 6)}))
    full = mc.simulate_stream(_run(300_000, emitter=em))
    assert full.size <= 2 * 300_000
    ratio = hi.size / lo.size
    assert ratio == pytest.approx(2.0, abs=5 * 2.0 * np.sqrt(1 / lo.size))
    assert full.size / hi.size == pytest.approx(2.5, rel=0.02)


def test_dead_time_never_adds_events():
    counts = []
    for dead in (0.0, 2e-9, 10e-9, 40e-9):
        det = {c: DetectorModel(jitter_fwhm=0.0, efficiency=1.0, dead_time=dead) for c in (3, 4, 5, 6)}
        s = mc.simulate_stream(_run(100_000, detectors=det))
        for ch in (4, 5, 6):
            t = s["t_fs"][s["channel"] == ch]
            assert np.all(np.diff(t) >= int(dead / FS))
        counts.append(s.size)
    assert all(a >= b for a, b in zip(counts, counts[1:]))
    assert counts[-1] < counts[0]


def test_dark_counts_add_uniform_background():
    cfg = _run(200_000)
    dark = RunConfig(200_000, 0, cfg.emitter, cfg.interferometer, SHARP, dark_count_rate=5e5)
    base = mc.simulate_stream(cfg).size
    extra = mc.simulate_stream(dark).size - base
    expect = 3 * 5e5 * PERIOD * 200_000
    assert extra == pytest.approx(expect, abs=5 * np.sqrt(expect))


def test_interferometer_delay_must_match_the_period():
    with pytest.raises(ConfigurationError):
        mc.simulate_stream(_run(10, path_delay=3e-9))
    mc.simulate_stream(_run(10, path_delay=3e-9, bypass=True))


def test_vapor_needs_a_response(cell):
    cfg = RunConfig(10, vapor=cell, interferometer=InterferometerConfig(vapor_in_path=True))
    with pytest.raises(ConfigurationError):
        mc.simulate_stream(cfg)


def test_vapor_survival_and_delay(emitter, cell, response):
    cfg = RunConfig(
        300_000,
        seed=5,
        emitter=emitter,
        interferometer=InterferometerConfig(bypass=True, vapor_in_path=True),
        detectors=SHARP,
        vapor=cell,
    )
    s = mc.simulate_stream(cfg, response)
    model = corr.tcspc_one_photon(emitter, response, cell.length, t_range=(-5e-9, 60e-9))
    n = cfg.n_pulses * (1 + emitter.two_photon_probability)
    assert s.size / n == pytest.approx(model.area(), abs=5 * np.sqrt(0.1 / n))
    t = _since_pulse(s)
    t = t[t < 60e-9]
    assert t.mean() == pytest.approx(corr.trace_centroid(model), abs=0.02e-9)


def test_vapor_pairs_match_the_model(emitter, cell, response):
    cfg = RunConfig(
        1_000_000,
        seed=2,
        emitter=emitter,
        interferometer=InterferometerConfig(vapor_in_path=True),
        detectors={},
        vapor=cell,
    )
    s = mc.simulate_stream(cfg, response)
    det = {ch: cfg.detector(ch) for ch in (3, 4, 5, 6)}
    h = mc.correlate_events(s, 3, 4, 100e-12, 3.5 * PERIOD)
    model = corr.peak_pattern(emitter, cfg.interferometer, corr.DISTINCT, bin_width=100e-12, detectors=det, response=response, length=cell.length)
    assert mc.chi2_per_bin(h.counts, mc.expected_counts(model, cfg.n_pulses, 0.1, 0.1)) < 1.5


def test_correlator_is_antisymmetric_and_order_free(star_stream):
    _, s = star_stream
    ab = mc.correlate_events(s, 3, 4, 50e-12, 3.5 * PERIOD)
    ba = mc.correlate_events(s, 4, 3, 50e-12, 3.5 * PERIOD)
    assert ab.counts.sum() == ba.counts.sum()
    # only pairs landing exactly on a bin edge may move by one bin
    assert np.abs(ab.counts - ba.counts[::-1]).max() <= 2
    shuffled = s[np.random.default_rng(0).permutation(s.size)]
    assert np.array_equal(mc.correlate_events(shuffled, 3, 4, 50e-12, 3.5 * PERIOD).counts, ab.counts)


def test_correlator_uses_all_pairs():
    s = make_stream([3, 4, 4, 4], [0, 0, 1, 2], [0, 1000, 6_500_000, 13_000_000])
    h = mc.correlate_events(s, 3, 4, 1e-12, 20e-9)
    assert h.counts.sum() == 3


def test_empty_channel_is_flagged():
    s = make_stream([4, 4], [0, 1], [0, 100])
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        h = mc.correlate_events(s, 5, 4, 50e-12, 3 * PERIOD)
    assert caught
    assert "empty_channel" in h.flags
    assert h.counts.sum() == 0


def test_correlator_rejects_bad_bins(star_stream):
    _, s = star_stream
    with pytest.raises(ConfigurationError):
        mc.correlate_events(s, 3, 4, 0.0, 3 * PERIOD)


def test_file_and_memory_correlate_identically(tmp_path, star_stream):
    _, s = star_stream
    path = tmp_path / "events.bin"
    write_events(path, s)
    back = read_events(path)
    for a, b in ((3, 4), (5, 6)):
        h1 = mc.correlate_events(s, a, b, 50e-12, 3.5 * PERIOD)
        h2 = mc.correlate_events(back, a, b, 50e-12, 3.5 * PERIOD)
        assert np.array_equal(h1.counts, h2.counts)


def test_chi2_helper():
    obs = np.array([10.0, 12.0, 1.0])
    exp = np.array([10.0, 10.0, 1.0])
    assert mc.chi2_per_bin(obs, exp) == pytest.approx(0.2)
    with pytest.raises(DomainError):
        mc.chi2_per_bin(obs, exp, floor=100)
