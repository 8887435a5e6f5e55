"""Event-level simulation of the HOM / slow-light experiment and its correlator.

Pulses are processed in fixed blocks of ``BLOCK`` pulses.  Every random
number belongs to a (seed, block, stage) stream of a counter-based Philox
generator, so a block can be simulated in any process and in any order and
the merged stream is always the same.

Per pulse the quantum dot emits one photon, plus a distinguishable second
photon with probability ``emitter.two_photon_probability``.  A photon takes
the short or the long interferometer arm with equal probability; the long
arm is one repetition period longer, so slot ``s`` collects the short photon
of pulse ``s`` and the long photon of pulse ``s - 1``.  When both primary
photons are present they meet at BS1 from opposite inputs and the joint
output (split, both in port 3, both in port 4) is sampled from the exact
two-photon amplitude:

    draw (t1, t2) from T |x(t1) y(t2)|^2 + R |x(t2) y(t1)|^2
    P(split: port 3 at t1, port 4 at t2) = |-T u + R v|^2 / M
    P(both in 3) = P(both in 4) = T R |u + v|^2 / (2 M)

with ``u = x(t1) y(t2)``, ``v = x(t2) y(t1)`` and ``M`` the mixture density.
Without a medium ``x`` and ``y`` are the closed-form Lorentzian packets.
With a medium the carriers live on a fine lattice whose propagated packets
are tabulated once (:class:`CarrierBank`); each photon survives with its
packet's transmission and arrival times are drawn bin-wise from the
tabulated intensity, which makes the same formulas exact for the tabulated
model.  Port 3 continues to BS2 and detectors 5 and 6, port 4 to detector 4.
"""

from __future__ import annotations

import warnings
from concurrent.futures import ProcessPoolExecutor

import numpy as np
from . import kernels
from .correlation import DISTINCT, SAME, TCSPC, CorrelationHistogram, _crop, _propagated_rows
from .errors import ConfigurationError, DomainError
from .events import FS, channel_times, empty_stream, make_stream
from .models import ORTHOGONAL

BLOCK = 1 << 16

_PULSE, _PAIR, _DETECT, _DARK = 1, 2, 3, 4


def _rng(seed, block, stage):
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, block, stage])))


class CarrierBank:
    """Propagated packets for a lattice of carriers spanning +-6 sigma.

    The lattice weights are the normal density at the nodes, so sampling a
    node reproduces Normal(carrier, sigma^2) up to the lattice step.
    """

    def __init__(self, emitter, response, length, nodes=241):
        if emitter.sigma == 0:
            z = np.zeros(1)
        else:
            z = np.linspace(-6.0, 6.0, nodes)
        p = np.exp(-0.5 * z * z)
        self.cdf = np.cumsum(p / p.sum())
        self.carriers = emitter.carrier + emitter.sigma * z
        x_t, spec = _propagated_rows(emitter, self.carriers, response, length)
        grid = response.grid
        self.survival = np.sum(np.abs(spec) ** 2, axis=-1) * grid.spacing
        inten = np.abs(x_t) ** 2
        keep = _crop(inten.mean(axis=0), pad=int(2e-9 / grid.time_step))
        self.step = grid.time_step
        self.times = grid.times[keep]
        inten = inten[:, keep]
        total = inten.sum(axis=1, keepdims=True)
        self.amp = x_t[:, keep] / np.sqrt(total)
        self.time_cdf = np.cumsum(inten / total, axis=1)
        self.time_cdf[:, -1] = 1.0

    def draw_nodes(self, u):
        return np.minimum(np.searchsorted(self.cdf, u), self.cdf.size - 1)

    def draw_bins(self, nodes, u):
        out = np.empty(nodes.size, dtype=np.int64)
        for k in np.unique(nodes):
            sel = nodes == k
            out[sel] = np.searchsorted(self.time_cdf[k], u[sel])
        return np.minimum(out, self.times.size - 1)

    def bin_time(self, bins, u):
        return self.times[bins] + (u - 0.5) * self.step


def _block_range(n_pulses, block):
    start = block * BLOCK
    return start, min(start + BLOCK, n_pulses)


def _pulse_attributes(config, block, bank):
    """Carrier (or lattice node), arm and second-photon data for one block."""
    start, stop = _block_range(config.n_pulses, block)
    n = stop - start
    rng = _rng(config.seed, block, _PULSE)
    em = config.emitter
    z = rng.standard_normal((2, n))
    u = rng.random((5, n))
    attrs = {
        "arm": (u[0] < 0.5).astype(np.int8),
        "second": u[1] < em.two_photon_probability,
        "arm2": (u[2] < 0.5).astype(np.int8),
    }
    if bank is None:
        attrs["carrier"] = em.carrier + em.sigma * z[0]
        attrs["carrier2"] = em.carrier + em.sigma * z[1]
    else:
        attrs["node"] = bank.draw_nodes(u[3])
        attrs["node2"] = bank.draw_nodes(u[4])
    return attrs


def _port3_probability(arm, bs1):
    t, r = bs1
    return np.where(arm == 0, t, r)


class _Arrivals:
    def __init__(self):
        self.port, self.slot, self.t = [], [], []

    def add(self, port, slot, t):
        self.port.append(np.asarray(port, dtype=np.int16))
        self.slot.append(np.asarray(slot, dtype=np.int64))
        self.t.append(np.asarray(t, dtype=float))

    def arrays(self):
        if not self.port:
            return np.zeros(0, np.int16), np.zeros(0, np.int64), np.zeros(0)
        return np.concatenate(self.port), np.concatenate(self.slot), np.concatenate(self.t)


def _single_photons(rng, slots, arms, carriers_or_nodes, config, bank, out, bypass=False, survived=False):
    """Route photons that meet nobody at BS1.

    ``survived`` marks photons whose passage through the medium was already
    decided by the caller.
    """
    n = slots.size
    u = rng.random((3, n))
    if bank is None:
        t = rng.exponential(config.emitter.tau, n)
        alive = np.ones(n, dtype=bool)
    else:
        nodes = carriers_or_nodes
        alive = np.ones(n, dtype=bool) if survived else u[0] < bank.survival[nodes]
        bins = bank.draw_bins(nodes, u[1])
        t = bank.bin_time(bins, rng.random(n))
    if bypass:
        port = np.full(n, 3)
    else:
        port = np.where(u[2] < _port3_probability(arms, config.interferometer.bs1), 3, 4)
    out.add(port[alive], slots[alive], t[alive])


def _pairs(rng, slots, first, second, config, bank, out):
    """Joint BS1 output of interfering pairs: ``first`` at input 1, ``second`` at input 2."""
    n = slots.size
    t_bs, r_bs = config.interferometer.bs1
    parallel = config.interferometer.polarization != ORTHOGONAL
    u = rng.random((4, n))
    if bank is None:
        tau = config.emitter.tau
        t1 = rng.exponential(tau, n)
        t2 = rng.exponential(tau, n)
        # |u| = |v| for equal envelopes, so the mixture is just the product
        phi = (first - second) * (t2 - t1)
        cross = np.cos(phi) if parallel else 0.0
        p_split = t_bs * t_bs + r_bs * r_bs - 2.0 * t_bs * r_bs * cross
        p33 = t_bs * r_bs * (1.0 + cross)
        both = np.ones(n, dtype=bool)
        single1 = single2 = np.zeros(n, dtype=bool)
    else:
        s1 = u[0] < bank.survival[first]
        s2 = u[1] < bank.survival[second]
        both, single1, single2 = s1 & s2, s1 & ~s2, ~s1 & s2
        swap = rng.random(n) >= t_bs
        src1 = np.where(swap, second, first)
        src2 = np.where(swap, first, second)
        b1 = bank.draw_bins(src1, rng.random(n))
        b2 = bank.draw_bins(src2, rng.random(n))
        t1 = bank.bin_time(b1, rng.random(n))
        t2 = bank.bin_time(b2, rng.random(n))
        a = bank.amp
        uu = a[first, b1] * a[second, b2]
        vv = a[first, b2] * a[second, b1]
        m = t_bs * np.abs(uu) ** 2 + r_bs * np.abs(vv) ** 2
        m = np.where(m > 0, m, 1.0)
        if parallel:
            p_split = np.abs(-t_bs * uu + r_bs * vv) ** 2 / m
            p33 = 0.5 * t_bs * r_bs * np.abs(uu + vv) ** 2 / m
        else:
            p_split = (t_bs**2 * np.abs(uu) ** 2 + r_bs**2 * np.abs(vv) ** 2) / m
            p33 = 0.5 * t_bs * r_bs * (np.abs(uu) ** 2 + np.abs(vv) ** 2) / m
    v = u[2]
    split = both & (v < p_split)
    in33 = both & (v >= p_split) & (v < p_split + p33)
    in44 = both & (v >= p_split + p33)
    out.add(np.full(split.sum(), 3), slots[split], t1[split])
    out.add(np.full(split.sum(), 4), slots[split], t2[split])
    for port, sel in ((3, in33), (4, in44)):
        out.add(np.full(2 * sel.sum(), port), np.tile(slots[sel], 2), np.concatenate([t1[sel], t2[sel]]))
    if bank is not None:
        # a lone survivor leaves BS1 like any single photon
        arm0, arm1 = np.zeros(single1.sum(), np.int8), np.ones(single2.sum(), np.int8)
        _single_photons(rng, slots[single1], arm0, first[single1], config, bank, out, survived=True)
        _single_photons(rng, slots[single2], arm1, second[single2], config, bank, out, survived=True)


def _simulate_block(config, block, bank):
    start, stop = _block_range(config.n_pulses, block)
    attrs = _pulse_attributes(config, block, bank)
    key = "carrier" if bank is None else "node"
    key2 = "carrier2" if bank is None else "node2"
    ifm = config.interferometer
    rng = _rng(config.seed, block, _PAIR)
    out = _Arrivals()
    pulses = np.arange(start, stop)

    second = attrs["second"]
    if ifm.bypass:
        _single_photons(rng, pulses, attrs["arm"], attrs[key], config, bank, out, bypass=True)
        _single_photons(rng, pulses[second], attrs["arm2"][second], attrs[key2][second], config, bank, out, bypass=True)
    else:
        # long photon of the previous block's last pulse lands in our first slot
        if block > 0:
            prev = _pulse_attributes(config, block - 1, bank)
            prev_arm, prev_c = prev["arm"][-1:], prev[key][-1:]
        else:
            prev_arm, prev_c = np.zeros(1, np.int8), attrs[key][:1]
        last = stop == config.n_pulses
        arm = attrs["arm"]
        slots = np.arange(start, stop + (1 if last else 0))
        short = np.append(arm == 0, False) if last else arm == 0
        long_arm = np.concatenate([prev_arm, arm if last else arm[:-1]]) == 1
        long_c = np.concatenate([prev_c, attrs[key] if last else attrs[key][:-1]])
        short_c = np.append(attrs[key], attrs[key][:1]) if last else attrs[key]
        pair = short & long_arm
        s_only = short & ~long_arm
        l_only = long_arm & ~short
        _pairs(rng, slots[pair], short_c[pair], long_c[pair], config, bank, out)
        _single_photons(rng, slots[s_only], np.zeros(s_only.sum(), np.int8), short_c[s_only], config, bank, out)
        _single_photons(rng, slots[l_only], np.ones(l_only.sum(), np.int8), long_c[l_only], config, bank, out)
        # second photons never interfere
        arm2 = attrs["arm2"][second]
        _single_photons(rng, pulses[second] + arm2, arm2, attrs[key2][second], config, bank, out)
    return _detect(config, block, out)


def _detect(config, block, arrivals):
    port, slot, t = arrivals.arrays()
    rng = _rng(config.seed, block, _DETECT)
    u = rng.random((2, port.size))
    ifm = config.interferometer
    channel = np.where(port == 3, np.where(u[0] < ifm.bs2[0], 5, 6), 4) if not ifm.bypass else port.astype(int)
    period = config.emitter.repetition_period
    eff = np.zeros(port.size)
    jit = np.zeros(port.size)
    for ch in np.unique(channel):
        det = config.detector(int(ch))
        sel = channel == ch
        eff[sel] = det.efficiency
        jit[sel] = det.jitter_sigma
    kept = u[1] < eff
    times = slot * period + t + jit * rng.standard_normal(port.size)
    channel, slot, times = channel[kept], slot[kept], times[kept]
    if config.dark_count_rate > 0:
        channel, slot, times = _add_dark_counts(config, block, channel, slot, times)
    t_fs = np.rint(times / FS).astype(np.int64)
    return make_stream(channel, slot, t_fs)


def _add_dark_counts(config, block, channel, slot, times):
    start, stop = _block_range(config.n_pulses, block)
    period = config.emitter.repetition_period
    rng = _rng(config.seed, block, _DARK)
    chans = (3,) if config.interferometer.bypass else (4, 5, 6)
    extra_c, extra_s, extra_t = [channel], [slot], [times]
    for ch in chans:
        k = rng.poisson(config.dark_count_rate * period * (stop - start))
        s = rng.integers(start, stop, k)
        extra_c.append(np.full(k, ch))
        extra_s.append(s)
        extra_t.append(s * period + rng.random(k) * period)
    return np.concatenate(extra_c), np.concatenate(extra_s), np.concatenate(extra_t)


_WORKER_BANK = None


def _init_worker(bank):
    global _WORKER_BANK
    _WORKER_BANK = bank


def _worker_block(args):
    config, block = args
    return _simulate_block(config, block, _WORKER_BANK)


def _bank_for(config, response, length):
    if config.vapor is None:
        return None
    if response is None:
        raise ConfigurationError("a vapor cell needs an optical response on a frequency grid")
    return CarrierBank(config.emitter, response, config.vapor.length if length is None else length)


def simulate_stream(config, response=None, length=None, workers=1):
    """Simulate ``config.n_pulses`` pulses and return the merged click stream.

    ``response`` is the vapor's :class:`~fockflow.vapor.OpticalResponse`
    (needed when ``config.vapor`` is set).  The result is a structured array
    of event records sorted by timestamp and is identical for any ``workers``.
    """
    iface = config.interferometer
    if not iface.bypass and abs(iface.path_delay - config.emitter.repetition_period) > 1e-9 * iface.path_delay:
        raise ConfigurationError("the event model needs an interferometer delay of one repetition period")
    bank = _bank_for(config, response, length)
    n_blocks = -(-config.n_pulses // BLOCK)
    if workers > 1 and n_blocks > 1:
        with ProcessPoolExecutor(workers, initializer=_init_worker, initargs=(bank,)) as pool:
            parts = list(pool.map(_worker_block, [(config, b) for b in range(n_blocks)]))
    else:
        parts = [_simulate_block(config, b, bank) for b in range(n_blocks)]
    stream = np.concatenate(parts) if parts else empty_stream()
    stream = stream[np.argsort(stream["t_fs"], kind="stable")]
    return _apply_dead_time(config, stream)


def _apply_dead_time(config, stream):
    keep = np.ones(stream.size, dtype=bool)
    for ch in np.unique(stream["channel"]):
        dead = config.detector(int(ch)).dead_time
        if dead <= 0:
            continue
        idx = np.flatnonzero(stream["channel"] == ch)
        keep[idx] = kernels.dead_time_filter(stream["t_fs"][idx], int(round(dead / FS)))
    return stream[keep]


def correlate_events(events, channel_a, channel_b, bin_width, span, mode=None):
    """Full cross-correlation of ``t_b - t_a`` over ``[-span, span)``.

    Channel 3 stands for the union of detectors 5 and 6 behind port 3.
    ``density`` is counts per second of delay; raw ``counts`` are kept.
    """
    if not bin_width > 0 or not span > 0:
        raise ConfigurationError("bin width and span must be positive")
    bw = int(round(bin_width / FS))
    n_bins = int(round(2.0 * span / bin_width))
    lo = -(n_bins * bw) // 2
    ta = channel_times(events, channel_a)
    tb = channel_times(events, channel_b)
    flags = ()
    if ta.size == 0 or tb.size == 0:
        warnings.warn(f"channel {channel_a if ta.size == 0 else channel_b} has no events", stacklevel=2)
        flags = ("empty_channel",)
    counts = kernels.cross_correlate(ta, tb, lo, bw, n_bins)
    if mode is None:
        mode = SAME if {channel_a, channel_b} <= {5, 6} else DISTINCT
    edges = (lo + np.arange(n_bins + 1) * bw) * FS
    return CorrelationHistogram(edges, counts / (bw * FS), mode, counts=counts, flags=flags)


def heralded_tcspc(events, herald_pair, coincidence_window, period, bin_width=20e-12, t_range=(-2e-9, 20e-9)):
    """Arrival-time histograms on ``herald_pair[1]`` split by heralding.

    An event is heralded when ``herald_pair[0]`` clicked within
    ``coincidence_window`` of it.  Times are measured from the pulse clock of
    the event's slot.  Returns ``{"two_photon": ..., "one_photon": ...}``.
    """
    if coincidence_window >= period:
        raise ConfigurationError("coincidence window must be shorter than the repetition period")
    a_ch, b_ch = herald_pair
    sel_a = np.isin(events["channel"], (3, 5, 6)) if a_ch == 3 else events["channel"] == a_ch
    sel_b = np.isin(events["channel"], (3, 5, 6)) if b_ch == 3 else events["channel"] == b_ch
    ea, eb = events[sel_a], events[sel_b]
    ea = ea[np.argsort(ea["t_fs"], kind="stable")]
    eb = eb[np.argsort(eb["t_fs"], kind="stable")]
    _, heralded = kernels.coincidence_mask(ea["t_fs"], eb["t_fs"], int(round(coincidence_window / FS)))
    rel = eb["t_fs"] * FS - eb["pulse_index"] * period
    n_bins = int(round((t_range[1] - t_range[0]) / bin_width))
    edges = t_range[0] + np.arange(n_bins + 1) * bin_width
    out = {}
    for label, sel in (("two_photon", heralded), ("one_photon", ~heralded)):
        counts, _ = np.histogram(rel[sel], bins=edges)
        out[label] = CorrelationHistogram(edges, counts / bin_width, TCSPC, counts=counts, label=label)
    return out


def expected_counts(hist, n_pulses, efficiency_a, efficiency_b):
    """Scale a per-pulse model density to expected counts per bin."""
    return hist.density * hist.bin_width * n_pulses * efficiency_a * efficiency_b


def chi2_per_bin(observed, expected, floor=5.0):
    """Mean Pearson chi-square over bins whose expectation exceeds ``floor``."""
    keep = expected > floor
    if not keep.any():
        raise DomainError(f"no bin expects more than {floor} counts")
    return float(np.mean((observed[keep] - expected[keep]) ** 2 / expected[keep]))
