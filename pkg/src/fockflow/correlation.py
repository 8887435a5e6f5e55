"""Two-photon correlation functions, HOM visibility and TCSPC traces.

Photon 1 enters BS1 at input 1 and photon 2 at input 2.  With amplitude
transmission sqrt(T) the coincidence density between outputs 3 and 4 at
``delta_t = t_4 - t_3`` is

    G_34(dt) = int dt' |R chi1(t'+dt) chi2(t') - T chi1(t') chi2(t'+dt)|^2
             = R^2 A(dt) + T^2 A(-dt) - 2 T R Re K(dt)

and both photons leave through output 3 with density
``T R (A(dt) + A(-dt) + 2 Re K(dt))``, where

    A(dt) = int |chi1(t+dt)|^2 |chi2(t)|^2 dt
    K(dt) = int q(t+dt) q*(t) dt,   q = chi1 chi2*

For a balanced splitter these are the familiar 1/4 |a -+ b|^2 forms.
Orthogonal polarizations remove the ``K`` term.

Closed-form packets are integrated by Gauss-Legendre quadrature on their
exact temporal amplitude; propagated packets go through FFT correlations of
their sampled time traces.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize, special

from .errors import ContractError, DomainError
from .models import ORTHOGONAL, DetectorModel
from .wavepacket import (
    TWO_PI,
    FrequencyGrid,
    forward_transform,
    lorentzian_amplitude,
    lorentzian_spectrum,
    propagation_factor,
)

DISTINCT = "distinct_ports"
SAME = "same_port"
TCSPC = "tcspc"
MODES = (DISTINCT, SAME, TCSPC)

# half of the 6.5 ns repetition period
DEFAULT_HALF_WINDOW = 3.25e-9


@dataclass(frozen=True, eq=False)
class CorrelationHistogram:
    """Uniformly binned density.

    ``density`` is per unit ``delta_t`` (1/s).  Event-derived histograms also
    carry raw ``counts``; ``flags`` collects warnings such as an empty channel.
    """

    bin_edges: np.ndarray
    density: np.ndarray
    mode: str
    counts: np.ndarray | None = None
    label: str = ""
    flags: tuple = field(default=())

    def __post_init__(self):
        if self.mode not in MODES:
            raise ContractError(f"unknown histogram mode {self.mode!r}")
        edges = np.asarray(self.bin_edges, dtype=float)
        dens = np.asarray(self.density, dtype=float)
        if edges.ndim != 1 or edges.size != dens.size + 1:
            raise ContractError("need exactly one more edge than density values")
        if edges.size > 2:
            widths = np.diff(edges)
            if np.ptp(widths) > 1e-6 * widths.mean():
                raise ContractError("histogram bins must be uniform")
        # quadrature round-off can leave -1e-20 where the exact value is 0
        if dens.size and dens.min() < 0:
            scale = max(np.abs(dens).max(), 1e-300)
            if dens.min() < -1e-9 * scale:
                raise ContractError("histogram density must be non-negative")
            dens = np.clip(dens, 0.0, None)
        object.__setattr__(self, "bin_edges", edges)
        object.__setattr__(self, "density", dens)

    @property
    def centers(self):
        return 0.5 * (self.bin_edges[1:] + self.bin_edges[:-1])

    @property
    def bin_width(self):
        return float(self.bin_edges[1] - self.bin_edges[0])

    def area(self, lo=-np.inf, hi=np.inf):
        """Integral over the bins whose centres lie in ``[lo, hi]``."""
        c = self.centers
        keep = (c >= lo) & (c <= hi)
        return float(self.density[keep].sum() * self.bin_width)

    def write_csv(self, path, header=None):
        """``delta_t_ns, density, mode`` or, for TCSPC, ``t_ns, intensity, state``."""
        write_histograms_csv(path, [self], header)


def write_histograms_csv(path, hists, header=None):
    """Stack histograms of one kind into a single CSV, told apart by the last column."""
    with open(path, "w", newline="") as fh:
        if header:
            fh.write(header + "\n")
        w = csv.writer(fh)
        tcspc = hists[0].mode == TCSPC
        w.writerow(["t_ns", "intensity", "state"] if tcspc else ["delta_t_ns", "density", "mode"])
        for h in hists:
            if (h.mode == TCSPC) != tcspc:
                raise ContractError("cannot mix TCSPC traces and correlation histograms in one file")
            tag = h.label if tcspc else h.mode
            for c, d in zip(h.centers * 1e9, h.density * 1e-9):
                w.writerow([f"{c:.6f}", f"{d:.10g}", tag])


def histogram_from_centers(centers, density, mode, label=""):
    centers = np.asarray(centers, dtype=float)
    if centers.size < 2:
        raise ContractError("need at least two bin centres")
    width = (centers[-1] - centers[0]) / (centers.size - 1)
    edges = np.append(centers - 0.5 * width, centers[-1] + 0.5 * width)
    return CorrelationHistogram(edges, density, mode, label=label)


# ---------------------------------------------------------------- closed forms


def ensemble_g2_closed_form(delta_t, tau, sigma, mode):
    """Spectral-diffusion average ``(1/4 tau) e^{-|dt|/tau} (1 -+ e^{-sigma^2 dt^2})``."""
    if sigma < 0:
        raise DomainError("sigma must be non-negative")
    dt = np.asarray(delta_t, dtype=float)
    env = np.exp(-np.abs(dt) / tau) / (4.0 * tau)
    coh = np.exp(-((sigma * dt) ** 2))
    if mode == DISTINCT:
        return env * (1.0 - coh)
    if mode == SAME:
        return env * (1.0 + coh)
    raise ContractError(f"closed form exists for {DISTINCT!r} and {SAME!r} only")


def visibility_closed_form(sigma, tau):
    """``(1/2tau) int e^{-|t|/tau} e^{-sigma^2 t^2} dt`` for the unwindowed peak."""
    s = sigma * tau
    if s == 0:
        return 1.0
    return float(np.sqrt(np.pi) / (2.0 * s) * special.erfcx(1.0 / (2.0 * s)))


def sigma_for_visibility(target, tau):
    """Diffusion width that gives an unwindowed visibility ``target`` in (0, 1)."""
    if not 0 < target < 1:
        raise DomainError("target visibility must lie strictly between 0 and 1")
    f = lambda s: visibility_closed_form(s / tau, tau) - target
    hi = 1.0
    while f(hi) > 0:
        hi *= 2.0
    s = optimize.brentq(f, 1e-9, hi, xtol=1e-14, rtol=1e-14)
    return s / tau


# ------------------------------------------------------------------ pair terms

_GL_X, _GL_W = np.polynomial.legendre.leggauss(12)


def _tail_rule(tau):
    """Nodes/weights for ``int_0^inf f(u) du`` when f decays like ``e^{-2u/tau}``."""
    h = 0.5 * tau
    edges = np.arange(0.0, 40.0 * tau + h, h)
    mid = 0.5 * (edges[1:] + edges[:-1])
    u = (mid[:, None] + 0.5 * h * _GL_X[None, :]).ravel()
    w = np.tile(0.5 * h * _GL_W, mid.size)
    return u, w


def _quadrature_terms(x, y, delta_t):
    dt = np.asarray(delta_t, dtype=float)[:, None]
    u, w = _tail_rule(max(x.tau, y.tau))

    t = np.maximum(x.emission_time - dt, y.emission_time) + u
    a = (np.abs(x.temporal_amplitude(t + dt)) ** 2 * np.abs(y.temporal_amplitude(t)) ** 2) @ w

    t = np.maximum(y.emission_time - dt, x.emission_time) + u
    b = (np.abs(x.temporal_amplitude(t)) ** 2 * np.abs(y.temporal_amplitude(t + dt)) ** 2) @ w

    start = max(x.emission_time, y.emission_time)
    t = np.maximum(start - dt, start) + u
    q0 = x.temporal_amplitude(t) * np.conj(y.temporal_amplitude(t))
    q1 = x.temporal_amplitude(t + dt) * np.conj(y.temporal_amplitude(t + dt))
    k = (q1 * np.conj(q0)) @ w
    return a, b, k


def _lags(n, step):
    return (np.arange(2 * n - 1) - (n - 1)) * step


def _xcorr(a, b):
    """``c[k] = sum_t a[t+k] conj(b[t])`` for lags ``-(n-1)..(n-1)`` along the last axis."""
    n = a.shape[-1]
    size = 1 << int(np.ceil(np.log2(2 * n)))
    fa = np.fft.fft(a, size, axis=-1)
    fb = np.fft.fft(b, size, axis=-1)
    c = np.fft.ifft(fa * np.conj(fb), axis=-1)
    return np.concatenate([c[..., size - n + 1 :], c[..., :n]], axis=-1)


# Propagated traces keep a faint, slowly ringing near-resonant remainder
# spread over the whole circular window; cropping at this energy fraction
# keeps ~70 ns around the pulse and changes correlations by < 1e-6.
_CROP_REL = 1e-7


def _crop(intensity, rel=_CROP_REL, pad=8):
    """Index slice holding all but ``rel`` of the energy at either end."""
    cum = np.cumsum(intensity)
    total = cum[-1]
    lo = int(np.searchsorted(cum, rel * total))
    hi = int(np.searchsorted(cum, (1.0 - rel) * total)) + 1
    return slice(max(lo - pad, 0), min(hi + pad, intensity.size))


def _interp(lags, values, dt):
    dt = np.asarray(dt, dtype=float)
    if np.iscomplexobj(values):
        return np.interp(dt, lags, values.real, 0.0, 0.0) + 1j * np.interp(dt, lags, values.imag, 0.0, 0.0)
    return np.interp(dt, lags, values, 0.0, 0.0)


def _sampled_terms(x_t, y_t, step, delta_t):
    ix, iy = np.abs(x_t) ** 2, np.abs(y_t) ** 2
    keep = _crop(ix + iy)
    x_t, y_t, ix, iy = x_t[keep], y_t[keep], ix[keep], iy[keep]
    lags = _lags(x_t.size, step)
    a = _xcorr(ix, iy).real * step
    b = _xcorr(iy, ix).real * step
    q = x_t * np.conj(y_t)
    k = _xcorr(q, q) * step
    return _interp(lags, a, delta_t), _interp(lags, b, delta_t), _interp(lags, k, delta_t)


def pair_terms(chi1, chi2, delta_t):
    """Return ``(A(dt), A(-dt), K(dt))`` for photon 1 at input 1 and photon 2 at input 2."""
    if chi1.grid != chi2.grid:
        raise ContractError("wavepackets live on different grids")
    if chi1.analytic and chi2.analytic:
        return _quadrature_terms(chi1, chi2, delta_t)
    grid = chi1.grid
    x_t = forward_transform(grid, chi1.amplitude)
    y_t = forward_transform(grid, chi2.amplitude)
    return _sampled_terms(x_t, y_t, grid.time_step, delta_t)


def _combine(a, b, k, mode, splitting, parallel=True):
    t, r = splitting
    cross = k.real if parallel else 0.0
    if mode == DISTINCT:
        dens = r * r * a + t * t * b - 2.0 * t * r * cross
    elif mode == SAME:
        dens = t * r * (a + b + 2.0 * cross)
    else:
        raise ContractError(f"unknown correlation mode {mode!r}")
    # cancellation between the terms leaves round-off of either sign
    return np.where(np.abs(dens) <= 1e-12 * (np.abs(a) + np.abs(b)), np.abs(dens), dens)


def g2_distinct(chi1, chi2, delta_t, splitting=(0.5, 0.5)):
    """Coincidences between the two BS1 outputs, ``delta_t = t_4 - t_3``."""
    a, b, k = pair_terms(chi1, chi2, delta_t)
    return histogram_from_centers(delta_t, _combine(a, b, k, DISTINCT, splitting), DISTINCT)


def g2_same(chi1, chi2, delta_t, splitting=(0.5, 0.5)):
    """Two-photon density in a single BS1 output (the bunching peak)."""
    a, b, k = pair_terms(chi1, chi2, delta_t)
    return histogram_from_centers(delta_t, _combine(a, b, k, SAME, splitting), SAME)


def g2_orthogonal(chi1, chi2, delta_t, splitting=(0.5, 0.5), mode=DISTINCT):
    """Cross-polarized photons: intensities only, no interference term."""
    a, b, k = pair_terms(chi1, chi2, delta_t)
    return histogram_from_centers(delta_t, _combine(a, b, k, mode, splitting, parallel=False), mode)


# -------------------------------------------------------------- ensembles


class DetuningSampler:
    """Reproducible Gaussian detunings that can be consumed in any partition.

    The whole stream of ``n`` values is fixed by ``(seed, n)``; ``chunk``
    hands out slices, so workers that each take a slice reproduce the serial
    result exactly.  With ``stratified`` the uniform deviates are spread over
    ``n`` equal-probability strata (one per sample, random order), which
    removes most of the sampling noise of smooth averages.
    """

    def __init__(self, n, seed=0, stratified=True):
        if int(n) < 1:
            raise DomainError("need at least one sample")
        self.n = int(n)
        self.seed = int(seed)
        self.stratified = stratified

    def standard_normals(self, stream=0):
        rng = np.random.Generator(np.random.Philox(np.random.SeedSequence([self.seed, stream])))
        if not self.stratified:
            return rng.standard_normal(self.n)
        u = (rng.permutation(self.n) + rng.random(self.n)) / self.n
        return special.ndtri(u)

    def chunk(self, start, stop, stream=0):
        return self.standard_normals(stream)[start:stop]


def _lorentz_envelope_terms(tau, delta_t):
    grid = FrequencyGrid.default(0.0)
    wp = lorentzian_amplitude(grid, tau)
    return _quadrature_terms(wp, wp, delta_t)


def _propagated_rows(emitter, carriers, response, length):
    """Sampled time traces, spectral rows and norms for photons at ``carriers``."""
    grid = response.grid
    spec = lorentzian_spectrum(grid, emitter.tau, carriers)
    spec /= np.sqrt(np.sum(np.abs(spec) ** 2, axis=-1, keepdims=True) * grid.spacing)
    spec = spec * propagation_factor(response, length, relative_to_vacuum=True)
    return forward_transform(grid, spec), spec


def ensemble_g2_numeric(
    emitter, config, delta_t, response=None, length=0.0, n_samples=10**4, seed=0, stratified=True, chunk=128
):
    """Average the pair correlations over sampled carrier detunings.

    Without a medium only the pair detuning matters, so it is drawn directly
    from Normal(0, 2 sigma^2).  With a medium each photon's carrier is drawn
    from Normal(carrier, sigma^2) and both packets are propagated.  Returns a
    dict with ``distinct_ports`` and ``same_port`` histograms.
    """
    if n_samples < 1000:
        raise DomainError("ensemble averages need at least 1000 samples")
    delta_t = np.asarray(delta_t, dtype=float)
    parallel = config.polarization != ORTHOGONAL
    sampler = DetuningSampler(n_samples, seed, stratified)
    if response is None or length == 0:
        a, b, j = _lorentz_envelope_terms(emitter.tau, delta_t)
        pair = np.sqrt(2.0) * emitter.sigma * sampler.standard_normals()
        coh = np.zeros_like(delta_t)
        for s in range(0, n_samples, 4096):
            coh += np.cos(np.outer(pair[s : s + 4096], delta_t)).sum(axis=0)
        k = j * coh / n_samples
    else:
        c1 = emitter.carrier + emitter.sigma * sampler.standard_normals(1)
        c2 = emitter.carrier + emitter.sigma * sampler.standard_normals(2)
        a, b, k = _sampled_ensemble_terms(emitter, response, length, c1, c2, delta_t, chunk)
    out = {}
    for mode in (DISTINCT, SAME):
        dens = _combine(a, b, k, mode, config.bs1, parallel)
        out[mode] = histogram_from_centers(delta_t, dens, mode)
    return out


def _sampled_ensemble_terms(emitter, response, length, c1, c2, delta_t, chunk):
    grid = response.grid
    step = grid.time_step
    n = c1.size
    probe, _ = _propagated_rows(emitter, np.array([emitter.carrier]), response, length)
    keep = _crop(np.abs(probe[0]) ** 2, pad=int(2e-9 / step))
    lags = _lags(keep.stop - keep.start, step)
    acc_a = np.zeros(lags.size)
    acc_b = np.zeros(lags.size)
    acc_k = np.zeros(lags.size, dtype=complex)
    for s in range(0, n, chunk):
        x, _ = _propagated_rows(emitter, c1[s : s + chunk], response, length)
        y, _ = _propagated_rows(emitter, c2[s : s + chunk], response, length)
        x, y = x[:, keep], y[:, keep]
        ix, iy = np.abs(x) ** 2, np.abs(y) ** 2
        acc_a += _xcorr(ix, iy).real.sum(axis=0)
        acc_b += _xcorr(iy, ix).real.sum(axis=0)
        q = x * np.conj(y)
        acc_k += _xcorr(q, q).sum(axis=0)
    scale = step / n
    return (
        _interp(lags, acc_a * scale, delta_t),
        _interp(lags, acc_b * scale, delta_t),
        _interp(lags, acc_k * scale, delta_t),
    )


def _hermite_carriers(emitter, nodes):
    if emitter.sigma == 0:
        return np.array([emitter.carrier]), np.array([1.0])
    x, w = special.roots_hermite(nodes)
    return emitter.carrier + np.sqrt(2.0) * emitter.sigma * x, w / np.sqrt(np.pi)


class _MediumEnsemble:
    """Gauss-Hermite ensemble of propagated packets on a cropped time axis."""

    def __init__(self, emitter, response, length, nodes=64):
        self.carriers, self.weights = _hermite_carriers(emitter, nodes)
        x_t, _ = _propagated_rows(emitter, self.carriers, response, length)
        step = response.grid.time_step
        self.step = step
        mean = self.weights @ (np.abs(x_t) ** 2)
        self.keep = _crop(mean, pad=int(2e-9 / step))
        self.times = response.grid.times[self.keep]
        self.traces = x_t[:, self.keep]
        self.mean_intensity = mean[self.keep]

    @property
    def lags(self):
        return _lags(self.times.size, self.step)

    def intensity_xcorr(self):
        m = self.mean_intensity
        return _xcorr(m, m).real * self.step

    def coherence_xcorr(self):
        w = self.weights
        acc = np.zeros(self.lags.size, dtype=complex)
        for i in range(w.size):
            q = self.traces[i] * np.conj(self.traces[i:])
            c = _xcorr(q, q) * (w[i] * w[i:])[:, None]
            # (j, i) is the complex conjugate of (i, j) at every lag
            acc += c[0] + 2.0 * c[1:].real.sum(axis=0)
        return acc.real * self.step


def _ensemble_central_terms(emitter, delta_t, response, length):
    if response is None or length == 0:
        a, b, j = _lorentz_envelope_terms(emitter.tau, delta_t)
        return a, b, j.real * np.exp(-((emitter.sigma * delta_t) ** 2)), a
    ens = _MediumEnsemble(emitter, response, length)
    lags = ens.lags
    a = _interp(lags, ens.intensity_xcorr(), delta_t)
    k = _interp(lags, ens.coherence_xcorr(), delta_t)
    return a, a, k, a


def ensemble_g2_model(emitter, config, delta_t, response=None, length=0.0):
    """Deterministic counterpart of :func:`ensemble_g2_numeric`.

    Free packets use the Gaussian characteristic function of the pair
    detuning; propagated packets a Gauss-Hermite carrier ensemble.
    """
    delta_t = np.asarray(delta_t, dtype=float)
    a, b, k, _ = _ensemble_central_terms(emitter, delta_t, response, length)
    parallel = config.polarization != ORTHOGONAL
    return {m: histogram_from_centers(delta_t, _combine(a, b, k, m, config.bs1, parallel), m) for m in (DISTINCT, SAME)}


def visibility(hist_parallel, hist_orthogonal, half_window=DEFAULT_HALF_WINDOW):
    """``|1 - A_par / A_orth|`` from central-peak areas within ``+-half_window``."""
    if not np.allclose(hist_parallel.bin_edges, hist_orthogonal.bin_edges, rtol=0, atol=1e-18):
        raise ContractError("histograms must share their bins")
    a_par = hist_parallel.area(-half_window, half_window)
    a_orth = hist_orthogonal.area(-half_window, half_window)
    if a_orth <= 0:
        raise DomainError("orthogonal central peak has zero area")
    return abs(1.0 - a_par / a_orth)


# ----------------------------------------------------------- peak pattern


def _route(channel, arm, bs1, bs2):
    """Probability that a photon from ``arm`` (0 short, 1 long) clicks ``channel``."""
    t, r = bs1
    to3 = t if arm == 0 else r
    if channel == 3:
        return to3
    if channel == 4:
        return r if arm == 0 else t
    if channel == 5:
        return to3 * bs2[0]
    if channel == 6:
        return to3 * bs2[1]
    raise ContractError(f"no channel {channel}")


def peak_weights(config, channels, m, p2=0.0):
    """Area weight of distinguishable pairs in peak ``m`` (per pulse).

    Probability tree: every photon takes the short or the long arm with
    probability 1/2 (balanced input splitter, long arm one period late), so
    the photon from pulse k arrives in slot k + arm.  BS1 then sends it to
    port 3 or 4 with the probabilities in :func:`_route`; port 3 continues to
    BS2 (channels 5, 6).  A pair in channels (a, b) lands in peak
    ``m = slot_b - slot_a``.  Pairs of primary photons that share a slot
    (m = 0, different pulses) interfere and are left to the caller.
    Secondary photons (probability ``p2`` per pulse) pair with anything.
    """
    a, b = channels
    bs1, bs2 = config.bs1, config.bs2
    pa = [_route(a, arm, bs1, bs2) for arm in (0, 1)]
    pb = [_route(b, arm, bs1, bs2) for arm in (0, 1)]
    full = 0.25 * sum(pa) * sum(pb)
    same_pulse = 0.25 * sum(pa[i] * pb[j] for i in (0, 1) for j in (0, 1) if j - i == m)
    primary = 0.0 if m == 0 else full - same_pulse
    return primary + 2.0 * p2 * full + p2 * p2 * (full - same_pulse)


def _central_weight(config, mode):
    t2, r2 = config.bs2
    # the short photon of slot s and the long photon of slot s-1 are both present
    arms = 0.25
    if mode == DISTINCT:
        return arms
    return arms * t2 * r2


def _gaussian_blur(values, step, sigma):
    if sigma <= 0:
        return values
    half = int(np.ceil(6.0 * sigma / step))
    x = np.arange(-half, half + 1) * step
    kernel = np.exp(-0.5 * (x / sigma) ** 2)
    kernel /= kernel.sum()
    return np.convolve(values, kernel, mode="same")


def _channels(mode):
    if mode == DISTINCT:
        return 3, 4
    if mode == SAME:
        return 5, 6
    raise ContractError(f"peak pattern needs {DISTINCT!r} or {SAME!r}")


def peak_pattern(
    emitter, config, mode, n_peaks=7, bin_width=50e-12, detectors=None, response=None, length=0.0, p2=None
):
    """Model coincidence histogram across ``n_peaks`` repetition periods.

    Densities are coincidences per pulse per second for unit detection
    efficiency.  ``detectors`` maps channel to :class:`DetectorModel` and only
    enters through the timing jitter; ``p2`` defaults to the second-photon
    probability implied by the emitter's g2(0).
    """
    if n_peaks < 1 or n_peaks % 2 == 0:
        raise ContractError("n_peaks must be a positive odd number")
    period = emitter.repetition_period
    if abs(config.path_delay - period) > 1e-9 * period:
        raise ContractError("peak pattern assumes an interferometer delay of one repetition period")
    detectors = detectors or {}
    a_ch, b_ch = _channels(mode)
    if p2 is None:
        p2 = emitter.two_photon_probability
    jitter = np.hypot(
        detectors.get(a_ch, DetectorModel()).jitter_sigma, detectors.get(b_ch, DetectorModel()).jitter_sigma
    )

    half = n_peaks // 2
    span = n_peaks * period
    n_bins = max(int(round(span / bin_width)), n_peaks)
    width = span / n_bins
    sub = 8
    h = width / sub
    margin = int(np.ceil((6.0 * jitter + period) / h))
    fine = (np.arange(-margin, n_bins * sub + margin) + 0.5) * h - 0.5 * span

    reach = 1.5 * period
    local = np.arange(-int(np.ceil(reach / h)), int(np.ceil(reach / h)) + 1) * h
    a, b, k, side = _ensemble_central_terms(emitter, local, response, length)
    parallel = config.polarization != ORTHOGONAL
    central = _central_weight(config, mode) * _combine(a, b, k, mode, config.bs1, parallel)

    dens = np.zeros_like(fine)
    for m in range(-half - 2, half + 3):
        shift = fine - m * period
        w = peak_weights(config, (a_ch, b_ch), m, p2)
        shape = w * np.interp(shift, local, side, 0.0, 0.0)
        if m == 0:
            shape += np.interp(shift, local, central, 0.0, 0.0)
        dens += shape
    dens = _gaussian_blur(dens, h, jitter)
    dens = dens[margin : margin + n_bins * sub].reshape(n_bins, sub).mean(axis=1)
    edges = -0.5 * span + np.arange(n_bins + 1) * width
    return CorrelationHistogram(edges, dens, mode)


def peak_areas(hist, period):
    """Areas of the peaks at multiples of ``period`` covered by ``hist``."""
    c = hist.centers
    lo, hi = hist.bin_edges[0], hist.bin_edges[-1]
    m_lo = int(np.ceil((lo + 0.5 * period) / period - 1e-9))
    m_hi = int(np.floor((hi - 0.5 * period) / period + 1e-9))
    areas = {}
    for m in range(m_lo, m_hi + 1):
        keep = (c >= (m - 0.5) * period) & (c < (m + 0.5) * period)
        areas[m] = float(hist.density[keep].sum() * hist.bin_width)
    return areas


def central_to_outer_ratio(hist, period):
    areas = peak_areas(hist, period)
    outer = max(areas)
    return areas[0] / (0.5 * (areas[outer] + areas[-outer]))


# ------------------------------------------------------------------- TCSPC


def _blur_trace(times, values, detector):
    if detector is None:
        return values
    return _gaussian_blur(values, times[1] - times[0], detector.jitter_sigma)


def _trace_axis(grid, t_range):
    t = grid.times
    keep = (t >= t_range[0]) & (t <= t_range[1])
    return t[keep], keep


def _single_photon_traces(emitter, grid, response, length, nodes, t_range):
    """Temporal amplitudes, norms and Gram matrix of a Gauss-Hermite carrier ensemble."""
    carriers, weights = _hermite_carriers(emitter, nodes)
    times, keep = _trace_axis(grid, t_range)
    if response is None or length == 0:
        spec = lorentzian_spectrum(grid, emitter.tau, carriers)
        spec /= np.sqrt(np.sum(np.abs(spec) ** 2, axis=-1, keepdims=True) * grid.spacing)
        wps = [lorentzian_amplitude(grid, emitter.tau, c) for c in carriers]
        amps = np.array([wp.temporal_amplitude(times) for wp in wps])
    else:
        if response.grid != grid:
            raise ContractError("response lives on a different grid")
        x_t, spec = _propagated_rows(emitter, carriers, response, length)
        amps = x_t[:, keep]
    norms = np.sum(np.abs(spec) ** 2, axis=-1) * grid.spacing
    gram = (np.conj(spec) @ spec.T) * grid.spacing
    return times, weights, amps, norms, gram


def tcspc_one_photon(emitter, response=None, length=0.0, detector=None, t_range=(-2e-9, 20e-9), grid=None, nodes=48):
    """Arrival-time density of unheralded photons, ``E|chi(t)|^2`` blurred by jitter.

    Times are measured from the emission; a medium's vacuum transit ``L/c``
    is removed so the trace shows the excess delay only.  The area equals the
    mean survival probability.
    """
    grid = grid or (response.grid if response is not None else FrequencyGrid.default(0.0))
    times, w, amps, _, _ = _single_photon_traces(emitter, grid, response, length, nodes, t_range)
    trace = w @ (np.abs(amps) ** 2)
    trace = _blur_trace(times, trace, detector)
    return histogram_from_centers(times, trace, TCSPC, label="one_photon")


def tcspc_two_photon(emitter, response=None, length=0.0, detector=None, t_range=(-2e-9, 20e-9), grid=None, nodes=48):
    """Arrival-time density in one output, heralded by a click in the other.

    For the symmetrized pair state the heralded intensity is
    ``1/2 (n1 |chi2(t)|^2 + n2 |chi1(t)|^2) + Re[chi1(t) chi2*(t) <chi1|chi2>]``
    with ``n`` the packet norms.  Each pair is weighted by its heralding
    probability ``n1 n2 + |<chi1|chi2>|^2``; the result is scaled to the mean
    single-photon survival so that it can be laid over the one-photon trace.
    """
    grid = grid or (response.grid if response is not None else FrequencyGrid.default(0.0))
    times, w, amps, n, gram = _single_photon_traces(emitter, grid, response, length, nodes, t_range)
    inten = np.abs(amps) ** 2
    wn = w * n
    # 1/2 sum_ij w_i w_j (n_i |chi_j|^2 + n_j |chi_i|^2) = (sum w n) (sum w |chi|^2)
    direct = wn.sum() * (w @ inten)
    # sum_ij w_i w_j Re[chi_i chi_j^* <chi_i|chi_j>]
    y = (w[:, None] * gram).T @ amps
    cross = np.real(np.sum(w[:, None] * amps * np.conj(y), axis=0))
    herald = wn.sum() ** 2 + float(np.real(w @ (np.abs(gram) ** 2) @ w))
    trace = (direct + cross) / herald * wn.sum()
    trace = _blur_trace(times, trace, detector)
    return histogram_from_centers(times, trace, TCSPC, label="two_photon")


def trace_centroid(hist):
    return float(np.dot(hist.centers, hist.density) / hist.density.sum())


def fwhm(hist):
    """Full width at half maximum of the highest peak (linear interpolation)."""
    x, y = hist.centers, hist.density
    i = int(np.argmax(y))
    half = 0.5 * y[i]
    left = i
    while left > 0 and y[left] > half:
        left -= 1
    right = i
    while right < y.size - 1 and y[right] > half:
        right += 1
    if y[left] > half or y[right] > half:
        raise DomainError("peak does not fall to half maximum inside the histogram")
    xl = np.interp(half, [y[left], y[left + 1]], [x[left], x[left + 1]])
    xr = np.interp(half, [y[right], y[right - 1]], [x[right], x[right - 1]])
    return float(xr - xl)


def _exgauss(t, amp, t0, tau, sigma):
    s = (t - t0) / sigma
    r = sigma / tau
    # amp/tau * exp(-(t-t0)/tau + r^2/2) * Phi(s - r), written through erfcx for stability
    arg = (r - s) / np.sqrt(2.0)
    return amp / (2.0 * tau) * np.exp(-0.5 * s * s) * special.erfcx(arg)


def fit_decay(hist, jitter_sigma, tail_fraction=1e-3):
    """Fit an exponential decay convolved with a known Gaussian jitter.

    Returns ``(tau, t0, amplitude)``.  Bins below ``tail_fraction`` of the
    maximum are ignored.
    """
    t, y = hist.centers, hist.density
    keep = y > tail_fraction * y.max()
    guess = (hist.area(), t[np.argmax(y)] - jitter_sigma, max(trace_centroid(hist) - t[np.argmax(y)], 1e-10))
    if jitter_sigma > 0:
        f = lambda tt, amp, t0, tau: _exgauss(tt, amp, t0, tau, jitter_sigma)
    else:
        f = lambda tt, amp, t0, tau: np.where(tt >= t0, amp / tau * np.exp(-(tt - t0) / tau), 0.0)
    popt, _ = optimize.curve_fit(f, t[keep], y[keep], p0=guess, maxfev=20000)
    amp, t0, tau = popt
    return float(tau), float(t0), float(amp)
