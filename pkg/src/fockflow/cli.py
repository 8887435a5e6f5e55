"""``fockflow`` command line: scenario in, CSV files out.

Each subcommand writes into ``--out`` (default: the current directory) and
overwrites its previous results.  Every CSV starts with a
``# fockflow <version>, scenario hash <hex>`` line and contains no
timestamps, so identical scenarios give byte-identical files.
"""

from __future__ import annotations

import argparse
import csv
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import correlation as corr
from . import events as ev
from . import montecarlo as mc
from . import scenario as sc
from . import vapor, wavepacket
from .errors import FockflowError
from .models import ORTHOGONAL, PARALLEL
from .wavepacket import C_LIGHT, TWO_PI

# resolution of the central-peak model used for the visibility
_VISIBILITY_STEP = 10e-12


def _write_summary(path, header, rows):
    with open(path, "w", newline="") as fh:
        fh.write(header + "\n")
        w = csv.writer(fh)
        w.writerow(["quantity", "value", "unit"])
        for name, value, unit in rows:
            w.writerow([name, f"{value:.10g}" if isinstance(value, float) else value, unit])


def _print_rows(rows):
    for name, value, unit in rows:
        shown = f"{value:.6g}" if isinstance(value, float) else value
        print(f"  {name} = {shown} {unit}".rstrip())


def cmd_transmission(s, out):
    resp = s.response
    length = s.cell.length
    vapor.write_spectrum_csv(out / "transmission.csv", resp, length, s.header)
    center = vapor.window_center(resp)
    trans = vapor.transmission_spectrum(resp, length)
    d = resp.grid.detunings
    lines = np.asarray(resp.line_detunings)
    on_res = trans[np.abs(d[:, None] - lines[None, :]).argmin(axis=0)]
    rows = [
        ("window_center", center / TWO_PI / 1e9, "GHz"),
        ("window_transmission", float(np.interp(center, d, trans)), ""),
        ("max_on_resonance_transmission", float(on_res.max()), ""),
        ("group_index", vapor.group_index(resp, center), ""),
        ("excess_group_delay", (vapor.group_delay(resp, length, center) - length / C_LIGHT) * 1e9, "ns"),
        ("number_density", s.cell.number_density, "m^-3"),
    ]
    _write_summary(out / "transmission_summary.csv", s.header, rows)
    return rows


def _central_model(s, pol):
    dmax = s.output["delta_t_max_ns"] * 1e-9
    n = int(round(dmax / _VISIBILITY_STEP))
    dt = np.arange(-n, n + 1) * _VISIBILITY_STEP
    response, length = s.medium
    config = replace(s.interferometer, polarization=pol)
    return corr.ensemble_g2_model(s.emitter, config, dt, response, length)


def _write_scan(path, s):
    """Closed-form ensemble correlation for every width in ``sigma_scan_GHz``."""
    tau = s.emitter.tau
    dmax = s.output["delta_t_max_ns"] * 1e-9
    n = int(round(dmax / _VISIBILITY_STEP))
    dt = np.arange(-n, n + 1) * _VISIBILITY_STEP
    rows = []
    with open(path, "w", newline="") as fh:
        fh.write(s.header + "\n")
        w = csv.writer(fh)
        w.writerow(["delta_t_ns", "density", "mode", "sigma_GHz"])
        for sigma_ghz in s.output["sigma_scan_GHz"]:
            sigma = TWO_PI * float(sigma_ghz) * 1e9
            for mode in s.output["modes"]:
                g = corr.ensemble_g2_closed_form(dt, tau, sigma, mode)
                for t, v in zip(dt * 1e9, g * 1e-9):
                    w.writerow([f"{t:.6f}", f"{v:.10g}", mode, f"{float(sigma_ghz):g}"])
            rows.append((f"visibility_sigma_{float(sigma_ghz):g}GHz", corr.visibility_closed_form(sigma, tau), ""))
    return rows


def cmd_hom(s, out):
    response, length = s.medium
    detectors = {ch: s.detector for ch in (3, 4, 5, 6)}
    modes = s.output["modes"]
    period = s.emitter.repetition_period
    models = {pol: _central_model(s, pol) for pol in (PARALLEL, ORTHOGONAL)}
    patterns = {}
    for pol in (PARALLEL, ORTHOGONAL):
        config = replace(s.interferometer, polarization=pol)
        patterns[pol] = {
            m: corr.peak_pattern(
                s.emitter,
                config,
                m,
                n_peaks=s.output["n_peaks"],
                bin_width=s.output["bin_width_ps"] * 1e-12,
                detectors=detectors,
                response=response,
                length=length,
            )
            for m in modes
        }
        corr.write_histograms_csv(out / f"hom_{pol}.csv", [patterns[pol][m] for m in modes], s.header)

    rows = [("sigma", s.emitter.sigma / TWO_PI / 1e9, "GHz")]
    with open(out / "visibility.csv", "w", newline="") as fh:
        fh.write(s.header + "\n")
        w = csv.writer(fh)
        w.writerow(["mode", "visibility", "visibility_with_multiphoton", "central_to_outer_parallel", "central_to_outer_orthogonal"])
        for m in modes:
            v = corr.visibility(models[PARALLEL][m], models[ORTHOGONAL][m], s.output["delta_t_max_ns"] * 1e-9)
            half = 0.5 * period
            v_pattern = corr.visibility(patterns[PARALLEL][m], patterns[ORTHOGONAL][m], half)
            r_par = corr.central_to_outer_ratio(patterns[PARALLEL][m], period)
            r_orth = corr.central_to_outer_ratio(patterns[ORTHOGONAL][m], period)
            w.writerow([m, f"{v:.10g}", f"{v_pattern:.10g}", f"{r_par:.10g}", f"{r_orth:.10g}"])
            rows += [
                (f"visibility_{m}", v, ""),
                (f"central_to_outer_parallel_{m}", r_par, ""),
                (f"central_to_outer_orthogonal_{m}", r_orth, ""),
            ]
    if s.output["sigma_scan_GHz"]:
        rows += _write_scan(out / "ensemble_scan.csv", s)
    return rows


def _traces(s, response, length, suffix):
    kw = dict(detector=s.detector, t_range=(s.output["t_min_ns"] * 1e-9, s.output["t_max_ns"] * 1e-9), grid=s.grid)
    one = corr.tcspc_one_photon(s.emitter, response, length, **kw)
    two = corr.tcspc_two_photon(s.emitter, response, length, **kw)
    return [corr.histogram_from_centers(h.centers, h.density, corr.TCSPC, label=h.label + suffix) for h in (one, two)]


def cmd_tcspc(s, out):
    response, length = s.medium
    traces = _traces(s, response, length, "")
    if response is not None:
        traces += _traces(s, None, 0.0, "_no_vapor")
    corr.write_histograms_csv(out / "tcspc.csv", traces, s.header)
    rows = []
    for h in traces:
        rows += [
            (f"{h.label}_area", h.area(), ""),
            (f"{h.label}_fwhm", corr.fwhm(h) * 1e9, "ns"),
            (f"{h.label}_centroid", corr.trace_centroid(h) * 1e9, "ns"),
            (f"{h.label}_peak", float(h.centers[np.argmax(h.density)]) * 1e9, "ns"),
        ]
    reference = traces[2] if response is not None else traces[0]
    tau, _, _ = corr.fit_decay(reference, s.detector.jitter_sigma)
    rows.append(("fitted_decay_no_vapor", tau * 1e9, "ns"))
    _write_summary(out / "tcspc_summary.csv", s.header, rows)
    return rows


def cmd_montecarlo(s, out):
    response, length = s.medium
    run = s.run
    stream = mc.simulate_stream(run, response, length if response is not None else None, workers=s.raw["run"]["workers"])
    ev.write_events(out / "events.bin", stream)

    period = s.emitter.repetition_period
    span = 0.5 * s.output["n_peaks"] * period
    bin_width = s.output["bin_width_ps"] * 1e-12
    detectors = {ch: s.detector for ch in (3, 4, 5, 6)}
    pairs = {corr.DISTINCT: (3, 4), corr.SAME: (5, 6)}
    rows = [("pulses", run.n_pulses, ""), ("events", int(stream.size), "")]
    for ch in ev.CHANNELS:
        rows.append((f"events_channel_{ch}", int(np.count_nonzero(stream["channel"] == ch)), ""))
    hists = []
    for m in s.output["modes"]:
        a, b = pairs[m]
        h = mc.correlate_events(stream, a, b, bin_width, span, mode=m)
        hists.append(h)
        if s.interferometer.bypass:
            continue
        model = corr.peak_pattern(
            s.emitter,
            s.interferometer,
            m,
            n_peaks=s.output["n_peaks"],
            bin_width=bin_width,
            detectors=detectors,
            response=response,
            length=length,
        )
        eff = s.detector.efficiency
        expected = mc.expected_counts(model, run.n_pulses, eff, eff)
        if model.density.size == h.counts.size and np.any(expected > 5):
            rows.append((f"chi2_per_bin_{m}", mc.chi2_per_bin(h.counts, expected), ""))
        rows.append((f"central_to_outer_{m}", corr.central_to_outer_ratio(h, period), ""))
    if hists:
        corr.write_histograms_csv(out / "mc_hom.csv", hists, s.header)

    traces = mc.heralded_tcspc(
        stream,
        (5, 6),
        s.output["coincidence_window_ns"] * 1e-9,
        period,
        bin_width=s.output["tcspc_bin_ps"] * 1e-12,
        t_range=(s.output["t_min_ns"] * 1e-9, s.output["t_max_ns"] * 1e-9),
    )
    corr.write_histograms_csv(out / "mc_tcspc.csv", [traces["one_photon"], traces["two_photon"]], s.header)
    n1 = int(traces["one_photon"].counts.sum())
    n2 = int(traces["two_photon"].counts.sum())
    rows += [("unheralded_events", n1, ""), ("heralded_events", n2, "")]
    if n1:
        rows.append(("heralded_fraction", n2 / n1, ""))
    _write_summary(out / "montecarlo_summary.csv", s.header, rows)
    return rows


def cmd_propagate(s, out):
    resp = s.response
    length = s.cell.length
    wp = wavepacket.lorentzian_amplitude(s.grid, s.emitter.tau, s.emitter.carrier)
    moved = wavepacket.propagate(wp, resp, length, relative_to_vacuum=True)
    t_range = (s.output["t_min_ns"] * 1e-9, s.output["t_max_ns"] * 1e-9)
    wavepacket.write_spectrum_csv(out / "spectrum.csv", moved, s.header)
    wavepacket.write_temporal_csv(out / "temporal.csv", moved, t_range, s.header)
    rows = [
        ("carrier", s.emitter.carrier / TWO_PI / 1e9, "GHz"),
        ("survival", wavepacket.survival_probability(moved), ""),
        ("excess_centroid_delay", (wavepacket.temporal_centroid(moved) - wavepacket.temporal_centroid(wp)) * 1e9, "ns"),
        ("group_index", vapor.group_index(resp, s.emitter.carrier), ""),
    ]
    _write_summary(out / "propagate_summary.csv", s.header, rows)
    return rows


COMMANDS = {
    "transmission": (cmd_transmission, "vapor transmission and group delay"),
    "hom": (cmd_hom, "two-photon interference histograms and visibility"),
    "tcspc": (cmd_tcspc, "one- and two-photon arrival-time traces"),
    "montecarlo": (cmd_montecarlo, "event-level simulation and derived histograms"),
    "propagate": (cmd_propagate, "single photon through the vapor cell"),
}


def _parser():
    parser = argparse.ArgumentParser(prog="fockflow", description="Slow-light two-photon interference simulations.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (_, help_text) in COMMANDS.items():
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--scenario", type=Path, help="TOML scenario file")
        p.add_argument("--figure", choices=sc.FIGURES, help="start from a bundled preset")
        p.add_argument("--out", type=Path, default=Path("."), help="output directory")
        p.add_argument("--seed", type=int, help="override run.seed")
        p.add_argument("--pulses", type=int, help="override run.pulses")
    return parser


def main(argv=None):
    args = _parser().parse_args(argv)
    run = {}
    if args.seed is not None:
        run["seed"] = args.seed
    if args.pulses is not None:
        run["pulses"] = args.pulses
    try:
        s = sc.load(args.scenario, args.figure, {"run": run} if run else None)
        args.out.mkdir(parents=True, exist_ok=True)
        func, _ = COMMANDS[args.command]
        rows = func(s, args.out)
    except (FockflowError, OSError) as exc:
        print(f"fockflow: error: {exc}", file=sys.stderr)
        return 2
    print(f"fockflow {args.command}: wrote results to {args.out}")
    _print_rows(rows)
    return 0


if __name__ == "__main__":
    sys.exit(main())
