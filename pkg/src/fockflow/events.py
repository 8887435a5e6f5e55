"""Detector click streams and their on-disk formats.

A stream is a NumPy structured array whose rows mirror the binary record
layout: ``channel`` (u2), ``reserved`` (u2, always 0), ``pulse_index`` (u4)
and ``t_fs`` (i8, femtoseconds).  The binary file is the 8-byte magic
``FOCKEVT1`` followed by little-endian 16-byte records; the CSV fallback has
the columns ``channel,pulse_index,t_fs``.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import EventFileError

MAGIC = b"FOCKEVT1"
EVENT_DTYPE = np.dtype([("channel", "<u2"), ("reserved", "<u2"), ("pulse_index", "<u4"), ("t_fs", "<i8")])
CHANNELS = (3, 4, 5, 6)
FS = 1e-15


@dataclass(frozen=True)
class EventRecord:
    channel: int
    pulse_index: int
    timestamp: float

    @property
    def t_fs(self):
        return int(round(self.timestamp / FS))


def empty_stream():
    return np.zeros(0, dtype=EVENT_DTYPE)


def make_stream(channel, pulse_index, t_fs):
    out = np.zeros(len(channel), dtype=EVENT_DTYPE)
    out["channel"] = channel
    out["pulse_index"] = pulse_index
    out["t_fs"] = t_fs
    return out


def records(stream):
    """The stream as a list of :class:`EventRecord` (convenient for small streams)."""
    return [EventRecord(int(c), int(p), int(t) * FS) for c, p, t in zip(stream["channel"], stream["pulse_index"], stream["t_fs"])]


def from_records(recs):
    recs = list(recs)
    return make_stream([r.channel for r in recs], [r.pulse_index for r in recs], [r.t_fs for r in recs])


def channel_times(stream, channel):
    """Sorted timestamps (fs) of ``channel``; channel 3 also collects 5 and 6."""
    ch = stream["channel"]
    sel = np.isin(ch, (3, 5, 6)) if channel == 3 else ch == channel
    return np.sort(stream["t_fs"][sel], kind="stable")


def write_events(path, stream):
    path = Path(path)
    stream = np.asarray(stream, dtype=EVENT_DTYPE)
    if path.suffix.lower() == ".csv":
        with open(path, "w", newline="") as fh:
            fh.write("channel,pulse_index,t_fs\n")
            for c, p, t in zip(stream["channel"], stream["pulse_index"], stream["t_fs"]):
                fh.write(f"{c},{p},{t}\n")
        return
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(stream.tobytes())


def _check_channels(stream, base, stride):
    bad = np.flatnonzero(~np.isin(stream["channel"], CHANNELS))
    if bad.size:
        k = int(bad[0])
        raise EventFileError(f"record {k} has invalid channel {stream['channel'][k]}", base + k * stride)


def read_events(path):
    """Read a binary or CSV event file; malformed input raises :class:`EventFileError`."""
    path = Path(path)
    data = path.read_bytes()
    if data.startswith(MAGIC):
        body = len(data) - len(MAGIC)
        whole = body // EVENT_DTYPE.itemsize * EVENT_DTYPE.itemsize
        if whole != body:
            raise EventFileError("truncated trailing record", len(MAGIC) + whole)
        stream = np.frombuffer(data, dtype=EVENT_DTYPE, offset=len(MAGIC)).copy()
        bad = np.flatnonzero(stream["reserved"] != 0)
        if bad.size:
            raise EventFileError(f"record {int(bad[0])} has a non-zero reserved field", len(MAGIC) + int(bad[0]) * 16 + 2)
        _check_channels(stream, len(MAGIC), 16)
        return stream
    if path.suffix.lower() != ".csv":
        raise EventFileError("missing FOCKEVT1 magic", 0)
    return _read_csv(data)


def _read_csv(data):
    lines = data.split(b"\n")
    offset = 0
    rows = []
    for n, raw in enumerate(lines):
        line = raw.strip()
        if n == 0:
            if line.decode(errors="replace").replace(" ", "") != "channel,pulse_index,t_fs":
                raise EventFileError("expected header 'channel,pulse_index,t_fs'", 0)
        elif line:
            parts = line.split(b",")
            try:
                if len(parts) != 3:
                    raise ValueError
                c, p, t = (int(x) for x in parts)
                if c not in CHANNELS or not 0 <= p < 2**32:
                    raise ValueError
            except ValueError:
                raise EventFileError(f"malformed event line {n + 1}", offset) from None
            rows.append((c, p, t))
        offset += len(raw) + 1
    if not rows:
        return empty_stream()
    c, p, t = zip(*rows)
    return make_stream(c, p, t)
