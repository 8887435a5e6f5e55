"""NumPy implementations of the event-stream kernels.

These define the reference behaviour; the compiled versions in
``_ckernels`` must agree with them exactly.
"""

import numpy as np

_CHUNK = 1 << 18


def cross_correlate(ta, tb, lo, bin_width, n_bins):
    """Histogram of ``tb[j] - ta[i]`` over all pairs with ``lo <= d < lo + n_bins*bin_width``.

    ``ta`` and ``tb`` are sorted int64 timestamps; the result is int64 counts.
    """
    ta = np.ascontiguousarray(ta, dtype=np.int64)
    tb = np.ascontiguousarray(tb, dtype=np.int64)
    counts = np.zeros(n_bins, dtype=np.int64)
    if ta.size == 0 or tb.size == 0:
        return counts
    hi = lo + n_bins * bin_width
    start = np.searchsorted(tb, ta + lo, side="left")
    stop = np.searchsorted(tb, ta + hi, side="left")
    n = stop - start
    # walk over ``ta`` in slices so the pair list stays bounded in memory
    csum = np.cumsum(n)
    i = 0
    while i < ta.size:
        base = csum[i - 1] if i else 0
        j = int(np.searchsorted(csum, base + _CHUNK, side="right"))
        j = max(j, i + 1)
        nn = n[i:j]
        rows = np.repeat(np.arange(i, j), nn)
        if rows.size:
            first = np.repeat(start[i:j] - (np.cumsum(nn) - nn), nn)
            cols = first + np.arange(rows.size)
            d = tb[cols] - ta[rows]
            counts += np.bincount((d - lo) // bin_width, minlength=n_bins)[:n_bins]
        i = j
    return counts


def dead_time_filter(t, dead_time):
    """Mask of events kept by a non-paralyzable detector with the given dead time."""
    t = np.asarray(t, dtype=np.int64)
    keep = np.ones(t.size, dtype=bool)
    if dead_time <= 0 or t.size < 2:
        return keep
    close = np.flatnonzero(np.diff(t) < dead_time) + 1
    if close.size == 0:
        return keep
    last = t[0]
    for k in range(1, t.size):
        if t[k] - last < dead_time:
            keep[k] = False
        else:
            last = t[k]
    return keep


def coincidence_mask(ta, tb, window):
    """Flags of ``ta`` and ``tb`` events with a partner in the other list within ``window``."""
    ta = np.asarray(ta, dtype=np.int64)
    tb = np.asarray(tb, dtype=np.int64)
    if ta.size == 0 or tb.size == 0:
        return np.zeros(ta.size, dtype=bool), np.zeros(tb.size, dtype=bool)
    lo = np.searchsorted(tb, ta - window, side="left")
    hi = np.searchsorted(tb, ta + window, side="right")
    has_a = hi > lo
    lo = np.searchsorted(ta, tb - window, side="left")
    hi = np.searchsorted(ta, tb + window, side="right")
    has_b = hi > lo
    return has_a, has_b
