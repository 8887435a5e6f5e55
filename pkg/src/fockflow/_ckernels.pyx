# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled event-stream kernels; see ``_pykernels`` for the reference semantics."""

import numpy as np
cimport numpy as cnp

cnp.import_array()


def cross_correlate(ta, tb, long long lo, long long bin_width, Py_ssize_t n_bins):
    cdef const long long[::1] a = np.ascontiguousarray(ta, dtype=np.int64)
    cdef const long long[::1] b = np.ascontiguousarray(tb, dtype=np.int64)
    out = np.zeros(n_bins, dtype=np.int64)
    cdef long long[::1] counts = out
    cdef Py_ssize_t na = a.shape[0], nb = b.shape[0]
    cdef Py_ssize_t i, j, first = 0
    cdef long long hi = lo + n_bins * bin_width, d
    with nogil:
        for i in range(na):
            while first < nb and b[first] - a[i] < lo:
                first += 1
            j = first
            while j < nb:
                d = b[j] - a[i]
                if d >= hi:
                    break
                counts[(d - lo) // bin_width] += 1
                j += 1
    return out


def dead_time_filter(t, long long dead_time):
    cdef const long long[::1] ts = np.ascontiguousarray(t, dtype=np.int64)
    cdef Py_ssize_t n = ts.shape[0], k
    out = np.ones(n, dtype=np.bool_)
    if dead_time <= 0 or n < 2:
        return out
    cdef cnp.npy_bool[::1] keep = out
    cdef long long last = ts[0]
    with nogil:
        for k in range(1, n):
            if ts[k] - last < dead_time:
                keep[k] = 0
            else:
                last = ts[k]
    return out


cdef _partner(const long long[::1] x, const long long[::1] y, long long window):
    cdef Py_ssize_t nx = x.shape[0], ny = y.shape[0], i, j = 0
    out = np.zeros(nx, dtype=np.bool_)
    cdef cnp.npy_bool[::1] has = out
    if ny == 0:
        return out
    with nogil:
        for i in range(nx):
            while j < ny and y[j] < x[i] - window:
                j += 1
            if j < ny and y[j] <= x[i] + window:
                has[i] = 1
    return out


def coincidence_mask(ta, tb, long long window):
    cdef const long long[::1] a = np.ascontiguousarray(ta, dtype=np.int64)
    cdef const long long[::1] b = np.ascontiguousarray(tb, dtype=np.int64)
    return _partner(a, b, window), _partner(b, a, window)
