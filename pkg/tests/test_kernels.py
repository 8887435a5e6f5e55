import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fockflow import kernels

BACKENDS = [kernels.python] + ([kernels.compiled] if kernels.compiled is not None else [])
times = st.lists(st.integers(-10_000, 10_000), max_size=60).map(lambda x: np.sort(np.array(x, dtype=np.int64)))


def _brute_xcorr(ta, tb, lo, bw, n_bins):
    counts = np.zeros(n_bins, dtype=np.int64)
    for a in ta:
        for b in tb:
            k = (b - a - lo) // bw
            if 0 <= k < n_bins:
                counts[k] += 1
    return counts


def _brute_dead(t, dead):
    keep, last = [], None
    for x in t:
        ok = last is None or x - last >= dead
        keep.append(ok)
        if ok:
            last = x
    return np.array(keep, dtype=bool)


def test_compiled_backend_is_active():
    if kernels.compiled is None:
        pytest.skip("extension not built")
    assert kernels.BACKEND in ("cython", "python")


@pytest.mark.parametrize("impl", BACKENDS)
@settings(max_examples=60, deadline=None)
@given(ta=times, tb=times, lo=st.integers(-3000, 0), bw=st.integers(1, 700), n_bins=st.integers(1, 20))
def test_cross_correlate(impl, ta, tb, lo, bw, n_bins):
    got = impl.cross_correlate(ta, tb, lo, bw, n_bins)
    assert got.dtype == np.int64
    assert np.array_equal(got, _brute_xcorr(ta, tb, lo, bw, n_bins))


@pytest.mark.parametrize("impl", BACKENDS)
@settings(max_examples=60, deadline=None)
@given(t=times, dead=st.integers(0, 3000))
def test_dead_time_filter(impl, t, dead):
    assert np.array_equal(impl.dead_time_filter(t, dead), _brute_dead(t, dead))


@pytest.mark.parametrize("impl", BACKENDS)
@settings(max_examples=60, deadline=None)
@given(ta=times, tb=times, window=st.integers(0, 2000))
def test_coincidence_mask(impl, ta, tb, window):
    has_a, has_b = impl.coincidence_mask(ta, tb, window)
    want_a = np.array([np.any(np.abs(tb - a) <= window) for a in ta], dtype=bool)
    want_b = np.array([np.any(np.abs(ta - b) <= window) for b in tb], dtype=bool)
    assert np.array_equal(has_a, want_a)
    assert np.array_equal(has_b, want_b)


def test_backends_agree_on_large_input():
    if kernels.compiled is None:
        pytest.skip("extension not built")
    rng = np.random.default_rng(0)
    ta = np.sort(rng.integers(0, 10**12, 200_000))
    tb = np.sort(rng.integers(0, 10**12, 200_000))
    for name, args in (
        ("cross_correlate", (ta, tb, -5_000_000, 10_000, 1000)),
        ("dead_time_filter", (ta, 3_000_000)),
        ("coincidence_mask", (ta, tb, 1_000_000)),
    ):
        a = getattr(kernels.python, name)(*args)
        b = getattr(kernels.compiled, name)(*args)
        for x, y in zip(a if isinstance(a, tuple) else (a,), b if isinstance(b, tuple) else (b,)):
            assert np.array_equal(np.asarray(x), np.asarray(y)), name


def test_forced_python_backend(monkeypatch):
    import importlib

    monkeypatch.setenv("FOCKFLOW_FORCE_PYTHON", "1")
    mod = importlib.reload(kernels)
    try:
        assert mod.BACKEND == "python"
        assert mod.cross_correlate is kernels.python.cross_correlate
    finally:
        monkeypatch.delenv("FOCKFLOW_FORCE_PYTHON")
        importlib.reload(kernels)
