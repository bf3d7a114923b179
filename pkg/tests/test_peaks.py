import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from tugkit.peaks import find_peaks, peak_prominences

from oracles import brute_find_peaks, brute_prominence


def test_sine_three_crests():
    t = np.arange(300) / 100.0
    s = np.sin(2 * np.pi * t)
    assert find_peaks(s, min_distance=50, min_prominence=0.5).tolist() == [25, 125, 225]


def test_monotonic_has_no_peaks():
    assert find_peaks(np.arange(50.0)).size == 0
    assert find_peaks(-np.arange(50.0)).size == 0


def test_equal_peaks_leftmost_survives():
    s = np.zeros(40)
    s[10] = s[20] = 1.0
    assert find_peaks(s, min_distance=20).tolist() == [10]


def test_plateau_reports_leftmost_frame():
    s = np.array([0, 1, 3, 3, 3, 1, 0], dtype=float)
    assert find_peaks(s).tolist() == [2]


def test_rising_plateau_at_edge_is_not_a_peak():
    s = np.array([0, 1, 2, 2, 2], dtype=float)
    assert find_peaks(s).size == 0


def test_endpoints_never_peaks():
    s = np.array([5, 1, 2, 1, 5], dtype=float)
    assert find_peaks(s).tolist() == [2]


def test_mask_excludes_peaks():
    s = np.array([0, 2, 0, 3, 0], dtype=float)
    mask = np.array([True, False, True, True, True])
    assert find_peaks(s, mask=mask).tolist() == [3]


def test_mask_applied_before_distance_suppression():
    # the tall peak is masked out, so it must not suppress its neighbour
    s = np.array([0, 1, 0, 5, 0, 0], dtype=float)
    mask = np.array([True, True, True, False, True, True])
    assert find_peaks(s, min_distance=5, mask=mask).tolist() == [1]


def test_prominence_matches_hand_value():
    s = np.array([0, 3, 1, 4, 2, 5, 0], dtype=float)
    # peak at 1: left base 0, right walk reaches 4 at 3 -> base 1 -> prominence 2
    # peak at 3: left walk min 0, right walk stops at 5 with min 2 -> 4 - 2 = 2
    # peak at 5: global max, bases 0 and 0 -> 5
    peaks = np.array([1, 3, 5])
    assert peak_prominences(s, peaks).tolist() == [2.0, 2.0, 5.0]


def test_prominence_threshold():
    s = np.array([0, 3, 1, 4, 2, 5, 0], dtype=float)
    assert find_peaks(s, min_prominence=2.5).tolist() == [5]


series = st.lists(st.integers(-5, 5), min_size=0, max_size=60).map(
    lambda v: np.asarray(v, dtype=float))


@settings(max_examples=300, deadline=None)
@given(s=series, distance=st.integers(1, 15), prominence=st.sampled_from([0.0, 0.5, 1, 2, 4]),
       mask_seed=st.integers(0, 2**16))
def test_matches_brute_force_on_plateau_heavy_series(s, distance, prominence, mask_seed):
    mask = np.random.default_rng(mask_seed).random(s.size) < 0.8
    expected = brute_find_peaks(s, distance, prominence, mask)
    assert find_peaks(s, distance, prominence, mask).tolist() == expected


@settings(max_examples=100, deadline=None)
@given(s=series.filter(lambda a: a.size >= 3))
def test_prominence_matches_direct_walk(s):
    peaks = find_peaks(s)
    assert peak_prominences(s, peaks).tolist() == [brute_prominence(s, int(i)) for i in peaks]


@settings(max_examples=100, deadline=None)
@given(s=series, distance=st.integers(1, 20))
def test_survivors_respect_distance(s, distance):
    peaks = find_peaks(s, distance)
    assert np.all(np.diff(peaks) >= distance)


@settings(max_examples=100, deadline=None)
@given(s=series)
def test_invariant_to_positive_affine_map(s):
    # exact in floating point for small integer series
    base = find_peaks(s, 3, 1.0).tolist()
    assert find_peaks(s * 4.0 + 8.0, 3, 4.0).tolist() == base
