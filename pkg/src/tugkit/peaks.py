"""Local-maximum detection with topographic prominence and distance filtering.

Rules, applied in order:

1. Candidate: ``s[i-1] < s[i]`` and the first sample after ``i`` that
   differs from ``s[i]`` is lower. A flat top therefore reports its leftmost
   frame; the first and last samples are never peaks.
2. Prominence: walk left and right from the peak until a strictly higher
   sample (or the signal edge); the base on each side is the minimum seen on
   that walk. ``prominence = s[i] - max(left_base, right_base)``.
3. Keep candidates with prominence >= ``min_prominence`` and ``mask[i]``.
4. Greedy distance suppression: visit the survivors highest first (ties:
   leftmost first) and keep one only if no kept peak lies closer than
   ``min_distance`` frames.
"""

from __future__ import annotations

import numpy as np


def _candidates(s: np.ndarray) -> np.ndarray:
    n = s.size
    if n < 3:
        return np.empty(0, dtype=int)
    rises = np.flatnonzero(s[1:] > s[:-1]) + 1
    # for every index, the next index whose value differs
    change = np.flatnonzero(s[1:] != s[:-1]) + 1
    pos = np.searchsorted(change, rises, side="right")
    has_next = pos < change.size
    rises, pos = rises[has_next], pos[has_next]
    nxt = change[pos]
    return rises[s[nxt] < s[rises]]


def _nearest_higher(s: np.ndarray, reverse: bool) -> np.ndarray:
    """Index of the nearest strictly higher sample to the left (or right);
    -1 (or n) when none exists."""
    n = s.size
    out = np.empty(n, dtype=int)
    stack: list[int] = []
    order = range(n - 1, -1, -1) if reverse else range(n)
    default = n if reverse else -1
    for i in order:
        v = s[i]
        while stack and s[stack[-1]] <= v:
            stack.pop()
        out[i] = stack[-1] if stack else default
        stack.append(i)
    return out


class _RangeMin:
    """Sparse table answering min(s[lo:hi]) in O(1)."""

    def __init__(self, s: np.ndarray):
        self.levels = [s]
        k = 1
        while 2 * k <= s.size:
            prev = self.levels[-1]
            self.levels.append(np.minimum(prev[:-k], prev[k:]))
            k *= 2

    def __call__(self, lo: int, hi: int) -> float:
        j = int(hi - lo).bit_length() - 1
        t = self.levels[j]
        return min(t[lo], t[hi - (1 << j)])


def peak_prominences(s: np.ndarray, peaks: np.ndarray) -> np.ndarray:
    s = np.asarray(s, dtype=float)
    if peaks.size == 0:
        return np.empty(0)
    n = s.size
    left = _nearest_higher(s, reverse=False)
    right = _nearest_higher(s, reverse=True)
    rmq = _RangeMin(s)
    prom = np.empty(peaks.size)
    for k, i in enumerate(peaks):
        lo = int(left[i]) + 1
        hi = int(right[i])
        left_base = rmq(lo, i + 1)
        right_base = rmq(i, min(hi, n))
        prom[k] = s[i] - max(left_base, right_base)
    return prom


def _suppress_by_distance(peaks: np.ndarray, heights: np.ndarray, distance: int) -> np.ndarray:
    if distance <= 1 or peaks.size < 2:
        return peaks
    order = np.lexsort((peaks, -heights))
    keep = np.zeros(peaks.size, dtype=bool)
    removed = np.zeros(peaks.size, dtype=bool)
    for k in order:
        if removed[k]:
            continue
        keep[k] = True
        # peaks are sorted by frame, so neighbours are contiguous
        j = k - 1
        while j >= 0 and peaks[k] - peaks[j] < distance:
            removed[j] = True
            j -= 1
        j = k + 1
        while j < peaks.size and peaks[j] - peaks[k] < distance:
            removed[j] = True
            j += 1
    return peaks[keep]


def find_peaks(s, min_distance: int = 1, min_prominence: float = 0.0,
               mask=None) -> np.ndarray:
    """Return sorted frame indices of the accepted local maxima of ``s``."""
    s = np.asarray(s, dtype=float)
    if min_distance < 1:
        raise ValueError("min_distance must be >= 1")
    if min_prominence < 0:
        raise ValueError("min_prominence must be >= 0")
    peaks = _candidates(s)
    if peaks.size == 0:
        return peaks
    prom = peak_prominences(s, peaks)
    ok = prom >= min_prominence
    if mask is not None:
        ok &= np.asarray(mask, dtype=bool)[peaks]
    peaks = peaks[ok]
    return _suppress_by_distance(peaks, s[peaks], int(min_distance))
