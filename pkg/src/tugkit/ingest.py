"""Landmark CSV loading, gap filling and zero-phase low-pass smoothing.

Coordinates are meters in a right-handed lab frame: X mediolateral,
Y anteroposterior (the walkway), Z vertical.
"""

from __future__ import annotations

import csv
import dataclasses
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping

import numpy as np
import pandas as pd
from scipy import signal

from .config import OPTIONAL_MARKERS, REQUIRED_MARKERS, MarkerSet, PipelineConfig
from .errors import AllGap, GapTooLong, MalformedCSV, MissingColumn, TooShort

logger = logging.getLogger(__name__)

FILTER_ORDER = 2  # per pass; forward-backward doubles the effective order
AXES = ("X", "Y", "Z")


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class TrialRecording:
    """Frame-indexed 3D marker trajectories of one trial.

    ``coords[name]`` is an ``(n_frames, 3)`` array; ``quality_mask[name]`` is
    True where the sample was observed and False where it was missing in the
    source file (and later interpolated).
    """

    trial_id: str
    fps: float
    coords: Mapping[str, np.ndarray]
    quality_mask: Mapping[str, np.ndarray]

    def __post_init__(self):
        coords = {k: _frozen(np.asarray(v, dtype=float)) for k, v in self.coords.items()}
        masks = {k: _frozen(np.asarray(v, dtype=bool)) for k, v in self.quality_mask.items()}
        lengths = {v.shape[0] for v in coords.values()}
        if len(lengths) > 1:
            raise ValueError(f"markers have differing frame counts: {sorted(lengths)}")
        for name, xyz in coords.items():
            if xyz.ndim != 2 or xyz.shape[1] != 3:
                raise ValueError(f"{name}: expected (n, 3) coordinates, got {xyz.shape}")
            if name not in masks:
                masks[name] = _frozen(np.all(np.isfinite(xyz), axis=1))
        object.__setattr__(self, "coords", coords)
        object.__setattr__(self, "quality_mask", masks)

    @property
    def n_frames(self) -> int:
        return next(iter(self.coords.values())).shape[0] if self.coords else 0

    @property
    def markers(self) -> list[str]:
        return list(self.coords)

    @property
    def time(self) -> np.ndarray:
        return np.arange(self.n_frames) / self.fps

    def __getitem__(self, name: str) -> np.ndarray:
        return self.coords[name]

    def has(self, *names: str) -> bool:
        return all(n in self.coords for n in names)

    def with_coords(self, coords: Mapping[str, np.ndarray]) -> "TrialRecording":
        return dataclasses.replace(self, coords=dict(coords))


def _match_columns(header: list[str], stem: str) -> dict[str, int] | None:
    found: dict[str, int] = {}
    for axis in AXES:
        hits = [i for i, col in enumerate(header)
                if col in (f"{stem}_{axis}", f"{stem}_{axis.lower()}")]
        if len(hits) > 1:
            raise MalformedCSV(f"ambiguous columns for {stem}_{axis}")
        if hits:
            found[axis] = hits[0]
    return found


def load_landmarks_csv(path: str | Path, cfg: PipelineConfig) -> TrialRecording:
    """Read a landmark CSV into a :class:`TrialRecording` (gaps left as NaN)."""
    path = Path(path)
    try:
        df = pd.read_csv(path, dtype=str, keep_default_na=False, encoding="utf-8")
    except (pd.errors.ParserError, pd.errors.EmptyDataError, UnicodeDecodeError) as exc:
        raise MalformedCSV(f"{path.name}: {exc}") from exc
    header = [str(c).strip() for c in df.columns]

    coords: dict[str, np.ndarray] = {}
    masks: dict[str, np.ndarray] = {}
    for name in cfg.marker_set.names:
        stem = cfg.marker_set.stems[name]
        cols = _match_columns(header, stem)
        if len(cols) < 3:
            if name in REQUIRED_MARKERS:
                raise MissingColumn(name)
            if cols:
                logger.warning("%s: optional marker %s has incomplete columns; ignored",
                               path.name, name)
            continue
        block = df.iloc[:, [cols[a] for a in AXES]].apply(
            pd.to_numeric, errors="coerce").to_numpy(dtype=float)
        block[~np.isfinite(block)] = np.nan
        observed = np.all(np.isfinite(block), axis=1)
        block[~observed] = np.nan
        if cfg.units == "mm":
            block = block / 1000.0
        coords[name] = block
        masks[name] = observed

    n = len(df)
    if n < 2 * cfg.fps:
        raise TooShort(f"{n} frames < 2 s at {cfg.fps:g} fps")
    for name in list(coords):
        if not masks[name].any():
            if name in REQUIRED_MARKERS:
                raise AllGap(name)
            logger.warning("%s: optional marker %s has no data; ignored", path.name, name)
            del coords[name], masks[name]
    return TrialRecording(trial_id=path.stem, fps=float(cfg.fps), coords=coords,
                          quality_mask=masks)


def write_landmarks_csv(rec: TrialRecording, path: str | Path,
                        marker_set: MarkerSet | None = None) -> Path:
    """Write ``rec`` in the input CSV format (gaps as empty cells).

    Floats are written with ``repr`` so a reload reproduces them exactly.
    """
    path = Path(path)
    stems = marker_set.stems if marker_set is not None else {m: m for m in rec.markers}
    names = [m for m in REQUIRED_MARKERS + OPTIONAL_MARKERS if m in rec.coords]
    header = ["frame"] + [f"{stems[m]}_{a}" for m in names for a in AXES]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for i in range(rec.n_frames):
            row = [str(i)]
            for m in names:
                for v in rec.coords[m][i]:
                    row.append(repr(float(v)) if np.isfinite(v) else "")
            writer.writerow(row)
    return path


def _fill_channel(values: np.ndarray, limit: int, marker: str) -> np.ndarray:
    """Fill NaN runs of one ``(n, 3)`` marker array."""
    observed = np.all(np.isfinite(values), axis=1)
    if observed.all():
        return values
    idx = np.flatnonzero(observed)
    # interior runs
    gaps = np.flatnonzero(np.diff(idx) > 1)
    for g in gaps:
        start, stop = idx[g] + 1, idx[g + 1]
        if stop - start > limit:
            raise GapTooLong(f"{marker}: frames {start}-{stop - 1} "
                             f"({stop - start} > {limit} frames)")
    out = np.empty_like(values)
    frames = np.arange(values.shape[0])
    for k in range(3):
        out[:, k] = np.interp(frames, idx, values[idx, k])
    # np.interp holds the end values flat over leading/trailing gaps
    return out


def fill_gaps(rec: TrialRecording, cfg: PipelineConfig) -> TrialRecording:
    """Linearly interpolate interior gaps of at most ``max_gap_fill_frames``.

    Leading and trailing gaps take the nearest observed sample. The quality
    mask is carried over unchanged so interpolated samples stay identifiable.
    """
    filled = {m: _fill_channel(xyz, cfg.max_gap_fill_frames, m)
              for m, xyz in rec.coords.items()}
    return rec.with_coords(filled)


def butterworth_lowpass(cutoff_hz: float, fps: float) -> tuple[np.ndarray, np.ndarray]:
    # scipy designs via the bilinear transform with frequency pre-warping
    return signal.butter(FILTER_ORDER, cutoff_hz / (fps / 2.0), btype="low")


def filtfilt_channel(x: np.ndarray, cutoff_hz: float, fps: float) -> np.ndarray:
    """Zero-phase Butterworth low-pass along axis 0."""
    b, a = butterworth_lowpass(cutoff_hz, fps)
    return signal.filtfilt(b, a, x, axis=0, padtype="odd", padlen=3 * FILTER_ORDER)


def lowpass_filter(rec: TrialRecording, cfg: PipelineConfig) -> TrialRecording:
    smoothed = {m: filtfilt_channel(xyz, cfg.filter_cutoff_hz, rec.fps)
                for m, xyz in rec.coords.items()}
    return rec.with_coords(smoothed)


def prepare_recording(path: str | Path, cfg: PipelineConfig) -> tuple[TrialRecording, TrialRecording]:
    """Load, gap-fill and filter. Returns ``(raw_filled, filtered)``."""
    rec = fill_gaps(load_landmarks_csv(path, cfg), cfg)
    return rec, lowpass_filter(rec, cfg)
