"""Heel-strike / toe-off detection with a direction-adaptive Zeni projection.

Foot markers are expressed relative to the pelvis centre and projected on
the instantaneous walking direction. Heel strikes are maxima of the heel
projection (foot furthest ahead), toe-offs are minima of the toe
projection (foot furthest behind). Only frames where the subject is upright
and moving are eligible, and anything outside the two straight gait phases
is dropped.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .config import PipelineConfig
from .errors import NeverMoving
from .ingest import TrialRecording
from .peaks import find_peaks
from .segmentation import GAIT_PHASES, PelvisTrack, PhaseSegmentation

MIN_DIRECTION_SPEED = 0.02  # m/s
FEET = ("Left", "Right")


@dataclass(frozen=True)
class GaitEvent:
    kind: str  # "HS" | "TO"
    foot: str  # "Left" | "Right"
    frame: int
    time_s: float
    phase: str
    projection_value: float


@dataclass(frozen=True)
class Step:
    """Interval between two consecutive heel strikes within one gait phase.

    ``hs_frame`` is the strike that completes the step, made by
    ``leading_foot``. ``incomplete`` marks two same-foot strikes in a row
    (the contralateral strike was missed).
    """

    phase: str
    leading_foot: str
    start_frame: int
    hs_frame: int
    hs_time_s: float
    step_time_s: float
    incomplete: bool = False
    trailing_to_frame: int | None = None
    trailing_to_time_s: float | None = None
    step_length_m: float | None = None


def close_gaps(mask: np.ndarray, max_len: int) -> np.ndarray:
    """Set False runs shorter than ``max_len`` to True when flanked by True."""
    mask = np.asarray(mask, dtype=bool).copy()
    n = mask.size
    i = 0
    while i < n:
        if mask[i]:
            i += 1
            continue
        j = i
        while j < n and not mask[j]:
            j += 1
        if i > 0 and j < n and (j - i) < max_len:
            mask[i:j] = True
        i = j
    return mask


def walking_mask(track: PelvisTrack, cfg: PipelineConfig) -> np.ndarray:
    """Upright (pelvis in the top part of its height range) and moving."""
    z = track.z
    z_lo, z_hi = float(z.min()), float(z.max())
    upright = z >= z_lo + cfg.standing_height_fraction * (z_hi - z_lo)
    moving = track.speed > cfg.walk_speed_min
    return close_gaps(upright & moving, round(0.1 * cfg.fps))


def progression_vector(track: PelvisTrack, cfg: PipelineConfig | None = None) -> np.ndarray:
    """Unit planar walking direction per frame, shape ``(n, 2)``.

    Slow frames reuse the last valid direction; frames before the first valid
    one take the first valid direction.
    """
    v = track.velocity
    speed = track.speed
    valid = speed >= MIN_DIRECTION_SPEED
    if not valid.any():
        raise NeverMoving(f"pelvis speed never reaches {MIN_DIRECTION_SPEED} m/s")
    u = np.full_like(v, np.nan)
    u[valid] = v[valid] / speed[valid, None]
    idx = np.where(valid, np.arange(v.shape[0]), -1)
    idx = np.maximum.accumulate(idx)
    first = int(np.flatnonzero(valid)[0])
    idx[idx < 0] = first
    return u[idx]


def project_marker(rec: TrialRecording, marker: str, track: PelvisTrack,
                   u: np.ndarray) -> np.ndarray:
    rel = rec[marker][:, :2] - track.xy
    return np.einsum("ij,ij->i", rel, u)


def refractory_frames(cfg: PipelineConfig) -> int:
    # ceil keeps the time separation >= the refractory window at any fps
    return max(1, math.ceil(cfg.hs_refractory_ms / 1000.0 * cfg.fps - 1e-9))


def _detect(rec, track, u, mask, seg, cfg, kind: str) -> list[GaitEvent]:
    part = "heel" if kind == "HS" else "toe"
    sign = 1.0 if kind == "HS" else -1.0
    gait = [seg.interval(p) for p in GAIT_PHASES]
    events = []
    for foot in FEET:
        s = project_marker(rec, f"{foot.lower()}_{part}", track, u)
        frames = find_peaks(sign * s, refractory_frames(cfg), cfg.hs_prominence_m, mask)
        for f in frames:
            for phase, (a, b) in zip(GAIT_PHASES, gait):
                if a <= f < b:
                    events.append(GaitEvent(kind, foot, int(f), f / rec.fps, phase, float(s[f])))
    events.sort(key=lambda e: (e.frame, e.foot))
    return events


def detect_heel_strikes(rec: TrialRecording, track: PelvisTrack, u: np.ndarray,
                        mask: np.ndarray, seg: PhaseSegmentation,
                        cfg: PipelineConfig) -> list[GaitEvent]:
    return _detect(rec, track, u, mask, seg, cfg, "HS")


def detect_toe_offs(rec: TrialRecording, track: PelvisTrack, u: np.ndarray,
                    mask: np.ndarray, seg: PhaseSegmentation,
                    cfg: PipelineConfig) -> list[GaitEvent]:
    return _detect(rec, track, u, mask, seg, cfg, "TO")


def pair_steps(events: list[GaitEvent]) -> list[Step]:
    """Build steps from consecutive heel strikes within each gait phase.

    ``events`` may mix HS and TO. A step is linked to the toe-off of its
    leading foot (the foot that was trailing when the step began) if one
    falls strictly inside it.
    """
    toe_offs = [e for e in events if e.kind == "TO"]
    strikes = [e for e in events if e.kind == "HS"]
    steps: list[Step] = []
    for phase in GAIT_PHASES:
        seq = sorted((e for e in strikes if e.phase == phase), key=lambda e: (e.frame, e.foot))
        for prev, cur in zip(seq, seq[1:]):
            step = Step(phase=phase, leading_foot=cur.foot, start_frame=prev.frame,
                        hs_frame=cur.frame, hs_time_s=cur.time_s,
                        step_time_s=cur.time_s - prev.time_s,
                        incomplete=cur.foot == prev.foot)
            to = [t for t in toe_offs
                  if t.foot == cur.foot and prev.frame < t.frame < cur.frame]
            if to:
                step = replace(step, trailing_to_frame=to[0].frame,
                               trailing_to_time_s=to[0].time_s)
            steps.append(step)
    return steps
