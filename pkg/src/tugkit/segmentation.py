"""Spatial phase segmentation of a TUG trial along the walkway (Y) axis."""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .config import PipelineConfig
from .errors import (EmptyPhase, NoChairReturn, NoStandExit, NoTurnEntry, NoTurnExit,
                     StartOutsideChairZone)
from .ingest import TrialRecording

logger = logging.getLogger(__name__)

PHASES = ("Stand", "FirstGait", "Turn", "SecondGait", "Sit")
GAIT_PHASES = ("FirstGait", "SecondGait")
HEADING_MIN_SPEED = 0.02  # m/s; below this the planar heading is noise


@dataclass(frozen=True)
class PelvisTrack:
    fps: float
    position: np.ndarray  # (n, 3)
    velocity: np.ndarray  # (n, 2) planar

    @property
    def n_frames(self) -> int:
        return self.position.shape[0]

    @property
    def speed(self) -> np.ndarray:
        return np.hypot(self.velocity[:, 0], self.velocity[:, 1])

    @property
    def xy(self) -> np.ndarray:
        return self.position[:, :2]

    @property
    def y(self) -> np.ndarray:
        return self.position[:, 1]

    @property
    def z(self) -> np.ndarray:
        return self.position[:, 2]


@dataclass(frozen=True)
class PhaseSegmentation:
    """Five contiguous half-open frame intervals plus the turn direction."""

    boundaries: tuple[int, int, int, int, int, int]  # onset, f1, f2, f3, f4, end
    fps: float
    turn_direction: str = ""

    def interval(self, phase: str) -> tuple[int, int]:
        k = PHASES.index(phase)
        return self.boundaries[k], self.boundaries[k + 1]

    @property
    def intervals(self) -> dict[str, tuple[int, int]]:
        return {p: self.interval(p) for p in PHASES}

    def duration(self, phase: str) -> float:
        a, b = self.interval(phase)
        return (b - a) / self.fps

    @property
    def span(self) -> tuple[int, int]:
        return self.boundaries[0], self.boundaries[-1]

    @property
    def total_time(self) -> float:
        return (self.boundaries[-1] - self.boundaries[0]) / self.fps

    def phase_of(self, frame: int) -> str | None:
        for p in PHASES:
            a, b = self.interval(p)
            if a <= frame < b:
                return p
        return None

    def labels(self, n_frames: int) -> list[str]:
        """Per-frame phase label ('' outside the analysed span)."""
        out = [""] * n_frames
        for p in PHASES:
            a, b = self.interval(p)
            out[a:b] = [p] * (b - a)
        return out


def central_difference(x: np.ndarray, fps: float) -> np.ndarray:
    """d/dt along axis 0: central in the interior, one-sided at the ends."""
    x = np.asarray(x, dtype=float)
    d = np.empty_like(x)
    d[1:-1] = (x[2:] - x[:-2]) / 2.0
    d[0] = x[1] - x[0]
    d[-1] = x[-1] - x[-2]
    return d * fps


def pelvis_track(rec: TrialRecording) -> PelvisTrack:
    p = (rec["left_hip"] + rec["right_hip"]) / 2.0
    return PelvisTrack(fps=rec.fps, position=p, velocity=central_difference(p[:, :2], rec.fps))


def _first(cond: np.ndarray, start: int) -> int | None:
    hits = np.flatnonzero(cond[start:])
    return int(start + hits[0]) if hits.size else None


def movement_onset(track: PelvisTrack, cfg: PipelineConfig) -> int:
    """First frame of clear movement: planar speed above half the walking
    threshold, or pelvis 5% above its initial height."""
    moving = _first(track.speed > cfg.walk_speed_min / 2.0, 0)
    z0 = track.z[0]
    rising = _first(track.z > z0 + 0.05 * abs(z0), 0)
    candidates = [f for f in (moving, rising) if f is not None]
    return min(candidates) if candidates else 0


def segment_phases(track: PelvisTrack, cfg: PipelineConfig) -> PhaseSegmentation:
    """Split the trial at first crossings of the chair and turn thresholds.

    The turn threshold is ``turn_zone_y - turn_tolerance_y`` for both entry
    and exit. The returned segmentation has no turn direction yet; see
    :func:`turn_direction`.
    """
    y = track.y
    n = track.n_frames
    chair = cfg.chair_zone_y_max
    turn = cfg.turn_zone_y - cfg.turn_tolerance_y
    if y[0] > chair:
        raise StartOutsideChairZone(f"pelvis starts at y={y[0]:.3f} m > {chair} m")

    f1 = _first(y > chair, 0)
    if f1 is None:
        raise NoStandExit(f"pelvis never exceeds y={chair} m")
    f2 = _first(y >= turn, f1)
    if f2 is None:
        raise NoTurnEntry(f"pelvis never reaches y={turn:g} m")
    f3 = _first(y < turn, f2)
    if f3 is None:
        raise NoTurnExit(f"pelvis never returns below y={turn:g} m")
    f4 = _first(y <= chair, f3)
    if f4 is None:
        raise NoChairReturn(f"pelvis never returns to y<={chair} m")

    onset = movement_onset(track, cfg) if cfg.trim_idle else 0
    onset = min(onset, f1 - 1)
    bounds = (onset, f1, f2, f3, f4, n)
    for phase, a, b in zip(PHASES, bounds[:-1], bounds[1:]):
        if b <= a:
            raise EmptyPhase(f"{phase} interval [{a}, {b}) is empty")
    return PhaseSegmentation(boundaries=bounds, fps=track.fps)


def heading_change_deg(track: PelvisTrack, seg: PhaseSegmentation) -> float:
    """Net signed change of the unwrapped pelvis heading over the Turn phase.

    Frames slower than 2 cm/s are skipped; their heading is undefined.
    """
    a, b = seg.interval("Turn")
    vel = track.velocity[a:b]
    ok = np.hypot(vel[:, 0], vel[:, 1]) >= HEADING_MIN_SPEED
    if ok.sum() < 2:
        return 0.0
    theta = np.unwrap(np.arctan2(vel[ok, 1], vel[ok, 0]))
    return float(np.degrees(theta[-1] - theta[0]))


def turn_direction(track: PelvisTrack, seg: PhaseSegmentation) -> str:
    """'Right' for a clockwise (viewed from above) net heading change."""
    delta = heading_change_deg(track, seg)
    if abs(delta) < 90.0:
        logger.warning("DegenerateTurn: net heading change %.1f deg", delta)
    return "Right" if delta < 0 else "Left"
