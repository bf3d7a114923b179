"""Trunk-pelvis vector coding over the turn.

Axial (transverse-plane) angles of the pelvis and shoulder girdle form an
angle-angle diagram with the pelvis on the horizontal axis. The coupling
angle of each frame-to-frame increment is classified into four 45-degree
coordination bins.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from .errors import AllStationary, DegenerateAxis
from .ingest import TrialRecording
from .segmentation import PhaseSegmentation

logger = logging.getLogger(__name__)

BINS = ("InPhase", "AntiPhase", "PelvisPhase", "TrunkPhase")
STATIONARY_DEG_PER_FRAME = 0.1
# reported as CAV when the resultant length vanishes (antipodal samples)
MAX_DISPERSION_CAV_DEG = 360.0
_R_EPS = 1e-12


@dataclass(frozen=True)
class AxialAngleSeries:
    frames: np.ndarray
    fps: float
    pelvis_deg: np.ndarray
    trunk_deg: np.ndarray


@dataclass(frozen=True)
class CouplingSeries:
    """Per-increment coupling angles plus summary statistics.

    ``gamma_deg`` and ``bins`` are NaN / None for stationary increments.
    Summary fields are None when every increment is stationary.
    """

    frames: np.ndarray  # frame that ends each increment
    fps: float
    pelvis_deg: np.ndarray
    trunk_deg: np.ndarray
    gamma_deg: np.ndarray
    bins: tuple
    stationary: np.ndarray
    mean_deg: float | None
    cav_deg: float | None
    fractions: dict | None

    @property
    def time_s(self) -> np.ndarray:
        return self.frames / self.fps


def _axis_angle(vec: np.ndarray, name: str, frames: np.ndarray) -> np.ndarray:
    norm = np.hypot(vec[:, 0], vec[:, 1])
    if np.any(norm == 0):
        bad = frames[np.flatnonzero(norm == 0)[0]]
        raise DegenerateAxis(f"{name} axis has zero horizontal length at frame {bad}")
    return np.unwrap(np.arctan2(vec[:, 1], vec[:, 0]))


def axial_angles(rec: TrialRecording, seg: PhaseSegmentation) -> AxialAngleSeries:
    a, b = seg.interval("Turn")
    frames = np.arange(a, b)
    pelvis = rec["right_hip"][a:b] - rec["left_hip"][a:b]
    trunk = rec["right_shoulder"][a:b] - rec["left_shoulder"][a:b]
    return AxialAngleSeries(
        frames=frames,
        fps=rec.fps,
        pelvis_deg=np.degrees(_axis_angle(pelvis, "pelvis", frames)),
        trunk_deg=np.degrees(_axis_angle(trunk, "trunk", frames)),
    )


def classify_bin(gamma_deg: float) -> str:
    g = gamma_deg % 360.0
    if 22.5 <= g < 67.5 or 202.5 <= g < 247.5:
        return "InPhase"
    if 112.5 <= g < 157.5 or 292.5 <= g < 337.5:
        return "AntiPhase"
    if 67.5 <= g < 112.5 or 247.5 <= g < 292.5:
        return "TrunkPhase"
    return "PelvisPhase"


def classify_bins(gamma_deg) -> tuple[list[str], dict[str, float]]:
    """Bin labels and occupancy fractions for a series of coupling angles."""
    labels = [classify_bin(float(g)) for g in gamma_deg]
    if not labels:
        return labels, {b: 0.0 for b in BINS}
    return labels, {b: labels.count(b) / len(labels) for b in BINS}


def resultant_length(gamma_deg) -> float:
    g = np.radians(np.asarray(gamma_deg, dtype=float))
    return float(np.hypot(np.mean(np.cos(g)), np.mean(np.sin(g))))


def circular_stats(gamma_deg) -> tuple[float, float]:
    """Circular mean in [0, 360) and angular deviation sqrt(-2 ln R), degrees.

    When the resultant length vanishes the mean is NaN and the deviation is
    :data:`MAX_DISPERSION_CAV_DEG`.
    """
    g = np.radians(np.asarray(gamma_deg, dtype=float))
    if g.size == 0:
        raise AllStationary("no coupling angles")
    c, s = np.mean(np.cos(g)), np.mean(np.sin(g))
    r = math.hypot(c, s)
    if r < _R_EPS:
        logger.warning("coupling angles have zero resultant length; CAV set to %g",
                       MAX_DISPERSION_CAV_DEG)
        return math.nan, MAX_DISPERSION_CAV_DEG
    mean = math.degrees(math.atan2(s, c)) % 360.0
    if mean >= 360.0:
        mean = 0.0
    cav = math.degrees(math.sqrt(max(0.0, -2.0 * math.log(min(r, 1.0)))))
    return mean, cav


def coupling_angles(angles: AxialAngleSeries, strict: bool = True) -> CouplingSeries:
    """Coupling angle of each consecutive increment.

    With ``strict`` (default) a turn with no moving increment raises
    :class:`AllStationary`; otherwise the series is returned with empty
    summary fields.
    """
    if angles.pelvis_deg.size < 2:
        raise AllStationary("turn has fewer than 2 frames")
    dp = np.diff(angles.pelvis_deg)
    dt = np.diff(angles.trunk_deg)
    stationary = np.hypot(dp, dt) < STATIONARY_DEG_PER_FRAME
    gamma = np.degrees(np.arctan2(dt, dp)) % 360.0
    gamma[gamma >= 360.0] = 0.0
    gamma[stationary] = np.nan
    moving = gamma[~stationary]
    labels, fractions = classify_bins(moving)
    it = iter(labels)
    bins = tuple(None if st else next(it) for st in stationary)
    if moving.size == 0:
        if strict:
            raise AllStationary("every turn increment is below "
                                f"{STATIONARY_DEG_PER_FRAME} deg/frame")
        mean = cav = None
        fractions = None
    else:
        mean, cav = circular_stats(moving)
        mean = None if math.isnan(mean) else mean
    return CouplingSeries(
        frames=angles.frames[1:],
        fps=angles.fps,
        pelvis_deg=angles.pelvis_deg[1:],
        trunk_deg=angles.trunk_deg[1:],
        gamma_deg=gamma,
        bins=bins,
        stationary=stationary,
        mean_deg=mean,
        cav_deg=cav,
        fractions=fractions,
    )
