"""Per-frame kinematics, XCoM and per-phase spatiotemporal metrics."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace

import numpy as np

from .config import PipelineConfig
from .errors import NoLegLength, PhaseTooShort
from .events import Step
from .ingest import TrialRecording
from .segmentation import GAIT_PHASES, PHASES, PelvisTrack, PhaseSegmentation

logger = logging.getLogger(__name__)

SIDES = ("left", "right")


def angle_between(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Row-wise angle in degrees between vectors; NaN for zero-length rows."""
    a = np.atleast_2d(a)
    b = np.atleast_2d(b)
    na = np.linalg.norm(a, axis=1)
    nb = np.linalg.norm(b, axis=1)
    with np.errstate(invalid="ignore", divide="ignore"):
        cos = np.einsum("ij,ij->i", a, b) / (na * nb)
    cos = np.clip(cos, -1.0, 1.0)
    out = np.degrees(np.arccos(cos))
    out[(na == 0) | (nb == 0)] = np.nan
    return out


def mid(rec: TrialRecording, a: str, b: str) -> np.ndarray:
    return (rec[a] + rec[b]) / 2.0


def trunk_inclination(rec: TrialRecording) -> np.ndarray:
    """Angle of the mid-hip -> mid-shoulder vector from vertical, degrees."""
    trunk = mid(rec, "left_shoulder", "right_shoulder") - mid(rec, "left_hip", "right_hip")
    vertical = np.broadcast_to([0.0, 0.0, 1.0], trunk.shape)
    incl = angle_between(trunk, vertical)
    if np.isnan(incl).any():
        logger.warning("DegenerateSegment: shoulder and hip midpoints coincide at %d frame(s)",
                       int(np.isnan(incl).sum()))
    return incl


def joint_angles(rec: TrialRecording) -> dict[str, np.ndarray]:
    """Hip, knee and ankle angles per side, for whichever markers exist.

    knee: included angle at the knee (180 = straight); hip: trunk-down vector
    vs thigh (0 = aligned); ankle: shank vs heel->toe foot vector.
    """
    out: dict[str, np.ndarray] = {}
    trunk_down = mid(rec, "left_hip", "right_hip") - mid(rec, "left_shoulder", "right_shoulder")
    for side in SIDES:
        hip, knee, ankle = f"{side}_hip", f"{side}_knee", f"{side}_ankle"
        if not rec.has(knee):
            continue
        thigh = rec[knee] - rec[hip]
        out[f"hip_{side}_deg"] = angle_between(trunk_down, thigh)
        if not rec.has(ankle):
            continue
        out[f"knee_{side}_deg"] = angle_between(rec[hip] - rec[knee], rec[ankle] - rec[knee])
        shank = rec[ankle] - rec[knee]
        foot = rec[f"{side}_toe"] - rec[f"{side}_heel"]
        out[f"ankle_{side}_deg"] = angle_between(shank, foot)
    return out


def joint_excursions(rec: TrialRecording, seg: PhaseSegmentation,
                     angles: dict[str, np.ndarray] | None = None):
    """Per phase, per joint angle: min, max and range (max - min) in degrees.

    Returns None when no lower-limb markers are mapped.
    """
    angles = joint_angles(rec) if angles is None else angles
    if not angles:
        return None
    out = {}
    for phase in PHASES:
        a, b = seg.interval(phase)
        out[phase] = {}
        for name, series in angles.items():
            seg_vals = series[a:b]
            seg_vals = seg_vals[np.isfinite(seg_vals)]
            if seg_vals.size == 0:
                out[phase][name] = None
                continue
            lo, hi = float(seg_vals.min()), float(seg_vals.max())
            out[phase][name] = {"min": lo, "max": hi, "range": hi - lo}
    return out


def pendulum_length(track: PelvisTrack, cfg: PipelineConfig, mask: np.ndarray | None) -> float:
    """Configured leg length, else mean pelvis height while walking."""
    if cfg.participant.leg_length_m is not None:
        return float(cfg.participant.leg_length_m)
    if mask is not None and np.any(mask):
        length = float(np.mean(track.z[np.asarray(mask, dtype=bool)]))
        if length > 0:
            return length
    raise NoLegLength("no leg_length_m configured and no walking frames to estimate it")


def xcom_series(track: PelvisTrack, length: float, gravity: float = 9.81) -> np.ndarray:
    """Extrapolated centre of mass in the horizontal plane, ``(n, 2)``.

    ``xcom = pelvis_xy + v_xy / omega0`` with ``omega0 = sqrt(g / l)``.
    """
    if not length > 0:
        raise NoLegLength(f"pendulum length must be > 0, got {length}")
    omega0 = np.sqrt(gravity / length)
    return track.xy + track.velocity / omega0


def xcom_deviation(xcom: np.ndarray, track: PelvisTrack, seg: PhaseSegmentation,
                   phase: str) -> float:
    """Mean absolute distance of the XCoM from the pelvis progression line.

    The line is the orthogonal least-squares fit to the pelvis positions of
    the phase, so the value does not depend on how the walkway is oriented.
    """
    if phase not in GAIT_PHASES:
        raise ValueError(f"phase must be one of {GAIT_PHASES}")
    a, b = seg.interval(phase)
    if b - a < 5:
        raise PhaseTooShort(f"{phase} has {b - a} frames (< 5)")
    pts = track.xy[a:b]
    centroid = pts.mean(axis=0)
    _, _, vt = np.linalg.svd(pts - centroid, full_matrices=False)
    normal = np.array([-vt[0, 1], vt[0, 0]])
    return float(np.mean(np.abs((xcom[a:b] - centroid) @ normal)))


def annotate_step_lengths(steps: list[Step], rec: TrialRecording, u: np.ndarray) -> list[Step]:
    """Fill ``step_length_m`` from heel positions at the two bounding strikes."""
    out = []
    for st in steps:
        if st.incomplete:
            out.append(st)
            continue
        trailing = "right" if st.leading_foot == "Left" else "left"
        d = rec[f"{st.leading_foot.lower()}_heel"][st.hs_frame, :2] \
            - rec[f"{trailing}_heel"][st.start_frame, :2]
        out.append(replace(st, step_length_m=float(abs(d @ u[st.hs_frame]))))
    return out


@dataclass
class KinematicSeries:
    time_s: np.ndarray
    phase: list[str]
    pelvis: np.ndarray
    com_speed_mps: np.ndarray
    trunk_inclination_deg: np.ndarray
    xcom: np.ndarray
    joint_angles: dict[str, np.ndarray] = field(default_factory=dict)

    @property
    def n_frames(self) -> int:
        return self.time_s.size


def kinematic_series(rec: TrialRecording, track: PelvisTrack, seg: PhaseSegmentation,
                     xcom: np.ndarray) -> KinematicSeries:
    return KinematicSeries(
        time_s=rec.time,
        phase=seg.labels(rec.n_frames),
        pelvis=track.position,
        com_speed_mps=track.speed,
        trunk_inclination_deg=trunk_inclination(rec),
        xcom=xcom,
        joint_angles=joint_angles(rec),
    )


@dataclass
class TrialMetrics:
    """One row of ``bd_results``; field order is the column order."""

    trial_id: str
    turn_direction: str
    total_time_s: float
    stand_s: float
    first_gait_s: float
    turn_s: float
    second_gait_s: float
    sit_s: float
    cadence_spm: float | None = None
    velocity_mps: float | None = None
    steps_first: int = 0
    steps_second: int = 0
    step_time_mean_s_first: float | None = None
    step_time_sd_s_first: float | None = None
    step_len_mean_m_first: float | None = None
    step_len_sd_m_first: float | None = None
    step_time_mean_s_second: float | None = None
    step_time_sd_s_second: float | None = None
    step_len_mean_m_second: float | None = None
    step_len_sd_m_second: float | None = None
    xcom_dev_first_m: float | None = None
    xcom_dev_second_m: float | None = None
    vc_mean_deg: float | None = None
    vc_cav_deg: float | None = None
    vc_inphase_frac: float | None = None
    vc_antiphase_frac: float | None = None
    vc_pelvis_frac: float | None = None
    vc_trunk_frac: float | None = None


_SUFFIX = {"FirstGait": "first", "SecondGait": "second"}


def _mean_sd(values: list[float]) -> tuple[float | None, float | None]:
    if len(values) < 2:
        return None, None
    arr = np.asarray(values, dtype=float)
    return float(arr.mean()), float(arr.std(ddof=1))


def path_length(xy: np.ndarray) -> float:
    return float(np.sum(np.hypot(*np.diff(xy, axis=0).T)))


def spatiotemporal_metrics(trial_id: str, seg: PhaseSegmentation, steps: list[Step],
                           track: PelvisTrack) -> TrialMetrics:
    """Phase durations, cadence, velocity and step statistics.

    Cadence is steps per minute of combined gait-phase time. Velocity is the
    pelvis horizontal path length over the analysed span divided by the total
    time. Incomplete steps count towards the step totals but not towards the
    step time/length statistics.
    """
    m = TrialMetrics(
        trial_id=trial_id,
        turn_direction=seg.turn_direction,
        total_time_s=seg.total_time,
        stand_s=seg.duration("Stand"),
        first_gait_s=seg.duration("FirstGait"),
        turn_s=seg.duration("Turn"),
        second_gait_s=seg.duration("SecondGait"),
        sit_s=seg.duration("Sit"),
    )
    for phase, suffix in _SUFFIX.items():
        phase_steps = [s for s in steps if s.phase == phase]
        setattr(m, f"steps_{suffix}", len(phase_steps))
        complete = [s for s in phase_steps if not s.incomplete]
        t_mean, t_sd = _mean_sd([s.step_time_s for s in complete])
        lengths = [s.step_length_m for s in complete if s.step_length_m is not None]
        l_mean, l_sd = _mean_sd(lengths)
        setattr(m, f"step_time_mean_s_{suffix}", t_mean)
        setattr(m, f"step_time_sd_s_{suffix}", t_sd)
        setattr(m, f"step_len_mean_m_{suffix}", l_mean)
        setattr(m, f"step_len_sd_m_{suffix}", l_sd)

    n_steps = m.steps_first + m.steps_second
    gait_time = m.first_gait_s + m.second_gait_s
    if n_steps > 0 and gait_time > 0:
        m.cadence_spm = 60.0 * n_steps / gait_time
    a, b = seg.span
    if m.total_time_s > 0:
        m.velocity_mps = path_length(track.xy[a:b]) / m.total_time_s
    return m
