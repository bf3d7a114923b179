"""Per-trial analysis: ingest -> segmentation -> events -> kinematics -> coordination."""

from __future__ import annotations

import dataclasses
import hashlib
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import events as ev
from . import kinematics as kin
from . import vector_coding as vc
from .config import PipelineConfig
from .errors import AllStationary, DegenerateAxis, NoLegLength, PhaseTooShort
from .ingest import TrialRecording, fill_gaps, load_landmarks_csv, lowpass_filter
from .segmentation import (PelvisTrack, PhaseSegmentation, heading_change_deg, pelvis_track,
                           segment_phases)

logger = logging.getLogger(__name__)


@dataclass
class TrialResult:
    trial_id: str
    cfg: PipelineConfig
    recording: TrialRecording  # gap-filled and filtered
    track: PelvisTrack
    seg: PhaseSegmentation
    heading_change_deg: float
    walking: np.ndarray
    direction: np.ndarray
    projections: dict[str, np.ndarray]
    heel_strikes: list[ev.GaitEvent]
    toe_offs: list[ev.GaitEvent]
    steps: list[ev.Step]
    leg_length_m: float | None
    kinematics: kin.KinematicSeries
    excursions: dict | None
    coupling: vc.CouplingSeries | None
    metrics: kin.TrialMetrics
    source_path: str = ""
    source_digest: str = ""
    interpolated_samples: dict[str, int] = field(default_factory=dict)
    warnings: list[str] = field(default_factory=list)


def file_digest(path: str | Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def analyze_recording(raw: TrialRecording, cfg: PipelineConfig,
                      segmentation: PhaseSegmentation | None = None) -> TrialResult:
    """Run the full analysis on a loaded (possibly gappy) recording.

    Parameters
    ----------
    raw : TrialRecording
        Recording as loaded; gaps are filled and the data filtered here.
    cfg : PipelineConfig
    segmentation : PhaseSegmentation, optional
        Phase boundaries to use instead of the walkway-threshold segmentation,
        e.g. for recordings whose walkway is not aligned with +Y. The turn
        direction is always recomputed.
    """
    warnings: list[str] = []
    rec = lowpass_filter(fill_gaps(raw, cfg), cfg)
    track = pelvis_track(rec)

    seg = segment_phases(track, cfg) if segmentation is None else segmentation
    delta = heading_change_deg(track, seg)
    direction = "Right" if delta < 0 else "Left"
    if abs(delta) < 90.0:
        warnings.append(f"DegenerateTurn: net heading change {delta:.1f} deg (< 90 deg)")
    seg = dataclasses.replace(seg, turn_direction=direction)

    walking = ev.walking_mask(track, cfg)
    u = ev.progression_vector(track, cfg)
    projections = {
        f"{foot.lower()}_{part}": ev.project_marker(rec, f"{foot.lower()}_{part}", track, u)
        for foot in ev.FEET for part in ("heel", "toe")
    }
    hs = ev.detect_heel_strikes(rec, track, u, walking, seg, cfg)
    to = ev.detect_toe_offs(rec, track, u, walking, seg, cfg)
    if not hs:
        warnings.append("no heel strikes detected inside the gait phases")
    steps = kin.annotate_step_lengths(ev.pair_steps(hs + to), rec, u)
    n_incomplete = sum(s.incomplete for s in steps)
    if n_incomplete:
        warnings.append(f"{n_incomplete} incomplete step(s): contralateral heel strike missed")

    try:
        leg = kin.pendulum_length(track, cfg, walking)
        xcom = kin.xcom_series(track, leg, cfg.gravity)
    except NoLegLength as exc:
        warnings.append(f"NoLegLength: {exc}")
        leg = None
        xcom = np.full((rec.n_frames, 2), np.nan)

    series = kin.kinematic_series(rec, track, seg, xcom)
    if np.isnan(series.trunk_inclination_deg).any():
        warnings.append("DegenerateSegment: trunk inclination undefined at "
                        f"{int(np.isnan(series.trunk_inclination_deg).sum())} frame(s)")
    excursions = kin.joint_excursions(rec, seg, series.joint_angles)

    metrics = kin.spatiotemporal_metrics(raw.trial_id, seg, steps, track)
    if leg is not None:
        for phase, attr in (("FirstGait", "xcom_dev_first_m"), ("SecondGait", "xcom_dev_second_m")):
            try:
                setattr(metrics, attr, kin.xcom_deviation(xcom, track, seg, phase))
            except PhaseTooShort as exc:
                warnings.append(f"PhaseTooShort: {exc}")

    coupling = None
    try:
        coupling = vc.coupling_angles(vc.axial_angles(rec, seg), strict=False)
    except (DegenerateAxis, AllStationary) as exc:
        warnings.append(f"{type(exc).__name__}: {exc}")
    if coupling is not None:
        if coupling.fractions is None:
            warnings.append("AllStationary: no trunk/pelvis rotation during the turn")
        else:
            metrics.vc_mean_deg = coupling.mean_deg
            metrics.vc_cav_deg = coupling.cav_deg
            metrics.vc_inphase_frac = coupling.fractions["InPhase"]
            metrics.vc_antiphase_frac = coupling.fractions["AntiPhase"]
            metrics.vc_pelvis_frac = coupling.fractions["PelvisPhase"]
            metrics.vc_trunk_frac = coupling.fractions["TrunkPhase"]
            if coupling.cav_deg == vc.MAX_DISPERSION_CAV_DEG:
                warnings.append("coupling angles have zero resultant length; "
                                "CAV reported as maximum dispersion")

    interpolated = {m: int((~q).sum()) for m, q in raw.quality_mask.items() if (~q).any()}
    if interpolated:
        warnings.append("interpolated samples: " + ", ".join(
            f"{m}={k}" for m, k in sorted(interpolated.items())))
    for w in warnings:
        logger.warning("%s: %s", raw.trial_id, w)

    return TrialResult(
        trial_id=raw.trial_id, cfg=cfg, recording=rec, track=track, seg=seg,
        heading_change_deg=delta, walking=walking, direction=u, projections=projections,
        heel_strikes=hs, toe_offs=to, steps=steps, leg_length_m=leg, kinematics=series,
        excursions=excursions, coupling=coupling, metrics=metrics,
        interpolated_samples=interpolated, warnings=warnings,
    )


def analyze_file(path: str | Path, cfg: PipelineConfig) -> TrialResult:
    path = Path(path)
    result = analyze_recording(load_landmarks_csv(path, cfg), cfg)
    result.source_path = path.name
    result.source_digest = file_digest(path)
    return result
