"""Per-trial output bundle: JSON document, five CSV tables and an HTML view.

CSV files follow RFC 4180 with LF line endings, UTF-8 without BOM. Numbers
are written in positional notation with at most 6 significant digits and
no locale dependence; nulls are empty fields and booleans are
``true``/``false``. The JSON document uses the same rounding so the two
families always agree.
"""

from __future__ import annotations

import csv
import dataclasses
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .events import GaitEvent, Step
from .kinematics import KinematicSeries, TrialMetrics
from .segmentation import PHASES
from .vector_coding import BINS, CouplingSeries

SCHEMA_VERSION = "1.0"
SIG_DIGITS = 6

RESULTS_COLUMNS = tuple(f.name for f in dataclasses.fields(TrialMetrics))
STEPS_COLUMNS = ("trial_id", "phase", "leading_foot", "hs_frame", "hs_time_s",
                 "trailing_to_frame", "trailing_to_time_s", "step_time_s", "step_length_m",
                 "incomplete_flag")
KINEMATICS_BASE_COLUMNS = ("time_s", "phase", "pelvis_x", "pelvis_y", "pelvis_z",
                           "com_speed_mps", "trunk_incl_deg", "xcom_x", "xcom_y")
VECTOR_CODING_COLUMNS = ("time_s", "theta_pelvis_deg", "theta_trunk_deg", "gamma_deg", "bin",
                         "stationary_flag")
VECTOR_CODING_SUMMARY_KEYS = ("mean_deg", "cav_deg", "inphase_frac", "antiphase_frac",
                              "pelvis_frac", "trunk_frac")
PARTICIPANTS_COLUMNS = ("trial_id", "participant_id", "height_m", "leg_length_m", "fps")

ARTIFACT_SUFFIXES = {
    "json": "_tug_data.json",
    "results": "_bd_results.csv",
    "steps": "_bd_steps.csv",
    "kinematics": "_bd_kinematics.csv",
    "vector_coding": "_bd_vector_coding.csv",
    "participants": "_bd_participants.csv",
    "html": "_tug_report.html",
}

# textual definitions of derived metrics, echoed into every JSON document
METRIC_DEFINITIONS = {
    "total_time_s": "span from stand onset to the end of the recording, seconds",
    "cadence_spm": "60 * (steps_first + steps_second) / (first_gait_s + second_gait_s)",
    "velocity_mps": "horizontal pelvis path length over the analysed span / total_time_s",
    "step_time_s": "time between consecutive opposite-foot heel strikes in one gait phase",
    "step_length_m": "leading heel at its strike minus trailing heel at the previous strike, "
                     "projected on the walking direction at the leading strike",
    "xcom_dev_m": "mean absolute distance of the XCoM from the orthogonal least-squares line "
                  "through the pelvis positions of the gait phase",
    "xcom": "pelvis_xy + v_xy / sqrt(g / l), l = leg_length_m or mean walking pelvis height",
    "vc_cav_deg": "sqrt(-2 ln R) in degrees, R = mean resultant length of coupling angles",
}

_FRACTION_KEYS = dict(zip(BINS, ("inphase_frac", "antiphase_frac", "pelvis_frac", "trunk_frac")))


@dataclass(frozen=True)
class ReportBundle:
    json: Path
    results: Path
    steps: Path
    kinematics: Path
    vector_coding: Path
    participants: Path
    html: Path

    def paths(self) -> list[Path]:
        return [getattr(self, f.name) for f in dataclasses.fields(self)]


def bundle_paths(out_dir: str | Path, trial_id: str) -> ReportBundle:
    out_dir = Path(out_dir)
    return ReportBundle(**{k: out_dir / f"{trial_id}{s}" for k, s in ARTIFACT_SUFFIXES.items()})


# ---------------------------------------------------------------- formatting

def round_sig(x: float) -> float | None:
    """``x`` rounded to 6 significant digits; None for non-finite values."""
    if x is None or not math.isfinite(x):
        return None
    return float(format_number(x))


def format_number(x) -> str:
    """Field text for one value (see module docstring)."""
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        if not math.isfinite(x):
            return ""
        text = np.format_float_positional(float(x), precision=SIG_DIGITS, unique=True,
                                          fractional=False, trim="-")
        return "0" if text == "-0" else text
    return str(x)


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        return round_sig(float(x))
    if isinstance(x, Path):
        return str(x)
    return x


def _writer(fh):
    return csv.writer(fh, dialect="excel", lineterminator="\n")


def _open(path: Path):
    return open(path, "w", encoding="utf-8", newline="")


# ---------------------------------------------------------------- CSV tables

def write_results_csv(metrics: TrialMetrics, path: str | Path) -> Path:
    path = Path(path)
    row = dataclasses.astuple(metrics)
    with _open(path) as fh:
        w = _writer(fh)
        w.writerow(RESULTS_COLUMNS)
        w.writerow([format_number(v) for v in row])
    return path


def write_steps_csv(trial_id: str, steps: list[Step], path: str | Path) -> Path:
    path = Path(path)
    with _open(path) as fh:
        w = _writer(fh)
        w.writerow(STEPS_COLUMNS)
        for st in steps:
            w.writerow([format_number(v) for v in (
                trial_id, st.phase, st.leading_foot, st.hs_frame, st.hs_time_s,
                st.trailing_to_frame, st.trailing_to_time_s, st.step_time_s,
                st.step_length_m, st.incomplete)])
    return path


def kinematics_columns(series: KinematicSeries | None) -> list[str]:
    extra = list(series.joint_angles) if series is not None else []
    return list(KINEMATICS_BASE_COLUMNS) + extra


def write_kinematics_csv(series: KinematicSeries | None, path: str | Path) -> Path:
    """One row per frame; ``series=None`` writes the header only."""
    path = Path(path)
    with _open(path) as fh:
        w = _writer(fh)
        w.writerow(kinematics_columns(series))
        if series is None:
            return path
        angles = list(series.joint_angles.values())
        for i in range(series.n_frames):
            row = [series.time_s[i], series.phase[i] or "", *series.pelvis[i],
                   series.com_speed_mps[i], series.trunk_inclination_deg[i], *series.xcom[i],
                   *(a[i] for a in angles)]
            w.writerow([format_number(v) for v in row])
    return path


def _summary_values(cs: CouplingSeries | None) -> dict[str, float | None]:
    out = dict.fromkeys(VECTOR_CODING_SUMMARY_KEYS)
    if cs is None or cs.fractions is None:
        return out
    out["mean_deg"] = cs.mean_deg
    out["cav_deg"] = cs.cav_deg
    for b, key in _FRACTION_KEYS.items():
        out[key] = cs.fractions[b]
    return out


def write_vector_coding_csv(cs: CouplingSeries | None, path: str | Path) -> Path:
    """Per-pair rows then a ``# summary`` block.

    Summary lines are ``# key,value`` padded with empty fields to the table
    width so every record has the same number of fields.
    """
    path = Path(path)
    pad = [""] * (len(VECTOR_CODING_COLUMNS) - 2)
    with _open(path) as fh:
        w = _writer(fh)
        w.writerow(VECTOR_CODING_COLUMNS)
        if cs is not None:
            for i in range(cs.frames.size):
                w.writerow([format_number(v) for v in (
                    cs.time_s[i], cs.pelvis_deg[i], cs.trunk_deg[i],
                    None if cs.stationary[i] else cs.gamma_deg[i],
                    cs.bins[i], bool(cs.stationary[i]))])
        w.writerow(["# summary", ""] + pad)
        for key, value in _summary_values(cs).items():
            w.writerow([f"# {key}", format_number(value)] + pad)
    return path


def write_participants_csv(result, path: str | Path) -> Path:
    path = Path(path)
    p = result.cfg.participant
    with _open(path) as fh:
        w = _writer(fh)
        w.writerow(PARTICIPANTS_COLUMNS)
        w.writerow([format_number(v) for v in (
            result.trial_id, p.id, p.height_m, p.leg_length_m, float(result.cfg.fps))])
    return path


def write_batch_summary(rows: list[tuple[str, str, str, float | None]], path: str | Path) -> Path:
    """``rows`` of (trial_id, status, error_kind, total_time_s)."""
    path = Path(path)
    with _open(path) as fh:
        w = _writer(fh)
        w.writerow(("trial_id", "status", "error_kind", "total_time_s"))
        for row in rows:
            w.writerow([format_number(v) for v in row])
    return path


# ---------------------------------------------------------------- JSON

def sector_fractions(cs: CouplingSeries | None) -> list[float] | None:
    """Occupancy of eight 45-degree sectors, sector k spanning [45k - 22.5, 45k + 22.5).

    Each sector lies inside a single coordination bin.
    """
    if cs is None or cs.fractions is None:
        return None
    g = cs.gamma_deg[~cs.stationary]
    k = (np.mod(g + 22.5, 360.0) // 45.0).astype(int)
    counts = np.bincount(np.minimum(k, 7), minlength=8)
    return (counts / g.size).tolist()


def _event_dict(e: GaitEvent) -> dict:
    return {"kind": e.kind, "foot": e.foot, "frame": e.frame, "time_s": e.time_s,
            "phase": e.phase, "projection_value_m": e.projection_value}


def trial_document(result) -> dict:
    """In-memory model of the JSON document (before number rounding)."""
    seg = result.seg
    phases = {}
    for phase in PHASES:
        a, b = seg.interval(phase)
        phases[phase] = {"start_frame": a, "end_frame": b, "start_s": a / seg.fps,
                         "end_s": b / seg.fps, "duration_s": seg.duration(phase)}
    cs = result.coupling
    vc = {
        "pairs": 0 if cs is None else int(cs.frames.size),
        "stationary_pairs": 0 if cs is None else int(cs.stationary.sum()),
        **_summary_values(cs),
        "sector_fractions": sector_fractions(cs),
    }
    return {
        "schema_version": SCHEMA_VERSION,
        "software": {"name": "tugkit", "version": __version__},
        "trial_id": result.trial_id,
        "input": {"file": result.source_path, "sha256": result.source_digest,
                  "n_frames": result.recording.n_frames,
                  "interpolated_samples": result.interpolated_samples},
        "config": result.cfg.to_dict(),
        "segmentation": {
            "boundaries_frames": list(seg.boundaries),
            "turn_direction": seg.turn_direction,
            "heading_change_deg": result.heading_change_deg,
            "total_time_s": seg.total_time,
            "phases": phases,
        },
        "events": {
            "heel_strikes": [_event_dict(e) for e in result.heel_strikes],
            "toe_offs": [_event_dict(e) for e in result.toe_offs],
        },
        "steps": [dataclasses.asdict(s) for s in result.steps],
        "leg_length_m": result.leg_length_m,
        "metrics": dataclasses.asdict(result.metrics),
        "definitions": METRIC_DEFINITIONS,
        "joint_excursions_deg": result.excursions,
        "vector_coding": vc,
        "warnings": list(result.warnings),
    }


def write_json(result, path: str | Path) -> Path:
    path = Path(path)
    text = json.dumps(_jsonable(trial_document(result)), indent=2, allow_nan=False)
    with _open(path) as fh:
        fh.write(text + "\n")
    return path


# ---------------------------------------------------------------- bundle

def write_bundle(result, out_dir: str | Path, timestamp: str | None = None) -> ReportBundle:
    """Write all seven artifacts of one trial into ``out_dir``."""
    from .html_report import render_html

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    bundle = bundle_paths(out_dir, result.trial_id)
    write_json(result, bundle.json)
    write_results_csv(result.metrics, bundle.results)
    write_steps_csv(result.trial_id, result.steps, bundle.steps)
    write_kinematics_csv(result.kinematics, bundle.kinematics)
    write_vector_coding_csv(result.coupling, bundle.vector_coding)
    write_participants_csv(result, bundle.participants)
    render_html(result, bundle.html, timestamp=timestamp)
    return bundle
