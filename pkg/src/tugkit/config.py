"""TOML configuration and marker mapping."""

from __future__ import annotations

import copy
import dataclasses
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .errors import InvalidValue, MalformedConfig, MissingKey

logger = logging.getLogger(__name__)

REQUIRED_MARKERS = (
    "left_hip",
    "right_hip",
    "left_shoulder",
    "right_shoulder",
    "left_heel",
    "right_heel",
    "left_toe",
    "right_toe",
)
OPTIONAL_MARKERS = ("left_knee", "right_knee", "left_ankle", "right_ankle")

GRAVITY = 9.81

_THRESHOLD_KEYS = {
    "chair_zone_y_max",
    "turn_zone_y",
    "turn_tolerance_y",
    "walk_speed_min",
    "standing_height_fraction",
    "hs_refractory_ms",
    "hs_prominence_m",
    "filter_cutoff_hz",
    "max_gap_fill_s",
}
_TRIAL_KEYS = {"fps", "units", "trim_idle"}
_PARTICIPANT_KEYS = {"id", "height_m", "leg_length_m"}


@dataclass(frozen=True)
class MarkerSet:
    """Logical marker name -> CSV column stem."""

    stems: Mapping[str, str]

    def __post_init__(self):
        missing = [m for m in REQUIRED_MARKERS if m not in self.stems]
        if missing:
            raise MissingKey(f"markers: no stem mapped for {', '.join(missing)}")
        unknown = set(self.stems) - set(REQUIRED_MARKERS) - set(OPTIONAL_MARKERS)
        if unknown:
            raise InvalidValue(f"markers: unknown logical marker(s) {sorted(unknown)}")
        seen: dict[str, str] = {}
        for name, stem in self.stems.items():
            if not isinstance(stem, str) or not stem:
                raise InvalidValue(f"markers.{name}: stem must be a non-empty string")
            if stem in seen:
                raise InvalidValue(
                    f"markers.{name}: stem {stem!r} already used by {seen[stem]}"
                )
            seen[stem] = name
        object.__setattr__(self, "stems", dict(self.stems))

    @property
    def names(self) -> list[str]:
        """Mapped logical names, required first, in canonical order."""
        return [m for m in REQUIRED_MARKERS + OPTIONAL_MARKERS if m in self.stems]

    def has(self, *names: str) -> bool:
        return all(n in self.stems for n in names)


@dataclass(frozen=True)
class Participant:
    id: str = ""
    height_m: float | None = None
    leg_length_m: float | None = None


@dataclass(frozen=True)
class PipelineConfig:
    fps: float
    marker_set: MarkerSet
    chair_zone_y_max: float = 1.125
    turn_zone_y: float = 4.5
    turn_tolerance_y: float = 0.15
    walk_speed_min: float = 0.15
    standing_height_fraction: float = 2.0 / 3.0
    hs_refractory_ms: float = 300.0
    hs_prominence_m: float = 0.05
    filter_cutoff_hz: float = 6.0
    max_gap_fill_frames: int | None = None
    units: str = "m"
    trim_idle: bool = False
    participant: Participant = field(default_factory=Participant)
    gravity: float = GRAVITY

    def __post_init__(self):
        if self.max_gap_fill_frames is None:
            object.__setattr__(self, "max_gap_fill_frames", round(0.2 * self.fps))
        self.validate()

    def validate(self) -> None:
        def bad(key, msg):
            raise InvalidValue(f"{key}: {msg}")

        for key in ("fps", "turn_zone_y", "turn_tolerance_y", "walk_speed_min",
                    "hs_refractory_ms", "filter_cutoff_hz"):
            v = getattr(self, key)
            if not (isinstance(v, (int, float)) and math.isfinite(v) and v > 0):
                bad(key, f"must be a positive finite number, got {v!r}")
        if not self.chair_zone_y_max > 0:
            bad("chair_zone_y_max", "must be > 0")
        if not self.chair_zone_y_max < self.turn_zone_y - self.turn_tolerance_y:
            bad("chair_zone_y_max",
                f"{self.chair_zone_y_max} must be < turn_zone_y - turn_tolerance_y "
                f"({self.turn_zone_y - self.turn_tolerance_y:g})")
        if not self.filter_cutoff_hz < self.fps / 2:
            bad("filter_cutoff_hz", f"{self.filter_cutoff_hz} must be < fps/2 ({self.fps / 2:g})")
        if not 0 < self.standing_height_fraction < 1:
            bad("standing_height_fraction", "must lie in (0, 1)")
        if not self.hs_prominence_m >= 0:
            bad("hs_prominence_m", "must be >= 0")
        if not (isinstance(self.max_gap_fill_frames, int) and self.max_gap_fill_frames >= 0):
            bad("max_gap_fill_frames", "must be a non-negative integer")
        if self.units not in ("m", "mm"):
            bad("units", f"must be 'm' or 'mm', got {self.units!r}")
        for key in ("height_m", "leg_length_m"):
            v = getattr(self.participant, key)
            if v is not None and not (math.isfinite(v) and v > 0):
                bad(f"participant.{key}", "must be > 0")

    def with_tolerance(self, turn_tolerance_y: float) -> "PipelineConfig":
        """Return a copy with the turn tolerance replaced (CLI ``-y``)."""
        return dataclasses.replace(self, turn_tolerance_y=float(turn_tolerance_y))

    def to_dict(self) -> dict[str, Any]:
        d = dataclasses.asdict(self)
        d["marker_set"] = dict(self.marker_set.stems)
        return d


def read_toml(path: str | Path) -> dict[str, Any]:
    with open(path, "rb") as fh:
        try:
            return tomllib.load(fh)
        except tomllib.TOMLDecodeError as exc:
            raise MalformedConfig(f"{Path(path).name}: {exc}") from exc


def merge_dicts(base: Mapping[str, Any], overlay: Mapping[str, Any]) -> dict[str, Any]:
    """Recursive dict merge; values in ``overlay`` win."""
    out = copy.deepcopy(dict(base))
    for key, value in overlay.items():
        if isinstance(value, Mapping) and isinstance(out.get(key), Mapping):
            out[key] = merge_dicts(out[key], value)
        else:
            out[key] = copy.deepcopy(value)
    return out


def _number(table: Mapping[str, Any], key: str, prefix: str) -> float:
    value = table[key]
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise InvalidValue(f"{prefix}.{key}: expected a number, got {value!r}")
    return float(value)


def config_from_dict(doc: Mapping[str, Any]) -> PipelineConfig:
    trial = doc.get("trial", {})
    thresholds = doc.get("thresholds", {})
    participant = doc.get("participant", {})
    markers = doc.get("markers")

    for name, table, known in (("trial", trial, _TRIAL_KEYS),
                               ("thresholds", thresholds, _THRESHOLD_KEYS),
                               ("participant", participant, _PARTICIPANT_KEYS)):
        for key in set(table) - known:
            logger.warning("ignoring unknown config key %s.%s", name, key)

    if "fps" not in trial:
        raise MissingKey("trial.fps")
    if not markers:
        raise MissingKey("markers")

    fps = _number(trial, "fps", "trial")
    kwargs: dict[str, Any] = {}
    for key in _THRESHOLD_KEYS - {"max_gap_fill_s"}:
        if key in thresholds:
            kwargs[key] = _number(thresholds, key, "thresholds")
    if "max_gap_fill_s" in thresholds:
        gap_s = _number(thresholds, "max_gap_fill_s", "thresholds")
        if gap_s < 0:
            raise InvalidValue("thresholds.max_gap_fill_s: must be >= 0")
        kwargs["max_gap_fill_frames"] = round(gap_s * fps)
    if "units" in trial:
        kwargs["units"] = str(trial["units"])
    if "trim_idle" in trial:
        kwargs["trim_idle"] = bool(trial["trim_idle"])

    part = Participant(
        id=str(participant.get("id", "")),
        height_m=(_number(participant, "height_m", "participant")
                  if "height_m" in participant else None),
        leg_length_m=(_number(participant, "leg_length_m", "participant")
                      if "leg_length_m" in participant else None),
    )
    return PipelineConfig(fps=fps, marker_set=MarkerSet(dict(markers)),
                          participant=part, **kwargs)


def load_config(path: str | Path, overlay: str | Path | None = None,
                tolerance: float | None = None) -> PipelineConfig:
    """Load a TOML config, optionally merged with a per-trial overlay file.

    ``tolerance`` (the CLI ``-y`` value) takes precedence over both files.
    """
    doc = read_toml(path)
    if overlay is not None:
        doc = merge_dicts(doc, read_toml(overlay))
    if tolerance is not None:
        doc = merge_dicts(doc, {"thresholds": {"turn_tolerance_y": float(tolerance)}})
    return config_from_dict(doc)
