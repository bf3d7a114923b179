import math

import pytest

from tugkit.config import (REQUIRED_MARKERS, MarkerSet, PipelineConfig, config_from_dict,
                           load_config, merge_dicts)
from tugkit.errors import InvalidValue, MalformedConfig, MissingKey

MARKERS_TOML = "\n".join(f'{m} = "{m.upper()}"' for m in REQUIRED_MARKERS)


def write(tmp_path, text, name="cfg.toml"):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return path


def test_minimal_config_gets_defaults(tmp_path):
    cfg = load_config(write(tmp_path, f"[trial]\nfps = 30\n[markers]\n{MARKERS_TOML}\n"))
    assert cfg.fps == 30
    assert cfg.chair_zone_y_max == 1.125
    assert cfg.turn_zone_y == 4.5
    assert cfg.turn_tolerance_y == 0.15
    assert cfg.walk_speed_min == 0.15
    assert cfg.standing_height_fraction == pytest.approx(2 / 3)
    assert cfg.hs_refractory_ms == 300
    assert cfg.filter_cutoff_hz == 6.0
    assert cfg.max_gap_fill_frames == 6
    assert cfg.gravity == 9.81
    assert cfg.marker_set.stems["left_hip"] == "LEFT_HIP"


def test_chair_beyond_turn_zone_is_invalid(tmp_path):
    text = f"[trial]\nfps = 30\n[thresholds]\nchair_zone_y_max = 5.0\nturn_zone_y = 4.5\n" \
           f"[markers]\n{MARKERS_TOML}\n"
    with pytest.raises(InvalidValue, match="chair_zone_y_max"):
        load_config(write(tmp_path, text))


def test_cli_tolerance_overrides_file(tmp_path):
    text = f"[trial]\nfps = 30\n[thresholds]\nturn_tolerance_y = 0.15\n[markers]\n{MARKERS_TOML}\n"
    assert load_config(write(tmp_path, text), tolerance=0.2).turn_tolerance_y == 0.2


def test_overlay_merges_over_base(tmp_path):
    base = write(tmp_path, f"[trial]\nfps = 30\n[markers]\n{MARKERS_TOML}\n")
    overlay = write(tmp_path, '[trial]\nfps = 60\n[participant]\nid = "p1"\nleg_length_m = 0.9\n',
                    "trial.toml")
    cfg = load_config(base, overlay)
    assert cfg.fps == 60
    assert cfg.participant.id == "p1"
    assert cfg.participant.leg_length_m == 0.9
    assert cfg.marker_set.stems["right_toe"] == "RIGHT_TOE"


def test_tolerance_beats_overlay(tmp_path):
    base = write(tmp_path, f"[trial]\nfps = 30\n[markers]\n{MARKERS_TOML}\n")
    overlay = write(tmp_path, "[thresholds]\nturn_tolerance_y = 0.3\n", "trial.toml")
    assert load_config(base, overlay, tolerance=0.1).turn_tolerance_y == 0.1


def test_missing_fps(tmp_path):
    with pytest.raises(MissingKey, match="fps"):
        load_config(write(tmp_path, f"[markers]\n{MARKERS_TOML}\n"))


def test_missing_marker():
    stems = {m: m for m in REQUIRED_MARKERS if m != "right_heel"}
    with pytest.raises(MissingKey, match="right_heel"):
        MarkerSet(stems)


def test_duplicate_stem_rejected():
    stems = {m: m for m in REQUIRED_MARKERS}
    stems["right_toe"] = "left_toe"
    with pytest.raises(InvalidValue, match="already used"):
        MarkerSet(stems)


def test_unknown_marker_rejected():
    stems = {m: m for m in REQUIRED_MARKERS}
    stems["nose"] = "nose"
    with pytest.raises(InvalidValue):
        MarkerSet(stems)


def test_malformed_toml(tmp_path):
    with pytest.raises(MalformedConfig):
        load_config(write(tmp_path, "[trial\nfps = "))


@pytest.mark.parametrize("key,value", [
    ("filter_cutoff_hz", 15.0),  # Nyquist at 30 fps
    ("standing_height_fraction", 1.0),
    ("turn_tolerance_y", -0.1),
])
def test_invariants_report_key(key, value):
    with pytest.raises(InvalidValue, match=key):
        PipelineConfig(fps=30, marker_set=MarkerSet({m: m for m in REQUIRED_MARKERS}),
                       **{key: value})


def test_gap_limit_seconds_converted_to_frames():
    cfg = config_from_dict({"trial": {"fps": 60}, "thresholds": {"max_gap_fill_s": 0.5},
                            "markers": {m: m for m in REQUIRED_MARKERS}})
    assert cfg.max_gap_fill_frames == 30


def test_gap_limit_default_is_a_fifth_of_a_second():
    cfg = PipelineConfig(fps=100, marker_set=MarkerSet({m: m for m in REQUIRED_MARKERS}))
    assert cfg.max_gap_fill_frames == 20


def test_unknown_keys_only_warn(caplog):
    cfg = config_from_dict({"trial": {"fps": 30, "colour": "red"},
                            "markers": {m: m for m in REQUIRED_MARKERS}})
    assert cfg.fps == 30
    assert "trial.colour" in caplog.text


def test_merge_dicts_is_deep_and_pure():
    base = {"a": {"x": 1, "y": 2}, "b": 1}
    out = merge_dicts(base, {"a": {"y": 3}})
    assert out == {"a": {"x": 1, "y": 3}, "b": 1}
    assert base["a"]["y"] == 2


def test_to_dict_is_json_ready():
    cfg = PipelineConfig(fps=30, marker_set=MarkerSet({m: m for m in REQUIRED_MARKERS}))
    d = cfg.to_dict()
    assert d["marker_set"]["left_hip"] == "left_hip"
    assert math.isclose(d["turn_zone_y"], 4.5)
