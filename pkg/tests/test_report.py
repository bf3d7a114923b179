import csv
import dataclasses
import io
import json
import math
import re
import shutil
from html.parser import HTMLParser

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tugkit import report
from tugkit import vector_coding as vc
from tugkit.config import load_config
from tugkit.events import Step
from tugkit.pipeline import analyze_file
from tugkit.report import (KINEMATICS_BASE_COLUMNS, RESULTS_COLUMNS, STEPS_COLUMNS,
                           VECTOR_CODING_COLUMNS, format_number, write_bundle)
from tugkit.segmentation import PHASES

from conftest import FIXTURES

EXPECTED_RESULTS_COLUMNS = (
    "trial_id", "turn_direction", "total_time_s", "stand_s", "first_gait_s", "turn_s",
    "second_gait_s", "sit_s", "cadence_spm", "velocity_mps", "steps_first", "steps_second",
    "step_time_mean_s_first", "step_time_sd_s_first", "step_len_mean_m_first",
    "step_len_sd_m_first", "step_time_mean_s_second", "step_time_sd_s_second",
    "step_len_mean_m_second", "step_len_sd_m_second", "xcom_dev_first_m", "xcom_dev_second_m",
    "vc_mean_deg", "vc_cav_deg", "vc_inphase_frac", "vc_antiphase_frac", "vc_pelvis_frac",
    "vc_trunk_frac",
)


def read_rows(path):
    raw = path.read_bytes()
    assert not raw.startswith(b"\xef\xbb\xbf")
    assert b"\r" not in raw
    return list(csv.reader(io.StringIO(raw.decode("utf-8"), newline="")))


def close6(text, value):
    """Field text equals ``value`` to 6 significant digits."""
    if value is None or (isinstance(value, float) and not math.isfinite(value)):
        return text == ""
    if isinstance(value, bool):
        return text == ("true" if value else "false")
    if isinstance(value, (int, str)):
        return text == str(value)
    return float(text) == pytest.approx(value, rel=5e-6, abs=1e-12)


@pytest.fixture(scope="module")
def fixture_result():
    return analyze_file(FIXTURES / "synth_fixture.csv", load_config(FIXTURES / "synth_fixture.toml"))


@pytest.fixture(scope="module")
def bundle(fixture_result, tmp_path_factory):
    return write_bundle(fixture_result, tmp_path_factory.mktemp("bundle"))


# ---------------------------------------------------------------- number formatting

@pytest.mark.parametrize("value,text", [
    (0.1234567, "0.123457"), (123456789.0, "123457000"), (1e-7, "0.0000001"),
    (26.93, "26.93"), (-0.0, "0"), (2.0, "2"), (float("nan"), ""), (float("inf"), ""),
    (None, ""), (True, "true"), (False, "false"), (12, "12"), ("Right", "Right"),
])
def test_format_number(value, text):
    assert format_number(value) == text


@settings(max_examples=200)
@given(st.floats(allow_nan=False, allow_infinity=False, min_value=-1e12, max_value=1e12))
def test_formatted_numbers_are_fixed_decimal_six_digits(x):
    text = format_number(x)
    assert re.fullmatch(r"-?\d+(\.\d+)?", text)
    assert len(text.lstrip("-").replace(".", "").lstrip("0").rstrip("0")) <= 6
    assert float(text) == pytest.approx(x, rel=5e-6, abs=1e-300)


# ---------------------------------------------------------------- results table

def test_results_columns_in_order(bundle):
    assert RESULTS_COLUMNS == EXPECTED_RESULTS_COLUMNS
    rows = read_rows(bundle.results)
    assert len(rows) == 2
    assert tuple(rows[0]) == EXPECTED_RESULTS_COLUMNS


def test_results_round_trip(bundle, fixture_result):
    header, row = read_rows(bundle.results)
    m = fixture_result.metrics
    for name, text in zip(header, row):
        assert close6(text, getattr(m, name)), name


def test_no_steps_leaves_cadence_empty(fixture_result, tmp_path):
    from tugkit.kinematics import spatiotemporal_metrics
    r = fixture_result
    m = spatiotemporal_metrics(r.trial_id, r.seg, [], r.track)
    header, row = read_rows(report.write_results_csv(m, tmp_path / "r.csv"))
    assert row[header.index("cadence_spm")] == ""
    assert row[header.index("steps_first")] == "0"


# ---------------------------------------------------------------- steps table

def test_steps_table(bundle, fixture_result):
    rows = read_rows(bundle.steps)
    assert tuple(rows[0]) == STEPS_COLUMNS
    assert len(rows) - 1 == len(fixture_result.steps)
    for st_, row in zip(fixture_result.steps, rows[1:]):
        assert row[0] == fixture_result.trial_id
        assert close6(row[STEPS_COLUMNS.index("step_time_s")], st_.step_time_s)
        assert close6(row[STEPS_COLUMNS.index("step_length_m")], st_.step_length_m)


def test_zero_steps_is_header_only(tmp_path):
    assert read_rows(report.write_steps_csv("t", [], tmp_path / "s.csv")) == [list(STEPS_COLUMNS)]


def test_incomplete_step_row(tmp_path):
    st_ = Step("FirstGait", "Left", 10, 40, 0.333333, 0.5, incomplete=True)
    rows = read_rows(report.write_steps_csv("t", [st_], tmp_path / "s.csv"))
    row = dict(zip(rows[0], rows[1]))
    assert row["incomplete_flag"] == "true"
    assert row["step_length_m"] == ""
    assert row["trailing_to_frame"] == ""


# ---------------------------------------------------------------- kinematics table

def test_kinematics_rows_and_phase_partition(bundle, fixture_result):
    rows = read_rows(bundle.kinematics)
    header = rows[0]
    assert tuple(header[:len(KINEMATICS_BASE_COLUMNS)]) == KINEMATICS_BASE_COLUMNS
    assert len(rows) - 1 == fixture_result.recording.n_frames
    labels = [r[1] for r in rows[1:]]
    for phase, (a, b) in fixture_result.seg.intervals.items():
        assert [i for i, p in enumerate(labels) if p == phase] == list(range(a, b))


def test_rejected_trial_kinematics_is_header_only(tmp_path):
    rows = read_rows(report.write_kinematics_csv(None, tmp_path / "k.csv"))
    assert rows == [list(KINEMATICS_BASE_COLUMNS)]


# ---------------------------------------------------------------- vector coding table

def split_vc(rows):
    body = [r for r in rows[1:] if not r[0].startswith("#")]
    summary = {r[0][2:]: r[1] for r in rows[1:] if r[0].startswith("# ") and r[0] != "# summary"}
    return body, summary


def test_vector_coding_table(bundle, fixture_result):
    rows = read_rows(bundle.vector_coding)
    assert tuple(rows[0]) == VECTOR_CODING_COLUMNS
    assert all(len(r) == len(VECTOR_CODING_COLUMNS) for r in rows)
    assert ["# summary"] + [""] * 5 in rows
    body, summary = split_vc(rows)
    cs = fixture_result.coupling
    assert len(body) == cs.frames.size
    assert set(summary) == set(report.VECTOR_CODING_SUMMARY_KEYS)
    fracs = [float(summary[k]) for k in ("inphase_frac", "antiphase_frac", "pelvis_frac",
                                         "trunk_frac")]
    assert sum(fracs) == pytest.approx(1.0, abs=1e-5)
    assert close6(summary["cav_deg"], cs.cav_deg)


def test_en_bloc_rows_all_in_phase(default_result, tmp_path):
    rows = read_rows(report.write_vector_coding_csv(default_result.coupling, tmp_path / "v.csv"))
    body, _ = split_vc(rows)
    assert {r[4] for r in body if r[5] == "false"} == {"InPhase"}


def test_all_stationary_rows_and_empty_summary(tmp_path):
    n = 20
    angles = vc.AxialAngleSeries(np.arange(n), 60.0, np.zeros(n), np.zeros(n))
    cs = vc.coupling_angles(angles, strict=False)
    body, summary = split_vc(read_rows(report.write_vector_coding_csv(cs, tmp_path / "v.csv")))
    assert len(body) == n - 1
    assert all(r[5] == "true" and r[3] == "" and r[4] == "" for r in body)
    assert all(v == "" for v in summary.values())


# ---------------------------------------------------------------- participants

def test_participants_row(bundle, fixture_result):
    rows = read_rows(bundle.participants)
    assert tuple(rows[0]) == report.PARTICIPANTS_COLUMNS
    assert rows[1][:2] == [fixture_result.trial_id, "synth_fixture"]
    assert rows[1][-1] == "30"


# ---------------------------------------------------------------- JSON

def test_json_reparses_to_model(bundle, fixture_result):
    doc = json.loads(bundle.json.read_text(encoding="utf-8"))
    assert doc == report._jsonable(report.trial_document(fixture_result))
    assert doc["schema_version"] == report.SCHEMA_VERSION
    assert doc["input"]["sha256"] == fixture_result.source_digest
    assert set(doc["segmentation"]["phases"]) == set(PHASES)


def test_json_durations_equal_csv(bundle):
    doc = json.loads(bundle.json.read_text(encoding="utf-8"))
    header, row = read_rows(bundle.results)
    csv_row = dict(zip(header, row))
    keys = {"Stand": "stand_s", "FirstGait": "first_gait_s", "Turn": "turn_s",
            "SecondGait": "second_gait_s", "Sit": "sit_s"}
    for phase, key in keys.items():
        assert doc["segmentation"]["phases"][phase]["duration_s"] == float(csv_row[key])
        assert doc["metrics"][key] == float(csv_row[key])


def test_digest_tracks_input_bytes(tmp_path, fixture_result):
    cfg = load_config(FIXTURES / "synth_fixture.toml")
    same = tmp_path / "copy.csv"
    shutil.copyfile(FIXTURES / "synth_fixture.csv", same)
    assert analyze_file(same, cfg).source_digest == fixture_result.source_digest
    text = same.read_text(encoding="utf-8").splitlines(keepends=True)
    text[200] = text[200].replace(",", ", ", 1)
    changed = tmp_path / "changed.csv"
    changed.write_text("".join(text), encoding="utf-8")
    assert analyze_file(changed, cfg).source_digest != fixture_result.source_digest


# ---------------------------------------------------------------- HTML

VOID = {"meta", "br", "img", "input", "hr", "link"}


class TagChecker(HTMLParser):
    """Balanced-tag check plus collection of visible text and SVG elements."""

    def __init__(self):
        super().__init__(convert_charrefs=True)
        self.stack, self.errors, self.text, self.elements = [], [], [], []
        self.doctype = False

    def handle_decl(self, decl):
        self.doctype = decl.lower() == "doctype html"

    def handle_starttag(self, tag, attrs):
        self.elements.append((tag, dict(attrs)))
        if tag not in VOID:
            self.stack.append(tag)

    def handle_startendtag(self, tag, attrs):
        self.elements.append((tag, dict(attrs)))

    def handle_endtag(self, tag):
        if not self.stack or self.stack[-1] != tag:
            self.errors.append(f"unexpected </{tag}> with open {self.stack[-3:]}")
        else:
            self.stack.pop()

    def handle_data(self, data):
        if self.stack and self.stack[-1] != "style":
            self.text.append(data)


def check_html(path):
    p = TagChecker()
    p.feed(path.read_text(encoding="utf-8"))
    p.close()
    assert p.doctype
    assert not p.errors and not p.stack
    return p


def test_html_is_well_formed_and_self_contained(bundle):
    p = check_html(bundle.html)
    html = bundle.html.read_text(encoding="utf-8")
    assert "http://" not in html.replace('xmlns="http://www.w3.org/2000/svg"', "")
    assert "https://" not in html
    assert not any(tag in ("script", "link", "img") for tag, _ in p.elements)
    assert sum(tag == "svg" for tag, _ in p.elements) == 4
    assert sum(a.get("class") == "phase-band" for _, a in p.elements) == 5
    assert {a.get("data-name") for _, a in p.elements if a.get("class") == "threshold"} == \
        {"chair_zone_y_max", "turn_entry_y", "turn_zone_y"}


def test_phase_bands_map_back_to_segmentation(bundle, fixture_result):
    p = check_html(bundle.html)
    svg = next(a for tag, a in p.elements if tag == "svg" and "data-fps" in a)
    left, width = float(svg["data-plot-left"]), float(svg["data-plot-width"])
    t0, t1, fps = float(svg["data-x-min-s"]), float(svg["data-x-max-s"]), float(svg["data-fps"])

    def frame_at(px):
        return round((t0 + (px - left) / width * (t1 - t0)) * fps)

    bands = [a for _, a in p.elements if a.get("class") == "phase-band"]
    for band in bands:
        x, w = float(band["x"]), float(band["width"])
        assert (frame_at(x), frame_at(x + w)) == fixture_result.seg.interval(band["data-phase"])


def test_event_markers_match_events(bundle, fixture_result):
    p = check_html(bundle.html)
    hs = sorted((a["data-foot"], int(a["data-frame"])) for t, a in p.elements
                if t == "circle" and a.get("class") == "hs")
    to = sorted((a["data-foot"], int(a["data-frame"])) for t, a in p.elements
                if t == "rect" and a.get("class") == "to")
    assert hs == sorted((e.foot, e.frame) for e in fixture_result.heel_strikes)
    assert to == sorted((e.foot, e.frame) for e in fixture_result.toe_offs)


def test_every_html_number_is_in_an_artifact(bundle):
    p = check_html(bundle.html)
    text = " ".join(p.text)
    # axis tick labels (degrees) are fixed annotations, not data
    text = re.sub(r"\b\d+\s*(°|deg\b)", " ", text)
    numbers = set(re.findall(r"(?<![\w.])-?\d+(?:\.\d+)?(?![\w.])", text))
    assert numbers
    artifacts = " ".join(path.read_text(encoding="utf-8") for path in bundle.paths()
                         if path.suffix in (".csv", ".json"))
    known = set(re.findall(r"(?<![\w.])-?\d+(?:\.\d+)?(?![\w.])", artifacts))
    assert numbers <= known, numbers - known


def test_zero_events_still_render(fixture_result, tmp_path):
    from tugkit.html_report import render_html
    empty = dataclasses.replace(fixture_result, heel_strikes=[], toe_offs=[], steps=[],
                                coupling=None)
    p = check_html(render_html(empty, tmp_path / "r.html"))
    assert not any(a.get("class") in ("hs", "to", "sector") for _, a in p.elements)
    assert "no moving increments" in " ".join(p.text)


# ---------------------------------------------------------------- determinism

def test_bundle_is_byte_identical(fixture_result, tmp_path):
    a = write_bundle(fixture_result, tmp_path / "a")
    b = write_bundle(fixture_result, tmp_path / "b")
    assert len(a.paths()) == 7
    for pa, pb in zip(a.paths(), b.paths()):
        assert pa.name == pb.name
        assert pa.read_bytes() == pb.read_bytes()


def test_timestamp_only_when_requested(fixture_result, tmp_path):
    with_ts = write_bundle(fixture_result, tmp_path / "a", timestamp="2024-01-02T03:04:05Z")
    without = write_bundle(fixture_result, tmp_path / "b")
    assert "2024-01-02T03:04:05Z" in with_ts.html.read_text(encoding="utf-8")
    assert "Generated" not in without.html.read_text(encoding="utf-8")
    for pa, pb in zip(with_ts.paths(), without.paths()):
        if pa.suffix != ".html":
            assert pa.read_bytes() == pb.read_bytes()
