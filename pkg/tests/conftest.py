from __future__ import annotations

from pathlib import Path

import numpy as np
import pytest

from tugkit.config import REQUIRED_MARKERS, MarkerSet, PipelineConfig
from tugkit.ingest import TrialRecording
from tugkit.pipeline import analyze_recording
from tugkit.synth import SynthSpec, generate_trial

FIXTURES = Path(__file__).parent / "fixtures"


def identity_markers() -> MarkerSet:
    return MarkerSet({m: m for m in REQUIRED_MARKERS})


def config_for(spec: SynthSpec, **overrides) -> PipelineConfig:
    """Pipeline configuration whose thresholds match a synthetic spec."""
    params = dict(fps=spec.fps, marker_set=identity_markers(), chair_zone_y_max=spec.chair_y,
                  turn_zone_y=spec.turn_y, turn_tolerance_y=spec.turn_tolerance_y)
    params.update(overrides)
    return PipelineConfig(**params)


def recording(coords: dict[str, np.ndarray], fps: float = 30.0, trial_id: str = "t") -> TrialRecording:
    coords = {m: np.asarray(v, dtype=float) for m, v in coords.items()}
    masks = {m: np.all(np.isfinite(v), axis=1) for m, v in coords.items()}
    return TrialRecording(trial_id=trial_id, fps=fps, coords=coords, quality_mask=masks)


def straight_walk(n: int = 300, fps: float = 30.0, speed: float = 0.5, y0: float = 0.0,
                  z: float = 0.9) -> dict[str, np.ndarray]:
    """All eight markers rigidly attached to a pelvis walking along +Y."""
    t = np.arange(n) / fps
    y = y0 + speed * t
    base = np.stack([np.zeros(n), y, np.full(n, z)], axis=1)
    offsets = {
        "left_hip": (-0.15, 0, 0), "right_hip": (0.15, 0, 0),
        "left_shoulder": (-0.19, 0, 0.5), "right_shoulder": (0.19, 0, 0.5),
        "left_heel": (-0.1, 0, -z + 0.05), "right_heel": (0.1, 0, -z + 0.05),
        "left_toe": (-0.1, 0.2, -z + 0.05), "right_toe": (0.1, 0.2, -z + 0.05),
    }
    return {m: base + np.asarray(o) for m, o in offsets.items()}


@pytest.fixture(scope="session")
def default_spec() -> SynthSpec:
    return SynthSpec()


@pytest.fixture(scope="session")
def default_trial(default_spec):
    rec, truth = generate_trial(default_spec, "synth_default")
    return rec, truth


@pytest.fixture(scope="session")
def default_result(default_spec, default_trial):
    rec, _ = default_trial
    return analyze_recording(rec, config_for(default_spec))


@pytest.fixture(scope="session")
def noisy_spec() -> SynthSpec:
    return SynthSpec(noise_sd=0.002, seed=11, turn_direction="Left", fps=30.0)


# one line per acceptance criterion, echoed in the terminal summary
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
