"""Synthetic TUG trials with analytically known ground truth.

The pelvis follows a planar path: a straight walk along +Y from the chair,
a semicircular turn, and a straight walk back along -Y, with a speed profile
built from constant-speed stretches joined by raised-cosine ramps (so the
travelled distance is closed-form). Stepping is phase-locked to distance:
the heels oscillate along the walking direction as ``A sin(g)`` with
``g = pi * s / step_length + phase(s)``, so every heel-strike (crest) lies
exactly one step length after the previous contralateral one. The stepping
phase is re-chosen for each gait phase, rotating smoothly during the turn,
so that no crest falls near a phase boundary.

Noise
-----
Gaussian noise uses a portable recipe: uniforms come from the PCG64 bit
generator seeded with ``seed`` (``random()`` = 53 high bits / 2**53) and are
turned into normals with the Box-Muller transform, ``u1 = 1 - random()``,
``z0 = sqrt(-2 ln u1) cos(2 pi u2)``, ``z1 = sqrt(-2 ln u1) sin(2 pi u2)``.
Normals fill each marker's ``(n, 3)`` block in row-major order, markers in
canonical order (hips, shoulders, heels, toes; left before right).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.optimize import brentq

from .config import REQUIRED_MARKERS
from .errors import InfeasibleSpec
from .ingest import TrialRecording, write_landmarks_csv

T_ACC = 0.5  # s, speed ramp from rest
T_DEC = 0.5  # s, speed ramp to rest
T_TURN_RAMP = 0.3  # s, ramp between walking and turning speed (on the arc)
SWAY_TAPER = 0.3  # m, axial sway fades out over this distance before the arc
T_SIT_DOWN = 1.0  # s
HEEL_HEIGHT = 0.05
FOOT_LENGTH = 0.2
FOOT_WIDTH = 0.2
HIP_WIDTH = 0.3
SHOULDER_WIDTH = 0.38
TRUNK_LENGTH = 0.5


@dataclass(frozen=True)
class SynthSpec:
    fps: float = 60.0
    chair_y: float = 1.125
    turn_y: float = 4.5
    turn_tolerance_y: float = 0.15
    walk_speed: float = 0.8
    step_frequency: float = 1.8
    heel_amplitude: float = 0.25
    turn_duration_s: float = 2.8
    stand_duration_s: float = 1.6
    sit_duration_s: float = 3.0
    trunk_pelvis_lag_deg: float = 0.0
    noise_sd: float = 0.0
    seed: int = 0
    turn_radius: float = 0.3
    turn_direction: str = "Right"
    seat_offset: float = 0.4
    axial_amplitude_deg: float = 3.0
    toe_phase_lag_deg: float = 45.0
    seated_height: float = 0.5
    standing_height: float = 0.95

    @property
    def step_length(self) -> float:
        """Cruising step length, walk_speed / step_frequency."""
        return self.walk_speed / self.step_frequency


@dataclass
class GroundTruth:
    boundaries: tuple[int, ...]  # onset, f1, f2, f3, f4, n_frames
    heel_strikes: list[tuple[str, int, float, str]]  # foot, frame, time_s, phase
    toe_offs: list[tuple[str, int, float, str]]
    step_counts: dict[str, int]
    step_length: float
    turn_direction: str
    coupling_deg: np.ndarray  # per consecutive frame pair inside the Turn
    pelvis: np.ndarray = field(repr=False)
    heading_deg: np.ndarray = field(repr=False)

    def hs_frames(self, foot: str | None = None, phase: str | None = None) -> list[int]:
        return [f for ft, f, _, ph in self.heel_strikes
                if (foot is None or ft == foot) and (phase is None or ph == phase)]


class _SpeedProfile:
    """Piecewise raised-cosine speed profile with closed-form distance."""

    def __init__(self):
        self.segments: list[tuple[float, float, float, float, float]] = []  # t0, T, a, b, s0
        self.t_end = 0.0
        self.s_end = 0.0

    def add(self, duration: float, start: float, stop: float) -> None:
        self.segments.append((self.t_end, duration, start, stop, self.s_end))
        self.t_end += duration
        self.s_end += 0.5 * (start + stop) * duration

    @staticmethod
    def _dist(tau, T, a, b):
        if T == 0:
            return 0.0 * tau
        return a * tau + 0.5 * (b - a) * (tau - T / math.pi * np.sin(math.pi * tau / T))

    def distance(self, t: np.ndarray) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        out = np.full(t.shape, self.s_end)
        for t0, T, a, b, s0 in reversed(self.segments):
            sel = (t >= t0) & (t < t0 + T)
            out[sel] = s0 + self._dist(t[sel] - t0, T, a, b)
        out[t < 0] = 0.0
        return out

    def time_at(self, s: float) -> float:
        """Earliest time at which distance ``s`` is reached (0 < s < s_end)."""
        for t0, T, a, b, s0 in self.segments:
            s1 = s0 + 0.5 * (a + b) * T
            if s0 <= s <= s1 and s1 > s0:
                return brentq(lambda tau: s0 + self._dist(tau, T, a, b) - s, 0.0, T,
                              xtol=1e-12) + t0
        raise ValueError(f"distance {s} not reached")


def _raised_cos_step(t, t0, t1):
    x = np.clip((np.asarray(t, dtype=float) - t0) / (t1 - t0), 0.0, 1.0)
    return 0.5 * (1.0 - np.cos(math.pi * x))


def _smoothstep(x):
    x = np.clip(x, 0.0, 1.0)
    return x * x * (3.0 - 2.0 * x)


class _Path:
    """Arc-length parametrised walkway path (out, semicircle, back)."""

    def __init__(self, y0: float, y_c: float, r: float, side: float):
        self.y0, self.y_c, self.r, self.side = y0, y_c, r, side
        self.l_out = y_c - y0
        self.l_arc = math.pi * r
        self.l_back = y_c - y0
        self.length = self.l_out + self.l_arc + self.l_back

    def arc_param(self, s):
        return np.clip((np.asarray(s, dtype=float) - self.l_out) / self.r, 0.0, math.pi)

    def point(self, s) -> np.ndarray:
        s = np.asarray(s, dtype=float)
        beta = self.arc_param(s)
        x = self.r - self.r * np.cos(beta)
        y = np.where(s <= self.l_out, self.y0 + s, self.y_c + self.r * np.sin(beta))
        back = s > self.l_out + self.l_arc
        y = np.where(back, self.y_c - (s - self.l_out - self.l_arc), y)
        return np.stack([self.side * x, y], axis=-1)

    def heading(self, s) -> np.ndarray:
        """Walking direction angle, radians, continuous."""
        return math.pi / 2 - self.side * self.arc_param(s)

    def s_at_y(self, y: float, after: float = 0.0) -> float | None:
        """First arc length >= ``after`` where the path y equals ``y``."""
        grid = np.linspace(after, self.length, 20001)
        vals = self.point(grid)[:, 1] - y
        sign = np.signbit(vals)
        idx = np.flatnonzero(sign[1:] != sign[:-1])
        if idx.size == 0:
            return None
        k = idx[0]
        return brentq(lambda s: self.point(s)[1] - y, grid[k], grid[k + 1], xtol=1e-12)


def _box_muller_normals(seed: int, count: int) -> np.ndarray:
    gen = np.random.Generator(np.random.PCG64(seed))
    pairs = (count + 1) // 2
    u = gen.random(2 * pairs)
    u1 = 1.0 - u[0::2]
    u2 = u[1::2]
    r = np.sqrt(-2.0 * np.log(u1))
    z = np.empty(2 * pairs)
    z[0::2] = r * np.cos(2.0 * math.pi * u2)
    z[1::2] = r * np.sin(2.0 * math.pi * u2)
    return z[:count]


def _best_offset(positions: list[float]) -> float:
    """Offset in [0, pi) keeping ``positions + offset`` far from pi/2 (mod pi)."""
    cand = np.linspace(0.0, math.pi, 720, endpoint=False)
    worst = np.full(cand.size, np.inf)
    for p in positions:
        d = np.mod(p + cand - math.pi / 2, math.pi)
        worst = np.minimum(worst, np.minimum(d, math.pi - d))
    return float(cand[np.argmax(worst)])


def _check(spec: SynthSpec) -> None:
    def need(cond, msg):
        if not cond:
            raise InfeasibleSpec(msg)

    for name in ("fps", "walk_speed", "step_frequency", "heel_amplitude", "turn_duration_s",
                 "stand_duration_s", "sit_duration_s", "turn_radius", "seat_offset"):
        need(getattr(spec, name) > 0, f"{name} must be > 0")
    need(spec.noise_sd >= 0, "noise_sd must be >= 0")
    need(spec.turn_direction in ("Left", "Right"), "turn_direction must be Left or Right")
    need(spec.turn_radius <= 0.4, "turn_radius > 0.4 m would overshoot turn_y + 0.2 m")
    need(spec.chair_y < spec.turn_y - spec.turn_tolerance_y, "chair_y must be below the turn zone")
    need(spec.standing_height > spec.seated_height > 0, "standing height must exceed seated height")


def generate_trial(spec: SynthSpec, trial_id: str = "synthetic") -> tuple[TrialRecording, GroundTruth]:
    """Build a synthetic recording and its ground truth.

    Raises :class:`InfeasibleSpec` when the timing or geometry cannot be met.
    """
    _check(spec)
    v = spec.walk_speed
    r = spec.turn_radius
    ell = spec.step_length
    d0 = spec.seat_offset
    y0 = spec.chair_y - d0
    thr = spec.turn_y - spec.turn_tolerance_y
    # arc starts no later than the turn-zone entry so gait phases stay straight
    y_c = min(spec.turn_y - r / 2.0, thr)
    # speed ramps happen on the arc; the gait phases are walked at constant speed
    v_turn = (math.pi * r - v * T_TURN_RAMP) / (spec.turn_duration_s - T_TURN_RAMP)
    side = 1.0 if spec.turn_direction == "Right" else -1.0
    path = _Path(y0, y_c, r, side)

    if spec.turn_duration_s < 2 * T_TURN_RAMP or v_turn < 0.2:
        raise InfeasibleSpec("turn too short or too slow for the speed ramps "
                             f"(turning speed {v_turn:.3f} m/s)")
    if d0 < v * max(T_ACC, T_DEC) / 2:
        raise InfeasibleSpec("seat_offset too short for the speed ramps")
    cruise_out = path.l_out - v * T_ACC / 2
    cruise_back = path.l_back - v * T_DEC / 2
    if cruise_out < d0 or cruise_back < d0:
        raise InfeasibleSpec("walkway too short for the requested speeds")

    t_walk = spec.stand_duration_s - T_ACC / 2 - d0 / v
    rise_end = t_walk + T_ACC / 2
    rise_start = 0.1 * spec.stand_duration_s
    if t_walk < 0.3 * spec.stand_duration_s or rise_end - rise_start < 0.3:
        raise InfeasibleSpec("stand_duration_s too short to rise before walking")

    prof = _SpeedProfile()
    prof.add(t_walk, 0.0, 0.0)
    prof.add(T_ACC, 0.0, v)
    prof.add(cruise_out / v, v, v)
    prof.add(T_TURN_RAMP, v, v_turn)
    prof.add(spec.turn_duration_s - 2 * T_TURN_RAMP, v_turn, v_turn)
    prof.add(T_TURN_RAMP, v_turn, v)
    prof.add(cruise_back / v, v, v)
    prof.add(T_DEC, v, 0.0)
    t_stop = prof.t_end
    t_return = t_stop - T_DEC / 2 - d0 / v
    t_end = t_return + spec.sit_duration_s
    if t_end < t_stop + T_SIT_DOWN + 0.2:
        raise InfeasibleSpec("sit_duration_s too short to stop and sit down")

    # phase boundaries expressed as path distance
    s_f1 = d0
    s_f2 = path.s_at_y(thr)
    s_f3 = path.s_at_y(thr, after=path.l_out + path.l_arc / 2)
    s_f4 = path.length - d0
    if s_f2 - s_f1 < 2 * ell or s_f4 - s_f3 < 2 * ell:
        raise InfeasibleSpec("a gait phase is shorter than two steps")
    k = math.pi / ell
    phi1 = _best_offset([k * s_f1, k * s_f2])
    phi2 = _best_offset([k * s_f3, k * s_f4])
    dphi = (phi2 - phi1) % math.pi

    def stride_phase(s):
        x = (np.asarray(s, dtype=float) - path.l_out) / path.l_arc
        return k * np.asarray(s, dtype=float) + phi1 + dphi * _smoothstep(x)

    n = int(round(t_end * spec.fps))
    t = np.arange(n) / spec.fps
    s = prof.distance(t)
    xy = path.point(s)
    psi = path.heading(s)
    g = stride_phase(s)
    z = (spec.seated_height
         + (spec.standing_height - spec.seated_height) * _raised_cos_step(t, rise_start, rise_end)
         - (spec.standing_height - spec.seated_height) * _raised_cos_step(t, t_stop, t_stop + T_SIT_DOWN))

    u = np.stack([np.cos(psi), np.sin(psi)], axis=1)
    left_normal = np.stack([-np.sin(psi), np.cos(psi)], axis=1)
    # axial sway fades out around the arc so the turn is a pure rotation
    taper = (1.0 - _smoothstep((s - path.l_out + SWAY_TAPER) / SWAY_TAPER)
             + _smoothstep((s - path.l_out - path.l_arc) / SWAY_TAPER))
    ax = math.radians(spec.axial_amplitude_deg) * taper
    theta_p = psi - math.pi / 2 + ax * np.sin(g)
    theta_t = psi - math.pi / 2 + ax * np.sin(g - math.radians(spec.trunk_pelvis_lag_deg))

    def planar(vec2, height):
        return np.column_stack([vec2, np.broadcast_to(height, (n,))])

    pelvis = planar(xy, z)
    hip_axis = np.stack([np.cos(theta_p), np.sin(theta_p)], axis=1)
    sh_axis = np.stack([np.cos(theta_t), np.sin(theta_t)], axis=1)
    delta = math.radians(spec.toe_phase_lag_deg)
    A = spec.heel_amplitude
    coords = {
        "left_hip": planar(xy - HIP_WIDTH / 2 * hip_axis, z),
        "right_hip": planar(xy + HIP_WIDTH / 2 * hip_axis, z),
        "left_shoulder": planar(xy - SHOULDER_WIDTH / 2 * sh_axis, z + TRUNK_LENGTH),
        "right_shoulder": planar(xy + SHOULDER_WIDTH / 2 * sh_axis, z + TRUNK_LENGTH),
    }
    for foot, sign, shift in (("left", 1.0, 0.0), ("right", -1.0, math.pi)):
        lateral = xy + sign * FOOT_WIDTH / 2 * left_normal
        heel = lateral + (A * np.sin(g + shift))[:, None] * u
        toe = lateral + (A * np.sin(g + shift - delta) + FOOT_LENGTH)[:, None] * u
        coords[f"{foot}_heel"] = planar(heel, HEEL_HEIGHT)
        coords[f"{foot}_toe"] = planar(toe, HEEL_HEIGHT)

    # ground-truth boundaries: first-crossing scan of the noise-free pelvis y
    y = xy[:, 1]
    bounds = [0]
    for cond_fn in (lambda i: y[i] > spec.chair_y, lambda i: y[i] >= thr,
                    lambda i: y[i] < thr, lambda i: y[i] <= spec.chair_y):
        i = bounds[-1]
        while i < n and not cond_fn(i):
            i += 1
        if i >= n:
            raise InfeasibleSpec("trajectory does not produce all five phases")
        bounds.append(i)
    bounds.append(n)
    windows = {"FirstGait": (bounds[1], bounds[2]), "SecondGait": (bounds[3], bounds[4])}

    def events_at(offsets: dict[str, float]) -> list[tuple[str, int, float, str]]:
        out = []
        g_lo = stride_phase(0.0)
        g_hi = stride_phase(path.length)
        for foot, off in offsets.items():
            kmin = math.floor((g_lo - off) / (2 * math.pi))
            kmax = math.ceil((g_hi - off) / (2 * math.pi))
            for kk in range(kmin, kmax + 1):
                target = off + 2 * math.pi * kk
                if not g_lo < target < g_hi:
                    continue
                s_star = brentq(lambda ss: stride_phase(ss) - target, 0.0, path.length, xtol=1e-12)
                t_star = prof.time_at(s_star)
                frame = int(round(t_star * spec.fps))
                for phase, (a, b) in windows.items():
                    if a <= frame < b:
                        out.append((foot, frame, t_star, phase))
        return sorted(out, key=lambda e: e[2])

    hs = events_at({"Left": math.pi / 2, "Right": 3 * math.pi / 2})
    to = events_at({"Left": 3 * math.pi / 2 + delta, "Right": math.pi / 2 + delta})
    counts = {p: max(0, sum(1 for e in hs if e[3] == p) - 1) for p in windows}

    a, b = bounds[2], bounds[3]
    dp = np.diff(np.unwrap(theta_p[a:b]))
    dt = np.diff(np.unwrap(theta_t[a:b]))
    coupling = np.degrees(np.arctan2(dt, dp)) % 360.0

    if spec.noise_sd > 0:
        noise = _box_muller_normals(spec.seed, len(REQUIRED_MARKERS) * n * 3) * spec.noise_sd
        noise = noise.reshape(len(REQUIRED_MARKERS), n, 3)
        coords = {m: coords[m] + noise[i] for i, m in enumerate(REQUIRED_MARKERS)}
    else:
        coords = {m: coords[m] for m in REQUIRED_MARKERS}

    rec = TrialRecording(trial_id=trial_id, fps=float(spec.fps), coords=coords,
                         quality_mask={m: np.ones(n, dtype=bool) for m in coords})
    truth = GroundTruth(boundaries=tuple(bounds), heel_strikes=hs, toe_offs=to,
                        step_counts=counts, step_length=ell,
                        turn_direction=spec.turn_direction, coupling_deg=coupling,
                        pelvis=pelvis, heading_deg=np.degrees(psi))
    return rec, truth


def config_toml(spec: SynthSpec, participant_id: str = "synthetic") -> str:
    """TOML config matching a synthetic trial (stems = logical names)."""
    lines = [
        "[trial]",
        f"fps = {float(spec.fps)!r}",
        'units = "m"',
        "",
        "[participant]",
        f'id = "{participant_id}"',
        "",
        "[thresholds]",
        f"chair_zone_y_max = {float(spec.chair_y)!r}",
        f"turn_zone_y = {float(spec.turn_y)!r}",
        f"turn_tolerance_y = {float(spec.turn_tolerance_y)!r}",
        "",
        "[markers]",
    ]
    lines += [f'{m} = "{m}"' for m in REQUIRED_MARKERS]
    return "\n".join(lines) + "\n"


def write_trial(spec: SynthSpec, directory: str | Path, trial_id: str,
                with_config: bool = True) -> tuple[Path, GroundTruth]:
    """Generate a trial and write ``<trial_id>.csv`` (and ``.toml``)."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    rec, truth = generate_trial(spec, trial_id)
    csv_path = write_landmarks_csv(rec, directory / f"{trial_id}.csv")
    if with_config:
        (directory / f"{trial_id}.toml").write_text(config_toml(spec, trial_id), encoding="utf-8")
    return csv_path, truth


def random_spec(rng: np.random.Generator, **overrides) -> SynthSpec:
    """Draw a feasible-looking spec; callers retry on :class:`InfeasibleSpec`."""
    params = dict(
        fps=float(rng.choice([30.0, 60.0])),
        walk_speed=float(rng.uniform(0.6, 1.1)),
        step_frequency=float(rng.uniform(1.5, 2.1)),
        heel_amplitude=float(rng.uniform(0.18, 0.3)),
        turn_duration_s=float(rng.uniform(2.0, 3.5)),
        stand_duration_s=float(rng.uniform(1.5, 2.2)),
        sit_duration_s=float(rng.uniform(2.5, 4.0)),
        turn_radius=float(rng.uniform(0.25, 0.4)),
        turn_direction=str(rng.choice(["Left", "Right"])),
        noise_sd=float(rng.choice([0.0, rng.uniform(0.0, 0.003)])),
        seed=int(rng.integers(0, 2**31)),
    )
    params.update(overrides)
    return SynthSpec(**params)
