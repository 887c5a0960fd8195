"""Candidate generation, the driving utility model, and EUM planning.

Candidates form a small lattice: jerk-limited longitudinal profiles (one per
acceleration target) crossed with lateral offset paths (a smooth polynomial
shift to each offset and back to the start lane, parameterised by progress so
a stationary ego never moves). Braking profiles are full S-curves — ramp-in,
constant deceleration, and a jerk-limited exit ramp timed so speed reaches 0
exactly as acceleration does; there is no reverse gear.

Utility of a trajectory in a sampled world:

    raw = -( jerk_weight   * mean squared longitudinal jerk
           + safety_weight * sum_t max(0, d_safe - d(t))^2 * dt   [pre-impact]
           + legal_weight  * area swept outside the corridor
           + collision_penalty * [any rectangles overlap] )
          + progress_weight * (arclength - reference arclength)
    utility = clamp(raw, -utility_bound_m, 0)

d(t) is the minimum distance between the ego rectangle and any object
rectangle (objects propagate at constant velocity). The proximity hinge
accumulates only over steps strictly before the first overlap — the
collision term subsumes the rest. The progress reference is the constant-
max-acceleration envelope  v0*H + max(accel_max, 0)*H^2/2, an action-
independent constant, so raw utilities are non-positive by construction and a
constant shift never changes the argmax.

``plan`` picks the candidate with the highest estimated expected utility
(shared samples across candidates; ties broken by lexicographically smallest
action id). Point-mass distributions use an exact shortcut: the mean of n
identical evaluations is the single evaluation.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from importlib import resources
from typing import Sequence

import numpy as np

from .errors import MetricContractError, SchemaError
from .estimator import SampleSpec, estimate_eu, sample_states
from .geometry import corridor_frame, pack_objects
from .kernels import traj_world_metrics
from .scenario import RoadCorridor, Scenario

__all__ = [
    "UtilityWeights",
    "PlannerConfig",
    "Trajectory",
    "PlanResult",
    "generate_candidates",
    "utility",
    "plan",
    "stopping_distance",
    "load_planner_config",
    "save_planner_config",
    "planner_config_from_dict",
    "planner_config_to_dict",
    "load_preset",
    "PRESET_NAMES",
]

PLANNER_SCHEMA_ID = "tip-planner/1"
PRESET_NAMES = ("av1", "av2")

_DEFAULT_TARGETS = (-6.0, -4.0, -2.0, 0.0, 1.0)
_DEFAULT_OFFSETS = (-1.5, 0.0, 1.5)


# --------------------------------------------------------------------------
# Configuration
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class UtilityWeights:
    """Non-negative weights of the driving utility groups."""

    jerk_weight: float = 0.05
    safety_weight: float = 8.0
    legal_weight: float = 5.0
    progress_weight: float = 0.5
    collision_penalty: float = 100.0

    def __post_init__(self) -> None:
        for name in (
            "jerk_weight",
            "safety_weight",
            "legal_weight",
            "progress_weight",
            "collision_penalty",
        ):
            v = getattr(self, name)
            if not (math.isfinite(v) and v >= 0):
                raise MetricContractError(f"weights.{name} must be finite and >= 0, got {v}")


@dataclass(frozen=True)
class PlannerConfig:
    """Planner limits, candidate lattice, and utility weights."""

    accel_min: float = -6.0
    accel_max: float = 2.0
    jerk_min: float = -4.0
    jerk_max: float = 4.0
    accel_targets: tuple[float, ...] = _DEFAULT_TARGETS
    lateral_offsets: tuple[float, ...] = _DEFAULT_OFFSETS
    d_safe: float = 1.5
    weights: UtilityWeights = field(default_factory=UtilityWeights)
    utility_bound_m: float = 100.0
    control_noise_sigma: float = 0.0  # experimental; 0 disables (the default)
    name: str = "default"

    def __post_init__(self) -> None:
        if not (self.accel_min < 0 < self.accel_max):
            raise MetricContractError(
                f"need accel_min < 0 < accel_max, got [{self.accel_min}, {self.accel_max}]"
            )
        if not (self.jerk_min < 0 < self.jerk_max):
            raise MetricContractError(
                f"need jerk_min < 0 < jerk_max, got [{self.jerk_min}, {self.jerk_max}]"
            )
        if not self.d_safe > 0:
            raise MetricContractError(f"d_safe must be > 0, got {self.d_safe}")
        if not self.utility_bound_m > 0:
            raise MetricContractError(f"utility_bound_m must be > 0, got {self.utility_bound_m}")
        if self.weights.collision_penalty > self.utility_bound_m:
            raise MetricContractError(
                f"collision_penalty ({self.weights.collision_penalty}) must not exceed "
                f"utility_bound_m ({self.utility_bound_m})"
            )
        if self.control_noise_sigma < 0:
            raise MetricContractError("control_noise_sigma must be >= 0")
        object.__setattr__(self, "accel_targets", tuple(float(a) for a in self.accel_targets))
        object.__setattr__(self, "lateral_offsets", tuple(float(o) for o in self.lateral_offsets))
        if not self.accel_targets:
            raise MetricContractError("accel_targets must be non-empty")
        if not self.lateral_offsets:
            raise MetricContractError("lateral_offsets must be non-empty")


def planner_config_to_dict(config: PlannerConfig) -> dict:
    w = config.weights
    return {
        "schema": PLANNER_SCHEMA_ID,
        "name": config.name,
        "accel_min": config.accel_min,
        "accel_max": config.accel_max,
        "jerk_min": config.jerk_min,
        "jerk_max": config.jerk_max,
        "accel_targets": list(config.accel_targets),
        "lateral_offsets": list(config.lateral_offsets),
        "d_safe": config.d_safe,
        "utility_bound_m": config.utility_bound_m,
        "control_noise_sigma": config.control_noise_sigma,
        "weights": {
            "jerk_weight": w.jerk_weight,
            "safety_weight": w.safety_weight,
            "legal_weight": w.legal_weight,
            "progress_weight": w.progress_weight,
            "collision_penalty": w.collision_penalty,
        },
    }


def planner_config_from_dict(d: dict) -> PlannerConfig:
    if not isinstance(d, dict):
        raise SchemaError("planner document must be a JSON object")
    if "schema" not in d:
        raise SchemaError("missing required field planner.schema")
    if d["schema"] != PLANNER_SCHEMA_ID:
        raise SchemaError(f"planner.schema must be {PLANNER_SCHEMA_ID!r}, got {d['schema']!r}")
    known = {
        "schema", "name", "accel_min", "accel_max", "jerk_min", "jerk_max",
        "accel_targets", "lateral_offsets", "d_safe", "utility_bound_m",
        "control_noise_sigma", "weights",
    }
    extras = set(d) - known
    if extras:
        import warnings

        warnings.warn(f"ignoring unknown fields in planner config: {sorted(extras)}", stacklevel=2)

    def take(key, mapping=d, ctx="planner"):
        if key not in mapping:
            raise SchemaError(f"missing required field {ctx}.{key}")
        return mapping[key]

    wd = take("weights")
    try:
        weights = UtilityWeights(
            jerk_weight=take("jerk_weight", wd, "weights"),
            safety_weight=take("safety_weight", wd, "weights"),
            legal_weight=take("legal_weight", wd, "weights"),
            progress_weight=take("progress_weight", wd, "weights"),
            collision_penalty=take("collision_penalty", wd, "weights"),
        )
        return PlannerConfig(
            accel_min=take("accel_min"),
            accel_max=take("accel_max"),
            jerk_min=take("jerk_min"),
            jerk_max=take("jerk_max"),
            accel_targets=tuple(take("accel_targets")),
            lateral_offsets=tuple(take("lateral_offsets")),
            d_safe=take("d_safe"),
            weights=weights,
            utility_bound_m=take("utility_bound_m"),
            control_noise_sigma=d.get("control_noise_sigma", 0.0),
            name=d.get("name", "unnamed"),
        )
    except MetricContractError as e:
        raise SchemaError(f"invalid planner config: {e}") from e


def load_planner_config(path: str) -> PlannerConfig:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except FileNotFoundError as e:
        raise SchemaError(
            f"planner {path!r} is neither a preset name {PRESET_NAMES} nor a readable file"
        ) from e
    except json.JSONDecodeError as e:
        raise SchemaError(f"planner file {path!r} is not valid JSON: {e}") from e
    return planner_config_from_dict(doc)


def save_planner_config(config: PlannerConfig, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(planner_config_to_dict(config), fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_preset(name: str) -> PlannerConfig:
    """Load a shipped preset by name ('av1', 'av2') or from a JSON path."""
    if name in PRESET_NAMES:
        text = resources.files("tip.presets").joinpath(f"{name}.json").read_text("utf-8")
        return planner_config_from_dict(json.loads(text))
    return load_planner_config(name)


# --------------------------------------------------------------------------
# Longitudinal profiles
# --------------------------------------------------------------------------


class _LongProfile:
    """Piecewise-cubic longitudinal motion: phases of constant jerk.

    Each phase row is (t_start, s0, v0, a0, j). Beyond the last phase the
    vehicle is stationary (v = a = 0) at the final arclength.
    """

    def __init__(self, phases: list[tuple[float, float, float, float, float]], t_end: float, s_end: float):
        self.phases = phases
        self.t_end = t_end  # time at which the phased motion ends (stationary after)
        self.s_end = s_end

    @staticmethod
    def build(v0: float, target: float, jerk_min: float, jerk_max: float, horizon: float) -> "_LongProfile":
        v0 = max(0.0, float(v0))
        phases: list[tuple[float, float, float, float, float]] = []
        t = 0.0
        s = 0.0
        v = v0
        a = 0.0

        def push(duration: float, j: float) -> None:
            nonlocal t, s, v, a
            if duration <= 0.0:
                return
            phases.append((t, s, v, a, j))
            s += v * duration + 0.5 * a * duration**2 + j * duration**3 / 6.0
            v += a * duration + 0.5 * j * duration**2
            a += j * duration
            t += duration

        if target > 0.0:
            j_in = jerk_max
            t_ramp = target / j_in
            push(t_ramp, j_in)
            if t < horizon:
                push(horizon - t, 0.0)  # hold the target accel to the horizon
            return _LongProfile(phases, t, s)

        if target == 0.0 or v0 == 0.0:
            phases.append((0.0, 0.0, v0 if target == 0.0 else 0.0, 0.0, 0.0))
            if target == 0.0 and v0 > 0.0:
                return _LongProfile(phases, horizon, v0 * horizon)
            return _LongProfile(phases, 0.0, 0.0)

        # braking target < 0 with positive initial speed
        j_in = abs(jerk_min)
        j_out = jerk_max
        a_t = abs(target)
        dv_in = a_t * a_t / (2.0 * j_in)
        v_exit = a_t * a_t / (2.0 * j_out)

        if v0 >= dv_in + v_exit:
            push(a_t / j_in, -j_in)  # ramp to the target decel
            v_mid = v0 - dv_in
            push((v_mid - v_exit) / a_t, 0.0)  # hold it
            push(a_t / j_out, j_out)  # exit ramp: v -> 0 exactly as a -> 0
        else:
            # triangular: never reaches the target decel
            a_p = math.sqrt(v0 * 2.0 * j_in * j_out / (j_in + j_out))
            push(a_p / j_in, -j_in)
            push(a_p / j_out, j_out)
        # numerical guard: end the phased motion exactly stopped
        return _LongProfile(phases, t, s)

    def eval(self, times: np.ndarray):
        """(s, v, a, j) arrays at the given times (stationary beyond t_end)."""
        times = np.asarray(times, dtype=np.float64)
        s = np.full_like(times, self.s_end)
        v = np.zeros_like(times)
        a = np.zeros_like(times)
        j = np.zeros_like(times)

        starts = np.array([p[0] for p in self.phases])
        idx = np.searchsorted(starts, times, side="right") - 1
        active = times < self.t_end - 1e-15 if self.t_end > 0 else np.zeros_like(times, dtype=bool)
        if self.t_end == 0.0 and self.phases:
            # purely stationary profile
            s[:] = 0.0
            return s, v, a, j
        for pi, (t0, s0, v0, a0, jj) in enumerate(self.phases):
            m = active & (idx == pi)
            if not np.any(m):
                continue
            dt_ = times[m] - t0
            s[m] = s0 + v0 * dt_ + 0.5 * a0 * dt_**2 + jj * dt_**3 / 6.0
            v[m] = v0 + a0 * dt_ + 0.5 * jj * dt_**2
            a[m] = a0 + jj * dt_
            j[m] = jj
        return s, v, a, j


def stopping_distance(v0: float, accel_limit: float, jerk_limit: float) -> float:
    """Closed-form distance to stop: jerk ramp then constant deceleration.

    (No exit ramp — the classical planning approximation; generated braking
    candidates travel slightly farther because of their smooth exit.)
    Triangular profile when the accel limit is never reached; 0 for v0 = 0.
    """
    if v0 < 0.0:
        raise MetricContractError(f"initial speed must be >= 0, got {v0}")
    if not (accel_limit < 0.0 and jerk_limit < 0.0):
        raise MetricContractError(
            f"braking limits must be negative, got accel {accel_limit}, jerk {jerk_limit}"
        )
    if v0 == 0.0:
        return 0.0
    a = abs(float(accel_limit))
    j = abs(float(jerk_limit))
    t1 = a / j
    dv_ramp = 0.5 * a * t1  # speed shed during the full ramp
    if v0 <= dv_ramp:
        t_star = math.sqrt(2.0 * v0 / j)
        return v0 * t_star - j * t_star**3 / 6.0
    d1 = v0 * t1 - j * t1**3 / 6.0
    v1 = v0 - dv_ramp
    return d1 + v1 * v1 / (2.0 * a)


# --------------------------------------------------------------------------
# Trajectories
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class Trajectory:
    """Sampled poses plus finite-difference kinematics.

    ``speed``/``accel``/``jerk`` are forward finite differences of the
    positions (the last value is held), so the consistency contract is exact
    by construction. ``long_accel``/``long_jerk`` hold the analytic
    longitudinal profile (the quantities the accel/jerk limits bind);
    ``progress_arc`` is the advance along the corridor centreline.
    """

    action_id: str
    dt: float
    t: np.ndarray
    x: np.ndarray
    y: np.ndarray
    heading: np.ndarray
    speed: np.ndarray
    accel: np.ndarray
    jerk: np.ndarray
    long_accel: np.ndarray = field(repr=False)
    long_jerk: np.ndarray = field(repr=False)
    progress_arc: float = 0.0
    accel_target: float = 0.0
    lateral_offset: float = 0.0

    @property
    def n_poses(self) -> int:
        return len(self.t)

    @property
    def poses(self) -> np.ndarray:
        """(T+1, 7) rows of (t, x, y, heading, speed, accel, jerk)."""
        return np.column_stack(
            [self.t, self.x, self.y, self.heading, self.speed, self.accel, self.jerk]
        )

    def poses_xyh(self) -> np.ndarray:
        return np.column_stack([self.x, self.y, self.heading])

    def final_speed(self) -> float:
        return float(self.speed[-1])


def _fd_chain(x: np.ndarray, y: np.ndarray, dt: float):
    """Forward-difference speed/accel/jerk from positions, last values held."""
    dx = np.diff(x)
    dy = np.diff(y)
    step = np.hypot(dx, dy)
    speed = np.concatenate([step / dt, [0.0]])
    speed[-1] = speed[-2] if len(speed) > 1 else 0.0
    accel = np.concatenate([np.diff(speed) / dt, [0.0]])
    accel[-1] = accel[-2] if len(accel) > 1 else 0.0
    jerk = np.concatenate([np.diff(accel) / dt, [0.0]])
    jerk[-1] = jerk[-2] if len(jerk) > 1 else 0.0
    return speed, accel, jerk


def validate_trajectory(traj: Trajectory, config: PlannerConfig | None = None, tol: float = 1e-6) -> None:
    """Check kinematic consistency (exact FD chain) and profile limits."""
    speed, accel, jerk = _fd_chain(traj.x, traj.y, traj.dt)
    for name, stored, recomputed in (
        ("speed", traj.speed, speed),
        ("accel", traj.accel, accel),
        ("jerk", traj.jerk, jerk),
    ):
        err = float(np.max(np.abs(stored - recomputed))) if len(stored) else 0.0
        if err > tol:
            raise MetricContractError(
                f"trajectory {traj.action_id!r}: stored {name} deviates from the "
                f"position finite differences by {err}"
            )
    if config is not None:
        amin, amax = config.accel_min, config.accel_max
        if np.any(traj.long_accel < amin - 1e-9) or np.any(traj.long_accel > amax + 1e-9):
            raise MetricContractError(
                f"trajectory {traj.action_id!r}: longitudinal accel leaves "
                f"[{amin}, {amax}]"
            )
        if np.any(traj.long_jerk < config.jerk_min - 1e-9) or np.any(
            traj.long_jerk > config.jerk_max + 1e-9
        ):
            raise MetricContractError(
                f"trajectory {traj.action_id!r}: longitudinal jerk leaves "
                f"[{config.jerk_min}, {config.jerk_max}]"
            )


class _CorridorPath:
    """Arclength parameterisation of a corridor centreline."""

    def __init__(self, corridor: RoadCorridor):
        pts = np.asarray(corridor.centerline, dtype=np.float64)
        seg = np.diff(pts, axis=0)
        seg_len = np.hypot(seg[:, 0], seg[:, 1])
        self.pts = pts
        self.dirs = seg / seg_len[:, None]
        self.s_nodes = np.concatenate([[0.0], np.cumsum(seg_len)])
        self.total = float(self.s_nodes[-1])

    def frame_at(self, s: np.ndarray):
        """(point, tangent direction) at arclengths s; extrapolates past the ends."""
        s = np.asarray(s, dtype=np.float64)
        idx = np.clip(np.searchsorted(self.s_nodes, s, side="right") - 1, 0, len(self.dirs) - 1)
        base = self.pts[idx]
        d = self.dirs[idx]
        rem = (s - self.s_nodes[idx])[:, None]
        return base + rem * d, d


def action_id_for(target: float, offset: float) -> str:
    return f"a{target:+.1f}|o{offset:+.1f}"


def _build_candidate(
    scenario: Scenario,
    config: PlannerConfig,
    target: float,
    offset: float,
) -> Trajectory:
    ego = scenario.ego
    n = scenario.n_steps
    dt = scenario.dt_s
    times = np.arange(n + 1) * dt

    profile = _LongProfile.build(ego.speed, target, config.jerk_min, config.jerk_max, scenario.horizon_s)
    s_rel, v_prof, a_prof, j_prof = profile.eval(times)

    path = _CorridorPath(scenario.corridor)
    s0_arr, l0_arr, _ = corridor_frame(np.array([ego.center]), np.asarray(scenario.corridor.centerline))
    s0, l0 = float(s0_arr[0]), float(l0_arr[0])

    s_total = float(s_rel[-1])
    if s_total > 0.0 and offset != 0.0:
        sigma = np.clip(s_rel / s_total, 0.0, 1.0)
        lateral = l0 + offset * 16.0 * sigma**2 * (1.0 - sigma) ** 2
    else:
        lateral = np.full_like(s_rel, l0)

    base, tangent = path.frame_at(s0 + s_rel)
    normal = np.column_stack([-tangent[:, 1], tangent[:, 0]])
    pos = base + lateral[:, None] * normal
    x, y = pos[:, 0], pos[:, 1]

    # headings from the motion direction; stationary samples hold the last one
    dxy = np.diff(pos, axis=0)
    moving = np.hypot(dxy[:, 0], dxy[:, 1]) > 1e-12
    headings = np.empty(n + 1)
    prev = ego.heading
    for k in range(n):
        if moving[k]:
            prev = math.atan2(dxy[k, 1], dxy[k, 0])
        headings[k] = prev
    headings[n] = prev

    speed, accel, jerk = _fd_chain(x, y, dt)

    return Trajectory(
        action_id=action_id_for(target, offset),
        dt=dt,
        t=times,
        x=x,
        y=y,
        heading=headings,
        speed=speed,
        accel=accel,
        jerk=jerk,
        long_accel=a_prof,
        long_jerk=j_prof,
        progress_arc=s_total,
        accel_target=target,
        lateral_offset=offset,
    )


def generate_candidates(scenario: Scenario, config: PlannerConfig) -> list[Trajectory]:
    """The candidate lattice: feasible accel targets x lateral offsets.

    Targets outside [accel_min, accel_max] are dropped; the maintain action
    (target 0, offset 0) is always present.
    """
    targets = [a for a in config.accel_targets if config.accel_min <= a <= config.accel_max]
    if 0.0 not in targets:
        targets.append(0.0)
    offsets = list(config.lateral_offsets)
    if 0.0 not in offsets:
        offsets.append(0.0)
    return [
        _build_candidate(scenario, config, a, o)
        for a in sorted(targets)
        for o in sorted(offsets)
    ]


# --------------------------------------------------------------------------
# Utility
# --------------------------------------------------------------------------


def _reference_arc(scenario: Scenario, config: PlannerConfig) -> float:
    h = scenario.horizon_s
    return scenario.ego.speed * h + max(config.accel_max, 0.0) * h * h / 2.0


def _static_cost(traj: Trajectory, scenario: Scenario, config: PlannerConfig) -> float:
    """World-independent part: jerk + legality - progress (as a cost >= 0)."""
    w = config.weights
    jerk_pen = float(np.mean(np.square(traj.long_jerk)))

    s, lat, tangent = corridor_frame(
        np.column_stack([traj.x, traj.y]), np.asarray(scenario.corridor.centerline)
    )
    dpsi = traj.heading - tangent
    half_l, half_w = 0.5 * scenario.ego.size[0], 0.5 * scenario.ego.size[1]
    extent = half_w * np.abs(np.cos(dpsi)) + half_l * np.abs(np.sin(dpsi))
    overhang = np.maximum(0.0, np.abs(lat) + extent - scenario.corridor.half_width)
    step_arc = np.concatenate([np.hypot(np.diff(traj.x), np.diff(traj.y)), [0.0]])
    legal_area = float(np.sum(overhang * step_arc))

    progress_gap = _reference_arc(scenario, config) - traj.progress_arc

    return w.jerk_weight * jerk_pen + w.legal_weight * legal_area + w.progress_weight * progress_gap


def utility(state: Scenario, traj: Trajectory, config: PlannerConfig) -> float:
    """Utility of one trajectory in one sampled world, clamped to [-M, 0]."""
    static = _static_cost(traj, state, config)
    packed = pack_objects(state.objects)
    w = config.weights
    first, hinge, _ = traj_world_metrics(
        np.ascontiguousarray(traj.poses_xyh()),
        0.5 * state.ego.size[0],
        0.5 * state.ego.size[1],
        packed,
        traj.dt,
        config.d_safe,
    )
    raw = -(static + w.safety_weight * hinge + (w.collision_penalty if first >= 0 else 0.0))
    return float(min(0.0, max(-config.utility_bound_m, raw)))


@dataclass(frozen=True)
class PlanResult:
    """Outcome of EUM planning: the chosen trajectory and all estimates."""

    best: Trajectory
    candidates: tuple[Trajectory, ...]
    eu: dict
    n: int
    seed: int


def _utility_batch(
    traj: Trajectory,
    worlds: Sequence[Scenario],
    packs: Sequence[np.ndarray],
    statics: float,
    config: PlannerConfig,
    pose_noise: np.ndarray | None = None,
) -> np.ndarray:
    w = config.weights
    xyh = np.ascontiguousarray(traj.poses_xyh())
    hl = 0.5 * worlds[0].ego.size[0]
    hw = 0.5 * worlds[0].ego.size[1]
    out = np.empty(len(worlds))
    for i, packed in enumerate(packs):
        if pose_noise is not None:
            jittered = xyh.copy()
            jittered[:, :2] += pose_noise[i]
            first, hinge, _ = traj_world_metrics(jittered, hl, hw, packed, traj.dt, config.d_safe)
        else:
            first, hinge, _ = traj_world_metrics(xyh, hl, hw, packed, traj.dt, config.d_safe)
        raw = -(statics + w.safety_weight * hinge + (w.collision_penalty if first >= 0 else 0.0))
        out[i] = min(0.0, max(-config.utility_bound_m, raw))
    return out


def evaluate_candidates(
    candidates: Sequence[Trajectory],
    worlds: Sequence[Scenario],
    base_scenario: Scenario,
    config: PlannerConfig,
    seed: int = 0,
) -> dict:
    """Per-action arrays of clamped utilities across the sampled worlds.

    With control_noise_sigma > 0, each (candidate, sample) evaluation jitters
    the candidate's per-step positions with seeded Gaussian noise (an
    execution-noise model; off by default so planning stays deterministic).
    """
    packs = [pack_objects(s.objects) for s in worlds]
    result = {}
    for traj in candidates:
        statics = _static_cost(traj, base_scenario, config)
        pose_noise = None
        if config.control_noise_sigma > 0.0:
            from .rng import normal_block

            flat = normal_block(
                seed,
                ("control-noise", traj.action_id),
                len(worlds),
                2 * traj.n_poses,
            )
            pose_noise = config.control_noise_sigma * flat.reshape(
                len(worlds), traj.n_poses, 2
            )
        result[traj.action_id] = _utility_batch(traj, worlds, packs, statics, config, pose_noise)
    return result


def plan(
    distribution,
    config: PlannerConfig,
    spec: SampleSpec | None = None,
    candidates: Sequence[Trajectory] | None = None,
) -> PlanResult:
    """Pick the candidate with the highest estimated expected utility.

    Samples are shared across candidates; ties break to the smallest action
    id. Point masses are evaluated exactly (one world), regardless of spec.n.
    """
    if spec is None:
        spec = SampleSpec(n=1, seed=0)
    scenario = distribution.scenario
    if candidates is None:
        candidates = generate_candidates(scenario, config)
    if not candidates:
        raise MetricContractError("no candidates to plan over")

    if getattr(distribution, "is_point_mass", False) and config.control_noise_sigma == 0.0:
        worlds = [scenario]
    else:
        worlds = sample_states(distribution, spec, stream=0)

    per_action = evaluate_candidates(candidates, worlds, scenario, config, seed=spec.seed)
    eu = {
        aid: estimate_eu(lambda _s, v=vals: v, worlds, config.utility_bound_m)
        for aid, vals in per_action.items()
    }

    best_id = None
    best_eu = -math.inf
    for traj in candidates:
        e = eu[traj.action_id]
        if e > best_eu or (e == best_eu and (best_id is None or traj.action_id < best_id)):
            best_eu = e
            best_id = traj.action_id
    best = next(t for t in candidates if t.action_id == best_id)
    return PlanResult(best=best, candidates=tuple(candidates), eu=eu, n=spec.n, seed=spec.seed)
