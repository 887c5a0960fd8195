"""Traffic scenarios, perception-noise injection, and scenario distributions.

A :class:`Scenario` is one planning frame: the ego vehicle, a set of
perceived objects (each a rectangle with a constant-velocity motion model),
and the legal driving corridor. Scenarios serialise to the ``tip-scenario/1``
JSON schema.

Perception errors come in two forms:

* :func:`inject` applies a *discrete* corruption described by a
  :class:`NoiseSpec` — phantom objects, missed detections, or Gaussian
  perturbation of location / yaw / speed / size. It is a pure function of
  ``(scenario, noise)`` including the noise seed.
* :func:`as_distribution` wraps a scenario as a sampleable distribution for
  the estimator: a point mass by default, or a per-object Gaussian
  perturbation model when an :class:`GaussianObjectNoise` is given. The ego
  state is never perturbed (it is the planner's own state, not a percept).
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .errors import SchemaError
from .rng import normal_block, stream, uniform_block

__all__ = [
    "CATEGORIES",
    "NOISE_KINDS",
    "WorldObject",
    "EgoState",
    "RoadCorridor",
    "Scenario",
    "NoiseSpec",
    "GaussianObjectNoise",
    "PointMassScenario",
    "ScenarioDistribution",
    "inject",
    "save_scenario",
    "load_scenario",
    "scenario_to_dict",
    "scenario_from_dict",
    "as_distribution",
    "synthetic_suite",
]

SCHEMA_ID = "tip-scenario/1"
CATEGORIES = ("vehicle", "pedestrian", "cyclist", "cone")
NOISE_KINDS = ("false_positive", "miss_detection", "location", "yaw", "velocity", "size")

# Phantom detections are placed uniformly in this box in the ego frame:
# 70 m longitudinally (10 m behind to 60 m ahead) x 30 m laterally.
FP_BOX_LONG = (-10.0, 60.0)
FP_BOX_LAT = (-15.0, 15.0)
FP_HEADING_SIGMA = 0.2  # rad
FP_SPEED_SIGMA = 1.0  # m/s
MIN_SIZE = 0.1  # m; size noise never shrinks an extent below this


def wrap_heading(h: float) -> float:
    """Wrap an angle to (-pi, pi]."""
    w = math.remainder(float(h), 2.0 * math.pi)
    if w <= -math.pi:
        w += 2.0 * math.pi
    return w


def _require(cond: bool, message: str) -> None:
    if not cond:
        raise SchemaError(message)


def _check_pose_fields(label: str, center, heading: float, speed: float, size) -> None:
    _require(
        isinstance(center, (tuple, list)) and len(center) == 2
        and all(math.isfinite(float(c)) for c in center),
        f"{label}.center must be a finite (x, y) pair",
    )
    _require(math.isfinite(float(heading)), f"{label}.heading must be finite")
    _require(
        -math.pi < float(heading) <= math.pi + 1e-12,
        f"{label}.heading must lie in (-pi, pi], got {heading}",
    )
    _require(
        math.isfinite(float(speed)) and float(speed) >= 0.0,
        f"{label}.speed must be >= 0, got {speed}",
    )
    _require(
        isinstance(size, (tuple, list)) and len(size) == 2
        and all(math.isfinite(float(s)) and float(s) > 0 for s in size),
        f"{label}.size must be a positive (length, width) pair",
    )


@dataclass(frozen=True)
class WorldObject:
    """A perceived object: oriented rectangle + constant-velocity motion."""

    object_id: str
    category: str
    center: tuple[float, float]
    heading: float
    speed: float
    size: tuple[float, float]  # (length, width)

    def __post_init__(self) -> None:
        _require(bool(self.object_id), "object.id must be a non-empty string")
        _require(
            self.category in CATEGORIES,
            f"object {self.object_id!r}: category must be one of {CATEGORIES}, "
            f"got {self.category!r}",
        )
        _check_pose_fields(f"object {self.object_id!r}", self.center, self.heading, self.speed, self.size)
        object.__setattr__(self, "center", (float(self.center[0]), float(self.center[1])))
        object.__setattr__(self, "size", (float(self.size[0]), float(self.size[1])))
        object.__setattr__(self, "heading", float(self.heading))
        object.__setattr__(self, "speed", float(self.speed))

    @property
    def velocity(self) -> tuple[float, float]:
        return (self.speed * math.cos(self.heading), self.speed * math.sin(self.heading))


@dataclass(frozen=True)
class EgoState:
    """The ego vehicle's own pose (known exactly, never a percept)."""

    center: tuple[float, float]
    heading: float
    speed: float
    size: tuple[float, float]

    def __post_init__(self) -> None:
        _check_pose_fields("ego", self.center, self.heading, self.speed, self.size)
        object.__setattr__(self, "center", (float(self.center[0]), float(self.center[1])))
        object.__setattr__(self, "size", (float(self.size[0]), float(self.size[1])))
        object.__setattr__(self, "heading", float(self.heading))
        object.__setattr__(self, "speed", float(self.speed))


@dataclass(frozen=True)
class RoadCorridor:
    """The legal driving band: a polyline centreline with a half-width."""

    centerline: tuple[tuple[float, float], ...]
    half_width: float

    def __post_init__(self) -> None:
        pts = tuple((float(x), float(y)) for x, y in self.centerline)
        _require(len(pts) >= 2, "corridor.centerline needs at least 2 points")
        for (x1, y1), (x2, y2) in zip(pts, pts[1:]):
            _require(
                math.hypot(x2 - x1, y2 - y1) > 0.0,
                "corridor.centerline must have strictly increasing arclength "
                "(repeated point found)",
            )
        _require(self.half_width > 0.0, f"corridor.half_width must be > 0, got {self.half_width}")
        object.__setattr__(self, "centerline", pts)
        object.__setattr__(self, "half_width", float(self.half_width))


@dataclass(frozen=True)
class Scenario:
    """One planning frame: ego + objects + corridor + horizon."""

    scenario_id: str
    ego: EgoState
    objects: tuple[WorldObject, ...]
    corridor: RoadCorridor
    horizon_s: float = 3.0
    dt_s: float = 0.1

    def __post_init__(self) -> None:
        _require(bool(self.scenario_id), "scenario_id must be a non-empty string")
        object.__setattr__(self, "objects", tuple(self.objects))
        ids = [o.object_id for o in self.objects]
        _require(len(ids) == len(set(ids)), f"object ids must be unique, got {sorted(ids)}")
        _require(self.horizon_s > 0, f"horizon_s must be > 0, got {self.horizon_s}")
        _require(self.dt_s > 0, f"dt_s must be > 0, got {self.dt_s}")
        steps = self.horizon_s / self.dt_s
        _require(
            abs(steps - round(steps)) < 1e-9,
            f"horizon_s/dt_s must be an integer step count, got {steps}",
        )

    @property
    def n_steps(self) -> int:
        return int(round(self.horizon_s / self.dt_s))


# --------------------------------------------------------------------------
# Noise injection
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class NoiseSpec:
    """One perception-noise corruption.

    kind / parameter:
      false_positive -> count (int >= 0 phantom vehicles)
      miss_detection -> rate (drop probability in [0, 1])
      location|yaw|velocity|size -> sigma (>= 0; Gaussian std dev)
    """

    kind: str
    seed: int
    sigma: float = 0.0
    rate: float = 0.0
    count: int = 0

    def __post_init__(self) -> None:
        _require(self.kind in NOISE_KINDS, f"noise.kind must be one of {NOISE_KINDS}, got {self.kind!r}")
        _require(int(self.seed) == self.seed and self.seed >= 0, "noise.seed must be a non-negative integer")
        if self.kind == "false_positive":
            _require(int(self.count) == self.count and self.count >= 0, f"noise.count must be an integer >= 0, got {self.count}")
        elif self.kind == "miss_detection":
            _require(0.0 <= self.rate <= 1.0, f"noise.rate must lie in [0, 1], got {self.rate}")
        else:
            _require(self.sigma >= 0.0, f"noise.sigma must be >= 0, got {self.sigma}")

    @property
    def magnitude(self) -> float:
        if self.kind == "false_positive":
            return float(self.count)
        if self.kind == "miss_detection":
            return float(self.rate)
        return float(self.sigma)


def _unique_id(base: str, taken: set[str]) -> str:
    if base not in taken:
        return base
    k = 1
    while f"{base}~{k}" in taken:
        k += 1
    return f"{base}~{k}"


def inject(scenario: Scenario, noise: NoiseSpec) -> Scenario:
    """Apply one noise corruption; a pure function of (scenario, noise)."""
    kind = noise.kind

    if kind == "false_positive":
        if noise.count == 0:
            return scenario
        g = stream(noise.seed, "fp", scenario.scenario_id)
        ego = scenario.ego
        ch, sh = math.cos(ego.heading), math.sin(ego.heading)
        taken = {o.object_id for o in scenario.objects}
        ghosts = []
        for i in range(noise.count):
            lon = g.uniform(*FP_BOX_LONG)
            lat = g.uniform(*FP_BOX_LAT)
            x = ego.center[0] + ch * lon - sh * lat
            y = ego.center[1] + sh * lon + ch * lat
            heading = wrap_heading(ego.heading + g.normal(0.0, FP_HEADING_SIGMA))
            speed = max(0.0, ego.speed + g.normal(0.0, FP_SPEED_SIGMA))
            oid = _unique_id(f"ghost_{i}", taken)
            taken.add(oid)
            ghosts.append(
                WorldObject(oid, "vehicle", (x, y), heading, speed, (4.5, 2.0))
            )
        return replace(scenario, objects=scenario.objects + tuple(ghosts))

    if kind == "miss_detection":
        if noise.rate == 0.0 or not scenario.objects:
            return scenario
        g = stream(noise.seed, "miss", scenario.scenario_id)
        u = g.random(len(scenario.objects))
        kept = tuple(o for o, ui in zip(scenario.objects, u) if ui >= noise.rate)
        return replace(scenario, objects=kept)

    # Gaussian perturbation kinds
    if noise.sigma == 0.0 or not scenario.objects:
        return scenario
    g = stream(noise.seed, kind, scenario.scenario_id)
    new_objects = []
    for obj in scenario.objects:
        if kind == "location":
            dx, dy = g.normal(0.0, noise.sigma, size=2)
            obj = replace(obj, center=(obj.center[0] + dx, obj.center[1] + dy))
        elif kind == "yaw":
            obj = replace(obj, heading=wrap_heading(obj.heading + g.normal(0.0, noise.sigma)))
        elif kind == "velocity":
            obj = replace(obj, speed=max(0.0, obj.speed + g.normal(0.0, noise.sigma)))
        else:  # size
            dl, dw = g.normal(0.0, noise.sigma, size=2)
            obj = replace(
                obj,
                size=(max(MIN_SIZE, obj.size[0] + dl), max(MIN_SIZE, obj.size[1] + dw)),
            )
        new_objects.append(obj)
    return replace(scenario, objects=tuple(new_objects))


# --------------------------------------------------------------------------
# Serialisation (tip-scenario/1)
# --------------------------------------------------------------------------


def scenario_to_dict(s: Scenario) -> dict:
    return {
        "schema": SCHEMA_ID,
        "scenario_id": s.scenario_id,
        "ego": {
            "center": list(s.ego.center),
            "heading": s.ego.heading,
            "speed": s.ego.speed,
            "size": list(s.ego.size),
        },
        "objects": [
            {
                "id": o.object_id,
                "category": o.category,
                "center": list(o.center),
                "heading": o.heading,
                "speed": o.speed,
                "size": list(o.size),
            }
            for o in s.objects
        ],
        "corridor": {
            "centerline": [list(p) for p in s.corridor.centerline],
            "half_width": s.corridor.half_width,
        },
        "horizon_s": s.horizon_s,
        "dt_s": s.dt_s,
    }


def _take(mapping: dict, key: str, context: str):
    if key not in mapping:
        raise SchemaError(f"missing required field {context}.{key}")
    return mapping[key]


def _warn_extras(mapping: dict, known: set[str], context: str) -> None:
    extras = set(mapping) - known
    if extras:
        warnings.warn(
            f"ignoring unknown fields in {context}: {sorted(extras)}",
            stacklevel=3,
        )


def scenario_from_dict(d: dict) -> Scenario:
    if not isinstance(d, dict):
        raise SchemaError("scenario document must be a JSON object")
    schema = _take(d, "schema", "scenario")
    if schema != SCHEMA_ID:
        raise SchemaError(f"scenario.schema must be {SCHEMA_ID!r}, got {schema!r}")
    _warn_extras(
        d,
        {"schema", "scenario_id", "ego", "objects", "corridor", "horizon_s", "dt_s"},
        "scenario",
    )

    ego_d = _take(d, "ego", "scenario")
    _warn_extras(ego_d, {"center", "heading", "speed", "size"}, "scenario.ego")
    ego = EgoState(
        center=tuple(_take(ego_d, "center", "ego")),
        heading=_take(ego_d, "heading", "ego"),
        speed=_take(ego_d, "speed", "ego"),
        size=tuple(_take(ego_d, "size", "ego")),
    )

    objects = []
    for i, od in enumerate(_take(d, "objects", "scenario")):
        ctx = f"objects[{i}]"
        _warn_extras(od, {"id", "category", "center", "heading", "speed", "size"}, ctx)
        objects.append(
            WorldObject(
                object_id=_take(od, "id", ctx),
                category=_take(od, "category", ctx),
                center=tuple(_take(od, "center", ctx)),
                heading=_take(od, "heading", ctx),
                speed=_take(od, "speed", ctx),
                size=tuple(_take(od, "size", ctx)),
            )
        )

    cor_d = _take(d, "corridor", "scenario")
    _warn_extras(cor_d, {"centerline", "half_width"}, "scenario.corridor")
    corridor = RoadCorridor(
        centerline=tuple(tuple(p) for p in _take(cor_d, "centerline", "corridor")),
        half_width=_take(cor_d, "half_width", "corridor"),
    )

    return Scenario(
        scenario_id=_take(d, "scenario_id", "scenario"),
        ego=ego,
        objects=tuple(objects),
        corridor=corridor,
        horizon_s=_take(d, "horizon_s", "scenario"),
        dt_s=_take(d, "dt_s", "scenario"),
    )


def save_scenario(s: Scenario, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(scenario_to_dict(s), fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_scenario(path: str) -> Scenario:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as e:
        raise SchemaError(f"scenario file {path!r} is not valid JSON: {e}") from e
    return scenario_from_dict(doc)


# --------------------------------------------------------------------------
# Scenario distributions (estimator adapters)
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class GaussianObjectNoise:
    """Per-object Gaussian perception-noise model (std devs; 0 disables)."""

    loc_sigma: float = 0.0
    yaw_sigma: float = 0.0
    speed_sigma: float = 0.0
    size_sigma: float = 0.0

    def __post_init__(self) -> None:
        for name in ("loc_sigma", "yaw_sigma", "speed_sigma", "size_sigma"):
            _require(getattr(self, name) >= 0.0, f"{name} must be >= 0")

    @property
    def is_null(self) -> bool:
        return (
            self.loc_sigma == 0.0
            and self.yaw_sigma == 0.0
            and self.speed_sigma == 0.0
            and self.size_sigma == 0.0
        )


@dataclass(frozen=True)
class PointMassScenario:
    """Degenerate distribution: every sample is the scenario itself."""

    scenario: Scenario

    def sample(self, n: int, seed: int, stream: int = 0) -> list[Scenario]:
        return [self.scenario] * n

    @property
    def is_point_mass(self) -> bool:
        return True


# Draw layout: 6 standard normals per object per sample
# (dx, dy, dyaw, dspeed, dlength, dwidth), consumed in object order.
_DRAWS_PER_OBJECT = 6


@dataclass(frozen=True)
class ScenarioDistribution:
    """Scenario with i.i.d. Gaussian perception noise on every object."""

    scenario: Scenario
    noise: GaussianObjectNoise

    def sample(self, n: int, seed: int, stream: int = 0) -> list[Scenario]:
        objs = self.scenario.objects
        if not objs or self.noise.is_null:
            return [self.scenario] * n
        k = _DRAWS_PER_OBJECT * len(objs)
        z = normal_block(seed, ("scen", stream), n, k)
        nz = self.noise
        out = []
        for i in range(n):
            row = z[i]
            new_objects = []
            for j, obj in enumerate(objs):
                b = _DRAWS_PER_OBJECT * j
                center = (
                    obj.center[0] + nz.loc_sigma * row[b + 0],
                    obj.center[1] + nz.loc_sigma * row[b + 1],
                )
                heading = wrap_heading(obj.heading + nz.yaw_sigma * row[b + 2])
                speed = max(0.0, obj.speed + nz.speed_sigma * row[b + 3])
                size = (
                    max(MIN_SIZE, obj.size[0] + nz.size_sigma * row[b + 4]),
                    max(MIN_SIZE, obj.size[1] + nz.size_sigma * row[b + 5]),
                )
                new_objects.append(
                    replace(obj, center=center, heading=heading, speed=speed, size=size)
                )
            out.append(replace(self.scenario, objects=tuple(new_objects)))
        return out

    @property
    def is_point_mass(self) -> bool:
        return False


def as_distribution(
    scenario: Scenario, object_noise: GaussianObjectNoise | None = None
):
    """Wrap a scenario for the estimator: point mass, or Gaussian-perturbed."""
    if object_noise is None or object_noise.is_null:
        return PointMassScenario(scenario)
    return ScenarioDistribution(scenario, object_noise)


# --------------------------------------------------------------------------
# Synthetic scenario suite (drives randomised and sweep tests)
# --------------------------------------------------------------------------


def synthetic_suite(count: int, master_seed: int) -> list[Scenario]:
    """Deterministic family of plausible driving frames.

    Ego drives along a straight corridor; each scenario mixes slower lead
    vehicles in-lane (braking pressure), crossing pedestrians/cyclists near
    the corridor edge, and parked vehicles just outside it — so every noise
    kind has something task-relevant to corrupt.
    """
    scenarios = []
    for idx in range(count):
        g = stream(master_seed, "synthetic", idx)
        ego_speed = float(g.uniform(8.0, 14.0))
        ego = EgoState(center=(-2.25, 0.0), heading=0.0, speed=ego_speed, size=(4.5, 2.0))
        corridor = RoadCorridor(centerline=((-30.0, 0.0), (90.0, 0.0)), half_width=3.0)

        objects: list[WorldObject] = []
        n_lead = 1 + int(g.random() < 0.5)
        x_lead = 12.0
        for j in range(n_lead):
            x_lead += float(g.uniform(8.0, 25.0))
            objects.append(
                WorldObject(
                    object_id=f"lead_{j}",
                    category="vehicle",
                    center=(x_lead, float(g.uniform(-0.8, 0.8))),
                    heading=wrap_heading(float(g.normal(0.0, 0.05))),
                    speed=float(g.uniform(0.0, 0.7 * ego_speed)),
                    size=(4.5, 2.0),
                )
            )
        n_cross = int(g.integers(0, 3))
        for j in range(n_cross):
            side = 1.0 if g.random() < 0.5 else -1.0
            cat = "pedestrian" if g.random() < 0.6 else "cyclist"
            objects.append(
                WorldObject(
                    object_id=f"cross_{j}",
                    category=cat,
                    center=(float(g.uniform(6.0, 40.0)), side * float(g.uniform(2.6, 6.0))),
                    heading=wrap_heading(-side * math.pi / 2 + float(g.normal(0.0, 0.3))),
                    speed=float(g.uniform(0.3, 2.0)) if cat == "pedestrian" else float(g.uniform(1.0, 4.0)),
                    size=(0.6, 0.6) if cat == "pedestrian" else (1.8, 0.6),
                )
            )
        n_parked = int(g.integers(0, 3))
        for j in range(n_parked):
            side = 1.0 if g.random() < 0.5 else -1.0
            objects.append(
                WorldObject(
                    object_id=f"parked_{j}",
                    category="vehicle",
                    center=(float(g.uniform(8.0, 50.0)), side * float(g.uniform(3.6, 5.5))),
                    heading=0.0,
                    speed=0.0,
                    size=(4.5, 2.0),
                )
            )
        scenarios.append(
            Scenario(
                scenario_id=f"syn_{master_seed}_{idx}",
                ego=ego,
                objects=tuple(objects),
                corridor=corridor,
            )
        )
    return scenarios
