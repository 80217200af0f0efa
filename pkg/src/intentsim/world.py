"""Static 2D world: areas, labeled objects, and unicycle base kinematics.

Scenario files are strict JSON (unknown keys rejected) so config typos fail
loudly instead of silently changing a trial.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

from .errors import DegenerateTarget, ParseError, ValidationError

TICK_DT = 0.1  # one shared 10 Hz clock for every loop

_EDGE_EPS = 1e-9


def wrap_angle(a: float) -> float:
    """Normalize an angle into (-pi, pi]."""
    a = math.fmod(a, math.tau)
    if a <= -math.pi:
        a += math.tau
    elif a > math.pi:
        a -= math.tau
    return a


@dataclass(frozen=True)
class Pose:
    x: float
    y: float
    heading: float  # radians, kept in (-pi, pi]

    def __post_init__(self):
        object.__setattr__(self, "heading", wrap_angle(self.heading))


@dataclass(frozen=True)
class VelocityCommand:
    v: float  # m/s forward
    omega: float  # rad/s yaw rate

    @classmethod
    def zero(cls) -> "VelocityCommand":
        return cls(0.0, 0.0)


@dataclass(frozen=True)
class Limits:
    v_max: float = 1.0
    omega_max: float = 2.0

    def clamp(self, cmd: VelocityCommand) -> VelocityCommand:
        v = min(max(cmd.v, -self.v_max), self.v_max)
        omega = min(max(cmd.omega, -self.omega_max), self.omega_max)
        return VelocityCommand(v, omega)


@dataclass(frozen=True)
class Relation:
    predicate: str  # "on" | "near"
    target: str  # object or area id


@dataclass(frozen=True)
class Area:
    id: str
    name: str
    polygon: tuple[tuple[float, float], ...]
    centroid: tuple[float, float] = field(init=False)

    def __post_init__(self):
        cx = sum(p[0] for p in self.polygon) / len(self.polygon)
        cy = sum(p[1] for p in self.polygon) / len(self.polygon)
        object.__setattr__(self, "centroid", (cx, cy))


@dataclass(frozen=True)
class WorldObject:
    id: str
    label: str
    category: str
    attributes: dict[str, str]
    relations: tuple[Relation, ...]
    position: tuple[float, float]
    graspability: float


@dataclass(frozen=True)
class Scenario:
    name: str
    areas: tuple[Area, ...]
    objects: tuple[WorldObject, ...]
    robot_start: Pose
    reach_radius: float
    ontology_path: str

    def area_by_id(self, area_id: str) -> Area | None:
        for a in self.areas:
            if a.id == area_id:
                return a
        return None

    def object_by_id(self, object_id: str) -> WorldObject | None:
        for o in self.objects:
            if o.id == object_id:
                return o
        return None


# ---------------------------------------------------------------------------
# geometry


def _on_segment(p, a, b) -> bool:
    cross = (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0])
    if abs(cross) > _EDGE_EPS:
        return False
    dot = (p[0] - a[0]) * (b[0] - a[0]) + (p[1] - a[1]) * (b[1] - a[1])
    if dot < -_EDGE_EPS:
        return False
    sq_len = (b[0] - a[0]) ** 2 + (b[1] - a[1]) ** 2
    return dot <= sq_len + _EDGE_EPS


def point_in_polygon(point: tuple[float, float], polygon) -> bool:
    """Even-odd containment test, boundary-inclusive."""
    n = len(polygon)
    for i in range(n):
        if _on_segment(point, polygon[i], polygon[(i + 1) % n]):
            return True
    x, y = point
    inside = False
    for i in range(n):
        ax, ay = polygon[i]
        bx, by = polygon[(i + 1) % n]
        if (ay > y) != (by > y):
            x_cross = ax + (y - ay) * (bx - ax) / (by - ay)
            if x < x_cross:
                inside = not inside
    return inside


def _segments_intersect(p1, p2, p3, p4) -> bool:
    def orient(a, b, c):
        val = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
        if abs(val) <= _EDGE_EPS:
            return 0
        return 1 if val > 0 else -1

    o1, o2 = orient(p1, p2, p3), orient(p1, p2, p4)
    o3, o4 = orient(p3, p4, p1), orient(p3, p4, p2)
    if o1 != o2 and o3 != o4:
        return True
    if o1 == 0 and _on_segment(p3, p1, p2):
        return True
    if o2 == 0 and _on_segment(p4, p1, p2):
        return True
    if o3 == 0 and _on_segment(p1, p3, p4):
        return True
    if o4 == 0 and _on_segment(p2, p3, p4):
        return True
    return False


def polygon_is_simple(polygon) -> bool:
    """True when no two non-adjacent edges intersect."""
    n = len(polygon)
    if n < 3:
        return False
    edges = [(polygon[i], polygon[(i + 1) % n]) for i in range(n)]
    for i in range(n):
        for j in range(i + 1, n):
            if j == i + 1 or (i == 0 and j == n - 1):
                continue  # adjacent edges share a vertex by construction
            if _segments_intersect(*edges[i], *edges[j]):
                return False
    return True


def sample_point_in_polygon(polygon, rng) -> tuple[float, float]:
    """Uniform point inside a polygon via bounding-box rejection."""
    xs = [p[0] for p in polygon]
    ys = [p[1] for p in polygon]
    while True:
        x = rng.uniform(min(xs), max(xs))
        y = rng.uniform(min(ys), max(ys))
        if point_in_polygon((x, y), polygon):
            return (x, y)


# ---------------------------------------------------------------------------
# operations


def step_kinematics(pose: Pose, cmd: VelocityCommand, dt: float, limits: Limits = Limits()) -> Pose:
    """Integrate the unicycle model one step; commands clamped to limits first."""
    if dt <= 0:
        raise ValueError(f"dt must be > 0, got {dt}")
    cmd = limits.clamp(cmd)
    x = pose.x + cmd.v * math.cos(pose.heading) * dt
    y = pose.y + cmd.v * math.sin(pose.heading) * dt
    return Pose(x, y, wrap_angle(pose.heading + cmd.omega * dt))


def area_of(point: tuple[float, float], scenario: Scenario) -> str | None:
    """Id of the containing area, or None; shared boundaries resolve to the lowest id."""
    hits = sorted(a.id for a in scenario.areas if point_in_polygon(point, a.polygon))
    return hits[0] if hits else None


def bearing_to(pose: Pose, target: tuple[float, float]) -> float:
    """Heading-relative angle toward a point, in (-pi, pi]."""
    dx = target[0] - pose.x
    dy = target[1] - pose.y
    if dx * dx + dy * dy < 1e-24:
        raise DegenerateTarget(f"target {target} coincides with robot position")
    return wrap_angle(math.atan2(dy, dx) - pose.heading)


def distance(a: tuple[float, float], b: tuple[float, float]) -> float:
    return math.hypot(b[0] - a[0], b[1] - a[1])


# ---------------------------------------------------------------------------
# loading

_SCENARIO_KEYS = {"name", "areas", "objects", "robot_start", "reach_radius", "ontology"}
_AREA_KEYS = {"id", "name", "polygon"}
_OBJECT_KEYS = {"id", "label", "category", "attributes", "relations", "position", "graspability"}
_RELATION_KEYS = {"predicate", "target"}
_POSE_KEYS = {"x", "y", "heading"}


def _reject_unknown(obj: dict, allowed: set, path: str) -> None:
    unknown = set(obj) - allowed
    if unknown:
        raise ParseError(f"{path}: unknown keys {sorted(unknown)}")


def _as_point(value, path: str) -> tuple[float, float]:
    if not isinstance(value, (list, tuple)) or len(value) != 2:
        raise ParseError(f"{path}: expected [x, y]")
    return (float(value[0]), float(value[1]))


def scenario_from_dict(raw: dict, base_dir: str | Path = ".") -> Scenario:
    """Build and validate a Scenario from parsed JSON."""
    if not isinstance(raw, dict):
        raise ParseError("scenario: top level must be an object")
    _reject_unknown(raw, _SCENARIO_KEYS, "scenario")
    for key in _SCENARIO_KEYS:
        if key not in raw:
            raise ParseError(f"scenario: missing key '{key}'")

    areas = []
    for i, a in enumerate(raw["areas"]):
        _reject_unknown(a, _AREA_KEYS, f"areas[{i}]")
        polygon = tuple(_as_point(p, f"areas[{i}].polygon[{j}]") for j, p in enumerate(a["polygon"]))
        if len(polygon) < 3:
            raise ValidationError(f"areas[{i}].polygon: need at least 3 vertices")
        if not polygon_is_simple(polygon):
            raise ValidationError(f"areas[{i}].polygon: polygon is self-intersecting")
        areas.append(Area(id=str(a["id"]), name=str(a["name"]), polygon=polygon))
    area_ids = [a.id for a in areas]
    if len(set(area_ids)) != len(area_ids):
        raise ValidationError("areas: duplicate area ids")

    objects = []
    for i, o in enumerate(raw["objects"]):
        _reject_unknown(o, _OBJECT_KEYS, f"objects[{i}]")
        relations = []
        for j, r in enumerate(o.get("relations", [])):
            _reject_unknown(r, _RELATION_KEYS, f"objects[{i}].relations[{j}]")
            if r["predicate"] not in ("on", "near"):
                raise ValidationError(f"objects[{i}].relations[{j}].predicate: must be 'on' or 'near'")
            relations.append(Relation(str(r["predicate"]), str(r["target"])))
        grasp = float(o["graspability"])
        if not (0.0 < grasp <= 1.0):
            raise ValidationError(f"objects[{i}].graspability: must be in (0, 1], got {grasp}")
        label = str(o["label"])
        if not label:
            raise ValidationError(f"objects[{i}].label: must be nonempty")
        objects.append(
            WorldObject(
                id=str(o["id"]),
                label=label,
                category=str(o["category"]),
                attributes={str(k): str(v) for k, v in o.get("attributes", {}).items()},
                relations=tuple(relations),
                position=_as_point(o["position"], f"objects[{i}].position"),
                graspability=grasp,
            )
        )
    object_ids = [o.id for o in objects]
    if len(set(object_ids)) != len(object_ids):
        raise ValidationError("objects: duplicate object ids")

    start = raw["robot_start"]
    _reject_unknown(start, _POSE_KEYS, "robot_start")
    robot_start = Pose(float(start["x"]), float(start["y"]), float(start.get("heading", 0.0)))

    reach_radius = float(raw["reach_radius"])
    if reach_radius <= 0:
        raise ValidationError(f"reach_radius: must be > 0, got {reach_radius}")

    scenario = Scenario(
        name=str(raw["name"]),
        areas=tuple(areas),
        objects=tuple(objects),
        robot_start=robot_start,
        reach_radius=reach_radius,
        ontology_path=str(Path(base_dir) / raw["ontology"]),
    )

    known_ids = set(area_ids) | set(object_ids)
    for i, o in enumerate(scenario.objects):
        containing = [a.id for a in scenario.areas if point_in_polygon(o.position, a.polygon)]
        if len(containing) != 1:
            raise ValidationError(
                f"objects[{i}] '{o.id}': position {list(o.position)} lies inside "
                f"{len(containing)} areas, expected exactly 1"
            )
        for j, r in enumerate(o.relations):
            if r.target not in known_ids:
                raise ValidationError(f"objects[{i}].relations[{j}]: unknown target '{r.target}'")
    return scenario


def load_scenario(path: str | Path) -> Scenario:
    """Load a scenario file; deterministic for identical bytes."""
    path = Path(path)
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except OSError as e:
        raise ParseError(f"cannot read scenario file {path}: {e}") from e
    except json.JSONDecodeError as e:
        raise ParseError(f"malformed scenario file {path}: {e}") from e
    return scenario_from_dict(raw, base_dir=path.parent)


def scenario_to_dict(scenario: Scenario) -> dict:
    """Inverse of scenario_from_dict (ontology path is kept as resolved)."""
    return {
        "name": scenario.name,
        "areas": [
            {"id": a.id, "name": a.name, "polygon": [[p[0], p[1]] for p in a.polygon]} for a in scenario.areas
        ],
        "objects": [
            {
                "id": o.id,
                "label": o.label,
                "category": o.category,
                "attributes": dict(o.attributes),
                "relations": [{"predicate": r.predicate, "target": r.target} for r in o.relations],
                "position": [o.position[0], o.position[1]],
                "graspability": o.graspability,
            }
            for o in scenario.objects
        ],
        "robot_start": {"x": scenario.robot_start.x, "y": scenario.robot_start.y, "heading": scenario.robot_start.heading},
        "reach_radius": scenario.reach_radius,
        "ontology": scenario.ontology_path,
    }
