"""World model and trace ingestion.

The emulator consumes two kinds of input produced by a traffic simulator:
a static building map (JSON array of polygons) and a per-step trace of
vehicle states (JSON lines, one step per line). Everything downstream
works in a local planar frame in meters; geodetic coordinates appear only
at the output boundary, converted through the scenario origin with an
equirectangular projection (sub-centimeter error at city scale, exactly
invertible).

File formats
------------
Buildings: ``[{"id": "b0001", "vertices": [[x, y], ...]}, ...]``
Trace:     one JSON object per line,
           ``{"t": 1.5, "ego": V, "vehicles": [V, ...]}`` with
           ``V = {"id", "x", "y", "speed", "heading"[, "length", "width",
           "height"]}``.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Iterator

# Default vehicle footprint when the trace omits dimensions (typical
# passenger car), and the antenna mount height above the roof.
DEFAULT_LENGTH = 4.5
DEFAULT_WIDTH = 1.8
DEFAULT_HEIGHT = 1.5
DEFAULT_ANTENNA_OFFSET = 0.1

EARTH_RADIUS_M = 6_371_008.8  # IUGG mean radius

TWO_PI = 2.0 * math.pi


class ScenarioError(Exception):
    """Base class for scenario ingestion problems."""


class FormatError(ScenarioError):
    """Malformed input file; carries a locator (line or record index)."""

    def __init__(self, message: str, *, path: str | None = None, locator: str | None = None):
        self.path = path
        self.locator = locator
        where = f"{path or '<input>'}" + (f", {locator}" if locator else "")
        super().__init__(f"{where}: {message}")


class InvalidPolygonError(ScenarioError):
    """Building polygon violating an invariant; names the offending id."""

    def __init__(self, building_id: str, reason: str):
        self.building_id = building_id
        super().__init__(f"building {building_id!r}: {reason}")


class NonMonotoneTimestampError(FormatError):
    pass


class MissingEgoError(FormatError):
    pass


@dataclass(frozen=True, slots=True)
class Position:
    """Point in the local planar frame: x east, y north, meters."""

    x: float
    y: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise ValueError(f"non-finite position ({self.x}, {self.y})")

    def distance_to(self, other: "Position") -> float:
        return math.hypot(self.x - other.x, self.y - other.y)


@dataclass(frozen=True, slots=True)
class GeoPosition:
    """Geodetic fix in degrees, WGS-ish spherical approximation."""

    lat: float
    lon: float


def planar_to_geodetic(origin_lat: float, origin_lon: float, pos: Position) -> GeoPosition:
    """Equirectangular projection inverse: local meters -> degrees."""
    lat = origin_lat + math.degrees(pos.y / EARTH_RADIUS_M)
    lon = origin_lon + math.degrees(pos.x / (EARTH_RADIUS_M * math.cos(math.radians(origin_lat))))
    return GeoPosition(lat, lon)


def geodetic_to_planar(origin_lat: float, origin_lon: float, geo: GeoPosition) -> Position:
    """Equirectangular projection: degrees -> local meters."""
    y = math.radians(geo.lat - origin_lat) * EARTH_RADIUS_M
    x = math.radians(geo.lon - origin_lon) * EARTH_RADIUS_M * math.cos(math.radians(origin_lat))
    return Position(x, y)


@dataclass(frozen=True, slots=True)
class VehicleState:
    id: str
    position: Position
    speed: float
    heading: float  # radians CCW from east, normalized to [0, 2*pi)
    length: float = DEFAULT_LENGTH
    width: float = DEFAULT_WIDTH
    height: float = DEFAULT_HEIGHT

    def __post_init__(self):
        if self.length <= 0 or self.width <= 0 or self.height <= 0:
            raise ValueError(f"vehicle {self.id!r}: dimensions must be positive")
        if not math.isfinite(self.heading):
            raise ValueError(f"vehicle {self.id!r}: non-finite heading")
        object.__setattr__(self, "heading", self.heading % TWO_PI)


@dataclass(frozen=True)
class Building:
    """Closed 2D polygon obstacle; the last edge back to the first vertex
    is implicit. Validated: >= 3 vertices, no degenerate edges, no
    self-intersection."""

    id: str
    vertices: tuple[Position, ...]

    def __post_init__(self):
        _validate_polygon(self.id, self.vertices)

    def edges(self) -> Iterator[tuple[Position, Position]]:
        n = len(self.vertices)
        for i in range(n):
            yield self.vertices[i], self.vertices[(i + 1) % n]


def _orient(ax, ay, bx, by, cx, cy) -> float:
    return (bx - ax) * (cy - ay) - (by - ay) * (cx - ax)


def _on_segment(ax, ay, bx, by, px, py) -> bool:
    # assumes p collinear with a-b
    return min(ax, bx) <= px <= max(ax, bx) and min(ay, by) <= py <= max(ay, by)


def _segments_touch(p1, p2, q1, q2) -> bool:
    """Closed-segment intersection; collinear overlap counts."""
    d1 = _orient(q1[0], q1[1], q2[0], q2[1], p1[0], p1[1])
    d2 = _orient(q1[0], q1[1], q2[0], q2[1], p2[0], p2[1])
    d3 = _orient(p1[0], p1[1], p2[0], p2[1], q1[0], q1[1])
    d4 = _orient(p1[0], p1[1], p2[0], p2[1], q2[0], q2[1])
    if ((d1 > 0) != (d2 > 0) and d1 != 0 and d2 != 0) and ((d3 > 0) != (d4 > 0) and d3 != 0 and d4 != 0):
        return True
    if d1 == 0 and _on_segment(q1[0], q1[1], q2[0], q2[1], p1[0], p1[1]):
        return True
    if d2 == 0 and _on_segment(q1[0], q1[1], q2[0], q2[1], p2[0], p2[1]):
        return True
    if d3 == 0 and _on_segment(p1[0], p1[1], p2[0], p2[1], q1[0], q1[1]):
        return True
    if d4 == 0 and _on_segment(p1[0], p1[1], p2[0], p2[1], q2[0], q2[1]):
        return True
    return False


def _validate_polygon(building_id: str, vertices: tuple[Position, ...]) -> None:
    n = len(vertices)
    if n < 3:
        raise InvalidPolygonError(building_id, f"needs >= 3 vertices, got {n}")
    pts = [(v.x, v.y) for v in vertices]
    for i in range(n):
        if pts[i] == pts[(i + 1) % n]:
            raise InvalidPolygonError(building_id, f"degenerate zero-length edge at vertex {i}")
    # Non-adjacent edge pairs must not touch at all; adjacent pairs only at
    # the shared vertex (a collinear fold-back is a self-intersection too).
    for i in range(n):
        a1, a2 = pts[i], pts[(i + 1) % n]
        for j in range(i + 1, n):
            if j == i or (j + 1) % n == i or (i + 1) % n == j:
                # adjacent: reject only if the far endpoints fold onto the
                # neighbouring edge
                b1, b2 = pts[j], pts[(j + 1) % n]
                shared = a2 if b1 == a2 else (a1 if b2 == a1 else None)
                if shared is None:
                    continue
                far_a = a1 if shared == a2 else a2
                far_b = b2 if shared == b1 else b1
                if _orient(*shared, *far_a, *far_b) == 0 and (
                    _on_segment(*shared, *far_a, *far_b) or _on_segment(*shared, *far_b, *far_a)
                ):
                    raise InvalidPolygonError(building_id, f"edges {i} and {j} fold back")
                continue
            b1, b2 = pts[j], pts[(j + 1) % n]
            if _segments_touch(a1, a2, b1, b2):
                raise InvalidPolygonError(building_id, f"edges {i} and {j} intersect")


@dataclass(frozen=True)
class ScenarioStep:
    """All exact object positions at one trace timestamp."""

    timestamp: float
    ego: VehicleState
    others: tuple[VehicleState, ...]

    def __post_init__(self):
        if any(v.id == self.ego.id for v in self.others):
            raise ValueError(f"ego id {self.ego.id!r} duplicated in others at t={self.timestamp}")


@dataclass(frozen=True)
class ScenarioConfig:
    """Frame anchor and trace cadence."""

    origin_lat: float = 0.0
    origin_lon: float = 0.0
    step_period: float = 0.1  # nominal seconds between steps
    antenna_height_offset: float = DEFAULT_ANTENNA_OFFSET

    def __post_init__(self):
        if self.step_period <= 0:
            raise ValueError("step_period must be > 0")


# ---------------------------------------------------------------------------
# JSON (de)serialization
# ---------------------------------------------------------------------------


def vehicle_to_json(v: VehicleState) -> dict:
    return {
        "id": v.id,
        "x": v.position.x,
        "y": v.position.y,
        "speed": v.speed,
        "heading": v.heading,
        "length": v.length,
        "width": v.width,
        "height": v.height,
    }


def vehicle_from_json(obj: dict, *, where: str = "<vehicle>") -> VehicleState:
    try:
        return VehicleState(
            id=str(obj["id"]),
            position=Position(float(obj["x"]), float(obj["y"])),
            speed=float(obj["speed"]),
            heading=float(obj["heading"]),
            length=float(obj.get("length", DEFAULT_LENGTH)),
            width=float(obj.get("width", DEFAULT_WIDTH)),
            height=float(obj.get("height", DEFAULT_HEIGHT)),
        )
    except KeyError as exc:
        raise FormatError(f"vehicle record missing key {exc}", locator=where) from exc
    except (TypeError, ValueError) as exc:
        raise FormatError(f"bad vehicle record: {exc}", locator=where) from exc


def step_to_json(step: ScenarioStep) -> dict:
    return {
        "t": step.timestamp,
        "ego": vehicle_to_json(step.ego),
        "vehicles": [vehicle_to_json(v) for v in step.others],
    }


def step_to_line(step: ScenarioStep) -> str:
    return json.dumps(step_to_json(step), separators=(",", ":"))


def step_from_json(obj: dict, *, path: str | None = None, line: int = 0) -> ScenarioStep:
    loc = f"line {line}"
    if "t" not in obj:
        raise FormatError("step record missing 't'", path=path, locator=loc)
    if "ego" not in obj:
        raise MissingEgoError("step record missing 'ego'", path=path, locator=loc)
    ego = vehicle_from_json(obj["ego"], where=loc)
    others = tuple(vehicle_from_json(v, where=loc) for v in obj.get("vehicles", []))
    try:
        return ScenarioStep(timestamp=float(obj["t"]), ego=ego, others=others)
    except ValueError as exc:
        raise FormatError(str(exc), path=path, locator=loc) from exc


def building_to_json(b: Building) -> dict:
    return {"id": b.id, "vertices": [[v.x, v.y] for v in b.vertices]}


# ---------------------------------------------------------------------------
# File loading
# ---------------------------------------------------------------------------


def load_buildings(path) -> list[Building]:
    """Parse and validate a building map file.

    Raises FormatError on malformed JSON/records and InvalidPolygonError on
    polygon invariant violations; duplicate ids are rejected so blocker
    reports stay unambiguous.
    """
    path = str(path)
    with open(path, "r", encoding="utf-8") as f:
        try:
            data = json.load(f)
        except json.JSONDecodeError as exc:
            raise FormatError(f"invalid JSON: {exc.msg}", path=path, locator=f"line {exc.lineno}") from exc
    if not isinstance(data, list):
        raise FormatError("top level must be an array of buildings", path=path)
    buildings: list[Building] = []
    seen: set[str] = set()
    for i, rec in enumerate(data):
        loc = f"record {i}"
        if not isinstance(rec, dict) or "id" not in rec or "vertices" not in rec:
            raise FormatError("building record needs 'id' and 'vertices'", path=path, locator=loc)
        bid = str(rec["id"])
        if bid in seen:
            raise FormatError(f"duplicate building id {bid!r}", path=path, locator=loc)
        seen.add(bid)
        try:
            vertices = tuple(Position(float(x), float(y)) for x, y in rec["vertices"])
        except (TypeError, ValueError) as exc:
            raise FormatError(f"bad vertex list for {bid!r}: {exc}", path=path, locator=loc) from exc
        buildings.append(Building(id=bid, vertices=vertices))
    return buildings


def load_trace(path) -> Iterator[ScenarioStep]:
    """Stream ScenarioSteps from a JSON-lines trace file.

    Lazy: one line is parsed per step consumed, so memory stays bounded by
    a single step regardless of trace length. Timestamps must be strictly
    increasing.
    """
    path = str(path)

    def gen() -> Iterator[ScenarioStep]:
        prev_t: float | None = None
        with open(path, "r", encoding="utf-8") as f:
            for lineno, raw in enumerate(f, start=1):
                raw = raw.strip()
                if not raw:
                    continue
                try:
                    obj = json.loads(raw)
                except json.JSONDecodeError as exc:
                    raise FormatError(f"invalid JSON: {exc.msg}", path=path, locator=f"line {lineno}") from exc
                step = step_from_json(obj, path=path, line=lineno)
                if prev_t is not None and step.timestamp <= prev_t:
                    raise NonMonotoneTimestampError(
                        f"timestamp {step.timestamp} not after {prev_t}",
                        path=path,
                        locator=f"line {lineno}",
                    )
                prev_t = step.timestamp
                yield step

    return gen()


def write_trace(path, steps: Iterable[ScenarioStep]) -> int:
    """Write steps as JSON lines; returns the number of steps written."""
    count = 0
    with open(str(path), "w", encoding="utf-8") as f:
        for step in steps:
            f.write(step_to_line(step))
            f.write("\n")
            count += 1
    return count


def write_buildings(path, buildings: Iterable[Building]) -> None:
    with open(str(path), "w", encoding="utf-8") as f:
        json.dump([building_to_json(b) for b in buildings], f, separators=(",", ":"))
