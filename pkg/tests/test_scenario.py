import json
import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from v2xemu.scenario import (
    Building,
    FormatError,
    GeoPosition,
    InvalidPolygonError,
    MissingEgoError,
    NonMonotoneTimestampError,
    Position,
    ScenarioConfig,
    ScenarioStep,
    VehicleState,
    geodetic_to_planar,
    load_buildings,
    load_trace,
    planar_to_geodetic,
    step_from_json,
    step_to_json,
    write_buildings,
    write_trace,
)

# ---------------------------------------------------------------------------
# basic types
# ---------------------------------------------------------------------------


def test_position_rejects_non_finite():
    with pytest.raises(ValueError):
        Position(math.nan, 0.0)
    with pytest.raises(ValueError):
        Position(0.0, math.inf)


def test_heading_normalized():
    v = VehicleState(id="a", position=Position(0, 0), speed=1.0, heading=-math.pi / 2)
    assert v.heading == pytest.approx(3 * math.pi / 2)
    v = VehicleState(id="a", position=Position(0, 0), speed=1.0, heading=2 * math.pi)
    assert v.heading == 0.0


def test_vehicle_dimensions_positive():
    with pytest.raises(ValueError):
        VehicleState(id="a", position=Position(0, 0), speed=1.0, heading=0.0, height=0.0)


def test_vehicle_defaults():
    v = VehicleState(id="a", position=Position(0, 0), speed=1.0, heading=0.0)
    assert (v.length, v.width, v.height) == (4.5, 1.8, 1.5)


def test_step_rejects_duplicated_ego_id(vehicle):
    with pytest.raises(ValueError):
        ScenarioStep(timestamp=0.0, ego=vehicle("e", 0, 0), others=(vehicle("e", 5, 5),))


def test_step_period_positive():
    with pytest.raises(ValueError):
        ScenarioConfig(step_period=0.0)


# ---------------------------------------------------------------------------
# polygon validation
# ---------------------------------------------------------------------------


def test_polygon_needs_three_vertices():
    with pytest.raises(InvalidPolygonError):
        Building(id="b", vertices=(Position(0, 0), Position(1, 0)))


def test_polygon_rejects_degenerate_edge():
    with pytest.raises(InvalidPolygonError):
        Building(id="b", vertices=(Position(0, 0), Position(0, 0), Position(1, 1)))


def test_polygon_rejects_bowtie():
    with pytest.raises(InvalidPolygonError):
        Building(
            id="b",
            vertices=(Position(0, 0), Position(10, 10), Position(10, 0), Position(0, 10)),
        )


def test_polygon_rejects_repeated_vertex():
    with pytest.raises(InvalidPolygonError):
        Building(
            id="b",
            vertices=(Position(0, 0), Position(10, 0), Position(0, 0), Position(0, 10)),
        )


def test_concave_polygon_accepted():
    b = Building(
        id="L",
        vertices=(
            Position(0, 0),
            Position(20, 0),
            Position(20, 10),
            Position(10, 10),
            Position(10, 20),
            Position(0, 20),
        ),
    )
    assert len(list(b.edges())) == 6


def test_triangle_accepted():
    Building(id="t", vertices=(Position(0, 0), Position(5, 0), Position(0, 5)))


# ---------------------------------------------------------------------------
# projection
# ---------------------------------------------------------------------------


@given(
    st.floats(-60, 60),
    st.floats(-179, 179),
    st.floats(-5000, 5000),
    st.floats(-5000, 5000),
)
def test_projection_round_trip(lat0, lon0, x, y):
    p = Position(x, y)
    geo = planar_to_geodetic(lat0, lon0, p)
    back = geodetic_to_planar(lat0, lon0, geo)
    assert back.x == pytest.approx(x, abs=1e-6)
    assert back.y == pytest.approx(y, abs=1e-6)


def test_meters_per_degree_latitude():
    geo = planar_to_geodetic(0.0, 0.0, Position(0.0, 111_195.08023353292))
    assert geo.lat == pytest.approx(1.0, abs=1e-9)
    assert geo.lon == 0.0


def test_longitude_scale_shrinks_with_latitude():
    g_eq = planar_to_geodetic(0.0, 0.0, Position(1000.0, 0.0))
    g_60 = planar_to_geodetic(60.0, 0.0, Position(1000.0, 0.0))
    assert g_60.lon - 0.0 == pytest.approx(2 * g_eq.lon, rel=1e-9)


# ---------------------------------------------------------------------------
# file i/o
# ---------------------------------------------------------------------------


def _step(t, vehicle, n=2):
    return ScenarioStep(
        timestamp=t,
        ego=vehicle("ego", 0.0, t),
        others=tuple(vehicle(f"v{i}", 10.0 * (i + 1), t) for i in range(n)),
    )


def test_trace_round_trip(tmp_path, vehicle):
    steps = [_step(t * 0.1, vehicle) for t in range(5)]
    path = tmp_path / "trace.jsonl"
    assert write_trace(path, steps) == 5
    loaded = list(load_trace(path))
    assert loaded == steps


def test_trace_optional_dimensions_default(tmp_path):
    rec = {
        "t": 0.0,
        "ego": {"id": "e", "x": 0, "y": 0, "speed": 1, "heading": 0},
        "vehicles": [{"id": "v", "x": 5, "y": 0, "speed": 1, "heading": 0, "height": 3.2}],
    }
    path = tmp_path / "t.jsonl"
    path.write_text(json.dumps(rec) + "\n")
    (step,) = load_trace(path)
    assert step.ego.height == 1.5
    assert step.others[0].height == 3.2


def test_trace_missing_ego(tmp_path):
    path = tmp_path / "t.jsonl"
    path.write_text('{"t": 0.0, "vehicles": []}\n')
    with pytest.raises(MissingEgoError):
        list(load_trace(path))


def test_trace_non_monotone_timestamps(tmp_path, vehicle):
    steps = [_step(0.2, vehicle), _step(0.1, vehicle)]
    path = tmp_path / "t.jsonl"
    write_trace(path, steps)
    with pytest.raises(NonMonotoneTimestampError) as exc:
        list(load_trace(path))
    assert "line 2" in str(exc.value)


def test_trace_bad_json_names_line(tmp_path):
    path = tmp_path / "t.jsonl"
    path.write_text('{"t": 0.0, "ego": {"id": "e", "x": 0, "y": 0, "speed": 1, "heading": 0}}\nnot json\n')
    with pytest.raises(FormatError) as exc:
        list(load_trace(path))
    assert "line 2" in str(exc.value)


def test_trace_is_lazy(tmp_path, vehicle):
    path = tmp_path / "t.jsonl"
    write_trace(path, [_step(0.0, vehicle)])
    with open(path, "a", encoding="utf-8") as f:
        f.write("garbage\n")
    it = load_trace(path)
    next(it)  # first step parses fine; the bad line only fails when reached
    with pytest.raises(FormatError):
        next(it)


def test_buildings_round_trip(tmp_path, square_building):
    buildings = [square_building("b0", 0, 0, 10), square_building("b1", 50, 50, 20)]
    path = tmp_path / "b.json"
    write_buildings(path, buildings)
    assert load_buildings(path) == buildings


def test_buildings_duplicate_id(tmp_path):
    data = [
        {"id": "b0", "vertices": [[0, 0], [1, 0], [1, 1]]},
        {"id": "b0", "vertices": [[5, 5], [6, 5], [6, 6]]},
    ]
    path = tmp_path / "b.json"
    path.write_text(json.dumps(data))
    with pytest.raises(FormatError) as exc:
        load_buildings(path)
    assert "duplicate" in str(exc.value)


def test_buildings_top_level_must_be_array(tmp_path):
    path = tmp_path / "b.json"
    path.write_text('{"id": "b0"}')
    with pytest.raises(FormatError):
        load_buildings(path)


def test_buildings_invalid_polygon_propagates(tmp_path):
    path = tmp_path / "b.json"
    path.write_text(json.dumps([{"id": "b0", "vertices": [[0, 0], [1, 0]]}]))
    with pytest.raises(InvalidPolygonError):
        load_buildings(path)


def test_step_json_round_trip(vehicle):
    step = _step(1.5, vehicle)
    assert step_from_json(step_to_json(step)) == step
