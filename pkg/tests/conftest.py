import sys
from pathlib import Path

import pytest
from hypothesis import HealthCheck, settings

# make tests/oracles.py importable regardless of invocation directory
sys.path.insert(0, str(Path(__file__).parent))

settings.register_profile(
    "suite", max_examples=60, suppress_health_check=[HealthCheck.too_slow], deadline=None
)
settings.load_profile("suite")

from v2xemu.scenario import Building, Position, VehicleState  # noqa: E402


@pytest.fixture
def square_building():
    def make(bid: str, x0: float, y0: float, side: float) -> Building:
        return Building(
            id=bid,
            vertices=(
                Position(x0, y0),
                Position(x0 + side, y0),
                Position(x0 + side, y0 + side),
                Position(x0, y0 + side),
            ),
        )

    return make


@pytest.fixture
def vehicle():
    def make(vid: str, x: float, y: float, **kw) -> VehicleState:
        kw.setdefault("speed", 10.0)
        kw.setdefault("heading", 0.0)
        return VehicleState(id=vid, position=Position(x, y), **kw)

    return make
