"""Urban V2V radio channel: path loss, vehicle blockage, shadowing, budget.

Path loss is condition-specific (frequency in GHz, distance in meters,
antenna to antenna in 3D):

* LOS:    38.77 + 16.7 log10(d) + 18.2 log10(fc)
* NLOSb:  36.85 + 30.0 log10(d) + 18.9 log10(fc)
* NLOSv:  LOS plus a single-knife-edge term for the blocking vehicle.

The knife-edge term uses the normalized obstruction nu = sqrt(2) * H / r_f
(H is how far the blocker body rises above the straight line connecting
the two antennas at the blocker's position, r_f the first Fresnel zone
radius there) and is zero for nu <= 0.7, else
6.9 + 20 log10(sqrt((nu - 0.1)^2 + 1) + nu - 0.1).

Shadowing is log-normal and spatially correlated per link: each update
mixes the previous value with fresh noise, value' = rho * value +
sqrt(1 - rho^2) * N(0, std^2), rho = exp(-delta_d / d_corr), where
delta_d is how far the two link endpoints moved combined since the last
update. Every link owns a named RNG substream so results are independent
of evaluation order and worker count.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from .geometry import ClassifiedLink, LinkCondition
from .rng import substream
from .scenario import Position, VehicleState

C_LIGHT = 299_792_458.0  # m/s

# Formula floor: below 1 m the log-distance fit is out of its domain, and
# overtaking maneuvers can bring antenna centers arbitrarily close.
MIN_ASSESS_DISTANCE = 1.0


@dataclass(frozen=True)
class RadioConfig:
    tx_power: float = 23.0  # dBm
    sensitivity: float = -82.0  # dBm
    carrier_freq: float = 5.9  # GHz
    shadowing_std: float = 3.0  # dB
    decorrelation_distance: float = 10.0  # m

    def __post_init__(self):
        if self.carrier_freq <= 0:
            raise ValueError("carrier_freq must be > 0 GHz")
        if self.shadowing_std < 0 or self.decorrelation_distance <= 0:
            raise ValueError("bad shadowing parameters")


def path_loss_los(distance_3d: float, carrier_freq_ghz: float) -> float:
    if distance_3d <= 0:
        raise ValueError("distance must be > 0")
    return 38.77 + 16.7 * math.log10(distance_3d) + 18.2 * math.log10(carrier_freq_ghz)


def path_loss_nlosb(distance_3d: float, carrier_freq_ghz: float) -> float:
    if distance_3d <= 0:
        raise ValueError("distance must be > 0")
    return 36.85 + 30.0 * math.log10(distance_3d) + 18.9 * math.log10(carrier_freq_ghz)


def wavelength(carrier_freq_ghz: float) -> float:
    return C_LIGHT / (carrier_freq_ghz * 1e9)


def fresnel_radius(wavelength_m: float, d1: float, d2: float) -> float:
    """First Fresnel zone radius at the obstacle, distances d1/d2 to the ends."""
    if d1 <= 0 or d2 <= 0:
        raise ValueError("obstacle must lie strictly between the endpoints")
    return math.sqrt(wavelength_m * d1 * d2 / (d1 + d2))


def knife_edge_loss(nu: float) -> float:
    """Single knife-edge diffraction loss in dB; zero below nu = 0.7."""
    if nu <= 0.7:
        return 0.0
    return 6.9 + 20.0 * math.log10(math.sqrt((nu - 0.1) ** 2 + 1.0) + nu - 0.1)


def link_height_at(h_tx: float, h_rx: float, d1: float, d2: float) -> float:
    """Height of the straight tx->rx line at the obstacle (linear in range)."""
    return h_tx + (h_rx - h_tx) * d1 / (d1 + d2)


def nlosv_extra_loss(
    h_obstacle: float, h_link_at_blocker: float, d1: float, d2: float, carrier_freq_ghz: float
) -> float:
    """Extra loss from one blocking vehicle, added on top of the LOS loss."""
    h = h_obstacle - h_link_at_blocker
    r_f = fresnel_radius(wavelength(carrier_freq_ghz), d1, d2)
    nu = math.sqrt(2.0) * h / r_f
    return knife_edge_loss(nu)


@dataclass
class ShadowingState:
    value: float  # dB
    ego: Position
    target: Position
    last_seen: float  # trace timestamp of last update


def update_shadowing(value: float, delta_d: float, noise: float, std: float, d_corr: float) -> float:
    """One correlated-shadowing step; ``noise`` is a standard normal draw."""
    rho = math.exp(-delta_d / d_corr)
    return rho * value + math.sqrt(1.0 - rho * rho) * std * noise


class ShadowingTracker:
    """Per-link shadowing with distance-based decorrelation.

    Links are keyed by target id (the ego side is common to all). A link
    seen for the first time samples the stationary distribution
    N(0, std^2); stale links are evicted after ``eviction_s`` without an
    update so memory does not grow over long traces. One update draws
    exactly one normal from the link's own substream, so a link's shadow
    trajectory depends only on the seed, its id, and its update count.
    """

    def __init__(self, seed: int, std: float, d_corr: float, eviction_s: float = 60.0):
        self.seed = int(seed)
        self.std = float(std)
        self.d_corr = float(d_corr)
        self.eviction_s = float(eviction_s)
        self._state: dict[str, ShadowingState] = {}
        self._rng: dict = {}

    def _stream(self, target_id: str):
        rng = self._rng.get(target_id)
        if rng is None:
            rng = substream(self.seed, "shadow", target_id)
            self._rng[target_id] = rng
        return rng

    def update(self, target_id: str, ego: Position, target: Position, t: float) -> float:
        noise = float(self._stream(target_id).standard_normal())
        st = self._state.get(target_id)
        if st is None:
            value = self.std * noise
        else:
            delta_d = st.ego.distance_to(ego) + st.target.distance_to(target)
            value = update_shadowing(st.value, delta_d, noise, self.std, self.d_corr)
        self._state[target_id] = ShadowingState(value=value, ego=ego, target=target, last_seen=t)
        return value

    def evict_stale(self, t: float) -> None:
        """Drop per-link state unseen for the eviction horizon. The link's
        RNG stream is kept: re-encountering the link re-initializes from
        the next draw instead of replaying its first value."""
        cutoff = t - self.eviction_s
        dead = [k for k, st in self._state.items() if st.last_seen < cutoff]
        for k in dead:
            del self._state[k]


@dataclass(frozen=True)
class BlockerGeometry:
    """Where the NLOSv blocker sits on the link, all the knife edge needs."""

    d1: float  # along-link distance ego antenna -> blocker, meters
    d2: float  # blocker -> target antenna, meters
    h_obstacle: float  # blocker body height, meters
    h_link: float  # straight-line link height at the blocker, meters


@dataclass(frozen=True)
class LinkBudget:
    condition: LinkCondition
    distance_3d: float
    path_loss: float  # dB, before shadowing
    shadowing: float  # dB
    rx_power: float  # dBm
    delivered: bool
    target_id: str | None = None
    blocker_id: str | None = None
    distance_2d: float = math.nan


def assess_link(
    condition: LinkCondition,
    distance_3d: float,
    blocker: BlockerGeometry | None,
    radio: RadioConfig,
    shadow_db: float,
    *,
    target_id: str | None = None,
    blocker_id: str | None = None,
    distance_2d: float = math.nan,
) -> LinkBudget:
    """Budget for one classified link.

    ``blocker`` is required exactly when the condition is NLOSv. Messages
    are delivered when the received power reaches the sensitivity
    threshold exactly or better.
    """
    if distance_3d <= 0:
        raise ValueError("distance_3d must be > 0")
    if condition is LinkCondition.NLOSB:
        pl = path_loss_nlosb(distance_3d, radio.carrier_freq)
    else:
        pl = path_loss_los(distance_3d, radio.carrier_freq)
        if condition is LinkCondition.NLOSV:
            if blocker is None:
                raise ValueError("NLOSv link without blocker geometry")
            pl += nlosv_extra_loss(
                blocker.h_obstacle, blocker.h_link, blocker.d1, blocker.d2, radio.carrier_freq
            )
    rx = radio.tx_power - pl - shadow_db
    return LinkBudget(
        condition=condition,
        distance_3d=distance_3d,
        path_loss=pl,
        shadowing=shadow_db,
        rx_power=rx,
        delivered=rx >= radio.sensitivity,
        target_id=target_id,
        blocker_id=blocker_id,
        distance_2d=distance_2d,
    )


def antenna_height(vehicle: VehicleState, offset: float) -> float:
    return vehicle.height + offset


def budget_from_states(
    radio: RadioConfig,
    ego: VehicleState,
    target: VehicleState,
    link: ClassifiedLink,
    blocker_state: VehicleState | None,
    shadow_db: float,
    antenna_offset: float,
) -> LinkBudget:
    """Derive the 3D geometry from vehicle states, then assess.

    The 3D distance is antenna to antenna and floored at
    MIN_ASSESS_DISTANCE; the blocker split distances d1/d2 come from the
    blocker's orthogonal projection onto the link, so d1 + d2 equals the
    2D center distance.
    """
    h_e = antenna_height(ego, antenna_offset)
    h_t = antenna_height(target, antenna_offset)
    d2d = link.distance
    d3d = max(math.hypot(d2d, h_t - h_e), MIN_ASSESS_DISTANCE)
    geometry = None
    if link.condition is LinkCondition.NLOSV:
        if blocker_state is None:
            raise ValueError(f"link {link.target_id}: NLOSv without blocker state")
        ex, ey = ego.position.x, ego.position.y
        dx, dy = target.position.x - ex, target.position.y - ey
        l2 = dx * dx + dy * dy
        t = ((blocker_state.position.x - ex) * dx + (blocker_state.position.y - ey) * dy) / l2
        d1 = t * d2d
        d2 = d2d - d1
        geometry = BlockerGeometry(
            d1=d1, d2=d2, h_obstacle=blocker_state.height, h_link=link_height_at(h_e, h_t, d1, d2)
        )
    return assess_link(
        link.condition,
        d3d,
        geometry,
        radio,
        shadow_db,
        target_id=link.target_id,
        blocker_id=link.blocker_id,
        distance_2d=d2d,
    )
