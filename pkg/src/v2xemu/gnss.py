"""Temporally correlated GNSS positioning error.

Each node carries a polar error state (magnitude mu in meters, direction
theta in radians). Both components follow the same first-order recursion

    x' = a * x + sqrt(1 - a^2) * n,     a = exp(-dt / t_corr),

where n is N(0, sigma^2) for the magnitude and U(0, 2*pi) for the
direction. The reported fix displaces the true position by
(mu * cos(theta), mu * sin(theta)) east/north. Magnitude may go negative;
that just flips the offset, so the radial error is |mu|.

theta is kept unwrapped inside the recursion (wrapping would break the
linear dynamics) and only enters through cos/sin, which do not care.

Updates may be applied lazily: skipping from t0 to t1 in one call uses
a = exp(-(t1 - t0) / t_corr), which for the magnitude is exactly the
composition of the intermediate steps in distribution.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .rng import substream
from .scenario import Position

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class GnssConfig:
    sigma: float = 2.32  # meters, stationary std of the magnitude
    t_corr: float = 10.0  # seconds

    def __post_init__(self):
        if self.sigma < 0 or self.t_corr <= 0:
            raise ValueError("sigma must be >= 0 and t_corr > 0")


@dataclass(frozen=True)
class GnssErrorState:
    mu: float  # signed magnitude, meters
    theta: float  # direction, radians, unwrapped


def init_error(cfg: GnssConfig, rng: np.random.Generator) -> GnssErrorState:
    """Fresh state: magnitude from its stationary distribution, direction
    uniform. Consumes one normal and one uniform draw."""
    return GnssErrorState(
        mu=cfg.sigma * float(rng.standard_normal()),
        theta=float(rng.uniform(0.0, TWO_PI)),
    )


def update_error(
    state: GnssErrorState, dt: float, cfg: GnssConfig, rng: np.random.Generator
) -> GnssErrorState:
    """Advance the error by dt seconds; one normal then one uniform draw."""
    if dt < 0:
        raise ValueError("dt must be >= 0")
    a = math.exp(-dt / cfg.t_corr)
    scale = math.sqrt(1.0 - a * a)
    n_mu = cfg.sigma * float(rng.standard_normal())
    n_theta = float(rng.uniform(0.0, TWO_PI))
    return GnssErrorState(mu=a * state.mu + scale * n_mu, theta=a * state.theta + scale * n_theta)


def error_offset(state: GnssErrorState) -> tuple[float, float]:
    """East/north displacement of the reported fix, meters."""
    return state.mu * math.cos(state.theta), state.mu * math.sin(state.theta)


def apply_error(position: Position, state: GnssErrorState) -> Position:
    de, dn = error_offset(state)
    return Position(position.x + de, position.y + dn)


def stationary_rms(
    cfg: GnssConfig, duration_s: float, step_s: float, rng: np.random.Generator
) -> float:
    """Empirical RMS radial error of a stationary receiver.

    Runs the recursion for duration_s at step_s cadence and returns
    sqrt(mean(mu^2)); the analytic stationary value is cfg.sigma. Refuses
    runs too short to average over the correlation time.
    """
    if duration_s < 100.0 * cfg.t_corr:
        raise ValueError(f"duration {duration_s} s too short; need >= {100.0 * cfg.t_corr} s")
    if step_s <= 0:
        raise ValueError("step_s must be > 0")
    n = int(duration_s / step_s)
    state = init_error(cfg, rng)
    acc = 0.0
    for _ in range(n):
        state = update_error(state, step_s, cfg, rng)
        acc += state.mu * state.mu
    return math.sqrt(acc / n)


class GnssTracker:
    """Per-node error states advanced on demand.

    Each node id owns a named substream, so a node's error trajectory
    depends only on the base seed, its id, and the sequence of update
    times, never on other nodes or iteration order. Calling ``error_at``
    twice with the same timestamp returns the same state without
    consuming randomness.
    """

    def __init__(self, seed: int, cfg: GnssConfig):
        self.seed = int(seed)
        self.cfg = cfg
        self._state: dict[str, GnssErrorState] = {}
        self._last_t: dict[str, float] = {}
        self._rng: dict = {}

    def error_at(self, node_id: str, t: float) -> GnssErrorState:
        state = self._state.get(node_id)
        if state is None:
            rng = substream(self.seed, "gnss", node_id)
            self._rng[node_id] = rng
            state = init_error(self.cfg, rng)
        else:
            dt = t - self._last_t[node_id]
            if dt <= 0:
                return state
            state = update_error(state, dt, self.cfg, self._rng[node_id])
        self._state[node_id] = state
        self._last_t[node_id] = t
        return state
