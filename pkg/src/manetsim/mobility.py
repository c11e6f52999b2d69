"""Waypoint mobility at constant speed plus linear-extrapolation position prediction."""

from __future__ import annotations

import math
import random
from collections import deque
from dataclasses import dataclass
from typing import NamedTuple

from .engine import s_from_us

Position = tuple[float, float, float]


class Area(NamedTuple):
    x: float
    y: float
    z: float


def distance(a: Position, b: Position) -> float:
    return math.sqrt((a[0] - b[0]) ** 2 + (a[1] - b[1]) ** 2 + (a[2] - b[2]) ** 2)


def random_position(area: Area, rng: random.Random) -> Position:
    return (rng.uniform(0.0, area.x), rng.uniform(0.0, area.y), rng.uniform(0.0, area.z))


@dataclass
class MobilityState:
    position: Position
    waypoint: Position
    speed_mps: float


def step_waypoint(state: MobilityState, dt: float, rng: random.Random, area: Area) -> MobilityState:
    """Advance speed*dt toward the waypoint; on arrival draw a fresh uniform
    waypoint and spend the residual distance toward it.

    Travel distance is conserved exactly across redirects, so total path length
    over a run equals speed * elapsed time.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    pos = state.position
    waypoint = state.waypoint
    budget = state.speed_mps * dt
    while budget > 0:
        gap = distance(pos, waypoint)
        if gap <= budget:
            pos = waypoint
            budget -= gap
            waypoint = random_position(area, rng)
            if budget == 0:
                break
        else:
            frac = budget / gap
            pos = (
                pos[0] + (waypoint[0] - pos[0]) * frac,
                pos[1] + (waypoint[1] - pos[1]) * frac,
                pos[2] + (waypoint[2] - pos[2]) * frac,
            )
            budget = 0.0
    return MobilityState(position=pos, waypoint=waypoint, speed_mps=state.speed_mps)


class InsufficientHistoryError(Exception):
    """Fewer than two samples; caller falls back to the last known position."""


class MobilityHistory:
    """Ring buffer of timestamped positions; oldest sample evicted at capacity."""

    def __init__(self, capacity: int = 8):
        self.capacity = capacity
        self.samples: deque[tuple[int, Position]] = deque(maxlen=capacity)

    def __len__(self) -> int:
        return len(self.samples)

    def record(self, t_us: int, position: Position) -> None:
        if self.samples and t_us <= self.samples[-1][0]:
            raise ValueError(f"sample timestamp {t_us} not after {self.samples[-1][0]}")
        self.samples.append((t_us, position))

    def last(self) -> tuple[int, Position]:
        return self.samples[-1]


def predict_position(
    history: MobilityHistory,
    fit_samples: int,
    horizon_steps: int,
    update_interval_s: float,
) -> Position:
    """Least-squares linear fit per coordinate over the newest fit_samples
    entries, evaluated horizon_steps * update_interval_s past the last sample.

    The result is deliberately not clamped to the mission area: a node heading
    for the boundary is predicted to cross it, which is what makes the
    prediction useful as a link-break indicator.
    """
    n = min(fit_samples, len(history))
    if n < 2:
        raise InsufficientHistoryError(f"need >= 2 samples, have {len(history)}")
    tail = list(history.samples)[-n:]
    t_last = s_from_us(tail[-1][0])
    # Center times on the last sample for numerical stability.
    ts = [s_from_us(t) - t_last for t, _ in tail]
    t_mean = sum(ts) / n
    var = sum((t - t_mean) ** 2 for t in ts)
    horizon = horizon_steps * update_interval_s
    predicted = []
    for axis in range(3):
        xs = [p[axis] for _, p in tail]
        x_mean = sum(xs) / n
        slope = sum((t - t_mean) * (x - x_mean) for t, x in zip(ts, xs)) / var
        intercept = x_mean - slope * t_mean
        predicted.append(intercept + slope * horizon)
    return (predicted[0], predicted[1], predicted[2])
