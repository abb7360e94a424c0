"""Two-wheeled robot in a 20x20 field with one obstacle and one goal.

The robot carries two omnidirectional sensors of 72 five-degree cells each:
one sees only the goal, the other only the obstacle.  Cell ``k`` is centred
on relative bearing ``5k`` degrees, counter-clockwise from the heading.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .learning import TdConfig

TWO_PI = 2.0 * math.pi


class PlacementError(RuntimeError):
    """No valid random placement found within the retry budget."""


@dataclass
class WorldConfig:
    field_half: float = 10.0
    goal_center: tuple[float, float] = (0.0, 8.0)
    goal_radius: float = 1.0
    robot_radius: float = 0.5
    obstacle_radius: float = 1.5
    max_steps: int = 1000
    sensor_cells: int = 72
    wheel_speed_scale: float = 1.0
    axle_width: float = 1.0
    placement_retries: int = 1000

    def __post_init__(self) -> None:
        self.goal_center = (float(self.goal_center[0]), float(self.goal_center[1]))

    def validate(self) -> None:
        for name in ("field_half", "goal_radius", "robot_radius", "obstacle_radius",
                     "wheel_speed_scale", "axle_width"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise ValueError(f"world.{name} must be > 0, got {v}")
        gx, gy = self.goal_center
        if max(abs(gx), abs(gy)) + self.goal_radius > self.field_half:
            raise ValueError("world.goal_center must lie inside the field")
        if self.max_steps < 1:
            raise ValueError("world.max_steps must be >= 1")
        if self.sensor_cells < 1:
            raise ValueError("world.sensor_cells must be >= 1")

    @property
    def d_max(self) -> float:
        """Field diagonal; objects this far away are invisible."""
        return 2.0 * math.sqrt(2.0) * self.field_half

    @property
    def contact_distance(self) -> float:
        return self.robot_radius + self.obstacle_radius


@dataclass
class WorldState:
    robot_pos: tuple[float, float]
    robot_heading: float
    obstacle_pos: tuple[float, float]
    step: int = 0


@dataclass
class SensorImage:
    goal_cells: np.ndarray
    obstacle_cells: np.ndarray

    def as_input(self) -> np.ndarray:
        return np.concatenate([self.goal_cells, self.obstacle_cells])


@dataclass
class StepOutcome:
    reward: float
    reached_goal: bool
    collided: bool
    terminal: bool


def reset_episode(gen: np.random.Generator, cfg: WorldConfig) -> WorldState:
    """Random robot pose and obstacle position satisfying the start constraints."""
    gx, gy = cfg.goal_center
    lim_r = cfg.field_half - cfg.robot_radius
    lim_o = cfg.field_half - cfg.obstacle_radius
    for _ in range(cfg.placement_retries):
        rx, ry, ox, oy = gen.uniform(-1.0, 1.0, 4) * (lim_r, lim_r, lim_o, lim_o)
        heading = float(gen.uniform(0.0, TWO_PI))
        if math.hypot(rx - ox, ry - oy) < cfg.contact_distance:
            continue
        if math.hypot(ox - gx, oy - gy) < cfg.obstacle_radius + cfg.goal_radius:
            continue
        if math.hypot(rx - gx, ry - gy) < cfg.goal_radius:
            continue
        return WorldState((float(rx), float(ry)), heading, (float(ox), float(oy)), 0)
    raise PlacementError(f"no valid placement after {cfg.placement_retries} draws")


def object_cells(robot_pos, heading: float, obj_pos, obj_radius: float,
                 cfg: WorldConfig) -> np.ndarray:
    """Activation of one sensor's cells for a single disc-shaped object."""
    n = cfg.sensor_cells
    dx = obj_pos[0] - robot_pos[0]
    dy = obj_pos[1] - robot_pos[1]
    d = math.hypot(dx, dy)
    value = 0.5 * max(0.0, 1.0 - d / cfg.d_max)
    out = np.zeros(n)
    if value == 0.0:
        return out
    if d <= obj_radius:
        out[:] = value
        return out
    cell = TWO_PI / n
    bearing = (math.atan2(dy, dx) - heading) / cell
    half = math.asin(obj_radius / d) / cell
    k = np.arange(n)
    dist = np.abs(np.mod(k - bearing + n / 2, n) - n / 2)
    out[dist < 0.5 + half] = value
    return out


def sense(state: WorldState, cfg: WorldConfig) -> SensorImage:
    return SensorImage(
        object_cells(state.robot_pos, state.robot_heading, cfg.goal_center, cfg.goal_radius, cfg),
        object_cells(state.robot_pos, state.robot_heading, state.obstacle_pos,
                     cfg.obstacle_radius, cfg),
    )


def apply_wheels(state: WorldState, left: float, right: float,
                 cfg: WorldConfig) -> tuple[WorldState, bool]:
    """Differential-drive kinematics for one step.

    Returns the successor state and whether the robot hit the obstacle (in
    which case it is left touching the obstacle boundary).
    """
    if not (-0.5 <= left <= 0.5 and -0.5 <= right <= 0.5):
        raise ValueError(f"wheel commands must lie in [-0.5, 0.5], got ({left}, {right})")
    v_l = left * cfg.wheel_speed_scale
    v_r = right * cfg.wheel_speed_scale
    heading = (state.robot_heading + (v_r - v_l) / cfg.axle_width) % TWO_PI
    speed = 0.5 * (v_l + v_r)
    x0, y0 = state.robot_pos
    lim = cfg.field_half - cfg.robot_radius
    x = min(max(x0 + speed * math.cos(heading), -lim), lim)
    y = min(max(y0 + speed * math.sin(heading), -lim), lim)

    ox, oy = state.obstacle_pos
    reach = cfg.contact_distance
    collided = False
    d = math.hypot(x - ox, y - oy)
    if d < reach:
        collided = True
        if d > 0.0:
            ux, uy = (x - ox) / d, (y - oy) / d
        else:
            d0 = math.hypot(x0 - ox, y0 - oy)
            ux, uy = ((x0 - ox) / d0, (y0 - oy) / d0) if d0 > 0 else (1.0, 0.0)
        # tiny outward margin so rounding never leaves the robot inside
        px = ox + ux * reach * (1.0 + 1e-12)
        py = oy + uy * reach * (1.0 + 1e-12)
        if abs(px) <= lim and abs(py) <= lim:
            x, y = px, py
        else:
            x, y = x0, y0
    return WorldState((x, y), heading, state.obstacle_pos, state.step + 1), collided


def reached_goal(state: WorldState, cfg: WorldConfig) -> bool:
    gx, gy = cfg.goal_center
    return math.hypot(state.robot_pos[0] - gx, state.robot_pos[1] - gy) < cfg.goal_radius


def step_outcome(state: WorldState, collided: bool, cfg: WorldConfig,
                 td: TdConfig) -> StepOutcome:
    reached = reached_goal(state, cfg)
    if reached:
        reward = td.reward_goal
    elif collided:
        reward = td.penalty_collision
    else:
        reward = 0.0
    return StepOutcome(reward, reached, collided, reached or state.step >= cfg.max_steps)


def rotated(state: WorldState, angle: float, cfg: WorldConfig) -> tuple[WorldState, WorldConfig]:
    """Rotate the whole world (robot, obstacle, goal, heading) about the origin."""
    c, s = math.cos(angle), math.sin(angle)

    def rot(p):
        return (c * p[0] - s * p[1], s * p[0] + c * p[1])

    new_state = WorldState(rot(state.robot_pos), (state.robot_heading + angle) % TWO_PI,
                           rot(state.obstacle_pos), state.step)
    return new_state, replace(cfg, goal_center=rot(cfg.goal_center))


# Canonical compass sites, counter-clockwise from +x.
def compass_sites(radius: float) -> list[tuple[float, float]]:
    return [(radius * math.cos(k * math.pi / 4), radius * math.sin(k * math.pi / 4))
            for k in range(8)]

