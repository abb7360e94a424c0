"""Chaos measurement and learning statistics."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import rng
from .episode import EpisodeLog, steps_to_goal
from .env import WorldConfig, WorldState, compass_sites, sense
from .netcore import HALF_OPEN, ActorChNN, actor_step

log = logging.getLogger(__name__)

ROBOT_SITE_RADIUS = 6.0
OBSTACLE_SITE_RADIUS = 4.0


class DegenerateLyapunovError(ArithmeticError):
    """Every perturbation collapsed to zero distance."""

    def __init__(self, n_degenerate: int):
        super().__init__(f"all {n_degenerate} perturbations collapsed to zero distance")
        self.n_degenerate = n_degenerate


@dataclass
class LyapunovConfig:
    d_before: float = 1e-6
    robot_sites: list = field(default_factory=lambda: compass_sites(ROBOT_SITE_RADIUS))
    obstacle_sites: list = field(default_factory=lambda: compass_sites(OBSTACLE_SITE_RADIUS))
    perturbation_seed: int = 0
    warmup: int = 100
    heading: float = math.pi / 2

    def validate(self) -> None:
        if not (math.isfinite(self.d_before) and self.d_before > 0):
            raise ValueError(f"lyapunov.d_before must be > 0, got {self.d_before}")
        if len(self.robot_sites) != 8 or len(self.obstacle_sites) != 8:
            raise ValueError("lyapunov needs exactly 8 robot sites and 8 obstacle sites")
        if self.warmup < 0:
            raise ValueError("lyapunov.warmup must be >= 0")


@dataclass
class LyapunovResult:
    value: float
    n_degenerate: int
    log_ratios: np.ndarray


def placement_inputs(cfg: LyapunovConfig, world: WorldConfig) -> list[np.ndarray]:
    """Sensor images for all 8 x 8 robot/obstacle site combinations."""
    inputs = []
    for r in cfg.robot_sites:
        for o in cfg.obstacle_sites:
            state = WorldState((float(r[0]), float(r[1])), cfg.heading, (float(o[0]), float(o[1])))
            inputs.append(sense(state, world).as_input())
    return inputs


def lyapunov_from_map(step: Callable[[np.ndarray, np.ndarray], np.ndarray],
                      settled: Sequence[np.ndarray], inputs: Sequence[np.ndarray],
                      d_before: float, gen: np.random.Generator) -> LyapunovResult:
    """Mean one-step log expansion of random perturbations of size ``d_before``.

    ``step(hidden, x)`` maps a hidden state to its successor under input
    ``x``.  Perturbed states are clipped back into the activation range.
    Pairs whose distance collapses to exactly zero are excluded.
    """
    ratios = []
    n_degenerate = 0
    for h0, x in zip(settled, inputs):
        direction = gen.normal(size=h0.shape)
        direction /= np.linalg.norm(direction)
        h1 = np.clip(h0 + d_before * direction, -HALF_OPEN, HALF_OPEN)
        d_after = float(np.linalg.norm(step(h1, x) - step(h0, x)))
        if d_after == 0.0:
            n_degenerate += 1
            continue
        ratios.append(math.log(d_after / d_before))
    if not ratios:
        raise DegenerateLyapunovError(n_degenerate)
    if n_degenerate:
        log.warning("%d of %d perturbations collapsed to zero distance",
                    n_degenerate, n_degenerate + len(ratios))
    arr = np.array(ratios)
    return LyapunovResult(float(arr.mean()), n_degenerate, arr)


def _hidden_map(actor: ActorChNN):
    probe = actor.copy()

    def step(h, x):
        probe.hidden = h.copy()
        actor_step(probe, x)
        return probe.hidden

    return step


def one_step_lyapunov_detail(actor: ActorChNN, cfg: LyapunovConfig | None = None,
                             world: WorldConfig | None = None) -> LyapunovResult:
    cfg = cfg or LyapunovConfig()
    world = world or WorldConfig()
    cfg.validate()
    inputs = placement_inputs(cfg, world)
    settled = []
    for x in inputs:
        probe = actor.copy()
        probe.reset_state()
        for _ in range(cfg.warmup):
            actor_step(probe, x)
        settled.append(probe.hidden.copy())
    gen = rng.stream(actor.init_seed or 0, rng.LYAPUNOV, cfg.perturbation_seed)
    return lyapunov_from_map(_hidden_map(actor), settled, inputs, cfg.d_before, gen)


def one_step_lyapunov(actor: ActorChNN, cfg: LyapunovConfig | None = None,
                      world: WorldConfig | None = None) -> float:
    """One-step Lyapunov estimate averaged over the 64 site combinations.

    For each placement the actor is run ``warmup`` steps on that
    placement's (fixed) sensor image, the settled hidden state is perturbed
    by a random vector of norm ``d_before``, and both copies advance one step.
    """
    return one_step_lyapunov_detail(actor, cfg, world).value


@dataclass
class LearningCurvePoint:
    episode_index: int
    steps_to_goal: int
    window_mean: float | None


def learning_curve(episodes: Sequence, window: int = 100,
                   max_steps: int = 1000) -> list[LearningCurvePoint]:
    """Steps-to-goal per episode with the trailing ``window``-episode mean.

    ``episodes`` holds either step counts or episode logs; a log that never
    reached the goal counts as ``max_steps``.  The mean is defined once
    ``window`` episodes are available.
    """
    steps = [steps_to_goal(e, max_steps) if isinstance(e, EpisodeLog) else e
             for e in episodes]
    arr = np.asarray(steps, dtype=float)
    csum = np.concatenate([[0.0], np.cumsum(arr)])
    points = []
    for i, s in enumerate(steps):
        mean = (csum[i + 1] - csum[i + 1 - window]) / window if i + 1 >= window else None
        points.append(LearningCurvePoint(i + 1, int(s), mean))
    return points
