"""Episode loop: sense, act, move, score, learn.

This is the reference implementation built from the per-operation
functions.  :mod:`chaosrl.kernels` dispatches the same loop to a compiled
kernel when one is available.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .env import WorldConfig, WorldState, apply_wheels, sense, step_outcome
from .learning import (
    CausalityTraces,
    FeedforwardActor,
    TdConfig,
    apply_actor_update,
    baseline_noise_update,
    td_error,
    train_critic_step,
    update_traces,
)
from .netcore import ActorChNN, CriticNet, actor_step, critic_eval

LOG_COLUMNS = (
    "step", "robot_x", "robot_y", "heading", "action_l", "action_r", "reward",
    "td_error", "v_now", "collided", "reached", "hidden_norm", "noise_l", "noise_r",
    "obstacle_x", "obstacle_y",
)
_INT_COLUMNS = {"step"}
_BOOL_COLUMNS = {"collided", "reached"}

TRAIN = "train"
EVAL = "eval"


class LogFormatError(ValueError):
    """A per-step log line could not be parsed."""


@dataclass
class EpisodeLog:
    """Column-oriented per-step record of one episode."""

    columns: dict[str, np.ndarray] = field(default_factory=dict)

    @classmethod
    def allocate(cls, n: int) -> "EpisodeLog":
        cols = {}
        for name in LOG_COLUMNS:
            if name in _INT_COLUMNS:
                cols[name] = np.zeros(n, dtype=np.int64)
            elif name in _BOOL_COLUMNS:
                cols[name] = np.zeros(n, dtype=bool)
            else:
                cols[name] = np.zeros(n)
        return cls(cols)

    def truncate(self, n: int) -> "EpisodeLog":
        return EpisodeLog({k: v[:n].copy() for k, v in self.columns.items()})

    def __len__(self) -> int:
        return len(self.columns["step"])

    def __getitem__(self, name: str) -> np.ndarray:
        return self.columns[name]

    @property
    def reached(self) -> bool:
        return bool(len(self) and self.columns["reached"][-1])

    @property
    def n_collisions(self) -> int:
        return int(self.columns["collided"].sum())

    def rows(self):
        n = len(self)
        for t in range(n):
            row = {}
            for name in LOG_COLUMNS:
                v = self.columns[name][t]
                if name in _INT_COLUMNS:
                    row[name] = int(v)
                elif name in _BOOL_COLUMNS:
                    row[name] = bool(v)
                else:
                    row[name] = float(v)
            row["terminal"] = t == n - 1
            yield row

    def to_jsonl(self) -> str:
        return "".join(json.dumps(r) + "\n" for r in self.rows())

    def write_jsonl(self, path) -> None:
        Path(path).write_text(self.to_jsonl())

    @classmethod
    def read_jsonl(cls, path) -> "EpisodeLog":
        rows = []
        with open(path) as fh:
            for lineno, line in enumerate(fh, 1):
                if not line.strip():
                    continue
                try:
                    row = json.loads(line)
                except json.JSONDecodeError as exc:
                    raise LogFormatError(f"{path}:{lineno}: invalid JSON ({exc.msg})") from None
                if not isinstance(row, dict):
                    raise LogFormatError(f"{path}:{lineno}: expected a JSON object")
                missing = [c for c in ("step", "robot_x", "robot_y") if c not in row]
                if missing:
                    raise LogFormatError(f"{path}:{lineno}: missing field(s) {', '.join(missing)}")
                rows.append(row)
        if not rows:
            raise LogFormatError(f"{path}: log is empty")
        log = cls.allocate(len(rows))
        for t, row in enumerate(rows):
            for name in LOG_COLUMNS:
                if name in row:
                    log.columns[name][t] = row[name]
        return log

    def trajectory(self) -> np.ndarray:
        return np.column_stack([self.columns["robot_x"], self.columns["robot_y"]])


def _record(log: EpisodeLog, t: int, state: WorldState, out, reward: float, td: float,
            v_now: float, collided: bool, reached: bool, hidden_norm: float,
            noise=(0.0, 0.0)) -> None:
    c = log.columns
    c["step"][t] = state.step
    c["robot_x"][t], c["robot_y"][t] = state.robot_pos
    c["heading"][t] = state.robot_heading
    c["action_l"][t], c["action_r"][t] = out[0], out[1]
    c["reward"][t] = reward
    c["td_error"][t] = td
    c["v_now"][t] = v_now
    c["collided"][t] = collided
    c["reached"][t] = reached
    c["hidden_norm"][t] = hidden_norm
    c["noise_l"][t], c["noise_r"][t] = noise[0], noise[1]
    c["obstacle_x"][t], c["obstacle_y"][t] = state.obstacle_pos


def run_episode(actor: ActorChNN, critic: CriticNet, traces: CausalityTraces,
                state: WorldState, world: WorldConfig, td_cfg: TdConfig,
                mode: str = TRAIN) -> EpisodeLog:
    """Run the chaotic actor from ``state`` until the goal or the step cap.

    The actor's hidden state and the traces are reset at the start.  The
    TD target bootstraps on a step-cap timeout and only treats goal arrival
    as a true terminal.
    """
    if mode not in (TRAIN, EVAL):
        raise ValueError(f"mode must be 'train' or 'eval', got {mode!r}")
    train = mode == TRAIN
    actor.reset_state()
    traces.reset(actor)
    log = EpisodeLog.allocate(world.max_steps)
    x = sense(state, world).as_input()
    v_now = critic_eval(critic, x)
    t = 0
    while True:
        out = actor_step(actor, x)
        state, collided = apply_wheels(state, out[0], out[1], world)
        outcome = step_outcome(state, collided, world, td_cfg)
        x_next = sense(state, world).as_input()
        v_next = critic_eval(critic, x_next)
        td = td_error(outcome.reward, v_now, v_next, outcome.reached_goal, td_cfg)
        if train:
            update_traces(traces, x, actor.hidden, actor.output)
            apply_actor_update(actor, traces, td, td_cfg)
            train_critic_step(critic, x, td, td_cfg)
            v_next = critic_eval(critic, x_next)
        _record(log, t, state, out, outcome.reward, td, v_now, collided,
                outcome.reached_goal, float(np.linalg.norm(actor.hidden)))
        t += 1
        if outcome.terminal:
            break
        x, v_now = x_next, v_next
    return log.truncate(t)


def run_baseline_episode(actor: FeedforwardActor, critic: CriticNet, state: WorldState,
                         world: WorldConfig, td_cfg: TdConfig, noise: np.ndarray | None,
                         mode: str = TRAIN) -> EpisodeLog:
    """Feedforward actor explored by external action noise.

    ``noise`` holds one pre-drawn (left, right) pair per possible step;
    ``None`` runs the actor noise-free.
    """
    if mode not in (TRAIN, EVAL):
        raise ValueError(f"mode must be 'train' or 'eval', got {mode!r}")
    train = mode == TRAIN
    log = EpisodeLog.allocate(world.max_steps)
    x = sense(state, world).as_input()
    v_now = critic_eval(critic, x)
    t = 0
    while True:
        y, h = actor.forward(x)
        act = np.clip(y + (noise[t] if noise is not None else 0.0), -0.5, 0.5)
        # the credited perturbation is what was actually executed
        eps = act - y
        state, collided = apply_wheels(state, act[0], act[1], world)
        outcome = step_outcome(state, collided, world, td_cfg)
        x_next = sense(state, world).as_input()
        v_next = critic_eval(critic, x_next)
        td = td_error(outcome.reward, v_now, v_next, outcome.reached_goal, td_cfg)
        if train:
            baseline_noise_update(actor, x, eps, td, td_cfg)
            train_critic_step(critic, x, td, td_cfg)
            v_next = critic_eval(critic, x_next)
        _record(log, t, state, act, outcome.reward, td, v_now, collided,
                outcome.reached_goal, float(np.linalg.norm(h)), eps)
        t += 1
        if outcome.terminal:
            break
        x, v_now = x_next, v_next
    return log.truncate(t)


def steps_to_goal(log: EpisodeLog, max_steps: int) -> int:
    return len(log) if log.reached else max_steps

