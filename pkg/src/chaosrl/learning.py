"""Causality-trace actor learning, TD(0) critic learning, and the noise baseline."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import rng
from .netcore import (
    ActorChNN,
    CriticNet,
    critic_grad,
    shifted_sigmoid,
    shifted_sigmoid_deriv_from_output,
)


@dataclass
class TdConfig:
    gamma: float = 0.9
    eta_actor: float = 0.03
    eta_critic: float = 0.05
    reward_goal: float = 1.0
    penalty_collision: float = -0.1

    def validate(self) -> None:
        if not 0.0 <= self.gamma < 1.0:
            raise ValueError(f"td.gamma must be in [0, 1), got {self.gamma}")
        if not self.eta_actor > 0:
            raise ValueError(f"td.eta_actor must be > 0, got {self.eta_actor}")
        if not self.eta_critic > 0:
            raise ValueError(f"td.eta_critic must be > 0, got {self.eta_critic}")
        if not math.isfinite(self.reward_goal):
            raise ValueError("td.reward_goal must be finite")
        if not (math.isfinite(self.penalty_collision) and self.penalty_collision <= 0):
            raise ValueError(f"td.penalty_collision must be <= 0, got {self.penalty_collision}")


@dataclass
class CausalityTraces:
    """One trace per trained connection plus the previous layer outputs."""

    c_in: np.ndarray
    c_out: np.ndarray
    prev_hidden: np.ndarray
    prev_output: np.ndarray

    @classmethod
    def zeros_like(cls, actor: ActorChNN) -> "CausalityTraces":
        return cls(
            np.zeros_like(actor.w_in),
            np.zeros_like(actor.w_out),
            actor.hidden.copy(),
            actor.output.copy(),
        )

    def reset(self, actor: ActorChNN) -> None:
        """Zero every trace and resynchronise with the actor's current state."""
        self.c_in[...] = 0.0
        self.c_out[...] = 0.0
        self.prev_hidden = actor.hidden.copy()
        self.prev_output = actor.output.copy()


def trace_layer(c: np.ndarray, prev_post: np.ndarray, post: np.ndarray, pre: np.ndarray) -> None:
    """In-place causality-trace update for one layer.

    ``c[j, i] <- (1 - |dx_j|) c[j, i] + dx_j * pre[i]`` with
    ``dx_j = post[j] - prev_post[j]``.
    """
    dx = (post - prev_post)[:, None]
    c *= 1.0 - np.abs(dx)
    c += dx * pre


def update_traces(traces: CausalityTraces, x, hidden, output) -> CausalityTraces:
    """Feed one actor step (input, new hidden, new output) into the traces."""
    x = np.asarray(x, dtype=float)
    hidden = np.asarray(hidden, dtype=float)
    output = np.asarray(output, dtype=float)
    if traces.c_in.shape != (hidden.shape[0], x.shape[0]):
        raise ValueError(
            f"trace shape {traces.c_in.shape} does not match input {x.shape}/hidden {hidden.shape}"
        )
    if traces.c_out.shape != (output.shape[0], hidden.shape[0]):
        raise ValueError(
            f"trace shape {traces.c_out.shape} does not match hidden {hidden.shape}/output {output.shape}"
        )
    trace_layer(traces.c_in, traces.prev_hidden, hidden, x)
    trace_layer(traces.c_out, traces.prev_output, output, hidden)
    traces.prev_hidden = hidden.copy()
    traces.prev_output = output.copy()
    return traces


def apply_actor_update(actor: ActorChNN, traces: CausalityTraces, td: float,
                       cfg: TdConfig) -> ActorChNN:
    """w += eta * td * C on the trained layers; feedback weights are left alone."""
    if not math.isfinite(td):
        raise ValueError(f"non-finite TD error: {td}")
    if td != 0.0:
        k = cfg.eta_actor * td
        actor.w_in += k * traces.c_in
        actor.w_out += k * traces.c_out
    return actor


def td_error(r: float, v_now: float, v_next: float, terminal: bool, cfg: TdConfig) -> float:
    for val in (r, v_now, v_next):
        if not math.isfinite(val):
            raise ValueError(f"non-finite TD operand: {val}")
    return r + (0.0 if terminal else cfg.gamma * v_next) - v_now


def train_critic_step(critic: CriticNet, x, td: float, cfg: TdConfig) -> CriticNet:
    """Semi-gradient TD(0): w += eta_critic * td * dV(x)/dw."""
    x = np.asarray(x, dtype=float)
    if not math.isfinite(td) or not np.all(np.isfinite(x)):
        raise ValueError("non-finite critic training input")
    if td == 0.0:
        return critic
    _, g_in, g_out = critic_grad(critic, x)
    k = cfg.eta_critic * td
    critic.w_in += k * g_in
    critic.w_out += k * g_out
    return critic


@dataclass
class FeedforwardActor:
    """Plain three-layer actor used by the external-noise baseline."""

    w_in: np.ndarray
    w_out: np.ndarray
    init_seed: int | None = None

    def __post_init__(self) -> None:
        self.w_in = np.ascontiguousarray(self.w_in, dtype=float)
        self.w_out = np.ascontiguousarray(self.w_out, dtype=float)
        if self.w_out.shape[1] != self.w_in.shape[0]:
            raise ValueError("inconsistent feedforward actor shapes")

    @property
    def n_input(self) -> int:
        return self.w_in.shape[1]

    @property
    def n_output(self) -> int:
        return self.w_out.shape[0]

    def forward(self, x) -> tuple[np.ndarray, np.ndarray]:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.n_input,):
            raise ValueError(f"expected input of shape ({self.n_input},), got {x.shape}")
        h = shifted_sigmoid(self.w_in @ x)
        return shifted_sigmoid(self.w_out @ h), h

    def copy(self) -> "FeedforwardActor":
        return FeedforwardActor(self.w_in.copy(), self.w_out.copy(), self.init_seed)


def init_feedforward_actor(seed: int, n_input: int = 144, n_hidden: int = 100,
                           n_output: int = 2, init_range: float = 0.1) -> FeedforwardActor:
    gen = rng.stream(seed, rng.WEIGHTS, 2)
    w_in = gen.uniform(-init_range, init_range, (n_hidden, n_input))
    w_out = gen.uniform(-init_range, init_range, (n_output, n_hidden))
    return FeedforwardActor(w_in, w_out, init_seed=seed)


def baseline_noise_update(actor: FeedforwardActor, x, noise, td: float,
                          cfg: TdConfig) -> FeedforwardActor:
    """One-step backprop of the error ``td * noise`` through the actor.

    The executed action was ``output + noise``; reinforcing it means moving
    the output toward the action when ``td > 0`` and away otherwise.
    """
    noise = np.asarray(noise, dtype=float)
    if noise.shape != (actor.n_output,):
        raise ValueError(f"expected noise of shape ({actor.n_output},), got {noise.shape}")
    if not math.isfinite(td):
        raise ValueError(f"non-finite TD error: {td}")
    y, h = actor.forward(x)
    err = td * noise
    if not np.any(err):
        return actor
    x = np.asarray(x, dtype=float)
    d_out = err * shifted_sigmoid_deriv_from_output(y)
    d_hid = (actor.w_out.T @ d_out) * shifted_sigmoid_deriv_from_output(h)
    actor.w_out += cfg.eta_actor * np.outer(d_out, h)
    actor.w_in += cfg.eta_actor * np.outer(d_hid, x)
    return actor
