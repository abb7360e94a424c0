"""Network data structures and forward dynamics.

The actor is a three-layer recurrent network whose hidden layer carries
large, fixed random feedback weights (the chaotic part).  The critic is a
plain three-layer feedforward value network.  No learning happens here.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from . import rng

N_INPUT = 144
N_HIDDEN_ACTOR = 100
N_HIDDEN_CRITIC = 10
N_OUTPUT = 2

# Largest double strictly below 0.5; keeps saturated units inside the open range.
HALF_OPEN = float(np.nextafter(0.5, 0.0))


class Activation(str, enum.Enum):
    SHIFTED_SIGMOID = "shifted-sigmoid"
    LINEAR = "linear"


def shifted_sigmoid(u):
    """1/(1+exp(-u)) - 0.5, evaluated as 0.5*tanh(u/2) and kept in (-0.5, 0.5)."""
    return np.clip(0.5 * np.tanh(0.5 * np.asarray(u, dtype=float)), -HALF_OPEN, HALF_OPEN)


def shifted_sigmoid_deriv_from_output(y):
    """Derivative of the shifted sigmoid expressed through its output y."""
    return 0.25 - y * y


def activate(kind: Activation, u):
    if kind is Activation.LINEAR:
        return np.asarray(u, dtype=float)
    return shifted_sigmoid(u)


@dataclass
class ActorInitConfig:
    """Initial weight distribution for the chaotic actor."""

    g_fb: float = 10.0
    in_range: float = 1.0
    out_range: float = 1.0
    n_input: int = N_INPUT
    n_hidden: int = N_HIDDEN_ACTOR
    n_output: int = N_OUTPUT
    use_bias: bool = False

    def validate(self) -> None:
        # g_fb == 0 is permitted: a degenerate, non-chaotic actor used in tests.
        if not np.isfinite(self.g_fb) or self.g_fb < 0:
            raise ValueError(f"actor_init.g_fb must be >= 0, got {self.g_fb}")
        for name in ("in_range", "out_range"):
            v = getattr(self, name)
            if not np.isfinite(v) or v < 0:
                raise ValueError(f"actor_init.{name} must be >= 0, got {v}")
        for name in ("n_input", "n_hidden", "n_output"):
            if getattr(self, name) < 1:
                raise ValueError(f"actor_init.{name} must be >= 1")
        if self.use_bias:
            raise ValueError("actor_init.use_bias is reserved; bias terms are not supported")


@dataclass
class ActorChNN:
    w_in: np.ndarray
    w_out: np.ndarray
    w_fb: np.ndarray
    hidden: np.ndarray = field(default=None)  # type: ignore[assignment]
    hidden_potential: np.ndarray = field(default=None)  # type: ignore[assignment]
    output: np.ndarray = field(default=None)  # type: ignore[assignment]
    init_seed: int | None = None
    activation: Activation = Activation.SHIFTED_SIGMOID

    def __post_init__(self) -> None:
        self.w_in = np.ascontiguousarray(self.w_in, dtype=float)
        self.w_out = np.ascontiguousarray(self.w_out, dtype=float)
        self.w_fb = np.ascontiguousarray(self.w_fb, dtype=float)
        nh, _ = self.w_in.shape
        no, nh2 = self.w_out.shape
        if nh2 != nh or self.w_fb.shape != (nh, nh):
            raise ValueError(
                f"inconsistent actor shapes: w_in {self.w_in.shape}, "
                f"w_out {self.w_out.shape}, w_fb {self.w_fb.shape}"
            )
        if self.hidden is None:
            self.reset_state()

    @property
    def n_input(self) -> int:
        return self.w_in.shape[1]

    @property
    def n_hidden(self) -> int:
        return self.w_in.shape[0]

    @property
    def n_output(self) -> int:
        return self.w_out.shape[0]

    def reset_state(self) -> None:
        self.hidden = np.zeros(self.n_hidden)
        self.hidden_potential = np.zeros(self.n_hidden)
        self.output = np.zeros(self.n_output)

    def copy(self) -> "ActorChNN":
        return ActorChNN(
            self.w_in.copy(),
            self.w_out.copy(),
            self.w_fb.copy(),
            self.hidden.copy(),
            self.hidden_potential.copy(),
            self.output.copy(),
            self.init_seed,
            self.activation,
        )


@dataclass
class CriticNet:
    w_in: np.ndarray
    w_out: np.ndarray

    def __post_init__(self) -> None:
        self.w_in = np.ascontiguousarray(self.w_in, dtype=float)
        self.w_out = np.ascontiguousarray(self.w_out, dtype=float).reshape(-1)
        if self.w_out.shape[0] != self.w_in.shape[0]:
            raise ValueError(
                f"inconsistent critic shapes: w_in {self.w_in.shape}, w_out {self.w_out.shape}"
            )

    @property
    def n_input(self) -> int:
        return self.w_in.shape[1]

    def copy(self) -> "CriticNet":
        return CriticNet(self.w_in.copy(), self.w_out.copy())


def init_actor(seed: int, cfg: ActorInitConfig | None = None) -> ActorChNN:
    """Draw a fresh chaotic actor from the ``weights`` stream of ``seed``.

    Feedback weights are N(0, (g_fb/sqrt(n_hidden))^2); input and output
    weights are uniform in [-in_range, in_range] and [-out_range, out_range].
    """
    cfg = cfg or ActorInitConfig()
    cfg.validate()
    gen = rng.stream(seed, rng.WEIGHTS, 0)
    w_fb = gen.normal(0.0, cfg.g_fb / np.sqrt(cfg.n_hidden), (cfg.n_hidden, cfg.n_hidden))
    w_in = cfg.in_range * gen.uniform(-1.0, 1.0, (cfg.n_hidden, cfg.n_input))
    w_out = cfg.out_range * gen.uniform(-1.0, 1.0, (cfg.n_output, cfg.n_hidden))
    return ActorChNN(w_in, w_out, w_fb, init_seed=seed)


def init_critic(seed: int, n_input: int = N_INPUT, n_hidden: int = N_HIDDEN_CRITIC,
                init_range: float = 0.1) -> CriticNet:
    gen = rng.stream(seed, rng.WEIGHTS, 1)
    w_in = gen.uniform(-init_range, init_range, (n_hidden, n_input))
    w_out = gen.uniform(-init_range, init_range, n_hidden)
    return CriticNet(w_in, w_out)


def _check_input(x, n: int) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape != (n,):
        raise ValueError(f"expected input of shape ({n},), got {x.shape}")
    return x


def actor_step(actor: ActorChNN, x) -> np.ndarray:
    """Advance the actor one step on input ``x`` and return its outputs.

    Hidden units see the input plus feedback from the previous hidden
    activations; outputs see only the new hidden activations.
    """
    x = _check_input(x, actor.n_input)
    u = actor.w_in @ x + actor.w_fb @ actor.hidden
    h = shifted_sigmoid(u)
    y = shifted_sigmoid(actor.w_out @ h)
    actor.hidden_potential = u
    actor.hidden = h
    actor.output = y
    return y.copy()


def critic_forward(critic: CriticNet, x) -> tuple[float, np.ndarray]:
    """Return (V(x), hidden activations)."""
    x = _check_input(x, critic.n_input)
    h = shifted_sigmoid(critic.w_in @ x)
    return float(critic.w_out @ h), h


def critic_eval(critic: CriticNet, x) -> float:
    return critic_forward(critic, x)[0]


def critic_grad(critic: CriticNet, x) -> tuple[float, np.ndarray, np.ndarray]:
    """Value and its gradient w.r.t. (w_in, w_out) by backprop."""
    x = np.asarray(x, dtype=float)
    v, h = critic_forward(critic, x)
    g_out = h
    delta = critic.w_out * shifted_sigmoid_deriv_from_output(h)
    g_in = np.outer(delta, x)
    return v, g_in, g_out
