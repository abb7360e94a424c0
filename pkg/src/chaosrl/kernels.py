"""Backend selection for the episode loops.

The compiled kernel is used when it imports; setting ``CHAOSRL_PURE_PYTHON=1``
(or passing ``backend="python"``) forces the reference loop.  Each backend is
deterministic on its own, but the two differ at rounding level, so a run is
only reproducible on the backend that produced it.
"""

from __future__ import annotations

import os

import numpy as np

from . import episode as _ref
from .env import WorldConfig, WorldState
from .episode import LOG_COLUMNS, TRAIN, EVAL, EpisodeLog
from .learning import CausalityTraces, FeedforwardActor, TdConfig
from .netcore import ActorChNN, CriticNet

try:
    from . import _kernel
except ImportError:  # pragma: no cover - exercised only without a compiler
    _kernel = None

COMPILED = "compiled"
PYTHON = "python"

HAVE_COMPILED = _kernel is not None


def default_backend() -> str:
    if os.environ.get("CHAOSRL_PURE_PYTHON", "") not in ("", "0"):
        return PYTHON
    return COMPILED if HAVE_COMPILED else PYTHON


def _resolve(backend: str | None) -> str:
    backend = backend or default_backend()
    if backend not in (COMPILED, PYTHON):
        raise ValueError(f"unknown backend {backend!r}")
    if backend == COMPILED and not HAVE_COMPILED:
        raise RuntimeError("compiled kernel is not available in this build")
    return backend


def _start(state: WorldState) -> tuple:
    return (*state.robot_pos, state.robot_heading, *state.obstacle_pos)


def _log_from_buffer(buf: np.ndarray, n: int) -> EpisodeLog:
    log = EpisodeLog.allocate(n)
    for k, name in enumerate(LOG_COLUMNS):
        log.columns[name][:] = buf[:n, k]
    return log


def _check_mode(mode: str) -> bool:
    if mode not in (TRAIN, EVAL):
        raise ValueError(f"mode must be 'train' or 'eval', got {mode!r}")
    return mode == TRAIN


def run_episode(actor: ActorChNN, critic: CriticNet, traces: CausalityTraces,
                state: WorldState, world: WorldConfig, td_cfg: TdConfig,
                mode: str = TRAIN, backend: str | None = None) -> EpisodeLog:
    """Chaotic-actor episode on the selected backend."""
    if _resolve(backend) == PYTHON:
        return _ref.run_episode(actor, critic, traces, state, world, td_cfg, mode)
    train = _check_mode(mode)
    buf = np.empty((world.max_steps, len(LOG_COLUMNS)))
    n = _kernel.run_chaotic(
        actor.w_in, actor.w_out, actor.w_fb, critic.w_in, critic.w_out,
        traces.c_in, traces.c_out, actor.hidden, actor.hidden_potential, actor.output,
        _start(state), world, td_cfg, train, buf,
    )
    traces.prev_hidden = actor.hidden.copy()
    traces.prev_output = actor.output.copy()
    return _log_from_buffer(buf, n)


def run_baseline_episode(actor: FeedforwardActor, critic: CriticNet, state: WorldState,
                         world: WorldConfig, td_cfg: TdConfig, noise: np.ndarray | None,
                         mode: str = TRAIN, backend: str | None = None) -> EpisodeLog:
    """External-noise baseline episode on the selected backend."""
    if _resolve(backend) == PYTHON:
        return _ref.run_baseline_episode(actor, critic, state, world, td_cfg, noise, mode)
    train = _check_mode(mode)
    if noise is None:
        noise = np.zeros((world.max_steps, 2))
    buf = np.empty((world.max_steps, len(LOG_COLUMNS)))
    n = _kernel.run_baseline(
        actor.w_in, actor.w_out, critic.w_in, critic.w_out,
        np.ascontiguousarray(noise, dtype=float), _start(state), world, td_cfg, train, buf,
    )
    return _log_from_buffer(buf, n)
