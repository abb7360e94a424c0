"""Versioned JSON checkpoints.

Weights are stored as nested row-major lists of floats.  ``json`` writes
floats with ``repr``, which round-trips exactly, so save -> load -> save is
byte-identical.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .learning import FeedforwardActor
from .netcore import Activation, ActorChNN, CriticNet

FORMAT_VERSION = 1
CHAOTIC = "chaotic"
BASELINE = "baseline"


class CheckpointVersionError(ValueError):
    """The checkpoint was written by an incompatible format version."""


class CheckpointFormatError(ValueError):
    """The checkpoint is missing fields or has inconsistent shapes."""


@dataclass
class Checkpoint:
    method: str
    actor: ActorChNN | FeedforwardActor
    critic: CriticNet | None
    episode: int = 0
    init_seed: int | None = None


def to_dict(ckpt: Checkpoint) -> dict:
    actor = ckpt.actor
    is_chaotic = isinstance(actor, ActorChNN)
    doc = {
        "format_version": FORMAT_VERSION,
        "method": ckpt.method,
        "n_input": int(actor.w_in.shape[1]),
        "n_hidden": int(actor.w_in.shape[0]),
        "n_output": int(actor.w_out.shape[0]),
        "activation_kind": Activation.SHIFTED_SIGMOID.value,
        "init_seed": ckpt.init_seed,
        "episode": int(ckpt.episode),
        "w_in": actor.w_in.tolist(),
        "w_out": actor.w_out.tolist(),
        "w_fb": actor.w_fb.tolist() if is_chaotic else None,
    }
    if ckpt.critic is not None:
        doc["critic"] = {"w_in": ckpt.critic.w_in.tolist(), "w_out": ckpt.critic.w_out.tolist()}
    return doc


def dumps(ckpt: Checkpoint) -> str:
    return json.dumps(to_dict(ckpt), separators=(",", ":")) + "\n"


def save(ckpt: Checkpoint, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dumps(ckpt))
    return path


def _matrix(doc: dict, key: str, shape: tuple[int, int]) -> np.ndarray:
    try:
        arr = np.array(doc[key], dtype=float)
    except KeyError:
        raise CheckpointFormatError(f"checkpoint is missing '{key}'") from None
    except (TypeError, ValueError) as exc:
        raise CheckpointFormatError(f"checkpoint field '{key}' is not a numeric matrix") from exc
    if arr.shape != shape:
        raise CheckpointFormatError(f"checkpoint field '{key}' has shape {arr.shape}, expected {shape}")
    return arr


def from_dict(doc: dict) -> Checkpoint:
    version = doc.get("format_version")
    if version != FORMAT_VERSION:
        raise CheckpointVersionError(
            f"checkpoint format_version {version!r} is not supported (expected {FORMAT_VERSION})"
        )
    try:
        method = doc["method"]
        ni, nh, no = int(doc["n_input"]), int(doc["n_hidden"]), int(doc["n_output"])
    except KeyError as exc:
        raise CheckpointFormatError(f"checkpoint is missing '{exc.args[0]}'") from None
    if doc.get("activation_kind", Activation.SHIFTED_SIGMOID.value) != Activation.SHIFTED_SIGMOID.value:
        raise CheckpointFormatError(f"unsupported activation_kind {doc['activation_kind']!r}")
    w_in = _matrix(doc, "w_in", (nh, ni))
    w_out = _matrix(doc, "w_out", (no, nh))
    seed = doc.get("init_seed")
    if method == CHAOTIC:
        actor = ActorChNN(w_in, w_out, _matrix(doc, "w_fb", (nh, nh)), init_seed=seed)
    elif method == BASELINE:
        actor = FeedforwardActor(w_in, w_out, init_seed=seed)
    else:
        raise CheckpointFormatError(f"unknown method {method!r}")
    critic = None
    if doc.get("critic") is not None:
        c = doc["critic"]
        cw_in = np.array(c["w_in"], dtype=float)
        critic = CriticNet(cw_in, np.array(c["w_out"], dtype=float))
    return Checkpoint(method, actor, critic, int(doc.get("episode", 0)), seed)


def load(path) -> Checkpoint:
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise CheckpointFormatError(f"{path}: not valid JSON ({exc.msg})") from None
    if not isinstance(doc, dict):
        raise CheckpointFormatError(f"{path}: expected a JSON object")
    return from_dict(doc)
