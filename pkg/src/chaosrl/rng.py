"""Named random sub-streams derived from one master seed.

Every consumer (weights, placements, baseline noise, perturbations, ...)
gets its own Philox stream keyed by a stable hash of its name, so adding a
new consumer never shifts the draws seen by the existing ones.
"""

from __future__ import annotations

import zlib

import numpy as np

WEIGHTS = "weights"
PLACEMENTS = "placements"
BASELINE_NOISE = "baseline-noise"
LYAPUNOV = "lyapunov-perturbations"
EVAL = "eval-placements"


def stream(seed: int, name: str, *extra: int) -> np.random.Generator:
    """Return the generator for sub-stream ``name`` of master ``seed``.

    ``extra`` integers refine the key further (e.g. a perturbation seed).
    """
    key = (zlib.crc32(name.encode("utf-8")), *(int(e) for e in extra))
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=key)
    return np.random.Generator(np.random.Philox(ss))
