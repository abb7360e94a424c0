"""Episode-loop throughput: compiled kernel vs the pure-Python reference.

    python3 benchmarks/bench_kernels.py --episodes 3 --mode train
"""

from __future__ import annotations

import argparse
import time

from chaosrl import kernels, rng
from chaosrl.config import BaselineSettings
from chaosrl.env import WorldConfig, reset_episode
from chaosrl.episode import EVAL, TRAIN
from chaosrl.learning import CausalityTraces, TdConfig, init_feedforward_actor
from chaosrl.netcore import init_actor, init_critic


def time_backend(backend: str, method: str, mode: str, episodes: int, seed: int) -> tuple[int, float]:
    world, td = WorldConfig(), TdConfig()
    critic = init_critic(seed)
    placements = rng.stream(seed, rng.PLACEMENTS)
    if method == "chaotic":
        actor = init_actor(seed)
        traces = CausalityTraces.zeros_like(actor)
    else:
        actor = init_feedforward_actor(seed, init_range=1.0)
        noise_gen = rng.stream(seed, rng.BASELINE_NOISE)
    steps = 0
    t0 = time.perf_counter()
    for _ in range(episodes):
        state = reset_episode(placements, world)
        if method == "chaotic":
            log = kernels.run_episode(actor, critic, traces, state, world, td, mode, backend)
        else:
            noise = noise_gen.normal(0.0, BaselineSettings().noise_std, (world.max_steps, 2))
            log = kernels.run_baseline_episode(actor, critic, state, world, td, noise, mode, backend)
        steps += len(log)
    return steps, time.perf_counter() - t0


def main() -> None:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--episodes", type=int, default=3)
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--method", choices=["chaotic", "baseline"], default="chaotic")
    p.add_argument("--mode", choices=[TRAIN, EVAL], default=TRAIN)
    args = p.parse_args()
    backends = [kernels.PYTHON] + ([kernels.COMPILED] if kernels.HAVE_COMPILED else [])
    rates = {}
    for backend in backends:
        steps, secs = time_backend(backend, args.method, args.mode, args.episodes, args.seed)
        rates[backend] = secs / steps
        print(f"{backend:9s} {steps:6d} steps  {secs:8.3f} s  {1e6 * secs / steps:8.2f} us/step")
    if len(rates) == 2:
        print(f"speedup   {rates[kernels.PYTHON] / rates[kernels.COMPILED]:.1f}x")


if __name__ == "__main__":
    main()
