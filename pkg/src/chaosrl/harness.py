"""Training / evaluation orchestration and file emission."""

from __future__ import annotations

import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__, checkpoint, kernels, rng
from .analysis import DegenerateLyapunovError, learning_curve, one_step_lyapunov_detail
from .checkpoint import Checkpoint
from .config import BASELINE, CHAOTIC, RunConfig
from .env import WorldConfig, WorldState, compass_sites, reset_episode
from .episode import EVAL, TRAIN, EpisodeLog, steps_to_goal
from .learning import CausalityTraces, TdConfig, init_feedforward_actor
from .netcore import ActorChNN, CriticNet, init_actor, init_critic


class UnsupportedMethodError(ValueError):
    """The operation does not apply to this kind of checkpoint."""


def fmt(v: float) -> str:
    """Full-precision decimal that round-trips through float()."""
    return repr(float(v))


@dataclass
class SeedResult:
    seed: int
    steps: list[int]
    files: list[str] = field(default_factory=list)
    lyapunov: list[dict] = field(default_factory=list)
    reached: list[bool] = field(default_factory=list)


def write_learning_curve(path: Path, steps) -> None:
    lines = ["episode,steps,window_mean\n"]
    for p in learning_curve(steps):
        wm = "" if p.window_mean is None else fmt(p.window_mean)
        lines.append(f"{p.episode_index},{p.steps_to_goal},{wm}\n")
    path.write_text("".join(lines))


def lyapunov_report(actor: ActorChNN, cfg: RunConfig) -> tuple[float, int]:
    """Mean one-step exponent over the configured perturbation seeds.

    ``n_degenerate`` is the largest per-seed count of collapsed pairs (0..64).
    Returns ``(nan, n_degenerate)`` when every perturbation collapsed.
    """
    values, n_deg = [], 0
    for ps in cfg.lyapunov.perturbation_seeds:
        try:
            res = one_step_lyapunov_detail(actor, cfg.lyapunov.to_config(ps), cfg.world)
        except DegenerateLyapunovError as exc:
            n_deg = max(n_deg, exc.n_degenerate)
            continue
        values.append(res.value)
        n_deg = max(n_deg, res.n_degenerate)
    return (float(np.mean(values)) if values else math.nan), n_deg


def write_lyapunov_csv(path: Path, rows: list[dict]) -> None:
    lines = ["checkpoint_id,episode,lambda,n_degenerate\n"]
    for r in rows:
        lam = "" if math.isnan(r["lambda"]) else fmt(r["lambda"])
        lines.append(f"{r['checkpoint_id']},{r['episode']},{lam},{r['n_degenerate']}\n")
    path.write_text("".join(lines))


def _checkpoint_name(episode: int) -> str:
    return f"ep{episode:06d}.json"


def train_seed(cfg: RunConfig, seed: int, out_dir: Path | None = None,
               backend: str | None = None) -> SeedResult:
    """Train one seed from scratch.  Writes files when ``out_dir`` is given."""
    result = SeedResult(seed, [])
    world, td = cfg.world, cfg.td
    placements = rng.stream(seed, rng.PLACEMENTS)
    critic = init_critic(seed, init_range=cfg.critic_init_range)
    if cfg.method == CHAOTIC:
        actor = init_actor(seed, cfg.actor_init)
        traces = CausalityTraces.zeros_like(actor)
    else:
        actor = init_feedforward_actor(seed, n_hidden=cfg.baseline.n_hidden,
                                       init_range=cfg.baseline.init_range)
        noise_gen = rng.stream(seed, rng.BASELINE_NOISE)

    if out_dir is not None:
        seed_dir = out_dir / f"seed_{seed}"
        (seed_dir / "checkpoints").mkdir(parents=True, exist_ok=True)
        if cfg.log_every:
            (seed_dir / "logs").mkdir(exist_ok=True)

    def snapshot(episode: int) -> None:
        if cfg.method == CHAOTIC:
            lam, n_deg = lyapunov_report(actor, cfg)
            result.lyapunov.append({"checkpoint_id": _checkpoint_name(episode)[:-5],
                                    "episode": episode, "lambda": lam, "n_degenerate": n_deg})
        if out_dir is not None:
            path = seed_dir / "checkpoints" / _checkpoint_name(episode)
            checkpoint.save(Checkpoint(cfg.method, actor, critic, episode, seed), path)
            result.files.append(str(path.relative_to(out_dir)))

    snapshot(0)
    for ep in range(1, cfg.episodes + 1):
        state = reset_episode(placements, world)
        if cfg.method == CHAOTIC:
            log = kernels.run_episode(actor, critic, traces, state, world, td, TRAIN, backend)
        else:
            noise = noise_gen.normal(0.0, cfg.baseline.noise_std, (world.max_steps, 2))
            log = kernels.run_baseline_episode(actor, critic, state, world, td, noise, TRAIN,
                                               backend)
        result.steps.append(steps_to_goal(log, world.max_steps))
        result.reached.append(log.reached)
        if out_dir is not None and cfg.log_every and (
                ep == 1 or ep % cfg.log_every == 0 or ep == cfg.episodes):
            path = seed_dir / "logs" / f"ep{ep:06d}.jsonl"
            log.write_jsonl(path)
            result.files.append(str(path.relative_to(out_dir)))
        if ep % cfg.checkpoint_every == 0 or ep == cfg.episodes:
            snapshot(ep)

    if out_dir is not None:
        path = seed_dir / "learning_curve.csv"
        write_learning_curve(path, result.steps)
        result.files.append(str(path.relative_to(out_dir)))
        if cfg.method == CHAOTIC:
            path = seed_dir / "lyapunov.csv"
            write_lyapunov_csv(path, result.lyapunov)
            result.files.append(str(path.relative_to(out_dir)))
    return result


def _train_seed_job(args):
    cfg, seed, out_dir, backend = args
    return train_seed(cfg, seed, out_dir, backend)


def _manifest(cfg: RunConfig, backend: str, results: list[SeedResult], started: float) -> dict:
    finished = time.time()
    manifest = {
        "artifact_version": __version__,
        "config_hash": cfg.digest(),
        "method": cfg.method,
        "backend": backend,
        "config_file": "config.yaml",
        "seeds": {
            str(r.seed): {
                "files": r.files,
                "final_window_mean": float(np.mean(r.steps[-100:])) if r.steps else None,
            }
            for r in results
        },
        "wall_clock": {"started": started, "finished": finished, "seconds": finished - started},
    }
    if cfg.method == BASELINE:
        manifest["noise_stream"] = rng.BASELINE_NOISE
    return manifest


def cmd_train(cfg: RunConfig, backend: str | None = None) -> dict:
    """Train every configured seed and write ``manifest.json``; returns the manifest.

    On an I/O failure a manifest marked ``"status": "partial"`` listing the
    seeds that completed is written (if possible) before the error propagates.
    """
    cfg.validate()
    backend = backend or kernels.default_backend()
    out_dir = Path(cfg.output_dir)
    started = time.time()
    results: list[SeedResult] = []
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        (out_dir / "config.yaml").write_text(cfg.dump())
        jobs = [(cfg, s, out_dir, backend) for s in cfg.seeds]
        if cfg.workers > 1 and len(jobs) > 1:
            with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
                for r in pool.map(_train_seed_job, jobs):
                    results.append(r)
        else:
            for j in jobs:
                results.append(_train_seed_job(j))
    except OSError as exc:
        manifest = _manifest(cfg, backend, results, started)
        manifest["status"] = "partial"
        manifest["error"] = f"{type(exc).__name__}: {exc}"
        try:
            (out_dir / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")
        except OSError:
            pass
        raise
    manifest = _manifest(cfg, backend, results, started)
    manifest["status"] = "complete"
    (out_dir / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")
    return manifest


def canonical_starts(world: WorldConfig | None = None) -> list[WorldState]:
    """Eight fixed evaluation starts: robot on a radius-6 compass point facing
    +y, obstacle on the opposite radius-4 compass point."""
    robots = compass_sites(6.0)
    obstacles = compass_sites(4.0)
    return [WorldState(robots[k], math.pi / 2, obstacles[(k + 4) % 8]) for k in range(8)]


def run_eval_episode(ckpt: Checkpoint, state: WorldState, world: WorldConfig, td: TdConfig,
                     backend: str | None = None) -> EpisodeLog:
    critic = ckpt.critic or CriticNet(np.zeros((10, ckpt.actor.n_input)), np.zeros(10))
    if ckpt.method == CHAOTIC:
        actor = ckpt.actor.copy()
        traces = CausalityTraces.zeros_like(actor)
        return kernels.run_episode(actor, critic.copy(), traces, state, world, td, EVAL, backend)
    return kernels.run_baseline_episode(ckpt.actor.copy(), critic.copy(), state, world, td, None,
                                        EVAL, backend)


def write_trajectory_csv(path: Path, log: EpisodeLog) -> None:
    lines = ["step,x,y\n"]
    for s, x, y in zip(log["step"], log["robot_x"], log["robot_y"]):
        lines.append(f"{int(s)},{fmt(x)},{fmt(y)}\n")
    path.write_text("".join(lines))


def cmd_eval(ckpt: Checkpoint, n_episodes: int, seed: int, world: WorldConfig | None = None,
             td: TdConfig | None = None, out_dir: Path | None = None,
             backend: str | None = None) -> dict:
    """Evaluate from the 8 canonical starts plus ``n_episodes`` random ones."""
    world = world or WorldConfig()
    td = td or TdConfig()
    gen = rng.stream(seed, rng.EVAL)
    starts = [("canonical", s) for s in canonical_starts(world)]
    starts += [("random", reset_episode(gen, world)) for _ in range(n_episodes)]
    if out_dir is not None:
        (out_dir / "trajectories").mkdir(parents=True, exist_ok=True)
        (out_dir / "logs").mkdir(exist_ok=True)
    steps, reached, collisions = [], [], 0
    rand_reached = []
    for i, (kind, state) in enumerate(starts):
        log = run_eval_episode(ckpt, state, world, td, backend)
        steps.append(steps_to_goal(log, world.max_steps))
        reached.append(log.reached)
        if kind == "random":
            rand_reached.append(log.reached)
        collisions += log.n_collisions
        if out_dir is not None:
            name = f"{kind}_{i:04d}"
            write_trajectory_csv(out_dir / "trajectories" / f"{name}.csv", log)
            log.write_jsonl(out_dir / "logs" / f"{name}.jsonl")
    summary = {
        "method": ckpt.method,
        "episode": ckpt.episode,
        "n_episodes": len(starts),
        "reach_rate": float(np.mean(reached)),
        "random_start_reach_rate": float(np.mean(rand_reached)) if rand_reached else None,
        "mean_steps": float(np.mean(steps)),
        "collision_count": int(collisions),
    }
    if out_dir is not None:
        (out_dir / "summary.json").write_text(json.dumps(summary, indent=2) + "\n")
    return summary


def cmd_lyapunov(ckpt: Checkpoint, cfg: RunConfig | None = None, checkpoint_id: str = "",
                 out_path: Path | None = None) -> dict:
    """One-step Lyapunov report for a chaotic checkpoint.

    Raises :class:`DegenerateLyapunovError` after writing the report when
    every perturbation collapsed.
    """
    if ckpt.method != CHAOTIC:
        raise UnsupportedMethodError(
            f"Lyapunov analysis needs a chaotic-actor checkpoint, got method '{ckpt.method}'")
    cfg = cfg or RunConfig()
    lam, n_deg = lyapunov_report(ckpt.actor, cfg)
    row = {"checkpoint_id": checkpoint_id, "episode": ckpt.episode, "lambda": lam,
           "n_degenerate": n_deg}
    if out_path is not None:
        write_lyapunov_csv(out_path, [row])
    if math.isnan(lam):
        raise DegenerateLyapunovError(n_deg)
    return row


def render_svg(log: EpisodeLog, world: WorldConfig | None = None) -> str:
    """Trajectory, goal and obstacle in field coordinates (y up)."""
    world = world or WorldConfig()
    h = world.field_half
    gx, gy = world.goal_center
    ox, oy = float(log["obstacle_x"][0]), float(log["obstacle_y"][0])
    pts = " ".join(f"{fmt(x)},{fmt(y)}" for x, y in zip(log["robot_x"], log["robot_y"]))
    return (
        f'<svg xmlns="http://www.w3.org/2000/svg" viewBox="{-h} {-h} {2 * h} {2 * h}" '
        f'width="400" height="400">\n'
        f'<g transform="scale(1,-1)">\n'
        f'<rect x="{-h}" y="{-h}" width="{2 * h}" height="{2 * h}" fill="white" '
        f'stroke="black" stroke-width="0.05"/>\n'
        f'<circle class="goal" cx="{fmt(gx)}" cy="{fmt(gy)}" r="{fmt(world.goal_radius)}" '
        f'fill="none" stroke="green" stroke-width="0.08"/>\n'
        f'<circle class="obstacle" cx="{fmt(ox)}" cy="{fmt(oy)}" '
        f'r="{fmt(world.obstacle_radius)}" fill="gray"/>\n'
        f'<polyline class="trajectory" points="{pts}" fill="none" stroke="blue" '
        f'stroke-width="0.05"/>\n'
        f"</g>\n</svg>\n"
    )


def cmd_replay(log_path, csv_path=None, svg_path=None, world: WorldConfig | None = None) -> str:
    """Trajectory CSV (returned, and written if ``csv_path``) and optional SVG."""
    log = EpisodeLog.read_jsonl(log_path)
    lines = ["step,x,y\n"]
    for s, x, y in zip(log["step"], log["robot_x"], log["robot_y"]):
        lines.append(f"{int(s)},{fmt(x)},{fmt(y)}\n")
    text = "".join(lines)
    if csv_path is not None:
        Path(csv_path).write_text(text)
    if svg_path is not None:
        Path(svg_path).write_text(render_svg(log, world))
    return text
