"""Config-driven experiment runner and measurement protocol.

A run trains one agent for a fixed number of episodes, interleaving
periodic greedy evaluations and Q-value probes, and records everything
in a MetricsLog that serializes to CSV byte-reproducibly. Randomness
comes from named streams split off the root seed, so toggling one
feature (say, probing) never perturbs another stream (say, exploration).
"""

from __future__ import annotations

import os
import zlib
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .agents import (
    QEnsemble,
    STRATEGY_SINGLE,
    STRATEGY_VOTE,
    epsilon_at,
    select_action,
    train_step,
)
from .config import ENV_CARTPOLE, ENV_NOISY_MDP, ExperimentConfig, config_hash, serialize_config
from .envs import CartPoleEnv, MdpEnv
from .errors import ConfigError, InsufficientDataError
from .replay import ReplayBuffer, Transition
from .tabular import noisy_bench_mdp

Array = np.ndarray

STREAM_ENV = "env"
STREAM_AGENT_INIT = "agent_init"
STREAM_TRAIN = "train"
STREAM_EXPLORE = "explore"
STREAM_EVAL = "eval"
STREAM_PROBE = "probe"


def named_rng(root_seed: int, name: str) -> np.random.Generator:
    """Independent generator for (root seed, stream name); order-free."""
    return np.random.default_rng([root_seed, zlib.crc32(name.encode())])


@dataclass
class TrainRow:
    episode: int
    steps: int
    ret: float


@dataclass
class EvalRow:
    episode: int
    eval_index: int
    ret: float


@dataclass
class ProbeRow:
    episode: int
    mean_q: float


@dataclass
class MetricsLog:
    """Everything a run measured, plus the config that produced it."""

    config_text: str
    config_hash: str
    seed: int
    train: list[TrainRow] = field(default_factory=list)
    evals: list[EvalRow] = field(default_factory=list)
    probes: list[ProbeRow] = field(default_factory=list)


def build_env(config: ExperimentConfig):
    if config.env_name == ENV_CARTPOLE:
        return CartPoleEnv(max_steps=config.env_max_steps)
    if config.env_name == ENV_NOISY_MDP:
        return MdpEnv(noisy_bench_mdp(seed=config.env_mdp_seed), max_steps=config.env_max_steps)
    raise ConfigError(f"unknown env.name {config.env_name!r}")


def evaluate_policy(
    ensemble: QEnsemble, env, episodes: int, rng: np.random.Generator
) -> list[float]:
    """Greedy returns over fresh episodes: no exploration, majority vote
    across members when there is more than one."""
    strategy = STRATEGY_VOTE if ensemble.k > 1 else STRATEGY_SINGLE
    returns = []
    for _ in range(episodes):
        obs = env.reset(rng)
        total = 0.0
        done = False
        while not done:
            action = select_action(ensemble, obs, strategy, 0.0, rng)
            result = env.step(action, rng)
            total += result.reward
            obs = result.observation
            done = result.done
        returns.append(total)
    return returns


def q_probe(ensemble: QEnsemble, buf: ReplayBuffer, n: int, rng: np.random.Generator) -> float:
    """Mean over members and sampled stored (s, a) pairs of Q(s, a).

    Early in training the buffer may hold fewer than n pairs; the probe
    then uses everything stored rather than failing.
    """
    if len(buf) == 0:
        raise InsufficientDataError("cannot probe an empty buffer")
    states, actions = buf.sample_state_actions(n, rng)
    rows = np.arange(len(actions))
    per_member = [
        ensemble.q_batch(m, states)[rows, actions].mean() for m in range(ensemble.k)
    ]
    return float(np.mean(per_member))


def run_experiment(config: ExperimentConfig, seed: int) -> MetricsLog:
    """Train for the configured episode budget and log the full protocol.

    Deterministic: (config, seed) fixes every byte of the serialized log.
    """
    config.validate()
    env = build_env(config)
    eval_env = build_env(config)
    rngs = {
        name: named_rng(seed, name)
        for name in (
            STREAM_ENV,
            STREAM_AGENT_INIT,
            STREAM_TRAIN,
            STREAM_EXPLORE,
            STREAM_EVAL,
            STREAM_PROBE,
        )
    }
    ensemble = QEnsemble(env.obs_dim, env.n_actions, config.agent, rngs[STREAM_AGENT_INIT])
    if ensemble.obs_dim != env.obs_dim or ensemble.n_actions != env.n_actions:
        raise ConfigError("agent and environment disagree on dimensions")
    buf = ReplayBuffer(config.buffer_capacity, env.obs_dim)
    log = MetricsLog(
        config_text=serialize_config(config), config_hash=config_hash(config), seed=seed
    )
    strategy = config.agent.action_strategy
    global_step = 0
    for episode in range(1, config.episodes + 1):
        head = 0
        if strategy == "bootstrap":
            head = int(rngs[STREAM_EXPLORE].integers(ensemble.k))
        obs = env.reset(rngs[STREAM_ENV])
        ep_return = 0.0
        ep_steps = 0
        done = False
        while not done:
            eps = epsilon_at(config.epsilon, global_step)
            action = select_action(
                ensemble, obs, strategy, eps, rngs[STREAM_EXPLORE], episode_head=head
            )
            result = env.step(action, rngs[STREAM_ENV])
            buf.push(Transition(obs, action, result.reward, result.observation, result.done))
            train_step(ensemble, buf, config.agent, rngs[STREAM_TRAIN], global_step)
            global_step += 1
            ep_return += result.reward
            ep_steps += 1
            obs = result.observation
            done = result.done
        log.train.append(TrainRow(episode, ep_steps, ep_return))
        if episode % config.eval_period == 0:
            returns = evaluate_policy(
                ensemble, eval_env, config.eval_episodes, rngs[STREAM_EVAL]
            )
            for idx, ret in enumerate(returns):
                log.evals.append(EvalRow(episode, idx, ret))
        if episode % config.probe_period == 0:
            log.probes.append(
                ProbeRow(episode, q_probe(ensemble, buf, config.probe_samples, rngs[STREAM_PROBE]))
            )
    return log


def _fmt_float(x: float) -> str:
    return repr(float(x))


def write_metrics(log: MetricsLog, out_dir: str | Path) -> list[Path]:
    """Serialize a log to train/eval/probe CSVs plus a metadata echo.

    Floats are printed with round-trip-exact formatting, so identical
    logs produce byte-identical files.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    train_path = out / "train.csv"
    lines = ["episode,steps,return"]
    lines += [f"{r.episode},{r.steps},{_fmt_float(r.ret)}" for r in log.train]
    train_path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    eval_path = out / "eval.csv"
    lines = ["episode,eval_index,return"]
    lines += [f"{r.episode},{r.eval_index},{_fmt_float(r.ret)}" for r in log.evals]
    eval_path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    probe_path = out / "probe.csv"
    lines = ["episode,mean_q"]
    lines += [f"{r.episode},{_fmt_float(r.mean_q)}" for r in log.probes]
    probe_path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    meta_path = out / "meta.txt"
    meta = f"seed = {log.seed}\nconfig_hash = {log.config_hash}\n\n{log.config_text}"
    meta_path.write_text(meta, encoding="utf-8")
    return [train_path, eval_path, probe_path, meta_path]


def output_root(config: ExperimentConfig) -> Path:
    """Configured output directory, overridable via CROSSQ_OUT only."""
    return Path(os.environ.get("CROSSQ_OUT", config.out_dir))


def run_and_write(config: ExperimentConfig, seed: int, out_root: Path | None = None) -> Path:
    """Run one seed and write its files under <root>/seed_<N>/."""
    root = Path(out_root) if out_root is not None else output_root(config)
    log = run_experiment(config, seed)
    run_dir = root / f"seed_{seed}"
    write_metrics(log, run_dir)
    return run_dir
