"""Flat key-value experiment configs with strict validation.

The format is ``section.key = value`` lines, ``#`` comments, nothing
nested. Unknown keys are rejected with a suggestion — silent typos are
the top reproducibility hazard — and parse(serialize(c)) round-trips
exactly.
"""

from __future__ import annotations

import difflib
import hashlib
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from .agents import AgentConfig, EpsilonSchedule
from .errors import ConfigError

ENV_CARTPOLE = "cartpole"
ENV_NOISY_MDP = "noisy_mdp"


@dataclass
class FieldSpec:
    kind: str  # int | float | bool | str | int_list
    default: object = None
    required: bool = False


EXPERIMENT_SCHEMA: dict[str, FieldSpec] = {
    "env.name": FieldSpec("str", required=True),
    "env.max_steps": FieldSpec("int", 200),
    "env.mdp_seed": FieldSpec("int", 17),
    "agent.algo": FieldSpec("str", required=True),
    "agent.k": FieldSpec("int", required=True),
    "agent.hidden": FieldSpec("int_list", (64, 32)),
    "agent.architecture": FieldSpec("str", "separate"),
    "agent.action_strategy": FieldSpec("str", "vote"),
    "agent.train_mode": FieldSpec("str", "single"),
    "agent.learner_schedule": FieldSpec("str", "uniform"),
    "agent.evaluator_draw": FieldSpec("str", "per_batch"),
    "agent.gamma": FieldSpec("float", 0.99),
    "agent.batch_size": FieldSpec("int", 32),
    "agent.learning_rate": FieldSpec("float", 0.001),
    "agent.target_sync": FieldSpec("int", 0),
    "agent.mask_p": FieldSpec("float", 1.0),
    "agent.dueling": FieldSpec("bool", False),
    "agent.dueling_mode": FieldSpec("str", "mean"),
    "agent.buffer_capacity": FieldSpec("int", 50_000),
    "agent.epsilon_start": FieldSpec("float", 1.0),
    "agent.epsilon_end": FieldSpec("float", 0.02),
    "agent.epsilon_anneal_steps": FieldSpec("int", 10_000),
    "run.episodes": FieldSpec("int", required=True),
    "run.eval_period": FieldSpec("int", 20),
    "run.eval_episodes": FieldSpec("int", 10),
    "run.probe_period": FieldSpec("int", 20),
    "run.probe_samples": FieldSpec("int", 1024),
    "run.seeds": FieldSpec("int_list", required=True),
    "run.out_dir": FieldSpec("str", "runs"),
}

TABULAR_SCHEMA: dict[str, FieldSpec] = {
    "tabular.mdp": FieldSpec("str", required=True),
    "tabular.mdp_seed": FieldSpec("int", 17),
    "tabular.algo": FieldSpec("str", required=True),
    "tabular.k": FieldSpec("int", required=True),
    "tabular.steps": FieldSpec("int", required=True),
    "tabular.alpha_exponent": FieldSpec("float", 0.8),
    "tabular.epsilon": FieldSpec("float", 0.1),
    "tabular.seeds": FieldSpec("int_list", required=True),
    "tabular.trace_points": FieldSpec("int", 200),
}


@dataclass
class ExperimentConfig:
    """Fully resolved description of one deep-RL experiment."""

    env_name: str
    env_max_steps: int
    env_mdp_seed: int
    agent: AgentConfig
    buffer_capacity: int
    epsilon: EpsilonSchedule
    episodes: int
    eval_period: int
    eval_episodes: int
    probe_period: int
    probe_samples: int
    seeds: tuple[int, ...]
    out_dir: str

    def validate(self) -> None:
        if self.env_name not in (ENV_CARTPOLE, ENV_NOISY_MDP):
            raise ConfigError(f"unknown env.name {self.env_name!r}")
        self.agent.validate()
        if self.episodes < 1 or self.env_max_steps < 1:
            raise ConfigError("run.episodes and env.max_steps must be >= 1")
        if self.eval_period < 1 or self.probe_period < 1:
            raise ConfigError("eval and probe periods must be >= 1")
        if self.eval_episodes < 1 or self.probe_samples < 1:
            raise ConfigError("eval episode and probe sample counts must be >= 1")
        if not self.seeds:
            raise ConfigError("run.seeds must list at least one seed")
        if self.buffer_capacity < self.agent.batch_size:
            raise ConfigError("agent.buffer_capacity must cover one batch")
        for eps in (self.epsilon.start, self.epsilon.end):
            if not 0.0 <= eps <= 1.0:
                raise ConfigError("epsilon endpoints must lie in [0, 1]")
        if self.epsilon.horizon < 0:
            raise ConfigError("agent.epsilon_anneal_steps must be >= 0")


@dataclass
class TabularConfig:
    """Resolved description of a tabular convergence run."""

    mdp: str
    mdp_seed: int
    algo: str
    k: int
    steps: int
    alpha_exponent: float
    epsilon: float
    seeds: tuple[int, ...]
    trace_points: int

    def validate(self) -> None:
        if self.steps < 1 or self.trace_points < 1:
            raise ConfigError("tabular.steps and tabular.trace_points must be >= 1")
        if not self.seeds:
            raise ConfigError("tabular.seeds must list at least one seed")


def _parse_scalar(key: str, kind: str, raw: str):
    try:
        if kind == "int":
            return int(raw)
        if kind == "float":
            return float(raw)
        if kind == "bool":
            if raw in ("true", "false"):
                return raw == "true"
            raise ValueError(raw)
        if kind == "str":
            return raw
        if kind == "int_list":
            parts = [p.strip() for p in raw.split(",") if p.strip()]
            if not parts:
                raise ValueError(raw)
            return tuple(int(p) for p in parts)
    except ValueError:
        raise ConfigError(f"key {key!r}: cannot parse {raw!r} as {kind}") from None
    raise ConfigError(f"internal: unknown field kind {kind!r}")


def _suggest(key: str, schema: dict[str, FieldSpec]) -> str:
    candidates: dict[str, str] = {}
    for full in schema:
        candidates[full] = full
        candidates.setdefault(full.split(".", 1)[1], full)
    hits = difflib.get_close_matches(key, candidates, n=1, cutoff=0.6)
    if hits:
        return f"; did you mean {candidates[hits[0]]!r}?"
    return ""


def parse_document(text: str, schema: dict[str, FieldSpec]) -> dict[str, object]:
    """Parse key-value text against a schema; reject anything unknown."""
    values: dict[str, object] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {line!r}")
        key, _, val = line.partition("=")
        key = key.strip()
        val = val.strip()
        if key not in schema:
            raise ConfigError(f"line {lineno}: unknown key {key!r}{_suggest(key, schema)}")
        if key in values:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        values[key] = _parse_scalar(key, schema[key].kind, val)
    missing = [k for k, spec in schema.items() if spec.required and k not in values]
    if missing:
        raise ConfigError(f"missing required keys: {', '.join(missing)}")
    for key, spec in schema.items():
        values.setdefault(key, spec.default)
    return values


def parse_config(text: str) -> ExperimentConfig:
    """Parse and validate an experiment config document."""
    v = parse_document(text, EXPERIMENT_SCHEMA)
    agent = AgentConfig(
        algo=v["agent.algo"],
        k=v["agent.k"],
        hidden=tuple(v["agent.hidden"]),
        architecture=v["agent.architecture"],
        action_strategy=v["agent.action_strategy"],
        train_mode=v["agent.train_mode"],
        learner_schedule=v["agent.learner_schedule"],
        evaluator_draw=v["agent.evaluator_draw"],
        gamma=v["agent.gamma"],
        batch_size=v["agent.batch_size"],
        learning_rate=v["agent.learning_rate"],
        target_sync=v["agent.target_sync"],
        mask_p=v["agent.mask_p"],
        dueling=v["agent.dueling"],
        dueling_mode=v["agent.dueling_mode"],
    )
    config = ExperimentConfig(
        env_name=v["env.name"],
        env_max_steps=v["env.max_steps"],
        env_mdp_seed=v["env.mdp_seed"],
        agent=agent,
        buffer_capacity=v["agent.buffer_capacity"],
        epsilon=EpsilonSchedule(
            start=v["agent.epsilon_start"],
            end=v["agent.epsilon_end"],
            horizon=v["agent.epsilon_anneal_steps"],
        ),
        episodes=v["run.episodes"],
        eval_period=v["run.eval_period"],
        eval_episodes=v["run.eval_episodes"],
        probe_period=v["run.probe_period"],
        probe_samples=v["run.probe_samples"],
        seeds=tuple(v["run.seeds"]),
        out_dir=v["run.out_dir"],
    )
    config.validate()
    return config


def parse_tabular_config(text: str) -> TabularConfig:
    v = parse_document(text, TABULAR_SCHEMA)
    config = TabularConfig(
        mdp=v["tabular.mdp"],
        mdp_seed=v["tabular.mdp_seed"],
        algo=v["tabular.algo"],
        k=v["tabular.k"],
        steps=v["tabular.steps"],
        alpha_exponent=v["tabular.alpha_exponent"],
        epsilon=v["tabular.epsilon"],
        seeds=tuple(v["tabular.seeds"]),
        trace_points=v["tabular.trace_points"],
    )
    config.validate()
    return config


def _fmt(value: object) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, tuple):
        return ",".join(str(x) for x in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def serialize_config(config: ExperimentConfig) -> str:
    """Canonical text form, in schema order; parses back to an equal config."""
    a = config.agent
    values = {
        "env.name": config.env_name,
        "env.max_steps": config.env_max_steps,
        "env.mdp_seed": config.env_mdp_seed,
        "agent.algo": a.algo,
        "agent.k": a.k,
        "agent.hidden": a.hidden,
        "agent.architecture": a.architecture,
        "agent.action_strategy": a.action_strategy,
        "agent.train_mode": a.train_mode,
        "agent.learner_schedule": a.learner_schedule,
        "agent.evaluator_draw": a.evaluator_draw,
        "agent.gamma": a.gamma,
        "agent.batch_size": a.batch_size,
        "agent.learning_rate": a.learning_rate,
        "agent.target_sync": a.target_sync,
        "agent.mask_p": a.mask_p,
        "agent.dueling": a.dueling,
        "agent.dueling_mode": a.dueling_mode,
        "agent.buffer_capacity": config.buffer_capacity,
        "agent.epsilon_start": config.epsilon.start,
        "agent.epsilon_end": config.epsilon.end,
        "agent.epsilon_anneal_steps": config.epsilon.horizon,
        "run.episodes": config.episodes,
        "run.eval_period": config.eval_period,
        "run.eval_episodes": config.eval_episodes,
        "run.probe_period": config.probe_period,
        "run.probe_samples": config.probe_samples,
        "run.seeds": config.seeds,
        "run.out_dir": config.out_dir,
    }
    lines = [f"{key} = {_fmt(values[key])}" for key in EXPERIMENT_SCHEMA]
    return "\n".join(lines) + "\n"


def config_hash(config: ExperimentConfig) -> str:
    return hashlib.sha256(serialize_config(config).encode()).hexdigest()[:12]


def preset_names() -> list[str]:
    root = resources.files("crossq").joinpath("presets")
    return sorted(p.name[:-4] for p in root.iterdir() if p.name.endswith(".cfg"))


def read_preset(name: str) -> str:
    path = resources.files("crossq").joinpath("presets", f"{name}.cfg")
    try:
        return path.read_text(encoding="utf-8")
    except FileNotFoundError:
        raise ConfigError(
            f"unknown preset {name!r}; available: {', '.join(preset_names())}"
        ) from None


def load_config(name_or_path: str | Path) -> ExperimentConfig:
    """Load an experiment config from a file path or a packaged preset name."""
    return parse_config(_read_config_text(name_or_path))


def load_tabular_config(name_or_path: str | Path) -> TabularConfig:
    return parse_tabular_config(_read_config_text(name_or_path))


def _read_config_text(name_or_path: str | Path) -> str:
    path = Path(name_or_path)
    if path.exists():
        return path.read_text(encoding="utf-8")
    return read_preset(str(name_or_path))
