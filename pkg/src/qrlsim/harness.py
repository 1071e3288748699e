"""Experiment runner: seed and learning-rate sweeps, aggregation, CSV output.

Config files are flat ``key = value`` text with ``#`` comments.  List-valued
keys (``seeds``, ``alpha``) take comma-separated values.  See README for the
full key list.
"""

from __future__ import annotations

import csv
import io
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import kernels
from .agents import AgentConfig, QLearningAgent, QRLAgent, TD0Agent, greedy_path_length
from .errors import ConfigError, InvalidArgument, MapParseError
from .gridworld import GridWorld, bfs_shortest, load_map, read_map
from .quantum import iteration_cap

log = logging.getLogger(__name__)

AGENTS = ("qrl", "td0", "qlearning")
RUNS_HEADER = ["agent", "alpha", "seed", "episode", "steps", "truncated"]


@dataclass(frozen=True)
class ExperimentConfig:
    agent: str = "qrl"
    map: str = "empty20"
    episodes: int = 10000
    seeds: tuple = tuple(range(1, 11))
    alphas: tuple = (0.06,)
    gamma: float = 0.99
    k: float = 0.01
    epsilon: float = 0.01
    max_steps: int | None = None
    sweep: bool = False
    alpha_schedule: str = "constant"
    window: int = 100
    out: str = "results"
    log_x: bool = False

    def validate(self):
        if self.agent not in AGENTS:
            raise ConfigError(f"agent must be one of {', '.join(AGENTS)}; got {self.agent!r}")
        if self.episodes < 1:
            raise ConfigError("episodes must be >= 1")
        if not self.seeds:
            raise ConfigError("at least one seed is required")
        if not self.alphas:
            raise ConfigError("at least one alpha is required")
        if self.window < 1:
            raise ConfigError("window must be >= 1")
        for alpha in self.alphas:
            try:
                self.agent_config(alpha, self.seeds[0])
            except InvalidArgument as exc:
                raise ConfigError(str(exc)) from exc
        return self

    def agent_config(self, alpha: float, seed: int) -> AgentConfig:
        return AgentConfig(
            alpha=alpha,
            gamma=self.gamma,
            k=self.k,
            epsilon=self.epsilon,
            max_steps_per_episode=self.max_steps,
            seed=seed,
            sweep=self.sweep,
            alpha_schedule=self.alpha_schedule,
        )

    def load_world(self) -> GridWorld:
        try:
            return read_map(self.map)
        except OSError as exc:
            raise ConfigError(f"cannot read map {self.map!r}: {exc}") from exc
        except MapParseError as exc:
            raise ConfigError(f"bad map {self.map!r}: {exc}") from exc


def _parse_bool(value: str) -> bool:
    v = value.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {value!r}")


def _parse_list(value: str, conv):
    items = [v.strip() for v in value.split(",") if v.strip()]
    return tuple(conv(v) for v in items)


def _parse_max_steps(value: str):
    return None if value.strip().lower() in ("", "auto", "none") else int(value)


_KEYS = {
    "agent": ("agent", str.strip),
    "map": ("map", str.strip),
    "episodes": ("episodes", int),
    "seeds": ("seeds", lambda v: _parse_list(v, int)),
    "seed": ("seeds", lambda v: _parse_list(v, int)),
    "alpha": ("alphas", lambda v: _parse_list(v, float)),
    "alphas": ("alphas", lambda v: _parse_list(v, float)),
    "gamma": ("gamma", float),
    "k": ("k", float),
    "epsilon": ("epsilon", float),
    "max_steps": ("max_steps", _parse_max_steps),
    "sweep": ("sweep", _parse_bool),
    "alpha_schedule": ("alpha_schedule", str.strip),
    "window": ("window", int),
    "out": ("out", str.strip),
    "log_x": ("log_x", _parse_bool),
}


def parse_config(text: str, base_dir: Path | None = None) -> ExperimentConfig:
    """Parse ``key = value`` lines into a validated :class:`ExperimentConfig`.

    A relative ``map`` path is resolved against ``base_dir`` when the file
    exists there; bare names fall through to the bundled maps.
    """
    values = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key = value")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in _KEYS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        field_name, conv = _KEYS[key]
        try:
            values[field_name] = conv(value)
        except ValueError as exc:
            raise ConfigError(f"line {lineno}: bad value for {key}: {exc}") from exc
    if base_dir is not None and "map" in values:
        candidate = Path(base_dir) / values["map"]
        if candidate.exists():
            values["map"] = str(candidate)
    return ExperimentConfig(**values).validate()


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config(text, base_dir=path.parent)


def convergence_episode(steps, oracle: int, window: int = 100):
    """First episode (1-based) whose trailing ``window`` median equals ``oracle``."""
    steps = np.asarray(steps)
    for end in range(window, len(steps) + 1):
        if np.median(steps[end - window:end]) == oracle:
            return end
    return None


@dataclass
class RunSummary:
    agent: str
    alpha: float
    seed: int
    steps: np.ndarray
    truncated: np.ndarray
    oracle_length: int | None = None
    converged_at: int | None = None
    final_greedy_length: int | None = None

    @property
    def episodes(self) -> int:
        return len(self.steps)

    @property
    def converged(self) -> bool:
        return self.converged_at is not None


def train(kind: str, world: GridWorld, cfg: AgentConfig, episodes: int):
    """Run ``episodes`` episodes with the compiled kernels.

    Returns ``(steps, truncated, agent)``; the agent carries the learned
    tables exactly as the step-by-step reference would have left them.
    """
    rng = np.random.default_rng(cfg.seed)
    max_steps = cfg.max_steps(world)
    use_visits = cfg.alpha_schedule == "visits"
    free = world.free_mask()
    if kind == "qrl":
        agent = QRLAgent(world, cfg)
        regs = agent.register_matrix()
        steps, trunc = kernels.qrl_run(
            regs, agent.values, world.next_state, world.reward, free,
            world.start_index, world.goal_index, agent.n_actions, episodes, max_steps,
            cfg.alpha, cfg.gamma, cfg.k, iteration_cap(agent.theta), cfg.sweep,
            agent.visits, use_visits, rng,
        )
        agent.load_register_matrix(regs)
    elif kind == "td0":
        agent = TD0Agent(world, cfg)
        steps, trunc = kernels.td0_run(
            agent.values, world.next_state, world.reward, free,
            world.start_index, world.goal_index, episodes, max_steps,
            cfg.alpha, cfg.gamma, cfg.epsilon, cfg.sweep, agent.visits, use_visits, rng,
        )
    elif kind == "qlearning":
        agent = QLearningAgent(world, cfg)
        steps, trunc = kernels.qlearning_run(
            agent.q, world.next_state, world.reward, world.start_index, world.goal_index,
            episodes, max_steps, cfg.alpha, cfg.gamma, cfg.epsilon, agent.visits, use_visits, rng,
        )
    else:
        raise InvalidArgument(f"unknown agent kind {kind!r}")
    return steps, trunc, agent


def _trained_policy_length(kind, agent, world, gamma):
    if kind == "qrl":
        return greedy_path_length(agent, world)
    if kind == "td0":
        return greedy_path_length(agent.values, world, gamma)
    return greedy_path_length(agent.q, world)


def run_single(cfg: ExperimentConfig, world: GridWorld, seed: int, alpha: float) -> RunSummary:
    agent_cfg = cfg.agent_config(alpha, seed)
    steps, trunc, agent = train(cfg.agent, world, agent_cfg, cfg.episodes)
    oracle = bfs_shortest(world)
    return RunSummary(
        agent=cfg.agent,
        alpha=alpha,
        seed=seed,
        steps=steps,
        truncated=trunc,
        oracle_length=oracle,
        converged_at=convergence_episode(steps, oracle, cfg.window),
        final_greedy_length=_trained_policy_length(cfg.agent, agent, world, cfg.gamma),
    )


def _run_cell(args):
    cfg, map_text, seed, alpha = args
    return run_single(cfg, load_map(map_text), seed, alpha)


def run_experiment(cfg: ExperimentConfig, jobs: int = 1) -> list:
    """One :class:`RunSummary` per (alpha, seed), in config order.

    Every cell gets a fresh agent and its own generator seeded from the cell's
    seed, so results never depend on scheduling or on the rest of the sweep.
    """
    cfg.validate()
    world = cfg.load_world()
    cells = [(alpha, seed) for alpha in cfg.alphas for seed in cfg.seeds]
    log.info("running %d cells (%s on %s, %d episodes)", len(cells), cfg.agent, cfg.map, cfg.episodes)
    if jobs <= 1 or len(cells) == 1:
        return [run_single(cfg, world, seed, alpha) for alpha, seed in cells]
    text = world.to_text()
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(_run_cell, [(cfg, text, seed, alpha) for alpha, seed in cells]))


@dataclass
class SeriesStats:
    agent: str
    alpha: float
    mean: np.ndarray
    median: np.ndarray
    min: np.ndarray
    max: np.ndarray
    runs: int
    converged: int = 0

    @property
    def convergence_rate(self) -> float:
        return self.converged / self.runs


@dataclass
class Aggregate:
    series: list = field(default_factory=list)

    def __len__(self):
        return len(self.series)

    def get(self, agent: str, alpha: float) -> SeriesStats:
        for s in self.series:
            if s.agent == agent and s.alpha == alpha:
                return s
        raise KeyError((agent, alpha))


def aggregate(summaries) -> Aggregate:
    """Per-episode statistics across seeds for each (agent, alpha) group."""
    summaries = list(summaries)
    if not summaries:
        raise InvalidArgument("cannot aggregate an empty set of runs")
    groups = {}
    for s in summaries:
        groups.setdefault((s.agent, s.alpha), []).append(s)
    out = Aggregate()
    for (agent, alpha), runs in groups.items():
        lengths = {r.episodes for r in runs}
        if len(lengths) != 1:
            raise InvalidArgument(f"runs for {agent} alpha={alpha} differ in episode count")
        table = np.stack([np.asarray(r.steps, dtype=float) for r in runs])
        out.series.append(SeriesStats(
            agent=agent,
            alpha=alpha,
            mean=table.mean(axis=0),
            median=np.median(table, axis=0),
            min=table.min(axis=0),
            max=table.max(axis=0),
            runs=len(runs),
            converged=sum(r.converged for r in runs),
        ))
    return out


def _fmt(x: float) -> str:
    return repr(float(x))


def _open_for_write(path):
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        return open(path, "w", encoding="utf-8", newline="")
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc}") from exc


def emit_csv(summaries, path) -> Path:
    """Write per-episode step counts, one row per (agent, alpha, seed, episode)."""
    path = Path(path)
    with _open_for_write(path) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(RUNS_HEADER)
        for s in summaries:
            alpha = _fmt(s.alpha)
            for i, (n, t) in enumerate(zip(s.steps, s.truncated), start=1):
                w.writerow([s.agent, alpha, s.seed, i, int(n), int(bool(t))])
    return path


def read_runs_csv(path, world: GridWorld | None = None, window: int = 100) -> list:
    """Rebuild run summaries from a runs CSV; convergence needs ``world``."""
    rows = {}
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != RUNS_HEADER:
            raise InvalidArgument(f"{path}: unexpected header {reader.fieldnames}")
        for row in reader:
            key = (row["agent"], float(row["alpha"]), int(row["seed"]))
            rows.setdefault(key, []).append((int(row["episode"]), int(row["steps"]), row["truncated"] == "1"))
    oracle = bfs_shortest(world) if world is not None else None
    out = []
    for (agent, alpha, seed), recs in rows.items():
        recs.sort()
        steps = np.array([r[1] for r in recs], dtype=np.int64)
        trunc = np.array([r[2] for r in recs], dtype=bool)
        conv = convergence_episode(steps, oracle, window) if oracle is not None else None
        out.append(RunSummary(agent, alpha, seed, steps, trunc, oracle, conv))
    return out


def emit_summary_csv(summaries, path) -> Path:
    with _open_for_write(path) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["agent", "alpha", "seed", "episodes", "oracle", "converged_at",
                    "final_greedy_length", "truncated_episodes", "final_window_median"])
        for s in summaries:
            tail = s.steps[-100:]
            w.writerow([
                s.agent, _fmt(s.alpha), s.seed, s.episodes,
                "" if s.oracle_length is None else s.oracle_length,
                "" if s.converged_at is None else s.converged_at,
                "" if s.final_greedy_length is None else s.final_greedy_length,
                int(np.sum(s.truncated)),
                _fmt(np.median(tail)),
            ])
    return Path(path)


def emit_aggregate_csv(agg: Aggregate, path) -> Path:
    with _open_for_write(path) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["agent", "alpha", "episode", "runs", "mean", "median", "min", "max"])
        for s in agg.series:
            for i in range(len(s.mean)):
                w.writerow([s.agent, _fmt(s.alpha), i + 1, s.runs,
                            _fmt(s.mean[i]), _fmt(s.median[i]), _fmt(s.min[i]), _fmt(s.max[i])])
    return Path(path)


def emit_convergence_csv(agg: Aggregate, path) -> Path:
    with _open_for_write(path) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["agent", "alpha", "runs", "converged", "convergence_rate"])
        for s in agg.series:
            w.writerow([s.agent, _fmt(s.alpha), s.runs, s.converged, _fmt(s.convergence_rate)])
    return Path(path)


def read_aggregate_csv(path) -> Aggregate:
    groups = {}
    with open(path, encoding="utf-8", newline="") as fh:
        for row in csv.DictReader(fh):
            key = (row["agent"], float(row["alpha"]))
            groups.setdefault(key, {"runs": int(row["runs"]), "rows": []})["rows"].append(
                [float(row[c]) for c in ("mean", "median", "min", "max")]
            )
    agg = Aggregate()
    for (agent, alpha), g in groups.items():
        arr = np.array(g["rows"])
        agg.series.append(SeriesStats(agent, alpha, arr[:, 0], arr[:, 1], arr[:, 2], arr[:, 3], g["runs"]))
    return agg


def format_table(agg: Aggregate) -> str:
    """Tab-delimited one-line-per-series summary for terminal output."""
    buf = io.StringIO()
    buf.write("agent\talpha\truns\tconverged\tconvergence_rate\tfinal_median_steps\n")
    for s in agg.series:
        tail = s.median[-100:]
        final = float(np.median(tail)) if len(tail) else math.nan
        buf.write(f"{s.agent}\t{s.alpha:g}\t{s.runs}\t{s.converged}\t{s.convergence_rate:.2f}\t{final:g}\n")
    return buf.getvalue()


def with_overrides(cfg: ExperimentConfig, **overrides) -> ExperimentConfig:
    changes = {k: v for k, v in overrides.items() if v is not None}
    return replace(cfg, **changes).validate()
