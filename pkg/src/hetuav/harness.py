"""Experiment orchestration: method pipelines, metrics files, checkpoints,
figure data and the fleet-size sweep."""

from __future__ import annotations

import csv
import io
import time
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np
import torch

from hetuav.config import ConfigError, ScenarioConfig, load_config
from hetuav.env import HetUavEnv
from hetuav.expert import collect_dataset, make_expert
from hetuav.learner import (EpisodeRecord, SACConfig, dataset_buffers, distill, make_agents, online_adapt,
                            save_agents)

METHODS = ("llm-hemarl-s2dc", "isac-s2dc", "isac", "masac-s2dc", "masac")
DEFAULT_SEEDS = (30, 40, 50, 60)
METRICS_SCHEMA = "hetuav-metrics v1"
# offset so the expert never acts on the layouts used for online training
COLLECT_SEED_OFFSET = 7919


@dataclass(frozen=True)
class Pipeline:
    method: str
    precoding: str  # "s2dc" or "split"
    distill: bool
    shared_buffer: bool


def baseline_dispatch(method: str) -> Pipeline:
    table = {
        "llm-hemarl-s2dc": Pipeline(method, "s2dc", True, False),
        "isac-s2dc": Pipeline(method, "s2dc", False, False),
        "isac": Pipeline(method, "split", False, False),
        "masac-s2dc": Pipeline(method, "s2dc", False, True),
        "masac": Pipeline(method, "split", False, True),
    }
    if method not in table:
        raise ConfigError(f"method: unknown method '{method}', expected one of {', '.join(METHODS)}")
    return table[method]


@dataclass
class ExperimentSpec:
    scenario: str
    methods: list[str] = field(default_factory=lambda: ["llm-hemarl-s2dc"])
    seeds: list[int] = field(default_factory=lambda: list(DEFAULT_SEEDS))
    episodes: int = 200
    collect_episodes: int = 100
    distill_updates: int = 500
    expert: str = "scripted"
    out_dir: str | None = None
    checkpoint_every: int = 0  # episodes; 0 keeps only the final checkpoint
    batch_size: int | None = None

    def __post_init__(self) -> None:
        if isinstance(self.methods, str):
            self.methods = [self.methods]
        if not self.methods:
            raise ConfigError("methods: must not be empty")
        for m in self.methods:
            baseline_dispatch(m)
        if not self.seeds:
            raise ConfigError("seeds: must not be empty")
        if self.episodes < 0:
            raise ConfigError("episodes: must be >= 0")
        if self.collect_episodes < 1:
            raise ConfigError("collect_episodes: must be >= 1")
        if self.distill_updates < 0:
            raise ConfigError("distill_updates: must be >= 0")
        if self.checkpoint_every < 0:
            raise ConfigError("checkpoint_every: must be >= 0")

    def config(self) -> ScenarioConfig:
        return load_config(self.scenario)


@dataclass
class MetricsRow:
    method: str
    seed: int
    episode: int
    n_uav: int
    reward: float
    f1: float
    energy: float
    collisions: int
    violations: int
    s2dc_iterations: float

    @classmethod
    def from_record(cls, method: str, seed: int, n_uav: int, rec: EpisodeRecord) -> "MetricsRow":
        return cls(method, seed, rec.episode, n_uav, rec.reward, rec.f1, rec.energy, rec.collisions,
                   rec.violations, rec.s2dc_iterations)


METRICS_COLUMNS = [f.name for f in fields(MetricsRow)]


def _fmt(v) -> str:
    if isinstance(v, float):
        if not np.isfinite(v):
            raise ValueError(f"non-finite metric value {v}")
        return repr(v)
    return str(v)


def write_metrics(path: str | Path, rows: list[MetricsRow]) -> None:
    buf = io.StringIO()
    buf.write(f"# {METRICS_SCHEMA}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(METRICS_COLUMNS)
    for r in rows:
        w.writerow([_fmt(v) for v in asdict(r).values()])
    Path(path).write_text(buf.getvalue())


def read_metrics(path: str | Path) -> list[MetricsRow]:
    lines = Path(path).read_text().splitlines()
    if not lines or lines[0] != f"# {METRICS_SCHEMA}":
        raise ValueError(f"{path}: missing or unsupported metrics schema header")
    reader = csv.DictReader(lines[1:])
    types = {f.name: f.type for f in fields(MetricsRow)}
    out = []
    for rec in reader:
        kw = {}
        for k, v in rec.items():
            t = types[k]
            kw[k] = v if t == "str" else int(v) if t == "int" else float(v)
        out.append(MetricsRow(**kw))
    return out


def run_cell(cfg: ScenarioConfig, method: str, seed: int, episodes: int, collect_episodes: int = 100,
             distill_updates: int = 500, expert: str = "scripted", sac: SACConfig | None = None,
             batch_size: int | None = None, ckpt_dir: Path | None = None, checkpoint_every: int = 0,
             on_episode=None) -> list[MetricsRow]:
    """One (method, seed) cell, deterministic given its arguments."""
    pipe = baseline_dispatch(method)
    torch.manual_seed(seed)
    env = HetUavEnv(cfg, precoding=pipe.precoding)
    agents = make_agents(env, sac, seed)
    if pipe.distill:
        data_env = HetUavEnv(cfg, precoding="s2dc", s2dc_opts=env.opts)
        parts = collect_dataset(make_expert(expert), data_env, collect_episodes, seed + COLLECT_SEED_OFFSET,
                                out_dir=None if ckpt_dir is None else ckpt_dir / "dataset")
        distill(agents, dataset_buffers(parts, env.obs_dim), distill_updates, batch_size=batch_size)
    rows: list[MetricsRow] = []

    def hook(rec: EpisodeRecord) -> None:
        rows.append(MetricsRow.from_record(method, seed, cfg.n_uav, rec))
        if ckpt_dir is not None and checkpoint_every and (rec.episode + 1) % checkpoint_every == 0:
            save_agents(ckpt_dir / f"episode{rec.episode + 1}.pt", agents)
        if on_episode is not None:
            on_episode(rec)

    online_adapt(env, agents, episodes, seed, shared_buffer=pipe.shared_buffer, batch_size=batch_size,
                 on_episode=hook)
    if ckpt_dir is not None:
        save_agents(ckpt_dir / "final.pt", agents)
    return rows


def run_experiment(spec: ExperimentSpec, cfg: ScenarioConfig | None = None) -> list[MetricsRow]:
    """Run every (method, seed) cell; write metrics.csv, timing.csv and
    checkpoints when an output directory is set. Wall times go to the timing
    file so the metrics file is reproducible byte for byte."""
    cfg = cfg or spec.config()
    torch.set_num_threads(1)
    out = Path(spec.out_dir) if spec.out_dir else None
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
    rows: list[MetricsRow] = []
    timing = []
    for method in spec.methods:
        for seed in spec.seeds:
            ckpt = None
            if out is not None:
                ckpt = out / "checkpoints" / method / f"seed{seed}"
                ckpt.mkdir(parents=True, exist_ok=True)
            t0 = time.perf_counter()
            rows += run_cell(cfg, method, seed, spec.episodes, spec.collect_episodes, spec.distill_updates,
                             spec.expert, batch_size=spec.batch_size, ckpt_dir=ckpt,
                             checkpoint_every=spec.checkpoint_every)
            timing.append((method, seed, time.perf_counter() - t0))
            if out is not None:
                # rewritten after every cell so finished cells survive an abort
                _write_outputs(out, rows, timing)
    return rows


def _write_outputs(out: Path, rows: list[MetricsRow], timing: list) -> None:
    write_metrics(out / "metrics.csv", rows)
    with open(out / "timing.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["method", "seed", "wall_time_s"])
        w.writerows([(m, s, f"{t:.3f}") for m, s, t in timing])


# figure data -------------------------------------------------------------------

FIGURE_SCHEMAS = {
    # reward vs episode, mean and population variance across seeds
    "fig3_reward_band.csv": ["method", "episode", "n_seeds", "reward_mean", "reward_var"],
    # per-seed bars: mean per-episode f1 and energy over the final window
    "fig45_seed_bars.csv": ["method", "seed", "window", "f1_mean", "energy_mean", "reward_mean"],
    # sweep: per fleet size, mean over seeds of the final-window episode f1 and energy
    "fig6_sweep.csv": ["method", "n_uav", "n_seeds", "f1_mean", "energy_mean"],
}


def _write_csv(path: Path, header: list[str], rows: list[list]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([_fmt(v) for v in r])


def emit_plot_data(rows: list[MetricsRow], out_dir: str | Path, window: int = 20) -> dict[str, Path]:
    """Derive the per-figure CSVs from metrics rows alone."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    methods = sorted({r.method for r in rows})

    band = []
    for m in methods:
        sub = [r for r in rows if r.method == m]
        for ep in sorted({r.episode for r in sub}):
            v = np.array([r.reward for r in sub if r.episode == ep])
            band.append([m, ep, len(v), float(v.mean()), float(v.var())])

    bars = []
    per_cell = {}
    for r in rows:
        per_cell.setdefault((r.method, r.n_uav, r.seed), []).append(r)
    for (m, n, s), cell in sorted(per_cell.items()):
        tail = sorted(cell, key=lambda r: r.episode)[-window:]
        bars.append([m, s, len(tail), float(np.mean([r.f1 for r in tail])),
                     float(np.mean([r.energy for r in tail])), float(np.mean([r.reward for r in tail]))])

    sweep = []
    for m in methods:
        for n in sorted({k[1] for k in per_cell if k[0] == m}):
            cells = [sorted(c, key=lambda r: r.episode)[-window:] for k, c in per_cell.items()
                     if k[0] == m and k[1] == n]
            sweep.append([m, n, len(cells), float(np.mean([np.mean([r.f1 for r in c]) for c in cells])),
                          float(np.mean([np.mean([r.energy for r in c]) for c in cells]))])

    paths = {}
    for name, data in zip(FIGURE_SCHEMAS, (band, bars, sweep)):
        paths[name] = out / name
        _write_csv(paths[name], FIGURE_SCHEMAS[name], data)
    return paths


# fleet-size sweep --------------------------------------------------------------

def sample_heterogeneity(cfg: ScenarioConfig, n_uav: int, seed: int, coverage=(80.0, 120.0),
                         capacity=(10, 20)) -> ScenarioConfig:
    """Fleet of ``n_uav`` with per-UAV coverage range and service capacity
    drawn uniformly from the given ranges."""
    rng = np.random.default_rng([seed, n_uav])
    c_r = rng.uniform(coverage[0], coverage[1], size=n_uav).round(3).tolist()
    n_s = rng.integers(capacity[0], capacity[1] + 1, size=n_uav).tolist()
    return cfg.replace(n_uav=n_uav, coverage_range=c_r, service_capacity=n_s, uav_init=None)


def scaling_sweep(spec: ExperimentSpec, n_uav_list: list[int], cfg: ScenarioConfig | None = None) -> list[MetricsRow]:
    if not n_uav_list:
        raise ConfigError("n_uav_list: must not be empty")
    base = cfg or spec.config()
    torch.set_num_threads(1)
    rows: list[MetricsRow] = []
    for n in n_uav_list:
        for method in spec.methods:
            for seed in spec.seeds:
                c = sample_heterogeneity(base, n, seed)
                rows += run_cell(c, method, seed, spec.episodes, spec.collect_episodes, spec.distill_updates,
                                 spec.expert, batch_size=spec.batch_size)
    if spec.out_dir:
        out = Path(spec.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        write_metrics(out / "metrics.csv", rows)
    return rows
