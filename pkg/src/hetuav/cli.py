"""Command-line entry point: ``hetuav <verb> [flags]``."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np
import torch

from hetuav.config import ConfigError, load_config
from hetuav.env import HetUavEnv
from hetuav.expert import collect_dataset, load_dataset, make_expert
from hetuav.harness import (DEFAULT_SEEDS, METHODS, ExperimentSpec, baseline_dispatch, emit_plot_data,
                            read_metrics, run_experiment, scaling_sweep)
from hetuav.learner import (dataset_buffers, distill, greedy_agreement, load_agents, make_agents, run_episode,
                            save_agents)


def _common(p: argparse.ArgumentParser, method: bool = False, episodes: int | None = None) -> None:
    p.add_argument("--config", default="desk", help="scenario YAML path or bundled name (default: desk)")
    p.add_argument("--seed", type=int, action="append", help="seed; repeat for several (default depends on verb)")
    p.add_argument("--out", default="runs/out", help="output directory")
    if method:
        p.add_argument("--method", action="append", choices=METHODS, help="method; repeat for several")
    if episodes is not None:
        p.add_argument("--episodes", type=int, default=episodes)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="hetuav", description=__doc__)
    sub = ap.add_subparsers(dest="verb", required=True)

    p = sub.add_parser("simulate", help="roll out a fixed provider and print per-episode metrics")
    _common(p, episodes=1)
    p.add_argument("--provider", default="scripted", choices=["scripted", "random", "llm"])
    p.add_argument("--precoding", default="s2dc", choices=["s2dc", "split"])

    p = sub.add_parser("collect", help="build an expert dataset")
    _common(p, episodes=100)
    p.add_argument("--expert", default="scripted", choices=["scripted", "llm"])

    p = sub.add_parser("distill", help="offline distillation from a collected dataset")
    _common(p)
    p.add_argument("--data", required=True, help="dataset directory written by 'collect'")
    p.add_argument("--updates", type=int, default=500)
    p.add_argument("--beta", type=float, default=None)

    p = sub.add_parser("train", help="run experiment cells and write metrics.csv")
    _common(p, method=True, episodes=200)
    p.add_argument("--collect-episodes", type=int, default=100)
    p.add_argument("--updates", type=int, default=500)
    p.add_argument("--checkpoint-every", type=int, default=0)
    p.add_argument("--batch-size", type=int, default=None)

    p = sub.add_parser("evaluate", help="greedy rollouts of a checkpoint")
    _common(p, method=True, episodes=5)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--data", help="dataset directory; also report greedy agreement with it")

    p = sub.add_parser("sweep", help="fleet-size sweep with sampled heterogeneity")
    _common(p, method=True, episodes=50)
    p.add_argument("--n-uav", type=int, nargs="+", default=[2, 4, 6, 8, 10])
    p.add_argument("--collect-episodes", type=int, default=20)
    p.add_argument("--updates", type=int, default=500)

    p = sub.add_parser("plot-data", help="derive figure CSVs from a metrics file")
    p.add_argument("--metrics", required=True)
    p.add_argument("--out", default=None, help="output directory (default: next to the metrics file)")
    p.add_argument("--window", type=int, default=20)
    return ap


def _seeds(args, default=(30,)) -> list[int]:
    return args.seed or list(default)


def cmd_simulate(args) -> int:
    cfg = load_config(args.config)
    env = HetUavEnv(cfg, precoding=args.precoding)
    rng = np.random.default_rng(_seeds(args)[0])
    provider = None if args.provider == "random" else make_expert(args.provider)
    for seed in _seeds(args):
        for ep in range(args.episodes):
            env.reset(seed, ep)
            total, f1, energy, done = 0.0, 0.0, 0.0, False
            while not done:
                if provider is None:
                    joint = [int(rng.integers(env.n_actions)) for _ in range(env.n_agents)]
                else:
                    joint, _ = provider.act(env.summary(), env.spec)
                trs, info = env.step(joint)
                total += float(np.mean([t.reward for t in trs]))
                f1 += info.f1
                energy += float(info.energy.sum())
                done = trs[0].done
            print(json.dumps(dict(seed=seed, episode=ep, reward=total, f1=f1, energy=energy)))
    return 0


def cmd_collect(args) -> int:
    cfg = load_config(args.config)
    env = HetUavEnv(cfg)
    seed = _seeds(args)[0]
    parts = collect_dataset(make_expert(args.expert), env, args.episodes, seed, out_dir=args.out)
    print(f"wrote {sum(map(len, parts))} transitions for {len(parts)} agents to {args.out}")
    return 0


def cmd_distill(args) -> int:
    cfg = load_config(args.config)
    env = HetUavEnv(cfg)
    parts = load_dataset(args.data, env)
    torch.set_num_threads(1)
    agents = make_agents(env, None, _seeds(args)[0])
    distill(agents, dataset_buffers(parts, env.obs_dim), args.updates, beta=args.beta)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    save_agents(out / "distilled.pt", agents)
    print(f"training-set greedy agreement {greedy_agreement(agents, parts):.3f}; saved {out / 'distilled.pt'}")
    return 0


def cmd_train(args) -> int:
    spec = ExperimentSpec(args.config, methods=args.method or ["llm-hemarl-s2dc"],
                          seeds=_seeds(args, DEFAULT_SEEDS), episodes=args.episodes,
                          collect_episodes=args.collect_episodes, distill_updates=args.updates,
                          out_dir=args.out, checkpoint_every=args.checkpoint_every, batch_size=args.batch_size)
    rows = run_experiment(spec)
    print(f"wrote {len(rows)} rows to {Path(args.out) / 'metrics.csv'}")
    return 0


def cmd_evaluate(args) -> int:
    cfg = load_config(args.config)
    method = (args.method or ["llm-hemarl-s2dc"])[0]
    env = HetUavEnv(cfg, precoding=baseline_dispatch(method).precoding)
    agents = load_agents(args.checkpoint, make_agents(env, None, 0))
    if args.data:
        print(f"greedy agreement {greedy_agreement(agents, load_dataset(args.data, env)):.3f}")
    for seed in _seeds(args):
        for ep in range(args.episodes):
            rec = run_episode(env, agents, seed, ep, learn=False, greedy=True)
            print(json.dumps(dict(seed=seed, episode=ep, reward=rec.reward, f1=rec.f1, energy=rec.energy,
                                  collisions=rec.collisions, violations=rec.violations)))
    return 0


def cmd_sweep(args) -> int:
    spec = ExperimentSpec(args.config, methods=args.method or ["llm-hemarl-s2dc"],
                          seeds=_seeds(args, DEFAULT_SEEDS), episodes=args.episodes,
                          collect_episodes=args.collect_episodes, distill_updates=args.updates, out_dir=args.out)
    rows = scaling_sweep(spec, args.n_uav)
    print(f"wrote {len(rows)} rows to {Path(args.out) / 'metrics.csv'}")
    return 0


def cmd_plot_data(args) -> int:
    rows = read_metrics(args.metrics)
    out = args.out or Path(args.metrics).parent
    for path in emit_plot_data(rows, out, window=args.window).values():
        print(path)
    return 0


VERBS = {"simulate": cmd_simulate, "collect": cmd_collect, "distill": cmd_distill, "train": cmd_train,
         "evaluate": cmd_evaluate, "sweep": cmd_sweep, "plot-data": cmd_plot_data}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return VERBS[args.verb](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
