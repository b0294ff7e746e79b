"""Expert policies and expert-dataset collection.

``ScriptedExpert`` is a deterministic geometric heuristic. ``LLMExpert``
asks a chat-completion endpoint for actions using a versioned prompt
template and falls back to the scripted heuristic when the reply cannot be
parsed.
"""

from __future__ import annotations

import json
import logging
import os
import re
import urllib.request
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from string import Template
from typing import Protocol

import numpy as np

from hetuav.env import DIRECTIONS, ActionSpec, HetUavEnv, Transition, write_transitions

log = logging.getLogger(__name__)

AXES = {"right": np.array([1.0, 0.0]), "up": np.array([0.0, 1.0]),
        "left": np.array([-1.0, 0.0]), "down": np.array([0.0, -1.0])}


class ParseError(ValueError):
    pass


class ExpertProvider(Protocol):
    def act(self, summary: dict, spec: ActionSpec) -> tuple[list[int], bool]:
        """Joint action and a flag telling whether a fallback was used."""


def horizontal_range(c_r: float, altitude: float, mode: str) -> float:
    """Ground radius of a coverage range."""
    if mode == "horizontal":
        return c_r
    return float(np.sqrt(max(c_r * c_r - altitude * altitude, 0.0)))


def choose_move(u: np.ndarray, target: np.ndarray, spec: ActionSpec, dt: float) -> int:
    """Axis direction with the largest dot product onto the bearing and the
    fastest ladder speed that does not overshoot along that axis."""
    b = target - u
    scores = {d: float(AXES[d] @ b) for d in DIRECTIONS}
    best = max(DIRECTIONS, key=lambda d: scores[d])  # ties: first in DIRECTIONS
    along = scores[best]
    level = 0
    for l, v in enumerate(spec.ladder):
        if l > 0 and v * dt <= along + 1e-9:
            level = l
    return spec.encode(best if level else "still", level)


def scripted_targets(summary: dict) -> np.ndarray:
    """Per-UAV target points: centroid of the N_s nearest unclaimed GTs,
    pushed away from Eves that sit within 1.5 coverage radii of it."""
    uav, gt, eve = summary["uav"], summary["gt"], summary["eve"]
    D = summary["area_side"]
    claimed = np.zeros(len(gt), dtype=bool)
    targets = uav.copy()
    for k in range(len(uav)):
        free = np.flatnonzero(~claimed)
        if len(free) == 0:
            continue
        d = np.linalg.norm(gt[free] - uav[k], axis=1)
        pick = free[np.argsort(d, kind="stable")[: summary["capacity"][k]]]
        claimed[pick] = True
        c = gt[pick].mean(axis=0)
        R = 1.5 * horizontal_range(summary["coverage_range"][k], summary["altitude"],
                                   summary["coverage_distance"])
        push = np.zeros(2)
        for e in eve:
            away = c - e
            dist = np.linalg.norm(away)
            if dist >= R:
                continue
            if dist < 1e-9:
                away = uav[k] - e
                if np.linalg.norm(away) < 1e-9:
                    away = np.array([1.0, 0.0])
            push += 0.5 * (R - dist) * away / np.linalg.norm(away)
        targets[k] = np.clip(c + push, 0.0, D)
    return targets


@dataclass
class ScriptedExpert:
    def act(self, summary: dict, spec: ActionSpec) -> tuple[list[int], bool]:
        targets = scripted_targets(summary)
        dt = summary["slot_duration"]
        return [choose_move(u, tg, spec, dt) for u, tg in zip(summary["uav"], targets)], False


def _fmt_points(pts) -> str:
    return "\n".join(f"  {j + 1}: ({p[0]:.1f}, {p[1]:.1f})" for j, p in enumerate(pts)) or "  none"


def load_template(version: str = "expert_v1") -> Template:
    return Template((resources.files("hetuav") / "prompts" / f"{version}.txt").read_text())


def build_prompt(summary: dict, history: list | None = None, version: str = "expert_v1") -> str:
    """Fill the prompt template; ``history`` is a list of past joint actions
    as (direction, level) pairs per UAV."""
    n = len(summary["uav"])
    if history:
        lines = ["", "Recent trajectory decisions"]
        for s, joint in enumerate(history):
            acts = "; ".join(f"UAV {k + 1}: {d}, level {l}" for k, (d, l) in enumerate(joint))
            lines.append(f"- step {s + 1}: {acts}")
        hist = "\n".join(lines) + "\n"
    else:
        hist = ""
    schema = "\n".join(f"UAV {k + 1}: <right|up|left|down|still>, level <0-{len(summary['ladder']) - 1}>"
                       for k in range(n))
    ladder = ", ".join(f"{l}: {v:.2f}" for l, v in enumerate(summary["ladder"]))
    return load_template(version).substitute(
        n_uav=n, area_side=f"{summary['area_side']:g}", altitude=f"{summary['altitude']:g}",
        slot_duration=f"{summary['slot_duration']:g}", t=summary["t"], n_slots=summary["n_slots"],
        coverage_distance=summary["coverage_distance"],
        coverage_range=", ".join(f"UAV {k + 1}: {c:g}" for k, c in enumerate(summary["coverage_range"])),
        capacity=", ".join(f"UAV {k + 1}: {c}" for k, c in enumerate(summary["capacity"])),
        ladder=ladder, uav_positions=_fmt_points(summary["uav"]), gt_positions=_fmt_points(summary["gt"]),
        eve_positions=_fmt_points(summary["eve"]), protection_distance=f"{summary.get('protection_distance', 10.0):g}",
        history_section=hist, answer_schema=schema)


_ANSWER = re.compile(r"UAV\s*(\d+)\s*[:\-]\s*(right|up|left|down|still)\s*,?\s*level\s*(\d+)", re.IGNORECASE)


def parse_llm_action(text: str, spec: ActionSpec, n_uav: int) -> list[int]:
    """Extract one (direction, level) per UAV; UAVs are numbered from 1."""
    found: dict[int, int] = {}
    for m in _ANSWER.finditer(text or ""):
        k = int(m.group(1)) - 1
        direction, level = m.group(2).lower(), int(m.group(3))
        if not 0 <= k < n_uav:
            raise ParseError(f"UAV {k + 1} does not exist")
        if k in found:
            raise ParseError(f"duplicate entry for UAV {k + 1}")
        if not 0 <= level < len(spec.ladder):
            raise ParseError(f"speed level {level} out of range")
        found[k] = spec.encode(direction, level)
    missing = [k + 1 for k in range(n_uav) if k not in found]
    if missing:
        raise ParseError(f"no action for UAV(s) {missing}")
    return [found[k] for k in range(n_uav)]


def chat_completion(prompt: str, url: str, key: str, model: str, timeout: float = 60.0) -> str:
    body = json.dumps({"model": model, "temperature": 0.0,
                       "messages": [{"role": "user", "content": prompt}]}).encode()
    req = urllib.request.Request(url, data=body, headers={"Content-Type": "application/json",
                                                          "Authorization": f"Bearer {key}"})
    with urllib.request.urlopen(req, timeout=timeout) as resp:
        data = json.loads(resp.read().decode())
    return data["choices"][0]["message"]["content"]


@dataclass
class LLMExpert:
    """Remote expert configured from EXPERT_API_URL, EXPERT_API_KEY and
    EXPERT_MODEL. ``transport`` can be replaced for offline use."""

    retries: int = 2
    version: str = "expert_v1"
    timeout: float = 60.0
    transport: object = None
    history_len: int = 5
    raw_log: list = field(default_factory=list)
    history: list = field(default_factory=list)

    def _send(self, prompt: str) -> str:
        if self.transport is not None:
            return self.transport(prompt)
        url = os.environ.get("EXPERT_API_URL")
        if not url:
            raise RuntimeError("EXPERT_API_URL is not set")
        return chat_completion(prompt, url, os.environ.get("EXPERT_API_KEY", ""),
                               os.environ.get("EXPERT_MODEL", ""), self.timeout)

    def act(self, summary: dict, spec: ActionSpec) -> tuple[list[int], bool]:
        if summary["t"] == 0:
            self.history = []
        prompt = build_prompt(summary, self.history[-self.history_len:], self.version)
        n = len(summary["uav"])
        joint, fallback = None, False
        for attempt in range(self.retries + 1):
            try:
                text = self._send(prompt)
                self.raw_log.append(text)
                joint = parse_llm_action(text, spec, n)
                break
            except (ParseError, OSError, RuntimeError, KeyError, ValueError) as exc:
                log.warning("expert attempt %d failed: %s", attempt + 1, exc)
        if joint is None:
            joint, _ = ScriptedExpert().act(summary, spec)
            fallback = True
        self.history.append([spec.parts(a)[:2] for a in joint])
        return joint, fallback


def make_expert(name: str) -> ExpertProvider:
    if name == "scripted":
        return ScriptedExpert()
    if name == "llm":
        return LLMExpert()
    raise ValueError(f"unknown expert {name!r} (expected 'scripted' or 'llm')")


def collect_dataset(provider: ExpertProvider, env: HetUavEnv, episodes: int, seed: int,
                    out_dir: str | Path | None = None) -> list[list[Transition]]:
    """Roll the expert through ``episodes`` episodes and return per-agent
    transition lists; when ``out_dir`` is given also write one record file
    per agent (``agent<k>.jsonl``)."""
    parts: list[list[Transition]] = [[] for _ in range(env.n_agents)]
    for ep in range(episodes):
        env.reset(seed, ep)
        done = False
        while not done:
            joint, fallback = provider.act(env.summary(), env.spec)
            trs, _ = env.step(joint)
            for tr in trs:
                tr.fallback = fallback
                parts[tr.agent].append(tr)
            done = trs[0].done
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        for k, part in enumerate(parts):
            write_transitions(out / f"agent{k}.jsonl", part)
    return parts


def load_dataset(dir_path: str | Path, env: HetUavEnv) -> list[list[Transition]]:
    from hetuav.env import read_transitions

    d = Path(dir_path)
    return [read_transitions(d / f"agent{k}.jsonl", env.obs_dim, env.n_actions) for k in range(env.n_agents)]
