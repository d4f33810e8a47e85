"""Greedy evaluation of trained networks and scripted baselines.

Win rate counts timeouts as losses. Every evaluation episode gets its own
seed derived from ``(seed, index)``, so a report is a pure function of
``(policy, spec, episodes, seed)``.
"""

from __future__ import annotations

import csv
import json
import math
import re
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import sim
from .errors import CheckpointError, ConfigError, ShapeError
from .encoder import OBS_DIM
from .qnet import QNetwork, load_checkpoint
from .trainer import CombatEnv, RewardConfig, derive_seed, run_episode
from .units import N_ACTIONS, ScriptedPolicy, Side, Winner


@dataclass
class EvalReport:
    scenario: str
    episodes: int
    wins: int
    win_rate: float
    mean_steps: float
    std_steps: float
    mean_avg_reward: float
    seed: int
    seeds: list[int] = field(default_factory=list)
    outcomes: dict[str, int] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)


def _scripted_episode(policy: ScriptedPolicy, spec: sim.ScenarioSpec, seed: int):
    state = sim.reset(spec, seed)
    order = sim.scripted_order(policy)
    while not state.terminal:
        sim.step(state, {i: order for i in state.living(Side.OWN)})
    return state.tick, state.winner, float("nan")


def evaluate(policy, spec: sim.ScenarioSpec, episodes: int = 100, seed: int = 0,
             reward: RewardConfig = RewardConfig()) -> EvalReport:
    """Run ``episodes`` greedy episodes of ``policy`` on ``spec``.

    Args:
        policy: A :class:`QNetwork` (played greedily, never modified) or a
            :class:`ScriptedPolicy` controlling the own side.
        spec: Scenario to play.
        episodes: Number of episodes, at least 1.
        seed: Root seed for the per-episode spawn seeds.
        reward: Reward settings used for the average-reward column.

    Returns:
        The aggregated :class:`EvalReport`. For scripted policies the reward
        column is NaN since no learner reward is defined for them.
    """
    if episodes < 1:
        raise ConfigError("episodes must be >= 1")
    seeds = [derive_seed(seed, 7, k) for k in range(episodes)]
    steps, winners, rewards = [], [], []
    if isinstance(policy, QNetwork):
        if (policy.n_in, policy.n_out) != (OBS_DIM, N_ACTIONS):
            raise ShapeError(f"network interface {policy.n_in}->{policy.n_out} does not match "
                             f"{OBS_DIM}->{N_ACTIONS}")
        env = CombatEnv(spec, reward)
        for k, s in enumerate(seeds):
            st = run_episode(policy, env, 0.0, None, s, episode_index=k)
            steps.append(st.steps)
            winners.append(st.winner)
            rewards.append(st.avg_reward_per_step)
    else:
        pol = ScriptedPolicy(policy)
        spec.validate()
        for s in seeds:
            n, w, r = _scripted_episode(pol, spec, s)
            steps.append(n)
            winners.append(w)
            rewards.append(r)
    wins = sum(w == Winner.OWN for w in winners)
    outcomes = {w.value: sum(x == w for x in winners) for w in Winner}
    return EvalReport(
        scenario=spec.name,
        episodes=episodes,
        wins=wins,
        win_rate=wins / episodes,
        mean_steps=float(np.mean(steps)),
        std_steps=float(np.std(steps)),
        mean_avg_reward=float(np.mean(rewards)),
        seed=seed,
        seeds=seeds,
        outcomes=outcomes,
    )


def evaluate_repeated(policy, spec, episodes: int = 100, repeats: int = 5, seed: int = 0) -> list[EvalReport]:
    """``repeats`` independent evaluations with derived seeds."""
    return [evaluate(policy, spec, episodes, derive_seed(seed, 11, r)) for r in range(repeats)]


CURVE_FIELDS = ["episode", "win_rate", "mean_steps", "mean_avg_reward", "status"]
_CKPT = re.compile(r"ckpt_(\d+)\.txt$")


def checkpoints_in(directory) -> dict[int, Path]:
    out = {}
    for p in Path(directory).glob("ckpt_*.txt"):
        m = _CKPT.search(p.name)
        if m:
            out[int(m.group(1))] = p
    return out


def training_curve(directory, spec: sim.ScenarioSpec, every: int = 200, episodes_per: int = 100,
                   seed: int = 0, include_initial: bool = False) -> list[dict]:
    """Evaluate periodic checkpoints in ``directory``.

    Rows are produced for episodes ``every, 2*every, ...`` up to the latest
    checkpoint present (plus episode 0 with ``include_initial``). A missing
    or unreadable checkpoint yields a row with ``status`` set and NaN
    metrics. A directory holding only a final checkpoint gives one row.
    """
    if every < 1:
        raise ConfigError("every must be >= 1")
    found = checkpoints_in(directory)
    if not found:
        final = Path(directory) / "final.txt"
        if not final.exists():
            raise CheckpointError(f"{directory}: no checkpoints found")
        found = {-1: final}
    last = max(found)
    points = list(range(every, last + 1, every))
    if include_initial:
        points.insert(0, 0)
    if not points or (last > 0 and last not in points and last % every):
        points.append(last)
    rows = []
    for ep in points:
        p = found.get(ep)
        row = {"episode": ep, "win_rate": math.nan, "mean_steps": math.nan, "mean_avg_reward": math.nan}
        if p is None:
            row["status"] = "missing"
        else:
            try:
                net = load_checkpoint(p)
            except CheckpointError as exc:
                row["status"] = f"unreadable: {exc}"
            else:
                r = evaluate(net, spec, episodes_per, seed)
                row.update(win_rate=r.win_rate, mean_steps=r.mean_steps,
                           mean_avg_reward=r.mean_avg_reward, status="ok")
        rows.append(row)
    return rows


def write_curve(rows, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as f:
        w = csv.DictWriter(f, fieldnames=CURVE_FIELDS)
        w.writeheader()
        for r in rows:
            w.writerow({k: r.get(k) for k in CURVE_FIELDS})
    return path


def write_report(report: EvalReport | list, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    data = [r.to_dict() for r in report] if isinstance(report, list) else report.to_dict()
    path.write_text(json.dumps(data, indent=2) + "\n")
    return path
