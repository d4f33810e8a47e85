"""Parameter-sharing multi-agent gradient-descent Sarsa(lambda).

Every own unit reads and updates one shared network and one shared
eligibility trace. Per tick all living units choose actions with the same
parameters, the simulator steps once, the next actions are drawn, and then
each unit's TD update is applied in unit-id order::

    delta = r + gamma * Q(s', a') - Q(s, a)        (r - Q(s, a) when done)
    e     = gamma * lambda * e + grad Q(s, a)
    theta = theta + alpha * delta * e
"""

from __future__ import annotations

import csv
import io
import logging
import math
import zlib
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Callable, Protocol

import numpy as np

from . import sim
from .encoder import OBS_DIM, encode_state
from .errors import ConfigError, DomainError, NumericDivergenceError
from .qnet import QNetwork, init as init_network, save_checkpoint
from .units import N_ACTIONS, CombatAction, Side, UnitClass, Winner

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class RewardConfig:
    divisor: float = 10.0
    death_penalty: float = -10.0
    idle_move_penalty: float = -0.5
    # "folded": HP actually removed; "literal": HP removed x attacker damage factor
    variant: str = "folded"

    def validate(self):
        if not self.divisor > 0:
            raise ConfigError("reward divisor must be > 0")
        if self.variant not in ("folded", "literal"):
            raise ConfigError(f"unknown reward variant {self.variant!r}")


@dataclass(frozen=True)
class TrainerConfig:
    gamma: float = 0.9
    alpha: float = 0.001
    lam: float = 0.8
    epsilon0: float = 0.5
    episodes: int = 4000
    max_episode_steps: int = 1000
    reward: RewardConfig = field(default_factory=RewardConfig)
    seed: int = 0
    init_scale: float = 0.05

    def validate(self):
        if not 0 <= self.gamma <= 1:
            raise ConfigError("gamma must be in [0, 1]")
        if not self.alpha > 0:
            raise ConfigError("alpha must be > 0")
        if not 0 <= self.lam <= 1:
            raise ConfigError("lambda must be in [0, 1]")
        if not 0 <= self.epsilon0 <= 1:
            raise ConfigError("epsilon0 must be in [0, 1]")
        if self.episodes < 0:
            raise ConfigError("episodes must be >= 0")
        if self.max_episode_steps < 1:
            raise ConfigError("max_episode_steps must be >= 1")
        self.reward.validate()

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "TrainerConfig":
        d = dict(d)
        if "lambda" in d:
            d["lam"] = d.pop("lambda")
        reward = RewardConfig(**d.pop("reward", {}))
        try:
            return cls(reward=reward, **d)
        except TypeError as exc:
            raise ConfigError(f"bad trainer config: {exc}") from None


@dataclass
class EpisodeStats:
    episode_index: int
    steps: int
    unit_rewards: dict[int, float]
    winner: Winner
    epsilon: float

    @property
    def summed_reward(self) -> float:
        return float(sum(self.unit_rewards.values()))

    @property
    def avg_reward_per_step(self) -> float:
        return self.summed_reward / self.steps if self.steps else 0.0

    @property
    def won(self) -> bool:
        return self.winner == Winner.OWN


def rng_stream(seed: int, name: str) -> np.random.Generator:
    """Independent generator for a named purpose derived from one seed."""
    return np.random.default_rng(np.random.SeedSequence([int(seed) & 0xFFFFFFFF, zlib.crc32(name.encode())]))


def derive_seed(seed: int, *path) -> int:
    ss = np.random.SeedSequence([int(seed) & 0xFFFFFFFF, *[int(p) & 0xFFFFFFFF for p in path]])
    return int(ss.generate_state(1)[0])


def epsilon_at(episode_num: int, epsilon0: float = 0.5) -> float:
    if episode_num < 0:
        raise DomainError(f"episode_num must be >= 0, got {episode_num}")
    return epsilon0 / math.sqrt(1.0 + episode_num)


def select_action(net, obs, epsilon: float, rng: np.random.Generator | None) -> int:
    """Epsilon-greedy over ``net.values(obs)``; greedy ties go to the lowest index."""
    if epsilon > 0.0 and rng.random() < epsilon:
        return int(rng.integers(net.n_out))
    greedy = getattr(net, "greedy", None)
    if greedy is not None:
        return greedy(obs)
    return int(np.argmax(net.values(obs)))


def hitpoint_ratio_rho(state: sim.SimState) -> float:
    """Enemy total hitpoint over own total hitpoint."""
    ro = state.roster
    own = int(state.hp[ro.own_ids].sum())
    if own <= 0:
        raise DomainError("own hitpoint sum is zero")
    return int(state.hp[ro.enemy_ids].sum()) / own


def shaped_reward(outcome: sim.UnitOutcome, unit: UnitClass, rho: float, cfg: RewardConfig = RewardConfig()) -> float:
    if not rho > 0:
        raise DomainError("rho must be > 0")
    dealt = outcome.damage_amount
    if cfg.variant == "literal":
        dealt = dealt * unit.damage_factor
    r = (dealt - rho * outcome.hitpoint_lost) / cfg.divisor
    if outcome.died_this_tick:
        r += cfg.death_penalty
    if outcome.moved_toward_nobody:
        r += cfg.idle_move_penalty
    return r


@dataclass
class Transition:
    next_obs: dict          # agent -> observation, for agents that act next tick
    rewards: dict           # agent -> reward, for every agent that acted
    done: dict              # agent -> no bootstrap (died or episode over)
    terminal: bool
    winner: object = None


class Environment(Protocol):
    n_actions: int

    def reset(self, seed: int) -> dict: ...

    def step(self, actions: dict) -> Transition: ...


class CombatEnv:
    """Multi-agent adapter: simulator + encoder + shaped reward."""

    n_actions = N_ACTIONS

    def __init__(self, spec: sim.ScenarioSpec, reward: RewardConfig = RewardConfig(), trace=None):
        spec.validate()
        self.spec = spec
        self.reward_cfg = reward
        self.state: sim.SimState | None = None
        self.obs: dict = {}
        self.rho = 1.0
        self.trace = trace  # optional callable(state, actions, outcome)

    def reset(self, seed: int) -> dict:
        self.state = sim.reset(self.spec, seed)
        self.rho = hitpoint_ratio_rho(self.state)
        self.obs = {i: encode_state(self.state, i) for i in self.state.living(Side.OWN)}
        return dict(self.obs)

    def step(self, actions: dict) -> Transition:
        state = self.state
        _, outcome = sim.step(state, actions)
        if self.trace is not None:
            self.trace(state, actions, outcome)
        rewards, done, nxt = {}, {}, {}
        classes = state.roster.classes
        for i in actions:
            uo = outcome.units[i]
            rewards[i] = shaped_reward(uo, classes[i], self.rho, self.reward_cfg)
            finished = outcome.terminal or uo.died_this_tick
            done[i] = finished
            if not finished:
                nxt[i] = encode_state(state, i, self.obs[i], actions[i])
        self.obs = nxt
        return Transition(dict(nxt), rewards, done, outcome.terminal, outcome.winner)


class PSMAGDS:
    """Shared-parameter Sarsa(lambda) learner over any approximator exposing
    ``values``, ``accumulate_trace`` and ``add_scaled``."""

    def __init__(self, net, gamma=0.9, alpha=0.001, lam=0.8, fused=True):
        self.net = net
        self.fused = fused
        self.gamma = gamma
        self.alpha = alpha
        self.lam = lam
        self.trace = np.zeros(net.size)

    def begin_episode(self):
        self.trace[:] = 0.0

    def update(self, obs, action, reward, next_obs, next_action, done) -> float:
        net = self.net
        if self.fused and hasattr(net, "sarsa_update"):
            delta = net.sarsa_update(self.trace, obs, action, reward, next_obs, next_action, done,
                                     self.gamma, self.gamma * self.lam, self.alpha)
            if not math.isfinite(delta):
                raise NumericDivergenceError(f"non-finite TD error {delta!r}")
            return delta
        target = reward
        if not done:
            target += self.gamma * net.values(next_obs)[next_action]
        delta = target - net.values(obs)[action]
        if not math.isfinite(delta):
            raise NumericDivergenceError(f"non-finite TD error {delta!r}")
        net.accumulate_trace(self.trace, obs, action, self.gamma * self.lam)
        net.add_scaled(self.alpha * delta, self.trace, check=False)
        return delta


def run_episode(net, env: Environment, epsilon: float, rng: np.random.Generator | None, seed: int,
                learner: PSMAGDS | None = None, episode_index: int = 0,
                on_tick: Callable | None = None) -> EpisodeStats:
    """One episode; learns in place when ``learner`` is given (its net must be ``net``)."""
    obs = env.reset(seed)
    acts = {u: select_action(net, obs[u], epsilon, rng) for u in sorted(obs)}
    if learner is not None:
        learner.begin_episode()
    totals = {u: 0.0 for u in obs}
    steps = 0
    while True:
        tr = env.step(acts)
        steps += 1
        nxt_acts = {u: select_action(net, tr.next_obs[u], epsilon, rng) for u in sorted(tr.next_obs)}
        for u in sorted(acts):
            r = tr.rewards[u]
            totals[u] += r
            if learner is not None:
                try:
                    learner.update(obs[u], acts[u], r, tr.next_obs.get(u), nxt_acts.get(u), tr.done[u])
                except NumericDivergenceError as exc:
                    raise NumericDivergenceError(
                        f"numeric divergence in episode {episode_index}, tick {steps}: {exc}",
                        episode=episode_index, tick=steps) from None
        if on_tick is not None:
            on_tick(steps, acts, tr)
        if tr.terminal:
            break
        obs, acts = tr.next_obs, nxt_acts
    if learner is not None and not np.isfinite(learner.net.params).all():
        raise NumericDivergenceError(f"non-finite parameters after episode {episode_index}",
                                     episode=episode_index, tick=steps)
    return EpisodeStats(episode_index, steps, totals, tr.winner, epsilon)


METRICS_FIELDS = ["episode", "steps", "summed_reward", "avg_reward_per_step", "winner", "epsilon"]


def metrics_row(s: EpisodeStats) -> list:
    w = s.winner.value if isinstance(s.winner, Winner) else str(s.winner)
    return [s.episode_index, s.steps, repr(s.summed_reward), repr(s.avg_reward_per_step), w, repr(s.epsilon)]


def write_metrics(stats, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as f:
        w = csv.writer(f)
        w.writerow(METRICS_FIELDS)
        for s in stats:
            w.writerow(metrics_row(s))
    return path


def checkpoint_name(episode: int) -> str:
    return f"ckpt_{episode:06d}.txt"


def train(spec: sim.ScenarioSpec, cfg: TrainerConfig, init_net: QNetwork | None = None, *,
          out_dir=None, checkpoint_every: int = 0, metrics_path=None,
          on_episode: Callable[[EpisodeStats, QNetwork], None] | None = None,
          start_episode: int = 0) -> tuple[QNetwork, list[EpisodeStats]]:
    """Train a shared network on ``spec`` for ``cfg.episodes`` episodes.

    The input network is not modified. With ``out_dir`` set, checkpoints
    land there every ``checkpoint_every`` episodes (and at the end) along
    with ``metrics.csv``. ``start_episode`` continues an earlier run: the
    exploration rate and the per-episode spawn seeds pick up where that run
    stopped (the exploration draws themselves are not replayed).
    """
    cfg.validate()
    spec = replace(spec, max_episode_steps=cfg.max_episode_steps)
    spec.validate()
    net = (init_net.copy() if init_net is not None
           else init_network(derive_seed(cfg.seed, 1), cfg.init_scale))
    stats: list[EpisodeStats] = []
    if cfg.episodes == 0:
        return net, stats
    env = CombatEnv(spec, cfg.reward)
    learner = PSMAGDS(net, cfg.gamma, cfg.alpha, cfg.lam)
    explore = rng_stream(cfg.seed, "explore")
    sim_rng = rng_stream(cfg.seed, "sim")
    out_dir = Path(out_dir) if out_dir is not None else None
    if out_dir is not None:
        out_dir.mkdir(parents=True, exist_ok=True)
        if start_episode == 0:
            save_checkpoint(net, out_dir / checkpoint_name(0))
    if start_episode:
        sim_rng.integers(2**31, size=start_episode)
    for k in range(cfg.episodes):
        ep = start_episode + k
        eps = epsilon_at(ep, cfg.epsilon0)
        seed = int(sim_rng.integers(2**31))
        s = run_episode(net, env, eps, explore, seed, learner, episode_index=ep)
        stats.append(s)
        if on_episode is not None:
            on_episode(s, net)
        if out_dir is not None and checkpoint_every and (k + 1) % checkpoint_every == 0:
            save_checkpoint(net, out_dir / checkpoint_name(ep + 1))
    if out_dir is not None:
        save_checkpoint(net, out_dir / checkpoint_name(start_episode + cfg.episodes))
        save_checkpoint(net, out_dir / "final.txt")
        write_metrics(stats, metrics_path or out_dir / "metrics.csv")
    elif metrics_path is not None:
        write_metrics(stats, metrics_path)
    return net, stats
