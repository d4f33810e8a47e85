"""Deterministic 2D combat simulator.

Units live on a rectangular map, move in one of eight directions, cool down
and shoot. Own units receive one :class:`CombatAction` per decision tick
(``frame_skip`` frames); the opposing side is driven by a scripted controller
that decides on the same tick cadence and commits to its choice for the
whole tick.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ._backend import kernels
from .errors import ConfigError, ProtocolError
from .units import CombatAction, ScriptedPolicy, Side, UnitClass, Winner

Point = tuple[float, float]

SCRIPT_ORDERS = {
    ScriptedPolicy.CLOSEST: kernels.ORDER_SCRIPT_CLOSEST,
    ScriptedPolicy.WEAKEST: kernels.ORDER_SCRIPT_WEAKEST,
}
_RULES = {ScriptedPolicy.CLOSEST: kernels.RULE_CLOSEST, ScriptedPolicy.WEAKEST: kernels.RULE_WEAKEST}


@dataclass(frozen=True)
class TerrainObstacle:
    center: Point
    radius: float

    def boundary_points(self, spacing: float = 1.0) -> np.ndarray:
        """Points on the obstacle's circumference about ``spacing`` apart."""
        n = max(8, math.ceil(2.0 * math.pi * self.radius / spacing))
        ang = 2.0 * math.pi * np.arange(n) / n
        return np.column_stack(
            [self.center[0] + self.radius * np.cos(ang), self.center[1] + self.radius * np.sin(ang)]
        )


@dataclass(frozen=True)
class ScenarioSpec:
    name: str
    map_width: float
    map_height: float
    own_units: tuple[tuple[UnitClass, Point], ...]
    enemy_units: tuple[tuple[UnitClass, Point], ...]
    obstacles: tuple[TerrainObstacle, ...] = ()
    enemy_controller: ScriptedPolicy = ScriptedPolicy.CLOSEST
    max_episode_steps: int = 1000
    frame_skip: int = 10
    # spawn positions are jittered uniformly by up to this much per axis
    spawn_jitter: float = 0.0
    map_edges_as_terrain: bool = True

    def validate(self) -> None:
        if not self.own_units:
            raise ConfigError(f"{self.name}: at least one own unit required")
        if not self.enemy_units:
            raise ConfigError(f"{self.name}: at least one enemy unit required")
        if self.frame_skip < 1:
            raise ConfigError(f"{self.name}: frame_skip must be >= 1")
        if self.max_episode_steps < 1:
            raise ConfigError(f"{self.name}: max_episode_steps must be >= 1")
        if self.map_width <= 0 or self.map_height <= 0:
            raise ConfigError(f"{self.name}: map dimensions must be positive")
        if self.spawn_jitter < 0:
            raise ConfigError(f"{self.name}: spawn_jitter must be >= 0")
        seen = set()
        for _, (x, y) in self.own_units + self.enemy_units:
            if not (0 <= x <= self.map_width and 0 <= y <= self.map_height):
                raise ConfigError(f"{self.name}: spawn ({x}, {y}) outside the map")
            if (x, y) in seen:
                raise ConfigError(f"{self.name}: spawn positions must be pairwise distinct; ({x}, {y}) repeats")
            seen.add((x, y))
            for ob in self.obstacles:
                if math.dist((x, y), ob.center) < ob.radius:
                    raise ConfigError(f"{self.name}: spawn ({x}, {y}) inside an obstacle")
        try:
            ScriptedPolicy(self.enemy_controller)
        except ValueError:
            raise ConfigError(f"{self.name}: unknown enemy controller {self.enemy_controller!r}") from None
        for ob in self.obstacles:
            cx, cy = ob.center
            if ob.radius <= 0:
                raise ConfigError(f"{self.name}: obstacle radius must be > 0")
            if not (ob.radius <= cx <= self.map_width - ob.radius and ob.radius <= cy <= self.map_height - ob.radius):
                raise ConfigError(f"{self.name}: obstacle at {ob.center} not fully inside the map")

    @property
    def n_own(self) -> int:
        return len(self.own_units)

    @property
    def n_enemy(self) -> int:
        return len(self.enemy_units)


class Roster:
    """Static per-unit attribute arrays derived from a scenario."""

    def __init__(self, spec: ScenarioSpec):
        entries = [(Side.OWN, c, p) for c, p in spec.own_units] + [
            (Side.ENEMY, c, p) for c, p in spec.enemy_units
        ]
        self.classes = [c for _, c, _ in entries]
        self.spawns = np.array([p for _, _, p in entries], dtype=np.float64)
        self.side = np.array([s for s, _, _ in entries], dtype=np.int8)
        self.max_hp = np.array([c.max_hitpoint for c in self.classes], dtype=np.int64)
        self.cd_frames = np.array([c.cooldown_frames for c in self.classes], dtype=np.int64)
        self.damage = np.array([c.damage_factor for c in self.classes], dtype=np.int64)
        self.defence = np.array([c.defence_factor for c in self.classes], dtype=np.int64)
        self.fire_range = np.array([c.fire_range for c in self.classes], dtype=np.float64)
        self.sight = np.array([c.sight_range for c in self.classes], dtype=np.float64)
        self.speed = np.array([c.move_speed for c in self.classes], dtype=np.float64)
        self.obstacles = np.array(
            [(o.center[0], o.center[1], o.radius) for o in spec.obstacles], dtype=np.float64
        ).reshape(-1, 3)
        self.terrain = terrain_points(spec)
        self.own_ids = [i for i in range(len(entries)) if self.side[i] == Side.OWN]
        self.enemy_ids = [i for i in range(len(entries)) if self.side[i] == Side.ENEMY]
        self.enemy_mask = self.side == Side.ENEMY


def terrain_points(spec: ScenarioSpec, spacing: float = 1.0) -> np.ndarray:
    parts = [ob.boundary_points(spacing) for ob in spec.obstacles]
    if spec.map_edges_as_terrain:
        xs = np.arange(0.0, spec.map_width + 1e-9, spacing)
        ys = np.arange(0.0, spec.map_height + 1e-9, spacing)
        parts += [
            np.column_stack([xs, np.zeros_like(xs)]),
            np.column_stack([xs, np.full_like(xs, spec.map_height)]),
            np.column_stack([np.zeros_like(ys), ys]),
            np.column_stack([np.full_like(ys, spec.map_width), ys]),
        ]
    if not parts:
        return np.zeros((0, 2))
    return np.ascontiguousarray(np.vstack(parts))


@dataclass
class Unit:
    """Read-only snapshot of one unit."""

    id: int
    side: Side
    unit_class: UnitClass
    position: Point
    hitpoint: int
    cooldown_remaining: int
    alive: bool


@dataclass
class SimState:
    spec: ScenarioSpec
    roster: Roster
    pos: np.ndarray
    hp: np.ndarray
    cooldown: np.ndarray
    alive: np.ndarray
    tick: int = 0
    terminal: bool = False
    winner: Winner | None = None

    def copy(self) -> "SimState":
        return SimState(
            self.spec, self.roster, self.pos.copy(), self.hp.copy(), self.cooldown.copy(),
            self.alive.copy(), self.tick, self.terminal, self.winner,
        )

    def unit(self, i: int) -> Unit:
        if not 0 <= i < len(self.hp):
            raise ProtocolError(f"unknown unit id {i}")
        return Unit(
            i, Side(int(self.roster.side[i])), self.roster.classes[i],
            (float(self.pos[i, 0]), float(self.pos[i, 1])), int(self.hp[i]),
            int(self.cooldown[i]), bool(self.alive[i]),
        )

    def units(self) -> list[Unit]:
        return [self.unit(i) for i in range(len(self.hp))]

    def living(self, side: Side) -> list[int]:
        ids = self.roster.own_ids if side == Side.OWN else self.roster.enemy_ids
        return [i for i in ids if self.alive[i]]

    def same_as(self, other: "SimState") -> bool:
        return (
            self.tick == other.tick and self.terminal == other.terminal and self.winner == other.winner
            and np.array_equal(self.pos, other.pos) and np.array_equal(self.hp, other.hp)
            and np.array_equal(self.cooldown, other.cooldown) and np.array_equal(self.alive, other.alive)
        )


@dataclass
class UnitOutcome:
    damage_amount: int = 0
    hitpoint_lost: int = 0
    died_this_tick: bool = False
    moved_toward_nobody: bool = False
    shots: int = 0


@dataclass
class StepOutcome:
    units: dict[int, UnitOutcome] = field(default_factory=dict)
    terminal: bool = False
    winner: Winner | None = None
    frames: int = 0


def _jittered_spawns(spec: ScenarioSpec, roster: Roster, seed: int) -> np.ndarray:
    pos = roster.spawns.copy()
    if spec.spawn_jitter <= 0:
        return pos
    rng = np.random.default_rng(np.random.SeedSequence([seed, 0x5EED]))
    j = spec.spawn_jitter
    n = len(pos)
    pending = np.arange(n)
    # up to 32 draws per unit; a unit keeps its nominal spawn if all land in obstacles
    for _ in range(32):
        cand = pos[pending] + rng.uniform(-j, j, size=(len(pending), 2))
        np.clip(cand[:, 0], 0.0, spec.map_width, out=cand[:, 0])
        np.clip(cand[:, 1], 0.0, spec.map_height, out=cand[:, 1])
        ok = np.ones(len(pending), dtype=bool)
        for ob in spec.obstacles:
            d = np.hypot(cand[:, 0] - ob.center[0], cand[:, 1] - ob.center[1])
            ok &= d >= ob.radius
        pos[pending[ok]] = cand[ok]
        pending = pending[~ok]
        if not len(pending):
            break
    return pos


_ROSTERS: dict[int, tuple[ScenarioSpec, Roster]] = {}


def roster_for(spec: ScenarioSpec) -> Roster:
    cached = _ROSTERS.get(id(spec))
    if cached is not None and cached[0] is spec:
        return cached[1]
    r = Roster(spec)
    if len(_ROSTERS) > 64:
        _ROSTERS.clear()
    _ROSTERS[id(spec)] = (spec, r)
    return r


def reset(spec: ScenarioSpec, seed: int = 0) -> SimState:
    spec.validate()
    roster = roster_for(spec)
    n = len(roster.classes)
    return SimState(
        spec=spec,
        roster=roster,
        pos=np.ascontiguousarray(_jittered_spawns(spec, roster, seed)),
        hp=roster.max_hp.copy(),
        cooldown=np.zeros(n, dtype=np.int64),
        alive=np.ones(n, dtype=np.uint8),
    )


_VALID_ORDERS = frozenset(range(0, 9)) | {9, 10}


def _orders_for(state: SimState, own_actions) -> np.ndarray:
    ro = state.roster
    alive = state.alive.tolist()
    living_own = {i for i in ro.own_ids if alive[i]}
    orders = np.where(state.alive.astype(bool) & ro.enemy_mask,
                      SCRIPT_ORDERS[ScriptedPolicy(state.spec.enemy_controller)],
                      kernels.ORDER_NONE).astype(np.int64)
    given = 0
    for uid, act in own_actions.items():
        uid = int(uid)
        if uid not in living_own:
            raise ProtocolError(f"action given for unit {uid}, which is not a living own unit")
        a = int(act)
        if a not in _VALID_ORDERS:
            raise ProtocolError(f"invalid action {act!r} for unit {uid}")
        orders[uid] = a
        given += 1
    if given != len(living_own):
        missing = living_own.difference(int(k) for k in own_actions)
        raise ProtocolError(f"no action for living own units {sorted(missing)}")
    kernels.resolve_scripted(state.pos, state.hp, state.alive, ro.side, ro.fire_range, orders)
    return orders


def step(state: SimState, own_actions) -> tuple[SimState, StepOutcome]:
    """Advance one decision tick in place; returns ``(state, outcome)``.

    ``own_actions`` maps every living own unit id to a :class:`CombatAction`
    (or to a scripted order code, used when a scripted policy plays the own
    side).
    """
    if state.terminal:
        raise ProtocolError("step called on a terminal state")
    ro = state.roster
    spec = state.spec
    orders = _orders_for(state, own_actions)
    n = len(state.hp)
    idle = np.zeros(n, dtype=np.uint8)
    kernels.idle_moves(state.pos, state.alive, ro.side, ro.sight, orders, idle)
    was_alive = state.alive.tolist()
    dealt = np.zeros(n, dtype=np.int64)
    lost = np.zeros(n, dtype=np.int64)
    shots = np.zeros(n, dtype=np.int64)
    frames = kernels.advance_tick(
        state.pos, state.hp, state.cooldown, state.alive, ro.side, ro.cd_frames, ro.damage,
        ro.defence, ro.fire_range, ro.speed, orders, ro.obstacles, float(spec.map_width),
        float(spec.map_height), int(spec.frame_skip), dealt, lost, shots,
    )
    state.tick += 1
    alive_now = state.alive.tolist()
    if not any(alive_now[i] for i in ro.own_ids):
        state.terminal, state.winner = True, Winner.ENEMY
    elif not any(alive_now[i] for i in ro.enemy_ids):
        state.terminal, state.winner = True, Winner.OWN
    elif state.tick >= spec.max_episode_steps:
        state.terminal, state.winner = True, Winner.TIMEOUT
    outcome = StepOutcome(terminal=state.terminal, winner=state.winner, frames=int(frames))
    dealt_l, lost_l, shots_l, idle_l = dealt.tolist(), lost.tolist(), shots.tolist(), idle.tolist()
    for i in ro.own_ids:
        if was_alive[i]:
            outcome.units[i] = UnitOutcome(dealt_l[i], lost_l[i], not alive_now[i], bool(idle_l[i]), shots_l[i])
    for i in ro.enemy_ids:
        if was_alive[i]:
            outcome.units[i] = UnitOutcome(dealt_l[i], lost_l[i], not alive_now[i], False, shots_l[i])
    return state, outcome


@dataclass
class Neighbor:
    id: int
    side: Side
    class_name: str
    position: Point
    distance: float
    in_sight: bool


@dataclass
class RawObservation:
    unit_id: int
    side: Side
    position: Point
    hitpoint: int
    max_hitpoint: int
    cooldown_remaining: int
    cooldown_frames: int
    sight_range: float
    own_neighbors: list[Neighbor]
    enemy_neighbors: list[Neighbor]
    terrain: list[tuple[Point, float]]


def observe_raw(state: SimState, unit_id: int) -> RawObservation:
    """What ``unit_id`` sees: itself, every other living unit (flagged by
    sight), and the terrain surface points within its sight range."""
    u = state.unit(unit_id)
    if not u.alive:
        raise ProtocolError(f"unit {unit_id} is dead")
    D = u.unit_class.sight_range
    own, enemy = [], []
    for j in range(len(state.hp)):
        if j == unit_id or not state.alive[j]:
            continue
        dx = float(state.pos[j, 0]) - u.position[0]
        dy = float(state.pos[j, 1]) - u.position[1]
        d = math.sqrt(dx * dx + dy * dy)
        nb = Neighbor(j, Side(int(state.roster.side[j])), state.roster.classes[j].name,
                      (float(state.pos[j, 0]), float(state.pos[j, 1])), d, d <= D)
        (own if nb.side == u.side else enemy).append(nb)
    terrain = []
    for px, py in state.roster.terrain:
        dx = float(px) - u.position[0]
        dy = float(py) - u.position[1]
        d = math.sqrt(dx * dx + dy * dy)
        if d <= D:
            terrain.append(((float(px), float(py)), d))
    return RawObservation(
        unit_id, u.side, u.position, u.hitpoint, u.unit_class.max_hitpoint,
        u.cooldown_remaining, u.unit_class.cooldown_frames, D, own, enemy, terrain,
    )


def select_target(state: SimState, unit_id: int, policy: ScriptedPolicy) -> int | None:
    """Target the policy's rule picks for ``unit_id`` among enemies in fire
    range; ties go to the lower id."""
    ro = state.roster
    t = kernels.select_target(int(unit_id), _RULES[ScriptedPolicy(policy)], state.pos, state.hp,
                              state.alive, ro.side, ro.fire_range)
    return None if t < 0 else int(t)


def scripted_actions(state: SimState, policy: ScriptedPolicy, side: Side = Side.ENEMY) -> dict[int, CombatAction]:
    """Decisions of a scripted controller for every living unit of ``side``.

    ``ATTACK_WEAKEST`` here means "engage the target the policy's rule picks"
    (see :func:`select_target`); otherwise the move heads for the sector of
    the nearest enemy.
    """
    if state.terminal:
        raise ProtocolError("scripted decisions requested on a terminal state")
    ro = state.roster
    rule = _RULES[ScriptedPolicy(policy)]
    out = {}
    for i in state.living(side):
        t, mv = kernels.scripted_decide(state.pos, state.hp, state.alive, ro.side, ro.fire_range, i, rule)
        if t >= 0:
            out[i] = CombatAction.ATTACK_WEAKEST
        elif mv >= 0:
            out[i] = CombatAction(mv)
    return out


def scripted_enemy_actions(state: SimState, policy: ScriptedPolicy) -> dict[int, CombatAction]:
    return scripted_actions(state, policy, Side.ENEMY)


def scripted_order(policy: ScriptedPolicy) -> int:
    """Order code that makes an own unit follow ``policy`` each tick."""
    return SCRIPT_ORDERS[ScriptedPolicy(policy)]

