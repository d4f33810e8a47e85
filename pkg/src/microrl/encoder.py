"""The 93-entry per-unit observation vector.

Layout: ``[current(42), previous(42), last_action one-hot(9)]`` where the 42
current-step entries are cooldown, hitpoint, then eight sectors each of
own-sum, own-max, enemy-sum, enemy-max and terrain distance values.
"""

from __future__ import annotations

import math

import numpy as np

from ._backend import kernels
from .errors import DomainError
from .sim import RawObservation, SimState
from .units import N_ACTIONS, CombatAction, Side

N_SECTORS = 8
CURRENT_DIM = 2 + 5 * N_SECTORS
OBS_DIM = 2 * CURRENT_DIM + N_ACTIONS

COOLDOWN = 0
HITPOINT = 1
OWN_SUM = slice(2, 10)
OWN_MAX = slice(10, 18)
ENEMY_SUM = slice(18, 26)
ENEMY_MAX = slice(26, 34)
TERRAIN = slice(34, 42)
PREVIOUS = slice(CURRENT_DIM, 2 * CURRENT_DIM)
LAST_ACTION = slice(2 * CURRENT_DIM, OBS_DIM)

# the out-of-sight floor of the unit distance value
OUT_OF_SIGHT_VALUE = 0.05


def _check(d, D):
    if not (d >= 0) or not (D > 0):
        raise DomainError(f"need d >= 0 and D > 0, got d={d!r}, D={D!r}")


def unit_distance_value(d: float, D: float) -> float:
    _check(d, D)
    if d > D:
        return OUT_OF_SIGHT_VALUE
    return 1.0 - 0.95 * (d / D)


def terrain_distance_value(d: float, D: float) -> float:
    _check(d, D)
    if d > D:
        return 0.0
    return 1.0 - d / D


def sector_index(dx: float, dy: float) -> int:
    """Sector 0 spans [-22.5, 22.5) degrees around +x; indices increase
    counterclockwise. A zero offset falls in sector 0."""
    return int(kernels.sector_of(float(dx), float(dy)))


def sectorize(center, neighbors) -> list[list]:
    """Bucket ``(position, payload)`` pairs into the 8 sectors around ``center``."""
    buckets = [[] for _ in range(N_SECTORS)]
    cx, cy = center
    for position, payload in neighbors:
        buckets[sector_index(position[0] - cx, position[1] - cy)].append((position, payload))
    return buckets


def _history(current, prev, last_action):
    out = np.zeros(OBS_DIM)
    out[:CURRENT_DIM] = current
    if prev is None:
        out[PREVIOUS] = current
    else:
        prev = np.asarray(prev, dtype=np.float64)
        out[PREVIOUS] = prev[:CURRENT_DIM]
    if last_action is not None:
        out[2 * CURRENT_DIM + int(CombatAction(last_action))] = 1.0
    return out


def current_block(raw: RawObservation) -> np.ndarray:
    """Current-step entries from a :class:`RawObservation` (in-sight only)."""
    cur = np.zeros(CURRENT_DIM)
    cur[COOLDOWN] = raw.cooldown_remaining / raw.cooldown_frames
    cur[HITPOINT] = raw.hitpoint / raw.max_hitpoint
    D = raw.sight_range
    cx, cy = raw.position
    for group, base in ((raw.own_neighbors, 2), (raw.enemy_neighbors, 18)):
        for nb in group:
            if not nb.in_sight:
                continue
            v = unit_distance_value(nb.distance, D)
            s = sector_index(nb.position[0] - cx, nb.position[1] - cy)
            cur[base + s] += v
            cur[base + 8 + s] = max(cur[base + 8 + s], v)
    for (px, py), d in raw.terrain:
        if d > D:
            continue
        s = sector_index(px - cx, py - cy)
        cur[34 + s] = max(cur[34 + s], terrain_distance_value(d, D))
    return cur


def encode(raw: RawObservation, prev=None, last_action=None) -> np.ndarray:
    """Full 93-entry observation. At episode start (``prev is None``) the
    previous block repeats the current one and the action one-hot is zero."""
    return _history(current_block(raw), prev, last_action)


def encode_state(state: SimState, unit_id: int, prev=None, last_action=None) -> np.ndarray:
    """Same as ``encode(observe_raw(state, unit_id), ...)`` via the kernel."""
    ro = state.roster
    out = np.zeros(OBS_DIM)
    kernels.encode_block(
        state.pos, state.alive, ro.side, state.hp, state.cooldown, ro.max_hp, ro.cd_frames,
        ro.sight, ro.terrain, int(unit_id), out,
    )
    if prev is None:
        out[PREVIOUS] = out[:CURRENT_DIM]
    else:
        out[PREVIOUS] = prev[:CURRENT_DIM]
    if last_action is not None:
        out[2 * CURRENT_DIM + int(last_action)] = 1.0
    return out


def encode_side(state: SimState, side: Side, prev: dict | None = None, last: dict | None = None) -> dict[int, np.ndarray]:
    prev = prev or {}
    last = last or {}
    return {
        i: encode_state(state, i, prev.get(i), last.get(i))
        for i in state.living(side)
    }


def describe(obs) -> dict:
    """Named view of an observation vector, for debugging dumps."""
    obs = np.asarray(obs)
    return {
        "cooldown": float(obs[COOLDOWN]),
        "hitpoint": float(obs[HITPOINT]),
        "own_sum": obs[OWN_SUM].tolist(),
        "own_max": obs[OWN_MAX].tolist(),
        "enemy_sum": obs[ENEMY_SUM].tolist(),
        "enemy_max": obs[ENEMY_MAX].tolist(),
        "terrain": obs[TERRAIN].tolist(),
        "previous": obs[PREVIOUS].tolist(),
        "last_action": obs[LAST_ACTION].tolist(),
    }


assert OBS_DIM == 93 and math.isfinite(OUT_OF_SIGHT_VALUE)
