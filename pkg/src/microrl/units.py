"""Unit classes, sides and the discrete action set."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace

from .errors import ConfigError


class Side(enum.IntEnum):
    OWN = 0
    ENEMY = 1


class Winner(str, enum.Enum):
    OWN = "own"
    ENEMY = "enemy"
    TIMEOUT = "timeout"


class CombatAction(enum.IntEnum):
    """The 9 per-tick actions, in the canonical index order."""

    UP = 0
    DOWN = 1
    LEFT = 2
    RIGHT = 3
    UPPER_LEFT = 4
    UPPER_RIGHT = 5
    LOWER_LEFT = 6
    LOWER_RIGHT = 7
    ATTACK_WEAKEST = 8

    @property
    def is_move(self) -> bool:
        return self is not CombatAction.ATTACK_WEAKEST

    @property
    def direction(self) -> tuple[float, float]:
        return MOVE_VECTORS[self]

    @property
    def sector(self) -> int:
        return ACTION_SECTOR[self]


N_ACTIONS = 9

_D = math.sqrt(0.5)
MOVE_VECTORS = {
    CombatAction.UP: (0.0, 1.0),
    CombatAction.DOWN: (0.0, -1.0),
    CombatAction.LEFT: (-1.0, 0.0),
    CombatAction.RIGHT: (1.0, 0.0),
    CombatAction.UPPER_LEFT: (-_D, _D),
    CombatAction.UPPER_RIGHT: (_D, _D),
    CombatAction.LOWER_LEFT: (-_D, -_D),
    CombatAction.LOWER_RIGHT: (_D, -_D),
}

# sector k is centred on bearing 45*k degrees, counterclockwise from +x
ACTION_SECTOR = {
    CombatAction.RIGHT: 0,
    CombatAction.UPPER_RIGHT: 1,
    CombatAction.UP: 2,
    CombatAction.UPPER_LEFT: 3,
    CombatAction.LEFT: 4,
    CombatAction.LOWER_LEFT: 5,
    CombatAction.DOWN: 6,
    CombatAction.LOWER_RIGHT: 7,
}
SECTOR_ACTION = {v: k for k, v in ACTION_SECTOR.items()}


class ScriptedPolicy(str, enum.Enum):
    CLOSEST = "closest"
    WEAKEST = "weakest"


@dataclass(frozen=True)
class UnitClass:
    name: str
    max_hitpoint: int
    cooldown_frames: int
    damage_factor: int
    defence_factor: int
    fire_range: float
    sight_range: float
    move_speed: float

    def __post_init__(self):
        if self.max_hitpoint <= 0:
            raise ConfigError(f"{self.name}: max_hitpoint must be > 0")
        if self.cooldown_frames <= 0:
            raise ConfigError(f"{self.name}: cooldown_frames must be > 0")
        if self.fire_range <= 0:
            raise ConfigError(f"{self.name}: fire_range must be > 0")
        if self.sight_range < self.fire_range:
            raise ConfigError(f"{self.name}: sight_range must be >= fire_range")
        if self.move_speed < 0:
            raise ConfigError(f"{self.name}: move_speed must be >= 0")
        if self.damage_factor < 0 or self.defence_factor < 0:
            raise ConfigError(f"{self.name}: damage/defence factors must be >= 0")

    def with_overrides(self, **changes) -> "UnitClass":
        return replace(self, **changes)


# hitpoint / cooldown / damage / defence / fire range / sight range from the
# unit attribute table; move speeds are ours (map units per frame)
GOLIATH = UnitClass("goliath", 125, 22, 12, 1, 5.0, 8.0, 0.45)
ZEALOT = UnitClass("zealot", 160, 22, 16, 1, 1.0, 7.0, 0.45)
ZERGLING = UnitClass("zergling", 35, 8, 5, 0, 1.0, 5.0, 0.55)
MARINE = UnitClass("marine", 40, 15, 6, 0, 4.0, 7.0, 0.40)

UNIT_CLASSES = {c.name: c for c in (GOLIATH, ZEALOT, ZERGLING, MARINE)}


def unit_class(name: str) -> UnitClass:
    try:
        return UNIT_CLASSES[name.lower()]
    except KeyError:
        raise ConfigError(f"unknown unit class {name!r}; known: {sorted(UNIT_CLASSES)}") from None
