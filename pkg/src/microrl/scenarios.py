"""Scenario files (YAML) and the bundled scenario library.

A scenario file looks like::

    name: g3_vs_z6
    map: {width: 64, height: 64}
    frame_skip: 10
    max_episode_steps: 1000
    enemy_controller: closest
    spawn_jitter: 2.0
    own:
      - {class: goliath, count: 3, x: 16, y: 32, spacing: 3}
    enemy:
      - {class: zealot, count: 6, x: 48, y: 32, spacing: 2, columns: 2}
    obstacles:
      - {x: 32, y: 20, radius: 3}
    unit_overrides:
      zealot: {move_speed: 0.4}

Each ``own``/``enemy`` entry is either a single unit (``class``, ``x``,
``y``) or a block formation (``count``, ``spacing``, ``columns``) centred on
``(x, y)``.
"""

from __future__ import annotations

import math
from dataclasses import replace
from importlib import resources
from pathlib import Path

import yaml

from .errors import ConfigError
from .sim import ScenarioSpec, TerrainObstacle
from .units import ScriptedPolicy, UnitClass, unit_class

_KEYS = {"name", "map", "frame_skip", "max_episode_steps", "enemy_controller", "spawn_jitter",
         "own", "enemy", "obstacles", "unit_overrides", "map_edges_as_terrain", "description"}


def formation(cls: UnitClass, count: int, x: float, y: float, spacing: float = 2.0,
              columns: int = 1) -> list[tuple[UnitClass, tuple[float, float]]]:
    """``count`` units in a block of ``columns`` columns centred on (x, y)."""
    if count < 1 or columns < 1:
        raise ConfigError("formation count and columns must be >= 1")
    rows = math.ceil(count / columns)
    out = []
    for k in range(count):
        c, r = divmod(k, rows)
        px = x + (c - (columns - 1) / 2.0) * spacing
        py = y + (r - (rows - 1) / 2.0) * spacing
        out.append((cls, (round(px, 9), round(py, 9))))
    return out


def _units(entries, classes, where):
    if not isinstance(entries, list) or not entries:
        raise ConfigError(f"{where}: expected a non-empty list of unit entries")
    out = []
    for e in entries:
        if not isinstance(e, dict) or "class" not in e:
            raise ConfigError(f"{where}: each entry needs a 'class'")
        name = str(e["class"]).lower()
        if name not in classes:
            raise ConfigError(f"{where}: unknown unit class {e['class']!r}")
        try:
            x, y = float(e["x"]), float(e["y"])
            count = int(e.get("count", 1))
            spacing = float(e.get("spacing", 2.0))
            columns = int(e.get("columns", 1))
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"{where}: bad unit entry {e!r} ({exc})") from None
        out += formation(classes[name], count, x, y, spacing, columns)
    return tuple(out)


def scenario_from_dict(d: dict, default_name: str = "scenario") -> ScenarioSpec:
    if not isinstance(d, dict):
        raise ConfigError("scenario must be a mapping")
    unknown = set(d) - _KEYS
    if unknown:
        raise ConfigError(f"unknown scenario keys: {sorted(unknown)}")
    name = str(d.get("name", default_name))
    classes = {}
    overrides = d.get("unit_overrides") or {}
    from .units import UNIT_CLASSES
    for cname, base in UNIT_CLASSES.items():
        ov = overrides.get(cname) or {}
        try:
            classes[cname] = base.with_overrides(**ov) if ov else base
        except TypeError as exc:
            raise ConfigError(f"{name}: bad unit override for {cname}: {exc}") from None
    m = d.get("map") or {}
    try:
        controller = ScriptedPolicy(d.get("enemy_controller", "closest"))
    except ValueError:
        raise ConfigError(f"{name}: unknown enemy_controller {d.get('enemy_controller')!r}") from None
    obstacles = tuple(
        TerrainObstacle((float(o["x"]), float(o["y"])), float(o["radius"])) for o in d.get("obstacles") or []
    )
    try:
        spec = ScenarioSpec(
            name=name,
            map_width=float(m.get("width", 64.0)),
            map_height=float(m.get("height", 64.0)),
            own_units=_units(d.get("own"), classes, f"{name}.own"),
            enemy_units=_units(d.get("enemy"), classes, f"{name}.enemy"),
            obstacles=obstacles,
            enemy_controller=controller,
            max_episode_steps=int(d.get("max_episode_steps", 1000)),
            frame_skip=int(d.get("frame_skip", 10)),
            spawn_jitter=float(d.get("spawn_jitter", 0.0)),
            map_edges_as_terrain=bool(d.get("map_edges_as_terrain", True)),
        )
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"{name}: {exc}") from None
    spec.validate()
    return spec


def load_scenario(path_or_name) -> ScenarioSpec:
    """Load a scenario from a YAML path, or a bundled scenario by name."""
    p = Path(str(path_or_name))
    if p.suffix in (".yaml", ".yml") or p.exists():
        try:
            d = yaml.safe_load(p.read_text())
        except OSError as exc:
            raise ConfigError(f"cannot read scenario file {p}: {exc.strerror}") from None
        except yaml.YAMLError as exc:
            raise ConfigError(f"cannot parse scenario file {p}: {exc}") from None
        return scenario_from_dict(d, default_name=p.stem)
    return bundled_scenario(str(path_or_name))


def _data_dir(kind: str):
    return resources.files("microrl") / "data" / kind


def bundled_scenarios() -> list[str]:
    return sorted(f.name[:-5] for f in _data_dir("scenarios").iterdir() if f.name.endswith(".yaml"))


def bundled_scenario(name: str) -> ScenarioSpec:
    f = _data_dir("scenarios") / f"{name}.yaml"
    if not f.is_file():
        raise ConfigError(f"no scenario file or bundled scenario named {name!r}; bundled: {bundled_scenarios()}")
    return scenario_from_dict(yaml.safe_load(f.read_text()), default_name=name)


def with_overrides(spec: ScenarioSpec, **changes) -> ScenarioSpec:
    out = replace(spec, **{k: v for k, v in changes.items() if v is not None})
    out.validate()
    return out


def scenario_to_dict(spec: ScenarioSpec) -> dict:
    """Explicit, unit-by-unit dict form (round-trips through ``scenario_from_dict``
    for the bundled unit classes)."""
    def units(lst):
        return [{"class": c.name, "x": p[0], "y": p[1]} for c, p in lst]

    overrides = {}
    from .units import UNIT_CLASSES
    for c, _ in spec.own_units + spec.enemy_units:
        base = UNIT_CLASSES.get(c.name)
        if base is not None and c != base:
            overrides[c.name] = {k: getattr(c, k) for k in c.__dataclass_fields__
                                 if getattr(c, k) != getattr(base, k)}
    d = {
        "name": spec.name,
        "map": {"width": spec.map_width, "height": spec.map_height},
        "frame_skip": spec.frame_skip,
        "max_episode_steps": spec.max_episode_steps,
        "enemy_controller": ScriptedPolicy(spec.enemy_controller).value,
        "spawn_jitter": spec.spawn_jitter,
        "map_edges_as_terrain": spec.map_edges_as_terrain,
        "own": units(spec.own_units),
        "enemy": units(spec.enemy_units),
        "obstacles": [{"x": o.center[0], "y": o.center[1], "radius": o.radius} for o in spec.obstacles],
    }
    if overrides:
        d["unit_overrides"] = overrides
    return d
