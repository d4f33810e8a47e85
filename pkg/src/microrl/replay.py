"""Line-delimited JSON replay traces, one record per decision tick.

Each record holds the tick index, the state of every unit after the tick
(position, hitpoint, cooldown, alive), the action each own unit was given,
and the tick's outcome fields.
"""

from __future__ import annotations

import json
from pathlib import Path

from . import sim
from .qnet import QNetwork
from .trainer import CombatEnv, RewardConfig, run_episode
from .units import CombatAction, ScriptedPolicy, Side


def tick_record(state: sim.SimState, actions: dict, outcome: sim.StepOutcome) -> dict:
    units = []
    for i in range(len(state.hp)):
        a = actions.get(i)
        if a is None:
            label = None
        elif 0 <= int(a) < len(CombatAction):
            label = CombatAction(int(a)).name.lower()
        else:
            label = f"order:{int(a)}"
        units.append({
            "id": i,
            "side": Side(int(state.roster.side[i])).name.lower(),
            "class": state.roster.classes[i].name,
            "x": float(state.pos[i, 0]),
            "y": float(state.pos[i, 1]),
            "hitpoint": int(state.hp[i]),
            "cooldown": int(state.cooldown[i]),
            "alive": bool(state.alive[i]),
            "action": label,
        })
    return {
        "tick": state.tick,
        "units": units,
        "outcome": {str(i): vars(o) for i, o in outcome.units.items()},
        "terminal": outcome.terminal,
        "winner": outcome.winner.value if outcome.winner is not None else None,
        "frames": outcome.frames,
    }


class TraceWriter:
    """Callable ``(state, actions, outcome)`` hook that appends records to a file."""

    def __init__(self, path):
        self.path = Path(path)
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self._f = self.path.open("w")

    def __call__(self, state, actions, outcome):
        self._f.write(json.dumps(tick_record(state, actions, outcome), sort_keys=True) + "\n")

    def close(self):
        self._f.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def record_episode(policy, spec: sim.ScenarioSpec, seed: int, path,
                   reward: RewardConfig = RewardConfig()) -> Path:
    """Play one greedy episode of ``policy`` (network or scripted) and trace it."""
    with TraceWriter(path) as w:
        if isinstance(policy, QNetwork):
            run_episode(policy, CombatEnv(spec, reward, trace=w), 0.0, None, seed)
        else:
            order = sim.scripted_order(ScriptedPolicy(policy))
            state = sim.reset(spec, seed)
            while not state.terminal:
                acts = {i: order for i in state.living(Side.OWN)}
                _, out = sim.step(state, acts)
                w(state, acts, out)
    return Path(path)


def read_trace(path) -> list[dict]:
    with Path(path).open() as f:
        return [json.loads(line) for line in f if line.strip()]
