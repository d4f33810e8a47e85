"""Transfer and curriculum transfer learning.

A curriculum is an ordered list of ``(scenario, episodes)`` stages. Stage 1
starts from a fresh network, every later stage starts from the previous
stage's final checkpoint *file*, and the last network is evaluated on the
plan's target scenario. The exploration schedule restarts at each stage and
eligibility traces never cross stage boundaries.

Plan files are YAML::

    id: m10_vs_zl13
    target: m10_vs_zl13
    stages:
      - {scenario: m5_vs_zl6, episodes: 500}
      - {scenario: m8_vs_zl10, episodes: 500}
      - {scenario: m8_vs_zl12, episodes: 500}

Scenario references are bundled names or paths relative to the plan file.
"""

from __future__ import annotations

import json
import logging
import math
import os
import statistics
import time
from dataclasses import asdict, dataclass, field, replace
from importlib import resources
from pathlib import Path

import yaml

from . import sim
from .errors import CheckpointError, ConfigError, TransferError
from .evaluate import EvalReport, evaluate
from .qnet import N_HIDDEN, QNetwork, load_checkpoint
from .encoder import OBS_DIM
from .scenarios import load_scenario
from .trainer import TrainerConfig, derive_seed, train
from .units import N_ACTIONS

log = logging.getLogger(__name__)

INTERFACE = (OBS_DIM, N_HIDDEN, N_ACTIONS)


@dataclass(frozen=True)
class CurriculumPlan:
    id: str
    stages: tuple[tuple[sim.ScenarioSpec, int], ...]
    target: sim.ScenarioSpec

    def validate(self):
        if not self.stages:
            raise ConfigError(f"plan {self.id!r} has no stages")
        for spec, budget in self.stages:
            if int(budget) < 1:
                raise ConfigError(f"plan {self.id!r}: stage {spec.name!r} needs a positive episode budget")
            spec.validate()
        self.target.validate()

    @property
    def total_episodes(self) -> int:
        return sum(b for _, b in self.stages)

    def with_total(self, total: int) -> "CurriculumPlan":
        """Same stages with ``total`` episodes split equally (remainder to the earliest stages)."""
        n = len(self.stages)
        if total < n:
            raise ConfigError(f"total budget {total} is smaller than the number of stages {n}")
        q, r = divmod(total, n)
        stages = tuple((s, q + (1 if k < r else 0)) for k, (s, _) in enumerate(self.stages))
        return replace(self, stages=stages)


def _resolve(ref, base: Path | None) -> sim.ScenarioSpec:
    ref = str(ref)
    if base is not None and (ref.endswith((".yaml", ".yml")) or "/" in ref):
        p = Path(ref)
        if not p.is_absolute():
            p = base / p
        return load_scenario(p)
    return load_scenario(ref)


def plan_from_dict(d: dict, base: Path | None = None, default_id: str = "plan") -> CurriculumPlan:
    if not isinstance(d, dict):
        raise ConfigError("plan must be a mapping")
    unknown = set(d) - {"id", "target", "stages", "description"}
    if unknown:
        raise ConfigError(f"unknown plan keys: {sorted(unknown)}")
    pid = str(d.get("id", default_id))
    stages_in = d.get("stages") or []
    if not isinstance(stages_in, list) or not stages_in:
        raise ConfigError(f"plan {pid!r} has no stages")
    stages = []
    for k, e in enumerate(stages_in):
        if not isinstance(e, dict) or "scenario" not in e:
            raise ConfigError(f"plan {pid!r}: stage {k + 1} needs a 'scenario'")
        try:
            budget = int(e.get("episodes", 1000))
        except (TypeError, ValueError):
            raise ConfigError(f"plan {pid!r}: stage {k + 1} has a bad episode budget") from None
        stages.append((_resolve(e["scenario"], base), budget))
    if "target" not in d:
        raise ConfigError(f"plan {pid!r} needs a 'target'")
    plan = CurriculumPlan(pid, tuple(stages), _resolve(d["target"], base))
    plan.validate()
    return plan


def _plans_dir():
    return resources.files("microrl") / "data" / "plans"


def bundled_plans() -> list[str]:
    return sorted(f.name[:-5] for f in _plans_dir().iterdir() if f.name.endswith(".yaml"))


def load_plan(path_or_name) -> CurriculumPlan:
    p = Path(str(path_or_name))
    if p.suffix in (".yaml", ".yml") or p.exists():
        try:
            d = yaml.safe_load(p.read_text())
        except OSError as exc:
            raise ConfigError(f"cannot read plan file {p}: {exc.strerror}") from None
        except yaml.YAMLError as exc:
            raise ConfigError(f"cannot parse plan file {p}: {exc}") from None
        return plan_from_dict(d, base=p.parent, default_id=p.stem)
    f = _plans_dir() / f"{path_or_name}.yaml"
    if not f.is_file():
        raise ConfigError(f"no plan file or bundled plan named {path_or_name!r}; bundled: {bundled_plans()}")
    return plan_from_dict(yaml.safe_load(f.read_text()), default_id=str(path_or_name))


@dataclass
class StageRecord:
    index: int
    scenario: str
    episodes: int
    seed: int
    start_checkpoint: str | None
    end_checkpoint: str
    metrics_csv: str
    wall_clock_s: float
    final_win_rate: float | None = None


@dataclass
class RunManifest:
    plan_id: str
    config: dict
    stages: list[StageRecord] = field(default_factory=list)
    target: str = ""
    target_eval: dict | None = None
    complete: bool = False

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "RunManifest":
        d = dict(d)
        d["stages"] = [StageRecord(**s) for s in d.get("stages", [])]
        return cls(**d)

    def write(self, path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        tmp = path.with_name(path.name + ".tmp")
        tmp.write_text(json.dumps(self.to_dict(), indent=2) + "\n")
        os.replace(tmp, path)
        return path


MANIFEST_NAME = "manifest.json"


def load_transfer_checkpoint(path) -> QNetwork:
    """Load a checkpoint for use as an initial network; any failure is a TransferError."""
    try:
        return load_checkpoint(path, expect=INTERFACE)
    except CheckpointError as exc:
        raise TransferError(f"cannot transfer from {path}: {exc}") from None


def _stage_dir(out: Path, k: int, spec: sim.ScenarioSpec) -> Path:
    return out / f"stage_{k + 1:02d}_{spec.name}"


def run_curriculum(plan: CurriculumPlan, cfg: TrainerConfig, out_dir, *, resume: bool = False,
                   eval_episodes: int = 100, checkpoint_every: int = 0,
                   init_checkpoint=None) -> RunManifest:
    """Train through ``plan``'s stages in order and evaluate on its target.

    Args:
        plan: The curriculum.
        cfg: Trainer settings; ``cfg.episodes`` is ignored in favour of the
            per-stage budgets, and stage ``k`` trains with a seed derived
            from ``cfg.seed`` and ``k``.
        out_dir: Directory for stage subdirectories and ``manifest.json``.
        resume: Continue after the last stage whose end checkpoint is on
            disk according to an existing manifest.
        eval_episodes: Greedy episodes for the target evaluation (0 skips it).
        checkpoint_every: Periodic checkpoint interval inside each stage.
        init_checkpoint: Optional checkpoint to start stage 1 from.

    Returns:
        The completed :class:`RunManifest`, also written to ``out_dir``.
    """
    plan.validate()
    cfg.validate()
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    mpath = out / MANIFEST_NAME
    manifest = RunManifest(plan.id, _cfg_dict(cfg), target=plan.target.name)
    done = 0
    if resume and mpath.exists():
        old = RunManifest.from_dict(json.loads(mpath.read_text()))
        if old.plan_id != plan.id:
            raise ConfigError(f"{mpath} belongs to plan {old.plan_id!r}, not {plan.id!r}")
        for rec in old.stages:
            if rec.index != done or not Path(rec.end_checkpoint).exists():
                break
            manifest.stages.append(rec)
            done += 1
        log.info("resuming plan %s after %d completed stage(s)", plan.id, done)
    start = Path(init_checkpoint) if init_checkpoint is not None else None
    if done:
        start = Path(manifest.stages[-1].end_checkpoint)
    for k in range(done, len(plan.stages)):
        spec, budget = plan.stages[k]
        init = load_transfer_checkpoint(start) if start is not None else None
        stage_cfg = replace(cfg, episodes=int(budget), seed=derive_seed(cfg.seed, 100 + k))
        sdir = _stage_dir(out, k, spec)
        t0 = time.perf_counter()
        net, stats = train(spec, stage_cfg, init, out_dir=sdir, checkpoint_every=checkpoint_every)
        rec = StageRecord(
            index=k, scenario=spec.name, episodes=int(budget), seed=stage_cfg.seed,
            start_checkpoint=str(start) if start is not None else None,
            end_checkpoint=str(sdir / "final.txt"), metrics_csv=str(sdir / "metrics.csv"),
            wall_clock_s=round(time.perf_counter() - t0, 3),
            final_win_rate=sum(s.won for s in stats[-100:]) / max(1, len(stats[-100:])),
        )
        manifest.stages.append(rec)
        manifest.write(mpath)
        start = sdir / "final.txt"
        log.info("stage %d/%d (%s) done in %.1fs", k + 1, len(plan.stages), spec.name, rec.wall_clock_s)
    if eval_episodes > 0:
        final = load_transfer_checkpoint(start)
        report = evaluate(final, plan.target, eval_episodes, derive_seed(cfg.seed, 999))
        manifest.target_eval = report.to_dict()
        (out / "target_eval.json").write_text(json.dumps(report.to_dict(), indent=2) + "\n")
    manifest.complete = True
    manifest.write(mpath)
    return manifest


def _cfg_dict(cfg: TrainerConfig) -> dict:
    d = cfg.to_dict()
    d["lambda"] = d.pop("lam")
    return d


@dataclass
class ArmResult:
    seed: int
    arm: str
    episodes_to_threshold: int | None
    final_win_rate: float
    curve: list[tuple[int, float]]


@dataclass
class ComparisonReport:
    scenario: str
    threshold: float
    budget: int
    eval_every: int
    eval_episodes: int
    arms: list[ArmResult]

    def _median(self, arm: str) -> float:
        vals = [a.episodes_to_threshold for a in self.arms if a.arm == arm]
        return statistics.median(math.inf if v is None else v for v in vals)

    @property
    def median_scratch(self) -> float:
        return self._median("scratch")

    @property
    def median_transfer(self) -> float:
        return self._median("transfer")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["median_episodes_to_threshold"] = {
            "scratch": _jsonable(self.median_scratch), "transfer": _jsonable(self.median_transfer)}
        return d


def _jsonable(x):
    return None if isinstance(x, float) and math.isinf(x) else x


def _run_arm(spec, cfg, init, seed, arm, threshold, eval_every, eval_episodes, stop_at_threshold):
    curve: list[tuple[int, float]] = []
    hit: list[int] = []
    eval_seed = derive_seed(seed, 555)

    class _Stop(Exception):
        pass

    def probe(s, net):
        n = s.episode_index + 1
        if n % eval_every:
            return
        wr = evaluate(net, spec, eval_episodes, eval_seed).win_rate
        curve.append((n, wr))
        if not hit and wr >= threshold:
            hit.append(n)
            if stop_at_threshold:
                raise _Stop

    try:
        train(spec, replace(cfg, seed=seed), init, on_episode=probe)
    except _Stop:
        pass
    return ArmResult(seed, arm, hit[0] if hit else None, curve[-1][1] if curve else math.nan, curve)


def compare_scratch_vs_transfer(spec: sim.ScenarioSpec, source_checkpoint, cfg: TrainerConfig,
                                seeds, *, threshold: float = 0.8, eval_every: int = 50,
                                eval_episodes: int = 50, stop_at_threshold: bool = False) -> ComparisonReport:
    """Paired fresh-init and checkpoint-init training runs on ``spec``.

    Both arms of a pair share the training seed, budget (``cfg.episodes``)
    and evaluation seeds. Episodes-to-threshold is the first periodic greedy
    evaluation whose win rate reaches ``threshold`` (``None`` if never).
    """
    seeds = list(seeds)
    if len(seeds) < 2:
        raise ConfigError("compare_scratch_vs_transfer needs at least 2 seeds")
    if eval_every < 1 or eval_episodes < 1:
        raise ConfigError("eval_every and eval_episodes must be >= 1")
    source = load_transfer_checkpoint(source_checkpoint)
    arms = []
    for seed in seeds:
        arms.append(_run_arm(spec, cfg, None, seed, "scratch", threshold, eval_every, eval_episodes,
                             stop_at_threshold))
        arms.append(_run_arm(spec, cfg, source, seed, "transfer", threshold, eval_every, eval_episodes,
                             stop_at_threshold))
    return ComparisonReport(spec.name, threshold, cfg.episodes, eval_every, eval_episodes, arms)


def evaluate_generalization(checkpoint, scenarios, episodes_per: int = 100, seed: int = 0) -> list[dict]:
    """Frozen greedy win rate of one checkpoint on each scenario."""
    net = checkpoint if isinstance(checkpoint, QNetwork) else load_transfer_checkpoint(checkpoint)
    rows = []
    for spec in scenarios:
        r: EvalReport = evaluate(net, spec, episodes_per, seed)
        rows.append({"scenario": spec.name, "episodes": r.episodes, "wins": r.wins, "win_rate": r.win_rate})
    return rows
