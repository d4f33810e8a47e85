"""Command-line entry point: ``microrl {train,curriculum,eval,replay-dump}``.

Exit codes: 0 success, 2 configuration error, 3 numeric divergence,
4 transfer error, 5 checkpoint error.

Settings resolve as flag > ``--config`` file > built-in default, and every
run directory receives ``config.json`` holding the fully resolved values.
The default output root is ``runs/`` or ``$MICRORL_OUT``.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np
import yaml

from . import __version__
from ._backend import BACKEND
from .curriculum import load_plan, load_transfer_checkpoint, run_curriculum
from .encoder import describe, encode_state
from .errors import CheckpointError, ConfigError, MicroRLError
from .evaluate import evaluate, evaluate_repeated, training_curve, write_curve, write_report
from .qnet import load_checkpoint
from .replay import record_episode
from .scenarios import load_scenario, scenario_to_dict, with_overrides
from .trainer import RewardConfig, TrainerConfig, checkpoint_name, train, write_metrics
from .units import ScriptedPolicy, Side

log = logging.getLogger("microrl")

_TRAINER_FLAGS = {"episodes": "episodes", "seed": "seed", "epsilon0": "epsilon0", "alpha": "alpha",
                  "gamma": "gamma", "lam": "lam", "max_steps": "max_episode_steps"}


def out_root() -> Path:
    return Path(os.environ.get("MICRORL_OUT", "runs"))


def _load_config_file(path) -> dict:
    if path is None:
        return {}
    try:
        d = yaml.safe_load(Path(path).read_text()) or {}
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc.strerror}") from None
    except yaml.YAMLError as exc:
        raise ConfigError(f"cannot parse config file {path}: {exc}") from None
    if not isinstance(d, dict):
        raise ConfigError(f"config file {path} must hold a mapping")
    return d


def resolve_trainer_config(args, file_cfg: dict) -> TrainerConfig:
    """Merge defaults, the config file's ``trainer`` section, then flags."""
    base = dict(file_cfg.get("trainer") or {})
    cfg = TrainerConfig.from_dict(base)
    changes = {}
    for flag, field_name in _TRAINER_FLAGS.items():
        v = getattr(args, flag, None)
        if v is not None:
            changes[field_name] = v
    if getattr(args, "reward_variant", None) is not None:
        changes["reward"] = replace(cfg.reward, variant=args.reward_variant)
    cfg = replace(cfg, **changes)
    cfg.validate()
    return cfg


def resolve_scenario(ref, args, file_cfg: dict):
    ref = ref or file_cfg.get("scenario")
    if ref is None:
        raise ConfigError("no scenario given (--scenario or 'scenario' in the config file)")
    spec = load_scenario(ref)
    return _apply_scenario_flags(spec, args)


def _apply_scenario_flags(spec, args):
    changes = {}
    if getattr(args, "frame_skip", None) is not None:
        changes["frame_skip"] = args.frame_skip
    if getattr(args, "opponent", None) is not None:
        changes["enemy_controller"] = ScriptedPolicy(args.opponent)
    return with_overrides(spec, **changes) if changes else spec


def _snapshot(out: Path, command: str, **parts):
    out.mkdir(parents=True, exist_ok=True)
    d = {"command": command, "version": __version__, "backend": BACKEND, **parts}
    (out / "config.json").write_text(json.dumps(d, indent=2, default=str) + "\n")


def _cfg_json(cfg: TrainerConfig) -> dict:
    d = cfg.to_dict()
    d["lambda"] = d.pop("lam")
    return d


def _latest_checkpoint(out: Path):
    best = None
    for p in out.glob("ckpt_*.txt"):
        try:
            n = int(p.stem.split("_")[1])
        except (IndexError, ValueError):
            continue
        if best is None or n > best[0]:
            best = (n, p)
    return best


def _read_metrics(path: Path, upto: int) -> list[list[str]]:
    if not path.exists():
        return []
    with path.open(newline="") as f:
        rows = list(csv.reader(f))[1:]
    return [r for r in rows if r and int(r[0]) < upto]


def cmd_train(args) -> int:
    file_cfg = _load_config_file(args.config)
    cfg = resolve_trainer_config(args, file_cfg)
    spec = resolve_scenario(args.scenario, args, file_cfg)
    out = Path(args.out) if args.out else out_root() / f"train_{spec.name}_s{cfg.seed}"
    init = load_transfer_checkpoint(args.init) if args.init else None
    start = 0
    old_rows = []
    if args.resume:
        latest = _latest_checkpoint(out)
        if latest is not None and latest[0] > 0:
            start = min(latest[0], cfg.episodes)
            init = load_checkpoint(latest[1])
            old_rows = _read_metrics(out / "metrics.csv", start)
            log.info("resuming from %s (episode %d)", latest[1], start)
    _snapshot(out, "train", scenario=scenario_to_dict(spec), trainer=_cfg_json(cfg),
              checkpoint_every=args.checkpoint_every, init=args.init, resumed_from=start or None)
    net, stats = train(spec, replace(cfg, episodes=cfg.episodes - start), init, out_dir=out,
                       checkpoint_every=args.checkpoint_every, start_episode=start)
    if old_rows:
        _merge_metrics(out / "metrics.csv", old_rows)
    if args.debug_encoder:
        _dump_encoder(net, spec, cfg.seed, out / "encoder_debug.json")
    wins = sum(s.won for s in stats)
    print(f"trained {len(stats)} episodes on {spec.name}; training win rate {wins / max(1, len(stats)):.3f}; "
          f"output in {out}")
    return 0


def _merge_metrics(path: Path, old_rows):
    with path.open(newline="") as f:
        rows = list(csv.reader(f))
    with path.open("w", newline="") as f:
        w = csv.writer(f)
        w.writerow(rows[0])
        w.writerows(old_rows)
        w.writerows(rows[1:])


def _dump_encoder(net, spec, seed, path: Path):
    """First-tick observation of every own unit, decoded field by field."""
    from .sim import reset
    state = reset(spec, seed)
    dump = {}
    for i in state.living(Side.OWN):
        obs = encode_state(state, i)
        dump[str(i)] = {"observation": obs.tolist(), "fields": describe(obs),
                        "q_values": net.values(obs).tolist()}
    path.write_text(json.dumps(dump, indent=2) + "\n")


def cmd_curriculum(args) -> int:
    file_cfg = _load_config_file(args.config)
    cfg = resolve_trainer_config(args, file_cfg)
    plan = load_plan(args.plan or file_cfg.get("plan") or _missing("--plan"))
    if args.episodes is not None:
        plan = plan.with_total(args.episodes)
    if args.frame_skip is not None or args.opponent is not None:
        plan = replace(plan, stages=tuple((_apply_scenario_flags(s, args), b) for s, b in plan.stages),
                       target=_apply_scenario_flags(plan.target, args))
    out = Path(args.out) if args.out else out_root() / f"curriculum_{plan.id}_s{cfg.seed}"
    _snapshot(out, "curriculum", plan={"id": plan.id, "target": scenario_to_dict(plan.target),
                                       "stages": [{"scenario": scenario_to_dict(s), "episodes": b}
                                                  for s, b in plan.stages]},
              trainer=_cfg_json(cfg), checkpoint_every=args.checkpoint_every,
              eval_episodes=args.eval_episodes)
    m = run_curriculum(plan, cfg, out, resume=args.resume, eval_episodes=args.eval_episodes,
                       checkpoint_every=args.checkpoint_every, init_checkpoint=args.init)
    for s in m.stages:
        print(f"stage {s.index + 1}: {s.scenario} x{s.episodes} -> {s.end_checkpoint} ({s.wall_clock_s:.1f}s)")
    if m.target_eval:
        print(f"target {m.target}: win rate {m.target_eval['win_rate']:.3f} over {m.target_eval['episodes']} episodes")
    print(f"manifest: {out / 'manifest.json'}")
    return 0


def _missing(flag):
    raise ConfigError(f"{flag} is required")


def cmd_eval(args) -> int:
    file_cfg = _load_config_file(args.config)
    spec = resolve_scenario(args.scenario, args, file_cfg)
    seed = args.seed if args.seed is not None else 0
    out = Path(args.out) if args.out else None
    if args.curve:
        rows = training_curve(args.curve, spec, args.every, args.episodes, seed)
        for r in rows:
            print(f"{r['episode']:>7} {r['win_rate']:.3f} {r['mean_steps']:.1f} {r['mean_avg_reward']:.4f} {r['status']}")
        if out:
            write_curve(rows, out / "curve.csv")
        return 0
    policy = _policy(args)
    reports = evaluate_repeated(policy, spec, args.episodes, args.repeats, seed) if args.repeats > 1 \
        else [evaluate(policy, spec, args.episodes, seed)]
    print(f"{'repeat':>6} {'win_rate':>8} {'steps':>8} {'sd':>7} {'avg_r':>9}")
    for k, r in enumerate(reports):
        print(f"{k:>6} {r.win_rate:>8.3f} {r.mean_steps:>8.1f} {r.std_steps:>7.1f} {r.mean_avg_reward:>9.4f}")
    if len(reports) > 1:
        wr = [r.win_rate for r in reports]
        print(f"  mean {np.mean(wr):.3f} sd {np.std(wr):.3f}")
    if out:
        _snapshot(out, "eval", scenario=scenario_to_dict(spec), policy=args.checkpoint or args.policy,
                  episodes=args.episodes, repeats=args.repeats, seed=seed)
        write_report(reports if len(reports) > 1 else reports[0], out / "eval.json")
        _write_eval_csv(reports, out / "eval.csv")
        if args.trace:
            record_episode(policy, spec, reports[0].seeds[0], out / "replay.jsonl")
    return 0


def _write_eval_csv(reports, path: Path):
    fields = ["repeat", "scenario", "episodes", "wins", "win_rate", "mean_steps", "std_steps",
              "mean_avg_reward", "seed"]
    with path.open("w", newline="") as f:
        w = csv.writer(f)
        w.writerow(fields)
        for k, r in enumerate(reports):
            w.writerow([k, r.scenario, r.episodes, r.wins, r.win_rate, r.mean_steps, r.std_steps,
                        r.mean_avg_reward, r.seed])


def _policy(args):
    if args.checkpoint and args.policy:
        raise ConfigError("give either --checkpoint or --policy, not both")
    if args.checkpoint:
        return load_checkpoint(args.checkpoint)
    if args.policy:
        return ScriptedPolicy(args.policy)
    raise ConfigError("--checkpoint or --policy is required")


def cmd_replay_dump(args) -> int:
    file_cfg = _load_config_file(args.config)
    spec = resolve_scenario(args.scenario, args, file_cfg)
    policy = _policy(args)
    seed = args.seed if args.seed is not None else 0
    out = Path(args.out) if args.out else out_root() / f"replay_{spec.name}_s{seed}.jsonl"
    if out.suffix != ".jsonl":
        out = out / "replay.jsonl"
    record_episode(policy, spec, seed, out)
    print(f"replay written to {out}")
    return 0


def _add_common(p, *, trainer: bool):
    p.add_argument("--config", help="YAML file with 'trainer', 'scenario' or 'plan' entries")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", help="output directory (default under $MICRORL_OUT or runs/)")
    p.add_argument("--frame-skip", type=int)
    p.add_argument("--opponent", choices=[p.value for p in ScriptedPolicy])
    if trainer:
        p.add_argument("--episodes", type=int)
        p.add_argument("--checkpoint-every", type=int, default=200)
        p.add_argument("--resume", action="store_true")
        p.add_argument("--epsilon0", type=float)
        p.add_argument("--alpha", type=float)
        p.add_argument("--gamma", type=float)
        p.add_argument("--lambda", dest="lam", type=float)
        p.add_argument("--max-steps", type=int, help="episode length cap in decision ticks")
        p.add_argument("--reward-variant", choices=["folded", "literal"])
        p.add_argument("--init", help="checkpoint to start from (transfer)")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="microrl", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__} ({BACKEND} kernels)")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train a shared network on one scenario")
    p.add_argument("--scenario")
    _add_common(p, trainer=True)
    p.add_argument("--debug-encoder", action="store_true", help="dump first-tick observations")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("curriculum", help="run a curriculum plan and evaluate on its target")
    p.add_argument("--plan")
    _add_common(p, trainer=True)
    p.add_argument("--eval-episodes", type=int, default=100)
    p.set_defaults(func=cmd_curriculum)

    p = sub.add_parser("eval", help="greedy evaluation of a checkpoint or scripted policy")
    p.add_argument("--scenario")
    p.add_argument("--checkpoint")
    p.add_argument("--policy", choices=[p.value for p in ScriptedPolicy], help="scripted own-side policy")
    _add_common(p, trainer=False)
    p.add_argument("--episodes", type=int, default=100)
    p.add_argument("--repeats", type=int, default=1)
    p.add_argument("--curve", help="checkpoint directory to sample as a training curve")
    p.add_argument("--every", type=int, default=200)
    p.add_argument("--trace", action="store_true", help="save a replay of the first episode")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("replay-dump", help="write a JSON-lines trace of one greedy episode")
    p.add_argument("--scenario")
    p.add_argument("--checkpoint")
    p.add_argument("--policy", choices=[p.value for p in ScriptedPolicy])
    _add_common(p, trainer=False)
    p.set_defaults(func=cmd_replay_dump)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except MicroRLError as exc:
        print(f"microrl: error: {exc}", file=sys.stderr)
        return exc.exit_code
    except KeyboardInterrupt:
        print("microrl: interrupted", file=sys.stderr)
        return 130


if __name__ == "__main__":
    sys.exit(main())
