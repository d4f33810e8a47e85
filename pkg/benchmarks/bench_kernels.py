"""Time the hot kernels under each available backend.

Usage::

    python benchmarks/bench_kernels.py [--repeat 5] [--number 200]
"""

import argparse
import timeit

import numpy as np

from microrl._backend import available_backends
from microrl.qnet import N_ACTIONS, N_HIDDEN, OBS_DIM, n_params
from microrl.scenarios import load_scenario
from microrl.sim import reset, terrain_points


def _cases(k, spec):
    s = reset(spec, 0)
    ro = s.roster
    terrain = terrain_points(spec)
    n = len(s.hp)
    rng = np.random.default_rng(0)
    theta = rng.normal(0, 0.05, n_params())
    trace = np.zeros_like(theta)
    x, x2 = rng.random(OBS_DIM), rng.random(OBS_DIM)
    out = np.zeros(42)
    orders = np.full(n, 9, dtype=np.int64)
    dims = (OBS_DIM, N_HIDDEN, N_ACTIONS)

    def tick():
        pos, hp, cd, alive = s.pos.copy(), s.hp.copy(), s.cooldown.copy(), s.alive.copy()
        z = [np.zeros(n, dtype=np.int64) for _ in range(3)]
        k.advance_tick(pos, hp, cd, alive, ro.side, ro.cd_frames, ro.damage, ro.defence, ro.fire_range,
                       ro.speed, orders, ro.obstacles, float(spec.map_width), float(spec.map_height),
                       spec.frame_skip, *z)

    return {
        "advance_tick": tick,
        "encode_block": lambda: k.encode_block(s.pos, s.alive, ro.side, s.hp, s.cooldown, ro.max_hp,
                                               ro.cd_frames, ro.sight, terrain, 0, out),
        "q_values": lambda: k.q_values(theta, x, *dims),
        "sarsa_update": lambda: k.sarsa_update(theta, trace, x, 1, 0.1, x2, 2, False, 0.9, 0.72, 1e-9, *dims),
    }


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--scenario", default="m20_vs_zl30")
    p.add_argument("--repeat", type=int, default=5)
    p.add_argument("--number", type=int, default=200)
    args = p.parse_args(argv)
    spec = load_scenario(args.scenario)
    results = {}
    for name, k in available_backends().items():
        for kernel, fn in _cases(k, spec).items():
            best = min(timeit.repeat(fn, repeat=args.repeat, number=args.number)) / args.number
            results.setdefault(kernel, {})[name] = best
    print(f"{'kernel':<14}{'python us':>12}{'cython us':>12}{'speedup':>10}")
    for kernel, r in results.items():
        py, cy = r.get("python"), r.get("cython")
        cy_s = f"{cy * 1e6:12.1f}" if cy else f"{'-':>12}"
        sp = f"{py / cy:9.1f}x" if cy else f"{'-':>10}"
        print(f"{kernel:<14}{py * 1e6:12.1f}{cy_s}{sp}")


if __name__ == "__main__":
    main()
