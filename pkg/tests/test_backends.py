import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from microrl import _pykernels
from microrl._backend import BACKEND, available_backends
from microrl.scenarios import load_scenario
from microrl.sim import reset, step, terrain_points

BACKENDS = available_backends()
needs_ext = pytest.mark.skipif("cython" not in BACKENDS, reason="extension not built")
N_IN, N_H, N_OUT = 93, 100, 9


def test_selection_reports_a_backend():
    assert BACKEND in ("cython", "python")
    assert BACKENDS["python"] is _pykernels


def test_env_forces_python():
    code = "from microrl._backend import BACKEND; print(BACKEND)"
    env = dict(os.environ, MICRORL_BACKEND="python")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"


def _scene(seed, ticks):
    spec = load_scenario("g3_vs_z6")
    s = reset(spec, seed)
    r = np.random.default_rng(seed)
    for _ in range(ticks):
        if s.terminal:
            break
        s, _ = step(s, {i: int(r.integers(9)) for i in s.living(0)})
    return spec, s


@needs_ext
@settings(max_examples=300)
@given(st.integers(0, 2**31 - 1), st.integers(0, 30), st.integers(1, 12))
def test_advance_tick_parity(seed, ticks, frame_skip):
    spec, s = _scene(seed, ticks)
    ro = s.roster
    r = np.random.default_rng(seed + 1)
    n = len(s.hp)
    orders = r.choice([-1, *range(11), *range(16, 32)], size=n).astype(np.int64)
    results = []
    for k in (BACKENDS["python"], BACKENDS["cython"]):
        pos, hp, cd, alive = s.pos.copy(), s.hp.copy(), s.cooldown.copy(), s.alive.copy()
        o = orders.copy()
        k.resolve_scripted(pos, hp, alive, ro.side, ro.fire_range, o)
        dealt, lost, shots = (np.zeros(n, dtype=np.int64) for _ in range(3))
        idle = np.zeros(n, dtype=np.uint8)
        k.idle_moves(pos, alive, ro.side, ro.sight, o, idle)
        f = k.advance_tick(pos, hp, cd, alive, ro.side, ro.cd_frames, ro.damage, ro.defence,
                           ro.fire_range, ro.speed, o, ro.obstacles, float(spec.map_width),
                           float(spec.map_height), frame_skip, dealt, lost, shots)
        results.append((f, pos, hp, cd, alive, o, dealt, lost, shots, idle))
    a, b = results
    assert a[0] == b[0]
    for x, y in zip(a[1:], b[1:]):
        assert np.array_equal(x, y)


@needs_ext
@settings(max_examples=300)
@given(st.integers(0, 2**31 - 1), st.integers(0, 30))
def test_encode_block_parity(seed, ticks):
    spec, s = _scene(seed, ticks)
    ro = s.roster
    terrain = terrain_points(spec)
    for c in np.flatnonzero(s.alive):
        blocks = []
        for k in (BACKENDS["python"], BACKENDS["cython"]):
            out = np.zeros(42)
            k.encode_block(s.pos, s.alive, ro.side, s.hp, s.cooldown, ro.max_hp, ro.cd_frames,
                           ro.sight, terrain, int(c), out)
            blocks.append(out)
        np.testing.assert_allclose(blocks[0], blocks[1], rtol=0, atol=1e-14)


@needs_ext
@settings(max_examples=200)
@given(st.integers(0, 2**31 - 1), st.integers(0, 8), st.integers(0, 8), st.booleans())
def test_dense_parity(seed, a, a2, done):
    r = np.random.default_rng(seed)
    theta = r.normal(0, 0.1, N_H * N_IN + N_H + N_OUT * N_H + N_OUT)
    trace = r.normal(0, 0.1, theta.size)
    x, x2 = r.random(N_IN), r.random(N_IN)
    py, cy = BACKENDS["python"], BACKENDS["cython"]
    np.testing.assert_allclose(py.q_values(theta, x, N_IN, N_H, N_OUT),
                               cy.q_values(theta, x, N_IN, N_H, N_OUT), rtol=1e-12, atol=1e-12)
    np.testing.assert_allclose(py.grad_q(theta, x, a, N_IN, N_H, N_OUT),
                               cy.grad_q(theta, x, a, N_IN, N_H, N_OUT), rtol=1e-12, atol=1e-12)
    t = [theta.copy(), theta.copy()]
    e = [trace.copy(), trace.copy()]
    d = [k.sarsa_update(t[j], e[j], x, a, 0.3, x2, a2, done, 0.9, 0.72, 0.01, N_IN, N_H, N_OUT)
         for j, k in enumerate((py, cy))]
    assert d[0] == pytest.approx(d[1], rel=1e-12, abs=1e-12)
    np.testing.assert_allclose(t[0], t[1], rtol=1e-12, atol=1e-12)
    np.testing.assert_allclose(e[0], e[1], rtol=1e-12, atol=1e-12)


@needs_ext
def test_training_runs_agree(tmp_path):
    code = (
        "import sys; from microrl.cli import main;"
        "sys.exit(main(['train','--scenario','g3_vs_z6','--episodes','3','--max-steps','40',"
        "'--seed','5','--out',sys.argv[1]]))"
    )
    outs = {}
    for name in ("python", "cython"):
        env = dict(os.environ, MICRORL_BACKEND=name)
        subprocess.run([sys.executable, "-c", code, str(tmp_path / name)], env=env, check=True)
        outs[name] = (tmp_path / name / "metrics.csv").read_text().splitlines()
    for p, c in zip(outs["python"], outs["cython"]):
        pf, cf = p.split(","), c.split(",")
        assert pf[0] == cf[0] and pf[1] == cf[1] and pf[4] == cf[4]
        if pf[0] != "episode":
            assert float(pf[2]) == pytest.approx(float(cf[2]), abs=1e-9)
