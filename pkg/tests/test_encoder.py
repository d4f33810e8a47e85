import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from microrl import encoder, sim
from microrl.encoder import (
    ENEMY_MAX, ENEMY_SUM, LAST_ACTION, OBS_DIM, OWN_MAX, OWN_SUM, PREVIOUS, TERRAIN, encode, encode_state,
    sector_index, sectorize, terrain_distance_value, unit_distance_value,
)
from microrl.errors import DomainError
from microrl.sim import Neighbor, RawObservation
from microrl.units import GOLIATH, MARINE, ZEALOT, ZERGLING, CombatAction, Side

from .conftest import make_spec
from .oracles import formulas


def raw(own=(), enemy=(), terrain=(), D=8.0, hp=125, max_hp=125, cd=0, cd_frames=22, pos=(0.0, 0.0)):
    def nbs(pts, side):
        out = []
        for k, (x, y) in enumerate(pts):
            d = math.hypot(x - pos[0], y - pos[1])
            out.append(Neighbor(k, side, "marine", (x, y), d, d <= D))
        return out
    ter = [((x, y), math.hypot(x - pos[0], y - pos[1])) for x, y in terrain]
    return RawObservation(0, Side.OWN, pos, hp, max_hp, cd, cd_frames, D, nbs(own, Side.OWN),
                          nbs(enemy, Side.ENEMY), ter)


class TestDistanceValues:
    def test_unit_value_examples(self):
        assert unit_distance_value(9.0, 8.0) == 0.05
        assert unit_distance_value(0.0, 8.0) == 1.0
        assert unit_distance_value(4.0, 8.0) == pytest.approx(0.525, abs=1e-15)

    def test_unit_value_continuous_at_sight_edge(self):
        assert unit_distance_value(8.0, 8.0) == pytest.approx(0.05, abs=1e-15)

    def test_terrain_value_examples(self):
        assert terrain_distance_value(8.5, 8.0) == 0.0
        assert terrain_distance_value(0.0, 8.0) == 1.0
        assert terrain_distance_value(8.0, 8.0) == 0.0

    @pytest.mark.parametrize("fn", [unit_distance_value, terrain_distance_value])
    @pytest.mark.parametrize("d,D", [(-1.0, 8.0), (1.0, 0.0), (1.0, -2.0), (float("nan"), 1.0)])
    def test_domain_errors(self, fn, d, D):
        with pytest.raises(DomainError):
            fn(d, D)

    @given(st.floats(0, 100), st.floats(0.1, 50))
    @settings(max_examples=300)
    def test_match_closed_form(self, d, D):
        assert unit_distance_value(d, D) == formulas.unit_value(d, D)
        assert terrain_distance_value(d, D) == formulas.terrain_value(d, D)


class TestSectors:
    def test_axis_examples(self):
        assert sector_index(1.0, 0.0) == 0
        assert sector_index(0.0, 1.0) == 2
        assert sector_index(0.0, 0.0) == 0

    def test_one_neighbor_per_sector(self):
        pts = [((math.cos(math.radians(a)), math.sin(math.radians(a))), a) for a in range(0, 360, 45)]
        buckets = sectorize((0.0, 0.0), pts)
        assert [len(b) for b in buckets] == [1] * 8
        assert [b[0][1] for b in buckets] == list(range(0, 360, 45))

    def test_boundary_rounds_counterclockwise(self):
        a = math.radians(22.5)
        assert sector_index(math.cos(a), math.sin(a)) == 1
        for k in range(8):
            lo = math.radians(45 * k - 22.5 + 1e-7)
            hi = math.radians(45 * k + 22.5 - 1e-7)
            assert sector_index(math.cos(lo), math.sin(lo)) == k
            assert sector_index(math.cos(hi), math.sin(hi)) == k

    def test_bearing_just_below_an_edge(self):
        # atan2 gives -67.50000000000001 degrees: inside sector 6, not on its edge
        dx, dy = 1.3180194846605326, -3.1819805153394576
        assert sector_index(dx, dy) == 6 == formulas.sector_deg(dx, dy)

    @given(st.integers(-40, 40), st.integers(-40, 40))
    @settings(max_examples=500)
    def test_matches_degree_oracle(self, qx, qy):
        dx, dy = qx / 4.0, qy / 4.0
        assert sector_index(dx, dy) == formulas.sector_deg(dx, dy)


class TestEncode:
    def test_lone_unit(self):
        v = encode(raw())
        assert v.shape == (OBS_DIM,) == (93,)
        assert v[0] == 0.0 and v[1] == 1.0
        assert not v[2:42].any()
        assert np.array_equal(v[PREVIOUS], v[:42])
        assert not v[LAST_ACTION].any()

    def test_two_enemies_at_zero_distance(self):
        v = encode(raw(enemy=[(0.0, 0.0), (0.0, 0.0)]))
        assert v[ENEMY_SUM][0] == 2.0
        assert v[ENEMY_MAX][0] == 1.0

    def test_out_of_sight_units_ignored(self):
        v = encode(raw(own=[(9.0, 0.0)], enemy=[(0.0, 20.0)]))
        assert not v[2:42].any()

    def test_history_and_one_hot(self):
        prev = np.arange(93, dtype=float) / 100
        v = encode(raw(), prev, CombatAction.LEFT)
        assert np.array_equal(v[PREVIOUS], prev[:42])
        assert v[LAST_ACTION].tolist() == [0, 0, 1, 0, 0, 0, 0, 0, 0]

    def test_normalisation(self):
        v = encode(raw(hp=50, max_hp=125, cd=11, cd_frames=22))
        assert v[0] == 0.5 and v[1] == 0.4

    def test_terrain_max_per_sector(self):
        v = encode(raw(terrain=[(2.0, 0.0), (4.0, 0.0), (0.0, -6.0)]))
        assert v[TERRAIN][0] == pytest.approx(0.75)
        assert v[TERRAIN][6] == pytest.approx(0.25)

    def test_kernel_matches_reference(self, g3z6):
        s = sim.reset(g3z6, 3)
        for i in s.living(Side.OWN) + s.living(Side.ENEMY):
            ref = encode(sim.observe_raw(s, i))
            np.testing.assert_allclose(encode_state(s, i), ref, rtol=0, atol=1e-14)

    def test_opening_neighbor_counts(self, g3z6):
        # goliaths 4 apart in a column (ends exactly at sight range 8), zealots 32 to the east
        s = sim.reset(replace(g3z6, spawn_jitter=0.0), 0)
        counts = []
        for i in s.living(Side.OWN):
            r = sim.observe_raw(s, i)
            counts.append((sum(n.in_sight for n in r.own_neighbors), sum(n.in_sight for n in r.enemy_neighbors)))
        assert counts == [(2, 0), (2, 0), (2, 0)]


def random_scene(draw_units, rng_seed, n_own, n_enemy, obstacles=()):
    rng = np.random.default_rng(rng_seed)
    classes = [GOLIATH, ZEALOT, ZERGLING, MARINE]
    pts = set()
    while len(pts) < n_own + n_enemy:
        pts.add((float(rng.integers(0, 80)) / 4, float(rng.integers(0, 80)) / 4))
    pts = sorted(pts)
    rng.shuffle(pts)
    own = [(classes[rng.integers(4)], p) for p in pts[:n_own]]
    enemy = [(classes[rng.integers(4)], p) for p in pts[n_own:]]
    spec = make_spec(own, enemy, width=20.0, height=20.0)
    s = sim.reset(spec, 0)
    s.hp[:] = [max(1, int(h * rng.uniform(0.1, 1))) for h in s.hp]
    s.cooldown[:] = [int(rng.integers(0, c + 1)) for c in s.roster.cd_frames]
    return s


scene_args = st.tuples(st.integers(0, 2**32 - 1), st.integers(1, 12), st.integers(1, 12))


@pytest.mark.parametrize("k", range(20))
def test_length_on_random_scenes(k):
    s = random_scene(None, k, 1 + k % 7, 1 + (3 * k) % 11)
    for i in range(len(s.hp)):
        assert encode_state(s, i).shape == (93,)


# --- invariant suites ---

@given(scene_args)
@settings(max_examples=1000)
def test_sum_max_consistency_and_ranges(args):
    seed, n_own, n_enemy = args
    s = random_scene(None, seed, n_own, n_enemy)
    for i in range(len(s.hp)):
        r = sim.observe_raw(s, i)
        v = encode_state(s, i)
        assert v.shape == (93,)
        assert 0 <= v[0] <= 1 and 0 <= v[1] <= 1
        for sums, maxes, group in ((OWN_SUM, OWN_MAX, r.own_neighbors), (ENEMY_SUM, ENEMY_MAX, r.enemy_neighbors)):
            occupants = [0] * 8
            for nb in group:
                if nb.in_sight:
                    occupants[sector_index(nb.position[0] - r.position[0], nb.position[1] - r.position[1])] += 1
            for k in range(8):
                sm, mx = v[sums][k], v[maxes][k]
                assert 0 <= mx <= 1
                assert 0 <= sm <= occupants[k] + 1e-12
                assert mx <= sm + 1e-12
                if occupants[k] == 1:
                    assert mx == sm
                if occupants[k] == 0:
                    assert sm == 0 and mx == 0
        assert ((0 <= v[TERRAIN]) & (v[TERRAIN] <= 1)).all()


@given(scene_args, st.integers(0, 2**32 - 1))
@settings(max_examples=1000)
def test_out_of_sight_invisibility(args, move_seed):
    seed, n_own, n_enemy = args
    s = random_scene(None, seed, n_own, n_enemy)
    i = 0
    D = s.roster.sight[i]
    far = [j for j in range(1, len(s.hp)) if np.hypot(*(s.pos[j] - s.pos[i])) > D]
    before = encode_state(s, i)
    rng = np.random.default_rng(move_seed)
    for j in far:
        while True:
            p = rng.uniform(0, 20, size=2)
            if np.hypot(*(p - s.pos[i])) > D:
                break
        s.pos[j] = p
    assert np.array_equal(encode_state(s, i), before)


class TestInvariants:
    @given(st.integers(1, 40), st.integers(1, 40))
    @settings(max_examples=50)
    def test_unit_count_independence(self, n_own, n_enemy):
        s = random_scene(None, n_own * 100 + n_enemy, n_own, n_enemy)
        assert {encode_state(s, i).shape for i in range(len(s.hp))} == {(93,)}


def test_describe_round_trip():
    v = encode(raw(enemy=[(1.0, 0.0)]))
    d = encoder.describe(v)
    assert d["enemy_sum"][0] == pytest.approx(1 - 0.95 / 8)
