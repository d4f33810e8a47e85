from dataclasses import replace

from microrl.qnet import init
from microrl.replay import read_trace, record_episode
from microrl.scenarios import bundled_scenario
from microrl.units import ScriptedPolicy


def test_network_trace(tmp_path):
    spec = replace(bundled_scenario("g3_vs_z6"), max_episode_steps=12)
    p = record_episode(init(0), spec, 5, tmp_path / "r.jsonl")
    recs = read_trace(p)
    assert 1 <= len(recs) <= 12
    assert [r["tick"] for r in recs] == list(range(1, len(recs) + 1))
    assert recs[-1]["terminal"] and not any(r["terminal"] for r in recs[:-1])
    u = recs[0]["units"]
    assert len(u) == 9 and {x["side"] for x in u} == {"own", "enemy"}
    assert all(x["action"] is not None for x in u if x["side"] == "own")
    assert all(x["action"] is None for x in u if x["side"] == "enemy")
    assert record_episode(init(0), spec, 5, tmp_path / "s.jsonl").read_text() == p.read_text()


def test_scripted_trace(tmp_path):
    spec = replace(bundled_scenario("m5_vs_zl6"), max_episode_steps=8)
    recs = read_trace(record_episode(ScriptedPolicy.WEAKEST, spec, 1, tmp_path / "r.jsonl"))
    assert recs and all(x["action"].startswith("order:") for x in recs[0]["units"] if x["side"] == "own")
