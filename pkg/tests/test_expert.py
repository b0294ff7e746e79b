import json

import numpy as np
import pytest

from hetuav.config import ScenarioConfig
from hetuav.env import ActionSpec, HetUavEnv, read_transitions, velocity_ladder
from hetuav.expert import (LLMExpert, ParseError, ScriptedExpert, build_prompt, choose_move, collect_dataset,
                           horizontal_range, load_dataset, make_expert, parse_llm_action, scripted_targets)

SPEC = ActionSpec(tuple(velocity_ladder(4, 25, 5)))


def summary(uav, gt, eve, c_r=(100.0,), cap=(1,), mode="horizontal", t=0):
    return dict(uav=np.array(uav, float), gt=np.array(gt, float).reshape(-1, 2),
                eve=np.array(eve, float).reshape(-1, 2), coverage_range=list(c_r), capacity=list(cap),
                altitude=100.0, area_side=400.0, t=t, n_slots=20, slot_duration=1.0, coverage_distance=mode,
                ladder=list(SPEC.ladder), protection_distance=10.0, previous_actions=[])


def small_cfg():
    return ScenarioConfig(n_uav=2, n_gt=4, n_eve=1, coverage_range=[140.0, 150.0], service_capacity=[2, 2],
                          n_slots=2, uav_init=[[80.0, 80.0], [120.0, 120.0]], s2dc_max_iter=2, ipm_tol=1e-5,
                          s2dc_starts=["mrt"])


def test_at_target_stays_still():
    s = summary([[100, 100]], [[100, 100]], np.zeros((0, 2)))
    assert ScriptedExpert().act(s, SPEC) == ([0], False)


def test_far_east_full_speed():
    s = summary([[100, 100]], [[300, 100]], np.zeros((0, 2)))
    joint, _ = ScriptedExpert().act(s, SPEC)
    assert SPEC.parts(joint[0])[:2] == ("right", 4)


def test_no_overshoot():
    # 10 m east: 7.37 fits, 13.57 would overshoot
    assert SPEC.parts(choose_move(np.array([0.0, 0.0]), np.array([10.0, 0.0]), SPEC, 1.0))[:2] == ("right", 2)
    assert SPEC.parts(choose_move(np.array([0.0, 0.0]), np.array([0.0, -3.0]), SPEC, 1.0))[:2] == ("still", 0)
    assert SPEC.parts(choose_move(np.array([0.0, 0.0]), np.array([-5.0, 20.0]), SPEC, 1.0))[:2] == ("up", 3)


def test_collocated_eve_displaces_target():
    # Eve sits on the GT centroid; the target is pushed along Eve->UAV (west),
    # by 0.5 * R with R = 1.5 * C_r, and the UAV heads that way
    s = summary([[100, 100]], [[200, 100]], [[200, 100]], c_r=(40.0,))
    tg = scripted_targets(s)[0]
    assert np.allclose(tg, [200 - 0.5 * 60.0, 100])
    s = summary([[100, 100]], [[150, 100]], [[150, 100]], c_r=(40.0,))
    tg = scripted_targets(s)[0]
    assert np.allclose(tg, [120.0, 100.0])
    joint, _ = ScriptedExpert().act(s, SPEC)
    assert SPEC.parts(joint[0])[:2] == ("right", 3)


def test_claims_greedy_by_uav_id():
    s = summary([[0, 0], [10, 0]], [[5, 0], [300, 300]], np.zeros((0, 2)), c_r=(100, 100), cap=(1, 1))
    tg = scripted_targets(s)
    assert np.allclose(tg[0], [5, 0]) and np.allclose(tg[1], [300, 300])


def test_horizontal_range():
    assert horizontal_range(125.0, 100.0, "3d") == pytest.approx(75.0)
    assert horizontal_range(80.0, 100.0, "3d") == 0.0
    assert horizontal_range(80.0, 100.0, "horizontal") == 80.0


def test_prompt_deterministic_and_sized():
    s = summary([[0, 0], [10, 0]], [[5, 0]], [[50, 50]], c_r=(100, 120), cap=(2, 3))
    p = build_prompt(s)
    assert p == build_prompt(s)
    assert "Recent trajectory decisions" not in p
    assert p.count("<right|up|left|down|still>") == 2
    assert "$" not in p
    ph = build_prompt(s, history=[[("right", 2), ("still", 0)]])
    assert "Recent trajectory decisions" in ph and "UAV 1: right, level 2" in ph


def test_parse_well_formed():
    text = "Plan:\nUAV 1: right, level 3\nUAV 2: still, level 0\n"
    assert parse_llm_action(text, SPEC, 2) == [SPEC.encode("right", 3), 0]
    assert parse_llm_action("uav 2 - Down level 1\nUAV 1: UP, level 4", SPEC, 2) == [
        SPEC.encode("up", 4), SPEC.encode("down", 1)]


@pytest.mark.parametrize("text", ["", "UAV 1: right, level 3", "UAV 1: right, level 3\nUAV 1: up, level 1",
                                  "UAV 1: right, level 9\nUAV 2: up, level 1",
                                  "UAV 1: right, level 1\nUAV 3: up, level 1"])
def test_parse_errors(text):
    with pytest.raises(ParseError):
        parse_llm_action(text, SPEC, 2)


def test_llm_expert_transport_and_fallback():
    replies = iter(["UAV 1: left, level 2"])
    s = summary([[100, 100]], [[300, 100]], np.zeros((0, 2)))
    ex = LLMExpert(transport=lambda prompt: next(replies))
    assert ex.act(s, SPEC) == ([SPEC.encode("left", 2)], False)
    bad = LLMExpert(retries=1, transport=lambda prompt: "no idea")
    joint, fallback = bad.act(s, SPEC)
    assert fallback and joint == ScriptedExpert().act(s, SPEC)[0]
    assert len(bad.raw_log) == 2


def test_llm_expert_without_endpoint_falls_back(monkeypatch):
    monkeypatch.delenv("EXPERT_API_URL", raising=False)
    s = summary([[100, 100]], [[300, 100]], np.zeros((0, 2)))
    joint, fallback = LLMExpert(retries=0).act(s, SPEC)
    assert fallback


def test_make_expert():
    assert isinstance(make_expert("scripted"), ScriptedExpert)
    with pytest.raises(ValueError):
        make_expert("oracle")


def test_collect_dataset_arity_and_files(tmp_path):
    cfg = small_cfg()
    env = HetUavEnv(cfg)
    parts = collect_dataset(ScriptedExpert(), env, 1, seed=3, out_dir=tmp_path / "a")
    assert [len(p) for p in parts] == [cfg.n_slots] * cfg.n_uav
    collect_dataset(ScriptedExpert(), HetUavEnv(cfg), 1, seed=3, out_dir=tmp_path / "b")
    for k in range(cfg.n_uav):
        assert (tmp_path / "a" / f"agent{k}.jsonl").read_bytes() == (tmp_path / "b" / f"agent{k}.jsonl").read_bytes()
    loaded = load_dataset(tmp_path / "a", env)
    assert loaded == parts
    for line in (tmp_path / "a" / "agent0.jsonl").read_text().splitlines():
        assert set(json.loads(line)) >= {"episode", "t", "agent", "obs", "action", "reward", "next_obs", "done"}


def test_dataset_rewards_reproducible():
    cfg = small_cfg()
    parts = collect_dataset(ScriptedExpert(), HetUavEnv(cfg), 1, seed=8)
    env = HetUavEnv(cfg)
    env.reset(8, 0)
    for t in range(cfg.n_slots):
        trs, _ = env.step([parts[k][t].action for k in range(cfg.n_uav)])
        assert [tr.reward for tr in trs] == [parts[k][t].reward for k in range(cfg.n_uav)]


def test_dataset_records_validate(tmp_path):
    cfg = small_cfg()
    env = HetUavEnv(cfg)
    collect_dataset(ScriptedExpert(), env, 1, seed=1, out_dir=tmp_path)
    read_transitions(tmp_path / "agent1.jsonl", env.obs_dim, env.n_actions)
    with pytest.raises(ValueError):
        read_transitions(tmp_path / "agent1.jsonl", env.obs_dim + 2, env.n_actions)
