import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fastlstd.errors import ConfigurationError, FormatError, ScaleError
from fastlstd.rng import RngHandle
from fastlstd.traffic import (
    EnvSamples,
    EnvState,
    GridConfig,
    TrafficFeatureMap,
    all_action_features,
    collect_samples,
    cost,
    evaluate_policy_tar,
    feasible_actions,
    features,
    green_lanes,
    step,
    step_detailed,
)


def test_action_counts():
    assert len(feasible_actions(GridConfig(rows=1, cols=1))) == 2
    assert len(feasible_actions(GridConfig(rows=2, cols=1))) == 4
    assert len(feasible_actions(GridConfig(rows=2, cols=4))) == 256


def test_too_many_joint_actions():
    with pytest.raises(ScaleError):
        feasible_actions(GridConfig(rows=3, cols=3))


@pytest.mark.parametrize("grid", ["1x1", "2x1", "2x2"])
def test_half_the_lanes_are_green(grid):
    cfg = GridConfig().with_grid(grid)
    for a in feasible_actions(cfg):
        g = green_lanes(cfg, a)
        assert g.sum() == cfg.lanes // 2
        # within an intersection exactly one phase is green
        per = g.reshape(cfg.intersections, cfg.lanes_per_intersection)
        half = cfg.lanes_per_intersection // 2
        assert np.all(per[:, :half].all(axis=1) ^ per[:, half:].all(axis=1))


def test_green_lanes_rejects_bad_action():
    with pytest.raises(ConfigurationError):
        green_lanes(GridConfig(rows=1, cols=1), 2)


def test_cost_examples():
    cfg = GridConfig(rows=1, cols=1, lanes_per_intersection=2, priority_lanes=(0,))
    s = EnvState([10, 0], [20, 0])
    # u2 * (u1 * 10 + w1 * 20) = 0.6 * (5 + 10)
    assert cost(s, cfg) == pytest.approx(9.0)
    assert cost(EnvState.empty(cfg), cfg) == 0.0


@settings(max_examples=50, deadline=None)
@given(q=st.lists(st.integers(0, 50), min_size=4, max_size=4),
       t=st.lists(st.integers(0, 300), min_size=4, max_size=4))
def test_cost_positive_unless_empty(q, t):
    cfg = GridConfig(rows=1, cols=1)
    c = cost(EnvState(q, t), cfg)
    assert c >= 0
    assert (c == 0) == (sum(q) == 0 and sum(t) == 0)


def test_vehicle_conservation_long_run():
    cfg = GridConfig(rows=2, cols=2)
    rng = RngHandle(5)
    pick = RngHandle(6)
    state = EnvState.empty(cfg)
    arrived = discharged = 0
    for _ in range(10_000):
        a = int(pick.draw_indices(cfg.action_count, 1)[0])
        out = step_detailed(state, a, cfg, rng)
        green = green_lanes(cfg, a)
        assert np.all(out.discharged[~green] == 0)
        assert np.all(out.discharged <= cfg.service_rate)
        assert np.all(out.state.queues == state.queues - out.discharged + out.arrivals)
        assert np.all(out.state.queues >= 0) and np.all(out.state.queues <= cfg.queue_cap)
        assert np.all(out.state.elapsed[green] == 0)
        assert np.all(out.state.elapsed[~green] == state.elapsed[~green] + 1)
        arrived += int(out.arrivals.sum())
        discharged += int(out.discharged.sum())
        state = out.state
    assert arrived == discharged + int(state.queues.sum())


def test_step_is_deterministic_given_seed():
    cfg = GridConfig(rows=1, cols=2)
    s = EnvState.empty(cfg)
    a = step(s, 1, cfg, RngHandle(3))
    b = step(s, 1, cfg, RngHandle(3))
    assert a[0] == b[0] and a[1] == b[1]


# ---------------------------------------------------------------------------
# graded features


def _single_lane_feature(q, t, green):
    cfg = GridConfig(rows=1, cols=1, normalize_features=False)
    lanes = np.zeros(cfg.lanes, np.int64)
    lanes[0] = q
    el = np.zeros(cfg.lanes, np.int64)
    el[0] = t
    # lane 0 is north-south: green under action 0
    return features(EnvState(lanes, el), 0 if green else 1, cfg)[0]


@pytest.mark.parametrize(
    "q,t,green,value",
    [(3, 50, True, 0.06), (3, 50, False, 0.01), (15, 200, False, 0.06), (15, 200, True, 0.01)],
)
def test_feature_table_examples(q, t, green, value):
    assert _single_lane_feature(q, t, green) == pytest.approx(value)


def test_feature_table_is_total_and_complementary():
    # every (queue band, elapsed band, phase) cell is reached and green + red = 0.07
    seen = set()
    for q, t in itertools.product([0, 5, 6, 13, 14, 100], [0, 129, 130, 500]):
        red = _single_lane_feature(q, t, False)
        green = _single_lane_feature(q, t, True)
        assert red + green == pytest.approx(0.07)
        assert red in {0.01, 0.02, 0.03, 0.04, 0.05, 0.06}
        seen.add(red)
    assert seen == {0.01, 0.02, 0.03, 0.04, 0.05, 0.06}


def test_band_edges():
    assert _single_lane_feature(5, 129, False) == pytest.approx(0.01)
    assert _single_lane_feature(6, 129, False) == pytest.approx(0.03)
    assert _single_lane_feature(14, 129, False) == pytest.approx(0.05)
    assert _single_lane_feature(5, 130, False) == pytest.approx(0.02)


@settings(max_examples=100, deadline=None)
@given(q=st.lists(st.integers(0, 200), min_size=16, max_size=16),
       t=st.lists(st.integers(0, 1000), min_size=16, max_size=16))
def test_normalized_features_have_norm_at_most_one(q, t):
    cfg = GridConfig()
    f = all_action_features(EnvState(q, t), cfg)
    assert np.all(np.linalg.norm(f, axis=1) <= 1 + 1e-12)
    for a in (0, 5, 15):
        np.testing.assert_array_equal(f[a], features(EnvState(q, t), a, cfg))


def test_feature_map_handle():
    cfg = GridConfig(rows=1, cols=1)
    fm = TrafficFeatureMap(cfg)
    s = EnvState.empty(cfg)
    assert fm.dim == 4 and fm.action_count == 2
    np.testing.assert_array_equal(fm(s, 1), fm.all_actions(s)[1])


# ---------------------------------------------------------------------------
# sample collection and throughput


def test_collect_single_tick():
    cfg = GridConfig(rows=1, cols=1, horizon=1)
    smp = collect_samples(cfg, episodes=1, rng=RngHandle(0))
    assert len(smp) == 1
    assert np.all(smp.q[0] == 0) and smp.reward[0] == 0.0


def test_collect_is_deterministic():
    cfg = GridConfig(rows=2, cols=2, horizon=30)
    a = collect_samples(cfg, episodes=3, rng=RngHandle(9))
    b = collect_samples(cfg, episodes=3, rng=RngHandle(9))
    assert a == b
    c = collect_samples(cfg, episodes=3, rng=RngHandle(10))
    assert not a == c


def test_collected_rewards_are_negated_costs():
    cfg = GridConfig(rows=1, cols=2, horizon=40)
    smp = collect_samples(cfg, episodes=2, rng=RngHandle(1))
    for k in range(len(smp)):
        assert smp.reward[k] == -cost(EnvState(smp.q[k], smp.t[k]), cfg)
    qs = smp.q_transition_set(cfg)
    assert qs.t == len(smp) and qs.action_count == cfg.action_count


def test_tar_zero_without_arrivals():
    cfg = GridConfig(rows=1, cols=1, arrival_prob=0.0)
    assert evaluate_policy_tar(cfg, episodes=3).tar == 0


def test_tar_always_green_closed_form():
    # every lane gains a car each tick and the north-south pair always
    # discharges one, starting from the second tick
    cfg = GridConfig(rows=1, cols=1, arrival_prob=1.0, horizon=50)
    res = evaluate_policy_tar(cfg, policy=lambda s: 0, episodes=4)
    assert res.tar == 4 * 2 * (50 - 1)


# ---------------------------------------------------------------------------
# configuration and files


def test_config_validation():
    for kw in (
        dict(lanes_per_intersection=3),
        dict(arrival_prob=1.5),
        dict(thresholds=(10, 5, 130)),
        dict(cost_weights=(0.5, 0.5, 0.4, 0.6)),
        dict(cost_weights=(0.5, 0.6, 0.6, 0.4)),
        dict(priority_lanes=(99,)),
    ):
        with pytest.raises(ConfigurationError):
            GridConfig(**kw)
    with pytest.raises(ConfigurationError):
        GridConfig().with_grid("two-by-two")


def test_config_kv_roundtrip(tmp_path):
    cfg = GridConfig(rows=1, cols=3, arrival_prob=0.3, priority_lanes=(0, 5), horizon=7)
    p = tmp_path / "grid.cfg"
    cfg.save(p)
    assert GridConfig.load(p) == cfg
    assert GridConfig.from_kv(cfg.to_kv()) == cfg
    with pytest.raises(ConfigurationError):
        GridConfig.from_kv({"colour": "red"})


def test_samples_jsonl_roundtrip(tmp_path):
    cfg = GridConfig(rows=1, cols=2, horizon=10)
    smp = collect_samples(cfg, episodes=2, rng=RngHandle(4))
    p = tmp_path / "s.jsonl"
    smp.save_jsonl(p, header="# fastlstd traffic-collect {}")
    assert p.read_text().startswith("# fastlstd")
    assert EnvSamples.load_jsonl(p) == smp
    p.write_text("{}\n")
    with pytest.raises(FormatError):
        EnvSamples.load_jsonl(p)
