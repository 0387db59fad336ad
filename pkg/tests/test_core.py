import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fastlstd.core import (
    QTransitionSet,
    StepSchedule,
    Transition,
    TransitionSet,
    greedy_actions,
    load_transitions,
    save_transitions,
    step_size,
)
from fastlstd.errors import ConfigurationError, EmptyPoolError, FormatError
from fastlstd.rng import RngHandle, draw_index, splitmix64, uniforms

from oracles import splitmix64_reference


# ---------------------------------------------------------------------------
# step sizes


def test_corollary1_step_with_paper_constant():
    s = StepSchedule.corollary1(0.9, 133)
    assert step_size(s, 1) == pytest.approx(0.1 * 133 / (2 * 134), rel=1e-15)
    assert step_size(s, 1) == pytest.approx(0.04962686, abs=1e-8)


def test_least_squares_step():
    assert step_size(StepSchedule.least_squares(2), 2) == 0.25


def test_iterate_averaging_step():
    s = StepSchedule.iterate_averaging(0.5, 1.5, 0.75)
    assert step_size(s, 1) == pytest.approx(0.25 * (1.5 / 2.5) ** 0.75, rel=1e-15)
    # 0.25 * 0.6^0.75 = 0.1704329...
    assert step_size(s, 1) == pytest.approx(0.1704329, abs=1e-7)


@pytest.mark.parametrize(
    "kw",
    [
        dict(kind="corollary1", beta=1.0, c=1.0),
        dict(kind="corollary1", beta=0.0, c=1.0),
        dict(kind="corollary1", beta=0.9, c=0.0),
        dict(kind="least_squares", c=-1.0),
        dict(kind="iterate_averaging", beta=0.9, c=1.0, alpha=0.5),
        dict(kind="iterate_averaging", beta=0.9, c=1.0, alpha=1.0),
        dict(kind="custom"),
    ],
)
def test_invalid_schedule_parameters(kw):
    with pytest.raises(ConfigurationError):
        StepSchedule(**kw)


def test_step_index_starts_at_one():
    with pytest.raises(ConfigurationError):
        step_size(StepSchedule.least_squares(1.0), 0)


def test_custom_schedule():
    s = StepSchedule.from_function(lambda n: 1.0 / n)
    assert step_size(s, 4) == 0.25
    bad = StepSchedule.from_function(lambda n: 0.0)
    with pytest.raises(ConfigurationError):
        step_size(bad, 1)


NAMED = [
    StepSchedule.corollary1(0.9, 133.0),
    StepSchedule.corollary1(0.5, 3.0),
    StepSchedule.iterate_averaging(0.9, 1.5, 0.75),
    StepSchedule.iterate_averaging(0.3, 1.9, 0.6),
    StepSchedule.least_squares(2.0),
]


@pytest.mark.parametrize("s", NAMED, ids=lambda s: s.kind.value)
def test_schedule_matches_power_form_and_is_monotone(s):
    n = np.arange(1, 10_001)
    g = s.gammas(1, n.size)
    if s.kind.value == "corollary1":
        big_c, p = (1 - s.beta) * s.c / 2, 1.0
    elif s.kind.value == "iterate_averaging":
        big_c, p = (1 - s.beta) / 2 * s.c**s.alpha, s.alpha
    else:
        big_c, p = s.c / 2, 1.0
    assert p <= 1 and 2 * p > 1
    np.testing.assert_allclose(g, big_c / (s.c + n) ** p, rtol=1e-13, atol=0)
    assert np.all(g > 0)
    assert np.all(np.diff(g) <= 0)


@settings(max_examples=50, deadline=None)
@given(
    beta=st.floats(0.01, 0.99),
    c=st.floats(0.01, 1e4),
    start=st.integers(1, 10**6),
)
def test_gammas_agree_with_scalar_step_size(beta, c, start):
    s = StepSchedule.corollary1(beta, c)
    vec = s.gammas(start, 5)
    for k in range(5):
        assert vec[k] == step_size(s, start + k)


# ---------------------------------------------------------------------------
# RNG


def test_splitmix_matches_reference_vector():
    # published SplitMix64 test vector for seed 1234567
    assert splitmix64(1234567, 1) == 6457827717110365317
    assert splitmix64(1234567, 2) == 3203168211198807973


@settings(max_examples=100, deadline=None)
@given(seed=st.integers(0, 2**64 - 1), k=st.integers(0, 2**40))
def test_splitmix_matches_independent_implementation(seed, k):
    assert splitmix64(seed, k) == splitmix64_reference(seed, k)


def test_draw_index_single_outcome():
    for seed in (0, 1, 2**63):
        assert draw_index(RngHandle(seed), 1) == 1


def test_draw_index_pinned_stream():
    rng = RngHandle(42)
    assert [draw_index(rng, 10) for _ in range(3)] == [4, 2, 9]
    rng = RngHandle(42)
    assert [draw_index(rng, 10) for _ in range(3)] == [4, 2, 9]


def test_compiled_draws_match_python_draws():
    a = RngHandle(7)
    b = RngHandle(7)
    py = [draw_index(a, 13) - 1 for _ in range(1000)]
    assert b.draw_indices(13, 1000).tolist() == py
    assert a.counter == b.counter


def test_draw_index_frequencies():
    idx = RngHandle(3).draw_indices(4, 100_000)
    counts = np.bincount(idx, minlength=4)
    sd = math.sqrt(100_000 * 0.25 * 0.75)
    assert np.all(np.abs(counts - 25_000) <= 4 * sd)


def test_draw_index_empty_pool():
    with pytest.raises(EmptyPoolError):
        draw_index(RngHandle(0), 0)
    with pytest.raises(EmptyPoolError):
        RngHandle(0).draw_indices(0, 3)


def test_streams_reproducible_for_a_million_draws():
    a = RngHandle(2024).draw_indices(1000, 1_000_000)
    b = RngHandle(2024).draw_indices(1000, 1_000_000)
    assert np.array_equal(a, b)
    c = RngHandle(2025).draw_indices(1000, 1_000_000)
    assert not np.array_equal(a, c)


def test_uniforms_match_scalar_draws():
    a, b = RngHandle(11), RngHandle(11)
    vec = uniforms(a, 50)
    assert vec.tolist() == [b.uniform() for _ in range(50)]
    assert np.all((vec >= 0) & (vec < 1))


def test_rng_seed_range():
    with pytest.raises(ValueError):
        RngHandle(-1)
    with pytest.raises(ValueError):
        RngHandle(2**64)


# ---------------------------------------------------------------------------
# transition sets and files


def _set(t=3, d=2, seed=0):
    g = np.random.default_rng(seed)
    return TransitionSet(g.normal(size=(t, d)), g.normal(size=t), g.normal(size=(t, d)))


def test_transition_set_shape_checks():
    with pytest.raises(ConfigurationError):
        TransitionSet(np.zeros((2, 3)), np.zeros(2), np.zeros((2, 2)))
    with pytest.raises(ConfigurationError):
        TransitionSet(np.zeros((2, 3)), np.zeros(3), np.zeros((2, 3)))
    with pytest.raises(EmptyPoolError):
        TransitionSet.from_transitions([])
    with pytest.raises(ConfigurationError):
        TransitionSet.from_transitions(
            [Transition(np.ones(2), 0.0, np.ones(2)), Transition(np.ones(3), 0.0, np.ones(3))]
        )


def test_transition_set_is_read_only():
    s = _set()
    with pytest.raises(ValueError):
        s.phi[0, 0] = 1.0
    assert s.t == 3 and s.dim == 2 and len(s.entries) == 3
    assert s[1].reward == float(s.rewards[1])


def test_check_bounds_reports_violations():
    s = TransitionSet([[0.6, 0.8], [2.0, 0.0]], [0.5, -3.0], [[0.0, 0.0], [0.0, 1.0]])
    problems = s.check_bounds(r_max=1.0)
    assert any("phi norm" in p for p in problems)
    assert any("reward" in p for p in problems)
    ok = TransitionSet([[0.6, 0.8]], [0.5], [[1.0, 0.0]])
    assert ok.check_bounds(r_max=1.0) == []


def test_load_single_line(tmp_path):
    p = tmp_path / "one.jsonl"
    p.write_text('{"phi":[1.0],"reward":1.0,"phi_next":[0.0]}\n')
    s = load_transitions(p)
    assert (s.t, s.dim) == (1, 1)


def test_load_reports_mismatched_line(tmp_path):
    p = tmp_path / "bad.jsonl"
    p.write_text(
        '{"phi":[1.0],"reward":1.0,"phi_next":[0.0]}\n'
        '{"phi":[1.0,2.0],"reward":1.0,"phi_next":[0.0,1.0]}\n'
    )
    with pytest.raises(FormatError) as ei:
        load_transitions(p)
    assert ei.value.line == 2
    assert "line 2" in str(ei.value)


@pytest.mark.parametrize(
    "line",
    [
        "not json",
        '{"phi":[1.0],"reward":1.0}',
        '{"phi":[1.0],"reward":"x","phi_next":[0.0]}',
        '{"phi":["a"],"reward":1.0,"phi_next":[0.0]}',
        '{"phi":[1.0],"reward":1.0,"phi_next":[0.0],"extra":1}',
    ],
)
def test_load_rejects_malformed_records(tmp_path, line):
    p = tmp_path / "bad.jsonl"
    p.write_text(line + "\n")
    with pytest.raises(FormatError):
        load_transitions(p)


def test_load_empty_file(tmp_path):
    p = tmp_path / "empty.jsonl"
    p.write_text("")
    with pytest.raises(EmptyPoolError):
        load_transitions(p)


def test_save_single_and_multi_line(tmp_path):
    one = TransitionSet([[1.0]], [1.0], [[0.0]])
    p = tmp_path / "a.jsonl"
    save_transitions(one, p)
    assert p.read_text().count("\n") == 1
    three = _set(3, 2)
    save_transitions(three, p)
    lines = p.read_text().splitlines()
    assert len(lines) == 3
    for ln in lines:
        assert set(json.loads(ln)) == {"phi", "reward", "phi_next"}


@settings(max_examples=30, deadline=None)
@given(
    t=st.integers(1, 8),
    d=st.integers(1, 5),
    seed=st.integers(0, 2**32 - 1),
    scale=st.sampled_from([1e-300, 1e-8, 1.0, 1e12, 1e300]),
)
def test_save_load_roundtrip_is_exact(tmp_path_factory, t, d, seed, scale):
    s = TransitionSet(*(a * scale if isinstance(a, np.ndarray) else a for a in (
        np.random.default_rng(seed).normal(size=(t, d)),
        np.random.default_rng(seed + 1).normal(size=t),
        np.random.default_rng(seed + 2).normal(size=(t, d)),
    )))
    p1 = tmp_path_factory.mktemp("rt") / "a.jsonl"
    p2 = p1.with_name("b.jsonl")
    save_transitions(s, p1)
    back = load_transitions(p1)
    assert back == s
    save_transitions(back, p2)
    assert p1.read_bytes() == p2.read_bytes()


# ---------------------------------------------------------------------------
# state-action samples


def test_greedy_actions_tie_goes_to_lowest_index():
    nf = np.array([[[1.0, 0.0], [1.0, 0.0]], [[0.0, 1.0], [1.0, 0.0]]])
    assert greedy_actions(nf, np.array([1.0, 0.0])).tolist() == [0, 1]


def test_q_transition_set_checks_and_freezing():
    with pytest.raises(EmptyPoolError):
        QTransitionSet(np.zeros((0, 2)), np.zeros(0), np.zeros((0, 1, 2)))
    with pytest.raises(ConfigurationError):
        QTransitionSet(np.zeros((2, 2)), np.zeros(2), np.zeros((2, 1, 3)))
    q = QTransitionSet(np.ones((2, 2)), np.zeros(2), np.arange(8.0).reshape(2, 2, 2))
    assert q.action_count == 2
    ts = q.as_transition_set([0.0, 1.0])
    np.testing.assert_array_equal(ts.phi_next, [[2.0, 3.0], [6.0, 7.0]])
