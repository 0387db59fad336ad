import io

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fastlstd.bandit import BanditConfig, _ball_point, flinucb_sa_run
from fastlstd.errors import ConfigurationError
from fastlstd.rng import RngHandle


def test_one_arm_has_no_regret():
    hist, _ = flinucb_sa_run(BanditConfig(arms_per_round=1, rounds=200), seed=1)
    assert np.all(hist.arm == 0)
    assert np.all(hist.regret == 0.0) and hist.worst_case_regret == 0.0


def test_fixed_arms_without_noise_pick_the_better_arm():
    cfg = BanditConfig(dim=1, arms_per_round=2, theta_star=(1.0,), noise_bound=0.0,
                       rounds=300, fixed_arms=((0.5,), (1.0,)))
    hist, theta = flinucb_sa_run(cfg, seed=0)
    assert np.all(hist.arm == 1)
    assert np.all(hist.reward == 1.0) and hist.cum_regret[-1] == 0.0
    # regularised least squares on y = x = 1: theta = 1 / (1 + mu)
    assert theta[0] == pytest.approx(0.5, abs=0.05)


def test_runs_are_deterministic():
    cfg = BanditConfig(dim=3, rounds=300)
    a, ta = flinucb_sa_run(cfg, seed=5)
    b, tb = flinucb_sa_run(cfg, seed=5)
    assert np.array_equal(ta, tb)
    for name in ("arm", "reward", "regret"):
        assert np.array_equal(getattr(a, name), getattr(b, name))
    c, _ = flinucb_sa_run(cfg, seed=6)
    assert not np.array_equal(a.reward, c.reward)


def test_bonus_is_arm_independent():
    hist, _ = flinucb_sa_run(BanditConfig(rounds=500, alpha=10.0), seed=2)
    assert hist.bonus_changed_choice == 0


def test_regret_bounded_by_worst_case():
    hist, _ = flinucb_sa_run(BanditConfig(rounds=1000), seed=3)
    assert np.all(hist.regret >= -1e-15)
    assert np.all(hist.regret <= hist.worst_regret + 1e-15)
    assert hist.cum_regret[-1] < 0.2 * hist.worst_case_regret


def test_norm_diff_tracking():
    hist, _ = flinucb_sa_run(BanditConfig(rounds=100), seed=0)
    assert np.isnan(hist.norm_diff[0])
    assert np.all(np.isfinite(hist.norm_diff[1:]))
    off, _ = flinucb_sa_run(BanditConfig(rounds=100), seed=0, track_norm_diff=False)
    assert np.all(np.isnan(off.norm_diff))
    np.testing.assert_array_equal(off.arm, hist.arm)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**64 - 1), d=st.integers(1, 12))
def test_contexts_lie_in_unit_ball(seed, d):
    out = np.empty(d)
    counter = 0
    for _ in range(20):
        counter = _ball_point(np.uint64(seed), counter, out)
        assert np.linalg.norm(out) <= 1 + 1e-12


def test_context_radius_distribution():
    # in the unit d-ball, P(|x| <= r) = r^d
    out = np.empty(3)
    counter = 0
    seed = RngHandle(8).seed_u64
    radii = []
    for _ in range(20_000):
        counter = _ball_point(seed, counter, out)
        radii.append(np.linalg.norm(out))
    radii = np.array(radii)
    assert np.mean(radii <= 0.5) == pytest.approx(0.125, abs=0.01)


def test_csv_layout():
    hist, _ = flinucb_sa_run(BanditConfig(rounds=5), seed=0)
    buf = io.StringIO()
    hist.write_csv(buf)
    lines = buf.getvalue().splitlines()
    assert lines[0] == "round,arm,reward,regret,cum_regret,norm_diff"
    assert len(lines) == 6 and lines[1].endswith(",")


def test_config_checks():
    for kw in (dict(dim=0), dict(arms_per_round=0), dict(tau=0), dict(alpha=0.0),
               dict(theta_star=(1.0, 2.0)), dict(fixed_arms=((1.0,) * 5,))):
        with pytest.raises(ConfigurationError):
            BanditConfig(**kw)
    assert BanditConfig(dim=4).theta_star == (0.5,) * 4
