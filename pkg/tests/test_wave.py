import math

import numpy as np
import pytest

from fkppwave.model import ModelParams
from fkppwave.wave import (
    BracketError,
    ShootOptions,
    ShotKind,
    check_limit_relation,
    critical_tail_slope,
    d_continuity_sweep,
    find_invading_front,
    load_profile,
    mass_balance,
    save_profile,
    shoot,
    i_minus_lower_bounds,
    verify_tw_properties,
)

P01 = ModelParams(2.0, 0.1, 0.0)


@pytest.mark.parametrize("d", [0.1, 0.3])
def test_k_two_goes_negative(d):
    assert shoot(2.0, ModelParams(2.0, d, 0.0)).kind is ShotKind.WENT_NEGATIVE


def test_table_value_straddles_zero_limit():
    # the five-digit table value rounds K* = 1.9848872 up, so the shot there
    # overshoots by a hair: i crosses zero far out in the tail
    over = shoot(1.98489, P01)
    assert over.kind is ShotKind.WENT_NEGATIVE and over.first_negative_x > 30
    s = shoot(1.98488, P01)
    assert s.kind is ShotKind.CONVERGED
    assert abs(s.i_plus) < 5e-3


def test_interior_shot_limit_relation():
    s = shoot(1.5, P01)
    assert s.kind is ShotKind.CONVERGED
    assert 2 - 2 * P01.d / 4 - 1.5 < s.i_plus < 2 - 1.5


def test_front_matches_oracle_and_table(front_01, front_03, oracle):
    assert front_01.K == pytest.approx(oracle["K_star_d0.1_r0"], abs=2e-6)
    assert front_03.K == pytest.approx(oracle["K_star_d0.3_r1"], abs=2e-6)
    assert front_01.K == pytest.approx(1.98489, abs=1e-3)
    assert front_03.K == pytest.approx(1.95403, abs=1e-3)
    assert front_01.meta["bracket_width"] < 1e-6


def test_front_centered_at_maximum(front_01):
    k = int(np.argmax(front_01.a))
    assert front_01.grid[k] == pytest.approx(0.0, abs=0.05)
    assert abs(front_01.a_prime[k]) < 1e-3


def test_front_properties(front_01, front_03):
    for f in (front_01, front_03):
        rep = verify_tw_properties(f)
        assert rep.passed, rep.as_dict()
        assert rep.sum_at_max <= 1 + 1e-6


def test_injected_increase_fails_property_one(front_01):
    bad = front_01.shifted(0.0)
    bad.i_prime = front_01.i_prime.copy()
    bad.i_prime[100] = 1e-3
    rep = verify_tw_properties(bad)
    assert not rep.decreasing_i and not rep.passed


def test_interior_wave_properties(interior_wave):
    rep = verify_tw_properties(interior_wave)
    assert rep.passed and interior_wave.i_plus > 0


def test_limit_relation(front_01, front_03):
    for f in (front_01, front_03):
        lower, upper, slack = check_limit_relation(f)
        assert lower and upper and slack > 0
    assert 1.95 < front_01.K + front_01.i_plus < 2


def test_both_printed_lower_bounds_reported():
    b = i_minus_lower_bounds(ModelParams(2.0, 0.4, 1.0))
    assert b["c_squared"] == pytest.approx(1.6) and b["c_linear"] == pytest.approx(1.2)


def test_mass_balance(front_01, front_03, interior_wave):
    for f in (front_01, front_03, interior_wave):
        res_a, res_q = mass_balance(f)
        assert res_a < 1e-3 and res_q < 1e-3


def test_mass_balance_zero_profile(front_01):
    z = front_01.shifted(0.0)
    z.a = np.zeros_like(z.a)
    assert mass_balance(z) == (0.0, 0.0)


def test_decay_rates(front_01, interior_wave):
    assert front_01.mu_minus == pytest.approx(math.sqrt(front_01.K) - 1, rel=0.02)
    assert front_01.critical
    assert 0.9 <= critical_tail_slope(front_01) <= 1.1
    w = interior_wave
    assert not w.critical
    assert w.mu_plus == pytest.approx(1 - math.sqrt(w.i_plus), rel=0.02)
    with pytest.raises(ValueError):
        critical_tail_slope(w)


def test_d_continuity_sweep():
    dist = d_continuity_sweep(1.5, P01, [0.2, 0.1, 0.05])
    assert dist[0] > dist[1] > dist[2]
    assert 1.5 <= dist[1] / dist[2] <= 3
    assert d_continuity_sweep(1.5, P01, [0.1, 0.1])[0] == d_continuity_sweep(1.5, P01, [0.1, 0.1])[1]


def test_eps_invariance(front_01):
    half = find_invading_front(P01, opts=ShootOptions(eps=0.5e-7))
    assert abs(half.K - front_01.K) < 1e-5


def test_outcome_map_monotone():
    opts = ShootOptions(x_max=3000.0)
    vals = []
    for K in np.linspace(1.05, 1.999, 20):
        s = shoot(K, P01, opts)
        assert s.kind in (ShotKind.CONVERGED, ShotKind.WENT_NEGATIVE)
        vals.append(s.i_plus if s.kind is ShotKind.CONVERGED else -np.inf)
    assert np.all(np.diff(vals) <= 1e-10)


def test_bracket_errors():
    with pytest.raises(BracketError):
        find_invading_front(P01, bracket=(1.99, 2.0))
    with pytest.raises(BracketError):
        find_invading_front(P01, bracket=(1.5, 1.9))
    with pytest.raises(BracketError):
        find_invading_front(P01, bracket=(0.5, 1.9))


def test_profile_roundtrip(front_03, tmp_path):
    csv_path, json_path = save_profile(front_03, tmp_path / "prof")
    back = load_profile(tmp_path / "prof")
    for name in ("grid", "a", "a_prime", "i", "i_prime"):
        assert np.array_equal(getattr(back, name), getattr(front_03, name))
    assert back.K == front_03.K and back.params == front_03.params and back.mu_minus == front_03.mu_minus
