import math

import numpy as np
import pytest
from scipy.integrate import quad

from fkppwave.feynman_kac import (
    FkProblem,
    PathConfig,
    fk_finite_difference,
    fk_solve,
    hitting_time_cdf,
    hitting_time_cdf_closed_form,
    hitting_time_density,
    sample_first_passage,
    tail_bound_check,
    validate_hitting_density,
)
from fkppwave.model import DomainError
from fkppwave.pde import PdeState

const = lambda k: (lambda s: np.full_like(np.asarray(s, dtype=float), k))  # noqa: E731


def test_density_normalized():
    rng = np.random.default_rng(11)
    for x0, c in zip(rng.uniform(-3, -0.2, 10), rng.uniform(0.3, 3, 10)):
        f = lambda t: hitting_time_density(t, x0, c)  # noqa: E731
        mode = abs(x0) / c
        total = quad(f, 0, mode, limit=200, epsabs=1e-12)[0] + quad(f, mode, np.inf, limit=200, epsabs=1e-12)[0]
        assert total == pytest.approx(1.0, abs=1e-8)


def test_cdf_quadrature_matches_closed_form():
    t = np.concatenate([np.geomspace(1e-3, 20, 60), [0.0]])
    for x0, c in [(-1.0, 1.0), (-2.0, 1.0), (-0.5, 2.5)]:
        np.testing.assert_allclose(hitting_time_cdf(t, x0, c), hitting_time_cdf_closed_form(t, x0, c), atol=1e-9)


def test_start_point_must_be_negative():
    with pytest.raises(DomainError):
        PathConfig(0.0, 1.0)
    with pytest.raises(DomainError):
        hitting_time_density(1.0, 0.5, 1.0)


@pytest.fixture(scope="module")
def sample():
    return sample_first_passage(PathConfig(-1.0, 1.0, dt=1e-3, n_paths=20_000, t_max=20.0, seed=3))


def test_mean_passage_time(sample):
    # inverse Gaussian mean |x0| / c
    t = sample.t0
    assert sample.censored_fraction == 0
    assert abs(t.mean() - 1.0) < 3 * t.std(ddof=1) / math.sqrt(t.size) + 1e-3


def test_histogram_matches_density(sample):
    edges = np.linspace(0.05, 3.0, 60)
    hist, _ = np.histogram(sample.t0, edges)
    width = np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    p = (hitting_time_cdf_closed_form(edges[1:], -1.0, 1.0) - hitting_time_cdf_closed_form(edges[:-1], -1.0, 1.0))
    expected = p * len(sample)
    z = (hist - expected) / np.sqrt(expected)
    assert np.max(np.abs(z)) < 4.5
    assert mid[np.argmax(hist / width)] == pytest.approx(mid[np.argmax(p)], abs=0.15)


def test_ks_validation_and_negative_control(sample):
    cfg = sample.cfg
    ok = validate_hitting_density(cfg, sample=sample)
    assert ok.passed and ok.ks < ok.threshold
    bad = validate_hitting_density(cfg, density_c=2.0, sample=sample)
    assert not bad.passed and bad.ks > 5 * bad.threshold


def test_heavy_censoring_inconclusive():
    res = validate_hitting_density(PathConfig(-1.0, 1.0, dt=1e-3, n_paths=2000, t_max=0.5, seed=1))
    assert res.inconclusive and not res.passed and res.censored_fraction > 0.3


def test_constants_reproduced_exactly():
    cfg = PathConfig(-1.0, 1.0, dt=1e-3, n_paths=2000)
    est = fk_solve(1.0, -1.0, FkProblem(0.0, 0.0, const(0.7), const(0.7)), cfg)
    assert est.mean == pytest.approx(0.7, abs=1e-15) and est.stderr < 1e-15


def test_maximum_principle():
    cfg = PathConfig(-1.0, 1.0, dt=1e-3, n_paths=4000, seed=5)
    prob = FkProblem(-0.5, 0.0, lambda s: 0.5 + 0.5 * np.sin(3 * s), lambda x: np.exp(x))
    est = fk_solve(2.0, -0.8, prob, cfg)
    assert 0.0 <= est.mean <= 1.0


def test_source_only_matches_oracle(oracle):
    cfg = PathConfig(-1.0, 1.0, dt=5e-4, n_paths=20_000, seed=7)
    est = fk_solve(1.0, -1.0, FkProblem(0.0, 1.0), cfg)
    assert est.within(oracle["E_min_t_T0_t1_x-1_c1"], 3)


def test_matches_crank_nicolson(oracle):
    g, h = (lambda x: np.exp(x)), (lambda s: np.full_like(np.asarray(s, dtype=float), 1.0))
    ref = fk_finite_difference(1.0, -1.0, 1.0, -1.0, 0.0, g, h)
    est = fk_solve(1.0, -1.0, FkProblem(-1.0, 0.0, h, g), PathConfig(-1.0, 1.0, dt=5e-4, n_paths=20_000, seed=2))
    assert est.within(ref, 3)
    # independent method of lines value for unit data
    one = fk_finite_difference(1.0, -1.0, 1.0, -1.0, 0.0, h, h)
    assert one == pytest.approx(oracle["fk_u_t1_x-1_c1_L-1"], abs=1e-4)


def test_stderr_scaling():
    prob = FkProblem(-0.3, 0.2, const(1.0), lambda x: np.cos(x))
    small = fk_solve(1.0, -1.0, prob, PathConfig(-1.0, 1.0, dt=1e-3, n_paths=4000, seed=1))
    large = fk_solve(1.0, -1.0, prob, PathConfig(-1.0, 1.0, dt=1e-3, n_paths=16_000, seed=1))
    assert small.stderr / large.stderr == pytest.approx(2.0, rel=0.15)


def test_reproducible_and_thread_independent():
    cfg = PathConfig(-1.0, 1.0, dt=1e-3, n_paths=3000, seed=9, block_size=500)
    a = sample_first_passage(cfg)
    b = sample_first_passage(cfg, threads=3)
    assert np.array_equal(a.t0, b.t0) and np.array_equal(a.endpoint, b.endpoint)
    other = sample_first_passage(PathConfig(-1.0, 1.0, dt=1e-3, n_paths=3000, seed=10, block_size=500))
    assert not np.array_equal(a.t0, other.t0)


def test_time_step_insensitive():
    prob = FkProblem(0.0, 1.0)
    coarse = fk_solve(1.0, -1.0, prob, PathConfig(-1.0, 1.0, dt=2e-3, n_paths=10_000, seed=4))
    fine = fk_solve(1.0, -1.0, prob, PathConfig(-1.0, 1.0, dt=1e-3, n_paths=10_000, seed=5))
    assert abs(coarse.mean - fine.mean) < 3 * math.hypot(coarse.stderr, fine.stderr)


def _states(A, I, x):
    return [PdeState(float(k), x, A(x, k), I(x, k)) for k in range(4)]


def test_tail_bound_synthetic_cases():
    x = np.linspace(-30, 20, 501)
    good = _states(lambda x, k: 0.5 * np.exp(0.4 * np.minimum(x, 0)) * (1 + 0.1 * k), lambda x, k: np.full_like(x, 1.5), x)
    rep = tail_bound_check(good, 0.1, 0.4)
    assert rep.passed and rep.zeta_fit == pytest.approx(0.4, abs=1e-6)
    assert rep.C_fit == pytest.approx(0.5 * 1.3, rel=1e-9)
    assert set(rep.reference) == {"delta/(2c~+mu0)", "mu0/2", "delta/(2c~)"}

    low = _states(lambda x, k: 0.5 * np.exp(0.4 * np.minimum(x, 0)), lambda x, k: np.where(x <= 0, 0.5, 1.5), x)
    rep = tail_bound_check(low, 0.1, 0.4)
    assert rep.status == "precondition-failed" and rep.reasons

    flat = _states(lambda x, k: np.full_like(x, 0.2), lambda x, k: np.full_like(x, 1.5), x)
    assert tail_bound_check(flat, 0.1, 0.0).status == "fail"
    growing = _states(lambda x, k: 0.2 * np.exp(-0.05 * x), lambda x, k: np.full_like(x, 1.5), x)
    rep = tail_bound_check(growing, 0.1, 0.0)
    assert rep.status == "fail" and rep.zeta_fit < 0
    with pytest.raises(ValueError):
        tail_bound_check([], 0.1, 0.4)
