import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fkppwave.model import (
    BifurcationError,
    DomainError,
    ModelParams,
    WaveState,
    fixed_point_spectrum,
    jacobian_sd,
    unstable_branch_direction,
    vector_field_s0,
    vector_field_sd,
)


def test_params_validation():
    with pytest.raises(DomainError):
        ModelParams(0.0, 0.1)
    with pytest.raises(DomainError):
        ModelParams(2.0, -0.1)
    with pytest.raises(DomainError):
        ModelParams(2.0, 0.1, -1.0)
    with pytest.raises(DomainError):
        ModelParams(float("nan"), 0.1)


def test_admissibility_names_bound():
    assert ModelParams(2.0, 0.3, 1.0).is_admissible
    assert ModelParams(2.0, 2.0).admissibility_violation() == "d < 1 required"
    assert "c^2" in ModelParams(1.0, 0.6, 0.0).admissibility_violation()
    assert not ModelParams(2.0, 0.0).is_admissible


def test_vector_field_hand_values():
    p = ModelParams(2.0, 1.0, 0.0)
    np.testing.assert_allclose(vector_field_sd(WaveState(1, 0, 0, 0), p), [0, 0, 0, -1])
    np.testing.assert_allclose(vector_field_s0((1, 0, 1), ModelParams(2.0, 0.1)), [0, 1, -1])
    a0 = vector_field_sd((0.0, 0.3, 1.5, -0.2), ModelParams(2.0, 0.5, 1.0))
    np.testing.assert_allclose(a0, [0.3, -0.6, -0.2, 0.8])


def test_vector_field_rejects_bad_input():
    with pytest.raises(DomainError):
        vector_field_sd((0, 0, np.inf, 0), ModelParams(2.0, 0.1))
    with pytest.raises(DomainError):
        vector_field_sd((0, 0, 1, 0), ModelParams(2.0, 0.0))


@given(st.floats(-5, 5))
def test_fixed_point_continuum(K):
    assert np.all(vector_field_sd((0.0, 0.0, K, 0.0), ModelParams(2.0, 0.3, 1.0)) == 0)


@pytest.mark.parametrize("d", [1e-2, 1e-3])
def test_nullcline_kills_fast_component(d):
    rng = np.random.default_rng(4)
    p = ModelParams(2.0, d, 0.7)
    for a, b, i in rng.uniform(0, 2, size=(20, 3)):
        j = -a * (a + i + p.r) / p.c
        f = vector_field_sd((a, b, i, j), p)
        assert f[3] == pytest.approx(0.0, abs=1e-14 / d)  # rounding of O(10) terms, divided by d
        np.testing.assert_allclose(f[:3], vector_field_s0((a, b, i), p)[:2].tolist() + [j], atol=1e-14)


def test_spectrum_example():
    s = fixed_point_spectrum(2.0, ModelParams(2.0, 0.5, 0.0))
    np.testing.assert_allclose(s.lambdas, [0, -4, -1 - math.sqrt(2), -1 + math.sqrt(2)], rtol=1e-14)
    e2 = np.array([0, 0, -0.25, 1]) / math.hypot(0.25, 1)
    # eigenvectors are fixed up to sign; the convention makes the i-component positive
    assert abs(abs(s.eigvecs[1] @ e2) - 1.0) < 1e-14
    assert not s.spiraling


@settings(max_examples=60, deadline=None)
@given(st.floats(0.5, 4.0), st.floats(0.01, 0.99), st.floats(0.0, 3.0), st.floats(1.01, 3.0))
def test_eigen_residuals(c, d, r, K):
    p = ModelParams(c, d, r)
    s = fixed_point_spectrum(K, p)
    J = jacobian_sd((0, 0, K, 0), p)
    for lam, v in zip(s.lambdas, s.eigvecs):
        assert np.linalg.norm(J @ v - lam * v) < 1e-10
        assert np.linalg.norm(v) == pytest.approx(1.0)
    l3, l4 = s.lambdas[2], s.lambdas[3]
    assert l3 + l4 == pytest.approx(-c, rel=1e-12)
    assert l3 * l4 == pytest.approx(-(K - 1), rel=1e-12)
    assert s.lambdas[0] == 0 and s.lambdas[1] == -c / d


@settings(max_examples=100, deadline=None)
@given(st.floats(0.01, 0.99), st.floats(0.001, 0.999))
def test_eigenvalue_ordering_below_one(d, frac):
    K = 1.0 - frac  # K in (0, 1) = (1 - c^2/4, 1) at c = 2
    l1, l2, l3, l4 = fixed_point_spectrum(K, ModelParams(2.0, d, 0.0)).lambdas
    assert 0 > l4 >= l3 > l2


def test_bifurcation_points_rejected():
    p = ModelParams(2.0, 0.3)
    with pytest.raises(BifurcationError, match="bifurcation point"):
        fixed_point_spectrum(1.0, p)
    with pytest.raises(BifurcationError):
        fixed_point_spectrum(0.0 + 1e-12, p)
    with pytest.raises(DomainError):
        fixed_point_spectrum(1.5, ModelParams(2.0, 0.0))


def test_spiraling_flag():
    s = fixed_point_spectrum(-1.0, ModelParams(2.0, 0.3))
    assert s.spiraling and np.iscomplexobj(s.lambdas)


def test_small_epsilon_limit():
    l4 = fixed_point_spectrum(1.0 + 1e-6, ModelParams(2.0, 0.4)).lambdas[3]
    assert 0 < l4 < 1e-6


@settings(max_examples=50, deadline=None)
@given(st.floats(1.001, 3.0), st.floats(0.01, 0.99), st.floats(2.0, 4.0), st.floats(0.0, 2.0))
def test_unstable_direction_signs(K, d, c, r):
    v = unstable_branch_direction(K, ModelParams(c, d, r))
    assert v[0] > 0 and v[1] > 0 and v[2] < 0 and v[3] < 0


def test_unstable_direction_formula():
    lam = -1 + math.sqrt(2)
    expect = np.array([2 * lam + 0.5 * lam**2, 2 * lam**2 + 0.5 * lam**3, -2.0, -2 * lam])
    v = unstable_branch_direction(2.0, ModelParams(2.0, 0.5))
    np.testing.assert_allclose(v, expect / np.linalg.norm(expect), rtol=1e-13)
    with pytest.raises(DomainError):
        unstable_branch_direction(0.9, ModelParams(2.0, 0.5))
