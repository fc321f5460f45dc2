import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fkppwave.model import DomainError, ModelParams
from fkppwave.spectral import (
    LinearizationMatrix,
    OverstabilizationError,
    RefinementNeededError,
    SpectralRegionError,
    WeightSpec,
    check_assumption_region,
    consistent_splitting_dims,
    energy_bound,
    energy_bound_general,
    essential_spectrum_curves,
    evans_contour,
    evans_function,
    evans_values,
    evans_winding,
    limit_matrix,
    limit_spatial_eigenvalues,
    planted_eigenvalue_system,
    wave_evans_system,
    weight_eval,
    winding_number,
)

P03 = ModelParams(2.0, 0.3, 1.0)


# --- weight -----------------------------------------------------------------


def test_weight_examples():
    w, q1, q2 = weight_eval(0.0, WeightSpec(0.5, 1.0))
    assert w == 1.0
    w, q1, q2 = weight_eval(3.0, WeightSpec(0.5, 1.0))
    assert (w, q1, q2) == pytest.approx((math.exp(-3), -1.0, 1.0))
    w, q1, q2 = weight_eval(-2.0, WeightSpec(0.5, 1.0))
    assert (w, q1, q2) == pytest.approx((math.e, -0.5, 0.25))


def test_constant_weight_is_pure_exponential():
    x = np.linspace(-5, 5, 101)
    w, q1, q2 = weight_eval(x, WeightSpec(1.0, 1.0))
    np.testing.assert_allclose(w, np.exp(-x), rtol=1e-14)
    np.testing.assert_allclose(q1, -1.0, atol=1e-15)
    np.testing.assert_allclose(q2, 1.0, atol=1e-15)


@settings(max_examples=30, deadline=None)
@given(st.floats(0.05, 1.0), st.floats(0.1, 2.0))
def test_weight_smooth_blend(am, ap):
    spec = WeightSpec(am, ap)
    x = np.linspace(-1.5, 1.5, 30001)
    h = x[1] - x[0]
    w, q1, q2 = weight_eval(x, spec)
    assert np.all(w > 0)
    # q1 = (log w)' and q2 - q1^2 = (log w)'' by centred differences
    lw = np.log(w)
    np.testing.assert_allclose(np.gradient(lw, h)[1:-1], q1[1:-1], atol=1e-6)
    # g''' jumps at +-1, so the centred difference is only O(h) accurate there
    np.testing.assert_allclose(np.gradient(q1, h)[1:-1], (q2 - q1**2)[1:-1], atol=5e-4)
    # q2 has no jump: its largest increment halves with the spacing
    fine = weight_eval(np.linspace(-1.5, 1.5, 60001), spec)[2]
    assert np.max(np.abs(np.diff(fine))) <= 0.6 * np.max(np.abs(np.diff(q2))) + 1e-15


def test_weight_validation():
    with pytest.raises(DomainError):
        WeightSpec(0.0, 1.0)
    with pytest.raises(DomainError):
        WeightSpec(1.2, 1.0)
    with pytest.raises(DomainError):
        WeightSpec(0.5, 0.0)


# --- limit matrices ------------------------------------------------------------


@pytest.mark.parametrize("lam", [0.3 + 0.2j, 2.0, -0.1 + 1j, 5j])
def test_limit_eigenvalues_closed_forms(lam):
    d = 0.3
    p = ModelParams(2.0, d, 1.0)
    M = limit_matrix(1, lam, 0.0, WeightSpec(0.5, 1.0), p)
    ev = np.sort_complex(np.linalg.eigvals(M))
    nu = [-np.sqrt(lam), np.sqrt(lam)]
    eta = [(d - 1 - np.sqrt(d * lam + 1)) / d, (d - 1 + np.sqrt(d * lam + 1)) / d]
    np.testing.assert_allclose(ev, np.sort_complex(np.array(nu + eta)), atol=1e-10)
    closed = limit_spatial_eigenvalues(lam, 0.0, 1.0, p)
    np.testing.assert_allclose(np.sort_complex(np.array(closed)), ev, atol=1e-10)


def test_branch_point_at_origin():
    um, up, _, _ = limit_spatial_eigenvalues(0.0, 0.0, 1.0, P03)
    assert um == 0 and up == 0


def test_limit_matrix_errors():
    with pytest.raises(DomainError):
        limit_matrix(1, 0.0, 0.0, WeightSpec(), ModelParams(2.0, 0.0))
    with pytest.raises(ValueError):
        limit_matrix(0, 0.0, 0.0, WeightSpec(), P03)


def test_linearization_approaches_limits(front_03):
    spline = front_03.interpolant()
    lin = LinearizationMatrix(P03, WeightSpec(0.5, 1.0), lambda x: spline(x)[0], lambda x: spline(x)[1])
    lam = 0.7 + 0.4j
    errs = [np.max(np.abs(lin(x, lam) - limit_matrix(1, lam, front_03.i_plus, lin.weight, P03))) for x in (10, 20, 40)]
    assert errs[0] > errs[1] > errs[2] and errs[2] < 1e-10
    left = [np.max(np.abs(lin(x, lam) - limit_matrix(-1, lam, front_03.i_minus, lin.weight, P03)))
            for x in (-10, -20, -40)]
    assert left[0] > left[1] > left[2] and left[2] < 1e-5
    # M is affine in lam
    np.testing.assert_allclose(lin(1.0, 2 * lam) - lin(1.0, lam), lin(1.0, lam) - lin(1.0, 0), atol=1e-14)


# --- essential spectrum ------------------------------------------------------


def test_curves_closed_form_agreement(front_03):
    curves = essential_spectrum_curves(P03, WeightSpec(0.5, 1.0), front_03.i_minus, front_03.i_plus)
    assert max(curves.closed_form_mismatch.values()) < 1e-6
    nu = curves.sigma_nu
    assert np.all(nu.imag == 0) and np.all(nu.real <= 0) and np.max(nu.real) == pytest.approx(0, abs=1e-6)
    mx = curves.max_real_part
    assert mx["eta"] < 0 and mx["phi"] < 0 and mx["sigma"] < 0


def test_dispersion_point_on_nu_curve():
    # lam = -k^2 at k = 1 has a purely imaginary spatial eigenvalue at +inf
    M = limit_matrix(1, -1.0, 0.0, WeightSpec(0.5, 1.0), P03)
    assert abs(np.linalg.det(M - 1j * np.eye(4))) < 1e-12


def test_eta_curve_rightmost_point():
    # rightmost point of the eta curve at d = 0.3 is ((1 - d)^2 - 1)/d = -1.7
    curves = essential_spectrum_curves(P03, WeightSpec(0.5, 1.0), 1.95, 0.0, im_grid=np.linspace(-5, 5, 201))
    assert curves.max_real_part["eta"] == pytest.approx(-1.7, abs=1e-9)
    ev = np.linalg.eigvals(limit_matrix(1, -1.7, 0.0, WeightSpec(0.5, 1.0), P03))
    assert np.min(np.abs(ev.real)) < 1e-9


def test_overstabilization_error():
    with pytest.raises(OverstabilizationError, match="alpha_minus < c/2"):
        essential_spectrum_curves(P03, WeightSpec(1.0, 1.0), 1.95)


def test_curves_need_d_in_unit_interval():
    with pytest.raises(DomainError):
        essential_spectrum_curves(ModelParams(2.0, 1.5), WeightSpec(0.5, 1.0), 1.9)


# --- energy bound ------------------------------------------------------------


def test_energy_bound_identity(oracle):
    assert energy_bound(P03) == pytest.approx(math.sqrt(2) * (1.4 * math.sqrt(20) + 6), abs=1e-12)
    assert energy_bound(P03) == pytest.approx(oracle["energy_bound_d0.3_r1"], abs=1e-12)


@settings(max_examples=40, deadline=None)
@given(st.floats(0.01, 0.99), st.floats(0.0, 3.0))
def test_energy_bound_general_form(d, r):
    re, im, R = energy_bound_general([1.0, d], [0.0, 2 - 2 * d], [3.0, 5 + r])
    assert R == pytest.approx(energy_bound(ModelParams(2.0, d, r)), rel=1e-14)
    assert re == 5 + r


def test_energy_bound_limits_and_errors():
    assert energy_bound(ModelParams(2.0, 1 - 1e-12, 1.0)) == pytest.approx(6 * math.sqrt(2), rel=1e-5)
    with pytest.raises(DomainError):
        energy_bound(ModelParams(2.0, 1.0))
    with pytest.raises(DomainError):
        energy_bound(ModelParams(3.0, 0.5))
    assert energy_bound_general([0.0], [1.0], [1.0])[1] == math.inf


# --- contour and winding --------------------------------------------------------


def test_contour_geometry():
    c = evans_contour(P03)
    assert c.R == pytest.approx(17.339658822710035) and c.delta == 1e-3
    ts = c.initial_params(256)
    lam = c(ts)
    assert lam[0] == pytest.approx(lam[-1], abs=1e-12)
    corners = c(np.array([1.0, 2.0, 3.0, 0.0]))
    np.testing.assert_allclose(corners, [1j * c.R, 1e-3j, -1e-3j, -1j * c.R], atol=1e-12)
    assert np.all(lam.real >= -1e-12)
    assert np.all((np.abs(lam) >= 1e-3 - 1e-12) & (np.abs(lam) <= c.R + 1e-9))


def test_winding_of_simple_functions():
    lam = evans_contour(R=5.0)(np.linspace(0, 4, 2001))
    assert winding_number(lam - (1 + 0.5j))[0] == 1
    assert winding_number(np.ones_like(lam))[0] == 0
    w, resid = winding_number((lam - 1) * (lam - (1 + 2j)))
    assert w == 2 and resid < 1e-9


def test_winding_refuses_large_jumps():
    with pytest.raises(RefinementNeededError):
        winding_number(np.exp(1j * np.array([0.0, 2.0, 4.0, 6.0])), max_jump=np.pi / 2)
    with pytest.raises(RefinementNeededError):
        winding_number(np.array([1.0, -1.0]), closed=False)
    with pytest.raises(ValueError):
        winding_number(np.array([1.0, 0.0, 1.0]))


# --- Evans function --------------------------------------------------------------


def test_planted_eigenvalue_winding_one():
    system = planted_eigenvalue_system(1.0)
    res = evans_winding(system, evans_contour(R=5.0), L=20.0)
    assert res.winding == 1 and res.closure_residual < 0.1
    assert abs(evans_values(system, [1.0], L=20.0)[0][0]) < 1e-8


def test_evans_conjugate_symmetry(front_03):
    system = wave_evans_system(front_03)
    rng = np.random.default_rng(11)
    lams = rng.uniform(0.01, 10, 20) + 1j * rng.uniform(0.01, 10, 20)
    e1, _ = evans_values(system, lams)
    e2, _ = evans_values(system, lams.conj())
    np.testing.assert_allclose(e2, e1.conj(), rtol=1e-8)


def test_evans_analytic(front_03):
    system = wave_evans_system(front_03)
    lam0, h = 0.8 + 0.6j, 1e-4
    e, _ = evans_values(system, [lam0 + h, lam0 - h, lam0 + 1j * h, lam0 - 1j * h], rel_tol=1e-11, abs_tol=1e-13)
    dx = (e[0] - e[1]) / (2 * h)
    dy = (e[2] - e[3]) / (2 * h)
    assert abs(dx + 1j * dy) / abs(dx) < 1e-3


def test_evans_L_robust(front_03):
    system = wave_evans_system(front_03)
    lams = evans_contour(P03)(np.linspace(0, 4, 41)[:-1])
    e50, _ = evans_values(system, lams, L=50.0)
    e45, _ = evans_values(system, lams, L=45.0)
    assert np.max(np.abs(e50 / e45 - 1)) < 0.01


def test_evans_basis_rotation_keeps_winding(front_03):
    system = wave_evans_system(front_03)
    contour = evans_contour(P03)
    lams = contour(contour.initial_params(256))
    rng = np.random.default_rng(2)
    qa, _ = np.linalg.qr(rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2)))
    qb, _ = np.linalg.qr(rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2)))
    base, _ = evans_values(system, lams[:-1])
    rot, _ = evans_values(system, lams[:-1], rotate=(qa, qb))
    ratio = rot / base
    np.testing.assert_allclose(ratio, np.linalg.det(qa) * np.linalg.det(qb), rtol=1e-6)
    assert winding_number(base)[0] == winding_number(rot)[0] == 0


def test_spectral_region_error(front_03):
    with pytest.raises(SpectralRegionError):
        evans_function(-0.5, front_03)


def test_profile_span_checked(front_03):
    with pytest.raises(DomainError):
        evans_function(1.0, front_03, L=80.0)


def test_winding_zero_and_splitting(front_03, tmp_path):
    res = evans_winding(wave_evans_system(front_03), evans_contour(P03))
    assert res.winding == 0 and res.closure_residual < 0.1
    assert np.all(res.dims.sum(axis=1) == 4)
    assert res.min_modulus > 0
    k1, k2, margin = consistent_splitting_dims(wave_evans_system(front_03), res.contour)
    assert np.all(k1 + k2 == 4) and np.all(margin > 0)
    csv_path, json_path = res.save(tmp_path)
    data = np.loadtxt(csv_path, delimiter=",", skiprows=1)
    assert np.array_equal(data[:, 2] + 1j * data[:, 3], res.values)


def test_assumption_region_passes(front_01):
    rep = check_assumption_region(front_01.params, front_01)
    assert rep.passed and rep.winding_right == 0 and rep.winding_wedge == 0
    assert rep.delta0 > 0 and rep.delta1 > 0 and rep.essential_margin > 0
    assert rep.note == "numerical evidence, not proof"


def test_assumption_margin_violation(front_01):
    res = evans_winding(wave_evans_system(front_01), evans_contour(front_01.params))
    rep = check_assumption_region(front_01.params, front_01, delta0=5.0, delta1=0.1, right_result=res)
    assert rep.status == "margin-violated" and not rep.passed
