import math

import numpy as np
import pytest

from fkppwave.ode import Event, IntegratorConfig, Termination, integrate, integrate_complex


def decay(x, y):
    return -y


def test_exponential_decay():
    cfg = IntegratorConfig(rel_tol=1e-8, abs_tol=1e-12)
    tr = integrate(decay, [1.0], (0.0, 1.0), cfg)
    assert tr.termination is Termination.REACHED_END
    assert tr.y_end[0] == pytest.approx(math.exp(-1), rel=10 * cfg.rel_tol)
    assert np.all(np.diff(tr.times) > 0)
    assert tr.states.shape[0] == tr.times.size


def test_harmonic_oscillator_period():
    tr = integrate(lambda x, y: np.array([y[1], -y[0]]), [1.0, 0.0], (0.0, 2 * math.pi),
                   IntegratorConfig(rel_tol=1e-9, abs_tol=1e-12))
    np.testing.assert_allclose(tr.y_end, [1.0, 0.0], atol=1e-6)


def test_event_location():
    ev = Event(lambda x, y: y[0] - 0.5, name="half")
    tr = integrate(decay, [1.0], (0.0, 5.0), IntegratorConfig(), [ev])
    assert tr.termination is Termination.EVENT
    _, x, y = tr.events[0]
    assert x == pytest.approx(math.log(2), abs=1e-8)
    assert tr.x_end == pytest.approx(x)


def test_event_direction_and_nonterminal():
    up = Event(lambda x, y: y[0], terminal=False, direction=1)
    tr = integrate(lambda x, y: np.array([y[1], -y[0]]), [0.0, 1.0], (0.0, 4 * math.pi), IntegratorConfig(), [up])
    xs = [e[1] for e in tr.events]
    np.testing.assert_allclose(xs, [2 * math.pi, 4 * math.pi][: len(xs)], atol=1e-8)
    assert len(xs) >= 1


def test_event_restart_idempotent():
    f = lambda x, y: np.array([y[1], -y[0] - 0.1 * y[1]])  # noqa: E731
    cfg = IntegratorConfig(rel_tol=1e-11, abs_tol=1e-13)
    ev = Event(lambda x, y: y[0] - 0.2, direction=-1)
    first = integrate(f, [1.0, 0.0], (0.0, 10.0), cfg, [ev])
    x_ev, y_ev = first.events[0][1], first.events[0][2]
    rest = integrate(f, y_ev, (x_ev, 10.0), cfg)
    full = integrate(f, [1.0, 0.0], (0.0, 10.0), cfg)
    np.testing.assert_allclose(rest.y_end, full.y_end, atol=1e-7)


def test_dense_output_accuracy():
    tr = integrate(decay, [1.0], (0.0, 3.0), IntegratorConfig(rel_tol=1e-10, abs_tol=1e-13))
    xs = np.linspace(0, 3, 37)
    np.testing.assert_allclose(tr(xs)[:, 0], np.exp(-xs), rtol=1e-7)


def test_backward_integration():
    tr = integrate(decay, [math.exp(-2)], (2.0, 0.0))
    assert tr.y_end[0] == pytest.approx(1.0, rel=1e-8)


def test_fixed_step_order_at_least_four():
    # the step size is the only knob in fixed-step mode; observed order is ~5
    errs = []
    for h in (0.1, 0.05, 0.025):
        tr = integrate(decay, [1.0], (0.0, 1.0), IntegratorConfig(max_step=h, adaptive=False))
        errs.append(abs(tr.y_end[0] - math.exp(-1)))
    assert errs[0] / errs[1] >= 16 and errs[1] / errs[2] >= 16


def test_tolerance_halving_reduces_error():
    errs = []
    for tol in (1e-6, 5e-7, 2.5e-7, 1.25e-7):
        tr = integrate(decay, [1.0], (0.0, 1.0), IntegratorConfig(rel_tol=tol, abs_tol=tol * 1e-3))
        errs.append(abs(tr.y_end[0] - math.exp(-1)))
    assert errs[-1] < errs[0]
    assert all(e < 10 * t for e, t in zip(errs, (1e-6, 5e-7, 2.5e-7, 1.25e-7)))


def test_divergence_and_budget():
    tr = integrate(lambda x, y: y * y, [1.0], (0.0, 2.0))
    assert tr.diverged and tr.termination is Termination.DIVERGED
    tr = integrate(decay, [1.0], (0.0, 100.0), IntegratorConfig(max_steps=3, max_step=0.01))
    assert tr.termination is Termination.STEP_BUDGET


def test_config_validation():
    with pytest.raises(ValueError):
        IntegratorConfig(rel_tol=0)
    with pytest.raises(ValueError):
        IntegratorConfig(max_steps=0)
    with pytest.raises(ValueError):
        integrate(decay, [np.nan], (0, 1))


def test_complex_rotation():
    tr = integrate_complex(lambda x, z: 1j * z, np.array([1.0 + 0j]), (0.0, math.pi),
                           IntegratorConfig(rel_tol=1e-11, abs_tol=1e-13))
    assert abs(tr.y_end[0] - (-1.0)) < 1e-8


def test_complex_zero_field_and_diagonal():
    z0 = np.array([1.0, 2.0, 1.0 + 1j, 3.0], dtype=complex)
    tr = integrate_complex(lambda x, z: np.zeros_like(z), z0, (0.0, 1.0))
    np.testing.assert_array_equal(tr.y_end, z0)
    diag = np.array([1.0, -1.0, 2j, 0.0])
    tr = integrate_complex(lambda x, z: diag * z, z0, (0.0, 1.0), IntegratorConfig(rel_tol=1e-11, abs_tol=1e-13))
    np.testing.assert_allclose(tr.y_end, z0 * np.exp(diag), rtol=1e-9)


def test_deterministic():
    f = lambda x, y: np.array([y[1], math.sin(y[0])])  # noqa: E731
    a = integrate(f, [0.3, 0.1], (0, 5))
    b = integrate(f, [0.3, 0.1], (0, 5))
    assert np.array_equal(a.states, b.states) and np.array_equal(a.times, b.times)
