"""Traveling-wave construction by shooting along the unstable manifold.

A wave leaving the fixed point ``(0, 0, K, 0)`` is integrated forward from a
point ``eps`` along the unstable eigenvector. The invading front is the value
``K*`` of the left limit for which the right limit ``i_plus`` vanishes; it is
bracketed between shots that converge with ``i_plus > 0`` and shots that leave
the non-negative quadrant.
"""

from __future__ import annotations

import csv
import enum
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.interpolate import CubicHermiteSpline

from .model import (
    DomainError,
    ModelParams,
    fixed_point_spectrum,
    unstable_branch_direction,
    vector_field_s0,
)
from .ode import Event, IntegratorConfig, Termination, Trajectory, integrate

__all__ = [
    "BracketError",
    "NonMonotoneError",
    "PropertyReport",
    "ShootOptions",
    "ShotKind",
    "ShotOutcome",
    "WaveProfile",
    "check_limit_relation",
    "critical_tail_slope",
    "d_continuity_sweep",
    "find_invading_front",
    "load_profile",
    "mass_balance",
    "measure_decay_rates",
    "profile_from_shot",
    "save_profile",
    "shoot",
    "verify_tw_properties",
]

PROFILE_HALF_WIDTH = 50.0
PROFILE_SPACING = 0.05


class BracketError(ValueError):
    """The bracket for the front search does not straddle ``i_plus = 0``."""


class NonMonotoneError(RuntimeError):
    """Measured ``i_plus`` is not monotone in ``K`` along the bisection."""


class ShotKind(enum.Enum):
    CONVERGED = "Converged"
    WENT_NEGATIVE = "WentNegative"
    DIVERGED = "Diverged"
    UNDECIDED = "Undecided"


@dataclass
class ShootOptions:
    eps: float = 1e-7
    conv_tol: float = 1e-8
    neg_tol: float = 1e-9
    x_max: float = 600.0
    rel_tol: float = 1e-8
    abs_tol: float = 1e-24
    max_steps: int = 200_000

    def integrator(self, params: ModelParams) -> IntegratorConfig:
        return IntegratorConfig(rel_tol=self.rel_tol, abs_tol=self.abs_tol, max_steps=self.max_steps)


@dataclass
class ShotOutcome:
    kind: ShotKind
    K: float
    trajectory: Trajectory
    i_plus: float | None = None
    first_negative_x: float | None = None

    @property
    def overshoots(self) -> bool:
        """True on the far side of the front (``i_plus < 0`` or left the quadrant)."""
        if self.kind is ShotKind.CONVERGED:
            return self.i_plus < 0
        return self.kind in (ShotKind.WENT_NEGATIVE, ShotKind.DIVERGED)


def _sd_field(params: ModelParams):
    c, d, r = params.c, params.d, params.r

    def f(x, y):
        a, b, i, j = y
        reaction = a * (a + i)
        return np.array([b, reaction - a - c * b, j, -(c * j + r * a + reaction) / d])

    return f


def _initial_state(K: float, params: ModelParams, eps: float) -> np.ndarray:
    return np.array([0.0, 0.0, K, 0.0]) + eps * unstable_branch_direction(K, params)


def _tail_corrected_limit(y: np.ndarray, params: ModelParams) -> float:
    """Right limit of ``i`` from a state deep in the tail.

    Integrating ``c i' + d i'' = -a (a + i + r)`` from ``x`` to infinity with an
    exponential tail ``a ~ exp(-mu x)`` gives the remainder in closed form.
    """
    a, b, i, j = y
    mu = -b / a if a > 0 and b < 0 else None
    remainder = 0.0
    if mu:
        remainder = (params.r + i) * a / mu + a * a / (2 * mu)
    return i + (params.d * j - remainder) / params.c


def shoot(K: float, params: ModelParams, opts: ShootOptions | None = None) -> ShotOutcome:
    """Integrate ``M^-_d(K)`` forward and classify where it goes."""
    opts = opts or ShootOptions()
    if K <= 1.0:
        raise DomainError(f"shooting needs K > 1, got {K}")
    if params.d <= 0:
        raise DomainError("shooting S_d needs d > 0")
    y0 = _initial_state(K, params, opts.eps)
    neg_tol, conv_tol = opts.neg_tol, opts.conv_tol

    def negative(x, y):
        return min(y[0], y[2]) + neg_tol

    def converged(x, y):
        if y[0] * y[1] >= 0:  # |a| not decreasing
            return 1.0
        return max(abs(y[0]), abs(y[1]), abs(y[3])) - conv_tol

    events = [
        Event(negative, terminal=True, direction=-1, name="negative"),
        Event(converged, terminal=True, direction=-1, name="converged"),
    ]
    traj = integrate(_sd_field(params), y0, (0.0, opts.x_max), opts.integrator(params), events)
    if traj.termination is Termination.EVENT:
        name, x_ev, y_ev = traj.events[-1]
        if name == "negative":
            return ShotOutcome(ShotKind.WENT_NEGATIVE, K, traj, first_negative_x=x_ev)
        return ShotOutcome(ShotKind.CONVERGED, K, traj, i_plus=_tail_corrected_limit(y_ev, params))
    if traj.termination is Termination.DIVERGED:
        return ShotOutcome(ShotKind.DIVERGED, K, traj)
    return ShotOutcome(ShotKind.UNDECIDED, K, traj)


@dataclass
class WaveProfile:
    """Wave sampled on a uniform grid centred at the maximum of ``a``."""

    params: ModelParams
    K: float
    grid: np.ndarray
    a: np.ndarray
    a_prime: np.ndarray
    i: np.ndarray
    i_prime: np.ndarray
    i_plus: float
    mu_minus: float = math.nan
    mu_plus: float = math.nan
    critical: bool = False
    max_x: float = 0.0
    x_integrated: float = -math.inf  # left end of the integrated (not linearized) part
    meta: dict = field(default_factory=dict)

    @property
    def i_minus(self) -> float:
        return self.K

    @property
    def states(self) -> np.ndarray:
        return np.column_stack([self.a, self.a_prime, self.i, self.i_prime])

    def interpolant(self):
        """C^1 Hermite interpolant ``x -> (a, i)`` using the stored derivatives."""
        return CubicHermiteSpline(
            self.grid,
            np.column_stack([self.a, self.i]),
            np.column_stack([self.a_prime, self.i_prime]),
            extrapolate=False,
        )

    def shifted(self, x0: float) -> "WaveProfile":
        """Profile re-centred so that old abscissa ``x0`` becomes 0."""
        out = WaveProfile(**{**self.__dict__, "grid": self.grid - x0})
        out.max_x = self.max_x - x0
        out.x_integrated = self.x_integrated - x0
        return out


def profile_from_shot(
    K: float,
    params: ModelParams,
    opts: ShootOptions | None = None,
    half_width: float = PROFILE_HALF_WIDTH,
    spacing: float = PROFILE_SPACING,
) -> WaveProfile:
    """Resample ``M^-_d(K)`` on ``[-half_width, half_width]`` around the ``a``-maximum.

    Left of the shot's starting point the linearization ``(0,0,K,0) + eps e^{l x} v``
    is used; it is exact up to ``O(eps^2)``.
    """
    opts = opts or ShootOptions()
    probe = shoot(K, params, opts)
    if probe.kind is not ShotKind.CONVERGED:
        raise DomainError(f"shot at K={K} did not converge ({probe.kind.value})")
    peak = Event(lambda x, y: y[1], terminal=False, direction=-1, name="peak")
    x_peak_guess = [e[1] for e in integrate(
        _sd_field(params), probe.trajectory.states[0], (0.0, probe.trajectory.x_end),
        opts.integrator(params), [peak], record=False,
    ).events]
    if len(x_peak_guess) != 1:
        raise DomainError(f"a has {len(x_peak_guess)} local maxima before convergence")
    x_peak = x_peak_guess[0]
    traj = integrate(
        _sd_field(params), probe.trajectory.states[0], (0.0, x_peak + half_width + 1.0),
        opts.integrator(params),
    )
    n_half = int(round(half_width / spacing))
    grid = np.arange(-n_half, n_half + 1) * spacing
    xs = grid + x_peak
    states = np.empty((xs.size, 4))
    inside = xs >= 0.0
    states[inside] = traj(xs[inside])
    lam4 = fixed_point_spectrum(K, params).lambdas[3].real
    direction = unstable_branch_direction(K, params)
    states[~inside] = np.array([0.0, 0.0, K, 0.0]) + opts.eps * np.exp(lam4 * xs[~inside])[:, None] * direction
    profile = WaveProfile(
        params=params,
        K=float(K),
        grid=grid,
        a=states[:, 0],
        a_prime=states[:, 1],
        i=states[:, 2],
        i_prime=states[:, 3],
        i_plus=float(probe.i_plus),
        max_x=0.0,
        x_integrated=-x_peak,
        meta={"eps": opts.eps, "conv_tol": opts.conv_tol, "neg_tol": opts.neg_tol},
    )
    rates = measure_decay_rates(profile)
    profile.mu_minus, profile.mu_plus, profile.critical = rates
    return profile


def find_invading_front(
    params: ModelParams,
    bracket: tuple[float, float] = (1.5, 2.0),
    tol: float = 1e-6,
    opts: ShootOptions | None = None,
) -> WaveProfile:
    """Bisect on ``K`` until ``i_plus`` vanishes; returns the centred front."""
    opts = opts or ShootOptions()
    if not params.is_admissible:
        raise DomainError(params.admissibility_violation())
    k_lo, k_hi = bracket
    if not 1.0 < k_lo < k_hi < 2.0 + 1e-12:
        raise BracketError(f"bracket must satisfy 1 < K_lo < K_hi <= 2, got {bracket}")
    lo, hi = shoot(k_lo, params, opts), shoot(k_hi, params, opts)
    if lo.kind is not ShotKind.CONVERGED or lo.i_plus <= 0:
        raise BracketError(f"K_lo={k_lo}: expected convergence with i_plus > 0, got {lo.kind.value}")
    if not hi.overshoots:
        raise BracketError(f"K_hi={k_hi}: expected i_plus < 0 or loss of non-negativity")
    history = [(k_lo, lo.i_plus)]
    while k_hi - k_lo >= tol:
        k_mid = 0.5 * (k_lo + k_hi)
        mid = shoot(k_mid, params, opts)
        if mid.kind is ShotKind.UNDECIDED:
            raise RuntimeError(f"undecided shot at K={k_mid}; raise x_max or max_steps")
        if mid.overshoots:
            k_hi = k_mid
        else:
            k_lo = k_mid
            history.append((k_mid, mid.i_plus))
        _check_monotone(history, hi_K=k_hi)
    profile = profile_from_shot(k_lo, params, opts)
    profile.meta["bracket_width"] = k_hi - k_lo
    profile.meta["K_hi"] = k_hi
    return profile


def _check_monotone(history, hi_K: float) -> None:
    pts = sorted(history)
    vals = np.array([v for _, v in pts])
    if np.any(np.diff(vals) > 1e-8):
        raise NonMonotoneError(f"i_plus increases with K along the bisection: {pts}")


@dataclass
class PropertyReport:
    decreasing_i: bool
    positive_a: bool
    i_above_limit: bool
    unique_max: bool
    tail_monotone: bool
    x_star: float | None
    sum_at_max: float

    @property
    def passed(self) -> bool:
        return all((self.decreasing_i, self.positive_a, self.i_above_limit, self.unique_max, self.tail_monotone))

    def as_dict(self) -> dict:
        return {**self.__dict__, "passed": self.passed}


def verify_tw_properties(
    profile: WaveProfile, tol: float = 1e-6, resolution: float = 1e-20
) -> PropertyReport:
    """Check the five qualitative wave properties on the sampled profile.

    Sign conditions are only enforced where a value exceeds ``resolution``;
    far in the right tail ``i'`` is of order ``a * i_plus`` and drops below
    the absolute integration tolerance, where its sign is noise.
    """
    a, ap, i, ip = profile.a, profile.a_prime, profile.i, profile.i_prime
    neg_tol = profile.meta.get("neg_tol", 1e-9)
    decreasing_i = bool(np.all(ip < resolution))
    positive_a = bool(np.all(a > 0))
    i_above_limit = bool(np.all(i >= profile.i_plus - neg_tol)) and profile.i_plus > -neg_tol

    interior = (a[1:-1] >= a[:-2]) & (a[1:-1] > a[2:])
    unique_max = int(np.count_nonzero(interior)) == 1
    k = int(np.argmax(a))
    sum_at_max = float(a[k] + i[k])
    unique_max = unique_max and sum_at_max <= 1.0 + tol

    # i'' from the wave equation, exact on the samples
    ipp = -(profile.params.c * ip + profile.params.r * a + a * (a + i)) / profile.params.d
    good = (ap < resolution) & (ipp > -resolution)
    bad = np.nonzero(~good)[0]
    if bad.size == 0:
        x_star = float(profile.grid[0])
    elif bad[-1] < good.size - 1:
        x_star = float(profile.grid[bad[-1] + 1])
    else:
        x_star = None
    tail_monotone = x_star is not None
    return PropertyReport(decreasing_i, positive_a, i_above_limit, unique_max, tail_monotone, x_star, sum_at_max)


def check_limit_relation(profile: WaveProfile) -> tuple[bool, bool, float]:
    """Strict bounds ``2 - 2d(r+1)/c^2 < i_-inf + i_+inf < 2``; slack is the smaller margin."""
    p = profile.params
    total = profile.K + profile.i_plus
    lower = 2.0 - 2.0 * p.d * (p.r + 1.0) / p.c**2
    return bool(total > lower), bool(total < 2.0), float(min(total - lower, 2.0 - total))


def i_minus_lower_bounds(params: ModelParams) -> dict:
    """Both printed lower bounds on ``i_-inf`` (they differ for ``c != 1``)."""
    return {
        "c_squared": 2.0 - 2.0 * params.d * (params.r + 1.0) / params.c**2,
        "c_linear": 2.0 - 2.0 * params.d * (params.r + 1.0) / params.c,
    }


def _integrate_a(profile: WaveProfile, f: np.ndarray) -> float:
    return float(np.trapezoid(f, profile.grid)) if hasattr(np, "trapezoid") else float(np.trapz(f, profile.grid))


def mass_balance(profile: WaveProfile) -> tuple[float, float]:
    """Relative residuals of ``int a = c (i_-inf - i_+inf)/(1+r)`` and ``int a(a+i) = int a``."""
    p = profile.params
    a = profile.a
    mass = _integrate_a(profile, a)
    # exponential tails beyond the grid
    mu_m = profile.mu_minus if np.isfinite(profile.mu_minus) else _formula_mu_minus(profile)
    mass += a[0] / mu_m
    x_r = profile.grid[-1]
    if profile.critical:
        mass += a[-1] * (1.0 + 1.0 / x_r)
    elif np.isfinite(profile.mu_plus) and profile.mu_plus > 0:
        mass += a[-1] / profile.mu_plus
    quad = _integrate_a(profile, a * (a + profile.i))
    if mass == 0.0:
        return 0.0, 0.0
    expected = p.c * (profile.K - profile.i_plus) / (1.0 + p.r)
    return abs(mass - expected) / mass, abs(quad - mass) / mass


def _formula_mu_minus(profile: WaveProfile) -> float:
    c = profile.params.c
    return -c / 2 + math.sqrt(c * c / 4 + profile.K - 1.0)


def _loglinear_slope(x, y) -> float:
    return float(np.polyfit(x, y, 1)[0])


def measure_decay_rates(
    profile: WaveProfile,
    left_window: float = 5.0,
    right_window: tuple[float, float] = (15.0, 45.0),
    critical_tol: float = 1e-3,
) -> tuple[float, float, bool]:
    """Fitted tail rates ``(mu_minus, mu_plus, critical)``.

    ``mu_minus`` is the log-linear slope of ``a`` on the first ``left_window``
    units of the integrated part. For a critical front (``c = 2``,
    ``i_plus ~ 0``) ``mu_plus`` is the slope of ``-log a`` over the right window,
    which is only asymptotically 1 because of the ``x e^{-x}`` law.
    """
    x, a = profile.grid, profile.a
    x_left = max(profile.x_integrated, x[0])
    sel = (x >= x_left) & (x <= x_left + left_window) & (a > 0)
    if np.count_nonzero(sel) < 5:
        raise ValueError("too few samples in the left tail")
    mu_minus = _loglinear_slope(x[sel], np.log(a[sel]))
    sel = (x >= right_window[0]) & (x <= right_window[1]) & (a > 0)
    if np.count_nonzero(sel) < 5:
        raise ValueError("too few samples in the right tail")
    mu_plus = -_loglinear_slope(x[sel], np.log(a[sel]))
    critical = abs(profile.params.c - 2.0) < 1e-12 and abs(profile.i_plus) < critical_tol
    return mu_minus, mu_plus, critical


def critical_tail_slope(profile: WaveProfile, window: tuple[float, float] = (15.0, 45.0)) -> float:
    """Slope of ``log a + x`` against ``log(x - x0)``; 1 for an ``x e^{-x}`` tail.

    The tail is ``A (x - x0) e^{-x}`` for a translation ``x0`` that depends on
    where the profile is centred. ``x0`` is read off a linear fit of ``a e^x``;
    a pure exponential tail gives ``A ~ 0`` and is rejected.
    """
    x, a = profile.grid, profile.a
    sel = (x >= window[0]) & (x <= window[1]) & (a > 0)
    xs, scaled = x[sel], a[sel] * np.exp(x[sel])
    slope, intercept = np.polyfit(xs, scaled, 1)
    if slope <= 1e-3 * np.max(np.abs(scaled)) / (window[1] - window[0]):
        raise ValueError("tail has no linear prefactor; not an x e^{-x} tail")
    x0 = -intercept / slope
    if x0 >= xs[0]:
        raise ValueError("tail offset falls inside the fit window")
    return _loglinear_slope(np.log(xs - x0), np.log(a[sel]) + xs)


def _s0_profile(K: float, params: ModelParams, eps: float, opts: ShootOptions):
    c, r = params.c, params.r
    lam4 = -c / 2 + math.sqrt(c * c / 4 + K - 1.0)
    v = np.array([1.0, lam4, -(K + r) / (c * lam4)])
    v /= np.linalg.norm(v)
    y0 = np.array([0.0, 0.0, K]) + eps * v

    def f(x, y):
        return vector_field_s0(y, params)

    return y0, f


def d_continuity_sweep(
    K: float,
    params: ModelParams,
    d_list,
    window: tuple[float, float] = (-20.0, 20.0),
    opts: ShootOptions | None = None,
) -> list[float]:
    """Sup-distance between ``M^-_d(K)`` and the lifted reduced wave ``M^-_0(K)``.

    Both orbits are phase-aligned at the maximum of ``a`` and compared on
    ``window`` in ``(a, a', i, i')``, with ``i' = -a(a+i+r)/c`` for the reduced one.
    """
    opts = opts or ShootOptions()
    y0, f0 = _s0_profile(K, params, opts.eps, opts)
    cfg = opts.integrator(params)
    peak = Event(lambda x, y: y[1], terminal=False, direction=-1, name="peak")
    ref = integrate(f0, y0, (0.0, opts.x_max), cfg, [peak])
    if not ref.events:
        raise DomainError("reduced orbit has no maximum of a")
    x0_ref = ref.events[0][1]
    xs = np.arange(window[0], window[1] + 1e-9, PROFILE_SPACING)
    if x0_ref + window[0] < 0:
        raise ValueError("window reaches left of the reduced shot start")
    r_states = ref(xs + x0_ref)
    lifted = np.column_stack([
        r_states[:, 0], r_states[:, 1], r_states[:, 2],
        -r_states[:, 0] * (r_states[:, 0] + r_states[:, 2] + params.r) / params.c,
    ])
    out = []
    for d in d_list:
        p = ModelParams(params.c, float(d), params.r)
        shot = shoot(K, p, opts)
        if shot.kind is not ShotKind.CONVERGED:
            raise RuntimeError(f"shot at d={d} did not converge ({shot.kind.value})")
        traj = integrate(_sd_field(p), shot.trajectory.states[0], (0.0, shot.trajectory.x_end), cfg, [peak])
        x0 = traj.events[0][1]
        if x0 + window[0] < 0:
            raise ValueError("window reaches left of the shot start")
        out.append(float(np.max(np.abs(traj(xs + x0) - lifted))))
    return out


# ---------------------------------------------------------------------------
# serialization

_CSV_COLUMNS = ("x", "a", "a_prime", "i", "i_prime")


def save_profile(profile: WaveProfile, path) -> tuple[Path, Path]:
    """Write ``<path>.csv`` (columns x, a, a_prime, i, i_prime) and ``<path>.json``."""
    path = Path(path)
    csv_path, json_path = path.with_suffix(".csv"), path.with_suffix(".json")
    csv_path.parent.mkdir(parents=True, exist_ok=True)
    with open(csv_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(_CSV_COLUMNS)
        for row in zip(profile.grid, profile.a, profile.a_prime, profile.i, profile.i_prime):
            writer.writerow([repr(float(v)) for v in row])
    sidecar = {
        "params": profile.params.as_dict(),
        "K": profile.K,
        "i_minus": profile.K,
        "i_plus": profile.i_plus,
        "mu_minus": profile.mu_minus,
        "mu_plus": profile.mu_plus,
        "critical": profile.critical,
        "max_x": profile.max_x,
        "x_integrated": profile.x_integrated,
        "meta": profile.meta,
        "csv": csv_path.name,
    }
    json_path.write_text(json.dumps(sidecar, indent=2))
    return csv_path, json_path


def load_profile(path) -> WaveProfile:
    path = Path(path)
    json_path = path.with_suffix(".json")
    side = json.loads(json_path.read_text())
    data = np.loadtxt(json_path.parent / side.get("csv", path.with_suffix(".csv").name), delimiter=",", skiprows=1)
    if data.ndim != 2 or data.shape[1] != 5:
        raise ValueError(f"{path}: expected 5 CSV columns {_CSV_COLUMNS}")
    return WaveProfile(
        params=ModelParams(**side["params"]),
        K=side["K"],
        grid=data[:, 0],
        a=data[:, 1],
        a_prime=data[:, 2],
        i=data[:, 3],
        i_prime=data[:, 4],
        i_plus=side["i_plus"],
        mu_minus=side["mu_minus"],
        mu_plus=side["mu_plus"],
        critical=side["critical"],
        max_x=side.get("max_x", 0.0),
        x_integrated=side.get("x_integrated", -math.inf),
        meta=side.get("meta", {}),
    )
