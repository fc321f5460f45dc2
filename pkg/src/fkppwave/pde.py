"""Explicit method-of-lines simulation of the two-species growth PDE.

In the lab frame

    A_t = A_zz + A - A (A + I)
    I_t = d I_zz + r A + A (A + I)

and in a frame moving with speed ``c`` the drift ``c d/dx`` is added to both
equations. Diffusion uses second-order central differences, time stepping is
forward Euler and the boundaries are homogeneous Neumann (mirror ghost nodes).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .model import DomainError, ModelParams
from .spectral.weight import WeightSpec, weight_eval

__all__ = [
    "BlowUpError",
    "asymptotic_front_speed",
    "CflError",
    "DecayFit",
    "Frame",
    "Grid1D",
    "PdeState",
    "decay_exponent_fit",
    "front_position",
    "front_speed",
    "gaussian_heat_solution",
    "load_snapshots",
    "plateau_value",
    "profile_on_grid",
    "save_snapshots",
    "simulate",
    "stability_initial_data",
    "weighted_perturbation_norm",
]

BLOW_UP = 1e3


class CflError(ValueError):
    """Requested time step exceeds the explicit stability limit."""


class BlowUpError(RuntimeError):
    """The solution left the physically meaningful range."""


@dataclass(frozen=True)
class Grid1D:
    x_min: float
    x_max: float
    n: int

    def __post_init__(self):
        if self.n < 16:
            raise ValueError(f"grid needs n >= 16 nodes, got {self.n}")
        if not self.x_max > self.x_min:
            raise ValueError("x_max must exceed x_min")

    @classmethod
    def from_spacing(cls, x_min: float, x_max: float, dx: float) -> "Grid1D":
        return cls(x_min, x_max, int(round((x_max - x_min) / dx)) + 1)

    @property
    def dx(self) -> float:
        return (self.x_max - self.x_min) / (self.n - 1)

    @property
    def x(self) -> np.ndarray:
        return np.linspace(self.x_min, self.x_max, self.n)


@dataclass
class PdeState:
    t: float
    x: np.ndarray
    A: np.ndarray
    I: np.ndarray

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=float)
        self.A = np.asarray(self.A, dtype=float)
        self.I = np.asarray(self.I, dtype=float)
        if not (self.x.shape == self.A.shape == self.I.shape):
            raise ValueError("x, A and I must have the same shape")
        if not (np.all(np.isfinite(self.A)) and np.all(np.isfinite(self.I))):
            raise ValueError("state contains non-finite values")

    def copy(self) -> "PdeState":
        return PdeState(self.t, self.x.copy(), self.A.copy(), self.I.copy())


@dataclass(frozen=True)
class Frame:
    """``speed = 0`` is the lab frame, ``speed = c`` the frame ``x = z - c t``."""

    speed: float = 0.0

    @classmethod
    def lab(cls) -> "Frame":
        return cls(0.0)

    @classmethod
    def moving(cls, c: float) -> "Frame":
        if c <= 0:
            raise ValueError("moving-frame speed must be positive")
        return cls(float(c))

    @property
    def name(self) -> str:
        return "lab" if self.speed == 0 else f"moving(c={self.speed:g})"


def max_stable_dt(grid: Grid1D, params: ModelParams, frame: Frame, cfl: float = 0.4) -> float:
    dx = grid.dx
    limit = dx * dx / (2.0 * max(1.0, params.d))
    if frame.speed > 0:
        limit = min(limit, dx / frame.speed)
    return cfl * limit


def _laplacian(u: np.ndarray, out: np.ndarray, inv_dx2: float) -> np.ndarray:
    out[1:-1] = u[2:] - 2.0 * u[1:-1] + u[:-2]
    out[0] = 2.0 * (u[1] - u[0])
    out[-1] = 2.0 * (u[-2] - u[-1])
    out *= inv_dx2
    return out


def _drift(u: np.ndarray, out: np.ndarray, inv_dx: float, upwind: bool) -> np.ndarray:
    # c u_x with c > 0: information travels towards -x, so upwinding looks right
    if upwind:
        out[:-1] = (u[1:] - u[:-1]) * inv_dx
    else:
        out[1:-1] = (u[2:] - u[:-2]) * (0.5 * inv_dx)
        out[0] = 0.0
    out[-1] = 0.0
    return out


def simulate(
    init: PdeState,
    params: ModelParams,
    frame: Frame,
    t_end: float,
    dt_out: float,
    grid: Grid1D | None = None,
    cfl: float = 0.4,
    dt: float | None = None,
    callback=None,
) -> list[PdeState]:
    """Integrate from ``init`` to ``t_end`` and return snapshots every ``dt_out``.

    The drift term is differenced centrally where the cell Peclet number
    ``c dx / (2 D)`` is below one and by first-order upwinding otherwise
    (``D = 1`` for ``A``, ``D = d`` for ``I``; ``d = 0`` always upwinds).
    ``callback(state)`` is called on every snapshot.

    Raises
    ------
    CflError
        If ``dt`` is given and exceeds ``cfl * min(dx^2 / (2 max(1, d)), dx / c)``.
    BlowUpError
        If ``max |A|`` exceeds 1e3 or the state becomes non-finite.
    """
    if t_end <= 0 or dt_out <= 0:
        raise ValueError("t_end and dt_out must be positive")
    if not 0 < cfl <= 1:
        raise ValueError("cfl must lie in (0, 1]")
    grid = grid or Grid1D(float(init.x[0]), float(init.x[-1]), init.x.size)
    if grid.n != init.x.size or not np.allclose(grid.x, init.x, rtol=0, atol=1e-9 * grid.dx):
        raise ValueError("initial state does not live on the grid")
    dt_max = max_stable_dt(grid, params, frame, cfl)
    if dt is not None and dt > dt_max * (1 + 1e-12):
        raise CflError(f"dt = {dt:g} exceeds the stable limit {dt_max:g} (cfl = {cfl})")
    dt = dt or dt_max
    sub = max(1, math.ceil(dt_out / dt - 1e-9))
    dt = dt_out / sub
    n_out = int(round(t_end / dt_out))
    if abs(n_out * dt_out - t_end) > 1e-9 * t_end:
        raise ValueError("t_end must be a multiple of dt_out")

    c, d, r = frame.speed, params.d, params.r
    inv_dx, inv_dx2 = 1.0 / grid.dx, 1.0 / grid.dx**2
    upwind_a = c * grid.dx / 2.0 >= 1.0
    upwind_i = d == 0 or c * grid.dx / (2.0 * d) >= 1.0
    A, I = init.A.copy(), init.I.copy()
    lap_a, lap_i = np.empty_like(A), np.empty_like(I)
    adv_a, adv_i = np.zeros_like(A), np.zeros_like(I)
    t0 = init.t
    states = [PdeState(t0, grid.x, A.copy(), I.copy())]
    if callback:
        callback(states[-1])
    for k in range(1, n_out + 1):
        for _ in range(sub):
            react = A * (A + I)
            _laplacian(A, lap_a, inv_dx2)
            dA = lap_a + A - react
            dI = r * A + react
            if d > 0:
                _laplacian(I, lap_i, inv_dx2)
                dI += d * lap_i
            if c > 0:
                dA += c * _drift(A, adv_a, inv_dx, upwind_a)
                dI += c * _drift(I, adv_i, inv_dx, upwind_i)
            A += dt * dA
            I += dt * dI
        amax = float(np.max(np.abs(A)))
        if not (amax <= BLOW_UP) or not np.all(np.isfinite(I)):
            raise BlowUpError(f"|A| reached {amax:g} at t = {t0 + k * dt_out:g}")
        states.append(PdeState(t0 + k * dt_out, grid.x, A.copy(), I.copy()))
        if callback:
            callback(states[-1])
    return states


def front_position(state: PdeState, level: float = 0.1) -> float | None:
    """Largest ``x`` with ``A(x) >= level``, linearly interpolated; ``None`` if none."""
    above = np.nonzero(state.A >= level)[0]
    if above.size == 0:
        return None
    j = int(above[-1])
    if j == state.x.size - 1:
        return float(state.x[j])
    a0, a1 = state.A[j], state.A[j + 1]
    theta = (a0 - level) / (a0 - a1)
    return float(state.x[j] + theta * (state.x[j + 1] - state.x[j]))


def front_speed(states, t_window: tuple[float, float], level: float = 0.1) -> float:
    """Least-squares slope of the front position over ``t_window``."""
    ts, xs = [], []
    for s in states:
        if t_window[0] <= s.t <= t_window[1]:
            pos = front_position(s, level)
            if pos is not None:
                ts.append(s.t)
                xs.append(pos)
    if len(ts) < 2:
        raise ValueError("fewer than two front positions in the window")
    return float(np.polyfit(ts, xs, 1)[0])


def asymptotic_front_speed(states, t_window: tuple[float, float], level: float = 0.1) -> tuple[float, float]:
    """Fit ``x(t) = v t + beta log t + const``; returns ``(v, beta)``.

    Pulled fronts lag behind the linear spreading speed by a logarithmic term,
    so the raw slope over a finite window underestimates ``v``.
    """
    ts, xs = [], []
    for s in states:
        if t_window[0] <= s.t <= t_window[1] and s.t > 0:
            pos = front_position(s, level)
            if pos is not None:
                ts.append(s.t)
                xs.append(pos)
    if len(ts) < 4:
        raise ValueError("need at least four front positions in the window")
    ts = np.asarray(ts)
    X = np.column_stack([ts, np.log(ts), np.ones_like(ts)])
    v, beta, _ = np.linalg.lstsq(X, np.asarray(xs), rcond=None)[0]
    return float(v), float(beta)


def plateau_value(state: PdeState, x_window: tuple[float, float] | None = None, level: float = 0.1) -> float:
    """Mean of ``I`` over ``x_window`` (default: 30 to 20 units behind the front)."""
    if x_window is None:
        front = front_position(state, level)
        if front is None:
            raise ValueError("no front to place the default window behind")
        x_window = (front - 30.0, front - 20.0)
    lo, hi = x_window
    if lo < state.x[0] or hi > state.x[-1] or lo >= hi:
        raise ValueError(f"window {x_window} is not inside the grid [{state.x[0]}, {state.x[-1]}]")
    sel = (state.x >= lo) & (state.x <= hi)
    return float(np.mean(state.I[sel]))


def profile_on_grid(profile, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Wave profile sampled on ``x``, extended by its limits outside its grid."""
    spline = profile.interpolant()
    x = np.asarray(x, dtype=float)
    a = np.zeros_like(x)
    i = np.empty_like(x)
    inside = (x >= profile.grid[0]) & (x <= profile.grid[-1])
    vals = spline(x[inside])
    a[inside], i[inside] = vals[:, 0], vals[:, 1]
    left, right = x < profile.grid[0], x > profile.grid[-1]
    i[left], i[right] = profile.i[0], profile.i[-1]
    # exponential tails beyond the stored window
    if np.any(left):
        a[left] = profile.a[0] * np.exp(profile.mu_minus * (x[left] - profile.grid[0]))
    if np.any(right):
        a[right] = profile.a[-1] * np.exp(-profile.mu_plus * (x[right] - profile.grid[-1]))
    return a, i


def weighted_perturbation_norm(state: PdeState, reference, weight: WeightSpec) -> float:
    """``sup_x (|A - a| + |I - i|) / (w(x) (1 + |x|))``.

    ``reference`` is a :class:`PdeState` on the same grid (e.g. an unperturbed
    run) or a wave profile, sampled on the state's grid.
    """
    if isinstance(reference, PdeState):
        if reference.x.shape != state.x.shape or not np.allclose(reference.x, state.x):
            raise ValueError("reference state lives on a different grid")
        a, i = reference.A, reference.I
    else:
        if state.x[0] < reference.grid[0] - 1e-9 or state.x[-1] > reference.grid[-1] + 1e-9:
            raise ValueError("state grid extends beyond the profile")
        a, i = profile_on_grid(reference, state.x)
    w, _, _ = weight_eval(state.x, weight)
    return float(np.max((np.abs(state.A - a) + np.abs(state.I - i)) / (w * (1.0 + np.abs(state.x)))))


@dataclass(frozen=True)
class DecayFit:
    slope: float
    intercept: float
    super_algebraic: bool
    n_points: int

    def __float__(self):
        return self.slope


def decay_exponent_fit(t, norm, t_min: float = 0.0) -> DecayFit:
    """Slope of ``log(norm)`` against ``log(1 + t)`` over ``t >= t_min``.

    The decay is flagged super-algebraic when the slope over the second half of
    the window is steeper than over the first half by more than 0.5.
    """
    t, norm = np.asarray(t, dtype=float), np.asarray(norm, dtype=float)
    sel = (t >= t_min) & (norm > 0)
    if np.count_nonzero(sel) < 5:
        raise ValueError("decay fit needs at least 5 points")
    lt, ln = np.log1p(t[sel]), np.log(norm[sel])
    slope, intercept = np.polyfit(lt, ln, 1)
    half = lt.size // 2
    s1 = np.polyfit(lt[: half + 1], ln[: half + 1], 1)[0]
    s2 = np.polyfit(lt[half:], ln[half:], 1)[0]
    return DecayFit(float(slope), float(intercept), bool(s2 < s1 - 0.5), int(lt.size))


def gaussian_heat_solution(x, t: float, D: float, sigma0: float = 1.0, amp: float = 1.0, drift: float = 0.0):
    """Exact solution of ``u_t = D u_xx + drift u_x`` from ``amp exp(-x^2/(2 sigma0^2))``."""
    var = sigma0**2 + 2.0 * D * t
    x = np.asarray(x, dtype=float) + drift * t
    return amp * sigma0 / np.sqrt(var) * np.exp(-x * x / (2.0 * var))


def stability_initial_data(profile, grid: Grid1D, delta: float, weight: WeightSpec, level: float | None = None):
    """Shifted front plus a compact bump ``(delta, delta/2) * w(x) exp(-x^2)``.

    The profile is shifted so that ``i(0) = level`` (default ``1 + 2 delta``),
    which keeps ``I(0, x) >= 1 + delta`` for ``x <= 0``. Returns the perturbed
    and the unperturbed state.
    """
    level = 1.0 + 2.0 * delta if level is None else level
    if not profile.i[-1] < level < profile.i[0]:
        raise DomainError(f"i never crosses {level}")
    j = int(np.nonzero(profile.i < level)[0][0])
    x0 = float(np.interp(level, profile.i[j - 1 : j + 1][::-1], profile.grid[j - 1 : j + 1][::-1]))
    shifted = profile.shifted(x0)
    x = grid.x
    a, i = profile_on_grid(shifted, x)
    w, _, _ = weight_eval(x, weight)
    bump = w * np.exp(-x * x)
    base = PdeState(0.0, x, a, i)
    pert = PdeState(0.0, x, a + delta * bump, i + 0.5 * delta * bump)
    return pert, base


def save_snapshots(states, out_dir, manifest: dict | None = None, every: int = 1) -> Path:
    """Write ``snap_XXXX.csv`` files (x, A, I) and ``manifest.json``."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    files = []
    for k, s in enumerate(states[::every]):
        path = out_dir / f"snap_{k:04d}.csv"
        np.savetxt(path, np.column_stack([s.x, s.A, s.I]), delimiter=",", header=f"x,A,I  t={s.t!r}",
                   fmt="%.17g")
        files.append({"file": path.name, "t": s.t})
    man = dict(manifest or {})
    man["snapshots"] = files
    path = out_dir / "manifest.json"
    path.write_text(json.dumps(man, indent=2))
    return path


def load_snapshots(out_dir) -> list[PdeState]:
    out_dir = Path(out_dir)
    man = json.loads((out_dir / "manifest.json").read_text())
    states = []
    for entry in man["snapshots"]:
        data = np.loadtxt(out_dir / entry["file"], delimiter=",", skiprows=1)
        states.append(PdeState(float(entry["t"]), data[:, 0], data[:, 1], data[:, 2]))
    return states
