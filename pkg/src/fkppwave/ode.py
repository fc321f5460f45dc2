"""Adaptive Dormand-Prince 5(4) integration with dense output and events."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

__all__ = [
    "Event",
    "IntegratorConfig",
    "Termination",
    "Trajectory",
    "integrate",
    "integrate_complex",
]

# Dormand-Prince tableau (Hairer, Norsett & Wanner, Table 5.2)
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_A_MAT = np.zeros((7, 7))
for _s, _row in enumerate(_A):
    _A_MAT[_s, : len(_row)] = _row
_B = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_E = _B - np.array([5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40])
# coefficients of the fourth-order continuous extension (dopri5 "contd5")
_D = np.array([
    -12715105075 / 11282082432, 0.0, 87487479700 / 32700410799, -10690763975 / 1880347072,
    701980252875 / 199316789632, -1453857185 / 822651844, 69997945 / 29380423,
])

_SAFETY = 0.9
_BETA = 0.04  # PI controller
_ALPHA = 0.2 - 0.75 * _BETA
_FAC_MIN, _FAC_MAX = 0.2, 10.0


class Termination(enum.Enum):
    REACHED_END = "ReachedEnd"
    EVENT = "Event"
    DIVERGED = "Diverged"
    STEP_BUDGET = "StepBudget"


@dataclass
class IntegratorConfig:
    rel_tol: float = 1e-9
    abs_tol: float = 1e-12
    max_step: float = np.inf
    max_steps: int = 100_000
    first_step: float | None = None
    divergence_radius: float = 1e6
    adaptive: bool = True  # fixed steps of size max_step when False

    def __post_init__(self):
        if self.rel_tol <= 0 or self.abs_tol <= 0:
            raise ValueError("tolerances must be positive")
        if self.max_steps < 1:
            raise ValueError("max_steps must be >= 1")
        if self.max_step <= 0:
            raise ValueError("max_step must be positive")
        if not self.adaptive and not np.isfinite(self.max_step):
            raise ValueError("fixed-step mode needs a finite max_step")


@dataclass
class Event:
    """Scalar function ``g(x, y)`` whose sign change is located.

    ``direction`` > 0 only counts increasing crossings, < 0 only decreasing.
    """

    fn: Callable[[float, np.ndarray], float]
    terminal: bool = True
    direction: int = 0
    name: str | None = None


@dataclass
class _Segment:
    x0: float
    h: float
    rcont: np.ndarray  # (5, n)

    def __call__(self, x):
        theta = (x - self.x0) / self.h
        theta1 = 1.0 - theta
        r = self.rcont
        return r[0] + theta * (r[1] + theta1 * (r[2] + theta * (r[3] + theta1 * r[4])))


@dataclass
class Trajectory:
    times: np.ndarray
    states: np.ndarray
    events: list = field(default_factory=list)  # (event id, x, state)
    termination: Termination = Termination.REACHED_END
    n_steps: int = 0
    segments: list = field(default_factory=list, repr=False)
    dense_fn: Callable | None = field(default=None, repr=False)

    @property
    def diverged(self) -> bool:
        return self.termination is Termination.DIVERGED

    @property
    def x_end(self) -> float:
        return float(self.times[-1])

    @property
    def y_end(self) -> np.ndarray:
        return self.states[-1]

    def __call__(self, x):
        """Dense-output evaluation; ``x`` scalar or array inside the integrated span."""
        if self.dense_fn is not None:
            return self.dense_fn(x)
        if not self.segments:
            raise ValueError("trajectory was integrated without dense output")
        sign = 1.0 if self.times[-1] >= self.times[0] else -1.0
        starts = sign * np.array([s.x0 for s in self.segments])
        xs = np.atleast_1d(np.asarray(x, dtype=float))
        lo, hi = sorted((self.times[0], self.times[-1]))
        if np.any(xs < lo - 1e-12) or np.any(xs > hi + 1e-12):
            raise ValueError("dense output requested outside the integrated span")
        idx = np.clip(np.searchsorted(starts, sign * xs, side="right") - 1, 0, len(starts) - 1)
        out = np.empty((xs.size,) + self.states.shape[1:], dtype=self.states.dtype)
        for k in np.unique(idx):
            sel = idx == k
            out[sel] = np.array([self.segments[k](v) for v in xs[sel]])
        return out[0] if np.ndim(x) == 0 else out


def _error_norm(err, y_old, y_new, cfg: IntegratorConfig) -> float:
    scale = cfg.abs_tol + cfg.rel_tol * np.maximum(np.abs(y_old), np.abs(y_new))
    return float(np.max(np.abs(err) / scale))


def _initial_step(f, x0, y0, f0, cfg: IntegratorConfig, span: float) -> float:
    # Hairer's starting-step heuristic
    scale = cfg.abs_tol + cfg.rel_tol * np.abs(y0)
    d0 = np.max(np.abs(y0) / scale)
    d1 = np.max(np.abs(f0) / scale)
    h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    h0 = min(h0, span, cfg.max_step)
    f1 = f(x0 + h0, y0 + h0 * f0)
    d2 = np.max(np.abs(f1 - f0) / scale) / h0
    if max(d1, d2) <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** 0.2
    return min(100 * h0, h1, span, cfg.max_step)


def _locate(event: Event, seg: _Segment, xa: float, xb: float, ga: float, tol: float = 1e-11):
    """Bisection on the dense interpolant; ``xa`` and ``xb`` may come in either order."""
    while abs(xb - xa) > tol:
        xm = 0.5 * (xa + xb)
        gm = event.fn(xm, seg(xm))
        if np.sign(gm) == np.sign(ga) and gm != 0:
            xa, ga = xm, gm
        else:
            xb = xm
    return xb


def _crossed(event: Event, g0: float, g1: float) -> bool:
    if not (np.isfinite(g0) and np.isfinite(g1)):
        return False
    up = g0 < 0 <= g1
    down = g0 > 0 >= g1
    if event.direction > 0:
        return up
    if event.direction < 0:
        return down
    return up or down


def integrate(
    field_fn: Callable[[float, np.ndarray], np.ndarray],
    y0,
    span: tuple[float, float],
    cfg: IntegratorConfig | None = None,
    events: Sequence[Event] = (),
    record: bool = True,
) -> Trajectory:
    """Integrate ``y' = field_fn(x, y)`` over ``span`` (``x1 < x0`` runs backwards).

    With ``record=False`` only the endpoints are kept and no dense output is
    stored, which keeps memory flat for large batched states.
    """
    cfg = cfg or IntegratorConfig()
    x0, x1 = float(span[0]), float(span[1])
    if x0 == x1:
        raise ValueError("empty integration span")
    y = np.array(y0, dtype=complex if np.iscomplexobj(y0) else float)
    if not np.all(np.isfinite(y)):
        raise ValueError("initial state must be finite")
    direction = 1.0 if x1 > x0 else -1.0
    length = abs(x1 - x0)

    x = x0
    k1 = np.asarray(field_fn(x, y))
    if cfg.adaptive:
        h = cfg.first_step or _initial_step(
            lambda s, v: field_fn(x0 + direction * s, v) * direction, 0.0, y, k1 * direction, cfg, length
        )
    else:
        h = cfg.max_step
    times, states, segments, hits = [x], [y.copy()], [], []
    gvals = [ev.fn(x, y) for ev in events]
    termination = Termination.REACHED_END
    err_prev = 1e-4
    n_steps = 0
    ks = np.empty((7,) + y.shape, dtype=y.dtype)

    while True:
        if n_steps >= cfg.max_steps:
            termination = Termination.STEP_BUDGET
            break
        remaining = (x1 - x) * direction
        if remaining <= 1e-14 * max(1.0, abs(x1)):
            break
        h = min(h, remaining, cfg.max_step)
        if h < 1e-14 * max(1.0, abs(x)):
            termination = Termination.DIVERGED
            break
        hs = h * direction

        ks[0] = k1
        for s in range(1, 7):
            ks[s] = field_fn(x + _C[s] * hs, y + hs * (_A_MAT[s, :s] @ ks[:s]))
        y_new = y + hs * (_B[:6] @ ks[:6])
        n_steps += 1
        if cfg.adaptive:
            err = _error_norm(hs * (_E @ ks), y, y_new, cfg)
            if not np.isfinite(err):
                h *= _FAC_MIN
                continue
            if err > 1.0:
                h *= max(_FAC_MIN, _SAFETY * err**-_ALPHA)
                continue
        else:
            err = 1.0

        rcont = None
        if record or events:
            dy = y_new - y
            r2 = hs * ks[0] - dy
            rcont = np.array([
                y,
                dy,
                r2,
                dy - hs * ks[6] - r2,
                hs * (_D @ ks),
            ])
        x_new = x + hs
        seg = _Segment(x, hs, rcont) if rcont is not None else None

        stop_at = None
        for idx, ev in enumerate(events):
            g1 = ev.fn(x_new, y_new)
            if _crossed(ev, gvals[idx], g1):
                xe = _locate(ev, seg, x, x_new, gvals[idx])
                ye = seg(xe)
                hits.append((ev.name if ev.name is not None else idx, xe, ye))
                if ev.terminal and (stop_at is None or (xe - stop_at[0]) * direction < 0):
                    stop_at = (xe, ye)
            gvals[idx] = g1
        if stop_at is not None:
            xe, ye = stop_at
            # keep only events up to the terminal one
            hits = [hv for hv in hits if (hv[1] - xe) * direction <= 0]
            if record:
                times.append(xe)
                states.append(ye)
                segments.append(seg)
            else:
                times, states = [x0, xe], [states[0], ye]
            x, y = xe, ye
            termination = Termination.EVENT
            break

        x, y = x_new, y_new
        k1 = ks[6].copy()
        if record:
            times.append(x)
            states.append(y.copy())
            segments.append(seg)
        if np.max(np.abs(y)) > cfg.divergence_radius or not np.all(np.isfinite(y)):
            termination = Termination.DIVERGED
            break
        if cfg.adaptive:
            fac = _SAFETY * err**-_ALPHA * err_prev**_BETA if err > 0 else _FAC_MAX
            h *= min(_FAC_MAX, max(_FAC_MIN, fac))
            err_prev = max(err, 1e-4)

    if not record and (len(times) == 1 or times[-1] != x):
        times, states = [x0, x], [states[0], y]
    return Trajectory(
        times=np.array(times),
        states=np.array(states),
        events=hits,
        termination=termination,
        n_steps=n_steps,
        segments=segments if record else [],
    )


def integrate_complex(
    field_fn: Callable[[float, np.ndarray], np.ndarray],
    y0,
    span: tuple[float, float],
    cfg: IntegratorConfig | None = None,
    events: Sequence[Event] = (),
    record: bool = True,
) -> Trajectory:
    """Complex-state variant; the state is integrated as interleaved real parts."""
    z0 = np.ascontiguousarray(y0, dtype=complex)
    shape = z0.shape

    def real_field(x, yr):
        z = np.ascontiguousarray(yr).view(complex).reshape(shape)
        return np.ascontiguousarray(field_fn(x, z), dtype=complex).reshape(-1).view(float)

    real_events = [
        Event(lambda x, yr, ev=ev: ev.fn(x, np.ascontiguousarray(yr).view(complex).reshape(shape)),
              ev.terminal, ev.direction, ev.name)
        for ev in events
    ]
    traj = integrate(real_field, z0.reshape(-1).view(float), span, cfg, real_events, record)
    n = traj.states.shape[0]
    states = np.ascontiguousarray(traj.states).view(complex).reshape((n,) + shape)
    hits = [(i, x, np.ascontiguousarray(y).view(complex).reshape(shape)) for i, x, y in traj.events]
    out = Trajectory(traj.times, states, hits, traj.termination, traj.n_steps)
    if traj.segments:
        out.segments = traj.segments

        def dense(x):
            yr = np.ascontiguousarray(traj(x))
            return yr.view(complex).reshape(np.shape(x) + shape)

        out.dense_fn = dense
    return out
