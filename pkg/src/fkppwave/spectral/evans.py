"""Evans function by continuous orthogonalization, contours and winding numbers.

The Evans function is evaluated as ``det[X_1 | X_2 | Y_1 | Y_2]`` at ``x = 0``
where the ``X`` span solutions of ``U' = M(x, lam) U`` decaying at ``-inf`` and
the ``Y`` those decaying at ``+inf``. Each two-dimensional frame is carried as
``U = Q R`` with ``Q' = (I - Q Q*) M Q``; ``log det R`` is integrated alongside,
with the sum of the limit eigenvalues subtracted so that nothing grows
exponentially. The initial frames come from closed-form, analytic-in-``lam``
bases of the limit eigenspaces, so ``E`` is analytic.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from ..model import DomainError, ModelParams
from ..ode import IntegratorConfig, Termination, integrate_complex
from .weight import WeightSpec, limit_matrix, limit_spatial_eigenvalues

__all__ = [
    "Contour",
    "EvansIntegrationError",
    "EvansResult",
    "EvansSystem",
    "RefinementNeededError",
    "SpectralRegionError",
    "consistent_splitting_dims",
    "evans_contour",
    "evans_function",
    "evans_values",
    "evans_winding",
    "planted_eigenvalue_system",
    "wave_evans_system",
    "wedge_contour",
    "winding_number",
]


class SpectralRegionError(DomainError):
    """``lam`` is not in the region of consistent splitting."""


class EvansIntegrationError(RuntimeError):
    """The frame integration failed (divergence or step budget)."""


class RefinementNeededError(RuntimeError):
    """Consecutive Evans values differ in argument by pi or more."""


@dataclass
class EvansSystem:
    """``M(x, lam) = base(x) + lam * lam_part`` with analytic limit bases.

    ``left_basis(lams)`` returns ``(V, mu_sum)`` with ``V`` of shape
    ``(n, 4, k1)`` spanning the unstable space of ``M(-inf, lam)`` and
    ``mu_sum`` the sum of the corresponding eigenvalues; ``right_basis`` does the
    same for the stable space at ``+inf``.
    """

    base: Callable[[float], np.ndarray]
    lam_part: np.ndarray
    limit_minus: np.ndarray
    limit_plus: np.ndarray
    left_basis: Callable
    right_basis: Callable
    k1: int = 2
    k2: int = 2
    label: str = ""

    def limit_matrices(self, lams: np.ndarray):
        lams = np.asarray(lams, dtype=complex)[:, None, None]
        return self.limit_minus + lams * self.lam_part, self.limit_plus + lams * self.lam_part


def consistent_splitting_dims(system: EvansSystem, lams, tol: float = 1e-9):
    """Count unstable eigenvalues at ``-inf`` and stable ones at ``+inf``.

    Returns ``(k1, k2, margin)`` arrays; ``margin`` is the smallest ``|Re mu|``
    over both limit matrices, zero on the essential spectrum.
    """
    lams = np.atleast_1d(np.asarray(lams, dtype=complex))
    Mm, Mp = system.limit_matrices(lams)
    em = np.linalg.eigvals(Mm).real
    ep = np.linalg.eigvals(Mp).real
    k1 = np.sum(em > tol, axis=1)
    k2 = np.sum(ep < -tol, axis=1)
    margin = np.minimum(np.min(np.abs(em), axis=1), np.min(np.abs(ep), axis=1))
    return k1, k2, margin


def wave_evans_system(profile, weight: WeightSpec | None = None) -> EvansSystem:
    """Evans system of the weighted linearization about ``profile``."""
    params: ModelParams = profile.params
    if params.d <= 0:
        raise DomainError("Evans function needs d > 0")
    weight = weight or WeightSpec(1.0, 1.0)
    c, d, r = params.c, params.d, params.r
    i_minus, i_plus = float(profile.i_minus), float(profile.i_plus)
    spline = profile.interpolant()
    x_lo, x_hi = float(profile.grid[0]), float(profile.grid[-1])
    from .weight import _matrix_parts, weight_eval  # local helpers

    def base(x: float) -> np.ndarray:
        xc = min(max(x, x_lo), x_hi)
        a, i = spline(xc)
        _, q1, q2 = weight_eval(x, weight)
        return _matrix_parts(float(a), float(i), float(q1), float(q2), params)

    B = np.zeros((4, 4))
    B[1, 0], B[3, 2] = 1.0, 1.0 / d
    lim_m = limit_matrix(-1, 0.0, i_minus, weight, params).real
    lim_p = limit_matrix(1, 0.0, i_plus, weight, params).real

    def left_basis(lams):
        # unstable at -inf: sigma_+ (upper) and phi_+ (lower)
        _, sig_p, phi_m, phi_p = limit_spatial_eigenvalues(lams, i_minus, weight.alpha_minus, params)
        n = sig_p.size
        V = np.zeros((n, 4, 2), dtype=complex)
        V[:, 2, 0] = 1.0
        V[:, 3, 0] = phi_p
        V[:, 0, 1] = d * (sig_p - phi_m)
        V[:, 1, 1] = d * sig_p * (sig_p - phi_m)
        V[:, 3, 1] = -(i_minus + r)
        return V, sig_p + phi_p

    def right_basis(lams):
        # stable at +inf: nu_- (upper) and eta_- (lower)
        nu_m, _, eta_m, eta_p = limit_spatial_eigenvalues(lams, i_plus, weight.alpha_plus, params)
        n = nu_m.size
        V = np.zeros((n, 4, 2), dtype=complex)
        V[:, 2, 0] = 1.0
        V[:, 3, 0] = eta_m
        V[:, 0, 1] = d * (nu_m - eta_p)
        V[:, 1, 1] = d * nu_m * (nu_m - eta_p)
        V[:, 3, 1] = -(i_plus + r)
        return V, nu_m + eta_m

    return EvansSystem(base, B, lim_m, lim_p, left_basis, right_basis,
                       label=f"wave c={c} d={d} r={r}")


def planted_eigenvalue_system(lam0: float = 1.0) -> EvansSystem:
    """Decoupled test system with exactly one eigenvalue ``lam0 > 0`` in ``Re lam > 0``.

    Upper block: ``lam u = u'' + 2 lam0 sech^2(sqrt(lam0) x) u``, a scaled
    Poschl-Teller well whose only bound state ``sech(sqrt(lam0) x)`` has
    eigenvalue ``lam0``; its essential spectrum is ``(-inf, 0]``. Lower block:
    ``lam v = v'' - v`` has no eigenvalues.
    """
    k0 = math.sqrt(lam0)

    def base(x: float) -> np.ndarray:
        # u'' = (lam - 2 lam0 sech^2(k0 x)) u reproduces sech'' = k0^2 sech - 2 k0^2 sech^3
        e = math.exp(-2.0 * abs(k0 * x))
        pot = 8.0 * lam0 * e / (1.0 + e) ** 2
        return np.array([
            [0.0, 1.0, 0.0, 0.0],
            [-pot, 0.0, 0.0, 0.0],
            [0.0, 0.0, 0.0, 1.0],
            [0.0, 0.0, 1.0, 0.0],
        ])

    B = np.zeros((4, 4))
    B[1, 0], B[3, 2] = 1.0, 1.0
    lim = base(1e6)

    def left_basis(lams):
        lams = np.asarray(lams, dtype=complex)
        su, sl = np.sqrt(lams), np.sqrt(lams + 1.0)
        V = np.zeros((lams.size, 4, 2), dtype=complex)
        V[:, 0, 0], V[:, 1, 0] = 1.0, su
        V[:, 2, 1], V[:, 3, 1] = 1.0, sl
        return V, su + sl

    def right_basis(lams):
        lams = np.asarray(lams, dtype=complex)
        su, sl = np.sqrt(lams), np.sqrt(lams + 1.0)
        V = np.zeros((lams.size, 4, 2), dtype=complex)
        V[:, 0, 0], V[:, 1, 0] = 1.0, -su
        V[:, 2, 1], V[:, 3, 1] = 1.0, -sl
        return V, -su - sl

    return EvansSystem(base, B, lim, lim, left_basis, right_basis, label=f"planted lam0={lam0}")


def _frame_rhs(system: EvansSystem, lams: np.ndarray, mu_sum: np.ndarray, k: int):
    B = system.lam_part
    lam_col = lams[:, None, None]

    def rhs(x, y):
        Q = y[:, : 4 * k].reshape(-1, 4, k)
        MQ = np.einsum("ij,njk->nik", system.base(x), Q) + lam_col * np.einsum("ij,njk->nik", B, Q)
        QhMQ = np.conj(np.swapaxes(Q, 1, 2)) @ MQ
        dQ = MQ - Q @ QhMQ
        ds = np.trace(QhMQ, axis1=1, axis2=2) - mu_sum
        return np.concatenate([dQ.reshape(len(lams), -1), ds[:, None]], axis=1)

    return rhs


def _integrate_frame(system, lams, V, mu_sum, span, cfg):
    Q0, R0 = np.linalg.qr(V)
    k = V.shape[2]
    det_r0 = np.prod(np.diagonal(R0, axis1=1, axis2=2), axis=1)
    y0 = np.concatenate([Q0.reshape(len(lams), -1), np.zeros((len(lams), 1), dtype=complex)], axis=1)
    traj = integrate_complex(_frame_rhs(system, lams, mu_sum, k), y0, span, cfg, record=False)
    if traj.termination is not Termination.REACHED_END:
        raise EvansIntegrationError(f"frame integration ended with {traj.termination.value}")
    y = traj.y_end
    return y[:, : 4 * k].reshape(-1, 4, k), y[:, -1], det_r0, traj.n_steps


def evans_values(
    system: EvansSystem,
    lams,
    L: float = 50.0,
    rel_tol: float = 1e-8,
    abs_tol: float = 1e-10,
    split_tol: float = 1e-9,
    max_steps: int = 200_000,
    rotate: tuple | None = None,
    chunk: int = 128,
):
    """Evans function at every ``lam`` (one batched integration per chunk).

    ``rotate`` optionally holds fixed ``(k1 x k1, k2 x k2)`` matrices applied to
    the initial bases, which rescales ``E`` by their determinants.

    Returns ``(values, dims)`` where ``dims`` is an ``(n, 2)`` array of ``(k1, k2)``.
    """
    lams = np.atleast_1d(np.asarray(lams, dtype=complex))
    k1, k2, margin = consistent_splitting_dims(system, lams, split_tol)
    bad = (k1 != system.k1) | (k2 != system.k2) | (margin <= split_tol)
    if np.any(bad):
        raise SpectralRegionError(
            f"consistent splitting fails at lam = {lams[bad][0]} "
            f"(k1={k1[bad][0]}, k2={k2[bad][0]})"
        )
    cfg = IntegratorConfig(rel_tol=rel_tol, abs_tol=abs_tol, max_steps=max_steps, divergence_radius=1e12)
    out = np.empty(lams.size, dtype=complex)
    for start in range(0, lams.size, chunk):
        sl = slice(start, start + chunk)
        lam = lams[sl]
        VX, muX = system.left_basis(lam)
        VY, muY = system.right_basis(lam)
        if rotate is not None:
            VX = VX @ rotate[0]
            VY = VY @ rotate[1]
        QX, sX, rX, _ = _integrate_frame(system, lam, VX, muX, (-L, 0.0), cfg)
        QY, sY, rY, _ = _integrate_frame(system, lam, VY, muY, (L, 0.0), cfg)
        det = np.linalg.det(np.concatenate([QX, QY], axis=2))
        out[sl] = det * rX * rY * np.exp(sX + sY)
    if not np.all(np.isfinite(out)):
        raise EvansIntegrationError("non-finite Evans value")
    return out, np.column_stack([k1, k2])


def evans_function(lam: complex, profile, weight: WeightSpec | None = None, L: float = 50.0, **kw) -> complex:
    """Evans function of the wave linearization at a single ``lam``."""
    _check_profile_span(profile, L)
    vals, _ = evans_values(wave_evans_system(profile, weight), [lam], L=L, **kw)
    return complex(vals[0])


def _check_profile_span(profile, L: float) -> None:
    if profile.grid[0] > -L + 1e-9 or profile.grid[-1] < L - 1e-9:
        raise DomainError(f"profile covers [{profile.grid[0]}, {profile.grid[-1]}], need [-{L}, {L}]")


# --- contours -------------------------------------------------------------


@dataclass
class Contour:
    """Closed piecewise contour parametrized by ``t`` in ``[0, n_pieces]``.

    Each piece maps ``s`` in ``[0, 1]`` to ``lam``; consecutive pieces share
    their end points and the last piece ends at the first point.
    """

    pieces: list
    weights: list
    label: str = ""

    def __call__(self, t):
        t = np.atleast_1d(np.asarray(t, dtype=float))
        n = len(self.pieces)
        k = np.clip(np.floor(t).astype(int), 0, n - 1)
        s = t - k
        out = np.empty(t.size, dtype=complex)
        for j in range(n):
            sel = k == j
            if np.any(sel):
                out[sel] = self.pieces[j](s[sel])
        return out

    def initial_params(self, n_points: int) -> np.ndarray:
        w = np.asarray(self.weights, dtype=float)
        counts = np.maximum(4, np.round(n_points * w / w.sum()).astype(int))
        ts = [j + np.arange(m) / m for j, m in enumerate(counts)]
        return np.concatenate(ts + [np.array([float(len(self.pieces))])])


def evans_contour(params: ModelParams | None = None, delta: float = 1e-3, R: float | None = None) -> Contour:
    """Boundary of ``{Re lam >= 0, delta <= |lam| <= R}``, counterclockwise.

    Pieces: outer arc from ``-iR`` to ``iR``, the segment down to ``i delta``,
    the inner arc through ``delta`` to ``-i delta`` and the segment down to
    ``-iR``. Segments are sampled geometrically in ``|lam|``.
    """
    if R is None:
        from .essential import energy_bound

        R = energy_bound(params)
    if not 0 < delta < R:
        raise ValueError("need 0 < delta < R")
    ratio = delta / R
    pieces = [
        lambda s: R * np.exp(1j * np.pi * (s - 0.5)),
        lambda s: 1j * R * ratio**s,
        lambda s: delta * np.exp(1j * np.pi * (0.5 - s)),
        lambda s: -1j * delta * ratio ** (-s),
    ]
    c = Contour(pieces, weights=[3.0, 2.0, 1.0, 2.0], label="P")
    c.R, c.delta = R, delta
    return c


def wedge_contour(delta0: float, delta1: float, height: float, eps: float) -> Contour:
    """Upper half of the strip ``-delta0 - delta1 |Im lam| <= Re lam <= 0``.

    Quadrilateral with corners ``i eps``, ``i height``, ``-delta0 - delta1 height
    + i height`` and ``-delta0 - delta1 eps + i eps``, counterclockwise; ``eps``
    keeps it off the half-line of essential spectrum on the negative axis.
    """
    corners = [1j * eps, 1j * height, complex(-delta0 - delta1 * height, height),
               complex(-delta0 - delta1 * eps, eps)]

    def seg(z0, z1):
        return lambda s: z0 + (z1 - z0) * s

    pieces = [seg(corners[k], corners[(k + 1) % 4]) for k in range(4)]
    lengths = [abs(corners[(k + 1) % 4] - corners[k]) for k in range(4)]
    return Contour(pieces, weights=lengths, label="wedge")


def winding_number(values, closed: bool = True, max_jump: float = np.pi):
    """Winding number about 0 from principal-branch argument increments.

    Returns ``(winding, closure_residual)``. With ``closed=True`` the first
    value is appended if the sequence is not already closed.
    """
    v = np.asarray(values, dtype=complex)
    if v.size < 2:
        raise ValueError("need at least two values")
    if np.any(v == 0):
        raise ValueError("a value is exactly zero; the winding number is undefined")
    if closed and v[-1] != v[0]:
        v = np.append(v, v[0])
    inc = np.angle(v[1:] / v[:-1])
    if np.any(np.abs(inc) >= max_jump):
        k = int(np.argmax(np.abs(inc)))
        raise RefinementNeededError(f"argument jump {inc[k]:.3f} between samples {k} and {k + 1}")
    total = float(np.sum(inc)) / (2 * np.pi)
    w = int(round(total))
    return w, abs(total - w) * 2 * np.pi


@dataclass
class EvansResult:
    contour: np.ndarray
    values: np.ndarray
    winding: int
    closure_residual: float
    dims: np.ndarray
    params_t: np.ndarray = field(repr=False, default=None)
    R: float = float("nan")
    delta: float = float("nan")
    L: float = 50.0
    refinements: int = 0
    max_arg_step: float = 0.0

    @property
    def min_modulus(self) -> float:
        return float(np.min(np.abs(self.values)))

    def verdict(self) -> dict:
        return {
            "winding": int(self.winding),
            "closure_residual": float(self.closure_residual),
            "R": float(self.R),
            "delta": float(self.delta),
            "L": float(self.L),
            "n_points": int(self.contour.size),
            "refinements": int(self.refinements),
            "max_arg_step": float(self.max_arg_step),
            "min_abs_E": self.min_modulus,
            "splitting_ok": bool(np.all(self.dims.sum(axis=1) == 4)),
        }

    def save(self, out_dir, stem: str = "evans") -> tuple[Path, Path]:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        csv_path = out_dir / f"{stem}_contour.csv"
        rows = np.column_stack([self.contour.real, self.contour.imag, self.values.real, self.values.imag])
        np.savetxt(csv_path, rows, delimiter=",", header="re_lambda,im_lambda,re_E,im_E", comments="", fmt="%.17g")
        json_path = out_dir / f"{stem}_verdict.json"
        json_path.write_text(json.dumps(self.verdict(), indent=2))
        return csv_path, json_path


def evans_winding(
    system: EvansSystem,
    contour: Contour,
    n_initial: int = 256,
    max_arg_step: float = np.pi / 6,
    max_rounds: int = 12,
    max_points: int = 8192,
    L: float = 50.0,
    **kw,
) -> EvansResult:
    """Evaluate ``E`` along ``contour`` with adaptive refinement, then wind.

    Intervals whose end values differ in argument by ``max_arg_step`` or more
    are bisected in the contour parameter until none remain.
    """
    ts = contour.initial_params(n_initial)
    lams = contour(ts)
    lams[-1] = lams[0]
    vals, dims = evans_values(system, lams[:-1], L=L, **kw)
    vals = np.append(vals, vals[0])
    dims = np.vstack([dims, dims[:1]])
    rounds = 0
    while True:
        steps = np.abs(np.angle(vals[1:] / vals[:-1]))
        bad = np.nonzero(steps >= max_arg_step)[0]
        if bad.size == 0 or rounds >= max_rounds or ts.size + bad.size > max_points:
            break
        t_new = 0.5 * (ts[bad] + ts[bad + 1])
        v_new, d_new = evans_values(system, contour(t_new), L=L, **kw)
        ts = np.insert(ts, bad + 1, t_new)
        vals = np.insert(vals, bad + 1, v_new)
        dims = np.insert(dims, bad + 1, d_new, axis=0)
        rounds += 1
    lams = contour(ts)
    lams[-1] = lams[0]
    winding, resid = winding_number(vals, closed=True)
    steps = np.abs(np.angle(vals[1:] / vals[:-1]))
    return EvansResult(
        contour=lams, values=vals, winding=winding, closure_residual=resid, dims=dims, params_t=ts,
        R=getattr(contour, "R", float("nan")), delta=getattr(contour, "delta", float("nan")),
        L=L, refinements=rounds, max_arg_step=float(np.max(steps)),
    )
