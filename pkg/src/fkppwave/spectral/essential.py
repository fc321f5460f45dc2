"""Boundaries of the essential spectrum and the a priori eigenvalue radius."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from ..model import DomainError, ModelParams
from .weight import WeightSpec

__all__ = [
    "BranchCurve",
    "OverstabilizationError",
    "SpectrumCurves",
    "energy_bound",
    "energy_bound_general",
    "essential_spectrum_curves",
]


class OverstabilizationError(DomainError):
    """The weight pushes a decaying spatial eigenvalue across the imaginary axis."""


@dataclass(frozen=True)
class BranchCurve:
    """The set ``Re sqrt(A + B lam) = beta`` of one spatial-eigenvalue branch.

    It is the parabola ``Re z = beta^2 - (Im z)^2 / (4 beta^2)`` in
    ``z = A + B lam``; for ``beta = 0`` it collapses to the half-line
    ``lam <= -A/B``.
    """

    A: float
    B: float
    beta: float

    def residual(self, lam) -> np.ndarray:
        """Defect of the implicit form ``Re z = 2 beta^2 - |z|``."""
        z = self.A + self.B * np.asarray(lam, dtype=complex)
        return z.real - (2.0 * self.beta**2 - np.abs(z))

    def closed_form_real(self, im) -> np.ndarray:
        im = np.asarray(im, dtype=float)
        if self.beta == 0.0:
            return np.where(im == 0.0, -self.A / self.B, np.nan)
        b2 = self.beta**2
        return (b2 - (self.B * im) ** 2 / (4.0 * b2) - self.A) / self.B

    def solve_real(self, im: float) -> float:
        """Root-find ``Re lam`` at fixed ``Im lam = im``."""
        B, A, beta = self.B, self.A, self.beta

        def f(x):
            return np.sqrt(complex(A + B * x, B * im)).real - beta

        hi = max(1.0, abs(A) / B + beta**2 / B + 1.0)
        while f(hi) <= 0:
            hi *= 2.0
        lo = -1.0 - abs(A) / B
        while f(lo) >= 0:
            lo *= 2.0
            if lo < -1e12:
                raise ValueError("no sign change")
        return brentq(f, lo, hi, xtol=1e-14, rtol=4 * np.finfo(float).eps, maxiter=500)


@dataclass
class SpectrumCurves:
    """Sampled boundary curves, keyed ``nu``, ``eta``, ``phi``, ``sigma``.

    ``nu`` and ``eta`` come from ``x -> +inf`` (upper and lower blocks), ``phi``
    and ``sigma`` from ``x -> -inf`` (lower and upper blocks).
    """

    curves: dict
    branches: dict
    closed_form_mismatch: dict
    omitted: dict = field(default_factory=dict)

    @property
    def sigma_nu(self):
        return self.curves["nu"]

    @property
    def sigma_eta(self):
        return self.curves["eta"]

    @property
    def sigma_phi(self):
        return self.curves["phi"]

    @property
    def sigma_sigma(self):
        return self.curves["sigma"]

    @property
    def max_real_part(self) -> dict:
        return {k: float(np.max(v.real)) if v.size else -np.inf for k, v in self.curves.items()}

    def rightmost(self) -> float:
        return max(self.max_real_part.values())

    def to_rows(self):
        """Rows ``(curve, Re lam, Im lam)`` for CSV output."""
        for name, pts in self.curves.items():
            for z in pts:
                yield name, float(z.real), float(z.imag)


def _branches(params: ModelParams, weight: WeightSpec, i_minus: float, i_plus: float) -> dict:
    c, d = params.c, params.d
    out = {}
    for name, alpha, i_lim, upper in (
        ("nu", weight.alpha_plus, i_plus, True),
        ("eta", weight.alpha_plus, i_plus, False),
        ("phi", weight.alpha_minus, i_minus, False),
        ("sigma", weight.alpha_minus, i_minus, True),
    ):
        if upper:
            # Re(alpha - c/2 +- sqrt(c^2/4 + lam + i - 1)) = 0
            A, B, beta = c * c / 4.0 + i_lim - 1.0, 1.0, c / 2.0 - alpha
        else:
            # Re(alpha - c/(2d) +- sqrt(c^2 + 4 d lam)/(2d)) = 0
            A, B, beta = c * c, 4.0 * d, c - 2.0 * d * alpha
        if beta < 0 or (beta == 0 and name != "nu"):
            which = "sigma_-" if upper else name + "_-"
            need = f"alpha_minus < c/2 = {c / 2:g}" if upper else f"alpha < c/(2d) = {c / (2 * d):g}"
            raise OverstabilizationError(f"alpha = {alpha} moves {which} across the imaginary axis; {need} required")
        out[name] = BranchCurve(A, B, abs(beta) if beta != 0 else 0.0)
    return out


def essential_spectrum_curves(
    params: ModelParams,
    weight: WeightSpec,
    i_minus: float,
    i_plus: float = 0.0,
    im_grid=None,
) -> SpectrumCurves:
    """Sample the four curves on which a limit spatial eigenvalue is imaginary.

    Each point is found by bracketing root-finding in ``Re lam`` at a fixed
    ``Im lam`` and then compared with the explicit parabola. With
    ``alpha_plus = c/2`` the ``nu`` curve degenerates to a half-line of the
    real axis, sampled at ``-A - |im_grid|``.

    Raises
    ------
    OverstabilizationError
        If ``alpha_minus >= c/2`` (``alpha_minus >= 1`` at ``c = 2``), so the
        decaying eigenvalue ``sigma_-`` also reaches the imaginary axis.
    """
    if params.d <= 0 or params.d >= 1:
        raise DomainError("essential spectrum curves are set up for d in (0, 1)")
    im_grid = np.linspace(-20.0, 20.0, 401) if im_grid is None else np.asarray(im_grid, dtype=float)
    branches = _branches(params, weight, i_minus, i_plus)
    curves, mismatch, omitted = {}, {}, {}
    for name, br in branches.items():
        if br.beta == 0.0:
            re = -br.A / br.B - np.unique(np.abs(im_grid))
            pts = re.astype(complex)
            curves[name] = pts
            mismatch[name] = float(np.max(np.abs(br.residual(pts)))) if pts.size else 0.0
            continue
        pts, bad = [], []
        for y in im_grid:
            try:
                pts.append(complex(br.solve_real(y), y))
            except (ValueError, RuntimeError):
                bad.append(float(y))
        if bad:
            warnings.warn(f"{name}: root finding failed at {len(bad)} grid points; omitted", RuntimeWarning)
        pts = np.array(pts, dtype=complex)
        curves[name] = pts
        omitted[name] = bad
        closed = br.closed_form_real(pts.imag)
        mismatch[name] = float(max(np.max(np.abs(closed - pts.real)), np.max(np.abs(br.residual(pts)))))
    return SpectrumCurves(curves, branches, mismatch, omitted)


def energy_bound_general(D, c_drift, M) -> tuple[float, float, float]:
    """Bounds ``Re lam <= max M_i`` and ``|Im lam| <= max(c_i sqrt(M_i/D_i) + M_i)``.

    Returns ``(re_bound, im_bound, radius)`` with
    ``radius = sqrt(2) * max(re_bound, im_bound)``. The imaginary bound needs
    every ``D_i > 0``; otherwise it is infinite.
    """
    D, cs, M = (np.asarray(v, dtype=float) for v in (D, c_drift, M))
    if not (D.shape == cs.shape == M.shape):
        raise ValueError("D, c_drift and M must have equal length")
    if np.any(D < 0) or np.any(cs < 0) or np.any(M < 0):
        raise DomainError("D_i, c_i and M_i must be non-negative")
    re_bound = float(np.max(M))
    if np.any(D == 0):
        im_bound = math.inf
    else:
        im_bound = float(np.max(cs * np.sqrt(M / D) + M))
    return re_bound, im_bound, math.sqrt(2.0) * max(re_bound, im_bound)


def energy_bound(params: ModelParams) -> float:
    """Radius ``sqrt(2) [(2 - 2d) sqrt((5 + r)/d) + 5 + r]`` for ``c = 2``, ``w = e^{-x}``."""
    d, r = params.d, params.r
    if not 0.0 < d < 1.0:
        raise DomainError(f"energy bound requires d in (0, 1), got {d}")
    if params.c != 2.0:
        raise DomainError("the explicit energy bound is derived for c = 2")
    return math.sqrt(2.0) * ((2.0 - 2.0 * d) * math.sqrt((5.0 + r) / d) + 5.0 + r)
