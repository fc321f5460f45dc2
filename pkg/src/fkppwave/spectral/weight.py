"""Exponential weights and the weighted linearization about a wave."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..model import DomainError, ModelParams

__all__ = [
    "LinearizationMatrix",
    "WeightSpec",
    "limit_matrix",
    "limit_spatial_eigenvalues",
    "weight_eval",
]


@dataclass(frozen=True)
class WeightSpec:
    """Weight ``w`` with ``w = e^{-alpha_plus x}`` for ``x >= 1`` and
    ``w = e^{-alpha_minus x}`` for ``x <= -1``.

    Inside ``(-1, 1)`` the exponent is blended with a quintic smoothstep, so
    ``log w = -x * alpha(x)`` is C2 and ``w(0) = 1``.
    """

    alpha_minus: float = 1.0
    alpha_plus: float = 1.0

    def __post_init__(self):
        if not 0.0 < self.alpha_minus <= 1.0:
            raise DomainError(f"alpha_minus must lie in (0, 1], got {self.alpha_minus}")
        if not self.alpha_plus > 0.0:
            raise DomainError(f"alpha_plus must be positive, got {self.alpha_plus}")

    @property
    def is_constant(self) -> bool:
        return self.alpha_minus == self.alpha_plus


def _smoothstep(t):
    t = np.clip(t, 0.0, 1.0)
    s = t * t * t * (10.0 + t * (-15.0 + 6.0 * t))
    ds = 30.0 * t * t * (1.0 - t) ** 2
    dds = 60.0 * t * (1.0 - t) * (1.0 - 2.0 * t)
    return s, ds, dds


def weight_eval(x, spec: WeightSpec):
    """Return ``(w, w'/w, w''/w)`` at ``x`` (scalar or array)."""
    x = np.asarray(x, dtype=float)
    am, ap = spec.alpha_minus, spec.alpha_plus
    s, ds, dds = _smoothstep((x + 1.0) / 2.0)
    jump = ap - am
    alpha = am + jump * s
    dalpha = jump * ds / 2.0
    ddalpha = jump * dds / 4.0
    g = -x * alpha
    dg = -alpha - x * dalpha
    ddg = -2.0 * dalpha - x * ddalpha
    w = np.exp(g)
    return w, dg, ddg + dg * dg


@dataclass
class LinearizationMatrix:
    """``M(x, lam)`` of the weighted eigenvalue problem written as ``U' = M U``
    with ``U = (u, u', v, v')``.

    ``M(x, lam) = M0(x) + lam * B``; ``xi_u`` and ``xi_v`` are the potentials
    ``2a + i - 1 - c w'/w - w''/w`` and ``-a - c w'/w - d w''/w``.
    """

    params: ModelParams
    weight: WeightSpec
    a_fn: object  # callable x -> a(x)
    i_fn: object  # callable x -> i(x)

    def __post_init__(self):
        if self.params.d <= 0:
            raise DomainError("the linearization needs d > 0")

    def potentials(self, x):
        a, i = self.a_fn(x), self.i_fn(x)
        _, q1, q2 = weight_eval(x, self.weight)
        c, d = self.params.c, self.params.d
        xi_u = 2 * a + i - 1.0 - c * q1 - q2
        xi_v = -a - c * q1 - d * q2
        return xi_u, xi_v

    def base(self, x: float) -> np.ndarray:
        """The ``lam``-independent part ``M0(x)``."""
        a, i = float(self.a_fn(x)), float(self.i_fn(x))
        _, q1, q2 = (float(v) for v in weight_eval(x, self.weight))
        return _matrix_parts(a, i, q1, q2, self.params)

    @staticmethod
    def lam_part(params: ModelParams) -> np.ndarray:
        B = np.zeros((4, 4))
        B[1, 0] = 1.0
        B[3, 2] = 1.0 / params.d
        return B

    def __call__(self, x: float, lam: complex) -> np.ndarray:
        return self.base(x) + lam * self.lam_part(self.params)


def _matrix_parts(a, i, q1, q2, params: ModelParams) -> np.ndarray:
    c, d, r = params.c, params.d, params.r
    xi_u = 2 * a + i - 1.0 - c * q1 - q2
    xi_v = -a - c * q1 - d * q2
    return np.array([
        [0.0, 1.0, 0.0, 0.0],
        [xi_u, -(c + 2 * q1), a, 0.0],
        [0.0, 0.0, 0.0, 1.0],
        [-(2 * a + i + r) / d, 0.0, xi_v / d, -(c + 2 * d * q1) / d],
    ])


def limit_matrix(side: int, lam: complex, i_limit: float, weight: WeightSpec, params: ModelParams) -> np.ndarray:
    """``M(+-inf, lam)``: ``a = 0``, ``i = i_limit``, ``w'/w = -alpha``, ``w''/w = alpha^2``.

    ``side`` is ``+1`` for ``x -> +inf`` and ``-1`` for ``x -> -inf``.
    """
    if params.d <= 0:
        raise DomainError("limit matrices are only defined for d > 0")
    if side not in (1, -1):
        raise ValueError("side must be +1 or -1")
    alpha = weight.alpha_plus if side > 0 else weight.alpha_minus
    M = _matrix_parts(0.0, i_limit, -alpha, alpha * alpha, params).astype(complex)
    M[1, 0] += lam
    M[3, 2] += lam / params.d
    return M


def limit_spatial_eigenvalues(lam, i_limit: float, alpha: float, params: ModelParams):
    """Closed-form eigenvalues of a limit matrix, principal square roots.

    Returns ``(upper_minus, upper_plus, lower_minus, lower_plus)``; the upper
    pair ``alpha - c/2 -+ sqrt(c^2/4 + lam + i - 1)`` belongs to ``(u, u')``, the
    lower pair ``alpha - c/(2d) -+ sqrt(c^2 + 4 d lam)/(2d)`` to ``(v, v')``.
    Broadcasts over ``lam``.
    """
    lam = np.asarray(lam, dtype=complex)
    c, d = params.c, params.d
    su = np.sqrt(c * c / 4.0 + lam + i_limit - 1.0)
    sl = np.sqrt(c * c + 4.0 * d * lam) / (2.0 * d)
    up0 = alpha - c / 2.0
    lo0 = alpha - c / (2.0 * d)
    return up0 - su, up0 + su, lo0 - sl, lo0 + sl
