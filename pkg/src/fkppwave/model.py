"""Wave ODE systems of the two-species FKPP growth model and their fixed points.

In the moving frame ``x = z - c t`` a traveling wave ``(a, i)`` solves

    a'' = -c a' - a + a (a + i)
    d i'' = -c i' - r a - a (a + i)

written as the first-order system ``S_d`` in ``(a, a', i, i')``. For ``d = 0``
the inactive equation degenerates to ``i' = -a (a + i + r) / c`` (system
``S_0`` in ``(a, a', i)``). Every point ``(0, 0, K, 0)`` is a fixed point.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "BifurcationError",
    "DomainError",
    "FixedPointSpectrum",
    "ModelParams",
    "WaveState",
    "fixed_point_spectrum",
    "jacobian_sd",
    "unstable_branch_direction",
    "vector_field_s0",
    "vector_field_sd",
]

DEGENERATE_K_TOL = 1e-9


class DomainError(ValueError):
    """Input outside the domain where an operation is defined."""


class BifurcationError(DomainError):
    """Fixed point sits at a bifurcation value of ``K``."""


@dataclass(frozen=True)
class ModelParams:
    """Wave speed ``c``, inactive diffusion ``d`` and branching rate ``r``."""

    c: float
    d: float
    r: float = 0.0

    def __post_init__(self):
        for name in ("c", "d", "r"):
            if not math.isfinite(getattr(self, name)):
                raise DomainError(f"{name} must be finite")
        if self.c <= 0:
            raise DomainError(f"wave speed c must be > 0, got {self.c}")
        if self.d < 0:
            raise DomainError(f"diffusion d must be >= 0, got {self.d}")
        if self.r < 0:
            raise DomainError(f"branching rate r must be >= 0, got {self.r}")

    @property
    def d_bound(self) -> float:
        """Upper bound ``min{1, 3c/2, c^2/(2(r+1))}`` on ``d`` for existence."""
        return min(1.0, 1.5 * self.c, self.c**2 / (2.0 * (self.r + 1.0)))

    @property
    def is_admissible(self) -> bool:
        return 0.0 < self.d < self.d_bound

    def admissibility_violation(self) -> str | None:
        """Name the violated bound, or ``None`` if admissible."""
        if self.d <= 0:
            return "d > 0 required"
        if self.d >= 1.0:
            return "d < 1 required"
        if self.d >= 1.5 * self.c:
            return "d < 3c/2 required"
        if self.d >= self.c**2 / (2.0 * (self.r + 1.0)):
            return "d < c^2/(2(r+1)) required"
        return None

    def as_dict(self) -> dict:
        return {"c": self.c, "d": self.d, "r": self.r}


@dataclass(frozen=True)
class WaveState:
    a: float
    a_prime: float
    i: float
    i_prime: float

    def __post_init__(self):
        if not all(math.isfinite(v) for v in self.as_array()):
            raise DomainError("wave state components must be finite")

    def as_array(self) -> np.ndarray:
        return np.array([self.a, self.a_prime, self.i, self.i_prime], dtype=float)

    @classmethod
    def from_array(cls, y) -> "WaveState":
        return cls(*(float(v) for v in y))


def _as_state(state, n: int) -> np.ndarray:
    y = state.as_array() if isinstance(state, WaveState) else np.asarray(state, dtype=float)
    if y.shape != (n,):
        raise DomainError(f"expected a state with {n} components, got shape {y.shape}")
    if not np.all(np.isfinite(y)):
        raise DomainError("non-finite state component")
    return y


def vector_field_sd(state, params: ModelParams) -> np.ndarray:
    """Right-hand side of the full wave system ``S_d`` (requires ``d > 0``)."""
    if params.d <= 0:
        raise DomainError("S_d requires d > 0; use vector_field_s0 for d = 0")
    a, b, i, j = _as_state(state, 4)
    reaction = a * (a + i)
    return np.array([
        b,
        reaction - a - params.c * b,
        j,
        -(params.c * j + params.r * a + reaction) / params.d,
    ])


def vector_field_s0(state3, params: ModelParams) -> np.ndarray:
    """Right-hand side of the reduced system ``S_0`` in ``(a, a', i)``."""
    a, b, i = _as_state(state3, 3)
    return np.array([
        b,
        a * (a + i) - a - params.c * b,
        -a * (a + i + params.r) / params.c,
    ])


def jacobian_sd(state, params: ModelParams) -> np.ndarray:
    a, _, i, _ = _as_state(state, 4)
    c, d, r = params.c, params.d, params.r
    return np.array([
        [0.0, 1.0, 0.0, 0.0],
        [2 * a + i - 1.0, -c, a, 0.0],
        [0.0, 0.0, 0.0, 1.0],
        [-(r + 2 * a + i) / d, 0.0, -a / d, -c / d],
    ])


@dataclass(frozen=True)
class FixedPointSpectrum:
    """Eigenpairs of the Jacobian of ``S_d`` at ``(0, 0, K, 0)``.

    ``eigvecs[k]`` is the eigenvector of ``lambdas[k]``, unit norm, with the
    sign fixed so that its first nonzero component among ``(a, i)`` is positive.
    """

    K: float
    lambdas: np.ndarray
    eigvecs: np.ndarray
    spiraling: bool


def _check_K(K: float, params: ModelParams) -> None:
    if not math.isfinite(K):
        raise DomainError("K must be finite")
    if params.d <= 0:
        raise DomainError("fixed-point spectrum of S_d needs d > 0")
    if abs(K - 1.0) < DEGENERATE_K_TOL:
        raise BifurcationError(f"bifurcation point K = 1 (got K = {K})")
    if abs(K - (1.0 - params.c**2 / 4.0)) < DEGENERATE_K_TOL:
        raise BifurcationError(f"bifurcation point K = 1 - c^2/4 (got K = {K})")


def _normalize(v: np.ndarray) -> np.ndarray:
    v = v / np.linalg.norm(v)
    # sign convention: first nonzero of the a- then i-component positive
    for k in (0, 2, 1, 3):
        if abs(v[k]) > 1e-14:
            pivot = v[k]
            break
    else:  # pragma: no cover - v has unit norm
        pivot = 1.0
    if np.iscomplexobj(v):
        return v * (abs(pivot) / pivot)
    return v if pivot > 0 else -v


def fixed_point_spectrum(K: float, params: ModelParams) -> FixedPointSpectrum:
    """Eigenvalues ``0, -c/d, -c/2 -+ sqrt(c^2/4 + K - 1)`` and eigenvectors."""
    _check_K(K, params)
    c, d, r = params.c, params.d, params.r
    disc = c * c / 4.0 + K - 1.0
    spiraling = disc < 0
    root = np.emath.sqrt(disc)
    lam3 = -c / 2.0 - root
    lam4 = -c / 2.0 + root
    lambdas = np.array([0.0, -c / d, lam3, lam4], dtype=complex if spiraling else float)

    e1 = np.array([0.0, 0.0, 1.0, 0.0])
    e2 = np.array([0.0, 0.0, -d / c, 1.0])
    vecs = [e1, e2]
    for lam in (lam3, lam4):
        # (c l + d l^2, l (c l + d l^2), -(K + r), -l (K + r)); fall back to the
        # unscaled form when c l + d l^2 vanishes
        scale = c * lam + d * lam * lam
        vecs.append(np.array([scale, lam * scale, -(K + r), -lam * (K + r)]))
    eigvecs = np.array([_normalize(np.asarray(v, dtype=lambdas.dtype)) for v in vecs])
    return FixedPointSpectrum(K=float(K), lambdas=lambdas, eigvecs=eigvecs, spiraling=spiraling)


def unstable_branch_direction(K: float, params: ModelParams) -> np.ndarray:
    """Unit eigenvector of the unstable eigenvalue with ``a > 0`` and ``i < 0``."""
    if K <= 1.0:
        raise DomainError(f"no unstable direction for K <= 1 (got K = {K})")
    spec = fixed_point_spectrum(K, params)
    return np.asarray(spec.eigvecs[3], dtype=float)
