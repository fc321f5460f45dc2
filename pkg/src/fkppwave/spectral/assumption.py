"""Numerical check of the spectral-gap hypothesis on a wedge region."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..model import ModelParams
from .essential import energy_bound, essential_spectrum_curves
from .evans import EvansResult, evans_contour, evans_winding, wave_evans_system, wedge_contour
from .weight import WeightSpec

__all__ = ["AssumptionReport", "candidate_deltas", "check_assumption_region"]

EVIDENCE_NOTE = "numerical evidence, not proof"


@dataclass
class AssumptionReport:
    """Outcome for the region ``Re lam >= -delta0 - delta1 |Im lam|``.

    ``status`` is ``"pass"``, ``"assumption-violated"`` (a zero of the Evans
    function was found) or ``"margin-violated"`` (an essential-spectrum curve
    enters the region, so the candidate pair is inadmissible).
    """

    params: ModelParams
    delta0: float
    delta1: float
    winding_right: int
    winding_wedge: int | None
    essential_margin: float
    status: str
    note: str = EVIDENCE_NOTE
    details: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.status == "pass"

    def as_dict(self) -> dict:
        return {
            "params": self.params.as_dict(),
            "delta0": self.delta0,
            "delta1": self.delta1,
            "winding_right": self.winding_right,
            "winding_wedge": self.winding_wedge,
            "essential_margin": self.essential_margin,
            "status": self.status,
            "note": self.note,
            **self.details,
        }


def _essential_points(curves) -> np.ndarray:
    # the nu half-line touches the origin and is excluded from the wedge by a slit
    return np.concatenate([curves.curves[k] for k in ("eta", "phi", "sigma")])


def candidate_deltas(curves) -> tuple[float, float]:
    """Half the gap at ``Im lam = 0`` for ``delta0`` and half the smallest slope
    that keeps the sampled curves outside the wedge for ``delta1``."""
    pts = _essential_points(curves)
    delta0 = 0.5 * float(np.min(-pts.real))
    off = np.abs(pts.imag) > 1e-12
    slopes = (-pts.real[off] - delta0) / np.abs(pts.imag[off])
    delta1 = 0.5 * float(np.min(slopes)) if slopes.size else 1.0
    return delta0, delta1


def check_assumption_region(
    params: ModelParams,
    profile,
    delta0: float | None = None,
    delta1: float | None = None,
    alpha_minus: float = 0.5,
    right_result: EvansResult | None = None,
    wedge_eps: float = 0.05,
    n_initial: int = 256,
    L: float = 50.0,
) -> AssumptionReport:
    """Combine essential-spectrum margins with Evans winding numbers.

    The curves use the weight ``(alpha_minus, 1)``. The Evans function is
    evaluated with ``w = e^{-x}``: on ``Re lam >= 0`` inside the energy-bound
    radius (contour ``P``) and on the upper half of the strip
    ``-delta0 - delta1 |Im lam| <= Re lam <= 0`` at distance ``wedge_eps``
    above the real axis; the lower half follows by conjugate symmetry.
    Candidate ``(delta0, delta1)`` are derived from the curves when not given.
    """
    curves = essential_spectrum_curves(params, WeightSpec(alpha_minus, 1.0), profile.i_minus, profile.i_plus)
    if delta0 is None or delta1 is None:
        c0, c1 = candidate_deltas(curves)
        delta0 = c0 if delta0 is None else delta0
        delta1 = c1 if delta1 is None else delta1
    pts = _essential_points(curves)
    margin = float(np.min(-pts.real - delta0 - delta1 * np.abs(pts.imag)))

    system = wave_evans_system(profile, WeightSpec(1.0, 1.0))
    if right_result is None:
        right_result = evans_winding(system, evans_contour(params), n_initial=n_initial, L=L)
    details = {"right": right_result.verdict()}
    if right_result.winding != 0:
        return AssumptionReport(params, delta0, delta1, right_result.winding, None, margin,
                                "assumption-violated", details=details)
    if margin <= 0:
        return AssumptionReport(params, delta0, delta1, right_result.winding, None, margin,
                                "margin-violated", details=details)
    R = energy_bound(params)
    wedge = evans_winding(system, wedge_contour(delta0, delta1, R, wedge_eps), n_initial=n_initial, L=L)
    details["wedge"] = wedge.verdict()
    status = "pass" if wedge.winding == 0 else "assumption-violated"
    return AssumptionReport(params, delta0, delta1, right_result.winding, wedge.winding, margin, status,
                            details=details)
