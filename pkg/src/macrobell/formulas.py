"""Closed-form predictions for photon-number correlations vs analyzer angles.

These are the printed-model counterparts of the two numerical engines: the
mode-pairing NRF table, the NRF-vs-half-wave-plate curve, the normalized
variances of Stokes sums/differences under plate rotations, and the
witness optimum.  All take the end-to-end efficiency ``eta`` and the mean
photon number per mode ``n`` as parameters and angles in radians.

Port/angle conventions are recorded in :mod:`macrobell.curves`; in this
module every function is the bare formula.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Dict, Tuple, Union

import numpy as np

from .modes import BellStateKind, ModeId

__all__ = [
    "nrf_pairing",
    "nrf_hwp_curve",
    "hwp_variance_triplet",
    "qwp_variance_triplet",
    "hwp_variance_singlet",
    "witness_optimum",
    "CurveObservable",
    "CurveModel",
    "model_value",
    "curve_stats",
]

ArrayLike = Union[float, np.ndarray]


def _check_eta_n(eta: float, n: float) -> None:
    if not 0 <= eta <= 1:
        raise ValueError(f"eta must lie in [0, 1], got {eta}")
    if n < 0:
        raise ValueError(f"mean photon number must be >= 0, got {n}")


def nrf_pairing(
    kind: BellStateKind, pairing: Tuple[ModeId, ModeId], eta: float, n: float
) -> float:
    """NRF of a cross-arm mode pair: 1 - eta when paired, 1 + n*eta when not.

    Phi states pair equal polarizations across the arms, Psi states pair
    orthogonal ones.

    Raises:
        ValueError: for a same-arm pairing (the table is cross-arm only).
    """
    _check_eta_n(eta, n)
    i, j = pairing
    if i.arm is j.arm:
        raise ValueError("pairing must be cross-arm")
    same_pol = i.pol is j.pol
    correlated = same_pol if not kind.is_psi else not same_pol
    return 1 - eta if correlated else 1 + n * eta


def nrf_hwp_curve(kind: BellStateKind, theta: ArrayLike, eta: float, n: float) -> ArrayLike:
    """NRF between the fixed-arm H port and the rotated arm's transmitted port.

    With the half wave plate in the second arm at ``theta``:

        singlet:  1 + eta [ (1+n) cos^2(2 theta) - 1 ]
        triplet:  1 + eta [ (1+n) sin^2(2 theta) - 1 ]

    At theta=0 the transmitted port carries H, which for the singlet is the
    uncorrelated partner (maximum) and for the triplet the correlated one
    (minimum).
    """
    _check_eta_n(eta, n)
    if kind is BellStateKind.PSI_MINUS:
        mod = np.cos(2 * np.asarray(theta, dtype=float)) ** 2
    elif kind is BellStateKind.PHI_MINUS:
        mod = np.sin(2 * np.asarray(theta, dtype=float)) ** 2
    else:
        raise ValueError(f"no printed NRF curve for {kind}")
    out = 1 + eta * ((1 + n) * mod - 1)
    return float(out) if np.isscalar(theta) else out


def hwp_variance_triplet(
    theta_a: ArrayLike, theta_b: ArrayLike, branch: int, eta: float, n: float
) -> ArrayLike:
    """Normalized Var(S^a +/- S^b) of the triplet under HWP rotations.

    1 + eta [ n + branch (1+n) cos 4(theta_a + theta_b) ], where each S is
    the port difference behind that arm's half wave plate.
    """
    _check_eta_n(eta, n)
    if branch not in (1, -1):
        raise ValueError("branch must be +1 or -1")
    arg = 4 * (np.asarray(theta_a, dtype=float) + np.asarray(theta_b, dtype=float))
    out = 1 + eta * (n + branch * (1 + n) * np.cos(arg))
    return float(out) if np.isscalar(theta_a) and np.isscalar(theta_b) else out


def qwp_variance_triplet(phi: ArrayLike, eta: float, n: float) -> ArrayLike:
    """Normalized variance of the circular-basis Stokes difference of the
    triplet while one quarter wave plate rotates.

    1 + n eta - (1+n) eta / 4 * [ 1 - 4 cos 2 phi - cos 4 phi ].

    Minimum 1 - eta at phi = pi/2, maximum 1 + eta(1+2n) at phi = 0.  See
    curves.PORT_CONVENTIONS for how this maps onto plate settings.
    """
    _check_eta_n(eta, n)
    p = np.asarray(phi, dtype=float)
    bracket = 1 - 4 * np.cos(2 * p) - np.cos(4 * p)
    out = 1 + n * eta - (1 + n) * eta / 4 * bracket
    return float(out) if np.isscalar(phi) else out


def hwp_variance_singlet(
    theta_a: ArrayLike, theta_b: ArrayLike, branch: int, eta: float, n: float
) -> ArrayLike:
    """Normalized Var(S^a +/- S^b) of the singlet under HWP rotations.

    1 + eta [ n -/+ (1+n) cos 4(theta_a - theta_b) ]; the modulation sign is
    opposite to the branch, so the sum branch (+1) is squeezed at equal
    angles and constant under common rotation (singlet invariance).
    """
    _check_eta_n(eta, n)
    if branch not in (1, -1):
        raise ValueError("branch must be +1 or -1")
    arg = 4 * (np.asarray(theta_a, dtype=float) - np.asarray(theta_b, dtype=float))
    out = 1 + eta * (n - branch * (1 + n) * np.cos(arg))
    return float(out) if np.isscalar(theta_a) and np.isscalar(theta_b) else out


def witness_optimum(kind: BellStateKind, eta: float, n: float = 0.0) -> float:
    """Witness left-hand side at optimal analyzer settings: 3(1 - eta).

    Each of the three variance terms reaches 1 - eta; the value is
    independent of the photon number (squeezing depends only on eta).
    """
    _check_eta_n(eta, n)
    del kind, n  # same optimum for every state family
    return 3 * (1 - eta)


class CurveObservable(enum.Enum):
    """Which measured curve a model describes."""

    NRF_HWP = "nrf_hwp"
    VAR_HWP_PAIR = "var_hwp_pair"
    VAR_QWP_TRIPLET = "var_qwp_triplet"


@dataclass(frozen=True)
class CurveModel:
    """A one-parameter angle scan of one of the closed-form curves.

    The scan angle is the formula's composite argument: the plate angle for
    the NRF curve, theta_a + theta_b for the triplet variance pair,
    theta_a - theta_b for the singlet, and the plate offset for the QWP
    curve.  ``branch`` selects the +/- combination where one exists.
    """

    kind: BellStateKind
    observable: CurveObservable
    branch: int = 1

    def __post_init__(self):
        if self.branch not in (1, -1):
            raise ValueError("branch must be +1 or -1")

    @property
    def label(self) -> str:
        b = "plus" if self.branch == 1 else "minus"
        if self.observable is CurveObservable.NRF_HWP:
            return f"nrf_hwp[{self.kind.value}]"
        if self.observable is CurveObservable.VAR_QWP_TRIPLET:
            return f"var_qwp[{self.kind.value}]"
        return f"var_hwp_{b}[{self.kind.value}]"


def model_value(model: CurveModel, angle: ArrayLike, eta: float, n: float) -> ArrayLike:
    """Evaluate a curve model at a scan angle (radians)."""
    if model.observable is CurveObservable.NRF_HWP:
        return nrf_hwp_curve(model.kind, angle, eta, n)
    if model.observable is CurveObservable.VAR_QWP_TRIPLET:
        if model.kind.is_psi:
            raise ValueError("the QWP variance curve is a triplet-state model")
        return qwp_variance_triplet(angle, eta, n)
    if model.kind is BellStateKind.PSI_MINUS:
        return hwp_variance_singlet(angle, 0.0, model.branch, eta, n)
    return hwp_variance_triplet(angle, 0.0, model.branch, eta, n)


def curve_stats(model: CurveModel, eta: float, n: float) -> Dict[str, float]:
    """Extremes of a curve over a full angle period and derived figures.

    Returns min, max, visibility (max-min)/(max+min) and the squeezing of
    the minimum in dB, -10 log10(min).
    """
    angles = np.linspace(0.0, np.pi, 721)  # 0.25 deg steps hit all extremes
    values = model_value(model, angles, eta, n)
    vmin = float(np.min(values))
    vmax = float(np.max(values))
    visibility = (vmax - vmin) / (vmax + vmin) if vmax + vmin > 0 else 0.0
    squeezing_db = -10 * math.log10(vmin) if vmin > 0 else math.inf
    return {
        "min": vmin,
        "max": vmax,
        "visibility": visibility,
        "squeezing_db": squeezing_db,
    }
