"""Engine-backed evaluation of the analyzer-rotation curves.

This module owns the mapping between the closed-form curve models and a
physical realization (plate settings, ports, estimator combination), so
the formulas, both engines and the Monte-Carlo sweep all describe the same
measurement.  The convention notes below are emitted into CSV headers.
"""

from __future__ import annotations

import math
from typing import Dict, Sequence, Tuple, Union

import numpy as np

from . import fock, gaussian
from .formulas import CurveModel, CurveObservable, model_value
from .modes import (
    AnalyzerSetting,
    Arm,
    SourceParams,
    WavePlate,
    compose_analyzer,
    nrf_from_moments,
)

__all__ = [
    "PORT_NAMES",
    "PORT_CONVENTIONS",
    "convention_note",
    "model_settings",
    "model_estimator",
    "closed_form_value",
    "fock_value",
    "gaussian_value",
]

# Detector ports in canonical order: arm A transmit/reflect, arm B
# transmit/reflect.  After the analyzer these carry modes AH, AV, BH, BV.
PORT_NAMES: Tuple[str, ...] = ("a_t", "a_r", "b_t", "b_r")

PORT_CONVENTIONS: Dict[CurveObservable, str] = {
    CurveObservable.NRF_HWP: (
        "NRF(a_t, b_t) with the 805 nm HWP at the scan angle (from H); "
        "the reflected-port variant is the same curve shifted by 45 deg "
        "(cosine and sine swap)."
    ),
    CurveObservable.VAR_HWP_PAIR: (
        "normalized Var of the sum/difference of per-arm port differences "
        "behind one HWP per arm; scan angle = theta_a + theta_b for the "
        "triplet and theta_a - theta_b for the singlet, realized with "
        "theta_a = 0 and the 805 nm plate at the scan angle."
    ),
    CurveObservable.VAR_QWP_TRIPLET: (
        "normalized Var of the circular-basis Stokes difference; 635 nm QWP "
        "fixed at 45 deg, 805 nm QWP at (scan angle - 45 deg). Extremes "
        "match the printed fit curve (max at 0, min at 90 deg); between "
        "them the engines give 1 + eta[n + (1+n) cos 2*angle] while the "
        "printed curve mixes a second harmonic no ideal analyzer pair "
        "reproduces - engine columns are authoritative there."
    ),
}


def convention_note(model: CurveModel) -> str:
    return PORT_CONVENTIONS[model.observable]


def model_settings(model: CurveModel, angle: float) -> Tuple[AnalyzerSetting, ...]:
    """Plate settings that realize a curve model at one scan angle."""
    if model.observable is CurveObservable.NRF_HWP:
        return (
            AnalyzerSetting(Arm.B, (WavePlate.half(angle, Arm.B),)),
        )
    if model.observable is CurveObservable.VAR_HWP_PAIR:
        # theta_a = 0 contributes no port mixing, so arm A needs no plate;
        # for the singlet cos 4(theta_a - theta_b) is even in the angle.
        return (
            AnalyzerSetting(Arm.B, (WavePlate.half(angle, Arm.B),)),
        )
    if model.observable is CurveObservable.VAR_QWP_TRIPLET:
        return (
            AnalyzerSetting(Arm.A, (WavePlate.quarter(math.pi / 4, Arm.A),)),
            AnalyzerSetting(Arm.B, (WavePlate.quarter(angle - math.pi / 4, Arm.B),)),
        )
    raise ValueError(f"unknown observable {model.observable}")


def model_estimator(model: CurveModel) -> Tuple[str, Union[Tuple[str, str], int]]:
    """What to estimate from port counts for a curve model.

    Returns ("nrf", (port_i, port_j)) or ("var", sign) where sign is the
    +/-1 combination of the two arms' port differences.
    """
    if model.observable is CurveObservable.NRF_HWP:
        return ("nrf", ("a_t", "b_t"))
    if model.observable is CurveObservable.VAR_HWP_PAIR:
        return ("var", model.branch)
    return ("var", -1)


def closed_form_value(model: CurveModel, angle: float, eta: float, n: float) -> float:
    """Printed-formula value at a scan angle."""
    return float(model_value(model, angle, eta, n))


def _port_stats_from_moments(
    mean: np.ndarray, cov: np.ndarray, estimator
) -> float:
    kind, arg = estimator
    if kind == "nrf":
        idx = {name: i for i, name in enumerate(PORT_NAMES)}
        return nrf_from_moments(mean, cov, idx[arg[0]], idx[arg[1]])
    sign = arg
    # D_a = n0 - n1, D_b = n2 - n3; value = Var(D_a + sign D_b)/<sum ports>
    w = np.array([1.0, -1.0, sign, -sign])
    var = w @ cov @ w
    total = mean.sum()
    if total <= 0:
        raise ValueError("variance curve undefined: no detected photons")
    return float(var / total)


def fock_value(
    model: CurveModel,
    angle: float,
    params: SourceParams,
    eta: Union[float, Sequence[float]],
    n_max: int = fock.DEFAULT_N_MAX,
) -> float:
    """Fock-oracle value of a curve model at one scan angle."""
    state = fock.build_state(model.kind, params, n_max=n_max)
    for setting in model_settings(model, angle):
        state = fock.apply_arm_unitary(state, setting.arm, compose_analyzer(setting))
    mean, cov = fock.moments(fock.number_distribution(state), eta=eta)
    return _port_stats_from_moments(mean, cov, model_estimator(model))


def gaussian_value(
    model: CurveModel,
    angle: float,
    params: SourceParams,
    eta: Union[float, Sequence[float]],
) -> float:
    """Gaussian-engine value of a curve model at one scan angle."""
    state = gaussian.build_gaussian(model.kind, params)
    for setting in model_settings(model, angle):
        state = gaussian.apply_passive(state, setting.arm, compose_analyzer(setting))
    mean, cov = gaussian.photon_moments(gaussian.apply_loss(state, eta))
    return _port_stats_from_moments(mean, cov, model_estimator(model))
