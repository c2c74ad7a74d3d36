"""Scalable Gaussian moment engine for the four-mode states.

One Schmidt cell is a zero-mean Gaussian state, fully described by its
normal correlators N_ij = <a_i^dag a_j> and anomalous correlators
M_ij = <a_i a_j>.  Each state is a product of two two-mode squeezers, so
building it, transforming it through plates and loss, and extracting
photon-number moments are all closed-form matrix operations; results are
exact, not approximations, and must match the Fock oracle to rounding.

Moment factorization used throughout (zero-mean Gaussian Wick rule):

    <N_i>         = N_ii
    Var(N_i)      = N_ii (1 + N_ii) + |M_ii|^2
    Cov(N_i, N_j) = |N_ij|^2 + |M_ij|^2      (i != j)
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Dict, Iterable, Optional, Sequence, Tuple, Union

import numpy as np

from .modes import (
    ARM_SLOTS,
    Arm,
    AnalyzerSetting,
    BellStateKind,
    SourceParams,
    StokesMoments,
    assemble_stokes_moments,
    compose_analyzer,
    mode_index,
    stokes_basis_plates,
)

__all__ = [
    "GaussianState",
    "build_gaussian",
    "apply_passive",
    "apply_loss",
    "photon_moments",
    "stokes_moments",
]


@dataclass
class GaussianState:
    """Second-moment description of the four canonical modes.

    Attributes:
        normal: 4x4 Hermitian matrix N_ij = <a_i^dag a_j>.
        anomalous: 4x4 symmetric matrix M_ij = <a_i a_j>.
    """

    normal: np.ndarray
    anomalous: np.ndarray

    def __post_init__(self):
        self.normal = np.asarray(self.normal, dtype=complex).reshape(4, 4)
        self.anomalous = np.asarray(self.anomalous, dtype=complex).reshape(4, 4)

    def validate(self, tol: float = 1e-10) -> None:
        """Check hermiticity, symmetry and the bosonic uncertainty bound.

        Physicality is the positive semidefiniteness of the extended
        correlation (Gram) matrix of (a, a^dag), which for the stored
        blocks reads [[I + N^T, M], [conj(M), N]].

        Raises:
            ValueError: if any structural or physicality check fails.
        """
        n, m = self.normal, self.anomalous
        if np.max(np.abs(n - n.conj().T)) > tol:
            raise ValueError("normal correlator block is not Hermitian")
        if np.max(np.abs(m - m.T)) > tol:
            raise ValueError("anomalous correlator block is not symmetric")
        if np.min(np.diag(n).real) < -tol:
            raise ValueError("mode occupations must be >= 0")
        gram = np.block([[np.eye(4) + n.T, m], [m.conj(), n]])
        if np.min(np.linalg.eigvalsh(gram)) < -tol:
            raise ValueError("correlators violate the bosonic uncertainty bound")

    def copy(self) -> "GaussianState":
        return GaussianState(self.normal.copy(), self.anomalous.copy())


def build_gaussian(kind: BellStateKind, params: SourceParams) -> GaussianState:
    """Correlators of one Schmidt cell of the given state.

    Every mode is thermal with occupation sinh^2(g); the anomalous block
    carries +/- sinh(g) cosh(g) on the kind's two cross-arm pairs, the sign
    landing on the pair whose photon count the kind's (+/-1)^m alternation
    indexes (the V-side pair).  Verified against the Fock oracle.
    """
    g = params.gamma
    n_mean = math.sinh(g) ** 2
    lam = math.sinh(g) * math.cosh(g)
    normal = np.eye(4, dtype=complex) * n_mean
    anomalous = np.zeros((4, 4), dtype=complex)
    (plus_pair, signed_pair) = kind.paired_modes()
    for pair, sign in ((plus_pair, 1.0), (signed_pair, float(kind.sign))):
        i, j = mode_index(pair[0]), mode_index(pair[1])
        anomalous[i, j] = sign * lam
        anomalous[j, i] = sign * lam
    return GaussianState(normal, anomalous)


def _embed(u: np.ndarray, arm: Arm) -> np.ndarray:
    w = np.eye(4, dtype=complex)
    hi, vi = ARM_SLOTS[arm]
    idx = np.ix_((hi, vi), (hi, vi))
    w[idx] = u
    return w


def apply_passive(state: GaussianState, arm: Arm, u: np.ndarray) -> GaussianState:
    """Transform the correlators under a passive 2x2 unitary on one arm.

    With W the 4x4 block embedding of U and the creation-operator
    convention a_i^dag -> sum_j U_ji a_j^dag (the Fock engine's), the
    correlators map as N -> conj(W) N W^T and M -> W M W^T.
    """
    u = np.asarray(u, dtype=complex)
    if u.shape != (2, 2) or np.max(np.abs(u.conj().T @ u - np.eye(2))) > 1e-10:
        raise ValueError("arm transformation must be a 2x2 unitary")
    w = _embed(u, arm)
    return GaussianState(
        normal=w.conj() @ state.normal @ w.T,
        anomalous=w @ state.anomalous @ w.T,
    )


def apply_loss(state: GaussianState, eta: Union[float, Sequence[float]]) -> GaussianState:
    """Scale correlators for independent per-mode loss at efficiencies eta."""
    eta_arr = np.atleast_1d(np.asarray(eta, dtype=float))
    if eta_arr.size == 1:
        eta_arr = np.full(4, eta_arr[0])
    if eta_arr.shape != (4,) or np.any(eta_arr < 0) or np.any(eta_arr > 1):
        raise ValueError("eta must be a scalar or 4 values in [0, 1]")
    root = np.sqrt(eta_arr)
    scale = np.outer(root, root)
    return GaussianState(state.normal * scale, state.anomalous * scale)


def photon_moments(
    state: GaussianState, schmidt_modes: int = 1
) -> Tuple[np.ndarray, np.ndarray]:
    """Mean vector and covariance matrix of the four mode photon numbers.

    For a pulse of ``schmidt_modes`` independent cells both scale linearly.
    """
    if schmidt_modes < 1:
        raise ValueError("schmidt_modes must be >= 1")
    n, m = state.normal, state.anomalous
    mean = np.diag(n).real.copy()
    cov = np.abs(n) ** 2 + np.abs(m) ** 2
    np.fill_diagonal(cov, mean * (1 + mean) + np.abs(np.diag(m)) ** 2)
    return mean * schmidt_modes, cov * schmidt_modes


def stokes_moments(
    state: GaussianState,
    settings: Iterable[AnalyzerSetting] = (),
    eta: Union[float, Sequence[float]] = 1.0,
    schmidt_modes: int = 1,
) -> StokesMoments:
    """Stokes means/covariances, mirroring the Fock engine's contract.

    User analyzer settings first, then per-component basis plates, then
    detection loss at the ports; entries scale with the cell count.
    """
    base = state
    for setting in settings:
        base = apply_passive(base, setting.arm, compose_analyzer(setting))

    rotated_a: Dict[int, GaussianState] = {}
    joint_cache: Dict[Tuple[int, int], Tuple[np.ndarray, np.ndarray]] = {}

    def basis_id(index: int) -> int:
        return 0 if index in (0, 1) else index

    def basis_unitary(index: int, arm: Arm) -> Optional[np.ndarray]:
        plates = stokes_basis_plates(index, arm)
        if not plates:
            return None
        return compose_analyzer(AnalyzerSetting(arm=arm, plates=plates))

    def port_moments(i: int, j: int) -> Tuple[np.ndarray, np.ndarray]:
        bi, bj = basis_id(i), basis_id(j)
        cached = joint_cache.get((bi, bj))
        if cached is None:
            if bi not in rotated_a:
                ua = basis_unitary(bi, Arm.A)
                rotated_a[bi] = base if ua is None else apply_passive(base, Arm.A, ua)
            st = rotated_a[bi]
            ub = basis_unitary(bj, Arm.B)
            if ub is not None:
                st = apply_passive(st, Arm.B, ub)
            mean, cov = photon_moments(apply_loss(st, eta), schmidt_modes=schmidt_modes)
            cached = joint_cache[(bi, bj)] = (mean, cov)
        return cached

    return assemble_stokes_moments(port_moments)
