"""Mode labels, wave-plate conventions and Stokes-operator bookkeeping.

The four canonical modes are the polarization modes H, V of two frequency
arms: arm A (635 nm) and arm B (805 nm), ordered (A,H), (A,V), (B,H), (B,V).

Conventions fixed here and relied on by every engine:

* Jones matrices act on (H, V) field amplitudes, ``v -> U v``.
* ``HWP(theta) = [[cos 2t, sin 2t], [sin 2t, -cos 2t]]`` (fast axis at angle
  ``theta`` from H).
* ``QWP(phi) = R(phi) diag(1, i) R(-phi)`` with ``R`` the real rotation.
* A polarizing prism after the plates transmits H and reflects V; the
  measured Stokes value of a port pair is ``n_t - n_r`` and the total is
  ``n_t + n_r``.
* Stokes operators per arm: S0 = N_H + N_V, S1 = N_H - N_V,
  S2 = port difference after HWP(22.5 deg), S3 = port difference after
  QWP(45 deg) (operator identity -i(a_H^dag a_V - a_V^dag a_H)).

Angles are radians everywhere in the library; the CLI converts degrees.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable, Dict, Iterable, Sequence, Tuple

import numpy as np

__all__ = [
    "Arm",
    "Pol",
    "ModeId",
    "MODE_ORDER",
    "mode_index",
    "BellStateKind",
    "SourceParams",
    "PlateKind",
    "WavePlate",
    "AnalyzerSetting",
    "jones_matrix",
    "jones_half",
    "jones_quarter",
    "compose_analyzer",
    "stokes_from_port_numbers",
    "stokes_basis_plates",
    "StokesMoments",
    "assemble_stokes_moments",
    "nrf_from_moments",
]


class Arm(enum.Enum):
    """Frequency arm: A is the 635 nm beam, B the 805 nm beam."""

    A = "a"
    B = "b"


class Pol(enum.Enum):
    H = "H"
    V = "V"


@dataclass(frozen=True)
class ModeId:
    """One of the four canonical polarization-frequency modes."""

    arm: Arm
    pol: Pol

    def __str__(self) -> str:
        return f"{self.arm.value}{self.pol.value}"


# Canonical total ordering of the four modes. All engines index arrays this way.
MODE_ORDER: Tuple[ModeId, ...] = (
    ModeId(Arm.A, Pol.H),
    ModeId(Arm.A, Pol.V),
    ModeId(Arm.B, Pol.H),
    ModeId(Arm.B, Pol.V),
)

_MODE_INDEX = {m: i for i, m in enumerate(MODE_ORDER)}

# Array slots of (H, V) for each arm, in MODE_ORDER indexing.
ARM_SLOTS = {Arm.A: (0, 1), Arm.B: (2, 3)}


def mode_index(mode: ModeId) -> int:
    """Position of ``mode`` in the canonical four-mode ordering."""
    return _MODE_INDEX[mode]


class BellStateKind(enum.Enum):
    """The four macroscopic Bell states.

    Phi states pair equal polarizations across the arms, Psi states pair
    orthogonal polarizations.  The sign is the (+/-1)^m alternation of the
    amplitude on the second squeezed pair.
    """

    PHI_PLUS = "phi_plus"
    PHI_MINUS = "phi_minus"
    PSI_PLUS = "psi_plus"
    PSI_MINUS = "psi_minus"

    @property
    def is_psi(self) -> bool:
        return self in (BellStateKind.PSI_PLUS, BellStateKind.PSI_MINUS)

    @property
    def sign(self) -> int:
        """The +/-1 factor raised to the V-photon count m."""
        if self in (BellStateKind.PHI_PLUS, BellStateKind.PSI_PLUS):
            return 1
        return -1

    def paired_modes(self) -> Tuple[Tuple[ModeId, ModeId], Tuple[ModeId, ModeId]]:
        """The two cross-arm mode pairs carrying perfect number correlation.

        The first pair holds n-m photons (amplitude sign +1), the second
        holds m photons and carries the kind's sign.
        """
        ah, av, bh, bv = MODE_ORDER
        if self.is_psi:
            return ((ah, bv), (av, bh))
        return ((ah, bh), (av, bv))


@dataclass(frozen=True)
class SourceParams:
    """Source strength: parametric gain and number of Schmidt cells.

    ``gamma`` is the dimensionless parametric gain; the mean photon number
    per mode of a single cell is sinh(gamma)^2.  A pulse consists of
    ``schmidt_modes`` independent identical four-mode cells.
    """

    gamma: float
    schmidt_modes: int = 1

    def __post_init__(self):
        if self.gamma < 0:
            raise ValueError(f"parametric gain must be >= 0, got {self.gamma}")
        if self.schmidt_modes < 1:
            raise ValueError(f"schmidt_modes must be >= 1, got {self.schmidt_modes}")

    @property
    def n_mean(self) -> float:
        """Mean photon number per mode of one cell, sinh(gamma)^2."""
        return math.sinh(self.gamma) ** 2

    @classmethod
    def from_mean_photons(cls, n_mean: float, schmidt_modes: int = 1) -> "SourceParams":
        if n_mean < 0:
            raise ValueError(f"mean photon number must be >= 0, got {n_mean}")
        return cls(gamma=math.asinh(math.sqrt(n_mean)), schmidt_modes=schmidt_modes)


class PlateKind(enum.Enum):
    HALF = "half"
    QUARTER = "quarter"


@dataclass(frozen=True)
class WavePlate:
    """A half or quarter wave plate with fast axis at ``angle`` from H.

    The angle is reduced modulo pi (a plate is invariant under a half turn).
    """

    kind: PlateKind
    angle: float
    arm: Arm

    def __post_init__(self):
        object.__setattr__(self, "angle", float(self.angle) % math.pi)

    @staticmethod
    def half(angle: float, arm: Arm) -> "WavePlate":
        return WavePlate(PlateKind.HALF, angle, arm)

    @staticmethod
    def quarter(angle: float, arm: Arm) -> "WavePlate":
        return WavePlate(PlateKind.QUARTER, angle, arm)


def jones_half(theta: float) -> np.ndarray:
    """Jones matrix of a half wave plate at angle ``theta``."""
    c, s = math.cos(2 * theta), math.sin(2 * theta)
    return np.array([[c, s], [s, -c]], dtype=complex)


def jones_quarter(phi: float) -> np.ndarray:
    """Jones matrix of a quarter wave plate at angle ``phi``.

    R(phi) diag(1, i) R(-phi); at phi=0 the fast axis lies along H.
    """
    c, s = math.cos(phi), math.sin(phi)
    rot = np.array([[c, -s], [s, c]])
    return rot @ np.diag([1.0, 1.0j]) @ rot.T


def jones_matrix(plate: WavePlate) -> np.ndarray:
    """2x2 unitary of a single plate acting on (H, V) amplitudes."""
    if plate.kind is PlateKind.HALF:
        return jones_half(plate.angle)
    return jones_quarter(plate.angle)


@dataclass(frozen=True)
class AnalyzerSetting:
    """Ordered plate stack in front of one arm's polarizing prism.

    Plates are listed light-propagation-first.  The prism transmits H and
    reflects V in the basis reached after all plates.
    """

    arm: Arm
    plates: Tuple[WavePlate, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "plates", tuple(self.plates))


def compose_analyzer(setting: AnalyzerSetting) -> np.ndarray:
    """Combined Jones matrix of an analyzer's plate stack.

    Raises:
        ValueError: if any plate is labelled for a different arm.
    """
    u = np.eye(2, dtype=complex)
    for plate in setting.plates:
        if plate.arm is not setting.arm:
            raise ValueError(
                f"plate on arm {plate.arm.value} inside a setting for arm "
                f"{setting.arm.value}"
            )
        u = jones_matrix(plate) @ u
    return u


def stokes_from_port_numbers(n_transmit: float, n_reflect: float) -> Tuple[float, float]:
    """Map prism port counts to (total, Stokes value) = (n_t + n_r, n_t - n_r)."""
    if n_transmit < 0 or n_reflect < 0:
        raise ValueError("port counts must be >= 0")
    return n_transmit + n_reflect, n_transmit - n_reflect


def stokes_basis_plates(index: int, arm: Arm) -> Tuple[WavePlate, ...]:
    """Plates that bring Stokes component ``index`` onto the prism ports.

    S0 and S1 need no plates; S2 uses HWP(22.5 deg); S3 uses QWP(45 deg).
    """
    if index in (0, 1):
        return ()
    if index == 2:
        return (WavePlate.half(math.pi / 8, arm),)
    if index == 3:
        return (WavePlate.quarter(math.pi / 4, arm),)
    raise ValueError(f"Stokes index must be 0..3, got {index}")


@dataclass
class StokesMoments:
    """First and second moments of the per-arm Stokes observables.

    All values are in photon-number units (variances in photons squared).

    Attributes:
        mean: ``{(arm, i): <S_i^arm>}`` for i = 0..3.
        var: ``{(arm, i): Var(S_i^arm)}``.
        cross: ``{(i, j): Cov(S_i^a, S_j^b)}`` for all 16 cross-arm pairs.
        s0_cov: ``{(arm, i): Cov(S_0^arm, S_i^arm)}`` for i = 1..3 (S0
            commutes with every S_i of its arm, so these are measurable).
        truncation_deficit: probability mass lost to Fock truncation (0 for
            the Gaussian engine).

    Same-arm covariances between different i, j >= 1 are intentionally
    absent: those operators do not commute and are not jointly measurable
    by a plate-plus-prism setting.
    """

    mean: Dict[Tuple[Arm, int], float] = field(default_factory=dict)
    var: Dict[Tuple[Arm, int], float] = field(default_factory=dict)
    cross: Dict[Tuple[int, int], float] = field(default_factory=dict)
    s0_cov: Dict[Tuple[Arm, int], float] = field(default_factory=dict)
    truncation_deficit: float = 0.0

    @property
    def normalization(self) -> float:
        """<S0^a + S0^b>."""
        return self.mean[(Arm.A, 0)] + self.mean[(Arm.B, 0)]

    def var_combination(self, index: int, sign: int) -> float:
        """Var(S_i^a + sign * S_i^b) for sign in {+1, -1}."""
        if sign not in (1, -1):
            raise ValueError("sign must be +1 or -1")
        return (
            self.var[(Arm.A, index)]
            + self.var[(Arm.B, index)]
            + 2 * sign * self.cross[(index, index)]
        )

    def entries(self) -> Dict[str, float]:
        """Flat, canonically keyed view of every stored moment."""
        out: Dict[str, float] = {}
        for (arm, i), v in sorted(self.mean.items(), key=str):
            out[f"mean_s{i}_{arm.value}"] = v
        for (arm, i), v in sorted(self.var.items(), key=str):
            out[f"var_s{i}_{arm.value}"] = v
        for (i, j), v in sorted(self.cross.items()):
            out[f"cov_s{i}a_s{j}b"] = v
        for (arm, i), v in sorted(self.s0_cov.items(), key=str):
            out[f"cov_s0_s{i}_{arm.value}"] = v
        return out


PortMomentsFn = Callable[[int, int], Tuple[np.ndarray, np.ndarray]]


def assemble_stokes_moments(
    port_moments: PortMomentsFn, truncation_deficit: float = 0.0
) -> StokesMoments:
    """Build a StokesMoments table from an engine's port-moment callable.

    ``port_moments(i, j)`` must return ``(mean, cov)`` of the four port
    numbers (a_t, a_r, b_t, b_r) with arm A analyzed in Stokes basis ``i``
    and arm B in basis ``j``.  Engines are expected to cache internally,
    since bases 0 and 1 share a plate setting.
    """
    sm = StokesMoments(truncation_deficit=truncation_deficit)

    def port_sign(i: int) -> int:
        return 1 if i == 0 else -1

    for i in range(4):
        for j in range(4):
            mean, cov = port_moments(i, j)
            si, sj = port_sign(i), port_sign(j)
            if j == 0:  # arm-A entries, read off once per i
                sm.mean[(Arm.A, i)] = mean[0] + si * mean[1]
                sm.var[(Arm.A, i)] = cov[0, 0] + cov[1, 1] + 2 * si * cov[0, 1]
                if i >= 1:
                    # Cov(n_t + n_r, n_t - n_r) = Var(n_t) - Var(n_r)
                    sm.s0_cov[(Arm.A, i)] = cov[0, 0] - cov[1, 1]
            if i == 0:  # arm-B entries
                sm.mean[(Arm.B, j)] = mean[2] + sj * mean[3]
                sm.var[(Arm.B, j)] = cov[2, 2] + cov[3, 3] + 2 * sj * cov[2, 3]
                if j >= 1:
                    sm.s0_cov[(Arm.B, j)] = cov[2, 2] - cov[3, 3]
            sm.cross[(i, j)] = (
                cov[0, 2] + sj * cov[0, 3] + si * cov[1, 2] + si * sj * cov[1, 3]
            )
    return sm


def nrf_from_moments(
    mean: np.ndarray, cov: np.ndarray, i: int, j: int
) -> float:
    """Noise reduction factor Var(N_i - N_j) / <N_i + N_j> from moments.

    Raises:
        ValueError: if the mean photon-number sum vanishes (0/0 has no
            physical reading).
    """
    denom = mean[i] + mean[j]
    if denom <= 0:
        raise ValueError("NRF undefined: <N_i + N_j> is zero")
    return (cov[i, i] + cov[j, j] - 2 * cov[i, j]) / denom
