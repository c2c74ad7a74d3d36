"""Exact truncated-Fock-basis reference engine for the four-mode states.

The state of one Schmidt cell is built directly from its amplitude law
``A(n, m) = sinh^n(g) / cosh^(n+2)(g) * (+/-1)^m`` on the kind's pairing
pattern, truncated at ``n <= n_max`` photons per arm.  Passive analyzer
unitaries are applied by exact multinomial re-expansion within each
photon-number sector; detection loss is binomial thinning of the photon
number distribution.

This engine is the small-scale oracle the Gaussian engine and the printed
closed forms are validated against.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Dict, Iterable, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.special import gammaln
from scipy.stats import binom

from .modes import (
    ARM_SLOTS,
    Arm,
    AnalyzerSetting,
    BellStateKind,
    ModeId,
    SourceParams,
    StokesMoments,
    assemble_stokes_moments,
    compose_analyzer,
    mode_index,
    nrf_from_moments,
    stokes_basis_plates,
)

__all__ = [
    "FockState",
    "NumberDistribution",
    "coefficient",
    "build_state",
    "tail_deficit",
    "min_nmax_for_deficit",
    "apply_arm_unitary",
    "number_distribution",
    "apply_loss",
    "moments",
    "nrf",
    "stokes_moments",
]

DEFAULT_N_MAX = 40

# Probability mass missing from a truncated state above which moment
# routines emit a warning.
DEFICIT_WARN = 1e-6


def _eta_vector(eta: Union[float, Sequence[float]]) -> np.ndarray:
    eta_arr = np.atleast_1d(np.asarray(eta, dtype=float))
    if eta_arr.size == 1:
        eta_arr = np.full(4, eta_arr[0])
    if eta_arr.shape != (4,):
        raise ValueError("eta must be a scalar or a length-4 sequence")
    if np.any(eta_arr < 0) or np.any(eta_arr > 1):
        raise ValueError(f"efficiencies must lie in [0, 1], got {eta_arr}")
    return eta_arr


@dataclass
class FockState:
    """Sparse four-mode state vector with truncation bookkeeping.

    ``occs[k]`` is the occupation tuple (n_aH, n_aV, n_bH, n_bV) carrying
    amplitude ``amps[k]``.  ``norm_deficit`` is the probability mass of the
    discarded tail, so sum(|amps|^2) + norm_deficit = 1.
    """

    occs: np.ndarray
    amps: np.ndarray
    n_max: int
    norm_deficit: float = 0.0

    def __post_init__(self):
        self.occs = np.asarray(self.occs, dtype=np.int32).reshape(-1, 4)
        self.amps = np.asarray(self.amps, dtype=complex).reshape(-1)
        if len(self.occs) != len(self.amps):
            raise ValueError("occupation and amplitude arrays differ in length")
        if len(self.occs) and self.occs.min() < 0:
            raise ValueError("occupation numbers must be >= 0")
        if len(self.occs):
            arm_tot = np.maximum(
                self.occs[:, 0] + self.occs[:, 1], self.occs[:, 2] + self.occs[:, 3]
            )
            if arm_tot.max() > self.n_max:
                raise ValueError("occupations exceed the per-arm truncation n_max")

    @property
    def amplitudes(self) -> Dict[Tuple[int, int, int, int], complex]:
        """Sparse map from occupation tuple to amplitude."""
        return {tuple(int(x) for x in o): complex(a) for o, a in zip(self.occs, self.amps)}

    def norm_squared(self) -> float:
        return float(np.sum(np.abs(self.amps) ** 2))

    @classmethod
    def from_amplitudes(
        cls,
        amplitudes: Dict[Tuple[int, int, int, int], complex],
        n_max: int,
        norm_deficit: float = 0.0,
    ) -> "FockState":
        occs = np.array(sorted(amplitudes), dtype=np.int32).reshape(-1, 4)
        amps = np.array([amplitudes[tuple(o)] for o in occs], dtype=complex)
        return cls(occs=occs, amps=amps, n_max=n_max, norm_deficit=norm_deficit)


@dataclass
class NumberDistribution:
    """Sparse joint photon-number distribution over the four modes."""

    occs: np.ndarray
    probs: np.ndarray
    deficit: float = 0.0

    def __post_init__(self):
        self.occs = np.asarray(self.occs, dtype=np.int32).reshape(-1, 4)
        self.probs = np.asarray(self.probs, dtype=float).reshape(-1)
        if len(self.occs) != len(self.probs):
            raise ValueError("occupation and probability arrays differ in length")
        if len(self.probs) and self.probs.min() < -1e-15:
            raise ValueError("probabilities must be >= 0")

    @property
    def as_dict(self) -> Dict[Tuple[int, int, int, int], float]:
        return {tuple(int(x) for x in o): float(p) for o, p in zip(self.occs, self.probs)}

    def total(self) -> float:
        return float(self.probs.sum())


def coefficient(kind: BellStateKind, n: int, m: int, gamma: float) -> complex:
    """Amplitude A(n, m) of the n-photon-per-arm, m-in-the-signed-pair term.

    A(n, m) = sinh^n(g) / cosh^(n+2)(g) * s^m with s = +/-1 by kind.
    """
    if not 0 <= m <= n:
        raise ValueError(f"need 0 <= m <= n, got n={n}, m={m}")
    if gamma < 0:
        raise ValueError(f"parametric gain must be >= 0, got {gamma}")
    if gamma == 0:
        base = 1.0 if n == 0 else 0.0
    else:
        base = math.exp(n * math.log(math.sinh(gamma)) - (n + 2) * math.log(math.cosh(gamma)))
    return complex(base * (kind.sign ** m))


def tail_deficit(gamma: float, n_max: int) -> float:
    """Probability mass above the per-arm truncation, in closed form.

    With t = tanh^2(g) the retained mass is (1-t)^2 * sum_{n<=N} (n+1) t^n,
    whose tail is t^(N+1) * ((N+2) - (N+1) t).
    """
    t = math.tanh(gamma) ** 2
    if t == 0.0:
        return 0.0
    return t ** (n_max + 1) * ((n_max + 2) - (n_max + 1) * t)


def min_nmax_for_deficit(gamma: float, target: float, cap: int = 160) -> int:
    """Smallest truncation whose analytic tail deficit is <= target."""
    n = 1
    while tail_deficit(gamma, n) > target and n < cap:
        n += 1
    return n


def build_state(kind: BellStateKind, params: SourceParams, n_max: int = DEFAULT_N_MAX) -> FockState:
    """Construct one Schmidt cell of the given state, truncated at n_max.

    Phi states occupy (n-m, m, n-m, m), Psi states (n-m, m, m, n-m); the
    amplitude is ``coefficient(kind, n, m, gamma)``.
    """
    if n_max < 0:
        raise ValueError(f"n_max must be >= 0, got {n_max}")
    gamma = params.gamma
    ns, ms = [], []
    for n in range(n_max + 1):
        ns.extend([n] * (n + 1))
        ms.extend(range(n + 1))
    n_arr = np.array(ns, dtype=np.int32)
    m_arr = np.array(ms, dtype=np.int32)
    if gamma == 0:
        base = np.where(n_arr == 0, 1.0, 0.0)
    else:
        base = np.exp(
            n_arr * math.log(math.sinh(gamma)) - (n_arr + 2) * math.log(math.cosh(gamma))
        )
    amps = base * (float(kind.sign) ** m_arr)
    if kind.is_psi:
        occs = np.column_stack([n_arr - m_arr, m_arr, m_arr, n_arr - m_arr])
    else:
        occs = np.column_stack([n_arr - m_arr, m_arr, n_arr - m_arr, m_arr])
    keep = base > 0
    return FockState(
        occs=occs[keep],
        amps=amps[keep],
        n_max=n_max,
        norm_deficit=tail_deficit(gamma, n_max),
    )


# ---------------------------------------------------------------------------
# Passive transformations

# Cache of per-photon-number-sector transformation matrices, keyed by the
# exact bytes of the 2x2 unitary.
_SECTOR_CACHE: Dict[bytes, Dict[int, np.ndarray]] = {}
_SECTOR_CACHE_LIMIT = 64


def _check_unitary(u: np.ndarray, tol: float = 1e-10) -> np.ndarray:
    u = np.asarray(u, dtype=complex)
    if u.shape != (2, 2):
        raise ValueError("arm unitary must be 2x2")
    if np.max(np.abs(u.conj().T @ u - np.eye(2))) > tol:
        raise ValueError("matrix is not unitary within tolerance")
    return u


def _sector_matrix(u: np.ndarray, s: int) -> np.ndarray:
    """(s+1)x(s+1) action of a 2-mode unitary on the s-photon sector.

    Row p, column k: amplitude of |p, s-p> in the image of |k, s-k> under
    the creation-operator map a_H^dag -> U00 a_H'^dag + U10 a_V'^dag,
    a_V^dag -> U01 a_H'^dag + U11 a_V'^dag.
    """
    key = u.tobytes()
    per_u = _SECTOR_CACHE.get(key)
    if per_u is None:
        if len(_SECTOR_CACHE) >= _SECTOR_CACHE_LIMIT:
            _SECTOR_CACHE.clear()
        per_u = _SECTOR_CACHE[key] = {}
    cached = per_u.get(s)
    if cached is not None:
        return cached

    # Binomial coefficient polynomials: powa[k] holds the coefficients of
    # (U10 + U00 x)^k, so powa[k][i] = C(k,i) U00^i U10^(k-i).
    powa = [np.array([1.0 + 0j])]
    powb = [np.array([1.0 + 0j])]
    fa = np.array([u[1, 0], u[0, 0]])
    fb = np.array([u[1, 1], u[0, 1]])
    for _ in range(s):
        powa.append(np.convolve(powa[-1], fa))
        powb.append(np.convolve(powb[-1], fb))

    lg = gammaln(np.arange(s + 2))
    t = np.empty((s + 1, s + 1), dtype=complex)
    p = np.arange(s + 1)
    norm_p = 0.5 * (lg[p + 1] + lg[s - p + 1])
    for k in range(s + 1):
        coeffs = np.convolve(powa[k], powb[s - k])
        t[:, k] = coeffs * np.exp(norm_p - 0.5 * (lg[k + 1] + lg[s - k + 1]))
    per_u[s] = t
    return t


def apply_arm_unitary(state: FockState, arm: Arm, u: np.ndarray) -> FockState:
    """Apply a passive 2x2 unitary to one arm's (H, V) mode pair.

    Photon number within the arm is conserved exactly, so the work splits
    into independent photon-number sectors; each sector is transformed by a
    cached multinomial re-expansion matrix.
    """
    u = _check_unitary(u)
    if len(state.amps) == 0:
        return FockState(state.occs.copy(), state.amps.copy(), state.n_max, state.norm_deficit)
    hi, vi = ARM_SLOTS[arm]
    oi, oj = ARM_SLOTS[Arm.B if arm is Arm.A else Arm.A]

    occs, amps = state.occs, state.amps
    sector = occs[:, hi] + occs[:, vi]
    order = np.lexsort((occs[:, hi], occs[:, oj], occs[:, oi], sector))
    occs_s, amps_s = occs[order], amps[order]
    sec_s = sector[order]

    group_key = occs_s[:, [oi, oj]]
    new_group = np.ones(len(occs_s), dtype=bool)
    if len(occs_s) > 1:
        new_group[1:] = (
            np.any(np.diff(group_key, axis=0) != 0, axis=1) | (np.diff(sec_s) != 0)
        )
    starts = np.flatnonzero(new_group)
    ends = np.append(starts[1:], len(occs_s))

    group_sec = sec_s[starts]
    out_rows = int(np.sum(group_sec + 1))
    out_occs = np.empty((out_rows, 4), dtype=np.int32)
    out_amps = np.empty(out_rows, dtype=complex)

    pos = 0
    for g0, g1, s in zip(starts, ends, group_sec):
        t = _sector_matrix(u, int(s))
        v = np.zeros(s + 1, dtype=complex)
        v[occs_s[g0:g1, hi]] = amps_s[g0:g1]
        w = t @ v
        block = slice(pos, pos + s + 1)
        out_occs[block, oi] = occs_s[g0, oi]
        out_occs[block, oj] = occs_s[g0, oj]
        out_occs[block, hi] = np.arange(s + 1)
        out_occs[block, vi] = s - np.arange(s + 1)
        out_amps[block] = w
        pos += s + 1

    keep = out_amps != 0
    return FockState(out_occs[keep], out_amps[keep], state.n_max, state.norm_deficit)


def number_distribution(state: FockState) -> NumberDistribution:
    """Photon-number measurement statistics, p = |amplitude|^2."""
    return NumberDistribution(
        occs=state.occs.copy(),
        probs=np.abs(state.amps) ** 2,
        deficit=state.norm_deficit,
    )


def _dedupe(occs: np.ndarray, probs: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    uniq, inverse = np.unique(occs, axis=0, return_inverse=True)
    summed = np.zeros(len(uniq))
    np.add.at(summed, inverse, probs)
    return uniq, summed


def apply_loss(dist: NumberDistribution, eta: Union[float, Sequence[float]]) -> NumberDistribution:
    """Independent binomial thinning of each mode at its efficiency.

    Exact for photon-number measurements behind a loss channel.  The
    support grows to all component-wise smaller occupations, so this is
    meant for small truncations; moment computations should prefer the
    analytic loss propagation in :func:`moments`.
    """
    eta4 = _eta_vector(eta)
    occs, probs = dist.occs, dist.probs
    for m in range(4):
        e = eta4[m]
        if e == 1.0:
            continue
        if e == 0.0:
            occs = occs.copy()
            occs[:, m] = 0
            occs, probs = _dedupe(occs, probs)
            continue
        n = occs[:, m]
        reps = n + 1
        idx = np.repeat(np.arange(len(n)), reps)
        offsets = np.repeat(np.cumsum(reps) - reps, reps)
        k = np.arange(reps.sum(), dtype=np.int64) - offsets
        pmf = binom.pmf(k, n[idx], e)
        occs = occs[idx]
        occs[:, m] = k
        probs = probs[idx] * pmf
        occs, probs = _dedupe(occs, probs)
    return NumberDistribution(occs=occs, probs=probs, deficit=dist.deficit)


def _loss_propagate(
    mean: np.ndarray, cov: np.ndarray, eta4: np.ndarray
) -> Tuple[np.ndarray, np.ndarray]:
    """Exact moments of a binomially thinned distribution."""
    mean_l = eta4 * mean
    cov_l = cov * np.outer(eta4, eta4)
    diag = eta4**2 * np.diag(cov) + eta4 * (1 - eta4) * mean
    np.fill_diagonal(cov_l, diag)
    return mean_l, cov_l


def moments(
    dist: NumberDistribution,
    eta: Optional[Union[float, Sequence[float]]] = None,
) -> Tuple[np.ndarray, np.ndarray]:
    """Mean vector and covariance matrix of the four mode numbers.

    When ``eta`` is given the returned moments are those after binomial
    thinning at the per-mode efficiencies, computed by the exact
    propagation identities (identical to materializing :func:`apply_loss`
    first).
    """
    if dist.deficit > DEFICIT_WARN:
        warnings.warn(
            f"truncation deficit {dist.deficit:.3g} exceeds {DEFICIT_WARN:g}; "
            "moments are biased low",
            stacklevel=2,
        )
    occf = dist.occs.astype(float)
    mean = dist.probs @ occf
    second = occf.T @ (occf * dist.probs[:, None])
    cov = second - np.outer(mean, mean)
    if eta is not None:
        mean, cov = _loss_propagate(mean, cov, _eta_vector(eta))
    return mean, cov


def nrf(
    dist: NumberDistribution,
    i: ModeId,
    j: ModeId,
    eta: Optional[Union[float, Sequence[float]]] = None,
) -> float:
    """Noise reduction factor Var(N_i - N_j)/<N_i + N_j> of two modes."""
    mean, cov = moments(dist, eta=eta)
    return nrf_from_moments(mean, cov, mode_index(i), mode_index(j))


def stokes_moments(
    state: FockState,
    settings: Iterable[AnalyzerSetting] = (),
    eta: Union[float, Sequence[float]] = 1.0,
    schmidt_modes: int = 1,
) -> StokesMoments:
    """All measurable Stokes means/covariances of the analyzed state.

    The supplied analyzer settings are applied first (at most one stack per
    arm, composed in order); each Stokes component is then read out through
    its own basis plates, detection loss acts at the prism ports, and
    moments of a pulse of ``schmidt_modes`` independent cells are returned.
    """
    eta4 = _eta_vector(eta)
    if schmidt_modes < 1:
        raise ValueError("schmidt_modes must be >= 1")

    base = state
    for setting in settings:
        base = apply_arm_unitary(base, setting.arm, compose_analyzer(setting))

    def basis_unitary(index: int, arm: Arm) -> Optional[np.ndarray]:
        plates = stokes_basis_plates(index, arm)
        if not plates:
            return None
        return compose_analyzer(AnalyzerSetting(arm=arm, plates=plates))

    a_rotated: Dict[int, FockState] = {}
    joint_cache: Dict[Tuple[int, int], Tuple[np.ndarray, np.ndarray]] = {}

    def basis_id(index: int) -> int:
        return 0 if index in (0, 1) else index

    def port_moments(i: int, j: int) -> Tuple[np.ndarray, np.ndarray]:
        bi, bj = basis_id(i), basis_id(j)
        cached = joint_cache.get((bi, bj))
        if cached is None:
            if bi not in a_rotated:
                ua = basis_unitary(bi, Arm.A)
                a_rotated[bi] = base if ua is None else apply_arm_unitary(base, Arm.A, ua)
            st = a_rotated[bi]
            ub = basis_unitary(bj, Arm.B)
            if ub is not None:
                st = apply_arm_unitary(st, Arm.B, ub)
            mean, cov = moments(number_distribution(st), eta=eta4)
            cached = joint_cache[(bi, bj)] = (
                mean * schmidt_modes,
                cov * schmidt_modes,
            )
        return cached

    return assemble_stokes_moments(port_moments, truncation_deficit=state.norm_deficit)
