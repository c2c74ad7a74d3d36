"""Pulse-level simulation of the photodetection pipeline.

Each pulse carries ``schmidt_modes`` independent copies of the four-mode
cell; per pulse the sampler draws that many occupation tuples from the
exact analyzed cell distribution, sums them per mode, applies binomial
detection loss per port and (optionally) rounded Gaussian electronic
noise.  Estimators then recover NRF and normalized Stokes variances with
bootstrap errors, and a Poissonian calibration run pins the shot-noise
level the same way the balanced-detection reference measurement does.

Sampling is deterministic for a fixed seed: pulses are partitioned into
fixed-size chunks, each chunk gets an independently derived random stream,
and chunk outputs land in preallocated slices, so thread count and
execution order cannot change the result.
"""

from __future__ import annotations

import csv
import io
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np
from numpy.random import SeedSequence, default_rng

from . import curves, fock
from .formulas import CurveModel
from .modes import AnalyzerSetting, Arm, BellStateKind, SourceParams, compose_analyzer, stokes_basis_plates

__all__ = [
    "PulseRecord",
    "NrfEstimate",
    "SweepPoint",
    "sample_pulses",
    "sample_witness_records",
    "snl_calibrate",
    "estimate_nrf",
    "estimate_normalized_variance",
    "sweep_curve",
    "records_to_counts",
    "write_records_csv",
    "read_records_csv",
    "write_sweep_csv",
    "read_sweep_csv",
    "RECORD_HEADER",
    "SWEEP_HEADER",
]

RECORD_HEADER = ("setting_id", "a_t", "a_r", "b_t", "b_r")
SWEEP_HEADER = ("angle_deg", "value", "std_err", "pulses")

# Pulses per independent random stream; fixed so that results do not
# depend on how chunks are scheduled across workers.
_CHUNK = 2048

# Maximum tolerated truncation deficit of the cached cell distribution.
_DEFICIT_LIMIT = 1e-9


@dataclass(frozen=True, slots=True)
class PulseRecord:
    """Detected photon numbers at the four analyzer ports for one pulse."""

    setting_id: str
    a_t: int
    a_r: int
    b_t: int
    b_r: int

    @property
    def counts(self) -> Tuple[int, int, int, int]:
        return (self.a_t, self.a_r, self.b_t, self.b_r)


@dataclass(frozen=True)
class NrfEstimate:
    """A sampled correlation estimate with its bootstrap standard error."""

    value: float
    std_err: float
    pulses: int


@dataclass(frozen=True)
class SweepPoint:
    angle_deg: float
    value: float
    std_err: float
    pulses: int


def _eta_vector(eta: Union[float, Sequence[float]]) -> np.ndarray:
    arr = np.atleast_1d(np.asarray(eta, dtype=float))
    if arr.size == 1:
        arr = np.full(4, arr[0])
    if arr.shape != (4,) or np.any(arr < 0) or np.any(arr > 1):
        raise ValueError("eta must be a scalar or 4 port efficiencies in [0, 1]")
    return arr


def _cell_distribution(
    kind: BellStateKind,
    params: SourceParams,
    settings: Iterable[AnalyzerSetting],
    n_max: int,
) -> Tuple[np.ndarray, np.ndarray]:
    """Analyzed single-cell occupations and their cumulative probabilities."""
    state = fock.build_state(kind, params, n_max=n_max)
    for setting in settings:
        state = fock.apply_arm_unitary(state, setting.arm, compose_analyzer(setting))
    dist = fock.number_distribution(state)
    if dist.deficit > _DEFICIT_LIMIT:
        raise ValueError(
            f"truncation deficit {dist.deficit:.3g} exceeds {_DEFICIT_LIMIT:g}; "
            "raise n_max"
        )
    probs = dist.probs / dist.probs.sum()
    return dist.occs.astype(np.int16), np.cumsum(probs)


def _sample_counts(
    occs: np.ndarray,
    cdf: np.ndarray,
    cells: int,
    eta4: np.ndarray,
    noise_sd: float,
    pulses: int,
    seed: Union[int, SeedSequence],
    workers: int = 1,
) -> np.ndarray:
    """Port counts for ``pulses`` pulses, shape (pulses, 4)."""
    root = seed if isinstance(seed, SeedSequence) else SeedSequence(seed)
    n_chunks = max(1, -(-pulses // _CHUNK))
    children = root.spawn(n_chunks)
    out = np.empty((pulses, 4), dtype=np.int64)

    def run_chunk(c: int) -> None:
        lo = c * _CHUNK
        hi = min(lo + _CHUNK, pulses)
        rng = default_rng(children[c])
        draws = rng.random((hi - lo) * cells)
        idx = np.searchsorted(cdf, draws, side="right")
        block = np.empty((hi - lo, 4), dtype=np.int64)
        for m in range(4):
            block[:, m] = occs[idx, m].reshape(hi - lo, cells).sum(axis=1)
        for m in range(4):
            if eta4[m] < 1.0:
                block[:, m] = rng.binomial(block[:, m], eta4[m])
        if noise_sd > 0:
            noise = np.rint(rng.normal(0.0, noise_sd, size=block.shape)).astype(np.int64)
            block = np.maximum(block + noise, 0)
        out[lo:hi] = block

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(run_chunk, range(n_chunks)))
    else:
        for c in range(n_chunks):
            run_chunk(c)
    return out


def sample_pulses(
    kind: BellStateKind,
    params: SourceParams,
    settings: Iterable[AnalyzerSetting] = (),
    eta: Union[float, Sequence[float]] = 1.0,
    electronic_noise_sd: float = 0.0,
    pulses: int = 1,
    seed: Union[int, SeedSequence] = 0,
    n_max: int = fock.DEFAULT_N_MAX,
    setting_id: str = "custom",
    workers: int = 1,
) -> List[PulseRecord]:
    """Simulate detected pulse records for one analyzer setting.

    Per pulse: ``params.schmidt_modes`` cells are drawn from the exact
    analyzed cell distribution, summed per mode, binomially thinned at the
    per-port efficiencies and optionally smeared by rounded zero-mean
    Gaussian electronic noise (clamped at zero counts).
    """
    if pulses < 1:
        raise ValueError(f"pulses must be >= 1, got {pulses}")
    if electronic_noise_sd < 0:
        raise ValueError("electronic_noise_sd must be >= 0")
    eta4 = _eta_vector(eta)
    occs, cdf = _cell_distribution(kind, params, settings, n_max)
    counts = _sample_counts(
        occs, cdf, params.schmidt_modes, eta4, electronic_noise_sd, pulses, seed, workers
    )
    return [
        PulseRecord(setting_id, int(a), int(b), int(c), int(d))
        for a, b, c, d in counts
    ]


WITNESS_SETTING_IDS = ("s1", "s2", "s3")


def witness_setting_plates(index: int) -> Tuple[AnalyzerSetting, AnalyzerSetting]:
    """Both arms analyzed in Stokes basis ``index`` (1, 2 or 3)."""
    return (
        AnalyzerSetting(Arm.A, stokes_basis_plates(index, Arm.A)),
        AnalyzerSetting(Arm.B, stokes_basis_plates(index, Arm.B)),
    )


def sample_witness_records(
    kind: BellStateKind,
    params: SourceParams,
    eta: Union[float, Sequence[float]] = 1.0,
    pulses: int = 10_000,
    seed: Union[int, SeedSequence] = 0,
    electronic_noise_sd: float = 0.0,
    n_max: int = fock.DEFAULT_N_MAX,
    workers: int = 1,
) -> List[PulseRecord]:
    """Pulse records for the three witness settings s1, s2, s3."""
    root = seed if isinstance(seed, SeedSequence) else SeedSequence(seed)
    children = root.spawn(3)
    records: List[PulseRecord] = []
    for i, sid in enumerate(WITNESS_SETTING_IDS):
        records.extend(
            sample_pulses(
                kind,
                params,
                settings=witness_setting_plates(i + 1),
                eta=eta,
                electronic_noise_sd=electronic_noise_sd,
                pulses=pulses,
                seed=children[i],
                n_max=n_max,
                setting_id=sid,
                workers=workers,
            )
        )
    return records


def snl_calibrate(
    mean_photons_per_pulse: float, pulses: int, seed: Union[int, SeedSequence] = 0
) -> float:
    """Shot-noise-level factor from a simulated balanced Poissonian run.

    Splits Poissonian pulses on a balanced port pair and returns the
    measured Var(n1 - n2)/<n1 + n2>, which is 1 in expectation and is used
    to normalize NRF estimates.
    """
    if mean_photons_per_pulse <= 0:
        raise ValueError("mean photons per pulse must be > 0")
    if pulses < 2:
        raise ValueError("need at least 2 pulses")
    rng = default_rng(seed if isinstance(seed, SeedSequence) else SeedSequence(seed))
    total = rng.poisson(mean_photons_per_pulse, pulses)
    n1 = rng.binomial(total, 0.5)
    diff = 2 * n1 - total
    return float(diff.var(ddof=1) / total.mean())


def records_to_counts(records: Sequence[PulseRecord]) -> np.ndarray:
    """(pulses, 4) port-count array in (a_t, a_r, b_t, b_r) order."""
    return np.array([r.counts for r in records], dtype=np.int64)


def _bootstrap_std(
    stat, pulses: int, resamples: int, seed: Union[int, SeedSequence]
) -> float:
    """Standard error of ``stat(index_array)`` under pulse resampling."""
    rng = default_rng(seed if isinstance(seed, SeedSequence) else SeedSequence(seed))
    values = np.empty(resamples)
    for b in range(resamples):
        values[b] = stat(rng.integers(0, pulses, pulses))
    return float(values.std(ddof=1))


def estimate_nrf(
    records: Sequence[PulseRecord],
    port_i: str,
    port_j: str,
    snl_factor: float = 1.0,
    resamples: int = 200,
    seed: Union[int, SeedSequence] = 0,
) -> NrfEstimate:
    """Sample NRF between two ports: Var(n_i - n_j) / <n_i + n_j> / SNL.

    Raises:
        ValueError: with fewer than two records or a vanishing mean sum.
    """
    if len(records) < 2:
        raise ValueError("need at least 2 records to estimate a variance")
    idx = {name: k for k, name in enumerate(curves.PORT_NAMES)}
    try:
        ci, cj = idx[port_i], idx[port_j]
    except KeyError as exc:
        raise ValueError(f"unknown port {exc.args[0]!r}; ports are {curves.PORT_NAMES}")
    counts = records_to_counts(records)
    diff = counts[:, ci] - counts[:, cj]
    total = counts[:, ci] + counts[:, cj]
    mean_sum = total.mean()
    if mean_sum <= 0:
        raise ValueError("NRF undefined: mean photon-number sum is zero")
    if diff.var(ddof=1) == 0:
        warnings.warn("degenerate variance: all difference counts identical", stacklevel=2)

    def stat(sel: np.ndarray) -> float:
        return diff[sel].var(ddof=1) / total[sel].mean() / snl_factor

    value = diff.var(ddof=1) / mean_sum / snl_factor
    err = _bootstrap_std(stat, len(records), resamples, seed)
    return NrfEstimate(value=float(value), std_err=err, pulses=len(records))


def estimate_normalized_variance(
    records: Sequence[PulseRecord],
    sign: int,
    snl_factor: float = 1.0,
    resamples: int = 200,
    seed: Union[int, SeedSequence] = 0,
) -> NrfEstimate:
    """Var of the two arms' port-difference sum/difference over <S0^a+S0^b>."""
    if sign not in (1, -1):
        raise ValueError("sign must be +1 or -1")
    if len(records) < 2:
        raise ValueError("need at least 2 records to estimate a variance")
    counts = records_to_counts(records)
    combo = (counts[:, 0] - counts[:, 1]) + sign * (counts[:, 2] - counts[:, 3])
    total = counts.sum(axis=1)
    if total.mean() <= 0:
        raise ValueError("variance estimate undefined: no detected photons")

    def stat(sel: np.ndarray) -> float:
        return combo[sel].var(ddof=1) / total[sel].mean() / snl_factor

    value = combo.var(ddof=1) / total.mean() / snl_factor
    err = _bootstrap_std(stat, len(records), resamples, seed)
    return NrfEstimate(value=float(value), std_err=err, pulses=len(records))


def sweep_curve(
    model: CurveModel,
    angles_deg: Sequence[float],
    params: SourceParams,
    eta: Union[float, Sequence[float]] = 1.0,
    pulses: int = 10_000,
    seed: Union[int, SeedSequence] = 0,
    n_max: int = fock.DEFAULT_N_MAX,
    resamples: int = 200,
    snl_factor: float = 1.0,
    electronic_noise_sd: float = 0.0,
    workers: int = 1,
) -> List[SweepPoint]:
    """Monte-Carlo estimate of a curve model over an angle grid (degrees)."""
    angles = list(angles_deg)
    if not angles:
        raise ValueError("angle grid must not be empty")
    root = seed if isinstance(seed, SeedSequence) else SeedSequence(seed)
    children = root.spawn(2 * len(angles))
    estimator = curves.model_estimator(model)
    points: List[SweepPoint] = []
    for k, angle in enumerate(angles):
        settings = curves.model_settings(model, float(np.deg2rad(angle)))
        eta4 = _eta_vector(eta)
        occs, cdf = _cell_distribution(model.kind, params, settings, n_max)
        counts = _sample_counts(
            occs, cdf, params.schmidt_modes, eta4, electronic_noise_sd,
            pulses, children[2 * k], workers,
        )
        records = [
            PulseRecord("sweep", int(a), int(b), int(c), int(d)) for a, b, c, d in counts
        ]
        if estimator[0] == "nrf":
            est = estimate_nrf(
                records, *estimator[1], snl_factor=snl_factor,
                resamples=resamples, seed=children[2 * k + 1],
            )
        else:
            est = estimate_normalized_variance(
                records, estimator[1], snl_factor=snl_factor,
                resamples=resamples, seed=children[2 * k + 1],
            )
        points.append(SweepPoint(float(angle), est.value, est.std_err, est.pulses))
    return points


# ---------------------------------------------------------------------------
# CSV schemas

def _fmt(x: float) -> str:
    return f"{x:.12g}"


def write_records_csv(records: Sequence[PulseRecord], stream: io.TextIOBase) -> None:
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(RECORD_HEADER)
    for r in records:
        writer.writerow([r.setting_id, r.a_t, r.a_r, r.b_t, r.b_r])


def read_records_csv(stream: io.TextIOBase) -> List[PulseRecord]:
    reader = csv.reader(stream)
    try:
        header = next(reader)
    except StopIteration:
        raise ValueError("records CSV is empty")
    if tuple(h.strip() for h in header) != RECORD_HEADER:
        missing = [c for c in RECORD_HEADER if c not in header]
        if missing:
            raise ValueError(f"records CSV schema error: missing column {missing[0]!r}")
        raise ValueError(
            f"records CSV schema error: expected header {','.join(RECORD_HEADER)}"
        )
    records = []
    for lineno, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != 5:
            raise ValueError(f"records CSV line {lineno}: expected 5 fields")
        try:
            counts = [int(x) for x in row[1:]]
        except ValueError:
            bad = next(
                name for name, x in zip(RECORD_HEADER[1:], row[1:])
                if not x.strip().lstrip("-").isdigit()
            )
            raise ValueError(
                f"records CSV schema error: column {bad!r} is not an integer "
                f"on line {lineno}"
            )
        if min(counts) < 0:
            raise ValueError(f"records CSV line {lineno}: counts must be >= 0")
        records.append(PulseRecord(row[0], *counts))
    return records


def write_sweep_csv(
    points: Sequence[SweepPoint],
    stream: io.TextIOBase,
    comments: Sequence[str] = (),
) -> None:
    for c in comments:
        stream.write(f"# {c}\n")
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(SWEEP_HEADER)
    for p in points:
        writer.writerow([_fmt(p.angle_deg), _fmt(p.value), _fmt(p.std_err), p.pulses])


def read_sweep_csv(stream: io.TextIOBase) -> List[SweepPoint]:
    rows = [line for line in stream if line.strip() and not line.startswith("#")]
    reader = csv.reader(rows)
    header = next(reader, None)
    if header is None:
        raise ValueError("sweep CSV is empty")
    if tuple(h.strip() for h in header) != SWEEP_HEADER:
        missing = [c for c in SWEEP_HEADER if c not in header]
        if missing:
            raise ValueError(f"sweep CSV schema error: missing column {missing[0]!r}")
        raise ValueError(f"sweep CSV schema error: expected header {','.join(SWEEP_HEADER)}")
    points = []
    for lineno, row in enumerate(reader, start=2):
        if len(row) != 4:
            raise ValueError(f"sweep CSV line {lineno}: expected 4 fields")
        try:
            points.append(
                SweepPoint(float(row[0]), float(row[1]), float(row[2]), int(row[3]))
            )
        except ValueError:
            bad = next(
                name
                for name, x in zip(SWEEP_HEADER, row)
                if not _is_number(x)
            )
            raise ValueError(
                f"sweep CSV schema error: column {bad!r} is not numeric on line {lineno}"
            )
    return points


def _is_number(x: str) -> bool:
    try:
        float(x)
        return True
    except ValueError:
        return False
