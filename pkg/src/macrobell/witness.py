"""Separability-witness evaluation from exact moments or pulse records.

The witness sums three cross-arm Stokes variance terms, normalizes by the
mean total photon number and compares against the separability bound 2:

    triplet family (phi_plus, phi_minus, psi_plus):
        [Var(S1a - S1b) + Var(S2a + S2b) + Var(S3a - S3b)] / <S0a + S0b>
    singlet (psi_minus):
        [Var(S1a + S1b) + Var(S2a + S2b) + Var(S3a + S3b)] / <S0a + S0b>

A value below 2 certifies polarization entanglement.  The triplet
combination is the one optimal for phi_minus (the triplet representative);
applied to the other triplets it is a valid but non-optimal witness.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
from numpy.random import SeedSequence, default_rng

from .modes import BellStateKind, StokesMoments
from .montecarlo import WITNESS_SETTING_IDS, PulseRecord, records_to_counts

__all__ = [
    "Verdict",
    "WitnessReport",
    "term_signs",
    "witness_from_moments",
    "witness_from_records",
]

THRESHOLD = 2.0


class Verdict(enum.Enum):
    ENTANGLED = "Entangled"
    INCONCLUSIVE = "Inconclusive"


def term_signs(kind: BellStateKind) -> Tuple[int, int, int]:
    """Signs s_i of the three terms Var(S_i^a + s_i S_i^b)."""
    if kind is BellStateKind.PSI_MINUS:
        return (1, 1, 1)
    return (-1, 1, -1)


def _term_name(index: int, sign: int) -> str:
    return f"var_s{index}_{'plus' if sign > 0 else 'minus'}"


@dataclass
class WitnessReport:
    """Result of a witness evaluation.

    ``lhs`` is the normalized sum of the three variance terms; the verdict
    is Entangled when lhs + significance * std_err < threshold (exact-
    moment inputs use significance 0 and carry no standard error).
    """

    kind: BellStateKind
    terms: Dict[str, float]
    normalization: float
    lhs: float
    verdict: Verdict
    std_err: Optional[float] = None
    threshold: float = THRESHOLD
    significance: float = 0.0

    def to_dict(self) -> Dict[str, object]:
        return {
            "kind": self.kind.value,
            "terms": {k: float(v) for k, v in self.terms.items()},
            "normalization": float(self.normalization),
            "lhs": float(self.lhs),
            "threshold": self.threshold,
            "verdict": self.verdict.value,
            "std_err": None if self.std_err is None else float(self.std_err),
        }

    def to_json(self, indent: int = 2) -> str:
        return json.dumps(self.to_dict(), indent=indent)


def _make_report(
    kind: BellStateKind,
    terms: Dict[str, float],
    normalization: float,
    std_err: Optional[float],
    significance: float,
) -> WitnessReport:
    lhs = sum(terms.values()) / normalization
    margin = lhs + significance * (std_err or 0.0)
    verdict = Verdict.ENTANGLED if margin < THRESHOLD else Verdict.INCONCLUSIVE
    return WitnessReport(
        kind=kind,
        terms=terms,
        normalization=normalization,
        lhs=lhs,
        verdict=verdict,
        std_err=std_err,
        significance=significance,
    )


def witness_from_moments(moments: StokesMoments, kind: BellStateKind) -> WitnessReport:
    """Evaluate the witness from exact engine moments.

    Raises:
        ValueError: if the normalization <S0a + S0b> vanishes.
    """
    normalization = moments.normalization
    if normalization <= 0:
        raise ValueError("witness undefined: <S0a + S0b> is zero")
    signs = term_signs(kind)
    terms = {
        _term_name(i, s): moments.var_combination(i, s)
        for i, s in zip((1, 2, 3), signs)
    }
    return _make_report(kind, terms, normalization, std_err=None, significance=0.0)


RecordsInput = Union[Sequence[PulseRecord], Mapping[str, Sequence[PulseRecord]]]


def _group_records(records: RecordsInput) -> Dict[str, List[PulseRecord]]:
    if isinstance(records, Mapping):
        groups = {k: list(v) for k, v in records.items()}
    else:
        groups = {}
        for r in records:
            groups.setdefault(r.setting_id, []).append(r)
    unknown = set(groups) - set(WITNESS_SETTING_IDS)
    if unknown:
        raise ValueError(
            f"unknown setting labels {sorted(unknown)}; expected {WITNESS_SETTING_IDS}"
        )
    missing = [sid for sid in WITNESS_SETTING_IDS if sid not in groups]
    if missing:
        raise ValueError(f"missing records for setting {missing[0]!r}")
    for sid in WITNESS_SETTING_IDS:
        if len(groups[sid]) < 2:
            raise ValueError(f"insufficient records for setting {sid!r}: need >= 2")
    return groups


def witness_from_records(
    records: RecordsInput,
    kind: BellStateKind,
    resamples: int = 1000,
    seed: Union[int, SeedSequence] = 0,
    significance: float = 0.0,
) -> WitnessReport:
    """Estimate the witness from pulse records of the three settings.

    Records must carry setting labels s1, s2, s3 (Stokes basis per arm).
    Each term is the sample variance of the labelled combination; the
    normalization pools <S0a + S0b> over all three settings.  The standard
    error comes from a per-setting bootstrap with ``resamples`` resamples,
    deterministic for a fixed seed.
    """
    groups = _group_records(records)
    signs = term_signs(kind)
    combos: List[np.ndarray] = []
    totals: List[np.ndarray] = []
    for sid, s in zip(WITNESS_SETTING_IDS, signs):
        counts = records_to_counts(groups[sid])
        combos.append((counts[:, 0] - counts[:, 1]) + s * (counts[:, 2] - counts[:, 3]))
        totals.append(counts.sum(axis=1))

    def evaluate(indices: Optional[List[np.ndarray]]) -> Tuple[Dict[str, float], float]:
        terms: Dict[str, float] = {}
        pooled = []
        for k, (sid, s) in enumerate(zip(WITNESS_SETTING_IDS, signs)):
            combo = combos[k] if indices is None else combos[k][indices[k]]
            total = totals[k] if indices is None else totals[k][indices[k]]
            terms[_term_name(k + 1, s)] = float(combo.var(ddof=1))
            pooled.append(total)
        normalization = float(np.concatenate(pooled).mean())
        return terms, normalization

    terms, normalization = evaluate(None)
    if normalization <= 0:
        raise ValueError("witness undefined: no detected photons")

    if resamples > 0:
        root = seed if isinstance(seed, SeedSequence) else SeedSequence(seed)
        rngs = [default_rng(s) for s in root.spawn(3)]
        lhs_samples = np.empty(resamples)
        ns = [len(c) for c in combos]
        for b in range(resamples):
            idx = [rngs[k].integers(0, ns[k], ns[k]) for k in range(3)]
            t_b, norm_b = evaluate(idx)
            lhs_samples[b] = sum(t_b.values()) / norm_b
        std_err = float(lhs_samples.std(ddof=1))
    else:
        std_err = None

    return _make_report(kind, terms, normalization, std_err, significance)
