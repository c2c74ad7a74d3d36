"""Witness evaluation from exact moments and from pulse records."""

import numpy as np
import pytest

from conftest import coherent_witness_records
from macrobell import fock, gaussian, montecarlo, witness
from macrobell.modes import BellStateKind, SourceParams
from macrobell.montecarlo import PulseRecord

K = BellStateKind
PARAMS_08 = SourceParams.from_mean_photons(0.8)


def _moments(kind, eta, engine="gaussian", schmidt=1):
    if engine == "fock":
        return fock.stokes_moments(
            fock.build_state(kind, PARAMS_08, 40), eta=eta, schmidt_modes=schmidt
        )
    return gaussian.stokes_moments(
        gaussian.build_gaussian(kind, PARAMS_08), eta=eta, schmidt_modes=schmidt
    )


@pytest.mark.parametrize("engine", ["fock", "gaussian"])
@pytest.mark.parametrize("kind", [K.PHI_MINUS, K.PSI_MINUS])
def test_exact_witness_at_nominal_efficiency(engine, kind):
    report = witness.witness_from_moments(_moments(kind, 0.4, engine), kind)
    assert report.lhs == pytest.approx(1.80, abs=1e-8)
    assert report.verdict is witness.Verdict.ENTANGLED
    assert report.std_err is None
    assert report.lhs == pytest.approx(
        sum(report.terms.values()) / report.normalization, rel=1e-12
    )


def test_exact_witness_engines_agree():
    for kind in (K.PHI_MINUS, K.PSI_MINUS):
        lf = witness.witness_from_moments(_moments(kind, 0.4, "fock"), kind).lhs
        lg = witness.witness_from_moments(_moments(kind, 0.4, "gaussian"), kind).lhs
        assert abs(lf - lg) < 1e-8


def test_low_efficiency_is_inconclusive():
    report = witness.witness_from_moments(_moments(K.PHI_MINUS, 0.05), K.PHI_MINUS)
    assert report.lhs == pytest.approx(2.85, abs=1e-10)
    assert report.verdict is witness.Verdict.INCONCLUSIVE


def test_witness_term_names_by_kind():
    triplet = witness.witness_from_moments(_moments(K.PHI_MINUS, 0.4), K.PHI_MINUS)
    assert set(triplet.terms) == {"var_s1_minus", "var_s2_plus", "var_s3_minus"}
    singlet = witness.witness_from_moments(_moments(K.PSI_MINUS, 0.4), K.PSI_MINUS)
    assert set(singlet.terms) == {"var_s1_plus", "var_s2_plus", "var_s3_plus"}


def test_zero_normalization_raises():
    moments = gaussian.stokes_moments(
        gaussian.build_gaussian(K.PHI_MINUS, SourceParams(0.0))
    )
    with pytest.raises(ValueError, match="S0"):
        witness.witness_from_moments(moments, K.PHI_MINUS)


def test_report_json_fields():
    report = witness.witness_from_moments(_moments(K.PSI_MINUS, 0.4), K.PSI_MINUS)
    payload = report.to_dict()
    assert list(payload) == [
        "kind", "terms", "normalization", "lhs", "threshold", "verdict", "std_err",
    ]
    assert payload["kind"] == "psi_minus"
    assert payload["threshold"] == 2.0


# ---------------------------------------------------------------------------
# record-based estimation


def test_witness_from_simulated_records_matches_prediction():
    params = SourceParams.from_mean_photons(0.8, schmidt_modes=200)
    records = montecarlo.sample_witness_records(
        K.PHI_MINUS, params, eta=0.4, pulses=20_000, seed=42
    )
    report = witness.witness_from_records(records, K.PHI_MINUS, resamples=400, seed=1)
    assert report.std_err is not None and report.std_err > 0
    assert abs(report.lhs - 1.80) < 3 * report.std_err
    assert report.verdict is witness.Verdict.ENTANGLED


def test_witness_records_accepts_mapping_input():
    params = SourceParams.from_mean_photons(0.8, schmidt_modes=50)
    records = montecarlo.sample_witness_records(K.PSI_MINUS, params, eta=0.4,
                                                pulses=2000, seed=3)
    grouped = {}
    for r in records:
        grouped.setdefault(r.setting_id, []).append(r)
    a = witness.witness_from_records(records, K.PSI_MINUS, resamples=50, seed=9)
    b = witness.witness_from_records(grouped, K.PSI_MINUS, resamples=50, seed=9)
    assert a.lhs == b.lhs
    assert a.std_err == b.std_err


def test_coherent_light_sits_at_separable_level():
    records = coherent_witness_records(mean_per_port=50.0, pulses=5000, seed=0)
    report = witness.witness_from_records(records, K.PHI_MINUS, resamples=300, seed=5)
    for term in report.terms.values():
        assert term / report.normalization == pytest.approx(1.0, abs=0.1)
    assert abs(report.lhs - 3.0) < 3 * report.std_err + 0.05
    assert report.verdict is witness.Verdict.INCONCLUSIVE


def test_no_false_entanglement_on_separable_inputs():
    # 50 seeded coherent-light runs must never certify entanglement at 3 sigma.
    for seed in range(50):
        records = coherent_witness_records(mean_per_port=20.0, pulses=400, seed=seed)
        report = witness.witness_from_records(records, K.PSI_MINUS, resamples=120, seed=seed)
        assert report.lhs >= 2 - 3 * report.std_err


def test_estimator_error_scales_as_inverse_sqrt_pulses():
    params = SourceParams.from_mean_photons(0.8, schmidt_modes=50)
    sizes = (1000, 4000, 16000)
    errs = []
    for p in sizes:
        records = montecarlo.sample_witness_records(K.PHI_MINUS, params, eta=0.4,
                                                    pulses=p, seed=17)
        report = witness.witness_from_records(records, K.PHI_MINUS, resamples=250, seed=2)
        errs.append(report.std_err)
    slope = np.polyfit(np.log(sizes), np.log(errs), 1)[0]
    assert slope == pytest.approx(-0.5, abs=0.15)


def test_bootstrap_deterministic_for_fixed_seed():
    records = coherent_witness_records(mean_per_port=10.0, pulses=300, seed=1)
    a = witness.witness_from_records(records, K.PHI_MINUS, resamples=100, seed=7)
    b = witness.witness_from_records(records, K.PHI_MINUS, resamples=100, seed=7)
    assert a.std_err == b.std_err


def test_significance_shifts_verdict():
    params = SourceParams.from_mean_photons(0.8, schmidt_modes=20)
    records = montecarlo.sample_witness_records(K.PHI_MINUS, params, eta=0.4,
                                                pulses=500, seed=0)
    lenient = witness.witness_from_records(records, K.PHI_MINUS, resamples=100, seed=0,
                                           significance=0.0)
    harsh = witness.witness_from_records(records, K.PHI_MINUS, resamples=100, seed=0,
                                         significance=1e6)
    assert lenient.verdict is witness.Verdict.ENTANGLED
    assert harsh.verdict is witness.Verdict.INCONCLUSIVE


def test_insufficient_records_rejected():
    one = [PulseRecord("s1", 1, 2, 3, 4)]
    with pytest.raises(ValueError, match="missing records"):
        witness.witness_from_records(one, K.PHI_MINUS)
    few = [
        PulseRecord(sid, 1, 2, 3, 4)
        for sid in ("s1", "s2", "s3")
    ]
    with pytest.raises(ValueError, match="insufficient"):
        witness.witness_from_records(few, K.PHI_MINUS)


def test_unknown_setting_labels_rejected():
    bad = [PulseRecord("s9", 1, 2, 3, 4)] * 4
    with pytest.raises(ValueError, match="unknown setting"):
        witness.witness_from_records(bad, K.PHI_MINUS)
