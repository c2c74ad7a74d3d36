"""Closed-form curves: frozen values, symbolic properties, engine agreement."""

import math

import numpy as np
import pytest

from macrobell import curves, formulas
from macrobell.formulas import CurveModel, CurveObservable
from macrobell.modes import MODE_ORDER, BellStateKind, SourceParams

AH, AV, BH, BV = MODE_ORDER
K = BellStateKind
PARAMS_08 = SourceParams.from_mean_photons(0.8)


# ---------------------------------------------------------------------------
# pairing table

CORRELATED = {
    K.PHI_PLUS: {(0, 2), (1, 3)},
    K.PHI_MINUS: {(0, 2), (1, 3)},
    K.PSI_PLUS: {(0, 3), (1, 2)},
    K.PSI_MINUS: {(0, 3), (1, 2)},
}


@pytest.mark.parametrize("kind", list(K))
@pytest.mark.parametrize("pair", [(0, 2), (0, 3), (1, 2), (1, 3)])
def test_nrf_pairing_table(kind, pair):
    value = formulas.nrf_pairing(kind, (MODE_ORDER[pair[0]], MODE_ORDER[pair[1]]), 0.4, 0.8)
    expected = 0.6 if pair in CORRELATED[kind] else 1.32
    assert value == pytest.approx(expected, abs=1e-15)


def test_nrf_pairing_shot_noise_at_zero_efficiency():
    for kind in K:
        assert formulas.nrf_pairing(kind, (AH, BH), 0.0, 2.0) == 1.0


def test_nrf_pairing_rejects_same_arm():
    with pytest.raises(ValueError, match="cross-arm"):
        formulas.nrf_pairing(K.PHI_PLUS, (AH, AV), 0.5, 0.5)


# ---------------------------------------------------------------------------
# curve formulas at frozen points (eta=0.4, n=0.8)


def test_nrf_hwp_frozen_points():
    assert formulas.nrf_hwp_curve(K.PSI_MINUS, math.pi / 4, 0.4, 0.8) == pytest.approx(0.60)
    assert formulas.nrf_hwp_curve(K.PSI_MINUS, 0.0, 0.4, 0.8) == pytest.approx(1.32)
    assert formulas.nrf_hwp_curve(K.PSI_MINUS, math.radians(22.5), 0.4, 0.8) == pytest.approx(0.96)
    assert formulas.nrf_hwp_curve(K.PHI_MINUS, 0.0, 0.4, 0.8) == pytest.approx(0.60)


def test_nrf_hwp_rejects_other_kinds():
    with pytest.raises(ValueError):
        formulas.nrf_hwp_curve(K.PHI_PLUS, 0.1, 0.4, 0.8)


def test_hwp_variance_triplet_frozen_points():
    t = math.radians(22.5)
    assert formulas.hwp_variance_triplet(t, t, 1, 0.4, 0.8) == pytest.approx(0.60)
    assert formulas.hwp_variance_triplet(0, 0, -1, 0.4, 0.8) == pytest.approx(0.60)
    assert formulas.hwp_variance_triplet(0, 0, 1, 0.4, 0.8) == pytest.approx(2.04)


def test_qwp_variance_frozen_points():
    assert formulas.qwp_variance_triplet(math.pi / 2, 0.4, 0.8) == pytest.approx(0.60)
    assert formulas.qwp_variance_triplet(0.0, 0.4, 0.8) == pytest.approx(2.04)
    for phi in np.linspace(0, np.pi, 7):
        assert formulas.qwp_variance_triplet(phi, 0.0, 5.0) == pytest.approx(1.0)


def test_hwp_variance_singlet_frozen_points():
    t = math.radians(31.0)
    assert formulas.hwp_variance_singlet(t, t, 1, 0.4, 0.8) == pytest.approx(0.60)
    assert formulas.hwp_variance_singlet(math.radians(45), 0.0, 1, 0.4, 0.8) == pytest.approx(2.04)
    for theta in np.linspace(0, np.pi, 13):
        assert formulas.hwp_variance_singlet(theta, theta, 1, 0.4, 0.8) == pytest.approx(0.60)


def test_witness_optimum():
    assert formulas.witness_optimum(K.PHI_MINUS, 0.4) == pytest.approx(1.80)
    assert formulas.witness_optimum(K.PSI_MINUS, 1.0) == 0.0
    assert formulas.witness_optimum(K.PSI_MINUS, 0.0) == 3.0


def test_parameter_validation():
    with pytest.raises(ValueError):
        formulas.nrf_hwp_curve(K.PSI_MINUS, 0.0, 1.2, 0.8)
    with pytest.raises(ValueError):
        formulas.hwp_variance_triplet(0, 0, 2, 0.4, 0.8)
    with pytest.raises(ValueError):
        formulas.qwp_variance_triplet(0.0, 0.4, -0.1)


# ---------------------------------------------------------------------------
# symbolic properties


@pytest.mark.parametrize("n", [0.0, 0.1, 0.8, 2.5, 5.0])
def test_squeezing_depends_only_on_eta(n):
    eta = 0.37
    models = [
        CurveModel(K.PSI_MINUS, CurveObservable.NRF_HWP),
        CurveModel(K.PHI_MINUS, CurveObservable.VAR_HWP_PAIR, 1),
        CurveModel(K.PHI_MINUS, CurveObservable.VAR_HWP_PAIR, -1),
        CurveModel(K.PSI_MINUS, CurveObservable.VAR_HWP_PAIR, 1),
        CurveModel(K.PHI_MINUS, CurveObservable.VAR_QWP_TRIPLET),
    ]
    for model in models:
        assert formulas.curve_stats(model, eta, n)["min"] == pytest.approx(1 - eta, abs=1e-12)


@pytest.mark.parametrize("n", [0.1, 0.8, 3.0])
@pytest.mark.parametrize("eta", [0.25, 0.4, 1.0])
def test_antisqueezing_maximum(eta, n):
    for model in (
        CurveModel(K.PHI_MINUS, CurveObservable.VAR_HWP_PAIR, 1),
        CurveModel(K.PSI_MINUS, CurveObservable.VAR_HWP_PAIR, 1),
        CurveModel(K.PHI_MINUS, CurveObservable.VAR_QWP_TRIPLET),
    ):
        assert formulas.curve_stats(model, eta, n)["max"] == pytest.approx(
            1 + eta * (1 + 2 * n), abs=1e-12
        )


def test_periodicity_pi_over_2():
    grid = np.linspace(0, np.pi, 40)
    assert np.allclose(
        formulas.nrf_hwp_curve(K.PSI_MINUS, grid, 0.4, 0.8),
        formulas.nrf_hwp_curve(K.PSI_MINUS, grid + np.pi / 2, 0.4, 0.8),
    )
    assert np.allclose(
        formulas.hwp_variance_triplet(grid, 0.3, 1, 0.4, 0.8),
        formulas.hwp_variance_triplet(grid + np.pi / 2, 0.3, 1, 0.4, 0.8),
    )
    assert np.allclose(
        formulas.hwp_variance_singlet(grid, 0.3, -1, 0.4, 0.8),
        formulas.hwp_variance_singlet(grid + np.pi / 2, 0.3, -1, 0.4, 0.8),
    )


def test_curve_stats_frozen():
    stats = formulas.curve_stats(CurveModel(K.PSI_MINUS, CurveObservable.NRF_HWP), 0.4, 0.8)
    assert stats["min"] == pytest.approx(0.60, abs=1e-12)
    assert stats["max"] == pytest.approx(1.32, abs=1e-12)
    assert stats["visibility"] == pytest.approx(0.375, abs=1e-12)
    assert stats["squeezing_db"] == pytest.approx(-10 * math.log10(0.6), abs=1e-12)
    zero = formulas.curve_stats(CurveModel(K.PSI_MINUS, CurveObservable.NRF_HWP), 0.0, 0.8)
    assert zero["visibility"] == 0.0


# ---------------------------------------------------------------------------
# engine agreement (the convention pin)


@pytest.mark.parametrize(
    "model",
    [
        CurveModel(K.PSI_MINUS, CurveObservable.NRF_HWP),
        CurveModel(K.PHI_MINUS, CurveObservable.NRF_HWP),
        CurveModel(K.PHI_MINUS, CurveObservable.VAR_HWP_PAIR, 1),
        CurveModel(K.PHI_MINUS, CurveObservable.VAR_HWP_PAIR, -1),
        CurveModel(K.PSI_MINUS, CurveObservable.VAR_HWP_PAIR, 1),
        CurveModel(K.PSI_MINUS, CurveObservable.VAR_HWP_PAIR, -1),
    ],
)
def test_closed_form_agrees_with_both_engines(model):
    for angle in np.linspace(0, np.pi / 2, 9):
        cf = curves.closed_form_value(model, angle, 0.4, 0.8)
        fv = curves.fock_value(model, angle, PARAMS_08, 0.4)
        gv = curves.gaussian_value(model, angle, PARAMS_08, 0.4)
        assert abs(cf - fv) < 1e-6
        assert abs(cf - gv) < 1e-10


def test_qwp_curve_extremes_match_engines():
    model = CurveModel(K.PHI_MINUS, CurveObservable.VAR_QWP_TRIPLET)
    for angle in (0.0, math.pi / 2):
        cf = curves.closed_form_value(model, angle, 0.4, 0.8)
        assert curves.fock_value(model, angle, PARAMS_08, 0.4) == pytest.approx(cf, abs=1e-6)
        assert curves.gaussian_value(model, angle, PARAMS_08, 0.4) == pytest.approx(cf, abs=1e-10)


def test_qwp_engine_curve_is_single_harmonic():
    # The physically realized curve between the extremes; the printed
    # formula deviates there (see the convention note).
    model = CurveModel(K.PHI_MINUS, CurveObservable.VAR_QWP_TRIPLET)
    for angle in np.linspace(0, np.pi, 9):
        expected = 1 + 0.4 * (0.8 + 1.8 * math.cos(2 * angle))
        assert curves.gaussian_value(model, angle, PARAMS_08, 0.4) == pytest.approx(
            expected, abs=1e-10
        )


def test_model_value_dispatch_errors():
    with pytest.raises(ValueError):
        formulas.model_value(
            CurveModel(K.PSI_MINUS, CurveObservable.VAR_QWP_TRIPLET), 0.1, 0.4, 0.8
        )
    with pytest.raises(ValueError):
        CurveModel(K.PHI_MINUS, CurveObservable.NRF_HWP, branch=0)
