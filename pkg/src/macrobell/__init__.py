"""Photon-number correlations and polarization entanglement of four-mode
bright squeezed vacuum: exact Fock oracle, Gaussian moment engine, printed
closed forms, Monte-Carlo detection pipeline, witnesses and curve fitting.
"""

from .modes import (
    AnalyzerSetting,
    Arm,
    BellStateKind,
    ModeId,
    MODE_ORDER,
    Pol,
    SourceParams,
    StokesMoments,
    WavePlate,
    compose_analyzer,
    jones_matrix,
    stokes_from_port_numbers,
)
from .formulas import (
    CurveModel,
    CurveObservable,
    curve_stats,
    hwp_variance_singlet,
    hwp_variance_triplet,
    model_value,
    nrf_hwp_curve,
    nrf_pairing,
    qwp_variance_triplet,
    witness_optimum,
)
from .fitting import FitResult, fit_curve, fit_report
from .montecarlo import (
    NrfEstimate,
    PulseRecord,
    SweepPoint,
    estimate_nrf,
    estimate_normalized_variance,
    sample_pulses,
    sample_witness_records,
    snl_calibrate,
    sweep_curve,
)
from .witness import Verdict, WitnessReport, witness_from_moments, witness_from_records

__version__ = "0.1.0"
