"""Normalized Stokes-variance curves under plate rotations.

Three behaviors of the polarization correlations:

1. Triplet state, one HWP rotating: Var(S^a +/- S^b)/<S0^a+S0^b> swings
   between 1 - eta and 1 + eta(1+2n) with period 45 degrees.
2. Triplet state, one QWP rotating while the other arm reads the circular
   Stokes component: same extremes; the engine columns give the ideal-
   analyzer curve, the printed fit formula is shown alongside (they agree
   at the extremes by construction, see the convention note).
3. Singlet state under a global rotation (identical plates in both arms):
   all three sum variances stay pinned at 1 - eta, the rotational
   invariance that singles this state out.
"""

import math

import numpy as np

from macrobell import curves, formulas, gaussian
from macrobell.formulas import CurveModel, CurveObservable
from macrobell.modes import (
    AnalyzerSetting,
    Arm,
    BellStateKind,
    SourceParams,
    WavePlate,
)

ETA = 0.40
N_MEAN = 0.8
params = SourceParams.from_mean_photons(N_MEAN)

print("1) triplet pair variance vs HWP angle sum (plus branch)")
model = CurveModel(BellStateKind.PHI_MINUS, CurveObservable.VAR_HWP_PAIR, branch=1)
for deg in np.linspace(0, 90, 7):
    a = math.radians(deg)
    print(f"   {deg:5.1f} deg: closed {curves.closed_form_value(model, a, ETA, N_MEAN):7.4f}"
          f"  engine {curves.gaussian_value(model, a, params, ETA):7.4f}")

print("\n2) triplet circular-basis difference vs QWP offset")
model = CurveModel(BellStateKind.PHI_MINUS, CurveObservable.VAR_QWP_TRIPLET)
print(f"   convention: {curves.convention_note(model)}")
for deg in np.linspace(0, 90, 7):
    a = math.radians(deg)
    print(f"   {deg:5.1f} deg: printed {curves.closed_form_value(model, a, ETA, N_MEAN):7.4f}"
          f"  engine {curves.gaussian_value(model, a, params, ETA):7.4f}")

print("\n3) singlet sum variances under a global HWP rotation")
g0 = gaussian.build_gaussian(BellStateKind.PSI_MINUS, params)
for deg in np.linspace(0, 90, 7):
    settings = [
        AnalyzerSetting(arm, (WavePlate.half(math.radians(deg), arm),))
        for arm in (Arm.A, Arm.B)
    ]
    sm = gaussian.stokes_moments(g0, settings=settings, eta=ETA)
    vals = [sm.var_combination(i, 1) / sm.normalization for i in (1, 2, 3)]
    print(f"   {deg:5.1f} deg: " + "  ".join(f"S{i}: {v:.10f}" for i, v in zip((1, 2, 3), vals)))
print("   (constant 1 - eta =", 1 - ETA, "for all three components)")
