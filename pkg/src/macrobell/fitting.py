"""Weighted least-squares recovery of (eta, n) from measured curves.

The objective is sum(((value - model(angle; eta, n)) / std_err)^2) over
the supplied points.  A coarse grid over eta in [0, 1] (21 points) and n
in [0, 5] (26 points) picks the starting point, removing initialization
sensitivity; a bounded trust-region refinement polishes it.  The 1-sigma
parameter covariance comes from the quadratic expansion (J^T J)^-1 at the
optimum with the residuals already whitened by the point errors.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Dict, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import least_squares

from .formulas import CurveModel, model_value

__all__ = ["FitResult", "fit_curve", "fit_report"]

ETA_GRID = np.linspace(0.0, 1.0, 21)
N_GRID = np.linspace(0.0, 5.0, 26)
N_BOUND = np.inf


@dataclass
class FitResult:
    """Recovered parameters with uncertainty and diagnostics."""

    eta: float
    n: float
    covariance: np.ndarray
    residual: float
    converged: bool
    model: CurveModel
    at_bound: bool = False

    @property
    def eta_sigma(self) -> float:
        return float(np.sqrt(max(self.covariance[0, 0], 0.0)))

    @property
    def n_sigma(self) -> float:
        return float(np.sqrt(max(self.covariance[1, 1], 0.0)))


def _validate_points(
    points: Sequence[Tuple[float, float, float]]
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    if len(points) < 3:
        raise ValueError(f"need at least 3 points to fit 2 parameters, got {len(points)}")
    arr = np.asarray(points, dtype=float)
    if arr.ndim != 2 or arr.shape[1] != 3:
        raise ValueError("points must be (angle, value, std_err) triples")
    angles, values, errs = arr.T
    if np.any(errs <= 0):
        raise ValueError("std_err must be > 0 for every point")
    if np.ptp(values) == 0:
        raise ValueError("degenerate data: all values are equal")
    return angles, values, errs


def fit_curve(
    points: Sequence[Tuple[float, float, float]],
    model: CurveModel,
    weights: str = "inverse_variance",
    angles_in_degrees: bool = False,
) -> FitResult:
    """Fit (eta, n) to (angle, value, std_err) points of a curve model.

    ``weights`` is "inverse_variance" (default) or "uniform"; the latter
    ignores the stated errors in the objective (they must still be > 0).
    Non-convergence is flagged on the result, not raised.
    """
    angles, values, errs = _validate_points(points)
    if angles_in_degrees:
        angles = np.deg2rad(angles)
    if weights == "uniform":
        sigma = np.ones_like(errs)
    elif weights == "inverse_variance":
        sigma = errs
    else:
        raise ValueError(f"unknown weights mode {weights!r}")

    def residuals(p: np.ndarray) -> np.ndarray:
        return (values - model_value(model, angles, p[0], p[1])) / sigma

    # Coarse grid initialization; ties resolved to the lowest flat index.
    eg, ng = np.meshgrid(ETA_GRID, N_GRID, indexing="ij")
    sse = np.array(
        [
            np.sum(residuals(np.array([e, n])) ** 2)
            for e, n in zip(eg.ravel(), ng.ravel())
        ]
    )
    best = int(np.argmin(sse))
    x0 = np.array([eg.ravel()[best], ng.ravel()[best]])
    # Keep the start strictly inside the box so the gradient is usable.
    x0[0] = min(max(x0[0], 1e-6), 1 - 1e-6)
    x0[1] = max(x0[1], 1e-6)

    res = least_squares(
        residuals,
        x0,
        bounds=([0.0, 0.0], [1.0, N_BOUND]),
        xtol=1e-12,
        ftol=1e-12,
        gtol=1e-12,
        max_nfev=200 * 3,
    )
    eta_fit, n_fit = float(res.x[0]), float(res.x[1])
    # trf approaches active bounds asymptotically, so flag by proximity
    at_bound = bool(eta_fit <= 1e-6 or eta_fit >= 1 - 1e-6 or n_fit <= 1e-6)

    jtj = res.jac.T @ res.jac
    try:
        covariance = np.linalg.inv(jtj)
        cov_ok = np.all(np.isfinite(covariance))
    except np.linalg.LinAlgError:
        covariance = np.full((2, 2), np.nan)
        cov_ok = False
    converged = bool(res.success and cov_ok)

    return FitResult(
        eta=eta_fit,
        n=n_fit,
        covariance=covariance,
        residual=float(2 * res.cost),  # least_squares cost is SSE/2
        converged=converged,
        model=model,
        at_bound=at_bound,
    )


def fit_report(result: FitResult) -> Dict[str, object]:
    """JSON-ready summary with fixed field names."""
    return {
        "eta": result.eta,
        "eta_sigma": result.eta_sigma,
        "n": result.n,
        "n_sigma": result.n_sigma,
        "covariance": [[float(x) for x in row] for row in result.covariance],
        "residual": result.residual,
        "converged": result.converged,
        "at_bound": result.at_bound,
        "model": {
            "kind": result.model.kind.value,
            "observable": result.model.observable.value,
            "branch": result.model.branch,
        },
    }


def fit_report_json(result: FitResult, indent: int = 2) -> str:
    return json.dumps(fit_report(result), indent=indent)
