"""Command-line interface tying the engines together.

Subcommands: table1, curve, witness, simulate, fit, crosscheck.  All
outputs are machine-readable (CSV or JSON), floats printed at 12
significant digits, and every command is deterministic given its config.

Configuration is a flat key=value file (``--config``) with flag overrides;
angles are degrees at this interface and radians inside the library.
Exit codes: 0 success, 1 validation error, 2 crosscheck failure.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, TextIO, Tuple

import numpy as np
from numpy.random import SeedSequence, default_rng

from . import curves, fitting, fock, gaussian, montecarlo, witness as witness_mod
from .formulas import CurveModel, CurveObservable, model_value, nrf_pairing
from .modes import (
    MODE_ORDER,
    AnalyzerSetting,
    Arm,
    BellStateKind,
    SourceParams,
    WavePlate,
    nrf_from_moments,
)

__all__ = ["main"]

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_CROSSCHECK = 2


class CliError(Exception):
    """Validation failure mapped to exit code 1."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # route argparse failures through CliError
        raise CliError(message)


def _fmt(x: float) -> str:
    return f"{x:.12g}"


_KIND_ALIASES = {k.value: k for k in BellStateKind}

_MODEL_ALIASES = {
    "nrf-hwp": CurveObservable.NRF_HWP,
    "var-hwp-pair": CurveObservable.VAR_HWP_PAIR,
    "var-qwp": CurveObservable.VAR_QWP_TRIPLET,
}


@dataclass
class RunConfig:
    state: BellStateKind = BellStateKind.PHI_MINUS
    gamma: Optional[float] = None
    n_mean: Optional[float] = None
    eta: Tuple[float, ...] = (0.4,)
    schmidt_modes: int = 1250
    n_max: int = 40
    seed: int = 12345
    angles: Tuple[float, ...] = tuple(np.linspace(0.0, 90.0, 13))
    pulses: int = 2000

    def params(self) -> SourceParams:
        if self.gamma is not None:
            return SourceParams(self.gamma, self.schmidt_modes)
        n = 0.8 if self.n_mean is None else self.n_mean
        return SourceParams.from_mean_photons(n, self.schmidt_modes)

    @property
    def n_mean_value(self) -> float:
        return self.params().n_mean

    def eta_value(self):
        return self.eta[0] if len(self.eta) == 1 else list(self.eta)


def _parse_angles(text: str) -> Tuple[float, ...]:
    text = text.strip()
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise CliError(f"angle range must be start:stop:count, got {text!r}")
        start, stop, count = float(parts[0]), float(parts[1]), int(parts[2])
        if count < 1:
            raise CliError("angle count must be >= 1")
        return tuple(np.linspace(start, stop, count))
    try:
        return tuple(float(x) for x in text.split(",") if x.strip())
    except ValueError:
        raise CliError(f"cannot parse angle list {text!r}")


def _parse_eta(text: str) -> Tuple[float, ...]:
    try:
        vals = tuple(float(x) for x in text.split(",") if x.strip())
    except ValueError:
        raise CliError(f"cannot parse eta {text!r}")
    if len(vals) not in (1, 4):
        raise CliError("eta must be one value or four comma-separated port values")
    if any(not 0 <= v <= 1 for v in vals):
        raise CliError("eta values must lie in [0, 1]")
    return vals


def _load_config_file(path: str) -> Dict[str, str]:
    entries: Dict[str, str] = {}
    try:
        with open(path, "r", encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                line = line.strip()
                if not line or line.startswith("#"):
                    continue
                if "=" not in line:
                    raise CliError(f"{path}:{lineno}: expected KEY=VALUE")
                key, value = line.split("=", 1)
                entries[key.strip()] = value.strip()
    except OSError as exc:
        raise CliError(f"cannot read config file: {exc}")
    return entries


_CONFIG_KEYS = {
    "state", "gamma", "n_mean", "eta", "schmidt_modes", "n_max", "seed",
    "angles", "pulses",
}


def _build_config(args: argparse.Namespace) -> RunConfig:
    file_entries = _load_config_file(args.config) if args.config else {}
    unknown = set(file_entries) - _CONFIG_KEYS
    if unknown:
        raise CliError(f"unknown config key {sorted(unknown)[0]!r}")

    def pick(flag_name: str, file_key: str) -> Optional[str]:
        flag = getattr(args, flag_name, None)
        if flag is not None:
            return str(flag)
        return file_entries.get(file_key)

    cfg = RunConfig()
    state = pick("kind", "state")
    if state is not None:
        if state not in _KIND_ALIASES:
            raise CliError(f"unknown state {state!r}; choose from {sorted(_KIND_ALIASES)}")
        cfg.state = _KIND_ALIASES[state]
    gamma = pick("gamma", "gamma")
    n_mean = pick("n_mean", "n_mean")
    if gamma is not None and n_mean is not None:
        raise CliError("give exactly one of gamma and n_mean, not both")
    if gamma is not None:
        cfg.gamma = float(gamma)
        if cfg.gamma < 0:
            raise CliError("gamma must be >= 0")
    if n_mean is not None:
        cfg.n_mean = float(n_mean)
        if cfg.n_mean < 0:
            raise CliError("n_mean must be >= 0")
    eta = pick("eta", "eta")
    if eta is not None:
        cfg.eta = _parse_eta(eta)
    for attr, key, cast in (
        ("schmidt_modes", "schmidt_modes", int),
        ("n_max", "n_max", int),
        ("seed", "seed", int),
        ("pulses", "pulses", int),
    ):
        raw = pick(attr, key)
        if raw is not None:
            try:
                setattr(cfg, attr, cast(raw))
            except ValueError:
                raise CliError(f"{key} must be an integer, got {raw!r}")
    if cfg.schmidt_modes < 1:
        raise CliError("schmidt_modes must be >= 1")
    if cfg.n_max < 0:
        raise CliError("n_max must be >= 0")
    angles = pick("angles", "angles")
    if angles is not None:
        cfg.angles = _parse_angles(angles)
    return cfg


def _resolve_model(args: argparse.Namespace, cfg: RunConfig) -> CurveModel:
    observable = _MODEL_ALIASES.get(args.model)
    if observable is None:
        raise CliError(f"unknown model {args.model!r}; choose from {sorted(_MODEL_ALIASES)}")
    branch = 1 if getattr(args, "branch", "plus") == "plus" else -1
    kind = cfg.state
    if observable is CurveObservable.NRF_HWP and kind not in (
        BellStateKind.PHI_MINUS, BellStateKind.PSI_MINUS,
    ):
        raise CliError("nrf-hwp curves exist for phi_minus and psi_minus")
    if observable is CurveObservable.VAR_QWP_TRIPLET and kind.is_psi:
        raise CliError("var-qwp is a triplet-state model; use a phi state")
    return CurveModel(kind=kind, observable=observable, branch=branch)


def _open_out(args: argparse.Namespace) -> TextIO:
    if getattr(args, "out", None):
        return open(args.out, "w", encoding="utf-8", newline="")
    return sys.stdout


# ---------------------------------------------------------------------------
# Subcommands

def cmd_table1(cfg: RunConfig, args: argparse.Namespace, out: TextIO) -> int:
    eta = cfg.eta_value()
    if not isinstance(eta, float):
        raise CliError("table1 uses a scalar eta")
    n = cfg.n_mean_value
    params = cfg.params()
    pairings = [(0, 2), (0, 3), (1, 2), (1, 3)]
    out.write("kind,pairing,formula,closed_form,fock,gaussian,max_discrepancy\n")
    for kind in BellStateKind:
        dist = fock.number_distribution(fock.build_state(kind, params, n_max=cfg.n_max))
        gmean, gcov = gaussian.photon_moments(
            gaussian.apply_loss(gaussian.build_gaussian(kind, params), eta)
        )
        for i, j in pairings:
            mi, mj = MODE_ORDER[i], MODE_ORDER[j]
            cf = nrf_pairing(kind, (mi, mj), eta, n)
            formula = "1-eta" if cf == 1 - eta else "1+n*eta"
            fv = fock.nrf(dist, mi, mj, eta=eta)
            gv = nrf_from_moments(gmean, gcov, i, j)
            disc = max(abs(fv - cf), abs(gv - cf))
            out.write(
                f"{kind.value},{mi}-{mj},{formula},{_fmt(cf)},{_fmt(fv)},{_fmt(gv)},{_fmt(disc)}\n"
            )
    return EXIT_OK


def cmd_curve(cfg: RunConfig, args: argparse.Namespace, out: TextIO) -> int:
    model = _resolve_model(args, cfg)
    eta = cfg.eta_value()
    n = cfg.n_mean_value
    params = cfg.params()
    mc_points: Dict[float, montecarlo.SweepPoint] = {}
    if cfg.pulses > 0:
        pts = montecarlo.sweep_curve(
            model, cfg.angles, params, eta=eta, pulses=cfg.pulses,
            seed=cfg.seed, n_max=cfg.n_max,
        )
        mc_points = {p.angle_deg: p for p in pts}
    out.write(f"# model: {model.label}\n")
    out.write(f"# convention: {curves.convention_note(model)}\n")
    out.write("angle_deg,closed_form,fock,gaussian,montecarlo_value,montecarlo_err\n")
    for angle_deg in cfg.angles:
        a = math.radians(angle_deg)
        cf = curves.closed_form_value(model, a, eta if isinstance(eta, float) else 0.4, n)
        fv = curves.fock_value(model, a, params, eta, n_max=cfg.n_max)
        gv = curves.gaussian_value(model, a, params, eta)
        p = mc_points.get(angle_deg)
        mc_v = _fmt(p.value) if p else ""
        mc_e = _fmt(p.std_err) if p else ""
        out.write(
            f"{_fmt(angle_deg)},{_fmt(cf)},{_fmt(fv)},{_fmt(gv)},{mc_v},{mc_e}\n"
        )
    return EXIT_OK


def cmd_witness(cfg: RunConfig, args: argparse.Namespace, out: TextIO) -> int:
    kind = cfg.state
    if args.records:
        try:
            with open(args.records, "r", encoding="utf-8") as fh:
                records = montecarlo.read_records_csv(fh)
        except OSError as exc:
            raise CliError(f"cannot read records: {exc}")
        except ValueError as exc:
            raise CliError(str(exc))
        try:
            report = witness_mod.witness_from_records(
                records, kind, resamples=args.resamples,
                seed=cfg.seed, significance=args.significance,
            )
        except ValueError as exc:
            raise CliError(str(exc))
    else:
        params = cfg.params()
        state = fock.build_state(kind, params, n_max=cfg.n_max)
        moments = fock.stokes_moments(
            state, eta=cfg.eta_value(), schmidt_modes=params.schmidt_modes
        )
        try:
            report = witness_mod.witness_from_moments(moments, kind)
        except ValueError as exc:
            raise CliError(str(exc))
    out.write(report.to_json() + "\n")
    return EXIT_OK


def cmd_simulate(cfg: RunConfig, args: argparse.Namespace, out: TextIO) -> int:
    params = cfg.params()
    eta = cfg.eta_value()
    if cfg.pulses < 1:
        raise CliError("pulses must be >= 1")
    try:
        if args.setting == "witness":
            records = montecarlo.sample_witness_records(
                cfg.state, params, eta=eta, pulses=cfg.pulses, seed=cfg.seed,
                electronic_noise_sd=args.noise_sd, n_max=cfg.n_max,
            )
        elif args.setting in ("s1", "s2", "s3"):
            index = int(args.setting[1])
            records = montecarlo.sample_pulses(
                cfg.state, params,
                settings=montecarlo.witness_setting_plates(index),
                eta=eta, pulses=cfg.pulses, seed=cfg.seed,
                electronic_noise_sd=args.noise_sd, n_max=cfg.n_max,
                setting_id=args.setting,
            )
        else:
            settings = []
            plates_a: List[WavePlate] = []
            plates_b: List[WavePlate] = []
            if args.hwp_a is not None:
                plates_a.append(WavePlate.half(math.radians(args.hwp_a), Arm.A))
            if args.qwp_a is not None:
                plates_a.append(WavePlate.quarter(math.radians(args.qwp_a), Arm.A))
            if args.hwp_b is not None:
                plates_b.append(WavePlate.half(math.radians(args.hwp_b), Arm.B))
            if args.qwp_b is not None:
                plates_b.append(WavePlate.quarter(math.radians(args.qwp_b), Arm.B))
            if plates_a:
                settings.append(AnalyzerSetting(Arm.A, tuple(plates_a)))
            if plates_b:
                settings.append(AnalyzerSetting(Arm.B, tuple(plates_b)))
            records = montecarlo.sample_pulses(
                cfg.state, params, settings=settings, eta=eta,
                pulses=cfg.pulses, seed=cfg.seed,
                electronic_noise_sd=args.noise_sd, n_max=cfg.n_max,
            )
    except ValueError as exc:
        raise CliError(str(exc))
    montecarlo.write_records_csv(records, out)
    return EXIT_OK


def cmd_fit(cfg: RunConfig, args: argparse.Namespace, out: TextIO) -> int:
    model = _resolve_model(args, cfg)
    try:
        with open(args.input, "r", encoding="utf-8") as fh:
            points = montecarlo.read_sweep_csv(fh)
    except OSError as exc:
        raise CliError(f"cannot read sweep CSV: {exc}")
    except ValueError as exc:
        raise CliError(str(exc))
    weights = args.weights.replace("-", "_")
    try:
        result = fitting.fit_curve(
            [(math.radians(p.angle_deg), p.value, p.std_err) for p in points],
            model,
            weights=weights,
        )
    except ValueError as exc:
        raise CliError(str(exc))
    out.write(json.dumps(fitting.fit_report(result), indent=2) + "\n")
    return EXIT_OK


def cmd_crosscheck(cfg: RunConfig, args: argparse.Namespace, out: TextIO) -> int:
    rng = default_rng(SeedSequence(cfg.seed))
    base_tol = args.tolerance
    worst: Dict[str, float] = {"mean": 0.0, "var": 0.0, "cross": 0.0, "s0_cov": 0.0}
    worst_nrf = 0.0
    nrf_undefined = 0
    max_allowance = 0.0
    gamma_override = cfg.gamma if cfg.gamma is not None or cfg.n_mean is not None else None
    if cfg.n_mean is not None:
        gamma_override = SourceParams.from_mean_photons(cfg.n_mean).gamma

    for _ in range(args.trials):
        kind = list(BellStateKind)[rng.integers(4)]
        gamma = float(rng.uniform(0.0, 1.2)) if gamma_override is None else gamma_override
        params = SourceParams(gamma)
        eta = rng.uniform(0.2, 1.0, size=4)
        settings = []
        for arm in (Arm.A, Arm.B):
            plates = []
            if rng.random() < 0.8:
                plates.append(WavePlate.half(rng.uniform(0, math.pi), arm))
            if rng.random() < 0.8:
                plates.append(WavePlate.quarter(rng.uniform(0, math.pi), arm))
            if plates:
                settings.append(AnalyzerSetting(arm, tuple(plates)))
        n_max = fock.min_nmax_for_deficit(gamma, 1e-13)
        state = fock.build_state(kind, params, n_max=n_max)
        sm_f = fock.stokes_moments(state, settings=settings, eta=eta)
        sm_g = gaussian.stokes_moments(
            gaussian.build_gaussian(kind, params), settings=settings, eta=eta
        )
        ef, eg = sm_f.entries(), sm_g.entries()
        max_allowance = max(max_allowance, 10 * sm_f.truncation_deficit)
        for key, value in ef.items():
            group = (
                "mean" if key.startswith("mean") else
                "cross" if key.startswith("cov_s") and "a_s" in key else
                "s0_cov" if key.startswith("cov_s0_") else "var"
            )
            worst[group] = max(worst[group], abs(value - eg[key]))
        # NRF comparison on the canonical pairings (undefined for vacuum)
        dist = fock.number_distribution(state)
        gmean, gcov = gaussian.photon_moments(
            gaussian.apply_loss(gaussian.build_gaussian(kind, params), eta)
        )
        for i, j in ((0, 2), (0, 3), (1, 2), (1, 3)):
            if gamma == 0:
                nrf_undefined += 1
                continue
            v_f = fock.nrf(dist, MODE_ORDER[i], MODE_ORDER[j], eta=eta)
            v_g = nrf_from_moments(gmean, gcov, i, j)
            worst_nrf = max(worst_nrf, abs(v_f - v_g))

    tolerance = float(base_tol + max_allowance)
    overall = float(max(max(worst.values()), worst_nrf))
    passed = bool(overall < tolerance)
    report = {
        "trials": args.trials,
        "seed": cfg.seed,
        "max_discrepancy": {k: float(v) for k, v in {**worst, "nrf": worst_nrf}.items()},
        "nrf_undefined_entries": nrf_undefined,
        "truncation_allowance": float(max_allowance),
        "tolerance": tolerance,
        "pass": passed,
    }
    out.write(json.dumps(report, indent=2) + "\n")
    return EXIT_OK if passed else EXIT_CROSSCHECK


# ---------------------------------------------------------------------------

def _add_common(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--config", help="flat key=value config file")
    sub.add_argument("--kind", help="state: " + ", ".join(sorted(_KIND_ALIASES)))
    sub.add_argument("--gamma", type=float, help="parametric gain (exclusive with --n-mean)")
    sub.add_argument("--n-mean", dest="n_mean", type=float, help="mean photons per mode")
    sub.add_argument("--eta", help="efficiency: scalar or 4 comma values")
    sub.add_argument("--schmidt-modes", dest="schmidt_modes", type=int, help="cells per pulse")
    sub.add_argument("--n-max", dest="n_max", type=int, help="Fock truncation per arm")
    sub.add_argument("--seed", type=int, help="random seed")
    sub.add_argument("--angles", help="degrees: comma list or start:stop:count")
    sub.add_argument("--pulses", type=int, help="pulses per Monte-Carlo point")
    sub.add_argument("--out", help="output path (default stdout)")


def _build_parser() -> _Parser:
    parser = _Parser(prog="macrobell", description=__doc__)
    subs = parser.add_subparsers(dest="command", required=True)

    p = subs.add_parser("table1", help="NRF pairing table from all three engines")
    _add_common(p)

    p = subs.add_parser("curve", help="curve values: closed form, engines, Monte Carlo")
    _add_common(p)
    p.add_argument("--model", required=True, choices=sorted(_MODEL_ALIASES))
    p.add_argument("--branch", choices=("plus", "minus"), default="plus")

    p = subs.add_parser("witness", help="witness report (exact or from records)")
    _add_common(p)
    p.add_argument("--records", help="PulseRecord CSV with settings s1,s2,s3")
    p.add_argument("--resamples", type=int, default=1000)
    p.add_argument("--significance", type=float, default=0.0)

    p = subs.add_parser("simulate", help="write PulseRecord CSV")
    _add_common(p)
    p.add_argument(
        "--setting", default="witness",
        choices=("witness", "s1", "s2", "s3", "custom"),
    )
    p.add_argument("--hwp-a", dest="hwp_a", type=float, help="HWP angle, 635 nm arm (deg)")
    p.add_argument("--qwp-a", dest="qwp_a", type=float, help="QWP angle, 635 nm arm (deg)")
    p.add_argument("--hwp-b", dest="hwp_b", type=float, help="HWP angle, 805 nm arm (deg)")
    p.add_argument("--qwp-b", dest="qwp_b", type=float, help="QWP angle, 805 nm arm (deg)")
    p.add_argument("--noise-sd", dest="noise_sd", type=float, default=0.0,
                   help="electronic noise std dev (counts)")

    p = subs.add_parser("fit", help="fit (eta, n) to a sweep CSV")
    _add_common(p)
    p.add_argument("--input", required=True, help="sweep CSV path")
    p.add_argument("--model", required=True, choices=sorted(_MODEL_ALIASES))
    p.add_argument("--branch", choices=("plus", "minus"), default="plus")
    p.add_argument("--weights", choices=("inverse-variance", "uniform"),
                   default="inverse-variance")

    p = subs.add_parser("crosscheck", help="randomized engine-equivalence suite")
    _add_common(p)
    p.add_argument("--trials", type=int, default=20)
    p.add_argument("--tolerance", type=float, default=1e-8)
    return parser


_COMMANDS = {
    "table1": cmd_table1,
    "curve": cmd_curve,
    "witness": cmd_witness,
    "simulate": cmd_simulate,
    "fit": cmd_fit,
    "crosscheck": cmd_crosscheck,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        cfg = _build_config(args)
        out = _open_out(args)
        try:
            return _COMMANDS[args.command](cfg, args, out)
        finally:
            if out is not sys.stdout:
                out.close()
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
