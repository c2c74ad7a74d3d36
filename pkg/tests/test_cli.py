"""CLI surface: subcommands, schemas, exit codes, golden regression.

Golden files live in tests/golden/ and cover the deterministic outputs
(no sampling).  Regenerate them by re-running the corresponding commands
after an intentional behavior change.  Numeric cells are compared at
relative 1e-9 so BLAS-level jitter cannot break the suite; everything
structural must match byte for byte.
"""

import json
import math
from pathlib import Path

import pytest

from macrobell import cli
from macrobell.montecarlo import read_records_csv

GOLDEN = Path(__file__).parent / "golden"


def run(tmp_path, *argv):
    out = tmp_path / "out.txt"
    rc = cli.main([*argv, "--out", str(out)])
    return rc, out.read_text() if out.exists() else ""


def assert_matches_golden(text: str, golden_name: str):
    expected = (GOLDEN / golden_name).read_text()
    got_lines, want_lines = text.splitlines(), expected.splitlines()
    assert len(got_lines) == len(want_lines)
    for got, want in zip(got_lines, want_lines):
        if got == want:
            continue
        for g, w in zip(got.split(","), want.split(",")):
            try:
                assert float(g) == pytest.approx(float(w), rel=1e-9, abs=1e-12)
            except ValueError:
                assert g == w


# ---------------------------------------------------------------------------
# table1


def test_table1_golden(tmp_path):
    rc, text = run(tmp_path, "table1")
    assert rc == 0
    assert_matches_golden(text, "table1_default.csv")


def test_table1_discrepancies_small(tmp_path):
    rc, text = run(tmp_path, "table1")
    rows = text.splitlines()[1:]
    assert len(rows) == 16
    for row in rows:
        assert float(row.split(",")[-1]) < 1e-6


def test_table1_unit_efficiency_zeros(tmp_path):
    rc, text = run(tmp_path, "table1", "--eta", "1.0")
    assert rc == 0
    zero_rows = [r for r in text.splitlines()[1:] if r.split(",")[2] == "1-eta"]
    assert len(zero_rows) == 8
    assert all(float(r.split(",")[3]) == 0.0 for r in zero_rows)


# ---------------------------------------------------------------------------
# curve


def test_curve_golden_closed_form_only(tmp_path):
    rc, text = run(
        tmp_path, "curve", "--model", "nrf-hwp", "--kind", "psi_minus",
        "--angles", "0:90:5", "--pulses", "0",
    )
    assert rc == 0
    assert_matches_golden(text, "curve_nrf_psi_minus.csv")
    assert text.splitlines()[1].startswith("# convention:")


def test_curve_with_montecarlo_columns(tmp_path):
    rc, text = run(
        tmp_path, "curve", "--model", "var-hwp-pair", "--kind", "phi_minus",
        "--branch", "plus", "--angles", "0,45", "--pulses", "500",
        "--schmidt-modes", "50", "--seed", "7",
    )
    assert rc == 0
    header = [l for l in text.splitlines() if not l.startswith("#")][0]
    assert header == "angle_deg,closed_form,fock,gaussian,montecarlo_value,montecarlo_err"
    rows = [l for l in text.splitlines() if not l.startswith("#")][1:]
    for row in rows:
        cells = row.split(",")
        assert cells[4] != "" and float(cells[5]) > 0


def test_curve_model_kind_validation(tmp_path):
    rc, _ = run(tmp_path, "curve", "--model", "nrf-hwp", "--kind", "phi_plus")
    assert rc == 1
    rc, _ = run(tmp_path, "curve", "--model", "var-qwp", "--kind", "psi_minus")
    assert rc == 1


# ---------------------------------------------------------------------------
# witness


def test_witness_exact_golden(tmp_path):
    rc, text = run(tmp_path, "witness", "--kind", "phi_minus")
    assert rc == 0
    got = json.loads(text)
    want = json.loads((GOLDEN / "witness_phi_minus_exact.json").read_text())
    assert got["verdict"] == want["verdict"] == "Entangled"
    assert got["lhs"] == pytest.approx(want["lhs"], rel=1e-9)
    assert got["lhs"] == pytest.approx(1.80, abs=1e-8)


def test_witness_low_efficiency_inconclusive(tmp_path):
    rc, text = run(tmp_path, "witness", "--kind", "phi_minus", "--eta", "0.05")
    payload = json.loads(text)
    assert payload["lhs"] == pytest.approx(2.85, abs=1e-8)
    assert payload["verdict"] == "Inconclusive"


def test_witness_from_records_pipeline(tmp_path):
    records = tmp_path / "records.csv"
    rc = cli.main([
        "simulate", "--setting", "witness", "--kind", "phi_minus",
        "--pulses", "4000", "--schmidt-modes", "100", "--seed", "3",
        "--out", str(records),
    ])
    assert rc == 0
    rc, text = run(
        tmp_path, "witness", "--kind", "phi_minus", "--records", str(records),
        "--resamples", "200",
    )
    assert rc == 0
    payload = json.loads(text)
    assert abs(payload["lhs"] - 1.80) < 3 * payload["std_err"]
    assert payload["verdict"] == "Entangled"


def test_witness_bad_records_schema(tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("setting_id,a_t,a_r,b_t\ns1,1,2,3\n")
    rc, _ = run(tmp_path, "witness", "--records", str(bad))
    assert rc == 1


# ---------------------------------------------------------------------------
# simulate


def test_simulate_deterministic_and_schema(tmp_path):
    args = ["simulate", "--setting", "s2", "--kind", "psi_minus",
            "--pulses", "50", "--schmidt-modes", "20", "--seed", "11"]
    rc1, text1 = run(tmp_path, *args)
    rc2, text2 = run(tmp_path, *args)
    assert rc1 == rc2 == 0
    assert text1 == text2
    assert text1.splitlines()[0] == "setting_id,a_t,a_r,b_t,b_r"
    parsed = read_records_csv(open(tmp_path / "out.txt"))
    assert len(parsed) == 50 and parsed[0].setting_id == "s2"


def test_simulate_custom_plates(tmp_path):
    rc, text = run(
        tmp_path, "simulate", "--setting", "custom", "--kind", "psi_minus",
        "--hwp-b", "22.5", "--qwp-a", "45", "--pulses", "5",
        "--schmidt-modes", "10", "--seed", "2",
    )
    assert rc == 0
    assert len(text.splitlines()) == 6


def test_simulate_rejects_zero_pulses(tmp_path):
    rc, _ = run(tmp_path, "simulate", "--pulses", "0", "--schmidt-modes", "10")
    assert rc == 1


# ---------------------------------------------------------------------------
# fit


def test_fit_golden_noiseless(tmp_path):
    rc, text = run(
        tmp_path, "fit", "--input", str(GOLDEN / "sweep_noiseless.csv"),
        "--model", "nrf-hwp", "--kind", "psi_minus",
    )
    assert rc == 0
    got = json.loads(text)
    want = json.loads((GOLDEN / "fit_noiseless.json").read_text())
    for key in ("eta", "n", "eta_sigma", "n_sigma"):
        assert got[key] == pytest.approx(want[key], rel=1e-6, abs=1e-9)
    assert got["converged"] is True
    assert got["model"] == want["model"]


def test_fit_malformed_csv(tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("angle_deg,value,std_err,pulses\n0,xyz,0.1,10\n")
    rc = cli.main(["fit", "--input", str(bad), "--model", "nrf-hwp",
                   "--kind", "psi_minus"])
    assert rc == 1


# ---------------------------------------------------------------------------
# crosscheck


def test_crosscheck_passes_and_reports(tmp_path):
    rc, text = run(tmp_path, "crosscheck", "--trials", "4", "--seed", "5")
    assert rc == 0
    payload = json.loads(text)
    assert payload["pass"] is True
    assert payload["max_discrepancy"]["var"] < payload["tolerance"]
    assert set(payload["max_discrepancy"]) == {"mean", "var", "cross", "s0_cov", "nrf"}


def test_crosscheck_breach_exit_code(tmp_path):
    rc, text = run(tmp_path, "crosscheck", "--trials", "2", "--seed", "5",
                   "--tolerance", "1e-18")
    assert rc == 2
    assert json.loads(text)["pass"] is False


def test_crosscheck_zero_gain_marks_nrf_undefined(tmp_path):
    rc, text = run(tmp_path, "crosscheck", "--trials", "2", "--seed", "5",
                   "--gamma", "0")
    assert rc == 0
    payload = json.loads(text)
    assert payload["nrf_undefined_entries"] == 8
    assert payload["max_discrepancy"]["mean"] == 0.0


# ---------------------------------------------------------------------------
# config handling


def test_config_file_with_flag_override(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("state=psi_minus\neta=0.05\nn_mean=0.8\n")
    rc, text = run(tmp_path, "witness", "--config", str(cfg))
    assert json.loads(text)["kind"] == "psi_minus"
    assert json.loads(text)["lhs"] == pytest.approx(2.85, abs=1e-8)
    rc, text = run(tmp_path, "witness", "--config", str(cfg), "--eta", "0.4")
    assert json.loads(text)["lhs"] == pytest.approx(1.80, abs=1e-8)


def test_config_validation_errors(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("gamma=0.5\nn_mean=0.8\n")
    rc, _ = run(tmp_path, "witness", "--config", str(cfg))
    assert rc == 1
    cfg.write_text("volume=11\n")
    rc, _ = run(tmp_path, "witness", "--config", str(cfg))
    assert rc == 1
    rc, _ = run(tmp_path, "witness", "--kind", "sigma_plus")
    assert rc == 1


def test_unknown_subcommand_is_validation_error():
    assert cli.main(["transmogrify"]) == 1
