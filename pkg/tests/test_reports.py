"""Delimited outputs and figure files: schemas stay put, files appear."""

import csv

import pytest

from fibershaper import (
    OptimizationTrace,
    SweepResult,
    SweepRow,
    compare_sweeps,
    energy_levels,
    get_format,
    moments,
    reports,
)
from fibershaper.optimizer import TraceRow


def _sweep(pairs, name="probe"):
    rows = [
        SweepRow(n_spans=int(d // 100), distance_km=float(d), p_opt_dbm=1.5,
                 snr_4d_db=15.0, air_bit_per_4d=float(r), backend="model")
        for d, r in pairs
    ]
    return SweepResult(constellation=name, link_hash="", rows=rows)


def test_column_contracts_are_pinned():
    assert reports.AIR_COLUMNS == (
        "constellation", "n_spans", "distance_km", "launch_power_dbm",
        "snr_4d_db", "air_bit_per_4d", "backend", "std_error")
    assert reports.SWEEP_COLUMNS == (
        "n_spans", "distance_km", "p_opt_dbm", "snr_4d_db",
        "air_bit_per_4d", "backend")
    assert reports.COMPARE_COLUMNS == (
        "name", "reach_km", "rate_at_reference_bit_per_4d",
        "rate_gain_bit_per_4d", "reach_gain_pct")
    assert reports.TRACE_COLUMNS == (
        "iteration", "objective_bit_per_4d", "grad_norm", "p_opt_dbm",
        "snr_4d_db", "step_size")


def test_air_csv_serializes_missing_std_error_as_empty(tmp_path):
    row = {"constellation": "x", "n_spans": 10, "distance_km": 1000.0,
           "launch_power_dbm": 3.0, "snr_4d_db": 18.0,
           "air_bit_per_4d": 7.25, "backend": "gauss-hermite",
           "std_error": None}
    path = reports.write_air_csv(tmp_path / "air.csv", [row])
    text = path.read_text().splitlines()
    assert text[0] == ",".join(reports.AIR_COLUMNS)
    assert text[1].endswith("gauss-hermite,")


def test_sweep_csv_round_trips_values(tmp_path):
    sw = _sweep([(1000, 6.5), (1100, 6.3)])
    path = reports.write_sweep_csv(tmp_path / "sweep.csv", sw)
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert [r["n_spans"] for r in rows] == ["10", "11"]
    assert float(rows[0]["air_bit_per_4d"]) == 6.5
    assert rows[0]["backend"] == "model"


def test_compare_csv_contains_one_row_per_format(tmp_path):
    report = compare_sweeps(
        [_sweep([(1000, 6.5), (1100, 6.3)], "a"),
         _sweep([(1000, 6.6), (1100, 6.4)], "b")], 6.4)
    path = reports.write_compare_csv(tmp_path / "compare.csv", report)
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert [r["name"] for r in rows] == ["a", "b"]
    assert float(rows[0]["rate_gain_bit_per_4d"]) == 0.0
    assert float(rows[1]["reach_gain_pct"]) == pytest.approx(100 * 50 / 1050)


def test_moments_csv_encodes_levels_compactly(tmp_path):
    C = get_format("pm-16qam")
    path = reports.write_moments_csv(
        tmp_path / "m.csv", "pm-16qam", C.M, moments(C),
        energy_levels(C, tol=0.01))
    with open(path, newline="") as fh:
        (row,) = list(csv.DictReader(fh))
    assert row["m_points"] == "256"
    parts = row["energy_levels"].split("|")
    assert len(parts) == 5
    assert parts[0] == "0.2x16"


def test_figures_render_to_files(tmp_path):
    sw = _sweep([(1000, 6.5), (1100, 6.3)])
    trace = OptimizationTrace(rows=[
        TraceRow(iteration=0, objective_bit_per_4d=6.0, grad_norm=0.1,
                 p_opt_dbm=2.0, snr_4d_db=17.0, step_size=0.25),
        TraceRow(iteration=1, objective_bit_per_4d=6.2, grad_norm=0.01,
                 p_opt_dbm=2.0, snr_4d_db=17.0, step_size=0.25),
    ], status="converged")

    p1 = reports.plot_constellation(get_format("pm-8qam"),
                                    tmp_path / "c.png")
    p2 = reports.plot_sweep([sw], tmp_path / "s.png", rate_threshold=6.4)
    p3 = reports.plot_trace(trace, tmp_path / "t.png")
    for p in (p1, p2, p3):
        assert p.exists()
        assert p.stat().st_size > 1000
        assert p.read_bytes()[:8] == b"\x89PNG\r\n\x1a\n"
