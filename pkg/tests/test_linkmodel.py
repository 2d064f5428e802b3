import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fibershaper.constellations import (Constellation4D, get_format, moments,
                                        normalize_unit_energy)
from fibershaper.errors import BracketError, ConfigError, IntegrationError
from fibershaper.linkmodel import (LinkConfig, NliCoefficientSet, NoiseProfile,
                                   TxConfig, ase_power,
                                   compute_nli_coefficients, dbm_to_watts,
                                   effective_snr, nli_power, noise_profile,
                                   optimal_launch, watts_to_dbm)

PLANCK = 6.62607015e-34
C_LIGHT = 299792458.0


def test_ase_power_single_span_oracle(link, tx):
    """Independent recomputation: (G-1) (F/2) h nu R_s with Table values."""
    gain = 10.0 ** (0.2 * 100.0 / 10.0)
    nf = 10.0 ** (5.0 / 10.0)
    nu = C_LIGHT / 1550e-9
    expected = (gain - 1.0) * (nf / 2.0) * PLANCK * nu * 50e9
    got = ase_power(link, tx, 1)
    assert got == pytest.approx(expected, rel=1e-12)
    assert watts_to_dbm(got) == pytest.approx(-29.9868, abs=5e-4)


def test_ase_power_linear_in_spans(link, tx):
    one = ase_power(link, tx, 1)
    for n in (2, 5, 17, 100):
        assert ase_power(link, tx, n) == pytest.approx(n * one, rel=1e-12)
    with pytest.raises(ConfigError):
        ase_power(link, tx, 0)


def test_config_validation():
    with pytest.raises(ConfigError):
        LinkConfig(alpha_db_per_km=-0.1)
    with pytest.raises(ConfigError):
        LinkConfig(span_length_km=0.0)
    with pytest.raises(ConfigError):
        LinkConfig(gamma_per_w_km=-1.0)
    LinkConfig(gamma_per_w_km=0.0)  # linear fiber is allowed
    with pytest.raises(ConfigError):
        TxConfig(symbol_rate_gbaud=0.0)
    with pytest.raises(ConfigError):
        TxConfig(rrc_rolloff=0.0)
    with pytest.raises(ConfigError):
        TxConfig(rrc_rolloff=1.0)


def test_kernel_coefficients_frozen_values(coeffs10):
    """Regression pins from a converged integration of the Table-1 link."""
    assert coeffs10.provenance == "kernel-integrated"
    assert coeffs10.n_spans == 10
    assert coeffs10.relative_error is not None
    assert coeffs10.relative_error <= 5e-3
    assert coeffs10.chi0_x == pytest.approx(779.313, rel=1e-3)
    assert coeffs10.chi_phi_x == pytest.approx(242.819, rel=1e-3)
    assert coeffs10.chi_psi_x == pytest.approx(8.45949, rel=2e-3)
    assert coeffs10.chi_xpol_x == pytest.approx(94.5083, rel=1e-3)
    # single-channel Manakov model is polarization symmetric
    assert coeffs10.chi0_x == coeffs10.chi0_y
    assert coeffs10.chi_phi_x == coeffs10.chi_phi_y
    assert coeffs10.chi_psi_x == coeffs10.chi_psi_y
    assert coeffs10.chi_xpol_x == coeffs10.chi_xpol_y


def test_kernel_cache_round_trip(tmp_path, link, tx):
    a = compute_nli_coefficients(link, tx, 1, cache_dir=tmp_path)
    files = list(tmp_path.glob("*.json"))
    assert len(files) == 1
    # prove the second call reads the cache: poke a sentinel into the file
    payload = json.loads(files[0].read_text())
    payload["chi0_x"] = payload["chi0_y"] = 123.0
    files[0].write_text(json.dumps(payload))
    b = compute_nli_coefficients(link, tx, 1, cache_dir=tmp_path)
    assert b.chi0_x == 123.0
    assert a.chi0_x != 123.0
    assert b.chi_phi_x == a.chi_phi_x


def test_gamma_zero_gives_zero_coefficients_and_no_optimum(tmp_path, tx):
    linear = LinkConfig(gamma_per_w_km=0.0)
    coeffs = compute_nli_coefficients(linear, tx, 10, cache_dir=tmp_path)
    assert coeffs.chi0_x == 0.0 and coeffs.chi_psi_y == 0.0
    assert coeffs.relative_error == 0.0
    C = get_format("pm-qpsk")
    nx, ny = nli_power(coeffs, moments(C), 0.01)
    assert nx == 0.0 and ny == 0.0
    with pytest.raises(BracketError):
        optimal_launch(C, linear, tx, 10, coeffs=coeffs)


@settings(max_examples=30, deadline=None)
@given(st.floats(1e-6, 0.05))
def test_nli_cubic_power_scaling(p):
    coeffs = NliCoefficientSet(800.0, 800.0, 240.0, 240.0, 8.0, 8.0,
                               90.0, 90.0, n_spans=10,
                               provenance="kernel-integrated")
    mom = moments(get_format("pm-16qam"))
    n1 = nli_power(coeffs, mom, p)
    n2 = nli_power(coeffs, mom, 2.0 * p)
    assert n2[0] == pytest.approx(8.0 * n1[0], rel=1e-12)
    assert n2[1] == pytest.approx(8.0 * n1[1], rel=1e-12)
    assert nli_power(coeffs, mom, 0.0) == (0.0, 0.0)


def test_nli_power_rejects_negative_power(coeffs10):
    with pytest.raises(ConfigError):
        nli_power(coeffs10, moments(get_format("pm-qpsk")), -1e-3)


def test_nli_polarization_swap(coeffs10):
    rng = np.random.default_rng(5)
    pts = rng.normal(size=(12, 4))
    C = normalize_unit_energy(Constellation4D(pts))
    Cs = normalize_unit_energy(Constellation4D(pts[:, [2, 3, 0, 1]]))
    nx, ny = nli_power(coeffs10, moments(C), 2e-3)
    sx, sy = nli_power(coeffs10, moments(Cs), 2e-3)
    assert sx == pytest.approx(ny, rel=1e-12)
    assert sy == pytest.approx(nx, rel=1e-12)


def test_nli_format_ordering_frozen(coeffs10):
    """Lower kurtosis means less NLI: QPSK below 16QAM, pinned values."""
    p = 2e-3
    q = nli_power(coeffs10, moments(get_format("pm-qpsk")), p)
    s = nli_power(coeffs10, moments(get_format("pm-16qam")), p)
    assert q[0] < s[0]
    assert q[0] == pytest.approx(4.563e-6, rel=2e-3)
    assert s[0] == pytest.approx(5.054e-6, rel=2e-3)


def test_chi_scale_shifts_optimum_by_cube_root(link, tx, coeffs10):
    """8x stronger NLI moves the optimum launch down by 10 log10(8)/3 dB."""
    C = get_format("pm-16qam")
    p1, _, _ = optimal_launch(C, link, tx, 10, coeffs=coeffs10)
    scaled = NliCoefficientSet(
        8 * coeffs10.chi0_x, 8 * coeffs10.chi0_y,
        8 * coeffs10.chi_phi_x, 8 * coeffs10.chi_phi_y,
        8 * coeffs10.chi_psi_x, 8 * coeffs10.chi_psi_y,
        8 * coeffs10.chi_xpol_x, 8 * coeffs10.chi_xpol_y,
        n_spans=10, provenance="kernel-integrated")
    p2, _, _ = optimal_launch(C, link, tx, 10, coeffs=scaled)
    shift_db = 10.0 * math.log10(p2 / p1)
    assert shift_db == pytest.approx(-10.0 * math.log10(8.0) / 3.0, abs=0.02)


def test_optimal_launch_is_interior_maximum(link, tx, coeffs10):
    C = get_format("pm-16qam")
    p_opt, prof, snr = optimal_launch(C, link, tx, 10, coeffs=coeffs10)
    assert prof.launch_power_w == pytest.approx(p_opt, rel=1e-12)
    assert watts_to_dbm(p_opt) == pytest.approx(3.00, abs=0.05)
    assert 10 * math.log10(snr) == pytest.approx(18.21, abs=0.05)
    for factor in (0.89, 1.12):
        probe = effective_snr(C, factor * p_opt, link, tx, 10, coeffs=coeffs10)
        assert probe.snr_4d < snr
    # at optimum the NLI carries half the ASE weight: d/dP (ase + nli)/P = 0
    total_nli = prof.p_nli_x + prof.p_nli_y
    assert total_nli / (2 * prof.p_ase) == pytest.approx(0.5, abs=0.01)


def test_effective_snr_decomposition(link, tx, coeffs10):
    C = get_format("pm-16qam")
    est = effective_snr(C, 1e-3, link, tx, 10, coeffs=coeffs10)
    mom = moments(C)
    assert est.noise.var_x == pytest.approx(
        est.noise.p_ase + est.noise.p_nli_x, rel=1e-12)
    assert est.snr_x == pytest.approx(mom.mu2_x * 1e-3 / est.noise.var_x,
                                      rel=1e-12)
    assert est.snr_4d == pytest.approx(
        1e-3 / (est.noise.var_x + est.noise.var_y), rel=1e-12)
    assert est.snr_4d_db == pytest.approx(10 * math.log10(est.snr_4d))
    with pytest.raises(ConfigError):
        effective_snr(C, 0.0, link, tx, 10, coeffs=coeffs10)


def test_noise_profile_consistency_guard():
    with pytest.raises(ConfigError, match="var_p"):
        NoiseProfile(var_x=1e-6, var_y=1e-6, p_ase=1e-6, p_nli_x=1e-6,
                     p_nli_y=0.0, launch_power_w=1e-3)
    with pytest.raises(ConfigError):
        NoiseProfile(var_x=-1e-6, var_y=1e-6, p_ase=1e-6, p_nli_x=0.0,
                     p_nli_y=0.0, launch_power_w=1e-3)


def test_coefficient_set_validation():
    with pytest.raises(ConfigError, match="provenance"):
        NliCoefficientSet(1, 1, 0, 0, 0, 0, 0, 0, n_spans=1,
                          provenance="guessed")
    with pytest.raises(ConfigError):
        NliCoefficientSet(-1, 1, 0, 0, 0, 0, 0, 0, n_spans=1,
                          provenance="kernel-integrated")
    with pytest.raises(ConfigError):
        NliCoefficientSet(1, 1, 0, 0, 0, 0, 0, 0, n_spans=0,
                          provenance="kernel-integrated")


def test_integration_error_when_budget_too_small(tmp_path, link, tx):
    with pytest.raises(IntegrationError) as exc:
        compute_nli_coefficients(
            link, tx, 1, cache_dir=tmp_path, points_log2=6, max_points_log2=6,
            randomizations=2, target_relative_error=1e-12,
            max_relative_error=1e-12)
    assert exc.value.relative_error is not None
    assert exc.value.relative_error > 1e-12


def test_kernel_seed_stability(tmp_path, link, tx):
    a = compute_nli_coefficients(link, tx, 1, cache_dir=tmp_path / "a",
                                 seed=1)
    b = compute_nli_coefficients(link, tx, 1, cache_dir=tmp_path / "b",
                                 seed=2)
    assert b.chi0_x == pytest.approx(a.chi0_x, rel=5e-2)
    assert b.chi_phi_x == pytest.approx(a.chi_phi_x, rel=5e-2)


def test_callable_nli_model(link, tx):
    mom = moments(get_format("pm-qpsk"))
    eta = lambda m, p: (2.0 * p**3, 3.0 * p**3)
    nx, ny = nli_power(eta, mom, 0.1)
    assert nx == pytest.approx(2e-3, rel=1e-12)
    assert ny == pytest.approx(3e-3, rel=1e-12)


@settings(max_examples=50, deadline=None)
@given(st.floats(-60.0, 30.0))
def test_dbm_round_trip(p_dbm):
    assert watts_to_dbm(dbm_to_watts(p_dbm)) == pytest.approx(p_dbm, abs=1e-9)
