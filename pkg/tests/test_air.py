import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fibershaper.air import (gauss_hermite_rate, gh_air, gh_air_gradient,
                             mc_air)
from fibershaper.constellations import (Constellation4D, generate_qam,
                                        get_format, normalize_unit_energy,
                                        pm_from_2d)
from fibershaper.errors import ConfigError
from fibershaper.linkmodel import NoiseProfile


def _iso(var: float, p: float = 1.0) -> NoiseProfile:
    return NoiseProfile(var_x=var, var_y=var, p_ase=var, p_nli_x=0.0,
                        p_nli_y=0.0, launch_power_w=p)


def _aniso(vx: float, vy: float, p: float = 1.0) -> NoiseProfile:
    return NoiseProfile(var_x=vx, var_y=vy, p_ase=min(vx, vy),
                        p_nli_x=vx - min(vx, vy), p_nli_y=vy - min(vx, vy),
                        launch_power_w=p)


def _random_c(seed: int, m: int = 16) -> Constellation4D:
    rng = np.random.default_rng(seed)
    return normalize_unit_energy(Constellation4D(rng.normal(size=(m, 4))))


# --------------------------------------------------------------------------
# limits and bounds

def test_saturation_limit():
    # per-2D SNR 40 dB: mu2 = 0.5 per pol, var = 0.5e-4
    rate = gh_air(get_format("pm-16qam"), _iso(0.5e-4)).rate_bit_per_4d
    assert abs(rate - 8.0) < 1e-4


def test_noise_dominated_limit():
    rate = gh_air(get_format("pm-qpsk"), _iso(1e4)).rate_bit_per_4d
    assert 0.0 <= rate < 1e-3


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(2, 24),
       st.floats(0.01, 10.0), st.floats(0.01, 10.0))
def test_rate_bounded_by_entropy(seed, m, vx, vy):
    C = _random_c(seed, m)
    rate = gh_air(C, _aniso(vx, vy)).rate_bit_per_4d
    assert rate <= math.log2(m) + 1e-12
    assert rate >= -1e-9


def test_more_noise_never_helps():
    C = get_format("pm-8qam")
    rates = [gh_air(C, _iso(v)).rate_bit_per_4d
             for v in (0.01, 0.03, 0.1, 0.3, 1.0)]
    assert all(a > b for a, b in zip(rates, rates[1:]))


# --------------------------------------------------------------------------
# exact symmetries of the quadrature

def test_quarter_turn_invariance():
    """Per-pol quarter turns permute the node grid exactly."""
    C = _random_c(11)
    base = gh_air(C, _iso(0.08)).rate_bit_per_4d
    # (I, Q) -> (-Q, I) in x pol only
    pts = C.points[:, [1, 0, 2, 3]] * np.array([-1.0, 1.0, 1.0, 1.0])
    rot = gh_air(Constellation4D(pts), _iso(0.08)).rate_bit_per_4d
    assert abs(rot - base) < 1e-9
    flip = gh_air(Constellation4D(-C.points), _iso(0.08)).rate_bit_per_4d
    assert abs(flip - base) < 1e-9


def test_polarization_swap_with_metric():
    C = _random_c(12)
    a = gh_air(C, _aniso(0.05, 0.2)).rate_bit_per_4d
    swapped = Constellation4D(C.points[:, [2, 3, 0, 1]])
    b = gh_air(swapped, _aniso(0.2, 0.05)).rate_bit_per_4d
    assert abs(a - b) < 1e-12


def test_physical_frame_invariance():
    """Scaling power and noise together leaves the rate unchanged."""
    C = _random_c(13)
    a = gh_air(C, _aniso(0.05, 0.11, p=1.0)).rate_bit_per_4d
    b = gh_air(C, _aniso(0.05 * 7.3, 0.11 * 7.3, p=7.3)).rate_bit_per_4d
    assert abs(a - b) < 1e-12


def test_deterministic():
    C = _random_c(14)
    a = gh_air(C, _iso(0.07)).rate_bit_per_4d
    b = gh_air(C, _iso(0.07)).rate_bit_per_4d
    assert a == b


# --------------------------------------------------------------------------
# quadrature accuracy

def test_gh48_matches_frozen_2d_oracle():
    """Converged quadrature against values frozen from a 2M-sample MC run."""
    q = generate_qam(16)
    pts = np.column_stack([q.real, q.imag])
    for snr_db, frozen in ((12.0, 3.57941), (15.0, 3.92853)):
        var = 10.0 ** (-snr_db / 10.0)
        rate = gauss_hermite_rate(pts, [var / 2, var / 2], 48)
        assert rate == pytest.approx(frozen, abs=2e-4)


def test_product_factorization():
    """A product of independent 2D sets carries the sum of the 2D rates."""
    q = generate_qam(8)
    pts2 = np.column_stack([q.real, q.imag])
    r2 = gauss_hermite_rate(pts2, [0.04, 0.04], 8)
    C4 = pm_from_2d(q)
    r4 = gauss_hermite_rate(C4.points, [0.04] * 4, 8)
    assert r4 == pytest.approx(2.0 * r2, abs=1e-9)


def test_factorization_anisotropic():
    qa = generate_qam(4)
    qb = generate_qam(8)
    pa = np.column_stack([qa.real, qa.imag])
    pb = np.column_stack([qb.real, qb.imag])
    ra = gauss_hermite_rate(pa, [0.03, 0.03], 8)
    rb = gauss_hermite_rate(pb, [0.09, 0.09], 8)
    a = np.repeat(np.arange(4), 8)
    b = np.tile(np.arange(8), 4)
    prod = np.column_stack([pa[a], pb[b]])
    r4 = gauss_hermite_rate(prod, [0.03, 0.03, 0.09, 0.09], 8)
    assert r4 == pytest.approx(ra + rb, abs=1e-9)


@pytest.mark.xfail(strict=True,
                   reason="8-node tensor quadrature carries ~1e-2 bias for "
                          "256 points at low SNR; adequacy holds only near "
                          "the model-optimal operating points")
def test_gh8_vs_gh16_low_snr_pm16qam():
    C = get_format("pm-16qam")
    var = 0.5 * 10.0 ** (-1.2)  # per-2D SNR 12 dB
    r8 = gh_air(C, _iso(var), 8).rate_bit_per_4d
    r16 = gh_air(C, _iso(var), 16).rate_bit_per_4d
    assert abs(r8 - r16) < 5e-3


def test_gh8_vs_gh16_small_formats_low_snr():
    var = 0.5 * 10.0 ** (-1.2)
    for name in ("pm-qpsk", "pm-8qam"):
        C = get_format(name)
        r8 = gh_air(C, _iso(var), 8).rate_bit_per_4d
        r16 = gh_air(C, _iso(var), 16).rate_bit_per_4d
        assert abs(r8 - r16) < 5e-3, name


# --------------------------------------------------------------------------
# gradient

def _fd_gradient(C: Constellation4D, prof: NoiseProfile, h: float = 1e-3):
    """Richardson-extrapolated central differences, element by element."""
    def central(step):
        out = np.zeros_like(C.points)
        for i in range(C.M):
            for d in range(4):
                up = C.points.copy()
                up[i, d] += step
                dn = C.points.copy()
                dn[i, d] -= step
                out[i, d] = (
                    gh_air(Constellation4D(up), prof).rate_bit_per_4d
                    - gh_air(Constellation4D(dn), prof).rate_bit_per_4d
                ) / (2 * step)
        return out

    return (4.0 * central(h / 2) - central(h)) / 3.0


def test_gradient_matches_finite_differences():
    C = _random_c(3, m=8)
    prof = _aniso(0.05, 0.08, p=1.3)
    g = gh_air_gradient(C, prof, 8)
    assert g.shape == (8, 4)
    fd = _fd_gradient(C, prof)
    rel = np.max(np.abs(g - fd) / np.maximum(np.abs(fd), 1e-9))
    assert rel < 1e-6


def test_gradient_points_uphill():
    C = _random_c(4, m=12)
    prof = _iso(0.1)
    g = gh_air_gradient(C, prof)
    step = 1e-4 * g / np.linalg.norm(g)
    r0 = gh_air(C, prof).rate_bit_per_4d
    r1 = gh_air(Constellation4D(C.points + step), prof).rate_bit_per_4d
    assert r1 > r0


# --------------------------------------------------------------------------
# monte-carlo estimator

def test_mc_agrees_with_quadrature():
    C = get_format("pm-qpsk")
    var = 0.5 * 10.0 ** (-0.8)
    prof = _iso(var)
    rng = np.random.default_rng(99)
    K = 200_000
    idx = rng.integers(0, C.M, K)
    rx = C.points[idx] + rng.normal(size=(K, 4)) * np.sqrt(var / 2.0)
    est = mc_air(C, idx, rx, noise=prof)
    ref = gh_air(C, prof, 16).rate_bit_per_4d
    assert est.backend == "monte-carlo"
    assert est.std_error is not None and est.std_error < 0.01
    assert abs(est.rate_bit_per_4d - ref) < 3 * est.std_error + 2e-3


def test_mc_estimates_noise_when_not_given():
    C = get_format("pm-8qam")
    var = 0.04
    rng = np.random.default_rng(17)
    K = 150_000
    idx = rng.integers(0, C.M, K)
    rx = C.points[idx] + rng.normal(size=(K, 4)) * np.sqrt(var / 2.0)
    est = mc_air(C, idx, rx)
    assert est.noise.var_x == pytest.approx(var, rel=2e-2)
    assert est.noise.var_y == pytest.approx(var, rel=2e-2)
    ref = gh_air(C, est.noise, 16).rate_bit_per_4d
    assert abs(est.rate_bit_per_4d - ref) < 3 * est.std_error + 2e-3


def test_mc_accepts_complex_pairs():
    C = get_format("pm-qpsk")
    rng = np.random.default_rng(5)
    idx = rng.integers(0, C.M, 1000)
    rx = C.points[idx] + 0.05 * rng.normal(size=(1000, 4))
    rx_c = np.column_stack([rx[:, 0] + 1j * rx[:, 1], rx[:, 2] + 1j * rx[:, 3]])
    a = mc_air(C, idx, rx)
    b = mc_air(C, idx, rx_c)
    assert a.rate_bit_per_4d == b.rate_bit_per_4d


def test_mismatched_metric_loses_rate():
    """Decoding with the wrong variance cannot beat the matched metric."""
    C = get_format("pm-16qam")
    var = 0.5 * 10.0 ** (-1.5)
    rng = np.random.default_rng(31)
    K = 120_000
    idx = rng.integers(0, C.M, K)
    rx = C.points[idx] + rng.normal(size=(K, 4)) * np.sqrt(var / 2.0)
    matched = mc_air(C, idx, rx, noise=_iso(var))
    off = mc_air(C, idx, rx, noise=_aniso(4.0 * var, var / 4.0))
    assert off.rate_bit_per_4d < matched.rate_bit_per_4d + 1e-6


def test_mc_input_validation():
    C = get_format("pm-qpsk")
    with pytest.raises(ConfigError):
        mc_air(C, [], np.zeros((0, 4)))
    with pytest.raises(ConfigError):
        mc_air(C, [0, 1], np.zeros((3, 4)))
    with pytest.raises(ConfigError):
        mc_air(C, [0, C.M], np.zeros((2, 4)))  # index out of range
    with pytest.raises(ConfigError):
        mc_air(C, [0, 1], np.zeros((2, 3)))
    with pytest.raises(ConfigError):
        mc_air(C, [0, 1], C.points[[0, 1]])  # zero residual, no noise given


def test_gh_input_validation():
    C = get_format("pm-qpsk")
    with pytest.raises(ConfigError):
        gh_air(C, _iso(0.1), points_per_dim=1)
    with pytest.raises(ConfigError):
        gh_air(C, NoiseProfile(0.0, 0.1, 0.0, 0.0, 0.1, 1.0))
    with pytest.raises(ConfigError):
        gauss_hermite_rate(np.zeros((1, 4)), [0.1] * 4)
    with pytest.raises(ConfigError):
        gauss_hermite_rate(np.eye(4), [0.1] * 3)
