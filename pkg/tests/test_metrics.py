import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from mmwave_d2d.analytic import stp
from mmwave_d2d.config import effective_gain_pmf, table1_scenario
from mmwave_d2d.metrics import (
    band_metrics,
    ee_from_stp,
    energy_efficiency,
    golden_section_max,
    rate_lower_bound,
)


def test_rate_examples():
    assert rate_lower_bound(20e6, 1.0, lambda T: 1.0) == 2.0e7
    assert rate_lower_bound(20e6, 1.0, lambda T: 0.0) == 0.0
    assert rate_lower_bound(20e6, 1.0, lambda T: 0.0, "sup") == 0.0
    with pytest.raises(ValueError):
        rate_lower_bound(0.0, 1.0, lambda T: 1.0)
    with pytest.raises(ValueError):
        rate_lower_bound(1.0, 1.0, lambda T: 1.0, "best")


def test_rate_sup_against_grid():
    # log2(1+T)/(1+T) peaks at T = e - 1
    W = 20e6
    got = rate_lower_bound(W, 1.0, lambda T: 1.0 / (1.0 + T), "sup")
    x = np.arange(-3, 3, 1e-6)
    T = 10.0 ** x
    grid_best = np.max(W * np.log2(1 + T) / (1 + T))
    assert_allclose(got, grid_best, rtol=1e-8)
    assert_allclose(got, W * math.log2(math.e) / math.e, rtol=1e-8)


def test_golden_section_quadratic():
    x, fx = golden_section_max(lambda x: -(x - 0.3) ** 2, -1.0, 2.0, rtol=1e-9)
    assert_allclose(x, 0.3, atol=1e-8)
    assert_allclose(fx, 0.0, atol=1e-15)


def test_ee_direct_arithmetic():
    cfg = table1_scenario(num_bands=1, P_c_total=0.325)
    assert_allclose(ee_from_stp(cfg, [0.01], [1.0]), 2e9, rtol=1e-14)


def test_ee_zero_denominator(cfg):
    with pytest.raises(ZeroDivisionError):
        energy_efficiency(cfg, np.zeros(5))
    with pytest.raises(ZeroDivisionError):
        ee_from_stp(cfg.replace(lambda_d=0.0), np.full(5, 0.01), np.ones(5))


def test_ee_vanishes_with_circuit_power(cfg):
    p = np.full(5, 0.01)
    ee = [energy_efficiency(cfg.replace(P_cir=x), p) for x in (0.0, 1.0, 1e3, 1e6)]
    assert np.all(np.diff(ee) < 0)
    assert ee[-1] < 1e-6 * ee[0]


@given(st.floats(1e-3, 1e3))
def test_ee_density_scaling_cancels(kappa):
    cfg = table1_scenario(P_cir=0.002)
    p = np.array([0.001, 0.002, 0.005, 0.01, 0.02])
    s = np.array([0.9, 0.8, 0.95, 0.5, 0.99])
    scaled = cfg.replace(lambda_d=cfg.lambda_d * kappa)
    assert_allclose(ee_from_stp(scaled, p, s), ee_from_stp(cfg, p, s), rtol=1e-12)


def test_ee_matches_closed_form_expression(cfg):
    # EE = sum_i s_i exp(-k (lambda_d + lambda_c sqrt(P_c/P_i))) / sum_i lambda_d (P_i + 2 P_cir)
    cfg = cfg.replace(P_cir=0.001)
    p = np.array([0.001, 0.004, 0.008, 0.012, 0.02])
    t = sum(pk * math.sqrt(g / cfg.G0) for g, pk in effective_gain_pmf(cfg.antenna))
    s = cfg.lambda_d * cfg.bandwidth_per_band * np.log2(1 + cfg.T_d) * (1 - np.exp(-cfg.beta * cfg.R_d))
    k = 0.5 * math.pi ** 2 * cfg.R_d ** 2 * t
    num = s * np.exp(-k * (cfg.lambda_d + cfg.lambda_c * np.sqrt(cfg.P_c_i / p)))
    expected = num.sum() / np.sum(cfg.lambda_d * (p + 2 * cfg.P_cir))
    assert_allclose(energy_efficiency(cfg, p), expected, rtol=1e-12)


def test_band_metrics_consistent(cfg):
    p = np.array([0.001, 0.004, 0.008, 0.012, 0.02])
    bm = band_metrics(cfg, p)
    for b in bm:
        assert_allclose(b.stp_d, stp(cfg, p[b.band], b.band, "d2d").value)
        assert_allclose(b.rate_d, 20e6 * b.stp_d)
        assert_allclose(b.asr_d, 1e-4 * b.rate_d)
    # bands do not interfere: total ASR is the plain sum
    assert_allclose(energy_efficiency(cfg, p) * np.sum(cfg.lambda_d * p), sum(b.asr_d for b in bm), rtol=1e-13)


def test_band_metrics_sup_mode_dominates_fixed(cfg):
    p = np.full(5, 0.01)
    fixed = band_metrics(cfg, p)
    sup = band_metrics(cfg, p, rate_mode="sup")
    for f, s in zip(fixed, sup):
        assert s.rate_d >= f.rate_d * (1 - 1e-9)


@given(st.lists(st.floats(1e-4, 0.02), min_size=5, max_size=5), st.floats(0, 0.01))
def test_ee_continuous_nonnegative(p, pcir):
    cfg = table1_scenario(P_cir=pcir)
    p = np.array(p)
    ee = energy_efficiency(cfg, p)
    assert ee >= 0
    assert_allclose(energy_efficiency(cfg, p * (1 + 1e-9)), ee, rtol=1e-6)
