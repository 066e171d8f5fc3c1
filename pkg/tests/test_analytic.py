import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from numpy.testing import assert_allclose
from scipy import integrate, special

from mmwave_d2d.analytic import (
    BandStpModel,
    StpCurve,
    UnsupportedModelError,
    binomial_alternating_sum,
    closed_form_stp_m1,
    closed_form_stp_m2,
    integral_terms,
    interference_integral,
    kernel_constant,
    lemma1_constant,
    stp,
    stp_cellular,
    stp_d2d,
)
from mmwave_d2d.config import effective_gain_pmf, table1_scenario


def gamma_kernel(alpha, m):
    """Integral of 1 - (1 + 1/(m r^a))^-m * r over r > 0, times m^(2/a)."""
    return 0.5 * special.gamma(1 - 2 / alpha) * special.gamma(m + 2 / alpha) / special.gamma(m)


def reference_stp(cfg, P_d, band, who):
    """
    STP from the gamma-function identity for the interference integrals:
    the LOS and NLOS weights sum to one, so each class contributes
    (c/m)^(2/alpha) * K(alpha, m) with c the scaled threshold.
    """
    b = cfg.band(band)
    m, a = cfg.nakagami_m, lemma1_constant(cfg.nakagami_m)
    if who == "d2d":
        P, T, R, ratios = P_d, b["T_d"], b["R_d"], {"d": 1.0, "c": cfg.P_c_i / P_d}
    else:
        P, T, R, ratios = cfg.P_c_i, b["T_c"], b["R_c"], {"d": P_d / cfg.P_c_i, "c": 1.0}
    lam = {"d": b["lambda_d"], "c": b["lambda_c"]}
    f_L = math.exp(-cfg.beta * R)
    total = 0.0
    for weight, alpha in ((f_L, cfg.alpha_L), (1 - f_L, cfg.alpha_N)):
        if alpha <= 2:
            continue  # divergent interference, branch contributes 0
        K = gamma_kernel(alpha, m)
        for n in range(1, m + 1):
            expo = a * n * T * R ** alpha * cfg.N0 / (P * cfg.G0)
            for cls in "dc":
                for G_k, p_k in effective_gain_pmf(cfg.antenna):
                    c = a * n * T * R ** alpha * ratios[cls] * G_k / cfg.G0
                    expo += 2 * math.pi * lam[cls] * p_k * (c / m) ** (2 / alpha) * K
            total += weight * math.comb(m, n) * (-1) ** (n + 1) * math.exp(-expo)
    return total


# --- gamma-bound constant ---------------------------------------------------

@pytest.mark.parametrize("m, expected", [(1, 1.0), (2, 1.414214), (3, 1.650964)])
def test_lemma1_constant(m, expected):
    assert_allclose(lemma1_constant(m), expected, atol=5e-7)


def test_lemma1_constant_rejects_zero():
    with pytest.raises(ValueError):
        lemma1_constant(0)


@pytest.mark.parametrize("m", [2, 3, 5, 8])
def test_gamma_cdf_bound_direction(m):
    # (1 - exp(-a x))^m stays below the CDF of g ~ Gamma(m, 1/m), so the
    # analytic success probability sits above the exact one
    x = np.linspace(1e-3, 10, 5000)
    bound = (1 - np.exp(-lemma1_constant(m) * x)) ** m
    assert np.all(bound <= special.gammainc(m, m * x))


# --- interference integrals --------------------------------------------------

def test_integral_examples():
    # beta = 0: every link is LOS and the LOS weight is 1
    assert interference_integral(0.0, 4.0, 1, 0.0, "LOS") == 0.0
    assert_allclose(interference_integral(1.0, 4.0, 1, 0.0, "LOS"), math.pi / 4, rtol=1e-8)
    assert interference_integral(1.0, 2.0, 1, 0.0, "LOS") == math.inf
    assert interference_integral(1.0, 4.0, 1, 0.0, "NLOS") == 0.0


def test_integral_alpha_two_damped_los_converges():
    val = interference_integral(1.0, 2.0, 1, 0.45, "LOS")
    ref, _ = integrate.quad(lambda r: (1 - 1 / (1 + 1 / r ** 2)) * math.exp(-0.45 * r) * r, 0, np.inf, limit=400)
    assert_allclose(val, ref, rtol=1e-7)
    assert interference_integral(1.0, 2.0, 1, 0.45, "NLOS") == math.inf


@given(st.floats(1e-4, 1e4), st.sampled_from([2.5, 3.0, 4.0, 5.0]), st.integers(1, 6))
def test_integral_los_plus_nlos_is_gamma_identity(c, alpha, m):
    beta = 0.45
    tot = interference_integral(c, alpha, m, beta, "LOS") + interference_integral(c, alpha, m, beta, "NLOS")
    assert_allclose(tot, (c / m) ** (2 / alpha) * gamma_kernel(alpha, m), rtol=1e-6)


@pytest.mark.parametrize("j", ["LOS", "NLOS"])
@pytest.mark.parametrize("c, alpha, m", [(0.3, 4.0, 2), (50.0, 4.0, 1), (2.0, 4.0, 4), (5.0, 5.0, 3)])
def test_integral_against_direct_quadrature(j, c, alpha, m):
    w = (lambda r: math.exp(-0.45 * r)) if j == "LOS" else (lambda r: 1 - math.exp(-0.45 * r))
    f = lambda r: (1 - (1 + c / (r ** alpha * m)) ** (-m)) * w(r) * r
    ref = sum(integrate.quad(f, lo, hi, limit=500, epsabs=0, epsrel=1e-11)[0]
              for lo, hi in [(0, 1), (1, 10), (10, 100), (100, 1e4)])
    ref += integrate.quad(f, 1e4, np.inf, limit=500)[0]
    assert_allclose(interference_integral(c, alpha, m, 0.45, j), ref, rtol=1e-7)


@pytest.mark.parametrize("alpha", [2.5, 3.0, 4.0, 6.0])
@pytest.mark.parametrize("m", [1, 2, 5])
def test_kernel_constant_gamma_oracle(alpha, m):
    K, err = kernel_constant(alpha, m)
    assert_allclose(K, gamma_kernel(alpha, m), rtol=1e-8)
    assert err >= 0


def test_kernel_constant_diverges_at_two():
    assert kernel_constant(2.0, 3)[0] == math.inf


def test_integral_terms_shape(cfg):
    t = integral_terms(cfg, 0.012, 0, "d2d", 1)
    assert t.A_D["NLOS"] == math.inf and t.A_C["NLOS"] == math.inf
    assert 0 < t.A_D["LOS"] < math.inf
    for d in (t.B_D, t.B_C):
        assert all(0 <= v < math.inf for v in d.values())
    tb = integral_terms(cfg, 0.012, 0, "bs", 1)
    assert tb.F_C["NLOS"] > tb.F_D["NLOS"] > 0


# --- STP ---------------------------------------------------------------------

@pytest.mark.parametrize("m", [1, 2, 3])
@pytest.mark.parametrize("who", ["d2d", "bs"])
def test_stp_without_interferers_is_one(cfg, m, who):
    c = cfg.replace(lambda_d=0.0, lambda_c=0.0, nakagami_m=m)
    assert_allclose(stp(c, 0.01, 0, who, "quadrature").value, 1.0, rtol=1e-14)


def test_stp_reference_power_matches_closed_form(cfg):
    q = stp_d2d(cfg, 0.012, 0).value
    f_N = 1 - math.exp(-4.5)
    lam = 1e-4 + 1e-5 * math.sqrt(0.325 / 0.012)
    expected = math.exp(-0.5 * math.pi ** 2 * 100 * 0.1252393 * lam) * f_N
    assert_allclose(q, expected, rtol=2e-6)
    assert_allclose(q, closed_form_stp_m1(cfg, 0.012, 0, "d2d").value, rtol=1e-6)
    assert_allclose(stp_cellular(cfg, 0.012, 0).value, closed_form_stp_m1(cfg, 0.012, 0, "bs").value, rtol=1e-6)


def test_t_factor_reference_antenna(cfg):
    t = sum(p * math.sqrt(g / cfg.G0) for g, p in effective_gain_pmf(cfg.antenna))
    assert_allclose(t, 0.12524, atol=5e-6)
    # zero densities leave only the NLOS desired-link weight
    c = cfg.replace(lambda_d=0.0, lambda_c=0.0)
    assert_allclose(closed_form_stp_m1(c, 0.01, 0).value, 1 - math.exp(-4.5))


def test_threshold_to_zero(cfg):
    c = cfg.replace(T_d=1e-12, T_c=1e-12, alpha_L=3.0)
    assert stp(c, 0.01, 0, "d2d").value > 1 - 1e-5
    assert stp(c, 0.01, 0, "bs").value > 1 - 1e-5


def test_bs_stp_strictly_decreasing_in_pd(cfg):
    grid = np.linspace(1e-4, 0.02, 30)
    for method in ("quadrature", "auto"):
        v = [stp_cellular(cfg, p, 0, method).value for p in grid]
        assert np.all(np.diff(v) < 0)


def test_d2d_stp_increasing_in_pd(cfg_m2):
    v = [stp_d2d(cfg_m2, p, 0).value for p in np.linspace(1e-4, 0.02, 20)]
    assert np.all(np.diff(v) > 0)


def test_zero_d2d_power(cfg):
    assert stp(cfg, 0.0, 0, "d2d").value == 0.0
    # the BS then sees no D2D interference at all
    assert_allclose(stp(cfg, 0.0, 0, "bs", "quadrature").value,
                    stp(cfg.replace(lambda_d=0.0), 0.01, 0, "bs", "quadrature").value, rtol=1e-12)


random_scenarios = st.fixed_dictionaries({
    "lambda_d": st.floats(1e-6, 1e-3), "lambda_c": st.floats(0, 1e-4),  # beta may be tiny: exercises the analytic tail
    "R_d": st.floats(2, 40), "R_c": st.floats(5, 80), "T_d": st.floats(0.05, 20),
    "T_c": st.floats(0.05, 20), "beta": st.floats(0, 1), "P_c_total": st.floats(0.05, 5),
    "theta_bw": st.floats(0.05, 3.0), "G_main": st.floats(1, 1000),
})


@given(random_scenarios, st.floats(1e-4, 0.02), st.sampled_from(["d2d", "bs"]))
def test_quadrature_matches_m1_closed_form(kw, P_d, who):
    cfg = table1_scenario(**kw)
    q = stp(cfg, P_d, 0, who, "quadrature").value
    c = closed_form_stp_m1(cfg, P_d, 0, who).value
    assert_allclose(q, c, rtol=1e-6, atol=1e-300)


@given(random_scenarios, st.floats(1e-4, 0.02), st.sampled_from(["d2d", "bs"]),
       st.integers(1, 4), st.sampled_from([2.0, 2.5, 3.0]), st.floats(0, 1e-12))
def test_quadrature_matches_gamma_oracle(kw, P_d, who, m, alpha_L, N0):
    cfg = table1_scenario(nakagami_m=m, alpha_L=alpha_L, N0=N0, **kw)
    assert_allclose(stp(cfg, P_d, 0, who, "quadrature").value, reference_stp(cfg, P_d, 0, who),
                    rtol=1e-6, atol=1e-12)


@given(random_scenarios, st.floats(1e-4, 0.02), st.integers(1, 3))
def test_split_by_link_type_matches_joint(kw, P_d, m):
    cfg = table1_scenario(nakagami_m=m, alpha_L=2.5, **kw)
    for who in ("d2d", "bs"):
        a = stp(cfg, P_d, 0, who, "quadrature").value
        b = stp(cfg, P_d, 0, who, "quadrature", split_by_link_type=True).value
        assert_allclose(a, b, rtol=1e-7, atol=1e-12)


@given(st.floats(0.01, 100))
def test_gain_homothety(kappa):
    cfg = table1_scenario(nakagami_m=2)
    scaled = cfg.replace(G_main=cfg.antenna.G_main * kappa, g_side=cfg.antenna.g_side * kappa)
    for who in ("d2d", "bs"):
        assert_allclose(stp(scaled, 0.01, 0, who).value, stp(cfg, 0.01, 0, who).value, rtol=1e-9)


@given(st.integers(1, 4), st.sampled_from(["d2d", "bs"]), st.sampled_from(["T_d", "lambda_d", "lambda_c"]))
def test_stp_monotone(m, who, field):
    cfg = table1_scenario(nakagami_m=m, alpha_L=2.5)
    base = getattr(cfg, field)[0]
    v = [stp(cfg.replace(**{field: base * k}), 0.01, 0, who).value for k in (0.25, 0.5, 1, 2, 4, 8)]
    assert all(0 <= x <= 1 for x in v)
    assert np.all(np.diff(v) <= 1e-15)


@pytest.mark.parametrize("m", range(1, 9))
def test_alternating_binomial_sum(m):
    assert_allclose(binomial_alternating_sum(m), 1.0, rtol=0, atol=1e-12)


def test_closed_form_preconditions(cfg):
    with pytest.raises(UnsupportedModelError):
        closed_form_stp_m1(cfg.replace(nakagami_m=2), 0.01, 0)
    with pytest.raises(UnsupportedModelError):
        closed_form_stp_m1(cfg.replace(N0=1e-12), 0.01, 0)
    with pytest.raises(UnsupportedModelError):
        closed_form_stp_m2(cfg, 0.01, 0)


def test_auto_dispatch(cfg):
    assert stp(cfg, 0.01, 0).method == "closed_form_m1"
    assert stp(cfg.replace(nakagami_m=2), 0.01, 0).method == "quadrature"
    assert stp(cfg.replace(N0=1e-13), 0.01, 0).method == "quadrature"


def test_closed_form_symmetry():
    cfg = table1_scenario(R_c=10.0, lambda_d=3e-5, lambda_c=7e-5)
    swapped = cfg.replace(lambda_d=7e-5, lambda_c=3e-5)
    P = cfg.P_c_i
    assert_allclose(closed_form_stp_m1(cfg, P, 0, "d2d").value, closed_form_stp_m1(swapped, P, 0, "bs").value,
                    rtol=1e-14)


def test_m2_closed_form(cfg_m2):
    zero = cfg_m2.replace(lambda_d=0.0, lambda_c=0.0)
    assert_allclose(closed_form_stp_m2(zero, 0.01, 0).value, 1.0, rtol=1e-14)
    r = closed_form_stp_m2(cfg_m2, 0.012, 0)
    q = stp_d2d(cfg_m2, 0.012, 0).value
    assert r.method == "closed_form_m2"
    assert_allclose(r.abs_err_est, abs(r.value - q), rtol=1e-12)
    assert closed_form_stp_m2(cfg_m2, 0.012, 0).abs_err_est == r.abs_err_est


def test_vectorised_models_match_scalar():
    cfg = table1_scenario(nakagami_m=2, lambda_c=[1e-5, 0, 2e-5, 1e-5, 1e-5], N0=1e-14, R_d=[5, 10, 15, 10, 25])
    P = np.random.default_rng(1).uniform(0, 0.02, (20, 5))
    P[0, 2] = 0.0
    for who in ("d2d", "bs"):
        ref = np.array([[stp(cfg, x[i], i, who).value for i in range(5)] for x in P])
        assert_allclose(BandStpModel(cfg, who)(P), ref, rtol=1e-13, atol=1e-15)
        assert_allclose(StpCurve(cfg, 3, who)(P[:, 3]), ref[:, 3], rtol=1e-13, atol=1e-15)


def test_vectorised_model_per_interferer_alpha_fallback():
    cfg = table1_scenario(per_interferer_alpha=True, alpha_L=2.5)
    m = BandStpModel(cfg, "d2d")
    assert not m.factorised
    p = np.full(5, 0.01)
    assert_allclose(m(p), [stp(cfg, 0.01, i, "d2d").value for i in range(5)])


def test_underflowing_blockage_rate():
    # beta * s below the smallest double: NLOS weight vanishes, LOS stays finite
    c = 0.01
    K = kernel_constant(2.5, 1)[0]
    total = sum(interference_integral(c, 2.5, 1, 5e-324, j) for j in ("LOS", "NLOS"))
    assert_allclose(total, K * c ** 0.8, rtol=1e-8)
    assert interference_integral(c, 2.5, 1, 5e-324, "NLOS") == 0.0
    # alpha = 2: the damped LOS integral grows like m s^2 log(1/beta)
    s2 = c / 2
    hi = interference_integral(c, 2.0, 2, 5e-324, "LOS")
    lo = interference_integral(c, 2.0, 2, 1e-310, "LOS")
    assert_allclose(hi - lo, 2 * s2 * math.log(1e-310 / 5e-324), rtol=1e-6)
