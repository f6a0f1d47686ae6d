import math

import numpy as np
import pytest
from hypothesis import HealthCheck, given, settings, strategies as st
from scipy import integrate, special

from fdrsma import analytic as A
from fdrsma.mathkern import erlang_cdf
from fdrsma.scenario import prepare, reference_config

INF = math.inf


def _breakdowns_match(cfg, rel=1e-6):
    scn = prepare(cfg)
    a = A.analytic_breakdown(scn).components()
    o = A.oracle_breakdown(scn).components()
    for k in a:
        assert a[k] == pytest.approx(o[k], rel=rel, abs=0), k
    return a


# values frozen from the quadrature oracle (independent of the closed forms)
FROZEN = [
    (dict(), 20.0, {"D1.common": 0.0001597944993789894, "D1.private": 0.0027568710433196544,
                    "D2.common": 0.00022456683924067993, "D2.private": 1.0329331465087085e-05,
                    "U.21": 0.003916164896810231, "U.11": 0.024345434762778045,
                    "U.22": 0.0012290281715642806}),
    (dict(theta_sic=0.2), 20.0, {"D1.private": 0.007437408070780834, "U.11": 0.06533511729742758,
                                 "U.22": 0.23305361048871948}),
    (dict(beta_d=0.8, beta_u=0.8), 10.0, {"D1.common": 0.0008550008783088709,
                                          "D2.private": 3.259199362564126e-05,
                                          "U.21": 0.004240461311649551, "U.22": 0.002390399446804023}),
]


@pytest.mark.parametrize("overrides,power,expected", FROZEN)
def test_closed_form_matches_frozen_oracle_values(overrides, power, expected):
    comps = A.analytic_breakdown(prepare(reference_config(**overrides).with_power(power))).components()
    for k, v in expected.items():
        assert comps[k] == pytest.approx(v, rel=1e-6), k


@pytest.mark.parametrize("power,theta,beta", [(0.0, 0.0, 0.8), (14.0, 0.1, INF), (30.0, 0.2, 0.8)])
def test_closed_form_matches_live_oracle(power, theta, beta):
    _breakdowns_match(reference_config(theta_sic=theta, beta_d=beta, beta_u=beta).with_power(power))


def test_tiny_outage_keeps_relative_accuracy():
    # no CCI, high power: private outage of D2 is far below the 1 - sum precision
    cfg = reference_config(cci_enabled=False, delta_si=0.0).with_power(30.0)
    comps = _breakdowns_match(cfg)
    assert 0.0 < comps["D2.private"] < 1e-9


def test_log_moment_against_quadrature():
    it = A.Interferer(coef=0.7, shape=3, rate=2.0)
    for j in range(5):
        f = lambda y: (0.7 * y) ** j * math.exp(-0.7 * y) * 2.0**3 * y**2 * math.exp(-2.0 * y) / 2.0
        val, _ = integrate.quad(f, 0, INF, epsabs=0, epsrel=1e-12)
        assert math.exp(float(it.log_moment(j))) == pytest.approx(val, rel=1e-10)
    absent = A.Interferer(coef=0.7, shape=3, rate=INF)
    assert list(absent.log_moment(np.arange(3))) == [0.0, -INF, -INF]


def test_common_guard_gives_exact_one():
    # gamma_c = 1.5: 0.5 < 1.5 * 0.5
    scn = prepare(reference_config(rate_common=(math.log2(2.5), 0.45)))
    assert A.common_outage_component(scn, 0) == 1.0
    assert A.integral_oracle("common", scn, 0) == 1.0
    assert A.common_outage_component(scn, 1) < 1.0


def test_guard_equality_counts_as_outage():
    scn = prepare(reference_config(rate_common=(1.0, 0.45)))  # gamma_c = 1, 0.5 == 1 * 0.5
    assert A.common_outage_component(scn, 0) == 1.0


def test_private_guard():
    cfg = reference_config(theta_sic=1.0, alpha_c=0.8, alpha_private=(0.05, 0.15))
    scn = prepare(cfg)
    assert A.private_outage_component(scn, 0) == 1.0
    assert A.integral_oracle("private", scn, 0) == 1.0


def test_uplink_guards_and_zero_threshold():
    # gamma_21 * 0.29 >= 0.71 needs rate_12 >= log2(1 + 0.71/0.29)
    zeta = math.log2(1 + 0.71 / 0.29) / 0.8 + 1e-3
    scn = prepare(reference_config(zeta=min(zeta, 1.0), rate_u2=2.0))
    p21, p11, p22 = A.uplink_outage_components(scn)
    assert p21 == 1.0
    p21, p11, p22 = A.uplink_outage_components(prepare(reference_config(zeta=1.0)))
    assert p22 == 0.0 and 0 < p21 < 1
    # with theta > 0 the last stage can be blocked by its own residual
    scn = prepare(reference_config(theta_sic=1.0, zeta=0.0, rate_u2=3.0))
    assert A.uplink_outage_components(scn)[2] == 1.0


def test_no_interference_reduces_to_erlang():
    cfg = reference_config(cci_enabled=False, delta_si=0.0, p_u1_dbm=-200.0, p_u2_dbm=-200.0)
    scn = prepare(cfg)
    co = A.closed_form_coefficients(scn)
    for n in range(2):
        assert A.common_outage_component(scn, n) == pytest.approx(erlang_cdf(5, co.w1[n] * 1.0), rel=1e-12)
        assert A.common_outage_component(scn, n) == pytest.approx(A.integral_oracle("common", scn, n),
                                                                   rel=1e-9)
        # same thing written out by hand: P(m, m * gamma / (Omega (alpha_c - gamma (1 - alpha_c)) rho_b))
        g, om, rho = scn.thr.gamma_c[n], scn.dl(n).omega_hat, scn.snr.rho_b
        hand = special.gammainc(5, 5 * g / (om * (0.5 - g * 0.5) * rho))
        assert A.common_outage_component(scn, n) == pytest.approx(hand, rel=1e-10)


def test_compositions():
    assert A.downlink_outage(0, 0.2) == 0.2
    assert A.downlink_outage(1, 0.37) == 1.0
    assert A.downlink_outage(0.1, 0.2) == pytest.approx(0.28, rel=1e-15)
    assert A.uplink_outages(0, 0, 0) == (0, 0)
    assert A.uplink_outages(1, 0.4, 0.3) == (1, 1)
    pu1, pu2 = A.uplink_outages(0.1, 0.2, 0.3)
    assert (pu1, pu2) == (pytest.approx(0.28), pytest.approx(0.496))
    assert A.throughput(0, 0.7) == 0.7
    assert A.throughput(1, 0.7) == 0.0
    assert A.throughput(0.496, 0.8) == pytest.approx(0.4032, rel=1e-14)
    for bad in ((-0.1, 0.2), (0.2, 1.2)):
        with pytest.raises(ValueError):
            A.downlink_outage(*bad)
    with pytest.raises(ValueError):
        A.uplink_outages(0.1, 2.0, 0.0)
    with pytest.raises(ValueError):
        A.throughput(0.1, -1.0)


def test_perfect_limit():
    cfg = reference_config(beta_d=0.8, beta_u=0.8, theta_sic=0.1)
    perf = A.perfect_limit(cfg)
    assert A.perfect_limit(perf) == perf
    assert (perf.beta_d, perf.beta_u, perf.theta_sic) == (INF, INF, 0.0)
    assert all(s.omega_err == 0.0 for s in prepare(perf).links.values())
    for p in range(0, 16, 3):
        imp = A.analytic_breakdown(prepare(cfg.with_power(p))).users()
        ok = A.analytic_breakdown(prepare(perf.with_power(p))).users()
        assert all(ok[u] <= imp[u] for u in ok), p


def test_scale_invariance():
    cfg = reference_config(beta_d=0.7, beta_u=0.7, theta_sic=0.05)
    a = A.analytic_breakdown(prepare(cfg))
    b = A.analytic_breakdown(prepare(cfg.evolve(p_bs_dbm=33.0, p_u1_dbm=33.0, p_u2_dbm=33.0,
                                                 noise_db=-87.0)))
    for k, v in a.components().items():
        assert b.components()[k] == pytest.approx(v, rel=1e-9)


def test_no_floor_without_cci_and_si():
    prev = None
    for p in range(0, 31, 2):
        cfg = reference_config(cci_enabled=False, delta_si=0.0, p_u1_dbm=-200.0, p_u2_dbm=-200.0, p_bs_dbm=p)
        comps = A.analytic_breakdown(prepare(cfg))
        cur = list(comps.p_common) + list(comps.p_private)
        if prev is not None:
            assert all(c < q for c, q in zip(cur, prev))
        prev = cur


def test_imperfect_sic_floor_on_p22():
    p22 = lambda p: A.uplink_outage_components(prepare(reference_config(theta_sic=0.1).with_power(p)))[2]
    assert p22(60.0) >= 0.99 * p22(50.0) > 0.0


def test_s2_interpretation_switch():
    cfg = reference_config(beta_d=0.5, beta_u=0.5, p_bs_dbm=0.0)
    s = A.private_outage_component(prepare(cfg), 0)
    lit = A.private_outage_component(prepare(cfg.evolve(s2_interpretation="literal")), 0)
    # literal reading weights D1's error by 2 * 0.15 < 0.15 + 0.35
    assert lit < s
    _breakdowns_match(cfg.evolve(s2_interpretation="literal"))


def test_breakdown_identities():
    b = A.analytic_breakdown(prepare(reference_config(theta_sic=0.1, beta_d=0.9, beta_u=0.9)))
    for n in range(2):
        c, p = b.p_common[n], b.p_private[n]
        assert b.p_dl[n] == c + p - c * p
    assert b.p_ul_1 == b.p_21 + (1 - b.p_21) * b.p_11
    assert b.p_ul_2 == b.p_ul_1 + (1 - b.p_21) * (1 - b.p_11) * b.p_22
    assert set(b.users()) == {"D1", "D2", "U1", "U2"}
    tp = A.user_throughputs(prepare(reference_config()), b)
    assert tp["U2"] == pytest.approx((1 - b.p_ul_2) * 0.8)
    assert tp["D1"] == pytest.approx((1 - b.p_dl[0]) * 0.7)


def test_oracle_rejects_bad_component():
    scn = prepare(reference_config())
    with pytest.raises(ValueError):
        A.integral_oracle("bogus", scn)
    with pytest.raises(ValueError):
        A.integral_oracle("common", scn, n=None)


def test_three_user_downlink():
    cfg = reference_config(n_downlink=3, alpha_private=(0.1, 0.15, 0.25), rate_common=(0.3,) * 3,
                        rate_private=(0.2,) * 3, dist_bs_dn=(60.0, 85.0, 95.0),
                        dist_u1_dn=(115.0,) * 3, dist_u2_dn=(118.0,) * 3, m_dn=(2, 3, 4))
    b = _breakdowns_match(cfg.with_power(10.0))
    assert set(b) >= {"D3.common", "D3.private"}


@settings(max_examples=12, deadline=None, suppress_health_check=[HealthCheck.too_slow])
@given(
    shapes=st.tuples(*[st.integers(1, 5)] * 6),
    power=st.floats(0.0, 30.0),
    theta=st.sampled_from([0.0, 0.1, 0.2]),
    delta=st.sampled_from([0.0, 1e-7]),
    beta=st.sampled_from([0.5, 2.0, INF]),
)
def test_property_closed_form_equals_oracle(shapes, power, theta, delta, beta):
    m1, m2, mu1, mu2, msi, mcci = shapes
    cfg = reference_config(m_dn=(m1, m2), m_u1=mu1, m_u2=mu2, m_si=msi, m_cci=mcci, theta_sic=theta,
                        delta_si=delta, beta_d=beta, beta_u=beta).with_power(power)
    comps = _breakdowns_match(cfg)
    assert all(0.0 <= v <= 1.0 for v in comps.values())
