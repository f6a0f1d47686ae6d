import math
from dataclasses import replace

import numpy as np
import pytest
from scipy import stats

from fdrsma import analytic as A
from fdrsma import montecarlo as M
from fdrsma.mathkern import erlang_cdf
from fdrsma.scenario import LinkStats, Scenario, prepare, reference_config
from fdrsma.sinr import all_sinrs

FAST = M.McSettings(trials=200_000, seed=11)


def _with_link(scn, key, stats_):
    links = dict(scn.links)
    links[key] = stats_
    return Scenario(cfg=scn.cfg, links=links, snr=scn.snr, thr=scn.thr)


def test_settings_validation():
    for bad in (dict(trials=0), dict(trials=2.5), dict(batch=0), dict(seed=-1),
                dict(seed=2**64), dict(estimator="joint")):
        with pytest.raises(ValueError):
            M.McSettings(**bad)
    assert M.McSettings(trials=M.BLOCK + 1).blocks == 2


def test_gamma_draw_mean_is_unbiased():
    scn = _with_link(prepare(reference_config()), "u1_bs", LinkStats(2.0, 0.0, 2.0, 4))
    x = np.concatenate([M.sample_draw(M.block_generator(5, b), scn).g2_u1 for b in range(62)])
    assert abs(x.mean() - 2.0) <= 3 * x.std(ddof=1) / math.sqrt(x.size)


def test_shape_one_is_exponential_ks():
    scn = _with_link(prepare(reference_config()), "u2_bs", LinkStats(0.7, 0.0, 0.7, 1))
    x = np.concatenate([M.sample_draw(M.block_generator(9, b), scn).g2_u2 for b in range(62)])[:1_000_000]
    assert stats.kstest(x, "expon", args=(0, 0.7)).statistic < 0.002


def test_zero_variance_link_samples_zero():
    scn = prepare(reference_config(cci_enabled=False))
    draw = M.sample_draw(M.block_generator(1, 0), scn, 1000)
    assert np.all(draw.g2_cci1_n == 0.0) and np.all(draw.g2_cci2_n == 0.0)


def test_zero_thresholds_give_zero_outage():
    cfg = reference_config(rate_common=(0.0, 0.0), rate_private=(0.0, 0.0), rate_u1=0.0, rate_u2=0.0)
    for est in M.ESTIMATORS:
        b = M.estimate_outages(prepare(cfg), replace(FAST, estimator=est))
        assert all(e.mean == 0.0 and e.stderr == 0.0 for e in b.users().values())
        assert all(e.mean == 0.0 for e in b.components().values())


def test_marginal_agrees_with_closed_form_at_20dbm():
    scn = prepare(reference_config(beta_d=0.8, beta_u=0.8))
    mc = M.estimate_outages(scn, M.McSettings())
    an = A.analytic_breakdown(scn)
    for table_mc, table_an in ((mc.components(), an.components()), (mc.users(), an.users())):
        for k, e in table_mc.items():
            assert abs(e.mean - table_an[k]) <= max(3 * e.stderr, 5e-4), k


def test_determinism_across_workers_and_batch(monkeypatch):
    scn = prepare(reference_config(beta_d=0.8, beta_u=0.8, theta_sic=0.1).with_power(5.0))
    s = M.McSettings(trials=3 * M.BLOCK + 123, seed=77, batch=M.BLOCK)
    monkeypatch.setenv(M.WORKERS_ENV, "1")
    ref = M.estimate_outages(scn, s)
    monkeypatch.setenv(M.WORKERS_ENV, "4")
    assert M.estimate_outages(scn, s) == ref
    assert M.estimate_outages(scn, replace(s, batch=1)) == ref
    assert M.estimate_outages(scn, replace(s, batch=10**7)) == ref
    assert M.estimate_outages(scn, replace(s, seed=78)) != ref


def test_bad_worker_env(monkeypatch):
    monkeypatch.setenv(M.WORKERS_ENV, "0")
    with pytest.raises(ValueError):
        M.worker_count()


def test_prefix_trials_reuse_the_same_draws():
    # trial t sees the same draw regardless of the total trial count
    scn = prepare(reference_config().with_power(0.0))
    a = M._run_blocks(scn, M.McSettings(trials=M.BLOCK), M.count_events)
    b = M._run_blocks(scn, M.McSettings(trials=2 * M.BLOCK), M.count_events)
    second = M.count_events(scn, M._block_draw(scn, M.McSettings.seed, 1, 2 * M.BLOCK))
    assert all(np.all(b[k] == a[k] + second[k]) for k in a)
    assert all(np.all(b[k] >= a[k]) for k in a)


def test_joint_chain_nesting_and_gap():
    scn = prepare(reference_config(beta_d=0.8, beta_u=0.8, theta_sic=0.1).with_power(0.0))
    j = M.estimate_outages(scn, replace(FAST, estimator="joint_chain"))
    assert j.p_ul_2.mean >= j.p_ul_1.mean
    for n in range(2):
        assert j.p_dl[n].mean >= max(j.p_common[n].mean, j.p_private[n].mean)


def test_stderr_matches_bootstrap():
    scn = prepare(reference_config(beta_d=0.8, beta_u=0.8).with_power(0.0))
    rng = np.random.default_rng(0)
    draw = M.sample_draw(M.block_generator(3, 0), scn, 10_000)
    s = all_sinrs(draw, scn)
    events = s.dl_private_n[:, 0] < scn.thr.gamma_p[0]
    est = M.McEstimate.from_count(int(events.sum()), events.size)
    boots = [events[rng.integers(0, events.size, events.size)].mean() for _ in range(400)]
    assert 0.8 <= est.stderr / np.std(boots, ddof=1) <= 1.25
    assert est.stderr <= 0.5 / math.sqrt(events.size)


def test_throughput_limits_and_saturation():
    zero = prepare(reference_config(rate_common=(0.0, 0.0), rate_private=(0.0, 0.0), rate_u1=0.0, rate_u2=0.0))
    tp = M.estimate_throughput(zero, FAST)
    assert all(e.mean == 0.0 for e in tp.values())
    est = M.McEstimate(1.0, 0.0, 10)
    assert M._throughputs({"D1": est}, {"D1": 0.7})["D1"].mean == 0.0
    high = prepare(reference_config().with_power(30.0))
    tp = M.estimate_throughput(high, FAST)
    for n, rate in enumerate((0.7, 0.7)):
        assert tp[f"D{n + 1}"].mean == pytest.approx(rate, rel=0.02)
    assert tp["sum"].mean == pytest.approx(sum(tp[u].mean for u in ("D1", "D2", "U1", "U2")))


def test_noma_matches_rsma_in_single_user_degenerate_case():
    cfg = reference_config(n_downlink=1, alpha_c=0.0, alpha_private=(1.0,), rate_common=(0.0,),
                        rate_private=(1.0,), dist_bs_dn=(85.0,), dist_u1_dn=(115.0,),
                        dist_u2_dn=(118.0,), m_dn=(3,), cci_enabled=False, p_bs_dbm=-10.0)
    scn = prepare(cfg)
    noma = M.simulate_noma_baseline(scn, FAST)["D1"]
    rsma = M.estimate_outages(scn, FAST).p_dl[0]
    assert noma.mean == rsma.mean
    dl = scn.dl(0)
    exact = erlang_cdf(3, 1.0 * 3 / (dl.omega_hat * scn.snr.rho_b))
    assert abs(noma.mean - exact) <= 3 * noma.stderr


def test_noma_power_split_flag():
    scn = prepare(reference_config())
    plan = M._noma_downlink_plan(scn, "common_to_far")
    assert plan[1] == [1, 0]  # D2 is farther, decoded first
    assert plan[0] == [0.15, 0.85]
    assert M._noma_downlink_plan(scn)[0] == pytest.approx([0.3, 0.7])
    with pytest.raises(ValueError):
        M.simulate_noma_baseline(scn, FAST, power_split="equal")


def test_noma_uplink_worse_than_rsma():
    scn = prepare(reference_config().with_power(20.0))
    noma = M.simulate_noma_baseline(scn, FAST)
    rsma = M.estimate_outages(scn, FAST).users()
    assert noma["U1"].mean > rsma["U1"].mean and noma["U2"].mean > rsma["U2"].mean


def test_hd_time_share_arithmetic():
    zero = prepare(reference_config(rate_common=(0.0, 0.0), rate_private=(0.0, 0.0), rate_u1=0.0, rate_u2=0.0))
    assert M.simulate_hd_baseline(zero, FAST).mean == 0.0
    # downlink only and no CCI: the FD run and the HD downlink phase see identical draws
    dl_only = prepare(reference_config(rate_u1=0.0, rate_u2=0.0, cci_enabled=False).with_power(30.0))
    fd = M.estimate_throughput(dl_only, FAST)["sum"].mean
    assert fd == pytest.approx(2 * M.simulate_hd_baseline(dl_only, FAST).mean, rel=1e-12)


def test_fd_beats_hd_reference_point():
    scn = prepare(reference_config(delta_si=0.0).with_power(20.0))
    assert M.estimate_throughput(scn, FAST)["sum"].mean >= M.simulate_hd_baseline(scn, FAST).mean
