"""Monte Carlo validation of the outage closed forms, plus NOMA and half-duplex baselines.

Random numbers come from Philox keyed by ``(seed, block index)``. A block is
a fixed run of ``BLOCK`` consecutive trials, so trial ``t`` always sees the
same channel draw no matter how the work is split or how many workers run
it. Event counts are plain integers and are summed across blocks, which
makes the reduction order irrelevant.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Dict, Optional

import numpy as np

from . import analytic
from .scenario import Scenario, prepare
from .sinr import ChannelDraw, all_sinrs

__all__ = [
    "BLOCK",
    "McSettings",
    "McEstimate",
    "block_generator",
    "sample_draw",
    "count_events",
    "estimate_outages",
    "estimate_throughput",
    "simulate_noma_baseline",
    "NOMA_POWER_SPLITS",
    "simulate_hd_baseline",
    "worker_count",
]

BLOCK = 1 << 14
WORKERS_ENV = "FDRSMA_WORKERS"
ESTIMATORS = ("marginal", "joint_chain")


@dataclass(frozen=True)
class McSettings:
    trials: int = 1_000_000
    seed: int = 2025
    batch: int = 1 << 16
    estimator: str = "marginal"

    def __post_init__(self):
        if isinstance(self.trials, bool) or int(self.trials) != self.trials or self.trials < 1:
            raise ValueError(f"trials must be a positive integer, got {self.trials!r}")
        if int(self.batch) != self.batch or self.batch < 1:
            raise ValueError(f"batch must be a positive integer, got {self.batch!r}")
        if not 0 <= self.seed < 2**64:
            raise ValueError(f"seed must be a 64-bit unsigned integer, got {self.seed!r}")
        if self.estimator not in ESTIMATORS:
            raise ValueError(f"estimator must be one of {ESTIMATORS}, got {self.estimator!r}")

    @property
    def blocks(self) -> int:
        return -(-self.trials // BLOCK)


@dataclass(frozen=True)
class McEstimate:
    mean: float
    stderr: float
    trials: int

    @classmethod
    def from_count(cls, count: int, trials: int) -> "McEstimate":
        p = count / trials
        return cls(p, math.sqrt(p * (1.0 - p) / trials), trials)

    def scaled(self, factor: float) -> "McEstimate":
        return McEstimate(self.mean * factor, self.stderr * abs(factor), self.trials)


def worker_count() -> int:
    raw = os.environ.get(WORKERS_ENV)
    if not raw:
        return 1
    n = int(raw)
    if n < 1:
        raise ValueError(f"{WORKERS_ENV} must be a positive integer, got {raw!r}")
    return n


def block_generator(seed: int, block: int) -> np.random.Generator:
    """Independent Philox stream for one block; the block index lives in the high key word."""
    return np.random.Generator(np.random.Philox(key=(block << 64) | seed))


def _gamma(rng, stats, size):
    # unit-scale draws are always consumed so the stream layout does not depend on the scenario
    unit = rng.standard_gamma(stats.shape, size=size)
    return unit * stats.scale


def sample_draw(rng: np.random.Generator, scn: Scenario, size: int = BLOCK) -> ChannelDraw:
    """Draw ``size`` channel realizations; each squared gain is Gamma(m, omega_hat / m)."""
    n = scn.n
    dl = np.stack([_gamma(rng, scn.dl(i), size) for i in range(n)], axis=-1)
    c1 = np.stack([_gamma(rng, scn.cci1(i), size) for i in range(n)], axis=-1)
    c2 = np.stack([_gamma(rng, scn.cci2(i), size) for i in range(n)], axis=-1)
    return ChannelDraw(
        g2_hat_dn=dl,
        g2_u1=_gamma(rng, scn.u1, size),
        g2_u2=_gamma(rng, scn.u2, size),
        g2_cci1_n=c1,
        g2_cci2_n=c2,
        g2_si=_gamma(rng, scn.si, size),
    )


def _block_draw(scn, seed, block, trials):
    draw = sample_draw(block_generator(seed, block), scn, BLOCK)
    used = min(BLOCK, trials - block * BLOCK)
    if used < BLOCK:
        draw = ChannelDraw(**{k: v[:used] for k, v in vars(draw).items()})
    return draw


def count_events(scn: Scenario, draw: ChannelDraw) -> Dict[str, np.ndarray]:
    """Integer event counts for one batch of draws.

    ``common``/``private`` are per-user marginal failures, ``dl_joint`` the
    per-user decoding-chain outage; ``f21``/``f11``/``f22`` are marginal stage
    failures and ``u1_joint``/``u2_joint`` the SIC-chain outages.
    """
    thr = scn.thr
    s = all_sinrs(draw, scn)
    common = s.dl_common_n < np.asarray(thr.gamma_c)
    private = s.dl_private_n < np.asarray(thr.gamma_p)
    f21 = s.ul_x12 < thr.gamma_21
    f11 = s.ul_x1 < thr.gamma_11
    f22 = s.ul_x22 < thr.gamma_22
    u1 = f21 | f11
    return {
        "common": common.sum(axis=0),
        "private": private.sum(axis=0),
        "dl_joint": (common | private).sum(axis=0),
        "f21": np.int64(f21.sum()),
        "f11": np.int64(f11.sum()),
        "f22": np.int64(f22.sum()),
        "u1_joint": np.int64(u1.sum()),
        "u2_joint": np.int64((u1 | f22).sum()),
    }


def _run_blocks(scn, settings, counter):
    """Sum ``counter(scn, draw)`` over all blocks, dispatched ``batch`` trials per work unit."""
    per_unit = max(1, settings.batch // BLOCK)
    units = [range(b, min(b + per_unit, settings.blocks))
             for b in range(0, settings.blocks, per_unit)]

    def work(blocks):
        total = None
        for b in blocks:
            c = counter(scn, _block_draw(scn, settings.seed, b, settings.trials))
            total = c if total is None else {k: total[k] + c[k] for k in total}
        return total

    workers = worker_count()
    if workers == 1:
        parts = [work(u) for u in units]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(work, units))
    total = parts[0]
    for part in parts[1:]:
        total = {k: total[k] + part[k] for k in total}
    return total


def _compose_dl(c: McEstimate, p: McEstimate) -> McEstimate:
    mean = c.mean + p.mean - c.mean * p.mean
    se = math.hypot((1.0 - p.mean) * c.stderr, (1.0 - c.mean) * p.stderr)
    return McEstimate(mean, se, c.trials)


def _compose_ul(p21, p11, p22):
    pu1 = p21.mean + (1.0 - p21.mean) * p11.mean
    se1 = math.hypot((1.0 - p11.mean) * p21.stderr, (1.0 - p21.mean) * p11.stderr)
    pu2 = pu1 + (1.0 - p21.mean) * (1.0 - p11.mean) * p22.mean
    q = 1.0 - p22.mean
    se2 = math.sqrt(((1.0 - p11.mean) * q * p21.stderr) ** 2
                    + ((1.0 - p21.mean) * q * p11.stderr) ** 2
                    + ((1.0 - p21.mean) * (1.0 - p11.mean) * p22.stderr) ** 2)
    return McEstimate(pu1, se1, p21.trials), McEstimate(pu2, se2, p21.trials)


def estimate_outages(scn: Scenario, settings: McSettings) -> analytic.OutageBreakdown:
    """Outage estimates as an ``OutageBreakdown`` of ``McEstimate``.

    Components are always the marginal stage failures. User outages are
    composed from them with the closed-form composition rules in
    ``"marginal"`` mode, or counted on the decoding chain of each draw in
    ``"joint_chain"`` mode.
    """
    counts = _run_blocks(scn, settings, count_events)
    t = settings.trials
    est = lambda c: McEstimate.from_count(int(c), t)
    common = tuple(est(c) for c in counts["common"])
    private = tuple(est(c) for c in counts["private"])
    p21, p11, p22 = est(counts["f21"]), est(counts["f11"]), est(counts["f22"])
    if settings.estimator == "marginal":
        p_dl = tuple(_compose_dl(c, p) for c, p in zip(common, private))
        pu1, pu2 = _compose_ul(p21, p11, p22)
    else:
        p_dl = tuple(est(c) for c in counts["dl_joint"])
        pu1, pu2 = est(counts["u1_joint"]), est(counts["u2_joint"])
    return analytic.OutageBreakdown(
        p_common=common, p_private=private, p_21=p21, p_11=p11, p_22=p22,
        p_dl=p_dl, p_ul_1=pu1, p_ul_2=pu2,
    )


def _throughputs(outages: Dict[str, McEstimate], rates: Dict[str, float]):
    out = {u: McEstimate(1.0 - e.mean, e.stderr, e.trials).scaled(rates[u])
           for u, e in outages.items()}
    out["sum"] = McEstimate(sum(e.mean for e in out.values()),
                            sum(e.stderr for e in out.values()),
                            next(iter(out.values())).trials)
    return out


def estimate_throughput(scn: Scenario, settings: McSettings,
                        breakdown: Optional[analytic.OutageBreakdown] = None):
    """Per-user throughput ``(1 - OP) * rate`` plus their ``"sum"``.

    Standard errors scale linearly; the sum takes the sum of the per-user
    errors, which bounds the correlated case.
    """
    breakdown = breakdown or estimate_outages(scn, settings)
    return _throughputs(breakdown.users(), analytic.user_rates(scn))


# ---------------------------------------------------------------------------
# NOMA baseline: no message splitting. Downlink users are superposed and
# decoded far-user-first (weakest mean gain first); each user's full message
# rate R_c + R_p must be met. Uplink decodes U2 then U1.
#
# NOMA_POWER_SPLITS names how the RSMA power split maps to NOMA powers:
#   "renormalized"  - private fractions scaled to sum to one
#   "common_to_far" - the far user also takes the common-stream power

NOMA_POWER_SPLITS = ("renormalized", "common_to_far")


def _noma_downlink_plan(scn, power_split="renormalized"):
    cfg = scn.cfg
    order = sorted(range(scn.n), key=lambda i: (scn.dl(i).omega, -i))
    if power_split == "renormalized":
        total = sum(cfg.alpha_private)
        power = [a / total for a in cfg.alpha_private]
    elif power_split == "common_to_far":
        power = list(cfg.alpha_private)
        power[order[0]] += cfg.alpha_c
    else:
        raise ValueError(f"power_split must be one of {NOMA_POWER_SPLITS}, got {power_split!r}")
    rates = [cfg.rate_common[i] + cfg.rate_private[i] for i in range(scn.n)]
    return power, order, [2.0**r - 1.0 for r in rates]


def _noma_events(scn, draw, power_split="renormalized"):
    cfg, s = scn.cfg, scn.snr
    theta = cfg.theta_sic
    power, order, gam = _noma_downlink_plan(scn, power_split)
    dl_out = []
    for n in range(scn.n):
        g = draw.g2_hat_dn[:, n]
        cci = draw.g2_cci1_n[:, n] * s.rho_1_dl + draw.g2_cci2_n[:, n] * s.rho_2_dl
        base = 1.0 + s.rho_1_dl * scn.cci1(n).omega_err + s.rho_2_dl * scn.cci2(n).omega_err
        err = s.rho_b * scn.dl(n).omega_err
        out = np.zeros(g.shape, dtype=bool)
        for pos, j in enumerate(order):
            done = sum(power[i] for i in order[:pos])
            pending = sum(power[i] for i in order[pos + 1:])
            denom = g * s.rho_b * (pending + theta * done) + cci + base \
                + err * (power[j] + pending + theta * done)
            out |= g * s.rho_b * power[j] / denom < gam[j]
            if j == n:
                break
        dl_out.append(out)

    u1 = draw.g2_u1 * s.rho_1
    u2 = draw.g2_u2 * s.rho_2
    si = draw.g2_si * cfg.delta_si * s.rho_b_bs
    si_err = s.rho_b_bs * cfg.delta_si * scn.si.omega_err
    e1 = s.rho_1 * scn.u1.omega_err
    e2 = s.rho_2 * scn.u2.omega_err
    x2 = u2 / (u1 + si + si_err + e1 + e2 + 1.0)
    x1 = u1 / (theta * u2 + si + si_err + e1 + theta * e2 + 1.0)
    f2 = x2 < 2.0**cfg.rate_u2 - 1.0
    f1 = x1 < 2.0**cfg.rate_u1 - 1.0
    counts = {f"D{n + 1}": np.int64(o.sum()) for n, o in enumerate(dl_out)}
    counts["U1"] = np.int64((f2 | f1).sum())
    counts["U2"] = np.int64(f2.sum())
    return counts


def simulate_noma_baseline(scn: Scenario, settings: McSettings,
                           power_split: str = "renormalized") -> Dict[str, McEstimate]:
    """Per-user NOMA outage estimates (``D1..DN``, ``U1``, ``U2``) on the same draws as RSMA.

    ``power_split`` is one of ``NOMA_POWER_SPLITS``.
    """
    if power_split not in NOMA_POWER_SPLITS:
        raise ValueError(f"power_split must be one of {NOMA_POWER_SPLITS}, got {power_split!r}")
    counts = _run_blocks(scn, settings, lambda sc, d: _noma_events(sc, d, power_split))
    return {u: McEstimate.from_count(int(c), settings.trials) for u, c in counts.items()}


def noma_throughput(scn: Scenario, settings: McSettings,
                    outages: Optional[Dict[str, McEstimate]] = None):
    outages = outages or simulate_noma_baseline(scn, settings)
    cfg = scn.cfg
    rates = {f"D{n + 1}": cfg.rate_common[n] + cfg.rate_private[n] for n in range(scn.n)}
    rates["U1"] = cfg.rate_u1
    rates["U2"] = cfg.rate_u2
    return _throughputs(outages, rates)


def simulate_hd_baseline(scn: Scenario, settings: McSettings) -> McEstimate:
    """Half-duplex sum throughput.

    Downlink and uplink each get half the time: the downlink phase has no
    co-channel interference and the uplink phase no self-interference.
    """
    cfg = scn.cfg
    dl_scn = prepare(replace(cfg, cci_enabled=False))
    ul_scn = prepare(replace(cfg, delta_si=0.0))
    dl = estimate_throughput(dl_scn, settings)
    ul = estimate_throughput(ul_scn, settings)
    dl_users = [f"D{n + 1}" for n in range(scn.n)]
    parts = [dl[u] for u in dl_users] + [ul["U1"], ul["U2"]]
    return McEstimate(0.5 * sum(p.mean for p in parts),
                      0.5 * sum(p.stderr for p in parts), settings.trials)
