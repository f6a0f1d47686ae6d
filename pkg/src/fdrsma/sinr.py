"""Instantaneous SINRs for one (or a batch of) channel realizations.

Squared *estimated* gains are the random quantities; estimation errors enter
only through their variances inside the constant noise terms below. All
functions broadcast over numpy arrays, so a ``ChannelDraw`` may hold a whole
Monte Carlo batch.
"""

from dataclasses import dataclass

import numpy as np

from .scenario import Scenario

__all__ = [
    "ChannelDraw",
    "SinrVector",
    "private_self_interference",
    "dl_common_noise",
    "dl_private_noise",
    "ul_first_noise",
    "ul_u1_noise",
    "ul_last_noise",
    "downlink_sinrs",
    "uplink_sinrs",
    "all_sinrs",
]


@dataclass(frozen=True)
class ChannelDraw:
    """Squared estimated channel magnitudes.

    Per-downlink-user entries carry the user index on the last axis, i.e. shape
    ``(..., N)``; uplink and SI entries have shape ``(...)``.
    """

    g2_hat_dn: np.ndarray
    g2_u1: np.ndarray
    g2_u2: np.ndarray
    g2_cci1_n: np.ndarray
    g2_cci2_n: np.ndarray
    g2_si: np.ndarray

    @classmethod
    def constant(cls, scn: Scenario, **overrides) -> "ChannelDraw":
        """A single draw with every squared gain fixed at its estimated-channel mean."""
        n = scn.n
        values = dict(
            g2_hat_dn=np.array([scn.dl(i).omega_hat for i in range(n)]),
            g2_u1=np.asarray(scn.u1.omega_hat),
            g2_u2=np.asarray(scn.u2.omega_hat),
            g2_cci1_n=np.array([scn.cci1(i).omega_hat for i in range(n)]),
            g2_cci2_n=np.array([scn.cci2(i).omega_hat for i in range(n)]),
            g2_si=np.asarray(scn.si.omega_hat),
        )
        values.update({k: np.asarray(v, dtype=float) for k, v in overrides.items()})
        return cls(**values)


@dataclass(frozen=True)
class SinrVector:
    dl_common_n: np.ndarray
    dl_private_n: np.ndarray
    ul_x12: np.ndarray
    ul_x1: np.ndarray
    ul_x22: np.ndarray


def private_self_interference(scn: Scenario, n: int) -> float:
    """Fraction of BS power left on the user's own channel while decoding its private stream."""
    cfg = scn.cfg
    others = sum(a for i, a in enumerate(cfg.alpha_private) if i != n)
    return others + cfg.theta_sic * cfg.alpha_c


def _cci_error_terms(scn, n):
    s = scn.snr
    return s.rho_1_dl * scn.cci1(n).omega_err + s.rho_2_dl * scn.cci2(n).omega_err


def dl_common_noise(scn: Scenario, n: int) -> float:
    """Constant part of the common-stream denominator (normalized noise plus error terms)."""
    return scn.snr.rho_b * scn.dl(n).omega_err + _cci_error_terms(scn, n) + 1.0


def dl_private_noise(scn: Scenario, n: int) -> float:
    """Constant part of the private-stream denominator.

    The error term on the user's own channel is weighted by the undecoded
    private power plus the SIC residual of the common stream. Under the
    ``"sum"`` reading that private power is the sum over all users; the
    ``"literal"`` reading uses ``N * alpha_private[n]``.
    """
    cfg = scn.cfg
    if cfg.s2_interpretation == "literal":
        private = cfg.n_downlink * cfg.alpha_private[n]
    else:
        private = sum(cfg.alpha_private)
    weight = private + cfg.theta_sic * cfg.alpha_c
    return 1.0 + _cci_error_terms(scn, n) + scn.snr.rho_b * scn.dl(n).omega_err * weight


def _si_error(scn):
    return scn.snr.rho_b_bs * scn.cfg.delta_si * scn.si.omega_err


def ul_first_noise(scn: Scenario) -> float:
    s = scn.snr
    return _si_error(scn) + s.rho_1 * scn.u1.omega_err + s.rho_2 * scn.u2.omega_err + 1.0


def _u2_residual(cfg):
    return cfg.alpha_22 + cfg.theta_sic * cfg.alpha_12


def ul_u1_noise(scn: Scenario) -> float:
    s = scn.snr
    return (1.0 + s.rho_1 * scn.u1.omega_err
            + s.rho_2 * scn.u2.omega_err * _u2_residual(scn.cfg) + _si_error(scn))


def ul_last_noise(scn: Scenario) -> float:
    s = scn.snr
    return (_si_error(scn) + s.rho_1 * scn.cfg.theta_sic * scn.u1.omega_err
            + s.rho_2 * scn.u2.omega_err * _u2_residual(scn.cfg) + 1.0)


def downlink_sinrs(draw: ChannelDraw, scn: Scenario, n: int):
    """Common- and private-stream SINRs at downlink user ``n`` (0-based)."""
    cfg, s = scn.cfg, scn.snr
    g = draw.g2_hat_dn[..., n]
    cci = draw.g2_cci1_n[..., n] * s.rho_1_dl + draw.g2_cci2_n[..., n] * s.rho_2_dl
    common = g * s.rho_b * cfg.alpha_c / (
        s.rho_b * (1.0 - cfg.alpha_c) * g + cci + dl_common_noise(scn, n))
    private = g * s.rho_b * cfg.alpha_private[n] / (
        s.rho_b * private_self_interference(scn, n) * g + cci + dl_private_noise(scn, n))
    return common, private


def uplink_sinrs(draw: ChannelDraw, scn: Scenario):
    """SINRs of the x12 -> x1 -> x22 decoding chain at the BS."""
    cfg, s = scn.cfg, scn.snr
    u1 = draw.g2_u1 * s.rho_1
    u2 = draw.g2_u2 * s.rho_2
    si = draw.g2_si * cfg.delta_si * s.rho_b_bs
    x12 = u2 * cfg.alpha_12 / (u2 * cfg.alpha_22 + u1 + si + ul_first_noise(scn))
    x1 = u1 / (u2 * _u2_residual(cfg) + si + ul_u1_noise(scn))
    x22 = u2 * cfg.alpha_22 / (
        u2 * cfg.theta_sic * cfg.alpha_12 + u1 * cfg.theta_sic + si + ul_last_noise(scn))
    return x12, x1, x22


def all_sinrs(draw: ChannelDraw, scn: Scenario) -> SinrVector:
    pairs = [downlink_sinrs(draw, scn, n) for n in range(scn.n)]
    x12, x1, x22 = uplink_sinrs(draw, scn)
    return SinrVector(
        dl_common_n=np.stack([c for c, _ in pairs], axis=-1),
        dl_private_n=np.stack([p for _, p in pairs], axis=-1),
        ul_x12=x12,
        ul_x1=x1,
        ul_x22=x22,
    )
