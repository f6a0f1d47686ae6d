"""Scenario description, validation, and derived per-link statistics.

All transmit powers are in dBm, distances in meters, and rates in bits/s/Hz.
Path loss follows ``ref_distance / D**exponent``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields, replace
from typing import Dict, Optional, Tuple

__all__ = [
    "ConfigError",
    "SystemConfig",
    "LinkStats",
    "Thresholds",
    "Snrs",
    "Scenario",
    "reference_config",
    "validate_config",
    "build_link_stats",
    "thresholds_from_rates",
    "dbm_to_linear_snr",
    "link_snrs",
    "prepare",
    "S2_INTERPRETATIONS",
]

SUM_TOL = 1e-9
S2_INTERPRETATIONS = ("sum", "literal")
NOISE_UNITS = ("dBW", "dBm")


class ConfigError(ValueError):
    """A scenario violates one of its constraints."""


@dataclass(frozen=True)
class SystemConfig:
    """Every scalar knob of the full-duplex RSMA scenario.

    Per-downlink-user quantities are tuples of length ``n_downlink``.
    ``beta_d`` / ``beta_u`` may be ``math.inf`` for perfect channel estimates.
    ``noise_db`` is read in ``noise_unit`` ("dBW" or "dBm"); the default
    -100 dBW equals -70 dBm. ``noise_bs_db`` overrides the noise floor at the
    BS receiver; ``None`` means the BS uses ``noise_db`` as well.
    """

    n_downlink: int = 2
    p_bs_dbm: float = 20.0
    p_u1_dbm: float = 20.0
    p_u2_dbm: float = 20.0
    noise_db: float = -100.0
    noise_bs_db: Optional[float] = None
    noise_unit: str = "dBW"

    alpha_c: float = 0.5
    alpha_private: Tuple[float, ...] = (0.15, 0.35)
    alpha_12: float = 0.71
    alpha_22: float = 0.29
    theta_sic: float = 0.0
    delta_si: float = 1e-7
    beta_d: float = math.inf
    beta_u: float = math.inf
    zeta: float = 0.17

    rate_common: Tuple[float, ...] = (0.45, 0.45)
    rate_private: Tuple[float, ...] = (0.25, 0.25)
    rate_u1: float = 0.65
    rate_u2: float = 0.80

    dist_bs_dn: Tuple[float, ...] = (85.0, 87.0)
    dist_u1_bs: float = 70.0
    dist_u2_bs: float = 66.0
    dist_u1_dn: Tuple[float, ...] = (115.0, 115.0)
    dist_u2_dn: Tuple[float, ...] = (118.0, 118.0)
    dist_si: float = 1.5
    pl_exp_access: float = 3.3
    pl_exp_cci: float = 3.8
    pl_exp_si: float = 2.0
    ref_distance: float = 1.0

    m_dn: Tuple[int, ...] = (5, 5)
    m_u1: int = 4
    m_u2: int = 4
    m_si: int = 5
    m_cci: int = 3

    cci_enabled: bool = True
    s2_interpretation: str = "sum"

    def with_power(self, p_dbm: float) -> "SystemConfig":
        """Same scenario with the BS and both uplink users at ``p_dbm``."""
        return replace(self, p_bs_dbm=p_dbm, p_u1_dbm=p_dbm, p_u2_dbm=p_dbm)

    def evolve(self, **changes) -> "SystemConfig":
        return replace(self, **changes)


PER_USER_FIELDS = (
    "alpha_private",
    "rate_common",
    "rate_private",
    "dist_bs_dn",
    "dist_u1_dn",
    "dist_u2_dn",
    "m_dn",
)


def reference_config(**overrides) -> SystemConfig:
    """The reference two-user scenario (m_CCI = 3, perfect CSI and SIC by default)."""
    return SystemConfig(**overrides)


@dataclass(frozen=True)
class LinkStats:
    omega: float
    omega_err: float
    omega_hat: float
    shape: int

    @property
    def scale(self) -> float:
        """Gamma scale of the squared estimated gain (mean ``omega_hat``)."""
        return self.omega_hat / self.shape


@dataclass(frozen=True)
class Thresholds:
    gamma_c: Tuple[float, ...]
    gamma_p: Tuple[float, ...]
    gamma_11: float
    gamma_21: float
    gamma_22: float
    rate_12: float
    rate_22: float


@dataclass(frozen=True)
class Snrs:
    """Linear transmit SNRs. ``rho_b`` is referenced to the downlink noise;
    the uplink and SI values to the BS receiver noise."""

    rho_b: float
    rho_1_dl: float
    rho_2_dl: float
    rho_1: float
    rho_2: float
    rho_b_bs: float


@dataclass(frozen=True)
class Scenario:
    """A validated config bundled with everything derived from it."""

    cfg: SystemConfig
    links: Dict[str, LinkStats] = field(repr=False)
    snr: Snrs
    thr: Thresholds

    @property
    def n(self) -> int:
        return self.cfg.n_downlink

    def dl(self, n: int) -> LinkStats:
        return self.links[f"bs_d{n + 1}"]

    def cci1(self, n: int) -> LinkStats:
        return self.links[f"u1_d{n + 1}"]

    def cci2(self, n: int) -> LinkStats:
        return self.links[f"u2_d{n + 1}"]

    @property
    def u1(self) -> LinkStats:
        return self.links["u1_bs"]

    @property
    def u2(self) -> LinkStats:
        return self.links["u2_bs"]

    @property
    def si(self) -> LinkStats:
        return self.links["si"]


def _in_unit(cfg, name):
    v = getattr(cfg, name)
    if not (0.0 <= v <= 1.0):
        raise ConfigError(f"{name} out of range [0, 1]: {name} = {v}")


def _positive_int(cfg, name, value):
    if isinstance(value, bool) or int(value) != value or value < 1:
        raise ConfigError(f"{name} must be a positive integer, got {value!r}")


def validate_config(cfg: SystemConfig) -> SystemConfig:
    """Return ``cfg`` unchanged if it satisfies every constraint, else raise ConfigError."""
    if isinstance(cfg.n_downlink, bool) or int(cfg.n_downlink) != cfg.n_downlink or cfg.n_downlink < 1:
        raise ConfigError(f"n_downlink must be a positive integer, got {cfg.n_downlink!r}")
    for name in PER_USER_FIELDS:
        if len(getattr(cfg, name)) != cfg.n_downlink:
            raise ConfigError(
                f"{name} has {len(getattr(cfg, name))} entries, expected n_downlink = {cfg.n_downlink}"
            )
    for name in ("p_bs_dbm", "p_u1_dbm", "p_u2_dbm", "noise_db"):
        if not math.isfinite(getattr(cfg, name)):
            raise ConfigError(f"{name} must be finite")
    if cfg.noise_bs_db is not None and not math.isfinite(cfg.noise_bs_db):
        raise ConfigError("noise_bs_db must be finite")

    for name in ("alpha_c", "alpha_12", "alpha_22", "theta_sic", "delta_si"):
        _in_unit(cfg, name)
    if not (0.0 <= cfg.zeta <= 1.0):
        raise ConfigError(f"zeta out of range [0, 1]: zeta = {cfg.zeta}")
    for i, a in enumerate(cfg.alpha_private):
        if not (0.0 <= a <= 1.0):
            raise ConfigError(f"alpha_private[{i}] out of range [0, 1]: {a}")
    total = cfg.alpha_c + math.fsum(cfg.alpha_private)
    if abs(total - 1.0) > SUM_TOL:
        raise ConfigError(f"alpha sum = {total:.12g} (alpha_c + sum(alpha_private) must be 1)")
    split = cfg.alpha_12 + cfg.alpha_22
    if abs(split - 1.0) > SUM_TOL:
        raise ConfigError(f"uplink split sum = {split:.12g} (alpha_12 + alpha_22 must be 1)")

    for name in ("beta_d", "beta_u"):
        v = getattr(cfg, name)
        if math.isnan(v) or v < 0.0:
            raise ConfigError(f"{name} must be nonnegative or inf, got {v}")

    for name in ("rate_common", "rate_private"):
        for i, r in enumerate(getattr(cfg, name)):
            if not (r >= 0.0 and math.isfinite(r)):
                raise ConfigError(f"{name}[{i}] must be a nonnegative rate, got {r}")
    for name in ("rate_u1", "rate_u2"):
        r = getattr(cfg, name)
        if not (r >= 0.0 and math.isfinite(r)):
            raise ConfigError(f"{name} must be a nonnegative rate, got {r}")

    for name in ("dist_bs_dn", "dist_u1_dn", "dist_u2_dn"):
        for i, d in enumerate(getattr(cfg, name)):
            if not (d > 0.0 and math.isfinite(d)):
                raise ConfigError(f"{name}[{i}] must be a positive distance, got {d}")
    for name in ("dist_u1_bs", "dist_u2_bs", "dist_si", "ref_distance",
                 "pl_exp_access", "pl_exp_cci", "pl_exp_si"):
        v = getattr(cfg, name)
        if not (v > 0.0 and math.isfinite(v)):
            raise ConfigError(f"{name} must be positive, got {v}")

    for i, m in enumerate(cfg.m_dn):
        _positive_int(cfg, f"m_dn[{i}]", m)
    for name in ("m_u1", "m_u2", "m_si", "m_cci"):
        _positive_int(cfg, name, getattr(cfg, name))

    if cfg.noise_unit not in NOISE_UNITS:
        raise ConfigError(f"noise_unit must be one of {NOISE_UNITS}, got {cfg.noise_unit!r}")
    if cfg.s2_interpretation not in S2_INTERPRETATIONS:
        raise ConfigError(
            f"s2_interpretation must be one of {S2_INTERPRETATIONS}, got {cfg.s2_interpretation!r}"
        )
    return cfg


def dbm_to_linear_snr(p_dbm: float, noise_db: float, unit: str = "dBm") -> float:
    """Linear SNR of a ``p_dbm`` transmitter over a noise floor given in ``unit``.

    >>> dbm_to_linear_snr(0.0, -100.0)
    10000000000.0
    >>> dbm_to_linear_snr(0.0, -100.0, unit="dBW")
    10000000.0
    """
    if unit not in NOISE_UNITS:
        raise ValueError(f"unit must be one of {NOISE_UNITS}, got {unit!r}")
    noise_dbm = noise_db + 30.0 if unit == "dBW" else noise_db
    return 10.0 ** ((p_dbm - noise_dbm) / 10.0)


def link_snrs(cfg: SystemConfig) -> Snrs:
    noise_bs = cfg.noise_db if cfg.noise_bs_db is None else cfg.noise_bs_db
    snr = lambda p, noise: dbm_to_linear_snr(p, noise, cfg.noise_unit)
    return Snrs(
        rho_b=snr(cfg.p_bs_dbm, cfg.noise_db),
        rho_1_dl=snr(cfg.p_u1_dbm, cfg.noise_db),
        rho_2_dl=snr(cfg.p_u2_dbm, cfg.noise_db),
        rho_1=snr(cfg.p_u1_dbm, noise_bs),
        rho_2=snr(cfg.p_u2_dbm, noise_bs),
        rho_b_bs=snr(cfg.p_bs_dbm, noise_bs),
    )


def _cee_variance(omega, rho, beta):
    if omega == 0.0 or beta == math.inf:
        return 0.0
    return omega / (1.0 + rho * beta * omega)


def _link(cfg, distance, exponent, rho, beta, shape, enabled=True):
    omega = cfg.ref_distance / distance**exponent if enabled else 0.0
    err = _cee_variance(omega, rho, beta)
    return LinkStats(omega=omega, omega_err=err, omega_hat=max(omega - err, 0.0), shape=int(shape))


def build_link_stats(cfg: SystemConfig) -> Dict[str, LinkStats]:
    """Mean channel power, estimation-error variance and estimated-gain variance per link.

    Downlink links estimate with ``rho_b * beta_d``; uplink, CCI and SI links
    with the transmitter's SNR times ``beta_u`` (SI is transmitted by the BS).
    """
    snr = link_snrs(cfg)
    links = {}
    for n in range(cfg.n_downlink):
        links[f"bs_d{n + 1}"] = _link(cfg, cfg.dist_bs_dn[n], cfg.pl_exp_access,
                                      snr.rho_b, cfg.beta_d, cfg.m_dn[n])
        links[f"u1_d{n + 1}"] = _link(cfg, cfg.dist_u1_dn[n], cfg.pl_exp_cci,
                                      snr.rho_1_dl, cfg.beta_u, cfg.m_cci, cfg.cci_enabled)
        links[f"u2_d{n + 1}"] = _link(cfg, cfg.dist_u2_dn[n], cfg.pl_exp_cci,
                                      snr.rho_2_dl, cfg.beta_u, cfg.m_cci, cfg.cci_enabled)
    links["u1_bs"] = _link(cfg, cfg.dist_u1_bs, cfg.pl_exp_access, snr.rho_1, cfg.beta_u, cfg.m_u1)
    links["u2_bs"] = _link(cfg, cfg.dist_u2_bs, cfg.pl_exp_access, snr.rho_2, cfg.beta_u, cfg.m_u2)
    links["si"] = _link(cfg, cfg.dist_si, cfg.pl_exp_si, snr.rho_b_bs, cfg.beta_u, cfg.m_si)
    return links


def thresholds_from_rates(cfg: SystemConfig) -> Thresholds:
    rate_12 = cfg.zeta * cfg.rate_u2
    rate_22 = (1.0 - cfg.zeta) * cfg.rate_u2
    return Thresholds(
        gamma_c=tuple(2.0**r - 1.0 for r in cfg.rate_common),
        gamma_p=tuple(2.0**r - 1.0 for r in cfg.rate_private),
        gamma_11=2.0**cfg.rate_u1 - 1.0,
        gamma_21=2.0**rate_12 - 1.0,
        gamma_22=2.0**rate_22 - 1.0,
        rate_12=rate_12,
        rate_22=rate_22,
    )


def prepare(cfg: SystemConfig) -> Scenario:
    """Validate ``cfg`` and derive link statistics, SNRs and thresholds."""
    validate_config(cfg)
    return Scenario(cfg=cfg, links=build_link_stats(cfg), snr=link_snrs(cfg),
                    thr=thresholds_from_rates(cfg))


def config_field_names():
    return [f.name for f in fields(SystemConfig)]
