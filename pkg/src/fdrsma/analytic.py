"""Closed-form outage probabilities, throughputs, and a quadrature oracle.

Each outage component has the same shape: the desired squared gain ``X``
(Gamma with integer shape ``m``) must exceed an affine function of two
independent Gamma interferers,

    P = Pr(X < K * (c0 + c_y * Y + c_z * Z)).

Normalizing ``X`` to unit scale turns the conditional probability into an
Erlang CDF evaluated at ``b0 + b_y * Y + b_z * Z``. Expanding the Erlang sum
with two binomial expansions and integrating the Gamma moments term by term
gives a triple sum over ``(k, l, p)``. The helpers below build the ``b``
coefficients for each component and evaluate that sum in the log domain.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Optional, Sequence, Tuple

import numpy as np
from scipy import integrate
from scipy.special import gammainc, gammaln

from . import sinr as _sinr
from .mathkern import log_binomial, logsumexp
from .scenario import LinkStats, Scenario, SystemConfig

__all__ = [
    "Interferer",
    "ComponentForm",
    "ClosedFormCoefficients",
    "OutageBreakdown",
    "OracleConvergenceError",
    "COMPONENTS",
    "closed_form_coefficients",
    "common_outage_component",
    "private_outage_component",
    "uplink_outage_components",
    "downlink_outage",
    "uplink_outages",
    "throughput",
    "user_throughputs",
    "perfect_limit",
    "analytic_breakdown",
    "integral_oracle",
    "oracle_breakdown",
]

COMPONENTS = ("common", "private", "p21", "p11", "p22")

# below this the 1 - sum form has lost too many digits; switch to the tail series
_TAIL_SWITCH = 1e-6
_TAIL_MAX_EXTRA = 400
_TAIL_RTOL = 1e-17


class OracleConvergenceError(ArithmeticError):
    def __init__(self, component, achieved):
        super().__init__(f"oracle for {component!r} did not converge (achieved abs error {achieved:.3g})")
        self.component = component
        self.achieved = achieved


@dataclass(frozen=True)
class Interferer:
    """A Gamma-distributed interfering squared gain scaled by ``coef`` inside the Erlang argument.

    ``rate`` is ``shape / omega_hat`` and may be ``inf`` for an absent link.
    """

    coef: float
    shape: int
    rate: float

    def log_moment(self, j):
        """``log E[(coef*Y)^j exp(-coef*Y)]`` for integer arrays ``j``."""
        j = np.asarray(j, dtype=float)
        if self.coef == 0.0 or self.rate == math.inf:
            return np.where(j == 0, 0.0, -np.inf)
        t = self.coef / self.rate
        # rate^m Gamma(m+j) coef^j / (Gamma(m) (rate+coef)^(m+j))
        return (gammaln(self.shape + j) - gammaln(self.shape)
                + j * math.log(t) - (self.shape + j) * math.log1p(t))


@dataclass(frozen=True)
class ComponentForm:
    """One outage component in normalized form.

    ``guard_ok`` False means the decoding condition can never be met
    (outage is 1). Otherwise the outage is
    ``E[ErlangCDF(shape, const + y.coef*Y + z.coef*Z)]``.
    """

    shape: int
    const: float
    y: Interferer
    z: Interferer
    guard_ok: bool = True


def _rate(stats: LinkStats) -> float:
    return stats.shape / stats.omega_hat if stats.omega_hat > 0.0 else math.inf


def _log_pow(base, exp):
    exp = np.asarray(exp, dtype=float)
    if base == 0.0:
        return np.where(exp == 0, 0.0, -np.inf)
    return exp * math.log(base)


def _log_poisson_mixture_term(form: ComponentForm, k: int) -> float:
    """``log E[exp(-x) x^k / k!]`` with ``x = const + b_y Y + b_z Z``, via the (l, p) double sum."""
    l, p = np.tril_indices(k + 1)
    terms = (-form.const - math.lgamma(k + 1)
             + log_binomial(k, l) + log_binomial(l, p)
             + _log_pow(form.const, l - p)
             + form.y.log_moment(k - l)
             + form.z.log_moment(p))
    return logsumexp(terms.tolist())


def evaluate_form(form: ComponentForm) -> float:
    """Outage ``1 - sum_{k<m} sum_{l<=k} sum_{p<=l} (...)`` for a component form."""
    if not form.guard_ok:
        return 1.0
    if math.isinf(form.const):
        return 1.0
    m = form.shape
    log_terms = [_log_poisson_mixture_term(form, k) for k in range(m)]
    log_mass = logsumexp(log_terms)
    direct = -math.expm1(min(log_mass, 0.0))
    if direct >= _TAIL_SWITCH:
        return min(1.0, direct)
    # The Poisson-mixture terms over all k sum to one, so the outage is the
    # k >= m tail; summing it directly avoids cancellation for tiny outages.
    tail = []
    prev = math.inf
    for k in range(m, m + _TAIL_MAX_EXTRA):
        t = _log_poisson_mixture_term(form, k)
        tail.append(t)
        if t == -math.inf:
            break
        if t < prev and t < logsumexp(tail) + math.log(_TAIL_RTOL):
            break
        prev = t
    else:
        return max(0.0, direct)
    return min(1.0, math.exp(logsumexp(tail)))


@dataclass(frozen=True)
class ClosedFormCoefficients:
    """Scenario coefficients of the outage closed forms.

    Downlink entries are tuples over users. ``w1``/``w2``/``e3``/``l4`` are
    ``None`` where the corresponding decodability guard fails. ``a1_cci`` and
    ``c1_cci`` are the Gamma rates of the U2 -> D_n and U1 -> D_n links.
    """

    w1: Tuple[Optional[float], ...]
    b1: Tuple[float, ...]
    b2: Tuple[float, ...]
    b3: Tuple[float, ...]
    w2: Tuple[Optional[float], ...]
    d1: Tuple[float, ...]
    d2: Tuple[float, ...]
    d3: Tuple[float, ...]
    s1: Tuple[float, ...]
    s2: Tuple[float, ...]
    n1: Tuple[float, ...]
    a1_cci: Tuple[float, ...]
    c1_cci: Tuple[float, ...]
    a1: float
    c1: float
    e1: float
    e2: float
    e3: Optional[float]
    e4: float
    e5: float
    e6: float
    e7: float
    a3: float
    a4: float
    c3: float
    c4: float
    c5: float
    c6: float
    l2: float
    l3: float
    l4: Optional[float]
    l5: float
    l6: float
    l7: float


def _scaled_threshold(shape, gamma, omega_hat, snr, margin):
    """``shape*gamma / (omega_hat*snr*margin)``; None when the margin is not positive."""
    if margin <= 0.0:
        return None
    if gamma == 0.0:
        return 0.0
    if omega_hat == 0.0:
        return math.inf
    return shape * gamma / (omega_hat * snr * margin)


def _mul(w, x):
    if w is None:
        return math.nan
    if w == math.inf:
        return math.inf if x > 0 else 0.0
    return w * x


def closed_form_coefficients(scn: Scenario) -> ClosedFormCoefficients:
    cfg, thr, s = scn.cfg, scn.thr, scn.snr
    dl = {name: [] for name in ("w1", "b1", "b2", "b3", "w2", "d1", "d2", "d3",
                                 "s1", "s2", "n1", "a1_cci", "c1_cci")}
    for n in range(scn.n):
        link = scn.dl(n)
        s1 = _sinr.dl_common_noise(scn, n)
        s2 = _sinr.dl_private_noise(scn, n)
        n1 = _sinr.private_self_interference(scn, n)
        w1 = _scaled_threshold(link.shape, thr.gamma_c[n], link.omega_hat, s.rho_b,
                               cfg.alpha_c - thr.gamma_c[n] * (1.0 - cfg.alpha_c))
        w2 = _scaled_threshold(link.shape, thr.gamma_p[n], link.omega_hat, s.rho_b,
                               cfg.alpha_private[n] - thr.gamma_p[n] * n1)
        dl["w1"].append(w1)
        dl["b1"].append(_mul(w1, s1))
        dl["b2"].append(_mul(w1, s.rho_1_dl))
        dl["b3"].append(_mul(w1, s.rho_2_dl))
        dl["w2"].append(w2)
        dl["d1"].append(_mul(w2, s.rho_1_dl))
        dl["d2"].append(_mul(w2, s.rho_2_dl))
        dl["d3"].append(_mul(w2, s2))
        dl["s1"].append(s1)
        dl["s2"].append(s2)
        dl["n1"].append(n1)
        dl["a1_cci"].append(_rate(scn.cci2(n)))
        dl["c1_cci"].append(_rate(scn.cci1(n)))

    e1 = _sinr.ul_first_noise(scn)
    e2 = s.rho_b_bs * cfg.delta_si
    e3 = _scaled_threshold(scn.u2.shape, thr.gamma_21, scn.u2.omega_hat, s.rho_2,
                           cfg.alpha_12 - thr.gamma_21 * cfg.alpha_22)
    a3 = (cfg.alpha_22 + cfg.theta_sic * cfg.alpha_12) * s.rho_2
    a4 = _sinr.ul_u1_noise(scn)
    c3 = _scaled_threshold(scn.u1.shape, thr.gamma_11, scn.u1.omega_hat, s.rho_1, 1.0)
    l2 = _sinr.ul_last_noise(scn)
    l3 = s.rho_1 * cfg.theta_sic
    l4 = _scaled_threshold(scn.u2.shape, thr.gamma_22, scn.u2.omega_hat, s.rho_2,
                           cfg.alpha_22 - thr.gamma_22 * cfg.theta_sic * cfg.alpha_12)
    return ClosedFormCoefficients(
        **{k: tuple(v) for k, v in dl.items()},
        a1=_rate(scn.u2), c1=_rate(scn.u1),
        e1=e1, e2=e2, e3=e3, e4=_mul(e3, s.rho_1), e5=_mul(e3, e2), e6=_mul(e3, e1),
        e7=_rate(scn.si),
        a3=a3, a4=a4, c3=c3, c4=_mul(c3, a3), c5=_mul(c3, e2), c6=_mul(c3, a4),
        l2=l2, l3=l3, l4=l4, l5=_mul(l4, l3), l6=_mul(l4, e2), l7=_mul(l4, l2),
    )


def _form(shape, guard_w, const, y, z):
    if guard_w is None:
        return ComponentForm(shape, math.nan, y, z, guard_ok=False)
    return ComponentForm(shape, const, y, z)


def component_forms(scn: Scenario, co: Optional[ClosedFormCoefficients] = None):
    """Normalized forms of every component: ``{"common": [...], "private": [...], "p21": ..., ...}``."""
    co = co or closed_form_coefficients(scn)
    cfg = scn.cfg
    common, private = [], []
    for n in range(scn.n):
        m = scn.dl(n).shape
        common.append(_form(m, co.w1[n], co.b1[n],
                            Interferer(co.b2[n], cfg.m_cci, co.c1_cci[n]),
                            Interferer(co.b3[n], cfg.m_cci, co.a1_cci[n])))
        private.append(_form(m, co.w2[n], co.d3[n],
                             Interferer(co.d1[n], cfg.m_cci, co.c1_cci[n]),
                             Interferer(co.d2[n], cfg.m_cci, co.a1_cci[n])))
    si = lambda coef: Interferer(coef, cfg.m_si, co.e7)
    return {
        "common": common,
        "private": private,
        "p21": _form(cfg.m_u2, co.e3, co.e6, Interferer(co.e4, cfg.m_u1, co.c1), si(co.e5)),
        "p11": _form(cfg.m_u1, co.c3, co.c6, Interferer(co.c4, cfg.m_u2, co.a1), si(co.c5)),
        "p22": _form(cfg.m_u2, co.l4, co.l7, Interferer(co.l5, cfg.m_u1, co.c1), si(co.l6)),
    }


def common_outage_component(scn: Scenario, n: int) -> float:
    """Probability that downlink user ``n`` fails to decode the common stream."""
    return evaluate_form(component_forms(scn)["common"][n])


def private_outage_component(scn: Scenario, n: int) -> float:
    """Probability that downlink user ``n`` fails to decode its private stream."""
    return evaluate_form(component_forms(scn)["private"][n])


def uplink_outage_components(scn: Scenario):
    """Marginal failure probabilities of the x12, x1 and x22 decoding stages."""
    forms = component_forms(scn)
    return tuple(evaluate_form(forms[c]) for c in ("p21", "p11", "p22"))


def _check_prob(name, p):
    if not (0.0 <= p <= 1.0):
        raise ValueError(f"{name} must lie in [0, 1], got {p}")


def downlink_outage(p_c: float, p_p: float) -> float:
    _check_prob("p_c", p_c)
    _check_prob("p_p", p_p)
    return p_c + p_p - p_c * p_p


def uplink_outages(p21: float, p11: float, p22: float):
    for name, p in (("p21", p21), ("p11", p11), ("p22", p22)):
        _check_prob(name, p)
    pu1 = p21 + (1.0 - p21) * p11
    pu2 = pu1 + (1.0 - p21) * (1.0 - p11) * p22
    return pu1, pu2


def throughput(outage: float, rate_sum: float) -> float:
    _check_prob("outage", outage)
    if not rate_sum >= 0.0:
        raise ValueError(f"rate_sum must be nonnegative, got {rate_sum}")
    return (1.0 - outage) * rate_sum


def perfect_limit(cfg: SystemConfig) -> SystemConfig:
    """Perfect channel estimates on every link and perfect SIC."""
    return replace(cfg, beta_d=math.inf, beta_u=math.inf, theta_sic=0.0)


@dataclass(frozen=True)
class OutageBreakdown:
    """Per-component and per-user outage probabilities.

    Entries are floats for analytic/oracle results; the Monte Carlo engine
    fills the same structure with ``McEstimate`` objects.
    """

    p_common: tuple
    p_private: tuple
    p_21: object
    p_11: object
    p_22: object
    p_dl: tuple
    p_ul_1: object
    p_ul_2: object

    @classmethod
    def compose(cls, p_common: Sequence[float], p_private: Sequence[float],
                p21: float, p11: float, p22: float) -> "OutageBreakdown":
        pu1, pu2 = uplink_outages(p21, p11, p22)
        return cls(
            p_common=tuple(p_common),
            p_private=tuple(p_private),
            p_21=p21, p_11=p11, p_22=p22,
            p_dl=tuple(downlink_outage(c, p) for c, p in zip(p_common, p_private)),
            p_ul_1=pu1, p_ul_2=pu2,
        )

    def users(self):
        """``{"D1": ..., "D2": ..., "U1": ..., "U2": ...}``."""
        out = {f"D{n + 1}": p for n, p in enumerate(self.p_dl)}
        out["U1"] = self.p_ul_1
        out["U2"] = self.p_ul_2
        return out

    def components(self):
        out = {}
        for n, (c, p) in enumerate(zip(self.p_common, self.p_private)):
            out[f"D{n + 1}.common"] = c
            out[f"D{n + 1}.private"] = p
        out["U.21"] = self.p_21
        out["U.11"] = self.p_11
        out["U.22"] = self.p_22
        return out


def user_rates(scn: Scenario):
    """Target rate sum of each user, keyed like ``OutageBreakdown.users``."""
    cfg = scn.cfg
    rates = {f"D{n + 1}": cfg.rate_common[n] + cfg.rate_private[n] for n in range(scn.n)}
    rates["U1"] = cfg.rate_u1
    rates["U2"] = scn.thr.rate_12 + scn.thr.rate_22
    return rates


def user_throughputs(scn: Scenario, breakdown: OutageBreakdown):
    rates = user_rates(scn)
    return {u: throughput(p, rates[u]) for u, p in breakdown.users().items()}


def analytic_breakdown(scn: Scenario) -> OutageBreakdown:
    forms = component_forms(scn)
    return OutageBreakdown.compose(
        [evaluate_form(f) for f in forms["common"]],
        [evaluate_form(f) for f in forms["private"]],
        evaluate_form(forms["p21"]), evaluate_form(forms["p11"]), evaluate_form(forms["p22"]),
    )


# ---------------------------------------------------------------------------
# quadrature oracle
#
# Built straight from the SINR expressions: for a SINR of the form
# a*X / (b*X + c0 + cy*Y + cz*Z), outage happens iff
# X * (a - gamma*b) < gamma * (c0 + cy*Y + cz*Z). The conditional probability
# is a regularized incomplete gamma in X, integrated against the Gamma
# densities of Y and Z with adaptive quadrature.

ORACLE_EPSABS = 1e-9
ORACLE_EPSREL = 1e-10


@dataclass(frozen=True)
class _SinrShape:
    desired: LinkStats
    gamma: float
    signal: float
    self_interf: float
    const: float
    interferers: Tuple[Tuple[float, LinkStats], ...]


def _oracle_shapes(scn: Scenario, component: str, n: Optional[int]) -> _SinrShape:
    cfg, s, thr = scn.cfg, scn.snr, scn.thr
    si = (cfg.delta_si * s.rho_b_bs, scn.si)
    if component in ("common", "private"):
        if n is None or not 0 <= n < scn.n:
            raise ValueError(f"component {component!r} needs a downlink user index")
        cci = ((s.rho_1_dl, scn.cci1(n)), (s.rho_2_dl, scn.cci2(n)))
        if component == "common":
            return _SinrShape(scn.dl(n), thr.gamma_c[n], s.rho_b * cfg.alpha_c,
                              s.rho_b * (1.0 - cfg.alpha_c), _sinr.dl_common_noise(scn, n), cci)
        return _SinrShape(scn.dl(n), thr.gamma_p[n], s.rho_b * cfg.alpha_private[n],
                          s.rho_b * _sinr.private_self_interference(scn, n),
                          _sinr.dl_private_noise(scn, n), cci)
    if component == "p21":
        return _SinrShape(scn.u2, thr.gamma_21, s.rho_2 * cfg.alpha_12, s.rho_2 * cfg.alpha_22,
                          _sinr.ul_first_noise(scn), ((s.rho_1, scn.u1), si))
    if component == "p11":
        residual = (cfg.alpha_22 + cfg.theta_sic * cfg.alpha_12) * s.rho_2
        return _SinrShape(scn.u1, thr.gamma_11, s.rho_1, 0.0, _sinr.ul_u1_noise(scn),
                          ((residual, scn.u2), si))
    if component == "p22":
        return _SinrShape(scn.u2, thr.gamma_22, s.rho_2 * cfg.alpha_22,
                          s.rho_2 * cfg.theta_sic * cfg.alpha_12, _sinr.ul_last_noise(scn),
                          ((s.rho_1 * cfg.theta_sic, scn.u1), si))
    raise ValueError(f"unknown component {component!r}; expected one of {COMPONENTS}")


def _gamma_pdf(u, shape):
    if u <= 0.0:
        return 1.0 if (shape == 1 and u == 0.0) else 0.0
    return math.exp((shape - 1) * math.log(u) - u - math.lgamma(shape))


def _expect_over_gamma(func, shape, component):
    """``E[func(U)]`` for ``U ~ Gamma(shape, 1)`` by adaptive quadrature."""
    split = shape + 8.0 * math.sqrt(shape) + 10.0
    integrand = lambda u: _gamma_pdf(u, shape) * func(u)
    total = 0.0
    err = 0.0
    for lo, hi in ((0.0, split), (split, math.inf)):
        val, e = integrate.quad(integrand, lo, hi, epsabs=0.0, epsrel=ORACLE_EPSREL, limit=200)
        total += val
        err += e
    if err > max(ORACLE_EPSABS, 1e-8 * abs(total)):
        raise OracleConvergenceError(component, err)
    return total


def integral_oracle(component: str, scn: Scenario, n: Optional[int] = None) -> float:
    """Outage component by direct numerical expectation over the interfering gains."""
    sh = _oracle_shapes(scn, component, n)
    if sh.gamma == 0.0:
        return 0.0
    margin = sh.signal - sh.gamma * sh.self_interf
    if margin <= 0.0 or sh.desired.omega_hat == 0.0:
        return 1.0
    scale = sh.gamma * sh.desired.shape / (margin * sh.desired.omega_hat)
    m = sh.desired.shape
    active = [(coef * st.scale, st.shape) for coef, st in sh.interferers if coef * st.scale > 0.0]

    # scipy's compiled gammainc keeps the nested quadrature fast and
    # independent of the series code used by the closed forms
    def cond(extra):
        return float(gammainc(m, scale * (sh.const + extra)))

    if not active:
        return cond(0.0)
    if len(active) == 1:
        (cy, my), = active
        return min(1.0, _expect_over_gamma(lambda u: cond(cy * u), my, component))
    (cy, my), (cz, mz) = active
    inner = lambda u: _expect_over_gamma(lambda v: cond(cy * u + cz * v), mz, component)
    return min(1.0, _expect_over_gamma(inner, my, component))


def oracle_breakdown(scn: Scenario) -> OutageBreakdown:
    return OutageBreakdown.compose(
        [integral_oracle("common", scn, n) for n in range(scn.n)],
        [integral_oracle("private", scn, n) for n in range(scn.n)],
        integral_oracle("p21", scn), integral_oracle("p11", scn), integral_oracle("p22", scn),
    )
