"""Full-duplex rate-splitting outage and throughput: closed forms, Monte Carlo, baselines.

Typical use::

    from fdrsma import reference_config, prepare, analytic_breakdown
    scn = prepare(reference_config().with_power(20.0))
    analytic_breakdown(scn).users()
"""

from .analytic import (
    OracleConvergenceError,
    OutageBreakdown,
    analytic_breakdown,
    integral_oracle,
    oracle_breakdown,
    perfect_limit,
    user_throughputs,
)
from .montecarlo import (
    McEstimate,
    McSettings,
    estimate_outages,
    estimate_throughput,
    simulate_hd_baseline,
    simulate_noma_baseline,
)
from .scenario import ConfigError, Scenario, SystemConfig, prepare, reference_config

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "McEstimate",
    "McSettings",
    "OracleConvergenceError",
    "OutageBreakdown",
    "Scenario",
    "SystemConfig",
    "analytic_breakdown",
    "estimate_outages",
    "estimate_throughput",
    "integral_oracle",
    "oracle_breakdown",
    "perfect_limit",
    "prepare",
    "simulate_hd_baseline",
    "simulate_noma_baseline",
    "reference_config",
    "user_throughputs",
]
