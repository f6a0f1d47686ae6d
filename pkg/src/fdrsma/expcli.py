"""Command-line sweeps: analytic vs Monte Carlo vs quadrature oracle, as CSV.

Subcommands::

    fdrsma sweep   --scenario FILE --var p_tx_dbm --grid 0:30:2 --mode analytic --mode mc_marginal --out out.csv
    fdrsma compare out.csv
    fdrsma recipe  fig2 --out results/

Exit codes: 0 ok, 1 comparison failed, 2 invalid configuration, 3 I/O
failure, 4 oracle did not converge, 5 CSV schema mismatch. The worker count
for Monte Carlo runs is read from ``FDRSMA_WORKERS``.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import math
import os
import sys
from dataclasses import dataclass, field, replace
from typing import Dict, Iterable, List, Optional, Sequence, Tuple, Union

from . import analytic, montecarlo
from .scenario import ConfigError, SystemConfig, prepare, reference_config

__all__ = [
    "SweepSpec",
    "Recipe",
    "CSV_COLUMNS",
    "SchemaError",
    "parse_scenario",
    "load_scenario",
    "dump_scenario",
    "apply_variable",
    "sweep_rows",
    "run_sweep",
    "compare_report",
    "figure_recipe",
    "run_recipe",
    "main",
]

CSV_COLUMNS = ("sweep_var", "value", "user", "metric", "mode", "estimate", "stderr", "trials", "seed")
VARIABLES = ("p_bs_dbm", "p_u_dbm", "p_tx_dbm", "theta_sic", "delta_si", "beta", "zeta")
OUTPUTS = ("op", "throughput")
MODES = ("analytic", "mc_marginal", "mc_joint", "oracle", "noma", "hd")
DEFAULT_FLOOR = 5e-4

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_IO, EXIT_ORACLE, EXIT_SCHEMA = 0, 1, 2, 3, 4, 5


class SchemaError(ValueError):
    pass


# ---------------------------------------------------------------------------
# scenario files

_FIELDS = {f.name: f for f in dataclasses.fields(SystemConfig)}
_TUPLE_FIELDS = {name for name, f in _FIELDS.items() if "Tuple" in str(f.type)}
_INT_FIELDS = {"n_downlink", "m_u1", "m_u2", "m_si", "m_cci"}
_BOOL_FIELDS = {"cci_enabled"}
_STR_FIELDS = {"s2_interpretation", "noise_unit"}


def _number(key, text, integer=False):
    t = text.strip()
    try:
        if integer:
            v = float(t)
            if v != int(v):
                raise ValueError
            return int(v)
        return float(t)  # accepts "inf"
    except ValueError:
        raise ConfigError(f"{key}: cannot parse {text.strip()!r} as {'an integer' if integer else 'a number'}")


def _convert(key, text):
    if key in _TUPLE_FIELDS:
        integer = key == "m_dn"
        return tuple(_number(key, part, integer) for part in text.split(",") if part.strip())
    if key in _INT_FIELDS:
        return _number(key, text, integer=True)
    if key in _BOOL_FIELDS:
        t = text.strip().lower()
        if t not in ("true", "false", "1", "0", "yes", "no"):
            raise ConfigError(f"{key}: expected true/false, got {text.strip()!r}")
        return t in ("true", "1", "yes")
    if key in _STR_FIELDS:
        return text.strip()
    if key == "noise_bs_db" and text.strip().lower() in ("", "none"):
        return None
    return _number(key, text)


def parse_scenario(text: str, base: Optional[SystemConfig] = None) -> SystemConfig:
    """Parse ``key = value`` lines into a config.

    Keys are ``SystemConfig`` field names. Per-user lists are comma separated;
    repeating a list key appends to it. ``#`` starts a comment. Fields not
    mentioned keep the reference-scenario defaults (or ``base``).
    """
    values: Dict[str, object] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw.strip()!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in _FIELDS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        converted = _convert(key, value)
        if key in values:
            if key not in _TUPLE_FIELDS:
                raise ConfigError(f"line {lineno}: duplicate key {key!r}")
            converted = values[key] + converted
        values[key] = converted
    cfg = replace(base or reference_config(), **values)
    if "n_downlink" not in values and "alpha_private" in values:
        cfg = replace(cfg, n_downlink=len(cfg.alpha_private))
    return cfg


def load_scenario(path: str) -> SystemConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_scenario(fh.read())


def _fmt(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, tuple):
        return ", ".join(_fmt(x) for x in v)
    if v is None:
        return "none"
    if isinstance(v, float):
        return "inf" if v == math.inf else repr(v)
    return str(v)


def dump_scenario(cfg: SystemConfig) -> str:
    return "".join(f"{name} = {_fmt(getattr(cfg, name))}\n" for name in _FIELDS)


# ---------------------------------------------------------------------------
# sweeps

@dataclass(frozen=True)
class SweepSpec:
    variable: str
    grid: Tuple[float, ...]
    outputs: Tuple[str, ...] = ("op",)
    modes: Tuple[str, ...] = ("analytic",)

    def __post_init__(self):
        if self.variable not in VARIABLES:
            raise ConfigError(f"unknown sweep variable {self.variable!r}; expected one of {VARIABLES}")
        if not self.grid:
            raise ConfigError("grid empty")
        if any(b <= a for a, b in zip(self.grid, self.grid[1:])):
            raise ConfigError("grid must be strictly increasing")
        if not self.outputs or any(o not in OUTPUTS for o in self.outputs):
            raise ConfigError(f"outputs must be a nonempty subset of {OUTPUTS}, got {self.outputs}")
        if not self.modes or any(m not in MODES for m in self.modes):
            raise ConfigError(f"modes must be a nonempty subset of {MODES}, got {self.modes}")
        if "hd" in self.modes and "throughput" not in self.outputs:
            raise ConfigError("mode 'hd' only produces throughput; add output 'throughput'")


def parse_grid(text: str) -> Tuple[float, ...]:
    """``"0:30:2"`` (inclusive) or ``"0.1,0.2,0.5"``."""
    text = text.strip()
    if not text:
        return ()
    if ":" in text:
        try:
            start, stop, step = (float(x) for x in text.split(":"))
        except ValueError:
            raise ConfigError(f"grid: cannot parse range {text!r}")
        if step <= 0:
            raise ConfigError("grid step must be positive")
        count = int(math.floor((stop - start) / step + 1e-9)) + 1
        return tuple(round(start + i * step, 10) for i in range(max(count, 0)))
    try:
        return tuple(float(x) for x in text.split(",") if x.strip())
    except ValueError:
        raise ConfigError(f"grid: cannot parse list {text!r}")


def apply_variable(cfg: SystemConfig, variable: str, value: float) -> SystemConfig:
    if variable == "p_tx_dbm":
        return cfg.with_power(value)
    if variable == "p_u_dbm":
        return replace(cfg, p_u1_dbm=value, p_u2_dbm=value)
    if variable == "beta":
        return replace(cfg, beta_d=value, beta_u=value)
    if variable in ("p_bs_dbm", "theta_sic", "delta_si", "zeta"):
        return replace(cfg, **{variable: value})
    raise ConfigError(f"unknown sweep variable {variable!r}")


def _row(spec, value, user, metric, mode, estimate, stderr=0.0, trials=0, seed=""):
    return {
        "sweep_var": spec.variable, "value": repr(float(value)), "user": user, "metric": metric,
        "mode": mode, "estimate": repr(float(estimate)), "stderr": repr(float(stderr)),
        "trials": str(trials), "seed": str(seed),
    }


def _breakdown_rows(spec, value, mode, scn, breakdown, mc=None):
    rows = []
    trials, seed = (mc.trials, mc.seed) if mc else (0, "")
    get = (lambda e: (e.mean, e.stderr)) if mc else (lambda e: (e, 0.0))
    if "op" in spec.outputs:
        for user, e in breakdown.users().items():
            rows.append(_row(spec, value, user, "op", mode, *get(e), trials, seed))
    if "throughput" in spec.outputs:
        if mc:
            tp = montecarlo.estimate_throughput(scn, mc, breakdown)
            items = [(u, e.mean, e.stderr) for u, e in tp.items()]
        else:
            tp = analytic.user_throughputs(scn, breakdown)
            items = [(u, v, 0.0) for u, v in tp.items()] + [("sum", sum(tp.values()), 0.0)]
        for user, est, se in items:
            rows.append(_row(spec, value, user, "throughput", mode, est, se, trials, seed))
    return rows


def sweep_rows(cfg: SystemConfig, spec: SweepSpec, mc: montecarlo.McSettings) -> List[dict]:
    """All CSV rows of a sweep, in grid order then mode order."""
    rows = []
    for value in spec.grid:
        scn = prepare(apply_variable(cfg, spec.variable, value))
        for mode in spec.modes:
            if mode == "analytic":
                rows += _breakdown_rows(spec, value, mode, scn, analytic.analytic_breakdown(scn))
            elif mode == "oracle":
                rows += _breakdown_rows(spec, value, mode, scn, analytic.oracle_breakdown(scn))
            elif mode in ("mc_marginal", "mc_joint"):
                settings = replace(mc, estimator="marginal" if mode == "mc_marginal" else "joint_chain")
                rows += _breakdown_rows(spec, value, mode, scn,
                                        montecarlo.estimate_outages(scn, settings), settings)
            elif mode == "noma":
                outages = montecarlo.simulate_noma_baseline(scn, mc)
                if "op" in spec.outputs:
                    rows += [_row(spec, value, u, "op", mode, e.mean, e.stderr, mc.trials, mc.seed)
                             for u, e in outages.items()]
                if "throughput" in spec.outputs:
                    rows += [_row(spec, value, u, "throughput", mode, e.mean, e.stderr, mc.trials, mc.seed)
                             for u, e in montecarlo.noma_throughput(scn, mc, outages).items()]
            elif mode == "hd":
                e = montecarlo.simulate_hd_baseline(scn, mc)
                rows.append(_row(spec, value, "sum", "throughput", mode, e.mean, e.stderr, mc.trials, mc.seed))
    return rows


def write_rows(rows: Iterable[dict], out_path: str) -> None:
    with open(out_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=CSV_COLUMNS, lineterminator="\n")
        writer.writeheader()
        writer.writerows(rows)


def run_sweep(scenario: Union[str, SystemConfig], spec: SweepSpec,
              mc: montecarlo.McSettings, out_path: str) -> List[dict]:
    """Evaluate ``spec`` on a scenario (file path or config) and write the CSV."""
    cfg = load_scenario(scenario) if isinstance(scenario, str) else scenario
    prepare(cfg)
    rows = sweep_rows(cfg, spec, mc)
    write_rows(rows, out_path)
    return rows


# ---------------------------------------------------------------------------
# comparison

@dataclass
class CompareResult:
    passed: bool
    rows: int
    failures: List[dict] = field(default_factory=list)
    worst_gap: float = 0.0
    worst_key: Optional[tuple] = None
    worst_ratio: float = 0.0


def read_rows(csv_path: str) -> List[dict]:
    with open(csv_path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or tuple(reader.fieldnames) != CSV_COLUMNS:
            raise SchemaError(f"{csv_path}: header {reader.fieldnames} does not match {list(CSV_COLUMNS)}")
        rows = list(reader)
    for i, r in enumerate(rows, 2):
        try:
            float(r["value"]), float(r["estimate"]), float(r["stderr"]), int(r["trials"])
        except (TypeError, ValueError):
            raise SchemaError(f"{csv_path}:{i}: malformed numeric field")
    return rows


def compare_report(csv_path: str, abs_floor: float = DEFAULT_FLOOR, reference: str = "analytic",
                   against: str = "mc_marginal", sigmas: float = 3.0,
                   out=None) -> CompareResult:
    """Check ``|reference - against| <= max(sigmas * stderr, abs_floor)`` on every matching row."""
    out = out or sys.stdout
    rows = read_rows(csv_path)
    key = lambda r: (r["sweep_var"], r["value"], r["user"], r["metric"])
    ref = {key(r): r for r in rows if r["mode"] == reference}
    other = {key(r): r for r in rows if r["mode"] == against}
    common = [k for k in ref if k in other]
    if not common:
        raise SchemaError(f"{csv_path}: no rows pairing mode {reference!r} with {against!r}")
    res = CompareResult(passed=True, rows=len(common))
    for k in common:
        a, m = ref[k], other[k]
        gap = abs(float(a["estimate"]) - float(m["estimate"]))
        se = math.hypot(float(a["stderr"]), float(m["stderr"]))
        allowed = max(sigmas * se, abs_floor)
        if gap > res.worst_gap:
            res.worst_gap, res.worst_key = gap, k
        res.worst_ratio = max(res.worst_ratio, gap / allowed)
        if gap > allowed:
            res.passed = False
            res.failures.append({"key": k, "gap": gap, "allowed": allowed})
            print(f"FAIL {k[0]}={k[1]} {k[2]} {k[3]}: |{reference}-{against}| = {gap:.3g} > {allowed:.3g}",
                  file=out)
    print(f"{'PASS' if res.passed else 'FAIL'}: {res.rows} rows compared, "
          f"{len(res.failures)} failures, worst gap {res.worst_gap:.3g} at {res.worst_key}, "
          f"worst gap/allowed {res.worst_ratio:.3f}", file=out)
    return res


# ---------------------------------------------------------------------------
# figure recipes

POWER_GRID = tuple(float(p) for p in range(0, 31, 2))
ZETA_GRID = tuple(round(0.01 * i, 2) for i in range(101))


@dataclass(frozen=True)
class Recipe:
    """Named cases, each a set of scenario overrides plus the sweep to run on it."""

    name: str
    cases: Tuple[Tuple[str, Dict[str, object], SweepSpec], ...]


def figure_recipe(name: str) -> Recipe:
    inf = math.inf
    power = lambda outputs=("op",), modes=("analytic", "mc_marginal"): SweepSpec(
        "p_tx_dbm", POWER_GRID, outputs, modes)
    if name == "fig2":
        cases = [(f"beta-{b}", {"beta_d": b, "beta_u": b, "theta_sic": 0.0}, power())
                 for b in (0.8, inf)]
    elif name == "fig3":
        cases = [
            ("op-no-si-no-cci", {"delta_si": 0.0, "cci_enabled": False, "theta_sic": 0.0}, power()),
            ("throughput", {"theta_sic": 0.0}, power(("throughput",))),
        ]
    elif name == "fig4":
        cases = [
            (f"theta-{t}", {"theta_sic": t, "p_bs_dbm": 30.0, "p_u1_dbm": 30.0, "p_u2_dbm": 30.0},
             SweepSpec("zeta", ZETA_GRID, ("op",), ("analytic",)))
            for t in (0.0, 0.05, 0.1)
        ]
    elif name == "fig5":
        cases = [(f"theta-{t}", {"theta_sic": t, "beta_d": inf, "beta_u": inf}, power())
                 for t in (0.0, 0.05, 0.1, 0.2)]
    elif name == "fig6":
        cases = [(f"beta-{b}", {"beta_d": b, "beta_u": b, "theta_sic": 0.0},
                  power(modes=("analytic", "mc_marginal", "noma")))
                 for b in (0.6, 0.8)]
    elif name == "fig7":
        cases = [("perfect", {"beta_d": inf, "beta_u": inf, "theta_sic": 0.0},
                  power(("throughput",), ("analytic", "mc_marginal", "hd")))]
    else:
        raise ConfigError(f"unknown recipe {name!r}; expected one of fig2..fig7")
    return Recipe(name, tuple(cases))


def run_recipe(recipe: Recipe, base: SystemConfig, mc: montecarlo.McSettings, out_dir: str,
               modes: Optional[Sequence[str]] = None) -> List[str]:
    """Write one CSV per recipe case into ``out_dir``; returns the paths."""
    os.makedirs(out_dir, exist_ok=True)
    paths = []
    for label, overrides, spec in recipe.cases:
        if modes:
            spec = replace(spec, modes=tuple(modes))
        path = os.path.join(out_dir, f"{recipe.name}_{label}.csv")
        run_sweep(replace(base, **overrides), spec, mc, path)
        paths.append(path)
    return paths


# ---------------------------------------------------------------------------
# entry point

def _build_parser():
    p = argparse.ArgumentParser(prog="fdrsma", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    def mc_flags(sp):
        sp.add_argument("--scenario", help="scenario file (key = value); defaults to the reference scenario")
        sp.add_argument("--seed", type=int, default=montecarlo.McSettings.seed)
        sp.add_argument("--trials", type=int, default=montecarlo.McSettings.trials)
        sp.add_argument("--mode", action="append", choices=MODES, help="repeatable")

    sw = sub.add_parser("sweep", help="run one sweep and write CSV")
    mc_flags(sw)
    sw.add_argument("--var", required=True, choices=VARIABLES)
    sw.add_argument("--grid", required=True, help="start:stop:step (inclusive) or comma list")
    sw.add_argument("--output", action="append", choices=OUTPUTS, help="repeatable; default op")
    sw.add_argument("--out", required=True)

    cp = sub.add_parser("compare", help="check analytic vs Monte Carlo rows of a sweep CSV")
    cp.add_argument("csv")
    cp.add_argument("--floor", type=float, default=DEFAULT_FLOOR)
    cp.add_argument("--reference", default="analytic", choices=MODES)
    cp.add_argument("--against", default="mc_marginal", choices=MODES)

    rc = sub.add_parser("recipe", help="reproduce the data behind one figure")
    rc.add_argument("name")
    mc_flags(rc)
    rc.add_argument("--out", help="output directory")
    rc.add_argument("--show", action="store_true", help="print the recipe instead of running it")
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "compare":
            return EXIT_OK if compare_report(args.csv, args.floor, args.reference, args.against).passed \
                else EXIT_FAIL
        base = load_scenario(args.scenario) if args.scenario else reference_config()
        prepare(base)
        try:
            mc = montecarlo.McSettings(trials=args.trials, seed=args.seed)
        except ValueError as exc:
            raise ConfigError(str(exc))
        if args.command == "sweep":
            spec = SweepSpec(args.var, parse_grid(args.grid), tuple(args.output or ("op",)),
                             tuple(args.mode or ("analytic",)))
            run_sweep(base, spec, mc, args.out)
            print(f"wrote {args.out}")
        else:
            recipe = figure_recipe(args.name)
            if args.show or not args.out:
                for label, overrides, spec in recipe.cases:
                    print(f"{recipe.name}_{label}: overrides={overrides} spec={spec}")
                if not args.show:
                    raise ConfigError("recipe: --out is required unless --show is given")
                return EXIT_OK
            for path in run_recipe(recipe, base, mc, args.out, args.mode):
                print(f"wrote {path}")
        return EXIT_OK
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SchemaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SCHEMA
    except analytic.OracleConvergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ORACLE
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
