"""Command-line front end: single points, sweeps, figure presets, oracle checks.

dB values are converted to linear here and nowhere else
(``x_linear = 10 ** (x_db / 10)``); everything below this module is linear.

Exit codes: 0 ok, 2 configuration error, 3 numeric / convergence error.
"""

import argparse
import configparser
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
import logging
import math
import os
import sys
import time

import numpy as np

from .closed_form import InternalConsistencyError, esr_strong, esr_weak, essr_asymptotic
from .model import ModelError, SystemConfig
from .oracles import ConvergenceError, RateMode, mc_esr, quad_esr_strong, quad_esr_weak, quad_oma_esr
from .power_alloc import AllocationError, match_strong_user

log = logging.getLogger("nomasec")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3

DEFAULT_SCENARIO = {
    "d_pr": (200.0, 205.0, 210.0, 215.0),
    "d_near": 30.0,
    "d_far": 100.0,
    "d_eve": 150.0,
    "alpha": 2.0,
    "sigma_eps2": 2e-5,
    "pmax_db": 50.0,
    "ip_db": 10.0,
    "a_s": 0.2,
}
PRESETS = {"paper-defaults": DEFAULT_SCENARIO}

# preset grids; these are choices, not published values
IP_GRID_DB = tuple(float(v) for v in range(-10, 21))
FIG3_PMAX_DB = (40.0, 50.0, 60.0)
FIG4_PAIRS_DB = ((0.0, 50.0), (0.0, 60.0), (10.0, 50.0), (10.0, 60.0))
# every link at the default distances needs d**-alpha > sigma_eps2 (215 m -> 2.16e-5)
FIG4_SIGMA_GRID = (1e-6, 2e-6, 5e-6, 1e-5, 1.5e-5, 2e-5)
FIG5_CASES = (
    ("I", (200.0, 200.0)),
    ("II", (200.0, 205.0, 210.0, 215.0)),
    ("III", (200.0,) * 10),
)
FIG5_PMAX_DB = (40.0, 60.0)

SWEEP_AXES = ("i_peak_db", "p_max_db", "sigma_eps2", "m_prs")


class ConfigError(ValueError):
    pass


def db_to_linear(x_db):
    return 10.0 ** (x_db / 10.0)


def linear_to_db(x):
    return 10.0 * math.log10(x)


# ------------------------------------------------------------------- config


@dataclass(frozen=True)
class Scenario:
    """Scenario with powers kept in dB, as read from files and flags."""

    d_pr: tuple
    d_near: float
    d_far: float
    d_eve: float
    alpha: float
    sigma_eps2: float
    pmax_db: float
    ip_db: float
    a_s: float
    allocate: bool = False

    def system(self, a_s=None) -> SystemConfig:
        return SystemConfig(
            d_pr=self.d_pr,
            d_near=self.d_near,
            d_far=self.d_far,
            d_eve=self.d_eve,
            alpha=self.alpha,
            sigma_eps2=self.sigma_eps2,
            p_max=db_to_linear(self.pmax_db),
            i_peak=db_to_linear(self.ip_db),
            a_s=self.a_s if a_s is None else a_s,
        )

    def as_items(self):
        return [
            ("d_pr", ", ".join(f"{d:g}" for d in self.d_pr)),
            ("d_near", f"{self.d_near:g}"),
            ("d_far", f"{self.d_far:g}"),
            ("d_eve", f"{self.d_eve:g}"),
            ("alpha", f"{self.alpha:g}"),
            ("sigma_eps2", f"{self.sigma_eps2:g}"),
            ("pmax_db", f"{self.pmax_db:g}"),
            ("ip_db", f"{self.ip_db:g}"),
            ("a_s", f"{self.a_s:g}"),
            ("allocate", str(self.allocate).lower()),
        ]


@dataclass(frozen=True)
class SweepSpec:
    axis: str
    values: tuple
    overrides: tuple = field(default=())

    def __post_init__(self):
        if self.axis not in SWEEP_AXES:
            raise ConfigError(f"sweep axis must be one of {SWEEP_AXES}, got {self.axis!r}")
        if not self.values:
            raise ConfigError("sweep values must be nonempty")
        if any(b <= a for a, b in zip(self.values[:-1], self.values[1:])):
            raise ConfigError("sweep values must be strictly increasing")


@dataclass(frozen=True)
class OracleOptions:
    mc_samples: int = 1_000_000
    seed: int = 0
    quad_tol: float = 1e-8
    oma_estimation_noise: bool = True


def _line_of(path, section, key):
    try:
        with open(path, encoding="utf-8") as fh:
            current = None
            for no, line in enumerate(fh, start=1):
                s = line.strip()
                if s.startswith("[") and s.endswith("]"):
                    current = s[1:-1].strip()
                elif current == section and s.split("=", 1)[0].strip() == key:
                    return no
    except OSError:
        pass
    return None


def _parse_float_list(text):
    return tuple(float(v) for v in text.replace(";", ",").split(",") if v.strip())


def parse_values(text):
    """``a:b:step`` (inclusive) or a comma-separated list."""
    text = text.strip()
    if ":" in text:
        start, stop, step = (float(v) for v in text.split(":"))
        n = int(round((stop - start) / step)) + 1
        return tuple(float(np.round(start + k * step, 12)) for k in range(n))
    return _parse_float_list(text)


_SCENARIO_KEYS = {
    "d_pr": _parse_float_list,
    "d_near": float,
    "d_far": float,
    "d_eve": float,
    "alpha": float,
    "sigma_eps2": float,
    "pmax_db": float,
    "ip_db": float,
    "a_s": float,
    "allocate": lambda v: v.strip().lower() in ("1", "true", "yes", "on"),
}


def read_config_file(path):
    """Flat ``key = value`` file with [scenario], [sweep] and [oracle] sections."""
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        with open(path, encoding="utf-8") as fh:
            parser.read_file(fh)
    except (OSError, configparser.Error) as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    out = {"scenario": {}, "sweep": {}, "oracle": {}}
    for section in parser.sections():
        if section not in out:
            raise ConfigError(f"{path}: unknown section [{section}]")
        for key, raw in parser.items(section):
            where = f"{path}:{_line_of(path, section, key) or '?'}"
            try:
                if section == "scenario":
                    if key not in _SCENARIO_KEYS:
                        raise ConfigError(f"unknown key {key!r}")
                    out[section][key] = _SCENARIO_KEYS[key](raw)
                elif section == "sweep":
                    if key == "axis":
                        out[section][key] = raw.strip()
                    elif key == "values":
                        out[section][key] = parse_values(raw)
                    else:
                        raise ConfigError(f"unknown key {key!r}")
                else:
                    conv = {"mc_samples": int, "seed": int, "quad_tol": float,
                            "oma_estimation_noise": _SCENARIO_KEYS["allocate"]}
                    if key not in conv:
                        raise ConfigError(f"unknown key {key!r}")
                    out[section][key] = conv[key](raw)
            except ValueError as exc:
                raise ConfigError(f"{where}: [{section}] {key}: {exc}") from exc
    return out


def resolve(args):
    """Merge preset, config file and flags (flags win) into a Scenario."""
    values = dict(PRESETS[args.preset]) if args.preset else {}
    file_cfg = {"scenario": {}, "sweep": {}, "oracle": {}}
    if args.config:
        file_cfg = read_config_file(args.config)
        values.update(file_cfg["scenario"])
    flag_map = {"ip_db": args.ip_db, "pmax_db": args.pmax_db, "sigma_eps2": args.sigma_eps2,
                "alpha": args.alpha, "a_s": args.a_s}
    values.update({k: v for k, v in flag_map.items() if v is not None})
    if args.allocate:
        values["allocate"] = True
    elif args.a_s is not None:
        values["allocate"] = False
    missing = [k for k in _SCENARIO_KEYS if k not in values and k not in ("allocate", "a_s")]
    if missing:
        raise ConfigError(f"missing scenario fields: {', '.join(missing)} "
                          "(use --preset paper-defaults or --config)")
    values.setdefault("a_s", 0.2)
    scenario = Scenario(**values)
    try:
        scenario.system()
    except ModelError as exc:
        raise ConfigError(f"invalid scenario ({exc.field_name}): {exc}") from exc

    oracle = dict(file_cfg["oracle"])
    for key, flag in (("mc_samples", args.mc_samples), ("seed", args.seed),
                      ("quad_tol", args.quad_tol),
                      ("oma_estimation_noise", args.oma_estimation_noise)):
        if flag is not None:
            oracle[key] = flag
    return scenario, OracleOptions(**oracle), file_cfg["sweep"]


# --------------------------------------------------------------- evaluation


def evaluate_point(scenario: Scenario, oracle: OracleOptions, check=False):
    """All per-point outputs as an ordered dict of column -> value."""
    cfg = scenario.system()
    row = {}
    status = ""
    oma_s = None
    if scenario.allocate:
        res = match_strong_user(cfg, rel_tol=oracle.quad_tol,
                                oma_estimation_noise=oracle.oma_estimation_noise)
        cfg = replace(cfg, a_s=res.a_s)
        status = res.bracket_status.value
        oma_s = res.target  # the OMA strong rate does not depend on a_s
    s = esr_strong(cfg).total
    w = esr_weak(cfg).total
    if oma_s is None:
        oma_s = quad_oma_esr(cfg, "strong", rel_tol=oracle.quad_tol,
                             oma_estimation_noise=oracle.oma_estimation_noise)
    oma_w = quad_oma_esr(cfg, "weak", rel_tol=oracle.quad_tol,
                         oma_estimation_noise=oracle.oma_estimation_noise)
    row.update(
        a_s=cfg.a_s,
        bracket_status=status,
        esr_strong=s,
        esr_weak=w,
        essr=s + w,
        essr_asymptotic=essr_asymptotic(cfg),
        oma_strong=oma_s,
        oma_weak=oma_w,
        essr_oma=oma_s + oma_w,
    )
    if check:
        for user, quad in (("strong", quad_esr_strong), ("weak", quad_esr_weak)):
            mc = mc_esr(cfg, RateMode(f"noma_{user}"), n=oracle.mc_samples, seed=oracle.seed)
            row[f"quad_{user}"] = quad(cfg, rel_tol=oracle.quad_tol)
            row[f"mc_{user}"] = mc.mean
            row[f"mc_{user}_stderr"] = mc.stderr
    return row


def _point_job(job):
    prefix, scenario, oracle, check = job
    t0 = time.perf_counter()
    row = evaluate_point(scenario, oracle, check)
    log.info("point %s done in %.2fs", prefix, time.perf_counter() - t0)
    return {**prefix, **row}


def run_points(jobs, parallel=1):
    """Evaluate jobs, preserving input order regardless of completion order."""
    if parallel and parallel > 1:
        with ProcessPoolExecutor(max_workers=parallel) as pool:
            return list(pool.map(_point_job, jobs))
    return [_point_job(j) for j in jobs]


# ------------------------------------------------------------------ output


def _fmt(v):
    if isinstance(v, str):
        return v
    if isinstance(v, (int, np.integer)) and not isinstance(v, bool):
        return str(v)
    return f"{float(v):.6g}"


def render_csv(rows, meta):
    lines = [f"# config: {k} = {v}" for k, v in meta]
    header = list(rows[0].keys())
    lines.append(",".join(header))
    for r in rows:
        lines.append(",".join(_fmt(r[h]) for h in header))
    return "\n".join(lines) + "\n"


def emit(text, out_path):
    if not out_path:
        sys.stdout.write(text)
        return
    tmp = f"{out_path}.partial"
    with open(tmp, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
    os.replace(tmp, out_path)


def _meta(scenario, oracle, extra=()):
    return list(extra) + scenario.as_items() + [
        ("mc_samples", oracle.mc_samples),
        ("seed", oracle.seed),
        ("quad_tol", f"{oracle.quad_tol:g}"),
        ("oma_estimation_noise", str(oracle.oma_estimation_noise).lower()),
    ]


# ------------------------------------------------------------- subcommands


def _scenario_for(base: Scenario, axis, value, overrides=None):
    if axis == "i_peak_db":
        sc = replace(base, ip_db=value)
    elif axis == "p_max_db":
        sc = replace(base, pmax_db=value)
    elif axis == "sigma_eps2":
        sc = replace(base, sigma_eps2=value)
    elif axis == "m_prs":
        sc = replace(base, d_pr=(base.d_pr[0],) * int(value))
    else:
        raise ConfigError(f"unknown axis {axis!r}")
    if overrides:
        sc = replace(sc, **overrides)
    return sc


def cmd_eval(args, scenario, oracle, sweep_cfg):
    row = _point_job(({"ip_db": scenario.ip_db, "pmax_db": scenario.pmax_db},
                      scenario, oracle, args.check))
    emit(render_csv([row], _meta(scenario, oracle, [("command", "eval")])), args.out)


def cmd_sweep(args, scenario, oracle, sweep_cfg):
    axis = args.axis or sweep_cfg.get("axis")
    values = parse_values(args.values) if args.values else sweep_cfg.get("values")
    if not axis or not values:
        raise ConfigError("sweep needs an axis and values (--axis/--values or [sweep])")
    spec = SweepSpec(axis, tuple(values))
    jobs = []
    for v in spec.values:
        sc = _scenario_for(scenario, spec.axis, v)
        try:
            sc.system()
        except ModelError as exc:
            raise ConfigError(f"sweep point {spec.axis}={v:g}: {exc}") from exc
        jobs.append(({spec.axis: int(v) if axis == "m_prs" else v}, sc, oracle, args.check))
    rows = run_points(jobs, args.parallel)
    meta = _meta(scenario, oracle, [("command", "sweep"), ("axis", spec.axis)])
    emit(render_csv(rows, meta), args.out)


def figure_jobs(n, base: Scenario, oracle, check=False):
    """(meta, jobs) reproducing one figure's curve families."""
    base = replace(base, allocate=True)
    jobs = []
    if n == 2:
        sc = replace(base, pmax_db=50.0)
        jobs = [({"pmax_db": 50.0, "ip_db": ip}, replace(sc, ip_db=ip), oracle, check)
                for ip in IP_GRID_DB]
    elif n == 3:
        jobs = [({"pmax_db": pm, "ip_db": ip}, replace(base, pmax_db=pm, ip_db=ip), oracle, check)
                for pm in FIG3_PMAX_DB for ip in IP_GRID_DB]
    elif n == 4:
        jobs = [({"ip_db": ip, "pmax_db": pm, "sigma_eps2": s2},
                 replace(base, ip_db=ip, pmax_db=pm, sigma_eps2=s2), oracle, check)
                for ip, pm in FIG4_PAIRS_DB for s2 in FIG4_SIGMA_GRID]
    elif n == 5:
        jobs = [({"case": case, "m_prs": len(d_pr), "pmax_db": pm, "ip_db": ip},
                 replace(base, d_pr=d_pr, pmax_db=pm, ip_db=ip), oracle, check)
                for case, d_pr in FIG5_CASES for pm in FIG5_PMAX_DB for ip in IP_GRID_DB]
    else:
        raise ConfigError(f"unknown figure {n}; choose 2, 3, 4 or 5")
    return _meta(base, oracle, [("command", "figure"), ("figure", n)]), jobs


def run_figure(n, base: Scenario, oracle, out_path=None, parallel=1, check=False):
    meta, jobs = figure_jobs(n, base, oracle, check)
    rows = run_points(jobs, parallel)
    text = render_csv(rows, meta)
    emit(text, out_path)
    return text


def cmd_figure(args, scenario, oracle, sweep_cfg):
    run_figure(args.number, scenario, oracle, args.out, args.parallel, args.check)


def cmd_allocate(args, scenario, oracle, sweep_cfg):
    res = match_strong_user(scenario.system(), rel_tol=oracle.quad_tol,
                            oma_estimation_noise=oracle.oma_estimation_noise)
    row = {
        "ip_db": scenario.ip_db,
        "pmax_db": scenario.pmax_db,
        "a_s": res.a_s,
        "a_w": res.a_w,
        "bracket_status": res.bracket_status.value,
        "iterations": res.iterations,
        "achieved_gap": res.achieved_gap,
        "oma_strong_target": res.target,
    }
    emit(render_csv([row], _meta(scenario, oracle, [("command", "allocate")])), args.out)


def check_rows(scenario: Scenario, oracle: OracleOptions):
    """Closed form vs quadrature vs Monte Carlo for every rate."""
    cfg = scenario.system()
    if scenario.allocate:
        cfg = replace(cfg, a_s=match_strong_user(
            cfg, rel_tol=oracle.quad_tol, oma_estimation_noise=oracle.oma_estimation_noise).a_s)
    tol = oracle.quad_tol
    noise = oracle.oma_estimation_noise
    items = [
        ("noma_strong", esr_strong(cfg).total, quad_esr_strong(cfg, rel_tol=tol)),
        ("noma_weak", esr_weak(cfg).total, quad_esr_weak(cfg, rel_tol=tol)),
        ("oma_strong", float("nan"), quad_oma_esr(cfg, "strong", tol, noise)),
        ("oma_weak", float("nan"), quad_oma_esr(cfg, "weak", tol, noise)),
    ]
    rows = []
    for name, closed, quad in items:
        mc = mc_esr(cfg, name, n=oracle.mc_samples, seed=oracle.seed, oma_estimation_noise=noise)
        ref = closed if math.isfinite(closed) else quad
        z = abs(ref - mc.mean) / mc.stderr if mc.stderr > 0 else (0.0 if ref == mc.mean else math.inf)
        rel = abs(closed - quad) / max(quad, 1e-6) if math.isfinite(closed) else 0.0
        ok = rel <= 1e-5 and z <= 4.0
        rows.append({"rate": name, "closed_form": closed, "quad": quad, "mc_mean": mc.mean,
                     "mc_stderr": mc.stderr, "rel_err_quad": rel, "mc_z": z,
                     "pass": "yes" if ok else "no"})
    return cfg, rows


def cmd_check(args, scenario, oracle, sweep_cfg):
    cfg, rows = check_rows(scenario, oracle)
    emit(render_csv(rows, _meta(replace(scenario, a_s=cfg.a_s), oracle, [("command", "check")])),
         args.out)
    if any(r["pass"] != "yes" for r in rows):
        raise ConvergenceError("oracle disagreement beyond tolerance")


# ------------------------------------------------------------------ parser


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH")
    common.add_argument("--preset", choices=sorted(PRESETS))
    common.add_argument("--ip-db", type=float, dest="ip_db")
    common.add_argument("--pmax-db", type=float, dest="pmax_db")
    common.add_argument("--sigma-eps2", type=float, dest="sigma_eps2")
    common.add_argument("--alpha", type=float)
    alloc = common.add_mutually_exclusive_group()
    alloc.add_argument("--as", type=float, dest="a_s", help="strong-user power fraction")
    alloc.add_argument("--allocate", action="store_true",
                       help="choose a_s by strong-user rate matching")
    common.add_argument("--mc-samples", type=int, dest="mc_samples")
    common.add_argument("--seed", type=int)
    common.add_argument("--quad-tol", type=float, dest="quad_tol")
    common.add_argument("--parallel", type=int, default=1, metavar="N")
    common.add_argument("--out", metavar="PATH")
    common.add_argument("--oma-estimation-noise", action=argparse.BooleanOptionalAction,
                        default=None, dest="oma_estimation_noise",
                        help="OMA gains include the estimation-error variance (default on)")
    common.add_argument("--check", action="store_true", help="add oracle columns")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="nomasec", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("eval", parents=[common], help="evaluate one scenario")
    p.set_defaults(func=cmd_eval)
    p = sub.add_parser("sweep", parents=[common], help="sweep one axis")
    p.add_argument("--axis", choices=SWEEP_AXES)
    p.add_argument("--values", help="a:b:step or comma list")
    p.set_defaults(func=cmd_sweep)
    p = sub.add_parser("figure", parents=[common], help="reproduce a figure as CSV")
    p.add_argument("number", type=int, choices=(2, 3, 4, 5))
    p.set_defaults(func=cmd_figure)
    p = sub.add_parser("allocate", parents=[common], help="strong-user rate matching")
    p.set_defaults(func=cmd_allocate)
    p = sub.add_parser("check", parents=[common], help="oracle agreement report")
    p.set_defaults(func=cmd_check)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    if args.command == "figure" and not (args.preset or args.config):
        args.preset = "paper-defaults"
    try:
        scenario, oracle, sweep_cfg = resolve(args)
        if oracle.mc_samples < 10_000:
            raise ConfigError("--mc-samples must be >= 10000")
        if not 1e-10 <= oracle.quad_tol <= 1e-4:
            raise ConfigError("--quad-tol must lie in [1e-10, 1e-4]")
        args.func(args, scenario, oracle, sweep_cfg)
    except (ConfigError, ModelError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ConvergenceError, AllocationError, InternalConsistencyError,
            FloatingPointError) as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        if args.out and os.path.exists(f"{args.out}.partial"):
            os.remove(f"{args.out}.partial")
        return EXIT_NUMERIC
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
