"""Command-line front end.

Usage::

    stronginv simulate    --scenario intro --start 0.5 --out arc.csv
    stronginv certify     --scenario counterexample31 --region neighborhood
    stronginv equivalence --scenario contraction
    stronginv escape      --scenario expansion --start 0.5 --horizon 3

Configuration may come from a TOML file (``--config``); command-line flags
override file values. Recognised TOML keys::

    command = "simulate"            # simulate | certify | equivalence | escape
    scenario = "intro"
    start = [0.5]
    horizon = 1.0
    k_list = [10, 20, 40]
    eps_list = [0.1, 0.05, 0.025]
    tol = 1e-3
    out = "arc.csv"
    plot_data = "plot.csv"
    jobs = 1
    condition = "hamiltonian"       # hamiltonian | normal-cone | remark
    region = "neighborhood"         # neighborhood | boundary | grid
    step = 1e-3                     # Euler step for escape/equivalence runs
    [params]                        # scenario constructor overrides
    horizon = 1.0

Exit status: 0 pass or converged, 1 fail verdict, 2 configuration error,
3 search budget exhausted. Errors are reported as one JSON object on stderr.
"""

import argparse
import json
import sys

import numpy as np

from . import errors
from .euler import EulerConfig, default_schedule, integrate_feedback, refine_trajectory
from .export import (config_hash, dumps, emit_plot_data, tool_version, trajectory_to_csv)
from .invariance import (BoundaryRegion, GridRegion, PointsRegion, SublevelRegion, certify_hamiltonian,
                         certify_normal_cone, certify_remark_variant, classify_escape,
                         equivalence_suite)
from .nonsmooth import complement_of_open_box, smooth_function
from .scenarios import REGISTRY, get_scenario
from .sets import as_vector

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

EXIT_PASS, EXIT_FAIL, EXIT_CONFIG, EXIT_BUDGET = 0, 1, 2, 3
COMMANDS = ("simulate", "certify", "equivalence", "escape")
CONDITIONS = ("hamiltonian", "normal-cone", "remark")
REGIONS = ("neighborhood", "boundary", "grid")

DEFAULTS = {
    "tol": None,
    "jobs": 1,
    "step": 1e-3,
    "params": {},
}


class ConfigError(errors.StrongInvError, ValueError):
    """Invalid or inconsistent run configuration."""


def _float_list(text):
    return [float(v) for v in text.split(",") if v.strip()]


def _int_list(text):
    return [int(v) for v in text.split(",") if v.strip()]


def build_parser():
    p = argparse.ArgumentParser(prog="stronginv", description=__doc__.split("\n")[0])
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        s = sub.add_parser(name)
        s.add_argument("--scenario")
        s.add_argument("--config", help="TOML run configuration")
        s.add_argument("--start", type=_float_list, help="comma-separated start point")
        s.add_argument("--horizon", type=float)
        s.add_argument("--k-list", dest="k_list", type=_int_list)
        s.add_argument("--eps-list", dest="eps_list", type=_float_list)
        s.add_argument("--tol", type=float)
        s.add_argument("--out", help="output path (default: stdout)")
        s.add_argument("--plot-data", dest="plot_data", help="long-format CSV for plotting")
        s.add_argument("--jobs", type=int)
        s.add_argument("--condition", choices=CONDITIONS)
        s.add_argument("--region", choices=REGIONS)
        s.add_argument("--step", type=float)
    return p


def resolve_config(args):
    """Merge defaults, TOML file and flags into one validated dict."""
    cfg = dict(DEFAULTS)
    if args.config:
        try:
            with open(args.config, "rb") as fh:
                data = tomllib.load(fh)
        except (OSError, tomllib.TOMLDecodeError) as exc:
            raise ConfigError("cannot read config %s: %s" % (args.config, exc)) from None
        if data.get("command", args.command) != args.command:
            raise ConfigError("config is for command %r, not %r" % (data["command"], args.command))
        cfg.update(data)
    for key, val in vars(args).items():
        if key != "config" and val is not None:
            cfg[key] = val
    cfg["command"] = args.command
    validate_config(cfg)
    return cfg


def validate_config(cfg):
    name = cfg.get("scenario")
    if not name:
        raise ConfigError("no scenario given")
    if name not in REGISTRY:
        raise ConfigError("unknown scenario %r; choose from %s" % (name, ", ".join(sorted(REGISTRY))))
    for key in ("tol", "step", "horizon"):
        if cfg.get(key) is not None and not float(cfg[key]) > 0:
            raise ConfigError("%s must be positive" % key)
    if int(cfg.get("jobs", 1)) < 1:
        raise ConfigError("jobs must be >= 1")
    if not isinstance(cfg.get("params", {}), dict):
        raise ConfigError("params must be a table")
    ks, es = cfg.get("k_list"), cfg.get("eps_list")
    if (ks is None) != (es is None):
        raise ConfigError("k_list and eps_list must be given together")
    if ks is not None:
        if len(ks) != len(es) or len(ks) == 0:
            raise ConfigError("k_list and eps_list must be nonempty and of equal length")
        if any(not e > 0 for e in es) or any(k < 1 for k in ks):
            raise ConfigError("schedule needs k >= 1 and eps > 0")
    if cfg.get("condition") not in (None,) + CONDITIONS:
        raise ConfigError("unknown condition %r" % cfg["condition"])
    if cfg.get("region") not in (None,) + REGIONS:
        raise ConfigError("unknown region %r" % cfg["region"])


def _scenario(cfg):
    params = dict(cfg.get("params", {}))
    if cfg.get("horizon") is not None:
        params.setdefault("horizon", float(cfg["horizon"]))
    try:
        return get_scenario(cfg["scenario"], **params)
    except TypeError as exc:
        raise ConfigError("bad scenario parameters: %s" % exc) from None


def _start(cfg, sc):
    x0 = cfg.get("start")
    if x0 is None:
        x0 = sc.starts[0]
    return as_vector(x0, sc.F.dim)


# output locations and parallelism do not change results, so they stay out of the hash
_UNHASHED = ("out", "plot_data", "jobs", "config")


def _header(cfg, **extra):
    hashed = {k: v for k, v in cfg.items() if k not in _UNHASHED}
    h = {"tool": "stronginv", "version": tool_version(), "config_hash": config_hash(hashed)}
    h.update(extra)
    return h


def _emit(text, cfg):
    if cfg.get("out"):
        with open(cfg["out"], "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _psi_or_zero(sc):
    if sc.psi is not None:
        return sc.psi
    return smooth_function(lambda x: 0.0, lambda x: np.zeros(sc.F.dim), dim=sc.F.dim, name="zero")


def cmd_simulate(cfg):
    sc = _scenario(cfg)
    x0 = _start(cfg, sc)
    f = sc.realizations(x0)[0]
    ecfg = EulerConfig.from_feedback(f)
    if cfg.get("k_list") is not None:
        schedule = list(zip(cfg["k_list"], cfg["eps_list"]))
    else:
        schedule = default_schedule()
    tol = cfg["tol"] if cfg.get("tol") is not None else 1e-3
    status = EXIT_PASS
    try:
        arc = refine_trajectory(f, _psi_or_zero(sc), x0, ecfg, schedule, tol)
    except errors.NoConvergence as exc:
        arc, status = exc.arc, EXIT_BUDGET
        _diagnose(exc, status)
    header = _header(cfg, schedule=[list(s) for s in schedule], gaps=arc.meta.get("gaps", []),
                     t_tilde=ecfg.t_tilde, converged=status == EXIT_PASS)
    _emit(trajectory_to_csv(arc, header), cfg)
    if cfg.get("plot_data"):
        emit_plot_data(arc, cfg["plot_data"])
    return status


def _region(cfg, sc, condition):
    kind = cfg.get("region") or ("boundary" if condition == "normal-cone" else "neighborhood")
    if kind == "grid":
        return sc.region
    lower, upper = sc.region.lower, sc.region.upper
    if kind == "neighborhood":
        if sc.psi is None:
            raise ConfigError("scenario %r has no verification function" % sc.name)
        return SublevelRegion(sc.psi, lower, upper, num=41)
    if sc.S is None:
        raise ConfigError("scenario %r has no constraint set" % sc.name)
    if condition == "normal-cone":
        return BoundaryRegion(sc.S)
    return PointsRegion(sc.S.boundary_sample(32))


def cmd_certify(cfg):
    sc = _scenario(cfg)
    condition = cfg.get("condition") or ("hamiltonian" if sc.psi is not None else "normal-cone")
    tol = cfg["tol"] if cfg.get("tol") is not None else 1e-9
    jobs = int(cfg.get("jobs", 1))
    region = _region(cfg, sc, condition)
    if condition == "hamiltonian":
        if sc.psi is None:
            raise ConfigError("scenario %r has no verification function" % sc.name)
        cert = certify_hamiltonian(sc.F, sc.psi, region, tol=tol, jobs=jobs)
    elif condition == "normal-cone":
        if sc.S is None:
            raise ConfigError("scenario %r has no constraint set" % sc.name)
        boundary = region if isinstance(region, BoundaryRegion) else None
        cert = certify_normal_cone(sc.F, sc.S, boundary, tol=tol, jobs=jobs)
    else:
        if sc.psi is None:
            raise ConfigError("scenario %r has no verification function" % sc.name)
        x0 = _start(cfg, sc)
        cert = certify_remark_variant(sc.realizations(x0), sc.psi, region, tol=tol)
    data = dict(cert.to_dict(), header=_header(cfg))
    _emit(dumps(data), cfg)
    if cfg.get("plot_data"):
        emit_plot_data(cert, cfg["plot_data"])
    return EXIT_FAIL if cert.verdict == "fail" else EXIT_PASS


def cmd_equivalence(cfg):
    sc = _scenario(cfg)
    if sc.S is None:
        raise ConfigError("scenario %r has no constraint set" % sc.name)
    starts = [cfg["start"]] if cfg.get("start") is not None else list(sc.starts)
    tol = cfg["tol"] if cfg.get("tol") is not None else 1e-9
    rep = equivalence_suite(sc.F, sc.S, sc.provider(), starts, sc.horizon, tol=tol,
                            step=float(cfg.get("step", 1e-3)), usharp=sc.usharp,
                            jobs=int(cfg.get("jobs", 1)))
    _emit(dumps(dict(rep.to_dict(), header=_header(cfg))), cfg)
    return EXIT_FAIL if rep.label == "unexpected-divergence" else EXIT_PASS


def cmd_escape(cfg):
    sc = _scenario(cfg)
    x0 = _start(cfg, sc)
    f = sc.realizations(x0)[0]
    step = float(cfg.get("step", 1e-3))
    arc = integrate_feedback(f, x0, sc.horizon, step)
    comp = complement_of_open_box(sc.region.lower, sc.region.upper)
    tol = cfg["tol"] if cfg.get("tol") is not None else 1e-9
    rep = classify_escape(arc, comp, sc.horizon, tol=tol)
    _emit(dumps(dict(rep.to_dict(), header=_header(cfg))), cfg)
    if cfg.get("plot_data"):
        emit_plot_data(arc, cfg["plot_data"])
    return EXIT_PASS


HANDLERS = {"simulate": cmd_simulate, "certify": cmd_certify, "equivalence": cmd_equivalence,
            "escape": cmd_escape}


def exit_status_for(exc):
    """Map an exception to the documented exit status."""
    if isinstance(exc, errors.SearchExhausted):
        return EXIT_BUDGET
    if isinstance(exc, errors.BoundViolated):
        return EXIT_FAIL
    if isinstance(exc, (errors.StrongInvError, ValueError, KeyError, LookupError, OSError)):
        return EXIT_CONFIG
    return None


def _diagnose(exc, status):
    diag = {"error": type(exc).__name__, "message": str(exc), "exit_status": status}
    for attr in ("gap", "residual", "time", "node", "point"):
        val = getattr(exc, attr, None)
        if val is not None:
            diag[attr] = np.asarray(val).tolist()
    sys.stderr.write(json.dumps(diag, sort_keys=True) + "\n")


def run(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        if exc.code in (0, None):
            return EXIT_PASS
        _diagnose(ConfigError("invalid command line"), EXIT_CONFIG)
        return EXIT_CONFIG
    try:
        cfg = resolve_config(args)
        return HANDLERS[cfg["command"]](cfg)
    except Exception as exc:
        status = exit_status_for(exc)
        if status is None:
            raise
        _diagnose(exc, status)
        return status


def main(argv=None):
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
