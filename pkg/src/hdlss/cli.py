"""Command-line front end.

Every subcommand resolves a flat configuration (built-in defaults, then an
optional ``--config`` JSON file, then flags), validates it in full, runs the
experiment and writes one CSV or JSON report. CSV reports start with ``#``
comment lines carrying the tool version, resolved configuration, seed and
classifier identifiers.
"""

from __future__ import annotations

import argparse
import io
import json
import os
import sys
import tempfile
from dataclasses import dataclass

from . import __version__
from .data import ParseError, SplitPlan, attach_labels, load_features_csv
from .datagen import ModelSpec, NoiseSpec, delta_critical
from .harness import (
    CONFOUND_RULES, calibrate_delta, confound_sweep, dataset_benchmark, estimate_errors, oracle_compare,
    ridge_oracle_select, spec_digest, sweep_c, variance_scaling_check,
)
from .rules import parse_rule

EXIT_OK, EXIT_USAGE, EXIT_RUNTIME, EXIT_IO = 0, 2, 3, 4

COMMANDS = ("simulate", "sweep-c", "calibrate", "confound", "variance-check",
            "oracle-compare", "bench-dataset", "ridge-search")


class UsageError(Exception):
    def __init__(self, problems):
        super().__init__("; ".join(problems))
        self.problems = list(problems)


def _floats(v):
    if isinstance(v, (int, float)):
        return [float(v)]
    if isinstance(v, str):
        return [float(t) for t in v.split(",") if t.strip()]
    return [float(t) for t in v]


def _ints(v):
    return [_int(t) for t in _floats(v)]


def _int(v):
    if isinstance(v, bool) or (isinstance(v, float) and not v.is_integer()):
        raise ValueError(f"{v!r} is not an integer")
    return int(v)


def _str(v):
    if not isinstance(v, str):
        raise ValueError(f"{v!r} is not a string")
    return v


def _bool(v):
    if isinstance(v, bool):
        return v
    if isinstance(v, str) and v.lower() in ("true", "false", "1", "0"):
        return v.lower() in ("true", "1")
    raise ValueError(f"{v!r} is not a boolean")


def _classifiers(v):
    items = v.split(";") if isinstance(v, str) else list(v)
    return [parse_rule(s).id for s in items if s.strip()]


def _cells(v):
    """``"500:8:0.2;2000:8:0.1"`` or a list of triples -> [(p, nu, q)]."""
    items = [s.split(":") for s in v.split(";") if s.strip()] if isinstance(v, str) else v
    out = []
    for it in items:
        if len(it) != 3:
            raise ValueError(f"cell {it!r} is not p:nu:q")
        out.append((_int(float(it[0])), _int(float(it[1])), float(it[2])))
    return out


@dataclass(frozen=True)
class Option:
    convert: object
    default: object
    help: str
    metavar: str = None


# one flat namespace shared by every subcommand
OPTIONS = {
    "p": Option(_int, 2000, "dimension"),
    "m": Option(_int, 10, "training vectors from X"),
    "n": Option(_int, None, "training vectors from Y (default: m)"),
    "q": Option(float, 0.1, "sparsity index in (0,1]"),
    "c": Option(float, None, "signal scale; delta = c (nu p q^2)^(-1/4)"),
    "delta": Option(float, None, "signal strength (overrides the c scaling)"),
    "noise": Option(_str, "iid", "noise kind: iid, ma or garch"),
    "ma_coeffs": Option(_floats, [1.0, 1.0], "MA coefficients, comma separated", "A,B,..."),
    "garch": Option(_floats, [0.1, 0.8], "GARCH(1,1) alpha,beta", "A,B"),
    "pattern_mode": Option(_str, "random_shared_support",
                           "fixed, random_4_1 or random_shared_support"),
    "reps": Option(_int, 4000, "Monte Carlo replicates"),
    "seed": Option(_int, 0, "master seed"),
    "workers": Option(_int, os.cpu_count() or 1, "worker processes"),
    "out": Option(_str, None, "report path (default: stdout)"),
    "format": Option(_str, "csv", "csv or json"),
    "classifiers": Option(_classifiers, ["centroid_sa"],
                          "classifier ids separated by ';', e.g. 'nn:k=1;centroid_sa'", "IDS"),
    "c_grid": Option(_floats, [0.5, 1.0, 1.5, 2.0], "sweep-c values of c", "C1,C2,..."),
    "cells": Option(_cells, [(500, 8, 0.2), (2000, 8, 0.1), (2000, 16, 0.2)],
                    "sweep-c cells p:nu:q separated by ';'", "CELLS"),
    "m_grid": Option(_ints, [4, 8, 16, 32], "calibrate: class sizes m = n", "M1,M2,..."),
    "target": Option(float, 0.8, "calibrate: target balanced accuracy"),
    "tol": Option(float, 0.01, "calibrate: accuracy bracket width"),
    "sigma_x_sq": Option(float, 1.0, "confound: variance of X"),
    "sigma_y_sq": Option(float, 2.0, "confound: variance of Y"),
    "mu_sq": Option(_floats, [0.1, 0.6, 1.5], "confound: mean shift mu^2 grid", "V1,V2,..."),
    "p_grid": Option(_ints, [500, 1000, 2000], "variance-check: dimensions", "P1,P2,..."),
    "nu_grid": Option(_ints, [4, 8], "variance-check: class sizes", "N1,N2,..."),
    "ridge_grid": Option(_floats, [0.0, 0.01, 0.1, 1.0], "ridge-search: naive Bayes ridges",
                         "R1,R2,..."),
    "features": Option(_str, None, "feature file, one vector per row", "PATH"),
    "labels": Option(_str, None, "label file, one row per feature row", "PATH"),
    "label_col": Option(_int, 0, "label column in the label file", "N"),
    "positive": Option(_str, "1", "label token marking population X", "TOKEN"),
    "delimiter": Option(_str, ",", "field delimiter; 'whitespace' splits on runs of blanks",
                        "CHAR"),
    "skip_header": Option(_bool, False, "skip the first line of each file"),
    "test_per_class": Option(_int, None, "held-out vectors per class (default: all remaining)"),
}

# keys that affect each command; anything else in a config file is rejected
_MODEL = ("p", "m", "n", "q", "c", "delta", "noise", "ma_coeffs", "garch", "pattern_mode")
_COMMON = ("reps", "seed", "workers", "out", "format")
_DATA = ("features", "labels", "label_col", "positive", "delimiter", "skip_header",
         "m", "n", "test_per_class")
KEYS = {
    "simulate": _MODEL + _COMMON + ("classifiers",),
    "sweep-c": ("q", "noise", "ma_coeffs", "garch", "pattern_mode", "c_grid", "cells",
                "classifiers") + _COMMON,
    "calibrate": ("p", "q", "noise", "ma_coeffs", "garch", "pattern_mode", "m_grid", "target",
                  "tol", "classifiers") + _COMMON,
    "confound": ("p", "m", "n", "sigma_x_sq", "sigma_y_sq", "mu_sq", "classifiers") + _COMMON,
    "variance-check": ("q", "c", "delta", "noise", "ma_coeffs", "garch", "pattern_mode",
                       "p_grid", "nu_grid", "classifiers") + _COMMON,
    "oracle-compare": ("p", "m", "n", "q", "c", "delta", "classifiers") + _COMMON,
    "bench-dataset": _DATA + ("classifiers",) + _COMMON,
    "ridge-search": _MODEL + _DATA[:6] + ("test_per_class", "ridge_grid") + _COMMON,
}

_NOISE = ("iid", "ma", "garch")
_DEFAULT_OVERRIDES = {("confound", "classifiers"): list(CONFOUND_RULES)}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hdlss", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"hdlss {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for cmd in COMMANDS:
        sp = sub.add_parser(cmd)
        sp.add_argument("--config", metavar="PATH", help="flat JSON file of option values")
        for key in KEYS[cmd]:
            opt = OPTIONS[key]
            flag = "--" + key.replace("_", "-")
            if opt.convert is _bool:
                sp.add_argument(flag, dest=key, action="store_const", const=True, default=None,
                                help=opt.help)
            else:
                sp.add_argument(flag, dest=key, default=None, metavar=opt.metavar, help=opt.help)
    return parser


def _read_config(path, command):
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except ValueError as exc:
        raise UsageError([f"config file {path}: not valid JSON ({exc})"])
    if not isinstance(raw, dict):
        raise UsageError([f"config file {path}: expected a JSON object"])
    raw = {k.replace("-", "_"): v for k, v in raw.items()}
    raw.pop("command", None)
    unknown = sorted(set(raw) - set(KEYS[command]))
    if unknown:
        raise UsageError([f"unknown config key {k!r} for {command}" for k in unknown])
    return raw


def parse_config(argv) -> dict:
    """Resolve defaults, config file and flags into a validated configuration."""
    args = build_parser().parse_args(argv)
    command = args.command
    raw = {}
    if args.config:
        raw.update(_read_config(args.config, command))
    for key in KEYS[command]:
        v = getattr(args, key)
        if v is not None:
            raw[key] = v
    cfg, problems = {"command": command}, []
    for key in KEYS[command]:
        opt = OPTIONS[key]
        if key not in raw or raw[key] is None:
            cfg[key] = _DEFAULT_OVERRIDES.get((command, key), opt.default)
            continue
        try:
            cfg[key] = opt.convert(raw[key])
        except (TypeError, ValueError) as exc:
            problems.append(f"--{key.replace('_', '-')}: {exc}")
            cfg[key] = None
    if not problems:
        problems = _validate(cfg)
    if problems:
        raise UsageError(problems)
    return cfg


def _validate(cfg) -> list[str]:
    cmd = cfg["command"]
    out = []

    def need(cond, msg):
        if not cond:
            out.append(msg)

    if "n" in cfg and cfg["n"] is None and "m" in cfg:
        cfg["n"] = cfg["m"]
    for k in ("p", "m", "n", "reps", "workers"):
        if k in cfg and cfg[k] is not None:
            need(cfg[k] >= 1, f"{k} must be >= 1")
    need(cfg["seed"] >= 0, "seed must be >= 0")
    need(cfg["format"] in ("csv", "json"), "format must be csv or json")
    if "q" in cfg:
        need(0 < cfg["q"] <= 1, "q must lie in (0,1]")
    if "noise" in cfg:
        need(cfg["noise"] in _NOISE, "noise must be one of iid, ma, garch")
        if cfg["noise"] == "ma":
            need(any(t != 0 for t in cfg["ma_coeffs"]), "MA coefficients must not all be zero")
        if cfg["noise"] == "garch":
            g = cfg["garch"]
            need(len(g) == 2 and min(g) >= 0 and sum(g) < 1,
                 "garch needs alpha,beta >= 0 with alpha + beta < 1")
    if cfg.get("pattern_mode") == "fixed":
        out.append("pattern_mode fixed is not available from the command line")
    if "c" in cfg:
        if cfg["c"] is not None:
            need(cfg["c"] > 0, "c must be positive")
        if cfg["delta"] is not None:
            need(cfg["delta"] >= 0, "delta must be >= 0")
        needs_signal = cmd in ("simulate", "oracle-compare", "variance-check")
        if needs_signal:
            need((cfg["c"] is None) != (cfg["delta"] is None), "give exactly one of --c or --delta")
    if cmd == "sweep-c":
        need(cfg["c_grid"] and all(c > 0 for c in cfg["c_grid"]), "c values must be positive")
        need(bool(cfg["cells"]), "cells must be nonempty")
        for p, nu, q in cfg["cells"]:
            need(p >= 1 and nu >= 2 and 0 < q <= 1, f"bad cell {p}:{nu}:{q}")
    if cmd == "calibrate":
        need(0.5 <= cfg["target"] < 1, "target must lie in [0.5,1)")
        need(cfg["tol"] > 0, "tol must be positive")
        need(cfg["m_grid"] and min(cfg["m_grid"]) >= 1, "m values must be >= 1")
        need(len(cfg["classifiers"]) == 1, "calibrate takes a single classifier")
    if cmd == "confound":
        need(cfg["sigma_x_sq"] > 0 and cfg["sigma_y_sq"] > 0, "variances must be positive")
        need(cfg["mu_sq"] and min(cfg["mu_sq"]) >= 0, "mu_sq values must be >= 0")
    if cmd == "variance-check":
        need(cfg["p_grid"] and min(cfg["p_grid"]) >= 1, "p values must be >= 1")
        need(cfg["nu_grid"] and min(cfg["nu_grid"]) >= 2, "nu values must be >= 2")
        need(len(cfg["classifiers"]) == 1, "variance-check takes a single classifier")
    if cmd == "oracle-compare":
        need(len(cfg["classifiers"]) == 1, "oracle-compare takes a single classifier")
    if cmd == "bench-dataset":
        need(cfg["features"] is not None, "bench-dataset needs --features")
        need(cfg["labels"] is not None, "bench-dataset needs --labels")
    if cmd == "ridge-search":
        need(cfg["ridge_grid"] and min(cfg["ridge_grid"]) >= 0, "ridges must be >= 0")
        if cfg["features"] is not None:
            need(cfg["labels"] is not None, "ridge-search on a dataset needs --labels")
        else:
            need((cfg["c"] is None) != (cfg["delta"] is None), "give exactly one of --c or --delta")
    if cfg.get("test_per_class") is not None:
        need(cfg["test_per_class"] >= 1, "test_per_class must be >= 1")
    if cfg.get("label_col") is not None:
        need(cfg["label_col"] >= 0, "label_col must be >= 0")
    synthetic = cmd in ("simulate", "oracle-compare") or (
        cmd == "ridge-search" and cfg["features"] is None)
    if synthetic and not out:
        try:
            spec = model_spec(cfg)
            out.extend(spec.violations())
        except ValueError as exc:
            out.append(str(exc))
    return out


def _noise(cfg) -> NoiseSpec:
    kind = cfg.get("noise", "iid")
    if kind == "ma":
        return NoiseSpec.moving_average(cfg["ma_coeffs"])
    if kind == "garch":
        return NoiseSpec.garch(*cfg["garch"])
    return NoiseSpec.iid()


def model_spec(cfg, **override) -> ModelSpec:
    c = dict(cfg, **override)
    p, m, n, q = c["p"], c["m"], c["n"] or c["m"], c["q"]
    delta = c["delta"] if c.get("delta") is not None else delta_critical(c["c"], min(m, n), p, q)
    return ModelSpec(p=p, m=m, n=n, delta=delta, q=q,
                     pattern_mode=c.get("pattern_mode", "random_shared_support"),
                     noise=_noise(c))


def _template(cfg, p=2, m=2, delta=0.0) -> ModelSpec:
    return ModelSpec(p=p, m=m, n=m, delta=delta, q=cfg["q"], pattern_mode=cfg["pattern_mode"],
                     noise=_noise(cfg))


def _report_row(rep) -> dict:
    return {"err_X": rep.err_X, "err_Y": rep.err_Y, "total": rep.total,
            "se_X": rep.se_X, "se_Y": rep.se_Y, "reps": rep.reps, "seed": rep.seed}


def _load_dataset(cfg):
    delim = None if cfg["delimiter"] == "whitespace" else cfg["delimiter"]
    feats = load_features_csv(cfg["features"], delimiter=delim, skip_header=cfg["skip_header"])
    return attach_labels(feats, cfg["labels"], label_column=cfg["label_col"],
                         positive_token=cfg["positive"], delimiter=delim,
                         skip_header=cfg["skip_header"])


def _plan(cfg):
    return SplitPlan(cfg["m"], cfg["n"], cfg["test_per_class"], seed=cfg["seed"])


def run_experiment(cfg):
    """Run the configured command; returns (rows, extra header fields)."""
    cmd, reps, seed, workers = cfg["command"], cfg["reps"], cfg["seed"], cfg["workers"]
    ids = cfg.get("classifiers", [])
    if cmd == "simulate":
        spec = model_spec(cfg)
        rows = [dict({"classifier": r.classifier_id, "p": spec.p, "m": spec.m, "n": spec.n,
                      "q": spec.q, "delta": spec.delta}, **_report_row(r))
                for r in estimate_errors(ids, spec, reps, seed, workers)]
        return rows, {"delta": spec.delta, "spec_digest": spec_digest(spec)}
    if cmd == "sweep-c":
        table = sweep_c(cfg["c_grid"], cfg["cells"], _template(cfg), reps, seed, ids[0], workers)
        rows = [dict({k: prm[k] for k in ("c", "p", "nu", "q", "delta")}, **_report_row(rep))
                for prm, rep in table.cells]
        return rows, {}
    if cmd == "calibrate":
        rows = []
        for m in cfg["m_grid"]:
            res = calibrate_delta(ids[0], _template(cfg, p=cfg["p"], m=m), cfg["target"], m,
                                  reps, seed, tol=cfg["tol"], workers=workers)
            rows.append({"m": m, "target_accuracy": res.target_accuracy,
                         "delta_star": res.delta_star, "bracket_lo": res.bracket[0],
                         "bracket_hi": res.bracket[1], "achieved_accuracy": res.achieved_accuracy,
                         "probes": len(res.probes), "reps": reps, "seed": seed})
        return rows, {}
    if cmd == "confound":
        table = confound_sweep(cfg["sigma_x_sq"], cfg["sigma_y_sq"], cfg["mu_sq"], cfg["m"],
                               cfg["n"], cfg["p"], reps, seed, ids, workers)
        rows = [dict({"mu_sq": prm["mu_sq"], "classifier": prm["classifier"]},
                     **_report_row(rep), nn_threshold=prm["nn_threshold"],
                     centroid_threshold=prm["centroid_threshold"])
                for prm, rep in table.cells]
        return rows, {}
    if cmd == "variance-check":
        grid = [(p, nu) for p in cfg["p_grid"] for nu in cfg["nu_grid"]]
        rows = []
        for p, nu in grid:
            spec = model_spec(cfg, p=p, m=nu, n=nu)
            row = variance_scaling_check([(p, nu)], spec, reps, seed, ids[0], workers)[0]
            rows.append(dict(row, delta=spec.delta, seed=seed))
        return rows, {}
    if cmd == "oracle-compare":
        spec = model_spec(cfg, pattern_mode="random_4_1")
        cmp = oracle_compare(spec, reps, seed, ids[0], workers=workers)
        rows = [dict({"classifier": rep.classifier_id, "delta": spec.delta}, **_report_row(rep))
                for rep in (cmp.first, cmp.second)]
        return rows, {"delta": spec.delta, "spec_digest": spec_digest(spec),
                      "diff_total": cmp.diff_total, "diff_se": cmp.diff_se}
    if cmd == "bench-dataset":
        ds = _load_dataset(cfg)
        res = dataset_benchmark(ds, _plan(cfg), ids, reps, seed, workers)
        rows = [dict({"classifier": cid}, **_report_row(rep),
                     success_X=1 - rep.err_X, success_Y=1 - rep.err_Y)
                for cid, rep in res.reports.items()]
        return rows, {"skipped": res.skipped, "counts": list(ds.counts)}
    if cmd == "ridge-search":
        if cfg["features"] is not None:
            source, plan = _load_dataset(cfg), _plan(cfg)
        else:
            source, plan = model_spec(cfg), None
        sel = ridge_oracle_select(source, cfg["ridge_grid"], reps, seed, plan, workers)
        rows = [dict({"ridge": r}, **_report_row(rep), accuracy=rep.accuracy,
                     best=int(r == sel.best_ridge))
                for r, rep in sel.reports.items()]
        return rows, {"best_ridge": sel.best_ridge, "success_rate": sel.success_rate}
    raise AssertionError(cmd)


def _fmt(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


def render(cfg, rows, extra) -> str:
    header = {"tool": "hdlss", "version": __version__, "config": cfg, "seed": cfg["seed"],
              "classifiers": cfg.get("classifiers", []), **extra}
    if cfg["format"] == "json":
        return json.dumps({"header": header, "rows": rows}, indent=2, sort_keys=False) + "\n"
    buf = io.StringIO()
    for k, v in header.items():
        buf.write(f"# {k}: {json.dumps(v, separators=(',', ':'))}\n")
    if rows:
        cols = list(rows[0])
        buf.write(",".join(cols) + "\n")
        for r in rows:
            buf.write(",".join(_fmt(r[c]) for c in cols) + "\n")
    return buf.getvalue()


def write_atomic(path, text):
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".hdlss-", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    try:
        cfg = parse_config(argv)
    except SystemExit as exc:  # argparse usage errors and --help
        return EXIT_USAGE if exc.code else EXIT_OK
    except UsageError as exc:
        for msg in exc.problems:
            print(f"hdlss: error: {msg}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"hdlss: error: {exc}", file=sys.stderr)
        return EXIT_IO
    try:
        rows, extra = run_experiment(cfg)
    except (OSError, ParseError) as exc:
        print(f"hdlss: error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (ValueError, ArithmeticError, RuntimeError) as exc:
        print(f"hdlss: error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    text = render(cfg, rows, extra)
    try:
        if cfg["out"]:
            write_atomic(cfg["out"], text)
        else:
            sys.stdout.write(text)
    except OSError as exc:
        print(f"hdlss: error: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK
