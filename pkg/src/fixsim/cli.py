"""Command-line entry point: ``fixsim <subcommand> [options]``.

Settings come from built-in defaults, then an optional JSON config file
(``--config``), then explicit flags. Every output starts with metadata
that echoes the merged configuration, the seed and the package version.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import os
import sys
import tempfile
from typing import Optional

import numpy as np

from . import __version__
from .bounds import moran_fixation_bounds, moran_limit, wf_fixation_bounds, wf_limit
from .chains import ChainKernel, KernelKind, RngStream
from .coupling import estimate_C0, monotone_triple_paths
from .errors import ConfigError, DominanceViolated, FixsimError
from .exact import SOLVER_CAP, moran_closed_form_vector, solve_fixation
from .experiments import FIGURE1_W_GRID, TABLE1_N, figure1, fixtime, logplot, table1
from .fitting import fit_qn
from .game import GameSpec, certify_dominance

log = logging.getLogger("fixsim")

GAME_KEYS = ("a", "b", "c", "d", "w")

DEFAULTS = {
    "common": {"a": 4.0, "b": 2.0, "c": 3.0, "d": 1.0, "w": 0.3, "seed": 0, "format": "csv",
               "output": None, "workers": None},
    "exact": {"N": 100, "kind": "wright_fisher"},
    "bounds": {"N": 100, "i": None, "kind": "wright_fisher"},
    "figure1": {"N": 100, "i": 1, "replicas": 10_000, "w_grid": list(FIGURE1_W_GRID)},
    "table1": {"N_list": list(TABLE1_N), "i_max": 10, "replicas": 10_000, "cap": SOLVER_CAP},
    "logplot": {"N_list": [10, 100, 1000], "i_list": [1, 2, 3, 4, 5], "caption_literal": False,
                "replicas": 10_000, "cap": SOLVER_CAP},
    "fixtime": {"N": 2000, "k": 1, "horizons": [1, 2, 3, 4, 5], "J": None, "eta": 1.5, "C0": None,
                "estimate_c0": False, "replicas": 10_000, "c0_replicas": 100_000},
    "couple": {"mode": "mismatch", "N": 200, "i": 1, "steps": 200, "paths": 1, "J": None,
               "replicas": 100_000},
    "certify": {},
    "fit": {"pairs": None},
}


def _int_list(text):
    return [int(x) for x in text.split(",") if x.strip()]


def _float_list(text):
    return [float(x) for x in text.split(",") if x.strip()]


def _pairs(text):
    out = []
    for item in text.split(","):
        if not item.strip():
            continue
        i, _, p = item.partition(":")
        out.append((int(i), float(p)))
    return out


def _build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON file with settings; flags take precedence")
    for key in GAME_KEYS:
        common.add_argument(f"--{key}", type=float, default=None, help=f"payoff/selection parameter {key}")
    common.add_argument("--seed", type=int, default=None)
    common.add_argument("--format", choices=("csv", "json"), default=None)
    common.add_argument("-o", "--output", default=None, help="output file (default: stdout)")
    common.add_argument("--workers", type=int, default=None,
                        help="worker processes for Monte Carlo (default: FIXSIM_THREADS or CPU count)")

    parser = argparse.ArgumentParser(prog="fixsim", description="Fixation in two-strategy Wright-Fisher games.")
    parser.add_argument("--version", action="version", version=f"fixsim {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("exact", parents=[common], help="exact fixation probabilities with bounds")
    p.add_argument("--N", type=int)
    p.add_argument("--kind", choices=[k.value for k in KernelKind])

    p = sub.add_parser("bounds", parents=[common], help="exponential bounds next to exact values")
    p.add_argument("--N", type=int)
    p.add_argument("--i", type=_int_list, help="comma-separated states (default: all interior)")
    p.add_argument("--kind", choices=("wright_fisher", "moran"))

    p = sub.add_parser("figure1", parents=[common], help="single-mutant fixation against w")
    p.add_argument("--N", type=int)
    p.add_argument("--i", type=int)
    p.add_argument("--replicas", type=int)
    p.add_argument("--w-grid", dest="w_grid", type=_float_list)

    p = sub.add_parser("table1", parents=[common], help="fitted q_N across population sizes")
    p.add_argument("--N-list", dest="N_list", type=_int_list)
    p.add_argument("--i-max", dest="i_max", type=int)
    p.add_argument("--replicas", type=int)
    p.add_argument("--cap", type=int, help="largest N solved exactly; larger N use Monte Carlo")

    p = sub.add_parser("logplot", parents=[common], help="-(1/i) log of extinction (or fixation) probability")
    p.add_argument("--N-list", dest="N_list", type=_int_list)
    p.add_argument("--i-list", dest="i_list", type=_int_list)
    p.add_argument("--caption-literal", dest="caption_literal", action="store_const", const=True,
                   help="use p_N(i) itself instead of 1 - p_N(i)")
    p.add_argument("--replicas", type=int)
    p.add_argument("--cap", type=int)

    p = sub.add_parser("fixtime", parents=[common], help="absorption-time CDF against the branching window")
    p.add_argument("--N", type=int)
    p.add_argument("--k", type=int)
    p.add_argument("--horizons", type=_int_list)
    p.add_argument("--J", type=int)
    p.add_argument("--eta", type=float)
    p.add_argument("--C0", type=float)
    p.add_argument("--estimate-c0", dest="estimate_c0", action="store_const", const=True)
    p.add_argument("--replicas", type=int)
    p.add_argument("--c0-replicas", dest="c0_replicas", type=int)

    p = sub.add_parser("couple", parents=[common], help="coupling diagnostics")
    p.add_argument("--mode", choices=("mismatch", "triple"))
    p.add_argument("--N", type=int)
    p.add_argument("--i", type=int)
    p.add_argument("--steps", type=int)
    p.add_argument("--paths", type=int)
    p.add_argument("--J", type=int)
    p.add_argument("--replicas", type=int)

    sub.add_parser("certify", parents=[common], help="dominance certificate for the game")

    p = sub.add_parser("fit", parents=[common], help="least-squares fit of p_i = 1 - q^i")
    p.add_argument("--pairs", type=_pairs, help="comma-separated i:p items, e.g. 1:0.3,2:0.5")
    return parser


def _load_config(path: str) -> dict:
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be an object")
    game = data.pop("game", None)
    if game is not None:
        if not isinstance(game, dict):
            raise ConfigError(f"{path}: 'game' must be an object with keys a, b, c, d, w")
        data.update(game)
    return data


def merge_config(command: str, args: argparse.Namespace) -> dict:
    """Defaults, then config file, then flags that were given explicitly."""
    allowed = {**DEFAULTS["common"], **DEFAULTS[command]}
    config = dict(allowed)
    if args.config:
        loaded = _load_config(args.config)
        unknown = sorted(set(loaded) - set(allowed))
        if unknown:
            raise ConfigError(f"{args.config}: unknown keys for '{command}': {', '.join(unknown)}")
        config.update(loaded)
    for key in allowed:
        value = getattr(args, key, None)
        if value is not None:
            config[key] = value
    return config


def _game(config) -> GameSpec:
    try:
        return GameSpec(*(float(config[k]) for k in GAME_KEYS))
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid game parameters: {exc}") from exc


def _workers(config) -> int:
    if config.get("workers"):
        return int(config["workers"])
    env = os.environ.get("FIXSIM_THREADS")
    return int(env) if env else (os.cpu_count() or 1)


def _fmt(value):
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return str(bool(value)).lower()
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return f"{float(value):.12g}"
    return str(value)


def _json_value(value):
    if isinstance(value, (float, np.floating)):
        v = float(value)
        return float(f"{v:.12g}") if math.isfinite(v) else None
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (list, tuple)):
        return [_json_value(v) for v in value]
    if isinstance(value, dict):
        return {k: _json_value(v) for k, v in value.items()}
    return value


class Table:
    """Columns, rows and extra metadata produced by one subcommand."""

    def __init__(self, columns, rows, extra=None):
        self.columns = list(columns)
        self.rows = [list(r) for r in rows]
        self.extra = extra or {}


def render(table: Table, command: str, config: dict) -> str:
    meta = {"version": __version__, "command": command, "seed": config.get("seed"),
            "config": {k: v for k, v in config.items() if k not in ("output", "format")}}
    meta.update(table.extra)
    if config["format"] == "json":
        doc = {"metadata": _json_value(meta), "columns": table.columns,
               "rows": [dict(zip(table.columns, _json_value(r))) for r in table.rows]}
        return json.dumps(doc, indent=2) + "\n"
    buf = io.StringIO()
    buf.write(f"# fixsim {__version__}\n")
    buf.write(f"# command: {command}\n")
    buf.write(f"# seed: {config.get('seed')}\n")
    buf.write(f"# config: {json.dumps(_json_value(meta['config']), sort_keys=True)}\n")
    for key, value in table.extra.items():
        buf.write(f"# {key}: {json.dumps(_json_value(value))}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(table.columns)
    for row in table.rows:
        writer.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def _write_output(text: str, path: Optional[str]):
    if path is None:
        sys.stdout.write(text)
        return
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".fixsim-", suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _certificate_or_none(spec):
    try:
        return certify_dominance(spec)
    except DominanceViolated as exc:
        log.warning("no dominance certificate (%s); bound columns omitted", exc)
        return None


def cmd_exact(config) -> Table:
    spec = _game(config)
    N = int(config["N"])
    kind = KernelKind(config["kind"])
    fix = solve_fixation(ChainKernel(kind, spec, N))
    cert = _certificate_or_none(spec) if kind is KernelKind.WRIGHT_FISHER else None
    if cert is not None and N < cert.N0:
        cert = None
        log.warning("N=%d is below N0; bound columns omitted", N)
    rows = []
    for i in range(N + 1):
        if cert is None:
            lo = up = None
        else:
            rep = wf_fixation_bounds(cert, N, i)
            lo, up = rep.lower, rep.upper
        rows.append((i, lo, fix.p[i], up))
    return Table(["i", "lower", "p", "upper"], rows, {"residual": fix.residual})


def cmd_bounds(config) -> Table:
    spec = _game(config)
    cert = certify_dominance(spec)
    N = int(config["N"])
    states = config["i"] or list(range(1, N))
    if config["kind"] == "moran":
        bound, limit = moran_fixation_bounds, moran_limit
        exact = moran_closed_form_vector(spec, N)
    else:
        bound, limit = wf_fixation_bounds, wf_limit
        exact = solve_fixation(ChainKernel.wright_fisher(spec, N)).p if N <= SOLVER_CAP else None
    rows = []
    for i in states:
        rep = bound(cert, N, int(i))
        ex = None if exact is None else exact[int(i)]
        rows.append((N, int(i), rep.lower, ex, rep.upper, limit(cert, int(i)), rep.source.value))
    return Table(["N", "i", "lower", "exact", "upper", "limit", "source"], rows,
                 {"certificate": cert.as_dict()})


def cmd_figure1(config) -> Table:
    spec = _game(config)
    rows = figure1(config["w_grid"], (spec.a, spec.b, spec.c, spec.d), int(config["N"]), int(config["i"]),
                   int(config["replicas"]), int(config["seed"]), workers=_workers(config))
    return Table(["w", "p_inf", "p_mc", "stderr", "p_exact"], rows)


def cmd_table1(config) -> Table:
    rows = table1(_game(config), config["N_list"], int(config["i_max"]), int(config["replicas"]),
                  int(config["seed"]), int(config["cap"]), workers=_workers(config))
    return Table(["N", "q_N", "q_N_minus_q", "source"], rows)


def cmd_logplot(config) -> Table:
    literal = bool(config["caption_literal"])
    rows = logplot(_game(config), config["N_list"], config["i_list"], literal, int(config["replicas"]),
                   int(config["seed"]), int(config["cap"]), workers=_workers(config))
    quantity = "p" if literal else "1-p"
    return Table(["N", "i", "value"], rows, {"quantity": f"-(1/i) log({quantity})"})


def cmd_fixtime(config) -> Table:
    C0 = None if config["estimate_c0"] else config["C0"]
    res = fixtime(_game(config), int(config["N"]), int(config["k"]), config["horizons"], config["J"],
                  float(config["eta"]), C0, int(config["replicas"]), int(config["c0_replicas"]),
                  int(config["seed"]), workers=_workers(config))
    extra = {"C0": res.C0, "C0_source": "empirical estimate (not rigorous)" if res.C0_estimated else "supplied"}
    rows = [(r.m, r.lower, r.empirical, r.upper) for r in res.rows]
    return Table(["m", "lower", "empirical", "upper"], rows, extra)


def cmd_couple(config) -> Table:
    spec = _game(config)
    N = int(config["N"])
    seed = int(config["seed"])
    if config["mode"] == "triple":
        paths = monotone_triple_paths(spec, N, int(config["i"]), int(config["steps"]), int(config["paths"]),
                                      RngStream(seed))
        rows = [(p, t, *map(int, paths[p, t])) for p in range(paths.shape[0]) for t in range(paths.shape[1])]
        return Table(["path", "step", "x1", "x2", "x3"], rows)
    J = config["J"] or math.ceil(N**0.6)
    est = estimate_C0(spec, N, int(J), int(config["replicas"]), RngStream(seed))
    rows = [(i, rate, est.value * i**1.5 / N) for i, rate in enumerate(est.rates, start=1)]
    return Table(["i", "rate", "bound"], rows,
                 {"C0": est.value, "C0_argmax": est.argmax, "C0_rigorous": False})


def cmd_certify(config) -> Table:
    cert = certify_dominance(_game(config))
    return Table(["key", "value"], list(cert.as_dict().items()))


def cmd_fit(config) -> Table:
    if not config["pairs"]:
        raise ConfigError("fit needs --pairs or a 'pairs' list in the config")
    res = fit_qn([tuple(p) for p in config["pairs"]])
    return Table(["q_fit", "sse", "n_pairs", "unimodal"], [(res.q_fit, res.sse, len(res.inputs), res.unimodal)])


COMMANDS = {
    "exact": cmd_exact, "bounds": cmd_bounds, "figure1": cmd_figure1, "table1": cmd_table1,
    "logplot": cmd_logplot, "fixtime": cmd_fixtime, "couple": cmd_couple, "certify": cmd_certify,
    "fit": cmd_fit,
}


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="fixsim: %(levelname)s: %(message)s")
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        config = merge_config(args.command, args)
        table = COMMANDS[args.command](config)
        text = render(table, args.command, config)
        _write_output(text, config["output"])
    except FixsimError as exc:
        print(f"fixsim: error: {exc}", file=sys.stderr)
        return exc.exit_code
    except (np.linalg.LinAlgError, FloatingPointError, OverflowError) as exc:
        print(f"fixsim: numerical error: {exc}", file=sys.stderr)
        return 4
    return 0


if __name__ == "__main__":
    sys.exit(main())
