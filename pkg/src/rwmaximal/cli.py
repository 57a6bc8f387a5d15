"""Command line interface.

Subcommands: ``classify``, ``analyze``, ``check`` and ``presets``.  Exit
codes: 0 success, 2 invalid input, 3 evaluation error, 4 a requested check
failed.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import json
import math
import sys
from pathlib import Path
from typing import Optional

import numpy as np

from . import __version__
from .catalog import ConfigError, UnknownPresetError, get_preset, list_presets, parse_config
from .expr import EvalError, ParseError
from .hypersurface import (
    HypersurfaceError,
    NCCViolatedError,
    NotMaximalError,
    hyperbolic_angle,
    make_graph,
    mean_curvature,
    parse_box,
    ricci_bound_slack,
    verify_hessian_identity,
    verify_lemma1,
)
from .warp import (
    RegionError,
    SamplerConfig,
    Spacetime,
    classify,
    criterion_fluid_form,
    criterion_value,
    fluid_state,
    hubble,
    log_f_second,
    parse_interval,
)

EXIT_OK, EXIT_INPUT, EXIT_EVAL, EXIT_CHECK = 0, 2, 3, 4

# Subharmonicity slack threshold is -LEMMA1_C * h^2.  Calibrated on maximal slices,
# where the slack is exactly 0; the constant only absorbs roundoff.
LEMMA1_C = 1e-6

ANALYZE_COLUMNS = ("t", "f", "df", "d2f", "hubble", "log_f_second", "criterion",
                   "rho", "p", "criterion_fluid_form")

# option name -> (type, default); shared by flags and config files
_SPACETIME_KEYS = {"preset": (str, None), "f": (str, None), "interval": (str, None),
                   "n": (int, None), "region": (str, None)}
_SAMPLER_KEYS = {"samples": (int, None), "tol": (float, None), "truncate": (float, None),
                 "depth": (int, None)}
_CHECK_KEYS = {"graph": (str, None), "graph_file": (str, None), "domain": (str, None),
               "res": (int, 65), "maximality_tol": (float, None), "residual_tol": (float, 1e-3),
               "require_maximal": (bool, False)}
_OUTPUT_KEYS = {"format": (str, None), "output": (str, None)}
_IGNORED_KEYS = ("name", "description")


class CliInputError(ValueError):
    pass


# --------------------------------------------------------------------------
# Serialization
# --------------------------------------------------------------------------


def _num(x: float) -> str:
    if math.isnan(x):
        return '"nan"'
    if math.isinf(x):
        return '"inf"' if x > 0 else '"-inf"'
    return format(x, ".17g")


def _plain(obj):
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return {f.name: _plain(getattr(obj, f.name)) for f in dataclasses.fields(obj)}
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_plain(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return float(obj)
    return obj


def dumps(obj, indent: int = 2) -> str:
    """JSON text with floats written to 17 significant digits and non-finite floats as strings."""

    def enc(v, level):
        pad, inner = " " * (indent * level), " " * (indent * (level + 1))
        if isinstance(v, dict):
            if not v:
                return "{}"
            items = [f"{inner}{json.dumps(k)}: {enc(x, level + 1)}" for k, x in v.items()]
            return "{\n" + ",\n".join(items) + "\n" + pad + "}"
        if isinstance(v, list):
            if not v:
                return "[]"
            if all(not isinstance(x, (dict, list)) for x in v):
                return "[" + ", ".join(enc(x, level) for x in v) + "]"
            return "[\n" + ",\n".join(inner + enc(x, level + 1) for x in v) + "\n" + pad + "]"
        if isinstance(v, bool) or v is None:
            return json.dumps(v)
        if isinstance(v, int):
            return str(v)
        if isinstance(v, float):
            return _num(v)
        return json.dumps(str(v))

    return enc(_plain(obj), 0) + "\n"


def _fmt(x) -> str:
    return format(float(x), ".17g")


# --------------------------------------------------------------------------
# Configuration
# --------------------------------------------------------------------------


def _coerce(key, typ, value):
    if value is None or isinstance(value, typ):
        return value
    try:
        if typ is bool:
            low = str(value).strip().lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ValueError(value)
        return typ(value)
    except ValueError:
        raise CliInputError(f"option {key!r}: cannot read {value!r} as {typ.__name__}") from None


def _parse_params(items) -> dict:
    out = {}
    for item in items or ():
        name, sep, val = item.partition("=")
        if not sep or not name.strip():
            raise CliInputError(f"parameter binding {item!r} must look like name=value")
        try:
            out[name.strip()] = float(val)
        except ValueError:
            raise CliInputError(f"parameter {name.strip()!r}: {val!r} is not a number") from None
    return out


def _merge(args, keys: dict) -> tuple:
    """Combine flags, config file and defaults.  Returns ``(settings, params, echo)``."""
    cfg = {}
    if getattr(args, "config", None):
        path = Path(args.config)
        try:
            text = path.read_text(encoding="utf-8")
        except OSError as exc:
            raise CliInputError(f"cannot read config {path}: {exc.strerror}") from None
        cfg = parse_config(text, str(path))
    params, cfg_vals = {}, {}
    for key, value in cfg.items():
        norm = key.replace("-", "_")
        if norm.startswith("param."):
            params.update(_parse_params([f"{norm[6:]}={value}"]))
        elif norm.startswith(("expected.", "provenance.")) or norm in _IGNORED_KEYS:
            continue
        elif norm in keys:
            cfg_vals[norm] = value
        else:
            raise CliInputError(f"unknown config key {key!r}")
    params.update(_parse_params(getattr(args, "param", None)))

    # the source of f is one unit: a flag for either replaces both config keys
    if "preset" in keys and (args.preset is not None or args.f is not None):
        cfg_vals.pop("preset", None)
        cfg_vals.pop("f", None)

    settings = {}
    for key, (typ, default) in keys.items():
        flag = getattr(args, key, None)
        if flag is not None and not (typ is bool and flag is False and key in cfg_vals):
            settings[key] = _coerce(key, typ, flag)
        elif key in cfg_vals:
            settings[key] = _coerce(key, typ, cfg_vals[key])
        else:
            settings[key] = default
    echo = {k: v for k, v in settings.items() if v is not None}
    if params:
        echo["params"] = dict(sorted(params.items()))
    return settings, params, echo


def _spacetime(s: dict, params: dict, n_override: Optional[int] = None):
    """Build the spacetime and default region from merged settings."""
    if (s["preset"] is None) == (s["f"] is None):
        raise CliInputError("give exactly one of --preset or --f")
    n = n_override if n_override is not None else s["n"]
    if s["preset"] is not None:
        preset = get_preset(s["preset"])
        bindings = {**preset.params, **params}
        interval = s["interval"] or preset.interval
        st = Spacetime.from_strings(preset.f, interval, n or preset.n, bindings)
        region_text = s["region"] or preset.region
    else:
        bindings = params
        interval = s["interval"] or "(-inf,inf)"
        st = Spacetime.from_strings(s["f"], interval, n or 3, bindings)
        region_text = s["region"] or interval
    region = parse_interval(region_text, bindings)
    iv = st.interval
    if region.lo < iv.lo or region.hi > iv.hi:
        raise CliInputError(f"region {region} is not contained in the interval {iv}")
    return st, region


def _sampler(s: dict) -> SamplerConfig:
    kw = {k: s[k] for k in _SAMPLER_KEYS if s.get(k) is not None}
    return SamplerConfig(**kw)


# --------------------------------------------------------------------------
# Output
# --------------------------------------------------------------------------


def _document(command: str, echo: dict, results, diagnostics) -> dict:
    return {"tool_version": __version__, "command": command, "config_echo": echo,
            "results": results, "diagnostics": list(diagnostics)}


def _emit(text: str, output: Optional[str], stdout) -> None:
    if output:
        Path(output).write_text(text, encoding="utf-8")
    else:
        stdout.write(text)


def _bound_text(b) -> str:
    return f"[{b.lower:.6g}, {b.upper:.6g}]" + ("" if b.converged else " (not converged)")


def _classify_text(report) -> str:
    lines = [f"verdict: {report.verdict}"]
    if report.failure_mode:
        lines.append(f"failure mode: {report.failure_mode}")
    slices = ", ".join(f"{s.t0:.12g} ({s.kind})" for s in report.maximal_slices) or "none"
    lines.append(f"maximal slices: {slices}")
    for name in ("ncc", "wec", "sec", "dec"):
        v = getattr(report, name)
        lines.append(f"{name.upper()}: {v.status} (worst margin {v.margin:.6g} at t = {v.witness})")
    lines.append(f"inf criterion in {_bound_text(report.criterion_inf)}")
    lines.append(f"inf |div d_t| in {_bound_text(report.div_abs_inf)}")
    lines += [f"note: {n}" for n in report.notes]
    return "\n".join(lines) + "\n"


# --------------------------------------------------------------------------
# Commands
# --------------------------------------------------------------------------


def cmd_classify(args, stdout) -> int:
    keys = {**_SPACETIME_KEYS, **_SAMPLER_KEYS, **_OUTPUT_KEYS}
    s, params, echo = _merge(args, keys)
    st, region = _spacetime(s, params)
    fmt = s["format"] or "json"
    if fmt not in ("json", "text"):
        raise CliInputError(f"classify supports --format json or text, not {fmt!r}")
    report = classify(st, region, _sampler(s))
    echo.update(f=str(st.warp), interval=str(st.interval), n=st.n, region=str(region))
    if fmt == "json":
        text = dumps(_document("classify", echo, _plain(report), report.notes))
    else:
        text = _classify_text(report)
    _emit(text, s["output"], stdout)
    return EXIT_OK


def _analysis_grid(region, samples: int) -> np.ndarray:
    if not (math.isfinite(region.lo) and math.isfinite(region.hi)):
        raise CliInputError("analyze needs a bounded region")
    if samples < 1:
        raise CliInputError("samples must be at least 1")
    if region.degenerate or samples == 1:
        if region.lo_open and not region.degenerate:
            raise CliInputError("a single sample needs a closed lower end")
        return np.array([region.lo])
    extra = int(region.lo_open) + int(region.hi_open)
    ts = np.linspace(region.lo, region.hi, samples + extra)
    return ts[int(region.lo_open): len(ts) - int(region.hi_open)]


def analysis_rows(st: Spacetime, ts) -> list:
    ts = np.asarray(ts, dtype=float)
    st.check_positive(ts)
    j = st.jet(ts)
    fl = fluid_state(st, ts)
    cols = [ts, j.v, j.d1, j.d2, hubble(st, ts), log_f_second(st, ts), criterion_value(st, ts),
            fl.rho, fl.p, criterion_fluid_form(st, ts)]
    cols = [np.broadcast_to(np.asarray(c, dtype=float), ts.shape) for c in cols]
    return [[float(c[i]) for c in cols] for i in range(ts.size)]


def cmd_analyze(args, stdout) -> int:
    keys = {**_SPACETIME_KEYS, "samples": (int, 101), **_OUTPUT_KEYS}
    s, params, echo = _merge(args, keys)
    st, region = _spacetime(s, params)
    fmt = s["format"] or "csv"
    if fmt not in ("csv", "json"):
        raise CliInputError(f"analyze supports --format csv or json, not {fmt!r}")
    rows = analysis_rows(st, _analysis_grid(region, s["samples"]))
    echo.update(f=str(st.warp), interval=str(st.interval), n=st.n, region=str(region))
    if fmt == "json":
        text = dumps(_document("analyze", echo, {"columns": list(ANALYZE_COLUMNS), "rows": rows}, []))
    else:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(ANALYZE_COLUMNS)
        w.writerows([[_fmt(v) for v in row] for row in rows])
        text = buf.getvalue()
    _emit(text, s["output"], stdout)
    return EXIT_OK


def read_node_array(text: str):
    """Parse a node-array file: a ``dims r1 ... rn`` header line, then row-major values.

    The literal word ``dims`` is optional; a header ``n r1 ... rn`` whose
    first number equals the count of the rest is also accepted.
    """
    lines = [ln for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]
    if not lines:
        raise CliInputError("node array is empty")
    head = lines[0].split()
    if head and head[0].lower() == "dims":
        head = head[1:]
    try:
        dims = [int(x) for x in head]
    except ValueError:
        raise CliInputError(f"bad node-array header {lines[0]!r}") from None
    if len(dims) >= 2 and dims[0] == len(dims) - 1:
        dims = dims[1:]
    if not dims or min(dims) < 1:
        raise CliInputError(f"bad node-array header {lines[0]!r}")
    try:
        vals = np.array(" ".join(lines[1:]).split(), dtype=float)
    except ValueError:
        raise CliInputError("node array contains a non-numeric value") from None
    if vals.size != int(np.prod(dims)):
        raise CliInputError(f"node array has {vals.size} values, header needs {int(np.prod(dims))}")
    return vals.reshape(dims)


def _block(status: str, **kw) -> dict:
    return {"status": status, **kw}


def _residual_block(residual, scale, tol) -> dict:
    """Judge ``max |residual| / (1 + max |scale|)`` against ``tol``."""
    r = residual.max_abs()
    rel = r / (1.0 + scale.max_abs())
    return _block("pass" if rel <= tol else "fail", value=r, relative=rel, tolerance=tol)


def run_checks(gh, residual_tol: float, maximality_tol: Optional[float], require_maximal: bool):
    """Per-check result blocks and the list of diagnostics."""
    diags = []
    h = gh.h
    mtol = 10.0 * h * h if maximality_tol is None else maximality_tol
    blocks = {}
    margin = gh.spacelike_margin.min()
    blocks["spacelike_margin"] = _block("pass" if margin > 0 else "fail", value=margin)
    mc = mean_curvature(gh)
    max_h = mc.max_abs()
    maximal = max_h <= mtol
    blocks["max_abs_H"] = _block(("pass" if maximal else "fail") if require_maximal else "info",
                                 value=max_h, tolerance=mtol)
    cosh, _ = hyperbolic_angle(gh)
    blocks["max_cosh_phi"] = _block("info", value=cosh.max())
    blocks["mean_curvature_residual"] = _residual_block(mc.residual, mc.H, residual_tol)
    hess = verify_hessian_identity(gh)
    blocks["hessian_identity_residual"] = _residual_block(hess.residual, hess.lhs, residual_tol)
    try:
        lem = verify_lemma1(gh, mtol)
    except (NotMaximalError, NCCViolatedError) as exc:
        diags.append(f"lemma1_slack skipped: {exc}")
        status = "fail" if require_maximal else "skipped"
        blocks["ricci_bound_slack"] = _block(status, reason=str(exc))
        blocks["lemma1_slack"] = _block(status, reason=str(exc))
    else:
        slack = ricci_bound_slack(gh).min()
        blocks["ricci_bound_slack"] = _block("pass" if slack >= -residual_tol else "fail",
                                             value=slack, tolerance=residual_tol)
        thr = LEMMA1_C * h * h
        blocks["lemma1_slack"] = _block("pass" if lem.min_slack >= -thr else "fail",
                                        value=lem.min_slack, tolerance=thr)
    return blocks, diags


def _check_text(blocks: dict) -> str:
    lines = []
    for name, b in blocks.items():
        extra = f"value {b['value']:.6g}" if "value" in b else b.get("reason", "")
        lines.append(f"{name}: {b['status']} {extra}".rstrip())
    return "\n".join(lines) + "\n"


def cmd_check(args, stdout) -> int:
    keys = {**_SPACETIME_KEYS, **_CHECK_KEYS, **_OUTPUT_KEYS}
    s, params, echo = _merge(args, keys)
    if (s["graph"] is None) == (s["graph_file"] is None):
        raise CliInputError("give exactly one of --graph or --graph-file")
    if s["graph_file"] is not None:
        try:
            source = read_node_array(Path(s["graph_file"]).read_text(encoding="utf-8"))
        except OSError as exc:
            raise CliInputError(f"cannot read {s['graph_file']}: {exc.strerror}") from None
        res = source.shape
    else:
        source, res = s["graph"], s["res"]
    if s["domain"] is None:
        raise CliInputError("check needs --domain, e.g. \"[-1,1]x[-1,1]\"")
    box = parse_box(s["domain"])
    if s["n"] is not None and s["n"] != len(box):
        raise CliInputError(f"--n {s['n']} disagrees with the {len(box)}-dimensional domain")
    if s["graph_file"] is not None and len(res) != len(box):
        raise CliInputError(f"node array has {len(res)} axes but the domain has {len(box)}")
    st, _ = _spacetime({**s, "region": s["region"] or "[0,0]"} if s["preset"] is None else s,
                       params, n_override=len(box))
    fmt = s["format"] or "json"
    if fmt not in ("json", "text"):
        raise CliInputError(f"check supports --format json or text, not {fmt!r}")
    gh = make_graph(st, box, res, source)
    blocks, diags = run_checks(gh, s["residual_tol"], s["maximality_tol"], s["require_maximal"])
    echo.update(f=str(st.warp), interval=str(st.interval), n=st.n, res=list(gh.res))
    echo.pop("region", None)
    if fmt == "json":
        text = dumps(_document("check", echo, blocks, diags))
    else:
        text = _check_text(blocks)
    _emit(text, s["output"], stdout)
    return EXIT_CHECK if any(b["status"] == "fail" for b in blocks.values()) else EXIT_OK


def cmd_presets(args, stdout) -> int:
    if args.show:
        p = get_preset(args.show)
        text = dumps(_document("presets", {"show": args.show}, p.to_dict(), [])) if args.json \
            else p.to_config()
    elif args.json:
        text = dumps(_document("presets", {}, [p.summary() for p in list_presets()], []))
    else:
        width = max(len(p.name) for p in list_presets())
        text = "".join(f"{p.name:<{width}}  f = {p.f}  on {p.interval}\n" for p in list_presets())
    _emit(text, None, stdout)
    return EXIT_OK


# --------------------------------------------------------------------------
# Entry point
# --------------------------------------------------------------------------


def _add_common(p: argparse.ArgumentParser, output_help: str) -> None:
    p.add_argument("--config", help="key = value file with the same keys as the flags")
    src = p.add_argument_group("spacetime")
    src.add_argument("--preset", help="builtin preset name")
    src.add_argument("--f", help="warping function of t, e.g. \"exp(-t^2)\"")
    src.add_argument("--interval", help="domain of f, e.g. \"(0,inf)\"")
    src.add_argument("--n", type=int, help="fiber dimension")
    src.add_argument("--param", action="append", metavar="NAME=VALUE", help="parameter binding")
    p.add_argument("--format", help=output_help)
    p.add_argument("--output", help="write to this file instead of stdout")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rwmaximal",
                                     description="Maximal hypersurfaces in Robertson-Walker spacetimes.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("classify", help="certify the uniqueness / non-existence criteria on a region")
    _add_common(p, "json (default) or text")
    p.add_argument("--region", help="time region to examine, e.g. \"[-10,10]\"")
    p.add_argument("--samples", type=int, help="initial sample count")
    p.add_argument("--tol", type=float, help="certification tolerance")
    p.add_argument("--truncate", type=float, help="|t| cut-off for infinite region ends")
    p.add_argument("--depth", type=int, help="refinement levels")
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("analyze", help="tabulate f, fluid quantities and the criterion")
    _add_common(p, "csv (default) or json")
    p.add_argument("--region", help="time region to sample")
    p.add_argument("--samples", type=int, help="number of rows (default 101)")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("check", help="verify geometric identities on a graph t = u(x)")
    _add_common(p, "json (default) or text")
    p.add_argument("--graph", help="u as an expression in x_1..x_n")
    p.add_argument("--graph-file", dest="graph_file", help="node-array file")
    p.add_argument("--domain", help="box, e.g. \"[-1,1]x[-1,1]\"")
    p.add_argument("--res", type=int, help="nodes per axis (default 65)")
    p.add_argument("--maximality-tol", dest="maximality_tol", type=float,
                   help="max |H| accepted as maximal (default 10 h^2)")
    p.add_argument("--residual-tol", dest="residual_tol", type=float,
                   help="tolerance for identity residuals relative to 1 + max |lhs| (default 1e-3)")
    p.add_argument("--require-maximal", dest="require_maximal", action="store_const", const=True,
                   help="fail instead of skipping when the graph is not maximal")
    p.set_defaults(func=cmd_check, region=None)

    p = sub.add_parser("presets", help="list builtin presets")
    p.add_argument("--json", action="store_true")
    p.add_argument("--show", metavar="NAME")
    p.set_defaults(func=cmd_presets)
    return parser


def main(argv=None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args, stdout)
    except ParseError as exc:
        print(f"error: parse error: {exc}", file=stderr)
        return EXIT_INPUT
    except EvalError as exc:
        print(f"error: evaluation failed: {exc}", file=stderr)
        return EXIT_EVAL
    except UnknownPresetError as exc:
        print(f"error: {exc}", file=stderr)
        return EXIT_INPUT
    except (CliInputError, ConfigError, RegionError, HypersurfaceError, ValueError) as exc:
        print(f"error: {exc}", file=stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
