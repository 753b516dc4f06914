"""lambda-lab: command-line front end.

Every command writes one JSON envelope {tool_version, command, config,
status, payload, error, logs, timings} to --out (stdout by default).  Exit
codes: 0 success, 2 invalid input or flags, 3 numerical failure.  Grid
spacing and stage offsets for PDE commands are in units of the domain scale
(the circumradius of the outer boundary), so the same flags resolve every
domain alike.  Timings are kept in their own field; with the same config
and seed everything else is byte-identical across runs.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import struct
import sys
import time
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import List, Optional, Sequence

import numpy as np

from . import __version__
from .checks import run_suite, summary_table
from .domain import Annulus, CurveError, MappedAnnulus, ProjectionError, geometry, spec_from_json, validate
from .expansion import ExpansionError, extract_c3_fit, extract_c3_flux, lambda_numeric, outer_frames
from .liouville import GridError, ScalarField, SolverError, modulus, solve_liouville
from .mapcalc import MapError, build_map, classify_rigidity, lambda_via_map, profile, recompose_outer
from .models import constants
from .series import LaurentSeries, SeriesError

EXIT_OK, EXIT_INVALID, EXIT_NUMERIC = 0, 2, 3
FIELD_MAGIC = b"LLFIELD1"


class UsageError(ValueError):
    pass


@dataclass
class RunConfig:
    command: str
    domain_path: Optional[str] = None
    map_path: Optional[str] = None
    beta: Optional[float] = None
    h: Optional[float] = None
    schedule: Optional[List[float]] = None
    out: Optional[str] = None
    emit_svg: bool = False
    seed: int = 0
    options: dict = field(default_factory=dict)

    def check(self):
        need = {
            "models": ["beta"],
            "lambda-map": ["map_path", "beta"],
            "bt-profile": ["map_path", "beta"],
            "lambda-pde": ["domain_path"],
            "modulus": ["domain_path"],
            "verify": [],
        }[self.command]
        missing = [k for k in need if getattr(self, k) is None]
        if missing:
            raise UsageError(f"{self.command} requires {', '.join('--' + m.split('_')[0] for m in missing)}")
        if self.beta is not None and not (0 <= self.beta < 1):
            raise UsageError(f"--beta must lie in [0, 1), got {self.beta}")
        if self.h is not None and not self.h > 0:
            raise UsageError("--h must be positive")
        if self.schedule is not None:
            s = self.schedule
            if any(e <= 0 for e in s) or any(b >= a for a, b in zip(s, s[1:])):
                raise UsageError("--schedule must be positive and strictly decreasing")


# ---------------------------------------------------------------------------
# file formats


def _read_json(path: str) -> dict:
    try:
        return json.loads(Path(path).read_text())
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from exc
    except json.JSONDecodeError as exc:
        raise UsageError(f"{path} is not valid JSON: {exc}") from exc


def read_map(path: str) -> LaurentSeries:
    doc = _read_json(path)
    try:
        return LaurentSeries.from_json(doc)
    except (KeyError, TypeError, ValueError) as exc:
        raise UsageError(f"{path}: not a Laurent series document ({exc})") from exc


def read_domain(path: str):
    doc = _read_json(path)
    try:
        return spec_from_json(doc)
    except (KeyError, TypeError, ValueError) as exc:
        raise UsageError(f"{path}: not a domain document ({exc})") from exc


def write_field(path: str, f: ScalarField):
    """Header: magic, nx, ny (int64), h, origin.x, origin.y (float64); then ny*nx float64, row-major."""
    g = f.grid
    with open(path, "wb") as fh:
        fh.write(FIELD_MAGIC)
        fh.write(struct.pack("<qqddd", g.nx, g.ny, g.h, g.origin.real, g.origin.imag))
        fh.write(np.ascontiguousarray(f.values, dtype="<f8").tobytes())


def read_field(path: str):
    """(values (ny, nx), h, origin) from a file written by write_field."""
    raw = Path(path).read_bytes()
    if raw[:8] != FIELD_MAGIC:
        raise ValueError(f"{path} is not a field file")
    nx, ny, h, ox, oy = struct.unpack("<qqddd", raw[8:48])
    vals = np.frombuffer(raw[48:], dtype="<f8")
    if vals.size != nx * ny:
        raise ValueError(f"{path}: expected {nx * ny} samples, found {vals.size}")
    return vals.reshape(ny, nx), h, complex(ox, oy)


def write_csv(path: str, header: Sequence[str], rows: Sequence[Sequence[float]]):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([repr(float(x)) for x in r])
    Path(path).write_text(buf.getvalue())


def svg_plot(x, ys: dict, xlabel: str, title: str, width: int = 640, height: int = 400) -> str:
    """Static line plot; ys maps a legend label to a y array."""
    x = np.asarray(x, float)
    ally = np.concatenate([np.asarray(v, float) for v in ys.values()])
    x0, x1 = float(x.min()), float(x.max())
    y0, y1 = float(np.min(ally)), float(np.max(ally))
    if y1 == y0:
        y0, y1 = y0 - 1, y1 + 1
    ml, mr, mt, mb = 70, 20, 40, 50
    pw, ph = width - ml - mr, height - mt - mb

    def px(v):
        return ml + (v - x0) / (x1 - x0 or 1) * pw

    def py(v):
        return mt + (y1 - v) / (y1 - y0) * ph

    colors = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"]
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" font-family="sans-serif" '
        f'font-size="12">',
        f'<rect x="{ml}" y="{mt}" width="{pw}" height="{ph}" fill="none" stroke="#444"/>',
        f'<text x="{width / 2:.1f}" y="22" text-anchor="middle" font-size="14">{title}</text>',
        f'<text x="{ml + pw / 2:.1f}" y="{height - 12}" text-anchor="middle">{xlabel}</text>',
    ]
    for k in range(5):
        xv = x0 + (x1 - x0) * k / 4
        yv = y0 + (y1 - y0) * k / 4
        parts.append(f'<text x="{px(xv):.1f}" y="{mt + ph + 16}" text-anchor="middle">{xv:.3g}</text>')
        parts.append(f'<text x="{ml - 6}" y="{py(yv) + 4:.1f}" text-anchor="end">{yv:.3g}</text>')
    for i, (label, y) in enumerate(ys.items()):
        pts = " ".join(f"{px(a):.2f},{py(b):.2f}" for a, b in zip(x, np.asarray(y, float)))
        c = colors[i % len(colors)]
        parts.append(f'<polyline fill="none" stroke="{c}" stroke-width="1.5" points="{pts}"/>')
        parts.append(f'<text x="{ml + 10}" y="{mt + 16 + 14 * i}" fill="{c}">{label}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def _side_path(cfg: RunConfig, key: str, suffix: str) -> Optional[str]:
    """Explicit --<key> path, else derived from --out, else None."""
    p = cfg.options.get(key)
    if p:
        return p
    if cfg.out:
        return str(Path(cfg.out).with_suffix(suffix))
    return None


# ---------------------------------------------------------------------------
# commands; each returns (payload, logs, timings)


def cmd_models(cfg: RunConfig):
    c = constants(cfg.beta)
    return {"beta": c.beta, "c3": c.c3, "lambda_bound": c.lambda_bound}, [], {}


def _load_map(cfg: RunConfig):
    m = build_map(read_map(cfg.map_path), cfg.beta)
    if not m.outer_normalized and cfg.options.get("renormalize_outer") and cfg.beta > 0:
        m = build_map(recompose_outer(m.f, cfg.beta), cfg.beta)
    if not m.outer_normalized:
        raise MapError("f does not send |z| = 1 onto the outermost boundary with positive orientation "
                       "(try --renormalize-outer)")
    return m


def cmd_lambda_map(cfg: RunConfig):
    t = time.perf_counter()
    m = _load_map(cfg)
    rep = lambda_via_map(m)
    rig = classify_rigidity(m)
    if rig["params"]:
        rig["params"] = {k: ([v.real, v.imag] if isinstance(v, complex) else v) for k, v in rig["params"].items()}
    payload = {"report": rep.to_json(), "rigidity": rig, "winding_fprime": m.winding_fprime}
    return payload, [], {"lambda": time.perf_counter() - t}


def cmd_bt_profile(cfg: RunConfig):
    m = _load_map(cfg)
    n = int(cfg.options.get("n") or 200)
    lo = math.log(cfg.beta) if cfg.beta > 0 else -4.0
    ts = lo + (0 - lo) * (np.arange(1, n + 1) / (n + 1))
    prof = profile(m, ts)
    csv_path = _side_path(cfg, "csv", ".csv")
    files = {}
    if csv_path:
        write_csv(csv_path, ["t", "A", "B"], zip(prof.ts, prof.A, prof.B))
        files["csv"] = csv_path
    if cfg.emit_svg:
        svg_path = _side_path(cfg, "svg_path", ".svg") or "bt_profile.svg"
        Path(svg_path).write_text(svg_plot(prof.ts, {"A(t)": prof.A, "B(t)": prof.B}, "t", "A(t) and B(t)"))
        files["svg"] = svg_path
    payload = {"n": n, "t_range": [float(ts[0]), float(ts[-1])], "min_B": float(prof.B.min()),
               "A_boundary": float(prof.A[-1]), "files": files}
    if not csv_path:
        payload["rows"] = [[float(a), float(b), float(c)] for a, b, c in zip(prof.ts, prof.A, prof.B)]
    return payload, [], {}


def _pde_solve(cfg: RunConfig, spec):
    sc = geometry(spec).scale
    h = (cfg.h or 1 / 256) * sc
    sched = [e * sc for e in cfg.schedule] if cfg.schedule else None
    return solve_liouville(spec, h, sched, init=cfg.options.get("init") or "distance"), sc


def _beta_of(spec, cfg: RunConfig):
    if isinstance(spec, (Annulus, MappedAnnulus)):
        return spec.beta if spec.beta > 0 else None, {}
    if geometry(spec).doubly_connected:
        res = modulus(spec)
        return res.beta, res.to_json()
    return None, {}


def _strip_seconds(records: List[dict]):
    """Move per-record wall times out of deterministic output."""
    clean, secs = [], []
    for r in records:
        r = dict(r)
        secs.append(r.pop("seconds", None))
        clean.append(r)
    return clean, secs


def cmd_lambda_pde(cfg: RunConfig):
    spec = read_domain(cfg.domain_path)
    diag = validate(spec)
    if not diag.ok:
        raise UsageError("invalid domain: " + "; ".join(diag.failures()))
    t = time.perf_counter()
    sol, sc = _pde_solve(cfg, spec)
    t_solve = time.perf_counter() - t
    logs, stage_secs = _strip_seconds(sol.log())
    for note in sol.lattice.notes:
        logs.append({"note": note})
    fr = outer_frames(sol, int(cfg.options.get("frames") or 64))
    method = cfg.options.get("method") or "normal_fit"
    prof = extract_c3_fit(sol.v(), fr) if method == "normal_fit" else extract_c3_flux(sol.v(), fr)
    beta, mod = _beta_of(spec, cfg)
    rep = lambda_numeric(prof, beta)
    timings = {"solve": t_solve, "stages": stage_secs}
    if mod:
        mod_levels, mod_secs = _strip_seconds(mod["grid_levels"])
        mod["grid_levels"] = mod_levels
        timings["modulus_levels"] = mod_secs
    files = {}
    field_path = _side_path(cfg, "field", ".field")
    if field_path:
        q = cfg.options.get("quantity") or "u"
        write_field(field_path, sol.u if q == "u" else sol.v())
        files["field"] = field_path
    csv_path = _side_path(cfg, "csv", ".csv")
    rows = prof.rows()
    if csv_path:
        write_csv(csv_path, ["s", "kappa", "c3", "residual"],
                  [(r["s"], r["kappa"], r["c3"], r["residual"]) for r in rows])
        files["csv"] = csv_path
    if cfg.emit_svg:
        svg_path = _side_path(cfg, "svg_path", ".svg") or "c3_profile.svg"
        s = [r["s"] for r in rows]
        Path(svg_path).write_text(svg_plot(s, {"c3": prof.c3}, "arc length", f"c3 along the outer boundary ({method})"))
        files["svg"] = svg_path
    payload = {
        "report": rep.to_json(),
        "method": method,
        "grid": {"h": sol.grid.h, "scale": sc, "nx": sol.grid.nx, "ny": sol.grid.ny,
                 "origin": [sol.grid.origin.real, sol.grid.origin.imag]},
        "window": list(prof.window),
        "max_fit_residual": float(np.max(prof.residual)),
        "modulus": mod or None,
        "files": files,
    }
    if not csv_path:
        payload["frames"] = rows
    return payload, logs, timings


def cmd_modulus(cfg: RunConfig):
    spec = read_domain(cfg.domain_path)
    diag = validate(spec)
    if not diag.ok:
        raise UsageError("invalid domain: " + "; ".join(diag.failures()))
    if not geometry(spec).doubly_connected:
        raise UsageError("modulus needs a doubly connected domain")
    h = cfg.h * geometry(spec).scale if cfg.h else None
    res = modulus(spec, h)
    out = res.to_json()
    levels, secs = _strip_seconds(out["grid_levels"])
    out["grid_levels"] = levels
    return out, [], {"levels": secs}


def cmd_verify(cfg: RunConfig):
    suite = cfg.options.get("suite") or "paper"
    results = run_suite(suite, cfg.seed)
    table = summary_table(results)
    print(table, file=sys.stderr)
    payload = {
        "suite": suite,
        "seed": cfg.seed,
        "passed": sum(r.passed for r in results),
        "failed": sum(not r.passed for r in results),
        "checks": [r.record() for r in results],
    }
    return payload, [], {"checks": [r.seconds for r in results]}


COMMANDS = {
    "models": cmd_models,
    "lambda-map": cmd_lambda_map,
    "bt-profile": cmd_bt_profile,
    "lambda-pde": cmd_lambda_pde,
    "modulus": cmd_modulus,
    "verify": cmd_verify,
}

# validation failures (exit 2) versus numerical failures (exit 3)
INVALID = (UsageError, MapError, CurveError, GridError)
NUMERIC = (SolverError, ExpansionError, SeriesError, ProjectionError, FloatingPointError, ArithmeticError)


# ---------------------------------------------------------------------------
# argument parsing


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _number(s: str) -> float:
    """Float or fraction, e.g. 0.004 or 1/256."""
    try:
        return float(Fraction(s))
    except (ValueError, ZeroDivisionError) as exc:
        raise argparse.ArgumentTypeError(f"not a number: {s!r}") from exc


def _number_list(s: str) -> List[float]:
    return [_number(p) for p in s.replace(" ", "").split(",") if p]


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="lambda-lab", description=__doc__.split("\n")[0])
    p.add_argument("--version", action="version", version=f"lambda-lab {__version__}")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)

    def common(sp):
        sp.add_argument("--out", help="envelope JSON path (default: stdout)")

    sp = sub.add_parser("models", help="model constants c3 and the sharp bound for beta")
    sp.add_argument("--beta", type=_number)
    common(sp)

    for name, hlp in (("lambda-map", "exact lambda of the image of the model annulus"),
                      ("bt-profile", "A(t), B(t) along radii of the model annulus")):
        sp = sub.add_parser(name, help=hlp)
        sp.add_argument("--map", dest="map_path", help="Laurent series JSON {kmin, coeffs, rin, rout}")
        sp.add_argument("--beta", type=_number)
        sp.add_argument("--renormalize-outer", action="store_true", help="recompose with z -> beta/z if needed")
        common(sp)
        if name == "bt-profile":
            sp.add_argument("--n", type=int, default=200)
            sp.add_argument("--csv", help="CSV (t, A, B) path")
            sp.add_argument("--svg", dest="svg_path", help="SVG plot path")
            sp.add_argument("--emit-svg", action="store_true")

    sp = sub.add_parser("lambda-pde", help="PDE solve, boundary coefficients and lambda")
    sp.add_argument("--domain", dest="domain_path", help="domain JSON")
    sp.add_argument("--h", type=_number, help="grid spacing / domain scale (default 1/256)")
    sp.add_argument("--schedule", type=_number_list, help="stage offsets / domain scale, e.g. 0.04,0.02,0.01")
    sp.add_argument("--init", choices=["distance", "barrier"], default="distance")
    sp.add_argument("--method", choices=["normal_fit", "flux"], default="normal_fit")
    sp.add_argument("--frames", type=int, default=64)
    sp.add_argument("--field", help="binary field path")
    sp.add_argument("--quantity", choices=["u", "v"], default="u")
    sp.add_argument("--csv", help="per-frame CSV (s, kappa, c3, residual)")
    sp.add_argument("--report", dest="out", help="alias of --out")
    sp.add_argument("--svg", dest="svg_path")
    sp.add_argument("--emit-svg", action="store_true")
    common(sp)

    sp = sub.add_parser("modulus", help="conformal modulus beta of a doubly connected domain")
    sp.add_argument("--domain", dest="domain_path")
    sp.add_argument("--h", type=_number, help="coarse grid spacing / domain scale (default 1/128)")
    common(sp)

    sp = sub.add_parser("verify", help="run an acceptance suite")
    sp.add_argument("--suite", choices=["paper", "properties", "cross"], default="paper")
    sp.add_argument("--seed", type=int, default=0)
    common(sp)
    return p


def config_from_args(ns: argparse.Namespace) -> RunConfig:
    d = vars(ns).copy()
    base = {k: d.pop(k, None) for k in ("command", "domain_path", "map_path", "beta", "h", "schedule", "out")}
    emit = bool(d.pop("emit_svg", False)) or bool(d.get("svg_path"))
    seed = d.pop("seed", 0) or 0
    return RunConfig(emit_svg=emit, seed=seed, options=d, **base)


# ---------------------------------------------------------------------------
# envelope


def envelope(cfg: Optional[RunConfig], status: str, payload=None, error=None, logs=None, timings=None) -> dict:
    return {
        "tool_version": __version__,
        "command": cfg.command if cfg else None,
        "config": asdict(cfg) if cfg else None,
        "status": status,
        "payload": payload,
        "error": error,
        "logs": logs or [],
        "timings": timings or {},
    }


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, float) and not math.isfinite(obj):
        return None if math.isnan(obj) else ("inf" if obj > 0 else "-inf")
    return obj


def dumps(env: dict) -> str:
    return json.dumps(_jsonable(env), indent=2, sort_keys=True, allow_nan=False) + "\n"


def _emit(env: dict, out: Optional[str]):
    text = dumps(env)
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def run(cfg: RunConfig) -> int:
    t = time.perf_counter()
    try:
        cfg.check()
        payload, logs, timings = COMMANDS[cfg.command](cfg)
        code, status, err = EXIT_OK, "ok", None
        if cfg.command == "verify" and payload["failed"]:
            code, status = EXIT_NUMERIC, "checks_failed"
    except INVALID as exc:
        payload, logs, timings = None, [], {}
        code, status = EXIT_INVALID, "invalid"
        err = {"type": type(exc).__name__, "message": str(exc)}
    except NUMERIC as exc:
        payload, logs, timings = None, [], {}
        code, status = EXIT_NUMERIC, "numerical_failure"
        diag = getattr(exc, "diagnostics", None)
        err = {"type": type(exc).__name__, "message": str(exc), "diagnostics": diag}
        if diag and "log" in diag:
            err["diagnostics"] = {**diag, "log": _strip_seconds(diag["log"])[0]}
    except (ValueError, TypeError, KeyError) as exc:
        payload, logs, timings = None, [], {}
        code, status = EXIT_INVALID, "invalid"
        err = {"type": type(exc).__name__, "message": str(exc)}
    except Exception as exc:  # anything else is reported, not raised
        payload, logs, timings = None, [], {}
        code, status = EXIT_NUMERIC, "numerical_failure"
        err = {"type": type(exc).__name__, "message": str(exc), "diagnostics": None}
    timings = {**timings, "total": time.perf_counter() - t}
    _emit(envelope(cfg, status, payload, err, logs, timings), cfg.out)
    return code


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
        if ns.command is None:
            raise UsageError("a command is required: " + ", ".join(COMMANDS))
        cfg = config_from_args(ns)
    except UsageError as exc:
        _emit(envelope(None, "invalid", error={"type": "UsageError", "message": str(exc)}), None)
        return EXIT_INVALID
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
