"""``fcover`` command line.

Each subcommand writes one table, as CSV (default) or JSON, to ``-o`` or to
standard output.  Exit status: 0 on success, 1 on usage or input errors, 2
when a computation finished without a certified answer (infeasible,
unbounded or unconverged programs, violated checks).  The table is written
in every case, with the status in it.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import tempfile
import time
from dataclasses import dataclass, field, fields
from typing import Optional

import numpy as np

from . import __version__, lp
from .covering import (
    GridConfig,
    build_instance,
    covering_number,
    separation_number,
    volume_bounds,
)
from .function_space import TAIL_EPS, GridError, GridSpec, check_window, evaluate, support_box
from .parser import ExprDomainError, ExprSyntaxError, parse_expr

COMMANDS = ("cover", "separate", "bounds", "duality", "hadwiger", "konig-milman", "mposition",
            "transform", "facts")
NEEDS = {
    "cover": ("f", "g"),
    "separate": ("f", "g"),
    "bounds": ("f", "g"),
    "duality": ("f", "g"),
    "hadwiger": ("f",),
    "konig-milman": ("f", "g"),
    "mposition": ("f",),
    "transform": ("f",),
    "facts": (),
}
# windows cutting f off above this value are refused without --allow-truncation
REFUSE_TAIL = 1e-6
COVER_COLUMNS = ("step", "n_constraints", "n_atoms", "value_primal", "value_dual", "gap",
                 "lower_bound", "upper_bound", "status", "runtime_ms")


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    command: str = ""
    f: Optional[str] = None
    g: Optional[str] = None
    h: Optional[str] = None
    window: Optional[list] = None
    n: Optional[int] = None
    atoms: Optional[list] = None
    step: Optional[float] = None
    dim: Optional[int] = None
    p_list: Optional[list] = None
    lambdas: Optional[list] = None
    levels: int = 3
    trials: int = 50
    seed: int = 0
    output: Optional[str] = None
    format: Optional[str] = None
    plot: Optional[str] = None
    timing: bool = False
    reciprocity: bool = False
    allow_truncation: bool = False
    zoo: Optional[list] = None
    extra: dict = field(default_factory=dict)

    def validate(self):
        if self.command not in COMMANDS:
            raise UsageError(f"unknown command {self.command!r}; choose one of {', '.join(COMMANDS)}")
        for name in NEEDS[self.command]:
            if not getattr(self, name):
                raise UsageError(f"{self.command} needs --{name} (an expression such as \"gauss(1)\")")
        if self.window is not None and len(self.window) not in (2, 4):
            raise UsageError("--window takes 2 numbers in 1D or 4 in 2D")
        if self.atoms is not None and len(self.atoms) not in (3, 5):
            raise UsageError("--atoms takes lo hi N in 1D or lo1 hi1 lo2 hi2 N in 2D")
        if (self.window is None) != (self.n is None):
            raise UsageError("--window and --n go together")
        if self.atoms is not None and self.window is None:
            raise UsageError("--atoms needs --window and --n")
        if self.fmt() not in ("csv", "json"):
            raise UsageError(f"--format must be csv or json, got {self.format!r}")
        if self.lambdas is not None and any(not 0 < v < 1 for v in self.lambdas):
            raise UsageError("--lambdas must lie strictly between 0 and 1")
        if self.p_list is not None and any(p <= 1 for p in self.p_list):
            raise UsageError("--p values must exceed 1")

    def fmt(self) -> str:
        if self.format:
            return self.format
        if self.output and self.output.endswith(".json"):
            return "json"
        return "csv"


# ----------------------------------------------------------------------------
# argument parsing


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _floats(text: str) -> list:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma separated numbers, got {text!r}")


def _common(p: argparse.ArgumentParser):
    p.add_argument("--config", help="JSON file with RunConfig fields; flags override it")
    p.add_argument("--f")
    p.add_argument("--g")
    p.add_argument("--h")
    p.add_argument("--window", nargs="+", type=float, help="constraint window lo hi [lo2 hi2]")
    p.add_argument("--n", type=int, help="constraint points per axis")
    p.add_argument("--atoms", nargs="+", type=float, help="atom window lo hi [lo2 hi2] and points per axis")
    p.add_argument("--step", type=float, help="lattice step for automatic grids")
    p.add_argument("--dim", type=int, choices=(1, 2))
    p.add_argument("--p", dest="p_list", type=_floats, help="exponents for the volume bounds, e.g. 1.5,2,3")
    p.add_argument("--lambdas", type=_floats, help="scaling parameters, e.g. 0.8,0.9,0.95")
    p.add_argument("--levels", type=int)
    p.add_argument("--trials", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--zoo", nargs="+", help="test functions for mposition")
    p.add_argument("-o", "--output")
    p.add_argument("--format", choices=("csv", "json"))
    p.add_argument("--plot", help="SVG file for scan plots")
    p.add_argument("--timing", action="store_true", default=None,
                   help="record wall-clock runtime_ms (output is then not reproducible)")
    p.add_argument("--allow-truncation", action="store_true", default=None,
                   help="accept a --window that cuts off a visible part of f")
    p.add_argument("--reciprocity", action="store_true", default=None,
                   help="konig-milman: rerun with the roles of the duals swapped")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="fcover", description="Functional covering numbers on grids.")
    p.add_argument("--version", action="version", version=f"fcover {__version__}")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)
    for name in COMMANDS:
        _common(sub.add_parser(name))
    p.add_argument("--config", dest="top_config", help="run a JSON config file")
    return p


def load_config(argv) -> RunConfig:
    args = build_parser().parse_args(argv)
    cfg = RunConfig()
    path = getattr(args, "config", None) or getattr(args, "top_config", None)
    if path:
        try:
            with open(path) as fh:
                data = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config {path}: {exc}")
        known = {f.name for f in fields(RunConfig)}
        unknown = set(data) - known - {"schema"}
        if unknown:
            raise UsageError(f"unknown config keys: {', '.join(sorted(unknown))}")
        for k, v in data.items():
            if k in known:
                setattr(cfg, k, v)
    for k, v in vars(args).items():
        if k in ("config", "top_config") or v is None:
            continue
        setattr(cfg, k, v)
    cfg.validate()
    return cfg


# ----------------------------------------------------------------------------
# output


def fmt_value(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return f"{v:.17g}"
    return str(v)


def _json_value(v):
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return v if math.isfinite(v) else fmt_value(v)
    if isinstance(v, dict):
        return {str(k): _json_value(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_json_value(x) for x in v]
    return v


def render(rows: list, meta: dict, cfg: RunConfig) -> str:
    if cfg.fmt() == "json":
        doc = {"schema": 1, "command": cfg.command, "meta": _json_value(meta),
               "rows": [_json_value(r) for r in rows]}
        return json.dumps(doc, indent=2, sort_keys=True) + "\n"
    buf = io.StringIO()
    cols = []
    for r in rows:
        cols.extend(k for k in r if k not in cols)
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(cols)
    for r in rows:
        w.writerow([fmt_value(r[c]) if c in r else "" for c in cols])
    return buf.getvalue()


def write_atomic(path: str, text: str):
    """Write via a temporary file in the target directory and rename."""
    d = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".fcover-", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def svg_plot(series: list, xlabel: str, ylabel: str, title: str = "") -> str:
    """Polylines with axes and tick labels; ``series`` holds ``(name, xs, ys)``."""
    W, H, L, R, T, B = 480, 320, 60, 20, 30, 45
    xs = [x for _, sx, _ in series for x in sx if math.isfinite(x)]
    ys = [y for _, _, sy in series for y in sy if math.isfinite(y)]
    x0, x1 = min(xs), max(xs)
    y0, y1 = min(ys), max(ys)
    if x1 == x0:
        x0, x1 = x0 - 0.5, x1 + 0.5
    if y1 == y0:
        y0, y1 = y0 - 0.5, y1 + 0.5
    pad = 0.05 * (y1 - y0)
    y0, y1 = y0 - pad, y1 + pad

    def px(x):
        return L + (x - x0) / (x1 - x0) * (W - L - R)

    def py(y):
        return H - B - (y - y0) / (y1 - y0) * (H - T - B)

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">',
        f"<!-- fcover {__version__} -->",
        '<rect width="100%" height="100%" fill="white"/>',
        f'<line x1="{L}" y1="{H - B}" x2="{W - R}" y2="{H - B}" stroke="black"/>',
        f'<line x1="{L}" y1="{T}" x2="{L}" y2="{H - B}" stroke="black"/>',
    ]
    for k in range(5):
        xv = x0 + k * (x1 - x0) / 4
        yv = y0 + k * (y1 - y0) / 4
        out.append(f'<line x1="{px(xv):.2f}" y1="{H - B}" x2="{px(xv):.2f}" y2="{H - B + 4}" stroke="black"/>')
        out.append(f'<text x="{px(xv):.2f}" y="{H - B + 16}" font-size="10" text-anchor="middle">{xv:.4g}</text>')
        out.append(f'<line x1="{L - 4}" y1="{py(yv):.2f}" x2="{L}" y2="{py(yv):.2f}" stroke="black"/>')
        out.append(f'<text x="{L - 6}" y="{py(yv) + 3:.2f}" font-size="10" text-anchor="end">{yv:.4g}</text>')
    out.append(f'<text x="{(L + W - R) / 2}" y="{H - 8}" font-size="12" text-anchor="middle">{xlabel}</text>')
    out.append(f'<text x="14" y="{(T + H - B) / 2}" font-size="12" text-anchor="middle" '
               f'transform="rotate(-90 14 {(T + H - B) / 2})">{ylabel}</text>')
    if title:
        out.append(f'<text x="{(L + W - R) / 2}" y="18" font-size="13" text-anchor="middle">{title}</text>')
    colors = ["#1f4e9c", "#b03a2e", "#2e7d32", "#6a1b9a"]
    for i, (name, sx, sy) in enumerate(series):
        pts = " ".join(f"{px(x):.2f},{py(y):.2f}" for x, y in zip(sx, sy) if math.isfinite(y))
        c = colors[i % len(colors)]
        out.append(f'<polyline fill="none" stroke="{c}" stroke-width="1.5" points="{pts}"/>')
        out.append(f'<text x="{W - R - 4}" y="{T + 14 * (i + 1)}" font-size="10" fill="{c}" '
                   f'text-anchor="end">{name}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


# ----------------------------------------------------------------------------
# commands


def _expr(text: Optional[str]):
    return None if text is None else parse_expr(text)


def _grid_config(cfg: RunConfig, f, g) -> GridConfig:
    dim = cfg.dim or (2 if cfg.window is not None and len(cfg.window) == 4 else None)
    if cfg.window is None:
        step = cfg.step or (0.05 if (dim or 1) == 1 else 0.25)
        return GridConfig.auto(f, g, step, dim=dim)
    d = len(cfg.window) // 2
    lo, hi = cfg.window[0::2], cfg.window[1::2]
    cons = GridSpec(tuple(lo), tuple(hi), (cfg.n,) * d)
    _check_truncation(f, cons, cfg.allow_truncation)
    if cfg.atoms is None:
        gb = support_box(g, d)
        pad = np.zeros(d) if gb is None else np.maximum(np.abs(gb[0]), np.abs(gb[1]))
        step = cons.step
        alo = np.array(lo) - np.ceil(pad / step) * step
        ahi = np.array(hi) + np.ceil(pad / step) * step
        pts = tuple(int(round(v)) + 1 for v in (ahi - alo) / step)
        return GridConfig(cons, GridSpec(tuple(alo), tuple(ahi), pts))
    if len(cfg.atoms) != 2 * d + 1:
        raise UsageError("--atoms must match the dimension of --window")
    a = cfg.atoms
    return GridConfig(cons, GridSpec(tuple(a[0:2 * d:2]), tuple(a[1:2 * d:2]), (int(a[-1]),) * d))


def _check_truncation(f, grid: GridSpec, allowed: bool):
    if check_window(f, grid):
        return
    if not allowed and not check_window(f, grid, REFUSE_TAIL):
        raise UsageError(f"--window {grid.lo}..{grid.hi} cuts off {f} where it still exceeds "
                         f"{REFUSE_TAIL:g}; widen the window or pass --allow-truncation")
    print(f"fcover: warning: {f} exceeds {TAIL_EPS:g} at the window boundary", file=sys.stderr)


def _cover_row(res, cfg: RunConfig) -> dict:
    row = res.row()
    if not cfg.timing:
        row["runtime_ms"] = 0.0
    return {c: row[c] for c in COVER_COLUMNS}


def cmd_cover(cfg: RunConfig):
    f, g, h = _expr(cfg.f), _expr(cfg.g), _expr(cfg.h)
    gc = _grid_config(cfg, f, g)
    res = covering_number(build_instance(f, g, h, gc))
    meta = {"witness": list(res.witness) if res.witness else None}
    return [_cover_row(res, cfg)], meta, res.optimal


def cmd_separate(cfg: RunConfig):
    f, g, h = _expr(cfg.f), _expr(cfg.g), _expr(cfg.h)
    gc = _grid_config(cfg, f, g)
    res = separation_number(f, g, h, gc, bounds=True)
    return [_cover_row(res, cfg)], {}, res.optimal


def cmd_bounds(cfg: RunConfig):
    f, g, h = _expr(cfg.f), _expr(cfg.g), _expr(cfg.h)
    gc = _grid_config(cfg, f, g)
    rep = volume_bounds(f, g, cfg.p_list, h, gc)
    rows = [{"bound": "lower_ratio", "value": rep.lower_ratio},
            {"bound": "lower_sq", "value": rep.lower_sq}]
    rows += [{"bound": f"upper_p{p:g}", "value": v} for p, v in rep.upper_p.items()]
    rows.append({"bound": "upper_sq", "value": rep.upper_sq})
    if rep.even_variant is not None:
        rows += [{"bound": "even_lower", "value": rep.even_variant[0]},
                 {"bound": "even_upper", "value": rep.even_variant[1]}]
    if rep.weighted_variant is not None:
        rows += [{"bound": f"weighted_{k}", "value": v} for k, v in rep.weighted_variant.items()]
    rows += [{"bound": "best_lower", "value": rep.best_lower()},
             {"bound": "best_upper", "value": rep.best_upper()}]
    return rows, {"step": rep.step}, True


def cmd_duality(cfg: RunConfig):
    from .experiments import duality_gap_study

    f, g, h = _expr(cfg.f), _expr(cfg.g), _expr(cfg.h)
    gc = _grid_config(cfg, f, g)
    st = duality_gap_study(f, g, h, gc, levels=cfg.levels)
    rows = [{"kind": "refine", "step": s, "k": "", "value_primal": n, "value_dual": m, "gap": gap,
             "mass": mass} for s, n, m, gap, mass in st.rows]
    rows += [{"kind": "kernel", "step": gc.step, "k": k, "value_primal": v, "value_dual": "",
              "gap": "", "mass": ""} for k, v in zip(st.k_values, st.k_covering)]
    rows.append({"kind": "limit", "step": gc.step, "k": "inf", "value_primal": st.k_limit,
                 "value_dual": "", "gap": "", "mass": ""})
    ok = all(math.isfinite(r[3]) for r in st.rows)
    if cfg.plot:
        write_atomic(cfg.plot, svg_plot([("N(f, g_k)", [1 / k for k in st.k_values], list(st.k_covering))],
                                        "1/k", "covering number", "decreasing kernels"))
    return rows, {"limit_rel_error": st.limit_rel_error}, ok


def cmd_hadwiger(cfg: RunConfig):
    from .experiments import ExperimentConfig, hadwiger_scan

    f = _expr(cfg.f)
    lambdas = cfg.lambdas or [0.8, 0.9, 0.95]
    scan = hadwiger_scan(f, lambdas, ExperimentConfig(step=cfg.step), cfg.dim)
    rows = []
    for r in scan.rows():
        r.update({"even": scan.even, "bound": scan.bound, "extrapolated_limit": scan.extrapolated_limit})
        rows.append(r)
    if cfg.plot:
        lam = list(scan.lambdas)
        write_atomic(cfg.plot, svg_plot([("N(f, f_lambda)", lam, list(scan.values)),
                                         ("lower", lam, list(scan.lower)),
                                         ("upper", lam, list(scan.upper))],
                                        "lambda", "covering number", str(f)))
    meta = {"extrapolated_limit": scan.extrapolated_limit, "even": scan.even,
            "bound": scan.bound, "monotone": scan.monotone}
    return rows, meta, scan.extrapolated_limit <= scan.bound * 1.1


def cmd_konig_milman(cfg: RunConfig):
    from .experiments import ExperimentConfig, konig_milman, konig_milman_swapped

    ec = ExperimentConfig(step=cfg.step)
    rep = konig_milman(_expr(cfg.f), _expr(cfg.g), ec, cfg.dim)
    row = {"N_fg": rep.N_fg, "N_dual": rep.N_dual, "ratio_per_dim": rep.ratio_per_dim,
           "within_constant": rep.within_constant}
    if cfg.reciprocity:
        sw = konig_milman_swapped(rep, ec)
        row["swapped_ratio_per_dim"] = sw.ratio_per_dim
        row["reciprocity_error"] = abs(rep.ratio_per_dim * sw.ratio_per_dim - 1)
    return [row], {"dim": rep.dim}, rep.within_constant


def cmd_mposition(cfg: RunConfig):
    from .experiments import ExperimentConfig, mposition, mposition_equivalence

    ec = ExperimentConfig(step=cfg.step)
    zoo = [parse_expr(t) for t in cfg.zoo] if cfg.zoo else None
    f = _expr(cfg.f)
    rep = mposition(f, ec, zoo, cfg.dim)
    eq = mposition_equivalence(f, ec, report=rep)
    row = {"T_f": " ".join(fmt_value(v) for v in rep.T_f.ravel())}
    row.update({"N_f_g0": rep.N_f_g0, "N_g0_f": rep.N_g0_f, "N_fdual_g0": rep.N_fdual_g0,
                "N_g0_fdual": rep.N_g0_fdual, "constant_estimate": rep.constant_estimate,
                "Kf_volume": rep.Kf_volume, "Kfstar_volume": rep.Kfstar_volume,
                "integral": rep.integral, "santalo": rep.santalo,
                "volume_constant": rep.volume_constant, "reverse_bm_constant": rep.reverse_bm_constant,
                "polar_inner_ok": rep.polar.inner_ok, "polar_outer_ok": rep.polar.outer_ok,
                "implied_covering_constant": eq.implied_covering_constant,
                "volume_from_covering_ok": eq.volume_from_covering_ok,
                "covering_from_volume_ok": eq.covering_from_volume_ok})
    meta = {"rbm_checks": [list(r) for r in rep.rbm_checks],
            "reverse_bm": [list(r) for r in rep.reverse_bm],
            "chain_bounds": eq.chain_bounds}
    ok = eq.volume_from_covering_ok and eq.covering_from_volume_ok
    return [row], meta, ok


def cmd_transform(cfg: RunConfig):
    from .transforms import default_dual_grid, log_dual

    f = _expr(cfg.f)
    if cfg.window is not None:
        d = len(cfg.window) // 2
        grid = GridSpec(tuple(cfg.window[0::2]), tuple(cfg.window[1::2]), (cfg.n,) * d)
        _check_truncation(f, grid, cfg.allow_truncation)
    else:
        dim = cfg.dim or f.dim or 1
        box = support_box(f, dim)
        if box is None:
            raise UsageError("transform of a function without bounded support needs --window/--n")
        grid = GridSpec.from_step(box[0], box[1], cfg.step or 0.05)
    sf = evaluate(f, grid)
    dual = default_dual_grid(sf)
    fd = log_dual(sf, dual)
    nodes = dual.nodes()
    names = ["y"] if dual.dim == 1 else ["y1", "y2"]
    rows = []
    for p, v in zip(nodes, fd.values):
        r = {n: float(c) for n, c in zip(names, p)}
        r["f_dual"] = float(v)
        rows.append(r)
    return rows, {"dual_lo": list(dual.lo), "dual_hi": list(dual.hi)}, True


def cmd_facts(cfg: RunConfig):
    from .facts import run_suite

    checks = run_suite(seed=cfg.seed, trials=cfg.trials, dim=cfg.dim or 1, step=cfg.step)
    rows = [c.row() for c in checks]
    return rows, {"passed": sum(c.ok for c in checks), "total": len(checks)}, all(c.ok for c in checks)


HANDLERS = {
    "cover": cmd_cover,
    "separate": cmd_separate,
    "bounds": cmd_bounds,
    "duality": cmd_duality,
    "hadwiger": cmd_hadwiger,
    "konig-milman": cmd_konig_milman,
    "mposition": cmd_mposition,
    "transform": cmd_transform,
    "facts": cmd_facts,
}


def run(cfg: RunConfig) -> int:
    t0 = time.perf_counter()
    rows, meta, ok = HANDLERS[cfg.command](cfg)
    if cfg.timing:
        meta["runtime_ms"] = (time.perf_counter() - t0) * 1e3
    text = render(rows, meta, cfg)
    if cfg.output:
        write_atomic(cfg.output, text)
    else:
        sys.stdout.write(text)
    return 0 if ok else 2


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    try:
        cfg = load_config(argv)
        return run(cfg)
    except UsageError as exc:
        print(f"fcover: {exc}", file=sys.stderr)
        print("usage: fcover {" + ",".join(COMMANDS) + "} [options]; see fcover <command> --help",
              file=sys.stderr)
        return 1
    except (ExprSyntaxError, ExprDomainError, GridError, ValueError) as exc:
        print(f"fcover: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"fcover: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
