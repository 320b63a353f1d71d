"""Command-line interface: ``fracsymm <subcommand> [options]``.

Subcommands and their CSV outputs (floats printed with 17 significant digits):

  kernel        kernel.csv      N,s,r,rho,theta,method,est_error
  rearrange     rearrange.csv   sigma,ustar,ustarstar,concentration
  solve-radial  radial.csv      r,value[,exact]   plus report.txt (key=value)
  solve-planar  planar.csv      x,y,value          plus report.txt
  verify        verify.csv      target,instance,holds,margin,tolerance,detail
                curves_<instance>.csv  sigma,C_u,C_v  (and .svg with --plot)
                lemmas.csv      suite,instances,violations,skipped,worst_margin,tolerance
  report        summary.txt     aggregated pass/fail counts of verify.csv

Every run writes ``manifest.txt`` (key = value) into the output directory,
which defaults to $FRACSYMM_OUT or ./fracsymm-out.  Options may also come
from ``--config FILE`` with ``key = value`` lines and ``#`` comments;
command-line flags win over the file.

Exit codes: 0 success, 1 verification failure, 2 usage error, 3 numerical
failure.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from ._backend import BACKEND
from .specfun import DomainError, KernelParams

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2, 3


class UsageError(Exception):
    pass


def fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return format(float(x) + 0.0, ".17g")
    return str(x)


def _write_csv(path: Path, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) for v in row])


def _write_kv(path: Path, items):
    with open(path, "w", encoding="utf-8") as fh:
        for k, v in items:
            fh.write(f"{k} = {fmt(v)}\n")


def parse_config(text: str) -> dict:
    """Flat ``key = value`` lines; ``#`` starts a comment."""
    out = {}
    for n, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, val = line.partition("=")
        if not sep or not key.strip():
            raise UsageError(f"config line {n}: expected 'key = value'")
        out[key.strip().replace("-", "_")] = val.strip()
    return out


def git_blob_hash(data: bytes) -> str:
    """Content hash computed the way git hashes a blob."""
    return hashlib.sha1(b"blob %d\0" % len(data) + data).hexdigest()


# ---------------------------------------------------------------- parser

def _floats(text):
    try:
        return [float(v) for v in str(text).split(",") if v.strip()]
    except ValueError as exc:
        raise UsageError(f"expected comma-separated numbers, got {text!r}") from exc


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="fracsymm", description=__doc__.split("\n\n")[0],
                                 formatter_class=argparse.RawDescriptionHelpFormatter,
                                 epilog=__doc__.split("\n\n", 1)[1])
    ap.add_argument("--version", action="version", version=f"fracsymm {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", help="output directory (default $FRACSYMM_OUT or ./fracsymm-out)")
    common.add_argument("--config", help="key = value configuration file")
    common.add_argument("--seed", type=int, default=None, help="random seed (default 0)")
    common.add_argument("--threads", type=int, default=None,
                        help="worker threads for independent jobs (default: CPU count)")
    common.add_argument("--plot", action="store_true", default=None, help="also write SVG plots")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("kernel", parents=[common], help="tabulate Theta_{N,s}(r, rho)")
    p.add_argument("--N", type=int)
    p.add_argument("--s", help="comma-separated orders")
    p.add_argument("--r", help="comma-separated radii r")
    p.add_argument("--rho", help="comma-separated radii rho")
    p.add_argument("--method", choices=["auto", "quadrature", "hypergeometric"])

    p = sub.add_parser("rearrange", parents=[common], help="decreasing rearrangement of a CSV sample")
    p.add_argument("--input", help="CSV with value,weight rows")

    p = sub.add_parser("solve-radial", parents=[common], help="radial solve on a ball")
    p.add_argument("--N", type=int)
    p.add_argument("--s", type=float)
    p.add_argument("--R", type=float)
    p.add_argument("--M", type=int)
    p.add_argument("--gamma", type=float)
    p.add_argument("--c", type=float)
    p.add_argument("--rhs", help="const:<v> | torsion-check | file:<csv of r,value>")
    p.add_argument("--k-max", dest="k_max", type=int)

    p = sub.add_parser("solve-planar", parents=[common], help="planar collocation solve")
    p.add_argument("--shape", help="disk:R | square:L | ellipse:a,b")
    p.add_argument("--h", type=float)
    p.add_argument("--s", type=float)
    p.add_argument("--gamma", type=float)
    p.add_argument("--c", type=float)
    p.add_argument("--f", help="const:v | gauss:x0,y0,sigma,amp")
    p.add_argument("--k-max", dest="k_max", type=int)

    p = sub.add_parser("verify", parents=[common], help="run theorem and lemma checks")
    p.add_argument("target", choices=["thm1", "thm2", "regularity", "energy", "lemmas", "all"])
    p.add_argument("--shape")
    p.add_argument("--f")
    p.add_argument("--gamma", type=float)
    p.add_argument("--s", type=float)
    p.add_argument("--h", type=float)
    p.add_argument("--M", type=int)
    p.add_argument("--k-max", dest="k_max", type=int)
    p.add_argument("--tol", type=float)

    p = sub.add_parser("report", parents=[common], help="summarize verify.csv in the output directory")
    return ap


DEFAULTS = {
    "kernel": dict(N=2, s="0.5", r="0.5", rho="1.0", method="auto"),
    "rearrange": dict(input=None),
    "solve-radial": dict(N=2, s=0.5, R=1.0, M=128, gamma=0.0, c=0.0, rhs="const:1", k_max=1024),
    "solve-planar": dict(shape="disk:1", h=1.0 / 32.0, s=0.5, gamma=0.0, c=0.0, f="const:1",
                         k_max=1024),
    "verify": dict(shape="square:2", f="const:1", gamma=1.0, s=0.5, h=1.0 / 32.0, M=128,
                   k_max=1024, tol=0.01),
    "report": dict(),
}
COMMON = dict(seed=0, threads=None, plot=False)
_INT_KEYS = {"N", "M", "k_max", "seed", "threads"}
_FLOAT_KEYS = {"R", "gamma", "c", "h", "tol"}


def _resolve(ns) -> dict:
    """defaults <- config file <- explicit flags."""
    cmd = ns.command
    opts = dict(COMMON, **DEFAULTS[cmd])
    cfg_text = ""
    if ns.config:
        try:
            cfg_text = Path(ns.config).read_text(encoding="utf-8")
        except OSError as exc:
            raise UsageError(f"cannot read config: {exc}") from exc
        cfg = parse_config(cfg_text)
        for k, v in cfg.items():
            if k not in opts:
                raise UsageError(f"unknown config key {k!r} for {cmd}")
            try:
                if k in _INT_KEYS:
                    v = int(v)
                elif k in _FLOAT_KEYS or (k == "s" and cmd != "kernel"):
                    v = float(v)
                elif k == "plot":
                    v = v.lower() in ("1", "true", "yes")
            except ValueError as exc:
                raise UsageError(f"bad value for {k}: {v!r}") from exc
            opts[k] = v
    for k, v in vars(ns).items():
        if k in opts and v is not None:
            opts[k] = v
    opts["command"] = cmd
    if cmd == "verify":
        opts["target"] = ns.target
    if opts["threads"] is None:
        opts["threads"] = os.cpu_count() or 1
    if opts["threads"] < 1:
        raise UsageError("--threads must be >= 1")
    out = ns.out or os.environ.get("FRACSYMM_OUT") or "fracsymm-out"
    opts["out"] = out
    opts["_config_text"] = cfg_text
    return opts


def _manifest(out: Path, opts: dict, extra=()):
    canon = "".join(f"{k} = {fmt(v)}\n" for k, v in sorted(opts.items())
                    if not k.startswith("_") and k not in ("out", "threads"))
    items = [("version", __version__), ("backend", BACKEND), ("command", opts["command"])]
    items += [(k, v) for k, v in sorted(opts.items())
              if not k.startswith("_") and k not in ("command",)]
    items += [("config_hash", git_blob_hash(canon.encode("utf-8")))]
    if opts.get("_config_text"):
        items.append(("config_file_hash", git_blob_hash(opts["_config_text"].encode("utf-8"))))
    items += list(extra)
    _write_kv(out / "manifest.txt", items)


# ------------------------------------------------------------------- SVG

def svg_overlay(series: dict, title: str, width: int = 640, height: int = 400) -> str:
    """Polyline plot of several (x, y) series; only polylines and text."""
    colors = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"]
    xs = np.concatenate([np.asarray(x, float) for x, _ in series.values()])
    ys = np.concatenate([np.asarray(y, float) for _, y in series.values()])
    x0, x1 = float(np.min(xs)), float(np.max(xs))
    y0, y1 = float(np.min(ys)), float(np.max(ys))
    x1 = x1 if x1 > x0 else x0 + 1.0
    y1 = y1 if y1 > y0 else y0 + 1.0
    ml, mr, mt, mb = 60, 20, 30, 40
    W, H = width - ml - mr, height - mt - mb

    def px(x, y):
        return ml + W * (x - x0) / (x1 - x0), mt + H * (1.0 - (y - y0) / (y1 - y0))

    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">',
             f'<text x="{width / 2:.1f}" y="18" text-anchor="middle" font-size="14">{title}</text>',
             f'<polyline fill="none" stroke="black" points="{ml},{mt} {ml},{mt + H} {ml + W},{mt + H}"/>',
             f'<text x="{ml}" y="{mt + H + 16}" font-size="11">{x0:.3g}</text>',
             f'<text x="{ml + W}" y="{mt + H + 16}" text-anchor="end" font-size="11">{x1:.3g}</text>',
             f'<text x="{ml - 4}" y="{mt + H}" text-anchor="end" font-size="11">{y0:.3g}</text>',
             f'<text x="{ml - 4}" y="{mt + 10}" text-anchor="end" font-size="11">{y1:.3g}</text>']
    for i, (name, (x, y)) in enumerate(series.items()):
        x = np.asarray(x, float)
        y = np.asarray(y, float)
        if len(x) > 2000:
            idx = np.unique(np.linspace(0, len(x) - 1, 2000).astype(int))
            x, y = x[idx], y[idx]
        pts = " ".join("%.2f,%.2f" % px(a, b) for a, b in zip(x, y))
        col = colors[i % len(colors)]
        parts.append(f'<polyline fill="none" stroke="{col}" stroke-width="1.5" points="{pts}"/>')
        parts.append(f'<text x="{ml + W - 4}" y="{mt + 16 * (i + 1)}" text-anchor="end" '
                     f'font-size="12" fill="{col}">{name}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


# ------------------------------------------------------------ subcommands

def cmd_kernel(opts, out: Path) -> int:
    from .kernel import theta, theta_hypergeometric, theta_quadrature

    N = int(opts["N"])
    svals = _floats(opts["s"])
    rs, rhos = _floats(opts["r"]), _floats(opts["rho"])
    fn = {"auto": theta, "quadrature": theta_quadrature,
          "hypergeometric": theta_hypergeometric}[opts["method"]]
    jobs = [(s, r, rho) for s in svals for r in rs for rho in rhos]

    def one(job):
        s, r, rho = job
        ev = fn(KernelParams(N, s), r, rho)
        return (N, s, r, rho, ev.value, ev.method, ev.est_error)

    with ThreadPoolExecutor(max_workers=opts["threads"]) as pool:
        rows = list(pool.map(one, jobs))
    _write_csv(out / "kernel.csv", ["N", "s", "r", "rho", "theta", "method", "est_error"], rows)
    return EXIT_OK


def _read_pairs(path):
    vals, wts = [], []
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            for row in csv.reader(fh):
                if not row or row[0].strip().startswith("#"):
                    continue
                try:
                    a, b = float(row[0]), float(row[1])
                except (ValueError, IndexError):
                    if not vals:     # header line
                        continue
                    raise UsageError(f"bad CSV row {row!r} in {path}")
                vals.append(a)
                wts.append(b)
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc}") from exc
    if not vals:
        raise UsageError(f"no data rows in {path}")
    return np.array(vals), np.array(wts)


def cmd_rearrange(opts, out: Path) -> int:
    from .rearrange import WeightedSample, decreasing_rearrangement

    if not opts["input"]:
        raise UsageError("rearrange needs --input")
    vals, wts = _read_pairs(opts["input"])
    try:
        sample = WeightedSample(vals, wts)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    us = decreasing_rearrangement(sample)
    cum = us.cumulative()[1:]
    sig = us.breakpoints[1:]
    rows = zip(sig, us.plateau_values, cum / sig, cum)
    _write_csv(out / "rearrange.csv", ["sigma", "ustar", "ustarstar", "concentration"], rows)
    return EXIT_OK


def cmd_solve_radial(opts, out: Path) -> int:
    from .radial import (RadialFunction, assemble_gagliardo_radial, default_schedule,
                         make_radial_mesh, solve_linear_radial, solve_singular_radial,
                         torsion_on_grid)

    p = KernelParams(int(opts["N"]), float(opts["s"]))
    grid = make_radial_mesh(float(opts["R"]), int(opts["M"]), p)
    rhs = str(opts["rhs"])
    gamma = float(opts["gamma"])
    check = rhs == "torsion-check"
    if check:
        if gamma != 0.0 or float(opts["c"]) != 0.0:
            raise UsageError("torsion-check needs --gamma 0 and --c 0")
        F = np.ones(grid.M + 1)
    elif rhs.startswith("const:"):
        F = np.full(grid.M + 1, _floats(rhs[6:])[0])
    elif rhs.startswith("file:"):
        rr, vv = _read_pairs(rhs[5:])
        F = np.interp(grid.nodes, rr, vv)
    else:
        raise UsageError(f"bad --rhs {rhs!r}")
    gmat = assemble_gagliardo_radial(grid)
    report = []
    if gamma == 0.0:
        sol = solve_linear_radial(grid, F, float(opts["c"]), gmat=gmat)
    else:
        res = solve_singular_radial(grid, F, gamma, float(opts["c"]),
                                    default_schedule(int(opts["k_max"])), gmat=gmat)
        sol = res.solution
        report = list(res.report.as_dict().items())
    status = EXIT_OK
    if check:
        exact = torsion_on_grid(grid)
        err = float(np.max(np.abs(sol.values - exact)) / np.max(exact))
        inner = exact > 0.0
        pointwise = float(np.max(np.abs(sol.values[inner] - exact[inner]) / exact[inner]))
        report += [("torsion_max_rel_error", err), ("torsion_tolerance", 0.02),
                   ("torsion_pass", err <= 0.02), ("torsion_pointwise_rel_error", pointwise)]
        _write_csv(out / "radial.csv", ["r", "value", "exact"], zip(grid.nodes, sol.values, exact))
        status = EXIT_OK if err <= 0.02 else EXIT_FAIL
    else:
        _write_csv(out / "radial.csv", ["r", "value"], zip(grid.nodes, sol.values))
    _write_kv(out / "report.txt", report)
    return status


def cmd_solve_planar(opts, out: Path) -> int:
    from .analysis import parse_rhs
    from .planar import (GridFunction2D, assemble_operator_2d, build_domain, solve_linear_2d,
                         solve_singular_2d)
    from .radial import default_schedule

    dom = build_domain(opts["shape"], float(opts["h"]))
    op = assemble_operator_2d(dom, float(opts["s"]))
    F = GridFunction2D(dom, parse_rhs(opts["f"]).planar(dom))
    gamma = float(opts["gamma"])
    report = []
    if gamma == 0.0:
        u = solve_linear_2d(op, F, float(opts["c"]))
    else:
        res = solve_singular_2d(dom, F, gamma, float(opts["c"]),
                                default_schedule(int(opts["k_max"])), op=op)
        u = res.solution
        report = list(res.report.as_dict().items())
    x, y = dom.centers.T
    _write_csv(out / "planar.csv", ["x", "y", "value"], zip(x, y, u.values))
    _write_kv(out / "report.txt", [("cells", dom.n), ("area", dom.area)] + report)
    return EXIT_OK


def _verify_jobs(opts) -> list:
    """(target, instance name, callable) triples, in output order."""
    from . import analysis as A

    target = opts["target"]
    base = A.ProblemSpec(shape=opts["shape"], f=opts["f"], gamma=float(opts["gamma"]),
                         s=float(opts["s"]), h=float(opts["h"]), M=int(opts["M"]),
                         k_max=int(opts["k_max"]), tol=float(opts["tol"]))
    tag = f"{base.shape}|{base.f}|g{fmt(base.gamma)}|s{fmt(base.s)}".replace(",", ";")
    jobs = []
    if target in ("thm1", "all"):
        jobs.append(("thm1", tag, lambda: A.verify_theorem1(base)))
    if target in ("thm2", "all"):
        jobs.append(("thm2", tag, lambda: A.verify_theorem2(base)))
    if target in ("energy", "all"):
        jobs.append(("energy", tag, lambda: A.energy_instance(base)))
    if target in ("regularity", "all"):
        for N, s, p in ((3, 0.3, 3.0), (3, 0.5, 3.0), (2, 0.5, 4.0)):
            jobs.append(("regularity", f"N{N}|s{s}|p{p:g}",
                         lambda N=N, s=s, p=p: A.verify_regularity(p, 1.0, KernelParams(N, s))))
    if target in ("lemmas", "all"):
        seed = int(opts["seed"])
        jobs.append(("lemmas", "maxmin", lambda: A.maxmin_random_suite(1000, seed)))
        jobs.append(("lemmas", "ab", lambda: A.ab_random_suite(100_000, seed)))
        jobs.append(("lemmas", "chain_rule", lambda: A.chain_rule_random_suite(300, seed)))
        jobs.append(("lemmas", "riesz", lambda: A.riesz_random_suite(100, 32, seed)))
    return jobs


def _verify_row(target, inst, res):
    from .analysis import EnergyResult, LemmaReport, RegularityReport, Verification

    curves = None
    if isinstance(res, Verification):
        rep, curves = res
        return (target, inst, rep.holds, rep.worst_margin, rep.tolerance,
                f"worst_volume={fmt(rep.worst_volume)};C_v_total={fmt(rep.cv_total)}"), curves
    if isinstance(res, EnergyResult):
        return (target, inst, res.holds, res.lhs - res.rhs * (1.0 + res.tolerance),
                res.tolerance, f"lhs={fmt(res.lhs)};rhs={fmt(res.rhs)}"), None
    if isinstance(res, RegularityReport):
        return (target, inst, res.stable, res.spread, 1e-3,
                f"regime={res.regime};ratio={fmt(res.ratios[0])}"), None
    if isinstance(res, LemmaReport):
        return (target, inst, res.passed, res.worst_margin, res.tolerance,
                f"instances={res.instances_run};violations={res.violations};skipped={res.skipped}"), None
    raise TypeError(type(res))


def cmd_verify(opts, out: Path) -> int:
    jobs = _verify_jobs(opts)
    with ThreadPoolExecutor(max_workers=opts["threads"]) as pool:
        futures = [pool.submit(fn) for _, _, fn in jobs]
        results = [f.result() for f in futures]
    rows = []
    for (target, inst, _), res in zip(jobs, results):
        row, curves = _verify_row(target, inst, res)
        rows.append(row)
        if curves is not None:
            name = f"{target}_" + "".join(ch if ch.isalnum() or ch in "._-" else "_" for ch in inst)
            _write_csv(out / f"curves_{name}.csv", ["sigma", "C_u", "C_v"],
                       zip(curves["sigma"], curves["C_u"], curves["C_v"]))
            if opts["plot"]:
                svg = svg_overlay({"C_u": (curves["sigma"], curves["C_u"]),
                                   "C_v": (curves["sigma"], curves["C_v"])}, f"{target} {inst}")
                (out / f"curves_{name}.svg").write_text(svg, encoding="utf-8")
    _write_csv(out / "verify.csv", ["target", "instance", "holds", "margin", "tolerance", "detail"], rows)
    lemma_rows = [(inst, res.instances_run, res.violations, res.skipped, res.worst_margin,
                   res.tolerance) for (target, inst, _), res in zip(jobs, results)
                  if target == "lemmas"]
    if lemma_rows:
        _write_csv(out / "lemmas.csv", ["suite", "instances", "violations", "skipped",
                                        "worst_margin", "tolerance"], lemma_rows)
    return EXIT_OK if all(r[2] for r in rows) else EXIT_FAIL


def cmd_report(opts, out: Path) -> int:
    path = out / "verify.csv"
    if not path.exists():
        raise UsageError(f"no verify.csv in {out}; run 'fracsymm verify' first")
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    failed = [r for r in rows if r["holds"] != "true"]
    lines = [f"checks = {len(rows)}", f"passed = {len(rows) - len(failed)}",
             f"failed = {len(failed)}"]
    for r in failed:
        lines.append(f"FAIL {r['target']} {r['instance']} margin={r['margin']} "
                     f"tolerance={r['tolerance']}")
    (out / "summary.txt").write_text("\n".join(lines) + "\n", encoding="utf-8")
    print("\n".join(lines))
    return EXIT_FAIL if failed else EXIT_OK


COMMANDS = {"kernel": cmd_kernel, "rearrange": cmd_rearrange, "solve-radial": cmd_solve_radial,
            "solve-planar": cmd_solve_planar, "verify": cmd_verify, "report": cmd_report}


def run(argv=None) -> int:
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:     # argparse reports usage errors this way
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    try:
        opts = _resolve(ns)
        out = Path(opts["out"])
        out.mkdir(parents=True, exist_ok=True)
        status = COMMANDS[ns.command](opts, out)
        _manifest(out, opts, [("exit_code", status)])
        return status
    except (UsageError, DomainError, ValueError) as exc:
        print(f"fracsymm: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ArithmeticError, RuntimeError, MemoryError, np.linalg.LinAlgError) as exc:
        print(f"fracsymm: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
