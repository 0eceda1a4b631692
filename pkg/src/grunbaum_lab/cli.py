"""Command-line front end.

Machine output (CSV or JSON) goes to stdout or ``--out``; diagnostics go to
stderr.  Exit codes: 0 success, 1 a verification failed (which points at a
numeric or modelling bug, never at the inequalities), 2 bad input.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import replace

import numpy as np

from . import bodies as B
from . import gaussian as G
from . import sconcave as S
from . import transport as TR
from ._numerics import EQUALITY_GAP_TOL
from .errors import GrunbaumLabError, NumericFailure
from .measure1d import verify_cdf_grunbaum
from .reports import CSV_HEADER, fmt, write_csv

DEFAULT_MC_SAMPLES = 10_000_000
SEED_MAX = 2 ** 64 - 1
BUG_LABEL = "numeric/model bug suspected"


class UsageError(Exception):
    pass


def _num(x):
    """JSON number rounded to 12 significant digits (strings for inf/nan)."""
    if x is None or isinstance(x, (bool, str)):
        return x
    if isinstance(x, (int, np.integer)):
        return int(x)
    x = float(x)
    return float(fmt(x)) if math.isfinite(x) else fmt(x)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, np.ndarray)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (float, int, np.floating, np.integer, bool)) or obj is None:
        return _num(obj)
    return str(obj)


def _dumps(obj):
    return json.dumps(_jsonable(obj), sort_keys=True, indent=2) + "\n"


def _floats(text):
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise UsageError(f"expected comma-separated numbers, got {text!r}") from None


def _load_json(path):
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as e:
        raise UsageError(f"cannot read {path}: {e.strerror}") from None
    except json.JSONDecodeError as e:
        raise UsageError(f"{path}: malformed JSON ({e.msg} at line {e.lineno})") from None


class Run:
    """Resolved global options (the run configuration)."""

    def __init__(self, args):
        if not 0 <= args.seed <= SEED_MAX:
            raise UsageError("--seed must be a 64-bit unsigned integer")
        if args.mc_samples < 1000:
            raise UsageError("--mc-samples must be at least 1000")
        self.seed = args.seed
        self.samples = args.mc_samples
        self.out = args.out
        self.tol = EQUALITY_GAP_TOL
        if args.tol is not None:
            if not args.tol > 0:
                raise UsageError("--tol must be positive")
            if args.tol > EQUALITY_GAP_TOL and not args.force:
                raise UsageError(f"--tol {args.tol:g} is looser than the default "
                                 f"{EQUALITY_GAP_TOL:g}; pass --force to accept that")
            self.tol = args.tol

    def emit(self, text):
        if self.out:
            with open(self.out, "w", encoding="utf-8", newline="") as fh:
                fh.write(text)
        else:
            sys.stdout.write(text)

    def stamp(self, rep):
        """Record the run seed on every row; MC rows already carry theirs."""
        return rep if rep.seed is not None else replace(rep, seed=self.seed)


def _violations(reps, tol):
    return [r for r in reps if r.violates(tol)]


def _report_violations(bad):
    for r in bad:
        print(f"violation ({BUG_LABEL}): {r.body_id or r.label} gap {fmt(r.gap)}",
              file=sys.stderr)
    return 1 if bad else 0


# -- subcommands ----------------------------------------------------------------------------


def cmd_bound(args, run):
    cls = args.cls
    if cls == "lebesgue":
        if args.n is None:
            raise UsageError("lebesgue bound needs --n")
        v = S.classic_grunbaum_bound(args.n)
    elif cls == "gaussian":
        v = G.ehrhard_grunbaum_bound(args.t)
    else:
        if args.p is not None:
            v = S.c_np_bound(args.n or 1, args.p)
        elif args.s is not None:
            v = S.s_grunbaum_bound(args.s)
        else:
            raise UsageError("sconcave bound needs --s or --p")
    run.emit(fmt(v) + "\n")
    return 0


def _directions(spec, n, cli_dir):
    if cli_dir:
        dirs = [_floats(cli_dir)]
    else:
        dirs = spec.get("directions") or [[1.0] + [0.0] * (n - 1)]
    for u in dirs:
        if len(u) != n:
            raise UsageError(f"direction {u} does not match dimension {n}")
    return [np.asarray(u, dtype=float) for u in dirs]


def _verify_measure(spec, args, run):
    mu = TR.measure_from_json(spec["measure"])
    intervals = spec.get("intervals") or [list(mu.support)]
    reps = []
    for k, (a, b) in enumerate(intervals):
        a, b = float(a), float(b)
        if args.cls == "convex":
            rep = verify_cdf_grunbaum(mu, a, b)
        elif args.cls == "transport":
            rep = TR.transport_grunbaum_verify(mu, a, b)
        else:
            raise UsageError("a 1-D measure needs --class convex or --class transport")
        reps.append(run.stamp(rep.with_ids(spec.get("id", f"interval{k}"))))
    return reps


def cmd_verify(args, run):
    spec = _load_json(args.input)
    if not isinstance(spec, dict):
        raise UsageError("input must be a JSON object")
    if "measure" in spec:
        reps = _verify_measure(spec, args, run)
    else:
        cls = B.MeasureClass.parse(args.cls)
        items = spec.get("bodies", [spec])
        reps = []
        for i, item in enumerate(items):
            W = B.body_from_json(item, item.get("id", f"body{i}"))
            for u in _directions(item if "directions" in item else spec, W.dim, args.direction):
                rep = B.grunbaum_verify(W, u, cls, method=args.method, samples=run.samples,
                                        seed=run.seed, tol=run.tol)
                reps.append(run.stamp(rep))
    run.emit(write_csv([r.row() for r in reps]))
    return _report_violations(_violations(reps, run.tol))


def _default_face(n, r1):
    corners = np.array(np.meshgrid(*[[-0.5, 0.5]] * (n - 1))).reshape(n - 1, -1).T
    return np.column_stack([corners, np.full(len(corners), r1)])


def cmd_extremal(args, run):
    if args.s <= -1:
        raise UsageError(f"s={args.s:g} <= -1: such measures admit no nontrivial barycentric "
                         "cut bound (see the counterexample subcommand)")
    spec = S.SConcaveSpec(args.s, args.n)
    params = S.ExtremalParams(r1=args.r1, a=args.a)
    if args.n == 1:
        rep = run.stamp(S.extremal_cut_report(spec, params).with_ids("extremal"))
        body = {"n": 1, "s": args.s, "p": spec.p, "r1": args.r1, "a": args.a,
                "regime": spec.regime}
    else:
        W = S.extremal_body_nd(spec, _default_face(args.n, args.r1), params)
        W = replace(W, body_id="extremal")
        u = np.eye(args.n)[-1]
        rep = run.stamp(B.grunbaum_verify(W, u, ("sconcave", args.s), method=args.method,
                                          samples=run.samples, seed=run.seed, tol=run.tol))
        body = dict(W.body.to_json(), density=W.density.kind, metadata=W.metadata)
    row = dict(zip(CSV_HEADER, rep.row()))
    run.emit(_dumps({"body": body, "report": row, "seed": run.seed}))
    return _report_violations(_violations([rep], run.tol))


def cmd_counterexample(args, run):
    ks = _floats(args.k) if args.k else [10.0 ** j for j in range(1, 7)]
    rep = S.verify_no_bound(args.p, ks, args.threshold)
    rows = [[fmt(r.k), fmt(r.g), fmt(r.left_mass), fmt(r.closed_form_left),
             fmt(r.closed_form_delta)] for r in rep.rows]
    run.emit(write_csv(rows, ("k", "g", "left_mass", "closed_form_left", "closed_form_delta")))
    status = 0
    if not rep.decreasing:
        print(f"left mass is not strictly decreasing ({BUG_LABEL})", file=sys.stderr)
        status = 1
    if rep.below_threshold is False:
        print(f"last left mass {fmt(rep.values[-1])} is not below {fmt(args.threshold)}",
              file=sys.stderr)
        status = 1
    return status


def cmd_sweep(args, run):
    if not 0 < args.step <= 1:
        raise UsageError("--step must lie in (0, 1]")
    if args.over == "t":
        s_list = _floats(args.s_list) if args.s_list else [0.5, 0.0, -0.5]
        cols = [S.s_grunbaum_bound(s) for s in s_list]
        m = int(round(1.0 / args.step))
        rows, bad = [], 0
        for j in range(1, m + 1):
            t = round(j * args.step, 12)
            gb, te = G.ehrhard_grunbaum_bound(t), t / math.e
            bad += gb < te
            rows.append([fmt(t), fmt(gb), fmt(te), *map(fmt, cols)])
        header = ("t", "gaussian_bound", "t_over_e", *(f"s_bound({s:g})" for s in s_list))
        run.emit(write_csv(rows, header))
        if bad:
            print(f"{bad} rows with gaussian_bound < t/e ({BUG_LABEL})", file=sys.stderr)
        return 1 if bad else 0
    m = int(math.floor(1.99 / args.step + 1e-9))
    s_vals = [round(-0.99 + j * args.step, 12) for j in range(m + 1)]
    vals = [S.s_grunbaum_bound(s) for s in s_vals]
    run.emit(write_csv([[fmt(s), fmt(v)] for s, v in zip(s_vals, vals)], ("s", "s_bound")))
    if any(b <= a for a, b in zip(vals, vals[1:])):
        print(f"s_bound is not increasing in s ({BUG_LABEL})", file=sys.stderr)
        return 1
    return 0


def cmd_optimize_direction(args, run):
    spec = _load_json(args.input)
    if not isinstance(spec, dict):
        raise UsageError("input must be a JSON object")
    W = B.body_from_json(spec, spec.get("id", "body"))
    if W.dim > 4:
        raise UsageError("direction search supports dimension <= 4")
    res = B.min_cut_direction(W, args.cls, starts=args.starts, seed=run.seed,
                              method=args.method, samples=run.samples)
    rep = res.report
    n = W.dim
    header = ([f"start{i + 1}" for i in range(n)] + [f"u{i + 1}" for i in range(n)]
              + ["value", "converged"])
    rows = [[*map(fmt, s0), *map(fmt, u), fmt(v), fmt(ok)] for s0, u, v, ok in res.starts]
    summary = {"direction": list(rep.direction), "value": rep.measured, "bound": rep.bound,
               "gap": rep.gap, "class": rep.label, "method": rep.method, "seed": run.seed,
               "notes": list(rep.notes)}
    if run.out:
        run.emit(write_csv(rows, header))
        sys.stdout.write(_dumps(summary))
    else:
        summary["starts"] = [dict(zip(header, r)) for r in rows]
        run.emit(_dumps(summary))
    return _report_violations(_violations([rep], run.tol))


def cmd_transport(args, run):
    spec = _load_json(args.input)
    if not isinstance(spec, dict) or "measure" not in spec:
        raise UsageError("transport input needs a 'measure'")
    mu = TR.measure_from_json(spec["measure"])
    if args.op == "concavity":
        v = TR.is_gamma_transport_concave(mu)
        run.emit(_dumps({"holds": v.holds, "worst": v.worst, "triple": v.triple,
                         "affinity": v.affinity}))
        return 0
    if args.op == "verify":
        reps = [run.stamp(r) for r in _verify_measure(spec, argparse.Namespace(cls="transport"),
                                                      run)]
        run.emit(write_csv([r.row() for r in reps]))
        return _report_violations(_violations(reps, run.tol))
    if args.op == "monge":
        T = TR.map_from_json(spec["map"]) if "map" in spec else TR.transport_from_measure(mu)
        grid = spec.get("grid") or np.linspace(-4.0, 4.0, 81).tolist()
        run.emit(_dumps({"map": T.name, "residual": TR.monge_ampere_residual(mu, T, grid)}))
        return 0
    res = TR.even_transport_gaussian_test(mu)
    run.emit(_dumps({"accepted": res.accepted, "sigma": res.sigma,
                     "max_residual": res.max_residual}))
    return 0


# -- parser ------------------------------------------------------------------------------------


def _common(defaults=True):
    # subcommands repeat the global flags with suppressed defaults so that a
    # flag given before the subcommand is not overwritten
    d = (lambda v: v) if defaults else (lambda v: argparse.SUPPRESS)
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--seed", type=int, default=d(0), help="RNG seed (64-bit unsigned)")
    p.add_argument("--mc-samples", type=int, default=d(DEFAULT_MC_SAMPLES),
                   help="Monte-Carlo sample count")
    p.add_argument("--tol", type=float, default=d(None),
                   help=f"gap tolerance (default {EQUALITY_GAP_TOL:g}; looser needs --force)")
    p.add_argument("--out", default=d(None), help="write output here instead of stdout")
    p.add_argument("--force", action="store_true", default=d(False),
                   help="accept a looser --tol")
    return p


def build_parser():
    common = _common(False)
    ap = argparse.ArgumentParser(prog="grunbaum-lab", parents=[_common()],
                                 description="Grunbaum-type barycentric cut bounds.")
    sub = ap.add_subparsers(dest="command", required=True)
    methods = ("exact", "quadrature", "mc")

    p = sub.add_parser("bound", parents=[common], help="evaluate a sharp bound")
    p.add_argument("--class", dest="cls", required=True,
                   choices=("lebesgue", "gaussian", "sconcave"))
    p.add_argument("--n", type=int)
    p.add_argument("--t", type=float, default=1.0)
    p.add_argument("--s", type=float)
    p.add_argument("--p", type=float)
    p.set_defaults(func=cmd_bound)

    p = sub.add_parser("verify", parents=[common], help="verify cuts of bodies or measures")
    p.add_argument("input")
    p.add_argument("--class", dest="cls", default="lebesgue")
    p.add_argument("--direction")
    p.add_argument("--method", choices=methods)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("extremal", parents=[common], help="build and check an equality case")
    p.add_argument("--s", type=float, required=True)
    p.add_argument("--n", type=int, default=1)
    p.add_argument("--r1", type=float, default=0.0)
    p.add_argument("--a", type=float, default=1.0)
    p.add_argument("--method", choices=methods)
    p.set_defaults(func=cmd_extremal)

    p = sub.add_parser("counterexample", parents=[common], help="sweep the no-bound family")
    p.add_argument("--p", type=float, required=True)
    p.add_argument("--k", help="comma-separated k values (default 1e1..1e6)")
    p.add_argument("--threshold", type=float)
    p.set_defaults(func=cmd_counterexample)

    p = sub.add_parser("sweep", parents=[common], help="tabulate bound curves")
    p.add_argument("--over", choices=("t", "s"), default="t")
    p.add_argument("--step", type=float, default=0.01)
    p.add_argument("--s-list")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("optimize-direction", parents=[common], help="worst cut direction")
    p.add_argument("input")
    p.add_argument("--class", dest="cls", default="lebesgue")
    p.add_argument("--starts", type=int, default=32)
    p.add_argument("--method", choices=methods)
    p.set_defaults(func=cmd_optimize_direction)

    p = sub.add_parser("transport", parents=[common], help="gamma-transport tools")
    p.add_argument("input")
    p.add_argument("--op", choices=("concavity", "verify", "monge", "even-test"),
                   default="concavity")
    p.set_defaults(func=cmd_transport)
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        run = Run(args)
        return args.func(args, run)
    except NumericFailure as e:
        print(f"error: {e} ({BUG_LABEL})", file=sys.stderr)
        return 1
    except (UsageError, GrunbaumLabError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except (KeyError, TypeError, ValueError) as e:
        print(f"error: malformed input ({e})", file=sys.stderr)
        return 2

if __name__ == "__main__":
    sys.exit(main())
