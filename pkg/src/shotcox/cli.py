"""Command-line interface.

Exit statuses: 0 ok, 64 usage (bad flags, malformed model file), 65 domain
(precondition violated), 66 numerical quality (accuracy target missed, or a
``validate`` criterion failed), 70 internal error.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys

from . import asymptotics as asy
from .cgf import CgfContext, eta, eta_deriv, measure_speed, modphi_gap, psi
from .config import ConfigError, load_model
from .errors import DomainError, NumericalError
from .exactdist import pmf_exact, tail_sum
from .model import standard_model
from .rate import solve_saddle
from .sim import SimConfig, sample_counts, sample_paths
from . import validation

EX_OK = 0
EX_USAGE = 64
EX_DOMAIN = 65
EX_QUALITY = 66
EX_INTERNAL = 70


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: error: {message}")


def _num(v):
    if isinstance(v, float):
        return f"{v:.17g}"
    return "" if v is None else str(v)


def _write_csv(out, header, rows):
    w = csv.writer(out, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_num(v) for v in row])


def _dump_json(doc):
    return json.dumps(doc, indent=2) + "\n"


def _ctx(args):
    params = load_model(args.model) if args.model else standard_model()
    return CgfContext(params)


def _emit_meta(args, doc, err):
    text = _dump_json(doc)
    if args.meta:
        with open(args.meta, "w", newline="") as fh:
            fh.write(text)
    else:
        err.write(text)


# --- subcommands ------------------------------------------------------------

def cmd_cgf(args, out, err):
    ctx = _ctx(args)
    rows = []
    for theta in args.theta:
        base = [theta, eta(ctx, theta), eta_deriv(ctx, theta, 1), eta_deriv(ctx, theta, 2),
                psi(ctx, theta)]
        for t in args.t:
            rows.append(base[:1] + [t] + base[1:] + [modphi_gap(ctx, t, theta)])
    _write_csv(out, ["theta", "t", "eta", "eta_d1", "eta_d2", "psi", "modphi_gap"], rows)


def cmd_rate(args, out, err):
    ctx = _ctx(args)
    rows = []
    for x in args.x:
        sp = solve_saddle(ctx, x)
        rows.append([sp.x, sp.theta_star, sp.I, sp.I2])
    _write_csv(out, ["x", "theta_star", "I", "I2"], rows)


def cmd_pmf(args, out, err):
    ctx = _ctx(args)
    table = pmf_exact(ctx, args.t, args.M)
    kmax = table.M - 1 if args.kmax is None else min(args.kmax, table.M - 1)
    _write_csv(out, ["k", "prob"], ([k, float(table.probs[k])] for k in range(kmax + 1)))
    _emit_meta(args, {
        "t": table.t,
        "M": table.M,
        "aliasing_bound": table.aliasing_bound,
        "mean": table.mean,
        "variance": table.variance,
        "min_raw": table.min_raw,
    }, err)


def cmd_simulate(args, out, err):
    ctx = _ctx(args)
    cfg = SimConfig(args.t, args.n_paths, args.seed, args.mode)
    sampler = sample_paths if args.mode == "paths" else sample_counts
    batch = sampler(ctx, cfg, workers=args.workers)
    if args.counts_csv:
        with open(args.counts_csv, "w", newline="") as fh:
            _write_csv(fh, ["path", "count"], enumerate(batch.counts.tolist()))
    doc = {"t": cfg.t, "seed": cfg.seed, "mode": cfg.mode}
    doc.update(batch.summary())
    out.write(_dump_json(doc))


def _exact_tail(ctx, t, k, cache):
    if t not in cache:
        cache[t] = pmf_exact(ctx, t)
    table = cache[t]
    if k >= table.M:
        table = cache[t] = pmf_exact(ctx, t, 1 << math.ceil(math.log2(k + 1)))
    return tail_sum(table.probs, k), table


def cmd_asymptote(args, out, err):
    ctx = _ctx(args)
    kinds = ("point", "tail") if args.kind == "both" else (args.kind,)
    header = ["kind", "t", "x", "threshold", "estimate", "log_estimate", "theta_star", "I"]
    if args.exact:
        header += ["exact", "ratio"]
    rows, cache = [], {}
    for t in args.t:
        for x in args.x:
            for kind in kinds:
                est = (asy.pld_point if kind == "point" else asy.pld_tail)(ctx, t, x)
                row = [kind, t, x, est.threshold, est.value, est.log_value,
                       est.saddle.theta_star, est.saddle.I]
                if args.exact:
                    k = math.ceil(est.threshold - 1e-9)
                    tail, table = _exact_tail(ctx, t, k, cache)
                    exact = float(table.probs[k]) if kind == "point" else tail
                    row += [exact, est.value / exact if exact > 0 else math.inf]
                rows.append(row)
    _write_csv(out, header, rows)


def cmd_moderate(args, out, err):
    ctx = _ctx(args)
    kinds = ("gaussian", "saddle", "expansion") if args.kind == "all" else (args.kind,)
    header = ["kind", "t", "y", "m", "threshold", "estimate", "log_estimate", "theta_star", "I"]
    if args.exact:
        header += ["exact", "ratio"]
    rows, cache = [], {}
    for t in args.t:
        for y in args.y:
            for kind in kinds:
                if kind == "gaussian":
                    est = asy.mdp_gaussian(ctx, t, y)
                elif kind == "saddle":
                    est = asy.mdp_saddle(ctx, t, y)
                else:
                    est = asy.mdp_expansion(ctx, t, y, args.m)
                sp = est.saddle
                row = [kind, t, y, est.m, est.threshold, est.value, est.log_value,
                       sp.theta_star if sp else None, sp.I if sp else None]
                if args.exact:
                    exact, _ = _exact_tail(ctx, t, math.ceil(est.threshold), cache)
                    row += [exact, est.value / exact if exact > 0 else math.inf]
                rows.append(row)
    _write_csv(out, header, rows)


def cmd_speed(args, out, err):
    ctx = _ctx(args)
    table = measure_speed(ctx, args.theta, args.t)
    rows = []
    for i, (t, g) in enumerate(zip(table.t, table.gap)):
        rows.append([t, g, math.log(g), table.local_slopes[i - 1] if i else None])
    _write_csv(out, ["t", "gap", "log_gap", "local_slope"], rows)
    _emit_meta(args, {"theta": table.theta, "slope": table.slope,
                      "expected_order": table.expected_order}, err)


def cmd_validate(args, out, err):
    def show(res):
        err.write(res.line() + "\n")
        err.flush()

    results = validation.run_all(seed=args.seed, workers=args.workers, on_result=show)
    text = validation.report_json(results, args.seed)
    if args.report:
        with open(args.report, "w", newline="") as fh:
            fh.write(text)
    else:
        out.write(text)
    failed = [r.number for r in results if not r.passed]
    err.write(f"{len(results) - len(failed)}/{len(results)} criteria passed\n")
    return EX_QUALITY if failed else EX_OK


def _floats(text):
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def build_parser():
    # global flags are accepted before or after the subcommand
    common = _Parser(add_help=False)
    common.add_argument("--model", default=argparse.SUPPRESS,
                        help="model file (default: nu=1, rho=1, g(s)=exp(-s))")
    common.add_argument("--output", "-o", default=argparse.SUPPRESS,
                        help="write the main output here instead of stdout")
    p = _Parser(prog="shotcox", description="Shot-noise Cox process deviations toolkit",
                parents=[common])
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("cgf", parents=[common], help="eta, derivatives, psi and the mod-phi gap")
    s.add_argument("--theta", type=_floats, required=True)
    s.add_argument("--t", type=_floats, default=[100.0])
    s.set_defaults(func=cmd_cgf)

    s = sub.add_parser("rate", parents=[common], help="saddlepoint and rate function")
    s.add_argument("--x", type=_floats, required=True)
    s.set_defaults(func=cmd_rate)

    s = sub.add_parser("pmf", parents=[common], help="exact pmf of N_t by Fourier inversion")
    s.add_argument("--t", type=float, required=True)
    s.add_argument("--M", type=int)
    s.add_argument("--kmax", type=int)
    s.add_argument("--meta", help="write the JSON metadata here (default: stderr)")
    s.set_defaults(func=cmd_pmf)

    s = sub.add_parser("simulate", parents=[common], help="Monte Carlo samples of N_t")
    s.add_argument("--t", type=float, required=True)
    s.add_argument("--n-paths", type=int, required=True)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--mode", choices=("counts", "paths"), default="counts")
    s.add_argument("--workers", type=int, default=1)
    s.add_argument("--counts-csv", help="stream raw counts to this CSV file")
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("asymptote", parents=[common], help="precise large-deviation estimates")
    s.add_argument("--t", type=_floats, required=True)
    s.add_argument("--x", type=_floats, required=True)
    s.add_argument("--kind", choices=("point", "tail", "both"), default="tail")
    s.add_argument("--exact", action="store_true", help="add exact oracle value and ratio")
    s.set_defaults(func=cmd_asymptote)

    s = sub.add_parser("moderate", parents=[common], help="moderate-deviation estimates")
    s.add_argument("--t", type=_floats, required=True)
    s.add_argument("--y", type=_floats, required=True)
    s.add_argument("--m", type=int, default=4)
    s.add_argument("--kind", choices=("gaussian", "saddle", "expansion", "all"), default="all")
    s.add_argument("--exact", action="store_true", help="add exact oracle value and ratio")
    s.set_defaults(func=cmd_moderate)

    s = sub.add_parser("speed", parents=[common], help="log-log decay of the mod-phi gap")
    s.add_argument("--theta", type=float, default=0.5)
    s.add_argument("--t", type=_floats, default=[50.0, 100.0, 200.0, 400.0, 800.0])
    s.add_argument("--meta", help="write the JSON fit summary here (default: stderr)")
    s.set_defaults(func=cmd_speed)

    s = sub.add_parser("validate", parents=[common], help="run the acceptance pipeline")
    s.add_argument("--seed", type=int, default=validation.DEFAULT_SEED)
    s.add_argument("--workers", type=int, default=1)
    s.add_argument("--report", help="write the JSON report here (default: stdout)")
    s.set_defaults(func=cmd_validate)
    return p


def run(argv=None, stdout=None, stderr=None) -> int:
    stdout = sys.stdout if stdout is None else stdout
    stderr = sys.stderr if stderr is None else stderr
    try:
        args = build_parser().parse_args(argv)
        args.model = getattr(args, "model", None)
        args.output = getattr(args, "output", None)
    except UsageError as exc:
        stderr.write(f"{exc}\n")
        return EX_USAGE
    except SystemExit as exc:      # --help
        return EX_OK if not exc.code else EX_USAGE

    buf = io.StringIO()
    try:
        status = args.func(args, buf, stderr) or EX_OK
    except ConfigError as exc:
        stderr.write(f"usage error: {exc}\n")
        return EX_USAGE
    except DomainError as exc:
        stderr.write(f"domain error: {exc}\n")
        return EX_DOMAIN
    except NumericalError as exc:
        stderr.write(f"numerical error: {exc}\n")
        return EX_QUALITY
    except Exception as exc:  # noqa: BLE001
        stderr.write(f"internal error: {type(exc).__name__}: {exc}\n")
        return EX_INTERNAL

    if args.output:
        with open(args.output, "w", newline="") as fh:
            fh.write(buf.getvalue())
    else:
        stdout.write(buf.getvalue())
    return status


def main():
    sys.exit(run())
