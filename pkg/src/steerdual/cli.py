"""Command line entry point: ``steerdual <command> [options]``.

Commands write CSV (header row, ``.`` decimals) to ``--out`` or stdout, plus
a JSON sidecar ``<out>.json`` with diagnostics.  Exit codes: 0 success,
1 computation failure, 2 usage or parse error.
"""

from __future__ import annotations

import argparse
import csv
import datetime
import io as _io
import json
import logging
import math
import sys

import numpy as np

from . import __version__
from .errors import BracketError, InvalidInputError, SteeringError
from .io import ParseError, gaussian_state_from_json, gaussian_state_to_json, load_json
from .noon import (
    DEFAULT_CUTOFF,
    TABLE1_N_INT,
    IntervalPartition,
    NoonParams,
    critical_eta,
    eta_lower_bound,
    eta_to_r,
    eta_upper_bound_binarized,
    noon_assemblage,
    noon_state,
    table1_pipeline,
)

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _fmt(v):
    if v is None or (isinstance(v, float) and math.isnan(v)):
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _emit(args, header, rows, sidecar):
    buf = _io.StringIO()
    if not args.reproducible:
        buf.write(f"# generated {datetime.datetime.now(datetime.timezone.utc).isoformat()} steerdual {__version__}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    text = buf.getvalue()
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        with open(args.out + ".json", "w", encoding="utf-8") as fh:
            json.dump(sidecar, fh, indent=2, sort_keys=True, default=_json_default)
            fh.write("\n")
    else:
        sys.stdout.write(text)


def _json_default(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (np.floating, np.integer, np.bool_)):
        return o.item()
    raise TypeError(type(o).__name__)


def _json_out(args, payload):
    text = json.dumps(payload, indent=2, sort_keys=True, default=_json_default) + "\n"
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def cmd_table1(args):
    if not args.n_int:
        raise UsageError("--n-int needs at least one value")
    rows = table1_pipeline(args.n_int, args.theta, args.n, args.c, tol=args.tol, workers=args.workers)
    out = []
    for row in rows:
        wall = None if args.reproducible else round(row.wall_time_s, 3)
        out.append((row.n_int, row.eta_c, row.ir_at_eta_c, wall))
    _emit(
        args,
        ["n_int", "eta_c", "ir_at_eta_c", "wall_time_s"],
        out,
        {
            "command": "table1",
            "theta": args.theta,
            "n": args.n,
            "c": args.c,
            "tol": args.tol,
            "rows": [{"n_int": r.n_int, "method": r.method, "error": r.error} for r in rows],
        },
    )
    return EXIT_FAIL if any(r.method == "failed" for r in rows) else EXIT_OK


def cmd_fig1(args):
    if not args.n_int:
        raise UsageError("--n-int needs at least one value")
    if args.theta_steps < 1:
        raise UsageError("--theta-steps must be positive")
    thetas = np.linspace(math.pi / 2 / args.theta_steps, math.pi / 2, args.theta_steps)
    rows, diag, failed = [], [], False
    for n_int in args.n_int:
        IntervalPartition(args.c, n_int)
        for theta in thetas:
            note = ""
            if n_int == 2 and args.n == 1:
                eta = eta_upper_bound_binarized(theta)
                if eta is None:
                    eta, note = float("nan"), "no bound"
                else:
                    note = "closed form"
            else:
                try:
                    eta, _ = critical_eta(theta, args.n, args.c, n_int, args.tol)
                except BracketError as exc:
                    eta, note = float("nan"), "no bound"
                    diag.append({"theta": float(theta), "n_int": n_int, "error": str(exc)})
                except SteeringError as exc:
                    eta, note, failed = float("nan"), "failed", True
                    diag.append({"theta": float(theta), "n_int": n_int, "error": str(exc)})
            rows.append((float(theta), n_int, eta, note))
    rows.append(("", "lower", eta_lower_bound(2), "analytic lower bound"))
    _emit(args, ["theta", "n_int", "eta_c", "note"], rows, {"command": "fig1", "c": args.c, "n": args.n, "issues": diag})
    return EXIT_FAIL if failed else EXIT_OK


def cmd_region(args):
    from .dynamics import steerable_region

    for name in ("u_steps", "t_steps"):
        if getattr(args, name) < 1:
            raise UsageError(f"--{name.replace('_', '-')} must be positive")
    u = np.linspace(args.u_min, args.u_max, args.u_steps)
    t = np.linspace(args.t_min, args.t_max, args.t_steps)
    reg = steerable_region(u, t, args.rc)
    rows = [(float(uu), float(tt), float(reg.r[i, j]), int(reg.steerable[i, j])) for i, uu in enumerate(u) for j, tt in enumerate(t)]
    _emit(
        args,
        ["u", "t", "r", "steerable"],
        rows,
        {"command": "region", "r_c": args.rc, "windows": [{"u": float(uu), "windows": k} for uu, k in zip(u, reg.windows)]},
    )
    return EXIT_OK


def cmd_gauss(args):
    from . import gaussian as g

    if args.action == "random":
        rng = np.random.default_rng(args.seed)
        _json_out(args, gaussian_state_to_json(g.random_bipartite(rng)))
        return EXIT_OK
    if not args.state:
        raise UsageError("a state file is required")
    st = gaussian_state_from_json(load_json(args.state))
    if not isinstance(st, g.GaussianBipartiteState):
        raise ParseError(f"{args.state}: expected a bipartite state with 'modes_a'")
    v = g.steering_verdicts(st)
    payload = {"steerable": v.steerable, "block_min_eigenvalue": v.block_min_eigenvalue}
    if v.channel_steerable is not None:
        payload.update(channel_steerable=v.channel_steerable, channel_min_eigenvalue=v.channel_min_eigenvalue)
    if args.action == "witness":
        if not v.steerable:
            payload["witness"] = None
        else:
            w = g.steering_witness(st)
            payload["witness"] = {
                "x": w.x, "y": w.y, "xi": w.xi, "xi_prime": w.xi_prime,
                "commutator": w.commutator, "margin": w.margin,
            }
    elif args.action == "lhs":
        if v.steerable:
            payload["lhs"] = None
        else:
            lhs = g.gaussian_lhs(st)
            payload["lhs"] = {
                "V_A": lhs.V_A, "V_lambda": lhs.V_lambda,
                "displacement_map": lhs.displacement_map, "r_sigma": lhs.r_sigma,
                "min_eigenvalue": g.uncertainty_gap(lhs.V_lambda),
            }
    _json_out(args, payload)
    return EXIT_OK


def cmd_noon(args):
    from .finite import steering_equivalent_observables, assemblage_from_state, state_to_channel, MeasurementAssemblage
    from .jointmeas import coarse_grain, delta_criterion
    from .noon import damped_quadrature, truncated_quadrature
    from .robustness import incompatibility_robustness

    p = NoonParams(args.n, args.alpha, args.eta)
    rho = noon_state(p)
    r = eta_to_r(p.eta) if p.eta > 0 else 0.0
    part = IntervalPartition(args.c, args.n_int)
    pair = [damped_quadrature(t, p.n, r) for t in (0.0, args.theta)]
    payload = {
        "n": p.n, "alpha": p.alpha, "eta": p.eta, "theta": args.theta,
        "r": r,
        "marginal_b": np.real(np.diag(rho.marginal_b())),
        "delta_criterion": delta_criterion(pair),
        "partition": part.to_dict(),
    }
    if p.eta > 0:
        payload["ir"] = incompatibility_robustness(noon_assemblage(p.eta, args.theta, p.n, args.c, args.n_int))
        sharp = MeasurementAssemblage(tuple(coarse_grain(truncated_quadrature(t, p.n), part) for t in (0.0, args.theta)))
        se = steering_equivalent_observables(assemblage_from_state(rho, sharp))
        payload["ir_from_state"] = incompatibility_robustness(se)
        payload["kraus_count"] = len(state_to_channel(rho).kraus_ops)
    payload["partition"]["edges"] = [e if math.isfinite(e) else str(e) for e in payload["partition"]["edges"]]
    _json_out(args, payload)
    return EXIT_OK


def _even_list(s):
    try:
        v = int(s)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {s}") from None
    if v < 2 or v % 2:
        raise argparse.ArgumentTypeError(f"n_int must be an even integer >= 2, got {v}")
    return v


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", help="output path (default: stdout)")
    common.add_argument("--reproducible", action="store_true", help="omit timestamps and timings")
    common.add_argument("--seed", type=int, default=0, help="seed for random instance generation")
    common.add_argument("--workers", type=int, default=1, help="parallel workers for independent solves")
    common.add_argument("-v", "--verbose", action="count", default=0, help="log solver progress to stderr")

    noon_opts = argparse.ArgumentParser(add_help=False)
    noon_opts.add_argument("--n", type=int, default=1, help="photon number N")
    noon_opts.add_argument("--c", type=float, default=DEFAULT_CUTOFF, help="partition cutoff c")
    noon_opts.add_argument("--tol", type=float, default=1e-3, help="bisection tolerance on eta")

    parser = argparse.ArgumentParser(prog="steerdual", description="Steering and joint measurability through the channel-state duality.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("table1", parents=[common, noon_opts], help="critical noise versus number of intervals")
    p.add_argument("--n-int", type=_even_list, nargs="*", default=list(TABLE1_N_INT), help="even interval counts")
    p.add_argument("--theta", type=float, default=math.pi / 2, help="second quadrature angle (radians)")
    p.set_defaults(func=cmd_table1)

    p = sub.add_parser("fig1", parents=[common, noon_opts], help="critical noise versus quadrature angle")
    p.add_argument("--n-int", type=_even_list, nargs="*", default=[2, 4, 6, 8], help="even interval counts")
    p.add_argument("--theta-steps", type=int, default=12, help="angles on (0, pi/2]")
    p.set_defaults(func=cmd_fig1)

    p = sub.add_parser("region", parents=[common], help="steerability region of the damped NOON state")
    p.add_argument("--u-min", type=float, default=0.1)
    p.add_argument("--u-max", type=float, default=20.0)
    p.add_argument("--u-steps", type=int, default=40)
    p.add_argument("--t-min", type=float, default=0.0)
    p.add_argument("--t-max", type=float, default=5.0)
    p.add_argument("--t-steps", type=int, default=201)
    p.add_argument("--rc", type=float, default=1 / math.sqrt(2))
    p.set_defaults(func=cmd_region)

    p = sub.add_parser("gauss", parents=[common], help="Gaussian steering test, witness or LHS model")
    p.add_argument("action", choices=["steer", "witness", "lhs", "random"])
    p.add_argument("state", nargs="?", help="JSON file with modes_a, modes_b, V, r")
    p.set_defaults(func=cmd_gauss)

    p = sub.add_parser("noon", parents=[common], help="single noisy NOON configuration")
    p.add_argument("--n", type=int, default=1)
    p.add_argument("--alpha", type=float, default=0.0)
    p.add_argument("--eta", type=float, default=0.8)
    p.add_argument("--theta", type=float, default=math.pi / 2)
    p.add_argument("--c", type=float, default=DEFAULT_CUTOFF)
    p.add_argument("--n-int", type=_even_list, default=4)
    p.set_defaults(func=cmd_noon)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.verbose:
        logging.basicConfig(level=logging.DEBUG if args.verbose > 1 else logging.INFO, stream=sys.stderr)
    try:
        return args.func(args)
    except (UsageError, ParseError) as exc:
        print(f"steerdual: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except InvalidInputError as exc:
        print(f"steerdual: invalid input: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SteeringError as exc:
        print(f"steerdual: computation failed: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
