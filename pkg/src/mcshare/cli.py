"""Batch command-line front end.

    mcshare p1 --theta-db 0 [--epsilon E] ...
    mcshare p2 --theta-db 0 [--k K] ...
    mcshare rate ...
    mcshare mc --link bh|al [--theta-db T] [--runs N] ...
    mcshare figure fig2|fig3|fig4|fig5|fig6|custom [--out DIR] ...
    mcshare validate [--only C1..C10] [--out DIR] ...

Point commands print stable key=value lines for scripting. Figure runs
write one CSV (plus an SVG plot) per figure. validate executes the
cross-validation suite and exits nonzero if any hard check fails.
"""

import argparse
import os
import sys

from . import __version__, analytic, figures, montecarlo, validation
from .params import FULL_PROFILE, ParameterError, load_config, validate as validate_params
from .specialfn import QuadratureError


def _fmt(value) -> str:
    return format(value, ".12g") if isinstance(value, float) else str(value)


def _add_common(parser):
    parser.add_argument("--config", metavar="PATH", help="flat key=value config file")
    parser.add_argument(
        "--set",
        dest="overrides",
        action="append",
        default=[],
        metavar="key=value",
        help="override one parameter (repeatable)",
    )
    parser.add_argument("--out", metavar="DIR", default=".", help="output directory")
    parser.add_argument("--seed", type=int, help="64-bit master seed")
    parser.add_argument("--runs", type=int, help="Monte Carlo realization count")
    parser.add_argument("--threads", type=int, default=1, help="worker threads (never changes results)")
    parser.add_argument("--format", choices=["csv"], default="csv", help="tabular output format")
    parser.add_argument("--full-profile", action="store_true", help="40x40 km window, 10,000 runs")


def _build_parser():
    parser = argparse.ArgumentParser(prog="mcshare", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"mcshare {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p1 = sub.add_parser("p1", help="analytic backhaul success probability")
    p1.add_argument("--theta-db", type=float, required=True)
    p1.add_argument("--epsilon", type=float, help="penetration factor; 0 selects the isolation limit")
    _add_common(p1)

    p2 = sub.add_parser("p2", help="analytic access-link success probability")
    p2.add_argument("--theta-db", type=float, required=True)
    p2.add_argument("--k", type=float, help="Rician K factor (linear)")
    p2.add_argument("--epsilon", type=float)
    _add_common(p2)

    rate = sub.add_parser("rate", help="analytic backhaul ergodic rate (nats/s/Hz)")
    rate.add_argument("--epsilon", type=float)
    _add_common(rate)

    mc = sub.add_parser("mc", help="Monte Carlo success estimate for one link")
    mc.add_argument("--link", choices=["bh", "al"], required=True)
    mc.add_argument("--theta-db", type=float, default=0.0)
    mc.add_argument("--epsilon", type=float)
    mc.add_argument("--k", type=float)
    _add_common(mc)

    fig = sub.add_parser("figure", help="run a figure sweep to CSV + SVG")
    fig.add_argument("figure_id", choices=figures.FIGURE_IDS)
    fig.add_argument("--no-plot", action="store_true", help="write only the CSV")
    fig.add_argument("--sweep", metavar="key=start:stop:step", help="axis for the custom figure")
    _add_common(fig)

    val = sub.add_parser("validate", help="run the cross-validation suite")
    val.add_argument("--only", metavar="CID", help="run a single criterion (C1..C10)")
    _add_common(val)

    return parser


def _collect_params(args):
    """defaults < config file < --set < dedicated flags; strict validation."""
    raw = {}
    if args.config:
        raw.update(load_config(args.config))
    for item in args.overrides:
        if "=" not in item:
            raise ParameterError([f"--set expects key=value, got {item!r}"])
        key, value = item.split("=", 1)
        raw[key.strip()] = value.strip()
    if args.full_profile:
        raw.update(FULL_PROFILE)
    if args.seed is not None:
        raw["seed"] = args.seed
    if args.runs is not None:
        raw["n_runs"] = args.runs
    if getattr(args, "k", None) is not None:
        raw["k_factor"] = args.k

    epsilon = getattr(args, "epsilon", None)
    if epsilon is not None and epsilon == 0.0 and args.command in ("p1", "p2", "rate"):
        # analytic isolation limit: bypass the strict 0 < eps bound
        raw.pop("epsilon", None)
        params = validate_params(raw)
        return params.with_overrides(epsilon=0.0)
    if epsilon is not None:
        raw["epsilon"] = epsilon
    return validate_params(raw)


def _cmd_p1(args, params):
    theta = 10.0 ** (args.theta_db / 10.0)
    value, inter = analytic.p1_success_detailed(theta, params)
    print(f"p1={_fmt(value)}")
    print(f"z_factor={_fmt(inter.z_factor)}")
    print(f"y_factor={_fmt(inter.y_factor)}")
    return 0


def _cmd_p2(args, params):
    theta = 10.0 ** (args.theta_db / 10.0)
    res = analytic.p2_series_detailed(theta, params)
    print(f"p2={_fmt(res.value)}")
    print(f"p2_simplified={_fmt(analytic.p2_series_simplified(theta, params))}")
    print(f"x_factor={_fmt(res.x_factor)}")
    return 0


def _cmd_rate(args, params):
    res = analytic.ergodic_rate_bh(params)
    print(f"rate={_fmt(res.integral_value)}")
    print(f"rate_est_error={_fmt(res.est_error)}")
    print(f"f_factor={_fmt(res.f_factor)}")
    return 0


def _cmd_mc(args, params):
    theta = 10.0 ** (args.theta_db / 10.0)
    est, redraws = montecarlo.estimate_success(
        args.link, [theta], params, n_runs=args.runs, seed=args.seed, threads=args.threads
    )
    e = est[0]
    print(f"p_hat={_fmt(e.p_hat)}")
    print(f"ci95={_fmt(e.ci95_halfwidth)}")
    print(f"n={e.n}")
    print(f"redraws={redraws}")
    return 0


def _parse_sweep(spec):
    if spec is None:
        return None
    key, _, grid = spec.partition("=")
    try:
        start, stop, step = (float(v) for v in grid.split(":"))
    except ValueError:
        raise ParameterError([f"--sweep expects key=start:stop:step, got {spec!r}"])
    if step <= 0 or stop < start:
        raise ParameterError([f"--sweep grid must have step > 0 and stop >= start, got {spec!r}"])
    n = int(round((stop - start) / step))
    return key.strip(), [start + i * step for i in range(n + 1)]


def _cmd_figure(args, params):
    written = figures.run_figure(
        args.figure_id,
        params,
        args.out,
        runs=args.runs,
        seed=args.seed,
        threads=args.threads,
        make_plot=not args.no_plot,
        sweep=_parse_sweep(args.sweep),
    )
    for path in written:
        print(path)
    return 0


def _cmd_validate(args, params):
    results = validation.run_all(params, threads=args.threads, only=args.only)
    lines = [r.line() for r in results]
    for line in lines:
        print(line)
    if args.out != ".":
        os.makedirs(args.out, exist_ok=True)
    report_path = os.path.join(args.out, "validation_report.txt")
    with open(report_path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")
    n_fail = sum(r.status == validation.FAIL for r in results)
    n_err = sum(r.status == validation.ERROR for r in results)
    print(f"# checks={len(results)} failures={n_fail} errors={n_err} report={report_path}")
    if n_err:
        return 3
    return 1 if n_fail else 0


_COMMANDS = {
    "p1": _cmd_p1,
    "p2": _cmd_p2,
    "rate": _cmd_rate,
    "mc": _cmd_mc,
    "figure": _cmd_figure,
    "validate": _cmd_validate,
}


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        params = _collect_params(args)
        return _COMMANDS[args.command](args, params)
    except ParameterError as exc:
        for msg in exc.violations:
            print(f"error: {msg}", file=sys.stderr)
        return 2
    except (ValueError, OSError, QuadratureError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
