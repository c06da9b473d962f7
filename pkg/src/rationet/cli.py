"""Command-line harness.

Subcommands
-----------
run            execute a configured experiment (CSV + model + figure output)
verify-losses  run the design checks over the whole loss catalog
gradcheck      compare analytic network gradients against finite differences
roc            build a ROC table (and figure) from two score files
plot-script    emit a gnuplot script for a previously written CSV

Thread control: --threads (or the RATIO_NET_THREADS environment variable)
pins the BLAS thread pools.  It must take effect before the numerical
modules load, which is why the heavy imports live inside the handlers.

Exit codes: 0 success, 1 runtime failure, 2 configuration/usage error.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

from .errors import ConfigError, RatioNetError

_BLAS_VARS = (
    "OMP_NUM_THREADS",
    "OPENBLAS_NUM_THREADS",
    "MKL_NUM_THREADS",
    "NUMEXPR_NUM_THREADS",
    "VECLIB_MAXIMUM_THREADS",
)


def _apply_threads(flag_value) -> None:
    value = flag_value if flag_value is not None \
        else os.environ.get("RATIO_NET_THREADS")
    if value is None:
        return
    try:
        count = int(value)
        if count < 1:
            raise ValueError
    except ValueError:
        raise ConfigError(f"thread count must be a positive integer, got {value!r}")
    for var in _BLAS_VARS:
        os.environ[var] = str(count)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--threads", default=None, metavar="N",
                        help="cap BLAS threads (default: RATIO_NET_THREADS)")

    parser = argparse.ArgumentParser(
        prog="rationet",
        description="likelihood-ratio estimation by paired-loss training",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", parents=[common],
                           help="run an experiment described by a config file")
    p_run.add_argument("--config", required=True, help="INI config path")
    p_run.add_argument("--out-dir", default="rationet-out",
                       help="directory for artifacts (created if missing)")
    p_run.add_argument("--seed-override", type=int, default=None,
                       help="replace the config seed list with this one seed")

    sub.add_parser("verify-losses", parents=[common],
                   help="check the loss catalog's design properties")

    p_grad = sub.add_parser("gradcheck", parents=[common],
                            help="finite-difference audit of network gradients")
    p_grad.add_argument("--trials", type=int, default=20)
    p_grad.add_argument("--seed-override", type=int, default=None)

    p_roc = sub.add_parser("roc", parents=[common],
                           help="ROC table from two files of scores")
    p_roc.add_argument("scores0", help="one score per line, nominal class")
    p_roc.add_argument("scores1", help="one score per line, alternative class")
    p_roc.add_argument("--out-dir", default=".")

    p_plot = sub.add_parser("plot-script", parents=[common],
                            help="emit a gnuplot script for CSV artifacts")
    p_plot.add_argument("csv", nargs="+", help="CSV files written by run/roc")
    p_plot.add_argument("--out-dir", default=".")
    return parser


def _cmd_run(args) -> int:
    from .config import load_config
    from .experiments import run_experiment

    cfg = load_config(args.config)
    if args.seed_override is not None:
        cfg.seeds = [args.seed_override]
    manifest = run_experiment(cfg, args.out_dir)
    print(f"wrote {manifest}")
    return 0


def _cmd_verify_losses(args) -> int:
    from .losses import verify_catalog

    failures = 0
    for name, ok, message in verify_catalog():
        line = f"{'ok  ' if ok else 'FAIL'} {name}"
        if not ok:
            line += f": {message}"
            failures += 1
        print(line)
    # Convexity flags are part of the design contract for the two families
    # with a certification range.
    from .losses import preset

    expectations = [
        ("A1", -1.0, True), ("A1", -0.5, True), ("A1", 0.0, True),
        ("A1", 1.0, False),
        ("B1", 0.0, True), ("B1", 0.5, True), ("B1", 1.0, True),
        ("B1", 2.0, False),
    ]
    for family, alpha, expected in expectations:
        built = preset(family, alpha=alpha)
        ok = built.pair.convex_certified == expected
        print(f"{'ok  ' if ok else 'FAIL'} {built.name} convex flag "
              f"{built.pair.convex_certified} (expected {expected})")
        failures += 0 if ok else 1
    if failures:
        print(f"{failures} check(s) failed", file=sys.stderr)
        return 1
    return 0


def _cmd_gradcheck(args) -> int:
    import numpy as np

    from . import network

    seed = 0 if args.seed_override is None else args.seed_override
    rng = np.random.default_rng(seed)
    outputs = ["identity", "relu", "elu", "exp", "sigmoid", "tanh",
               "bounded_rational"]
    worst = {"theta": 0.0, "input": 0.0, "mixed": 0.0}
    for trial in range(args.trials):
        k = int(rng.integers(1, 6))
        hidden = int(rng.integers(1, 9))
        g0 = network.output_from_name(outputs[trial % len(outputs)])
        net = network.Mlp2.init(k, hidden, g0, seed=rng.integers(2 ** 31))
        x = rng.standard_normal(k)
        p = rng.standard_normal(k)
        # stay away from the ReLU kinks where derivatives genuinely jump
        while np.any(np.abs(net.a1 @ x + net.a0) < 1e-4):
            x = rng.standard_normal(k)

        def rel(a, b):
            denom = max(1e-8, float(np.max(np.abs(b))))
            return float(np.max(np.abs(a - b))) / denom

        worst["theta"] = max(worst["theta"], rel(
            network.grad_theta(net, x), network.fd_grad_theta(net, x)))
        worst["input"] = max(worst["input"], rel(
            network.grad_input(net, x), network.fd_grad_input(net, x)))
        worst["mixed"] = max(worst["mixed"], rel(
            network.grad_theta_of_input_grad(net, x, p),
            network.fd_grad_theta_of_input_grad(net, x, p)))
    status = 0
    for kind, err in worst.items():
        verdict = "ok  " if err < 1e-4 else "FAIL"
        if err >= 1e-4:
            status = 1
        print(f"{verdict} {kind} gradient max relative error {err:.3e}")
    return status


def _cmd_roc(args) -> int:
    import numpy as np

    from . import figures
    from .evaluation import roc

    scores0 = np.loadtxt(args.scores0, ndmin=1)
    scores1 = np.loadtxt(args.scores1, ndmin=1)
    curve = roc(scores0, scores1)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    csv_path = out / "roc.csv"
    with open(csv_path, "w", encoding="ascii", newline="\n") as fh:
        fh.write(curve.to_csv())
    figures.save_roc_figure(out / "roc.png", {"scores": curve})
    print(f"wrote {csv_path} (auc {curve.auc:.6f}) and {out / 'roc.png'}")
    return 0


_GNUPLOT_TEMPLATE = """set terminal pngcairo size 720,540
set output '{stem}.png'
set datafile separator ','
set key autotitle columnhead
set xlabel '{xlabel}'
set ylabel '{ylabel}'
plot '{csv}' using 2:3 with lines lw 2
"""


def _cmd_plot_script(args) -> int:
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for csv_file in args.csv:
        csv_path = Path(csv_file)
        with open(csv_path, "r", encoding="ascii") as fh:
            header = fh.readline().strip().split(",")
        if len(header) < 3:
            raise ConfigError(
                f"{csv_file}: need a threshold,x,y header to plot"
            )
        script = _GNUPLOT_TEMPLATE.format(
            stem=csv_path.stem, csv=csv_path.name,
            xlabel=header[1], ylabel=header[2],
        )
        script_path = out / (csv_path.stem + ".gnuplot")
        with open(script_path, "w", encoding="ascii", newline="\n") as fh:
            fh.write(script)
        print(f"wrote {script_path}")
    return 0


_HANDLERS = {
    "run": _cmd_run,
    "verify-losses": _cmd_verify_losses,
    "gradcheck": _cmd_gradcheck,
    "roc": _cmd_roc,
    "plot-script": _cmd_plot_script,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        _apply_threads(args.threads)
        return _HANDLERS[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (RatioNetError, OSError, ValueError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
