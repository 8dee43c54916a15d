"""Command-line interface: ``pskc <command> [options]``.

Exit codes: 0 success, 1 usage or parameter error, 2 data error.
"""

from __future__ import annotations

import argparse
import difflib
import sys
import time
from pathlib import Path

import numpy as np

from . import _kernels
from .data import (
    RING_G_VERSION,
    generate_gaussian_mixture,
    generate_ring_g,
    load_csv,
    load_image_cielab,
    two_tone_image,
    write_csv,
    write_labels,
    write_png,
    write_segmented_image,
)
from .engine import PskcParams, cluster, max_iterations, post_process
from .evaluation import f1_score, post_process_report, scaleup_bench, stability_trial
from .exceptions import DataFormatError, InvalidInputError, InvalidParameterError
from .isolation import KernelParams, load_model, save_model

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2

TUNING_GUIDE = """\
tuning:
  Start with t=100 and rho=0.1, then search psi and tau.
  If clusters are joined but need to be split, increase psi.
  If clusters are split but need to be joined, decrease tau.
  Larger t lowers the run-to-run variance at a proportional cost.
"""


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------

def _kernel_flags(p, psi, tau):
    g = p.add_argument_group("clustering parameters")
    g.add_argument("--psi", type=int, default=psi, help=f"Voronoi cells per partitioning (default {psi})")
    g.add_argument("--t", type=int, default=100, help="number of partitionings (default 100)")
    g.add_argument("--tau", type=float, default=tau, help=f"final similarity threshold in (0,1) (default {tau})")
    g.add_argument("--rho", type=float, default=0.1, help="growth rate in (0,1) (default 0.1)")
    g.add_argument("--seed", type=int, default=42, help="kernel sampling seed (default 42)")
    g.add_argument("--no-post", action="store_true", help="skip the post-processing pass")
    g.add_argument("--dry-run", action="store_true", help="validate the settings, print the round bound and exit")


def _common_flags(p):
    p.add_argument("--threads", type=int, default=None,
                   help="worker threads for the compiled kernels (PSKC_THREADS overrides)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="pskc", description="Grow clusters of points under an Isolation Kernel set similarity.")
    sub = parser.add_subparsers(dest="command", metavar="command", parser_class=_Parser)
    sub.required = True

    p = sub.add_parser(
        "cluster",
        help="cluster the rows of a CSV file",
        epilog=TUNING_GUIDE,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    p.add_argument("--input", required=True, help="CSV of points, one per row")
    p.add_argument("--out", help="write 'index,label' rows here (noise is -1)")
    p.add_argument("--label-col", help="column holding ground truth: 'first', 'last' or an index")
    p.add_argument("--save-model", help="write the kernel model to this file")
    p.add_argument("--load-model", help="reuse a saved kernel model instead of sampling one")
    _kernel_flags(p, psi=16, tau=0.1)
    _common_flags(p)

    p = sub.add_parser(
        "segment",
        help="segment a PNG image in CIELAB space",
        epilog=TUNING_GUIDE,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    p.add_argument("--input", required=True, help="8-bit RGB PNG")
    p.add_argument("--out", required=True, help="segmented PNG (cluster mean colours, noise magenta)")
    p.add_argument("--labels", help="also write per-pixel labels as CSV")
    p.add_argument("--masks", help="directory for one black/white mask per cluster")
    _kernel_flags(p, psi=8, tau=0.1)
    _common_flags(p)

    p = sub.add_parser("bench", help="time clustering on Gaussian mixtures of growing size")
    p.add_argument("--sizes", required=True, help="comma-separated ascending sizes, e.g. 10000,20000")
    p.add_argument("--k", type=int, default=4, help="mixture components (default 4)")
    p.add_argument("--spread", type=float, default=0.1, help="blob standard deviation (default 0.1)")
    p.add_argument("--repeats", type=int, default=3, help="runs per size; the median is reported (default 3)")
    p.add_argument("--out", help="write the CSV table here instead of stdout")
    _kernel_flags(p, psi=32, tau=0.05)
    _common_flags(p)

    p = sub.add_parser("eval", help="score clustering of a labeled CSV, optionally over several seeds")
    p.add_argument("--input", required=True, help="CSV of points with a ground-truth column")
    p.add_argument("--label-col", default="last", help="ground-truth column (default last)")
    p.add_argument("--trials", type=int, default=1, help="runs with seeds seed, seed+1, ... (default 1)")
    p.add_argument("--out", help="write the per-trial scores as CSV")
    _kernel_flags(p, psi=16, tau=0.1)
    _common_flags(p)

    p = sub.add_parser("gen", help="generate synthetic datasets")
    p.add_argument("--kind", choices=["ring-g", "mixture", "two-tone"], required=True)
    p.add_argument("--out", required=True, help="CSV (truth in the last column) or PNG for two-tone")
    p.add_argument("--n-per-cluster", type=int, default=500)
    p.add_argument("--k", type=int, default=4, help="mixture components")
    p.add_argument("--spread", type=float, default=0.1, help="mixture blob standard deviation")
    p.add_argument("--noise", type=float, default=0.0, help="ring-g background noise fraction")
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("inspect", help="print the header of a saved kernel model")
    p.add_argument("--model", required=True)
    return parser


def _suggest(parser: argparse.ArgumentParser, argv: list[str], message: str) -> str:
    """Add a 'did you mean' hint for a misspelt command or flag."""
    sub_action = next(a for a in parser._actions if isinstance(a, argparse._SubParsersAction))
    commands = list(sub_action.choices)
    if not argv or argv[0] not in commands:
        word = argv[0] if argv else ""
        close = difflib.get_close_matches(word, commands, n=1)
        return message + (f"\n  did you mean '{close[0]}'?" if close else "")
    sub = sub_action.choices[argv[0]]
    known = [s for a in sub._actions for s in a.option_strings]
    for tok in argv[1:]:
        if tok.startswith("--") and tok.split("=", 1)[0] not in known:
            close = difflib.get_close_matches(tok.split("=", 1)[0], known, n=1)
            if close:
                return message + f"\n  did you mean '{close[0]}'?"
    return message


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------

def _params(args) -> PskcParams:
    return PskcParams(tau=args.tau, rho=args.rho, kernel=KernelParams(psi=args.psi, t=args.t, rng_seed=args.seed))


def _summary(result, out=None):
    out = out or sys.stdout
    tm = result.timings
    print(f"k = {result.k}", file=out)
    print(f"noise = {result.noise_count}", file=out)
    print(f"objective = {result.objective:.6f}", file=out)
    print(f"iterations per cluster = {result.per_cluster_iterations}", file=out)
    print(f"reassigned = {result.reassigned}", file=out)
    print(
        f"runtime (s): build {tm.model_build_s:.3f}, embed {tm.embed_s:.3f}, "
        f"cluster {tm.cluster_s:.3f}, post {tm.post_s:.3f}, total {tm.total_s:.3f}",
        file=out,
    )


def _run_clustering(data, params, args, model=None):
    before, model, codes = cluster(data, params, model=model)
    after = before if args.no_post else post_process(before, codes, model.psi)
    return before, after, model


def cmd_cluster(args) -> int:
    ds = load_csv(args.input, label_col=args.label_col)
    model = load_model(args.load_model) if args.load_model else None
    _, result, model = _run_clustering(ds.data, _params(args), args, model)
    if args.out:
        write_labels(args.out, result.labels)
    if args.save_model:
        save_model(model, args.save_model)
    _summary(result)
    if ds.truth is not None:
        print(f"F1 = {f1_score(result.labels, ds.truth):.4f}")
    return EXIT_OK


def cmd_segment(args) -> int:
    image = load_image_cielab(args.input)
    _, result, _ = _run_clustering(image.pixels, _params(args), args)
    write_segmented_image(args.out, image, result.labels, masks_dir=args.masks)
    if args.labels:
        write_labels(args.labels, result.labels)
    print(f"image = {image.width}x{image.height}")
    _summary(result)
    return EXIT_OK


def _parse_sizes(text: str) -> list[int]:
    try:
        sizes = [int(s) for s in text.split(",") if s.strip()]
    except ValueError:
        raise InvalidParameterError(f"sizes must be comma-separated integers, got {text!r}") from None
    if not sizes or any(s < 2 for s in sizes):
        raise InvalidParameterError(f"sizes must be integers >= 2, got {text!r}")
    return sizes


def cmd_bench(args) -> int:
    sizes = _parse_sizes(args.sizes)
    start = time.perf_counter()
    table = scaleup_bench(sizes, _params(args), k=args.k, spread=args.spread, repeats=args.repeats, seed=args.seed)
    text = table.to_csv()
    if args.out:
        Path(args.out).write_text(text)
        print(table.as_text())
    else:
        sys.stdout.write(text)
    print(f"bench wall time {time.perf_counter() - start:.1f} s", file=sys.stderr)
    return EXIT_OK


def cmd_eval(args) -> int:
    ds = load_csv(args.input, label_col=args.label_col)
    if ds.truth is None:
        raise InvalidInputError("eval needs a ground-truth column")
    params = _params(args)
    if args.trials >= 2:
        summary = stability_trial(ds, params, trials=args.trials, apply_post=not args.no_post)
        for seed, score in zip(summary.seeds, summary.scores):
            print(f"seed {seed}: F1 = {score:.4f}")
        print(f"F1 min/median/max = {summary.min:.4f} / {summary.median:.4f} / {summary.max:.4f}, IQR = {summary.iqr:.4f}")
        rows = list(zip(summary.seeds, summary.scores))
    else:
        before, after, _ = _run_clustering(ds.data, params, args)
        report = post_process_report(before, after)
        report.f1 = f1_score(after.labels, ds.truth)
        print(report.as_text())
        print(f"iterations per cluster = {after.per_cluster_iterations}")
        rows = [(args.seed, report.f1)]
    if args.out:
        Path(args.out).write_text("seed,f1\n" + "".join(f"{s},{f:.6f}\n" for s, f in rows))
    return EXIT_OK


def cmd_gen(args) -> int:
    if args.kind == "two-tone":
        write_png(args.out, two_tone_image(seed=args.seed))
        print(f"wrote {args.out}")
        return EXIT_OK
    if args.kind == "ring-g":
        ds = generate_ring_g(args.n_per_cluster, noise_fraction=args.noise, seed=args.seed)
        note = RING_G_VERSION
    else:
        ds = generate_gaussian_mixture(args.k, args.n_per_cluster, args.spread, seed=args.seed)
        note = f"mixture k={args.k} spread={args.spread}"
    write_csv(args.out, ds.data, ds.truth)
    print(f"wrote {ds.n} points ({note}) to {args.out}")
    return EXIT_OK


def cmd_inspect(args) -> int:
    model = load_model(args.model)
    print(f"dimension = {model.d}")
    print(f"psi = {model.psi}")
    print(f"t = {model.t}")
    print(f"seed = {model.rng_seed}")
    lo, hi = model.centres.min(axis=(0, 1)), model.centres.max(axis=(0, 1))
    print(f"centre bounds = {np.round(lo, 4).tolist()} .. {np.round(hi, 4).tolist()}")
    return EXIT_OK


COMMANDS = {
    "cluster": cmd_cluster,
    "segment": cmd_segment,
    "bench": cmd_bench,
    "eval": cmd_eval,
    "gen": cmd_gen,
    "inspect": cmd_inspect,
}


def run(argv=None) -> int:
    """Execute one command and return its exit code."""
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(_suggest(parser, argv, str(exc)), file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help
        return int(exc.code or 0)

    try:
        if hasattr(args, "tau"):
            params = _params(args)
            if args.dry_run:
                print(f"max_iterations = {max_iterations(params.tau, params.rho)}")
                return EXIT_OK
        if hasattr(args, "threads"):
            _kernels.set_num_threads(_kernels.threads_from_env(args.threads))
        return COMMANDS[args.command](args)
    except InvalidParameterError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DataFormatError, InvalidInputError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
