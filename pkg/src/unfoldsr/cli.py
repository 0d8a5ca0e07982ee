"""Command-line entry point.

Noise levels are given in 0-255 units everywhere (2.55 is 1%).
Exit codes: 0 success, 1 usage error, 2 runtime error.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .degradation import (BENCHMARK_KERNELS, KERNEL_FORMAT_VERSION, DegradationSpec, degrade,
                          gaussian_kernel, kernel_center_of_mass, load_benchmark_kernel,
                          motion_kernel, read_kernel, write_kernel)
from .imaging import make_rng, read_png, write_png
from .priors.weights import WEIGHTS_FORMAT_VERSION

log = logging.getLogger("unfoldsr")

EXIT_OK, EXIT_USAGE, EXIT_RUNTIME = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _kernel_arg(value: str) -> np.ndarray:
    """A kernel file, or the id of a bundled benchmark kernel."""
    if Path(value).is_file():
        return read_kernel(value)
    if value in BENCHMARK_KERNELS:
        return load_benchmark_kernel(value)
    raise FileNotFoundError(f"kernel {value!r} is neither a file nor a benchmark kernel id")


def _write_text(path, text: str) -> None:
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


# -- subcommands -------------------------------------------------------------

def cmd_degrade(args) -> int:
    x = read_png(args.hr)
    spec = DegradationSpec(args.scale, _kernel_arg(args.kernel), args.noise)
    y = degrade(x, spec, make_rng(args.seed))
    write_png(args.output, y, bits=args.bits)
    log.info("wrote %s (%dx%d)", args.output, y.shape[1], y.shape[0])
    return EXIT_OK


def _schedule_from_args(args):
    from .schedule import analytic_schedule, mlp_schedule

    if getattr(args, "hyper_weights", None):
        from .priors.weights import load_weights

        return mlp_schedule(args.noise, args.scale, load_weights(args.hyper_weights, "hyper"))
    return analytic_schedule(args.noise, args.scale, args.iters, args.beta_start, args.lambda_)


def cmd_sr(args) -> int:
    from .priors.tv import IdentityPrior, TVPrior
    from .solver import super_resolve

    y = read_png(args.lr)
    spec = DegradationSpec(args.scale, _kernel_arg(args.kernel), args.noise)
    schedule = _schedule_from_args(args)
    if args.dump_schedule:
        _write_text(args.dump_schedule, schedule.to_csv())
    if args.prior == "tv":
        prior = TVPrior(tv_scale=args.tv_scale, iters=args.tv_iters)
    elif args.prior == "identity":
        prior = IdentityPrior()
    else:
        if not args.weights:
            raise UsageError("sr: --prior cnn requires --weights")
        from .priors.resunet import ResUNetPrior
        from .priors.weights import load_weights

        prior = ResUNetPrior(load_weights(args.weights))
    want_trace = args.trace_dir is not None
    result = super_resolve(y, spec, prior, schedule, boundary=args.boundary, trace=want_trace)
    x = result[0] if want_trace else result
    write_png(args.output, x, bits=args.bits)
    if want_trace:
        from .figures import plot_trace

        trace = result[1]
        out_dir = Path(args.trace_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        write_png(out_dir / "x0.png", trace.x0)
        for kind, k, img in trace.steps():
            write_png(out_dir / f"{kind}{k}.png", img)
        plot_trace(trace, out_dir / "trace.png")
    return EXIT_OK


def cmd_kernel_gen(args) -> int:
    if args.type == "iso":
        k = gaussian_kernel(args.size, args.width, args.width, 0.0)
    elif args.type == "aniso":
        k = gaussian_kernel(args.size, args.width, args.width_y or args.width, args.theta)
    elif args.type == "motion":
        k = motion_kernel(args.size, args.steps, make_rng(args.seed))
    else:
        if args.id not in BENCHMARK_KERNELS:
            raise UsageError(f"kernel gen: --id must be one of {', '.join(BENCHMARK_KERNELS)}")
        k = load_benchmark_kernel(args.id)
    write_kernel(args.output, k)
    if args.plot:
        from .figures import plot_kernel

        plot_kernel(k, args.plot)
    return EXIT_OK


def describe_kernel(k: np.ndarray) -> str:
    com = kernel_center_of_mass(k)
    return (
        f"size: {k.shape[0]}x{k.shape[1]}\n"
        f"sum: {k.sum():.8f}\n"
        f"center_of_mass: ({com[0]:.4f}, {com[1]:.4f})\n"
        f"min: {k.min():.6g}\n"
        f"max: {k.max():.6g}\n"
    )


def cmd_kernel_show(args) -> int:
    k = _kernel_arg(args.path)
    sys.stdout.write(describe_kernel(k))
    if args.plot:
        from .figures import plot_kernel

        plot_kernel(k, args.plot, title=Path(args.path).name)
    return EXIT_OK


def cmd_estimate(args) -> int:
    from .imaging import crop_to_multiple
    from .kernel_estimation import bicubic_downsample, estimate_equivalent_kernel

    paths = sorted(Path(args.hr_dir).glob("*.png"))
    if not paths:
        raise FileNotFoundError(f"no PNG images in {args.hr_dir}")
    pairs = []
    for p in paths:
        hr = crop_to_multiple(read_png(p), args.scale)
        pairs.append((hr, bicubic_downsample(hr, args.scale)))
    est = estimate_equivalent_kernel(pairs, args.scale, args.size)
    write_kernel(args.output, est.kernel)
    c = args.size // 2
    report = describe_kernel(est.kernel) + (
        f"residual_rmse: {est.rmse:.6e}\n"
        f"shift_from_middle: ({est.center_of_mass[0] - c:.4f}, {est.center_of_mass[1] - c:.4f})\n"
        f"samples: {est.n_samples}\n"
    )
    _write_text(args.report, report)
    if args.plot:
        from .figures import plot_kernel

        plot_kernel(est.kernel, args.plot, title=f"bicubic x{args.scale}")
    return EXIT_OK


def cmd_bench(args) -> int:
    from .bench import BenchConfig, load_config, rows_to_csv, run_benchmark

    cfg = load_config(args.config) if args.config else BenchConfig()
    cfg = cfg.with_overrides(
        seed=args.seed, crop=args.crop, weights=args.weights, iters=args.iters,
        methods=tuple(args.methods.split(",")) if args.methods else None,
        kernels=tuple(args.kernels.split(",")) if args.kernels else None,
        scales=tuple(int(s) for s in args.scales.split(",")) if args.scales else None,
        noises=tuple(float(s) for s in args.noises.split(",")) if args.noises else None,
    )
    rows = run_benchmark(args.dataset, cfg, jobs=args.jobs)
    _write_text(args.output, rows_to_csv(rows, timing=args.timing))
    if args.plot:
        from .figures import plot_bench

        plot_bench(rows, args.plot)
    return EXIT_OK


def cmd_dump_schedule(args) -> int:
    schedule = _schedule_from_args(args)
    _write_text(args.output, schedule.to_csv())
    if args.plot:
        from .figures import plot_schedule

        plot_schedule({f"x{args.scale}, noise {args.noise:g}": schedule}, args.plot)
    return EXIT_OK


# -- parser ------------------------------------------------------------------

def _add_schedule_flags(p):
    from .schedule import DEFAULT_BETA_START255, DEFAULT_ITERS, DEFAULT_LAMBDA

    p.add_argument("--iters", type=int, default=DEFAULT_ITERS, help="unfolded iterations K")
    p.add_argument("--beta-start", type=float, default=DEFAULT_BETA_START255,
                   help="first prior noise level, 0-255 units")
    p.add_argument("--lambda", dest="lambda_", type=float, default=DEFAULT_LAMBDA,
                   help="trade-off weight of the prior")
    p.add_argument("--hyper-weights", help="UWT1 file with learned schedule weights")


def build_parser() -> argparse.ArgumentParser:
    version = (f"%(prog)s {__version__} (kernel format KRN{KERNEL_FORMAT_VERSION}, "
               f"weights format UWT{WEIGHTS_FORMAT_VERSION})")
    parser = _Parser(prog="unfoldsr", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=version)
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", parser_class=_Parser, required=True)

    p = sub.add_parser("degrade", help="synthesize an LR image from an HR image")
    p.add_argument("--hr", required=True)
    p.add_argument("--kernel", required=True, help="kernel file or benchmark kernel id")
    p.add_argument("--scale", type=int, required=True)
    p.add_argument("--noise", type=float, default=0.0, help="noise std, 0-255 units")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--bits", type=int, choices=(8, 16), default=8)
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_degrade)

    p = sub.add_parser("sr", help="super-resolve an LR image")
    p.add_argument("--lr", required=True)
    p.add_argument("--kernel", required=True, help="kernel file or benchmark kernel id")
    p.add_argument("--scale", type=int, required=True)
    p.add_argument("--noise", type=float, default=0.0, help="noise std, 0-255 units")
    p.add_argument("--prior", choices=("tv", "cnn", "identity"), default="tv")
    p.add_argument("--weights", help="UWT1 ResUNet weights (for --prior cnn)")
    p.add_argument("--tv-scale", type=float, default=0.5)
    p.add_argument("--tv-iters", type=int, default=30)
    p.add_argument("--boundary", choices=("circular", "taper"), default="circular",
                   help="'taper' pads real LR images before solving")
    p.add_argument("--trace-dir", help="write every z_k / x_k and a montage here")
    p.add_argument("--dump-schedule", metavar="CSV", help="write (k, alpha, beta) here")
    p.add_argument("--bits", type=int, choices=(8, 16), default=8)
    p.add_argument("-o", "--output", required=True)
    _add_schedule_flags(p)
    p.set_defaults(func=cmd_sr)

    p = sub.add_parser("kernel", help="generate or inspect kernel files")
    ksub = p.add_subparsers(dest="kernel_command", parser_class=_Parser, required=True)
    g = ksub.add_parser("gen", help="write a kernel file")
    g.add_argument("--type", choices=("iso", "aniso", "motion", "bench"), required=True)
    g.add_argument("--width", type=float, default=1.6, help="Gaussian std along x (taps)")
    g.add_argument("--width-y", type=float, help="Gaussian std along y (aniso)")
    g.add_argument("--theta", type=float, default=0.0, help="rotation in radians (aniso)")
    g.add_argument("--size", type=int, default=25)
    g.add_argument("--steps", type=int, default=64, help="trajectory length (motion)")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--id", help="benchmark kernel id (with --type bench)")
    g.add_argument("--plot", help="also render the kernel to this image")
    g.add_argument("-o", "--output", required=True)
    g.set_defaults(func=cmd_kernel_gen)
    sh = ksub.add_parser("show", help="print kernel statistics")
    sh.add_argument("path")
    sh.add_argument("--plot", help="also render the kernel to this image")
    sh.set_defaults(func=cmd_kernel_show)

    p = sub.add_parser("estimate-bicubic-kernel",
                       help="fit the classical-model kernel equivalent to bicubic downscaling")
    p.add_argument("--hr-dir", required=True)
    p.add_argument("--scale", type=int, choices=(2, 3, 4), required=True)
    p.add_argument("--size", type=int, default=25)
    p.add_argument("--report", help="write the text report here (default: stdout)")
    p.add_argument("--plot", help="also render the kernel to this image")
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("bench", help="PSNR table over kernels x scales x noise levels")
    p.add_argument("--dataset", required=True, help="directory of PNG ground-truth images")
    p.add_argument("--config", help="TOML file; flags override its values")
    p.add_argument("--methods", help="comma-separated method ids")
    p.add_argument("--kernels", help="comma-separated benchmark kernel ids")
    p.add_argument("--scales", help="comma-separated scale factors")
    p.add_argument("--noises", help="comma-separated noise levels, 0-255 units")
    p.add_argument("--iters", type=int)
    p.add_argument("--crop", type=int, help="center-crop images to this side first")
    p.add_argument("--weights", help="ResUNet weights for the usr-cnn method")
    p.add_argument("--seed", type=int)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--timing", action="store_true",
                   help="fill runtime_ms (makes the CSV run-dependent)")
    p.add_argument("--plot", help="render a PSNR bar chart to this image")
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("dump-schedule", help="print the (k, alpha, beta) schedule as CSV")
    p.add_argument("--noise", type=float, default=0.0, help="noise std, 0-255 units")
    p.add_argument("--scale", type=int, default=4)
    p.add_argument("--plot", help="render alpha/beta curves to this image")
    p.add_argument("-o", "--output", default="-")
    _add_schedule_flags(p)
    p.set_defaults(func=cmd_dump_schedule)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except (OSError, ValueError, KeyError, RuntimeError) as exc:
        print(f"unfoldsr: error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
