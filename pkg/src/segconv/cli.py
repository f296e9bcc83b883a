"""Command line entry point: ``segconv verify|bench|flops|apply|train-demo``.

Exit codes: 0 success, 1 verification failure, 2 usage error, 3 I/O or parse
error.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import LayerShape, table4_report
from .bench import VARIANTS, bench_metadata, preset_shapes, records_to_csv, records_to_json, run_bench
from .exceptions import ContractError, ParseError, ShapeError
from .fused import default_workers, transpose_conv_fused, transpose_conv_fused_parallel
from .images import read_image, write_image
from .reference import geometry, transpose_conv_naive
from .segregation import segregate
from .tensor import read_tensor, tensors_equal_exact, write_tensor

EXIT_OK = 0
EXIT_MISMATCH = 1
EXIT_USAGE = 2
EXIT_IO = 3


class _UsageError(Exception):
    pass


def _emit(text, out):
    if out is None:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")
    else:
        Path(out).write_text(text if text.endswith("\n") else text + "\n")


# verify ---------------------------------------------------------------------


def _corrupt(sks):
    subs = [s.copy() for s in sks.subs]
    target = next(s for s in subs if s.size)
    target.reshape(-1)[0] += 1
    return dataclasses.replace(sks, subs=tuple(subs))


def _verify_case(rng, args, workers):
    n_in = int(rng.integers(1, args.max_size + 1))
    k = int(rng.integers(1, args.max_kernel + 1))
    p = int(rng.integers(0, args.max_padding + 1))
    cin = int(rng.integers(1, args.max_channels + 1))
    cout = int(rng.integers(1, args.max_channels + 1))
    if 2 * n_in - 1 + 2 * p < k:
        # kernel larger than the padded upsampled map: grow the input until it fits
        n_in = (k - 2 * p + 2) // 2
    x = rng.integers(-8, 9, size=(n_in, n_in, cin)).astype(np.float32)
    kernel = rng.integers(-8, 9, size=(k, k, cin, cout)).astype(np.float32)
    sks = segregate(kernel, p)
    if args.corrupt_subkernel:
        sks = _corrupt(sks)
    geom = geometry(n_in, k, k, p)
    expected = transpose_conv_naive(x, kernel, p)
    got = {
        "fused": transpose_conv_fused(x, sks, geom),
        "fused_parallel": transpose_conv_fused_parallel(x, sks, geom, workers),
    }
    params = {"N": n_in, "n": k, "P": p, "cin": cin, "cout": cout}
    for variant, out in got.items():
        if not tensors_equal_exact(out, expected):
            diff = np.argwhere(out != expected)
            first = tuple(int(v) for v in diff[0]) if diff.size else None
            return {**params, "variant": variant, "first_mismatch": first}
    return None


def cmd_verify(args):
    if args.cases < 0:
        raise _UsageError("--cases must be non-negative")
    for name in ("max_size", "max_kernel", "max_channels"):
        if getattr(args, name) < 1:
            raise _UsageError(f"--{name.replace('_', '-')} must be at least 1")
    if args.max_padding < 0:
        raise _UsageError("--max-padding must be non-negative")
    workers = args.workers or default_workers()
    if args.cases == 0:
        print("warning: --cases 0, nothing verified", file=sys.stderr)
    for case in range(args.cases):
        rng = np.random.default_rng([args.seed, case])
        failure = _verify_case(rng, args, workers)
        if failure is not None:
            print(
                f"MISMATCH case {case} (seed {args.seed}): "
                + ", ".join(f"{k}={v}" for k, v in failure.items()),
                file=sys.stderr,
            )
            return EXIT_MISMATCH
    _emit(f"ok: {args.cases} cases, fused and fused_parallel ({workers} workers) equal naive exactly", args.out)
    return EXIT_OK


# bench ----------------------------------------------------------------------


def cmd_bench(args):
    if args.reps < 3:
        raise _UsageError("--reps must be at least 3")
    workers = args.workers or default_workers()
    if args.preset == "custom":
        if args.kernel is None:
            raise _UsageError("custom preset needs --kernel N")
        shape = LayerShape(args.size, args.cin, args.cout, args.kernel, args.kernel, args.padding)
        shape.geometry  # reject degenerate shapes before timing
        shapes = [(f"custom {args.kernel}x{args.kernel}", shape)]
    else:
        try:
            shapes = preset_shapes(args.preset)
        except ContractError as exc:
            raise _UsageError(str(exc)) from None
        if args.kernel is not None:
            shapes = [(label, s) for label, s in shapes if s.kh == args.kernel]
            if not shapes:
                raise _UsageError(f"preset {args.preset!r} has no {args.kernel}x{args.kernel} kernel")
    records = run_bench(args.preset, workers=workers, reps=args.reps, seed=args.seed, shapes=shapes)
    meta = bench_metadata(args.preset, workers=workers, reps=args.reps, seed=args.seed, precision="single")
    text = records_to_json(records, meta, indent=2) if args.format == "json" else records_to_csv(records)
    _emit(text, args.out)
    return EXIT_OK


# flops ----------------------------------------------------------------------


def cmd_flops(args):
    report = table4_report(elem_bytes=args.elem_bytes)
    _emit(report.to_json() if args.format == "json" else report.to_csv(), args.out)
    for flag in report.flags:
        print(f"note: {flag}", file=sys.stderr)
    return EXIT_OK


# apply ----------------------------------------------------------------------


def _gaussian(n):
    sigma = max(n / 4.0, 0.5)
    ax = np.arange(n) - (n - 1) / 2.0
    g = np.exp(-(ax[:, None] ** 2 + ax[None, :] ** 2) / (2 * sigma**2))
    return g / g.sum()


def build_kernel(source, size, channels):
    """Kernel from a preset name (``ones``, ``gaussian``, ``random:<seed>``) or an ``SGC1`` file.

    ``ones`` and ``gaussian`` filter each channel on its own; ``random`` mixes
    all channels. A file holds ``(kh, kw, cin * cout)`` with ``cin`` equal to
    the image channel count.
    """
    if source in ("ones", "gaussian"):
        base = np.ones((size, size)) if source == "ones" else _gaussian(size)
        k = np.zeros((size, size, channels, channels), dtype=np.float32)
        for c in range(channels):
            k[:, :, c, c] = base
        return k
    if source.startswith("random:"):
        try:
            seed = int(source[len("random:") :])
        except ValueError:
            raise _UsageError(f"bad random kernel seed in {source!r}") from None
        rng = np.random.default_rng(seed)
        return rng.uniform(-1, 1, size=(size, size, channels, channels)).astype(np.float32)
    t = read_tensor(source)
    kh, kw, stacked = t.shape
    if stacked % channels:
        raise ContractError(
            f"kernel file has {stacked} channels, not a multiple of the image's {channels}"
        )
    return t.reshape(kh, kw, channels, stacked // channels)


def cmd_apply(args):
    image = read_image(args.image)
    kernel = build_kernel(args.kernel, args.kernel_size, image.shape[2])
    workers = args.workers or default_workers()
    if args.variant == "naive":
        out = transpose_conv_naive(image, kernel, args.padding)
    else:
        sks = segregate(kernel, args.padding)
        geom = geometry(image.shape[0], kernel.shape[0], kernel.shape[1], args.padding, n_in_w=image.shape[1])
        if args.variant == "fused":
            out = transpose_conv_fused(image, sks, geom)
        else:
            out = transpose_conv_fused_parallel(image, sks, geom, workers)
    write_tensor(args.out, out)
    if args.image_out:
        write_image(args.image_out, out)
    h, w, c = out.shape
    print(f"wrote {h}x{w}x{c} tensor to {args.out}")
    return EXIT_OK


# train-demo -----------------------------------------------------------------


def cmd_train_demo(args):
    from .netdemo import TrainConfig, compare_training, load_idx_dataset, synthetic_digits

    if args.iterations < 0:
        raise _UsageError("--iterations must be non-negative")
    if (args.images is None) != (args.labels is None):
        raise _UsageError("--images and --labels must be given together")
    if args.images is not None:
        dataset = load_idx_dataset(args.images, args.labels)
    else:
        dataset = synthetic_digits(args.samples, seed=args.seed)
    cfg = TrainConfig(iterations=args.iterations, learning_rate=args.learning_rate, seed=args.seed)
    conventional, proposed, ratio = compare_training(dataset, cfg)
    if args.format == "json":
        text = json.dumps(
            {"conventional": conventional.to_dict(), "proposed": proposed.to_dict(), "ratio": ratio},
            indent=2,
        )
    else:
        buf = io.StringIO()
        fields = ["model", "iterations", "wall_seconds", "initial_loss", "final_loss", "accuracy", "ratio"]
        writer = csv.DictWriter(buf, fieldnames=fields, lineterminator="\n")
        writer.writeheader()
        for rep in (conventional, proposed):
            row = {k: v for k, v in rep.to_dict().items() if k in fields}
            writer.writerow({**row, "ratio": ratio})
        text = buf.getvalue()
    _emit(text, args.out)
    print(f"conventional/proposed wall-time ratio: {ratio:.2f}", file=sys.stderr)
    return EXIT_OK


# parser ---------------------------------------------------------------------


def _non_negative(text):
    value = int(text)
    if value < 0:
        raise argparse.ArgumentTypeError(f"must be non-negative, got {value}")
    return value


def _positive(text):
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be positive, got {value}")
    return value


def build_parser():
    parser = argparse.ArgumentParser(
        prog="segconv",
        description="2x transpose convolution by kernel segregation: verify, benchmark, count, apply, train.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def output_flags(p, formats=("csv", "json"), default="csv"):
        p.add_argument("--format", choices=formats, default=default)
        p.add_argument("--out", metavar="PATH", help="write output here instead of stdout")

    def workers_flag(p):
        p.add_argument(
            "--workers", type=_positive, default=None, help="threads for fused_parallel (default: $SEGCONV_THREADS or 1)"
        )

    p = sub.add_parser("verify", help="fuzz fused and fused_parallel against the naive oracle")
    p.add_argument("--cases", type=int, default=200)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-size", type=int, default=16, help="input sizes drawn from 1..N")
    p.add_argument("--max-kernel", type=int, default=7, help="kernel sizes drawn from 1..n")
    p.add_argument("--max-padding", type=int, default=4, help="padding drawn from 0..P")
    p.add_argument("--max-channels", type=int, default=4, help="cin and cout drawn from 1..C")
    p.add_argument("--corrupt-subkernel", action="store_true", help=argparse.SUPPRESS)
    workers_flag(p)
    p.add_argument("--out", metavar="PATH")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("bench", help="time naive, fused and fused_parallel")
    p.add_argument("--preset", default="flowers", help="flowers, gan:<dcgan|artgan|gpgan|ebgan> or custom")
    p.add_argument("--kernel", type=_positive, default=None, help="kernel size (filters a preset; required for custom)")
    p.add_argument("--padding", type=_non_negative, default=0, help="padding for custom shapes")
    p.add_argument("--size", type=_positive, default=224, help="input size for custom shapes")
    p.add_argument("--cin", type=_positive, default=3)
    p.add_argument("--cout", type=_positive, default=1)
    p.add_argument("--reps", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    workers_flag(p)
    output_flags(p)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("flops", help="multiply/add counts for the GAN generator layers")
    p.add_argument("--elem-bytes", type=_positive, default=4, help="element size for memory savings")
    output_flags(p)
    p.set_defaults(func=cmd_flops)

    p = sub.add_parser("apply", help="transpose-convolve a PGM/PPM image")
    p.add_argument("image", help="input PGM (P2/P5) or PPM (P3/P6)")
    p.add_argument("--kernel", default="gaussian", help="ones, gaussian, random:<seed> or an SGC1 kernel file")
    p.add_argument("--kernel-size", type=_positive, default=5, help="size of preset kernels")
    p.add_argument("--padding", type=_non_negative, default=0)
    p.add_argument("--variant", choices=VARIANTS, default="fused")
    workers_flag(p)
    p.add_argument("--out", metavar="PATH", required=True, help="output SGC1 tensor file")
    p.add_argument("--image-out", metavar="PATH", help="also write a clamped 8-bit PGM/PPM")
    p.set_defaults(func=cmd_apply)

    p = sub.add_parser("train-demo", help="train the conventional and proposed demo networks")
    p.add_argument("--iterations", type=int, default=10_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--samples", type=_positive, default=2000, help="synthetic dataset size")
    p.add_argument("--learning-rate", type=float, default=0.01)
    p.add_argument("--images", metavar="PATH", help="IDX image file (with --labels)")
    p.add_argument("--labels", metavar="PATH", help="IDX label file (with --images)")
    output_flags(p, default="json")
    p.set_defaults(func=cmd_train_demo)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)  # exits with 2 on bad usage
    try:
        return args.func(args)
    except _UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"segconv {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ParseError as exc:
        print(f"segconv {args.command}: parse error: {exc}", file=sys.stderr)
        return EXIT_IO
    except OSError as exc:
        print(f"segconv {args.command}: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (ContractError, ShapeError) as exc:
        print(f"segconv {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
