"""``sketchkit`` command line: gen, sketch, reconstruct, info, finetune, analyze-delta, theory.

Every run writes a manifest (subcommand, resolved flags, seed, FNV-1a
digests of the input files, tool version). CSV outputs carry it as ``#``
comment lines; binary outputs get a ``<output>.manifest.txt`` sidecar.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

import numba
import numpy as np

from . import __version__
from .calibration import build_hessian, synth_calibration
from .delta import compare_sweep
from .finetune import OptimState, TrainTask, train
from .formats import read_mat1, read_skt1, read_skt1_header, skt1_size, write_mat1, write_skt1
from .numerics import make_rng
from .runtime import THREADS_ENV, reconstruct
from .sketch import SketchConfig, count_trainable_params, sketch_matrix
from .theory import PowerLawSpec, lowrank_error_theory, monte_carlo_fold, sketch_error_theory, synth_powerlaw

FNV_OFFSET = 0xCBF29CE484222325
FNV_PRIME = 0x100000001B3


@numba.njit(cache=True)
def _fnv1a64(data):
    h = np.uint64(FNV_OFFSET)
    prime = np.uint64(FNV_PRIME)
    for b in data:
        h = (h ^ np.uint64(b)) * prime
    return h


def fnv1a64(data: bytes) -> int:
    return int(_fnv1a64(np.frombuffer(data, dtype=np.uint8)))


def manifest_lines(args, inputs: dict) -> list[str]:
    lines = [f"tool=sketchkit {__version__}", f"subcommand={args.command}"]
    for key in sorted(vars(args)):
        if key in ("command", "func"):
            continue
        lines.append(f"flag.{key}={getattr(args, key)}")
    for name, path in inputs.items():
        lines.append(f"input.{name}={path} fnv1a64={fnv1a64(Path(path).read_bytes()):016x}")
    return lines


def write_sidecar(output, lines) -> None:
    Path(str(output) + ".manifest.txt").write_text("\n".join(lines) + "\n")


def write_csv(path, lines, header: str, rows) -> None:
    text = [f"# {line}" for line in lines] + [header] + [",".join(r) for r in rows]
    Path(path).write_text("\n".join(text) + "\n")


def _parse_shape(text: str) -> tuple[int, int]:
    try:
        r, c = text.lower().split("x")
        rows, cols = int(r), int(c)
    except ValueError:
        raise argparse.ArgumentTypeError(f"malformed shape {text!r}, expected RxC") from None
    if rows < 1 or cols < 1:
        raise argparse.ArgumentTypeError(f"shape {text!r} must have positive dimensions")
    return rows, cols


def _parse_ratios(text: str) -> list[float]:
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"malformed ratio list {text!r}") from None


def _parse_grid(text: str) -> list[float]:
    try:
        start, stop, step = (float(t) for t in text.split(":"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"malformed grid {text!r}, expected start:stop:step") from None
    if step <= 0:
        raise argparse.ArgumentTypeError("grid step must be positive")
    n = int(np.floor((stop - start) / step + 1e-9)) + 1
    return [round(start + i * step, 10) for i in range(n)]


def load_calibration(source: str, cols: int, seed: int) -> tuple[np.ndarray, dict]:
    """``synth:<gaussian|heavy_tail>[:m=N]`` or a MAT1 path of shape (cols, m)."""
    if source.startswith("synth:"):
        parts = source.split(":")
        dist = parts[1] if len(parts) > 1 and parts[1] else "gaussian"
        m = 256
        for opt in parts[2:]:
            key, _, val = opt.partition("=")
            if key != "m":
                raise ValueError(f"unknown synthetic calibration option {opt!r} in --calib")
            m = int(val)
        return synth_calibration(cols, m, make_rng(seed), dist), {}
    x = read_mat1(source)
    if x.shape[0] != cols:
        raise ValueError(f"--calib {source}: has {x.shape[0]} rows, weights have {cols} columns")
    return x, {"calib": source}


def cmd_gen(args) -> int:
    rows, cols = args.shape
    rng = make_rng(args.seed)
    if args.dist == "gaussian":
        w = rng.standard_normal((rows, cols))
    else:
        w = synth_powerlaw(rows, args.eta, rng, cols=cols)
    write_mat1(args.out, w)
    write_sidecar(args.out, manifest_lines(args, {}))
    return 0


def cmd_sketch(args) -> int:
    w = read_mat1(args.input)
    x, inputs = load_calibration(args.calib, w.shape[1], args.seed)
    cfg = SketchConfig(bits=args.bits, gpr=args.gpr, block_b=args.block, exponent_s=args.s,
                       damp=args.damp, seed=args.seed)
    hf = build_hessian(x, args.damp)
    sm = sketch_matrix(w, hf, cfg, threads=args.threads)
    write_skt1(args.output, sm)
    write_sidecar(args.output, manifest_lines(args, {"input": args.input, **inputs}))
    return 0


def cmd_reconstruct(args) -> int:
    sm = read_skt1(args.model)
    write_mat1(args.output, reconstruct(sm, threads=args.threads))
    write_sidecar(args.output, manifest_lines(args, {"model": args.model}))
    return 0


def cmd_info(args) -> int:
    shapes = []
    total_bytes = 0
    out = sys.stdout
    for path in args.model:
        meta = read_skt1_header(path)
        rows, cols, gpr, bits = meta["rows"], meta["cols"], meta["gpr"], meta["bits"]
        size = skt1_size(rows, cols, gpr, bits)
        shapes.append((rows, cols, gpr, bits))
        total_bytes += size
        n = count_trainable_params([(rows, cols)], gpr, bits)
        print(f"model: {path}", file=out)
        print(f"  shape: {rows}x{cols}  bits: {bits} (k={2 ** bits})  gpr: {gpr}", file=out)
        print(f"  trainable params: {n:,}", file=out)
        print(f"  compression vs float16 dense: {rows * cols * 2 / size:.2f}x ({size:,} bytes)", file=out)
    trainable = args.repeat * sum(count_trainable_params([(r, c)], g, b) for r, c, g, b in shapes)
    dense = args.repeat * sum(r * c for r, c, _, _ in shapes)
    print(f"total ({args.repeat} x {len(shapes)} matrices)", file=out)
    print(f"  trainable params: {trainable:,}", file=out)
    print(f"  dense params: {dense:,}", file=out)
    print(f"  compression vs float16 dense: {dense * 2 / (args.repeat * total_bytes):.2f}x", file=out)
    if args.total_params:
        print(f"  full model params / trainable: {args.total_params / trainable:.2f}x", file=out)
    return 0


def cmd_finetune(args) -> int:
    sm = read_skt1(args.model)
    task = TrainTask(read_mat1(args.teacher), read_mat1(args.inputs))
    opt = OptimState(lr=args.lr, optimizer=args.opt)
    trained, losses = train(sm, task, opt, args.steps, threads=args.threads)
    write_skt1(args.out, trained)
    lines = manifest_lines(args, {"model": args.model, "teacher": args.teacher, "inputs": args.inputs})
    write_sidecar(args.out, lines)
    if args.trace:
        write_csv(args.trace, lines, "step,loss", ([str(i), f"{v:.17g}"] for i, v in enumerate(losses)))
    return 0


def cmd_analyze_delta(args) -> int:
    w = read_mat1(args.base)
    w_prime = read_mat1(args.tuned)
    x, inputs = load_calibration(args.calib, w.shape[1], args.seed)
    hf = build_hessian(x, args.damp)
    cfg = SketchConfig(block_b=args.block, exponent_s=args.s, damp=args.damp, seed=args.seed)
    report = compare_sweep(w, w_prime, hf, args.ratios, cfg, threads=args.threads, matrix_id=args.base)
    lines = manifest_lines(args, {"base": args.base, "tuned": args.tuned, **inputs})
    Path(args.out).write_text(report.to_csv(lines))
    return 0


def cmd_theory(args) -> int:
    rows = []
    for eta in args.eta_grid:
        spec = PowerLawSpec(args.n, eta, args.alpha)
        fold = monte_carlo_fold(spec, args.trials, seed=args.seed)
        rows.append([f"{eta:g}", f"{lowrank_error_theory(spec):.12g}", f"{sketch_error_theory(spec):.12g}",
                     f"{fold.sketch_mean:.12g}", f"{fold.sketch_std:.12g}"])
    header = "eta,lowrank_exact,sketch_closed_form,sketch_empirical_mean,sketch_empirical_std"
    write_csv(args.out, manifest_lines(args, {}), header, rows)
    return 0


def _default_threads() -> int:
    raw = os.environ.get(THREADS_ENV, "1")
    try:
        return int(raw)
    except ValueError:
        raise ValueError(f"{THREADS_ENV}={raw!r} is not an integer") from None


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sketchkit", description="Learned weight sketching toolkit.")
    sub = parser.add_subparsers(dest="command")

    p = sub.add_parser("gen", help="write a synthetic matrix")
    p.add_argument("--shape", type=_parse_shape, required=True)
    p.add_argument("--dist", choices=["gaussian", "powerlaw"], default="gaussian")
    p.add_argument("--eta", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("sketch", help="sketch a weight matrix")
    p.add_argument("--input", required=True)
    p.add_argument("--calib", default="synth:gaussian:m=256")
    p.add_argument("--bits", type=int, choices=[2, 3, 4], default=4)
    p.add_argument("--gpr", type=int, default=1)
    p.add_argument("--block", type=int, default=128)
    p.add_argument("--s", type=float, default=3.0)
    p.add_argument("--damp", type=float, default=0.01)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=_default_threads())
    p.add_argument("--output", required=True)
    p.set_defaults(func=cmd_sketch)

    p = sub.add_parser("reconstruct", help="expand a sketch to a dense matrix")
    p.add_argument("--model", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--threads", type=int, default=_default_threads())
    p.set_defaults(func=cmd_reconstruct)

    p = sub.add_parser("info", help="describe sketch files")
    p.add_argument("--model", nargs="+", required=True)
    p.add_argument("--repeat", type=int, default=1, help="count the listed models this many times")
    p.add_argument("--total-params", type=int, default=0, help="full model size for a parameter ratio")
    p.set_defaults(func=cmd_info)

    p = sub.add_parser("finetune", help="train sketched values on a teacher task")
    p.add_argument("--model", required=True)
    p.add_argument("--teacher", required=True)
    p.add_argument("--inputs", required=True)
    p.add_argument("--steps", type=int, default=100)
    p.add_argument("--lr", type=float, default=1e-2)
    p.add_argument("--opt", choices=["sgd", "adam"], default="adam")
    p.add_argument("--threads", type=int, default=_default_threads())
    p.add_argument("--out", required=True)
    p.add_argument("--trace")
    p.set_defaults(func=cmd_finetune)

    p = sub.add_parser("analyze-delta", help="low-rank vs sketch errors of a weight update")
    p.add_argument("--base", required=True)
    p.add_argument("--tuned", required=True)
    p.add_argument("--calib", default="synth:gaussian:m=256")
    p.add_argument("--ratios", type=_parse_ratios, default=[4.0, 8.0, 16.0])
    p.add_argument("--block", type=int, default=128)
    p.add_argument("--s", type=float, default=3.0)
    p.add_argument("--damp", type=float, default=0.01)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=_default_threads())
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_analyze_delta)

    p = sub.add_parser("theory", help="power-law error curves")
    p.add_argument("--n", type=int, default=1024)
    p.add_argument("--alpha", type=int, default=8)
    p.add_argument("--eta-grid", type=_parse_grid, default=_parse_grid("0:0.95:0.05"))
    p.add_argument("--trials", type=int, default=50)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_theory)
    return parser


def main(argv=None) -> int:
    try:
        parser = build_parser()
    except ValueError as exc:
        print(f"sketchkit: error: {exc}", file=sys.stderr)
        return 2
    argv = sys.argv[1:] if argv is None else list(argv)
    if not argv:
        parser.print_usage(sys.stderr)
        return 2
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if args.command is None:
        parser.print_usage(sys.stderr)
        return 2
    try:
        return args.func(args)
    except (OSError, ValueError, RuntimeError, np.linalg.LinAlgError) as exc:
        print(f"sketchkit {args.command}: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
