"""Command line entry point: ``adaptive-cs <command> [options]``."""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import kernels
from .errors import AdaptiveCSError
from .experiment import build_experiment, read_config_file, run_error_proxy_study, run_images
from .image_io import load_pgm
from .metrics import psnr, ssim

_COMMAND_MODE = {"run": "run", "baseline": "baseline", "ablate": "ablate"}


def _add_pipeline_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", type=Path, help="flat key = value config file")
    p.add_argument("--image", action="append", default=[], type=Path, help="input PGM (repeatable)")
    p.add_argument("--out", type=Path, help="output directory (default: results)")
    p.add_argument("--seed", type=int)
    p.add_argument("--stages", type=int)
    p.add_argument("--rate", type=float, help="per-stage sampling rate r")
    p.add_argument("--alpha", type=float, help="sampling scale factor")
    p.add_argument("--patch", type=int, help="patch side length p")
    p.add_argument("--sigma", type=float, help="measurement noise std (pixel units)")
    p.add_argument("--rate-mode", choices=["budget", "constant"])
    p.add_argument("--lambda", dest="lam", type=float, help="sparsity weight")
    p.add_argument("--max-iters", type=int)
    p.add_argument("--no-warm-start", action="store_true")
    p.add_argument("--no-adaptive", action="store_true")


def _overrides(args) -> dict:
    o = {}
    for flag, key in [
        ("seed", "seed"), ("stages", "stages"), ("rate", "rate"), ("alpha", "alpha"),
        ("patch", "patch_size"), ("sigma", "sigma"), ("rate_mode", "rate_mode"),
        ("lam", "lambda"), ("max_iters", "max_iters"),
    ]:
        val = getattr(args, flag)
        if val is not None:
            o[key] = str(val)
    if args.no_warm_start:
        o["warm_start"] = "false"
    if args.no_adaptive:
        o["adaptive"] = "false"
    if args.image:
        o["images"] = [str(p) for p in args.image]
    if args.out is not None:
        o["out"] = str(args.out)
    return o


def _experiment(args):
    values: dict = {}
    base = None
    if args.config is not None:
        values.update(read_config_file(args.config))
        base = args.config.parent
    over = _overrides(args)
    images = over.pop("images", None)
    out = over.pop("out", None)
    values.update(over)
    exp = build_experiment(values, base_dir=base)
    # paths given on the command line are relative to the working directory
    if images is not None:
        exp.images = [Path(p) for p in images]
    if out is not None:
        exp.out = Path(out)
    return exp


def cmd_pipeline(args) -> int:
    exp = _experiment(args)
    mode = _COMMAND_MODE[args.command]
    if args.command == "run" and args.no_adaptive:
        mode = "baseline"
    written = run_images(exp.images, exp.pipeline, mode, exp.out)
    for path in written:
        print(path)
    return 0


def cmd_study(args) -> int:
    exp = _experiment(args)
    written = run_error_proxy_study(exp.images, exp.pipeline, exp.out)
    for path in written:
        if path.suffix == ".json":
            summary = json.loads(path.read_text())["summary"]
            print(f"{path.name}: spearman={summary['spearman']} pearson={summary['pearson']} "
                  f"mask_agreement={summary['mask_agreement']}")
        else:
            print(path)
    return 0


def cmd_eval(args) -> int:
    if len(args.image) != 2:
        print("eval needs exactly two --image arguments: reference then test", file=sys.stderr)
        return 2
    ref, test = (load_pgm(p) for p in args.image)
    print(json.dumps({"psnr": psnr(ref, test), "ssim": ssim(ref, test)}))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="adaptive-cs", description="Error-driven adaptive compressive sensing")
    parser.add_argument("-v", "--verbose", action="store_true")
    parser.add_argument("--version", action="version", version=f"%(prog)s (kernels: {kernels.BACKEND})")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_ in [
        ("run", "adaptive multi-stage pipeline"),
        ("baseline", "uniform sampling at every stage"),
        ("ablate", "adaptive and uniform arms side by side"),
        ("study-error-proxy", "compare measurement-residual and true error maps after stage 1"),
    ]:
        p = sub.add_parser(name, help=help_)
        _add_pipeline_flags(p)
        p.set_defaults(func=cmd_study if name == "study-error-proxy" else cmd_pipeline)
    p = sub.add_parser("eval", help="PSNR/SSIM between two PGM images")
    p.add_argument("--image", action="append", default=[], type=Path, help="reference, then test image")
    p.set_defaults(func=cmd_eval)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (AdaptiveCSError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
