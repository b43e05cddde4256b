"""Config-file driven experiments and their on-disk reports.

Config files are flat ``key = value`` text (``#`` starts a comment)::

    images = kodim01.pgm, kodim02.pgm   # relative to the config file
    out = results
    mode = ablate                       # run | baseline | ablate
    stages = 4
    rate = 0.05
    alpha = 0.7
    patch_size = 8
    rate_mode = budget                  # budget | constant
    lambda = 30

Per image the runner writes ``<stem>_stage<i>.pgm``, ``<stem>_mask<i>.pgm``
and ``<stem>_report.json``; one ``summary.csv`` covers every image. In
ablate mode the uniform arm's reconstructions are ``<stem>_uniform_stage<i>.pgm``.
"""
from __future__ import annotations

import configparser
import csv
import io
import json
import logging
import math
import os
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from .adaptive import oracle_mask, select_patches
from .errors import ConfigError
from .image_io import load_pgm, save_mask_pgm, save_pgm
from .metrics import correlations, mask_agreement
from .patching import PatchGrid
from .pipeline import PipelineConfig, StageRecord, parse_rate_mode, run_adaptive
from .solver import SolverConfig

log = logging.getLogger(__name__)

MODES = ("run", "baseline", "ablate")
REPORT_VERSION = 1


def _bool(s: str) -> bool:
    v = s.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


# config key -> (target, field, parser); target is "pipeline", "solver" or "run"
_KEYS = {
    "stages": ("pipeline", "stages", int),
    "rate": ("pipeline", "rate", float),
    "alpha": ("pipeline", "alpha", float),
    "patch_size": ("pipeline", "patch_size", int),
    "patch": ("pipeline", "patch_size", int),
    "seed": ("pipeline", "seed", int),
    "sigma": ("pipeline", "sigma", float),
    "adaptive": ("pipeline", "adaptive", _bool),
    "rate_mode": ("pipeline", "rate_mode", parse_rate_mode),
    "warm_start": ("pipeline", "warm_start", _bool),
    "rip_delta": ("pipeline", "rip_delta", float),
    "lambda": ("solver", "lam", float),
    "lam": ("solver", "lam", float),
    "max_iters": ("solver", "max_iters", int),
    "rel_tol": ("solver", "rel_tol", float),
    "power_iters": ("solver", "power_iters", int),
    "monotone": ("solver", "monotone", _bool),
    "images": ("run", "images", lambda s: [p.strip() for p in s.split(",") if p.strip()]),
    "out": ("run", "out", str),
    "mode": ("run", "mode", str),
}


@dataclass
class Experiment:
    pipeline: PipelineConfig = field(default_factory=PipelineConfig)
    images: list[Path] = field(default_factory=list)
    out: Path = Path("results")
    mode: str = "run"


def read_config_file(path: str | os.PathLike) -> dict[str, str]:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise OSError(f"cannot read config {path}: {exc.strerror or exc}") from exc
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"), interpolation=None)
    try:
        parser.read_string("[config]\n" + text, source=str(path))
    except configparser.Error as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    return dict(parser["config"])


def build_experiment(values: dict[str, object], base_dir: Path | None = None) -> Experiment:
    """Turn raw key/value pairs (strings or already-typed values) into an :class:`Experiment`."""
    pipe, solver, run = {}, {}, {}
    buckets = {"pipeline": pipe, "solver": solver, "run": run}
    for key, raw in values.items():
        norm = key.strip().lower().replace("-", "_")
        if norm not in _KEYS:
            raise ConfigError(f"unknown config key {key!r}")
        target, name, parse = _KEYS[norm]
        try:
            buckets[target][name] = parse(raw) if isinstance(raw, str) else raw
        except ValueError as exc:
            raise ConfigError(f"bad value for {key!r}: {exc}") from None
    cfg = PipelineConfig(solver=SolverConfig(**solver), **pipe)
    mode = run.get("mode", "run")
    if mode not in MODES:
        raise ConfigError(f"mode must be one of {MODES}, got {mode!r}")
    base = base_dir or Path(".")
    images = [p if Path(p).is_absolute() else base / p for p in run.get("images", [])]
    out = Path(run.get("out", "results"))
    if not out.is_absolute() and base_dir is not None:
        out = base_dir / out
    return Experiment(cfg, [Path(p) for p in images], out, mode)


def _clean(x):
    """JSON-safe copy: numpy -> python, non-finite floats -> None."""
    if isinstance(x, dict):
        return {k: _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    if isinstance(x, np.ndarray):
        return _clean(x.tolist())
    if isinstance(x, (np.floating, float)):
        x = float(x)
        return x if math.isfinite(x) else None
    if isinstance(x, np.integer):
        return int(x)
    return x


def config_dict(cfg: PipelineConfig) -> dict:
    d = asdict(cfg)
    d["solver"] = asdict(cfg.solver)
    return d


def stage_dict(rec: StageRecord) -> dict:
    bounds = rec.rip_bounds()
    mask = None
    if rec.mask is not None:
        mask = {
            "threshold": rec.mask.threshold,
            "n_unsampled": rec.mask.n_unsampled,
            "popcount": rec.mask.popcount,
            "bits": rec.mask.bits,
        }
    ms = rec.measurements
    return {
        "stage": rec.stage,
        "m": rec.m,
        "sampled_patch_count": rec.sampled_patch_count,
        "cumulative_nominal_rate": rec.cumulative_nominal_rate,
        "measurements_total": rec.measurements_total,
        "measured_rate": rec.measured_rate,
        "psnr": rec.psnr,
        "ssim": rec.ssim,
        "solver": {
            "iterations": rec.recon.iterations_used,
            "lipschitz": rec.recon.lipschitz,
            "final_objective": rec.recon.final_objective,
            "objective_trace": rec.recon.objective_trace,
        },
        "error_proxy": {
            "pearson": rec.pearson,
            "spearman": rec.spearman,
            "mask_agreement": rec.mask_agreement,
            "rip_delta": bounds.delta,
            "dy_sq_total": float(np.sum(rec.error_map)),
            "dx_sq_bounds": [bounds.lower, bounds.upper],
            "dx_sq_total": float(np.sum(rec.oracle_error_map)),
            "dy_sq": rec.error_map,
            "dx_sq": rec.oracle_error_map,
        },
        "mask": mask,
        "measurements": {
            "stage": ms.stage,
            "m": ms.m,
            "seed": ms.seed,
            "patches": ms.indices,
            "values": ms.values,
        },
    }


def dumps_report(report: dict) -> str:
    return json.dumps(_clean(report), indent=1) + "\n"


def _write_arm(stem: str, tag: str, records: list[StageRecord], grid: PatchGrid, out: Path, masks: bool) -> list[Path]:
    written = []
    for rec in records:
        path = out / f"{stem}{tag}_stage{rec.stage}.pgm"
        save_pgm(rec.image, path)
        written.append(path)
        if masks and rec.mask is not None:
            mpath = out / f"{stem}{tag}_mask{rec.stage}.pgm"
            save_mask_pgm(rec.mask, grid, mpath)
            written.append(mpath)
    return written


def process_image(path: Path, cfg: PipelineConfig, mode: str, out: Path) -> tuple[list[Path], list[list]]:
    try:
        img = load_pgm(path)
    except OSError as exc:
        raise OSError(f"cannot read image {path}: {exc}") from exc
    except ValueError as exc:
        raise type(exc)(f"{path}: {exc}") from exc
    grid = PatchGrid.for_shape(img.shape, cfg.patch_size)
    stem = path.stem
    arms: dict[str, list[StageRecord]] = {}
    if mode in ("run", "ablate"):
        arms["adaptive"] = run_adaptive(img, replace(cfg, adaptive=True))
    if mode in ("baseline", "ablate"):
        arms["uniform"] = run_adaptive(img, replace(cfg, adaptive=False))

    written: list[Path] = []
    rows = []
    for arm, records in arms.items():
        tag = "_uniform" if (arm == "uniform" and mode == "ablate") else ""
        written += _write_arm(stem, tag, records, grid, out, masks=(arm == "adaptive"))
        for rec in records:
            rows.append([stem, arm, rec.stage, rec.cumulative_nominal_rate, rec.measured_rate, rec.psnr, rec.ssim])
    report = {
        "version": REPORT_VERSION,
        "image": path.name,
        "shape": list(img.shape),
        "patch_count": grid.patch_count,
        "mode": mode,
        "config": config_dict(cfg),
        "arms": {arm: [stage_dict(r) for r in recs] for arm, recs in arms.items()},
    }
    rpath = out / f"{stem}_report.json"
    rpath.write_text(dumps_report(report))
    written.append(rpath)
    return written, rows


def _fmt(v):
    if isinstance(v, float):
        return repr(v) if math.isfinite(v) else ""
    return str(v)


def run_images(images, cfg: PipelineConfig, mode: str = "run", out: str | os.PathLike = "results") -> list[Path]:
    """Process every image and write reports; returns the written paths."""
    if mode not in MODES:
        raise ConfigError(f"mode must be one of {MODES}, got {mode!r}")
    images = [Path(p) for p in images]
    if not images:
        raise ConfigError("no input images given")
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []
    rows = []
    for path in images:
        log.info("processing %s (%s)", path, mode)
        w, r = process_image(path, cfg, mode, out)
        written += w
        rows += r
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(["image", "arm", "stage", "cumulative_rate", "measured_rate", "psnr", "ssim"])
    for row in rows:
        wr.writerow([_fmt(v) for v in row])
    summary = out / "summary.csv"
    summary.write_text(buf.getvalue())
    written.append(summary)
    return written


def run_experiment(config_path: str | os.PathLike, overrides: dict | None = None) -> list[Path]:
    """Run the experiment described by a config file; ``overrides`` win over file values."""
    config_path = Path(config_path)
    values: dict[str, object] = dict(read_config_file(config_path))
    values.update(overrides or {})
    exp = build_experiment(values, base_dir=config_path.parent)
    return run_images(exp.images, exp.pipeline, exp.mode, exp.out)


def study_error_proxy(img, cfg: PipelineConfig) -> dict:
    """Stage-1 reconstruction, then compare the residual-energy map with the true error map."""
    grid = PatchGrid.for_shape(np.shape(img), cfg.patch_size)
    rec = run_adaptive(img, replace(cfg, stages=1))[0]
    est = select_patches(rec.error_map, cfg.alpha, 2, grid)
    ora = oracle_mask(img, rec.image, cfg.alpha, 2, grid)
    pearson, spearman = correlations(rec.error_map, rec.oracle_error_map)
    bounds = rec.rip_bounds()
    return {
        "record": rec,
        "estimated_mask": est,
        "oracle_mask": ora,
        "summary": {
            "psnr": rec.psnr,
            "ssim": rec.ssim,
            "pearson": pearson,
            "spearman": spearman,
            "mask_agreement": mask_agreement(est, ora),
            "rip_delta": bounds.delta,
            "dy_sq_total": float(np.sum(rec.error_map)),
            "dx_sq_bounds": [bounds.lower, bounds.upper],
            "dx_sq_total": float(np.sum(rec.oracle_error_map)),
        },
    }


def run_error_proxy_study(images, cfg: PipelineConfig, out: str | os.PathLike = "results") -> list[Path]:
    images = [Path(p) for p in images]
    if not images:
        raise ConfigError("no input images given")
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for path in images:
        img = load_pgm(path)
        grid = PatchGrid.for_shape(img.shape, cfg.patch_size)
        res = study_error_proxy(img, cfg)
        stem = path.stem
        save_pgm(res["record"].image, out / f"{stem}_stage1.pgm")
        save_mask_pgm(res["estimated_mask"], grid, out / f"{stem}_mask_est.pgm")
        save_mask_pgm(res["oracle_mask"], grid, out / f"{stem}_mask_oracle.pgm")
        report = {
            "version": REPORT_VERSION,
            "image": path.name,
            "config": config_dict(cfg),
            "summary": res["summary"],
            "dy_sq": res["record"].error_map,
            "dx_sq": res["record"].oracle_error_map,
            "estimated_mask": res["estimated_mask"].bits,
            "oracle_mask": res["oracle_mask"].bits,
        }
        rpath = out / f"{stem}_proxy.json"
        rpath.write_text(dumps_report(report))
        written += [out / f"{stem}_stage1.pgm", out / f"{stem}_mask_est.pgm", out / f"{stem}_mask_oracle.pgm", rpath]
    return written
