"""Multi-stage adaptive sampling and reconstruction.

Stage 1 measures every patch with ``m_1 = round(r p^2)`` rows. Each later
stage ranks patches by their stage-1 residual energy under the current
reconstruction, keeps roughly ``alpha^(i-1)`` of them, measures those with a
fresh matrix, and re-solves over all measurements gathered so far (warm
started from the previous stage).

In ``budget_preserving`` mode a stage spends the same nominal budget
``r * H * W`` as stage 1 by concentrating it on the selected fraction, i.e.
``m_i = round(r / alpha^(i-1) * p^2)``. ``constant_m`` keeps ``m_i = m_1``.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace

import numpy as np

from .adaptive import (
    AdaptiveMask,
    error_map,
    measurement_error,
    oracle_error_map,
    rip_bounds,
    select_patches,
    unsampled_count,
)
from .errors import ConfigError, ContractError
from .image_io import clamp_to_display, round_half_away
from .metrics import correlations, mask_agreement, psnr, ssim
from .patching import PatchGrid
from .sensing import MeasurementSet, NoiseSpec, SensingMatrix, gen_stage_matrix, measure_stage
from .solver import ReconResult, SolverConfig, reconstruct

log = logging.getLogger(__name__)

BUDGET = "budget_preserving"
CONSTANT = "constant_m"
RATE_MODES = (BUDGET, CONSTANT)
_MODE_ALIASES = {"budget": BUDGET, "budget_preserving": BUDGET, "constant": CONSTANT, "constant_m": CONSTANT}


def parse_rate_mode(s: str) -> str:
    try:
        return _MODE_ALIASES[s.strip().lower()]
    except KeyError:
        raise ConfigError(f"unknown rate mode {s!r}; use one of {sorted(_MODE_ALIASES)}") from None


@dataclass(frozen=True)
class PipelineConfig:
    stages: int = 4
    rate: float = 0.05
    alpha: float = 0.7
    patch_size: int = 8
    seed: int = 0
    sigma: float = 0.0
    solver: SolverConfig = field(default_factory=SolverConfig)
    adaptive: bool = True
    rate_mode: str = BUDGET
    warm_start: bool = True
    rip_delta: float = 0.5  # diagnostic only; selection never uses it

    def __post_init__(self):
        if self.stages < 1:
            raise ConfigError(f"stages must be >= 1, got {self.stages}")
        if not 0.0 < self.rate < 1.0:
            raise ConfigError(f"rate must lie in (0, 1), got {self.rate}")
        if not 0.0 < self.alpha <= 1.0:
            raise ConfigError(f"alpha must lie in (0, 1], got {self.alpha}")
        if self.patch_size < 1:
            raise ConfigError(f"patch size must be >= 1, got {self.patch_size}")
        if not self.sigma >= 0.0:
            raise ConfigError(f"noise sigma must be >= 0, got {self.sigma}")
        if self.rate_mode not in RATE_MODES:
            raise ConfigError(f"rate_mode must be one of {RATE_MODES}, got {self.rate_mode!r}")
        if not 0.0 < self.rip_delta < 1.0:
            raise ConfigError(f"rip_delta must lie in (0, 1), got {self.rip_delta}")
        for i in range(1, self.stages + 1):
            per_patch_m(self.rate, self.alpha, i, self.patch_size, self.effective_mode)

    @property
    def effective_mode(self) -> str:
        # without adaptive selection every stage samples every patch, so the
        # per-stage budget is already r * H * W at constant m
        return self.rate_mode if self.adaptive else CONSTANT

    def uniform(self) -> "PipelineConfig":
        return replace(self, adaptive=False)


def nominal_rate(r: float, alpha: float, stage_i: int, mode: str) -> float:
    if mode == BUDGET:
        return r / alpha ** (stage_i - 1)
    if mode == CONSTANT:
        return r
    raise ConfigError(f"unknown rate mode {mode!r}")


def per_patch_m(r: float, alpha: float, stage_i: int, p: int, mode: str = BUDGET) -> int:
    """Measurements per sampled patch at ``stage_i``: ``round(rate_i * p^2)``."""
    rate = nominal_rate(r, alpha, stage_i, mode)
    if rate > 1.0:
        raise ConfigError(f"stage {stage_i} needs per-patch rate {rate:.4f} > 1 (r={r}, alpha={alpha})")
    m = int(round_half_away(rate * p * p))
    if m < 1:
        raise ConfigError(f"rate {rate} x {p * p} pixels rounds to zero measurements")
    return m


def cumulative_region_rates(r: float, alpha: float, stages: int, mode: str = BUDGET) -> list[float]:
    """Continuous per-patch rate accumulated by a patch selected at every stage."""
    out, total = [], 0.0
    for i in range(1, stages + 1):
        total += nominal_rate(r, alpha, i, mode)
        out.append(total)
    return out


@dataclass
class StageRecord:
    stage: int
    m: int
    sampled_patch_count: int
    cumulative_nominal_rate: float
    measurements_total: int
    measured_rate: float
    psnr: float
    ssim: float
    error_map: np.ndarray = field(repr=False)
    mask: AdaptiveMask | None = field(default=None, repr=False)
    # evaluation against ground truth, not used by the sampling loop
    oracle_error_map: np.ndarray | None = field(default=None, repr=False)
    pearson: float = float("nan")
    spearman: float = float("nan")
    mask_agreement: float | None = None
    image: np.ndarray | None = field(default=None, repr=False)
    recon: ReconResult | None = field(default=None, repr=False)
    measurements: MeasurementSet | None = field(default=None, repr=False)
    matrix: SensingMatrix | None = field(default=None, repr=False)
    rip_delta: float = 0.5

    def rip_bounds(self):
        """Bracket on the whole-image squared error implied by the residual energy."""
        return rip_bounds(float(np.sum(self.error_map)), self.rip_delta)


def run_adaptive(img, cfg: PipelineConfig = PipelineConfig()) -> list[StageRecord]:
    """Run all stages on ``img`` (also used as ground truth for evaluation)."""
    img = np.asarray(img, dtype=np.float64)
    if img.ndim != 2:
        raise ContractError(f"expected a 2-D grayscale image, got shape {img.shape}")
    grid = PatchGrid.for_shape(img.shape, cfg.patch_size)
    n_pix = img.shape[0] * img.shape[1]
    noise = NoiseSpec(cfg.sigma, cfg.seed)
    mode = cfg.effective_mode
    all_patches = np.arange(grid.patch_count)

    matrices: list[SensingMatrix] = []
    sets: list[MeasurementSet] = []
    records: list[StageRecord] = []
    prev_recon = None
    prev_v = None
    total_meas = 0
    cum_rate = 0.0
    for i in range(1, cfg.stages + 1):
        mask = None
        agreement = None
        if i == 1 or not cfg.adaptive:
            selected = all_patches
        else:
            mask = select_patches(prev_v, cfg.alpha, i, grid)
            selected = mask.selected
            oracle = select_patches(oracle_error_map(img, prev_recon, grid), cfg.alpha, i, grid)
            agreement = mask_agreement(mask, oracle)
        m = per_patch_m(cfg.rate, cfg.alpha, i, cfg.patch_size, mode)
        phi = gen_stage_matrix(cfg.seed, i, m, grid.n, grid.patch_count)
        ys = measure_stage(phi, img, selected, noise)
        matrices.append(phi)
        sets.append(ys)

        warm = prev_recon if (cfg.warm_start and prev_recon is not None) else None
        res = reconstruct(sets, matrices, grid, cfg.solver, warm_start=warm)
        v = error_map(measurement_error(sets[0], matrices[0], res.image, grid))
        v_dx = oracle_error_map(img, res.image, grid)
        pear, spear = correlations(v, v_dx) if grid.patch_count >= 3 else (float("nan"), float("nan"))

        total_meas += m * len(selected)
        fraction = cfg.alpha ** (i - 1) if (cfg.adaptive and i > 1) else 1.0
        cum_rate += nominal_rate(cfg.rate, cfg.alpha, i, mode) * fraction
        shown = clamp_to_display(res.image)
        rec = StageRecord(
            stage=i,
            m=m,
            sampled_patch_count=int(len(selected)),
            cumulative_nominal_rate=cum_rate,
            measurements_total=total_meas,
            measured_rate=total_meas / n_pix,
            psnr=psnr(img, shown),
            ssim=ssim(img, shown) if min(img.shape) >= 11 else float("nan"),
            error_map=v,
            mask=mask,
            oracle_error_map=v_dx,
            pearson=pear,
            spearman=spear,
            mask_agreement=agreement,
            image=res.image,
            recon=res,
            measurements=ys,
            matrix=phi,
            rip_delta=cfg.rip_delta,
        )
        log.info(
            "stage %d: m=%d patches=%d rate=%.4f psnr=%.2f dB iters=%d",
            i, m, rec.sampled_patch_count, cum_rate, rec.psnr, res.iterations_used,
        )
        records.append(rec)
        prev_recon, prev_v = res.image, v
    return records


def run_uniform(img, cfg: PipelineConfig = PipelineConfig()) -> list[StageRecord]:
    """Same stages with every patch sampled at constant ``m`` (no adaptive selection)."""
    return run_adaptive(img, cfg.uniform())


def budget_slack(records: list[StageRecord], cfg: PipelineConfig, grid: PatchGrid) -> list[float]:
    """Actual minus nominal cumulative measurement count after each stage."""
    return [
        rec.measurements_total - rec.cumulative_nominal_rate * grid.patch_count * grid.n for rec in records
    ]


__all__ = [
    "PipelineConfig",
    "StageRecord",
    "per_patch_m",
    "nominal_rate",
    "cumulative_region_rates",
    "run_adaptive",
    "run_uniform",
    "budget_slack",
    "parse_rate_mode",
    "unsampled_count",
    "RATE_MODES",
    "BUDGET",
    "CONSTANT",
]
