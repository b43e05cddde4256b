"""Adaptive multi-stage compressive sensing.

Stage 1 samples every p x p patch with a random Gaussian matrix. Later
stages spend their measurements on the patches whose stage-1 measurement
residual is largest, and every stage reconstructs by l1-regularized
least squares in the global DCT domain (FISTA).
"""
from .adaptive import (
    AdaptiveMask,
    RipBounds,
    error_map,
    measurement_error,
    oracle_mask,
    rip_bounds,
    select_patches,
)
from .errors import (
    AdaptiveCSError,
    ConfigError,
    ContractError,
    DegenerateConfigError,
    NumericError,
    PgmFormatError,
    PgmTruncatedError,
    PgmUnsupportedError,
)
from .experiment import run_experiment, run_images
from .image_io import clamp_to_display, load_pgm, save_mask_pgm, save_pgm
from .metrics import MetricReport, correlations, mask_agreement, psnr, ssim
from .patching import PatchGrid, expand_mask, patchify, unpatchify
from .pipeline import PipelineConfig, StageRecord, per_patch_m, run_adaptive, run_uniform
from .sensing import (
    MeasurementSet,
    NoiseSpec,
    SensingMatrix,
    adjoint_apply,
    gen_matrix,
    gen_stage_matrix,
    measure_patch,
    measure_stage,
)
from .solver import ReconResult, SolverConfig, dct2, estimate_lipschitz, idct2, reconstruct, soft_threshold

__version__ = "0.1.0"
