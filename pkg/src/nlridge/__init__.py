"""Non-local patch denoising with optimal linear combinations of similar patches."""

from .errors import *  # noqa: F401,F403
from .estimators import ConstraintKind, EstimatorConfig, aggregation_weights, risk_value, step1_weights, step2_weights, ure_value
from .images import Image, load_test_image, psnr, read_image, write_image
from .noise import GaussianHetero, GaussianHomo, MixedPG, Poisson, corrupt, d1_matrix, d2_matrix
from .patches import PatchGeometry, PatchGroup, PixelAccumulator, block_match, reference_positions
from .pipeline import Family, PipelineParams, default_params, denoise, denoise_step1, denoise_step2, params_for
from .qp import ConeKind, active_set_oracle, scd_minimize

__version__ = "0.1.0"
