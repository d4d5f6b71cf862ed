"""Two-step non-local denoising: unbiased-risk step, then internal adaptation.

Step 1 groups similar patches of the noisy image and denoises each group
with weights chosen from the noisy data alone. Step 2 re-matches on the
step-1 pilot, recomputes the weights from the pilot groups and applies them
to the corresponding noisy groups. Each step ends with a weighted
reprojection of all patch estimates.
"""

from __future__ import annotations

import enum
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import families
from .errors import ConfigurationError, OutOfCalibratedRange, ShapeMismatch
from .estimators import ConstraintKind, EstimatorConfig, aggregation_weights, step1_weights, step2_weights
from .noise import GaussianHetero, GaussianHomo, NoiseModel, Poisson, d1_matrix, d2_matrix
from .patches import PatchGeometry, PixelAccumulator, extract_groups, match_groups, reference_positions

CHUNK = 256


class Family(enum.Enum):
    NLRIDGE = "nlridge"
    NLBAYES = "nlbayes"
    BM3D = "bm3d"


@dataclass(frozen=True)
class PipelineParams:
    """Everything the two steps need. ``n1``/``n2`` are patch areas (perfect squares)."""

    n1: int
    n2: int
    k1: int
    k2: int
    kappa: int = 37
    delta: int = 4
    constraint: ConstraintKind = ConstraintKind.LINEAR
    family: Family = Family.NLRIDGE
    noisier_alpha: float = 0.0
    scd_iters: int = 100
    seed: int = 0
    bm3d_threshold: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "constraint", ConstraintKind(self.constraint))
        object.__setattr__(self, "family", Family(self.family))
        for name in ("n1", "n2"):
            v = getattr(self, name)
            if v < 1 or math.isqrt(v) ** 2 != v:
                raise ValueError(f"{name}={v} is not a perfect square")
        if self.k1 < 1 or self.k2 < 1:
            raise ValueError("group sizes must be >= 1")
        if self.kappa < max(self.side1, self.side2):
            raise ValueError("kappa must be at least the patch side")
        if self.delta > min(self.side1, self.side2):
            # a larger stride would leave pixels outside every reference patch
            raise ValueError("delta must not exceed the patch side")

    @property
    def side1(self) -> int:
        return math.isqrt(self.n1)

    @property
    def side2(self) -> int:
        return math.isqrt(self.n2)

    def geometry(self, step: int) -> PatchGeometry:
        if step == 1:
            return PatchGeometry(self.side1, self.k1, self.kappa, self.delta)
        return PatchGeometry(self.side2, self.k2, self.kappa, self.delta)

    def estimator_config(self) -> EstimatorConfig:
        return EstimatorConfig(self.constraint, self.noisier_alpha, self.scd_iters, self.seed)


def default_params(model: NoiseModel, **overrides) -> PipelineParams:
    """Patch and group sizes calibrated for homoscedastic Gaussian noise.

    Above sigma = 50 there is no calibrated row; the call succeeds only when
    ``n1``, ``n2``, ``k1`` and ``k2`` are all given as overrides.
    """
    if not isinstance(model, GaussianHomo):
        raise ConfigurationError("default parameters exist only for homoscedastic Gaussian noise")
    s = model.sigma
    if s <= 15:
        p = dict(n1=49, n2=49, k1=18, k2=55)
    elif s <= 35:
        p = dict(n1=81, n2=81, k1=18, k2=90)
    elif s <= 50:
        p = dict(n1=121, n2=81, k1=20, k2=120)
    elif {"n1", "n2", "k1", "k2"} <= overrides.keys():
        p = {}
    else:
        raise OutOfCalibratedRange(f"sigma={s} > 50: give n1, n2, k1 and k2 explicitly")
    p.update(overrides)
    return PipelineParams(**p)


def equivalent_sigma(model: NoiseModel, y) -> float:
    """Standard deviation of a homoscedastic model with the same mean variance on ``y``."""
    if isinstance(model, GaussianHomo):
        return model.sigma
    if isinstance(model, GaussianHetero):
        return float(np.sqrt(model.noisemap.mean()))
    y = np.maximum(np.asarray(y, dtype=float), 0.0)
    if isinstance(model, Poisson):
        return float(np.sqrt(max(y.mean(), 1e-12)))
    return float(np.sqrt(max(model.a * y.mean() + model.b, 1e-12)))


def params_for(model: NoiseModel, y, **overrides) -> PipelineParams:
    """Defaults for any model, using the calibrated table at the equivalent sigma (capped at 50)."""
    sigma = min(equivalent_sigma(model, y), 50.0)
    return default_params(GaussianHomo(max(sigma, 1e-12)), **overrides)


def _noisemap_groups(model, coords, side):
    if isinstance(model, GaussianHetero):
        return extract_groups(model.noisemap, coords, side)
    return None


def group_estimates(Y, model: NoiseModel, params: PipelineParams, step: int, pilot=None, noisemap_cols=None, rng=None):
    """Denoise a stack of groups ``(G, n, k)`` before reprojection.

    ``pilot`` holds the matching pilot groups (step 2 only). Returns the
    estimates and the per-column reprojection weights ``(G, k)``.
    """
    Y = np.asarray(Y, dtype=float)
    rng = np.random.default_rng(params.seed if rng is None else rng)
    fam = params.family
    if fam is not Family.NLRIDGE and not isinstance(model, GaussianHomo):
        raise ConfigurationError(f"family {fam.value} is only defined for homoscedastic Gaussian noise")
    g, n, k = Y.shape
    if fam is Family.NLRIDGE:
        cfg = params.estimator_config()
        if step == 1:
            theta = step1_weights(Y, d1_matrix(Y, model, noisemap_cols), cfg, rng)
        else:
            # variances cannot be negative: D2 is built on the clamped pilot
            d2 = d2_matrix(np.maximum(pilot, 0.0), model, noisemap_cols)
            theta = step2_weights(pilot, d2, cfg, rng)
        return Y @ theta, aggregation_weights(theta)
    sigma = model.sigma
    if fam is Family.NLBAYES:
        w = families.nlbayes_step1(Y, sigma) if step == 1 else families.nlbayes_step2(pilot, sigma)
        return families.apply_family(Y, w), np.ones((g, k))
    P, Q = families.transforms_for(Y)
    if step == 1:
        mask = families.bm3d_step1_mask(
            families.separable_transform(Y, P, Q), sigma, binary=True, threshold=params.bm3d_threshold
        )
    else:
        mask = families.bm3d_step2_mask(families.separable_transform(pilot, P, Q), sigma)
    est = families.apply_family(Y, mask, (P, Q))
    energy = np.sum(mask.theta**2, axis=(-2, -1))
    return est, np.repeat((1.0 / np.maximum(energy, 1.0))[:, None], k, axis=1)


def _chunks(coords, sizes):
    """Index chunks of groups sharing the same effective size."""
    for size in np.unique(sizes):
        idx = np.flatnonzero(sizes == size)
        for s in range(0, len(idx), CHUNK):
            yield int(size), idx[s : s + CHUNK]


def _run_step(y, model, params, step, pilot=None, threads=1) -> np.ndarray:
    y = np.asarray(y, dtype=float)
    geom = params.geometry(step)
    side = geom.patch_side
    match_on = y if step == 1 else pilot
    refs = reference_positions(y.shape, geom)
    coords, sizes = match_groups(match_on, refs, geom)
    jobs = list(_chunks(coords, sizes))

    def work(job_index):
        size, idx = jobs[job_index]
        c = coords[idx, :size]
        Y = extract_groups(y, c, side)
        P = extract_groups(pilot, c, side) if step == 2 else None
        rng = np.random.default_rng([params.seed, step, job_index])
        est, w = group_estimates(Y, model, params, step, P, _noisemap_groups(model, c, side), rng)
        return c, est, w

    # results are consumed in job order, so the sums do not depend on `threads`
    acc = PixelAccumulator(y.shape)
    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            for c, est, w in pool.map(work, range(len(jobs))):
                acc.add(c, side, est, w)
    else:
        for i in range(len(jobs)):
            c, est, w = work(i)
            acc.add(c, side, est, w)
    return acc.result()


def _check_model(y, model):
    if isinstance(model, GaussianHetero) and model.noisemap.shape != np.shape(y):
        raise ShapeMismatch("noisemap shape differs from image shape")


def denoise_step1(y, model: NoiseModel, params: PipelineParams, threads: int = 1) -> np.ndarray:
    """Pilot estimate from the unbiased-risk weights."""
    _check_model(y, model)
    return _run_step(y, model, params, 1, threads=threads)


def denoise_step2(y, pilot, model: NoiseModel, params: PipelineParams, threads: int = 1) -> np.ndarray:
    """Final estimate: match on ``pilot``, derive weights from it, apply them to ``y``."""
    _check_model(y, model)
    if np.shape(pilot) != np.shape(y):
        raise ShapeMismatch("pilot and noisy image differ in shape")
    return _run_step(y, model, params, 2, pilot=np.asarray(pilot, dtype=float), threads=threads)


def denoise(y, model: NoiseModel, params: PipelineParams | None = None, threads: int = 1):
    """Run both steps; returns ``(step1, step2)``."""
    if params is None:
        params = params_for(model, y)
    pilot = denoise_step1(y, model, params, threads)
    return pilot, denoise_step2(y, pilot, model, params, threads)
