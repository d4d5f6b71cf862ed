"""Noise models, synthetic corruption and the diagonal matrices D1 / D2.

A noise model is one of four small dataclasses. ``d1_matrix`` and
``d2_matrix`` return the diagonal of the ``k x k`` matrix as a vector of
length ``k`` (stacked over any leading batch axes).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np

from .errors import MissingNoisemap, NegativeIntensity


@dataclass(frozen=True)
class GaussianHomo:
    sigma: float

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError("sigma must be > 0")


@dataclass(frozen=True, eq=False)
class GaussianHetero:
    """Per-pixel Gaussian noise; ``noisemap`` holds the variance of each pixel."""

    noisemap: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.noisemap, dtype=float)
        if v.ndim != 2 or not np.all(v > 0):
            raise ValueError("noisemap must be a 2D image of positive variances")
        object.__setattr__(self, "noisemap", v)


@dataclass(frozen=True)
class Poisson:
    pass


@dataclass(frozen=True)
class MixedPG:
    """``a * P(x / a) + N(0, b)``: gain ``a`` and Gaussian variance ``b``."""

    a: float
    b: float

    def __post_init__(self):
        if not self.a > 0:
            raise ValueError("gain a must be > 0")
        if not self.b >= 0:
            raise ValueError("variance b must be >= 0")


NoiseModel = Union[GaussianHomo, GaussianHetero, Poisson, MixedPG]


def describe(model: NoiseModel) -> str:
    if isinstance(model, GaussianHomo):
        return f"gaussian(sigma={model.sigma:g})"
    if isinstance(model, GaussianHetero):
        return "gaussian(noisemap)"
    if isinstance(model, Poisson):
        return "poisson"
    return f"mixed-pg(a={model.a:g},b={model.b:g})"


def corrupt(clean, model: NoiseModel, seed: int) -> np.ndarray:
    """Draw a noisy observation of ``clean`` under ``model``.

    Output is float64 and deliberately not clipped. The same seed always
    gives the same image.
    """
    x = np.asarray(clean, dtype=float)
    rng = np.random.default_rng(seed)
    if isinstance(model, GaussianHomo):
        return x + model.sigma * rng.standard_normal(x.shape)
    if isinstance(model, GaussianHetero):
        if model.noisemap.shape != x.shape:
            raise ValueError("noisemap shape differs from image shape")
        return x + np.sqrt(model.noisemap) * rng.standard_normal(x.shape)
    if np.any(x < 0):
        raise NegativeIntensity("Poisson-type noise needs non-negative intensities")
    if isinstance(model, Poisson):
        return rng.poisson(x).astype(float)
    if isinstance(model, MixedPG):
        y = model.a * rng.poisson(x / model.a).astype(float)
        return y + np.sqrt(model.b) * rng.standard_normal(x.shape)
    raise TypeError(f"unknown noise model {model!r}")


def pixel_variance(values, model: NoiseModel, noisemap_values=None) -> np.ndarray:
    """Per-entry noise variance evaluated at ``values`` (the data or the pilot)."""
    values = np.asarray(values, dtype=float)
    if isinstance(model, GaussianHomo):
        return np.full(values.shape, model.sigma**2)
    if isinstance(model, GaussianHetero):
        if noisemap_values is None:
            raise MissingNoisemap("heteroscedastic Gaussian noise needs the noisemap entries")
        return np.broadcast_to(np.asarray(noisemap_values, dtype=float), values.shape)
    if isinstance(model, Poisson):
        return values
    if isinstance(model, MixedPG):
        return model.a * values + model.b
    raise TypeError(f"unknown noise model {model!r}")


def d1_matrix(Y, model: NoiseModel, noisemap_cols=None) -> np.ndarray:
    """Diagonal of D1 for a group ``Y`` of shape ``(..., n, k)``: column sums of the variance."""
    Y = np.asarray(Y, dtype=float)
    if isinstance(model, GaussianHomo):
        n = Y.shape[-2]
        return np.full(Y.shape[:-2] + Y.shape[-1:], n * model.sigma**2)
    return pixel_variance(Y, model, noisemap_cols).sum(axis=-2)


def d2_matrix(Xhat, model: NoiseModel, noisemap_cols=None) -> np.ndarray:
    """Diagonal of D2, the same column-sum rule evaluated on the pilot."""
    return d1_matrix(Xhat, model, noisemap_cols)
