"""Alternative local denoiser families for homoscedastic Gaussian noise.

* NL-Bayes style affine maps ``Y -> Theta Y + beta 1'`` (``Theta`` is ``n x n``).
* Transform-domain shrinkage ``Y -> P'(Theta * (P Y Q))Q'`` with separable
  orthonormal DCTs (``Theta`` is an ``n x k`` mask).

Both come with the unbiased-risk (step 1) and internal-adaptation (step 2)
parameter choices. Inputs may be single groups or ``(G, n, k)`` stacks.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch
from .linalg import batched_cholesky, cholesky_lower_solve, dct_orthonormal, inverse_separable_transform, separable_transform

SQRT2 = np.sqrt(2.0)


@dataclass
class AffineWeights:
    theta: np.ndarray
    beta: np.ndarray


@dataclass
class ShrinkageMask:
    theta: np.ndarray
    binary: bool = False


def group_statistics(Z) -> tuple[np.ndarray, np.ndarray]:
    """Empirical mean (length ``n``) and covariance (``n x n``, divided by ``k``)."""
    Z = np.asarray(Z, dtype=float)
    k = Z.shape[-1]
    mu = Z.mean(axis=-1)
    centred = Z - mu[..., None]
    return mu, centred @ np.swapaxes(centred, -1, -2) / k


def nlbayes_step1(Y, sigma: float) -> AffineWeights:
    """SURE minimizer ``Theta = (C_Y - s^2 I) C_Y^{-1}``, ``beta = (I - Theta) mu_Y``.

    Groups with a numerically singular covariance (always the case when
    ``k <= n``) fall back to the group mean: ``Theta = 0``, ``beta = mu_Y``.
    """
    mu, cov = group_statistics(Y)
    n = cov.shape[-1]
    L, ok = batched_cholesky(cov)
    theta = np.zeros(cov.shape)
    if np.all(ok):
        theta = np.eye(n) - sigma**2 * cholesky_lower_solve(L, np.broadcast_to(np.eye(n), cov.shape))
    elif np.any(ok):
        theta[ok] = np.eye(n) - sigma**2 * cholesky_lower_solve(L[ok], np.broadcast_to(np.eye(n), cov[ok].shape))
    beta = mu - np.einsum("...ij,...j->...i", theta, mu)
    return AffineWeights(theta, beta)


def nlbayes_step2(Xhat, sigma: float) -> AffineWeights:
    """Risk minimizer at the pilot: ``Theta = C (C + s^2 I)^{-1}``, ``beta = (I - Theta) mu``."""
    mu, cov = group_statistics(Xhat)
    n = cov.shape[-1]
    A = cov + sigma**2 * np.eye(n)
    # Theta = I - s^2 A^{-1}; A is symmetric so this equals C A^{-1}
    theta = np.eye(n) - sigma**2 * np.linalg.solve(A, np.broadcast_to(np.eye(n), A.shape))
    beta = mu - np.einsum("...ij,...j->...i", theta, mu)
    return AffineWeights(theta, beta)


def bm3d_step1_mask(coeffs, sigma: float, binary: bool = True, threshold: float | None = None) -> ShrinkageMask:
    """Step-1 mask from the noisy transform coefficients ``P Y Q``.

    ``binary`` keeps coefficients with ``|c| > threshold`` (default
    ``sqrt(2) sigma``, the SURE argmin over {0, 1}); otherwise the
    continuous SURE minimizer ``1 - s^2 / c^2`` is returned, with 0 where a
    coefficient vanishes.
    """
    coeffs = np.asarray(coeffs, dtype=float)
    if binary:
        thr = SQRT2 * sigma if threshold is None else threshold
        return ShrinkageMask((np.abs(coeffs) > thr).astype(float), binary=True)
    sq = coeffs**2
    safe = np.where(sq > 0, sq, 1.0)
    return ShrinkageMask(np.where(sq > 0, 1.0 - sigma**2 / safe, 0.0), binary=False)


def bm3d_step2_mask(pilot_coeffs, sigma: float) -> ShrinkageMask:
    """Wiener factors ``c^2 / (s^2 + c^2)`` of the pilot coefficients."""
    sq = np.asarray(pilot_coeffs, dtype=float) ** 2
    return ShrinkageMask(sq / (sigma**2 + sq))


def transforms_for(Y) -> tuple[np.ndarray, np.ndarray]:
    """DCT bases ``(P, Q)`` matching the patch side and group size of ``Y``."""
    n, k = np.shape(Y)[-2:]
    side = int(round(np.sqrt(n)))
    if side * side != n:
        raise DimensionMismatch(f"patch size {n} is not a perfect square")
    return dct_orthonormal(side), dct_orthonormal(k)


def apply_family(Y, weights, transforms=None) -> np.ndarray:
    """Evaluate the family map for the given parameters on ``Y``."""
    Y = np.asarray(Y, dtype=float)
    if isinstance(weights, AffineWeights):
        if weights.theta.shape[-1] != Y.shape[-2]:
            raise DimensionMismatch("Theta must be n x n")
        return weights.theta @ Y + weights.beta[..., None]
    if isinstance(weights, ShrinkageMask):
        if weights.theta.shape[-2:] != Y.shape[-2:]:
            raise DimensionMismatch("mask must have the shape of the group")
        P, Q = transforms if transforms is not None else transforms_for(Y)
        return inverse_separable_transform(weights.theta * separable_transform(Y, P, Q), P, Q)
    raise TypeError(f"unsupported weights {type(weights).__name__}")


def nlbayes_sure(Y, weights: AffineWeights, sigma: float) -> np.ndarray:
    """``||Theta Y - Y + beta 1'||^2 + 2 k s^2 tr(Theta) - n k s^2``."""
    Y = np.asarray(Y, dtype=float)
    n, k = Y.shape[-2:]
    resid = apply_family(Y, weights) - Y
    tr = np.trace(weights.theta, axis1=-2, axis2=-1)
    return np.sum(resid**2, axis=(-2, -1)) + 2 * k * sigma**2 * tr - n * k * sigma**2


def bm3d_sure(coeffs, mask, sigma: float) -> np.ndarray:
    """``||(Theta - 1) * c||^2 + 2 s^2 <Theta, 1> - n k s^2`` in the transform domain."""
    coeffs = np.asarray(coeffs, dtype=float)
    theta = np.asarray(mask, dtype=float)
    n, k = coeffs.shape[-2:]
    return (
        np.sum(((theta - 1.0) * coeffs) ** 2, axis=(-2, -1))
        + 2 * sigma**2 * theta.sum(axis=(-2, -1))
        - n * k * sigma**2
    )


def bm3d_risk(pilot_coeffs, mask, sigma: float) -> np.ndarray:
    """``||(Theta - 1) * c||^2 + s^2 ||Theta||^2``."""
    coeffs = np.asarray(pilot_coeffs, dtype=float)
    theta = np.asarray(mask, dtype=float)
    return np.sum(((theta - 1.0) * coeffs) ** 2, axis=(-2, -1)) + sigma**2 * np.sum(theta**2, axis=(-2, -1))
