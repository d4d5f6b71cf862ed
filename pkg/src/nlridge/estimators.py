"""Combination weights for the local denoiser ``Y -> Y @ Theta``.

Step 1 minimizes the unbiased risk estimate computed from the noisy group;
step 2 minimizes the closed-form risk with the pilot group standing in for
the clean one. Both dispatch on four constraint regimes. All functions work
on a single group (``Y`` of shape ``(n, k)``) or on a stack ``(G, n, k)``;
diagonal matrices are passed as their diagonal vector.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .linalg import batched_cholesky, cholesky_lower_solve
from .qp import ConeKind, scd_minimize_batch

ZERO_COLUMN_WEIGHT = 1e6
FALLBACK_ALPHA_SCALE = 1e-6


class ConstraintKind(enum.Enum):
    LINEAR = "linear"
    AFFINE = "affine"
    CONICAL = "conical"
    CONVEX = "convex"


@dataclass(frozen=True)
class EstimatorConfig:
    """``noisier_alpha = 0`` uses the plain URE and only regularizes groups whose
    Gram matrix is numerically singular."""

    constraint: ConstraintKind = ConstraintKind.LINEAR
    noisier_alpha: float = 0.0
    scd_iters: int = 100
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "constraint", ConstraintKind(self.constraint))
        if self.noisier_alpha < 0:
            raise ValueError("noisier_alpha must be >= 0")


def _diag(d):
    d = np.asarray(d, dtype=float)
    return d[..., :, None] * np.eye(d.shape[-1])


def ure_value(theta, Y, d1) -> np.ndarray:
    """``||Y Theta - Y||_F^2 + 2 tr(D1 Theta) - tr(D1)``."""
    theta, Y, d1 = (np.asarray(a, dtype=float) for a in (theta, Y, d1))
    resid = Y @ theta - Y
    tr_dt = np.sum(d1 * np.diagonal(theta, axis1=-2, axis2=-1), axis=-1)
    return np.sum(resid**2, axis=(-2, -1)) + 2.0 * tr_dt - d1.sum(axis=-1)


def risk_value(theta, X, d2) -> np.ndarray:
    """``||X Theta - X||_F^2 + tr(Theta' D2 Theta)``."""
    theta, X, d2 = (np.asarray(a, dtype=float) for a in (theta, X, d2))
    resid = X @ theta - X
    return np.sum(resid**2, axis=(-2, -1)) + np.sum(d2[..., :, None] * theta**2, axis=(-2, -1))


def _closed_form(L, d, affine: bool) -> np.ndarray:
    """``I - Q^{-1} D`` or its affine-constrained counterpart, from the factor of Q."""
    k = d.shape[-1]
    qinv_d = cholesky_lower_solve(L, _diag(d))
    theta = np.eye(k) - qinv_d
    if affine:
        u = cholesky_lower_solve(L, np.ones(L.shape[:-1] + (1,)))[..., 0]
        ud = u * d
        theta = theta + u[..., :, None] * ud[..., None, :] / u.sum(axis=-1)[..., None, None]
    return theta


def _solve(Q, d, cfg: EstimatorConfig, rng, factor=None) -> np.ndarray:
    """Minimize ``tr(1/2 T'QT + (D - Q)T)`` under ``cfg.constraint`` for a stack of groups."""
    kind = cfg.constraint
    if kind in (ConstraintKind.LINEAR, ConstraintKind.AFFINE):
        L = factor if factor is not None else batched_cholesky(Q)[0]
        return _closed_form(L, d, kind is ConstraintKind.AFFINE)
    C = _diag(d) - Q
    cone = ConeKind.CONICAL if kind is ConstraintKind.CONICAL else ConeKind.CONVEX
    return scd_minimize_batch(Q, C, cone, cfg.scd_iters, rng)


def _as_stack(*arrays):
    single = np.asarray(arrays[0]).ndim == 2
    out = [np.asarray(a, dtype=float)[None] if single else np.asarray(a, dtype=float) for a in arrays]
    return single, out


def fallback_alpha_sq(Y) -> np.ndarray:
    """Default noisier-risk ``alpha**2``: ``1e-6 * tr(Y'Y) / (n k)``, or 1 for an all-zero group."""
    Y = np.asarray(Y, dtype=float)
    n, k = Y.shape[-2:]
    a2 = FALLBACK_ALPHA_SCALE * np.sum(Y**2, axis=(-2, -1)) / (n * k)
    return np.where(a2 > 0, a2, 1.0)


def step1_weights(Y, d1, cfg: EstimatorConfig = EstimatorConfig(), rng=None) -> np.ndarray:
    """Weights minimizing the (noisier) unbiased risk estimate of a noisy group.

    With ``Q = Y'Y + alpha^2 n I`` and ``D = D1 + alpha^2 n I``: linear gives
    ``I - Q^{-1} D``, affine the projected form, conical/convex a coordinate
    descent per column. Groups whose ``Y'Y`` is not numerically positive
    definite are retried with the fallback alpha.
    """
    single, (Y, d1) = _as_stack(Y, d1)
    rng = np.random.default_rng(cfg.seed if rng is None else rng)
    n, k = Y.shape[-2:]
    Q = np.swapaxes(Y, -1, -2) @ Y
    if cfg.noisier_alpha > 0:
        reg = np.full(len(Y), cfg.noisier_alpha**2 * n)
        L, ok = batched_cholesky(Q + reg[:, None, None] * np.eye(k))
    else:
        reg = np.zeros(len(Y))
        L, ok = batched_cholesky(Q)
        if not ok.all():
            bad = ~ok
            reg[bad] = fallback_alpha_sq(Y[bad]) * n
            L[bad], _ = batched_cholesky(Q[bad] + reg[bad, None, None] * np.eye(k))
    eye = np.eye(k)
    theta = _solve(Q + reg[:, None, None] * eye, d1 + reg[:, None], cfg, rng, factor=L)
    return theta[0] if single else theta


def step2_weights(Xhat, d2, cfg: EstimatorConfig = EstimatorConfig(), rng=None) -> np.ndarray:
    """Weights minimizing the closed-form risk evaluated at the pilot group.

    ``Q2 = Xhat'Xhat + D2``. A group whose ``Q2`` is singular (Poisson pilot
    that vanishes on a whole column) gets the identity.
    """
    single, (X, d2) = _as_stack(Xhat, d2)
    rng = np.random.default_rng(cfg.seed if rng is None else rng)
    k = X.shape[-1]
    Q = np.swapaxes(X, -1, -2) @ X + _diag(d2)
    L, ok = batched_cholesky(Q)
    theta = np.broadcast_to(np.eye(k), Q.shape).copy()
    if ok.any():
        theta[ok] = _solve(Q[ok], d2[ok], cfg, rng, factor=L[ok])
    return theta[0] if single else theta


def aggregation_weights(theta) -> np.ndarray:
    """Reprojection weight ``1 / ||Theta[:, j]||^2`` of every output column."""
    norms = np.sum(np.asarray(theta, dtype=float) ** 2, axis=-2)
    safe = np.where(norms > 0, norms, 1.0)
    return np.where(norms > 0, 1.0 / safe, ZERO_COLUMN_WEIGHT)
