"""Small dense SPD solves and orthonormal DCT transforms.

Every routine accepts stacks of matrices (leading batch axes) so that the
pipeline can process thousands of patch groups per numpy call.
"""

from __future__ import annotations

import numpy as np

from .errors import DimensionMismatch, NotPositiveDefinite

PD_RTOL = 1e-12


def _pivot_ok(A: np.ndarray, L: np.ndarray) -> np.ndarray:
    diag_a = np.diagonal(A, axis1=-2, axis2=-1)
    eps = PD_RTOL * np.max(diag_a, axis=-1)
    pivots = np.diagonal(L, axis1=-2, axis2=-1) ** 2
    return np.all(pivots > eps[..., None], axis=-1) & (eps > 0)


def batched_cholesky(A: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Cholesky factors of a stack of symmetric matrices.

    Returns ``(L, ok)`` where ``ok[i]`` is False when matrix ``i`` has a
    pivot at or below ``1e-12 * max(diag)``; those factors are left as NaN.
    """
    A = np.asarray(A, dtype=float)
    batch = A.shape[:-2]
    k = A.shape[-1]
    flat = A.reshape(-1, k, k)
    L = np.full_like(flat, np.nan)
    ok = np.zeros(flat.shape[0], dtype=bool)
    try:
        L[:] = np.linalg.cholesky(flat)
        ok[:] = True
    except np.linalg.LinAlgError:
        for i, a in enumerate(flat):
            try:
                L[i] = np.linalg.cholesky(a)
                ok[i] = True
            except np.linalg.LinAlgError:
                pass
    if ok.any():
        ok[ok] = _pivot_ok(flat[ok], L[ok])
    L[~ok] = np.nan
    return L.reshape(A.shape), ok.reshape(batch)


def cholesky_lower_solve(L: np.ndarray, B: np.ndarray) -> np.ndarray:
    """Solve ``L L^T X = B`` given lower factors ``L`` (stacked)."""
    Z = np.linalg.solve(L, B)
    return np.linalg.solve(np.swapaxes(L, -1, -2), Z)


def cholesky_solve(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    """Solve ``A X = B`` for symmetric positive definite ``A``.

    ``B`` may be a vector or a matrix with ``A.shape[-1]`` rows. Raises
    :class:`NotPositiveDefinite` if any matrix in the stack fails the
    relative pivot test.
    """
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    if A.shape[-1] != A.shape[-2]:
        raise DimensionMismatch(f"A must be square, got {A.shape}")
    vector = B.ndim == A.ndim - 1
    if vector:
        B = B[..., None]
    if B.shape[-2] != A.shape[-1]:
        raise DimensionMismatch(f"B has {B.shape[-2]} rows, A has order {A.shape[-1]}")
    L, ok = batched_cholesky(A)
    if not np.all(ok):
        raise NotPositiveDefinite("matrix is not numerically positive definite")
    X = cholesky_lower_solve(L, B)
    return X[..., 0] if vector else X


def dct_orthonormal(order: int) -> np.ndarray:
    """Orthonormal DCT-II basis, one basis vector per row.

    Row 0 is the constant vector ``1/sqrt(order)``.
    """
    if order < 1:
        raise ValueError("order must be >= 1")
    i = np.arange(order)
    rows = np.cos(np.pi * (2 * i[None, :] + 1) * i[:, None] / (2 * order))
    rows *= np.sqrt(2.0 / order)
    rows[0] /= np.sqrt(2.0)
    return rows


def patch_transform(Y: np.ndarray, side_rows: np.ndarray) -> np.ndarray:
    """Apply a 1D transform to both axes of every flattened ``side x side`` patch.

    ``Y`` has shape ``(..., n, k)`` with ``n = side**2``; the patch pixels are
    stored row-major along axis ``-2``. Equivalent to left-multiplying by
    ``kron(side_rows, side_rows)`` without forming the ``n x n`` matrix.
    """
    side = side_rows.shape[0]
    *lead, n, k = Y.shape
    if n != side * side:
        raise DimensionMismatch(f"patch axis has {n} entries, transform expects {side}x{side}")
    Z = Y.reshape(*lead, side, side, k)
    Z = np.einsum("ab,...bck->...ack", side_rows, Z)
    Z = np.einsum("ab,...cbk->...cak", side_rows, Z)
    return Z.reshape(*lead, n, k)


def separable_transform(Y: np.ndarray, P: np.ndarray, Q: np.ndarray) -> np.ndarray:
    """Return ``P Y Q`` for the separable patch/group transform.

    ``P`` is the 1D transform (rows = basis vectors) applied along both axes
    of each ``sqrt(n) x sqrt(n)`` patch, ``Q`` the 1D transform over the
    ``k`` group members. With rows-as-basis matrices, the group axis is
    transformed as ``Y @ Q.T`` so that a constant group maps onto the
    ``(0, 0)`` coefficient.
    """
    Y = np.asarray(Y, dtype=float)
    if Q.shape[0] != Y.shape[-1]:
        raise DimensionMismatch(f"group transform has order {Q.shape[0]}, group has {Y.shape[-1]} members")
    return patch_transform(Y, P) @ Q.T


def inverse_separable_transform(Z: np.ndarray, P: np.ndarray, Q: np.ndarray) -> np.ndarray:
    """Inverse of :func:`separable_transform` (transposes, since both are orthogonal)."""
    Z = np.asarray(Z, dtype=float)
    if Q.shape[0] != Z.shape[-1]:
        raise DimensionMismatch(f"group transform has order {Q.shape[0]}, group has {Z.shape[-1]} members")
    return patch_transform(Z @ Q, P.T)
