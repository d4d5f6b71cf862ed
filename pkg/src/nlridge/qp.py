"""Quadratic programs ``min 1/2 t'Qt + c't`` over the nonnegative cone or the simplex.

``scd_minimize`` is the sequential coordinate descent solver used by the
conical/convex weight regimes; ``active_set_oracle`` enumerates every
active set and is meant for testing small problems only.
"""

from __future__ import annotations

import enum
import itertools

import numpy as np

from .errors import TooLarge

CURVATURE_RTOL = 1e-14
SNAP_TOL = 1e-12


class ConeKind(enum.Enum):
    CONICAL = "conical"
    CONVEX = "convex"


def objective(Q, c, theta) -> np.ndarray:
    """``1/2 t'Qt + c't`` for a vector or for every column of a stacked ``theta``."""
    Q, c, theta = (np.asarray(a, dtype=float) for a in (Q, c, theta))
    if theta.ndim == 1:
        return 0.5 * theta @ Q @ theta + c @ theta
    if c.ndim == 1:
        c = c[:, None]
    return np.sum(theta * (0.5 * (Q @ theta) + c), axis=-2)


def scd_minimize_batch(Q, C, kind: ConeKind, iters: int = 100, rng=None, history: bool = False):
    """Solve many QPs sharing a Hessian, one per column of ``C``.

    ``Q`` has shape ``(B, k, k)``, ``C`` shape ``(B, k, m)``; column ``i`` of
    batch item ``b`` is the program ``(Q[b], C[b, :, i])``. Every iterate is
    feasible. After each sweep a column whose objective would have gone up
    through rounding keeps its previous iterate, so the recorded sequence is
    non-increasing exactly.

    Returns ``theta`` of shape ``(B, k, m)``, plus the per-sweep objectives
    ``(iters + 1, B, m)`` when ``history`` is set.
    """
    Q = np.asarray(Q, dtype=float)
    C = np.asarray(C, dtype=float)
    if iters < 1:
        raise ValueError("iters must be >= 1")
    kind = ConeKind(kind)
    rng = np.random.default_rng(rng)
    bsz, k, m = C.shape
    theta = np.full((bsz, k, m), 1.0 / k)
    diag = np.diagonal(Q, axis1=1, axis2=2)
    tiny = CURVATURE_RTOL * diag.sum(axis=1) / k
    q_prev = objective(Q, C, theta)
    hist = [q_prev] if history else None
    bi = np.arange(bsz)[:, None]
    mi = np.arange(m)[None, :]
    for _ in range(iters):
        old = theta.copy()
        grad = Q @ theta + C
        if kind is ConeKind.CONVEX and k > 1:
            # partners for the whole sweep: uniform over the k - 1 other coordinates
            partners = rng.integers(0, k - 1, size=(k, bsz, m))
            partners += partners >= np.arange(k)[:, None, None]
        for j in range(k):
            if kind is ConeKind.CONICAL:
                curv = diag[:, j]
                ok = curv > tiny
                safe = np.where(ok, curv, 1.0)
                step = np.maximum(-grad[:, j, :] / safe[:, None], -theta[:, j, :])
                step = np.where(ok[:, None], step, 0.0)
                theta[:, j, :] += step
                grad += Q[:, :, j, None] * step[:, None, :]
            else:
                if k == 1:
                    break
                jp = partners[j]
                curv = diag[:, j, None] - 2.0 * Q[bi, j, jp] + diag[bi, jp]
                ok = curv > tiny[:, None]
                tp = theta[bi, jp, mi]
                step = -(grad[:, j, :] - grad[bi, jp, mi]) / np.where(ok, curv, 1.0)
                step = np.minimum(np.maximum(step, -theta[:, j, :]), tp)
                step = np.where(ok, step, 0.0)
                theta[:, j, :] += step
                theta[bi, jp, mi] = tp - step
                # Q[bi, :, jp] is (B, m, k): column j' of Q for every program
                grad += Q[:, :, j, None] * step[:, None, :] - np.swapaxes(Q[bi, :, jp] * step[..., None], 1, 2)
        theta[(theta < 0) & (theta >= -SNAP_TOL)] = 0.0
        q_new = objective(Q, C, theta)
        worse = q_new > q_prev
        if worse.any():
            theta = np.where(worse[:, None, :], old, theta)
            q_new = np.where(worse, q_prev, q_new)
        q_prev = q_new
        if history:
            hist.append(q_new)
        if kind is ConeKind.CONICAL and np.array_equal(theta, old):
            # a conical sweep is deterministic: every later sweep would repeat this one
            if history:
                hist.extend([q_new] * (iters - len(hist) + 1))
            break
    if history:
        return theta, np.stack(hist)
    return theta


def scd_minimize(Q, c, kind: ConeKind, iters: int = 100, seed=None, history: bool = False):
    """Sequential coordinate descent for a single program, starting from ``1/k``."""
    Q = np.asarray(Q, dtype=float)
    c = np.asarray(c, dtype=float)
    out = scd_minimize_batch(Q[None], c[None, :, None], kind, iters, seed, history)
    if history:
        theta, hist = out
        return theta[0, :, 0], hist[:, 0, 0]
    return out[0, :, 0]


def _batched_solve(A, b):
    """Solve a stack of systems; singular members come back as NaN."""
    try:
        return np.linalg.solve(A, b[..., None])[..., 0]
    except np.linalg.LinAlgError:
        out = np.full(b.shape, np.nan)
        for i in range(len(A)):
            try:
                out[i] = np.linalg.solve(A[i], b[i])
            except np.linalg.LinAlgError:
                pass
        return out


def active_set_oracle(Q, c, kind: ConeKind, max_k: int = 16) -> np.ndarray:
    """Exact minimizer by enumerating all ``2**k`` zero patterns.

    Each pattern fixes a set of coordinates at zero and solves the KKT
    system on the remaining ones; candidates that are feasible and whose
    multipliers have the right sign are kept, the lowest objective wins.
    Patterns of equal size are solved together as one batch.
    """
    Q = np.asarray(Q, dtype=float)
    c = np.asarray(c, dtype=float)
    k = len(c)
    if k > max_k:
        raise TooLarge(f"active-set enumeration limited to k <= {max_k}")
    kind = ConeKind(kind)
    best, best_val = None, np.inf
    fallback, fallback_val = None, np.inf
    for nf in range(0 if kind is ConeKind.CONICAL else 1, k + 1):
        combos = list(itertools.combinations(range(k), nf))
        free = np.array(combos, dtype=np.int64).reshape(len(combos), nf)
        m = len(free)
        theta = np.zeros((m, k))
        lam = np.zeros(m)
        if nf:
            Qf = Q[free[:, :, None], free[:, None, :]]
            if kind is ConeKind.CONICAL:
                sol = _batched_solve(Qf, -c[free])
            else:
                kkt = np.zeros((m, nf + 1, nf + 1))
                kkt[:, :nf, :nf] = Qf
                kkt[:, :nf, nf] = -1.0
                kkt[:, nf, :nf] = 1.0
                rhs = np.concatenate([-c[free], np.ones((m, 1))], axis=1)
                full = _batched_solve(kkt, rhs)
                sol, lam = full[:, :nf], full[:, nf]
            np.put_along_axis(theta, free, sol, axis=1)
        solved = np.all(np.isfinite(theta), axis=1)
        feasible = solved & np.all(theta >= -1e-12, axis=1)
        theta = np.where(feasible[:, None], np.maximum(theta, 0.0), 0.0)
        vals = np.where(feasible, objective(Q, c, theta.T), np.inf)
        grad = theta @ Q + c
        fixed = np.ones((m, k), dtype=bool)
        np.put_along_axis(fixed, free, False, axis=1)
        lam = np.where(np.isfinite(lam), lam, 0.0)
        # gradient on the fixed coordinates must not point into the feasible set
        signs = np.all(~fixed | (grad - lam[:, None] >= -1e-9 * (1 + np.abs(grad).max(axis=1, keepdims=True))), axis=1)
        for ok, store in ((feasible & signs, "best"), (feasible & ~signs, "fallback")):
            if ok.any():
                i = int(np.argmin(np.where(ok, vals, np.inf)))
                if store == "best" and vals[i] < best_val:
                    best, best_val = theta[i], vals[i]
                elif store == "fallback" and vals[i] < fallback_val:
                    fallback, fallback_val = theta[i], vals[i]
    return best if best is not None else fallback
