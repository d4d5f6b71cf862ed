"""Acceptance checks, one per criterion; each prints a single PASS/FAIL line.

Run with pytest (lines are repeated in the terminal summary) or directly:
``python3 tests/test_acceptance.py``.
"""

import time

import numpy as np
import pytest

from nlridge import (
    ConeKind,
    EstimatorConfig,
    GaussianHetero,
    GaussianHomo,
    MixedPG,
    Poisson,
    active_set_oracle,
    corrupt,
    d1_matrix,
    d2_matrix,
    default_params,
    denoise,
    load_test_image,
    psnr,
    risk_value,
    scd_minimize,
    step1_weights,
    step2_weights,
    ure_value,
)
from nlridge.families import bm3d_step1_mask, bm3d_step2_mask
from nlridge.qp import objective, scd_minimize_batch

RESULTS = []


def report(number, ok, detail):
    line = f"criterion {number}: {'PASS' if ok else 'FAIL'} - {detail}"
    RESULTS.append(line)
    print(line)
    return ok


# 1 -------------------------------------------------------------------------
def check_ure_unbiased():
    t0 = time.perf_counter()
    rng = np.random.default_rng(2024)
    n, k, draws, batch = 16, 8, 100_000, 10_000
    X = rng.uniform(5, 200, (n, k))
    V = rng.uniform(10, 400, (n, k))
    models = {
        "gaussian": GaussianHomo(20.0),
        "hetero": GaussianHetero(V),
        "poisson": Poisson(),
        "mixed": MixedPG(3.0, 50.0),
    }
    worst = 0.0
    for mi, (name, model) in enumerate(models.items()):
        thetas = [np.eye(k) * 0.5 + 0.3 * rng.standard_normal((k, k)) for _ in range(5)]
        d2 = d2_matrix(X, model, V)
        sums = np.zeros(5)
        sq = np.zeros(5)
        for b in range(draws // batch):
            # stack the batch vertically so every model (including the noisemap) sees a 2-d image
            tall_model = GaussianHetero(np.tile(V, (batch, 1))) if name == "hetero" else model
            Y = corrupt(np.tile(X, (batch, 1)), tall_model, [mi, b]).reshape(batch, n, k)
            d1 = d1_matrix(Y, model, V)
            for t, theta in enumerate(thetas):
                u = ure_value(theta, Y, d1)
                sums[t] += u.sum()
                sq[t] += np.sum(u**2)
        mean = sums / draws
        se = np.sqrt((sq / draws - mean**2) / draws)
        risks = np.array([risk_value(theta, X, d2) for theta in thetas])
        worst = max(worst, float(np.max(np.abs(mean - risks) / se)))
    dt = time.perf_counter() - t0
    return report(1, worst <= 4.0 and dt <= 60, f"URE unbiasedness: max |bias| = {worst:.2f} standard errors (<= 4), {dt:.1f} s (<= 60)")


# 2 -------------------------------------------------------------------------
def _objective(theta, Y, d, step):
    return ure_value(theta, Y, d) if step == 1 else risk_value(theta, Y, d)


def _gradient(theta, Y, d, step):
    Q = Y.T @ Y
    if step == 1:
        return 2 * (Q @ theta - Q + np.diag(d))
    return 2 * ((Q + np.diag(d)) @ theta - Q)


def check_closed_forms_vs_oracle():
    # SCD uses 200 sweeps, the oracle-agreement protocol of the solver; the gap
    # left by the pipeline default of 100 sweeps is reported alongside
    t0 = time.perf_counter()
    rng = np.random.default_rng(7)
    worst_kkt, losses = 0.0, 0
    worst_gap = {100: 0.0, 200: 0.0}
    for _ in range(200):
        k = int(rng.integers(1, 9))
        n = int(rng.integers(k + 1, 3 * k + 3))
        Y = rng.uniform(0, 4, (n, k)) + rng.standard_normal((n, k))
        d = d1_matrix(Y, GaussianHomo(float(rng.uniform(0.2, 2.0))))
        for step, solve in ((1, step1_weights), (2, step2_weights)):
            for constraint in ("linear", "affine"):
                theta = solve(Y, d, EstimatorConfig(constraint))
                G = _gradient(theta, Y, d, step)
                if constraint == "affine":
                    G = G - G.mean(axis=0, keepdims=True)
                    worst_kkt = max(worst_kkt, float(np.abs(theta.sum(axis=0) - 1).max()))
                worst_kkt = max(worst_kkt, float(np.abs(G).max()))
                best = _objective(theta, Y, d, step)
                E = rng.standard_normal((100, k, k)) * 10 ** rng.uniform(-4, 0, (100, 1, 1))
                if constraint == "affine":
                    E -= E.mean(axis=1, keepdims=True)
                losses += int(np.sum(_objective(theta + E, Y, d, step) < best))
            Q = Y.T @ Y + (np.diag(d) if step == 2 else 0)
            C = np.diag(d) - Q
            for kind in ("conical", "convex"):
                refs = [objective(Q, C[:, j], active_set_oracle(Q, C[:, j], kind)) for j in range(k)]
                seed = int(rng.integers(1 << 30))
                theta = solve(Y, d, EstimatorConfig(kind, scd_iters=200, seed=seed))
                # the same seeded run with its per-sweep objectives, to read off sweep 100
                _, hist = scd_minimize_batch(Q[None], C[None], kind, 200, seed, history=True)
                for j, ref in enumerate(refs):
                    gap = (objective(Q, C[:, j], theta[:, j]) - ref) / (1 + abs(ref))
                    worst_gap[200] = max(worst_gap[200], float(gap))
                    worst_gap[100] = max(worst_gap[100], float((hist[100, 0, j] - ref) / (1 + abs(ref))))
    dt = time.perf_counter() - t0
    ok = worst_kkt <= 1e-8 and worst_gap[200] <= 1e-6 and losses == 0 and dt <= 30
    return report(
        2, ok,
        f"closed forms: KKT residual {worst_kkt:.1e} (<= 1e-8), {losses} perturbations beat them; "
        f"SCD (200 sweeps) vs active set gap {worst_gap[200]:.1e} (<= 1e-6) "
        f"[info: 100 sweeps leave {worst_gap[100]:.1e}]; {dt:.1f} s (<= 30)",
    )


# 3 -------------------------------------------------------------------------
def check_scd_monotone():
    rng = np.random.default_rng(11)
    violations = 0
    for i in range(1000):
        k = int(rng.integers(1, 13))
        M = rng.standard_normal((int(rng.integers(1, k + 4)), k))
        Q = M.T @ M + float(rng.choice([0.0, 1e-3, 1.0])) * np.eye(k)
        c = rng.standard_normal(k) * 5
        kind = ConeKind.CONICAL if i % 2 else ConeKind.CONVEX
        _, hist = scd_minimize(Q, c, kind, iters=60, seed=i, history=True)
        violations += int(np.sum(np.diff(hist) > 0))
    return report(3, violations == 0, f"SCD monotonicity on 1000 programs: {violations} increasing sweeps (exact)")


# 4 -------------------------------------------------------------------------
def check_bm3d_closed_forms():
    rng = np.random.default_rng(5)
    bad = 0
    for sigma in (0.5, 1.0, 15.0, 25.0, 50.0):
        c = rng.standard_normal((81, 18)) * sigma * rng.uniform(0, 4)
        m = bm3d_step1_mask(c, sigma).theta
        sure0, sure1 = c**2, 2 * sigma**2  # entry SURE for mask 0 and 1
        bad += int(np.sum(m != (sure1 < sure0)))
        w = bm3d_step2_mask(c, sigma).theta
        risk = lambda x: c**2 * (x - 1) ** 2 + sigma**2 * x**2
        grid = np.linspace(0, 1, 2001)[:, None, None]
        bad += int(np.sum(risk(w) > risk(grid).min(axis=0) + 1e-9 * (1 + c**2)))
        t = np.sqrt(2.0) * sigma
        edge = np.array([[t * (1 - 1e-12), t, t * (1 + 1e-12), -t * (1 + 1e-12)]])
        bad += int(bm3d_step1_mask(edge, sigma).theta.tolist() != [[0, 0, 1, 1]])
        bad += int(abs((t**2) - 2 * sigma**2) > 1e-12 * t**2)
    return report(4, bad == 0, f"BM3D masks: {bad} entries disagree with the per-entry argmin or the sqrt(2) sigma boundary")


# 5 -------------------------------------------------------------------------
def check_asymptotic_weights():
    X = np.array([[3.0, 1.0, 4.0], [1.0, 5.0, 9.0], [2.0, 6.0, 5.0], [3.0, 5.0, 8.0], [9.0, 7.0, 9.0]])
    d = d2_matrix(X, GaussianHomo(1e6))
    aff = np.abs(step2_weights(X, d, EstimatorConfig("affine")) - 1 / 3).max()
    lin = np.abs(step2_weights(X, d, EstimatorConfig("linear"))).max()
    return report(5, aff <= 1e-6 and lin <= 1e-6, f"sigma=1e6: affine -> 11'/k off by {aff:.1e}, linear -> 0 off by {lin:.1e} (<= 1e-6)")


# 6, 7 ----------------------------------------------------------------------
_CACHE = {}


def _run(sigma, **overrides):
    key = (sigma, tuple(sorted(overrides.items())))
    if key not in _CACHE:
        x = load_test_image(256)
        model = GaussianHomo(sigma)
        y = corrupt(x, model, 1)
        _, step1, step2 = (None,) + denoise(y, model, default_params(model, **overrides))
        _CACHE[key] = (psnr(y, x), psnr(step1, x), psnr(step2, x))
    return _CACHE[key]


def check_psnr_monotone():
    parts, ok = [], True
    for sigma in (15, 25, 50):
        p0, p1, p2 = _run(sigma)
        ok &= p2 >= p1 >= p0
        parts.append(f"sigma {sigma}: {p0:.2f} -> {p1:.2f} -> {p2:.2f}")
    gain = _run(25)[2] - _run(25)[0]
    ok &= gain >= 5
    return report(6, ok, "; ".join(parts) + f"; gain at 25 = {gain:.2f} dB (>= 5)")


def check_family_parity():
    ref = _run(25)[2]
    nlb = _run(25, family="nlbayes")[2]
    bm = _run(25, family="bm3d")[2]
    bm27 = _run(25, family="bm3d", bm3d_threshold=2.7 * 25)[2]
    ok = abs(nlb - ref) <= 1.5 and abs(bm - ref) <= 1.5
    return report(
        7, ok,
        f"sigma 25: nlridge {ref:.2f}, nlbayes {nlb:.2f} (gap {ref - nlb:.2f}), "
        f"bm3d {bm:.2f} (gap {ref - bm:.2f}); limit 1.5 dB "
        f"[info: bm3d with a 2.7 sigma threshold gives {bm27:.2f}]",
    )


# 8 -------------------------------------------------------------------------
def check_runtime():
    x = load_test_image(512)
    model = GaussianHomo(15.0)
    y = corrupt(x, model, 0)
    t0 = time.perf_counter()
    _, out = denoise(y, model, default_params(model), threads=1)
    dt = time.perf_counter() - t0
    return report(8, dt <= 60, f"512x512 sigma 15 linear, one thread: {dt:.1f} s (<= 60), PSNR {psnr(out, x):.2f} dB")


CHECKS = [
    check_ure_unbiased,
    check_closed_forms_vs_oracle,
    check_scd_monotone,
    check_bm3d_closed_forms,
    check_asymptotic_weights,
    check_psnr_monotone,
    check_family_parity,
    check_runtime,
]


@pytest.mark.parametrize("check", CHECKS, ids=[f"criterion_{i + 1}" for i in range(len(CHECKS))])
def test_acceptance(check):
    assert check()


if __name__ == "__main__":
    results = [check() for check in CHECKS]
    print(f"{sum(results)}/{len(results)} criteria pass")
