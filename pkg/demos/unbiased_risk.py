"""
An unbiased estimate of the risk
================================

For a group Y (n x k) and weights Theta, the estimate

    URE = ||Y Theta - Y||^2 + 2 tr(D1 Theta) - tr(D1)

only needs the noisy data, yet averages to the true quadratic risk of
Y -> Y Theta. D1 is diagonal and depends on the noise type. Below we check
this by simulation for each model, then look at the weights that minimize it.
"""

import numpy as np

import nlridge as nr

rng = np.random.default_rng(0)
n, k = 16, 8
X = rng.uniform(20, 200, (n, k))  # a "clean" group
theta = 0.6 * np.eye(k) + 0.05  # some fixed weights

models = [nr.GaussianHomo(15.0), nr.Poisson(), nr.MixedPG(2.0, 30.0)]
for model in models:
    true_risk = nr.risk_value(theta, X, nr.d2_matrix(X, model))
    # 20000 noisy copies of X stacked into one tall image, then split back
    Y = nr.corrupt(np.tile(X, (20000, 1)), model, seed=1).reshape(-1, n, k)
    ure = nr.ure_value(theta, Y, nr.d1_matrix(Y, model))
    se = ure.std() / np.sqrt(len(ure))
    print(f"{nr.noise.describe(model):22s} risk {true_risk:9.1f}   mean URE {ure.mean():9.1f} +- {se:.1f}")

# Minimizing the URE in closed form (linear and affine) or by coordinate descent.
model = nr.GaussianHomo(15.0)
Y = nr.corrupt(X, model, seed=2)
d1 = nr.d1_matrix(Y, model)
print()
for constraint in ("linear", "affine", "conical", "convex"):
    w = nr.step1_weights(Y, d1, nr.EstimatorConfig(constraint))
    print(f"{constraint:8s} URE {nr.ure_value(w, Y, d1):9.1f}  column sums {np.round(w.sum(axis=0)[:3], 3)}  "
          f"min weight {w.min():+.3f}")

# Step 2 with the clean group as pilot: the weights are the true risk minimizers.
w_oracle = nr.step2_weights(X, nr.d2_matrix(X, model))
print(f"\nrisk with oracle weights {nr.risk_value(w_oracle, X, nr.d2_matrix(X, model)):.1f}"
      f" vs identity {nr.risk_value(np.eye(k), X, nr.d2_matrix(X, model)):.1f}")
