"""
Poisson and mixed Poisson-Gaussian noise
========================================

Only the diagonal matrices D1/D2 change with the noise model: column sums of
Y for Poisson, of aY + b for the mixed model. Patch sizes are taken from the
Gaussian table at the noise level with the same average variance.
"""

import numpy as np

import nlridge as nr

clean = nr.load_test_image(256)[64:192, 64:192]

# photon-limited: scale down to a peak of 30 counts, then back up for display
peak = 30.0
scaled = clean * peak / 255.0
counts = nr.corrupt(scaled, nr.Poisson(), seed=4)
step1, step2 = nr.denoise(counts, nr.Poisson())
print(f"Poisson, peak {peak:.0f}: noisy {nr.psnr(counts, scaled, peak):.2f} dB, "
      f"step 1 {nr.psnr(step1, scaled, peak):.2f} dB, step 2 {nr.psnr(step2, scaled, peak):.2f} dB")

model = nr.MixedPG(a=4.0, b=100.0)
noisy = nr.corrupt(clean, model, seed=5)
params = nr.params_for(model, noisy)
print(f"\nmixed a=4 b=100: equivalent sigma {nr.pipeline.equivalent_sigma(model, noisy):.1f}, "
      f"patches {params.side1}x{params.side1}, groups {params.k1}/{params.k2}")
step1, step2 = nr.denoise(noisy, model, params)
print(f"noisy {nr.psnr(noisy, clean):.2f} dB, step 1 {nr.psnr(step1, clean):.2f} dB, step 2 {nr.psnr(step2, clean):.2f} dB")

# Heteroscedastic Gaussian: a noisemap of per-pixel variances, brighter = noisier
noisemap = np.tile(np.linspace(50, 900, clean.shape[1]), (clean.shape[0], 1))
model = nr.GaussianHetero(noisemap)
noisy = nr.corrupt(clean, model, seed=6)
step1, step2 = nr.denoise(noisy, model)
print(f"\nnoisemap 50..900: noisy {nr.psnr(noisy, clean):.2f} dB, step 2 {nr.psnr(step2, clean):.2f} dB")
