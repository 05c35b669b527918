"""
Increment moments of the Brownian sheet
=======================================

Min-covariance in both directions. Rectangular increments over an h1 x h2
box have variance h1 h2 exactly, so log-moments against log-lags are lines
of slope p/2 per axis, and the fourth moment is three times the squared
second one.
"""

import math

import numpy as np

from mixbesov import (
    BesovParams,
    CovSpec,
    GaussianSampler,
    estimate_increment_moments,
    increment_gaussianity,
    kolmogorov_check,
    make_grid,
    make_lag_grid,
    regularity_fit,
)

grid = make_grid(128, 128, math.pi)
sampler = GaussianSampler(CovSpec.brownian_sheet(math.pi), grid, seed=1)
lags = make_lag_grid(grid, 4)

# %% one sample: variance grows like t * x
X = sampler.draw(0)
print("sample max |X| =", round(float(np.abs(X.values).max()), 3))

# %% second and fourth moments on the diagonal lags
rep = estimate_increment_moments(sampler, lags, [2, 4], 512)
print(f"{'h':>8} {'E box^2':>10} {'h^2':>10} {'z':>6} {'E box^4 / 3h^4':>15}")
second = {(r.h1, r.h2): r for r in rep.select("rect", 2)}
fourth = {(r.h1, r.h2): r for r in rep.select("rect", 4)}
for (h1, h2), r in sorted(second.items()):
    if math.isclose(h1, h2):
        ratio = fourth[(h1, h2)].value / (3 * h1 ** 2 * h2 ** 2)
        print(f"{h1:8.4f} {r.value:10.5f} {h1 * h2:10.5f} {(r.value - h1 * h2) / r.stderr:6.2f} {ratio:15.4f}")

# %% fitted slopes at p = 2 should be 1 per axis
fit = regularity_fit(rep, 2)
for kind, f in fit.items():
    print(kind, [round(s, 3) for s in f["slopes"]], "R^2", round(f["r2"], 5))

g = increment_gaussianity(sampler, "rect", 4, 4, 512)
print(f"kurtosis ratio {g['kurtosis_ratio']:.4f} +- {g['kurtosis_se']:.4f}")

# %% slope 2 at p = 4: which smoothness does the moment criterion allow?
for q in (2, 4):
    for a in (0.05, 0.2, 0.3):
        v = kolmogorov_check(rep, BesovParams((a, a), (4, 4), (q, q)))
        print(f"q = {q}, alpha = {a}: {'pass' if v.passed else 'fail'}  "
              f"(admissible up to {v.admissible_alpha[0]:.3f})")
