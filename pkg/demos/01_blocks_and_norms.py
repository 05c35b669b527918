"""
Blocks, and three ways to measure smoothness
============================================

A field on R x T is split into anisotropic Littlewood-Paley blocks; the
Fourier-side norm weighs the block sizes, the two difference norms weigh
increments instead. For a smooth bump all three should tell the same story.
"""

import math
import warnings

import numpy as np

from mixbesov import (
    BesovParams,
    besov_norm_diff,
    besov_norm_lp,
    build_partition,
    decompose,
    make_grid,
    make_lag_grid,
    sample_function,
)

# a Gaussian bump in time, a periodic bump in space
g = make_grid(256, 128, 8.0)
f = sample_function(g, lambda x1, x2: np.exp(-x1 ** 2) * (1 + np.cos(x2)) / 2)

# %% block sizes: mass sits at low j; cos x2 has frequency 1, which the low block k = -1 holds
part = build_partition()
dec = decompose(f, part)
norms = dec.block_norms((2, 2))
np.set_printoptions(precision=3, suppress=True, linewidth=120)
print("||Delta_jk f||_2 for j, k = -1..3")
print(norms[:5, :5])

# reconstruction is exact up to rounding
err = np.linalg.norm(dec.reconstruct().values - f.values) / np.linalg.norm(f.values)
print(f"reconstruction residual {err:.1e}")

# %% the three norms and their ratios
params = BesovParams((0.5, 0.5), (2, 2), (2, 2))
lags = make_lag_grid(g, 4)
lp = besov_norm_lp(dec, params)
plain = besov_norm_diff(f, params, lags, "plain")
sup = besov_norm_diff(f, params, lags, "sup")
print(f"Fourier side {lp:.4f}   plain differences {plain:.4f}   sup differences {sup:.4f}")
print(f"plain / Fourier {plain / lp:.3f}, plain / sup {plain / sup:.3f}")

# %% the ratio drifts with alpha (the constants depend on it) but stays moderate
for a in (0.1, 0.3, 0.5, 0.7, 0.9):
    p = BesovParams((a, a), (2, 2), (2, 2))
    r = besov_norm_diff(f, p, lags) / besov_norm_lp(dec, p)
    print(f"alpha = {a:.1f}: ratio {r:.3f}")

# %% a rough field: a windowed random walk in time
rng = np.random.default_rng(1)
walk = np.cumsum(rng.standard_normal(g.n1)) * math.sqrt(g.dx1)
walk -= walk[g.n1 // 2]
rough = sample_function(g, lambda x1, x2: np.exp(-x1 ** 2 / 2) * np.interp(x1, g.x1, walk) * np.cos(x2))
with warnings.catch_warnings():
    warnings.simplefilter("ignore")
    for a in (0.3, 0.45, 0.6):
        p = BesovParams((a, 0.3), (2, 2), (2, 2))
        print(f"rough field, alpha1 = {a}: plain {besov_norm_diff(rough, p, lags):.3f}")
