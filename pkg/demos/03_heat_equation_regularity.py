"""
Time and space regularity of the stochastic heat equation
=========================================================

Dirichlet heat equation on (-pi, pi) driven by space-time white noise,
solved mode by mode with exact Ornstein-Uhlenbeck steps. Squared time
increments should scale like sqrt(h1), squared space increments like h2.
"""

import math

import numpy as np

from mixbesov import (
    BesovParams,
    SheConfig,
    SheSampler,
    WindowSpec,
    estimate_increment_moments,
    local_besov_norm_diff2,
    make_lag_grid,
    multiply_time_window,
    besov_norm_diff,
    regularity_fit,
)
from mixbesov.random_fields import INF, she_variance

cfg = SheConfig(t_max=8.0, n_modes=64, n_time=128, n_space=128, seed=3)
sampler = SheSampler(cfg)
g = sampler.grid

# %% the stationary variance at the centre is pi/4 (minus a small truncation tail)
print(f"truncated stationary variance at 0: {she_variance(0.0, INF, cfg.n_modes)[0]:.5f}, pi/4 = {math.pi / 4:.5f}")
row = g.n1 // 2 + cfg.n_time - 1
col = int(np.argmin(np.abs(g.x2)))
vals = np.array([sampler.draw(i).values[row, col] for i in range(256)])
print(f"empirical at t = T - dt: {np.mean(vals ** 2):.4f} +- {np.std(vals ** 2) / math.sqrt(vals.size):.4f}")

# %% increment moments and slopes
lags = make_lag_grid(g, 4, 1, 2)
rep = estimate_increment_moments(sampler, lags, [2], 256)
fit = regularity_fit(rep, 2)
print("time slope", round(fit["dir1"]["slopes"][0], 3), " space slope", round(fit["dir2"]["slopes"][0], 3))
for r in rep.select("dir1", 2):
    print(f"  h1 = {r.h1:.4f}: E|delta_1 u|^2 = {r.value:.4f}, ratio to sqrt(h1) {r.value / math.sqrt(r.h1):.3f}")

# %% cutting a path off in time: the window costs at most its C^1 norm
params = BesovParams((0.1, 0.2), (2, 2), (2, 2))
u = sampler.draw(0)
local = local_besov_norm_diff2(u, params, cfg.t_max, lags)
for width in (2.0, 1.0, 0.5):
    w = WindowSpec(cfg.t_max, width)
    glob = besov_norm_diff(multiply_time_window(u, w), params, lags)
    print(f"width {width}: global {glob:.3f}  <=  C * {w.c1_norm:.2f} * {local:.3f}, C = {glob / (w.c1_norm * local):.3f}")
