"""Increments and the difference characterisations of the mixed Besov norm.

The h-integrals int_0^1 h^{-a q} G(h) dh/h are discretised over dyadic lags,
one term per octave with weight log 2. Lags are integer multiples of the grid
spacing: level k uses the shift ``base * 2**(k_max - k)`` cells, so the
finest level is ``base`` cells and refining the grid by two while raising
``k_max`` by one keeps the largest lag fixed.

Two variants of the global norm exist: ``"sup"`` takes the supremum of the
increment norm over every shift of at most the level's size (both signs),
``"plain"`` evaluates at +h and -h and takes the power mean of order q.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainExceedsWindow, LagExceedsWindow, ResolutionTooCoarse, ValidationError
from .grid import Field, GridSpec, warn_support_margin
from .littlewood_paley import BesovParams, _glue
from .mixed_norms import INF, TimeDomain, local_row_count, lp_norm_array

__all__ = [
    "LagGrid",
    "make_lag_grid",
    "WindowSpec",
    "rect_increment",
    "dir_increment",
    "besov_norm_diff",
    "besov_norm_diff_terms",
    "local_besov_norm_diff2",
    "multiply_time_window",
]

LOG2 = math.log(2.0)


@dataclass(frozen=True)
class LagGrid:
    """Dyadic lag levels k = 0..k_max; level k shifts ``base * 2**(k_max-k)`` cells."""

    grid: GridSpec
    k_max: int
    base1: int = 1
    base2: int = 1

    def __post_init__(self):
        if self.k_max < 3:
            raise ResolutionTooCoarse(f"need at least four lag octaves, got k_max={self.k_max}")
        if self.base1 < 1 or self.base2 < 1:
            raise ValidationError("lag bases must be positive integers")
        if self.m1[0] > self.grid.n1 // 2 or self.m2[0] > self.grid.n2 // 2:
            raise ResolutionTooCoarse(
                f"grid {self.grid.shape} cannot hold {self.k_max + 1} dyadic lag octaves")

    @property
    def levels(self) -> np.ndarray:
        return np.arange(self.k_max + 1)

    @property
    def m1(self) -> np.ndarray:
        return self.base1 * 2 ** (self.k_max - self.levels)

    @property
    def m2(self) -> np.ndarray:
        return self.base2 * 2 ** (self.k_max - self.levels)

    @property
    def h1(self) -> np.ndarray:
        return self.m1 * self.grid.dx1

    @property
    def h2(self) -> np.ndarray:
        return self.m2 * self.grid.dx2


def make_lag_grid(grid: GridSpec, k_max: int, base1: int = 1, base2: int = 1) -> LagGrid:
    return LagGrid(grid, int(k_max), int(base1), int(base2))


# --- increments -------------------------------------------------------------

def _check_shift(grid: GridSpec, m1: int, m2: int) -> None:
    if abs(m1) > grid.n1 or abs(m2) > grid.n2:
        raise LagExceedsWindow(f"shift ({m1}, {m2}) exceeds the window {grid.shape}")


def _d1(v: np.ndarray, m: int) -> np.ndarray:
    return np.roll(v, -m, axis=0) - v if m else np.zeros_like(v)


def _d2(v: np.ndarray, m: int) -> np.ndarray:
    return np.roll(v, -m, axis=1) - v if m else np.zeros_like(v)


def dir_increment(field: Field, axis: int, m: int) -> Field:
    """f(x + m dx e_axis) - f(x); shifts wrap on the grid (x1 wrap is the window edge)."""
    if axis not in (1, 2):
        raise ValidationError(f"axis must be 1 or 2, got {axis}")
    m = int(m)
    _check_shift(field.grid, m if axis == 1 else 0, m if axis == 2 else 0)
    op = _d1 if axis == 1 else _d2
    return Field(field.grid, op(field.values, m), field.kind)


def rect_increment(field: Field, m1: int, m2: int) -> Field:
    """Rectangular increment, computed as the x1 difference of the x2 difference."""
    m1, m2 = int(m1), int(m2)
    _check_shift(field.grid, m1, m2)
    return Field(field.grid, _d1(_d2(field.values, m2), m1), field.kind)


# --- spectral tables for p = (2, 2) -------------------------------------------

def _sin2_weights(n: int, shifts: np.ndarray) -> np.ndarray:
    # |exp(i 2 pi m s / n) - 1|^2 = 4 sin^2(pi m s / n); rows: shifts, cols: FFT frequency index
    idx = np.fft.fftfreq(n, d=1.0 / n)
    return 4.0 * np.sin(np.pi * np.outer(shifts, idx) / n) ** 2


class _L2Tables:
    """Squared L^(2,2) norms of increments for all shifts, via Parseval.

    Every term is a nonnegative sum, so small increments keep full relative
    accuracy. For circular shifts the norm does not depend on the sign of
    either shift.
    """

    def __init__(self, field: Field, M1: int, M2: int):
        g = field.grid
        power = np.abs(np.fft.fft2(field.values)) ** 2
        scale = g.dx1 * g.dx2 / (g.n1 * g.n2)
        W1 = _sin2_weights(g.n1, np.arange(M1 + 1))
        W2 = _sin2_weights(g.n2, np.arange(M2 + 1))
        self.dir1 = scale * (W1 @ power.sum(axis=1))
        self.dir2 = scale * (W2 @ power.sum(axis=0))
        self.rect = scale * (W1 @ power @ W2.T)


# --- global difference norms -------------------------------------------------

def _power_mean(values, q: float) -> float:
    v = np.asarray(values, dtype=float)
    if q == INF:
        return float(v.max())
    peak = v.max()
    if peak == 0:
        return 0.0
    return float(peak * np.mean((v / peak) ** q) ** (1.0 / q))


def _weighted_lq(values: np.ndarray, h: np.ndarray, alpha: float, q: float, axis: int = -1):
    """Dyadic discretisation of (int h^{-alpha q} G(h)^q dh/h)^{1/q}."""
    values = np.asarray(values, dtype=float)
    shape = [1] * values.ndim
    shape[axis] = -1
    w = np.asarray(h, dtype=float).reshape(shape) ** (-alpha)
    a = values * w
    if q == INF:
        return a.max(axis=axis)
    peak = a.max(axis=axis, keepdims=True)
    safe = np.where(peak > 0, peak, 1.0)
    s = (LOG2 * np.power(a / safe, q).sum(axis=axis)) ** (1.0 / q)
    return np.squeeze(safe, axis=axis) * s


def _combine(base: float, d1: np.ndarray, d2: np.ndarray, rect: np.ndarray,
             lags: LagGrid, params: BesovParams) -> dict:
    a1, a2 = params.alpha
    q1, q2 = params.q
    t1 = float(_weighted_lq(d1, lags.h1, a1, q1))
    t2 = float(_weighted_lq(d2, lags.h2, a2, q2))
    inner = _weighted_lq(rect, lags.h2, a2, q2, axis=1)
    t3 = float(_weighted_lq(inner, lags.h1, a1, q1))
    return {"lp": base, "dir1": t1, "dir2": t2, "rect": t3, "total": base + t1 + t2 + t3}


def _box_sup(table: np.ndarray) -> np.ndarray:
    """S[a, b] = max over a' <= a, b' <= b (tables indexed by |shift|)."""
    return np.maximum.accumulate(np.maximum.accumulate(table, axis=0), axis=1)


def _signed_dir_norms(v, axis, shifts, dx1, dx2, p):
    op = _d1 if axis == 1 else _d2
    return np.array([lp_norm_array(op(v, int(m)), dx1, dx2, p) for m in shifts])


def _bounds(lags: LagGrid, shift_bounds):
    if shift_bounds is None:
        return lags.m1, lags.m2
    b1, b2 = (np.asarray(b, dtype=int) for b in shift_bounds)
    n1, n2 = lags.grid.n1, lags.grid.n2
    if b1.shape != lags.m1.shape or b2.shape != lags.m2.shape:
        raise ValidationError("shift bounds need one entry per lag level")
    if b1.min() < 0 or b2.min() < 0 or b1.max() > n1 // 2 or b2.max() > n2 // 2:
        raise ValidationError("shift bounds must lie in [0, n/2]")
    return b1, b2


def besov_norm_diff_terms(field: Field, params: BesovParams, lags: LagGrid, variant: str = "plain",
                          shift_bounds=None) -> dict:
    """The four terms of the difference norm and their sum (key ``total``).

    ``shift_bounds`` (sup variant only) replaces the per-level shift box
    |r_i| <= m_i by |r_i| <= b_i while keeping the lag weights.
    """
    if variant not in ("sup", "plain"):
        raise ValidationError(f"variant must be 'sup' or 'plain', got {variant!r}")
    if shift_bounds is not None and variant != "sup":
        raise ValidationError("shift bounds apply to the sup variant only")
    params.check_difference_range()
    g = field.grid
    if lags.grid != g:
        raise ValidationError("lag grid was built for a different grid")
    warn_support_margin(field, "besov_norm_diff")
    v = field.values
    p = params.p
    q1, q2 = params.q
    base = lp_norm_array(v, g.dx1, g.dx2, p)
    m1, m2 = lags.m1, lags.m2
    K = len(m1)
    b1, b2 = _bounds(lags, shift_bounds)

    if p == (2.0, 2.0):
        tab = _L2Tables(field, int(max(m1[0], b1.max())), int(max(m2[0], b2.max())))
        d1_all, d2_all, rect_all = np.sqrt(tab.dir1), np.sqrt(tab.dir2), np.sqrt(tab.rect)
        if variant == "sup":
            d1 = np.maximum.accumulate(d1_all)[b1]
            d2 = np.maximum.accumulate(d2_all)[b2]
            rect = _box_sup(rect_all)[np.ix_(b1, b2)]
        else:
            d1, d2, rect = d1_all[m1], d2_all[m2], rect_all[np.ix_(m1, m2)]
        return _combine(base, d1, d2, rect, lags, params)

    if variant == "plain":
        d1 = np.array([_power_mean(_signed_dir_norms(v, 1, [m, -m], g.dx1, g.dx2, p), q1) for m in m1])
        d2 = np.array([_power_mean(_signed_dir_norms(v, 2, [m, -m], g.dx1, g.dx2, p), q2) for m in m2])
        rect = np.zeros((K, K))
        for a, s1 in enumerate(m1):
            for b, s2 in enumerate(m2):
                vals = [lp_norm_array(_d1(_d2(v, int(e2 * s2)), int(e1 * s1)), g.dx1, g.dx2, p)
                        for e1 in (1, -1) for e2 in (1, -1)]
                # power mean over sign pairs, inner exponent q2
                rect[a, b] = _power_mean(vals, q2)
        return _combine(base, d1, d2, rect, lags, params)

    # sup variant, general exponents: every shift in the largest box
    M1, M2 = int(b1.max()), int(b2.max())
    s1 = np.arange(-M1, M1 + 1)
    s2 = np.arange(-M2, M2 + 1)
    d1_signed = _signed_dir_norms(v, 1, s1, g.dx1, g.dx2, p)
    d2_signed = _signed_dir_norms(v, 2, s2, g.dx1, g.dx2, p)
    d1_abs = np.maximum(d1_signed[M1:], d1_signed[M1::-1])
    d2_abs = np.maximum(d2_signed[M2:], d2_signed[M2::-1])
    rect_abs = np.zeros((M1 + 1, M2 + 1))
    for r2 in s2:
        inner = _d2(v, int(r2))
        for r1 in s1:
            val = lp_norm_array(_d1(inner, int(r1)), g.dx1, g.dx2, p)
            a, b = abs(int(r1)), abs(int(r2))
            if val > rect_abs[a, b]:
                rect_abs[a, b] = val
    d1 = np.maximum.accumulate(d1_abs)[b1]
    d2 = np.maximum.accumulate(d2_abs)[b2]
    rect = _box_sup(rect_abs)[np.ix_(b1, b2)]
    return _combine(base, d1, d2, rect, lags, params)


def besov_norm_diff(field: Field, params: BesovParams, lags: LagGrid, variant: str = "plain",
                    shift_bounds=None) -> float:
    return besov_norm_diff_terms(field, params, lags, variant, shift_bounds)["total"]


# --- local norm on D = [0, T] x T ---------------------------------------------

def local_besov_norm_diff2(field: Field, params: BesovParams, dom, lags: LagGrid,
                           terms: bool = False):
    """Localised plain norm on D = [0, T] x T (positive lags only).

    The rectangular and x1 terms are measured over [0, T - h1]; the x2 term and
    the L^p term over [0, T]. Only rows inside D are read.
    """
    params.check_difference_range()
    g = field.grid
    T = dom.t_max if isinstance(dom, TimeDomain) else float(dom)
    if T > g.L * (1 + 1e-12):
        raise DomainExceedsWindow(f"T={T} exceeds the window half width {g.L}")
    if lags.grid != g:
        raise ValidationError("lag grid was built for a different grid")
    i0 = g.n1 // 2
    nT = local_row_count(g, T)
    D = field.values[i0:i0 + nT]
    p = params.p
    dx1, dx2 = g.dx1, g.dx2
    base = lp_norm_array(D, dx1, dx2, p)
    m1, m2 = lags.m1, lags.m2
    d2 = np.array([lp_norm_array(_d2(D, int(m)), dx1, dx2, p) for m in m2])
    d1 = np.zeros(len(m1))
    rect = np.zeros((len(m1), len(m2)))
    for a, m in enumerate(m1):
        m = int(m)
        if m >= nT:
            continue  # D - h1 is empty
        diff1 = D[m:] - D[:-m]
        d1[a] = lp_norm_array(diff1, dx1, dx2, p)
        for b, s in enumerate(m2):
            rect[a, b] = lp_norm_array(_d2(diff1, int(s)), dx1, dx2, p)
    out = _combine(base, d1, d2, rect, lags, params)
    return out if terms else out["total"]


# --- time window multiplier ----------------------------------------------------

def _glue_derivative_max() -> float:
    t = np.linspace(1e-4, 1 - 1e-4, 20001)
    a = np.exp(-1.0 / t)
    b = np.exp(-1.0 / (1.0 - t))
    d = a * b * (1.0 / t ** 2 + 1.0 / (1.0 - t) ** 2) / (a + b) ** 2
    return float(d.max())


_GLUE_SLOPE = _glue_derivative_max()


@dataclass(frozen=True)
class WindowSpec:
    """Smooth window on [0, T]: rises over [0, w], equals ``amplitude`` on [w, T-w], falls to 0 at T."""

    t_max: float
    transition_width: float
    amplitude: float = 1.0

    def __post_init__(self):
        if not self.t_max > 0:
            raise ValidationError("window length must be positive")
        if not 0 < self.transition_width <= self.t_max / 2:
            raise ValidationError("transition width must lie in (0, T/2]")

    def __call__(self, x1) -> np.ndarray:
        x1 = np.asarray(x1, dtype=float)
        w = self.transition_width
        return self.amplitude * _glue(x1 / w) * _glue((self.t_max - x1) / w)

    @property
    def sup_norm(self) -> float:
        return abs(self.amplitude)

    @property
    def derivative_sup_norm(self) -> float:
        return abs(self.amplitude) * _GLUE_SLOPE / self.transition_width

    @property
    def c1_norm(self) -> float:
        return self.sup_norm + self.derivative_sup_norm


def multiply_time_window(field: Field, w: WindowSpec) -> Field:
    g = field.grid
    if w.t_max > g.L * (1 + 1e-12):
        raise DomainExceedsWindow(f"window length {w.t_max} exceeds the half width {g.L}")
    phi = w(g.x1)
    return Field(g, field.values * phi[:, None], field.kind)
