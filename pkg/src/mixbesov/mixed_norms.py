"""Mixed-integrability Lebesgue norms and the two convolution operators.

Norms are plain Riemann sums on the grid: the inner exponent acts along x2
(over one period), the outer one along x1. An infinite exponent is
``math.inf`` (or the string ``"inf"``) and switches that axis to a maximum,
so no p-th power of a huge float is ever formed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainExceedsWindow, ExponentOutOfRange, GridMismatch, ValidationError
from .grid import Field, GridSpec, forward_transform, inverse_transform, warn_support_margin

__all__ = [
    "as_exponent",
    "exponent_pair",
    "conjugate",
    "TimeDomain",
    "lp_norm_array",
    "mixed_lp_norm",
    "mixed_lp_norm_local",
    "local_row_count",
    "convolve",
]

INF = math.inf


def as_exponent(p) -> float:
    """Normalise an exponent: a real >= 1, or infinity (``math.inf``, ``"inf"``)."""
    if isinstance(p, str):
        s = p.strip().lower()
        if s in ("inf", "infinity", "oo", "∞"):
            return INF
        try:
            p = float(s)
        except ValueError as exc:
            raise ExponentOutOfRange(f"cannot parse exponent {p!r}") from exc
    p = float(p)
    if math.isnan(p) or p < 1:
        raise ExponentOutOfRange(f"exponent must lie in [1, inf], got {p}")
    return p


def exponent_pair(p) -> tuple[float, float]:
    if isinstance(p, str):
        p = p.split(",")
    try:
        p1, p2 = p
    except (TypeError, ValueError) as exc:
        raise ExponentOutOfRange(f"expected an exponent pair, got {p!r}") from exc
    return as_exponent(p1), as_exponent(p2)


def conjugate(p: float) -> float:
    """Hölder conjugate exponent."""
    p = as_exponent(p)
    if p == 1:
        return INF
    if p == INF:
        return 1.0
    return p / (p - 1.0)


@dataclass(frozen=True)
class TimeDomain:
    """The strip D = [0, T] x T."""

    t_max: float

    def __post_init__(self):
        if not self.t_max > 0:
            raise ValidationError(f"T must be positive, got {self.t_max}")


def _axis_norm(a: np.ndarray, p: float, dx: float, axis: int) -> np.ndarray:
    # a >= 0 and already scaled to max 1
    if p == INF:
        return a.max(axis=axis)
    if p == 1:
        return a.sum(axis=axis) * dx
    if p == 2:
        return np.sqrt(np.square(a).sum(axis=axis) * dx)
    return (np.power(a, p).sum(axis=axis) * dx) ** (1.0 / p)


def lp_norm_array(values: np.ndarray, dx1: float, dx2: float, p) -> float:
    """Mixed L^(p1,p2) Riemann norm of an (n1, n2) array (rows along x1)."""
    p1, p2 = exponent_pair(p)
    a = np.abs(values)
    if a.size == 0:
        return 0.0
    peak = a.max()
    if peak == 0:
        return 0.0
    a = a / peak
    inner = _axis_norm(a, p2, dx2, axis=1)
    return float(peak * _axis_norm(inner, p1, dx1, axis=0))


def mixed_lp_norm(field: Field, p) -> float:
    g = field.grid
    return lp_norm_array(field.values, g.dx1, g.dx2, p)


def local_row_count(grid: GridSpec, length: float) -> int:
    """Number of grid rows with x1 in [0, length)."""
    if length <= 0:
        return 0
    return int(math.floor(length / grid.dx1 + 1e-9))


def _origin_row(grid: GridSpec) -> int:
    return grid.n1 // 2


def mixed_lp_norm_local(field: Field, p, dom) -> float:
    """Mixed norm with the x1 integral restricted to [0, T]."""
    g = field.grid
    T = dom.t_max if isinstance(dom, TimeDomain) else float(dom)
    if T > g.L * (1 + 1e-12):
        raise DomainExceedsWindow(f"T={T} exceeds the window half width {g.L}")
    i0 = _origin_row(g)
    n = local_row_count(g, T)
    return lp_norm_array(field.values[i0:i0 + n], g.dx1, g.dx2, p)


def convolve(f: Field, g: Field, kind: str = "mixed_periodic") -> Field:
    """Approximate int f(x - y) g(y) dy on the grid through the spectra.

    ``mixed_periodic`` treats x2 as the torus; ``plane`` additionally expects
    both factors to vanish near the x2 edges, and warns otherwise.
    """
    if f.grid != g.grid:
        raise GridMismatch("convolution factors must share a grid")
    if kind not in ("plane", "mixed_periodic"):
        raise ValidationError(f"unknown convolution kind {kind!r}")
    axes = (1, 2) if kind == "plane" else (1,)
    warn_support_margin(f, "convolve", axes=axes)
    warn_support_margin(g, "convolve", axes=axes)
    F = forward_transform(f)
    G = forward_transform(g)
    out = F.multiply(G.coeffs)
    return inverse_transform(out, real=f.is_real and g.is_real)
