"""Dyadic partition of unity, anisotropic Littlewood-Paley blocks and the
Fourier-side Besov norm with dominating mixed smoothness."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np

from .errors import ExponentOutOfRange, GridMismatch, TruncatedBlock, ValidationError
from .grid import Field, GridSpec, SpectralField, forward_transform, inverse_transform, warn_support_margin
from .mixed_norms import INF, as_exponent, exponent_pair, lp_norm_array

__all__ = [
    "DyadicPartition",
    "build_partition",
    "BlockIndex",
    "ALL",
    "BesovParams",
    "BlockDecomposition",
    "lp_block",
    "decompose",
    "besov_norm_lp",
    "lq_norm",
    "spectral_derivative",
    "block_kernel",
]

ALL = None


def _glue(t: np.ndarray) -> np.ndarray:
    """Smooth step: 0 for t <= 0, 1 for t >= 1, a(t)/(a(t)+a(1-t)) with a(t)=exp(-1/t)."""
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    out[t >= 1] = 1.0
    mid = (t > 0) & (t < 1)
    tm = t[mid]
    a = np.exp(-1.0 / tm)
    b = np.exp(-1.0 / (1.0 - tm))
    out[mid] = a / (a + b)
    return out


def _psi(x: np.ndarray, inner: float = 1.0, outer: float = 4.0 / 3.0) -> np.ndarray:
    # 1 on |x| <= inner, 0 on |x| >= outer
    return _glue((outer - np.abs(x)) / (outer - inner))


@dataclass(frozen=True)
class DyadicPartition:
    """The pair (chi, rho) with chi = psi and rho(x) = psi(x/2) - psi(x)."""

    inner_radius: float = 1.0
    outer_radius: float = 4.0 / 3.0

    def psi(self, x) -> np.ndarray:
        return _psi(np.asarray(x, dtype=float), self.inner_radius, self.outer_radius)

    def chi(self, x) -> np.ndarray:
        return self.psi(x)

    def rho(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return self.psi(x / 2.0) - self.psi(x)

    def rho_j(self, j: Optional[int], x) -> np.ndarray:
        """rho_{-1} = chi, rho_j = rho(2^-j .); ``j = ALL`` gives the constant 1."""
        x = np.asarray(x, dtype=float)
        if j is ALL:
            return np.ones_like(x)
        if j == -1:
            return self.chi(x)
        if j < -1:
            raise ValidationError(f"block index must be >= -1, got {j}")
        return self.rho(np.ldexp(x, -j))


def build_partition() -> DyadicPartition:
    return DyadicPartition()


class BlockIndex(NamedTuple):
    j: Optional[int]
    k: Optional[int]


@dataclass(frozen=True)
class BesovParams:
    alpha: tuple
    p: tuple
    q: tuple

    def __post_init__(self):
        a1, a2 = (float(a) for a in self.alpha)
        object.__setattr__(self, "alpha", (a1, a2))
        object.__setattr__(self, "p", exponent_pair(self.p))
        object.__setattr__(self, "q", exponent_pair(self.q))

    def check_difference_range(self) -> None:
        if not all(0 < a < 1 for a in self.alpha):
            raise ExponentOutOfRange(f"difference norms need alpha in (0,1)^2, got {self.alpha}")

    def to_dict(self) -> dict:
        enc = lambda v: "inf" if v == INF else v  # noqa: E731
        return {"alpha": list(self.alpha), "p": [enc(v) for v in self.p], "q": [enc(v) for v in self.q]}


def _multiplier(part: DyadicPartition, grid: GridSpec, idx: BlockIndex) -> np.ndarray:
    m1 = part.rho_j(idx.j, grid.xi1)
    m2 = part.rho_j(idx.k, grid.xi2)
    return np.outer(m1, m2)


def _check_truncation(part: DyadicPartition, grid: GridSpec, idx: BlockIndex) -> bool:
    bad = []
    if idx.j is not ALL and idx.j >= 0 and (8.0 / 3.0) * 2.0 ** idx.j > grid.nyquist1:
        bad.append(f"j={idx.j}")
    if idx.k is not ALL and idx.k >= 0 and (8.0 / 3.0) * 2.0 ** idx.k > grid.nyquist2:
        bad.append(f"k={idx.k}")
    return bool(bad)


def lp_block(field: Field, part: DyadicPartition, idx) -> Field:
    """Delta_{j,k} f; pass ``ALL`` for one index to get a one-directional block."""
    idx = BlockIndex(*idx)
    for v in idx:
        if v is not ALL and v < -1:
            raise ValidationError(f"block index must be >= -1, got {idx}")
    if _check_truncation(part, field.grid, idx):
        warnings.warn(f"block {tuple(idx)} extends beyond the Nyquist frequency", TruncatedBlock, stacklevel=2)
    spec = forward_transform(field)
    return inverse_transform(spec.multiply(_multiplier(part, field.grid, idx)))


def _level_count(nyquist: float) -> int:
    return int(math.ceil(math.log2(nyquist)))


class BlockDecomposition:
    """All blocks Delta_{j,k} f for -1 <= j <= j_max, -1 <= k <= k_max.

    Blocks are computed on first access and cached; block norms are cached
    per exponent pair.
    """

    def __init__(self, field: Field, part: DyadicPartition):
        g = field.grid
        self.grid = g
        self.partition = part
        self.field = field
        self.spectrum: SpectralField = forward_transform(field)
        self.j_max = _level_count(g.nyquist1)
        self.k_max = _level_count(g.nyquist2)
        self._m1 = {j: part.rho_j(j, g.xi1) for j in self.j_range}
        self._m2 = {k: part.rho_j(k, g.xi2) for k in self.k_range}
        self._blocks: dict[BlockIndex, Field] = {}
        self._norms: dict[tuple, np.ndarray] = {}
        self.truncated = frozenset(
            BlockIndex(j, k) for j in self.j_range for k in self.k_range
            if _check_truncation(part, g, BlockIndex(j, k))
        )

    @property
    def j_range(self) -> range:
        return range(-1, self.j_max + 1)

    @property
    def k_range(self) -> range:
        return range(-1, self.k_max + 1)

    def _compute(self, j: int, k: int) -> np.ndarray:
        mult = np.outer(self._m1[j], self._m2[k])
        return inverse_transform(self.spectrum.multiply(mult)).values

    def block(self, j: int, k: int) -> Field:
        key = BlockIndex(j, k)
        if key not in self._blocks:
            self._blocks[key] = Field(self.grid, self._compute(j, k), self.field.kind)
        return self._blocks[key]

    @property
    def blocks(self) -> dict:
        return {BlockIndex(j, k): self.block(j, k) for j in self.j_range for k in self.k_range}

    def block_norms(self, p) -> np.ndarray:
        """Array of ||Delta_{j,k} f||_p indexed [j+1, k+1]."""
        p = exponent_pair(p)
        if p not in self._norms:
            g = self.grid
            out = np.zeros((self.j_max + 2, self.k_max + 2))
            for j in self.j_range:
                for k in self.k_range:
                    key = BlockIndex(j, k)
                    vals = self._blocks[key].values if key in self._blocks else self._compute(j, k)
                    out[j + 1, k + 1] = lp_norm_array(vals, g.dx1, g.dx2, p)
            self._norms[p] = out
        return self._norms[p]

    def reconstruct(self) -> Field:
        total = sum(self.block(j, k).values for j in self.j_range for k in self.k_range)
        return Field(self.grid, total, self.field.kind)


def decompose(field: Field, part: DyadicPartition) -> BlockDecomposition:
    return BlockDecomposition(field, part)


def lq_norm(a: np.ndarray, q: float, axis: int = -1) -> np.ndarray:
    """l^q norm along ``axis`` (sums run from the smallest index upward)."""
    q = as_exponent(q)
    a = np.abs(np.asarray(a, dtype=float))
    if q == INF:
        return a.max(axis=axis)
    peak = a.max(axis=axis, keepdims=True)
    safe = np.where(peak > 0, peak, 1.0)
    s = (np.power(a / safe, q).sum(axis=axis)) ** (1.0 / q)
    return np.squeeze(safe, axis=axis) * s


def _besov_from_norms(norms: np.ndarray, params: BesovParams) -> float:
    a1, a2 = params.alpha
    q1, q2 = params.q
    j = np.arange(norms.shape[0]) - 1
    k = np.arange(norms.shape[1]) - 1
    weighted = norms * np.exp2(a2 * k)[None, :]
    inner = lq_norm(weighted, q2, axis=1) * np.exp2(a1 * j)
    return float(lq_norm(inner, q1, axis=0))


def besov_norm_lp(decomp, params: BesovParams) -> float:
    """||(2^{a1 j} ||(2^{a2 k} ||Delta_{j,k} f||_p)_k||_{l^q2})_j||_{l^q1}.

    Accepts a BlockDecomposition or a Field (decomposed with the standard partition).
    """
    if isinstance(decomp, Field):
        decomp = decompose(decomp, build_partition())
    return _besov_from_norms(decomp.block_norms(params.p), params)


def spectral_derivative(field: Field, axis: int, order: int = 1) -> Field:
    """Multiply the spectrum by (i xi)^order on one axis.

    For odd orders the Nyquist mode is dropped, its derivative being ambiguous.
    """
    if axis not in (1, 2):
        raise ValidationError(f"axis must be 1 or 2, got {axis}")
    g = field.grid
    if axis == 1:
        warn_support_margin(field, "spectral_derivative")
    xi = g.xi1 if axis == 1 else g.xi2
    n = g.n1 if axis == 1 else g.n2
    factor = (1j * xi) ** order
    if order % 2:
        factor[n // 2] = 0.0
    mult = factor[:, None] if axis == 1 else factor[None, :]
    spec = forward_transform(field)
    return inverse_transform(spec.multiply(np.broadcast_to(mult, g.shape)))


def block_kernel(grid: GridSpec, part: DyadicPartition, idx, center: tuple = (0.0, 0.0)) -> Field:
    """Inverse transform of the block multiplier, translated to ``center``.

    This is the field whose spectrum is exactly rho_j (x) rho_k; it is real
    because the partition is even.
    """
    idx = BlockIndex(*idx)
    mult = _multiplier(part, grid, idx)
    phase = np.exp(-1j * np.add.outer(grid.xi1 * center[0], grid.xi2 * center[1]))
    return inverse_transform(SpectralField(grid, mult * phase), real=True)
