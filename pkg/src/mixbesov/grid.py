"""Sampled functions on a truncated window of R x T and their Fourier transforms.

The x1 axis is the window [-L, L) (a truncation of the real line, wrapped
periodically by the FFT), the x2 axis is one period [-pi, pi) of the torus.
Arrays are stored with shape ``(n1, n2)``, x1 as the major axis.

Transforms use the continuous convention

    F f(xi1, n) = int int f(x) exp(-i (xi1 x1 + n x2)) dx1 dx2,

approximated by the Riemann sum on the grid, with inverse
``(2 pi)^-2 * dxi1 * sum``. Frequencies are stored in numpy FFT order.
"""

from __future__ import annotations

import struct
import warnings
from dataclasses import dataclass, field as dc_field
from pathlib import Path
from typing import Callable

import numpy as np

from .errors import (
    BadMagic,
    EvaluatorReturnedNonFinite,
    FieldFormatError,
    FieldIOError,
    GridMismatch,
    NonPositiveWindow,
    NonPowerOfTwo,
    SupportMarginViolated,
    TruncatedPayload,
    UnsupportedVersion,
    ValidationError,
)

__all__ = [
    "GridSpec",
    "Field",
    "SpectralField",
    "make_grid",
    "sample_function",
    "forward_transform",
    "inverse_transform",
    "write_field",
    "read_field",
    "support_margin_ok",
    "warn_support_margin",
    "pad_window",
    "restrict_field",
]


def _is_pow2(n: int) -> bool:
    return isinstance(n, (int, np.integer)) and n > 0 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class GridSpec:
    n1: int
    n2: int
    window_half_width: float

    def __post_init__(self):
        for n in (self.n1, self.n2):
            if not _is_pow2(n):
                raise NonPowerOfTwo(f"grid sizes must be powers of two, got {n}")
        if not (self.window_half_width > 0 and np.isfinite(self.window_half_width)):
            raise NonPositiveWindow(f"window half width must be > 0, got {self.window_half_width}")
        object.__setattr__(self, "n1", int(self.n1))
        object.__setattr__(self, "n2", int(self.n2))
        object.__setattr__(self, "window_half_width", float(self.window_half_width))

    @property
    def L(self) -> float:
        return self.window_half_width

    @property
    def shape(self) -> tuple[int, int]:
        return (self.n1, self.n2)

    @property
    def dx1(self) -> float:
        return 2.0 * self.window_half_width / self.n1

    @property
    def dx2(self) -> float:
        return 2.0 * np.pi / self.n2

    @property
    def x1(self) -> np.ndarray:
        return -self.L + self.dx1 * np.arange(self.n1)

    @property
    def x2(self) -> np.ndarray:
        return -np.pi + self.dx2 * np.arange(self.n2)

    @property
    def xi1(self) -> np.ndarray:
        """Angular frequencies along x1, FFT order; spacing pi/L."""
        return (np.pi / self.L) * np.fft.fftfreq(self.n1, d=1.0 / self.n1)

    @property
    def xi2(self) -> np.ndarray:
        """Integer frequencies along x2, FFT order."""
        return np.fft.fftfreq(self.n2, d=1.0 / self.n2)

    @property
    def dxi1(self) -> float:
        return np.pi / self.L

    @property
    def nyquist1(self) -> float:
        return np.pi / self.dx1

    @property
    def nyquist2(self) -> float:
        return self.n2 / 2.0

    def mesh(self) -> tuple[np.ndarray, np.ndarray]:
        return np.meshgrid(self.x1, self.x2, indexing="ij")

    def index_of_x1(self, x: float) -> int:
        """Index of the grid point nearest to ``x`` on the x1 axis."""
        return int(round((x + self.L) / self.dx1))


def make_grid(n1: int, n2: int, L: float) -> GridSpec:
    """Build a grid; both sizes must be powers of two and at least 8."""
    for n in (n1, n2):
        if not _is_pow2(n) or n < 8:
            raise NonPowerOfTwo(f"grid sizes must be powers of two >= 8, got {n}")
    return GridSpec(n1, n2, L)


def _freeze(a: np.ndarray) -> np.ndarray:
    a = np.array(a, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Field:
    """Function values on a grid. ``kind`` is ``"real"`` or ``"complex"``."""

    grid: GridSpec
    values: np.ndarray
    kind: str = dc_field(default="")

    def __post_init__(self):
        v = np.asarray(self.values)
        if v.shape != self.grid.shape:
            if v.size == self.grid.n1 * self.grid.n2:
                v = v.reshape(self.grid.shape)
            else:
                raise GridMismatch(f"values of shape {v.shape} do not fit grid {self.grid.shape}")
        kind = self.kind or ("complex" if np.iscomplexobj(v) else "real")
        if kind == "real":
            if np.iscomplexobj(v):
                if np.any(v.imag != 0):
                    raise ValidationError("real field with nonzero imaginary part")
                v = v.real
            v = v.astype(np.float64, copy=False)
        elif kind == "complex":
            v = v.astype(np.complex128, copy=False)
        else:
            raise ValidationError(f"unknown field kind {kind!r}")
        if not np.all(np.isfinite(v)):
            raise EvaluatorReturnedNonFinite("field contains NaN or Inf")
        object.__setattr__(self, "values", _freeze(v))
        object.__setattr__(self, "kind", kind)

    @property
    def is_real(self) -> bool:
        return self.kind == "real"

    def with_values(self, values: np.ndarray) -> "Field":
        """New field on the same grid; stays real when the input is real and ``values`` are."""
        values = np.asarray(values)
        if self.is_real and np.iscomplexobj(values):
            values = values.real
        return Field(self.grid, values)

    def __add__(self, other: "Field") -> "Field":
        _same_grid(self, other)
        return Field(self.grid, self.values + other.values)

    def __sub__(self, other: "Field") -> "Field":
        _same_grid(self, other)
        return Field(self.grid, self.values - other.values)

    def __mul__(self, c) -> "Field":
        if isinstance(c, Field):
            _same_grid(self, c)
            return Field(self.grid, self.values * c.values)
        return Field(self.grid, self.values * c)

    __rmul__ = __mul__

    def __neg__(self) -> "Field":
        return Field(self.grid, -self.values)


def _same_grid(a: Field, b: Field) -> None:
    if a.grid != b.grid:
        raise GridMismatch(f"fields live on different grids: {a.grid} vs {b.grid}")


@dataclass(frozen=True, eq=False)
class SpectralField:
    """Continuous-scaled Fourier coefficients, FFT-ordered along both axes."""

    grid: GridSpec
    coeffs: np.ndarray
    real_input: bool = False

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=np.complex128)
        if c.shape != self.grid.shape:
            raise GridMismatch(f"coefficients of shape {c.shape} do not fit grid {self.grid.shape}")
        object.__setattr__(self, "coeffs", _freeze(c))

    @property
    def xi1(self) -> np.ndarray:
        return self.grid.xi1

    @property
    def xi2(self) -> np.ndarray:
        return self.grid.xi2

    def multiply(self, multiplier: np.ndarray) -> "SpectralField":
        return SpectralField(self.grid, self.coeffs * multiplier, self.real_input)


def sample_function(grid: GridSpec, f: Callable) -> Field:
    """Evaluate ``f(x1, x2)`` on the grid (vectorised over meshgrid arrays).

    values[i, j] = f(-L + i*dx1, -pi + j*dx2). The field is complex iff the
    evaluator returns a complex array.
    """
    X1, X2 = grid.mesh()
    v = np.asarray(f(X1, X2))
    if v.shape != grid.shape:
        v = np.broadcast_to(v, grid.shape)
    if not np.all(np.isfinite(v)):
        raise EvaluatorReturnedNonFinite("evaluator returned NaN or Inf")
    return Field(grid, v)


def _phase(grid: GridSpec) -> np.ndarray:
    # exp(i xi . (L, pi)) = (-1)^(m1 + m2) for the integer frequency indices
    m1 = np.fft.fftfreq(grid.n1, d=1.0 / grid.n1).astype(np.int64)
    m2 = np.fft.fftfreq(grid.n2, d=1.0 / grid.n2).astype(np.int64)
    s1 = 1.0 - 2.0 * (m1 % 2)
    s2 = 1.0 - 2.0 * (m2 % 2)
    return np.outer(s1, s2)


def forward_transform(field: Field) -> SpectralField:
    g = field.grid
    coeffs = g.dx1 * g.dx2 * _phase(g) * np.fft.fft2(field.values)
    return SpectralField(g, coeffs, real_input=field.is_real)


def inverse_transform(spec: SpectralField, real: bool | None = None) -> Field:
    """Inverse transform; ``real`` forces a real field (default: follow the input kind)."""
    g = spec.grid
    vals = np.fft.ifft2(_phase(g) * spec.coeffs) / (g.dx1 * g.dx2)
    if real is None:
        real = spec.real_input
    return Field(g, vals.real if real else vals)


# --- support margin ---------------------------------------------------------

def support_margin_ok(field: Field, margin: float | None = None, rel_eps: float = 1e-10,
                      axes: tuple[int, ...] = (1,)) -> bool:
    """True when |f| < rel_eps * max|f| outside [-L+m, L-m] on the requested axes.

    Axis 2 uses the same relative margin on [-pi, pi) (only needed for
    non-periodic operations such as plane convolution).
    """
    g = field.grid
    a = np.abs(field.values)
    peak = a.max()
    if peak == 0:
        return True
    tol = rel_eps * peak
    if 1 in axes:
        m = g.L / 4 if margin is None else margin
        outside = np.abs(g.x1) > g.L - m
        if np.any(a[outside, :] >= tol):
            return False
    if 2 in axes:
        m2 = np.pi / 4 if margin is None else margin * np.pi / g.L
        outside = np.abs(g.x2) > np.pi - m2
        if np.any(a[:, outside] >= tol):
            return False
    return True


def warn_support_margin(field: Field, what: str, margin: float | None = None,
                        axes: tuple[int, ...] = (1,)) -> bool:
    ok = support_margin_ok(field, margin, axes=axes)
    if not ok:
        warnings.warn(f"{what}: field does not vanish inside the support margin",
                      SupportMarginViolated, stacklevel=3)
    return ok


# --- re-gridding helpers ----------------------------------------------------

def pad_window(field: Field, factor: int = 2) -> Field:
    """Zero-extend along x1 to a window ``factor`` times wider (same spacing)."""
    if not _is_pow2(factor):
        raise NonPowerOfTwo("pad factor must be a power of two")
    g = field.grid
    ng = GridSpec(g.n1 * factor, g.n2, g.L * factor)
    out = np.zeros(ng.shape, dtype=field.values.dtype)
    start = (ng.n1 - g.n1) // 2
    out[start:start + g.n1] = field.values
    return Field(ng, out, field.kind)


def restrict_field(field: Field, grid: GridSpec) -> Field:
    """Subsample a field onto a coarser grid sharing the same window."""
    g = field.grid
    if grid.L != g.L or g.n1 % grid.n1 or g.n2 % grid.n2:
        raise GridMismatch(f"cannot restrict {g} onto {grid}")
    s1, s2 = g.n1 // grid.n1, g.n2 // grid.n2
    return Field(grid, field.values[::s1, ::s2], field.kind)


# --- file format ------------------------------------------------------------

MAGIC = b"MBDF"
VERSION = 1
_HEADER = struct.Struct("<4sIIIdB")


def write_field(field: Field, path) -> None:
    g = field.grid
    dtype = 0 if field.is_real else 1
    header = _HEADER.pack(MAGIC, VERSION, g.n1, g.n2, g.L, dtype)
    if field.is_real:
        payload = np.ascontiguousarray(field.values, dtype="<f8").tobytes()
    else:
        payload = np.ascontiguousarray(field.values, dtype="<c16").tobytes()
    try:
        Path(path).write_bytes(header + payload)
    except OSError as exc:
        raise FieldIOError(str(exc)) from exc


def read_field(path) -> Field:
    try:
        raw = Path(path).read_bytes()
    except OSError as exc:
        raise FieldIOError(str(exc)) from exc
    if len(raw) < 4 or raw[:4] != MAGIC:
        raise BadMagic(f"{path}: not a field file")
    if len(raw) < _HEADER.size:
        raise TruncatedPayload(f"{path}: header truncated")
    _, version, n1, n2, L, dtype = _HEADER.unpack_from(raw)
    if version != VERSION:
        raise UnsupportedVersion(f"{path}: version {version}")
    if dtype not in (0, 1):
        raise FieldFormatError(f"{path}: unknown dtype tag {dtype}")
    width = 8 if dtype == 0 else 16
    need = n1 * n2 * width
    body = raw[_HEADER.size:]
    if len(body) < need:
        raise TruncatedPayload(f"{path}: expected {need} payload bytes, found {len(body)}")
    vals = np.frombuffer(body[:need], dtype="<f8" if dtype == 0 else "<c16").reshape(n1, n2)
    return Field(GridSpec(n1, n2, L), vals, "real" if dtype == 0 else "complex")
