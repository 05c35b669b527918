"""Gaussian product-covariance fields, the Dirichlet stochastic heat equation,
increment moments and the Kolmogorov-type regularity verdict.

Random fields live on the strip [0, T] x T of a grid: row ``n1 // 2`` is
x1 = 0 and rows with x1 outside [0, T) are zero. Sample ``i`` of every
sampler draws from ``numpy.random.default_rng([seed, i])``, so streams are
reproducible whatever order samples are produced in.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field as dc_field
from typing import Callable, Iterator, Optional

import numpy as np
from scipy import stats

from .errors import (
    CovarianceNotPSD,
    ExponentOrderingViolated,
    GridTooLargeForDense,
    InsufficientLagLevels,
    ModeCountExceedsGrid,
    ResolutionTooCoarse,
    ValidationError,
)
from .grid import Field, GridSpec, make_grid
from .littlewood_paley import BesovParams
from .mixed_norms import INF, as_exponent, local_row_count

__all__ = [
    "CovSpec",
    "GaussianSampler",
    "FunctionSampler",
    "SheConfig",
    "SheSampler",
    "sample_product_gaussian",
    "simulate_she",
    "she_grid",
    "she_covariance",
    "she_variance",
    "MomentRow",
    "MomentReport",
    "estimate_increment_moments",
    "increment_gaussianity",
    "regularity_fit",
    "KolmogorovVerdict",
    "kolmogorov_check",
    "required_exponent",
    "worker_count",
]

MAX_DENSE = 1024
KINDS = ("rect", "dir1", "dir2")


def worker_count() -> int:
    """Worker cap: MIXBESOV_THREADS if set, else the CPU count (at most 8)."""
    env = os.environ.get("MIXBESOV_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError as exc:
            raise ValidationError(f"MIXBESOV_THREADS must be an integer, got {env!r}") from exc
    return max(1, min(8, os.cpu_count() or 1))


def _map_ordered(fn, items, workers: Optional[int] = None) -> list:
    workers = worker_count() if workers is None else workers
    if workers <= 1 or len(items) < 2:
        return [fn(i) for i in items]
    with ThreadPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(fn, items))


# --- Gaussian fields with separable covariance ---------------------------------

def _active_rows(grid: GridSpec, t_max: float) -> tuple[int, int]:
    if t_max > grid.L * (1 + 1e-12):
        raise ValidationError(f"T={t_max} exceeds the window half width {grid.L}")
    return grid.n1 // 2, local_row_count(grid, t_max)


def _sqrt_psd(c: np.ndarray, what: str) -> np.ndarray:
    if not np.allclose(c, c.T, rtol=1e-12, atol=1e-14 * max(1.0, np.abs(c).max())):
        raise CovarianceNotPSD(f"{what} covariance matrix is not symmetric")
    lam, vec = np.linalg.eigh(0.5 * (c + c.T))
    floor = -1e-10 * max(np.abs(lam).max(), np.finfo(float).tiny)
    if lam.min() < floor:
        raise CovarianceNotPSD(f"{what} covariance has eigenvalue {lam.min():.3e}")
    return (vec * np.sqrt(np.clip(lam, 0.0, None))) @ vec.T


@dataclass(frozen=True)
class CovSpec:
    """Q(x, y) = q1(x1, y1) q2(x2, y2) on [0, T] x (torus or rectangle).

    With the ``rectangle`` tag the second factor is evaluated at x2 + pi, so
    q2 sees the interval [0, 2 pi); with ``torus`` it sees the raw x2.
    """

    q1: Callable
    q2: Callable
    domain: str = "rectangle"
    t_max: float = 1.0

    def __post_init__(self):
        if self.domain not in ("torus", "rectangle"):
            raise ValidationError(f"domain tag must be 'torus' or 'rectangle', got {self.domain!r}")
        if not self.t_max > 0:
            raise ValidationError("T must be positive")

    @classmethod
    def brownian_sheet(cls, t_max: float = 1.0) -> "CovSpec":
        return cls(np.minimum, np.minimum, "rectangle", t_max)

    def x2_coords(self, grid: GridSpec) -> np.ndarray:
        return grid.x2 + math.pi if self.domain == "rectangle" else grid.x2

    def matrices(self, grid: GridSpec) -> tuple[np.ndarray, np.ndarray]:
        i0, nT = _active_rows(grid, self.t_max)
        s = grid.x1[i0:i0 + nT]
        y = self.x2_coords(grid)
        c1 = np.asarray(self.q1(s[:, None], s[None, :]), dtype=float)
        c2 = np.asarray(self.q2(y[:, None], y[None, :]), dtype=float)
        return c1, c2


class GaussianSampler:
    """Draws X = A1 Z A2^T with A_i the PSD square roots of the axis covariances."""

    def __init__(self, cov: CovSpec, grid: GridSpec, seed: int = 0):
        if grid.n1 > MAX_DENSE or grid.n2 > MAX_DENSE:
            raise GridTooLargeForDense(f"dense factorisation limited to {MAX_DENSE} points per axis")
        self.cov = cov
        self.grid = grid
        self.seed = int(seed)
        self.t_max = cov.t_max
        self.x2_domain = cov.domain
        c1, c2 = cov.matrices(grid)
        if c1.shape[0] > MAX_DENSE:
            raise GridTooLargeForDense(f"dense factorisation limited to {MAX_DENSE} points per axis")
        self._a1 = _sqrt_psd(c1, "first-axis")
        self._a2 = _sqrt_psd(c2, "second-axis")
        self._i0 = grid.n1 // 2

    def with_seed(self, seed: int) -> "GaussianSampler":
        out = object.__new__(GaussianSampler)
        out.__dict__.update(self.__dict__)
        out.seed = int(seed)
        return out

    def draw(self, i: int) -> Field:
        rng = np.random.default_rng([self.seed, int(i)])
        n = self._a1.shape[0]
        z = rng.standard_normal((n, self.grid.n2))
        values = np.zeros(self.grid.shape)
        values[self._i0:self._i0 + n] = self._a1 @ z @ self._a2.T
        return Field(self.grid, values)


class FunctionSampler:
    """Deterministic 'sampler' that always returns the same field."""

    def __init__(self, field: Field, t_max: float, x2_domain: str = "torus"):
        self.grid = field.grid
        self.field = field
        self.t_max = float(t_max)
        self.x2_domain = x2_domain
        self.seed = 0

    def with_seed(self, seed: int) -> "FunctionSampler":
        return self

    def draw(self, i: int) -> Field:
        return self.field


def sample_product_gaussian(cov: CovSpec, grid: GridSpec, n_samples: int, seed: int = 0) -> Iterator[Field]:
    sampler = GaussianSampler(cov, grid, seed)
    for i in range(int(n_samples)):
        yield sampler.draw(i)


# --- stochastic heat equation -----------------------------------------------------

@dataclass(frozen=True)
class SheConfig:
    """Spectral Galerkin heat equation on (-pi, pi) with Dirichlet conditions.

    Modes phi_j(x) = sin(j (x + pi) / 2) / sqrt(pi), eigenvalues j^2 / 4; the
    time grid has ``n_time`` steps of T / n_time starting at t = 0.
    """

    t_max: float
    n_modes: int
    n_time: int
    n_space: int
    seed: int = 0

    def __post_init__(self):
        if not self.t_max > 0:
            raise ValidationError("T must be positive")
        if self.n_time < 2:
            raise ValidationError("need at least two time steps")
        if self.n_modes < 1:
            raise ValidationError("need at least one mode")
        if self.n_modes > self.n_space // 2:
            raise ModeCountExceedsGrid(f"{self.n_modes} modes need at least {2 * self.n_modes} space points")

    @property
    def dt(self) -> float:
        return self.t_max / self.n_time

    @property
    def eigenvalues(self) -> np.ndarray:
        j = np.arange(1, self.n_modes + 1)
        return j * j / 4.0


def she_grid(cfg: SheConfig) -> GridSpec:
    """Grid whose rows x1 = 0, dt, ..., T - dt carry the time steps."""
    return make_grid(2 * cfg.n_time, cfg.n_space, cfg.t_max)


def _she_modes(x: np.ndarray, n_modes: int) -> np.ndarray:
    j = np.arange(1, n_modes + 1)
    return np.sin(np.outer(j, np.asarray(x, dtype=float) + math.pi) / 2.0) / math.sqrt(math.pi)


def simulate_she(cfg: SheConfig, sample_index: int = 0) -> Field:
    """One path of the truncated mild solution, each mode an exact OU chain from 0."""
    g = she_grid(cfg)
    rng = np.random.default_rng([int(cfg.seed), int(sample_index)])
    lam = cfg.eigenvalues
    decay = np.exp(-lam * cfg.dt)
    sd = np.sqrt(-np.expm1(-2.0 * lam * cfg.dt) / (2.0 * lam))
    noise = rng.standard_normal((cfg.n_time - 1, cfg.n_modes)) * sd
    coeffs = np.zeros((cfg.n_time, cfg.n_modes))
    for i in range(1, cfg.n_time):
        coeffs[i] = decay * coeffs[i - 1] + noise[i - 1]
    values = np.zeros(g.shape)
    i0 = g.n1 // 2
    values[i0:i0 + cfg.n_time] = coeffs @ _she_modes(g.x2, cfg.n_modes)
    return Field(g, values)


class SheSampler:
    def __init__(self, cfg: SheConfig):
        self.cfg = cfg
        self.grid = she_grid(cfg)
        self.t_max = cfg.t_max
        self.x2_domain = "torus"
        self.seed = cfg.seed

    def with_seed(self, seed: int) -> "SheSampler":
        return SheSampler(SheConfig(self.cfg.t_max, self.cfg.n_modes, self.cfg.n_time, self.cfg.n_space, int(seed)))

    def draw(self, i: int) -> Field:
        return simulate_she(self.cfg, i)


def she_covariance(x, y, t: float, n_modes: int) -> np.ndarray:
    """E[u(t,x) u(t,y)] for the truncated system; ``t = inf`` gives the stationary law."""
    j = np.arange(1, n_modes + 1)
    lam = j * j / 4.0
    w = 1.0 / (2.0 * lam) if t == INF else -np.expm1(-2.0 * lam * t) / (2.0 * lam)
    px = _she_modes(np.atleast_1d(x), n_modes)
    py = _she_modes(np.atleast_1d(y), n_modes)
    return np.einsum("j,jn,jn->n", w, px, py)


def she_variance(x, t: float, n_modes: int) -> np.ndarray:
    return she_covariance(x, x, t, n_modes)


# --- increment moments ---------------------------------------------------------------

@dataclass(frozen=True)
class MomentRow:
    h1: float
    h2: float
    p: float
    kind: str
    value: float
    stderr: float
    n: int


_COLUMNS = ("h1", "h2", "p", "moment_kind", "value", "stderr", "n")


@dataclass
class MomentReport:
    """Empirical E|increment|^p per lag and exponent, with standard errors.

    Directional rows carry 0 for the lag of the other axis.
    """

    rows: list
    per_sample: dict = dc_field(default_factory=dict, repr=False, compare=False)

    def select(self, kind: str, p: float) -> list:
        p = float(p)
        return [r for r in self.rows if r.kind == kind and r.p == p]

    @property
    def exponents(self) -> list:
        return sorted({r.p for r in self.rows})

    def to_records(self) -> list:
        return [{"h1": r.h1, "h2": r.h2, "p": r.p, "moment_kind": r.kind, "value": r.value,
                 "stderr": r.stderr, "n": r.n} for r in self.rows]

    def to_json(self) -> str:
        return json.dumps({"columns": list(_COLUMNS), "rows": self.to_records()}, indent=2)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=_COLUMNS, lineterminator="\n")
        w.writeheader()
        for rec in self.to_records():
            w.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in rec.items()})
        return buf.getvalue()

    @classmethod
    def from_records(cls, records) -> "MomentReport":
        rows = [MomentRow(float(r["h1"]), float(r["h2"]), float(r["p"]), str(r["moment_kind"]),
                          float(r["value"]), float(r["stderr"]), int(r["n"])) for r in records]
        return cls(rows)

    @classmethod
    def from_json(cls, text: str) -> "MomentReport":
        return cls.from_records(json.loads(text)["rows"])

    @classmethod
    def from_csv(cls, text: str) -> "MomentReport":
        return cls.from_records(csv.DictReader(io.StringIO(text)))

    @classmethod
    def analytic(cls, lags, p_list, moment: Callable) -> "MomentReport":
        """Exact table from ``moment(kind, h1, h2, p)``; standard errors are 0."""
        rows = []
        for p in p_list:
            p = float(p)
            for a in lags.h1:
                for b in lags.h2:
                    rows.append(MomentRow(float(a), float(b), p, "rect", float(moment("rect", a, b, p)), 0.0, 0))
            for a in lags.h1:
                rows.append(MomentRow(float(a), 0.0, p, "dir1", float(moment("dir1", a, 0.0, p)), 0.0, 0))
            for b in lags.h2:
                rows.append(MomentRow(0.0, float(b), p, "dir2", float(moment("dir2", 0.0, b, p)), 0.0, 0))
        return cls(rows)


def _x2_shift(v: np.ndarray, m: int, torus: bool) -> np.ndarray:
    """v(x2 + m dx2) - v(x2) over admissible x2 anchors."""
    if torus:
        return np.roll(v, -m, axis=1) - v
    return v[:, m:] - v[:, :-m]


def _increments(D: np.ndarray, lags, torus: bool):
    """Yield (kind, index, increment array) over admissible anchors of the strip D."""
    nT = D.shape[0]
    for a, m1 in enumerate(lags.m1):
        yield "dir1", (a,), D[m1:] - D[:nT - m1]
    for b, m2 in enumerate(lags.m2):
        yield "dir2", (b,), _x2_shift(D, int(m2), torus)
    for a, m1 in enumerate(lags.m1):
        d1 = D[m1:] - D[:nT - m1]
        for b, m2 in enumerate(lags.m2):
            yield "rect", (a, b), _x2_shift(d1, int(m2), torus)


def _abs_power_mean(x: np.ndarray, p: float) -> float:
    a = np.abs(x)
    if p == 2:
        return float(np.mean(a * a))
    return float(np.mean(a ** p))


def estimate_increment_moments(sampler, lags, p_list, n_samples: int, seed: Optional[int] = None,
                               workers: Optional[int] = None) -> MomentReport:
    """Anchor- and sample-averaged E|box X|^p, E|delta_1 X|^p, E|delta_2 X|^p.

    Anchors run over x1 in [0, T - h1]; on the rectangle tag x2 anchors stop
    before x2 + h2 leaves the interval, on the torus they wrap.
    """
    if seed is not None:
        sampler = sampler.with_seed(seed)
    g = sampler.grid
    if lags.grid != g:
        raise ValidationError("lag grid was built for a different grid")
    p_list = [as_exponent(p) for p in p_list]
    if any(p == INF for p in p_list):
        raise ValidationError("moments need finite exponents")
    n_samples = int(n_samples)
    if n_samples < 1:
        raise ValidationError("need at least one sample")
    i0 = g.n1 // 2
    nT = local_row_count(g, sampler.t_max)
    torus = sampler.x2_domain == "torus"
    if int(lags.m1[0]) >= nT:
        raise ResolutionTooCoarse(f"largest x1 lag ({lags.m1[0]} cells) leaves no anchors in [0, T]")
    if not torus and int(lags.m2[0]) >= g.n2:
        raise ResolutionTooCoarse("largest x2 lag leaves no anchors")

    def one(i):
        D = sampler.draw(i).values[i0:i0 + nT]
        out = {}
        for kind, idx, inc in _increments(D, lags, torus):
            for p in p_list:
                out[(kind, idx, p)] = _abs_power_mean(inc, p)
        return out

    results = _map_ordered(one, list(range(n_samples)), workers)
    keys = list(results[0].keys())
    per_sample = {k: np.array([r[k] for r in results]) for k in keys}
    rows = []
    for (kind, idx, p) in keys:
        s = per_sample[(kind, idx, p)]
        se = float(s.std(ddof=1) / math.sqrt(n_samples)) if n_samples > 1 else 0.0
        h1 = float(lags.h1[idx[0]]) if kind in ("rect", "dir1") else 0.0
        h2 = float(lags.h2[idx[-1]]) if kind in ("rect", "dir2") else 0.0
        rows.append(MomentRow(h1, h2, float(p), kind, float(s.mean()), se, n_samples))
    order = {k: i for i, k in enumerate(KINDS)}
    rows.sort(key=lambda r: (r.p, order[r.kind], r.h1, r.h2))
    return MomentReport(rows, per_sample)


def increment_gaussianity(sampler, kind: str, m1: int, m2: int, n_samples: int,
                          seed: Optional[int] = None) -> dict:
    """Skewness and kurtosis ratio of one increment, with jackknife errors.

    Moments are taken across samples at each anchor and then pooled, so
    anchors with different variances do not fake excess kurtosis:
    kurtosis = sum_a m4(a) / sum_a s4(a), where s4(a) is the unbiased
    estimate of sigma(a)^4. Skewness pools m3(a) against m2(a)^{3/2}.
    """
    if seed is not None:
        sampler = sampler.with_seed(seed)
    if kind not in KINDS:
        raise ValidationError(f"kind must be one of {KINDS}")
    n = int(n_samples)
    if n < 3:
        raise ValidationError("need at least three samples")
    g = sampler.grid
    i0 = g.n1 // 2
    nT = local_row_count(g, sampler.t_max)
    torus = sampler.x2_domain == "torus"
    incs = []
    for i in range(n):
        D = sampler.draw(i).values[i0:i0 + nT]
        if kind == "dir2":
            inc = _x2_shift(D, m2, torus)
        else:
            inc = D[m1:] - D[:nT - m1]
            if kind == "rect":
                inc = _x2_shift(inc, m2, torus)
        incs.append(inc.ravel())
    x = np.array(incs)
    x = x[:, np.any(x != 0, axis=0)]  # anchors pinned to zero carry no information
    x2 = x * x
    powers = (x2, x2 * x, x2 * x2)
    sums = [p.sum(axis=0) for p in powers]

    def stats_from(m2_, m3_, m4_, k):
        s4 = (k * m2_ ** 2 - m4_) / (k - 1)
        return m3_.sum() / (m2_ ** 1.5).sum(), m4_.sum() / s4.sum()

    skew, kurt = stats_from(*(t / n for t in sums), n)
    loo = np.array([stats_from(*((t - p[i]) / (n - 1) for t, p in zip(sums, powers)), n - 1)
                    for i in range(n)])
    se = np.sqrt((n - 1) / n * ((loo - loo.mean(axis=0)) ** 2).sum(axis=0))
    return {
        "skewness": float(skew),
        "skewness_se": float(se[0]),
        "kurtosis_ratio": float(kurt),
        "kurtosis_se": float(se[1]),
        "n": n,
    }


# --- slope fits and the Kolmogorov verdict --------------------------------------------

def _fit(x: np.ndarray, y: np.ndarray) -> dict:
    """Least squares y = c + x @ s with R^2 and 95% t half-widths for s."""
    n, d = x.shape
    A = np.column_stack([np.ones(n), x])
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = y - A @ coef
    sst = float(((y - y.mean()) ** 2).sum())
    sse = float((resid ** 2).sum())
    r2 = 1.0 - sse / sst if sst > 0 else 1.0
    dof = n - d - 1
    if dof > 0:
        cov = sse / dof * np.linalg.pinv(A.T @ A)
        half = stats.t.ppf(0.975, dof) * np.sqrt(np.clip(np.diag(cov)[1:], 0.0, None))
    else:
        half = np.full(d, np.inf)
    return {"slopes": [float(s) for s in coef[1:]], "half_widths": [float(h) for h in half], "r2": float(r2)}


def _fit_kind(report: MomentReport, kind: str, p: float) -> dict:
    rows = report.select(kind, p)
    h1 = sorted({r.h1 for r in rows})
    h2 = sorted({r.h2 for r in rows})
    levels = {"dir1": len(h1), "dir2": len(h2), "rect": min(len(h1), len(h2))}[kind]
    if levels < 4:
        raise InsufficientLagLevels(f"{kind} fit at p={p} needs at least 4 lag levels, got {levels}")
    dims = 2 if kind == "rect" else 1
    v = np.array([r.value for r in rows])
    if np.all(v == 0):
        return {"slopes": [INF] * dims, "half_widths": [0.0] * dims, "r2": 1.0}
    if np.any(v <= 0):
        raise ValidationError(f"{kind} moments mix zero and positive values; no power law")
    if kind == "rect":
        x = np.log([[r.h1, r.h2] for r in rows])
    elif kind == "dir1":
        x = np.log([[r.h1] for r in rows])
    else:
        x = np.log([[r.h2] for r in rows])
    return _fit(x, np.log(v))


def regularity_fit(report: MomentReport, p: Optional[float] = None) -> dict:
    """Log-log slopes per increment kind; ``rect`` gets one slope per axis."""
    p = float(p) if p is not None else report.exponents[0]
    return {kind: _fit_kind(report, kind, p) for kind in KINDS if report.select(kind, p)}


def required_exponent(alpha: float, q: float, p2: float) -> float:
    return (1.0 + alpha * q) * p2 / q


@dataclass(frozen=True)
class KolmogorovVerdict:
    slopes: dict          # rect1, rect2, dir1, dir2
    half_widths: dict
    required: dict
    passed_conditions: dict
    tolerance: float
    admissible_alpha: tuple  # largest alpha per axis the fitted slopes support (tolerance included)

    @property
    def passed(self) -> bool:
        return all(self.passed_conditions.values())

    def to_dict(self) -> dict:
        enc = lambda v: "inf" if v == INF else v  # noqa: E731
        return {
            "passed": self.passed,
            "slopes": {k: enc(v) for k, v in self.slopes.items()},
            "half_widths": {k: enc(v) for k, v in self.half_widths.items()},
            "required": self.required,
            "passed_conditions": self.passed_conditions,
            "tolerance": self.tolerance,
            "admissible_alpha": [enc(a) for a in self.admissible_alpha],
        }


def kolmogorov_check(report: MomentReport, params: BesovParams, tolerance: float = 0.1) -> KolmogorovVerdict:
    """Compare fitted moment slopes at p = p2 with (1 + alpha_i q_i) p2 / q_i."""
    p1, p2 = params.p
    q1, q2 = params.q
    if not (q1 <= q2 <= p1 <= p2) or p2 == INF:
        raise ExponentOrderingViolated(f"need q1 <= q2 <= p1 <= p2 < inf, got q={params.q}, p={params.p}")
    params.check_difference_range()
    if not report.select("rect", p2):
        raise ValidationError(f"report has no moments at p = p2 = {p2}")
    a1, a2 = params.alpha
    rect = _fit_kind(report, "rect", p2)
    d1 = _fit_kind(report, "dir1", p2)
    d2 = _fit_kind(report, "dir2", p2)
    slopes = {"rect1": rect["slopes"][0], "rect2": rect["slopes"][1],
              "dir1": d1["slopes"][0], "dir2": d2["slopes"][0]}
    half = {"rect1": rect["half_widths"][0], "rect2": rect["half_widths"][1],
            "dir1": d1["half_widths"][0], "dir2": d2["half_widths"][0]}
    r1 = required_exponent(a1, q1, p2)
    r2 = required_exponent(a2, q2, p2)
    required = {"rect1": r1, "rect2": r2, "dir1": r1, "dir2": r2}
    ok = {k: bool(slopes[k] >= required[k] - tolerance) for k in slopes}

    def alpha_max(s, q):
        return INF if s == INF else ((s + tolerance) * q / p2 - 1.0) / q

    adm = (min(alpha_max(slopes["rect1"], q1), alpha_max(slopes["dir1"], q1)),
           min(alpha_max(slopes["rect2"], q2), alpha_max(slopes["dir2"], q2)))
    return KolmogorovVerdict(slopes, half, required, ok, float(tolerance), adm)
