"""Test corpus, the norm-equivalence experiment and the inequality suites.

Suites report the empirical constant lhs / rhs of every instance, never a
bare pass flag, so drift of constants stays visible between runs.
"""

from __future__ import annotations

import math
import time
import warnings
from dataclasses import dataclass, field as dc_field
from typing import Optional

import numpy as np

from .difference_norms import (
    LagGrid,
    WindowSpec,
    besov_norm_diff,
    local_besov_norm_diff2,
    make_lag_grid,
    multiply_time_window,
)
from .errors import ValidationError
from .grid import (
    Field,
    GridSpec,
    SpectralField,
    inverse_transform,
    make_grid,
    pad_window,
    restrict_field,
    sample_function,
    support_margin_ok,
)
from .littlewood_paley import (
    BesovParams,
    _glue,
    besov_norm_lp,
    block_kernel,
    build_partition,
    decompose,
    spectral_derivative,
)
from .mixed_norms import INF, conjugate, convolve, mixed_lp_norm
from .random_fields import CovSpec, GaussianSampler, SheConfig, simulate_she

__all__ = [
    "CorpusMember",
    "Corpus",
    "default_corpus",
    "she_spacetime_corpus",
    "EquivalenceReport",
    "run_equivalence_experiment",
    "SuiteReport",
    "SUITE_KINDS",
    "run_inequality_suite",
]

CORPUS_VERSION = 1
SUITE_KINDS = ("bernstein", "embedding", "young_conv", "lifting", "multiplier", "mixed_lp")


# --- corpus ------------------------------------------------------------------------

@dataclass(frozen=True)
class CorpusMember:
    name: str
    field: Field
    waiver: bool = False
    provenance: dict = dc_field(default_factory=dict)


@dataclass(frozen=True)
class Corpus:
    name: str
    members: tuple
    version: int = CORPUS_VERSION

    def __post_init__(self):
        if not self.members:
            raise ValidationError("corpus must not be empty")
        for m in self.members:
            if not m.waiver and not support_margin_ok(m.field):
                raise ValidationError(f"corpus member {m.name!r} violates the support margin without a waiver")

    def __iter__(self):
        return iter(self.members)

    def __len__(self) -> int:
        return len(self.members)

    @property
    def names(self) -> list:
        return [m.name for m in self.members]

    def restricted(self, grid: GridSpec) -> "Corpus":
        return Corpus(self.name, tuple(CorpusMember(m.name, restrict_field(m.field, grid), m.waiver,
                                                    dict(m.provenance, restricted_to=list(grid.shape)))
                                       for m in self.members), self.version)

    def subset(self, names) -> "Corpus":
        keep = tuple(m for m in self.members if m.name in set(names))
        return Corpus(self.name, keep, self.version)


def _window(x1, inner: float = 1.0, outer: float = 2.2) -> np.ndarray:
    # 1 on |x1| <= inner, 0 on |x1| >= outer
    return _glue((outer - np.abs(x1)) / (outer - inner))


def _bump(s: np.ndarray, r: float) -> np.ndarray:
    out = np.zeros_like(s)
    inside = np.abs(s) < r
    out[inside] = np.exp(-1.0 / (1.0 - (s[inside] / r) ** 2))
    return out


def _random_band_limited(grid: GridSpec, rng: np.random.Generator, band: int = 6) -> Field:
    X1, X2 = grid.mesh()
    v = np.zeros(grid.shape)
    for a in range(band + 1):
        for b in range(-band, band + 1):
            c, phase = rng.standard_normal(), rng.uniform(0, 2 * math.pi)
            v += c * np.cos(a * X1 + b * X2 + phase)
    return Field(grid, v * _window(X1) / math.sqrt((band + 1) * (2 * band + 1)))


def default_corpus(n: int = 512, L: float = math.pi, seed: int = 20240) -> Corpus:
    """The fixed ten-member corpus, built at resolution n x n.

    Random members are drawn from fixed seeds. Use ``Corpus.restricted`` to
    obtain the same functions on a coarser grid.
    """
    g = make_grid(n, n, L)
    X1, X2 = g.mesh()
    W = _window(X1)
    part = build_partition()
    members = [
        CorpusMember("constant", Field(g, np.ones(g.shape)), True, {"kind": "constant", "value": 1.0}),
        CorpusMember("tensor_gaussian", Field(g, np.exp(-5 * X1 ** 2) * (1 + np.cos(X2)) / 2),
                     False, {"kind": "gaussian x periodic bump"}),
        CorpusMember("compact_bump", Field(g, _bump(X1 - 0.3, 1.5) * np.exp(2 * np.cos(X2 - 1.0)) / math.e ** 2),
                     False, {"kind": "compact bump x von Mises bump", "shift": 0.3}),
        CorpusMember("harmonic_real", Field(g, W * np.cos(6 * X1) * np.cos(3 * X2)),
                     False, {"kind": "windowed harmonic", "frequency": [6, 3]}),
        CorpusMember("harmonic_complex", Field(g, W * np.exp(1j * (5 * X1 + 2 * X2))),
                     False, {"kind": "windowed complex harmonic", "frequency": [5, 2]}),
    ]
    kern = block_kernel(g, part, (2, 1))
    members.append(CorpusMember("single_block", kern, not support_margin_ok(kern),
                                {"kind": "single block kernel", "block": [2, 1]}))
    rng = np.random.default_rng(seed)
    for i in range(2):
        members.append(CorpusMember(f"random_band_{i}", _random_band_limited(g, rng), False,
                                    {"kind": "random band-limited, windowed", "seed": seed, "index": i}))
    # Brownian sheet in x1 times periodic Brownian bridge in x2, smoothly cut off before T
    T = 2.0
    bridge = lambda s, t: np.minimum(s, t) - s * t / (2 * math.pi)  # noqa: E731
    sheet = GaussianSampler(CovSpec(np.minimum, bridge, "rectangle", T), g, seed).draw(0)
    cut = WindowSpec(T, 0.5)
    members.append(CorpusMember("brownian_sheet", multiply_time_window(sheet, cut), False,
                                {"kind": "Brownian sheet x Brownian bridge", "t_max": T, "seed": seed}))
    cfg = SheConfig(2.0, min(128, n // 2), 64, n, seed)
    u = simulate_she(cfg).values
    snap = u[u.shape[0] // 2 + cfg.n_time - 1]
    members.append(CorpusMember("she_snapshot", Field(g, W * snap[None, :]), False,
                                {"kind": "heat equation snapshot x window", "t": cfg.t_max - cfg.dt,
                                 "modes": cfg.n_modes, "seed": seed}))
    return Corpus("default", tuple(members))


def she_spacetime_corpus(n_samples: int = 3, t_max: float = 2.0, n_time: int = 128,
                         n_space: int = 128, n_modes: int = 64, seed: int = 11) -> Corpus:
    """Space-time heat-equation paths on [0, T], zero-padded so [0, T] sits inside the margin."""
    cfg = SheConfig(t_max, n_modes, n_time, n_space, seed)
    members = tuple(
        CorpusMember(f"she_path_{i}", pad_window(simulate_she(cfg, i), 2), False,
                     {"kind": "heat equation path", "t_max": t_max, "modes": n_modes, "seed": seed, "index": i})
        for i in range(n_samples)
    )
    return Corpus("she_spacetime", members)


# --- equivalence experiment ---------------------------------------------------------

@dataclass
class EquivalenceReport:
    params: dict
    rows: list
    band: tuple
    constant: float
    max_delta: float
    runtime: float
    resolutions: tuple

    def to_dict(self) -> dict:
        return {
            "params": self.params,
            "resolutions": [list(r) for r in self.resolutions],
            "rows": self.rows,
            "band": list(self.band),
            "constant": self.constant,
            "max_stability_delta": self.max_delta,
            "runtime_seconds": self.runtime,
        }


def _three_norms(field: Field, params: BesovParams, lags: LagGrid) -> dict:
    lp = besov_norm_lp(decompose(field, build_partition()), params)
    plain = besov_norm_diff(field, params, lags, "plain")
    sup = besov_norm_diff(field, params, lags, "sup")
    return {"besov_lp": lp, "diff_plain": plain, "diff_sup": sup,
            "r2": plain / lp if lp > 0 else math.nan,
            "r12": plain / sup if sup > 0 else math.nan}


def run_equivalence_experiment(corpus: Corpus, params: BesovParams, lags: Optional[LagGrid] = None) -> EquivalenceReport:
    """All three norms at the corpus resolution and at half of it.

    ``lags`` belongs to the coarse grid; the fine grid uses one more octave,
    which keeps the largest lag fixed. Ratios compared across resolutions
    give the stability deltas.
    """
    params.check_difference_range()
    start = time.perf_counter()
    fine = corpus.members[0].field.grid
    coarse = make_grid(fine.n1 // 2, fine.n2 // 2, fine.L)
    if lags is None:
        lags = make_lag_grid(coarse, int(round(math.log2(coarse.n1))) - 2)
    if lags.grid != coarse:
        raise ValidationError("lag grid must belong to the coarse grid (half the corpus resolution)")
    fine_lags = make_lag_grid(fine, lags.k_max + 1, lags.base1, lags.base2)
    rows = []
    ratios = []
    deltas = []
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        for m in corpus:
            if m.field.grid != fine:
                raise ValidationError("corpus members must share one grid")
            c = _three_norms(restrict_field(m.field, coarse), params, lags)
            f = _three_norms(m.field, params, fine_lags)
            d2 = abs(f["r2"] / c["r2"] - 1.0)
            d12 = abs(f["r12"] / c["r12"] - 1.0)
            rows.append({"name": m.name, "coarse": c, "fine": f, "delta_r2": d2, "delta_r12": d12})
            ratios += [c["r2"], c["r12"], f["r2"], f["r12"]]
            deltas += [d2, d12]
    ratios = np.array(ratios)
    band = (float(ratios.min()), float(ratios.max()))
    C = float(max(band[1], 1.0 / band[0]))
    return EquivalenceReport(params.to_dict(), rows, band, C, float(max(deltas)),
                             time.perf_counter() - start, (coarse.shape, fine.shape))


# --- inequality suites -------------------------------------------------------------

@dataclass
class SuiteReport:
    kind: str
    instances: list
    declared_factor: Optional[float]
    stability: Optional[float]
    violations: int
    passed: bool
    notes: list = dc_field(default_factory=list)

    @property
    def max_constant(self) -> float:
        vals = [i["constant"] for i in self.instances if math.isfinite(i["constant"])]
        return max(vals) if vals else math.nan

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "instances": self.instances,
            "declared_factor": self.declared_factor,
            "stability": self.stability,
            "violations": self.violations,
            "max_constant": self.max_constant,
            "passed": self.passed,
            "notes": self.notes,
        }


def _instance(label: str, lhs: float, rhs: float, **extra) -> dict:
    if rhs > 0:
        c = lhs / rhs
    else:
        c = 0.0 if lhs == 0 else math.inf
    return {"label": label, "lhs": float(lhs), "rhs": float(rhs), "constant": float(c), **extra}


def _finite(instances) -> bool:
    return all(math.isfinite(i["constant"]) for i in instances)


def _family_spread(instances, key) -> float:
    """Largest max/min ratio of constants within families sharing ``key``."""
    fam: dict = {}
    for i in instances:
        fam.setdefault(key(i), []).append(i["constant"])
    worst = 1.0
    for vals in fam.values():
        vals = np.array(vals)
        if np.all(vals > 0):
            worst = max(worst, float(vals.max() / vals.min()))
        else:
            worst = math.inf
    return worst


_LP_SET = [(1.0, 1.0), (2.0, 2.0), (1.0, INF), (INF, 2.0), (2.0, 4.0)]
_YOUNG_SET = [((1.0, 1.0), (1.0, 1.0)), ((1.0, 2.0), (2.0, 1.0)), ((2.0, 2.0), (1.0, 1.0)),
              ((1.5, 1.5), (1.5, 1.5)), ((2.0, 2.0), (2.0, 2.0)), ((1.0, 4.0), (INF, 1.0))]


def _young_target(p: float, pp: float) -> float:
    s = 1.0 / p + 1.0 / pp - 1.0
    return INF if s <= 0 else 1.0 / s


def _suite_mixed_lp(n_pairs: int = 100, seed: int = 7, slack: float = 1e-12) -> SuiteReport:
    g = make_grid(32, 16, 4.0)
    rng = np.random.default_rng(seed)
    inst = []
    violations = 0
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        for n in range(n_pairs):
            scale = np.exp(rng.uniform(-3, 3, size=2))
            f = Field(g, scale[0] * rng.standard_normal(g.shape))
            h = Field(g, scale[1] * rng.standard_normal(g.shape))
            for p in _LP_SET:
                inst.append(_instance("triangle", mixed_lp_norm(f + h, p), mixed_lp_norm(f, p) + mixed_lp_norm(h, p),
                                      pair=n, p=list(p)))
                pc = (conjugate(p[0]), conjugate(p[1]))
                prod = Field(g, f.values * h.values)
                inst.append(_instance("holder", mixed_lp_norm(prod, (1, 1)),
                                      mixed_lp_norm(f, p) * mixed_lp_norm(h, pc), pair=n, p=list(p)))
            conv = convolve(f, h, "mixed_periodic")
            for p, pp in _YOUNG_SET:
                r = (_young_target(p[0], pp[0]), _young_target(p[1], pp[1]))
                inst.append(_instance("young", mixed_lp_norm(conv, r),
                                      mixed_lp_norm(f, p) * mixed_lp_norm(h, pp), pair=n, p=list(p), p_conj=list(pp)))
    for i in inst:
        if i["lhs"] > i["rhs"] * (1 + slack):
            violations += 1
    return SuiteReport("mixed_lp", _jsonable(inst), None, None, violations, violations == 0)


def _bernstein_field(grid: GridSpec, part, scale: int, axis: int, form: str) -> Field:
    """Field with spectrum in 2^scale times a ball (form 'ball') or annulus on one axis."""
    shape1 = part.psi(np.ldexp(grid.xi1, -scale)) if form == "ball" else part.rho_j(scale, grid.xi1)
    shape2 = part.psi(np.ldexp(grid.xi2, -scale)) if form == "ball" else part.rho_j(scale, grid.xi2)
    m1 = shape1 if axis == 1 else part.chi(grid.xi1)
    m2 = shape2 if axis == 2 else part.chi(grid.xi2)
    return inverse_transform(SpectralField(grid, np.outer(m1, m2)), real=True)


def _suite_bernstein(scales=range(1, 6), p_set=((1.0, 1.0), (2.0, 2.0), (INF, 2.0)), factor: float = 1.5):
    # Nyquist 128 on both axes covers the top annulus 2^5 * 8/3
    g = make_grid(1024, 256, 4 * math.pi)
    part = build_partition()
    inst = []
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        for axis in (1, 2):
            for s in scales:
                ball = _bernstein_field(g, part, s, axis, "ball")
                ann = _bernstein_field(g, part, s, axis, "annulus")
                d_ball = spectral_derivative(ball, axis)
                d1 = spectral_derivative(ann, axis)
                d2 = spectral_derivative(ann, axis, 2)
                for p in p_set:
                    tag = dict(axis=axis, scale=s, p=list(p))
                    inst.append(_instance("ball_derivative", mixed_lp_norm(d_ball, p),
                                          2.0 ** s * mixed_lp_norm(ball, p), **tag))
                    inst.append(_instance("annulus_inverse_N1", mixed_lp_norm(ann, p),
                                          2.0 ** (-s) * mixed_lp_norm(d1, p), **tag))
                    inst.append(_instance("annulus_inverse_N2", mixed_lp_norm(ann, p),
                                          2.0 ** (-2 * s) * mixed_lp_norm(d2, p), **tag))
    inst = _jsonable(inst)
    spread = _family_spread(inst, lambda i: (i["label"], i["axis"], tuple(i["p"])))
    ok = _finite(inst) and spread <= factor
    return SuiteReport("bernstein", inst, factor, spread, 0, ok,
                       ["stability is max/min of the constant over scales, per (form, axis, p) family"])


def _suite_embedding(corpus: Corpus, params: BesovParams) -> SuiteReport:
    a1, a2 = params.alpha
    p1, p2 = params.p
    q1, q2 = params.q
    inst = []
    viol = 0
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        for m in corpus:
            dec = decompose(m.field, build_partition())
            lp = mixed_lp_norm(m.field, params.p)
            block_sum = besov_norm_lp(dec, BesovParams((0, 0), params.p, (1, 1)))
            i = _instance("(ii) block sum", lp, block_sum, member=m.name)
            inst.append(i)
            if i["lhs"] > i["rhs"] * (1 + 1e-12):
                viol += 1
            inst.append(_instance("(ii) besov", lp, besov_norm_lp(dec, params), member=m.name))
            # (i): smaller smoothness, larger summability
            b = BesovParams((a1 - 0.2, a2), params.p, (INF, q2))
            inst.append(_instance("(i) axis 1", besov_norm_lp(dec, b),
                                  besov_norm_lp(dec, BesovParams(params.alpha, params.p, (q1, q2))), member=m.name))
            b = BesovParams((a1, a2 - 0.2), params.p, (q1, INF))
            inst.append(_instance("(i) axis 2", besov_norm_lp(dec, b), besov_norm_lp(dec, params), member=m.name))
            # (iii), (iv): trade integrability for smoothness with p3 = 1
            if p1 > 1:
                big = BesovParams((a1 + 1 - 1 / p1, a2), (1, p2), params.q)
                inst.append(_instance("(iii)", besov_norm_lp(dec, params), besov_norm_lp(dec, big), member=m.name))
            if p2 > 1:
                big = BesovParams((a1, a2 + 1 - 1 / p2), (p1, 1), params.q)
                inst.append(_instance("(iv)", besov_norm_lp(dec, params), besov_norm_lp(dec, big), member=m.name))
    inst = _jsonable(inst)
    return SuiteReport("embedding", inst, None, None, viol, viol == 0 and _finite(inst),
                       ["(ii) against the unweighted block sum must hold with constant <= 1"])


def _gauss_bump(g: GridSpec, width: float, conc: float, center: float = 0.0) -> Field:
    X1, X2 = g.mesh()
    return Field(g, np.exp(-((X1 - center) / width) ** 2) * np.exp(conc * (np.cos(X2) - 1.0)))


def _suite_young_conv(params: BesovParams) -> SuiteReport:
    g = make_grid(256, 128, 8.0)
    beta = (0.2, 0.2)
    fs = [_gauss_bump(g, w, c) for w, c in ((0.5, 1.0), (1.0, 4.0), (0.3, 2.0))]
    hs = [_gauss_bump(g, w, c) for w, c in ((0.7, 2.0), (0.4, 8.0))]
    combos = [(1.0, 1.0, 2.0, 2.0), (1.0, 2.0, 2.0, 2.0), (2.0, 2.0, 2.0, 2.0), (1.5, 1.5, 2.0, 1.0)]
    inst = []
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        for pf, ph, qf, qh in combos:
            p = _young_target(pf, ph)
            q = _young_target(qf, qh)
            out = BesovParams((params.alpha[0] + beta[0], params.alpha[1] + beta[1]), (p, p), (q, q))
            pa = BesovParams(params.alpha, (pf, pf), (qf, qf))
            pb = BesovParams(beta, (ph, ph), (qh, qh))
            for i, f in enumerate(fs):
                for j, h in enumerate(hs):
                    lhs = besov_norm_lp(convolve(f, h, "mixed_periodic"), out)
                    rhs = besov_norm_lp(f, pa) * besov_norm_lp(h, pb)
                    inst.append(_instance("young_besov", lhs, rhs, f=i, g=j, p=[pf, ph], q=[qf, qh]))
    inst = _jsonable(inst)
    return SuiteReport("young_conv", inst, None, None, 0, _finite(inst))


def _suite_lifting(corpus: Corpus, params: BesovParams) -> SuiteReport:
    a1, a2 = params.alpha
    inst = []
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        for m in corpus:
            base = besov_norm_lp(m.field, params)
            for axis in (1, 2):
                d = spectral_derivative(m.field, axis)
                shifted = BesovParams((a1 - 1, a2) if axis == 1 else (a1, a2 - 1), params.p, params.q)
                inst.append(_instance(f"derivative axis {axis}", besov_norm_lp(d, shifted), base,
                                      member=m.name, axis=axis))
    inst = _jsonable(inst)
    return SuiteReport("lifting", inst, None, None, 0, _finite(inst))


def _suite_multiplier(corpus: Corpus, params: BesovParams, t_frac: float = 0.6,
                      widths=(0.25, 0.125), k_max: Optional[int] = None, factor: float = 1.5) -> SuiteReport:
    """(phi (x) 1) f in the global plain norm against ||phi||_C1 times the local norm of f.

    Windows share T and halve their transition width; the stability figure is
    the largest growth of a member's constant between consecutive widths.
    """
    inst = []
    growth = 1.0
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        for m in corpus:
            g = m.field.grid
            T = float(m.provenance.get("t_max", t_frac * g.L))
            km = k_max if k_max is not None else max(3, int(math.log2(min(g.n1, g.n2))) - 3)
            lags = make_lag_grid(g, km)
            local = local_besov_norm_diff2(m.field, params, T, lags)
            prev = None
            for w in widths:
                win = WindowSpec(T, w * T)
                lhs = besov_norm_diff(multiply_time_window(m.field, win), params, lags, "plain")
                inst.append(_instance("multiplier", lhs, win.c1_norm * local, member=m.name, t_max=T,
                                      transition_width=w * T, c1_norm=win.c1_norm))
                c = inst[-1]["constant"]
                if prev is not None and prev > 0:
                    growth = max(growth, c / prev)
                prev = c
    inst = _jsonable(inst)
    return SuiteReport("multiplier", inst, factor, growth, 0, _finite(inst) and growth <= factor,
                       ["stability is the largest constant growth when the transition width halves"])


def _jsonable(instances: list) -> list:
    def enc(v):
        if isinstance(v, float) and math.isinf(v):
            return "inf"
        if isinstance(v, list):
            return [enc(x) for x in v]
        return v
    return [{k: (v if k == "constant" else enc(v)) for k, v in i.items()} for i in instances]


def run_inequality_suite(kind: str, corpus: Optional[Corpus] = None, params: Optional[BesovParams] = None,
                         **options) -> SuiteReport:
    if kind not in SUITE_KINDS:
        raise ValidationError(f"unknown suite {kind!r}; choose from {', '.join(SUITE_KINDS)}")
    if params is None:
        params = BesovParams((0.3, 0.4), (2, 2), (2, 2))
    if kind == "mixed_lp":
        return _suite_mixed_lp(**options)
    if kind == "bernstein":
        return _suite_bernstein(**options)
    if kind == "young_conv":
        return _suite_young_conv(params)
    if corpus is None:
        corpus = default_corpus(256)
    if len(corpus) == 0:
        raise ValidationError("corpus must not be empty")
    if kind == "embedding":
        return _suite_embedding(corpus, params)
    if kind == "lifting":
        return _suite_lifting(corpus, params)
    return _suite_multiplier(corpus, params, **options)
