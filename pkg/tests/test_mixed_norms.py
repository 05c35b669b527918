import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mixbesov import (
    INF,
    Field,
    TimeDomain,
    conjugate,
    convolve,
    make_grid,
    mixed_lp_norm,
    mixed_lp_norm_local,
    sample_function,
)
from mixbesov.errors import DomainExceedsWindow, ExponentOutOfRange, GridMismatch, ValidationError
from mixbesov.mixed_norms import as_exponent, exponent_pair

P_SET = [(1, 1), (2, 2), (1, INF), (INF, 2), (2, 4)]


def indicator01(x1, x2):
    return ((x1 >= 0) & (x1 < 1)).astype(float) + 0 * x2


class TestExponents:
    def test_parsing(self):
        assert as_exponent("inf") == INF
        assert as_exponent(2) == 2.0
        assert exponent_pair("2,inf") == (2.0, INF)

    @pytest.mark.parametrize("bad", [0.5, -1, "abc", math.nan])
    def test_rejects(self, bad):
        with pytest.raises((ExponentOutOfRange, ValidationError)):
            as_exponent(bad)

    def test_conjugate(self):
        assert conjugate(1) == INF and conjugate(INF) == 1.0 and conjugate(4) == pytest.approx(4 / 3)


class TestGlobalNorm:
    def test_indicator_l2(self):
        g = make_grid(256, 64, 4.0)
        assert mixed_lp_norm(sample_function(g, indicator01), (2, 2)) == pytest.approx(math.sqrt(2 * math.pi), rel=1e-12)

    def test_indicator_inf_1(self):
        g = make_grid(256, 64, 4.0)
        assert mixed_lp_norm(sample_function(g, indicator01), (INF, 1)) == pytest.approx(2 * math.pi, rel=1e-12)

    @pytest.mark.parametrize("p", [(1, 2), (2, 4), (INF, 1)])
    def test_tensor_factorises(self, p):
        g = make_grid(128, 64, 6.0)
        x1 = g.x1
        x2 = g.x2
        a = np.exp(-x1 ** 2) * (1 + x1)
        b = 2 + np.sin(x2) + 0.3 * np.cos(3 * x2)
        f = Field(g, np.outer(a, b))
        na = mixed_lp_norm(Field(g, np.outer(a, np.ones(g.n2))), (p[0], 1)) / (2 * math.pi)
        nb = mixed_lp_norm(Field(g, np.outer(np.ones(g.n1), b)), (INF, p[1]))
        assert mixed_lp_norm(f, p) == pytest.approx(na * nb, rel=1e-10)

    def test_zero(self):
        g = make_grid(16, 16, 1.0)
        assert mixed_lp_norm(Field(g, np.zeros(g.shape)), (2, 2)) == 0.0

    def test_huge_values_do_not_overflow(self):
        g = make_grid(16, 16, 1.0)
        f = Field(g, np.full(g.shape, 1e300))
        assert math.isfinite(mixed_lp_norm(f, (4, 4)))


class TestLocalNorm:
    def test_constant_l1(self):
        g = make_grid(64, 32, 2.0)
        f = Field(g, np.ones(g.shape))
        assert mixed_lp_norm_local(f, (1, 1), TimeDomain(1.0)) == pytest.approx(2 * math.pi, rel=1e-12)

    def test_supported_field_matches_global(self):
        g = make_grid(128, 32, 2.0)
        f = sample_function(g, lambda x1, x2: np.where((x1 >= 0) & (x1 < 2), np.sin(x1 * 3) ** 2, 0.0) * (1 + np.cos(x2)))
        for p in P_SET:
            assert mixed_lp_norm_local(f, p, TimeDomain(2.0)) == pytest.approx(mixed_lp_norm(f, p), rel=1e-12)

    def test_ramp(self):
        # left Riemann sum of x^2 on [0,1] is 1/3 - dx/2 + dx^2/6
        g = make_grid(1024, 16, 2.0)
        f = sample_function(g, lambda x1, x2: x1 + 0 * x2)
        value = mixed_lp_norm_local(f, (2, 2), TimeDomain(1.0))
        assert value == pytest.approx(math.sqrt(2 * math.pi / 3), rel=2 * g.dx1)
        assert value == pytest.approx(1.44720, abs=5e-3)

    def test_monotone_in_T(self, rng):
        g = make_grid(64, 16, 4.0)
        f = Field(g, rng.standard_normal(g.shape))
        vals = [mixed_lp_norm_local(f, (2, 3), TimeDomain(t)) for t in (0.5, 1.0, 2.0, 3.5)]
        assert vals == sorted(vals)

    def test_domain_too_large(self):
        g = make_grid(16, 16, 1.0)
        with pytest.raises(DomainExceedsWindow):
            mixed_lp_norm_local(Field(g, np.ones(g.shape)), (2, 2), TimeDomain(1.5))

    def test_bad_domain(self):
        with pytest.raises(ValidationError):
            TimeDomain(0.0)


class TestInequalities:
    @settings(max_examples=30, deadline=None)
    @given(seed=st.integers(0, 2 ** 32 - 1), p=st.sampled_from(P_SET))
    def test_triangle(self, seed, p):
        r = np.random.default_rng(seed)
        g = make_grid(16, 8, 2.0)
        f = Field(g, r.standard_normal(g.shape))
        h = Field(g, r.standard_normal(g.shape) * r.exponential())
        lhs = mixed_lp_norm(Field(g, f.values + h.values), p)
        assert lhs <= mixed_lp_norm(f, p) + mixed_lp_norm(h, p) + 1e-12

    @settings(max_examples=30, deadline=None)
    @given(seed=st.integers(0, 2 ** 32 - 1), p=st.sampled_from(P_SET))
    def test_holder(self, seed, p):
        r = np.random.default_rng(seed)
        g = make_grid(16, 8, 2.0)
        f = Field(g, r.standard_normal(g.shape))
        h = Field(g, r.standard_normal(g.shape))
        pc = tuple(conjugate(v) for v in p)
        lhs = mixed_lp_norm(Field(g, f.values * h.values), (1, 1))
        assert lhs <= mixed_lp_norm(f, p) * mixed_lp_norm(h, pc) + 1e-12

    @settings(max_examples=30, deadline=None)
    @given(seed=st.integers(0, 2 ** 32 - 1), c=st.floats(-1e3, 1e3))
    def test_homogeneity(self, seed, c):
        r = np.random.default_rng(seed)
        g = make_grid(16, 8, 2.0)
        f = Field(g, r.standard_normal(g.shape))
        scaled = mixed_lp_norm(Field(g, c * f.values), (2, 4))
        assert scaled == pytest.approx(abs(c) * mixed_lp_norm(f, (2, 4)), rel=1e-12, abs=1e-300)


def _gauss(g, var):
    return np.exp(-g.x1 ** 2 / (2 * var)) / math.sqrt(2 * math.pi * var)


class TestConvolution:
    def test_delta_is_identity(self):
        g = make_grid(64, 32, 8.0)
        f = sample_function(g, lambda x1, x2: np.exp(-x1 ** 2) * (1 + 0.5 * np.cos(x2)))
        d = np.zeros(g.shape)
        d[g.n1 // 2, g.n2 // 2] = 1.0 / (g.dx1 * g.dx2)
        out = convolve(f, Field(g, d))
        assert np.linalg.norm(out.values - f.values) <= 1e-10 * np.linalg.norm(f.values)

    def test_gaussians(self):
        g = make_grid(512, 32, 16.0)
        bump2 = 1 + np.cos(g.x2)
        f = Field(g, np.outer(_gauss(g, 0.5), np.ones(g.n2)))
        h = Field(g, np.outer(_gauss(g, 1.5), bump2))
        out = convolve(f, h)
        # the x2 factor of f integrates to 2 pi against h's periodic bump
        expected = np.outer(_gauss(g, 2.0), 2 * math.pi * np.ones(g.n2))
        err = math.sqrt(np.sum((out.values - expected) ** 2) * g.dx1 * g.dx2)
        assert err <= 1e-6

    @pytest.mark.filterwarnings("ignore::mixbesov.errors.SupportMarginViolated")
    def test_direct_summation_small_grid(self, rng):
        g = make_grid(16, 8, 4.0)
        a = np.exp(-g.x1 ** 2)[:, None] * rng.standard_normal((1, g.n2))
        b = np.exp(-2 * g.x1 ** 2)[:, None] * rng.standard_normal((1, g.n2))
        out = convolve(Field(g, a), Field(g, b)).values
        # cyclic sum over the grid with the origin cell at (n1//2, n2//2)
        direct = np.zeros(g.shape)
        for i in range(g.n1):
            for j in range(g.n2):
                s = 0.0
                for k in range(g.n1):
                    for m in range(g.n2):
                        s += a[(i - k + g.n1 // 2) % g.n1, (j - m + g.n2 // 2) % g.n2] * b[k, m]
                direct[i, j] = s * g.dx1 * g.dx2
        assert np.allclose(out, direct, atol=1e-12)

    def test_young_random_pairs(self):
        r = np.random.default_rng(77)
        g = make_grid(64, 16, 8.0)
        env = np.exp(-g.x1 ** 2 / 2)[:, None]
        for _ in range(50):
            p = (r.choice([1.0, 1.5, 2.0, 4.0]), r.choice([1.0, 2.0, 3.0]))
            pc = tuple(conjugate(v) for v in p)
            f = Field(g, env * r.standard_normal(g.shape))
            h = Field(g, env * r.standard_normal(g.shape))
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                out = convolve(f, h)
            # 1 + 1/r = 1/p + 1/p' = 1 gives r = inf
            assert mixed_lp_norm(out, (INF, INF)) <= mixed_lp_norm(f, p) * mixed_lp_norm(h, pc) * (1 + 1e-12)

    def test_grid_mismatch(self):
        a = Field(make_grid(8, 8, 1.0), np.zeros((8, 8)))
        b = Field(make_grid(8, 8, 2.0), np.zeros((8, 8)))
        with pytest.raises(GridMismatch):
            convolve(a, b)
