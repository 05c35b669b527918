import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mixbesov import (
    ALL,
    BesovParams,
    Field,
    besov_norm_lp,
    build_partition,
    decompose,
    lp_block,
    make_grid,
    mixed_lp_norm,
    sample_function,
    spectral_derivative,
)
from mixbesov.errors import TruncatedBlock, ValidationError
from mixbesov.littlewood_paley import lq_norm

PART = build_partition()


def band_limited(g, rng, k1=20, k2=12):
    """Random real field with spectrum inside |xi1| <= k1 dxi, |xi2| <= k2 (x1 envelope free)."""
    c = np.zeros(g.shape, dtype=complex)
    idx1 = np.r_[0:k1 + 1, g.n1 - k1:g.n1]
    idx2 = np.r_[0:k2 + 1, g.n2 - k2:g.n2]
    c[np.ix_(idx1, idx2)] = rng.standard_normal((idx1.size, idx2.size)) + 1j * rng.standard_normal((idx1.size, idx2.size))
    return Field(g, np.fft.ifft2(c).real * g.n1 * g.n2)


class TestPartition:
    def test_values(self):
        assert PART.chi(0.0) == 1.0
        for j in range(8):
            assert PART.rho_j(j, 0.0) == 0.0
        assert PART.rho(2.0) == 1.0
        assert PART.rho(1.0) == 0.0
        assert PART.rho(4.0) == 0.0

    def test_sum_at_five(self):
        total = PART.chi(5.0) + sum(PART.rho(5.0 / 2 ** j) for j in range(7))
        assert abs(total - 1.0) <= 1e-12

    @settings(max_examples=200, deadline=None)
    @given(xi=st.floats(-1e4, 1e4))
    def test_unity(self, xi):
        total = sum(PART.rho_j(j, xi) for j in range(-1, 16))
        assert abs(total - 1.0) <= 1e-12

    @settings(max_examples=100, deadline=None)
    @given(xi=st.floats(0, 1e3), j=st.integers(0, 8))
    def test_support_and_range(self, xi, j):
        v = float(PART.rho_j(j, xi))
        assert 0.0 <= v <= 1.0
        if xi <= 2 ** j or xi >= (8 / 3) * 2 ** j:
            assert v == 0.0

    def test_annulus_support(self):
        xs = np.linspace(0, 40, 40001)
        for j in range(0, 3):
            nz = xs[PART.rho_j(j, xs) > 0]
            assert nz.min() > 2 ** j - 1e-9 and nz.max() < (8 / 3) * 2 ** j + 1e-9

    def test_even(self):
        xs = np.linspace(-30, 30, 601)
        assert np.array_equal(PART.rho_j(2, xs), PART.rho_j(2, -xs))

    def test_bad_index(self):
        with pytest.raises(ValidationError):
            PART.rho_j(-2, 1.0)


class TestBlocks:
    def test_direction_two_block(self):
        g = make_grid(256, 64, 8.0)
        f = sample_function(g, lambda x1, x2: np.exp(-x1 ** 2) * np.cos(4 * x2))
        b1 = lp_block(f, PART, (ALL, 1))
        err = math.sqrt(np.sum((b1.values - f.values) ** 2) * g.dx1 * g.dx2)
        assert err <= 1e-10
        for k in (-1, 0, 2, 3):
            assert np.max(np.abs(lp_block(f, PART, (ALL, k)).values)) <= 1e-10

    def test_constant_low_block(self):
        g = make_grid(32, 32, math.pi)
        f = Field(g, np.full(g.shape, 3.0))
        assert np.allclose(lp_block(f, PART, (-1, -1)).values, 3.0, atol=1e-13)

    def test_truncation_warning(self):
        g = make_grid(16, 16, math.pi)
        with pytest.warns(TruncatedBlock):
            lp_block(Field(g, np.ones(g.shape)), PART, (3, -1))

    def test_reconstruction(self, rng):
        g = make_grid(128, 64, 6.0)
        for _ in range(5):
            f = band_limited(g, rng)
            back = decompose(f, PART).reconstruct()
            assert np.linalg.norm(back.values - f.values) <= 1e-10 * np.linalg.norm(f.values)

    def test_constant_decomposes_to_one_block(self):
        g = make_grid(64, 64, math.pi)
        d = decompose(Field(g, np.ones(g.shape)), PART)
        norms = d.block_norms((2, 2))
        assert norms[0, 0] > 0
        rest = norms.copy()
        rest[0, 0] = 0
        assert rest.max() < 1e-12

    def test_harmonic_block(self):
        # xi = (8, 2) lies where rho(8/4) = rho(2/1) = 1, which is block (2, 0)
        g = make_grid(64, 64, math.pi)
        f = sample_function(g, lambda x1, x2: np.exp(1j * (8 * x1 + 2 * x2)))
        norms = decompose(f, PART).block_norms((2, 2))
        j, k = np.unravel_index(np.argmax(norms), norms.shape)
        assert (j - 1, k - 1) == (2, 0)
        assert norms[j, k] == pytest.approx(2 * math.pi, rel=1e-12)
        rest = norms.copy()
        rest[j, k] = 0
        assert rest.max() < 1e-12

    def test_harmonic_besov_value(self):
        g = make_grid(64, 64, math.pi)
        f = sample_function(g, lambda x1, x2: np.exp(1j * (8 * x1 + 2 * x2)))
        val = besov_norm_lp(f, BesovParams((0.5, 0.5), (2, 2), (2, 2)))
        assert val == pytest.approx(4 * math.pi, rel=1e-12)

    def test_zero_field(self):
        g = make_grid(32, 32, math.pi)
        assert besov_norm_lp(Field(g, np.zeros(g.shape)), BesovParams((0.5, 0.5), (2, 2), (2, 2))) == 0.0

    def test_near_orthogonality(self, rng):
        g = make_grid(128, 64, 6.0)
        f = band_limited(g, rng, 60, 30)
        base = mixed_lp_norm(f, (2, 2))
        pairs = [((0, 0), (2, 0)), ((1, -1), (1, 1)), ((-1, 2), (3, 0)), ((2, 3), (2, 1))]
        for a, b in pairs:
            twice = lp_block(lp_block(f, PART, a), PART, b)
            assert mixed_lp_norm(twice, (2, 2)) <= 1e-12 * base

    def test_blocks_cached_and_consistent(self, rng):
        g = make_grid(64, 32, 4.0)
        f = band_limited(g, rng)
        d = decompose(f, PART)
        assert d.block(1, 2) is d.block(1, 2)
        assert np.allclose(d.block(1, 2).values, lp_block(f, PART, (1, 2)).values, atol=1e-12)


class TestBesovNorm:
    @settings(max_examples=15, deadline=None)
    @given(seed=st.integers(0, 2 ** 32 - 1), c=st.floats(0.01, 100))
    def test_homogeneity(self, seed, c):
        g = make_grid(32, 16, 4.0)
        f = band_limited(g, np.random.default_rng(seed), 6, 4)
        params = BesovParams((0.3, 0.4), (2, 2), (2, 2))
        a = besov_norm_lp(Field(g, c * f.values), params)
        assert a == pytest.approx(c * besov_norm_lp(f, params), rel=1e-12)

    def test_x2_shift_invariance(self, rng):
        g = make_grid(64, 32, 4.0)
        f = band_limited(g, rng)
        params = BesovParams((0.3, 0.4), (2, 3), (2, 1))
        a = besov_norm_lp(f, params)
        b = besov_norm_lp(Field(g, np.roll(f.values, 5, axis=1)), params)
        assert b == pytest.approx(a, rel=1e-12)

    def test_lq_norm(self):
        a = np.array([[3.0, 4.0], [0.0, 0.0]])
        assert lq_norm(a, 2, axis=1).tolist() == [5.0, 0.0]
        assert lq_norm(a, math.inf, axis=1).tolist() == [4.0, 0.0]


class TestDerivative:
    @pytest.mark.filterwarnings("ignore::mixbesov.errors.SupportMarginViolated")
    def test_eigenfunction(self):
        g = make_grid(64, 16, math.pi)
        f = sample_function(g, lambda x1, x2: np.exp(8j * x1) + 0 * x2)
        d = spectral_derivative(f, 1)
        assert np.allclose(d.values, 8j * f.values, atol=1e-11)

    def test_constant_in_x2(self):
        g = make_grid(64, 16, 4.0)
        f = sample_function(g, lambda x1, x2: np.exp(-x1 ** 2) + 0 * x2)
        assert np.max(np.abs(spectral_derivative(f, 2).values)) < 1e-13

    def test_gaussian(self):
        g = make_grid(256, 16, 8.0)
        f = sample_function(g, lambda x1, x2: np.exp(-x1 ** 2) + 0 * x2)
        d = spectral_derivative(f, 1)
        exact = -2 * g.x1[:, None] * np.exp(-g.x1 ** 2)[:, None]
        err = math.sqrt(np.sum((d.values - exact) ** 2) * g.dx1 * g.dx2)
        assert err <= 1e-8

    def test_bad_axis(self):
        g = make_grid(16, 16, 1.0)
        with pytest.raises(ValidationError):
            spectral_derivative(Field(g, np.zeros(g.shape)), 3)
