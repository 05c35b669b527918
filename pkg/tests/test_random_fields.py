import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mixbesov import (
    BesovParams,
    CovSpec,
    Field,
    FunctionSampler,
    GaussianSampler,
    MomentReport,
    SheConfig,
    SheSampler,
    estimate_increment_moments,
    increment_gaussianity,
    kolmogorov_check,
    make_grid,
    make_lag_grid,
    regularity_fit,
    sample_function,
    simulate_she,
)
from mixbesov.errors import (
    CovarianceNotPSD,
    ExponentOrderingViolated,
    GridTooLargeForDense,
    InsufficientLagLevels,
    ModeCountExceedsGrid,
    ResolutionTooCoarse,
    ValidationError,
)
from mixbesov.random_fields import (
    INF,
    she_covariance,
    she_grid,
    she_variance,
    sample_product_gaussian,
)


def sheet_law(kind, h1, h2, p):
    """Exact E|increment|^p of the standard sheet at unit anchor, p = 2 or 4."""
    c = {2.0: 1.0, 4.0: 3.0}[float(p)]
    var = {"rect": h1 * h2, "dir1": h1, "dir2": h2}[kind]
    return c * var ** (p / 2)


@pytest.fixture(scope="module")
def sheet_sampler():
    return GaussianSampler(CovSpec.brownian_sheet(1.0), make_grid(64, 64, 1.0), seed=3)


@pytest.fixture(scope="module")
def small_she():
    return SheConfig(t_max=2.0, n_modes=32, n_time=64, n_space=64, seed=9)


class TestGaussianSampler:
    def test_variance_at_half(self):
        g = make_grid(64, 64, 1.0)
        sampler = GaussianSampler(CovSpec.brownian_sheet(1.0), g, seed=1)
        i = g.n1 // 2 + 16  # x1 = 0.5
        j = int(round(0.5 / g.dx2))  # x2 + pi closest to 0.5
        y = g.x2[j] + math.pi
        vals = np.array([sampler.draw(k).values[i, j] for k in range(2048)])
        se = vals.var(ddof=1) * math.sqrt(2 / (len(vals) - 1))
        assert abs(np.mean(vals ** 2) - 0.5 * y) <= 4 * se

    def test_rect_second_moment(self, sheet_sampler):
        lags = make_lag_grid(sheet_sampler.grid, 3)
        rep = estimate_increment_moments(sheet_sampler, lags, [2], 512)
        for r in rep.select("rect", 2):
            if r.h1 == r.h2:
                assert abs(r.value - r.h1 * r.h2) <= 4 * r.stderr

    def test_gaussianity(self, sheet_sampler):
        out = increment_gaussianity(sheet_sampler, "rect", 4, 4, 512)
        assert abs(out["skewness"]) <= 6 * out["skewness_se"]
        assert abs(out["kurtosis_ratio"] - 3) <= 6 * out["kurtosis_se"]

    def test_stream_matches_sampler(self):
        g = make_grid(32, 16, 1.0)
        cov = CovSpec.brownian_sheet(1.0)
        stream = list(sample_product_gaussian(cov, g, 3, seed=4))
        sampler = GaussianSampler(cov, g, 4)
        for i, f in enumerate(stream):
            assert np.array_equal(f.values, sampler.draw(i).values)

    def test_seeds_differ(self):
        g = make_grid(32, 16, 1.0)
        s = GaussianSampler(CovSpec.brownian_sheet(1.0), g, 4)
        assert not np.array_equal(s.draw(0).values, s.with_seed(5).draw(0).values)
        assert not np.array_equal(s.draw(0).values, s.draw(1).values)

    def test_not_psd(self):
        cov = CovSpec(lambda x, y: -np.minimum(x, y) - 1.0, np.minimum)
        with pytest.raises(CovarianceNotPSD):
            GaussianSampler(cov, make_grid(16, 16, 1.0))

    def test_too_large(self):
        with pytest.raises(GridTooLargeForDense):
            GaussianSampler(CovSpec.brownian_sheet(1.0), make_grid(2048, 8, 1.0))

    def test_bad_tag(self):
        with pytest.raises(ValidationError):
            CovSpec(np.minimum, np.minimum, "sphere")


class TestShe:
    def test_initial_row_zero(self, small_she):
        f = simulate_she(small_she)
        g = f.grid
        assert np.all(f.values[g.n1 // 2] == 0)

    def test_dirichlet(self, small_she):
        for i in range(5):
            f = simulate_she(small_she, i)
            # column 0 is x2 = -pi, identified with +pi on the torus
            assert np.max(np.abs(f.values[:, 0])) <= 1e-12

    def test_rows_outside_time_window_zero(self, small_she):
        f = simulate_she(small_she)
        g = f.grid
        assert np.all(f.values[:g.n1 // 2] == 0)

    def test_grid_rows_are_times(self, small_she):
        g = she_grid(small_she)
        assert g.x1[g.n1 // 2] == 0.0
        assert g.dx1 == pytest.approx(small_she.dt)

    def test_covariance_probes(self, small_she):
        g = she_grid(small_she)
        row = g.n1 // 2 + small_she.n_time - 1
        t = (small_she.n_time - 1) * small_she.dt
        samples = np.array([simulate_she(small_she, i).values[row] for i in range(1024)])
        for a, b in [(32, 32), (16, 16), (32, 40), (8, 48), (24, 30)]:
            prod = samples[:, a] * samples[:, b]
            se = prod.std(ddof=1) / math.sqrt(len(prod))
            exact = she_covariance(g.x2[a], g.x2[b], t, small_she.n_modes)[0]
            assert abs(prod.mean() - exact) <= 4 * se

    def test_stationary_variance(self):
        assert she_variance(0.0, INF, 20000)[0] == pytest.approx(math.pi / 4, abs=1e-4)

    @pytest.mark.parametrize("J", [4, 16, 64])
    def test_truncation_bound(self, J):
        x = np.linspace(-math.pi, math.pi, 41)
        for t in (0.5, INF):
            change = np.abs(she_variance(x, t, 4 * J) - she_variance(x, t, J))
            assert np.all(change <= (2 / math.pi) / J)

    def test_determinism(self, small_she):
        a = simulate_she(small_she, 3).values
        b = simulate_she(SheConfig(2.0, 32, 64, 64, 9), 3).values
        assert np.array_equal(a, b)

    def test_gaussianity(self, small_she):
        out = increment_gaussianity(SheSampler(small_she), "dir1", 2, 0, 512)
        assert abs(out["skewness"]) <= 6 * out["skewness_se"]
        assert abs(out["kurtosis_ratio"] - 3) <= 6 * out["kurtosis_se"]

    def test_mode_count(self):
        with pytest.raises(ModeCountExceedsGrid):
            SheConfig(1.0, 64, 16, 64)

    def test_time_steps(self):
        with pytest.raises(ValidationError):
            SheConfig(1.0, 4, 1, 64)


class TestMoments:
    def test_bilinear_field_exact(self):
        g = make_grid(64, 64, 1.0)
        f = sample_function(g, lambda x1, x2: x1 * x2)
        sampler = FunctionSampler(f, 1.0, x2_domain="rectangle")
        lags = make_lag_grid(g, 3)
        rep = estimate_increment_moments(sampler, lags, [1, 2, 3], 2)
        for r in rep.rows:
            if r.kind == "rect":
                assert r.value == pytest.approx((r.h1 * r.h2) ** r.p, rel=1e-10)
                assert r.stderr == 0

    def test_parallel_schedule_irrelevant(self, sheet_sampler):
        lags = make_lag_grid(sheet_sampler.grid, 3)
        a = estimate_increment_moments(sheet_sampler, lags, [2, 4], 24, workers=1)
        b = estimate_increment_moments(sheet_sampler, lags, [2, 4], 24, workers=3)
        assert a.to_json() == b.to_json()

    def test_seed_override(self, sheet_sampler):
        lags = make_lag_grid(sheet_sampler.grid, 3)
        a = estimate_increment_moments(sheet_sampler, lags, [2], 8, seed=3)
        b = estimate_increment_moments(sheet_sampler, lags, [2], 8)
        c = estimate_increment_moments(sheet_sampler, lags, [2], 8, seed=4)
        assert a.rows == b.rows and a.rows != c.rows

    def test_round_trips(self, sheet_sampler):
        lags = make_lag_grid(sheet_sampler.grid, 3)
        rep = estimate_increment_moments(sheet_sampler, lags, [2, 4], 8)
        assert MomentReport.from_csv(rep.to_csv()).rows == rep.rows
        assert MomentReport.from_json(rep.to_json()).rows == rep.rows
        assert rep.to_csv().splitlines()[0] == "h1,h2,p,moment_kind,value,stderr,n"

    def test_lag_too_long(self):
        g = make_grid(64, 64, 1.0)
        sampler = FunctionSampler(Field(g, np.zeros(g.shape)), 0.25)
        with pytest.raises(ResolutionTooCoarse):
            estimate_increment_moments(sampler, make_lag_grid(g, 4), [2], 1)

    def test_sheet_slopes(self, sheet_sampler):
        lags = make_lag_grid(sheet_sampler.grid, 4)
        fit = regularity_fit(estimate_increment_moments(sheet_sampler, lags, [2], 256))
        assert fit["rect"]["slopes"] == pytest.approx([1.0, 1.0], abs=0.1)
        assert fit["dir1"]["slopes"][0] == pytest.approx(1.0, abs=0.1)
        assert fit["dir2"]["slopes"][0] == pytest.approx(1.0, abs=0.1)


class TestFit:
    def test_exact_power_law(self):
        lags = make_lag_grid(make_grid(64, 64, 1.0), 4)
        rep = MomentReport.analytic(lags, [2], lambda kind, h1, h2, p: (h1 or 1) ** 1.5 * (h2 or 1) ** 1.5)
        fit = regularity_fit(rep)
        for kind in ("rect", "dir1", "dir2"):
            for s in fit[kind]["slopes"]:
                assert abs(s - 1.5) <= 1e-12
            assert fit[kind]["r2"] == pytest.approx(1.0, abs=1e-12)

    def test_too_few_levels(self):
        records = [{"h1": h, "h2": h, "p": 2, "moment_kind": "rect", "value": h * h, "stderr": 0, "n": 1}
                   for h in (0.1, 0.2, 0.4)]
        with pytest.raises(InsufficientLagLevels):
            regularity_fit(MomentReport.from_records(records))


@pytest.fixture(scope="module")
def sheet_report():
    lags = make_lag_grid(make_grid(256, 256, 1.0), 5)
    return MomentReport.analytic(lags, [2, 4], sheet_law)


class TestKolmogorov:
    def test_q2_passes_and_fails(self, sheet_report):
        ok = kolmogorov_check(sheet_report, BesovParams((0.01, 0.01), (4, 4), (2, 2)))
        bad = kolmogorov_check(sheet_report, BesovParams((0.2, 0.2), (4, 4), (2, 2)))
        worse = kolmogorov_check(sheet_report, BesovParams((0.6, 0.6), (4, 4), (2, 2)))
        assert ok.passed and not bad.passed and not worse.passed
        assert ok.slopes["rect1"] == pytest.approx(2.0, abs=1e-12)
        assert ok.admissible_alpha[0] == pytest.approx(0.025, abs=1e-12)

    def test_q4_region(self, sheet_report):
        assert kolmogorov_check(sheet_report, BesovParams((0.2, 0.2), (4, 4), (4, 4))).passed
        assert not kolmogorov_check(sheet_report, BesovParams((0.35, 0.2), (4, 4), (4, 4))).passed

    def test_zero_field_passes(self):
        g = make_grid(64, 64, 1.0)
        sampler = FunctionSampler(Field(g, np.zeros(g.shape)), 1.0)
        rep = estimate_increment_moments(sampler, make_lag_grid(g, 3), [4], 1)
        for alpha in ((0.1, 0.1), (0.9, 0.9)):
            v = kolmogorov_check(rep, BesovParams(alpha, (4, 4), (2, 2)))
            assert v.passed and v.slopes["dir1"] == INF

    @settings(max_examples=60, deadline=None)
    @given(a=st.floats(0.01, 0.99), b=st.floats(0.01, 0.99), s=st.floats(0.0, 1.0))
    def test_loosening_alpha_never_fails(self, sheet_report, a, b, s):
        strict = kolmogorov_check(sheet_report, BesovParams((a, b), (4, 4), (4, 4)))
        loose = kolmogorov_check(sheet_report, BesovParams((a * s + 0.005 * (1 - s), b * s + 0.005 * (1 - s)), (4, 4), (4, 4)))
        assert not strict.passed or loose.passed

    def test_ordering(self, sheet_report):
        with pytest.raises(ExponentOrderingViolated):
            kolmogorov_check(sheet_report, BesovParams((0.1, 0.1), (4, 4), (4, 2)))
        with pytest.raises(ExponentOrderingViolated):
            kolmogorov_check(sheet_report, BesovParams((0.1, 0.1), (2, 4), (4, 4)))

    def test_missing_exponent(self, sheet_report):
        with pytest.raises(ValidationError):
            kolmogorov_check(sheet_report, BesovParams((0.1, 0.1), (6, 6), (2, 2)))

    def test_to_dict(self, sheet_report):
        d = kolmogorov_check(sheet_report, BesovParams((0.2, 0.2), (4, 4), (4, 4))).to_dict()
        assert d["passed"] is True and set(d["slopes"]) == {"rect1", "rect2", "dir1", "dir2"}
