import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import stats

from wasserclust.errors import InfeasibleMoments
from wasserclust.pearson import MomentSpec, pearson_kappa, pearson_sample, pearson_type, sample_moments

N = 100_000


def check_recovery(spec, x):
    m, s, g, k = sample_moments(x)
    assert abs(m - spec.mean) <= 3 * spec.std / math.sqrt(x.size)
    assert abs(s - spec.std) <= 0.05 * spec.std
    assert abs(g - spec.skewness) <= 0.1
    assert abs(k - spec.kurtosis) <= 0.3


class TestMomentSpec:
    def test_infeasible(self):
        with pytest.raises(InfeasibleMoments):
            MomentSpec(0, 1, 2, 4)

    def test_non_positive_std(self):
        with pytest.raises(InfeasibleMoments):
            MomentSpec(0, 0, 0, 3)

    def test_boundary_is_infeasible(self):
        with pytest.raises(InfeasibleMoments):
            MomentSpec(0, 1, 1, 2)


class TestTypes:
    @pytest.mark.parametrize(
        "skew,kurt,expected",
        [
            (0.0, 3.0, "0"),
            (0.0, 1.8, "II"),
            (0.0, 4.0, "VII"),
            (0.5, 2.5, "I"),
            (0.5, 3.375, "III"),
            (0.3, 3.4, "IV"),
            (1.0, 4.6, "VI"),
        ],
    )
    def test_selection(self, skew, kurt, expected):
        assert pearson_type(MomentSpec(0, 1, skew, kurt)) == expected

    def test_kappa_regions(self):
        # kappa < 0 for type I, in (0, 1) for type IV, > 1 for type VI
        assert pearson_kappa(0.5, 2.5) < 0
        assert 0 < pearson_kappa(0.3, 3.4) < 1
        assert pearson_kappa(1.0, 4.6) > 1

    def test_type_v_on_kappa_one(self):
        # kappa = 1 line: pick skewness 1 and solve for kurtosis by bisection
        # kappa falls from +inf on the gamma line (kurtosis 4.5) through 1
        lo, hi = 4.5 + 1e-9, 6.0
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if pearson_kappa(1.0, mid) > 1:
                lo = mid
            else:
                hi = mid
        spec = MomentSpec(0, 1, 1.0, 0.5 * (lo + hi))
        assert pearson_type(spec) == "V"
        x = pearson_sample(spec, N, np.random.default_rng(0))
        m, s, g, _ = sample_moments(x)
        assert abs(m) < 3 / math.sqrt(N) and abs(s - 1) < 0.05 and abs(g - 1.0) < 0.1


@pytest.mark.parametrize(
    "spec",
    [
        MomentSpec(0, 1, 0, 3),
        MomentSpec(0, 1, 0, 1.8),
        MomentSpec(2, 3, 0, 4.5),
        MomentSpec(-1, 0.5, 0.5, 2.5),
        MomentSpec(0, 1, -0.5, 2.5),
        MomentSpec(5, 2, 0.5, 3.375),
        MomentSpec(0, 1, 0.3, 3.4),
        MomentSpec(0, 1, -0.3, 3.4),
        MomentSpec(0, 1, 0.6, 4.2),
        MomentSpec(0, 1, 1.0, 4.6),
    ],
    ids=lambda s: f"{s.mean}_{s.std}_{s.skewness}_{s.kurtosis}",
)
def test_moment_recovery(spec):
    check_recovery(spec, pearson_sample(spec, N, np.random.default_rng(12345)))


def test_normal_case_is_normal():
    x = pearson_sample(MomentSpec(0, 1, 0, 3), 20_000, np.random.default_rng(1))
    assert stats.kstest(x, "norm").pvalue > 0.01


def test_type_vii_is_scaled_t():
    spec = MomentSpec(0, 1, 0, 4.5)
    nu = 4 + 6 / (4.5 - 3)
    x = pearson_sample(spec, 20_000, np.random.default_rng(2))
    assert stats.kstest(x, stats.t(df=nu, scale=math.sqrt((nu - 2) / nu)).cdf).pvalue > 0.01


def test_type_iv_density_shape():
    # compare the sampled CDF against direct quadrature of the type IV density
    spec = MomentSpec(0, 1, 0.3, 3.4)
    x = np.sort(pearson_sample(spec, 50_000, np.random.default_rng(3)))
    b1, b2 = spec.skewness**2, spec.kurtosis
    d = 10 * b2 - 12 * b1 - 18
    c0, c1, c2 = (4 * b2 - 3 * b1) / d, spec.skewness * (b2 + 3) / d, (2 * b2 - 3 * b1 - 6) / d
    z = np.linspace(-12, 12, 200_001)
    # f'/f = -(z + c1) / (c0 + c1 z + c2 z^2)
    logf = np.concatenate([[0.0], np.cumsum(np.diff(z) * -((z[:-1] + z[1:]) / 2 + c1)
                                         / (c0 + c1 * (z[:-1] + z[1:]) / 2 + c2 * ((z[:-1] + z[1:]) / 2) ** 2))])
    f = np.exp(logf - logf.max())
    cdf = np.concatenate([[0.0], np.cumsum((f[1:] + f[:-1]) / 2 * np.diff(z))])
    cdf /= cdf[-1]
    ks = np.max(np.abs(np.interp(x, z, cdf) - np.arange(1, x.size + 1) / x.size))
    assert ks < 1.36 / math.sqrt(x.size) * 1.5


def test_reproducible():
    spec = MomentSpec(1, 2, 0.1, 2.9)
    a = pearson_sample(spec, 100, np.random.default_rng(7))
    b = pearson_sample(spec, 100, np.random.default_rng(7))
    np.testing.assert_array_equal(a, b)


@given(
    st.floats(-0.8, 0.8),
    st.floats(0.05, 2.0),
)
def test_any_feasible_spec_samples_finite(skew, excess_over_floor):
    kurt = 1 + skew**2 + excess_over_floor
    x = pearson_sample(MomentSpec(0, 1, skew, kurt), 2000, np.random.default_rng(0))
    assert np.all(np.isfinite(x))
    assert abs(x.mean()) < 0.25 and 0.7 < x.std() < 1.3
