import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from lpverify.errors import DomainError, StatisticsError
from lpverify.specfun import G, phi
from lpverify.stochastic import (
    BetaPower,
    Constant,
    Factor,
    Gaussian,
    MCEstimate,
    PositiveStable,
    ProductRV,
    SampleStream,
    SymmetricStable,
    _Moments,
    build_existence_h,
    build_h,
    existence_h_moment,
    H_moment,
    mc_expectation,
    moment_estimate,
    moment_estimates,
    sample_gaussian,
    sample_positive_stable,
    sample_symmetric_stable,
)

# frozen from tests/oracle_gen.py (mpmath)
EXIST_H_15 = {0.5: 1.3089360972917331, -1.0: 0.7261343744371744, 1.0: 1.9575346879529411}
H_2_M05_07 = 1.1361291927260675
N = 200_000


def within(est: MCEstimate, ref, k=4.0):
    return abs(complex(est.mean) - complex(ref)) <= k * est.stderr


def plain(values):
    return mc_expectation(lambda s, m: (values[:m], None), len(values), 0, block_size=len(values))[0]


# --- streams -----------------------------------------------------------------

def test_stream_reproducible_and_value_like():
    a = SampleStream(3, ("x", 1)).generator().random(5)
    b = SampleStream(3, ("x", 1)).generator().random(5)
    assert np.array_equal(a, b)
    assert SampleStream(3, ("x",)).child(1) == SampleStream(3, ("x", 1))
    assert not np.array_equal(a, SampleStream(3, ("x", 2)).generator().random(5))


def test_split_streams_uncorrelated():
    n = 100_000
    draws = [s.generator().standard_normal(n) for s in SampleStream(0).split(4)]
    for i in range(4):
        for j in range(i + 1, 4):
            assert abs(np.corrcoef(draws[i], draws[j])[0, 1]) < 4 / math.sqrt(n)


def test_negative_key_rejected():
    with pytest.raises(ValueError):
        SampleStream(0).child(-1)


# --- base samplers -----------------------------------------------------------

def test_gaussian_sampler():
    x = sample_gaussian(SampleStream(1), 1_000_000)
    assert abs(x.mean()) < 4e-3
    assert abs(x.var() - 1) < 0.01
    assert within(plain(np.abs(x)), math.sqrt(2 / math.pi))


def test_positive_stable_laplace_and_moments():
    x = sample_positive_stable(0.5, SampleStream(2), N)
    assert within(plain(np.exp(-x)), math.exp(-1))
    assert within(plain(1 / x), 2.0)
    y = sample_positive_stable(0.9, SampleStream(3), N)
    assert within(plain(np.exp(-2 * y)), math.exp(-2 ** 0.9))
    assert within(plain(y ** 0.45), phi(0.9, 0.45))
    assert np.all(x > 0)


@pytest.mark.parametrize("p", [0.0, 1.0, 1.5])
def test_positive_stable_domain(p):
    with pytest.raises(DomainError):
        sample_positive_stable(p, 0, 10)


def test_symmetric_stable():
    c = sample_symmetric_stable(1.0, SampleStream(4), N)
    # the sample median of a Cauchy law has standard error pi / (2 sqrt(n))
    assert abs(np.median(c)) < 4 * math.pi / (2 * math.sqrt(N))
    x = sample_symmetric_stable(1.3, SampleStream(5), N)
    assert within(plain(np.cos(2 * x)), math.exp(-2 ** 1.3))
    assert math.exp(-2 ** 1.3) == pytest.approx(0.0852, abs=1e-4)


def test_symmetric_stable_product_form_matches_direct():
    a = sample_symmetric_stable(1.5, SampleStream(6), 100_000, method="direct")
    b = sample_symmetric_stable(1.5, SampleStream(7), 100_000, method="product")
    assert stats.ks_2samp(a, b).pvalue > 0.01


def test_symmetric_stable_p2_is_scaled_gaussian():
    x = sample_symmetric_stable(2.0, SampleStream(8), N)
    assert abs(x.var() - 2.0) < 0.03


def test_symmetric_stable_domain():
    with pytest.raises(DomainError):
        sample_symmetric_stable(2.5, 0, 3)
    with pytest.raises(ValueError):
        sample_symmetric_stable(1.0, 0, 3, method="other")


# --- factors and product variables -------------------------------------------

def test_tilt_must_be_integrable():
    with pytest.raises(DomainError):
        Factor(PositiveStable(0.5), tilt=0.7)
    with pytest.raises(DomainError):
        Factor(Gaussian(), tilt=-1.5)
    Factor(PositiveStable(0.5), tilt=-3.0)


def test_constant_moment_exact():
    rv = ProductRV((Factor(Constant(2.0)),))
    est = moment_estimate(rv, 3, 1000, 0)
    assert est.mean == 8.0 and est.stderr == 0.0


def test_gaussian_moment():
    rv = ProductRV((Factor(Gaussian()),))
    assert within(moment_estimate(rv, 1, N, SampleStream(9)), G(1))


def test_existence_h():
    h1 = build_existence_h(1.0)
    x, w = h1.sample(SampleStream(0), 100)
    assert np.all(x == 2.0) and w is None
    h = build_existence_h(1.5)
    assert h.weighted
    ests = moment_estimates(h, [0.5, -1.0, 1.0], N, SampleStream(10))
    for z, e in zip([0.5, -1.0, 1.0], ests):
        assert abs(existence_h_moment(1.5, z) - EXIST_H_15[z]) < 1e-12
        assert h.moment(z) == pytest.approx(EXIST_H_15[z], rel=1e-12)
        assert within(e, EXIST_H_15[z])
        assert e.weighted and e.ess >= 0.01 * e.n
    with pytest.raises(DomainError):
        build_existence_h(2.0)


def test_build_h_cauchy_case():
    h = build_h(1, 0.0, 1.0, 2.0)
    x, w = h.sample(SampleStream(11), 100_000)
    assert w is None
    assert stats.kstest(x, "cauchy").pvalue > 0.01


def test_build_h_normalization_H_p_is_one():
    h = build_h(1, 0.5, 1.5, 2.0)
    assert h.moment(0.5) == pytest.approx(1.0, abs=1e-13)
    assert within(moment_estimate(h, 0.5, N, SampleStream(12)), 1.0)


def test_build_h_case2_moment():
    h = build_h(2, -0.5, 1.5, 2.0)
    assert h.moment(0.7) == pytest.approx(H_2_M05_07, rel=1e-12)
    assert within(moment_estimate(h, 0.7, N, SampleStream(13)), H_2_M05_07)


@pytest.mark.parametrize("args", [(1, 0.5, 1.5, 2.0), (2, -0.5, 1.5, 2.0), (1, 0.5, 1.5, 1.8), (2, -0.5, 1.5, 1.8)])
def test_product_moment_consistency(args):
    h = build_h(*args)
    H = H_moment(*args)
    lo, hi = h.moment.strip.lower, h.moment.strip.upper
    zs = [lo + 0.3 * (min(hi, 1.0) - lo), 0.25 + 0.3j, min(hi, 1.0) - 0.4]
    for z, e in zip(zs, moment_estimates(h, zs, N, SampleStream(14))):
        assert abs(h.moment(z) - H(z)) < 1e-12 * abs(H(z))
        assert within(e, H(z))


@pytest.mark.parametrize("args", [(1, 0.5, 1.0, 2.0), (1, 0.5, 1.5, 1.4), (0, 0.5, 1.5, 2.0), (2, 0.5, 1.5, 2.0)])
def test_build_h_domain(args):
    with pytest.raises(DomainError):
        build_h(*args)


def test_beta_power_moment():
    rv = ProductRV((Factor(BetaPower(0.75, 0.5, -0.5)),))
    assert within(moment_estimate(rv, 0.8, N, SampleStream(15)), rv.moment(0.8))


def test_symmetric_stable_factor_keeps_sign():
    rv = ProductRV((Factor(SymmetricStable(1.2)),))
    x, _ = rv.sample(SampleStream(16), 1000)
    assert rv.symmetric and (x < 0).any() and (x > 0).any()


# --- Monte Carlo machinery ---------------------------------------------------

def test_determinism_and_worker_independence():
    h = build_h(2, -0.5, 1.5, 1.8)
    runs = [moment_estimate(h, 0.3, 150_000, SampleStream(17), workers=k) for k in (1, 2, 8)]
    assert runs[0] == runs[1] == runs[2]
    assert moment_estimate(h, 0.3, 150_000, SampleStream(17)) == runs[0]


def test_ess_collapse_raises():
    def sampler(s, m):
        w = np.zeros(m)
        w[0] = 1.0
        return np.ones(m), w + 1e-300
    with pytest.raises(StatisticsError):
        mc_expectation(sampler, 1000, 0)


def test_strip_checked_before_sampling():
    with pytest.raises(DomainError):
        moment_estimate(build_h(1, 0.5, 1.5, 2.0), 1.6, 10, 0)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.integers(1, 40), min_size=1, max_size=6), st.integers(0, 2**31), st.booleans())
def test_moments_merge_exact(sizes, seed, weighted):
    rng = np.random.default_rng(seed)
    y = rng.standard_normal((sum(sizes), 2)) + 1j * rng.standard_normal((sum(sizes), 2))
    w = rng.uniform(0.1, 2.0, sum(sizes)) if weighted else None
    whole = _Moments.of(y, w)
    cuts = np.cumsum([0] + sizes)
    parts = [_Moments.of(y[a:b], None if w is None else w[a:b]) for a, b in zip(cuts[:-1], cuts[1:])]
    merged = _Moments.merge(parts)
    assert np.allclose(merged.mean, whole.mean)
    assert np.allclose(merged.m2, whole.m2)
    assert np.allclose(merged.c1, whole.c1, atol=1e-9)
    assert merged.sw == pytest.approx(whole.sw)
