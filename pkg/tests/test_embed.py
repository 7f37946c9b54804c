import math

import numpy as np
import pytest
from scipy import stats

from lpverify.absnorm import LinfNorm, LqNorm
from lpverify.embed import (
    DirectSumSpace,
    GaussianProcessSpec,
    boundedness_sweep,
    case1_lhs,
    case1_model,
    case1_rhs,
    case2_identity,
    case2_model,
    direct_sum_norm,
    gaussian_norm_moment,
    parse_space,
    spherical_ratio_sample,
    stable_embedding_sample,
    theta_for,
)
from lpverify.errors import DimensionError, DomainError, ParamError, RankError
from lpverify.specfun import G
from lpverify.stochastic import SampleStream

# frozen from tests/oracle_gen.py (mpmath)
E_NORM_LQ15 = 1.3454314723070111


def within(est, ref, k=4.0):
    return abs(complex(est.mean) - complex(ref)) <= k * est.stderr


# --- spaces --------------------------------------------------------------------

def test_direct_sum_norm_examples():
    sp = DirectSumSpace(2, 2, 1.0, LqNorm(2))
    assert direct_sum_norm(sp, [3, 4], [1, -2]) == pytest.approx(math.hypot(5, 3), rel=1e-14)
    sp = DirectSumSpace(1, 3, 1.5, LinfNorm())
    assert direct_sum_norm(sp, [-0.5], [1, 0, 0]) == 1.0
    assert sp.norm(np.array([[-0.5, 1, 0, 0], [2, 0, 0, 0]])) == pytest.approx([1.0, 2.0])


def test_direct_sum_dimension_errors():
    sp = DirectSumSpace(2, 1, 2.0, LqNorm(2))
    with pytest.raises(DimensionError):
        direct_sum_norm(sp, [1.0], [1.0])
    with pytest.raises(DimensionError):
        sp.norm(np.ones(4))
    with pytest.raises(DimensionError):
        DirectSumSpace(1, 0, 2.0, LqNorm(2))
    with pytest.raises(DomainError):
        DirectSumSpace(1, 1, 2.5, LqNorm(2))


def test_parse_space():
    sp = parse_space("l2:3+lq:1.5:2@r:1.8")
    assert (sp.m, sp.n, sp.q) == (3, 2, 1.5)
    assert sp.N == LqNorm(1.8)
    assert parse_space(sp.descriptor()) == sp
    assert isinstance(parse_space("l2:1+lq:1:1@linf").N, LinfNorm)
    with pytest.raises(ParamError):
        parse_space("l2:3+lp:2")


# --- Gaussian processes --------------------------------------------------------

def test_gaussian_process_rank():
    spec = GaussianProcessSpec.identity(3)
    assert spec.full_rank and spec.rank == 3 and spec.rank_certificate == pytest.approx(1.0)
    spec.require_full_rank()
    flat = GaussianProcessSpec(np.array([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]]))
    assert flat.rank == 2 and not flat.full_rank
    with pytest.raises(RankError):
        flat.require_full_rank()
    dup = GaussianProcessSpec(np.array([[1.0, 1.0], [2.0, 2.0], [0.0, 0.0]]))
    assert dup.rank == 1
    with pytest.raises(RankError):
        dup.require_full_rank()


def test_gaussian_norm_moment_examples():
    spec = GaussianProcessSpec.identity(2)
    euclid = DirectSumSpace(2, 1, 2.0, LqNorm(2))
    # E|gamma|^2 over R^3 is 3, and E|gamma|^2 over R^2 is 2
    e3 = gaussian_norm_moment(GaussianProcessSpec.identity(3), euclid, 2, 200_000, SampleStream(1))
    assert within(e3, 3.0)
    e2 = gaussian_norm_moment(spec, lambda v: np.hypot(v[..., 0], v[..., 1]), 2, 200_000, SampleStream(2))
    assert within(e2, 2.0)
    # weighted example: E[|g_1| / |gamma|] over R^2 is 2 / pi
    w = gaussian_norm_moment(spec, LqNorm(2), -1, 200_000, SampleStream(3), weight=lambda g: np.abs(g[:, 0]))
    assert within(w, 2 / math.pi)
    e = gaussian_norm_moment(spec, LqNorm(1.5), 1, 400_000, SampleStream(4))
    assert within(e, E_NORM_LQ15)


def test_gaussian_norm_moment_matches_G():
    # E|gamma|^z = 2^(z/2) Gamma((d+z)/2) / Gamma(d/2) in R^d
    spec = GaussianProcessSpec.identity(3)
    z = -1.2
    ref = 2 ** (z / 2) * math.gamma((3 + z) / 2) / math.gamma(1.5)
    e = gaussian_norm_moment(spec, lambda v: np.sqrt(np.sum(v * v, axis=-1)), z, 300_000, SampleStream(5))
    assert within(e, ref)


def test_gaussian_norm_moment_domain():
    with pytest.raises(DomainError):
        gaussian_norm_moment(GaussianProcessSpec.identity(2), LqNorm(2), -2.0, 10, 0)


# --- one-dimensional embeddings ------------------------------------------------

def test_spherical_ratio_sample():
    x = np.array([3.0, 4.0])
    r = spherical_ratio_sample(2, x, SampleStream(6), size=100_000)
    assert np.all(np.abs(r) <= 5.0 + 1e-12)
    # in R^2 the projection is 5 cos(U) with U uniform
    assert stats.kstest(r / 5, lambda s: 1 - np.arccos(np.clip(s, -1, 1)) / np.pi).pvalue > 0.01
    assert isinstance(spherical_ratio_sample(2, x, 0), float)
    with pytest.raises(DimensionError):
        spherical_ratio_sample(3, x, 0)


def test_spherical_ratio_moment_matches_theta():
    # E|R x|^p = |x|^p G(p) G(m-1) / G(p+m-1) and theta^p inverts that ratio
    p, m = -0.5, 3
    x = np.array([1.0, 0.0, 0.0])
    r = spherical_ratio_sample(m, x, SampleStream(7), size=400_000)
    ref = G(p).real * G(m - 1).real / G(p + m - 1).real
    est = np.mean(np.abs(r) ** p)
    se = np.std(np.abs(r) ** p) / math.sqrt(r.size)
    assert abs(est - ref) < 4 * se
    assert theta_for(p, m) ** p == pytest.approx(G(p + m - 1).real / G(m - 1).real, rel=1e-13)


def test_stable_embedding_sample():
    # q = 2: S y is Gaussian with variance 2 |y|^2
    s = stable_embedding_sample(2.0, [1.0, 1.0], SampleStream(8), size=200_000)
    assert abs(s.var() - 4.0) < 0.08
    c = stable_embedding_sample(1.2, [0.6, -0.8, 0.5], SampleStream(9), size=200_000)
    nq = (0.6 ** 1.2 + 0.8 ** 1.2 + 0.5 ** 1.2) ** (1 / 1.2)
    cf = np.mean(np.cos(c / nq))
    assert abs(cf - math.exp(-1.0)) < 4 * np.std(np.cos(c / nq)) / math.sqrt(c.size)
    # S y / |y|_q does not depend on the direction of y
    d = stable_embedding_sample(1.2, [nq], SampleStream(10), size=100_000)
    assert stats.ks_2samp(c[:100_000], d).pvalue > 0.01
    with pytest.raises(DomainError):
        stable_embedding_sample(2.5, [1.0], 0)


# --- embedding models ------------------------------------------------------------

def test_case1_identity():
    p, q, r = 0.5, 1.5, 2.0
    assert case1_lhs(p, q, r, 0.0, 1000, 0).mean == pytest.approx(1.0)
    ts = [0.3, 1.0, 2.5]
    lhs = case1_lhs(p, q, r, ts, 300_000, SampleStream(11))
    rhs = case1_rhs(p, r, ts)
    for est, ref in zip(lhs, rhs):
        assert within(est, ref)
    assert case1_model(p, q, r).theta == 1.0
    with pytest.raises(DomainError):
        case1_lhs(-0.5, q, r, 1.0, 10, 0)
    with pytest.raises(DomainError):
        case1_lhs(p, q, r, [-1.0], 10, 0)


def test_case1_rhs_is_norm_power():
    t = np.array([0.0, 0.5, 3.0])
    assert np.allclose(case1_rhs(0.7, 1.8, t), LqNorm(1.8)(np.ones(3), t) ** 0.7)


@pytest.mark.parametrize("m,n", [(1, 2), (2, 2)])
def test_case2_identity(m, n):
    p = -0.5
    model = case2_model(p, m, 1.5, 2.0, n)
    rng = np.random.default_rng(m)
    spec = GaussianProcessSpec(rng.standard_normal((m + n, m + n)))
    res = case2_identity(model, spec, [0.5, 2.0], 200_000, SampleStream(12))
    for e in res:
        diff = e.lhs.mean - e.rhs.mean
        assert abs(diff) <= 4 * math.hypot(e.lhs.stderr, e.rhs.stderr)
        assert e.clip_rate_lhs <= 2e-6 and e.clip_rate_rhs <= 2e-6


def test_case2_scaling_in_t():
    # t -> c t with the y-vectors divided by c leaves both sides unchanged
    model = case2_model(-0.5, 2, 1.5, 2.0, 1)
    v = np.eye(3)
    c = 3.0
    w = v.copy()
    w[:, 2] /= c
    a = case2_identity(model, GaussianProcessSpec(v), 1.0, 50_000, SampleStream(13))
    b = case2_identity(model, GaussianProcessSpec(w), c, 50_000, SampleStream(13))
    assert a[0].mean == pytest.approx(b[0].mean, rel=1e-12)
    assert a[1].mean == pytest.approx(b[1].mean, rel=1e-12)


def test_case2_errors():
    with pytest.raises(DomainError):
        case2_model(0.5, 2, 1.5, 2.0, 1)
    with pytest.raises(DomainError):
        case2_model(-2.5, 2, 1.5, 2.0, 1)
    model = case2_model(-0.5, 2, 1.5, 2.0, 1)
    with pytest.raises(DimensionError):
        case2_identity(model, GaussianProcessSpec.identity(2), 1.0, 10, 0)
    with pytest.raises(RankError):
        case2_identity(model, GaussianProcessSpec(np.ones((3, 3))), 1.0, 10, 0)
    with pytest.raises(DomainError):
        case2_identity(case1_model(0.5, 1.5, 2.0), GaussianProcessSpec.identity(2), 1.0, 10, 0)


def test_boundedness_sweep_smoke():
    spec = GaussianProcessSpec.identity(3)
    sp = DirectSumSpace(1, 2, 1.5, LqNorm(1.8))
    res = boundedness_sweep(spec, sp, -1.0, [1.0, 0.0, 0.0], [0.0, 1.0, 10.0, 100.0], 100_000, SampleStream(14))
    means = [e.mean for e in res]
    assert all(np.isfinite(means))
    # bounded, and decaying like |s x|^u once s is large
    assert max(means) <= means[0] * 1.01
    assert means[-1] == pytest.approx(1 / 100, rel=0.05)
    with pytest.raises(DomainError):
        boundedness_sweep(spec, sp, -3.5, [1.0, 0, 0], [1.0], 10, 0)
