import numpy
import pytest
import scipy.stats

from rank2shape.base_estimators import (
    gaussian_shape,
    hr_median,
    rank_scores,
    rank_weighted_scatter,
    ranks_signs,
    shape_score,
    sphericity_stat,
    tyler_shape,
)
from rank2shape.errors import ConvergenceError, DegenerateDataError, ShapeDomainError, UsageError
from rank2shape.r2s_enums import EstimatorMethod
from rank2shape.radial_scores import ConstantScore, StudentScore, VanDerWaerdenScore
from rank2shape.sampler import parse_family, sample
from rank2shape.shape_algebra import normalize_shape

ORIGIN = numpy.zeros(2)


def invertible_transforms(count, k, seed):
    # well conditioned matrices and shifts
    rng = numpy.random.default_rng(seed)
    transforms = []
    while len(transforms) < count:
        M = rng.normal(size=(k, k))
        if numpy.linalg.cond(M) < 20:
            transforms.append((M, rng.normal(scale=3.0, size=k)))
    return transforms


def assert_shape_close(actual, expected, tol):
    assert numpy.max(numpy.abs(actual - expected)) <= tol * numpy.max(numpy.abs(expected))


def sphericity_draws(family, reps, seed):
    model = parse_family(family)
    statistics = []
    for rep in range(reps):
        data = sample(model, 100, numpy.random.SeedSequence(seed, spawn_key=(rep,)))
        statistics.append(sphericity_stat(data, ORIGIN, numpy.eye(2), VanDerWaerdenScore()).Q)
    return statistics


@pytest.fixture
def cross():
    return numpy.array([[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0], [0.0, -1.0]])


@pytest.fixture
def elliptical():
    V = numpy.array([[1.0, 0.6], [0.6, 3.0]])
    return sample(parse_family("t:3", V=V), 300, 5)


def test_cross_example(cross):
    tyler = tyler_shape(cross, ORIGIN)
    numpy.testing.assert_allclose(tyler.V, numpy.eye(2), atol=1e-12)
    assert tyler.iterations == 0
    assert tyler.meta["method"] == EstimatorMethod.TYLER
    numpy.testing.assert_allclose(gaussian_shape(cross).V, numpy.eye(2), atol=1e-12)


def test_tyler_fixed_point(elliptical):
    report = tyler_shape(elliptical, ORIGIN)
    assert report.V[0, 0] == 1.0
    assert report.residual <= 1e-9
    rs = ranks_signs(elliptical, ORIGIN, report.V)
    n, k = rs.U.shape
    numpy.testing.assert_allclose((k / n) * rs.U.T @ rs.U, numpy.eye(k), atol=1e-8)


def test_affine_equivariance(elliptical):
    V_T = tyler_shape(elliptical, ORIGIN, tol=1e-12, max_iter=5000).V
    V_G = gaussian_shape(elliptical).V
    for M, a in invertible_transforms(100, 2, 17):
        moved = elliptical @ M.T + a
        assert_shape_close(
            tyler_shape(moved, a, tol=1e-12, max_iter=5000).V, normalize_shape(M @ V_T @ M.T), 1e-8
        )
        assert_shape_close(gaussian_shape(moved).V, normalize_shape(M @ V_G @ M.T), 1e-10)


def test_tyler_failures(elliptical, cross):
    with pytest.raises(ConvergenceError) as info:
        tyler_shape(elliptical, ORIGIN, max_iter=1)
    assert info.value.iterations == 1
    assert info.value.residual > 1e-9
    with pytest.raises(DegenerateDataError):
        tyler_shape(cross[:2], ORIGIN)
    with pytest.raises(DegenerateDataError) as info:
        tyler_shape(numpy.vstack([cross, ORIGIN]), ORIGIN)
    assert info.value.index == 4
    with pytest.raises(UsageError):
        tyler_shape(cross, numpy.zeros(3))
    with pytest.raises(UsageError):
        tyler_shape(numpy.vstack([cross, [numpy.nan, 1.0]]), ORIGIN)


def test_gaussian_shape_failures(cross):
    with pytest.raises(DegenerateDataError):
        gaussian_shape(numpy.column_stack([numpy.ones(4), numpy.arange(4.0)]))
    line = numpy.arange(5.0)
    with pytest.raises(DegenerateDataError):
        gaussian_shape(numpy.column_stack([line, 2.0 * line]))


def test_hr_median(cross):
    shift = numpy.array([3.0, -1.0])
    report = hr_median(cross + shift)
    numpy.testing.assert_allclose(report.theta, shift, atol=1e-12)
    numpy.testing.assert_allclose(report.V, numpy.eye(2), atol=1e-12)

    data = sample(parse_family("normal", theta=shift), 200, 8)
    report = hr_median(data)
    assert report.residual <= 1e-9
    assert numpy.linalg.norm(report.theta - shift) < 0.3
    assert report.meta["method"] == EstimatorMethod.HR


def test_hr_median_translation_equivariance():
    data = sample(parse_family("t:3"), 150, 12)
    report = hr_median(data)
    for _, a in invertible_transforms(5, 2, 4):
        moved = hr_median(data + a)
        numpy.testing.assert_allclose(moved.theta, report.theta + a, rtol=0, atol=1e-8)
        numpy.testing.assert_allclose(moved.V, report.V, rtol=0, atol=1e-8)


def test_ranks_signs(elliptical):
    V = tyler_shape(elliptical, ORIGIN).V
    rs = ranks_signs(elliptical, ORIGIN, V)
    numpy.testing.assert_allclose(numpy.linalg.norm(rs.U, axis=1), 1.0, rtol=1e-12)
    assert sorted(rs.R) == list(range(1, 301))
    mahalanobis = numpy.einsum("ij,jk,ik->i", elliptical, numpy.linalg.inv(V), elliptical)
    numpy.testing.assert_allclose(rs.d**2, mahalanobis, rtol=1e-10)
    assert numpy.array_equal(numpy.argsort(rs.d, kind="stable"), numpy.argsort(rs.R))


def test_ties_are_broken_by_index(cross):
    numpy.testing.assert_array_equal(ranks_signs(cross, ORIGIN, numpy.eye(2)).R, [1, 2, 3, 4])


def test_statistics_depend_on_distances_only_through_ranks(elliptical):
    # moving every observation radially without changing the order of the distances
    V = numpy.eye(2)
    d = numpy.linalg.norm(elliptical, axis=1)
    stretched = elliptical * (1.0 + d**2)[:, numpy.newaxis]
    for f1 in (VanDerWaerdenScore(), StudentScore(3)):
        numpy.testing.assert_allclose(
            rank_weighted_scatter(stretched, ORIGIN, V, f1),
            rank_weighted_scatter(elliptical, ORIGIN, V, f1),
            rtol=1e-12,
        )


def test_rank_scores():
    scores = rank_scores(VanDerWaerdenScore(), 4, 2)
    numpy.testing.assert_allclose(scores, -2.0 * numpy.log(1.0 - numpy.arange(1, 5) / 5.0), rtol=1e-12)
    assert not scores.flags.writeable
    numpy.testing.assert_array_equal(rank_scores(ConstantScore(), 3, 5), [5.0, 5.0, 5.0])


def test_shape_score(elliptical):
    V = tyler_shape(elliptical, ORIGIN).V
    D = shape_score(elliptical, ORIGIN, V, VanDerWaerdenScore())
    assert D[0, 0] == 0.0
    numpy.testing.assert_array_equal(D, D.T)
    W = rank_weighted_scatter(elliptical, ORIGIN, V, VanDerWaerdenScore())
    numpy.testing.assert_allclose(D[0, 1], W[0, 1] - W[0, 0] * V[0, 1], rtol=1e-12)
    # constant scores vanish at Tyler's fixed point
    assert numpy.linalg.norm(shape_score(elliptical, ORIGIN, V, ConstantScore())) < 1e-7


def test_sphericity_stat(cross, elliptical):
    result = sphericity_stat(cross, ORIGIN, numpy.eye(2), ConstantScore())
    assert result.Q == pytest.approx(0.0, abs=1e-12)
    assert result.df == 2
    assert result.p == pytest.approx(1.0)

    rejected = sphericity_stat(elliptical, ORIGIN, numpy.eye(2), VanDerWaerdenScore())
    assert rejected.p < 1e-6

    three = sample(parse_family("normal", 3), 100, 4)
    assert sphericity_stat(three, numpy.zeros(3), numpy.eye(3), VanDerWaerdenScore()).df == 5


def test_invalid_hypothesised_shape(elliptical):
    indefinite = numpy.array([[1.0, 2.0], [2.0, 1.0]])
    with pytest.raises(ShapeDomainError, match="V0"):
        sphericity_stat(elliptical, ORIGIN, indefinite, VanDerWaerdenScore())
    with pytest.raises(ShapeDomainError, match="V is not"):
        ranks_signs(elliptical, ORIGIN, indefinite)
    with pytest.raises(UsageError):
        ranks_signs(elliptical, ORIGIN, numpy.eye(3))


def test_sphericity_statistic_is_distribution_free():
    gaussian = sphericity_draws("normal", 300, 1)
    heavy = sphericity_draws("t:3", 300, 2)
    assert scipy.stats.ks_2samp(gaussian, heavy).pvalue > 0.001


@pytest.mark.slow
def test_sphericity_statistic_is_distribution_free_at_scale():
    gaussian = sphericity_draws("normal", 2000, 1)
    heavy = sphericity_draws("t:3", 2000, 2)
    assert scipy.stats.ks_2samp(gaussian, heavy).pvalue > 0.001


@pytest.mark.slow
def test_sphericity_test_size():
    rejections = 0
    for seed in range(2000):
        data = sample(parse_family("normal"), 200, seed)
        rejections += sphericity_stat(data, ORIGIN, numpy.eye(2), VanDerWaerdenScore()).p < 0.05
    assert 0.035 <= rejections / 2000 <= 0.065
