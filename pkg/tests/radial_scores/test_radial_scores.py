import math

import numpy
import pytest
import scipy.special
import scipy.stats
from beartype.roar import BeartypeCallHintParamViolation

from rank2shape.errors import QuadratureError, ShapeDomainError, UsageError
from rank2shape.r2s_enums import RadialFamily
from rank2shape.radial_scores import (
    ConstantScore,
    PowerExponentialScore,
    QuadratureSpec,
    ScoreFamily,
    StudentScore,
    VanDerWaerdenScore,
    chi2_quantile,
    cross_info,
    f_quantile,
    gamma_quantile,
    integrate_unit,
    radial_moments,
    score_centering_identity_check,
    score_for_family,
    score_information,
    score_K,
)

PROBABILITIES = numpy.array([1e-9, 1e-4, 0.05, 0.5, 0.95, 1 - 1e-4, 1 - 1e-9])

FAMILIES = [
    VanDerWaerdenScore(),
    StudentScore(0.5),
    StudentScore(3),
    StudentScore(10),
    PowerExponentialScore(3),
    PowerExponentialScore(5),
    ConstantScore(),
]


@pytest.mark.parametrize("k", [1, 2, 3, 7.5])
def test_chi2_quantile_round_trip(k):
    q = chi2_quantile(k, PROBABILITIES)
    numpy.testing.assert_allclose(scipy.stats.chi2.cdf(q, k), PROBABILITIES, rtol=0, atol=1e-10)
    assert isinstance(chi2_quantile(k, 0.5), float)


@pytest.mark.parametrize("k, nu", [(2, 0.5), (2, 3), (4, 10), (10, 3)])
def test_f_quantile_round_trip(k, nu):
    q = f_quantile(k, nu, PROBABILITIES)
    lower = PROBABILITIES < 0.5
    numpy.testing.assert_allclose(
        scipy.stats.f.cdf(q[lower], k, nu), PROBABILITIES[lower], rtol=0, atol=1e-10
    )
    # the distribution function rounds to 1 in the far upper tail, compare survival probabilities there
    upper = ~lower
    numpy.testing.assert_allclose(
        scipy.stats.f.sf(q[upper], k, nu), 1.0 - PROBABILITIES[upper], rtol=1e-7
    )


def test_gamma_quantile_round_trip():
    q = gamma_quantile(1.0 / 3.0, PROBABILITIES)
    numpy.testing.assert_allclose(scipy.special.gammainc(1.0 / 3.0, q), PROBABILITIES, atol=1e-10)


def test_quantiles_reject_probabilities_outside_unit_interval():
    with pytest.raises(ShapeDomainError):
        chi2_quantile(2, 1.0)
    with pytest.raises(ShapeDomainError):
        f_quantile(2, 3, numpy.array([0.5, 0.0]))
    with pytest.raises(ShapeDomainError):
        gamma_quantile(-1.0, 0.5)


@pytest.mark.parametrize("k, nu", [(2, 3), (3, 0.5), (6, 10)])
def test_student_score_matches_fisher_snedecor_form(k, nu):
    u = numpy.array([0.01, 0.3, 0.7, 0.99])
    G = scipy.stats.f.ppf(u, k, nu)
    expected = k * (k + nu) * G / (nu + k * G)
    numpy.testing.assert_allclose(StudentScore(nu).score(u, k), expected, rtol=1e-9)


def test_scores_are_nondecreasing():
    u = numpy.linspace(0.001, 0.999, 200)
    for family in FAMILIES:
        assert numpy.all(numpy.diff(family.score(u, 3)) >= 0), family


def test_constant_score_and_score_K():
    assert score_K(ConstantScore(), 4, 0.3) == 4.0
    numpy.testing.assert_array_equal(score_K(ConstantScore(), 2, numpy.array([0.1, 0.9])), [2.0, 2.0])
    assert score_K(VanDerWaerdenScore(), 2, 0.5) == pytest.approx(-2 * math.log(0.5), rel=1e-12)


@pytest.mark.parametrize("k", range(2, 11))
def test_gaussian_information(k):
    assert cross_info(VanDerWaerdenScore(), VanDerWaerdenScore(), k) == pytest.approx(k * (k + 2), abs=1e-6)


@pytest.mark.parametrize("family", FAMILIES, ids=repr)
@pytest.mark.parametrize("k", [2, 4])
def test_scores_integrate_to_k(family, k):
    assert score_centering_identity_check(family, k) == pytest.approx(k, abs=1e-6)


@pytest.mark.parametrize("k, nu", [(2, 3), (4, 10), (10, 0.5)])
def test_student_information_closed_form(k, nu):
    expected = k * (k + 2) * (k + nu) / (k + nu + 2)
    assert score_information(StudentScore(nu), k) == pytest.approx(expected, rel=1e-7)


def test_cross_info_is_symmetric():
    a = cross_info(StudentScore(3), VanDerWaerdenScore(), 3)
    b = cross_info(VanDerWaerdenScore(), StudentScore(3), 3)
    assert a == pytest.approx(b, rel=1e-12)
    # Cauchy-Schwarz
    assert a**2 <= score_information(StudentScore(3), 3) * score_information(VanDerWaerdenScore(), 3)


def test_radial_moments():
    gaussian = radial_moments(VanDerWaerdenScore(), 3)
    assert gaussian.D == pytest.approx(3, rel=1e-8)
    assert gaussian.E == pytest.approx(15, rel=1e-8)
    assert gaussian.kappa == pytest.approx(0, abs=1e-7)

    assert radial_moments(StudentScore(10), 2).kappa == pytest.approx(2 / (10 - 4), rel=1e-5)
    assert math.isinf(radial_moments(StudentScore(3), 2).kappa)
    assert math.isinf(radial_moments(StudentScore(0.5), 2).D)

    k, eta = 2, 3.0
    a = k / (2 * eta)
    D = math.gamma(a + 1 / eta) / math.gamma(a)
    E = math.gamma(a + 2 / eta) / math.gamma(a)
    moments = radial_moments(PowerExponentialScore(eta), k)
    assert moments.D == pytest.approx(D, rel=1e-8)
    assert moments.E == pytest.approx(E, rel=1e-8)
    assert moments.kappa == pytest.approx(k * E / ((k + 2) * D**2) - 1, rel=1e-7)
    assert moments.kappa < 0


def test_student_moments_do_not_need_quadrature():
    # a rule this strict would fail on any integral
    strict = QuadratureSpec(nodes=64, tolerance=1e-300)
    heavy = radial_moments(StudentScore(3), 2, strict)
    assert heavy.D == 6.0
    assert math.isinf(heavy.E)
    assert math.isinf(heavy.kappa)
    assert math.isinf(radial_moments(StudentScore(4), 3, strict).kappa)
    assert math.isinf(radial_moments(StudentScore(2), 2, strict).D)

    k, nu = 3, 10.0
    light = radial_moments(StudentScore(nu), k, strict)
    assert light.D == pytest.approx(k * nu / (nu - 2), rel=1e-14)
    assert light.E == pytest.approx(k * (k + 2) * nu**2 / ((nu - 2) * (nu - 4)), rel=1e-14)
    assert light.kappa == pytest.approx(2 / (nu - 4), rel=1e-12)


def test_constant_scores_have_no_radial_law():
    with pytest.raises(UsageError):
        radial_moments(ConstantScore(), 2)


def test_quadrature_detects_unresolved_integrand():
    with pytest.raises(QuadratureError):
        integrate_unit(lambda u: numpy.sin(1e5 * u))


def test_quadrature_spec_validation():
    with pytest.raises(UsageError):
        QuadratureSpec(nodes=10)
    with pytest.raises(UsageError):
        QuadratureSpec(edge_clip=0.1)
    assert QuadratureSpec().panel_nodes() == 8
    assert QuadratureSpec(nodes=4096).panel_nodes() == 51


@pytest.mark.parametrize("nodes", [64, 256, 359, 512])
def test_quadrature_check_refines_every_budget(nodes):
    with pytest.raises(QuadratureError):
        integrate_unit(lambda u: numpy.sin(1e5 * u), QuadratureSpec(nodes=nodes))


def test_parse_scores():
    assert ScoreFamily.parse("t:3") == StudentScore(3)
    assert ScoreFamily.parse("vdw") == VanDerWaerdenScore()
    assert ScoreFamily.parse("e:5") == PowerExponentialScore(5)
    assert ScoreFamily.parse("const") == ConstantScore()
    assert ScoreFamily.parse("t:0.5").to_string() == "t:0.5"
    assert StudentScore(3).to_string() == "t:3"
    assert StudentScore(3).type() == "StudentScore"
    for text in ["x:1", "t", "t:-1", "vdw:2", "t:abc"]:
        with pytest.raises(UsageError):
            ScoreFamily.parse(text)
    with pytest.raises(BeartypeCallHintParamViolation):
        ScoreFamily.parse(3)


def test_score_for_family():
    assert score_for_family(RadialFamily.GAUSSIAN) == VanDerWaerdenScore()
    assert score_for_family(RadialFamily.STUDENT, 3.0) == StudentScore(3)
    assert score_for_family(RadialFamily.POWER_EXPONENTIAL, 5.0) == PowerExponentialScore(5)
    with pytest.raises(UsageError):
        score_for_family(RadialFamily.STUDENT)
