import math

import numpy as np
import pytest
from scipy import integrate, stats

from navsecure.autodiff.distributions import Categorical, DiagonalGaussian, bernoulli_log_prob, entropy, \
    gaussian_log_prob, gaussian_sample_logprob, kl_diag_gaussian
from navsecure.autodiff.tensor import Tensor
from navsecure.exceptions.numerics import DistributionError, ShapeError


def gaussian(mean, std) -> DiagonalGaussian:
    return DiagonalGaussian(Tensor(np.atleast_1d(mean)), Tensor(np.atleast_1d(std)))


def test_kl_unit_shift():
    assert kl_diag_gaussian(gaussian(1.0, 1.0), gaussian(0.0, 1.0)).item() == pytest.approx(0.5)


def test_kl_wider_std():
    expected = math.log(0.5) + 2.0 - 0.5
    assert kl_diag_gaussian(gaussian(0.0, 2.0), gaussian(0.0, 1.0)).item() == pytest.approx(expected)


def test_kl_matches_numerical_integration():
    rng = np.random.default_rng(0)
    for _ in range(100):
        mp, mq = rng.uniform(-2.0, 2.0, size=2)
        sp, sq = rng.uniform(0.3, 2.0, size=2)
        p, q = stats.norm(mp, sp), stats.norm(mq, sq)
        numeric, _ = integrate.quad(lambda x: p.pdf(x) * (p.logpdf(x) - q.logpdf(x)), mp - 12 * sp, mp + 12 * sp,
                                    epsabs=1e-12, epsrel=1e-12, limit=200)
        analytic = kl_diag_gaussian(gaussian(mp, sp), gaussian(mq, sq)).item()
        assert analytic >= 0.0
        assert abs(analytic - numeric) <= 1e-6


def test_kl_of_identical_distributions_is_exactly_zero():
    rng = np.random.default_rng(1)
    p = gaussian(rng.normal(size=5), rng.uniform(0.1, 3.0, size=5))
    assert kl_diag_gaussian(p, p).item() == 0.0


def test_kl_per_row():
    p = DiagonalGaussian(Tensor(np.ones((3, 2))), Tensor(np.ones((3, 2))))
    q = DiagonalGaussian.standard((3, 2))
    np.testing.assert_allclose(kl_diag_gaussian(p, q, axis=-1).value, np.full(3, 1.0))


def test_uniform_categorical_entropy():
    assert abs(entropy(Categorical(Tensor(np.full(4, 0.25)))).item() - math.log(4)) <= 1e-12


def test_categorical_entropy_with_zero_probability():
    assert entropy(Categorical(Tensor([0.5, 0.5, 0.0]))).item() == pytest.approx(math.log(2))


def test_standard_normal_log_prob_at_zero():
    assert gaussian_log_prob(gaussian(0.0, 1.0), Tensor([0.0])).item() == pytest.approx(-0.9189385332, abs=1e-9)


def test_gaussian_entropy_matches_scipy():
    assert entropy(gaussian(0.3, 1.7)).item() == pytest.approx(stats.norm(0.3, 1.7).entropy())


def test_reparameterised_sample():
    d = gaussian([1.0, -1.0], [2.0, 0.5])
    sample, log_prob = gaussian_sample_logprob(d, Tensor([0.5, 2.0]))
    np.testing.assert_allclose(sample.value, [2.0, 0.0])
    expected = stats.norm(1.0, 2.0).logpdf(2.0) + stats.norm(-1.0, 0.5).logpdf(0.0)
    assert log_prob.item() == pytest.approx(expected)


def test_bernoulli_log_prob_is_finite_when_saturated():
    value = bernoulli_log_prob(Tensor([800.0, -800.0]), Tensor([1.0, 0.0])).item()
    assert value == pytest.approx(0.0, abs=1e-12)
    assert bernoulli_log_prob(Tensor([0.0]), Tensor([1.0])).item() == pytest.approx(math.log(0.5))


def test_from_raw_std_is_positive():
    d = DiagonalGaussian.from_raw(Tensor(np.zeros(3)), Tensor([-50.0, 0.0, 50.0]))
    assert np.all(d.std.value > 0.0)


@pytest.mark.parametrize("build, error", [
    (lambda: gaussian(0.0, 0.0), DistributionError),
    (lambda: gaussian(0.0, -1.0), DistributionError),
    (lambda: DiagonalGaussian(Tensor(np.zeros(2)), Tensor(np.ones(3))), ShapeError),
    (lambda: Categorical(Tensor([0.5, 0.6])), DistributionError),
    (lambda: bernoulli_log_prob(Tensor([0.0]), Tensor([2.0])), DistributionError),
])
def test_invalid_distributions(build, error):
    with pytest.raises(error):
        build()
