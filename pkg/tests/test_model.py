import math

import numpy as np
import pytest
from scipy import stats
from scipy.special import expit

from noisylpm.model import (HOFF, TWO_PARAM, LinkFunction, ParameterSpace, derived_constants,
                            log_prior_psi, log_prior_z, log_q_ratio, propose_psi, propose_z,
                            sample_truncnorm, study_space, truncnorm_log_mass)


def test_link_values():
    assert TWO_PARAM(0.0, [0.0, 0.0]) == pytest.approx(0.5)
    assert HOFF(1.0, [1.0]) == pytest.approx(0.5)
    assert TWO_PARAM(0.5, [0.5, math.log(3)]) == pytest.approx(expit(0.5 - 1.5))
    with pytest.raises(ValueError):
        LinkFunction("probit")


def test_link_decreasing_in_distance():
    d = np.linspace(0, 3, 50)
    assert np.all(np.diff(TWO_PARAM(d, [0.5, 1.0])) < 0)


def test_space_validation():
    with pytest.raises(ValueError):
        ParameterSpace(S=0)
    with pytest.raises(ValueError):
        ParameterSpace(psi_bounds=[[1, 0], [0, 1]])
    with pytest.raises(ValueError):
        ParameterSpace(prop_std_z=0)
    sp = study_space(HOFF)
    assert sp.K == 1
    with pytest.raises(ValueError):
        sp.check_link(TWO_PARAM)


def test_derived_constants_hoff_and_two_param():
    sp = ParameterSpace(psi_bounds=[[-2, 3]])
    pl, pu, kp = derived_constants(HOFF, sp)
    assert kp == 0.25
    assert pu == pytest.approx(expit(3))
    assert pl == pytest.approx(expit(-2 - 2 * math.sqrt(2)))
    sp2 = ParameterSpace(psi_bounds=[[-1, 1], [-0.5, 0.5]])
    pl, pu, kp = derived_constants(TWO_PARAM, sp2)
    assert kp == pytest.approx(math.exp(0.5) / 4)
    assert pl == pytest.approx(expit(-1 - math.exp(0.5) * 2 * math.sqrt(2)))


def test_lipschitz_and_range_certificate(rng):
    sp = ParameterSpace(psi_bounds=[[-1, 1], [-0.5, 0.5]])
    pl, pu, kp = derived_constants(TWO_PARAM, sp)
    d1 = rng.uniform(0, sp.max_distance, 20000)
    d2 = rng.uniform(0, sp.max_distance, 20000)
    psi = rng.uniform(sp.psi_bounds[:, 0], sp.psi_bounds[:, 1], (20000, 2))
    f1 = expit(psi[:, 0] - np.exp(psi[:, 1]) * d1)
    f2 = expit(psi[:, 0] - np.exp(psi[:, 1]) * d2)
    assert np.all(np.abs(f1 - f2) <= kp * np.abs(d1 - d2) + 1e-15)
    assert f1.min() >= pl and f1.max() <= pu


def test_truncnorm_mass_against_scipy(rng):
    for _ in range(50):
        loc, scale = rng.uniform(-3, 3), rng.uniform(0.01, 2)
        lo, hi = -1.0, 1.0
        ref = math.log(stats.norm.cdf((hi - loc) / scale) - stats.norm.cdf((lo - loc) / scale))
        assert truncnorm_log_mass(loc, scale, lo, hi) == pytest.approx(ref, rel=1e-9, abs=1e-12)
    # far tail stays finite
    assert np.isfinite(truncnorm_log_mass(30.0, 1.0, -1.0, 1.0))


def test_sample_truncnorm_distribution(rng):
    x = sample_truncnorm(rng, 0.8, 0.5, -1.0, 1.0, size=40000)
    assert x.min() >= -1 and x.max() <= 1
    ref = stats.truncnorm((-1 - 0.8) / 0.5, (1 - 0.8) / 0.5, loc=0.8, scale=0.5)
    assert stats.kstest(x, ref.cdf).pvalue > 1e-3


def test_prior_z():
    sp = study_space()
    assert log_prior_z([2.0, 0.0], sp) == -math.inf
    assert log_prior_z([0.3, -0.2], sp) == pytest.approx(log_prior_z([-0.3, 0.2], sp))
    # normalised over the square
    from scipy import integrate
    val, _ = integrate.dblquad(lambda y, x: math.exp(log_prior_z([x, y], sp)), -1, 1, -1, 1)
    assert val == pytest.approx(1.0, rel=1e-6)


def test_prior_ratio_bound_grid_scan():
    sp = study_space()
    g = np.linspace(-1, 1, 41)
    vals = np.array([log_prior_z([x, y], sp) for x in g for y in g])
    assert vals.max() - vals.min() <= sp.S ** 2 / sp.gamma ** 2 + 1e-12


def test_prior_psi():
    sp = study_space()
    assert log_prior_psi([0.0, 0.0], sp) > log_prior_psi([5.0, 0.0], sp)
    assert log_prior_psi([11.0, 0.0], sp) == -math.inf
    assert log_prior_psi([0.0], sp) == -math.inf


def test_proposals_stay_in_bounds_and_q_ratio(rng):
    sp = study_space()
    z = np.array([0.95, -0.9])
    for _ in range(200):
        z2, lq = propose_z(z, sp, rng, std=0.5)
        assert sp.in_square(z2)
        assert lq == pytest.approx(log_q_ratio(z, z2, 0.5, -1, 1))
        # q(z2 -> z) / q(z -> z2) by direct density evaluation
        def dens(a, b):
            return np.prod(stats.truncnorm.pdf(b, (-1 - a) / 0.5, (1 - a) / 0.5, loc=a, scale=0.5))
        assert math.exp(lq) == pytest.approx(dens(z2, z) / dens(z, z2), rel=1e-8)
    v, lq = propose_psi(9.9, [-10, 10], rng, 1.0)
    assert -10 <= v <= 10


def test_zero_variance_proposal(rng):
    sp = study_space()
    z2, lq = propose_z(np.array([0.2, 0.1]), sp, rng, std=1e-12)
    assert np.allclose(z2, [0.2, 0.1], atol=1e-10)
    assert lq == pytest.approx(0.0, abs=1e-9)
