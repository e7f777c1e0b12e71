import math

import numpy as np
import pytest

import oracles as O
import lemma_checks as L
from contractkit import (
    CHI2, HELLINGER, KL, TV, ContractError, Dist, FiniteRandomVariable, JointLaw, alpha, bern, bsc,
    conditional_phi_entropy_mean, lecam, phi_divergence, phi_entropy, phi_information,
    statistical_information,
)
from contractkit import errors as E

ORACLE_PHI = {"kl": (KL, O.phi_kl), "chi2": (CHI2, O.phi_chi2), "hellinger": (HELLINGER, O.phi_hellinger),
              "alpha": (alpha(1.5), O.phi_alpha(1.5))}


def test_chi2_entropy_is_variance(rng):
    for _ in range(10):
        vals = rng.uniform(0, 4, 5)
        law = Dist(rng.dirichlet(np.ones(5)))
        var = float(law.mass @ (vals - law.mass @ vals) ** 2)
        assert phi_entropy(CHI2, FiniteRandomVariable(vals, law)) == pytest.approx(var, rel=1e-12)


def test_kl_entropy_two_point():
    u = FiniteRandomVariable([0.5, 1.5], Dist([0.5, 0.5]))
    assert phi_entropy(KL, u) == pytest.approx(0.5 * (0.5 * math.log(0.5) + 1.5 * math.log(1.5)), abs=1e-15)
    assert phi_entropy(KL, u) == pytest.approx(0.130812, abs=1e-6)


def test_constant_variable_has_zero_entropy():
    u = FiniteRandomVariable([2.0, 2.0, 2.0], Dist([0.2, 0.3, 0.5]))
    for phi in (KL, CHI2, HELLINGER, TV):
        assert abs(phi_entropy(phi, u)) < 1e-15


def test_negative_support_rejected():
    with pytest.raises(ContractError) as err:
        phi_entropy(KL, FiniteRandomVariable([-1.0, 1.0], Dist([0.5, 0.5])))
    assert err.value.code == E.DOMAIN


@pytest.mark.parametrize("q", [0.0, 0.1, 0.37, 0.5, 0.9])
def test_chi2_against_bernoulli_half(q):
    assert phi_divergence(CHI2, bern(q), bern(0.5)) == pytest.approx((1 - 2 * q) ** 2, abs=1e-15)


def test_lecam_half_example():
    assert phi_divergence(lecam(0.5), bern(0.0), bern(0.5)) == pytest.approx(1 / 3, abs=1e-15)
    for q in (0.1, 0.3):
        lam = 0.5
        expect = lam * (1 - lam) * (1 - 2 * q) ** 2 / (1 - lam**2 * (1 - 2 * q) ** 2)
        assert phi_divergence(lecam(lam), bern(q), bern(0.5)) == pytest.approx(expect, abs=1e-15)


def test_tv_and_chi2_closed_forms(rng):
    for _ in range(20):
        nu, mu = rng.dirichlet(np.ones(4)), rng.dirichlet(np.ones(4))
        assert phi_divergence(TV, Dist(nu), Dist(mu)) == pytest.approx(0.5 * np.abs(nu - mu).sum(), abs=1e-14)
        assert phi_divergence(CHI2, Dist(nu), Dist(mu)) == pytest.approx(((nu - mu) ** 2 / mu).sum(), rel=1e-10)


@pytest.mark.parametrize("name", sorted(ORACLE_PHI))
def test_divergence_matches_direct_sum(name, rng):
    phi, ref = ORACLE_PHI[name]
    for _ in range(20):
        nu, mu = rng.dirichlet(np.ones(5)), rng.dirichlet(np.ones(5))
        assert phi_divergence(phi, Dist(nu), Dist(mu)) == pytest.approx(O.divergence(ref, nu, mu), rel=1e-9, abs=1e-14)


def test_divergence_keeps_precision_near_reference():
    mu = np.array([0.3, 0.7])
    h = 1e-7
    nu = mu + np.array([h, -h])
    # second-order expansion: (h^2 / 2) * sum 1/mu for KL
    expect = 0.5 * h * h * (1 / 0.3 + 1 / 0.7)
    assert phi_divergence(KL, Dist(nu), Dist(mu)) == pytest.approx(expect, rel=1e-6)


def test_divergence_zero_at_equality_and_errors():
    mu = Dist([0.2, 0.8])
    for phi in (KL, CHI2, HELLINGER, TV, lecam(0.2)):
        assert phi_divergence(phi, mu, mu) == pytest.approx(0.0, abs=1e-15)
    with pytest.raises(ContractError) as err:
        phi_divergence(KL, bern(0.5), bern(1.0))
    assert err.value.code == E.NOT_STRICTLY_POSITIVE and err.value.index == 0


def test_conditional_entropy_examples():
    f = np.array([0.5, 1.5])
    indep = JointLaw(np.outer([0.5, 0.5], [0.3, 0.7]))
    u = FiniteRandomVariable(f, Dist([0.5, 0.5]))
    assert conditional_phi_entropy_mean(KL, indep, f) == pytest.approx(phi_entropy(KL, u), abs=1e-15)
    assert conditional_phi_entropy_mean(KL, JointLaw(np.diag([0.5, 0.5])), f) == pytest.approx(0.0, abs=1e-15)
    joint = JointLaw.from_pair(bern(0.5), bsc(0.1))
    cond = conditional_phi_entropy_mean(KL, joint, f)
    given = joint.mass.T @ f / joint.marginal_z()
    outer = FiniteRandomVariable(given, Dist(joint.marginal_z()))
    assert abs(phi_entropy(KL, u) - cond - phi_entropy(KL, outer)) < 1e-12


def test_total_entropy_identity(rng):
    for _ in range(30):
        joint = JointLaw(rng.dirichlet(np.ones(12)).reshape(4, 3))
        f = rng.uniform(0.1, 3, 4)
        px, pz = joint.marginal_x(), joint.marginal_z()
        for phi in (KL, CHI2, HELLINGER, alpha(1.5)):
            total = phi_entropy(phi, FiniteRandomVariable(f, Dist(px)))
            inner = conditional_phi_entropy_mean(phi, joint, f)
            outer = phi_entropy(phi, FiniteRandomVariable(joint.mass.T @ f / pz, Dist(pz)))
            assert abs(total - inner - outer) < 1e-10


def test_statistical_information_examples():
    assert statistical_information(0.0, bern(0.2), bern(0.9)) == 0.0
    assert statistical_information(1.0, bern(0.2), bern(0.9)) == 0.0
    assert statistical_information(0.3, bern(0.4), bern(0.4)) == 0.0
    assert statistical_information(0.5, bern(0.0), bern(1.0)) == pytest.approx(0.5, abs=1e-15)
    with pytest.raises(ContractError):
        statistical_information(1.5, bern(0.2), bern(0.3))


def test_phi_information_examples():
    assert phi_information(KL, JointLaw(np.outer([0.3, 0.7], [0.6, 0.4]))) == pytest.approx(0.0, abs=1e-15)
    for n in (2, 3, 5):
        assert phi_information(CHI2, JointLaw(np.eye(n)[::-1] / n)) == pytest.approx(n - 1, abs=1e-12)
    kl = phi_information(KL, JointLaw.from_pair(bern(0.5), bsc(0.1)))
    assert kl == pytest.approx(math.log(2) - O.binary_entropy_nats(0.1), abs=1e-14)


def test_phi_information_rejects_vanishing_marginal():
    with pytest.raises(ContractError) as err:
        phi_information(KL, JointLaw(np.array([[0.5, 0.0], [0.5, 0.0]])))
    assert err.value.code == E.NOT_STRICTLY_POSITIVE


def test_data_processing_on_random_instances(rng):
    for _ in range(200):
        n, m = rng.integers(2, 6, size=2)
        nu, mu = rng.dirichlet(np.ones(n)), rng.dirichlet(np.ones(n))
        k = rng.dirichlet(np.ones(m), size=n)
        for phi in (KL, CHI2, HELLINGER, TV, lecam(0.3), alpha(1.5)):
            before = phi_divergence(phi, Dist(nu), Dist(mu))
            after = phi_divergence(phi, Dist(nu @ k), Dist(mu @ k))
            assert after <= before + 1e-10


def test_joint_convexity(rng):
    for _ in range(100):
        n1, n2, m1, m2 = rng.dirichlet(np.ones(4), size=4)
        for phi in (KL, CHI2, HELLINGER, TV, alpha(1.5)):
            lhs = phi_divergence(phi, Dist((n1 + n2) / 2), Dist((m1 + m2) / 2))
            rhs = 0.5 * phi_divergence(phi, Dist(n1), Dist(m1)) + 0.5 * phi_divergence(phi, Dist(n2), Dist(m2))
            assert lhs <= rhs + 1e-10


def test_entropy_sandwich_lemma(rng):
    assert L.entropy_sandwich(rng) <= 1e-10


def test_variational_conditional_entropy_lemma(rng):
    assert L.variational_conditional_entropy(rng, count=40) <= 1e-6


def test_zero_derivative_lemma(rng):
    assert L.zero_derivative(rng) <= 1e-6
