import math

import numpy as np
import pytest

from contractkit import (
    CHI2, HELLINGER, KL, TV, Alphabet, Channel, ContractError, Dist, PhiFlags, alpha, bern, bsc,
    check_generator, lecam, parse_phi, phi_eval, user_generator, validate_admissible,
)
from contractkit import errors as E

CATALOG = [KL, CHI2, TV, HELLINGER, lecam(0.3), lecam(0.5), alpha(1.5), alpha(2.0)]


def test_alphabet_rejects_bad_labels():
    with pytest.raises(ContractError) as err:
        Alphabet(2, ("a", "a"))
    assert err.value.code == E.VALIDATION
    with pytest.raises(ContractError):
        Alphabet(3, ("a", "b"))
    with pytest.raises(ContractError):
        Alphabet(0)


def test_dist_validation_and_immutability():
    d = Dist([0.25, 0.75])
    assert d.strictly_positive
    with pytest.raises(ValueError):
        d.mass[0] = 0.5
    with pytest.raises(ContractError) as err:
        Dist([0.5, 0.6])
    assert err.value.code == E.VALIDATION
    with pytest.raises(ContractError) as err:
        Dist([1.2, -0.2])
    assert err.value.index == 1
    assert not Dist([1.0, 0.0]).strictly_positive


def test_channel_validation_names_row():
    with pytest.raises(ContractError) as err:
        Channel([[0.5, 0.5], [0.2, 0.7]])
    assert err.value.index == 1
    with pytest.raises(ContractError):
        Channel([[1.1, -0.1], [0.5, 0.5]])


def test_admissible_examples():
    pair = validate_admissible(bern(0.5), bsc(0.1))
    np.testing.assert_allclose(pair.output_law.mass, [0.5, 0.5], atol=1e-15)
    pair = validate_admissible(bern(0.3), bsc(0.1))
    np.testing.assert_allclose(pair.output_law.mass[1], 0.34, atol=1e-15)
    with pytest.raises(ContractError) as err:
        validate_admissible(bern(0.0), bsc(0.1))
    assert err.value.code == E.NOT_STRICTLY_POSITIVE and err.value.index == 1
    with pytest.raises(ContractError) as err:
        validate_admissible(Dist([0.2, 0.3, 0.5]), bsc(0.1))
    assert err.value.code == E.ALPHABET_MISMATCH


def test_admissible_rejects_vanishing_output():
    with pytest.raises(ContractError) as err:
        validate_admissible(bern(0.5), Channel([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]]))
    assert err.value.code == E.NOT_STRICTLY_POSITIVE and err.value.index == 2


def test_phi_eval_examples():
    assert phi_eval(KL, 1.0) == 0.0
    assert phi_eval(KL, math.e, "psi") == pytest.approx(1.0, abs=1e-15)
    assert phi_eval(CHI2, 3.0, 2) == 2.0
    assert phi_eval(KL, 0.0) == 0.0
    assert phi_eval(TV, 0.0) == 0.5
    with pytest.raises(ContractError) as err:
        phi_eval(TV, 1.0, 1)
    assert err.value.code == E.DERIVATIVE_UNAVAILABLE
    with pytest.raises(ContractError) as err:
        phi_eval(KL, -0.1)
    assert err.value.code == E.DOMAIN


@pytest.mark.parametrize("phi", CATALOG, ids=lambda p: p.name)
def test_catalog_generators_pass_spot_checks(phi):
    assert check_generator(phi, seed=3) == []


@pytest.mark.parametrize("phi", CATALOG, ids=lambda p: p.name)
def test_generator_vanishes_at_one_and_derivatives_match(phi):
    assert abs(phi_eval(phi, 1.0)) < 1e-15 or phi.name.startswith("alpha")
    if phi.deriv1 is None:
        return
    for u in (0.3, 1.0, 2.5):
        h = 1e-6
        fd1 = (phi_eval(phi, u + h) - phi_eval(phi, u - h)) / (2 * h)
        assert phi_eval(phi, u, 1) == pytest.approx(fd1, rel=1e-6, abs=1e-8)
        fd2 = (phi_eval(phi, u + 1e-4, 1) - phi_eval(phi, u - 1e-4, 1)) / 2e-4
        assert phi_eval(phi, u, 2) == pytest.approx(fd2, rel=1e-6, abs=1e-8)


@pytest.mark.parametrize("phi", [KL, CHI2, HELLINGER, lecam(0.4), alpha(1.5)], ids=lambda p: p.name)
def test_psi_prime_at_one(phi):
    h = 1e-5
    fd = (phi.psi(1 + h) - phi.psi(1 - h)) / (2 * h)
    assert phi.psi_prime_at_1() == pytest.approx(float(fd), rel=1e-7)


def test_homogeneity_on_random_variables(rng):
    for phi in (KL, CHI2, alpha(1.5), alpha(2.0)):
        for _ in range(20):
            vals = rng.uniform(0.05, 3.0, 5)
            probs = rng.dirichlet(np.ones(5))

            def ent(v):
                return float(probs @ phi_eval(phi, v)) - phi_eval(phi, float(probs @ v))

            for c in (0.5, 2.0, 7.0):
                assert ent(c * vals) == pytest.approx(phi.kappa(c) * ent(vals), rel=1e-10, abs=1e-12)


def test_parse_phi_catalog():
    assert parse_phi("KL") is KL
    assert parse_phi("lecam:0.25").name == "lecam:0.25"
    assert parse_phi("alpha:1.5").name == "alpha:1.5"
    for bad in ("foo", "lecam:x", "alpha:3", "lecam:1.5"):
        with pytest.raises(ContractError):
            parse_phi(bad)


def test_user_generator_warns_on_false_class_c_flag():
    with pytest.warns(RuntimeWarning, match="concave"):
        user_generator("cube", lambda u: (u - 1.0) ** 4, 1.0, lambda u: 4 * (u - 1) ** 3,
                       lambda u: 12 * (u - 1) ** 2 + 1e-3,
                       flags=PhiFlags(subadditive_class_C=True))


def test_user_generator_warns_on_nonconvex():
    with pytest.warns(RuntimeWarning, match="convexity"):
        user_generator("concave", lambda u: np.sqrt(u), 0.0)
