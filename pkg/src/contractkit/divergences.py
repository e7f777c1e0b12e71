"""Phi-entropies, Phi-divergences, statistical information and mutual Phi-information."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import errors as E
from .errors import ContractError
from .foundation import TOL, Alphabet, Channel, Dist, PhiGenerator, phi_eval


def _sum(terms: np.ndarray) -> float:
    # exact-rounding summation for long alphabets
    if terms.size > 64:
        return math.fsum(terms.tolist())
    return float(terms.sum())


@dataclass(frozen=True, eq=False)
class FiniteRandomVariable:
    """Real random variable taking ``support[i]`` with probability ``law.mass[i]``."""

    support: np.ndarray
    law: Dist

    def __post_init__(self):
        s = np.array(self.support, dtype=float, copy=True)
        if s.shape != self.law.mass.shape:
            raise ContractError(E.ALPHABET_MISMATCH, "support and law differ in length")
        if not np.all(np.isfinite(s)):
            raise ContractError(E.DOMAIN, "support values must be finite")
        s.setflags(write=False)
        object.__setattr__(self, "support", s)

    def mean(self) -> float:
        return float(self.law.mass @ self.support)


@dataclass(frozen=True, eq=False)
class JointLaw:
    """Joint probability matrix ``mass[x, z]``."""

    mass: np.ndarray
    x_alphabet: Alphabet = None
    z_alphabet: Alphabet = None

    def __post_init__(self):
        m = np.array(self.mass, dtype=float, copy=True)
        if m.ndim != 2:
            raise ContractError(E.VALIDATION, "joint law must be a matrix")
        if np.any(m < 0) or not np.all(np.isfinite(m)):
            raise ContractError(E.VALIDATION, "joint law entries must be finite and nonnegative")
        if abs(m.sum() - 1.0) > TOL:
            raise ContractError(E.VALIDATION, f"joint law sums to {m.sum()!r}, not 1")
        m.setflags(write=False)
        object.__setattr__(self, "mass", m)
        if self.x_alphabet is None:
            object.__setattr__(self, "x_alphabet", Alphabet(m.shape[0]))
        if self.z_alphabet is None:
            object.__setattr__(self, "z_alphabet", Alphabet(m.shape[1]))

    @classmethod
    def from_pair(cls, mu: Dist, k: Channel) -> "JointLaw":
        """Law of (X, Y) with X ~ mu and Y | X ~ k."""
        if mu.size != k.input.size:
            raise ContractError(E.ALPHABET_MISMATCH, "input law and channel disagree")
        return cls(mu.mass[:, None] * k.rows, mu.alphabet, k.output)

    def marginal_x(self) -> np.ndarray:
        return self.mass.sum(axis=1)

    def marginal_z(self) -> np.ndarray:
        return self.mass.sum(axis=0)

    def transpose(self) -> "JointLaw":
        return JointLaw(self.mass.T, self.z_alphabet, self.x_alphabet)


def entropy_of(phi: PhiGenerator, values, probs) -> float:
    """Ent_Phi of the variable taking ``values`` with probabilities ``probs``."""
    values = np.asarray(values, dtype=float)
    probs = np.asarray(probs, dtype=float)
    if np.any(values < 0):
        raise ContractError(E.DOMAIN, "Phi-entropy needs nonnegative values")
    mean = float(probs @ values)
    keep = probs > 0
    return _sum(probs[keep] * phi_eval(phi, values[keep])) - phi_eval(phi, mean)


def phi_entropy(phi: PhiGenerator, u: FiniteRandomVariable) -> float:
    """Ent_Phi[U] = E Phi(U) - Phi(E U)."""
    return entropy_of(phi, u.support, u.law.mass)


def _ratio(nu: np.ndarray, mu: np.ndarray) -> np.ndarray:
    if nu.shape != mu.shape:
        raise ContractError(E.ALPHABET_MISMATCH, "laws live on different alphabets")
    zero = np.flatnonzero(mu <= 0)
    if zero.size:
        raise ContractError(E.NOT_STRICTLY_POSITIVE, f"reference law vanishes at index {zero[0]}", int(zero[0]))
    return nu / mu


def divergence_arrays(phi: PhiGenerator, nu: np.ndarray, mu: np.ndarray) -> float:
    """D_Phi(nu || mu) on raw arrays; mu must be strictly positive."""
    mu = np.asarray(mu, float)
    r = _ratio(np.asarray(nu, float), mu)
    if phi.deriv2 is None:
        return _sum(mu * phi_eval(phi, r)) - phi_eval(phi, 1.0)
    # subtract the tangent at 1 (its mu-mean vanishes) so that nu close to mu keeps full precision
    one = np.array(1.0)
    h = r - 1.0
    terms = phi_eval(phi, r) - phi_eval(phi, 1.0) - float(phi.deriv1(one)) * h
    near = np.abs(h) < 1e-4
    if near.any():
        d3 = float(phi.deriv3(one)) if phi.deriv3 is not None else 0.0
        hn = h[near]
        terms[near] = 0.5 * float(phi.deriv2(one)) * hn**2 + d3 * hn**3 / 6.0
    return _sum(mu * terms)


def phi_divergence(phi: PhiGenerator, nu: Dist, mu: Dist) -> float:
    """D_Phi(nu || mu) = E_mu Phi(d nu / d mu) - Phi(1)."""
    return divergence_arrays(phi, nu.mass, mu.mass)


def conditional_phi_entropy_mean(phi: PhiGenerator, joint: JointLaw, f) -> float:
    """E[Ent_Phi[f(X) | Z]] under the joint law of (X, Z)."""
    f = np.asarray(f, dtype=float)
    if f.shape != (joint.mass.shape[0],):
        raise ContractError(E.ALPHABET_MISMATCH, "function length differs from the X alphabet")
    pz = joint.marginal_z()
    total = 0.0
    for z in np.flatnonzero(pz > 0):
        total += pz[z] * entropy_of(phi, f, joint.mass[:, z] / pz[z])
    return float(total)


def statistical_information(lam: float, nu: Dist, mu: Dist) -> float:
    """Bayes risk reduction B_lam(nu||mu) = 1/2 sum|lam nu - (1-lam) mu| - 1/2 |1 - 2 lam|."""
    if not 0.0 <= lam <= 1.0:
        raise ContractError(E.DOMAIN, f"lambda must lie in [0,1], got {lam}")
    if nu.size != mu.size:
        raise ContractError(E.ALPHABET_MISMATCH, "laws live on different alphabets")
    diff = lam * nu.mass - (1.0 - lam) * mu.mass
    return max(0.0, 0.5 * _sum(np.abs(diff)) - 0.5 * abs(1.0 - 2.0 * lam))


def phi_information(phi: PhiGenerator, joint: JointLaw) -> float:
    """I_Phi(U;V) = sum_u P(u) D_Phi(P(.|u) || P_V) for the joint law of (U, V)."""
    pu = joint.marginal_x()
    pv = joint.marginal_z()
    for name, m in (("first", pu), ("second", pv)):
        zero = np.flatnonzero(m <= 0)
        if zero.size:
            raise ContractError(E.NOT_STRICTLY_POSITIVE, f"{name} marginal vanishes at {zero[0]}", int(zero[0]))
    total = 0.0
    for u in range(pu.size):
        total += pu[u] * divergence_arrays(phi, joint.mass[u] / pu[u], pv)
    return float(total)


def information_from_pair(phi: PhiGenerator, pu: np.ndarray, kernel: np.ndarray) -> float:
    """I_Phi for U ~ pu, V | U ~ kernel; zero-mass input symbols are skipped."""
    pv = pu @ kernel
    total = 0.0
    for u in np.flatnonzero(pu > 0):
        total += pu[u] * divergence_arrays(phi, kernel[u], pv)
    return float(total)
