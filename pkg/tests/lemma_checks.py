"""Randomized checks of the auxiliary lemmas; each returns the worst violation seen."""

from __future__ import annotations

import numpy as np

from contractkit import (
    CHI2, HELLINGER, KL, Dist, JointLaw, adjoint, alpha, apply, apply_fn, conditional_phi_entropy_mean,
    exchangeable_pair, lecam, mmse_cov, phi_eval,
)
from contractkit.divergences import entropy_of
from conftest import random_pair

SMOOTH = [KL, CHI2, HELLINGER, lecam(0.3), alpha(1.5)]


def _unit_mean_variable(rng, n=None):
    n = n or int(rng.integers(2, 6))
    probs = rng.dirichlet(np.ones(n))
    vals = rng.uniform(0.0, 3.0, n)
    vals = vals / (probs @ vals)
    return vals, probs


def density_update(rng, count=100):
    worst = 0.0
    for _ in range(count):
        pair = random_pair(rng)
        nu = Dist(rng.dirichlet(np.ones(pair.mu.size)))
        f = nu.mass / pair.mu.mass
        lhs = apply_fn(adjoint(pair), f)
        rhs = apply(pair.k, nu).mass / pair.output_law.mass
        worst = max(worst, float(np.abs(lhs - rhs).max()))
    return worst


def entropy_sandwich(rng, count=100):
    """Largest violation of Phi''(max U)/2 Var U <= Ent U <= Psi(1+Var U) - Psi(1)."""
    worst = 0.0
    for _ in range(count):
        vals, probs = _unit_mean_variable(rng)
        var = float(probs @ (vals - 1.0) ** 2)
        for phi in SMOOTH:
            ent = entropy_of(phi, vals, probs)
            if phi.flags.psi_concave:
                upper = float(phi.psi(1.0 + var) - phi.psi(1.0))
                worst = max(worst, ent - upper)
                worst = max(worst, upper - phi.psi_prime_at_1() * var)
            if phi.flags.d2_nonincreasing:
                lower = 0.5 * phi_eval(phi, vals.max(), 2) * var
                worst = max(worst, lower - ent)
    return worst


def variational_conditional_entropy(rng, count=100, grid=4001):
    """|E[Ent[U|Z]] - inf over gridded xi| and the gap at xi = E[U|Z]."""
    worst = 0.0
    for _ in range(count):
        nx, nz = int(rng.integers(2, 5)), int(rng.integers(2, 4))
        joint = rng.dirichlet(np.ones(nx * nz)).reshape(nx, nz)
        u = rng.uniform(0.1, 3.0, nx)
        pz = joint.sum(axis=0)
        for phi in SMOOTH:
            exact = conditional_phi_entropy_mean(phi, JointLaw(joint), u)
            total_at_mean = 0.0
            total_grid = 0.0
            xs = np.linspace(u.min(), u.max(), grid)
            for z in range(nz):
                w = joint[:, z]
                m = float(w @ u) / pz[z]
                cand = np.append(xs, m)
                vals = (w @ phi_eval(phi, u))[None] - pz[z] * phi_eval(phi, cand) \
                    - (float(w @ u) - pz[z] * cand) * phi_eval(phi, cand, 1)
                total_grid += float(vals[:-1].min())
                total_at_mean += float(vals[-1])
            worst = max(worst, abs(total_at_mean - exact), total_grid - exact, exact - total_grid - 1e-12)
    return worst


def zero_derivative(rng, count=100, h=1e-4):
    worst = 0.0
    for _ in range(count):
        vals, probs = _unit_mean_variable(rng)
        for phi in SMOOTH:
            def ent(e):
                return entropy_of(phi, (1.0 - e * vals) / (1.0 - e), probs)

            worst = max(worst, abs(ent(h) - ent(-h)) / (2 * h))
    return worst


def exchangeable_identities(rng, count=100):
    """Worst residual across the two exchangeable-pair forms, symmetry, linearity and degeneracy."""
    worst = 0.0
    for _ in range(count):
        pair = random_pair(rng)
        n = pair.mu.size
        joint = JointLaw.from_pair(pair.mu, pair.k)
        ex = exchangeable_pair(pair).joint.mass
        f, g, h = rng.normal(size=(3, n))
        a, b = rng.normal(size=2)
        e_fg = mmse_cov(joint, f, g)
        df = f[:, None] - f[None, :]
        dg = g[:, None] - g[None, :]
        exch1 = 0.5 * float(np.sum(ex * df * dg))
        exch2 = float(np.sum(ex * np.clip(df, 0, None) * dg))
        worst = max(worst, abs(e_fg - exch1), abs(e_fg - exch2))
        worst = max(worst, abs(e_fg - mmse_cov(joint, g, f)))
        lin = mmse_cov(joint, a * f + b * h, g) - a * e_fg - b * mmse_cov(joint, h, g)
        worst = max(worst, abs(lin))
        worst = max(worst, abs(mmse_cov(joint, np.full(n, 2.5), g)))
        worst = max(worst, float(np.abs(ex - ex.T).max()))
    return worst


ALL = {
    "density_update": (density_update, 1e-12),
    "entropy_sandwich": (entropy_sandwich, 1e-10),
    "variational_conditional_entropy": (variational_conditional_entropy, 1e-6),
    "zero_derivative": (zero_derivative, 1e-6),
    "exchangeable_identities": (exchangeable_identities, 1e-12),
}
