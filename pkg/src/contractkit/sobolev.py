"""Dirichlet forms, Poincare and log-Sobolev constants, Gibbs-sampler factorizations.

A reversible pair (mu, M) "factors through" a channel K when M = K* K with
the adjoint taken under mu. Such factorizations tie the functional
inequalities of M to contraction constants of K.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.optimize import least_squares, minimize
from scipy.special import logsumexp

from . import errors as E
from .channels import adjoint, compose
from .contraction import eta_chi2, eta_numeric
from .divergences import JointLaw, conditional_phi_entropy_mean, entropy_of
from .errors import ContractError
from .foundation import KL, AdmissiblePair, Channel, Dist, PhiGenerator, bsc, validate_admissible

BALANCE_TOL = 1e-12
FACTOR_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class ReversiblePair:
    """Law mu with a Markov kernel M satisfying detailed balance."""

    mu: Dist
    m: Channel

    def __post_init__(self):
        mu, m = self.mu.mass, self.m.rows
        if m.shape[0] != m.shape[1] or m.shape[0] != mu.size:
            raise ContractError(E.ALPHABET_MISMATCH, "kernel must be square on the alphabet of mu")
        zero = np.flatnonzero(mu <= 0)
        if zero.size:
            raise ContractError(E.NOT_STRICTLY_POSITIVE, f"mu vanishes at {zero[0]}", int(zero[0]))
        flow = mu[:, None] * m
        gap = np.abs(flow - flow.T)
        if gap.max() > BALANCE_TOL:
            i = int(np.unravel_index(np.argmax(gap), gap.shape)[0])
            raise ContractError(E.VALIDATION, f"detailed balance fails at row {i}", i)
        if np.abs(mu @ m - mu).max() > BALANCE_TOL:
            raise ContractError(E.VALIDATION, "mu is not invariant under M")

    @property
    def flow(self) -> np.ndarray:
        """Symmetric edge weights mu(x) M(x'|x)."""
        w = self.mu.mass[:, None] * self.m.rows
        return 0.5 * (w + w.T)

    @property
    def size(self) -> int:
        return self.mu.size


@dataclass
class Factorization:
    """Channel K with M = K* K, plus the achieved max-abs residual."""

    k: Channel
    residual: float
    strategy: str
    pair: AdmissiblePair

    @property
    def accepted(self) -> bool:
        return self.residual < FACTOR_TOL


@dataclass
class PoincareResult:
    lambda_tilde: float
    abs_gap: float


@dataclass
class LsiResult:
    value: float
    converged: bool = True
    minimizer: Optional[np.ndarray] = None


# ---------------------------------------------------------------------------
# quadratic forms


def mmse_cov(joint: JointLaw, f, g) -> float:
    """E[(f(X) - E[f(X)|Z]) (g(X) - E[g(X)|Z])]."""
    f = np.asarray(f, float)
    g = np.asarray(g, float)
    p = joint.mass
    pz = joint.marginal_z()
    keep = pz > 0
    ef = (f @ p)[keep] / pz[keep]
    eg = (g @ p)[keep] / pz[keep]
    return float(joint.marginal_x() @ (f * g) - pz[keep] @ (ef * eg))


def dirichlet_form(rp: ReversiblePair, f, g) -> float:
    """1/2 E[(f(X) - f(X')) (g(X) - g(X'))] with X' | X ~ M."""
    f = np.asarray(f, float)
    g = np.asarray(g, float)
    df = f[:, None] - f[None, :]
    dg = g[:, None] - g[None, :]
    return float(0.5 * np.sum(rp.flow * df * dg))


def _sym(rp: ReversiblePair) -> np.ndarray:
    r = np.sqrt(rp.mu.mass)
    s = r[:, None] * rp.m.rows / r[None, :]
    return 0.5 * (s + s.T)


def poincare_constant(rp: ReversiblePair) -> PoincareResult:
    """Spectral gap 1 - lambda_2 and absolute gap 1 - max(|lambda_2|, |lambda_n|)."""
    ev = np.sort(np.linalg.eigvalsh(_sym(rp)))[::-1]
    if ev.size < 2:
        return PoincareResult(1.0, 1.0)
    return PoincareResult(float(1.0 - ev[1]), float(1.0 - max(abs(ev[1]), abs(ev[-1]))))


# ---------------------------------------------------------------------------
# log-Sobolev constants


def _ent(vals, mu):
    m = float(mu @ vals)
    return float(mu @ (vals * np.log(vals))) - m * math.log(m)


def _ent_terms(mu, vals, logv):
    """Ent of vals under mu as a sum of nonnegative terms m*(r log r - r + 1), r = vals/m."""
    m = float(mu @ vals)
    logr = logv - math.log(m)
    h = np.expm1(logr)
    small = np.abs(h) < 1e-3
    t = np.where(small, h * h * (0.5 - h / 6.0 + h * h / 12.0 - h ** 3 / 20.0),
                 (1.0 + h) * logr - h)
    return m * math.fsum(mu * t), m, logr


def _lsi_objective(rp: ReversiblePair, p: int, floor: float):
    mu = rp.mu.mass
    w = rp.flow

    def full(free):
        return np.concatenate([[0.0], free])

    def obj1(free):
        g = full(free)
        f = np.exp(g)
        ent, m, logr = _ent_terms(mu, f, g)
        df = f[:, None] - f[None, :]
        dg = g[:, None] - g[None, :]
        dir_ = 0.5 * float(np.sum(w * df * dg))
        if ent < 1e-20 * m:
            return floor, np.zeros_like(free)
        val = 0.25 * dir_ / ent
        d_dir = np.sum(w * (f[:, None] * dg + df), axis=1)
        d_ent = mu * f * logr
        grad = 0.25 * (d_dir - 4.0 * val * d_ent) / ent
        return val, grad[1:]

    def obj2(free):
        g = full(free)
        f = np.exp(g)
        h = f * f
        ent, m, logr = _ent_terms(mu, h, 2.0 * g)
        df = f[:, None] - f[None, :]
        dir_ = 0.5 * float(np.sum(w * df * df))
        if ent < 1e-20 * m:
            return floor, np.zeros_like(free)
        val = dir_ / ent
        d_dir = 2.0 * f * np.sum(w * df, axis=1)
        d_ent = 2.0 * mu * h * logr
        grad = (d_dir - val * d_ent) / ent
        return val, grad[1:]

    return obj1 if p == 1 else obj2


def log_sobolev_constant(rp: ReversiblePair, p: int = 1, starts: int = 32, tol: float = 1e-9,
                         seed: int = 0, max_iters: int = 2000) -> LsiResult:
    """Log-Sobolev constant of order p in {0, 1, 2}.

    Order 0 is half the spectral gap. Orders 1 and 2 are numeric infima over
    positive f = exp(g); since the ratio tends to half the spectral gap as f
    approaches a constant, that value also caps the result.
    """
    if p not in (0, 1, 2):
        raise ContractError(E.DOMAIN, f"order must be 0, 1 or 2, got {p}")
    half_gap = 0.5 * poincare_constant(rp).lambda_tilde
    n = rp.size
    if p == 0 or n < 2:
        return LsiResult(half_gap)
    obj = _lsi_objective(rp, p, half_gap)
    best = (half_gap, None)
    n_ok = 0
    scales = (0.3, 1.0, 3.0, 8.0)
    for i in range(starts):
        rng = np.random.default_rng([seed, i])
        if i < n - 1:
            x0 = np.zeros(n - 1)
            x0[i] = 4.0
        elif i < 2 * (n - 1):
            x0 = np.zeros(n - 1)
            x0[i - (n - 1)] = -4.0
        else:
            x0 = rng.normal(0.0, scales[i % len(scales)], n - 1)
        res = minimize(obj, x0, jac=True, method="L-BFGS-B", bounds=[(-30.0, 30.0)] * (n - 1),
                       options={"maxiter": max_iters, "ftol": 1e-15, "gtol": tol * 1e-2})
        n_ok += bool(res.success) or res.nit < max_iters
        if res.fun < best[0]:
            best = (float(res.fun), np.exp(np.concatenate([[0.0], res.x])))
    return LsiResult(max(best[0], 0.0), n_ok > 0, best[1])


# ---------------------------------------------------------------------------
# factorizations


def _factorization(rp: ReversiblePair, rows: np.ndarray, strategy: str) -> Factorization:
    rows = np.clip(rows, 0.0, None)
    rows = rows / rows.sum(axis=1, keepdims=True)
    out = rp.mu.mass @ rows
    rows = rows[:, out > 1e-15]
    rows = rows / rows.sum(axis=1, keepdims=True)
    k = Channel(rows)
    pair = validate_admissible(rp.mu, k)
    m = compose(adjoint(pair), k).rows
    return Factorization(k, float(np.abs(m - rp.m.rows).max()), strategy, pair)


def _dsbs(rp: ReversiblePair):
    mu, m = rp.mu.mass, rp.m.rows
    if rp.size != 2 or abs(mu[0] - 0.5) > 1e-12:
        return None
    eps = m[0, 1]
    if abs(m[1, 0] - eps) > 1e-12:
        return None
    if eps > 0.5 + 1e-15:
        raise ContractError(E.NOT_PSD, "crossover above 1/2 gives a kernel that is not positive semidefinite")
    delta = 0.5 * (1.0 + math.sqrt(max(0.0, 1.0 - 2.0 * eps)))
    return _factorization(rp, bsc(delta).rows, "dsbs_closed_form")


def _spectral(rp: ReversiblePair):
    s = _sym(rp)
    ev, vec = np.linalg.eigh(s)
    if ev.min() < -1e-12:
        raise ContractError(E.NOT_PSD, f"kernel has negative eigenvalue {ev.min():.3g} in L2(mu)")
    root = (vec * np.sqrt(np.clip(ev, 0.0, None))) @ vec.T
    r = np.sqrt(rp.mu.mass)
    k = root * r[None, :] / r[:, None]
    if k.min() < -1e-12:
        return None
    return _factorization(rp, k, "spectral_sqrt")


def _parametric(rp: ReversiblePair, family: Optional[Callable] = None, theta0=None,
                out_size: Optional[int] = None, starts: int = 8, seed: int = 0):
    n = rp.size
    if family is None:
        m_out = out_size or n

        def family(theta):
            z = theta.reshape(n, m_out)
            z = z - z.max(axis=1, keepdims=True)
            e = np.exp(z)
            return e / e.sum(axis=1, keepdims=True)

        dim = n * m_out
    else:
        dim = np.size(theta0)
    mu = rp.mu.mass

    def resid(theta):
        k = family(theta)
        out = mu @ k
        back = (mu[:, None] * k / np.maximum(out, 1e-300)[None, :])
        return (k @ back.T - rp.m.rows).ravel()

    best = None
    for i in range(starts):
        rng = np.random.default_rng([seed, i])
        x0 = np.asarray(theta0, float) if (theta0 is not None and i == 0) else rng.normal(0.0, 1.0, dim)
        sol = least_squares(resid, x0, xtol=1e-15, ftol=1e-15, gtol=1e-15, max_nfev=5000)
        if best is None or sol.cost < best.cost:
            best = sol
    return _factorization(rp, family(best.x), "parametric_search")


STRATEGIES = ("dsbs_closed_form", "spectral_sqrt", "parametric_search")


def factor_through(rp: ReversiblePair, strategy: str | Sequence[str] | None = None,
                   family: Optional[Callable] = None, theta0=None, out_size: Optional[int] = None) -> Factorization:
    """Find K with K* K = M, trying strategies in order and returning the first acceptance.

    ``family`` (a map from a parameter vector to a row-stochastic matrix) is
    used by the parametric search; without it the search runs over all
    channels with ``out_size`` outputs through a softmax parameterization.
    """
    if strategy is None:
        order = list(STRATEGIES)
    elif isinstance(strategy, str):
        order = [strategy]
    else:
        order = list(strategy)
    best = None
    not_psd = None
    for name in order:
        try:
            if name == "dsbs_closed_form":
                fact = _dsbs(rp)
            elif name == "spectral_sqrt":
                fact = _spectral(rp)
            elif name == "parametric_search":
                fact = _parametric(rp, family, theta0, out_size)
            else:
                raise ContractError(E.DOMAIN, f"unknown strategy {name!r}")
        except ContractError as err:
            if err.code != E.NOT_PSD:
                raise
            not_psd = err
            break  # K* K is always PSD, so no other strategy can succeed
        if fact is None:
            continue
        if fact.accepted:
            return fact
        if best is None or fact.residual < best.residual:
            best = fact
    if not_psd is not None:
        raise not_psd
    detail = "" if best is None else f" (best residual {best.residual:.3g})"
    raise ContractError(E.NO_FACTORIZATION_FOUND, "no strategy met the residual tolerance" + detail)


# ---------------------------------------------------------------------------
# bridges between contraction and functional inequalities


LOG_SOB_FACTOR = (1.0 - math.log(2.0)) * math.log(2.0) / 2.0


def jensen_gap_terms(phi: PhiGenerator, joint: JointLaw, f):
    """Return (E(f, Psi o f | Z), E[Ent_Phi[f|Z]], E[E[f|Z] Ent_{-Psi}[f|Z]])."""
    f = np.asarray(f, float)
    psi_f = phi.psi(f)
    lhs = mmse_cov(joint, f, psi_f)
    ent = conditional_phi_entropy_mean(phi, joint, f)
    pz = joint.marginal_z()
    gap = 0.0
    for z in np.flatnonzero(pz > 0):
        cond = joint.mass[:, z] / pz[z]
        mf = float(cond @ f)
        gap += pz[z] * mf * (-float(cond @ psi_f) + float(phi.psi(np.array(mf))))
    return lhs, ent, float(gap)


def sobolev_sdpi_bridge(rp: ReversiblePair, fact: Factorization, phi: PhiGenerator = KL,
                        n_random: int = 20, seed: int = 0, tol: float = 1e-5) -> dict:
    """Evaluate the inequalities linking contraction of K with the functional constants of M.

    Raises BRIDGE_VIOLATION if any check fails beyond tolerance.
    """
    if not fact.accepted:
        raise ContractError(E.DOMAIN, "factorization was not accepted")
    pair = fact.pair
    gap = poincare_constant(rp).lambda_tilde
    chi2, _ = eta_chi2(pair)
    eta = eta_numeric(KL, pair).estimate
    rho1 = log_sobolev_constant(rp, 1).value
    rho2 = log_sobolev_constant(rp, 2).value
    joint = JointLaw(pair.mu.mass[:, None] * pair.k.rows)
    checks = {}

    def record(name, ok, lhs, rhs):
        checks[name] = {"ok": bool(ok), "lhs": float(lhs), "rhs": float(rhs)}

    record("chi2_equals_one_minus_gap", abs(chi2 - (1.0 - gap)) <= 1e-8, chi2, 1.0 - gap)
    record("logsob_lower", 1.0 - eta <= 4.0 * rho1 + tol, 1.0 - eta, 4.0 * rho1)
    # E[Ent[f|Y]] >= c * rho_1(mu,K) * Ent f bounds eta by 1 - c * 4 rho~_1
    record("logsob_upper", eta <= 1.0 - LOG_SOB_FACTOR * 4.0 * rho1 + tol, eta, 1.0 - LOG_SOB_FACTOR * 4.0 * rho1)
    record("logsob2", eta <= 1.0 - rho2 + tol, eta, 1.0 - rho2)

    rng = np.random.default_rng(seed)
    psi_ok = math.isfinite(phi.phi_at_zero) and phi.flags.psi_concave and phi.kappa is not None
    eta_phi = eta_numeric(phi, pair).estimate if psi_ok and phi.flags.differentiable else None
    worst_gap = worst_cov = 0.0
    worst_sob = math.inf
    mu = pair.mu.mass
    indep = JointLaw(mu[:, None] * np.ones((1, 1)))
    for _ in range(n_random):
        f = rng.uniform(0.05, 3.0, rp.size)
        lhs, ent, gap_term = jensen_gap_terms(phi, joint, f)
        worst_gap = max(worst_gap, abs(lhs - ent - gap_term))
        c_lhs, c_ent, c_gap = jensen_gap_terms(phi, indep, f)
        worst_cov = max(worst_cov, abs(c_lhs - c_ent - c_gap))
        if eta_phi is not None and eta_phi < 1.0 - 1e-9:
            slack = lhs / (1.0 - eta_phi) - entropy_of(phi, f, mu)
            worst_sob = min(worst_sob, slack)
    record("jensen_gap_identity", worst_gap <= 1e-12, worst_gap, 0.0)
    record("covariance_identity", worst_cov <= 1e-12, worst_cov, 0.0)
    if eta_phi is not None and math.isfinite(worst_sob):
        record("phi_sobolev", worst_sob >= -1e-8, worst_sob, 0.0)

    report = {
        "lambda_tilde": gap, "eta_chi2": chi2, "eta_kl": eta, "rho1": rho1, "rho2": rho2,
        "eta_phi": eta_phi, "phi": phi.name, "checks": checks,
    }
    failed = [k for k, v in checks.items() if not v["ok"]]
    if failed:
        raise ContractError(E.BRIDGE_VIOLATION, f"failed checks: {', '.join(failed)}")
    return report


@dataclass
class HerbstResult:
    grad: np.ndarray
    grad_inf_norm: float
    mlsi_c: float
    subgauss_v: float
    subgauss_v_neg: float
    check: bool
    mlsi_check: bool
    tail_check: bool
    lambdas: np.ndarray = field(repr=False, default=None)
    log_mgf: np.ndarray = field(repr=False, default=None)


def positive_gradient(m: np.ndarray, f) -> np.ndarray:
    """sqrt(sum_x' M(x'|x) (f(x) - f(x'))_+^2)."""
    f = np.asarray(f, float)
    d = np.clip(f[:, None] - f[None, :], 0.0, None)
    return np.sqrt(np.sum(m * d * d, axis=1))


def herbst(rp: ReversiblePair, facts: Sequence[Factorization], f, lambdas=None,
           etas: Sequence[float] | None = None) -> HerbstResult:
    """Sub-Gaussian constant for f from the modified log-Sobolev inequality.

    c = min over factorizations of 2 / (1 - eta(mu, K)); v = c ||grad f||^2.
    Positive lambda uses v(f), negative lambda uses v(-f).
    """
    if not facts:
        raise ContractError(E.DOMAIN, "at least one factorization is required")
    for fa in facts:
        if not fa.accepted:
            raise ContractError(E.DOMAIN, "factorization was not accepted")
    f = np.asarray(f, float)
    mu = rp.mu.mass
    m = rp.m.rows
    if etas is None:
        etas = [eta_numeric(KL, fa.pair).estimate for fa in facts]
    c = min((2.0 / (1.0 - e) if e < 1.0 else math.inf) for e in etas)
    grad = positive_gradient(m, f)
    gneg = positive_gradient(m, -f)
    norm = float(grad.max())
    v = c * norm**2 if norm > 0 else 0.0
    v_neg = c * float(gneg.max()) ** 2 if gneg.max() > 0 else 0.0
    lam = np.linspace(-5.0, 5.0, 101) if lambdas is None else np.asarray(lambdas, float)
    fc = f - mu @ f
    logm = np.array([logsumexp(l * fc, b=mu) for l in lam])
    bound = np.where(lam >= 0, v, v_neg) * lam**2 / 2.0
    check = bool(np.all(logm <= bound + 1e-12))

    # modified log-Sobolev inequality at f itself
    ef = np.exp(f - f.max())
    ent = _ent(ef, mu) if np.ptp(f) > 0 else 0.0
    mlsi = bool(ent <= 0.5 * c * float(mu @ (ef * grad**2)) * (1 + 1e-12) + 1e-15)

    # exact tails P(f - E f >= t) against exp(-t^2 / 2v)
    tail = True
    for t in np.unique(fc[fc > 0]):
        prob = float(mu[fc >= t - 1e-15].sum())
        if v > 0 and prob > math.exp(-t * t / (2.0 * v)) + 1e-12:
            tail = False
    return HerbstResult(grad, norm, c, v, v_neg, check, mlsi, tail, lam, logm)
