"""Strong data-processing constants and the bounds that sandwich them.

The central quantity is

    eta_Phi(mu, K) = sup_{nu != mu} D_Phi(nu K || mu K) / D_Phi(nu || mu).

For chi-square it is the squared second singular value of a normalized
version of K; for other generators it is estimated by multi-start ascent and
bracketed by closed-form upper bounds.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from itertools import combinations
from typing import Optional, Sequence

import numpy as np
from scipy.optimize import minimize, minimize_scalar

from . import errors as E
from .channels import adjoint, doeblin_alpha, mixture_local, tensor_many
from .divergences import entropy_of
from .errors import ContractError
from .foundation import (
    KL, AdmissiblePair, Channel, Dist, Graph, PhiGenerator, lecam, validate_admissible,
)

# ---------------------------------------------------------------------------
# reports


@dataclass
class EtaReport:
    """Estimate of eta_Phi(mu, K) with its lower and upper bound ladder."""

    phi_name: str
    estimate: Optional[float]
    witness: Optional[Dist] = None
    lower_bounds: dict = field(default_factory=dict)
    upper_bounds: dict = field(default_factory=dict)
    applicability: dict = field(default_factory=dict)
    converged: bool = True
    s: float = float("nan")

    def min_upper(self) -> float:
        vals = [v for k, v in self.upper_bounds.items() if self.applicability.get(k, (True, ""))[0]]
        return min(vals) if vals else 1.0

    def max_lower(self) -> float:
        vals = [v for k, v in self.lower_bounds.items() if self.applicability.get(k, (True, ""))[0]]
        return max(vals) if vals else 0.0

    def as_dict(self) -> dict:
        return {
            "phi": self.phi_name,
            "estimate": self.estimate,
            "converged": self.converged,
            "maximal_correlation": self.s,
            "witness": None if self.witness is None else self.witness.mass.tolist(),
            "lower_bounds": dict(self.lower_bounds),
            "upper_bounds": dict(self.upper_bounds),
            "applicability": {k: {"applies": v[0], "reason": v[1]} for k, v in self.applicability.items()},
        }


@dataclass
class ExtremalSolution:
    f: np.ndarray
    eta: float
    residual: float
    trivial: bool = False
    boundary: bool = False


# ---------------------------------------------------------------------------
# closed-form pieces


def dobrushin(k: Channel) -> float:
    """Largest total-variation distance between two rows of K.

    Uses the overlap form 1 - sum_y min(K(y|x), K(y|x')), which avoids
    subtracting nearly equal entries and is exact for binary symmetric rows.
    """
    rows = k.rows
    n = rows.shape[0]
    if n < 2:
        return 0.0
    i, j = np.triu_indices(n, 1)
    overlap = np.minimum(rows[i], rows[j]).sum(axis=1)
    return float(np.clip(1.0 - overlap.min(), 0.0, 1.0))


def _normalized_matrix(pair: AdmissiblePair) -> np.ndarray:
    return np.sqrt(pair.mu.mass)[:, None] * pair.k.rows / np.sqrt(pair.output_law.mass)[None, :]


def eta_chi2(pair: AdmissiblePair):
    """Return ``(s**2, s)`` where s is the second singular value of
    sqrt(mu(x)) K(y|x) / sqrt(muK(y)) (the maximal correlation)."""
    sv = np.linalg.svd(_normalized_matrix(pair), compute_uv=False)
    s = float(sv[1]) if sv.size > 1 else 0.0
    s = min(max(s, 0.0), 1.0)
    return s * s, s


def _singular_direction(pair: AdmissiblePair) -> np.ndarray:
    """Input-side function g with E_mu g = 0 attaining the maximal correlation."""
    u, _, _ = np.linalg.svd(_normalized_matrix(pair))
    if u.shape[1] < 2:
        return np.zeros(pair.mu.size)
    return u[:, 1] / np.sqrt(pair.mu.mass)


def pinsker_constant(p: float) -> float:
    """c(p) = (p - (1-p)) / (2 (log p - log(1-p))), with c(1/2) = 1/4."""
    x = 2.0 * p - 1.0
    if abs(x) >= 1.0:
        return 0.0
    if abs(x) < 1e-6:
        return 0.25 * (1.0 - x * x / 3.0)
    return x / (4.0 * math.atanh(x))


def balance_coefficient(mu: Dist | np.ndarray):
    """beta_mu = min{mu(A) : mu(A) >= 1/2}; returns ``(beta, exact)``.

    Exact subset scan for up to 20 symbols, greedy largest-first otherwise.
    """
    m = mu.mass if isinstance(mu, Dist) else np.asarray(mu, float)
    n = m.size
    if n <= 20:
        sums = np.zeros(1)
        for w in m:
            sums = np.concatenate([sums, sums + w])
        ok = sums[sums >= 0.5 - 1e-12]
        return float(ok.min()), True
    order = np.sort(m)[::-1]
    csum = np.cumsum(order)
    return float(csum[np.searchsorted(csum, 0.5 - 1e-12)]), False


def transport_bound(pair: AdmissiblePair) -> float:
    """2 c(beta_mu) sum_y (max_x K(y|x) - min_x K(y|x))^2 / muK(y) (relative entropy only)."""
    beta, _ = balance_coefficient(pair.mu)
    osc = pair.k.rows.max(axis=0) - pair.k.rows.min(axis=0)
    return float(2.0 * pinsker_constant(beta) * np.sum(osc**2 / pair.output_law.mass))


def bsc_transport_bound(p: float, eps: float) -> float:
    """Transport bound for a binary symmetric channel with input Bern(p)."""
    conv = eps * (1.0 - p) + (1.0 - eps) * p
    return 2.0 * pinsker_constant(p) * (1.0 - 2.0 * eps) ** 2 / ((1.0 - conv) * conv)


def maxcorr_upper_factor(phi: PhiGenerator, mu_min: float) -> float:
    """2 Psi'(1) / Phi''(1 / mu_min), the multiplier of S^2 in the smooth upper bound."""
    return 2.0 * phi.psi_prime_at_1() / float(phi.deriv2(np.array(1.0 / mu_min)))


def _maxcorr_applicable(phi: PhiGenerator):
    f = phi.flags
    if not f.differentiable or phi.deriv2 is None:
        return False, "needs a twice differentiable generator"
    if not math.isfinite(phi.phi_at_zero):
        return False, "needs finite Phi(0)"
    if not f.psi_concave:
        return False, "needs concave Psi"
    if not f.d2_nonincreasing:
        return False, "needs nonincreasing Phi''"
    return True, "Psi concave, Phi'' nonincreasing"


# ---------------------------------------------------------------------------
# numeric estimation


def _threads() -> int:
    try:
        return max(1, int(os.environ.get("CONTRACTKIT_THREADS", "1")))
    except ValueError:
        return 1


def _pmap(fn, items):
    n = _threads()
    if n <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=n) as ex:
        return list(ex.map(fn, items))


_KEEP = 4


class _Ratio:
    """D_Phi(nu K || mu K) / D_Phi(nu || mu) with gradients in nu."""

    def __init__(self, phi: PhiGenerator, pair: AdmissiblePair):
        self.phi = phi
        self.mu = pair.mu.mass
        self.k = pair.k.rows
        self.out = pair.output_law.mass
        one = np.array(1.0)
        self.phi1 = float(phi.eval(one))
        self.d1 = float(phi.deriv1(one))
        self.d2 = float(phi.deriv2(one)) if phi.deriv2 is not None else None
        self.d3 = float(phi.deriv3(one)) if phi.deriv3 is not None else 0.0

    def _div(self, r, w):
        # sum w * (Phi(r) - Phi(1) - Phi'(1)(r - 1)), Taylor-expanded near r = 1 to avoid cancellation
        h = r - 1.0
        vals = np.where(r > 0, self.phi.eval(np.maximum(r, 1e-300)), self.phi.phi_at_zero) - self.phi1 - self.d1 * h
        if self.d2 is not None:
            near = np.abs(h) < 1e-4
            if near.any():
                hn = h[near]
                vals[near] = 0.5 * self.d2 * hn**2 + self.d3 * hn**3 / 6.0
        return vals @ w if vals.ndim > 1 else float(w @ vals)

    def values(self, nus: np.ndarray) -> np.ndarray:
        """Vectorized ratio for a stack of laws (one per row)."""
        d_in = self._div(nus / self.mu, self.mu)
        d_out = self._div((nus @ self.k) / self.out, self.out)
        with np.errstate(divide="ignore", invalid="ignore"):
            out = np.where(d_in > 1e-300, d_out / d_in, 0.0)
        return out

    def values_grads(self, nus: np.ndarray):
        """Ratios and logit-space gradients for a stack of strictly positive laws."""
        r_in = nus / self.mu
        r_out = (nus @ self.k) / self.out
        d_in = self._div(r_in, self.mu)
        d_out = self._div(r_out, self.out)
        safe = np.where(d_in > 1e-300, d_in, 1.0)
        val = np.where(d_in > 1e-300, d_out / safe, 0.0)
        with np.errstate(divide="ignore", invalid="ignore"):
            g_in = self.phi.deriv1(np.maximum(r_in, 1e-300))
            g_out = self.phi.deriv1(r_out) @ self.k.T
            gn = (g_out - val[:, None] * g_in) / safe[:, None]
            gz = nus * (gn - np.sum(nus * gn, axis=1, keepdims=True))
        gz = np.nan_to_num(gz, nan=0.0, posinf=0.0, neginf=0.0)
        gz[d_in <= 1e-300] = 0.0
        return val, gz

    def value(self, nu: np.ndarray) -> float:
        r_in = nu / self.mu
        d_in = self._div(r_in, self.mu)
        if d_in <= 1e-300:
            return self._near_limit(nu)
        r_out = (nu @ self.k) / self.out
        return self._div(r_out, self.out) / d_in

    def _near_limit(self, nu):
        g = nu / self.mu - 1.0
        den = float(self.mu @ g**2)
        if den <= 0:
            return 0.0
        h = (nu @ self.k) / self.out - 1.0
        return float(self.out @ h**2) / den

    def value_grad(self, nu: np.ndarray):
        r_in = nu / self.mu
        d_in = self._div(r_in, self.mu)
        if d_in <= 1e-300:
            return self._near_limit(nu), np.zeros_like(nu)
        r_out = (nu @ self.k) / self.out
        d_out = self._div(r_out, self.out)
        val = d_out / d_in
        pos = nu > 0
        g_in = np.zeros_like(nu)
        with np.errstate(divide="ignore", invalid="ignore"):
            g_in[pos] = self.phi.deriv1(r_in[pos])
            g_out = self.k @ self.phi.deriv1(r_out)
        grad = np.where(pos, (g_out - val * g_in) / d_in, 0.0)
        return val, grad


def _softmax(z):
    z = z - z.max()
    e = np.exp(z)
    return e / e.sum()


def _ascend(ratio: _Ratio, nu0: np.ndarray, support: np.ndarray, max_iters: int, tol: float):
    """L-BFGS on logits restricted to ``support``; returns (value, nu, converged)."""
    idx = np.flatnonzero(support)
    if idx.size < 2:
        nu = np.zeros_like(nu0)
        nu[idx] = 1.0
        return ratio.value(nu), nu, True
    z0 = np.log(np.maximum(nu0[idx], 1e-300))
    z0 -= z0.max()

    def full(z):
        nu = np.zeros_like(nu0)
        nu[idx] = _softmax(z)
        return nu

    def obj(z):
        nu = full(z)
        v, g = ratio.value_grad(nu)
        gs = g[idx]
        p = nu[idx]
        gz = p * (gs - p @ gs)
        if not np.all(np.isfinite(gz)):
            gz = np.nan_to_num(gz, nan=0.0, posinf=0.0, neginf=0.0)
        return -v, -gz

    res = minimize(obj, z0, jac=True, method="L-BFGS-B",
                   options={"maxiter": max_iters, "gtol": tol * 1e-3, "ftol": 1e-15})
    nu = full(res.x)
    ok = bool(res.success) or res.nit < max_iters
    return ratio.value(nu), nu, ok


def _softmax_rows(z):
    z = z - z.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def _batch_ascent(ratio: _Ratio, nus: np.ndarray, steps: int = 60):
    """Gradient ascent on logits for all starts at once, with per-start step halving."""
    z = np.log(np.maximum(nus, 1e-300))
    val, g = ratio.values_grads(_softmax_rows(z))
    step = np.ones(z.shape[0])
    for _ in range(steps):
        norm = np.linalg.norm(g, axis=1)
        direction = g / np.where(norm > 0, norm, 1.0)[:, None]
        z_new = z + step[:, None] * direction
        v_new, g_new = ratio.values_grads(_softmax_rows(z_new))
        up = v_new > val
        z[up], val[up], g[up] = z_new[up], v_new[up], g_new[up]
        step = np.where(up, step * 1.5, step * 0.5)
        if np.all(step < 1e-10):
            break
    return val, _softmax_rows(z)


def _polish(ratio: _Ratio, val, nu, max_iters, tol):
    """Snap tiny coordinates to zero and re-optimize on the face."""
    small = nu < 1e-7
    if not small.any() or small.all():
        return val, nu
    face = nu.copy()
    face[small] = 0.0
    face /= face.sum()
    v2 = ratio.value(face)
    v3, nu3, _ = _ascend(ratio, face, ~small, max_iters, tol)
    best = max((val, 0, nu), (v2, 1, face), (v3, 2, nu3), key=lambda t: t[0])
    return best[0], best[2]


def _binary_search(ratio: _Ratio, mu1: float, grid: int = 4001):
    ts = np.linspace(0.0, 1.0, grid)
    ts = ts[np.abs(ts - mu1) > 1e-6]
    vals = ratio.values(np.column_stack([1.0 - ts, ts]))
    i = int(np.argmax(vals))
    best_t, best_v = ts[i], vals[i]
    lo = ts[max(i - 1, 0)]
    hi = ts[min(i + 1, ts.size - 1)]
    if lo < hi:
        res = minimize_scalar(lambda t: -ratio.value(np.array([1.0 - t, t])), bounds=(lo, hi),
                              method="bounded", options={"xatol": 1e-13})
        if -res.fun > best_v and abs(res.x - mu1) > 1e-6:
            best_t, best_v = float(res.x), float(-res.fun)
    return best_v, np.array([1.0 - best_t, best_t])


def _starts(pair: AdmissiblePair, n_random: int, seed: int):
    mu = pair.mu.mass
    n = mu.size
    out = []
    g = _singular_direction(pair)
    if np.any(g):
        for sign in (1.0, -1.0):
            for frac in (0.5, 0.99):
                t = frac / max(np.max(-sign * g), 1e-12)
                nu = mu * (1.0 + sign * t * g)
                out.append(np.clip(nu, 1e-12, None) / np.clip(nu, 1e-12, None).sum())
    for x in range(n):
        for w in (0.5, 0.9, 0.99):
            nu = (1.0 - w) * mu
            nu[x] += w
            out.append(nu)
    for i in range(n_random):
        rng = np.random.default_rng([seed, i])
        out.append(rng.dirichlet(np.full(n, 0.5)))
    return out


def _vertex_scan(ratio: _Ratio, mu: np.ndarray):
    w = np.linspace(0.02, 1.0, 50)
    stack = [(1.0 - w)[:, None] * mu[None, :] + w[:, None] * np.eye(mu.size)[x] for x in range(mu.size)]
    nus = np.vstack(stack)
    vals = ratio.values(nus)
    i = int(np.argmax(vals))
    return float(vals[i]), nus[i]


def _estimate(phi: PhiGenerator, pair: AdmissiblePair, starts: int = 16, max_iters: int = 500,
              tol: float = 1e-9, seed: int = 0):
    """Core estimator: returns (estimate, witness array or None, converged, s2, s)."""
    if not phi.flags.differentiable or phi.deriv1 is None:
        raise ContractError(E.UNSUPPORTED_PHI,
                            f"{phi.name} is not differentiable; use dobrushin() for total variation")
    s2, s = eta_chi2(pair)
    floor = s2 if phi.flags.strictly_convex_at_1 else 0.0
    ratio = _Ratio(phi, pair)
    mu = pair.mu.mass
    converged = True
    if mu.size == 1:
        return 0.0, None, True, s2, s
    if mu.size == 2:
        best_v, best_nu = _binary_search(ratio, mu[1])
    else:
        best_v, best_nu = _vertex_scan(ratio, mu)
        pts = _starts(pair, max(2, starts - 3 * mu.size - 4), seed)
        support = np.ones(mu.size, dtype=bool)

        def run(nu0):
            v, nu, ok = _ascend(ratio, nu0, support, max_iters, tol)
            v, nu = _polish(ratio, v, nu, max_iters, tol)
            return v, nu, ok

        # cheap batched ascent from every start, full ascent from the most promising few
        scout_v, scout_nu = _batch_ascent(ratio, np.vstack(pts))
        order = sorted(range(len(pts)), key=lambda i: (-scout_v[i], i))[:_KEEP]
        results = _pmap(run, [scout_nu[i] for i in order])
        n_ok = 0
        for v, nu, ok in results:  # index-ordered reduction keeps results deterministic
            n_ok += ok
            if v > best_v:
                best_v, best_nu = v, nu
        i = int(np.argmax(scout_v))
        if scout_v[i] > best_v:
            best_v, best_nu = float(scout_v[i]), scout_nu[i]
        converged = n_ok > 0
    best_v = min(max(best_v, 0.0), 1.0)
    if floor >= best_v:
        return floor, None, converged, s2, s
    return best_v, best_nu, converged, s2, s


def eta_bounds(phi: PhiGenerator, pair: AdmissiblePair, lambda_grid: Sequence[float] | None = None,
               include_opconv: bool = True, **opts) -> EtaReport:
    """Evaluate every bound in the ladder with an applicability verdict (no estimate)."""
    s2, s = eta_chi2(pair)
    rep = EtaReport(phi.name, None, s=s)
    app = rep.applicability
    smooth = phi.flags.strictly_convex_at_1
    rep.lower_bounds["s_squared"] = s2
    app["s_squared"] = (smooth, "Phi three times differentiable with Phi''(1) > 0" if smooth
                        else "generator is not smooth with Phi''(1) > 0")

    rep.upper_bounds["dobrushin"] = dobrushin(pair.k)
    app["dobrushin"] = (True, "holds for every convex generator")
    a_star, _ = doeblin_alpha(pair.k)
    rep.upper_bounds["doeblin"] = 1.0 - a_star
    app["doeblin"] = (True, "erasure decomposition")

    ok, why = _maxcorr_applicable(phi)
    if ok:
        val = maxcorr_upper_factor(phi, float(pair.mu.mass.min())) * s2
        rep.upper_bounds["maxcorr_ub"] = float(min(max(val, 0.0), 1.0))
    else:
        rep.upper_bounds["maxcorr_ub"] = 1.0
    app["maxcorr_ub"] = (ok, why)

    if phi.flags.operator_convex and include_opconv:
        lc = eta_lc_sup(pair, lambda_grid, **opts)
        rep.upper_bounds["opconv_ub"] = float(min(max(s2, lc), 1.0))
        app["opconv_ub"] = (True, "operator convex generator")
    else:
        rep.upper_bounds["opconv_ub"] = 1.0
        app["opconv_ub"] = (False, "generator not flagged operator convex" if not phi.flags.operator_convex
                            else "not requested")

    if phi.name == "kl":
        rep.upper_bounds["transport_ub"] = float(min(transport_bound(pair), 1.0))
        app["transport_ub"] = (True, "relative entropy with the trivial metric")
    else:
        rep.upper_bounds["transport_ub"] = 1.0
        app["transport_ub"] = (False, "stated for relative entropy only")
    return rep


def eta_numeric(phi: PhiGenerator, pair: AdmissiblePair, starts: int = 16, max_iters: int = 500,
                tol: float = 1e-9, seed: int = 0, with_opconv: bool = False,
                lambda_grid: Sequence[float] | None = None) -> EtaReport:
    """Estimate eta_Phi(mu, K) and attach the bound ladder.

    The estimate is the largest of: s^2 (when Phi is smooth at 1), the best
    ratio found by multi-start ascent over the simplex, and a scan along
    segments from mu to each point mass.
    """
    est, wit, conv, s2, s = _estimate(phi, pair, starts, max_iters, tol, seed)
    rep = eta_bounds(phi, pair, lambda_grid, include_opconv=with_opconv,
                     starts=starts, max_iters=max_iters, tol=tol, seed=seed)
    rep.estimate = est
    rep.converged = conv
    if wit is not None:
        wit = np.clip(wit, 0.0, None)
        rep.witness = Dist(wit / wit.sum())
        rep.lower_bounds["witness_ratio"] = est
        rep.applicability["witness_ratio"] = (True, "ratio at the recorded witness")
    return rep


def chebyshev_lambdas(n: int = 33) -> np.ndarray:
    k = np.arange(1, n + 1)
    return 0.5 * (1.0 - np.cos((2 * k - 1) * np.pi / (2 * n)))


def eta_lc_profile(pair: AdmissiblePair, lambda_grid: Sequence[float] | None = None, **opts):
    """Per-lambda Le Cam constants; returns (grid, values)."""
    grid = chebyshev_lambdas() if lambda_grid is None else np.asarray(lambda_grid, float)
    if grid.size == 0:
        raise ContractError(E.DOMAIN, "lambda grid is empty")
    vals = np.array([_estimate(lecam(l), pair, **opts)[0] for l in grid])
    return grid, vals


def eta_lc_sup(pair: AdmissiblePair, lambda_grid: Sequence[float] | None = None, **opts) -> float:
    """Largest Le Cam contraction constant over the lambda grid."""
    return float(eta_lc_profile(pair, lambda_grid, **opts)[1].max())


# ---------------------------------------------------------------------------
# graph random walk


@dataclass
class GraphWalkBound:
    bound: float
    transport_bound: float
    pair: AdmissiblePair
    deltas: np.ndarray


def graph_walk_pair(g: Graph, eps: float) -> AdmissiblePair:
    """Degree-proportional law and the lazy walk that stays put w.p. 1 - eps."""
    if g.has_self_loops:
        raise ContractError(E.DOMAIN, "graph must not have self-loops")
    if not g.is_connected() or g.n < 2:
        raise ContractError(E.DISCONNECTED, "graph must be connected with at least two vertices")
    adj = g.adjacency()
    deg = adj.sum(axis=1).astype(float)
    k = np.where(adj, eps / deg[:, None], 0.0)
    np.fill_diagonal(k, 1.0 - eps)
    mu = deg / deg.sum()
    return validate_admissible(Dist(mu), Channel(k))


def graph_rw_bound(g: Graph, eps: float) -> GraphWalkBound:
    """Transport bound for the lazy random walk on a graph.

    ``bound`` is |E| sum_y max(D0, D1, D2)(y) / deg(y), where D1 maximizes
    over the neighbours of y; this gives 0.68 on the 3-path at eps = 0.4
    and 2(1-2 eps)^2 on two vertices. ``transport_bound`` is the
    general-channel bound evaluated with the exact column oscillations of
    the walk kernel.
    """
    if not 0.0 < eps < 1.0:
        raise ContractError(E.DOMAIN, "eps must lie in (0,1)")
    pair = graph_walk_pair(g, eps)
    adj = g.adjacency()
    deg = adj.sum(axis=1).astype(float)
    n = g.n
    deltas = np.zeros((n, 3))
    for y in range(n):
        others = [x for x in range(n) if x != y]
        nbrs = [x for x in others if adj[x, y]]
        if deg[y] < n - 1:
            deltas[y, 0] = max((eps / deg[x]) ** 2 for x in others)
        deltas[y, 1] = max(((1.0 - eps) - eps / deg[x]) ** 2 for x in nbrs)
        if len(nbrs) > 1:
            deltas[y, 2] = max(eps**2 * (1.0 / deg[a] - 1.0 / deg[b]) ** 2 for a, b in combinations(nbrs, 2))
    bound = len(g.edges) * float(np.sum(deltas.max(axis=1) / deg))
    return GraphWalkBound(bound, transport_bound(pair), pair, deltas)


# ---------------------------------------------------------------------------
# comparison and tensorization


def comparison_bound(phi: PhiGenerator, pair: AdmissiblePair, ref_pair: AdmissiblePair, ref_eta: float) -> float:
    """Upper bound 1 - (a/A)(1 - ref_eta) on eta_Phi(pair) from a reference pair."""
    if phi.kappa is None:
        raise ContractError(E.DOMAIN, f"{phi.name} lacks the homogeneity property")
    if pair.k.shape != ref_pair.k.shape:
        raise ContractError(E.DOMAIN, "pairs must share input and output alphabets")
    joint = pair.mu.mass[:, None] * pair.k.rows
    ref = ref_pair.mu.mass[:, None] * ref_pair.k.rows
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(ref > 0, ref / joint, 0.0)
    big_a = float(ratio.max())
    small_a = float(np.min(ref_pair.mu.mass / pair.mu.mass))
    if not math.isfinite(big_a):
        return 1.0
    assert 0.0 < small_a <= big_a * (1 + 1e-12)
    return float(min(1.0, 1.0 - (small_a / big_a) * (1.0 - ref_eta)))


@dataclass
class TensorizationResult:
    product_eta_bound: float
    component_etas: list
    component_max: float
    mixture_bound: Optional[float]
    product_chi2: Optional[float] = None


def tensorization_check(phi: PhiGenerator, pairs: Sequence[AdmissiblePair], p: Sequence[float] | None = None,
                        etas: Sequence[float] | None = None, **opts) -> TensorizationResult:
    """Product-channel constant (max of components) and the local-mixture bound."""
    if not phi.flags.subadditive_class_C or phi.kappa is None:
        raise ContractError(E.UNSUPPORTED_PHI, f"{phi.name} does not give a subadditive homogeneous entropy")
    if etas is None:
        if phi.name == "chi2":
            etas = [eta_chi2(pr)[0] for pr in pairs]
        else:
            etas = [eta_numeric(phi, pr, **opts).estimate for pr in pairs]
    etas = [float(e) for e in etas]
    top = max(etas)
    mix = None
    if p is not None:
        w = np.asarray(p, float)
        mix = float(1.0 - np.min(w * (1.0 - np.asarray(etas))))
    prod = None
    if phi.name == "chi2":
        mu = tensor_many([pr.mu for pr in pairs])
        k = tensor_many([pr.k for pr in pairs])
        prod = eta_chi2(validate_admissible(mu, k))[0]
    return TensorizationResult(top, etas, top, mix, prod)


def mixture_pair(pairs: Sequence[AdmissiblePair], p: Sequence[float]) -> AdmissiblePair:
    """Product input law with the randomly-chosen-site channel."""
    for pr in pairs:
        if pr.k.input.size != pr.k.output.size:
            raise ContractError(E.DOMAIN, "local channels must be square")
    mu = tensor_many([pr.mu for pr in pairs])
    return validate_admissible(mu, mixture_local([pr.k for pr in pairs], p))


# ---------------------------------------------------------------------------
# extremal functions


def extremal_residual(phi: PhiGenerator, pair: AdmissiblePair, f, eta: float) -> float:
    """max_x |K(Phi' o K*f)(x) - Phi'(1) - eta (Phi'(f(x)) - Phi'(1))|."""
    f = np.asarray(f, float)
    kstar = adjoint(pair).rows
    d1 = phi.deriv1
    one = float(d1(np.array(1.0)))
    with np.errstate(divide="ignore", invalid="ignore"):
        lhs = pair.k.rows @ d1(kstar @ f) - one
        rhs = eta * (d1(f) - one)
    diff = np.abs(lhs - rhs)
    return float(np.max(np.nan_to_num(diff, nan=np.inf)))


def check_entropy_via_derivative(phi: PhiGenerator, seed: int = 0) -> bool:
    c = phi.flags.entropy_via_derivative
    if c is None or phi.deriv1 is None:
        return False
    rng = np.random.default_rng(seed)
    one = float(phi.deriv1(np.array(1.0)))
    for _ in range(10):
        p = rng.dirichlet(np.ones(4))
        u = rng.uniform(0.1, 3.0, 4)
        u = u / (p @ u)
        lhs = entropy_of(phi, u, p)
        rhs = c * float(p @ (u * (phi.deriv1(u) - one)))
        if abs(lhs - rhs) > 1e-10 * max(1.0, abs(lhs)):
            return False
    return True


def extremal_solve(phi: PhiGenerator, pair: AdmissiblePair, eta_hint: float | None = None,
                   **opts) -> ExtremalSolution:
    """Maximize the entropy ratio and report the residual of the extremal equation.

    When the maximizer collapses onto the constant function the trivial
    verdict eta = s^2 is returned with f = 1 and zero residual.
    """
    if not (phi.flags.differentiable and phi.flags.strictly_convex_at_1 and phi.kappa is not None):
        raise ContractError(E.UNSUPPORTED_PHI, f"{phi.name} lacks smoothness or homogeneity")
    if not check_entropy_via_derivative(phi):
        raise ContractError(E.UNSUPPORTED_PHI, f"{phi.name} fails Ent = c E[U(Phi'(U) - Phi'(1))]")
    est, wit, conv, s2, _ = _estimate(phi, pair, **opts)
    mu = pair.mu.mass
    if wit is None:
        return ExtremalSolution(np.ones_like(mu), s2, 0.0, trivial=True)
    f = wit / mu
    f = f / (mu @ f)
    eta = est if eta_hint is None else float(eta_hint)
    res = extremal_residual(phi, pair, f, eta)
    return ExtremalSolution(f, eta, res, trivial=False, boundary=bool(np.any(f <= 1e-12)))
