"""Mixing times, fastest-mixing chains, Potts dynamics, information contraction, reconstruction."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import errors as E
from .channels import adjoint, exchangeable_pair
from .contraction import _singular_direction, eta_chi2, eta_numeric, transport_bound
from .divergences import JointLaw, divergence_arrays, information_from_pair, phi_information
from .errors import ContractError
from .foundation import (
    CHI2, KL, Alphabet, Channel, Dist, Graph, PhiGenerator, uniform, validate_admissible,
)
from .sobolev import ReversiblePair

SIZE_CAP = 4096


# ---------------------------------------------------------------------------
# mixing time


@dataclass
class MixingReport:
    t_bound: int
    d_star: float
    trajectory: np.ndarray
    dominated: bool
    confirmed: bool


def worst_case_divergence(phi: PhiGenerator, mu: Dist) -> float:
    """max_x D_Phi(delta_x || mu), i.e. mu(x) Phi(1/mu(x)) + (1 - mu(x)) Phi(0) - Phi(1)."""
    if not math.isfinite(phi.phi_at_zero):
        raise ContractError(E.DOMAIN, f"{phi.name} has infinite Phi(0)")
    m = mu.mass
    vals = m * phi(1.0 / m) + (1.0 - m) * phi.phi_at_zero - float(phi(1.0))
    return float(vals.max())


def mixing_time_bound(phi: PhiGenerator, rp: ReversiblePair, eps: float, eta: float) -> MixingReport:
    """t = ceil(log(D*/eps) / log(1/eta)), confirmed by iterating every point mass."""
    if not 0.0 < eta < 1.0:
        raise ContractError(E.DOMAIN, f"eta must lie in (0,1), got {eta}")
    if eps <= 0:
        raise ContractError(E.DOMAIN, "eps must be positive")
    d_star = worst_case_divergence(phi, rp.mu)
    t = 0 if d_star <= eps else int(math.ceil(math.log(d_star / eps) / math.log(1.0 / eta) - 1e-12))
    mu = rp.mu.mass
    k = rp.m.rows
    state = np.eye(mu.size)
    traj = []
    for _ in range(t + 1):
        traj.append(max(divergence_arrays(phi, row, mu) for row in state))
        state = state @ k
    traj = np.array(traj)
    env = d_star * eta ** np.arange(t + 1)
    dominated = bool(np.all(traj <= env + 1e-12))
    return MixingReport(t, d_star, traj, dominated, bool(traj[-1] <= eps + 1e-15))


# ---------------------------------------------------------------------------
# fastest mixing chain


@dataclass
class FmmcResult:
    kernel: Channel
    value: float
    iterations: int
    certificate: tuple
    history: list = field(default_factory=list)
    converged: bool = True
    method: str = "subgradient"


def _flow_matrices(n, edges, mu):
    r = np.sqrt(mu)
    mats = []
    for i, j in edges:
        b = np.zeros((n, n))
        b[i, j] = b[j, i] = 1.0 / (r[i] * r[j])
        b[i, i] = -1.0 / mu[i]
        b[j, j] = -1.0 / mu[j]
        mats.append(b)
    return mats


def _kernel_from_flows(n, edges, mu, q):
    k = np.zeros((n, n))
    for (i, j), w in zip(edges, q):
        k[i, j] = w / mu[i]
        k[j, i] = w / mu[j]
    rowsum = k.sum(axis=1)
    over = rowsum > 1.0
    if np.any(over):
        k[over] /= rowsum[over, None]
    np.fill_diagonal(k, np.clip(1.0 - k.sum(axis=1), 0.0, None))
    return k / k.sum(axis=1, keepdims=True)


def _slem(k, mu):
    """Second-largest eigenvalue modulus of the symmetrized kernel, with its eigenvector."""
    r = np.sqrt(mu)
    s = r[:, None] * k / r[None, :]
    s = 0.5 * (s + s.T) - np.outer(r, r)
    ev, vec = np.linalg.eigh(s)
    i = int(np.argmax(np.abs(ev)))
    return float(abs(ev[i])), float(ev[i]), vec[:, i], s


def _project_flows(q, edges, mu):
    q = np.clip(q, 0.0, None)
    load = np.zeros(mu.size)
    for (i, j), w in zip(edges, q):
        load[i] += w
        load[j] += w
    scale = np.minimum(1.0, mu / np.maximum(load, 1e-300))
    return np.array([w * min(scale[i], scale[j]) for (i, j), w in zip(edges, q)])


def _sdp_flows(n, edges, mu, mats):
    import cvxpy as cp

    q = cp.Variable(len(edges), nonneg=True)
    t = cp.Variable()
    r = np.sqrt(mu)
    s = np.eye(n) - np.outer(r, r)
    expr = s + sum(q[e] * mats[e] for e in range(len(edges)))
    cons = [expr << t * np.eye(n), expr >> -t * np.eye(n)]
    for v in range(n):
        inc = [e for e, (i, j) in enumerate(edges) if v in (i, j)]
        if inc:
            cons.append(sum(q[e] for e in inc) <= mu[v])
    prob = cp.Problem(cp.Minimize(t), cons)
    try:
        with warnings.catch_warnings():
            # inaccurate solves are fine: the caller re-scores the kernel exactly
            warnings.simplefilter("ignore", UserWarning)
            prob.solve(solver=cp.CLARABEL, tol_gap_abs=1e-12, tol_gap_rel=1e-12, tol_feas=1e-12, max_iter=500)
    except Exception:  # solver missing or failed; keep the subgradient answer
        return None
    if q.value is None or prob.status not in ("optimal", "optimal_inaccurate"):
        return None
    return np.asarray(q.value, float)


def fmmc_solve(g: Graph, mu: Dist | None = None, iters: int = 500, tol: float = 1e-8,
               polish: bool = True) -> FmmcResult:
    """Minimize the chi-square contraction constant over reversible kernels supported on g.

    Holding probabilities K(x|x) are always free. Runs projected subgradient
    descent with iterate averaging, then (when ``polish``) solves the
    equivalent semidefinite program and keeps whichever kernel is better.
    The returned value is recomputed from the eigenvalues of the returned
    kernel.
    """
    if not g.is_connected():
        raise ContractError(E.DISCONNECTED, "graph is not connected")
    n = g.n
    mu = uniform(n).mass if mu is None else mu.mass
    if mu.size != n:
        raise ContractError(E.ALPHABET_MISMATCH, "law and graph differ in size")
    if np.any(mu <= 0):
        raise ContractError(E.NOT_STRICTLY_POSITIVE, "law must be strictly positive")
    edges = [(i, j) for i, j in g.edges if i != j]
    if n == 1:
        return FmmcResult(Channel(np.ones((1, 1))), 0.0, 0, (0.0, np.ones(1)))
    mats = _flow_matrices(n, edges, mu)
    deg = np.zeros(n)
    for i, j in edges:
        deg[i] += 1
        deg[j] += 1
    q = np.array([min(mu[i] / (deg[i] + 1), mu[j] / (deg[j] + 1)) for i, j in edges])
    avg = q.copy()
    best_q, best_v = q.copy(), _slem(_kernel_from_flows(n, edges, mu, q), mu)[0] ** 2
    history = [best_v]
    step0 = float(mu.min())
    it = 0
    for it in range(1, iters + 1):
        lam, signed, vec, _ = _slem(_kernel_from_flows(n, edges, mu, q), mu)
        sign = 1.0 if signed >= 0 else -1.0
        grad = np.array([2.0 * lam * sign * float(vec @ b @ vec) for b in mats])
        gn = np.linalg.norm(grad)
        if gn < 1e-15:
            break
        q = _project_flows(q - step0 / math.sqrt(it) * grad / gn, edges, mu)
        avg += (q - avg) / (it + 1)
        for cand in (q, avg):
            v = _slem(_kernel_from_flows(n, edges, mu, cand), mu)[0] ** 2
            if v < best_v:
                best_v, best_q = v, cand.copy()
        history.append(best_v)
        if best_v < tol:
            break
    method = "subgradient"
    converged = best_v < tol
    if polish:
        sdp = _sdp_flows(n, edges, mu, mats)
        if sdp is not None:
            sdp = _project_flows(sdp, edges, mu)
            v = _slem(_kernel_from_flows(n, edges, mu, sdp), mu)[0] ** 2
            converged = True
            if v <= best_v:
                best_v, best_q, method = v, sdp, "subgradient+sdp"
                history.append(best_v)
    k = _kernel_from_flows(n, edges, mu, best_q)
    lam, signed, vec, _ = _slem(k, mu)
    return FmmcResult(Channel(k), lam * lam, it, (signed, vec), history, converged, method)


# ---------------------------------------------------------------------------
# Potts model


@dataclass(frozen=True, eq=False)
class GraphModel:
    """Pairwise model on a graph: Potts with inverse temperature beta, or explicit edge tables."""

    vertices: Alphabet
    edges: tuple
    q: int
    beta: float = 0.0
    potentials: Optional[dict] = None

    def __post_init__(self):
        if isinstance(self.vertices, int):
            object.__setattr__(self, "vertices", Alphabet(self.vertices))
        g = Graph(self.vertices.size, self.edges)
        object.__setattr__(self, "edges", g.edges)
        if self.q < 2:
            raise ContractError(E.DOMAIN, "need at least two states")
        if self.beta < 0:
            raise ContractError(E.DOMAIN, "beta must be nonnegative")
        if g.has_self_loops:
            raise ContractError(E.DOMAIN, "self-loops are not allowed")
        if self.potentials is not None:
            pots = {}
            for e, table in self.potentials.items():
                t = np.asarray(table, float)
                if t.shape != (self.q, self.q) or np.any(t < 0) or np.abs(t - t.T).max() > 1e-12:
                    raise ContractError(E.VALIDATION, f"potential on {e} must be a symmetric nonnegative q x q table")
                pots[tuple(sorted(e))] = t
            object.__setattr__(self, "potentials", pots)

    @property
    def graph(self) -> Graph:
        return Graph(self.vertices.size, self.edges)

    @property
    def n(self) -> int:
        return self.vertices.size

    def max_degree(self) -> int:
        return int(self.graph.degrees().max()) if self.edges else 0

    def table(self, e) -> np.ndarray:
        if self.potentials is not None and e in self.potentials:
            return self.potentials[e]
        return np.exp(self.beta * np.eye(self.q))


def config_digits(n: int, q: int) -> np.ndarray:
    """Row-major configuration list: row i holds the states of vertices 0..n-1."""
    idx = np.arange(q**n)
    powers = q ** np.arange(n - 1, -1, -1)
    return (idx[:, None] // powers[None, :]) % q


def _check_size(gm: GraphModel, with_edges: bool = False):
    if gm.q**gm.n > SIZE_CAP:
        raise ContractError(E.SIZE_LIMIT, f"{gm.q}^{gm.n} configurations exceed {SIZE_CAP}")
    if with_edges and 2 ** len(gm.edges) > SIZE_CAP:
        raise ContractError(E.SIZE_LIMIT, f"2^{len(gm.edges)} bond sets exceed {SIZE_CAP}")


def gibbs_law(gm: GraphModel) -> Dist:
    _check_size(gm)
    digits = config_digits(gm.n, gm.q)
    w = np.ones(digits.shape[0])
    for u, v in gm.edges:
        w = w * gm.table((u, v))[digits[:, u], digits[:, v]]
    if w.sum() <= 0:
        raise ContractError(E.VALIDATION, "potentials give zero total weight")
    return Dist(w / w.sum())


def heat_bath(gm: GraphModel, gibbs: Dist) -> Channel:
    """Pick a uniform site and resample it from its conditional law given the rest."""
    n, q = gm.n, gm.q
    digits = config_digits(n, q)
    w = gibbs.mass
    size = w.size
    k = np.zeros((size, size))
    rows = np.arange(size)
    for v in range(n):
        stride = q ** (n - 1 - v)
        base = rows - digits[:, v] * stride
        nbr = base[:, None] + stride * np.arange(q)[None, :]
        wn = w[nbr]
        tot = wn.sum(axis=1, keepdims=True)
        cond = np.where(tot > 0, wn / np.where(tot > 0, tot, 1.0), 1.0 / q)
        np.add.at(k, (np.repeat(rows, q), nbr.ravel()), cond.ravel() / n)
    return Channel(k / k.sum(axis=1, keepdims=True))


def cluster_count(n: int, edges: Sequence, mask: int) -> int:
    """Connected components of (V, A) where A is the bond subset encoded by ``mask``."""
    parent = list(range(n))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    comps = n
    for e, (u, v) in enumerate(edges):
        if mask >> e & 1:
            ru, rv = find(u), find(v)
            if ru != rv:
                parent[ru] = rv
                comps -= 1
    return comps


@dataclass
class PottsKernels:
    gibbs: Dist
    hb: Channel
    sw: Channel
    coupling: JointLaw
    cluster_law: Dist


def potts_kernels(gm: GraphModel) -> PottsKernels:
    """Gibbs law, heat-bath and Swendsen-Wang kernels, and the spin/bond coupling.

    The coupling puts mass proportional to (e^beta - 1)^|A| on pairs (x, A)
    with every bond of A joining equal spins; its bond marginal is the
    random-cluster law with p = 1 - e^{-beta}.
    """
    if gm.potentials is not None:
        raise ContractError(E.DOMAIN, "Swendsen-Wang needs the plain Potts interaction")
    _check_size(gm, with_edges=True)
    gibbs = gibbs_law(gm)
    hb = heat_bath(gm, gibbs)
    digits = config_digits(gm.n, gm.q)
    m = len(gm.edges)
    agree = np.zeros(digits.shape[0], dtype=np.int64)
    for e, (u, v) in enumerate(gm.edges):
        agree |= (digits[:, u] == digits[:, v]).astype(np.int64) << e
    masks = np.arange(2**m, dtype=np.int64)
    popcount = np.array([bin(a).count("1") for a in masks])
    inside = (masks[None, :] & ~agree[:, None]) == 0
    bond_weight = np.power(math.expm1(gm.beta), popcount)
    joint = np.where(inside, bond_weight[None, :], 0.0)
    joint /= joint.sum()
    coupling = JointLaw(joint)
    px = joint.sum(axis=1)
    py = joint.sum(axis=0)
    keep = py > 0
    to_bonds = joint / px[:, None]
    to_spins = joint[:, keep].T / py[keep, None]
    sw = to_bonds[:, keep] @ to_spins
    sw = 0.5 * (sw + (gibbs.mass[:, None] * sw).T / gibbs.mass[:, None])  # exact reversibility
    return PottsKernels(gibbs, hb, Channel(sw / sw.sum(axis=1, keepdims=True)), coupling, Dist(py / py.sum()))


def random_cluster_law(gm: GraphModel) -> np.ndarray:
    """Q(A) proportional to (p / (1-p))^|A| q^{C(A)} with p = 1 - e^{-beta}."""
    m = len(gm.edges)
    ratio = math.expm1(gm.beta)
    w = np.array([ratio ** bin(a).count("1") * gm.q ** cluster_count(gm.n, gm.edges, a) for a in range(2**m)])
    return w / w.sum()


def sw_hb_compare(gm: GraphModel, phi: PhiGenerator = CHI2, tol: float = 1e-6, **opts) -> dict:
    """Contraction constants of both dynamics and the comparison bounds between them."""
    if phi.kappa is None:
        raise ContractError(E.UNSUPPORTED_PHI, f"{phi.name} lacks the homogeneity property")
    pk = potts_kernels(gm)
    hb_pair = validate_admissible(pk.gibbs, pk.hb)
    sw_pair = validate_admissible(pk.gibbs, pk.sw)
    if phi.name == "chi2":
        eta_hb, eta_sw = eta_chi2(hb_pair)[0], eta_chi2(sw_pair)[0]
    else:
        eta_hb = eta_numeric(phi, hb_pair, **opts).estimate
        eta_sw = eta_numeric(phi, sw_pair, **opts).estimate
    delta = gm.max_degree()
    big_q = gm.q ** (2 * delta + 1) * math.exp(4.0 * gm.beta * delta)
    ours = (big_q - 1.0) / (big_q - eta_hb**2)
    sandwich = pk.hb.rows @ pk.sw.rows @ pk.hb.rows
    sw = pk.sw.rows
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(sw > 0, sandwich / sw, np.where(sandwich > 0, np.inf, 0.0))
    report = {
        "phi": phi.name, "max_degree": delta, "Q": big_q,
        "eta_hb": eta_hb, "eta_sw": eta_sw, "bound": ours,
        "kernel_ratio": float(ratio.max()),
        "checks": {
            "sw_below_bound": bool(eta_sw <= ours + tol),
            "kernel_ratio_below_Q": bool(ratio.max() <= big_q * (1 + 1e-12)),
        },
    }
    if phi.name == "chi2":
        q2 = big_q**2
        ull = ((2.0 * q2 - 1.0 + math.sqrt(eta_hb)) / (2.0 * q2)) ** 2
        report["ullrich_bound"] = ull
        report["checks"]["bound_below_ullrich"] = bool(ours <= ull + tol)
    return report


# ---------------------------------------------------------------------------
# contraction of Phi-information


def info_contraction_sup(phi: PhiGenerator, joint: JointLaw, samples: int = 200, eps_grid=None,
                         seed: int = 0, eta_reference: float | None = None, **opts) -> dict:
    """Best ratio I_Phi(U;Y) / I_Phi(U;X) over sampled P_{U|X} and the small-epsilon construction."""
    px = joint.marginal_x()
    if np.any(px <= 0) or np.any(joint.marginal_z() <= 0):
        raise ContractError(E.NOT_STRICTLY_POSITIVE, "marginals must be strictly positive")
    k = joint.mass / px[:, None]
    pair = validate_admissible(Dist(px), Channel(k / k.sum(axis=1, keepdims=True)))
    witness = None
    if eta_reference is None:
        if phi.name == "chi2":
            eta_reference = eta_chi2(pair)[0]
        else:
            rep = eta_numeric(phi, pair, **opts)
            eta_reference, witness = rep.estimate, rep.witness
    kr = pair.k.rows
    best, source = 0.0, None

    def ratio(pu, px_given_u):
        den = information_from_pair(phi, pu, px_given_u)
        if den < 1e-12:
            return None
        return information_from_pair(phi, pu, px_given_u @ kr) / den

    rng = np.random.default_rng(seed)
    n = px.size
    for _ in range(samples):
        m = int(rng.integers(2, 5))
        pu_x = rng.dirichlet(np.full(m, 0.5), size=n)
        jux = px[:, None] * pu_x
        pu = jux.sum(axis=0)
        keep = pu > 1e-15
        r = ratio(pu[keep], (jux[:, keep] / pu[keep]).T)
        if r is not None and r > best:
            best, source = r, "sampled"

    cands = [np.eye(n)[x] for x in range(n)]
    if witness is not None:
        cands.append(witness.mass)
    g = _singular_direction(pair)
    if np.any(g):
        for sgn in (1.0, -1.0):
            for t in (1e-1, 1e-2, 1e-3):
                cands.append(px * (1.0 + sgn * t * g / np.abs(g).max()))
    grid = np.logspace(-1, -6, 11) if eps_grid is None else np.asarray(eps_grid, float)
    for qx in cands:
        qx = np.clip(qx, 0.0, None)
        qx = qx / qx.sum()
        with np.errstate(divide="ignore"):
            cap = float(np.min(np.where(qx > 0, (px - 1e-9) / qx, np.inf)))
        for eps in grid:
            e = min(float(eps), cap)
            if e <= 0:
                continue
            rest = (px - e * qx) / (1.0 - e)
            r = ratio(np.array([1.0 - e, e]), np.vstack([rest, qx]))
            if r is not None and r > best:
                best, source = r, "epsilon_construction"
    return {
        "phi": phi.name, "sup_estimate": best, "eta_reference": eta_reference,
        "gap": eta_reference - best, "consistent": bool(best <= eta_reference + 1e-6), "best_source": source,
    }


def gibbs_sampler_product_bound(phi: PhiGenerator, joint: JointLaw) -> dict:
    """Lower bound max(I(X;X')/I(X;X), I(Y;Y')/I(Y;Y)) on the product of the two directional constants."""
    px, py = joint.marginal_x(), joint.marginal_z()
    fwd = validate_admissible(Dist(px), Channel(joint.mass / px[:, None]))
    bwd = validate_admissible(Dist(py), Channel(joint.mass.T / py[:, None]))
    out = {}
    for name, pr in (("x", fwd), ("y", bwd)):
        ex = exchangeable_pair(pr).joint
        self_info = phi_information(phi, JointLaw(np.diag(pr.mu.mass)))
        out[name] = phi_information(phi, ex) / self_info if self_info > 0 else 0.0
    out["lower_bound"] = max(out["x"], out["y"])
    return out


# ---------------------------------------------------------------------------
# reconstruction


def _marginal_index(digits, verts, q):
    idx = np.zeros(digits.shape[0], dtype=np.int64)
    for v in verts:
        idx = idx * q + digits[:, v]
    return idx


def _block_joint(gm: GraphModel, gibbs: Dist, a, b) -> np.ndarray:
    digits = config_digits(gm.n, gm.q)
    ia = _marginal_index(digits, a, gm.q)
    ib = _marginal_index(digits, b, gm.q)
    out = np.zeros((gm.q ** len(a), gm.q ** len(b)))
    np.add.at(out, (ia, ib), gibbs.mass)
    return out


def _set_distance(dist, a, b) -> float:
    return float(min(dist[u, v] for u in a for v in b))


def reconstruction_report(gm: GraphModel, a_set, b_set, phi: PhiGenerator = KL, region=None,
                          C: float | None = None, c: float | None = None, **opts) -> dict:
    """Information between two vertex blocks and the correlation-decay quantities around it.

    ``region`` (a vertex set containing ``b_set``) together with user
    constants (C, c) enables the spatial-mixing part: the channel from the
    outer boundary of ``region`` to ``b_set``.
    """
    a = sorted(set(int(v) for v in a_set))
    b = sorted(set(int(v) for v in b_set))
    if not a or not b:
        raise ContractError(E.VALIDATION, "vertex sets must be nonempty")
    if set(a) & set(b):
        raise ContractError(E.OVERLAPPING_SETS, f"sets share vertices {sorted(set(a) & set(b))}")
    if max(a + b) >= gm.n or min(a + b) < 0:
        raise ContractError(E.VALIDATION, "vertex index out of range")
    gibbs = gibbs_law(gm)
    pab = _block_joint(gm, gibbs, a, b)
    pab = pab[pab.sum(axis=1) > 0][:, pab.sum(axis=0) > 0]
    joint = JointLaw(pab / pab.sum())
    pa = joint.marginal_x()
    info = phi_information(phi, joint)
    info_chi2 = phi_information(CHI2, joint)
    pair = validate_admissible(Dist(pa), Channel(pab / pab.sum(axis=1, keepdims=True)))
    s2 = eta_chi2(pair)[0]
    dist = gm.graph.distances()
    report = {
        "phi": phi.name, "A": a, "B": b, "distance": _set_distance(dist, a, b),
        "information": info, "information_chi2": info_chi2, "s_squared": s2,
        "checks": {
            "s2_below_chi2_info": bool(s2 <= info_chi2 + 1e-12),
            "chi2_info_below_s2_times_size": bool(info_chi2 <= s2 * (pa.size - 1) + 1e-12),
        },
    }
    if phi.flags.differentiable and phi.deriv2 is not None and math.isfinite(phi.phi_at_zero):
        lo = 0.5 * float(phi.deriv2(np.array(1.0 / pa.min()))) * info_chi2
        report["sandwich"] = {"lower": lo}
        report["checks"]["sandwich_lower"] = bool(lo <= info + 1e-12)
        if phi.flags.psi_concave and phi.flags.d2_nonincreasing:
            hi = phi.psi_prime_at_1() * info_chi2
            report["sandwich"]["upper"] = hi
            report["checks"]["sandwich_upper"] = bool(info <= hi + 1e-12)
    if info > 0:
        report["product_bound"] = gibbs_sampler_product_bound(phi, joint)
    if region is not None:
        report["spatial_mixing"] = _spatial_mixing(gm, gibbs, sorted(set(region)), b, C, c, dist, **opts)
    return report


def outer_boundary(g: Graph, region) -> list:
    reg = set(region)
    adj = g.adjacency()
    return sorted({v for v in range(g.n) if v not in reg and any(adj[v, u] for u in reg)})


def _spatial_mixing(gm, gibbs, region, b, C, c, dist, **opts):
    if not set(b) <= set(region):
        raise ContractError(E.DOMAIN, "the observed block must lie inside the region")
    bd = outer_boundary(gm.graph, region)
    if not bd:
        raise ContractError(E.DOMAIN, "region has an empty outer boundary")
    pjb = _block_joint(gm, gibbs, bd, b)
    rows = pjb.sum(axis=1) > 0
    pjb = pjb[rows]
    p_bd = pjb.sum(axis=1)
    kern = pjb / p_bd[:, None]
    cols = kern.sum(axis=0) > 0
    kern = kern[:, cols]
    pair = validate_admissible(Dist(p_bd / p_bd.sum()), Channel(kern / kern.sum(axis=1, keepdims=True)))
    d = _set_distance(dist, b, bd)
    eta = eta_numeric(KL, pair, **opts).estimate
    out = {"boundary": bd, "distance": d, "eta": eta, "transport_bound": transport_bound(pair),
           "p_star_B": float(pair.output_law.mass.min())}
    with np.errstate(divide="ignore", invalid="ignore"):
        ratios = kern[:, None, :] / kern[None, :, :]
    out["mixing_deviation"] = float(np.nanmax(np.abs(ratios - 1.0)))
    if C is not None and c is not None:
        size = len(region)
        out["condition_rhs"] = C * size * math.exp(-c * d)
        out["condition_holds"] = bool(out["mixing_deviation"] <= out["condition_rhs"] + 1e-12)
        out["bound"] = 2.0 * C**2 * size**2 / out["p_star_B"] * math.exp(-2.0 * c * d)
        out["eta_below_bound"] = bool(eta <= out["bound"] + 1e-9) if out["condition_holds"] else None
    return out
