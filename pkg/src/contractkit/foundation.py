"""Alphabets, distributions, channels and convex generators.

Every value object here is immutable: numpy arrays are copied on
construction and marked read-only.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.special import xlogy

from . import errors as E
from .errors import ContractError

TOL = 1e-12


def _frozen(a) -> np.ndarray:
    arr = np.array(a, dtype=float, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class Alphabet:
    """A finite alphabet of ``size`` symbols with optional display labels."""

    size: int
    labels: Optional[tuple] = None

    def __post_init__(self):
        if int(self.size) != self.size or self.size < 1:
            raise ContractError(E.VALIDATION, f"alphabet size must be a positive integer, got {self.size}")
        if self.labels is not None:
            labels = tuple(str(s) for s in self.labels)
            if len(labels) != self.size:
                raise ContractError(E.VALIDATION, "label count does not match alphabet size")
            if len(set(labels)) != len(labels):
                raise ContractError(E.VALIDATION, "alphabet labels must be distinct")
            object.__setattr__(self, "labels", labels)

    def product(self, other: "Alphabet") -> "Alphabet":
        """Cartesian product, flattened row-major (left factor most significant)."""
        if self.labels is None and other.labels is None:
            return Alphabet(self.size * other.size)
        a = self.labels or tuple(str(i) for i in range(self.size))
        b = other.labels or tuple(str(i) for i in range(other.size))
        return Alphabet(self.size * other.size, tuple(f"({x},{y})" for x in a for y in b))

    def compatible(self, other: "Alphabet") -> bool:
        return self.size == other.size


@dataclass(frozen=True, eq=False)
class Dist:
    """Probability vector on a finite alphabet."""

    mass: np.ndarray
    alphabet: Alphabet = None

    def __post_init__(self):
        m = _frozen(self.mass)
        if m.ndim != 1 or m.size == 0:
            raise ContractError(E.VALIDATION, "distribution mass must be a nonempty vector")
        if not np.all(np.isfinite(m)):
            raise ContractError(E.VALIDATION, "distribution mass must be finite")
        neg = np.flatnonzero(m < 0)
        if neg.size:
            raise ContractError(E.VALIDATION, f"negative mass at index {neg[0]}", int(neg[0]))
        if abs(m.sum() - 1.0) > TOL:
            raise ContractError(E.VALIDATION, f"mass sums to {m.sum()!r}, not 1")
        object.__setattr__(self, "mass", m)
        if self.alphabet is None:
            object.__setattr__(self, "alphabet", Alphabet(m.size))
        elif self.alphabet.size != m.size:
            raise ContractError(E.ALPHABET_MISMATCH, "mass length differs from alphabet size")

    @property
    def size(self) -> int:
        return self.mass.size

    @property
    def strictly_positive(self) -> bool:
        return bool(self.mass.min() > 0)

    def __len__(self):
        return self.size

    def __repr__(self):
        return f"Dist({np.array2string(self.mass, precision=6)})"


@dataclass(frozen=True, eq=False)
class Channel:
    """Row-stochastic matrix ``rows[x, y] = K(y|x)``."""

    rows: np.ndarray
    input: Alphabet = None
    output: Alphabet = None

    def __post_init__(self):
        k = _frozen(self.rows)
        if k.ndim != 2 or k.size == 0:
            raise ContractError(E.VALIDATION, "channel must be a nonempty matrix")
        if not np.all(np.isfinite(k)):
            raise ContractError(E.VALIDATION, "channel entries must be finite")
        bad = np.argwhere(k < 0)
        if bad.size:
            raise ContractError(E.VALIDATION, f"negative entry in row {bad[0][0]}", int(bad[0][0]))
        dev = np.abs(k.sum(axis=1) - 1.0)
        if dev.max() > TOL:
            r = int(np.argmax(dev))
            raise ContractError(E.VALIDATION, f"row {r} sums to {k[r].sum()!r}, not 1", r)
        object.__setattr__(self, "rows", k)
        if self.input is None:
            object.__setattr__(self, "input", Alphabet(k.shape[0]))
        if self.output is None:
            object.__setattr__(self, "output", Alphabet(k.shape[1]))
        if self.input.size != k.shape[0] or self.output.size != k.shape[1]:
            raise ContractError(E.ALPHABET_MISMATCH, "matrix shape differs from alphabet sizes")

    @property
    def shape(self):
        return self.rows.shape

    def __repr__(self):
        return f"Channel({np.array2string(self.rows, precision=6)})"


@dataclass(frozen=True, eq=False)
class AdmissiblePair:
    """Strictly positive input law together with a channel whose output law is strictly positive."""

    mu: Dist
    k: Channel
    output_law: Dist


def validate_admissible(mu: Dist, k: Channel) -> AdmissiblePair:
    """Check admissibility of ``(mu, k)`` and attach the output law ``mu k``."""
    if mu.size != k.input.size:
        raise ContractError(E.ALPHABET_MISMATCH, f"input law has {mu.size} symbols, channel expects {k.input.size}")
    zero = np.flatnonzero(mu.mass <= 0)
    if zero.size:
        raise ContractError(E.NOT_STRICTLY_POSITIVE, f"input law vanishes at x={zero[0]}", int(zero[0]))
    out = mu.mass @ k.rows
    out = out / out.sum()
    zero = np.flatnonzero(out <= 0)
    if zero.size:
        raise ContractError(E.NOT_STRICTLY_POSITIVE, f"output law vanishes at y={zero[0]}", int(zero[0]))
    return AdmissiblePair(mu, k, Dist(out, k.output))


# ---------------------------------------------------------------------------
# Convex generators


@dataclass(frozen=True)
class PhiFlags:
    operator_convex: bool = False
    subadditive_class_C: bool = False
    strictly_convex_at_1: bool = False
    differentiable: bool = True
    psi_concave: bool = False
    d2_nonincreasing: bool = False
    # constant c with Ent[U] = c E[U(Phi'(U) - Phi'(1))] for unit-mean U, or None
    entropy_via_derivative: Optional[float] = None


@dataclass(frozen=True, eq=False)
class PhiGenerator:
    """Convex function Phi on [0, inf) with optional derivatives.

    All callables must accept and return numpy arrays elementwise.
    ``phi_at_zero`` may be ``math.inf``.
    """

    name: str
    eval: Callable
    phi_at_zero: float
    deriv1: Optional[Callable] = None
    deriv2: Optional[Callable] = None
    deriv3: Optional[Callable] = None
    psi_fn: Optional[Callable] = None
    kappa: Optional[Callable] = None
    flags: PhiFlags = field(default_factory=PhiFlags)

    def __call__(self, u):
        return self.eval(np.asarray(u, dtype=float))

    def psi(self, u):
        u = np.asarray(u, dtype=float)
        if self.psi_fn is not None:
            return self.psi_fn(u)
        if not math.isfinite(self.phi_at_zero):
            raise ContractError(E.DOMAIN, f"{self.name}: Psi needs finite Phi(0)")
        with np.errstate(divide="ignore", invalid="ignore"):
            out = (self.eval(u) - self.phi_at_zero) / u
        if np.any(u == 0):
            if self.deriv1 is None:
                raise ContractError(E.DERIVATIVE_UNAVAILABLE, f"{self.name}: Psi(0) needs Phi'")
            out = np.where(u == 0, self.deriv1(np.zeros_like(u)), out)
        return out

    def psi_prime_at_1(self) -> float:
        """Psi'(1) = Phi'(1) - Phi(1) + Phi(0)."""
        if self.deriv1 is None:
            raise ContractError(E.DERIVATIVE_UNAVAILABLE, f"{self.name} has no first derivative")
        return float(self.deriv1(np.array(1.0)) - self.eval(np.array(1.0)) + self.phi_at_zero)

    @property
    def homogeneous(self) -> bool:
        return self.kappa is not None

    def __repr__(self):
        return f"PhiGenerator({self.name})"


def phi_eval(phi: PhiGenerator, u, order="0"):
    """Evaluate Phi, Phi', Phi'' (order 0, 1, 2) or Psi (order ``"psi"``) at ``u >= 0``."""
    arr = np.asarray(u, dtype=float)
    if np.any(arr < 0):
        raise ContractError(E.DOMAIN, "generator argument must be nonnegative")
    order = str(order)
    if order == "0":
        if np.ndim(arr) == 0 and arr == 0:
            return float(phi.phi_at_zero)
        out = phi.eval(arr)
        if np.ndim(arr) and np.any(arr == 0):
            out = np.where(arr == 0, phi.phi_at_zero, out)
    elif order in ("1", "2", "3"):
        fn = {"1": phi.deriv1, "2": phi.deriv2, "3": phi.deriv3}[order]
        if fn is None:
            raise ContractError(E.DERIVATIVE_UNAVAILABLE, f"{phi.name} has no derivative of order {order}")
        with np.errstate(divide="ignore"):
            out = fn(arr)
    elif order == "psi":
        out = phi.psi(arr)
    else:
        raise ContractError(E.DOMAIN, f"unknown order {order!r}")
    return float(out) if np.ndim(out) == 0 else out


def _kl_eval(u):
    return xlogy(u, u)


def _kl_d1(u):
    with np.errstate(divide="ignore"):
        return np.log(u) + 1.0


def _kl_d2(u):
    with np.errstate(divide="ignore"):
        return 1.0 / u


def _kl_d3(u):
    with np.errstate(divide="ignore"):
        return -1.0 / u**2


def _kl_psi(u):
    with np.errstate(divide="ignore"):
        return np.log(u)


KL = PhiGenerator(
    "kl", _kl_eval, 0.0, _kl_d1, _kl_d2, _kl_d3, _kl_psi, kappa=lambda c: c,
    flags=PhiFlags(operator_convex=True, subadditive_class_C=True, strictly_convex_at_1=True,
                   psi_concave=True, d2_nonincreasing=True, entropy_via_derivative=1.0),
)

CHI2 = PhiGenerator(
    "chi2", lambda u: (u - 1.0) ** 2, 1.0, lambda u: 2.0 * (u - 1.0),
    lambda u: np.full_like(u, 2.0), lambda u: np.zeros_like(u), lambda u: u - 2.0,
    kappa=lambda c: c**2,
    flags=PhiFlags(operator_convex=True, subadditive_class_C=True, strictly_convex_at_1=True,
                   psi_concave=True, d2_nonincreasing=True, entropy_via_derivative=0.5),
)

TV = PhiGenerator(
    "tv", lambda u: 0.5 * np.abs(u - 1.0), 0.5,
    flags=PhiFlags(differentiable=False),
)


def _hel_d1(u):
    with np.errstate(divide="ignore"):
        return 1.0 - 1.0 / np.sqrt(u)


def _hel_d2(u):
    with np.errstate(divide="ignore"):
        return 0.5 * u**-1.5


def _hel_d3(u):
    with np.errstate(divide="ignore"):
        return -0.75 * u**-2.5


HELLINGER = PhiGenerator(
    "hellinger", lambda u: (np.sqrt(u) - 1.0) ** 2, 1.0, _hel_d1, _hel_d2, _hel_d3,
    flags=PhiFlags(operator_convex=True, strictly_convex_at_1=True,
                   psi_concave=True, d2_nonincreasing=True),
)


def lecam(lam: float) -> PhiGenerator:
    """Le Cam generator lam*(1-lam)*(u-1)^2 / (lam*u + 1 - lam), 0 < lam < 1."""
    lam = float(lam)
    if not 0.0 < lam < 1.0:
        raise ContractError(E.DOMAIN, f"Le Cam parameter must lie in (0,1), got {lam}")
    lb = 1.0 - lam
    ll = lam * lb

    def ev(u):
        return ll * (u - 1.0) ** 2 / (lam * u + lb)

    def d1(u):
        w = lam * u + lb
        return lb * (1.0 - 1.0 / w**2)

    def d2(u):
        return 2.0 * ll / (lam * u + lb) ** 3

    def d3(u):
        return -6.0 * lam * ll / (lam * u + lb) ** 4

    def psi(u):
        return lam * (lb * u - 1.0 - lb) / (lam * u + lb)

    return PhiGenerator(
        f"lecam:{lam:g}", ev, lam, d1, d2, d3, psi,
        flags=PhiFlags(operator_convex=True, strictly_convex_at_1=True,
                       psi_concave=True, d2_nonincreasing=True),
    )


def alpha(p: float) -> PhiGenerator:
    """Power generator (u^p - 1)/(p - 1) for 1 < p <= 2."""
    p = float(p)
    if not 1.0 < p <= 2.0:
        raise ContractError(E.DOMAIN, f"power must lie in (1,2], got {p}")

    def d2(u):
        with np.errstate(divide="ignore"):
            return p * u ** (p - 2.0)

    def d3(u):
        with np.errstate(divide="ignore"):
            return p * (p - 2.0) * u ** (p - 3.0)

    return PhiGenerator(
        f"alpha:{p:g}", lambda u: (u**p - 1.0) / (p - 1.0), -1.0 / (p - 1.0),
        lambda u: p * u ** (p - 1.0) / (p - 1.0), d2, d3,
        lambda u: u ** (p - 1.0) / (p - 1.0), kappa=lambda c: c**p,
        flags=PhiFlags(operator_convex=True, subadditive_class_C=True, strictly_convex_at_1=True,
                       psi_concave=True, d2_nonincreasing=True, entropy_via_derivative=1.0 / p),
    )


def parse_phi(spec: str) -> PhiGenerator:
    """Build a catalog generator from ``kl``, ``chi2``, ``tv``, ``hellinger``, ``lecam:<l>``, ``alpha:<p>``."""
    s = spec.strip().lower()
    fixed = {"kl": KL, "chi2": CHI2, "tv": TV, "hellinger": HELLINGER}
    if s in fixed:
        return fixed[s]
    name, _, arg = s.partition(":")
    try:
        if name == "lecam" and arg:
            return lecam(float(arg))
        if name == "alpha" and arg:
            return alpha(float(arg))
    except ValueError as exc:
        raise ContractError(E.PARSE, f"bad generator parameter in {spec!r}") from exc
    raise ContractError(E.PARSE, f"unknown generator {spec!r}")


def user_generator(name, fn, phi_at_zero, deriv1=None, deriv2=None, deriv3=None,
                   kappa=None, flags: PhiFlags | None = None, seed: int = 0) -> PhiGenerator:
    """Wrap user callbacks as a generator; declared flags are spot-checked with warnings."""
    phi = PhiGenerator(name, fn, phi_at_zero, deriv1, deriv2, deriv3, kappa=kappa,
                       flags=flags or PhiFlags(differentiable=deriv1 is not None))
    for msg in check_generator(phi, seed=seed):
        warnings.warn(f"{name}: {msg}", RuntimeWarning, stacklevel=2)
    return phi


def _entropy(phi: PhiGenerator, values: np.ndarray, probs: np.ndarray) -> float:
    m = float(probs @ values)
    return float(probs @ phi_eval(phi, values)) - phi_eval(phi, m)


def check_generator(phi: PhiGenerator, seed: int = 0, n_pairs: int = 100) -> list[str]:
    """Numerically spot-check convexity, homogeneity and the class-C criterion.

    Returns a list of failure descriptions (empty when all checks pass).
    """
    rng = np.random.default_rng(seed)
    problems = []
    u = rng.uniform(0.01, 10.0, n_pairs)
    v = rng.uniform(0.01, 10.0, n_pairs)
    mid = phi((u + v) / 2)
    avg = (phi(u) + phi(v)) / 2
    if np.any(mid > avg + 1e-10 * (1 + np.abs(avg))):
        problems.append("midpoint convexity check failed")
    if phi.kappa is not None:
        for _ in range(5):
            vals = rng.uniform(0.05, 3.0, 4)
            probs = rng.dirichlet(np.ones(4))
            base = _entropy(phi, vals, probs)
            for c in (0.5, 2.0, 7.0):
                lhs = _entropy(phi, c * vals, probs)
                if abs(lhs - phi.kappa(c) * base) > 1e-10 * max(1.0, abs(lhs)):
                    problems.append(f"homogeneity check failed at c={c}")
                    break
    if phi.flags.subadditive_class_C:
        if phi.deriv2 is None:
            problems.append("class C declared without a second derivative")
        else:
            grid = np.linspace(0.05, 10.0, 400)
            inv = 1.0 / phi.deriv2(grid)
            second = inv[:-2] - 2 * inv[1:-1] + inv[2:]
            if np.any(second > 1e-9 * (1 + np.abs(inv[1:-1]))):
                problems.append("1/Phi'' is not concave on the sampled grid")
    return problems


# ---------------------------------------------------------------------------
# Convenience constructors


def bern(p: float) -> Dist:
    """Bernoulli law on {0, 1} with P(1) = p."""
    return Dist(np.array([1.0 - p, p]))


def uniform(n: int) -> Dist:
    return Dist(np.full(n, 1.0 / n))


def bsc(eps: float) -> Channel:
    """Binary symmetric channel with crossover probability ``eps``."""
    return Channel(np.array([[1.0 - eps, eps], [eps, 1.0 - eps]]))


def identity_channel(n: int) -> Channel:
    return Channel(np.eye(n))


def constant_channel(n_in: int, out: Dist | Sequence[float]) -> Channel:
    """Channel whose every row equals ``out``."""
    m = out.mass if isinstance(out, Dist) else np.asarray(out, dtype=float)
    return Channel(np.tile(m, (n_in, 1)))


@dataclass(frozen=True, eq=False)
class Graph:
    """Undirected simple graph on vertices ``0..n-1``."""

    n: int
    edges: tuple

    def __post_init__(self):
        if self.n < 1:
            raise ContractError(E.VALIDATION, "graph needs at least one vertex")
        clean = set()
        for e in self.edges:
            a, b = int(e[0]), int(e[1])
            if not (0 <= a < self.n and 0 <= b < self.n):
                raise ContractError(E.VALIDATION, f"edge ({a},{b}) references a missing vertex")
            clean.add((min(a, b), max(a, b)))
        object.__setattr__(self, "edges", tuple(sorted(clean)))

    @property
    def has_self_loops(self) -> bool:
        return any(a == b for a, b in self.edges)

    def adjacency(self) -> np.ndarray:
        adj = np.zeros((self.n, self.n), dtype=bool)
        for a, b in self.edges:
            adj[a, b] = adj[b, a] = True
        return adj

    def degrees(self) -> np.ndarray:
        adj = self.adjacency()
        np.fill_diagonal(adj, False)
        return adj.sum(axis=1)

    def is_connected(self) -> bool:
        adj = self.adjacency()
        seen = {0}
        stack = [0]
        while stack:
            v = stack.pop()
            for w in np.flatnonzero(adj[v]):
                if int(w) not in seen:
                    seen.add(int(w))
                    stack.append(int(w))
        return len(seen) == self.n

    def distances(self) -> np.ndarray:
        """All-pairs hop distances (inf when unreachable)."""
        from scipy.sparse.csgraph import shortest_path

        adj = self.adjacency().astype(float)
        np.fill_diagonal(adj, 0.0)
        return shortest_path(adj, unweighted=True, directed=False)


def complete_graph(n: int) -> Graph:
    return Graph(n, tuple((i, j) for i in range(n) for j in range(i + 1, n)))


def path_graph(n: int) -> Graph:
    return Graph(n, tuple((i, i + 1) for i in range(n - 1)))
