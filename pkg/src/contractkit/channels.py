"""Channel algebra: adjoints, composition, products, local mixtures, Doeblin splitting."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import errors as E
from .divergences import JointLaw
from .errors import ContractError
from .foundation import AdmissiblePair, Channel, Dist, validate_admissible


def _stochastic(m: np.ndarray) -> np.ndarray:
    # clean rounding so products of stochastic matrices stay stochastic to 1e-12
    m = np.clip(m, 0.0, None)
    return m / m.sum(axis=1, keepdims=True)


def adjoint(pair: AdmissiblePair) -> Channel:
    """Backward channel K*(x|y) = K(y|x) mu(x) / muK(y), as a channel from Y to X."""
    joint = pair.mu.mass[:, None] * pair.k.rows
    back = joint.T / pair.output_law.mass[:, None]
    return Channel(_stochastic(back), pair.k.output, pair.k.input)


def apply(k: Channel, mu: Dist) -> Dist:
    """Push a law through the channel: (mu K)(y) = sum_x mu(x) K(y|x)."""
    if mu.size != k.input.size:
        raise ContractError(E.ALPHABET_MISMATCH, "law and channel input disagree")
    out = mu.mass @ k.rows
    return Dist(out / out.sum(), k.output)


def apply_fn(k: Channel, f) -> np.ndarray:
    """Conditional expectation Kf(x) = sum_y K(y|x) f(y)."""
    f = np.asarray(f, dtype=float)
    if f.shape != (k.output.size,):
        raise ContractError(E.ALPHABET_MISMATCH, "function length differs from channel output")
    return k.rows @ f


def compose(outer: Channel, inner: Channel) -> Channel:
    """``outer o inner``: first ``inner`` (X -> Y), then ``outer`` (Y -> Z)."""
    if inner.output.size != outer.input.size:
        raise ContractError(E.ALPHABET_MISMATCH, "inner output and outer input disagree")
    return Channel(_stochastic(inner.rows @ outer.rows), inner.input, outer.output)


def tensor(a: Channel, b: Channel) -> Channel:
    """Product channel on product alphabets, row-major with ``a`` most significant."""
    return Channel(_stochastic(np.kron(a.rows, b.rows)),
                   a.input.product(b.input), a.output.product(b.output))


def tensor_dist(a: Dist, b: Dist) -> Dist:
    m = np.kron(a.mass, b.mass)
    return Dist(m / m.sum(), a.alphabet.product(b.alphabet))


def tensor_many(items: Sequence):
    out = items[0]
    join = tensor if isinstance(out, Channel) else tensor_dist
    for item in items[1:]:
        out = join(out, item)
    return out


def mixture_local(channels: Sequence[Channel], p: Dist | Sequence[float]) -> Channel:
    """Pick site i with probability p_i and apply K_i to that coordinate only."""
    weights = p.mass if isinstance(p, Dist) else np.asarray(p, dtype=float)
    if len(channels) != weights.size:
        raise ContractError(E.ALPHABET_MISMATCH, "one weight per site is required")
    for i, k in enumerate(channels):
        if k.input.size != k.output.size:
            raise ContractError(E.DOMAIN, f"site {i} channel is not square")
    sizes = [k.input.size for k in channels]
    total = np.zeros((int(np.prod(sizes)),) * 2)
    for i, (w, k) in enumerate(zip(weights, channels)):
        local = np.ones((1, 1))
        for j, n in enumerate(sizes):
            local = np.kron(local, k.rows if j == i else np.eye(n))
        total += w * local
    return Channel(_stochastic(total))


def doeblin_alpha(k: Channel):
    """Largest Doeblin minorization constant and its base law.

    Returns ``(alpha, base)`` with ``alpha = sum_y min_x K(y|x)``; ``base`` is
    ``None`` when ``alpha == 0``.
    """
    colmin = k.rows.min(axis=0)
    a = float(colmin.sum())
    if a <= 0.0:
        return 0.0, None
    return min(a, 1.0), Dist(colmin / colmin.sum(), k.output)


def doeblin_decomposition(k: Channel, alpha: float | None = None):
    """Split ``K = T o E_alpha`` through an erasure channel.

    ``E_alpha`` keeps x with probability 1 - alpha and otherwise emits the
    erasure symbol (last output index); ``T`` maps erasure to the base law and
    x to the residual kernel (K - alpha * base) / (1 - alpha).
    """
    a_max, base = doeblin_alpha(k)
    if alpha is None:
        alpha = a_max
    if base is None or not 0.0 < alpha <= a_max + 1e-15:
        raise ContractError(E.DOMAIN, f"alpha={alpha} is not a valid minorization constant (max {a_max})")
    n, m = k.shape
    erase = np.zeros((n, n + 1))
    erase[np.arange(n), np.arange(n)] = 1.0 - alpha
    erase[:, n] = alpha
    if alpha >= 1.0:
        resid = np.tile(base.mass, (n, 1))
    else:
        resid = np.clip((k.rows - alpha * base.mass) / (1.0 - alpha), 0.0, None)
    t = np.vstack([resid, base.mass])
    return Channel(_stochastic(erase)), Channel(_stochastic(t))


@dataclass(frozen=True, eq=False)
class ExchangeablePairLaw:
    """Symmetric joint law of (X, X') with X' | X ~ K* K."""

    joint: JointLaw
    source: AdmissiblePair

    @property
    def kernel(self) -> np.ndarray:
        return self.joint.mass / self.joint.marginal_x()[:, None]


def gibbs_kernel(pair: AdmissiblePair) -> Channel:
    """Two-stage kernel x -> y -> x' (forward through K, back through K*)."""
    return compose(adjoint(pair), pair.k)


def exchangeable_pair(pair: AdmissiblePair) -> ExchangeablePairLaw:
    m = gibbs_kernel(pair).rows
    joint = pair.mu.mass[:, None] * m
    joint = 0.5 * (joint + joint.T)  # exact symmetry; entries already agree to rounding
    joint /= joint.sum()
    return ExchangeablePairLaw(JointLaw(joint, pair.mu.alphabet, pair.mu.alphabet), pair)


def admissible(mu, k) -> AdmissiblePair:
    """Shorthand accepting raw arrays."""
    mu = mu if isinstance(mu, Dist) else Dist(mu)
    k = k if isinstance(k, Channel) else Channel(k)
    return validate_admissible(mu, k)
