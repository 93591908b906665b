"""Markov-chain model of the two-receiver control protocol.

The state of the link is the pair of remaining closed cycles at the left
and right receiver.  With timeout length ``n`` the reachable labels are
``(0,0)`` (both open), ``(i,0)`` and ``(0,i)`` (one side holding a herald
for ``i`` more cycles) and ``(i,i)`` (both closed), giving ``3n + 1``
states.  ``p`` is the per-side herald probability per clock cycle.

Transitions encode the protocol with an omniscient observer: a lone herald
times out after ``n`` cycles unless the other side heralds meanwhile, in
which case both sides reopen together at the earlier deadline.  Collapsing
each row ``i`` into a single state yields an equivalent ``n + 1``-state
chain whose equilibrium is available in closed form.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import spsolve

# Above this many states the stationary solve stays in sparse LU.
_DENSE_LIMIT = 4000


def _check_n(n: int) -> None:
    if not isinstance(n, (int, np.integer)) or n < 1:
        raise ValueError(f"n must be an integer >= 1, got {n!r}")


def _check_p(p: float) -> None:
    if not math.isfinite(p) or not 0.0 <= p <= 1.0:
        raise ValueError(f"p must lie in [0, 1], got {p!r}")


@dataclass(frozen=True, eq=False)
class Chain:
    """Immutable chain: row-stochastic sparse transitions plus state labels."""

    n: int
    p: float
    kind: str  # "full" or "collapsed"
    labels: tuple[str, ...]
    matrix: sp.csr_matrix

    @property
    def num_states(self) -> int:
        return len(self.labels)

    def index_of(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise KeyError(f"no state labeled {label!r}") from None

    def to_dict(self) -> dict:
        coo = self.matrix.tocoo()
        transitions: dict[str, dict[str, float]] = {label: {} for label in self.labels}
        for i, j, value in zip(coo.row, coo.col, coo.data):
            transitions[self.labels[i]][self.labels[j]] = float(value)
        return {
            "n": self.n,
            "p": self.p,
            "kind": self.kind,
            "states": list(self.labels),
            "transitions": transitions,
        }

    def to_json(self, indent: int | None = 2) -> str:
        return json.dumps(self.to_dict(), indent=indent)


def full_chain(n: int, p: float) -> Chain:
    """Build the ``3n + 1``-state chain of the two-receiver protocol.

    From ``(0,0)`` a cycle yields two heralds with probability ``p**2``
    (both close for ``n`` cycles), one herald with ``p(1-p)`` each side, or
    none.  While one side is closed the open side's herald drags both onto
    the diagonal; a herald during the final closed cycle is discarded so the
    pair of receivers still reopens together.
    """
    _check_n(n)
    _check_p(p)

    def idx(i: int, j: int) -> int:
        if i == 0 and j == 0:
            return 0
        if j == 0:
            return i
        if i == 0:
            return n + j
        return 2 * n + i

    labels = ["(0,0)"]
    labels += [f"({i},0)" for i in range(1, n + 1)]
    labels += [f"(0,{i})" for i in range(1, n + 1)]
    labels += [f"({i},{i})" for i in range(1, n + 1)]

    rows: list[int] = []
    cols: list[int] = []
    vals: list[float] = []

    def add(src: int, dst: int, prob: float) -> None:
        if prob > 0.0:
            rows.append(src)
            cols.append(dst)
            vals.append(prob)

    q = 1.0 - p
    add(idx(0, 0), idx(n, n), p * p)
    add(idx(0, 0), idx(n, 0), p * q)
    add(idx(0, 0), idx(0, n), p * q)
    add(idx(0, 0), idx(0, 0), q * q)

    for i in range(2, n + 1):
        add(idx(i, 0), idx(i - 1, i - 1), p)
        add(idx(i, 0), idx(i - 1, 0), q)
        add(idx(0, i), idx(i - 1, i - 1), p)
        add(idx(0, i), idx(0, i - 1), q)
        add(idx(i, i), idx(i - 1, i - 1), 1.0)
    add(idx(1, 0), idx(0, 0), 1.0)
    add(idx(0, 1), idx(0, 0), 1.0)
    add(idx(1, 1), idx(0, 0), 1.0)

    size = 3 * n + 1
    matrix = sp.csr_matrix((vals, (rows, cols)), shape=(size, size))
    return Chain(n=n, p=p, kind="full", labels=tuple(labels), matrix=matrix)


def collapsed_chain(n: int, p: float) -> Chain:
    """Build the ``n + 1``-state chain over the time until both sides are open."""
    _check_n(n)
    _check_p(p)
    leave = 2.0 * p - p * p
    rows, cols, vals = [], [], []
    if leave > 0.0:
        rows.append(0)
        cols.append(n)
        vals.append(leave)
    if leave < 1.0:
        rows.append(0)
        cols.append(0)
        vals.append((1.0 - p) ** 2)
    for i in range(1, n + 1):
        rows.append(i)
        cols.append(i - 1)
        vals.append(1.0)
    labels = tuple(f"[{i}]" for i in range(n + 1))
    matrix = sp.csr_matrix((vals, (rows, cols)), shape=(n + 1, n + 1))
    return Chain(n=n, p=p, kind="collapsed", labels=labels, matrix=matrix)


def _degenerate_stationary(chain: Chain) -> np.ndarray:
    """Stationary vectors at p = 0 (absorbing open state) and p = 1 (pure cycle)."""
    pi = np.zeros(chain.num_states)
    if chain.p == 0.0:
        pi[0] = 1.0
        return pi
    # p = 1: the chain walks (0,0) -> (n,n) -> ... -> (1,1) -> (0,0);
    # the stationary vector is uniform on that cycle even though the chain
    # is periodic rather than mixing.
    weight = 1.0 / (chain.n + 1)
    if chain.kind == "collapsed":
        pi[:] = weight
        return pi
    pi[0] = weight
    for i in range(1, chain.n + 1):
        pi[2 * chain.n + i] = weight
    return pi


def stationary(chain: Chain, residual_tol: float = 1e-12) -> np.ndarray:
    """Stationary distribution by direct linear solve of ``pi T = pi``.

    The singular balance system is closed with the normalisation row.  The
    degenerate ends ``p in {0, 1}`` (reducible or periodic chain) return
    their known stationary vectors directly.
    """
    if chain.p == 0.0 or chain.p == 1.0:
        return _degenerate_stationary(chain)
    size = chain.num_states
    transpose = chain.matrix.transpose()
    if size <= _DENSE_LIMIT:
        a = transpose.toarray() - np.eye(size)
        a[-1, :] = 1.0
        b = np.zeros(size)
        b[-1] = 1.0
        pi = np.linalg.solve(a, b)
    else:
        a = (transpose - sp.identity(size, format="csr")).tolil()
        a[-1, :] = 1.0
        b = np.zeros(size)
        b[-1] = 1.0
        pi = spsolve(a.tocsc(), b)
    pi = np.where(np.abs(pi) < 1e-15, 0.0, pi)
    if np.any(pi < 0):
        raise ArithmeticError("stationary solve produced negative probabilities")
    pi = pi / pi.sum()
    residual = np.max(np.abs(pi @ chain.matrix - pi))
    if residual > residual_tol:
        raise ArithmeticError(f"stationary residual {residual:.3e} exceeds {residual_tol:.1e}")
    return pi


def stationary_power(chain: Chain, tol: float = 1e-13, max_iter: int = 1_000_000) -> np.ndarray:
    """Power-iteration fallback on the half-lazy chain ``(I + T) / 2``.

    The lazy mixture shares the stationary vector of ``T`` but is aperiodic
    for every ``p``, so the iteration converges even near the periodic end.
    """
    if chain.p == 0.0 or chain.p == 1.0:
        return _degenerate_stationary(chain)
    pi = np.full(chain.num_states, 1.0 / chain.num_states)
    matrix = chain.matrix
    for _ in range(max_iter):
        nxt = 0.5 * (pi + pi @ matrix)
        nxt /= nxt.sum()
        if np.max(np.abs(nxt @ matrix - nxt)) <= tol:
            return nxt
        pi = nxt
    raise ArithmeticError(f"power iteration did not reach residual {tol:.1e}")


def stationary_open_prob(n: int, p: float) -> float:
    """Closed-form equilibrium probability of the both-open state."""
    _check_n(n)
    _check_p(p)
    return 1.0 / (1.0 + n * (2.0 * p - p * p))


def stationary_closed_prob(n: int, p: float) -> float:
    """Closed-form equilibrium probability of each waiting state ``[i]``, i > 0."""
    return (1.0 - stationary_open_prob(n, p)) / n


def collapse(full_distribution: np.ndarray, n: int) -> np.ndarray:
    """Sum a full-chain distribution row-wise onto the collapsed state space."""
    _check_n(n)
    vec = np.asarray(full_distribution, dtype=float)
    if vec.shape != (3 * n + 1,):
        raise ValueError(f"expected a vector of length {3 * n + 1}, got shape {vec.shape}")
    out = np.empty(n + 1)
    out[0] = vec[0]
    for i in range(1, n + 1):
        out[i] = vec[i] + vec[n + i] + vec[2 * n + i]
    return out


def rate_from_stationary(pi00: float, beta_2: float, tau_c_s: float) -> float:
    """Pairs per second from the equilibrium flux out of the both-open state."""
    if not 0.0 <= pi00 <= 1.0:
        raise ValueError(f"pi00 must lie in [0, 1], got {pi00!r}")
    if not 0.0 <= beta_2 <= 1.0:
        raise ValueError(f"beta_2 must lie in [0, 1], got {beta_2!r}")
    if not tau_c_s > 0.0:
        raise ValueError(f"tau_c_s must be positive, got {tau_c_s!r}")
    return beta_2 * pi00 / tau_c_s


def stationary_as_dict(chain: Chain, pi: np.ndarray) -> dict[str, float]:
    """Map state labels to probabilities, e.g. for JSON debugging dumps."""
    if len(pi) != chain.num_states:
        raise ValueError("distribution length does not match the chain")
    return {label: float(value) for label, value in zip(chain.labels, pi)}
