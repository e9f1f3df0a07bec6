"""Weighted hypergraph container, hyperedge-list I/O and size normalizers.

A hypergraph is stored as a canonical list of weighted hyperedges over nodes
``0 .. N-1``: every hyperedge is a strictly increasing tuple of at least two
node indices with a positive integer weight, duplicates are merged by summing
weights, and the list is sorted lexicographically.  A sparse node-by-hyperedge
incidence matrix is kept alongside so that per-hyperedge quantities can be
computed with sparse matrix products instead of Python loops.

The module also provides the combinatorial normalizers used by the Poisson
model: the per-size constant ``kappa(n, N) = n(n-1)/2 * binom(N-2, n-2)`` and
the two size-summed constants

    C  = sum_{n=2}^{D} binom(N-2, n-2) / kappa(n, N)   = 2 (1 - 1/D)
    C' = sum_{d=3}^{D} binom(N-3, d-3) / kappa(d, N)
       = 2/(N-2) * sum_{d=3}^{D} (d-2) / (d (d-1))

where the right-hand sides are the exact reductions implied by the choice of
kappa.  All binomials are handled in log space so the functions stay finite
for node counts up to ~1e7 and sizes up to N.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import sparse
from scipy.special import digamma

_LOG_MAX_FLOAT = math.log(np.finfo(np.float64).max)

# Below this k, log-binomials are accumulated term by term, which is accurate
# to ~1e-13 absolute; the lgamma fallback only triggers for values far too
# large to exponentiate anyway.
_LOG_BINOM_SUM_LIMIT = 4096


class HyperedgeFormatError(ValueError):
    """Malformed hyperedge-list input; carries the offending line number."""

    def __init__(self, message, line_number=None):
        if line_number is not None:
            message = f"line {line_number}: {message}"
        super().__init__(message)
        self.line_number = line_number


@dataclass(frozen=True)
class Hypergraph:
    """Immutable weighted hypergraph.

    Attributes
    ----------
    num_nodes : int
        Number of nodes N; node indices run over 0..N-1.
    edges : tuple of tuple of int
        Canonical hyperedges: strictly increasing node tuples, sorted
        lexicographically, no duplicates.
    weights : ndarray of int64
        Positive integer weight per hyperedge, aligned with ``edges``.
    max_size : int
        Maximum hyperedge size D of the model; at least the largest stored
        hyperedge and at least 2.  May be set larger than observed.
    incidence : scipy.sparse.csc_matrix
        N x |E| incidence with a 1.0 in row i, column e iff node i is in
        hyperedge e.  Stored as float64 so it multiplies directly against
        parameter matrices.
    """

    num_nodes: int
    edges: tuple
    weights: np.ndarray
    max_size: int
    incidence: sparse.csc_matrix

    @classmethod
    def from_edges(cls, edges, weights=None, num_nodes=None, max_size=None):
        """Build a canonical hypergraph from (edge, weight) data.

        Parameters
        ----------
        edges : iterable of node-index iterables
            Hyperedges; each must contain at least two distinct indices.
        weights : iterable of int, optional
            One positive integer per edge (default: all 1).  Duplicate edges
            are merged by summing their weights.
        num_nodes : int, optional
            Total node count, allowing isolated nodes; defaults to
            1 + max index.
        max_size : int, optional
            Model size cap D; must be >= the largest edge.  Defaults to the
            largest observed size (2 for an edgeless hypergraph).
        """
        edges = [tuple(e) for e in edges]
        if weights is None:
            weights = [1] * len(edges)
        else:
            weights = list(weights)
            if len(weights) != len(edges):
                raise ValueError("weights and edges length mismatch")
        merged = {}
        for nodes, a in zip(edges, weights):
            key = _canonical_edge(nodes)
            a = _check_weight(a)
            merged[key] = merged.get(key, 0) + a
        canon = tuple(sorted(merged))
        w = np.array([merged[e] for e in canon], dtype=np.int64)

        observed_max = max((len(e) for e in canon), default=2)
        highest = max((e[-1] for e in canon), default=-1)
        if num_nodes is None:
            num_nodes = highest + 1
        num_nodes = int(num_nodes)
        if num_nodes < highest + 1:
            raise ValueError(
                f"num_nodes={num_nodes} smaller than 1 + max node index {highest}"
            )
        if num_nodes < 2:
            raise ValueError("a hypergraph needs at least 2 nodes")
        if max_size is None:
            max_size = observed_max
        max_size = int(max_size)
        if max_size < observed_max:
            raise ValueError(
                f"max_size={max_size} below largest stored hyperedge ({observed_max})"
            )
        if max_size > num_nodes:
            raise ValueError(f"max_size={max_size} exceeds num_nodes={num_nodes}")

        incidence = _build_incidence(num_nodes, canon)
        return cls(num_nodes, canon, w, max_size, incidence)

    @property
    def num_edges(self):
        return len(self.edges)

    @property
    def sizes(self):
        """Hyperedge cardinalities as an int64 array."""
        return np.fromiter((len(e) for e in self.edges), dtype=np.int64,
                           count=len(self.edges))

    def __eq__(self, other):
        if not isinstance(other, Hypergraph):
            return NotImplemented
        return (self.num_nodes == other.num_nodes
                and self.max_size == other.max_size
                and self.edges == other.edges
                and np.array_equal(self.weights, other.weights))

    def __repr__(self):
        return (f"Hypergraph(num_nodes={self.num_nodes}, "
                f"num_edges={self.num_edges}, max_size={self.max_size})")


def _canonical_edge(nodes):
    nodes = tuple(int(v) for v in nodes)
    if len(nodes) < 2:
        raise ValueError(f"hyperedge {nodes} has fewer than 2 nodes")
    if any(v < 0 for v in nodes):
        raise ValueError(f"negative node index in hyperedge {nodes}")
    key = tuple(sorted(nodes))
    if len(set(key)) != len(key):
        raise ValueError(f"repeated node in hyperedge {nodes}")
    return key


def _check_weight(a):
    if isinstance(a, float) and not a.is_integer():
        raise ValueError(f"non-integer weight {a}")
    a = int(a)
    if a <= 0:
        raise ValueError(f"non-positive weight {a}")
    return a


def _build_incidence(num_nodes, edges):
    sizes = np.fromiter((len(e) for e in edges), dtype=np.int64, count=len(edges))
    rows = np.fromiter((v for e in edges for v in e), dtype=np.int64,
                       count=int(sizes.sum()))
    cols = np.repeat(np.arange(len(edges), dtype=np.int64), sizes)
    data = np.ones(rows.shape[0], dtype=np.float64)
    return sparse.csc_matrix((data, (rows, cols)),
                             shape=(num_nodes, len(edges)))


def load_hyperedge_list(path, weight_default=1):
    """Read a hypergraph from a hyperedge-list text file.

    Format: UTF-8 text, one hyperedge per line as space-separated node
    integers, optionally followed by a TAB and an integer weight (default
    ``weight_default``).  Lines starting with '#' are comments; an optional
    header line ``#N=<int>`` declares the node count (it may only enlarge the
    inferred one, e.g. to keep isolated nodes).  Duplicate hyperedges are
    merged by summing weights.
    """
    weight_default = _check_weight(weight_default)
    declared_n = None
    raw = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line.strip():
                continue
            if line.lstrip().startswith("#"):
                stripped = line.strip()
                if stripped.startswith("#N="):
                    try:
                        declared_n = int(stripped[3:])
                    except ValueError:
                        raise HyperedgeFormatError(
                            f"bad node-count header {stripped!r}", lineno
                        ) from None
                continue
            parts = line.split("\t")
            if len(parts) > 2:
                raise HyperedgeFormatError("more than one TAB field", lineno)
            try:
                nodes = [int(tok) for tok in parts[0].split()]
            except ValueError:
                raise HyperedgeFormatError(
                    f"non-integer node token in {parts[0]!r}", lineno
                ) from None
            weight = weight_default
            if len(parts) == 2:
                try:
                    weight = int(parts[1].strip())
                except ValueError:
                    raise HyperedgeFormatError(
                        f"non-integer weight {parts[1]!r}", lineno
                    ) from None
            try:
                edge = _canonical_edge(nodes)
                weight = _check_weight(weight)
            except ValueError as exc:
                raise HyperedgeFormatError(str(exc), lineno) from None
            raw.append((edge, weight))
    if not raw:
        raise HyperedgeFormatError("no hyperedges in file")
    return Hypergraph.from_edges(
        [e for e, _ in raw],
        weights=[a for _, a in raw],
        num_nodes=declared_n,
    )


def save_hyperedge_list(h, path):
    """Write ``h`` in canonical form: header, sorted nodes, explicit weight."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"#N={h.num_nodes}\n")
        for nodes, a in zip(h.edges, h.weights):
            fh.write(" ".join(map(str, nodes)) + "\t" + str(int(a)) + "\n")


def truncate_max_size(h, cap):
    """Drop hyperedges larger than ``cap`` and reset the model cap D to it."""
    cap = int(cap)
    if cap < 2:
        raise ValueError("max hyperedge size must be at least 2")
    keep = [i for i, e in enumerate(h.edges) if len(e) <= cap]
    return Hypergraph.from_edges(
        [h.edges[i] for i in keep],
        weights=h.weights[keep],
        num_nodes=h.num_nodes,
        max_size=min(cap, h.num_nodes),
    )


def degree_sequence(h):
    """Weighted node degrees: d_i = sum of weights of hyperedges containing i."""
    deg = h.incidence @ h.weights.astype(np.float64)
    return np.rint(deg).astype(np.int64)


def _check_size_domain(n, num_nodes):
    if n < 2 or n > num_nodes:
        raise ValueError(f"hyperedge size {n} outside [2, {num_nodes}]")


@lru_cache(maxsize=65536)
def _log_binomial(n, k):
    """log of binom(n, k) for integers 0 <= k <= n."""
    if k < 0 or k > n:
        return -math.inf
    k = min(k, n - k)
    if k == 0:
        return 0.0
    if k <= _LOG_BINOM_SUM_LIMIT:
        return math.fsum(
            math.log(n - i) - math.log(i + 1) for i in range(k)
        )
    return math.lgamma(n + 1) - math.lgamma(k + 1) - math.lgamma(n - k + 1)


def log_kappa(n, num_nodes):
    """Exact-in-log-space size normalizer log kappa(n, N)."""
    n = int(n)
    num_nodes = int(num_nodes)
    _check_size_domain(n, num_nodes)
    return math.log(n * (n - 1) // 2) + _log_binomial(num_nodes - 2, n - 2)


def kappa(n, num_nodes):
    """Size normalizer kappa(n, N) = n(n-1)/2 * binom(N-2, n-2).

    Computed exactly in integer arithmetic whenever the value is
    representable as a float; returns ``inf`` otherwise (``log_kappa`` stays
    exact in that regime).
    """
    n = int(n)
    num_nodes = int(num_nodes)
    _check_size_domain(n, num_nodes)
    if log_kappa(n, num_nodes) > _LOG_MAX_FLOAT:
        return math.inf
    exact = (n * (n - 1) // 2) * math.comb(num_nodes - 2, n - 2)
    try:
        return float(exact)
    except OverflowError:
        return math.inf


def constant_C(num_nodes, max_size):
    """Size-summed likelihood constant C = sum_n binom(N-2, n-2)/kappa_n.

    Every term reduces to 2/(n(n-1)), so the sum telescopes to 2(1 - 1/D)
    independently of N; the closed form is used for stability.
    """
    num_nodes = int(num_nodes)
    max_size = int(max_size)
    if max_size < 2 or max_size > num_nodes:
        raise ValueError(f"max_size {max_size} outside [2, {num_nodes}]")
    return 2.0 * (1.0 - 1.0 / max_size)


def constant_Cprime(num_nodes, max_size):
    """Background-field constant C' = sum_{d=3}^{D} binom(N-3, d-3)/kappa_d.

    Reduces to 2/(N-2) * sum_{d=3}^{D} (d-2)/(d(d-1)); the inner sum equals
    H_D + 1/D - 2 with H_D the D-th harmonic number, evaluated via digamma so
    the cost stays O(1) for any D.
    """
    num_nodes = int(num_nodes)
    max_size = int(max_size)
    if num_nodes < 3:
        raise ValueError(f"num_nodes {num_nodes} must be at least 3")
    if max_size < 2 or max_size > num_nodes:
        raise ValueError(f"max_size {max_size} outside [2, {num_nodes}]")
    if max_size == 2:
        return 0.0
    harmonic = float(digamma(max_size + 1)) + np.euler_gamma
    return (2.0 / (num_nodes - 2.0)) * (harmonic + 1.0 / max_size - 2.0)
