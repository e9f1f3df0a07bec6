"""Model mathematics for the Poisson bilinear hypergraph blockmodel.

Each candidate hyperedge e carries an independent Poisson weight with mean
``lambda_e / kappa_{|e|}`` where

    lambda_e = sum_{i<j in e} u_i^T w u_j

for an N x K non-negative membership matrix ``u`` and a symmetric
non-negative K x K affinity matrix ``w``.  Dropping parameter-independent
constants, the log-likelihood of an observed weighted hyperedge list is

    -C * sum_{i<j in V} u_i^T w u_j  +  sum_{e in E} A_e log lambda_e

with C the size-summed constant from :mod:`hymix.hypergraph`.  The global
pair sum is never expanded over node pairs: with s = sum_i u_i it equals
``(s^T w s - sum_i u_i^T w u_i) / 2``, which costs O(NK + K^2).  The same
identity applied to the rows selected by a hyperedge gives the batched
per-hyperedge rates in O(|e|) each.

Exponential priors (uniform rates per parameter block, an explicit rate of 0
meaning no prior) turn the log-likelihood into a log-posterior, with the
affinity prior summed over the upper triangle of the symmetric matrix.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from .hypergraph import constant_C, constant_Cprime, log_kappa

# Rates this small are treated as zero when they appear under a log or in a
# denominator for an observed hyperedge; random inits can zero a rate exactly.
LAMBDA_FLOOR = 1e-12


@dataclass(frozen=True)
class ModelParams:
    """Non-negative membership matrix u (N x K) and symmetric affinity w (K x K)."""

    u: np.ndarray
    w: np.ndarray

    def __post_init__(self):
        u = np.asarray(self.u, dtype=np.float64)
        w = np.asarray(self.w, dtype=np.float64)
        if u.ndim != 2 or w.ndim != 2:
            raise ValueError("u and w must be 2-dimensional")
        if w.shape[0] != w.shape[1] or w.shape[0] != u.shape[1]:
            raise ValueError(f"shape mismatch: u {u.shape}, w {w.shape}")
        if u.shape[1] < 1:
            raise ValueError("need at least one community")
        if np.any(u < 0) or np.any(w < 0):
            raise ValueError("parameters must be non-negative")
        if not np.array_equal(w, w.T):
            raise ValueError("affinity matrix must be exactly symmetric")
        object.__setattr__(self, "u", np.ascontiguousarray(u))
        object.__setattr__(self, "w", np.ascontiguousarray(w))

    @property
    def num_nodes(self):
        return self.u.shape[0]

    @property
    def num_communities(self):
        return self.u.shape[1]


@dataclass(frozen=True)
class PriorRates:
    """Exponential prior rates for the two parameter blocks.

    A rate of 0 disables the prior (maximum likelihood) for that block.  The
    defaults (0 for memberships, 1 for affinities) fix the scale of the
    parameters through the affinity prior only.  Scalars apply uniformly;
    arrays of matching shape are accepted for per-entry rates.
    """

    rate_u: object = 0.0
    rate_w: object = 1.0

    def __post_init__(self):
        for name in ("rate_u", "rate_w"):
            value = getattr(self, name)
            arr = np.asarray(value, dtype=np.float64)
            if np.any(arr < 0):
                raise ValueError(f"{name} must be non-negative")
            object.__setattr__(self, name, arr if arr.ndim else float(arr))


NO_PRIORS = PriorRates(0.0, 0.0)


def lambda_naive(edge, params):
    """Poisson-rate numerator of one hyperedge by explicit pair summation.

    Reference implementation with O(|e|^2 K^2) cost; the batched routines are
    checked against it.
    """
    edge = list(edge)
    if len(edge) < 2:
        raise ValueError(f"hyperedge must have at least 2 nodes, got {len(edge)}")
    u, w = params.u, params.w
    total = 0.0
    for a in range(len(edge)):
        for b in range(a + 1, len(edge)):
            total += float(u[edge[a]] @ w @ u[edge[b]])
    return total


def lambda_batched(h, params):
    """Rate numerators for every stored hyperedge via the incidence matrix.

    Uses lambda_e = (s_e^T w s_e - sum_{i in e} u_i^T w u_i) / 2 with
    s_e = sum_{i in e} u_i computed as a sparse product, so the cost is
    linear in the total incidence size.  Tiny negative results from
    cancellation are clamped to 0.
    """
    u, w = params.u, params.w
    if h.num_nodes != u.shape[0]:
        raise ValueError("hypergraph and parameters disagree on node count")
    edge_sums = h.incidence.T @ u
    self_terms = np.einsum("ik,ik->i", u @ w, u)
    lam = 0.5 * (np.einsum("ek,ek->e", edge_sums @ w, edge_sums)
                 - h.incidence.T @ self_terms)
    return np.maximum(lam, 0.0)


def _lambda_one(edge, u, w):
    rows = u[np.asarray(edge, dtype=np.int64)]
    s_e = rows.sum(axis=0)
    lam = 0.5 * (s_e @ w @ s_e - np.einsum("ik,ik->", rows @ w, rows))
    return max(lam, 0.0)


def total_pair_affinity(params):
    """Global interaction mass sum_{i<j in V} u_i^T w u_j in O(NK + K^2)."""
    u, w = params.u, params.w
    s = u.sum(axis=0)
    self_terms = np.einsum("ik,ik->", u @ w, u)
    return 0.5 * (s @ w @ s - self_terms)


def log_likelihood(h, params, max_size=None):
    """Log-likelihood of the stored hyperedges, up to data-only constants.

    Returns ``-inf`` when some observed hyperedge has an exactly zero rate
    (the model assigns it probability zero).
    """
    max_size = _resolve_max_size(h, max_size)
    c_total = constant_C(h.num_nodes, max_size)
    value = -c_total * total_pair_affinity(params)
    if h.num_edges:
        lam = lambda_batched(h, params)
        if np.any(lam == 0.0):
            return -math.inf
        value += float(h.weights @ np.log(lam))
    return float(value)


def log_posterior(h, params, priors, max_size=None):
    """Log-likelihood plus the exponential log-prior terms.

    The membership penalty is ``rate_u * sum(u)``; the affinity penalty sums
    ``rate_w * w`` over the upper triangle including the diagonal (the free
    entries of the symmetric matrix).  Prior normalization constants are
    dropped.
    """
    ll = log_likelihood(h, params, max_size=max_size)
    if ll == -math.inf:
        return -math.inf
    upper = np.triu_indices(params.num_communities)
    penalty = float(np.sum(priors.rate_u * params.u)) \
        + float(np.sum((priors.rate_w * params.w)[upper]))
    return ll - penalty


def hyperedge_log_pmf(edge, weight, params, num_nodes, max_size):
    """Log Poisson probability of observing ``weight`` on one hyperedge.

    The mean is lambda_e / kappa_{|e|}, with the normalizer handled in log
    space so very large node counts do not overflow.
    """
    edge = tuple(edge)
    if len(edge) < 2 or len(edge) > max_size:
        raise ValueError(f"hyperedge size {len(edge)} outside [2, {max_size}]")
    if weight < 0:
        raise ValueError(f"negative hyperedge weight {weight}")
    lam = _lambda_one(edge, params.u, params.w)
    if lam == 0.0:
        return 0.0 if weight == 0 else -math.inf
    log_mean = math.log(lam) - log_kappa(len(edge), num_nodes)
    mean = math.exp(log_mean)
    return -mean + weight * log_mean - float(gammaln(weight + 1))


def expected_degree(i, params, num_nodes, max_size):
    """Expected weighted degree of node i under the model.

    Splits into a pairwise (cavity) term C * u_i^T w sum_{j != i} u_j and a
    background term C' * sum_{j<m, both != i} u_j^T w u_m that only exists
    for hyperedge sizes above 2.
    """
    u, w = params.u, params.w
    if num_nodes != u.shape[0]:
        raise ValueError("node count disagrees with membership matrix")
    c_total = constant_C(num_nodes, max_size)
    cprime = constant_Cprime(num_nodes, max_size) if max_size >= 3 else 0.0
    s = u.sum(axis=0)
    cavity = float(u[i] @ w @ (s - u[i]))
    background = total_pair_affinity(params) - cavity
    return c_total * cavity + cprime * background


def expected_degree_size_k(k, params, num_nodes):
    """Expected weighted degree restricted to hyperedges of exactly size k.

    The general form binom(N-2, k-2) * k / (kappa_k N) * sum_{i<j} u_i^T w u_j
    reduces with this kappa to 2 / ((k-1) N) times the global pair sum.
    """
    k = int(k)
    if k < 2 or k > num_nodes:
        raise ValueError(f"size {k} outside [2, {num_nodes}]")
    return 2.0 / ((k - 1) * num_nodes) * total_pair_affinity(params)


def mean_weighted_degree(params, num_nodes, max_size):
    """Expected weighted degree averaged over nodes, all sizes up to D."""
    factor = sum(1.0 / (k - 1) for k in range(2, max_size + 1))
    return 2.0 * factor / num_nodes * total_pair_affinity(params)


def _resolve_max_size(h, max_size):
    if max_size is None:
        return h.max_size
    max_size = int(max_size)
    observed = max((len(e) for e in h.edges), default=2)
    if max_size < observed:
        raise ValueError(
            f"max_size={max_size} below largest stored hyperedge ({observed})"
        )
    if max_size > h.num_nodes:
        raise ValueError(f"max_size={max_size} exceeds num_nodes={h.num_nodes}")
    return max_size


def params_to_dict(params, seed=None, final_loglik=None):
    """JSON-ready dict with shortest round-trip float encoding."""
    return {
        "N": params.num_nodes,
        "K": params.num_communities,
        "u": params.u.tolist(),
        "w": params.w.tolist(),
        "seed": None if seed is None else int(seed),
        "final_loglik": None if final_loglik is None else float(final_loglik),
    }


def params_from_dict(payload):
    u = np.asarray(payload["u"], dtype=np.float64)
    w = np.asarray(payload["w"], dtype=np.float64)
    params = ModelParams(u, w)
    if "N" in payload and int(payload["N"]) != params.num_nodes:
        raise ValueError("declared N disagrees with membership matrix shape")
    if "K" in payload and int(payload["K"]) != params.num_communities:
        raise ValueError("declared K disagrees with matrix shapes")
    return params


def save_params(params, path, seed=None, final_loglik=None):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(params_to_dict(params, seed=seed, final_loglik=final_loglik),
                  fh, indent=2)
        fh.write("\n")


def load_params(path):
    with open(path, encoding="utf-8") as fh:
        return params_from_dict(json.load(fh))
