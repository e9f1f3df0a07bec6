"""Exact sampling from the model and planted-partition benchmark generation.

The sampler enumerates every candidate hyperedge of size 2..D over N nodes
and draws its weight from the model's Poisson distribution, keeping the
non-zero draws.  This is exact but only viable at desk scale, so the
candidate space is capped at 10^7; within that budget it doubles as a Monte
Carlo oracle for the closed-form degree expectations.

Benchmarks plant a block structure: the affinity matrix has ``c_in`` on the
diagonal and ``c_out`` off it, and memberships are either hard one-hot
assignments into near-equal groups or soft rows mixing a node's own
community with the next one (0.8 / 0.2, cyclically).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, replace

import numpy as np

from .hypergraph import Hypergraph, kappa
from .model import ModelParams, mean_weighted_degree

MAX_CANDIDATES = 10 ** 7
_CHUNK = 100_000

_MIX_MAIN = 0.8
_MIX_NEXT = 0.2


@dataclass(frozen=True)
class PlantedSpec:
    """Planted-partition benchmark description."""

    num_nodes: int
    num_communities: int
    membership_mode: str  # "hard" or "mixed"
    c_in: float
    c_out: float
    max_size: int
    seed: int = 0

    def __post_init__(self):
        if self.membership_mode not in ("hard", "mixed"):
            raise ValueError(f"unknown membership mode {self.membership_mode!r}")
        if not self.c_in > 0:
            raise ValueError("c_in must be positive")
        if self.c_out < 0:
            raise ValueError("c_out must be non-negative")
        if self.num_communities < 1 or self.num_nodes < self.num_communities:
            raise ValueError("need num_nodes >= num_communities >= 1")
        if self.max_size < 2 or self.max_size > self.num_nodes:
            raise ValueError("max_size outside [2, num_nodes]")


def candidate_space_size(num_nodes, max_size):
    """Number of possible hyperedges of size 2..max_size over num_nodes."""
    return sum(math.comb(num_nodes, n) for n in range(2, max_size + 1))


def sample_exact(params, num_nodes, max_size, rng):
    """Draw one hypergraph by Poisson-sampling every candidate hyperedge.

    Refuses candidate spaces above 10^7; this sampler is meant for desk-scale
    experiments and verification, not large-scale generation.
    """
    if params.num_nodes != num_nodes:
        raise ValueError("node count disagrees with membership matrix")
    space = candidate_space_size(num_nodes, max_size)
    if space > MAX_CANDIDATES:
        raise ValueError(
            f"candidate space has {space} hyperedges, above the desk-scale "
            f"limit of {MAX_CANDIDATES}; reduce num_nodes or max_size"
        )
    u, w = params.u, params.w
    self_terms = np.einsum("ik,ik->i", u @ w, u)
    edges = []
    weights = []
    for size in range(2, max_size + 1):
        inv_kappa = 1.0 / kappa(size, num_nodes)
        for chunk in _combination_chunks(num_nodes, size):
            s_e = u[chunk].sum(axis=1)           # (m, K)
            lam = 0.5 * (np.einsum("ek,ek->e", s_e @ w, s_e)
                         - self_terms[chunk].sum(axis=1))
            mean = np.maximum(lam, 0.0) * inv_kappa
            draws = rng.poisson(mean)
            hit = np.nonzero(draws)[0]
            edges.extend(map(tuple, chunk[hit]))
            weights.extend(int(a) for a in draws[hit])
    return Hypergraph.from_edges(edges, weights=weights,
                                 num_nodes=num_nodes, max_size=max_size)


def _combination_chunks(num_nodes, size):
    it = itertools.combinations(range(num_nodes), size)
    while True:
        chunk = list(itertools.islice(it, _CHUNK))
        if not chunk:
            return
        yield np.asarray(chunk, dtype=np.int64)


def build_planted_params(spec):
    """Membership and affinity matrices for a planted benchmark."""
    K = spec.num_communities
    labels = _block_labels(spec.num_nodes, K)
    if spec.membership_mode == "hard":
        u = np.zeros((spec.num_nodes, K))
        u[np.arange(spec.num_nodes), labels] = 1.0
    else:
        u = np.zeros((spec.num_nodes, K))
        u[np.arange(spec.num_nodes), labels] = _MIX_MAIN
        if K > 1:
            u[np.arange(spec.num_nodes), (labels + 1) % K] = _MIX_NEXT
        else:
            u[:, 0] = _MIX_MAIN + _MIX_NEXT
    w = np.full((K, K), float(spec.c_out))
    np.fill_diagonal(w, float(spec.c_in))
    return ModelParams(u, w)


def _block_labels(num_nodes, num_communities):
    """Community label per node, group sizes as equal as divisibility allows."""
    base = num_nodes // num_communities
    extra = num_nodes % num_communities
    sizes = [base + (1 if c < extra else 0) for c in range(num_communities)]
    return np.repeat(np.arange(num_communities), sizes)


def scale_to_mean_degree(spec, target_degree):
    """Rescale (c_in, c_out) jointly so the expected mean degree hits target."""
    if not target_degree > 0:
        raise ValueError("target mean degree must be positive")
    current = mean_weighted_degree(build_planted_params(spec),
                                   spec.num_nodes, spec.max_size)
    if current <= 0:
        raise ValueError("benchmark has zero expected degree; cannot rescale")
    factor = target_degree / current
    return replace(spec, c_in=spec.c_in * factor, c_out=spec.c_out * factor)


def generate_benchmark(spec):
    """Sample a benchmark hypergraph; returns it with the ground-truth u."""
    params = build_planted_params(spec)
    rng = np.random.default_rng(spec.seed)
    sample = sample_exact(params, spec.num_nodes, spec.max_size, rng)
    return sample, params.u
