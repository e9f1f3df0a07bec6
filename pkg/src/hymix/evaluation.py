"""Scoring protocols: splits, hyperedge prediction AUC, recovery, CP profile.

Hyperedge prediction follows the usual held-out protocol: the hyperedge list
is partitioned uniformly at random into train and test, the model is fitted
on the train part, and each test hyperedge is compared against randomly drawn
non-observed hyperedges of the same size.  The AUC is the fraction of
comparisons where the observed hyperedge gets the higher Poisson
log-probability, ties counting one half.

Recovery against a known ground truth is measured by the mean cosine
similarity between membership rows after optimally matching inferred
community columns to true ones (an assignment problem, solved exactly).

The core-periphery profile gamma(S) of a node set S is the number of
hyperedges fully inside S over the number touching S; sweeping S along a
core-score ordering traces how sharply a core emerges.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

from .hypergraph import Hypergraph
from .inference import config_with, infer
from .model import hyperedge_log_pmf

_MAX_REJECTIONS = 1000


@dataclass(frozen=True)
class EvaluationSplit:
    """Disjoint train/test partition of a hypergraph's hyperedge list."""

    train: Hypergraph
    test: tuple  # of (edge tuple, weight) pairs
    ratio: float
    seed: int


def _num_test_edges(num_edges, ratio):
    return int(round((1.0 - ratio) * num_edges))


def train_test_split(h, ratio, seed):
    """Uniform random partition of hyperedges (not of weight mass).

    ``ratio`` is the train fraction; the test side gets
    ``round((1 - ratio) * |E|)`` hyperedges.  Deterministic per seed.
    """
    if not 0.0 < ratio < 1.0:
        raise ValueError("train ratio must lie strictly between 0 and 1")
    if h.num_edges < 2:
        raise ValueError("need at least 2 hyperedges to split")
    n_test = _num_test_edges(h.num_edges, ratio)
    if n_test == 0:
        raise ValueError(f"ratio {ratio} too extreme: empty test set")
    rng = np.random.default_rng(seed)
    perm = rng.permutation(h.num_edges)
    test_idx = np.sort(perm[:n_test])
    train_idx = np.sort(perm[n_test:])
    train = Hypergraph.from_edges(
        [h.edges[i] for i in train_idx],
        weights=h.weights[train_idx],
        num_nodes=h.num_nodes,
        max_size=h.max_size,
    )
    test = tuple((h.edges[i], int(h.weights[i])) for i in test_idx)
    return EvaluationSplit(train=train, test=test, ratio=float(ratio),
                           seed=int(seed))


def pairwise_auc(observed_scores, negative_scores):
    """Mean win rate of observed over negative scores, ties scoring 0.5.

    Returns ``(auc, standard_error)`` with the binomial standard error of the
    mean over comparisons.
    """
    observed_scores = np.asarray(observed_scores, dtype=np.float64)
    negative_scores = np.asarray(negative_scores, dtype=np.float64)
    if observed_scores.shape != negative_scores.shape or observed_scores.size == 0:
        raise ValueError("need matching, non-empty score arrays")
    outcomes = np.where(
        observed_scores > negative_scores, 1.0,
        np.where(observed_scores == negative_scores, 0.5, 0.0),
    )
    auc = float(outcomes.mean())
    stderr = float(np.sqrt(auc * (1.0 - auc) / outcomes.size))
    return auc, stderr


def auc_score(params, split, num_nodes, max_size, rng,
              comparisons_per_edge=1, use_observed_weight=True):
    """Hyperedge-prediction AUC of fitted parameters on a held-out test set.

    For every test hyperedge, ``comparisons_per_edge`` non-observed
    hyperedges of the same size are drawn uniformly (rejection against the
    whole observed set, train and test).  Observed and negative are scored at
    the same weight - the observed one by default, 1 with
    ``use_observed_weight=False`` - so the comparison isolates the rate.

    ``rng`` may be a seed or a Generator; per-edge substreams are spawned
    from it, so the result does not depend on evaluation order.
    """
    if comparisons_per_edge < 1:
        raise ValueError("comparisons_per_edge must be >= 1")
    if not split.test:
        raise ValueError("empty test set")
    rng = np.random.default_rng(rng)
    observed = set(split.train.edges) | {e for e, _ in split.test}
    streams = rng.spawn(len(split.test))
    obs_scores = np.empty(len(split.test) * comparisons_per_edge)
    neg_scores = np.empty_like(obs_scores)
    pos = 0
    for (edge, weight), stream in zip(split.test, streams):
        score_weight = weight if use_observed_weight else 1
        obs = hyperedge_log_pmf(edge, score_weight, params, num_nodes, max_size)
        for _ in range(comparisons_per_edge):
            negative = _draw_negative(stream, num_nodes, len(edge), observed)
            obs_scores[pos] = obs
            neg_scores[pos] = hyperedge_log_pmf(negative, score_weight, params,
                                                num_nodes, max_size)
            pos += 1
    return pairwise_auc(obs_scores, neg_scores)


def _draw_negative(rng, num_nodes, size, observed):
    for _ in range(_MAX_REJECTIONS):
        edge = tuple(sorted(rng.choice(num_nodes, size=size, replace=False)))
        if edge not in observed:
            return edge
    raise RuntimeError(
        f"could not draw a non-observed hyperedge of size {size} after "
        f"{_MAX_REJECTIONS} attempts; the hypergraph is near-complete at "
        f"this size"
    )


def cosine_similarity_score(u_true, u_inferred):
    """Mean per-node cosine similarity after optimal community matching.

    Columns of ``u_inferred`` are permuted to maximize the mean row cosine
    (solved exactly as an assignment problem for any K); all-zero rows
    contribute 0 by convention.
    """
    a = np.asarray(u_true, dtype=np.float64)
    b = np.asarray(u_inferred, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    a_hat = _normalize_rows(a)
    b_hat = _normalize_rows(b)
    overlap = a_hat.T @ b_hat / a.shape[0]
    row_ind, col_ind = linear_sum_assignment(overlap, maximize=True)
    return float(overlap[row_ind, col_ind].sum())


def _normalize_rows(m):
    norms = np.linalg.norm(m, axis=1, keepdims=True)
    with np.errstate(invalid="ignore", divide="ignore"):
        out = np.where(norms > 0, m / norms, 0.0)
    return out


def compare_assortative(h, cfg, threads=1):
    """Best objectives of the assortative (diagonal w) and full-w fits.

    Both runs share every setting, including the seed, except the
    assortativity flag.  Returns ``(objective_assortative, objective_full)``.
    """
    report_a = infer(h, config_with(cfg, assortative=True), threads=threads)
    report_d = infer(h, config_with(cfg, assortative=False), threads=threads)
    return report_a.best_objective, report_d.best_objective


def select_k(h, k_grid, cfg_template, ratio, seed, comparisons_per_edge=1,
             threads=1):
    """Choose the community count by held-out AUC over a grid.

    One split (deterministic per seed) is shared by all grid points; each K
    is fitted on the train part and scored on the test part.  Returns
    ``(best_k, rows)`` where rows are ``(k, auc, stderr)`` tuples and ties
    prefer the smallest K.
    """
    k_grid = sorted(set(int(k) for k in k_grid))
    if not k_grid:
        raise ValueError("empty K grid")
    split = train_test_split(h, ratio, seed)
    rows = []
    best_k = None
    best_auc = -np.inf
    for k in k_grid:
        report = infer(split.train, config_with(cfg_template, K=k),
                       threads=threads)
        auc, stderr = auc_score(
            report.best_params, split, h.num_nodes, h.max_size,
            np.random.default_rng(seed), comparisons_per_edge=comparisons_per_edge,
        )
        rows.append((k, auc, stderr))
        if auc > best_auc:
            best_k, best_auc = k, auc
    return best_k, rows


def cp_profile(h, node_set):
    """Fraction of hyperedges fully inside S among those touching S.

    Counts hyperedges, not weights; returns 0 when no hyperedge touches S.
    """
    members = np.zeros(h.num_nodes, dtype=bool)
    for i in node_set:
        i = int(i)
        if i < 0 or i >= h.num_nodes:
            raise ValueError(f"node index {i} outside [0, {h.num_nodes})")
        members[i] = True
    inside = 0
    touched = 0
    for edge in h.edges:
        hits = sum(members[v] for v in edge)
        if hits:
            touched += 1
            if hits == len(edge):
                inside += 1
    return inside / touched if touched else 0.0


def cp_profile_curve(h, scores, k_max=None):
    """CP profile along the ordering by ascending score (ties by node index).

    Returns ``[(k, gamma(S_k))]`` for k = 1..k_max with S_k the k
    smallest-score nodes; ``k_max`` is clamped to N.
    """
    scores = np.asarray(scores, dtype=np.float64)
    if scores.shape != (h.num_nodes,):
        raise ValueError("need exactly one score per node")
    k_max = h.num_nodes if k_max is None else min(int(k_max), h.num_nodes)
    order = np.argsort(scores, kind="stable")
    rank = np.empty(h.num_nodes, dtype=np.int64)
    rank[order] = np.arange(h.num_nodes)
    # Hyperedge e is inside S_k iff its largest rank < k, touches S_k iff its
    # smallest rank < k; cumulative counts give the whole curve at once.
    full_at = np.zeros(h.num_nodes + 1, dtype=np.int64)
    touch_at = np.zeros(h.num_nodes + 1, dtype=np.int64)
    for edge in h.edges:
        edge_ranks = rank[list(edge)]
        full_at[edge_ranks.max() + 1] += 1
        touch_at[edge_ranks.min() + 1] += 1
    full = np.cumsum(full_at)
    touch = np.cumsum(touch_at)
    curve = []
    for k in range(1, k_max + 1):
        gamma = full[k] / touch[k] if touch[k] else 0.0
        curve.append((k, float(gamma)))
    return curve
