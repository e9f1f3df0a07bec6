"""Thin wrapper exposing the hymix engine to plain-Python callers.

Everything here converts between native nested sequences (lists of node
lists, nested float lists) and the engine's array-backed types, then
delegates; no model mathematics is re-implemented.  Given the same seed and
configuration, results are identical to the ``hymix`` command line, down to
the serialized parameter JSON, because both go through the same code path.

The wrapper itself only does data conversion; the heavy numerical work runs
inside the engine's vectorized routines, which do not hold the interpreter
lock while NumPy computes.
"""

from __future__ import annotations

import numpy as np

import hymix as _core

__version__ = "0.1.0"

__all__ = [
    "BoundHypergraph",
    "BoundParams",
    "auc",
    "cosine_similarity",
    "infer",
    "load_hypergraph",
    "sample",
]


class BoundHypergraph:
    """Immutable handle on an engine hypergraph.

    Built from a sequence of node lists, or of ``(node_list, weight)``
    pairs; converts back to exactly the canonical pairs the engine stores.
    """

    __slots__ = ("_h",)

    def __init__(self, edges, num_nodes=None, max_size=None):
        if isinstance(edges, _core.Hypergraph):
            self._h = edges
            return
        node_lists, weights = _split_edge_sequence(edges)
        self._h = _core.Hypergraph.from_edges(
            node_lists, weights=weights, num_nodes=num_nodes,
            max_size=max_size)

    @property
    def num_nodes(self):
        return self._h.num_nodes

    @property
    def num_edges(self):
        return self._h.num_edges

    @property
    def max_size(self):
        return self._h.max_size

    def to_edges(self):
        """Canonical ``(node_list, weight)`` pairs as native lists/ints."""
        return [(list(e), int(a))
                for e, a in zip(self._h.edges, self._h.weights)]

    def unwrap(self):
        return self._h


class BoundParams:
    """Immutable handle on fitted parameters plus fit metadata."""

    __slots__ = ("_params", "seed", "final_loglik")

    def __init__(self, params, seed=None, final_loglik=None):
        if not isinstance(params, _core.ModelParams):
            raise TypeError("expected engine parameters")
        self._params = params
        self.seed = seed
        self.final_loglik = final_loglik

    @classmethod
    def from_lists(cls, u, w, seed=None, final_loglik=None):
        return cls(_core.ModelParams(np.asarray(u, dtype=np.float64),
                                     np.asarray(w, dtype=np.float64)),
                   seed=seed, final_loglik=final_loglik)

    @property
    def u(self):
        return self._params.u.tolist()

    @property
    def w(self):
        return self._params.w.tolist()

    def to_dict(self):
        return _core.params_to_dict(self._params, seed=self.seed,
                                    final_loglik=self.final_loglik)

    def save(self, path):
        """Write the same parameter JSON the command line emits."""
        _core.save_params(self._params, path, seed=self.seed,
                          final_loglik=self.final_loglik)

    def unwrap(self):
        return self._params


def _split_edge_sequence(edges):
    node_lists, weights = [], []
    for item in edges:
        item = list(item)
        if len(item) == 2 and not np.isscalar(item[0]) \
                and np.isscalar(item[1]):
            node_lists.append(list(item[0]))
            weights.append(int(item[1]))
        else:
            node_lists.append(item)
            weights.append(1)
    return node_lists, weights


def load_hypergraph(path, weight_default=1):
    """Read a hyperedge-list file into a bound handle."""
    return BoundHypergraph(_core.load_hyperedge_list(
        path, weight_default=weight_default))


def _as_hypergraph(edges, num_nodes=None, max_size=None):
    if isinstance(edges, BoundHypergraph):
        return edges.unwrap()
    if isinstance(edges, _core.Hypergraph):
        return edges
    return BoundHypergraph(edges, num_nodes=num_nodes,
                           max_size=max_size).unwrap()


def _config_from_mapping(config):
    config = dict(config or {})
    if "k" not in config:
        raise ValueError("config needs 'k' (number of communities)")
    return _core.InferenceConfig(
        K=int(config.pop("k")),
        num_restarts=int(config.pop("restarts", 10)),
        max_iter=int(config.pop("max_iter", 2000)),
        tol=float(config.pop("tol", 1e-6)),
        check_every=int(config.pop("check_every", 10)),
        priors=_core.PriorRates(float(config.pop("prior_u", 0.0)),
                                float(config.pop("prior_w", 1.0))),
        assortative=bool(config.pop("assortative", False)),
        seed=int(config.pop("seed", 0)),
        init_scale=float(config.pop("init_scale", 1.0)),
    ), config


def infer(edges, config, num_nodes=None, max_size=None):
    """Fit the model; returns ``(u, w, report)`` as native lists and a dict.

    ``edges`` is a sequence of node lists or ``(node_list, weight)`` pairs
    (or a bound handle); ``config`` is a mapping mirroring the command-line
    flags: ``k`` (required), ``restarts``, ``max_iter``, ``tol``,
    ``prior_u``, ``prior_w``, ``assortative``, ``seed``.  The report dict
    carries per-restart objectives, traces and the best restart's metadata;
    ``report["params"]`` is a :class:`BoundParams` handle whose ``save``
    writes exactly the command line's parameter JSON.
    """
    h = _as_hypergraph(edges, num_nodes=num_nodes, max_size=max_size)
    cfg, extra = _config_from_mapping(config)
    if extra:
        raise ValueError(f"unknown config keys: {sorted(extra)}")
    result = _core.infer(h, cfg)
    best = result.restarts[result.best_index]
    report = result.to_dict()
    report["params"] = BoundParams(result.best_params, seed=best.seed,
                                   final_loglik=result.best_objective)
    return (result.best_params.u.tolist(), result.best_params.w.tolist(),
            report)


def sample(u, w, max_size, seed=0):
    """Draw one hypergraph from given parameters; returns edge pairs."""
    params = BoundParams.from_lists(u, w).unwrap()
    drawn = _core.sample_exact(params, params.num_nodes, int(max_size),
                               np.random.default_rng(int(seed)))
    return BoundHypergraph(drawn).to_edges()


def auc(edges, config, train_ratio=0.8, comparisons_per_edge=1,
        use_observed_weight=True, num_nodes=None, max_size=None):
    """Split, fit on the train part, score hyperedge prediction on the test.

    Mirrors the command line's ``auc`` subcommand; returns a dict with the
    score, its standard error and the fitted parameter handle.
    """
    h = _as_hypergraph(edges, num_nodes=num_nodes, max_size=max_size)
    cfg, extra = _config_from_mapping(config)
    if extra:
        raise ValueError(f"unknown config keys: {sorted(extra)}")
    split = _core.train_test_split(h, float(train_ratio), cfg.seed)
    result = _core.infer(split.train, cfg)
    score, stderr = _core.auc_score(
        result.best_params, split, h.num_nodes, h.max_size,
        np.random.default_rng(cfg.seed),
        comparisons_per_edge=int(comparisons_per_edge),
        use_observed_weight=use_observed_weight)
    best = result.restarts[result.best_index]
    return {
        "auc": score,
        "std_err": stderr,
        "num_test_edges": len(split.test),
        "params": BoundParams(result.best_params, seed=best.seed,
                              final_loglik=result.best_objective),
    }


def cosine_similarity(u_true, u_inferred):
    """Permutation-aligned mean row cosine between two membership matrices."""
    return _core.cosine_similarity_score(
        np.asarray(u_true, dtype=np.float64),
        np.asarray(u_inferred, dtype=np.float64))
