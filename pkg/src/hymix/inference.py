"""Multiplicative EM/MAP fitting of the bilinear Poisson hypergraph model.

One iteration updates the membership matrix and then the affinity matrix,
with the per-hyperedge rates recomputed before each half-step.  Both updates
are multiplicative: every entry is rescaled by a non-negative ratio, so
non-negativity is preserved and exact zeros stay exact zeros (in particular a
diagonal affinity matrix stays diagonal, which is how the assortative variant
is obtained).  With the rates expressed through the incidence matrix, one
iteration costs O(nnz * K + N K + K^2) - linear in nodes and hyperedges.

The updates maximize, coordinate-block-wise, the log-posterior implemented in
:func:`hymix.model.log_posterior`; its value is recorded every
``check_every`` iterations and convergence is declared after two consecutive
checks with a relative change below ``tol``.  Several random restarts are run
from seeds derived deterministically from the configuration seed, and the
restart with the best final objective wins.
"""

from __future__ import annotations

import concurrent.futures
from dataclasses import dataclass, field, replace

import numpy as np

from .hypergraph import constant_C
from .model import LAMBDA_FLOOR, ModelParams, PriorRates, lambda_batched, log_posterior

_MASK64 = (1 << 64) - 1


class NumericsError(RuntimeError):
    """Numerical failure during inference (divergence, impossible update)."""


@dataclass(frozen=True)
class InferenceConfig:
    """Settings for one EM fit.

    ``tol`` bounds the relative objective change; convergence requires two
    consecutive sub-tolerance checks, evaluated every ``check_every``
    iterations.  All randomness derives from ``seed``.
    """

    K: int
    num_restarts: int = 10
    max_iter: int = 2000
    tol: float = 1e-6
    check_every: int = 10
    priors: PriorRates = field(default_factory=PriorRates)
    assortative: bool = False
    seed: int = 0
    init_scale: float = 1.0

    def __post_init__(self):
        if self.K < 1:
            raise ValueError("K must be at least 1")
        if self.num_restarts < 1 or self.max_iter < 1 or self.check_every < 1:
            raise ValueError("num_restarts, max_iter, check_every must be >= 1")
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if not self.init_scale > 0:
            raise ValueError("init_scale must be positive")


@dataclass(frozen=True)
class RestartResult:
    index: int
    seed: int
    final_objective: float
    iterations: int
    converged: bool
    degenerate: bool
    trace: tuple
    error: str = None

    @property
    def failed(self):
        return self.error is not None


@dataclass(frozen=True)
class InferenceReport:
    best_params: ModelParams
    best_objective: float
    best_index: int
    restarts: tuple

    def to_dict(self):
        return {
            "best_objective": self.best_objective,
            "best_restart_index": self.best_index,
            "num_restarts": len(self.restarts),
            "restarts": [
                {
                    "index": r.index,
                    "seed": r.seed,
                    "final_objective": r.final_objective,
                    "iterations": r.iterations,
                    "converged": r.converged,
                    "degenerate": r.degenerate,
                    "trace": [[it, obj] for it, obj in r.trace],
                    "error": r.error,
                }
                for r in self.restarts
            ],
        }


def derive_restart_seed(seed, index):
    """SplitMix-style 64-bit seed for restart ``index``; order-independent."""
    z = (int(seed) + (index + 1) * 0x9E3779B97F4A7C15) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def init_params(num_nodes, K, assortative, rng, init_scale=1.0):
    """Random initialization: uniform memberships, symmetric uniform affinity.

    The affinity upper triangle is drawn and mirrored; in assortative mode
    the off-diagonal entries are then set exactly to zero, so the
    multiplicative updates keep the matrix diagonal forever.
    """
    u = rng.uniform(0.0, init_scale, size=(num_nodes, K))
    upper = np.triu_indices(K)
    w = np.zeros((K, K))
    w[upper] = rng.uniform(0.0, init_scale, size=len(upper[0]))
    w.T[upper] = w[upper]
    if assortative:
        w = np.diag(np.diag(w))
    return ModelParams(u, w)


def _scaled_incidence(h, scale):
    """Incidence matrix with column e multiplied by scale[e]."""
    g = h.incidence.copy()
    g.data = g.data * np.repeat(scale, np.diff(h.incidence.indptr))
    return g


def update_u(h, params, C, priors):
    """One multiplicative membership update; returns the new u matrix.

    Rows with zero numerator (nodes in no hyperedge, or already-zero rows)
    become zero rows.
    """
    u, w = params.u, params.w
    num = np.zeros_like(u)
    if h.num_edges:
        lam = np.maximum(lambda_batched(h, params), LAMBDA_FLOOR)
        ratios = h.weights / lam
        g = _scaled_incidence(h, ratios)
        edge_sums = h.incidence.T @ u
        per_node = np.asarray(g @ edge_sums) - (h.incidence @ ratios)[:, None] * u
        num = u * np.maximum(per_node @ w, 0.0)
    s = u.sum(axis=0)
    den = C * (np.maximum(s[None, :] - u, 0.0) @ w) + priors.rate_u
    positive = num > 0.0
    if np.any(positive & (den <= 0.0)):
        raise NumericsError("membership update hit a zero denominator with "
                            "a non-zero numerator")
    out = np.zeros_like(u)
    np.divide(num, den, out=out, where=positive)
    return out


def update_w(h, params, C, priors):
    """One multiplicative affinity update; returns the new symmetric w.

    Exact zeros of w are preserved, so zero patterns (e.g. a diagonal
    initialization) never refill.
    """
    u, w = params.u, params.w
    numfac = np.zeros_like(w)
    if h.num_edges:
        lam = np.maximum(lambda_batched(h, params), LAMBDA_FLOOR)
        ratios = h.weights / lam
        edge_sums = h.incidence.T @ u
        node_ratio = h.incidence @ ratios
        numfac = 0.5 * (edge_sums.T @ (edge_sums * ratios[:, None])
                        - u.T @ (u * node_ratio[:, None]))
        numfac = np.maximum(numfac, 0.0)
    s = u.sum(axis=0)
    den = 0.5 * C * np.maximum(np.outer(s, s) - u.T @ u, 0.0) + priors.rate_w
    num = w * numfac
    positive = num > 0.0
    if np.any(positive & (den <= 0.0)):
        raise NumericsError("affinity update hit a zero denominator with "
                            "a non-zero numerator")
    out = np.zeros_like(w)
    np.divide(num, den, out=out, where=positive)
    upper = np.triu_indices_from(out)
    out.T[upper] = out[upper]
    return out


def em_run(h, cfg, restart_seed):
    """One EM run from a fresh random initialization.

    Returns ``(params, trace, converged)`` where ``trace`` is a list of
    ``(iteration, log_posterior)`` pairs sampled every ``cfg.check_every``
    iterations (plus the final iteration).

    Raises
    ------
    NumericsError
        If parameters stop being finite; the restart driver reports this
        instead of failing outright.
    """
    rng = np.random.default_rng(restart_seed)
    params = init_params(h.num_nodes, cfg.K, cfg.assortative, rng,
                         init_scale=cfg.init_scale)
    C = constant_C(h.num_nodes, h.max_size)
    trace = []
    prev_obj = None
    prev_below = False
    converged = False
    iteration = 0
    for iteration in range(1, cfg.max_iter + 1):
        params = ModelParams(update_u(h, params, C, cfg.priors), params.w)
        params = ModelParams(params.u, update_w(h, params, C, cfg.priors))
        if iteration % cfg.check_every == 0:
            if not (np.all(np.isfinite(params.u)) and np.all(np.isfinite(params.w))):
                raise NumericsError(
                    f"non-finite parameters at iteration {iteration}"
                )
            obj = log_posterior(h, params, cfg.priors)
            trace.append((iteration, obj))
            if prev_obj is None:
                below = False
            else:
                rel = 0.0 if obj == prev_obj else \
                    abs(obj - prev_obj) / (1.0 + abs(obj))
                below = rel < cfg.tol
            if below and prev_below:
                converged = True
                break
            prev_obj, prev_below = obj, below
    if not trace or trace[-1][0] != iteration:
        trace.append((iteration, log_posterior(h, params, cfg.priors)))
    return params, trace, converged


def _run_restart(h, cfg, index):
    seed = derive_restart_seed(cfg.seed, index)
    try:
        params, trace, converged = em_run(h, cfg, seed)
    except NumericsError as exc:
        return None, RestartResult(index, seed, -np.inf, 0, False, False,
                                   (), error=str(exc))
    degenerate = not np.any(params.u)
    result = RestartResult(index, seed, trace[-1][1], trace[-1][0],
                           converged or degenerate, degenerate, tuple(trace))
    return params, result


def infer(h, cfg, threads=1):
    """Fit the model with ``cfg.num_restarts`` random restarts.

    Restarts use independent derived seeds, so they can run concurrently
    (``threads > 1``) with results identical to sequential execution; the
    report keeps every restart's trace and diagnostics, and the best final
    objective wins (ties go to the lowest restart index).

    Raises
    ------
    NumericsError
        If every restart failed.
    """
    indices = range(cfg.num_restarts)
    if threads > 1:
        with concurrent.futures.ThreadPoolExecutor(max_workers=threads) as pool:
            outcomes = list(pool.map(lambda t: _run_restart(h, cfg, t), indices))
    else:
        outcomes = [_run_restart(h, cfg, t) for t in indices]

    best_params = None
    best_result = None
    for params, result in outcomes:
        if result.failed:
            continue
        if best_result is None or result.final_objective > best_result.final_objective:
            best_params, best_result = params, result
    if best_result is None:
        details = "; ".join(f"restart {r.index}: {r.error}" for _, r in outcomes)
        raise NumericsError(f"all {cfg.num_restarts} restarts failed ({details})")
    return InferenceReport(
        best_params=best_params,
        best_objective=best_result.final_objective,
        best_index=best_result.index,
        restarts=tuple(result for _, result in outcomes),
    )


def config_with(cfg, **changes):
    """Copy of ``cfg`` with the given fields replaced."""
    return replace(cfg, **changes)
