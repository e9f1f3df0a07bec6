"""Acceptance gate: one test per criterion, one printed PASS/FAIL line each.

Run with ``pytest tests/test_acceptance.py -v -s``.  Every tolerance is fixed
here; the experiments are deterministic (fixed seeds, sequential mode).
"""

import time

import numpy as np
import pytest

from hymix import (
    Hypergraph,
    InferenceConfig,
    ModelParams,
    PlantedSpec,
    PriorRates,
    constant_C,
    constant_Cprime,
    cosine_similarity_score,
    em_run,
    expected_degree,
    expected_degree_size_k,
    generate_benchmark,
    infer,
    init_params,
    lambda_batched,
    lambda_naive,
    log_likelihood,
    sample_exact,
    scale_to_mean_degree,
    select_k,
    total_pair_affinity,
    truncate_max_size,
    update_u,
    update_w,
)
from hymix.evaluation import compare_assortative

from oracles import (
    constant_C_direct,
    constant_Cprime_direct,
    pair_sum_all,
    random_instance,
    update_u_direct,
    update_w_direct,
)


def report(name, ok, detail, started):
    status = "PASS" if ok else "FAIL"
    print(f"\n[{status}] {name} ({time.perf_counter() - started:.1f}s) - {detail}")
    assert ok, f"{name}: {detail}"


def test_oracle_equivalence():
    """Batched rates, global term and both updates vs brute force, rel 1e-10."""
    started = time.perf_counter()
    rng = np.random.default_rng(2026)
    prior_cycle = [(0.0, 0.0), (0.0, 1.0), (0.35, 0.8)]
    worst = 0.0
    for trial in range(200):
        h, params = random_instance(rng, max_nodes=8, max_k=3, max_size=5,
                                    max_edges=10)
        lam = lambda_batched(h, params)
        for value, edge in zip(lam, h.edges):
            ref = lambda_naive(edge, params)
            worst = max(worst, abs(value - ref) / max(abs(ref), 1e-300))
        global_ref = pair_sum_all(params.u, params.w)
        worst = max(worst, abs(total_pair_affinity(params) - global_ref)
                    / max(abs(global_ref), 1e-300))
        rate_u, rate_w = prior_cycle[trial % 3]
        C = constant_C(h.num_nodes, h.max_size)
        u_new = update_u(h, params, C, PriorRates(rate_u, rate_w))
        u_ref = update_u_direct(h, params.u, params.w, C, rate_u)
        w_new = update_w(h, params, C, PriorRates(rate_u, rate_w))
        w_ref = update_w_direct(h, params.u, params.w, C, rate_w)
        for mine, ref in ((u_new, u_ref), (w_new, w_ref)):
            scale = np.maximum(np.abs(ref), 1e-300)
            mismatch = np.abs(mine - ref) / scale
            mismatch[(ref == 0.0) & (np.abs(mine) < 1e-14)] = 0.0
            worst = max(worst, float(mismatch.max()))
    report("oracle equivalence (200 random instances)", worst <= 1e-10,
           f"worst relative error {worst:.2e} (tolerance 1e-10)", started)


def test_em_monotonicity():
    """Objective traces never decrease beyond 1e-8 * (1 + |value|)."""
    started = time.perf_counter()
    rng = np.random.default_rng(77)
    worst = 0.0
    for trial in range(50):
        h, params = random_instance(rng, max_nodes=8, max_k=3, max_size=5,
                                    max_edges=10)
        priors = PriorRates(0.0, 1.0) if trial % 2 else PriorRates(0.0, 0.0)
        cfg = InferenceConfig(K=params.num_communities, num_restarts=1,
                              max_iter=300, check_every=5, priors=priors,
                              seed=int(rng.integers(2 ** 32)))
        _, trace, _ = em_run(h, cfg, int(rng.integers(2 ** 32)))
        values = [obj for _, obj in trace]
        for prev, cur in zip(values, values[1:]):
            drop = prev - cur - 1e-8 * (1.0 + abs(cur))
            worst = max(worst, drop)
    report("EM monotonicity (50 random instances)", worst <= 0.0,
           f"worst drop beyond slack {worst:.2e}", started)


def test_invariance_suite():
    """Scale and permutation invariance; diagonal-w preservation."""
    started = time.perf_counter()
    rng = np.random.default_rng(303)
    ok, detail = True, []

    worst_scale = 0.0
    for _ in range(30):
        h, params = random_instance(rng)
        base = log_likelihood(h, params)
        for c in (0.1, 2.0, 17.0):
            scaled = ModelParams(c * params.u, params.w / c ** 2)
            worst_scale = max(worst_scale,
                              abs(log_likelihood(h, scaled) - base)
                              / max(abs(base), 1e-300))
    ok &= worst_scale <= 1e-10
    detail.append(f"scale worst rel {worst_scale:.2e}")

    # dyadic-valued parameters keep all float arithmetic exact, so community
    # relabeling must leave the likelihood bitwise unchanged
    exact = True
    for _ in range(25):
        h, _ = random_instance(rng, max_nodes=7)
        K = int(rng.integers(2, 4))
        u = rng.integers(0, 8, size=(h.num_nodes, K)) / 4.0
        w = rng.integers(0, 8, size=(K, K)) / 4.0
        w = np.minimum(w, w.T)
        perm = rng.permutation(K)
        a = log_likelihood(h, ModelParams(u, w))
        b = log_likelihood(h, ModelParams(
            np.ascontiguousarray(u[:, perm]),
            np.ascontiguousarray(w[np.ix_(perm, perm)])))
        exact &= (a == b)
    ok &= exact
    detail.append(f"permutation exact: {exact}")

    h, _ = random_instance(np.random.default_rng(5), max_nodes=8,
                           max_edges=10)
    params = init_params(h.num_nodes, 3, True, np.random.default_rng(9))
    C = constant_C(h.num_nodes, h.max_size)
    for _ in range(100):
        params = ModelParams(update_u(h, params, C, PriorRates()), params.w)
        params = ModelParams(params.u, update_w(h, params, C, PriorRates()))
    off_diag = params.w[~np.eye(3, dtype=bool)]
    diagonal_kept = bool(np.all(off_diag == 0.0))
    ok &= diagonal_kept
    detail.append(f"diagonal preserved over 100 iterations: {diagonal_kept}")

    report("invariance suite", ok, "; ".join(detail), started)


def test_closed_form_constants():
    """Closed forms match exact big-integer summation for 2 <= D <= N <= 12."""
    started = time.perf_counter()
    worst = 0.0
    for num_nodes in range(2, 13):
        for max_size in range(2, num_nodes + 1):
            ref = float(constant_C_direct(num_nodes, max_size))
            worst = max(worst, abs(constant_C(num_nodes, max_size) - ref)
                        / abs(ref))
            if num_nodes >= 3:
                ref_p = float(constant_Cprime_direct(num_nodes, max_size))
                got = constant_Cprime(num_nodes, max_size)
                if ref_p == 0.0:
                    worst = max(worst, abs(got))
                else:
                    worst = max(worst, abs(got - ref_p) / abs(ref_p))
    report("closed-form constants vs direct summation", worst <= 1e-12,
           f"worst relative error {worst:.2e} (tolerance 1e-12)", started)


def test_expectation_validation():
    """Degree formulas vs 20000-draw Monte Carlo; exact tiny-instance value."""
    started = time.perf_counter()
    params = ModelParams(
        np.array([[1.0, 0.2], [0.8, 0.4], [0.1, 1.1], [0.5, 0.5], [0.9, 0.1]]),
        np.array([[1.2, 0.3], [0.3, 0.9]]))
    num_nodes, max_size, n_draws = 5, 4, 20000
    rng = np.random.default_rng(424242)
    node_deg = np.zeros((n_draws, num_nodes))
    size_deg = np.zeros((n_draws, max_size + 1))
    for t in range(n_draws):
        sample = sample_exact(params, num_nodes, max_size, rng)
        for edge, a in zip(sample.edges, sample.weights):
            size_deg[t, len(edge)] += a * len(edge) / num_nodes
            for i in edge:
                node_deg[t, i] += a
    ok, checks = True, []
    for i in range(num_nodes):
        want = expected_degree(i, params, num_nodes, max_size)
        se = node_deg[:, i].std(ddof=1) / np.sqrt(n_draws)
        z = (node_deg[:, i].mean() - want) / se
        ok &= abs(z) <= 3.0
        checks.append(abs(z))
    for k in range(2, max_size + 1):
        want = expected_degree_size_k(k, params, num_nodes)
        se = size_deg[:, k].std(ddof=1) / np.sqrt(n_draws)
        z = (size_deg[:, k].mean() - want) / se
        ok &= abs(z) <= 3.0
        checks.append(abs(z))

    tiny = ModelParams(np.ones((3, 1)), np.ones((1, 1)))
    hand = expected_degree(0, tiny, 3, 3)
    ok &= abs(hand - 3.0) <= 1e-12
    report("expectation validation (Monte Carlo, 3 s.e.)", ok,
           f"max |z| {max(checks):.2f}; hand value {hand!r}", started)


BENCH_C_IN = None


def _recovery_benchmark_c_in():
    global BENCH_C_IN
    if BENCH_C_IN is None:
        base = PlantedSpec(60, 2, "hard", c_in=1.0, c_out=0.0, max_size=4)
        BENCH_C_IN = scale_to_mean_degree(base, 20.0).c_in
    return BENCH_C_IN


def test_recovery_desk_scale():
    """Hard K=2 benchmark, D swept 2..4: median cosine >= 0.9, non-decreasing."""
    started = time.perf_counter()
    c_in = _recovery_benchmark_c_in()
    medians = {}
    for cap in (2, 3, 4):
        sims = []
        for seed in range(10):
            spec = PlantedSpec(60, 2, "hard", c_in=c_in, c_out=0.0,
                               max_size=4, seed=seed)
            h, u_true = generate_benchmark(spec)
            sub = truncate_max_size(h, cap)
            rep_cfg = InferenceConfig(K=2, num_restarts=4, max_iter=500,
                                      seed=seed)
            rep = infer(sub, rep_cfg)
            sims.append(cosine_similarity_score(u_true, rep.best_params.u))
        medians[cap] = float(np.median(sims))
    ok = medians[4] >= 0.9 and medians[2] <= medians[3] <= medians[4]
    report("recovery at desk scale (D swept 2..4, 10 seeds)", ok,
           f"medians D=2..4: {medians[2]:.4f}, {medians[3]:.4f}, "
           f"{medians[4]:.4f}", started)


def test_detectability_sign_pattern():
    """Assortative vs full fits across the (c_in, c_out/c_in) grid."""
    started = time.perf_counter()
    c_ins = (0.1, 0.3, 1.0)
    ratios = (0.0, 1.0, 4.0)
    medians = {}
    for c_in in c_ins:
        for ratio in ratios:
            diffs = []
            for trial in range(5):
                spec = PlantedSpec(60, 3, "hard", c_in=c_in,
                                   c_out=ratio * c_in, max_size=4,
                                   seed=1000 + trial)
                h, _ = generate_benchmark(spec)
                cfg = InferenceConfig(K=3, num_restarts=3, max_iter=300,
                                      seed=trial)
                objective_a, objective_d = compare_assortative(h, cfg)
                diffs.append(objective_a - objective_d)
            medians[(c_in, ratio)] = float(np.median(diffs))
    ok = all(medians[(c, 0.0)] >= 0.0 for c in c_ins)
    ok &= all(medians[(c, 4.0)] <= 0.0 for c in c_ins)
    ok &= abs(medians[(1.0, 1.0)]) < abs(medians[(1.0, 4.0)])
    grid = "; ".join(f"c_in={c}: " + ", ".join(
        f"r{int(r)}={medians[(c, r)]:+.1f}" for r in ratios) for c in c_ins)
    report("detectability sign pattern (3x3 grid, 5 seeds)", ok, grid, started)


def test_auc_protocol():
    """0.8/0.2 split on the planted K=2 benchmark: AUC and K selection."""
    started = time.perf_counter()
    c_in = _recovery_benchmark_c_in()
    picks, k2_aucs = [], []
    for seed in range(10):
        spec = PlantedSpec(60, 2, "hard", c_in=c_in, c_out=0.0, max_size=4,
                           seed=seed)
        h, _ = generate_benchmark(spec)
        cfg = InferenceConfig(K=2, num_restarts=6, max_iter=500, seed=seed)
        best, rows = select_k(h, [1, 2, 3, 4], cfg, 0.8, seed,
                              comparisons_per_edge=30)
        picks.append(best)
        k2_aucs.append({k: auc for k, auc, _ in rows}[2])
    mean_auc = float(np.mean(k2_aucs))
    hits = picks.count(2)
    ok = mean_auc >= 0.7 and hits >= 8
    report("AUC protocol + K selection (10 seeds)", ok,
           f"mean AUC {mean_auc:.4f} (>= 0.7); K=2 picked {hits}/10 (>= 8); "
           f"picks {picks}", started)


def _synthetic(num_nodes, num_edges, seed):
    rng = np.random.default_rng(seed)
    sizes = rng.integers(2, 5, size=num_edges)
    edges = [tuple(sorted(rng.choice(num_nodes, size=s, replace=False)))
             for s in sizes]
    return Hypergraph.from_edges(edges, num_nodes=num_nodes, max_size=4)


def _time_per_iteration(h, K=4, iters=5):
    params = init_params(h.num_nodes, K, False, np.random.default_rng(0))
    C = constant_C(h.num_nodes, h.max_size)
    priors = PriorRates()
    params = ModelParams(update_u(h, params, C, priors), params.w)
    params = ModelParams(params.u, update_w(h, params, C, priors))
    t0 = time.perf_counter()
    for _ in range(iters):
        params = ModelParams(update_u(h, params, C, priors), params.w)
        params = ModelParams(params.u, update_w(h, params, C, priors))
    return (time.perf_counter() - t0) / iters


def test_linear_scaling():
    """Per-iteration cost grows at most 2x linearly in |E| and in N."""
    started = time.perf_counter()
    t_base = _time_per_iteration(_synthetic(10_000, 10_000, 1))
    t_edges = _time_per_iteration(_synthetic(10_000, 100_000, 2))
    t_nodes = _time_per_iteration(_synthetic(100_000, 10_000, 3))
    ratio_edges = t_edges / t_base
    ratio_nodes = t_nodes / t_base
    ok = ratio_edges <= 20.0 and ratio_nodes <= 20.0
    report("linear per-iteration scaling", ok,
           f"10x |E| ratio {ratio_edges:.1f} (<= 20); "
           f"10x N ratio {ratio_nodes:.1f} (<= 20); "
           f"base {t_base * 1e3:.2f} ms/iter", started)
