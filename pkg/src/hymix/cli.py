"""Command-line interface tying loading, fitting, sampling and scoring together.

Every subcommand writes its outputs plus a run manifest holding the fully
resolved configuration, so a run can be replayed bit-for-bit (in sequential
mode) from the manifest's ``resolved_argv``.  Outputs are plain JSON / TSV /
hyperedge-list text; companion files replace the main output's extension
(``params.json`` gets ``params.report.json`` and ``params.manifest.json``).

Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .evaluation import (
    auc_score,
    compare_assortative,
    cosine_similarity_score,
    cp_profile_curve,
    select_k,
    train_test_split,
)
from .hypergraph import (
    Hypergraph,
    HyperedgeFormatError,
    degree_sequence,
    load_hyperedge_list,
    save_hyperedge_list,
    truncate_max_size,
)
from .inference import InferenceConfig, NumericsError, infer
from .model import PriorRates, load_params, params_to_dict, save_params
from .sampler import PlantedSpec, generate_benchmark, sample_exact, scale_to_mean_degree

COMMANDS = ("infer", "sample", "benchmark", "auc", "select-k", "similarity",
            "compare-assortative", "cp-profile", "stats")


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


def main(argv=None):
    sys.exit(dispatch(sys.argv[1:] if argv is None else argv))


def dispatch(argv):
    """Run one subcommand; returns the process exit code."""
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            raise _UsageError("missing subcommand")
        started = time.time()
        outputs = _run_command(args)
        _write_manifest(args, argv, outputs, started)
        return 0
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except NumericsError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    except (HyperedgeFormatError, FileNotFoundError, ValueError,
            KeyError, json.JSONDecodeError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2


def _build_parser():
    parser = _Parser(prog="hymix", description=__doc__.split("\n")[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command")

    def add(name, help_text, **flags):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--seed", type=int, default=0,
                       help="master seed for all randomness (default 0)")
        p.add_argument("--threads", type=int, default=1,
                       help="worker threads; 1 is bit-reproducible (default 1)")
        for flag, kwargs in flags.items():
            p.add_argument(flag, **kwargs)
        return p

    inp = {"--input": dict(required=True, help="hyperedge-list file")}
    out = {"--out": dict(required=True, help="main output path")}
    trunc = {"--max-hyperedge-size": dict(
        type=int, default=None,
        help="drop larger hyperedges and cap the model size D")}
    fit = {
        "--k": dict(type=int, required=True, help="number of communities"),
        "--restarts": dict(type=int, default=10),
        "--max-iter": dict(type=int, default=2000),
        "--tol": dict(type=float, default=1e-6),
        "--prior-u": dict(type=float, default=0.0,
                          help="exponential prior rate on memberships (0 = none)"),
        "--prior-w": dict(type=float, default=1.0,
                          help="exponential prior rate on affinities (0 = none)"),
        "--assortative": dict(action="store_true",
                              help="restrict the affinity matrix to its diagonal"),
    }

    add("infer", "fit the model to a hypergraph", **inp, **out, **trunc, **fit)
    add("sample", "draw one hypergraph from fitted parameters",
        **out,
        **{"--params": dict(required=True, help="parameters JSON"),
           "--max-hyperedge-size": dict(type=int, required=True,
                                        help="maximum hyperedge size D")})
    add("benchmark", "generate a planted-partition benchmark",
        **out,
        **{"--nodes": dict(type=int, required=True),
           "--k": dict(type=int, required=True),
           "--c-in": dict(type=float, default=1.0),
           "--c-out": dict(type=float, default=0.0),
           "--mode": dict(choices=("hard", "mixed"), default="hard"),
           "--max-hyperedge-size": dict(type=int, required=True),
           "--mean-degree": dict(type=float, default=None,
                                 help="rescale c_in/c_out to this mean degree")})
    auc_flags = {
        "--train-ratio": dict(type=float, default=0.8),
        "--comparisons": dict(type=int, default=1,
                              help="negative comparisons per test hyperedge"),
        "--weight-one": dict(action="store_true",
                             help="score comparisons at weight 1 instead of "
                                  "the observed weight"),
    }
    add("auc", "split, fit on train, score hyperedge prediction on test",
        **inp, **out, **trunc, **fit, **auc_flags)
    select_flags = dict(fit)
    del select_flags["--k"]
    add("select-k", "grid search the community count by held-out AUC",
        **inp, **out, **trunc, **select_flags,
        **{"--k-grid": dict(required=True, metavar="A:B",
                            help="inclusive K range, e.g. 2:30")},
        **auc_flags)
    add("similarity", "cosine similarity between two membership matrices",
        **out,
        **{"--u-true": dict(required=True, help="JSON file with a 'u' matrix"),
           "--u-inferred": dict(required=True, help="JSON file with a 'u' matrix")})
    add("compare-assortative",
        "fit with diagonal and full affinity, report both objectives",
        **inp, **out, **trunc, **fit)
    add("cp-profile", "core-periphery profile along a score ordering",
        **inp, **out, **trunc,
        **{"--scores": dict(required=True,
                            help="text file, one core score per node line"),
           "--k-max": dict(type=int, default=None)})
    add("stats", "print basic hypergraph statistics",
        **inp, **trunc,
        **{"--out": dict(default=None, help="optional JSON output path")})
    return parser


def _run_command(args):
    runner = {
        "infer": _cmd_infer,
        "sample": _cmd_sample,
        "benchmark": _cmd_benchmark,
        "auc": _cmd_auc,
        "select-k": _cmd_select_k,
        "similarity": _cmd_similarity,
        "compare-assortative": _cmd_compare_assortative,
        "cp-profile": _cmd_cp_profile,
        "stats": _cmd_stats,
    }[args.command]
    return runner(args)


def _load_input(args):
    h = load_hyperedge_list(args.input)
    cap = getattr(args, "max_hyperedge_size", None)
    if cap is not None:
        h = truncate_max_size(h, cap)
        if h.num_edges == 0:
            raise HyperedgeFormatError(
                f"no hyperedges of size <= {cap} in {args.input}")
    return h


def _config_from(args, k=None):
    k = args.k if k is None else k
    try:
        return InferenceConfig(
            K=k,
            num_restarts=args.restarts,
            max_iter=args.max_iter,
            tol=args.tol,
            priors=PriorRates(args.prior_u, args.prior_w),
            assortative=args.assortative,
            seed=args.seed,
        )
    except ValueError as exc:
        raise _UsageError(str(exc)) from None


def _sibling(out, suffix):
    out = Path(out)
    return out.with_name(out.stem + suffix)


def _write_json(path, payload):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2)
        fh.write("\n")


def _cmd_infer(args):
    h = _load_input(args)
    cfg = _config_from(args)
    report = infer(h, cfg, threads=args.threads)
    best = report.restarts[report.best_index]
    save_params(report.best_params, args.out, seed=best.seed,
                final_loglik=report.best_objective)
    report_path = _sibling(args.out, ".report.json")
    _write_json(report_path, report.to_dict())
    print(f"best objective {report.best_objective:.6f} "
          f"(restart {report.best_index}, {best.iterations} iterations)")
    return {"params": str(args.out), "report": str(report_path)}


def _cmd_sample(args):
    params = load_params(args.params)
    rng = np.random.default_rng(args.seed)
    sample = sample_exact(params, params.num_nodes, args.max_hyperedge_size, rng)
    save_hyperedge_list(sample, args.out)
    print(f"sampled {sample.num_edges} hyperedges over {sample.num_nodes} nodes")
    return {"sample": str(args.out)}


def _cmd_benchmark(args):
    spec = PlantedSpec(
        num_nodes=args.nodes,
        num_communities=args.k,
        membership_mode=args.mode,
        c_in=args.c_in,
        c_out=args.c_out,
        max_size=args.max_hyperedge_size,
        seed=args.seed,
    )
    if args.mean_degree is not None:
        spec = scale_to_mean_degree(spec, args.mean_degree)
    sample, u_true = generate_benchmark(spec)
    save_hyperedge_list(sample, args.out)
    truth_path = _sibling(args.out, ".truth.json")
    _write_json(truth_path, {
        "N": spec.num_nodes,
        "K": spec.num_communities,
        "u": u_true.tolist(),
        "c_in": spec.c_in,
        "c_out": spec.c_out,
    })
    print(f"benchmark with {sample.num_edges} hyperedges written")
    return {"sample": str(args.out), "truth": str(truth_path)}


def _cmd_auc(args):
    h = _load_input(args)
    cfg = _config_from(args)
    split = train_test_split(h, args.train_ratio, args.seed)
    report = infer(split.train, cfg, threads=args.threads)
    auc, stderr = auc_score(
        report.best_params, split, h.num_nodes, h.max_size,
        np.random.default_rng(args.seed),
        comparisons_per_edge=args.comparisons,
        use_observed_weight=not args.weight_one,
    )
    payload = {
        "auc": auc,
        "std_err": stderr,
        "num_test_edges": len(split.test),
        "comparisons_per_edge": args.comparisons,
        "train_ratio": args.train_ratio,
        "k": args.k,
        "objective": report.best_objective,
    }
    _write_json(args.out, payload)
    print(f"AUC {auc:.4f} +- {stderr:.4f} on {len(split.test)} test hyperedges")
    return {"summary": str(args.out)}


def _parse_k_grid(text):
    try:
        low, high = text.split(":")
        low, high = int(low), int(high)
    except ValueError:
        raise _UsageError(f"--k-grid expects A:B, got {text!r}") from None
    if low < 1 or high < low:
        raise _UsageError(f"bad --k-grid range {text!r}")
    return range(low, high + 1)


def _cmd_select_k(args):
    h = _load_input(args)
    grid = _parse_k_grid(args.k_grid)
    cfg = _config_from(args, k=grid[0])
    best_k, rows = select_k(h, grid, cfg, args.train_ratio, args.seed,
                            comparisons_per_edge=args.comparisons,
                            threads=args.threads)
    with open(args.out, "w", encoding="utf-8") as fh:
        fh.write("k\tauc\tstd_err\n")
        for k, auc, stderr in rows:
            fh.write(f"{k}\t{auc!r}\t{stderr!r}\n")
    print(f"selected K = {best_k}")
    return {"table": str(args.out)}


def _cmd_similarity(args):
    with open(args.u_true, encoding="utf-8") as fh:
        u_true = np.asarray(json.load(fh)["u"], dtype=np.float64)
    with open(args.u_inferred, encoding="utf-8") as fh:
        u_inf = np.asarray(json.load(fh)["u"], dtype=np.float64)
    value = cosine_similarity_score(u_true, u_inf)
    _write_json(args.out, {"cosine_similarity": value})
    print(f"cosine similarity {value:.4f}")
    return {"summary": str(args.out)}


def _cmd_compare_assortative(args):
    h = _load_input(args)
    cfg = _config_from(args)
    objective_a, objective_d = compare_assortative(h, cfg, threads=args.threads)
    payload = {
        "objective_assortative": objective_a,
        "objective_disassortative": objective_d,
        "difference": objective_a - objective_d,
    }
    _write_json(args.out, payload)
    print(f"assortative {objective_a:.6f}  full {objective_d:.6f}  "
          f"difference {payload['difference']:.6f}")
    return {"summary": str(args.out)}


def _cmd_cp_profile(args):
    h = _load_input(args)
    with open(args.scores, encoding="utf-8") as fh:
        scores = [float(line.strip()) for line in fh if line.strip()]
    curve = cp_profile_curve(h, np.asarray(scores), k_max=args.k_max)
    with open(args.out, "w", encoding="utf-8") as fh:
        fh.write("k\tgamma\n")
        for k, gamma in curve:
            fh.write(f"{k}\t{gamma!r}\n")
    print(f"profile over {len(curve)} prefixes written")
    return {"curve": str(args.out)}


def _cmd_stats(args):
    h = _load_input(args)
    degrees = degree_sequence(h)
    sizes = h.sizes
    histogram = {}
    for size in sorted(set(int(s) for s in sizes)):
        histogram[str(size)] = int(np.sum(sizes == size))
    payload = {
        "num_nodes": h.num_nodes,
        "num_hyperedges": h.num_edges,
        "max_size": h.max_size,
        "mean_weighted_degree": float(degrees.mean()),
        "size_histogram": histogram,
    }
    print(f"nodes              {payload['num_nodes']}")
    print(f"hyperedges         {payload['num_hyperedges']}")
    print(f"max size D         {payload['max_size']}")
    print(f"mean degree        {payload['mean_weighted_degree']:.4f}")
    print("size histogram     "
          + ", ".join(f"{k}:{v}" for k, v in histogram.items()))
    outputs = {}
    if args.out:
        _write_json(args.out, payload)
        outputs["summary"] = str(args.out)
    return outputs


def _resolved_argv(args):
    """Canonical argv with every option materialized, for manifest replay."""
    skip = {"command"}
    argv = [args.command]
    for key in sorted(vars(args)):
        if key in skip:
            continue
        value = getattr(args, key)
        flag = "--" + key.replace("_", "-")
        if value is None:
            continue
        if isinstance(value, bool):
            if value:
                argv.append(flag)
        else:
            argv.extend([flag, str(value)])
    return argv


def _write_manifest(args, argv, outputs, started):
    out = getattr(args, "out", None)
    if out is None:
        return
    manifest_path = _sibling(out, ".manifest.json")
    options = {k: v for k, v in vars(args).items() if k != "command"}
    manifest = {
        "tool": "hymix",
        "version": __version__,
        "command": args.command,
        "argv": list(argv),
        "resolved_argv": _resolved_argv(args),
        "options": options,
        "outputs": dict(outputs, manifest=str(manifest_path)),
        "started_at": datetime.fromtimestamp(started, timezone.utc).isoformat(),
        "duration_seconds": time.time() - started,
    }
    _write_json(manifest_path, manifest)
