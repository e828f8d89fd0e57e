"""Command-line entry point: ``lsbm {gen,run,divergence,experiment}``.

Exit status is 0 on success, 2 for invalid input or configuration and 1
for any other failure.
"""

from __future__ import annotations

import argparse
import json
import math
import sys

import numpy as np

from .divergence import divergence, predicted_misclassified, recovery_condition
from .exceptions import ConfigError
from .gen import GenOptions, generate
from .harness import ExperimentConfig, builtin_model, run_experiment
from .iac import IacOptions, run_iac
from .metrics import misclassified
from .model import LabeledGraph, LsbmParams, check_assignment


def _sizes(text):
    try:
        return tuple(int(x) for x in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _seed(text):
    value = int(text)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return value


def _num(x):
    """JSON-safe float: infinities become null."""
    return float(x) if math.isfinite(x) else None


def _load_params(args):
    if getattr(args, "model", None) is not None:
        m = builtin_model(args.model)
        return m.params, m.n, m.sizes
    return LsbmParams.load(args.params), None, None


def cmd_gen(args):
    params, n0, sizes0 = _load_params(args)
    n = args.n if args.n is not None else n0
    if n is None:
        raise ConfigError("--n is required with --params")
    sizes = args.sizes if args.sizes is not None else (sizes0 if args.n is None else None)
    sigma, graph = generate(params, n, GenOptions(args.seed, sizes, args.method))
    graph.save(args.out)
    if args.truth:
        doc = {"n": n, "K": params.K, "seed": args.seed, "sigma": sigma.tolist()}
        with open(args.truth, "w", encoding="utf-8") as fh:
            json.dump(doc, fh)
            fh.write("\n")
    return 0


def _read_truth(path, n):
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    sigma = doc["sigma"] if isinstance(doc, dict) else doc
    sigma = np.asarray(sigma, dtype=np.int64)
    return check_assignment(sigma, n, int(sigma.max()) + 1 if sigma.size else 1)


def cmd_run(args):
    graph = LabeledGraph.load(args.graph)
    opts = IacOptions(threshold=args.threshold, radius=args.radius)
    truth = _read_truth(args.truth, graph.n) if args.truth else None
    res = run_iac(graph, args.seed, opts)
    doc = {"k_hat": res.k_hat, "clusters": res.clusters()}
    if truth is not None:
        doc["errors_spectral"] = misclassified(truth, res.initial_labels)
        doc["errors_final"] = misclassified(truth, res.labels)
    doc["trace"] = res.errors_trace
    doc["timings_ms"] = {k.removesuffix("_ms"): round(v, 3) for k, v in res.timings.items()}
    if args.debug_spectral and res.spectrum is not None:
        spec = res.spectrum
        doc["spectral"] = {
            "k_svt": res.k_svt,
            "singular_estimates": [float(x) for x in spec.singular_estimates],
            "thresholds": {k: v for k, v in spec.thresholds.items()},
            "order_scores": [float(x) for x in res.order_scores],
            "radii": [] if res.initial is None else res.initial.radii.tolist(),
            "dispersions": [] if res.initial is None else res.initial.dispersions.tolist(),
            "t_star": None if res.initial is None else res.initial.t_star,
        }
    with open(args.out, "w", encoding="utf-8") as fh:
        json.dump(doc, fh)
        fh.write("\n")
    return 0


def cmd_divergence(args):
    params, n0, _ = _load_params(args)
    n = args.n if args.n is not None else n0
    res = divergence(params)
    doc = {"value": _num(res.value), "pair": list(res.pair), "lambda_star": res.lambda_star,
           "predicted": None, "ratio": None}
    if n is not None:
        doc["predicted"] = predicted_misclassified(n, params)
        if args.s is not None:
            doc["ratio"] = _num(recovery_condition(n, args.s, params))
    print(json.dumps(doc))
    return 0


def cmd_experiment(args):
    common = dict(out=args.out, jobs=args.jobs, timing=not args.no_timing,
                  report_divergence=not args.no_divergence)
    if args.model is not None:
        if args.n is not None or args.sizes is not None:
            raise ConfigError("--n/--sizes only apply with --params")
        cfg = ExperimentConfig.for_model(args.model, args.reps, args.seed, **common)
    else:
        if args.n is None:
            raise ConfigError("--n is required with --params")
        cfg = ExperimentConfig(LsbmParams.load(args.params), args.n, args.reps, args.seed,
                               args.sizes, "params", **common)
    report = run_experiment(cfg)
    s = report.summary
    if "errors_final" in s:
        e = s["errors_final"]
        print(f"model {s['model']}: {s['reps']} reps, errors mean {e['mean']:.4f} "
              f"std {e['std']:.4f}, K correct {s['k_hat_correct']}/{s['reps']}")
    return 0 if s["failed"] == 0 else 1


def _source(p, required=True):
    g = p.add_mutually_exclusive_group(required=required)
    g.add_argument("--params", help="parameter JSON file")
    g.add_argument("--model", type=int, choices=[1, 2, 3, 4], help="built-in model")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="lsbm", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="sample a labeled graph")
    _source(p)
    p.add_argument("--n", type=int)
    p.add_argument("--seed", type=_seed, required=True)
    p.add_argument("--out", required=True, help="graph text file")
    p.add_argument("--sizes", type=_sizes, help="fixed cluster sizes, e.g. 250,250")
    p.add_argument("--truth", help="write the assignment to this JSON file")
    p.add_argument("--method", choices=["auto", "dense", "sparse"], default="auto")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("run", help="cluster a graph")
    p.add_argument("--graph", required=True)
    p.add_argument("--seed", type=_seed, required=True)
    p.add_argument("--truth", help="assignment JSON for error counts")
    p.add_argument("--out", required=True)
    p.add_argument("--debug-spectral", action="store_true")
    p.add_argument("--threshold", choices=["noise", "log"], default="noise")
    p.add_argument("--radius", choices=["noise", "linear"], default="noise")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("divergence", help="instance divergence and predictions")
    _source(p)
    p.add_argument("--n", type=int)
    p.add_argument("--s", type=float)
    p.set_defaults(func=cmd_divergence)

    p = sub.add_parser("experiment", help="repeated runs with CSV output")
    _source(p)
    p.add_argument("--reps", type=int, required=True)
    p.add_argument("--seed", type=_seed, required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--n", type=int)
    p.add_argument("--sizes", type=_sizes)
    p.add_argument("--no-timing", action="store_true", help="write runtime_ms as 0")
    p.add_argument("--no-divergence", action="store_true")
    p.set_defaults(func=cmd_experiment)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (OSError, json.JSONDecodeError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2 if isinstance(exc, (FileNotFoundError, json.JSONDecodeError, KeyError)) else 1
    except Exception as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
