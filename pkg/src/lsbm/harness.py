"""Built-in benchmark models and the repeated-experiment runner."""

from __future__ import annotations

import csv
import json
import math
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .divergence import divergence, predicted_misclassified
from .exceptions import ConfigError, UnknownModel
from .gen import GenOptions, generate
from .iac import IacOptions, run_iac
from .metrics import misclassified, summarize
from .model import LsbmParams, validate_params
from .rng import mix64

CSV_HEADER = ["model", "rep", "seed", "n", "k_true", "k_hat",
              "errors_spectral", "errors_final", "runtime_ms"]


@dataclass(frozen=True)
class BuiltinModel:
    model_id: int
    params: LsbmParams
    n: int
    sizes: tuple


def _planted(K, p_in, p_out):
    P = np.full((K, K), p_out)
    np.fill_diagonal(P, p_in)
    return P


_MODELS = {
    1: (_planted(10, 0.48, 0.32), (250,) * 10),
    2: (np.array([[0.50, 0.29, 0.35, 0.25],
                  [0.29, 0.45, 0.25, 0.30],
                  [0.35, 0.25, 0.50, 0.35],
                  [0.25, 0.30, 0.35, 0.45]]), (200, 400, 600, 800)),
    3: (_planted(10, 0.032, 0.005), (400,) * 10),
    4: (np.array([[0.032, 0.005, 0.008, 0.005],
                  [0.005, 0.028, 0.005, 0.008],
                  [0.008, 0.005, 0.032, 0.005],
                  [0.005, 0.008, 0.005, 0.028]]), (300,) * 4),
}


def builtin_model(model_id: int) -> BuiltinModel:
    """One of the four single-label benchmark models with fixed cluster sizes."""
    if model_id not in _MODELS:
        raise UnknownModel(f"unknown model {model_id!r}; choose one of 1, 2, 3, 4")
    P, sizes = _MODELS[model_id]
    n = sum(sizes)
    alpha = np.array(sizes, dtype=np.float64) / n
    return BuiltinModel(model_id, LsbmParams.binary(alpha, P), n, sizes)


@dataclass(frozen=True)
class ExperimentConfig:
    """A batch of repetitions on one model.

    ``sizes=None`` with a parameter file draws memberships from ``alpha``.
    """

    params: LsbmParams
    n: int
    reps: int
    master_seed: int = 0
    sizes: tuple | None = None
    label: str = "custom"
    out: str | None = None
    jobs: int = 1
    timing: bool = True
    report_divergence: bool = True
    iac: IacOptions = field(default_factory=IacOptions)

    def __post_init__(self):
        if self.reps < 1:
            raise ConfigError("reps must be at least 1")
        if self.n < 2:
            raise ConfigError("n must be at least 2")
        if self.jobs < 1:
            raise ConfigError("jobs must be at least 1")
        validate_params(self.params)

    @classmethod
    def for_model(cls, model_id: int, reps: int, master_seed: int = 0, **kw) -> "ExperimentConfig":
        m = builtin_model(model_id)
        return cls(m.params, m.n, reps, master_seed, m.sizes, str(model_id), **kw)


@dataclass
class ExperimentReport:
    rows: list
    summary: dict


def _run_rep(cfg: ExperimentConfig, rep: int) -> dict:
    rep_seed = mix64(cfg.master_seed, rep)
    row = {"model": cfg.label, "rep": rep, "seed": rep_seed, "n": cfg.n,
           "k_true": cfg.params.K, "k_hat": -1, "errors_spectral": -1,
           "errors_final": -1, "runtime_ms": 0}
    try:
        sigma, graph = generate(cfg.params, cfg.n, GenOptions(rep_seed, cfg.sizes))
        start = time.perf_counter()
        res = run_iac(graph, mix64(rep_seed, 1), cfg.iac)
        elapsed = 1000.0 * (time.perf_counter() - start)
        row.update(k_hat=res.k_hat,
                   errors_spectral=misclassified(sigma, res.initial_labels),
                   errors_final=misclassified(sigma, res.labels),
                   runtime_ms=int(round(elapsed)) if cfg.timing else 0)
    except Exception as exc:  # recorded, the batch goes on
        print(f"rep {rep} failed: {type(exc).__name__}: {exc}", file=sys.stderr)
    return row


def _rep_task(args):
    return _run_rep(*args)


def summary_of(rows: list) -> dict:
    ok = [r for r in rows if r["errors_final"] >= 0]
    out = {"reps": len(rows), "failed": len(rows) - len(ok)}
    if ok:
        out["errors_final"] = summarize([r["errors_final"] for r in ok]).as_dict()
        out["errors_spectral"] = summarize([r["errors_spectral"] for r in ok]).as_dict()
        out["k_hat_correct"] = sum(r["k_hat"] == r["k_true"] for r in ok)
    return out


def run_experiment(cfg: ExperimentConfig) -> ExperimentReport:
    """Run every repetition, streaming rows (in repetition order) to ``cfg.out``.

    Repetition ``r`` samples its instance from ``mix64(master_seed, r)`` and
    clusters it with ``mix64(rep_seed, 1)``, so the rows do not depend on
    the number of workers.
    """
    rows = []
    fh = writer = None
    if cfg.out is not None:
        fh = open(cfg.out, "w", newline="", encoding="utf-8")
        writer = csv.DictWriter(fh, fieldnames=CSV_HEADER, lineterminator="\n")
        writer.writeheader()
        fh.flush()
    tasks = [(cfg, r) for r in range(cfg.reps)]
    try:
        if cfg.jobs > 1:
            pool = ProcessPoolExecutor(max_workers=cfg.jobs)
            results = pool.map(_rep_task, tasks)
        else:
            pool = None
            results = map(_rep_task, tasks)
        for row in results:
            rows.append(row)
            if writer is not None:
                writer.writerow(row)
                fh.flush()
        if pool is not None:
            pool.shutdown()
    finally:
        if fh is not None:
            fh.close()

    summary = {"model": cfg.label, "n": cfg.n, "k_true": cfg.params.K,
               "master_seed": cfg.master_seed, **summary_of(rows)}
    if cfg.report_divergence and cfg.params.K >= 2:
        D = divergence(cfg.params).value
        summary["divergence"] = D if math.isfinite(D) else None
        summary["n_divergence"] = cfg.n * D if math.isfinite(D) else None
        summary["predicted_misclassified"] = predicted_misclassified(cfg.n, cfg.params)
    if cfg.out is not None:
        summary_path(cfg.out).write_text(json.dumps(summary, indent=2) + "\n", encoding="utf-8")
    return ExperimentReport(rows, summary)


def summary_path(csv_path) -> Path:
    p = Path(csv_path)
    return p.with_name(p.stem + ".summary.json")


def read_rows(csv_path) -> list:
    """Rows of a results CSV with integer columns converted back."""
    with open(csv_path, newline="", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    for r in rows:
        for k in CSV_HEADER[1:]:
            r[k] = int(r[k])
    return rows
