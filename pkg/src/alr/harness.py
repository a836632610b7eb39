"""Repeated randomized active-learning experiments and learning-curve aggregation.

One experiment = `runs` independent repetitions of: split the dataset into a
training pool and a test set, query one pool sample per iteration with the
configured strategy, refit all per-task models after every query, and score
them on the test set. Per-run results are aggregated into a
:class:`LearningCurve` of per-K means and standard deviations.

Runs derive their seeds as ``seed ^ run_index``, so results are independent
of scheduling and identical at any thread count.
"""

from __future__ import annotations

import csv
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .dataset import Dataset, SplitConfig, apply_normalization, normalize_features, split_train_test
from .metrics import MetricRecord, UndefinedCorrelation, group_fraction, label_std, pearson_cc, rmse
from .regression import LinearModel, SolverConfig, coefficient_mae, fit, predict, resolve_lambda, solver_to_string
from .strategies import PoolState, StrategySpec, select_next, strategy_to_string

__all__ = [
    "ExperimentConfig",
    "RunResult",
    "CurveCell",
    "LearningCurve",
    "run_single",
    "run_experiment",
    "selection_sequence",
    "saved_queries",
    "unique_query_count",
    "write_curves_csv",
    "write_curves_json",
    "read_curves_csv",
    "CURVE_CSV_HEADER",
]

CURVE_CSV_HEADER = ("strategy", "solver", "task", "K", "metric", "mean", "std", "n_runs")

_METRIC_ORDER = ("rmse", "cc", "coef_mae", "label_std", "bl2_rmse", "bl2_cc", "group_fraction")


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything needed to reproduce one experiment."""

    strategy: StrategySpec
    solver: SolverConfig
    train_fraction: float = 0.3
    runs: int = 100
    k_max: int | None = None
    normalize_before_split: bool = True
    seed: int = 0
    group_value: str | None = None

    def __post_init__(self) -> None:
        if not 0.0 < self.train_fraction < 1.0:
            raise ValueError("train_fraction must be in (0, 1)")
        if self.runs < 1:
            raise ValueError("runs must be >= 1")
        if self.k_max is not None and self.k_max < 1:
            raise ValueError("k_max must be >= 1 when set")
        if self.seed < 0:
            raise ValueError("seed must be a nonnegative integer")


@dataclass(frozen=True)
class RunResult:
    """Outcome of a single run: per-K records plus run-level references."""

    records: tuple[MetricRecord, ...]
    selection: tuple[int, ...]
    bl2_rmse: tuple[float, ...]
    bl2_cc: tuple[float, ...]


def _fit_all_tasks(features: np.ndarray, labels: np.ndarray, solver: SolverConfig) -> list[LinearModel]:
    return [fit(features, labels[:, p], solver) for p in range(labels.shape[1])]


def _task_metrics(models, test: Dataset) -> tuple[list[float], list[float]]:
    rmse_v, cc_v = [], []
    for p, model in enumerate(models):
        preds = predict(model, test.features)
        truth = test.labels[:, p]
        rmse_v.append(rmse(preds, truth))
        try:
            cc_v.append(pearson_cc(preds, truth))
        except UndefinedCorrelation:
            cc_v.append(math.nan)
    return rmse_v, cc_v


def run_single(pool: Dataset, test: Dataset, cfg: ExperimentConfig, seed: int | None = None) -> RunResult:
    """Run one active-learning pass over a fixed pool/test split.

    Queries one sample per iteration until the pool is exhausted or
    cfg.k_max is reached. All per-task models are refit from scratch after
    every query (single-task strategies still fit every task for
    evaluation), and a MetricRecord is emitted for each K >= k0. Coefficient
    MAE is measured against the full-pool reference model.
    """
    if pool.n_features != test.n_features or pool.n_tasks != test.n_tasks:
        raise ValueError("pool and test must share feature and task dimensions")
    if cfg.group_value is not None and pool.group is None:
        raise ValueError("group_value set but the pool has no group column")
    if seed is None:
        seed = cfg.seed

    state = PoolState(
        pool, rng=np.random.SeedSequence(entropy=seed, spawn_key=(1,))
    )
    k_max = pool.n_samples if cfg.k_max is None else cfg.k_max
    if not state.k0 <= k_max <= pool.n_samples:
        raise ValueError(
            f"k_max must lie in [k0={state.k0}, pool size={pool.n_samples}], got {k_max}"
        )

    solver = cfg.solver
    if solver.lambda_over_k == "budget":
        solver = resolve_lambda(solver, budget=k_max)
    reference = _fit_all_tasks(pool.features, pool.labels, solver)
    bl2_rmse, bl2_cc = _task_metrics(reference, test)

    records: list[MetricRecord] = []
    while state.n_labeled < k_max:
        state.add(select_next(state, cfg.strategy))
        if state.n_labeled < state.k0:
            continue
        state.fit_models(solver)
        rmse_v, cc_v = _task_metrics(state.models, test)
        mae_v = [coefficient_mae(m, ref) for m, ref in zip(state.models, reference)]
        if state.n_labeled >= 2:
            std_v = [label_std(pool, state.labeled, p) for p in range(pool.n_tasks)]
        else:
            std_v = [math.nan] * pool.n_tasks
        frac = (
            group_fraction(pool, state.labeled, cfg.group_value)
            if cfg.group_value is not None
            else None
        )
        records.append(
            MetricRecord(
                k=state.n_labeled,
                rmse=rmse_v,
                cc=cc_v,
                coef_mae=mae_v,
                label_std=std_v,
                group_fraction=frac,
            )
        )
    return RunResult(
        records=tuple(records),
        selection=tuple(state.labeled),
        bl2_rmse=tuple(bl2_rmse),
        bl2_cc=tuple(bl2_cc),
    )


def selection_sequence(
    pool: Dataset,
    strategy: StrategySpec,
    solver: SolverConfig,
    k_max: int | None = None,
    seed: int = 0,
) -> list[int]:
    """The ordered query sequence a strategy produces on a fixed pool."""
    state = PoolState(pool, rng=np.random.SeedSequence(entropy=seed, spawn_key=(1,)))
    k_max = pool.n_samples if k_max is None else k_max
    if not state.k0 <= k_max <= pool.n_samples:
        raise ValueError(
            f"k_max must lie in [k0={state.k0}, pool size={pool.n_samples}], got {k_max}"
        )
    if solver.lambda_over_k == "budget":
        solver = resolve_lambda(solver, budget=k_max)
    while state.n_labeled < k_max:
        state.add(select_next(state, strategy))
        if state.n_labeled >= state.k0 and state.n_labeled < k_max:
            state.fit_models(solver)
    return list(state.labeled)


@dataclass(frozen=True)
class CurveCell:
    mean: float
    std: float
    n_runs: int


@dataclass(frozen=True, eq=False)
class LearningCurve:
    """Per-K aggregates of every metric, over runs.

    Cells are keyed by (metric, task_label, k); task_label is a task name,
    or "all" for metrics without a task axis (group_fraction). Cell counts
    are effective run counts: runs where the metric was defined.
    """

    strategy: str
    solver: str
    task_names: tuple[str, ...]
    ks: tuple[int, ...]
    cells: dict
    n_runs: int
    config: dict = field(default_factory=dict)

    def cell(self, metric: str, task: str, k: int) -> CurveCell:
        return self.cells[(metric, task, k)]

    def mean(self, metric: str, task: str, k: int) -> float:
        return self.cells[(metric, task, k)].mean

    def has(self, metric: str, task: str, k: int) -> bool:
        return (metric, task, k) in self.cells


def _aggregate(values: list[float]) -> CurveCell:
    arr = np.asarray(values, dtype=float)
    good = arr[~np.isnan(arr)]
    if good.size == 0:
        return CurveCell(mean=math.nan, std=math.nan, n_runs=0)
    std = float(np.std(good, ddof=1)) if good.size > 1 else 0.0
    return CurveCell(mean=float(good.mean()), std=std, n_runs=int(good.size))


def run_experiment(data: Dataset, cfg: ExperimentConfig, threads: int = 1) -> LearningCurve:
    """Aggregate cfg.runs independent runs into a learning curve.

    Run r splits with seed ``cfg.seed ^ r``. With
    cfg.normalize_before_split the whole dataset is normalized once up
    front; otherwise each run normalizes its pool and applies the pool
    statistics to its test set.
    """
    if threads < 1:
        raise ValueError("threads must be >= 1")
    base = normalize_features(data)[0] if cfg.normalize_before_split else data

    def one_run(r: int) -> RunResult:
        run_seed = cfg.seed ^ r
        pool, test = split_train_test(base, SplitConfig(cfg.train_fraction, run_seed))
        if not cfg.normalize_before_split:
            pool, params = normalize_features(pool)
            test = apply_normalization(test, params)
        return run_single(pool, test, cfg, seed=run_seed)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool_exec:
            results = list(pool_exec.map(one_run, range(cfg.runs)))
    else:
        results = [one_run(r) for r in range(cfg.runs)]

    ks = tuple(rec.k for rec in results[0].records)
    for res in results[1:]:
        if tuple(rec.k for rec in res.records) != ks:
            raise ValueError("runs disagree on the K axis; pool sizes must match")

    task_names = data.task_names
    cells: dict = {}
    for ki, k in enumerate(ks):
        for p, task in enumerate(task_names):
            cells[("rmse", task, k)] = _aggregate([r.records[ki].rmse[p] for r in results])
            cells[("cc", task, k)] = _aggregate([r.records[ki].cc[p] for r in results])
            cells[("coef_mae", task, k)] = _aggregate(
                [r.records[ki].coef_mae[p] for r in results]
            )
            cells[("label_std", task, k)] = _aggregate(
                [r.records[ki].label_std[p] for r in results]
            )
            cells[("bl2_rmse", task, k)] = _aggregate([r.bl2_rmse[p] for r in results])
            cells[("bl2_cc", task, k)] = _aggregate([r.bl2_cc[p] for r in results])
        if cfg.group_value is not None:
            cells[("group_fraction", "all", k)] = _aggregate(
                [r.records[ki].group_fraction for r in results]
            )

    return LearningCurve(
        strategy=strategy_to_string(cfg.strategy),
        solver=solver_to_string(cfg.solver),
        task_names=task_names,
        ks=ks,
        cells=cells,
        n_runs=cfg.runs,
        config={
            "strategy": strategy_to_string(cfg.strategy),
            "solver": solver_to_string(cfg.solver),
            "train_fraction": cfg.train_fraction,
            "runs": cfg.runs,
            "k_max": cfg.k_max,
            "normalize_before_split": cfg.normalize_before_split,
            "seed": cfg.seed,
            "group_value": cfg.group_value,
        },
    )


def _curve_bl2(curve: LearningCurve, metric: str, task: str) -> float:
    return curve.mean(f"bl2_{metric}", task, curve.ks[0])


def saved_queries(
    curve_a: LearningCurve,
    curve_ref: LearningCurve,
    alpha: float,
    measure: str = "rmse",
) -> dict[str, tuple[int | None, int | None]]:
    """Smallest K at which each curve reaches the full-pool reference threshold.

    For RMSE the threshold is (100+alpha)% of the full-pool value (reached
    from above); for CC it is (100-alpha)% (reached from below). Returns, per
    task, the pair (K for curve_a, K for curve_ref); None marks a curve that
    never attains the threshold.
    """
    if measure not in ("rmse", "cc"):
        raise ValueError("measure must be 'rmse' or 'cc'")
    if curve_a.ks != curve_ref.ks or curve_a.task_names != curve_ref.task_names:
        raise ValueError("curves have mismatched K axes or task sets")

    out: dict[str, tuple[int | None, int | None]] = {}
    for task in curve_a.task_names:
        ref_bl2 = _curve_bl2(curve_ref, measure, task)
        a_bl2 = _curve_bl2(curve_a, measure, task)
        if not math.isclose(ref_bl2, a_bl2, rel_tol=1e-6, abs_tol=1e-12):
            raise ValueError(
                f"curves disagree on the full-pool reference for task '{task}': "
                f"{a_bl2} vs {ref_bl2}"
            )
        if measure == "rmse":
            threshold = (100.0 + alpha) / 100.0 * ref_bl2
            reached = lambda v: v <= threshold
        else:
            threshold = (100.0 - alpha) / 100.0 * ref_bl2
            reached = lambda v: v >= threshold

        def first_k(curve: LearningCurve) -> int | None:
            for k in curve.ks:
                if reached(curve.mean(measure, task, k)):
                    return k
            return None

        out[task] = (first_k(curve_a), first_k(curve_ref))
    return out


def unique_query_count(mt_sequence, st_sequences) -> tuple[int, int]:
    """Query accounting: multi-task count vs the union of per-task sequences."""
    union: set[int] = set()
    for seq in st_sequences:
        union.update(seq)
    return len(list(mt_sequence)), len(union)


def _float_str(v: float) -> str:
    return repr(float(v))


def _iter_curve_rows(curve: LearningCurve):
    for metric in _METRIC_ORDER:
        tasks = ("all",) if metric == "group_fraction" else curve.task_names
        for task in tasks:
            for k in curve.ks:
                if not curve.has(metric, task, k):
                    continue
                cell = curve.cell(metric, task, k)
                yield (
                    curve.strategy,
                    curve.solver,
                    task,
                    str(k),
                    metric,
                    _float_str(cell.mean),
                    _float_str(cell.std),
                    str(cell.n_runs),
                )


def write_curves_csv(curves, path) -> None:
    """Tidy plot-ready CSV: one row per (strategy, task, K, metric)."""
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(CURVE_CSV_HEADER)
        for curve in curves:
            writer.writerows(_iter_curve_rows(curve))


def _json_safe(v: float) -> float | None:
    return None if isinstance(v, float) and math.isnan(v) else v


def curves_to_json_dict(curves) -> dict:
    payload = []
    for curve in curves:
        payload.append(
            {
                "strategy": curve.strategy,
                "solver": curve.solver,
                "task_names": list(curve.task_names),
                "ks": list(curve.ks),
                "n_runs": curve.n_runs,
                "config": curve.config,
                "points": [
                    {
                        "metric": metric,
                        "task": task,
                        "k": int(k),
                        "mean": _json_safe(cell.mean),
                        "std": _json_safe(cell.std),
                        "n_runs": cell.n_runs,
                    }
                    for (metric, task, k), cell in sorted(
                        curve.cells.items(),
                        key=lambda item: (
                            _METRIC_ORDER.index(item[0][0]),
                            item[0][1],
                            item[0][2],
                        ),
                    )
                ],
            }
        )
    return {"curves": payload}


def write_curves_json(curves, path) -> None:
    Path(path).write_text(
        json.dumps(curves_to_json_dict(curves), indent=2), encoding="utf-8"
    )


def read_curves_csv(path) -> list[LearningCurve]:
    """Rebuild LearningCurve objects from a tidy CSV (config echo not recoverable)."""
    path = Path(path)
    grouped: dict[tuple[str, str], dict] = {}
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(header) != CURVE_CSV_HEADER:
            raise ValueError(
                f"{path}: expected header {','.join(CURVE_CSV_HEADER)}"
            )
        for row in reader:
            strategy, solver, task, k, metric, mean, std, n_runs = row
            entry = grouped.setdefault(
                (strategy, solver), {"cells": {}, "tasks": [], "ks": set()}
            )
            if task != "all" and task not in entry["tasks"]:
                entry["tasks"].append(task)
            entry["ks"].add(int(k))
            entry["cells"][(metric, task, int(k))] = CurveCell(
                mean=float(mean), std=float(std), n_runs=int(n_runs)
            )
    curves = []
    for (strategy, solver), entry in grouped.items():
        n_runs = max((c.n_runs for c in entry["cells"].values()), default=0)
        curves.append(
            LearningCurve(
                strategy=strategy,
                solver=solver,
                task_names=tuple(entry["tasks"]),
                ks=tuple(sorted(entry["ks"])),
                cells=entry["cells"],
                n_runs=n_runs,
            )
        )
    return curves
