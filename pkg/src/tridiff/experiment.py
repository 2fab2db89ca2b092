"""Repeated-split lambda sweeps, aggregation and report emission.

The protocol: derive one seed per run from the master seed, split once
per run, and evaluate every lambda of the grid against that same split
(the paired design; the lambda curve is then not confounded by split
noise). Means and sample standard deviations aggregate over runs, and
the optimum lambda per metric is read off the mean curve.

Reports are written as TSV (raw per-run rows, aggregates, one curve
file per metric and list length, optima) plus rendered PNG figures of
the four curves.
"""

from __future__ import annotations

import math
import multiprocessing
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .errors import ConfigError, DataError
from .ingestion import InteractionRecord
from .metrics import (
    METRIC_NAMES,
    REPORT_HEADER,
    MetricsReport,
    SplitEvaluation,
    evaluate_split,
)
from .splitting import derive_run_seed, split

DEFAULT_GRID = tuple(round(0.05 * k, 10) for k in range(21))
# the lambda triple used for fixed-blend recall comparisons
RECALL_TRIPLE = (0.0, 0.5, 1.0)
FINE_STEP = 0.01
COARSE_NEIGHBORHOOD = 0.05


@dataclass(frozen=True)
class ExperimentConfig:
    lambda_grid: tuple[float, ...] = DEFAULT_GRID
    runs: int = 50
    test_fraction: float = 0.05
    list_lengths: tuple[int, ...] = (10, 20, 50)
    master_seed: int = 42
    pair_sample_threshold: int | None = None
    pair_sample_size: int = 100_000
    workers: int = 1
    fine_opt: bool = False
    chunk_size: int = 512

    def validated(self) -> "ExperimentConfig":
        grid = tuple(float(x) for x in self.lambda_grid)
        if not grid:
            raise ConfigError("lambda grid is empty")
        if any(not 0.0 <= x <= 1.0 for x in grid):
            raise ConfigError("lambda grid values must lie in [0, 1]")
        if list(grid) != sorted(set(grid)):
            raise ConfigError("lambda grid must be strictly ascending")
        if 0.0 not in grid or 1.0 not in grid:
            # both pure baselines must always be measured
            raise ConfigError("lambda grid must contain the endpoints 0.0 and 1.0")
        if self.runs < 1:
            raise ConfigError(f"runs must be >= 1, got {self.runs}")
        if not 0.0 < self.test_fraction < 1.0:
            raise ConfigError(f"test_fraction must be in (0, 1), got {self.test_fraction}")
        lengths = tuple(int(x) for x in self.list_lengths)
        if not lengths or any(x < 1 for x in lengths):
            raise ConfigError("list_lengths must be positive integers")
        if list(lengths) != sorted(set(lengths)):
            raise ConfigError("list_lengths must be strictly ascending")
        if self.workers < 1:
            raise ConfigError(f"workers must be >= 1, got {self.workers}")
        if self.chunk_size < 1:
            raise ConfigError("chunk_size must be >= 1")
        if self.pair_sample_size < 2:
            raise ConfigError("pair_sample_size must be >= 2")
        return replace(self, lambda_grid=grid, list_lengths=lengths)


@dataclass(frozen=True)
class AggregateStats:
    """Mean and sample standard deviation over runs for one (lambda, L)."""

    auc_mean: float
    auc_std: float
    recall_mean: float
    recall_std: float
    diversification_mean: float
    diversification_std: float
    novelty_mean: float
    novelty_std: float
    evaluated_users_mean: float
    skipped_users_mean: float
    runs: int


@dataclass
class SweepResult:
    config: ExperimentConfig
    effective_grid: tuple[float, ...]
    reports: list[MetricsReport]
    aggregates: dict[tuple[float, int], AggregateStats]
    # (metric name, L) -> (lambda at the optimum of the mean curve, that mean)
    optima: dict[tuple[str, int], tuple[float, float]]
    run_seeds: tuple[int, ...]
    # (lambda, L, run index, stderr) rows when sampled diversification was used
    sampling_notes: list[tuple[float, int, int, float]] = field(default_factory=list)


def run_once(
    records: list[InteractionRecord],
    config: ExperimentConfig,
    lam: float,
    run_index: int,
) -> list[MetricsReport]:
    """One (lambda, run) cell of the protocol: split, score, all metrics.

    Returns one report per configured list length. The split depends on
    the run index alone, so every lambda of a run shares it.
    """
    config = config.validated()
    seed = derive_run_seed(config.master_seed, run_index)
    dataset = split(records, config.test_fraction, seed)
    ev = evaluate_split(
        dataset,
        [lam],
        config.list_lengths,
        workers=config.workers,
        chunk_size=config.chunk_size,
        pair_sample_threshold=config.pair_sample_threshold,
        pair_sample_size=config.pair_sample_size,
    )
    return _reports_from_evaluation(ev, seed)


def _reports_from_evaluation(ev: SplitEvaluation, seed: int) -> list[MetricsReport]:
    out = []
    for li, lam in enumerate(ev.lambdas):
        for gi, length in enumerate(ev.list_lengths):
            out.append(MetricsReport(
                lam=lam,
                length=length,
                auc=float(ev.auc[li]),
                recall=float(ev.recall[li, gi]),
                diversification=float(ev.diversification[li, gi]),
                novelty=float(ev.novelty[li, gi]),
                evaluated_users=ev.evaluated_users,
                skipped_users=ev.skipped_users,
                seed=seed,
            ))
    return out


# run-task context inherited by forked workers
_SWEEP_CTX: tuple | None = None


def _run_task(run_index: int) -> tuple[int, int, SplitEvaluation]:
    records, config, lambdas = _SWEEP_CTX
    return _execute_run(records, config, lambdas, run_index)


def _execute_run(
    records, config: ExperimentConfig, lambdas, run_index: int
) -> tuple[int, int, SplitEvaluation]:
    seed = derive_run_seed(config.master_seed, run_index)
    dataset = split(records, config.test_fraction, seed)
    try:
        ev = evaluate_split(
            dataset,
            lambdas,
            config.list_lengths,
            workers=1,  # parallelism lives at the run level here, never nested
            chunk_size=config.chunk_size,
            pair_sample_threshold=config.pair_sample_threshold,
            pair_sample_size=config.pair_sample_size,
        )
    except DataError as exc:
        raise DataError(f"run {run_index} (seed {seed}): {exc}") from exc
    return run_index, seed, ev


def _evaluate_runs(
    records, config: ExperimentConfig, lambdas
) -> list[tuple[int, int, SplitEvaluation]]:
    """One evaluation per run over the given lambdas, in run order."""
    indices = range(config.runs)
    if config.workers > 1 and config.runs > 1:
        global _SWEEP_CTX
        _SWEEP_CTX = (records, config, lambdas)
        try:
            ctx = multiprocessing.get_context("fork")
            with ctx.Pool(min(config.workers, config.runs)) as pool:
                results = list(pool.imap(_run_task, indices))
        finally:
            _SWEEP_CTX = None
        return results
    return [_execute_run(records, config, lambdas, k) for k in indices]


def _optimum(grid, means, minimize: bool) -> tuple[float, float]:
    """Grid argopt of a mean curve; ties resolve to the smaller lambda."""
    arr = np.asarray(means, dtype=np.float64)
    if np.all(np.isnan(arr)):
        return grid[0], float("nan")
    best = np.nanmin(arr) if minimize else np.nanmax(arr)
    idx = int(np.nonzero(arr == best)[0][0])
    return grid[idx], float(best)


def sweep(records: list[InteractionRecord], config: ExperimentConfig) -> SweepResult:
    """The full protocol over the lambda grid.

    With ``fine_opt`` the neighbourhood of the coarse AUC optimum is
    re-evaluated at 0.01 steps against the same splits; refined lambdas
    join the effective grid, so the reported optimum always lies on the
    grid the result carries.
    """
    config = config.validated()
    phase_results = [_evaluate_runs(records, config, config.lambda_grid)]
    effective = list(config.lambda_grid)

    if config.fine_opt:
        auc_means = _mean_auc_curve(phase_results, effective, config.runs)
        coarse_opt, _ = _optimum(tuple(effective), auc_means, minimize=False)
        extra = _refinement_lambdas(coarse_opt, effective)
        if extra:
            phase_results.append(_evaluate_runs(records, config, tuple(extra)))
            effective = sorted(effective + extra)

    effective = tuple(effective)
    run_seeds = tuple(seed for _, seed, _ in phase_results[0])

    # gather per-run lookups: lambda -> (index within that phase evaluation, evaluation)
    per_run: list[dict[float, tuple[int, SplitEvaluation]]] = [dict() for _ in range(config.runs)]
    for phase in phase_results:
        for run_index, _, ev in phase:
            for li, lam in enumerate(ev.lambdas):
                per_run[run_index][lam] = (li, ev)

    reports: list[MetricsReport] = []
    aggregates: dict[tuple[float, int], AggregateStats] = {}
    sampling_notes: list[tuple[float, int, int, float]] = []
    lengths = config.list_lengths
    for lam in effective:
        for gi, length in enumerate(lengths):
            cells = []
            for run_index in range(config.runs):
                li, ev = per_run[run_index][lam]
                report = MetricsReport(
                    lam=lam,
                    length=length,
                    auc=float(ev.auc[li]),
                    recall=float(ev.recall[li, gi]),
                    diversification=float(ev.diversification[li, gi]),
                    novelty=float(ev.novelty[li, gi]),
                    evaluated_users=ev.evaluated_users,
                    skipped_users=ev.skipped_users,
                    seed=run_seeds[run_index],
                )
                reports.append(report)
                cells.append(report)
                if ev.diversification_stderr is not None:
                    err = float(ev.diversification_stderr[li, gi])
                    if not math.isnan(err):
                        sampling_notes.append((lam, length, run_index, err))
            aggregates[(lam, length)] = _aggregate(cells)

    optima: dict[tuple[str, int], tuple[float, float]] = {}
    for metric in METRIC_NAMES:
        for length in lengths:
            means = [getattr(aggregates[(lam, length)], f"{metric}_mean")
                     for lam in effective]
            optima[(metric, length)] = _optimum(effective, means, minimize=(metric == "novelty"))

    return SweepResult(
        config=config,
        effective_grid=effective,
        reports=reports,
        aggregates=aggregates,
        optima=optima,
        run_seeds=run_seeds,
        sampling_notes=sampling_notes,
    )


def _mean_auc_curve(phase_results, grid, runs) -> list[float]:
    sums = {lam: 0.0 for lam in grid}
    for phase in phase_results:
        for _, _, ev in phase:
            for li, lam in enumerate(ev.lambdas):
                if lam in sums:
                    sums[lam] += float(ev.auc[li])
    return [sums[lam] / runs for lam in grid]


def _refinement_lambdas(center: float, existing) -> list[float]:
    lo = max(0.0, center - COARSE_NEIGHBORHOOD)
    hi = min(1.0, center + COARSE_NEIGHBORHOOD)
    have = set(existing)
    out = []
    k = math.ceil(round(lo / FINE_STEP, 6))
    while (lam := round(k * FINE_STEP, 10)) <= hi + 1e-12:
        if lam <= 1.0 and lam not in have:
            out.append(lam)
        k += 1
    return out


def _aggregate(cells: list[MetricsReport]) -> AggregateStats:
    def stats(values):
        arr = np.asarray(values, dtype=np.float64)
        mean = float(arr.mean())
        std = float(arr.std(ddof=1)) if len(arr) > 1 else 0.0
        return mean, std

    auc_m, auc_s = stats([c.auc for c in cells])
    rec_m, rec_s = stats([c.recall for c in cells])
    div_m, div_s = stats([c.diversification for c in cells])
    nov_m, nov_s = stats([c.novelty for c in cells])
    return AggregateStats(
        auc_mean=auc_m, auc_std=auc_s,
        recall_mean=rec_m, recall_std=rec_s,
        diversification_mean=div_m, diversification_std=div_s,
        novelty_mean=nov_m, novelty_std=nov_s,
        evaluated_users_mean=float(np.mean([c.evaluated_users for c in cells])),
        skipped_users_mean=float(np.mean([c.skipped_users for c in cells])),
        runs=len(cells),
    )


def emit_report(result: SweepResult, destination: str | Path, figures: bool = True) -> None:
    """Write the TSV reports (and figures) for a completed sweep.

    Files: ``runs.tsv`` (per-run rows), ``aggregate.tsv``, one
    ``curve_{metric}_L{length}.tsv`` per metric and length with lines
    ``lambda<TAB>mean<TAB>std`` (lambda to 4 decimals), ``optima.tsv``,
    ``sampling.tsv`` when the sampled diversification path ran, and the
    four curve figures under ``figures/``.
    """
    dest = Path(destination)
    try:
        dest.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create report directory {dest}: {exc}") from exc

    with open(dest / "runs.tsv", "w", encoding="utf-8") as fh:
        fh.write(f"# {REPORT_HEADER}\n")
        for report in result.reports:
            fh.write(report.row() + "\n")

    with open(dest / "aggregate.tsv", "w", encoding="utf-8") as fh:
        fh.write(
            "# lambda\tL\tauc_mean\tauc_std\trecall_mean\trecall_std"
            "\tdiversification_mean\tdiversification_std\tnovelty_mean\tnovelty_std"
            "\tevaluated_users_mean\tskipped_users_mean\truns\n"
        )
        for lam in result.effective_grid:
            for length in result.config.list_lengths:
                a = result.aggregates[(lam, length)]
                fields = [repr(float(lam)), str(length)]
                for value in (
                    a.auc_mean, a.auc_std, a.recall_mean, a.recall_std,
                    a.diversification_mean, a.diversification_std,
                    a.novelty_mean, a.novelty_std,
                    a.evaluated_users_mean, a.skipped_users_mean,
                ):
                    fields.append(repr(float(value)))
                fields.append(str(a.runs))
                fh.write("\t".join(fields) + "\n")

    for metric in METRIC_NAMES:
        for length in result.config.list_lengths:
            path = dest / f"curve_{metric}_L{length}.tsv"
            with open(path, "w", encoding="utf-8") as fh:
                for lam in result.effective_grid:
                    a = result.aggregates[(lam, length)]
                    mean = getattr(a, f"{metric}_mean")
                    std = getattr(a, f"{metric}_std")
                    fh.write(f"{lam:.4f}\t{repr(float(mean))}\t{repr(float(std))}\n")

    with open(dest / "optima.tsv", "w", encoding="utf-8") as fh:
        fh.write("# metric\tL\tlambda_opt\tmean\n")
        for metric in METRIC_NAMES:
            for length in result.config.list_lengths:
                lam, value = result.optima[(metric, length)]
                fh.write(f"{metric}\t{length}\t{lam:.4f}\t{repr(float(value))}\n")

    if result.sampling_notes:
        with open(dest / "sampling.tsv", "w", encoding="utf-8") as fh:
            fh.write("# lambda\tL\trun\tdiversification_stderr\n")
            for lam, length, run_index, err in result.sampling_notes:
                fh.write(f"{repr(float(lam))}\t{length}\t{run_index}\t{repr(float(err))}\n")

    if figures:
        from .plotting import render_figures

        render_figures(result, dest / "figures")
