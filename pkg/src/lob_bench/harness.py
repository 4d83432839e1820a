"""
Benchmark orchestration: per-symbol datasets, paired repeats over setups,
strategy deltas, significance and importance.
"""

import logging
import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import pandas as pd
from joblib import Parallel, delayed
from tqdm import tqdm

from lob_bench import __version__, fpca
from lob_bench.config import config_hash
from lob_bench.ensemble import ensemble_fit, ensemble_predict_codes
from lob_bench.errors import ExperimentError
from lob_bench.features import META_COLUMNS, build_features
from lob_bench.ingest import as_raw_frame, clean, parse_quote_files, summary_statistics
from lob_bench.learner_router import (
    ENSEMBLE_SETUPS,
    SETUPS_WITH_FPCA,
    comparisons_for_setups,
    get_feature_columns_for_setup,
    learner_spec,
)
from lob_bench.learners import fit_learner, predict_codes
from lob_bench.preprocess import fit_stats, stratified_indices, transform
from lob_bench.pydantic_models import (
    LABEL_ORDER,
    BenchmarkReport,
    CleaningReport,
    DeltaRecord,
    ExperimentConfig,
    LabelingParams,
    LabelShare,
    LearnerSpec,
    QuoteSummary,
    RepeatFailure,
    RepeatMetrics,
    RepeatSeed,
    RunManifest,
    SamplingPlan,
    SignificanceRow,
    SymbolSource,
    TimingRecord,
    TrainedModel,
    Trajectory,
    fpc_feature_id,
)
from lob_bench.stats import fdr_adjust, importance, score, wilcoxon_signed_rank
from lob_bench.synth import generate
from lob_bench.windowing import DEFAULT_ALPHAS, frame_days, label_distribution

logger = logging.getLogger(__name__)


@dataclass
class SymbolDataset:
    """Labeled feature rows of one symbol plus what the repeats need."""

    symbol: str
    rows: pd.DataFrame
    previous_day: dict[int, Trajectory]
    cleaning: CleaningReport
    label_shares: list[LabelShare] = field(default_factory=list)
    quote_summary: list[QuoteSummary] = field(default_factory=list)


@dataclass
class RepeatOutcome:
    stock: str
    repeat: int
    seed: int
    ok: bool = False
    metrics: list[RepeatMetrics] = field(default_factory=list)
    timings: list[TimingRecord] = field(default_factory=list)
    importance_models: list[TrainedModel] = field(default_factory=list)
    train_positions: Optional[np.ndarray] = None
    test_positions: Optional[np.ndarray] = None
    error: Optional[str] = None


def repeat_seed(master_seed: int, stock_index: int, repeat: int) -> int:
    """Seed of one (stock, repeat) job, independent of scheduling."""
    sequence = np.random.SeedSequence(master_seed, spawn_key=(stock_index, repeat))
    return int(sequence.generate_state(1, dtype=np.uint64)[0])


def needs_fpca(setups: list[str]) -> bool:
    return any(setup in SETUPS_WITH_FPCA for setup in setups)


def load_symbol_events(
    source: SymbolSource, config: ExperimentConfig
) -> tuple[pd.DataFrame, CleaningReport]:
    """Parse and clean a symbol's quote files, or generate and clean its synthetic stream."""
    if source.synth is not None:
        events = generate(source.synth.model_copy(update={"symbol": source.symbol}))
        return clean(as_raw_frame(events))
    parsed = parse_quote_files(source.paths, config.ingest)
    if parsed.errors:
        logger.warning(f"{source.symbol}: {len(parsed.errors)} malformed line(s) skipped")
    return clean(parsed)


def build_symbol_dataset(source: SymbolSource, config: ExperimentConfig) -> SymbolDataset:
    events, report = load_symbol_events(source, config)
    days = frame_days(events, config.k)
    rows = build_features(days, LabelingParams(alpha=config.alpha, k=config.k))

    previous_day: dict[int, Trajectory] = {}
    if needs_fpca(config.setups):
        trajectories = fpca.build_trajectories(
            events, config.fpca.horizon_seconds, config.fpca.grid_size
        )
        previous_day = fpca.previous_day_trajectories(trajectories)
        # rows without a previous-day trajectory are dropped for every setup
        rows = rows[rows["day"].isin(list(previous_day))].reset_index(drop=True)

    alphas = sorted(set(DEFAULT_ALPHAS) | {config.alpha})
    logger.info(f"{source.symbol}: {len(rows)} labeled window(s) over {len(days)} day(s)")
    return SymbolDataset(
        symbol=source.symbol,
        rows=rows,
        previous_day=previous_day,
        cleaning=report,
        label_shares=label_distribution(days, alphas, stock=source.symbol),
        quote_summary=summary_statistics(events, source.symbol),
    )


def attach_fpc_scores(
    rows: pd.DataFrame,
    previous_day: dict[int, Trajectory],
    train_positions: np.ndarray,
    variance_threshold: float,
) -> tuple[pd.DataFrame, list[str]]:
    """
    Fit the FPCA basis on the trajectories of the training rows' days and add
    one score column per component to every row.
    """
    train_days = sorted(set(rows["day"].to_numpy()[train_positions].tolist()))
    basis = fpca.fit([previous_day[d] for d in train_days], variance_threshold)
    columns = [fpc_feature_id(j + 1) for j in range(basis.n_components)]
    days = sorted(previous_day)
    scores = fpca.project_all([previous_day[d] for d in days], basis)
    score_frame = pd.DataFrame(scores, columns=columns)
    score_frame.insert(0, "day", np.asarray(days, dtype=np.int64))
    return rows.merge(score_frame, on="day", how="left"), columns


def _ordered_union(groups: list[list[str]]) -> list[str]:
    seen: dict[str, None] = {}
    for group in groups:
        for name in group:
            seen.setdefault(name, None)
    return list(seen)


def run_repeat(
    dataset: SymbolDataset,
    config: ExperimentConfig,
    spec: LearnerSpec,
    repeat: int,
    seed: int,
) -> RepeatOutcome:
    """
    One paired repeat: a single train/test draw shared by every setup.

    Raises:
        LobBenchError: Any module error; the caller records the repeat as failed.
    """
    outcome = RepeatOutcome(stock=dataset.symbol, repeat=repeat, seed=seed)
    rows = dataset.rows
    plan = SamplingPlan(
        train_size=config.train_size,
        test_size=config.test_size,
        ratio=config.ratio,
        seed=seed,
    )
    codes = rows["label"].to_numpy(dtype=np.int64)
    train_positions, test_positions = stratified_indices(codes, plan)

    fpc_columns: list[str] = []
    table = rows
    if needs_fpca(config.setups):
        table, fpc_columns = attach_fpc_scores(
            rows, dataset.previous_day, train_positions, config.fpca.variance_threshold
        )

    setup_columns = {
        setup: get_feature_columns_for_setup(setup, fpc_columns) for setup in config.setups
    }
    needed = _ordered_union(list(setup_columns.values()))
    stats = fit_stats(table.iloc[train_positions], needed)
    prepared = transform(table[META_COLUMNS + needed], stats, needed)
    train_rows = prepared.iloc[train_positions]
    test_rows = prepared.iloc[test_positions]
    actual = codes[test_positions]

    pool_mask = np.ones(len(prepared), dtype=bool)
    pool_mask[test_positions] = False
    importance_setup = "ensemble" if "ensemble" in config.setups else "baseline"

    for setup in config.setups:
        columns = setup_columns[setup]
        started = time.perf_counter()
        if setup in ENSEMBLE_SETUPS:
            model = ensemble_fit(
                prepared.iloc[np.flatnonzero(pool_mask)],
                config.n_members,
                plan,
                spec,
                columns,
                column_stats=stats,
            )
            predicted = ensemble_predict_codes(model, test_rows)
            members = model.members
            converged = model.n_converged == len(members)
        else:
            single = fit_learner(train_rows, spec, columns, stats)
            predicted = predict_codes(single, test_rows)
            members = [single]
            converged = single.converged
        seconds = time.perf_counter() - started

        metrics = score(predicted, actual)
        outcome.metrics.append(
            RepeatMetrics(
                stock=dataset.symbol,
                learner=spec.kind,
                setup=setup,
                repeat=repeat,
                precision=metrics.macro_precision,
                recall=metrics.macro_recall,
                f1=metrics.macro_f1,
                per_class_f1={label: metrics.per_class[label].f1 for label in LABEL_ORDER},
                converged=converged,
                n_features=len(columns),
            )
        )
        outcome.timings.append(
            TimingRecord(
                stock=dataset.symbol,
                learner=spec.kind,
                setup=setup,
                repeat=repeat,
                seconds=seconds,
            )
        )
        if spec.kind == "enet" and setup == importance_setup:
            outcome.importance_models.extend(
                m.model_copy(update={"column_stats": None}) for m in members
            )

    outcome.train_positions = train_positions
    outcome.test_positions = test_positions
    outcome.ok = True
    return outcome


def _repeat_job(
    dataset: SymbolDataset,
    config: ExperimentConfig,
    spec: LearnerSpec,
    repeat: int,
    seed: int,
) -> RepeatOutcome:
    try:
        return run_repeat(dataset, config, spec, repeat, seed)
    except Exception as e:
        logger.error(f"Repeat {repeat} of {dataset.symbol} failed: {repr(e)}", exc_info=True)
        return RepeatOutcome(stock=dataset.symbol, repeat=repeat, seed=seed, error=repr(e))


def strategy_deltas(
    metrics: list[RepeatMetrics], setups: list[str]
) -> list[DeltaRecord]:
    """Per-repeat macro-F1 differences for every strategy whose setups both ran."""
    f1 = {(m.stock, m.learner, m.setup, m.repeat): m.f1 for m in metrics}
    keys = sorted({(m.stock, m.learner, m.repeat) for m in metrics}, key=lambda k: k[2])
    stocks = list(dict.fromkeys(m.stock for m in metrics))

    deltas: list[DeltaRecord] = []
    for strategy, (first, second) in comparisons_for_setups(setups).items():
        for stock in stocks:
            for key_stock, learner, repeat in keys:
                if key_stock != stock:
                    continue
                a = f1.get((stock, learner, first, repeat))
                b = f1.get((stock, learner, second, repeat))
                if a is None or b is None:
                    continue
                deltas.append(
                    DeltaRecord(
                        stock=stock,
                        learner=learner,
                        strategy=strategy,
                        repeat=repeat,
                        f1_delta=a - b,
                    )
                )
    return deltas


def significance_table(deltas: list[DeltaRecord], fdr_level: float) -> list[SignificanceRow]:
    """Wilcoxon per (stock, learner, strategy); BH adjustment across stocks per (learner, strategy)."""
    grouped: dict[tuple[str, str], dict[str, list[float]]] = {}
    for delta in deltas:
        grouped.setdefault((delta.learner, delta.strategy), {}).setdefault(
            delta.stock, []
        ).append(delta.f1_delta)

    rows: list[SignificanceRow] = []
    for (learner, strategy), by_stock in grouped.items():
        stocks = list(by_stock)
        results = [wilcoxon_signed_rank(by_stock[stock]) for stock in stocks]
        adjusted = fdr_adjust([result.p for result in results])
        for stock, result, adjusted_p in zip(stocks, results, adjusted):
            rows.append(
                SignificanceRow(
                    stock=stock,
                    learner=learner,
                    strategy=strategy,
                    n=result.n,
                    w=result.w,
                    raw_p=result.p,
                    adjusted_p=float(adjusted_p),
                    significant=bool(adjusted_p < fdr_level),
                )
            )
    return rows


class BenchmarkRunner:
    """
    Runs every (symbol, repeat) job of an experiment and assembles the report.

    Each repeat is independent: a failure is logged, recorded and counted
    against ``repeat_failure_budget`` without stopping the other repeats.
    """

    def __init__(self, config: ExperimentConfig, n_jobs: int = 1, show_progress: bool = True):
        self.config = config
        self.n_jobs = n_jobs
        self.show_progress = show_progress
        self.spec = learner_spec(config.learner, config.enet, config.svm)
        self.datasets: list[SymbolDataset] = []
        self.outcomes: list[RepeatOutcome] = []

    def prepare(self) -> list[SymbolDataset]:
        self.datasets = [build_symbol_dataset(source, self.config) for source in self.config.symbols]
        return self.datasets

    def run(self) -> BenchmarkReport:
        config = self.config
        if not self.datasets:
            self.prepare()

        jobs = [
            (dataset, repeat, repeat_seed(config.seed, stock_index, repeat))
            for stock_index, dataset in enumerate(self.datasets)
            for repeat in range(config.n_repeats)
        ]
        logger.info(
            f"Running {len(jobs)} repeat(s) over {len(self.datasets)} symbol(s), "
            f"setups {config.setups}, learner {config.learner}"
        )
        tasks = tqdm(jobs, desc="Repeats", unit="repeat", disable=not self.show_progress)
        self.outcomes = Parallel(n_jobs=self.n_jobs)(
            delayed(_repeat_job)(dataset, config, self.spec, repeat, seed)
            for dataset, repeat, seed in tasks
        )
        return self.assemble()

    def assemble(self) -> BenchmarkReport:
        config = self.config
        metrics: list[RepeatMetrics] = []
        timings: list[TimingRecord] = []
        failures: list[RepeatFailure] = []
        importance_models: dict[str, list[TrainedModel]] = {}
        for outcome in self.outcomes:
            if outcome.ok:
                metrics.extend(outcome.metrics)
                timings.extend(outcome.timings)
                if outcome.importance_models:
                    importance_models.setdefault(outcome.stock, []).extend(
                        outcome.importance_models
                    )
            else:
                failures.append(
                    RepeatFailure(stock=outcome.stock, repeat=outcome.repeat, error=outcome.error or "")
                )

        deltas = strategy_deltas(metrics, list(config.setups))
        report = BenchmarkReport(
            config=config,
            manifest=RunManifest(
                config_hash=config_hash(config),
                code_version=__version__,
                seeds=[
                    RepeatSeed(stock=o.stock, repeat=o.repeat, seed=o.seed) for o in self.outcomes
                ],
                timings=timings,
            ),
            metrics=metrics,
            deltas=deltas,
            significance=significance_table(deltas, config.fdr_level),
            importance=(
                importance(importance_models, config.importance_threshold)
                if importance_models
                else None
            ),
            label_distribution=[s for d in self.datasets for s in d.label_shares],
            quote_summary=[s for d in self.datasets for s in d.quote_summary],
            cleaning={d.symbol: d.cleaning for d in self.datasets},
            failures=failures,
        )
        logger.info(
            f"Benchmark finished: {len(metrics)} setup result(s), {len(failures)} failed repeat(s)"
        )
        return report


def run_experiment(
    config: ExperimentConfig, n_jobs: int = 1, show_progress: bool = True
) -> BenchmarkReport:
    """
    Raises:
        ExperimentError: When more repeats fail than ``repeat_failure_budget``
            allows; the assembled report is attached as ``error.report``.
    """
    report = BenchmarkRunner(config, n_jobs=n_jobs, show_progress=show_progress).run()
    if len(report.failures) > config.repeat_failure_budget:
        error = ExperimentError(
            f"{len(report.failures)} repeat(s) failed; budget is {config.repeat_failure_budget}"
        )
        error.report = report
        raise error
    return report
