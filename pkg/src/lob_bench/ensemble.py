"""
Sampling ensembles: many learners fit on stratified subsets of a shared pool,
combined by plurality vote.
"""

import logging
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
import pandas as pd
from joblib import Parallel, delayed
from tqdm import tqdm

from lob_bench.errors import EnsembleError, LobBenchError
from lob_bench.learners import decision_scores, fit_learner, predict_codes
from lob_bench.preprocess import check_supply, class_quotas, draw_stratified
from lob_bench.pydantic_models import (
    LABEL_ORDER,
    ColumnStats,
    EnsembleModel,
    Label,
    LearnerSpec,
    MemberFailure,
    SamplingPlan,
    TrainedModel,
    labels_from_codes,
)

logger = logging.getLogger(__name__)


def member_seeds(master_seed: int, n_members: int) -> list[int]:
    """Independent 64-bit member seeds spawned from one master seed."""
    children = np.random.SeedSequence(master_seed).spawn(n_members)
    return [int(child.generate_state(1, dtype=np.uint64)[0]) for child in children]


def _fit_member(
    index: int,
    seed: int,
    pool: pd.DataFrame,
    codes: np.ndarray,
    plan: SamplingPlan,
    spec: LearnerSpec,
    feature_order: list[str],
) -> dict:
    rng = np.random.default_rng(seed)
    positions = draw_stratified(codes, plan.train_size, plan.ratio, rng)
    try:
        model = fit_learner(pool.iloc[positions], spec, feature_order)
        return {"ok": True, "index": index, "seed": seed, "model": model}
    except LobBenchError as e:
        logger.warning(f"Ensemble member {index} failed: {e}")
        return {"ok": False, "index": index, "seed": seed, "error": repr(e)}


def ensemble_fit(
    pool: pd.DataFrame,
    n_members: int,
    plan_template: SamplingPlan,
    learner: LearnerSpec,
    feature_order: list[str],
    column_stats: Optional[ColumnStats] = None,
    seeds: Optional[Sequence[int]] = None,
    n_jobs: int = 1,
    show_progress: bool = False,
) -> EnsembleModel:
    """
    Fit ``n_members`` learners, each on its own stratified draw from ``pool``.

    Member seeds are spawned from ``plan_template.seed`` unless ``seeds`` is
    given. Members whose fit raises are recorded as failures and excluded from
    voting; non-converged members are kept.

    Raises:
        SamplingShortageError: If a class cannot fill its quota.
        EnsembleError: If every member failed.
    """
    if n_members < 1:
        raise EnsembleError("An ensemble needs at least one member")
    seeds = list(seeds) if seeds is not None else member_seeds(plan_template.seed, n_members)
    if len(seeds) != n_members:
        raise EnsembleError(f"Got {len(seeds)} member seed(s) for {n_members} member(s)")

    codes = pool["label"].to_numpy(dtype=np.int64)
    check_supply(codes, class_quotas(plan_template.train_size, plan_template.ratio))

    tasks = enumerate(seeds)
    if show_progress:
        tasks = tqdm(tasks, total=n_members, desc="Ensemble members", unit="member")
    results = Parallel(n_jobs=n_jobs)(
        delayed(_fit_member)(
            index, seed, pool, codes, plan_template, learner, feature_order
        )
        for index, seed in tasks
    )

    members: list[TrainedModel] = []
    plans: list[SamplingPlan] = []
    failures: list[MemberFailure] = []
    for result in results:
        if result["ok"]:
            members.append(result["model"])
            plans.append(plan_template.model_copy(update={"seed": result["seed"]}))
        else:
            failures.append(
                MemberFailure(index=result["index"], seed=result["seed"], error=result["error"])
            )

    if not members:
        raise EnsembleError(f"All {n_members} ensemble member(s) failed")
    n_converged = sum(1 for m in members if m.converged)
    logger.info(
        f"Ensemble: {len(members)} member(s) fitted ({n_converged} converged), "
        f"{len(failures)} failed"
    )
    return EnsembleModel(
        members=members,
        member_plans=plans,
        failures=failures,
        column_stats=column_stats,
    )


def plurality_vote(member_codes: np.ndarray, member_scores: np.ndarray) -> np.ndarray:
    """
    Most-voted class per row; ties go to the larger summed score among the tied
    classes, then to the first class in class order.

    Args:
        member_codes: (members, rows) predicted class codes.
        member_scores: (members, rows, 3) decision scores in class order.
    """
    member_codes = np.atleast_2d(member_codes)
    n_classes = len(LABEL_ORDER)
    counts = np.stack([(member_codes == c).sum(axis=0) for c in range(n_classes)], axis=1)
    tied = counts == counts.max(axis=1, keepdims=True)

    scores = np.where(np.isfinite(member_scores), member_scores, 0.0).sum(axis=0)
    masked = np.where(tied, scores, -np.inf)
    best = tied & (masked == masked.max(axis=1, keepdims=True))
    return np.argmax(best, axis=1)


def ensemble_predict_codes(model: EnsembleModel, rows: pd.DataFrame | np.ndarray) -> np.ndarray:
    if not model.members:
        raise EnsembleError("Ensemble has no usable members")
    if len(rows) == 0:
        return np.zeros(0, dtype=np.int64)
    codes = np.stack([predict_codes(member, rows) for member in model.members])
    scores = np.stack([decision_scores(member, rows) for member in model.members])
    return plurality_vote(codes, scores)


def ensemble_predict(model: EnsembleModel, rows: pd.DataFrame | np.ndarray) -> list[Label]:
    return labels_from_codes(ensemble_predict_codes(model, rows))


def save_ensemble(model: EnsembleModel, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(model.model_dump_json(indent=2), encoding="utf-8")
    return path


def load_ensemble(path: str | Path) -> EnsembleModel:
    return EnsembleModel.model_validate_json(Path(path).read_text(encoding="utf-8"))
