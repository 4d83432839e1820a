"""
Functional PCA of one-day mid-price trajectories.

Trajectories are sampled on the normalized grid t_g = g/G (g = 0..G-1) over the
last ``horizon`` of the session, so the quadrature weight is dt = 1/G. The basis
is computed from an SVD of the centred data matrix:

    lambda_j = S_j**2 * dt / (n - 1),  delta_j = V_j / sqrt(dt)

which satisfies dt * sum_g delta_j(g) delta_h(g) = [j == h].
"""

import logging
from pathlib import Path
from typing import Sequence

import numpy as np
import pandas as pd
from scipy import linalg

from lob_bench.errors import ParameterError
from lob_bench.pydantic_models import (
    NS_PER_SECOND,
    SESSION_CLOSE_NS,
    FpcaBasis,
    FpcScores,
    Trajectory,
)

logger = logging.getLogger(__name__)

DEFAULT_HORIZON_SECONDS = 23_400.0
DEFAULT_GRID_SIZE = 390
DEFAULT_VARIANCE_THRESHOLD = 0.999
_THRESHOLD_SLACK = 1e-12


def normalized_grid(grid_size: int) -> np.ndarray:
    if grid_size < 2:
        raise ParameterError("A trajectory grid needs at least 2 points")
    return np.arange(grid_size, dtype=np.float64) / grid_size


def resample_day(
    stamps: np.ndarray,
    mids: np.ndarray,
    horizon_seconds: float = DEFAULT_HORIZON_SECONDS,
    grid_size: int = DEFAULT_GRID_SIZE,
) -> np.ndarray:
    """
    Last observation carried forward onto the grid; grid points before the
    first event take the first observation.
    """
    horizon_ns = int(round(horizon_seconds * NS_PER_SECOND))
    points = SESSION_CLOSE_NS - horizon_ns + (horizon_ns * np.arange(grid_size)) // grid_size
    position = np.searchsorted(stamps, points, side="right") - 1
    return np.asarray(mids, dtype=np.float64)[np.maximum(position, 0)]


def build_trajectories(
    events: pd.DataFrame,
    horizon_seconds: float = DEFAULT_HORIZON_SECONDS,
    grid_size: int = DEFAULT_GRID_SIZE,
    days: Sequence[int] | None = None,
) -> list[Trajectory]:
    """
    One trajectory per trading day present in ``events``; ``Trajectory.day`` is
    the day the mid-prices come from. Days listed in ``days`` without events are
    skipped with a warning.
    """
    grid = normalized_grid(grid_size)
    by_day = {int(d): group for d, group in events.groupby("day", sort=True)}
    wanted = sorted(by_day) if days is None else list(days)

    trajectories = []
    for day in wanted:
        group = by_day.get(day)
        if group is None or len(group) == 0:
            logger.warning(f"Day {day} has no events; trajectory skipped")
            continue
        values = resample_day(
            group["timestamp_ns"].to_numpy(dtype=np.int64),
            group["mid_price"].to_numpy(dtype=np.float64),
            horizon_seconds,
            grid_size,
        )
        trajectories.append(Trajectory(grid=grid, values=values, day=day))
    return trajectories


def previous_day_trajectories(trajectories: Sequence[Trajectory]) -> dict[int, Trajectory]:
    """Map each trading day to the trajectory of the day before it."""
    ordered = sorted(trajectories, key=lambda t: t.day)
    return {
        later.day: earlier
        for earlier, later in zip(ordered, ordered[1:])
        if later.day == earlier.day + 1
    }


def _common_grid(trajectories: Sequence[Trajectory]) -> np.ndarray:
    grid = trajectories[0].grid
    for trajectory in trajectories[1:]:
        if not np.array_equal(trajectory.grid, grid):
            raise ParameterError("Trajectories do not share a common grid")
    return grid


def _orient(components: np.ndarray) -> np.ndarray:
    """Flip each component so its largest-magnitude entry is positive."""
    if components.size == 0:
        return components
    peak = np.abs(components).argmax(axis=1)
    signs = np.sign(components[np.arange(components.shape[0]), peak])
    signs[signs == 0] = 1.0
    return components * signs[:, None]


def fit(
    trajectories: Sequence[Trajectory],
    variance_threshold: float = DEFAULT_VARIANCE_THRESHOLD,
) -> FpcaBasis:
    """
    Eigen-decomposition of the dt-weighted sample covariance, keeping the
    smallest J whose cumulative share reaches ``variance_threshold``.

    Raises:
        ParameterError: With fewer than 2 trajectories or differing grids.
    """
    if len(trajectories) < 2:
        raise ParameterError("FPCA needs at least 2 trajectories")
    if not 0 < variance_threshold <= 1:
        raise ParameterError("variance_threshold must lie in (0, 1]")

    grid = _common_grid(trajectories)
    dt = float(grid[1] - grid[0])
    data = np.vstack([t.values for t in trajectories])
    n, grid_size = data.shape

    if np.all(data == data[0]):
        message = "All trajectories are identical; FPCA basis is empty"
        logger.warning(message)
        return FpcaBasis(
            grid=grid,
            mean_curve=data[0].copy(),
            components=np.zeros((0, grid_size)),
            eigenvalues=np.zeros(0),
            total_variance=0.0,
            quadrature_weight=dt,
            variance_threshold=variance_threshold,
            diagnostics=[message],
        )

    mean_curve = data.mean(axis=0)
    _, singular, right = linalg.svd(data - mean_curve, full_matrices=False)
    eigenvalues = singular**2 * dt / (n - 1)
    total = float(eigenvalues.sum())

    share = np.cumsum(eigenvalues) / total
    n_keep = int(np.searchsorted(share, variance_threshold - _THRESHOLD_SLACK) + 1)
    n_keep = min(n_keep, eigenvalues.size)
    components = _orient(right[:n_keep] / np.sqrt(dt))

    logger.info(
        f"FPCA on {n} trajectories: kept {n_keep} component(s) "
        f"explaining {share[n_keep - 1]:.6f} of the variance"
    )
    return FpcaBasis(
        grid=grid,
        mean_curve=mean_curve,
        components=components,
        eigenvalues=eigenvalues[:n_keep],
        total_variance=total,
        quadrature_weight=dt,
        variance_threshold=variance_threshold,
    )


def _check_grid(grid: np.ndarray, basis: FpcaBasis) -> None:
    if not np.array_equal(grid, basis.grid):
        raise ParameterError("Trajectory grid does not match the FPCA basis grid")


def project(trajectory: Trajectory, basis: FpcaBasis) -> FpcScores:
    """s_j = dt * sum_g delta_j(g) (X(g) - mean(g))."""
    _check_grid(trajectory.grid, basis)
    scores = basis.quadrature_weight * (
        basis.components @ (trajectory.values - basis.mean_curve)
    )
    return FpcScores(scores=scores, day=trajectory.day)


def project_all(trajectories: Sequence[Trajectory], basis: FpcaBasis) -> np.ndarray:
    """(n, J) score matrix."""
    if not trajectories:
        return np.zeros((0, basis.n_components))
    for trajectory in trajectories:
        _check_grid(trajectory.grid, basis)
    data = np.vstack([t.values for t in trajectories])
    return basis.quadrature_weight * ((data - basis.mean_curve) @ basis.components.T)


def reconstruct(scores: np.ndarray, basis: FpcaBasis) -> np.ndarray:
    """mean + sum_j s_j delta_j for one score vector or an (n, J) matrix."""
    scores = np.asarray(scores, dtype=np.float64)
    if scores.shape[-1] != basis.n_components:
        raise ParameterError(
            f"Expected {basis.n_components} score(s) per trajectory, got {scores.shape[-1]}"
        )
    return basis.mean_curve + scores @ basis.components


def save_basis(basis: FpcaBasis, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(basis.model_dump_json(indent=2), encoding="utf-8")
    return path


def load_basis(path: str | Path) -> FpcaBasis:
    return FpcaBasis.model_validate_json(Path(path).read_text(encoding="utf-8"))
