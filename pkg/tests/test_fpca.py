import numpy as np
import pandas as pd
import pytest

from lob_bench import fpca
from lob_bench.errors import ParameterError
from lob_bench.pydantic_models import NS_PER_SECOND, SESSION_CLOSE_NS, SESSION_OPEN_NS, Trajectory

G = 50


def _trajectories(data: np.ndarray) -> list[Trajectory]:
    grid = fpca.normalized_grid(data.shape[1])
    return [Trajectory(grid=grid, values=row, day=d) for d, row in enumerate(data)]


def test_single_event_gives_constant_trajectory():
    values = fpca.resample_day(np.array([SESSION_OPEN_NS]), np.array([100.0]), grid_size=G)
    assert np.all(values == 100.0)


def test_events_on_every_grid_point_resample_to_identity():
    horizon = 23_400.0
    step = int(horizon * NS_PER_SECOND) // G
    stamps = SESSION_CLOSE_NS - int(horizon * NS_PER_SECOND) + np.arange(G) * step
    mids = np.linspace(100, 101, G)
    assert np.array_equal(fpca.resample_day(stamps, mids, horizon, G), mids)


def test_two_events_make_a_step_function():
    midday = SESSION_OPEN_NS + (SESSION_CLOSE_NS - SESSION_OPEN_NS) // 2
    stamps = np.array([SESSION_OPEN_NS + NS_PER_SECOND, midday])
    values = fpca.resample_day(stamps, np.array([100.0, 102.0]), grid_size=G)
    grid_ns = SESSION_OPEN_NS + (SESSION_CLOSE_NS - SESSION_OPEN_NS) * np.arange(G) // G
    expected = np.where(grid_ns >= midday, 102.0, 100.0)
    assert np.array_equal(values, expected)


def test_build_trajectories_and_previous_day_map(synth_events):
    trajectories = fpca.build_trajectories(synth_events, grid_size=G)
    assert [t.day for t in trajectories] == [0, 1, 2]
    previous = fpca.previous_day_trajectories(trajectories)
    assert sorted(previous) == [1, 2]
    assert previous[2].day == 1


def test_previous_day_map_skips_gaps():
    data = np.ones((3, G))
    trajectories = _trajectories(data)
    trajectories[2] = trajectories[2].model_copy(update={"day": 5})
    assert sorted(fpca.previous_day_trajectories(trajectories)) == [1]


def test_missing_day_is_skipped(synth_events):
    trajectories = fpca.build_trajectories(synth_events, grid_size=G, days=[0, 7])
    assert [t.day for t in trajectories] == [0]


def test_orthonormality_and_ordering():
    rng = np.random.default_rng(0)
    data = rng.normal(size=(30, G)).cumsum(axis=1)
    basis = fpca.fit(_trajectories(data), 0.999)
    gram = basis.quadrature_weight * basis.components @ basis.components.T
    assert np.allclose(gram, np.eye(basis.n_components), atol=1e-8)
    assert np.all(np.diff(basis.eigenvalues) <= 0)
    assert basis.eigenvalues.sum() / basis.total_variance >= 0.999 - 1e-12


def test_rank_one_data_recovers_one_component():
    v = np.sin(np.linspace(0, 3, G)) + 0.5
    c = np.array([1.0, -2.0, 0.5, 3.0, 1.5])
    basis = fpca.fit(_trajectories(c[:, None] * v[None, :]), 0.999)
    assert basis.n_components == 1
    # centring leaves (c - mean(c)) * v, still proportional to v
    direction = v
    cosine = abs(basis.components[0] @ direction) / (
        np.linalg.norm(basis.components[0]) * np.linalg.norm(direction)
    )
    assert cosine == pytest.approx(1.0, abs=1e-10)


def test_three_factor_data_keeps_three_components():
    grid = fpca.normalized_grid(G)
    dt = 1.0 / G
    factors = np.vstack(
        [
            np.sqrt(2) * np.sin(2 * np.pi * grid),
            np.sqrt(2) * np.cos(2 * np.pi * grid),
            np.sqrt(2) * np.sin(4 * np.pi * grid),
            np.sqrt(2) * np.cos(4 * np.pi * grid),
        ]
    )
    assert np.allclose(dt * factors @ factors.T, np.eye(4), atol=1e-10)

    rng = np.random.default_rng(1)
    n = 400
    raw = rng.normal(size=(n, 4))
    raw -= raw.mean(axis=0)
    # whiten so the sample variances are exactly the construction's shares
    raw = raw @ np.linalg.inv(np.linalg.cholesky(np.cov(raw, rowvar=False)).T)
    scores = raw * np.sqrt([0.7, 0.25, 0.049, 0.001])
    data = 100.0 + scores @ factors

    basis = fpca.fit(_trajectories(data), 0.999)
    assert basis.n_components == 3
    assert basis.eigenvalues == pytest.approx([0.7, 0.25, 0.049], rel=1e-8)
    assert basis.total_variance == pytest.approx(1.0, rel=1e-8)


def test_identical_trajectories_give_empty_basis():
    basis = fpca.fit(_trajectories(np.full((4, G), 10.0)), 0.999)
    assert basis.n_components == 0
    assert basis.diagnostics
    assert fpca.project_all(_trajectories(np.full((2, G), 10.0)), basis).shape == (2, 0)


def test_projection_matches_quadrature_oracle():
    rng = np.random.default_rng(2)
    data = rng.normal(size=(12, G)).cumsum(axis=1)
    trajectories = _trajectories(data)
    basis = fpca.fit(trajectories, 0.999)

    target = trajectories[3]
    scores = fpca.project(target, basis).scores
    for j in range(basis.n_components):
        oracle = sum(
            basis.components[j, g] * (target.values[g] - basis.mean_curve[g]) for g in range(G)
        ) / G
        assert scores[j] == pytest.approx(oracle, rel=1e-10, abs=1e-12)


def test_projection_of_mean_and_basis_vector():
    rng = np.random.default_rng(3)
    basis = fpca.fit(_trajectories(rng.normal(size=(10, G)).cumsum(axis=1)), 0.999)
    grid = basis.grid
    at_mean = fpca.project(Trajectory(grid=grid, values=basis.mean_curve), basis).scores
    assert np.allclose(at_mean, 0.0, atol=1e-12)

    shifted = Trajectory(grid=grid, values=basis.mean_curve + basis.components[0])
    expected = np.zeros(basis.n_components)
    expected[0] = 1.0
    assert np.allclose(fpca.project(shifted, basis).scores, expected, atol=1e-8)


def test_training_scores_are_decorrelated():
    rng = np.random.default_rng(4)
    trajectories = _trajectories(rng.normal(size=(40, G)).cumsum(axis=1))
    basis = fpca.fit(trajectories, 0.999)
    scores = fpca.project_all(trajectories, basis)
    cov = np.cov(scores, rowvar=False)
    off_diagonal = cov - np.diag(np.diag(cov))
    assert np.abs(off_diagonal).max() <= 1e-6 * np.abs(np.diag(cov)).max()
    assert np.diag(cov) == pytest.approx(basis.eigenvalues, rel=1e-8)


def test_reconstruction_error_is_bounded():
    rng = np.random.default_rng(5)
    data = rng.normal(size=(25, G)).cumsum(axis=1)
    trajectories = _trajectories(data)
    threshold = 0.99
    basis = fpca.fit(trajectories, threshold)
    rebuilt = fpca.reconstruct(fpca.project_all(trajectories, basis), basis)
    error = basis.quadrature_weight * ((rebuilt - data) ** 2).sum(axis=1).mean()
    assert error <= (1 - threshold) * basis.total_variance * (len(data) - 1) / len(data) + 1e-12


def test_scaling_scales_eigenvalues_and_scores():
    rng = np.random.default_rng(6)
    data = rng.normal(size=(15, G)).cumsum(axis=1)
    base = fpca.fit(_trajectories(data), 0.999)
    scaled = fpca.fit(_trajectories(3.0 * data), 0.999)
    assert scaled.eigenvalues == pytest.approx(9.0 * base.eigenvalues, rel=1e-8)
    assert np.allclose(np.abs(scaled.components), np.abs(base.components), atol=1e-8)


def test_sign_convention_makes_peak_positive():
    rng = np.random.default_rng(7)
    basis = fpca.fit(_trajectories(rng.normal(size=(10, G)).cumsum(axis=1)), 0.999)
    for component in basis.components:
        assert component[np.abs(component).argmax()] > 0


def test_fit_errors():
    with pytest.raises(ParameterError):
        fpca.fit(_trajectories(np.ones((1, G))), 0.999)
    mixed = _trajectories(np.ones((2, G))) + _trajectories(np.ones((1, G + 1)))
    with pytest.raises(ParameterError):
        fpca.fit(mixed, 0.999)


def test_project_rejects_grid_mismatch():
    rng = np.random.default_rng(8)
    basis = fpca.fit(_trajectories(rng.normal(size=(5, G))), 0.999)
    other = Trajectory(grid=fpca.normalized_grid(G + 1), values=np.zeros(G + 1))
    with pytest.raises(ParameterError):
        fpca.project(other, basis)


def test_basis_persistence(tmp_path):
    rng = np.random.default_rng(9)
    basis = fpca.fit(_trajectories(rng.normal(size=(8, G)).cumsum(axis=1)), 0.999)
    loaded = fpca.load_basis(fpca.save_basis(basis, tmp_path / "basis.json"))
    assert loaded.components.dtype == np.float64
    assert np.array_equal(loaded.components, basis.components)
    assert np.array_equal(loaded.eigenvalues, basis.eigenvalues)


def test_build_trajectories_uses_each_day(make_events):
    events = pd.concat(
        [
            make_events([10.0, 11.0], [10.0, 11.0], day=0),
            make_events([20.0], [20.0], day=1),
        ],
        ignore_index=True,
    )
    trajectories = fpca.build_trajectories(events, grid_size=G)
    assert trajectories[0].values[-1] == 11.0
    assert np.all(trajectories[1].values == 20.0)
