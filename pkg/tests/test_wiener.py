import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import exact_model, lagged_regression_residual, model_of, white_noise
from sparsetopo.errors import ConfigurationError, SingularityError
from sparsetopo.wiener import (
    ProjectionRequest,
    gamma_scale,
    orthogonality_defect,
    project,
)


def mixed_rows(seed, n=3, T=500):
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((n, T))
    X[1, 1:] += 0.6 * X[0, :-1]
    X[2, :-2] += 0.4 * X[1, 2:]
    X[2, 3:] -= 0.3 * X[0, :-3]
    return X


def test_self_copy_is_perfect_predictor():
    x = white_noise(1, 2000, 4)[0]
    x[1:] += 0.5 * x[:-1]
    m = model_of([x, x, white_noise(1, 2000, 5)[0]], 6)
    sol = project(m, ProjectionRequest(0, (1,), 3, ridge=0.0))
    assert sol.tap(1, 0) == pytest.approx(1.0, abs=1e-6)
    others = np.delete(sol.taps[0], 3)
    assert np.max(np.abs(others)) <= 1e-6
    assert sol.residual_variance <= 1e-9 * m.variance(0)


def test_independent_input_has_small_filter():
    X = white_noise(2, 10000, 31)
    m = model_of(X, 20)
    sol = project(m, ProjectionRequest(0, (1,), 10))
    assert sol.channel_norm(1) <= 0.01
    assert sol.residual_variance == pytest.approx(m.variance(0), rel=0.05)


def test_delayed_gain_recovers_tap():
    rng = np.random.default_rng(41)
    T = 20000
    xi = rng.standard_normal(T + 1)
    ej = rng.standard_normal(T + 1)
    xj = ej.copy()
    xj[1:] += 0.5 * xi[:-1]
    m = model_of(np.vstack([xj, xi])[:, 1:], 20)
    sol = project(m, ProjectionRequest(0, (1,), 10))

    # oracle: the same normal equations with exact theoretical covariances
    exact = exact_model({(0, 0, 0): 1.25, (1, 1, 0): 1.0, (1, 0, 1): 0.5, (0, 0, 20): 0.0})
    ref = project(exact, ProjectionRequest(0, (1,), 10, ridge=0.0))
    assert ref.tap(1, 1) == pytest.approx(0.5, abs=1e-12)
    assert ref.residual_variance == pytest.approx(1.0, abs=1e-12)

    assert sol.tap(1, 1) == pytest.approx(ref.tap(1, 1), abs=0.05)
    others = np.delete(sol.taps[0], 11)
    assert np.max(np.abs(others)) <= 0.05
    assert sol.residual_variance == pytest.approx(np.var(ej[1:]), rel=0.05)


def test_empty_inputs():
    m = model_of(white_noise(2, 100, 0), 4)
    sol = project(m, ProjectionRequest(1, (), 2))
    assert sol.taps.shape == (0, 5)
    assert sol.residual_variance == m.variance(1)
    assert orthogonality_defect(m, sol) == 0.0


@pytest.mark.parametrize("seed", range(10))
def test_matches_lagged_regression(seed):
    X = mixed_rows(seed)
    m = model_of(X, 4)
    for j, inputs in [(2, (0, 1)), (0, (2,)), (1, (2, 0))]:
        sol = project(m, ProjectionRequest(j, inputs, 2, ridge=0.0))
        oracle = lagged_regression_residual(X, j, list(inputs), 2)
        assert sol.residual_variance == pytest.approx(oracle, rel=1e-6)


def test_orthogonality_unregularised():
    m = model_of(mixed_rows(3), 4)
    sol = project(m, ProjectionRequest(2, (0, 1), 2, ridge=0.0))
    assert orthogonality_defect(m, sol) <= 1e-8 * gamma_scale(sol)


def test_orthogonality_with_ridge():
    m = model_of(mixed_rows(4), 4)
    r = 0.05
    sol = project(m, ProjectionRequest(2, (0, 1), 2, ridge=r))
    assert orthogonality_defect(m, sol) == pytest.approx(r * np.max(np.abs(sol.taps)), rel=1e-9)


def test_residual_bounds():
    m = model_of(mixed_rows(5), 4)
    sol = project(m, ProjectionRequest(2, (0, 1), 2))
    assert 0 <= sol.residual_variance <= m.variance(2) + 1e-9
    assert np.all(np.isfinite(sol.channel_norms()))


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10**6))
def test_nested_sets_monotone(seed):
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((4, 300))
    X[3, 1:] += rng.normal() * X[0, :-1]
    m = model_of(X, 4)
    chain = [(), (1,), (1, 0), (1, 0, 2)]
    res = [project(m, ProjectionRequest(3, c, 2, ridge=0.0)).residual_variance for c in chain]
    for a, b in zip(res, res[1:]):
        assert b <= a + 1e-9


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10**6), st.permutations([0, 1, 2]))
def test_permutation_invariance(seed, perm):
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((4, 300))
    X[3, 2:] += 0.5 * X[1, :-2]
    m = model_of(X, 4)
    base = project(m, ProjectionRequest(3, (0, 1, 2), 2, ridge=0.0))
    other = project(m, ProjectionRequest(3, tuple(perm), 2, ridge=0.0))
    assert other.residual_variance == pytest.approx(base.residual_variance, rel=1e-12)
    for k, i in enumerate(perm):
        np.testing.assert_allclose(other.taps[k], base.taps[i], atol=1e-10)


def test_singular_without_ridge():
    x = white_noise(1, 500, 1)[0]
    m = model_of([white_noise(1, 500, 2)[0], x, x], 4)
    with pytest.raises(SingularityError, match="ridge"):
        project(m, ProjectionRequest(0, (1, 2), 2, ridge=0.0))
    sol = project(m, ProjectionRequest(0, (1, 2), 2))
    assert np.all(np.isfinite(sol.taps))


def test_request_validation():
    with pytest.raises(ConfigurationError):
        ProjectionRequest(0, (0, 1))
    with pytest.raises(ConfigurationError):
        ProjectionRequest(0, (1, 1))
    with pytest.raises(ConfigurationError):
        ProjectionRequest(0, (1,), -1)
    with pytest.raises(ConfigurationError):
        ProjectionRequest(0, (1,), 1, ridge=-1.0)
    m = model_of(white_noise(2, 200, 0), 4)
    with pytest.raises(ConfigurationError, match="L_max"):
        project(m, ProjectionRequest(0, (1,), 3))
    with pytest.raises(ConfigurationError):
        project(m, ProjectionRequest(0, (5,), 1))


def test_solution_json():
    m = model_of(mixed_rows(0), 4)
    sol = project(m, ProjectionRequest(2, (0, 1), 2))
    obj = json.loads(json.dumps(sol.to_json()))
    assert obj["target"] == 2 and obj["inputs"] == [0, 1] and obj["L"] == 2
    np.testing.assert_array_equal(np.array(obj["taps"]), sol.taps)
