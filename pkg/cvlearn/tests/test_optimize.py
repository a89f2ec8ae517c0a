import numpy as np
import pytest
from cvlearn.optimize import OptimizerConfig, minimize


def sphere(x):
    return float(np.sum((x - 1.5) ** 2))


def test_minimize_sphere(rng):
    result = minimize(sphere, 3, OptimizerConfig(), rng)
    assert result.value < 1e-6
    np.testing.assert_allclose(result.x, 1.5, atol=1e-3)
    assert result.trace == sorted(result.trace, reverse=True)


def test_target_stops_early(rng):
    config = OptimizerConfig(target=1e-2, refine=False)
    result = minimize(sphere, 2, config, rng)
    assert result.converged
    assert result.value <= 1e-2
    assert result.evaluations < config.max_evaluations


def test_budget_exhaustion(rng):
    config = OptimizerConfig(max_evaluations=50)
    result = minimize(sphere, 4, config, rng)
    assert not result.converged
    assert result.evaluations == 50
    assert np.isfinite(result.value)


def test_non_finite_objective_is_avoided(rng):
    def objective(x):
        return np.nan if x[0] < 0 else float((x[0] - 1) ** 2)

    result = minimize(objective, 1, OptimizerConfig(generations=20), rng, x0=np.array([2.0]))
    assert result.x[0] >= 0
    assert result.value < 1e-4


def test_invalid_parents():
    with pytest.raises(ValueError):
        OptimizerConfig(population=4, parents=5)
