import numpy as np
import pytest

from bankplan.errors import BudgetExceeded, Infeasible
from bankplan.optimizer import (
    OptimizerConfig,
    de_optimize,
    grid_oracle,
    project_simplex_head,
)


def _zero_viol(p):
    return np.zeros(len(p))


def test_config_validation():
    with pytest.raises(ValueError):
        OptimizerConfig(population=2)
    with pytest.raises(ValueError):
        OptimizerConfig(mutation=0.0)
    with pytest.raises(ValueError):
        OptimizerConfig(crossover=1.5)
    with pytest.raises(ValueError):
        OptimizerConfig(constraint_handling="magic")


def test_unconstrained_quadratic():
    center = np.array([0.3, -0.2, 0.7])

    def obj(p):
        return -np.sum((p - center) ** 2, axis=1)

    cfg = OptimizerConfig(seed=5, generations=400)
    res = de_optimize(obj, _zero_viol, [(-1, 1)] * 3, cfg)
    assert np.allclose(res.point, center, atol=1e-6)
    assert res.violation == 0.0


def test_determinism_bit_identical():
    def obj(p):
        return -np.sum(p**2, axis=1)

    cfg = OptimizerConfig(seed=11, generations=60)
    a = de_optimize(obj, _zero_viol, [(-2, 2)] * 2, cfg)
    b = de_optimize(obj, _zero_viol, [(-2, 2)] * 2, cfg)
    assert np.array_equal(a.point, b.point)
    assert np.array_equal(a.trace, b.trace)
    assert a.objective == b.objective


def test_infeasible_raises():
    def viol(p):
        return np.ones(len(p))  # nothing is ever feasible

    cfg = OptimizerConfig(seed=0, generations=10)
    with pytest.raises(Infeasible):
        de_optimize(lambda p: np.zeros(len(p)), viol, [(0, 1)] * 2, cfg)


def test_feasibility_ranking_prefers_feasible():
    # objective favors the infeasible half-space; the solver must stay feasible
    def obj(p):
        return p[:, 0]

    def viol(p):
        return np.clip(p[:, 0] - 0.5, 0.0, None)

    cfg = OptimizerConfig(seed=2, generations=200)
    res = de_optimize(obj, viol, [(0, 1)], cfg)
    assert res.violation == 0.0
    assert res.point[0] == pytest.approx(0.5, abs=1e-6)


def test_penalty_mode_runs():
    def obj(p):
        return -np.sum(p**2, axis=1)

    cfg = OptimizerConfig(seed=4, generations=100, constraint_handling="penalty")
    res = de_optimize(obj, _zero_viol, [(-1, 1)] * 2, cfg)
    assert np.allclose(res.point, 0.0, atol=1e-4)


def test_simplex_projection():
    pts = np.array([[0.2, 0.3, 0.5, 9.0], [-1.0, -2.0, -3.0, 1.0]])
    out = project_simplex_head(pts, 3)
    assert np.allclose(out[:, :3].sum(axis=1), 1.0)
    assert np.all(out[:, :3] >= 0.0)
    assert np.allclose(out[1, :3], 1.0 / 3.0)  # all-zero head falls back to uniform
    assert out[0, 3] == 9.0  # tail untouched


def test_grid_oracle_1d():
    point, obj = grid_oracle(
        lambda p: p[:, 0], _zero_viol, [(0.0, 1.0)], steps=[0.1]
    )
    assert point[0] == pytest.approx(1.0)
    assert obj == pytest.approx(1.0)


def test_grid_oracle_budget_and_infeasible():
    with pytest.raises(BudgetExceeded):
        grid_oracle(lambda p: p[:, 0], _zero_viol, [(0, 1)] * 4,
                    steps=[1e-3] * 4, budget=1e6)
    with pytest.raises(Infeasible):
        grid_oracle(lambda p: p[:, 0], lambda p: np.ones(len(p)),
                    [(0, 1)], steps=[0.5])


def test_seeds_are_used():
    # a needle-in-haystack feasible set only the seed can hit
    target = np.array([0.625, 0.125])

    def viol(p):
        return np.where(np.all(np.abs(p - target) < 1e-6, axis=1), 0.0, 1.0)

    cfg = OptimizerConfig(seed=1, generations=5)
    res = de_optimize(lambda p: np.zeros(len(p)), viol, [(0, 1)] * 2, cfg,
                      seeds=np.array([target]))
    assert np.allclose(res.point, target)
