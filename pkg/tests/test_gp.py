import numpy as np
import pytest

from conserva.extract.expression import const, evaluate, to_prefix
from conserva.extract.gp import GpConfig, GpRegressor, gp_symreg


def _inputs(n=300, seed=0):
    return np.random.default_rng(seed).uniform(-2.0, 2.0, size=(n, 2))


def test_config_validation():
    """Should reject bad population sizes and operator mixes"""
    with pytest.raises(ValueError):
        GpConfig(population_size=1)
    with pytest.raises(ValueError):
        GpConfig(p_crossover=0.5, p_subtree_mutation=0.2, p_point_mutation=0.1)
    with pytest.raises(ValueError):
        GpConfig(init_max_depth=9, max_depth=8)


def test_config_from_dict_ignores_unknown_keys():
    """Should keep known fields and let non-None overrides win"""
    cfg = GpConfig.from_dict({"iterations": 3, "unknown": 1}, seed=7, n_jobs=None)
    assert cfg.iterations == 3
    assert cfg.seed == 7
    assert cfg.n_jobs == 1


def test_too_few_samples():
    """Should refuse fewer than 100 samples"""
    X = _inputs(n=50)
    with pytest.raises(ValueError):
        gp_symreg(X, X[:, 0])


def test_shape_mismatch():
    """Should refuse inputs and targets of different lengths"""
    X = _inputs()
    with pytest.raises(ValueError):
        gp_symreg(X, X[:-1, 0])
    with pytest.raises(ValueError):
        gp_symreg(X, X[:, 0], GpConfig(variable_names=["a"]))


def test_linear_target_is_fitted_exactly():
    """Should fold the linear scaling into an expression that reproduces an affine target"""
    X = _inputs()
    y = 3.0 * X[:, 0] + 1.0
    front = gp_symreg(X, y, GpConfig(iterations=5, seed=1))
    best = front[-1]
    assert best.mse < 1e-10
    values, valid = evaluate(best.expression, {"x1": X[:, 0], "x2": X[:, 1]})
    assert valid.all()
    assert np.allclose(values, y, atol=1e-6)


def test_front_is_pareto_ordered():
    """Should list expressions by increasing complexity and strictly decreasing error"""
    X = _inputs()
    y = X[:, 0] ** 2 + np.sin(X[:, 1])
    front = gp_symreg(X, y, GpConfig(iterations=3, seed=2))
    assert front
    complexities = [e.complexity for e in front]
    errors = [e.mse for e in front]
    assert complexities == sorted(complexities)
    assert all(a > b for a, b in zip(errors, errors[1:]))


def test_same_seed_same_front():
    """Should be reproducible for a seed and independent of the worker count"""
    X = _inputs()
    y = X[:, 0] * X[:, 1]
    base = [e.prefix for e in gp_symreg(X, y, GpConfig(iterations=2, seed=5))]
    again = [e.prefix for e in gp_symreg(X, y, GpConfig(iterations=2, seed=5))]
    threaded = [e.prefix for e in gp_symreg(X, y, GpConfig(iterations=2, seed=5, n_jobs=4))]
    assert base == again == threaded


def test_regressor_can_be_refit():
    """Should reset its state between fits"""
    X = _inputs()
    gp = GpRegressor(GpConfig(iterations=1, seed=3))
    first = [e.prefix for e in gp.fit(X, X[:, 0])]
    gp.fit(X, X[:, 1] ** 3)
    assert [e.prefix for e in gp.fit(X, X[:, 0])] == first


def test_front_opens_with_target_mean():
    """Should put the target mean on the front as its complexity-1 entry"""
    X = _inputs()
    y = X[:, 0] ** 2 + np.sin(X[:, 1])
    front = gp_symreg(X, y, GpConfig(iterations=1, seed=4))
    first = front[0]
    assert first.complexity == 1
    assert first.prefix == to_prefix(const(float(y.mean())))
    assert first.mse == pytest.approx(float(y.var()))


def test_square_is_recovered():
    """Should find x1^2 with a small expression"""
    X = _inputs(seed=11)
    front = gp_symreg(X, X[:, 0] ** 2, GpConfig(iterations=10, seed=0))
    best = front[-1]
    assert best.mse < 1e-6
    assert best.complexity <= 5


def test_constant_target():
    """Should return the constant itself for a constant target"""
    X = _inputs(seed=12)
    front = gp_symreg(X, np.full(X.shape[0], 3.7), GpConfig(iterations=2, seed=0))
    best = front[-1]
    assert best.complexity == 1
    values, _ = evaluate(best.expression, {"x1": X[:, 0], "x2": X[:, 1]})
    assert np.allclose(values, 3.7, atol=1e-9)


def test_sum_with_logarithm_is_recovered():
    """Should find x1 + ln x2 on positive inputs"""
    X = np.random.default_rng(13).uniform(0.5, 3.0, size=(400, 2))
    y = X[:, 0] + np.log(X[:, 1])
    front = gp_symreg(X, y, GpConfig(iterations=20, seed=0))
    assert front[-1].mse < 1e-4
